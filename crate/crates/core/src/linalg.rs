//! Sparse nonnegative matrices, spectral radius estimation and the
//! block-triangular direct solve used by the Katz backend.
//!
//! Both the spectral radius and the solve work on the strongly connected
//! components of the sparsity pattern. Permuted into component order the
//! matrix is block upper-triangular, so the system splits into one small
//! dense solve per component. Acyclic graphs reduce to pure substitution.

use nalgebra::{DMatrix, DVector};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{CoreError, Result};

pub const POWER_ITERATION_CAP: usize = 1_000;
pub const POWER_ITERATION_TOL: f64 = 1e-9;

/// Components larger than this are solved iteratively instead of by dense LU.
const DENSE_BLOCK_LIMIT: usize = 1_500;

/// Square sparse matrix stored by rows.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseMatrix {
    n: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl SparseMatrix {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            rows: vec![Vec::new(); n],
        }
    }

    pub fn from_dense(dense: &[Vec<f64>]) -> Self {
        let mut m = Self::new(dense.len());
        for (i, row) in dense.iter().enumerate() {
            assert_eq!(row.len(), dense.len(), "matrix must be square");
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    m.push(i, j, v);
                }
            }
        }
        m
    }

    /// Appends an entry. Callers must not push the same `(i, j)` twice.
    pub fn push(&mut self, i: usize, j: usize, v: f64) {
        self.rows[i].push((j, v));
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.iter().map(|&(j, v)| v * x[j]).sum())
            .collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (i, r) in self.rows.iter().enumerate() {
            for &(j, v) in r {
                d[i][j] += v;
            }
        }
        d
    }

    /// Strongly connected components of the nonzero pattern, sinks first
    /// (for `i → j` across components, `j`'s component comes earlier).
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut g = DiGraph::<(), ()>::with_capacity(self.n, self.nnz());
        let idx: Vec<_> = (0..self.n).map(|_| g.add_node(())).collect();
        for (i, r) in self.rows.iter().enumerate() {
            for &(j, v) in r {
                if v != 0.0 {
                    g.add_edge(idx[i], idx[j], ());
                }
            }
        }
        tarjan_scc(&g)
            .into_iter()
            .map(|mut c| {
                let mut c: Vec<usize> = c.drain(..).map(|n| n.index()).collect();
                c.sort_unstable();
                c
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralEstimate {
    pub radius: f64,
    /// Certified lower and upper bounds (Collatz–Wielandt) on the radius.
    pub lower: f64,
    pub upper: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl SpectralEstimate {
    fn exact(r: f64) -> Self {
        Self {
            radius: r,
            lower: r,
            upper: r,
            iterations: 0,
            converged: true,
        }
    }
}

/// Spectral radius of a square nonnegative matrix.
///
/// The radius is the maximum over strongly connected components. Singleton
/// components contribute their diagonal entry; larger components run power
/// iteration on `B + I` (primitive, so periodic components still converge)
/// from a random positive start until the Collatz–Wielandt bounds agree to
/// a relative `1e-9`, capped at 1,000 iterations. Nilpotent matrices return 0.
pub fn spectral_radius(m: &SparseMatrix, seed: u64) -> SpectralEstimate {
    let mut best = SpectralEstimate::exact(0.0);
    for comp in m.components() {
        let est = if comp.len() == 1 {
            let i = comp[0];
            let diag: f64 = m.row(i).iter().filter(|&&(j, _)| j == i).map(|&(_, v)| v.abs()).sum();
            SpectralEstimate::exact(diag)
        } else {
            component_radius(m, &comp, seed)
        };
        if est.upper > best.upper || (est.upper == best.upper && est.radius > best.radius) {
            best = SpectralEstimate {
                iterations: best.iterations.max(est.iterations),
                converged: best.converged && est.converged,
                ..est
            };
        } else {
            best.iterations = best.iterations.max(est.iterations);
            best.converged &= est.converged;
        }
    }
    best
}

fn component_radius(m: &SparseMatrix, comp: &[usize], seed: u64) -> SpectralEstimate {
    let k = comp.len();
    let mut local = vec![usize::MAX; m.dim()];
    for (l, &g) in comp.iter().enumerate() {
        local[g] = l;
    }
    let rows: Vec<Vec<(usize, f64)>> = comp
        .iter()
        .map(|&g| {
            m.row(g)
                .iter()
                .filter(|&&(j, _)| local[j] != usize::MAX)
                .map(|&(j, v)| (local[j], v))
                .collect()
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<f64> = (0..k).map(|_| rng.random_range(0.5..1.5)).collect();
    let mut est = SpectralEstimate {
        radius: 0.0,
        lower: 0.0,
        upper: f64::INFINITY,
        iterations: 0,
        converged: false,
    };
    for it in 1..=POWER_ITERATION_CAP {
        let bx: Vec<f64> = rows.iter().map(|r| r.iter().map(|&(j, v)| v * x[j]).sum()).collect();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for (num, den) in bx.iter().zip(&x) {
            let r = num / den;
            lo = lo.min(r);
            hi = hi.max(r);
        }
        est = SpectralEstimate {
            radius: 0.5 * (lo + hi),
            lower: lo.max(est.lower),
            upper: hi.min(est.upper),
            iterations: it,
            converged: false,
        };
        if est.upper - est.lower <= POWER_ITERATION_TOL * est.upper {
            est.converged = true;
            est.radius = 0.5 * (est.lower + est.upper);
            return est;
        }
        let mut norm = 0.0f64;
        for (xi, bi) in x.iter_mut().zip(&bx) {
            *xi += bi;
            norm = norm.max(*xi);
        }
        x.iter_mut().for_each(|xi| *xi /= norm);
    }
    est.radius = 0.5 * (est.lower + est.upper);
    est
}

/// Precomputed component structure for repeated solves of
/// `(I − αW) x = b` where `W` shares (a subset of) one sparsity pattern.
#[derive(Debug, Clone)]
pub struct BlockSystem {
    blocks: Vec<Vec<usize>>,
    block_of: Vec<usize>,
    local: Vec<usize>,
}

impl BlockSystem {
    pub fn new(pattern: &SparseMatrix) -> Self {
        let blocks = pattern.components();
        let mut block_of = vec![0; pattern.dim()];
        let mut local = vec![0; pattern.dim()];
        for (b, comp) in blocks.iter().enumerate() {
            for (l, &i) in comp.iter().enumerate() {
                block_of[i] = b;
                local[i] = l;
            }
        }
        Self { blocks, block_of, local }
    }

    pub fn largest_block(&self) -> usize {
        self.blocks.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Solves `(I − αW) x = b`. `w` must not have entries outside the
    /// pattern this system was built from.
    pub fn solve(&self, w: &SparseMatrix, alpha: f64, b: &[f64]) -> Result<Vec<f64>> {
        let n = w.dim();
        let mut x = vec![0.0; n];
        for (bi, comp) in self.blocks.iter().enumerate() {
            // right-hand side: b plus contributions of already-solved components
            let rhs: Vec<f64> = comp
                .iter()
                .map(|&i| {
                    b[i] + alpha
                        * w.row(i)
                            .iter()
                            .filter(|&&(j, _)| self.block_of[j] != bi)
                            .map(|&(j, v)| v * x[j])
                            .sum::<f64>()
                })
                .collect();
            if comp.len() == 1 {
                let i = comp[0];
                let diag: f64 = w.row(i).iter().filter(|&&(j, _)| j == i).map(|&(_, v)| v).sum();
                let d = 1.0 - alpha * diag;
                if d.abs() < f64::EPSILON {
                    return Err(CoreError::Singular(format!("zero pivot at row {i}")));
                }
                x[i] = rhs[0] / d;
            } else if comp.len() <= DENSE_BLOCK_LIMIT {
                let k = comp.len();
                let mut a = DMatrix::<f64>::identity(k, k);
                for (l, &i) in comp.iter().enumerate() {
                    for &(j, v) in w.row(i) {
                        if self.block_of[j] == bi {
                            a[(l, self.local[j])] -= alpha * v;
                        }
                    }
                }
                let sol = a
                    .lu()
                    .solve(&DVector::from_vec(rhs))
                    .ok_or_else(|| CoreError::Singular(format!("singular component of size {k}")))?;
                for (l, &i) in comp.iter().enumerate() {
                    x[i] = sol[l];
                }
            } else {
                self.solve_iterative(w, alpha, bi, comp, &rhs, &mut x)?;
            }
        }
        Ok(x)
    }

    // Gauss–Seidel sweeps for very large components; converges when αρ(W) < 1.
    fn solve_iterative(
        &self,
        w: &SparseMatrix,
        alpha: f64,
        bi: usize,
        comp: &[usize],
        rhs: &[f64],
        x: &mut [f64],
    ) -> Result<()> {
        for (l, &i) in comp.iter().enumerate() {
            x[i] = rhs[l];
        }
        for _ in 0..100_000 {
            let mut delta = 0.0f64;
            let mut scale = 0.0f64;
            for (l, &i) in comp.iter().enumerate() {
                let mut acc = rhs[l];
                let mut diag = 0.0;
                for &(j, v) in w.row(i) {
                    if j == i {
                        diag += v;
                    } else if self.block_of[j] == bi {
                        acc += alpha * v * x[j];
                    }
                }
                let new = acc / (1.0 - alpha * diag);
                delta = delta.max((new - x[i]).abs());
                scale = scale.max(new.abs());
                x[i] = new;
            }
            if delta <= 1e-15 * scale.max(1e-300) {
                return Ok(());
            }
        }
        Err(CoreError::Singular(format!(
            "iterative solve of component with {} nodes did not converge",
            comp.len()
        )))
    }
}
