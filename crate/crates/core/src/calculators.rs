//! Edge exploitability and crown-jewel impact calculators. Pure functions.

use crate::error::{CoreError, Result};
use crate::graph::CROWN_JEWEL_THRESHOLD;

fn unit(name: &str, v: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(CoreError::InvalidInput(format!("{name} = {v} outside [0, 1]")))
    }
}

/// Inputs to the edge exploitability estimate. All fields lie in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeContext {
    pub exposure: f64,
    pub weakness: f64,
    pub control_effectiveness: f64,
    pub relation_prior: f64,
}

/// `p_uv = prior · (0.5 + 0.5·exposure) · (0.5 + 0.5·weakness) · (1 − controls)`.
///
/// Exposure and weakness are floored at 0.5 so a dependency with no observed
/// exposure still carries half its prior.
pub fn edge_probability(ctx: EdgeContext) -> Result<f64> {
    let exposure = unit("exposure", ctx.exposure)?;
    let weakness = unit("weakness", ctx.weakness)?;
    let controls = unit("control_effectiveness", ctx.control_effectiveness)?;
    let prior = unit("relation_prior", ctx.relation_prior)?;
    let p = prior * (0.5 + 0.5 * exposure) * (0.5 + 0.5 * weakness) * (1.0 - controls);
    Ok(p.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrownJewelScore {
    pub impact: f64,
    pub is_crown_jewel: bool,
}

/// Impact `I_c` as the unweighted mean of sensitivity, regulatory exposure and
/// business criticality.
pub fn crown_jewel_score(sensitivity: f64, regulatory: f64, criticality: f64) -> Result<CrownJewelScore> {
    let impact = (unit("sensitivity", sensitivity)? + unit("regulatory", regulatory)? + unit("criticality", criticality)?) / 3.0;
    Ok(CrownJewelScore {
        impact,
        is_crown_jewel: impact > CROWN_JEWEL_THRESHOLD,
    })
}
