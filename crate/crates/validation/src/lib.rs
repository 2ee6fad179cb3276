//! Edge validation pipeline: prompt rendering, LLM voting against a local
//! inference endpoint, a rule-based cross-check, disagreement routing to
//! human review, and the persistent queues those stages share.

pub mod aggregate;
pub mod error;
pub mod llm;
pub mod model;
pub mod prompts;
pub mod rules;
pub mod scheduler;
pub mod stats;
pub mod store;
pub mod stub;

pub use aggregate::{aggregate, Decision};
pub use error::{ValidationError, Result};
pub use llm::{llm_validate, parse_verdict, LlmBackend, LlmError, OllamaClient};
pub use model::{
    AutoApproveRule, FinalDecision, HumanDecision, ItemId, ItemStatus, ValidationItem, ValidationSettings, Verdict,
    VerdictSource,
};
pub use prompts::{render_prompt, RenderedPrompt};
pub use rules::rule_validate;
pub use scheduler::{run_scheduler, scheduler_tick, TickReport};
pub use stats::{pipeline_stats, PipelineStats};
pub use store::Store;
pub use stub::StubLlm;
