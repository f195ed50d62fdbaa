//! Instruction-following agent runner: wire protocol, endpoints (live HTTP
//! and deterministic scripted mock), the tool registry, and the inference
//! loop that turns one bug context into a [`RunRecord`].

pub mod endpoint;
pub mod runner;
pub mod scripted;
pub mod tools;
pub mod wire;

pub use endpoint::{ChatEndpoint, EndpointError, HttpEndpoint, ModelEndpoint, TimedResponse};
pub use runner::{
    parse_final_answer, repeat_runs, run_inference, AgentStep, AnswerParseError, RunConfig,
    RunRecord, RunStatus, StepKind, FORCED_ANSWER_MARKER, PROMPT_VERSION,
};
pub use scripted::{BugScript, ModelScript, ScriptSet, ScriptedEndpoint};
pub use tools::{ToolKind, ToolRegistry, ToolRegistryError, ToolSpec};
