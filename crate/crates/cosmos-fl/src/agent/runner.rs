//! The tool-calling inference loop.
//!
//! One run: send the conversation, dispatch tool calls against the fixture,
//! and keep going until the model produces final text or the step budget runs
//! out — at which point a forced "answer now" instruction is sent. The final
//! text is parsed into a prediction set under a strict answer grammar. Every
//! failure mode is recorded in the run's status rather than raised: failed
//! and empty runs still count toward the voting denominator.

use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::agent::endpoint::ChatEndpoint;
use crate::agent::tools::{dispatch, ToolRegistry};
use crate::agent::wire::{ChatMessage, ChatRequest};
use crate::fixtures::BugFixture;
use crate::scoring::{MethodId, PredictionSet};

/// Version tag of the checked-in prompt template. Changing the template is a
/// recorded configuration change.
pub const PROMPT_VERSION: &str = "v1";

const PROMPT_TEMPLATE: &str = include_str!("prompt_v1.txt");

/// Sentinel the forced-answer instruction always contains; the scripted mock
/// keys on it.
pub const FORCED_ANSWER_MARKER: &str = "State your final answer now";

fn forced_answer_instruction() -> String {
    format!("No further tool calls are available. {FORCED_ANSWER_MARKER} using the required format.")
}

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    /// Final answer parsed (possibly the explicit "Answer: none").
    Ok,
    /// Step or token budget exhausted and the forced turn produced no
    /// parseable answer.
    Truncated,
    /// The model volunteered a final answer that does not match the grammar.
    ParseFailed,
    /// The endpoint stayed unreachable past its retry budget.
    EndpointError,
}

/// One entry in a run's transcript.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentStep {
    pub index: u32,
    pub kind: StepKind,
    pub payload: String,
    /// Token counts of the exchange this step concluded (0 for local steps).
    pub tokens_in: u64,
    pub tokens_out: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepKind {
    ModelMessage,
    ToolCall,
    ToolResult,
    FinalAnswer,
}

/// One complete inference run. Field names are part of the on-disk contract.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub bug_id: String,
    pub model: String,
    pub run_index: u32,
    pub status: RunStatus,
    pub predicted_methods: PredictionSet,
    pub tokens_in: u64,
    pub tokens_out: u64,
    pub wall_time_ms: u64,
    pub energy_j: Option<f64>,
    #[serde(default)]
    pub power_mean_w: Option<f64>,
    /// Session-relative start of the run window, for energy attribution.
    #[serde(default)]
    pub started_ms: u64,
    #[serde(default)]
    pub prompt_version: String,
    pub steps: Vec<AgentStep>,
}

impl RunRecord {
    pub fn tokens_total(&self) -> u64 {
        self.tokens_in + self.tokens_out
    }
}

/// Per-run loop settings.
#[derive(Debug, Clone)]
pub struct RunConfig {
    /// Tool calls allowed before the forced-answer turn.
    pub max_steps: usize,
    pub temperature: f64,
    /// Cumulative completion-token budget before forcing an answer.
    pub output_token_cap: u64,
    pub seed: u64,
    pub run_index: u32,
    /// Session-relative start timestamp recorded on the run.
    pub started_ms: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            max_steps: 10,
            temperature: 0.2,
            output_token_cap: 4096,
            seed: 0,
            run_index: 0,
            started_ms: 0,
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
#[error("no answer lines found in final text")]
pub struct AnswerParseError;

fn answer_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?m)^\s*Answer:\s*(.+?)\s*$").expect("answer grammar"))
}

/// Extract the prediction set from final answer text.
///
/// Grammar: one method per line, `Answer: <fully-qualified-method-signature>`,
/// or `Answer: none` for no suspects. Duplicates collapse; text with no
/// answer lines at all is a parse failure.
pub fn parse_final_answer(text: &str) -> Result<PredictionSet, AnswerParseError> {
    let mut methods = PredictionSet::new();
    let mut saw_line = false;
    for capture in answer_regex().captures_iter(text) {
        saw_line = true;
        let raw = capture.get(1).expect("answer capture").as_str();
        if raw.eq_ignore_ascii_case("none") {
            continue;
        }
        if let Ok(method) = MethodId::new(raw) {
            methods.insert(method);
        }
    }
    if !saw_line {
        return Err(AnswerParseError);
    }
    Ok(methods)
}

fn render_system_prompt(tools: &ToolRegistry) -> String {
    let tool_list = tools
        .specs()
        .iter()
        .map(|spec| {
            let params = spec
                .parameters
                .iter()
                .map(|p| format!("{}: {}", p.name, p.param_type))
                .collect::<Vec<_>>()
                .join(", ");
            format!("- {}({}): {}", spec.name, params, spec.description)
        })
        .collect::<Vec<_>>()
        .join("\n");
    PROMPT_TEMPLATE.replace("{{tool_list}}", &tool_list)
}

fn render_bug_context(fixture: &BugFixture) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "Project {} has {} failing test(s).\n",
        fixture.project,
        fixture.failing_tests.len()
    ));
    for failing in &fixture.failing_tests {
        out.push_str(&format!(
            "\nThe failing test is {}.\nFailure message: {}\nStack trace:\n{}\n",
            failing.test, failing.message, failing.stack_trace
        ));
    }
    out.push_str("\nFind the faulty method(s).");
    out
}

struct Transcript {
    steps: Vec<AgentStep>,
    tokens_in: u64,
    tokens_out: u64,
    wall_time_ms: u64,
}

impl Transcript {
    fn new() -> Self {
        Transcript {
            steps: Vec::new(),
            tokens_in: 0,
            tokens_out: 0,
            wall_time_ms: 0,
        }
    }

    fn push(&mut self, kind: StepKind, payload: String, tokens_in: u64, tokens_out: u64) {
        self.steps.push(AgentStep {
            index: self.steps.len() as u32,
            kind,
            payload,
            tokens_in,
            tokens_out,
        });
        self.tokens_in += tokens_in;
        self.tokens_out += tokens_out;
    }

    fn into_record(
        self,
        fixture: &BugFixture,
        model: &str,
        cfg: &RunConfig,
        status: RunStatus,
        predicted: PredictionSet,
    ) -> RunRecord {
        RunRecord {
            bug_id: fixture.bug_id.clone(),
            model: model.to_string(),
            run_index: cfg.run_index,
            status,
            predicted_methods: predicted,
            tokens_in: self.tokens_in,
            tokens_out: self.tokens_out,
            wall_time_ms: self.wall_time_ms,
            energy_j: None,
            power_mean_w: None,
            started_ms: cfg.started_ms,
            prompt_version: PROMPT_VERSION.to_string(),
            steps: self.steps,
        }
    }
}

/// Execute one inference run against an endpoint.
///
/// Never fails: endpoint errors, parse failures, and truncation are encoded
/// in the returned record's status, with an empty prediction set where no
/// answer was parsed.
pub fn run_inference(
    fixture: &BugFixture,
    endpoint: &dyn ChatEndpoint,
    tools: &ToolRegistry,
    cfg: &RunConfig,
) -> RunRecord {
    let mut messages = vec![
        ChatMessage::system(render_system_prompt(tools)),
        ChatMessage::user(render_bug_context(fixture)),
    ];
    let declarations = tools.declarations();
    let mut transcript = Transcript::new();
    let mut tool_calls_made = 0usize;
    let mut forced = false;

    loop {
        let request = ChatRequest {
            model: endpoint.model_id().to_string(),
            messages: messages.clone(),
            tools: declarations.clone(),
            temperature: cfg.temperature,
            seed: cfg.seed,
        };
        let timed = match endpoint.complete(&request) {
            Ok(timed) => timed,
            Err(error) => {
                transcript.push(StepKind::ModelMessage, error.to_string(), 0, 0);
                return transcript.into_record(
                    fixture,
                    endpoint.name(),
                    cfg,
                    RunStatus::EndpointError,
                    PredictionSet::new(),
                );
            }
        };
        transcript.wall_time_ms += timed.elapsed_ms;
        let prompt_tokens = timed.response.prompt_tokens;
        let completion_tokens = timed.response.completion_tokens;
        let reply = timed.response.message;

        if let Some(call) = reply.tool_call {
            let payload = format!("{}({})", call.name, call.arguments);
            transcript.push(StepKind::ToolCall, payload, prompt_tokens, completion_tokens);
            if forced {
                // Asked for a final answer, got another tool call.
                return transcript.into_record(
                    fixture,
                    endpoint.name(),
                    cfg,
                    RunStatus::Truncated,
                    PredictionSet::new(),
                );
            }
            let result = dispatch(tools, fixture, &call.name, &call.arguments);
            transcript.push(StepKind::ToolResult, result.clone(), 0, 0);
            messages.push(ChatMessage::assistant_tool_call(call));
            messages.push(ChatMessage::tool_result(result));
            tool_calls_made += 1;

            if tool_calls_made >= cfg.max_steps || transcript.tokens_out >= cfg.output_token_cap {
                let instruction = forced_answer_instruction();
                transcript.push(StepKind::ModelMessage, instruction.clone(), 0, 0);
                messages.push(ChatMessage::user(instruction));
                forced = true;
            }
            continue;
        }

        let text = reply.content.unwrap_or_default();
        transcript.push(
            StepKind::FinalAnswer,
            text.clone(),
            prompt_tokens,
            completion_tokens,
        );
        return match parse_final_answer(&text) {
            Ok(predicted) => transcript.into_record(
                fixture,
                endpoint.name(),
                cfg,
                RunStatus::Ok,
                predicted,
            ),
            Err(_) => {
                let status = if forced {
                    RunStatus::Truncated
                } else {
                    RunStatus::ParseFailed
                };
                transcript.into_record(fixture, endpoint.name(), cfg, status, PredictionSet::new())
            }
        };
    }
}

/// Perform `r` independent runs of the same bug: run `i` uses seed
/// `base_seed + i` and a fresh conversation. Individual failures are recorded
/// per run; the batch never aborts.
pub fn repeat_runs(
    fixture: &BugFixture,
    endpoint: &dyn ChatEndpoint,
    tools: &ToolRegistry,
    r: u32,
    base_seed: u64,
    template: &RunConfig,
) -> Vec<RunRecord> {
    (0..r)
        .map(|index| {
            let cfg = RunConfig {
                seed: base_seed + u64::from(index),
                run_index: index,
                ..template.clone()
            };
            run_inference(fixture, endpoint, tools, &cfg)
        })
        .collect()
}
