//! Deterministic scripted endpoint.
//!
//! Speaks the same wire shape as a live endpoint but follows a fixed script
//! per bug: a sequence of tool calls followed by a final answer. The endpoint
//! is stateless — it infers its position in the script from the conversation
//! it is handed — so concurrent runs can share one instance and replays are
//! bit-identical. Token counts and latency are synthetic but deterministic.

use std::collections::{BTreeMap, BTreeSet};

use crate::agent::endpoint::{ChatEndpoint, EndpointError, TimedResponse};
use crate::agent::runner::FORCED_ANSWER_MARKER;
use crate::agent::wire::{ChatMessage, ChatRequest, ChatResponse, Role, ToolCall};

/// Scripted exchanges for one bug.
#[derive(Debug, Clone)]
pub struct BugScript {
    /// Substring that identifies this bug in the first user message
    /// (the failing-test name is unique per bug).
    pub match_key: String,
    /// Tool calls issued in order before answering.
    pub tool_turns: Vec<ToolCall>,
    /// Final answer text. `None` simulates a model that never volunteers an
    /// answer: it keeps repeating its last tool call until forced, then
    /// replies with undecided prose.
    pub answer: Option<String>,
}

/// Complete script for one mock model across a fixture set.
#[derive(Debug, Clone, Default)]
pub struct ModelScript {
    pub model: String,
    pub bugs: Vec<BugScript>,
    /// Requests carrying one of these seeds fail as unreachable.
    pub fail_seeds: BTreeSet<u64>,
    /// Every request fails as unreachable.
    pub fail_always: bool,
}

impl ModelScript {
    pub fn new(model: impl Into<String>) -> Self {
        ModelScript {
            model: model.into(),
            ..ModelScript::default()
        }
    }

    pub fn with_bug(mut self, script: BugScript) -> Self {
        self.bugs.push(script);
        self
    }

    pub fn failing_on_seeds(mut self, seeds: impl IntoIterator<Item = u64>) -> Self {
        self.fail_seeds = seeds.into_iter().collect();
        self
    }

    pub fn failing_always(mut self) -> Self {
        self.fail_always = true;
        self
    }
}

/// Built-in registry of scripts keyed by model name, used by the CLI's
/// scripted endpoints.
pub type ScriptSet = BTreeMap<String, ModelScript>;

/// The deterministic mock endpoint.
pub struct ScriptedEndpoint {
    script: ModelScript,
}

impl ScriptedEndpoint {
    pub fn new(script: ModelScript) -> Self {
        ScriptedEndpoint { script }
    }

    fn find_bug(&self, request: &ChatRequest) -> Option<&BugScript> {
        let prompt: String = request
            .messages
            .iter()
            .filter(|m| m.role == Role::User)
            .filter_map(|m| m.content.clone())
            .collect::<Vec<_>>()
            .join("\n");
        self.script
            .bugs
            .iter()
            .find(|b| prompt.contains(&b.match_key))
    }
}

/// Deterministic pseudo token count: about one token per four characters.
pub fn synthetic_tokens(text: &str) -> u64 {
    (text.chars().count() as u64).div_ceil(4).max(1)
}

fn prompt_tokens_of(request: &ChatRequest) -> u64 {
    let rendered: usize = request
        .messages
        .iter()
        .map(|m| {
            m.content.as_deref().map(|c| c.chars().count()).unwrap_or(0)
                + m.tool_call
                    .as_ref()
                    .map(|t| t.name.len() + t.arguments.to_string().len())
                    .unwrap_or(0)
        })
        .sum();
    (rendered as u64).div_ceil(4).max(1)
}

fn completion_of(message: &ChatMessage) -> u64 {
    match (&message.content, &message.tool_call) {
        (Some(content), _) => synthetic_tokens(content),
        (None, Some(call)) => synthetic_tokens(&format!("{}{}", call.name, call.arguments)),
        (None, None) => 1,
    }
}

impl ChatEndpoint for ScriptedEndpoint {
    fn name(&self) -> &str {
        &self.script.model
    }

    fn model_id(&self) -> &str {
        &self.script.model
    }

    fn complete(&self, request: &ChatRequest) -> Result<TimedResponse, EndpointError> {
        if self.script.fail_always || self.script.fail_seeds.contains(&request.seed) {
            return Err(EndpointError::Unreachable {
                endpoint: self.script.model.clone(),
                attempts: 1,
                message: "scripted failure".to_string(),
            });
        }
        let bug = self.find_bug(request).ok_or_else(|| EndpointError::Invalid {
            endpoint: self.script.model.clone(),
            message: "no script matches the conversation".to_string(),
        })?;

        let tool_calls_so_far = request
            .messages
            .iter()
            .filter(|m| m.role == Role::Assistant && m.tool_call.is_some())
            .count();
        let forced = request
            .messages
            .last()
            .filter(|m| m.role == Role::User)
            .and_then(|m| m.content.as_deref())
            .is_some_and(|c| c.contains(FORCED_ANSWER_MARKER));

        let message = if forced {
            let text = bug
                .answer
                .clone()
                .unwrap_or_else(|| "I am unable to decide on a method.".to_string());
            ChatMessage::assistant_text(text)
        } else if tool_calls_so_far < bug.tool_turns.len() {
            ChatMessage::assistant_tool_call(bug.tool_turns[tool_calls_so_far].clone())
        } else {
            match &bug.answer {
                Some(text) => ChatMessage::assistant_text(text.clone()),
                // Never answers voluntarily: keep tool-calling.
                None => match bug.tool_turns.last() {
                    Some(call) => ChatMessage::assistant_tool_call(call.clone()),
                    None => ChatMessage::assistant_text("Still thinking.".to_string()),
                },
            }
        };

        let completion_tokens = completion_of(&message);
        let prompt_tokens = prompt_tokens_of(request);
        Ok(TimedResponse {
            response: ChatResponse {
                message,
                prompt_tokens,
                completion_tokens,
            },
            elapsed_ms: 2 + completion_tokens / 4,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn demo_script() -> ModelScript {
        ModelScript::new("mock-x").with_bug(BugScript {
            match_key: "com.ex.FooTest.testBar".to_string(),
            tool_turns: vec![ToolCall {
                name: "get_method_coverage".to_string(),
                arguments: json!({"class_name": "com.ex.Foo"}),
            }],
            answer: Some("Answer: com.ex.Foo.bar()".to_string()),
        })
    }

    fn request_with(messages: Vec<ChatMessage>, seed: u64) -> ChatRequest {
        ChatRequest {
            model: "mock-x".to_string(),
            messages,
            tools: vec![],
            temperature: 0.0,
            seed,
        }
    }

    #[test]
    fn walks_the_script_by_counting_tool_calls() {
        let endpoint = ScriptedEndpoint::new(demo_script());
        let mut messages = vec![
            ChatMessage::system("sys"),
            ChatMessage::user("The failing test is com.ex.FooTest.testBar."),
        ];
        let first = endpoint
            .complete(&request_with(messages.clone(), 1))
            .unwrap();
        let call = first.response.message.tool_call.clone().unwrap();
        assert_eq!(call.name, "get_method_coverage");

        messages.push(ChatMessage::assistant_tool_call(call));
        messages.push(ChatMessage::tool_result("com.ex.Foo.bar()"));
        let second = endpoint.complete(&request_with(messages, 1)).unwrap();
        assert_eq!(
            second.response.message.content.as_deref(),
            Some("Answer: com.ex.Foo.bar()")
        );
    }

    #[test]
    fn identical_requests_get_identical_replies() {
        let endpoint = ScriptedEndpoint::new(demo_script());
        let request = request_with(
            vec![ChatMessage::user(
                "The failing test is com.ex.FooTest.testBar.",
            )],
            9,
        );
        let a = endpoint.complete(&request).unwrap();
        let b = endpoint.complete(&request).unwrap();
        assert_eq!(a.response, b.response);
        assert_eq!(a.elapsed_ms, b.elapsed_ms);
    }

    #[test]
    fn fails_on_configured_seeds() {
        let endpoint = ScriptedEndpoint::new(demo_script().failing_on_seeds([7]));
        let request = request_with(
            vec![ChatMessage::user(
                "The failing test is com.ex.FooTest.testBar.",
            )],
            7,
        );
        assert!(endpoint.complete(&request).is_err());
    }

    #[test]
    fn unknown_conversation_is_an_endpoint_error() {
        let endpoint = ScriptedEndpoint::new(demo_script());
        let request = request_with(vec![ChatMessage::user("Something else entirely")], 1);
        assert!(matches!(
            endpoint.complete(&request),
            Err(EndpointError::Invalid { .. })
        ));
    }
}
