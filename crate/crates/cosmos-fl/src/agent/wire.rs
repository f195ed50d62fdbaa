//! Wire format spoken between the agent loop and a model endpoint.
//!
//! One HTTP POST per exchange: the request carries the model id, the full
//! conversation so far, the declared tools, the sampling temperature, and a
//! seed. The response is either an assistant message holding exactly one tool
//! call, or final content text, plus prompt/completion token counts. This
//! mirrors the open chat-completions shape served by local model runners,
//! reduced to the fields the loop actually uses.

use serde::{Deserialize, Serialize};

/// Message author role.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
    Tool,
}

/// A requested tool invocation: tool name plus a JSON argument object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolCall {
    pub name: String,
    pub arguments: serde_json::Value,
}

/// One conversation message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub content: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tool_call: Option<ToolCall>,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        ChatMessage {
            role: Role::System,
            content: Some(content.into()),
            tool_call: None,
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage {
            role: Role::User,
            content: Some(content.into()),
            tool_call: None,
        }
    }

    pub fn assistant_text(content: impl Into<String>) -> Self {
        ChatMessage {
            role: Role::Assistant,
            content: Some(content.into()),
            tool_call: None,
        }
    }

    pub fn assistant_tool_call(call: ToolCall) -> Self {
        ChatMessage {
            role: Role::Assistant,
            content: None,
            tool_call: Some(call),
        }
    }

    pub fn tool_result(content: impl Into<String>) -> Self {
        ChatMessage {
            role: Role::Tool,
            content: Some(content.into()),
            tool_call: None,
        }
    }
}

/// A declared tool parameter: name and a coarse type tag ("string").
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolParam {
    pub name: String,
    #[serde(rename = "type")]
    pub param_type: String,
}

/// Tool declaration sent with every request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolDecl {
    pub name: String,
    pub description: String,
    pub parameters: Vec<ToolParam>,
}

/// The single request object POSTed to an endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<ChatMessage>,
    pub tools: Vec<ToolDecl>,
    pub temperature: f64,
    pub seed: u64,
}

/// The endpoint's reply: one assistant message plus token accounting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub message: ChatMessage,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}
