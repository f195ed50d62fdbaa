//! The agent's tool registry and dispatch.
//!
//! Three tools are available to the model: method-level coverage of a class,
//! the code snippet of a method, and the comments of a method. A class-level
//! coverage tool is deliberately not part of the set — small models were seen
//! calling it redundantly — and the registry refuses to register one.

use serde_json::Value;

use crate::agent::wire::{ToolDecl, ToolParam};
use crate::fixtures::{tool_code_snippet, tool_comments, tool_method_coverage, BugFixture};
use crate::scoring::MethodId;

pub const TOOL_METHOD_COVERAGE: &str = "get_method_coverage";
pub const TOOL_CODE_SNIPPET: &str = "get_code_snippet";
pub const TOOL_COMMENTS: &str = "get_comments";

/// What a registered tool does when dispatched.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ToolKind {
    MethodCoverage,
    CodeSnippet,
    Comments,
}

/// A registered tool: declaration plus its handler kind.
#[derive(Debug, Clone)]
pub struct ToolSpec {
    pub name: String,
    pub description: String,
    pub parameters: Vec<ToolParam>,
    pub kind: ToolKind,
}

impl ToolSpec {
    pub fn declaration(&self) -> ToolDecl {
        ToolDecl {
            name: self.name.clone(),
            description: self.description.clone(),
            parameters: self.parameters.clone(),
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ToolRegistryError {
    #[error("tool {0} is already registered")]
    Duplicate(String),
    #[error("refusing to register class-level coverage tool {0}")]
    ClassCoverageForbidden(String),
}

fn looks_like_class_coverage(name: &str) -> bool {
    let lower = name.to_lowercase();
    lower.contains("class") && (lower.contains("coverage") || lower.contains("covered"))
}

/// The set of tools offered to the model on every request.
#[derive(Debug, Clone, Default)]
pub struct ToolRegistry {
    specs: Vec<ToolSpec>,
}

impl ToolRegistry {
    pub fn empty() -> Self {
        ToolRegistry::default()
    }

    /// Registry holding exactly the three default tools.
    pub fn standard() -> Self {
        let mut registry = ToolRegistry::empty();
        let string_param = |name: &str| ToolParam {
            name: name.to_string(),
            param_type: "string".to_string(),
        };
        registry
            .register(ToolSpec {
                name: TOOL_METHOD_COVERAGE.to_string(),
                description:
                    "List the methods of the given class that are covered by the failing tests."
                        .to_string(),
                parameters: vec![string_param("class_name")],
                kind: ToolKind::MethodCoverage,
            })
            .expect("default tool");
        registry
            .register(ToolSpec {
                name: TOOL_CODE_SNIPPET.to_string(),
                description: "Return the source code of the given method.".to_string(),
                parameters: vec![string_param("method_id")],
                kind: ToolKind::CodeSnippet,
            })
            .expect("default tool");
        registry
            .register(ToolSpec {
                name: TOOL_COMMENTS.to_string(),
                description: "Return the documentation comments of the given method.".to_string(),
                parameters: vec![string_param("method_id")],
                kind: ToolKind::Comments,
            })
            .expect("default tool");
        registry
    }

    pub fn register(&mut self, spec: ToolSpec) -> Result<(), ToolRegistryError> {
        if looks_like_class_coverage(&spec.name) {
            return Err(ToolRegistryError::ClassCoverageForbidden(spec.name));
        }
        if self.specs.iter().any(|s| s.name == spec.name) {
            return Err(ToolRegistryError::Duplicate(spec.name));
        }
        self.specs.push(spec);
        Ok(())
    }

    pub fn declarations(&self) -> Vec<ToolDecl> {
        self.specs.iter().map(ToolSpec::declaration).collect()
    }

    pub fn specs(&self) -> &[ToolSpec] {
        &self.specs
    }

    pub fn find(&self, name: &str) -> Option<&ToolSpec> {
        self.specs.iter().find(|s| s.name == name)
    }
}

fn string_argument(arguments: &Value, key: &str) -> Result<String, String> {
    arguments
        .get(key)
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| format!("error: missing string argument '{key}'"))
}

/// Execute a tool call against a fixture. Failures come back as ordinary
/// tool-result text so the model can recover.
pub fn dispatch(
    registry: &ToolRegistry,
    fixture: &BugFixture,
    name: &str,
    arguments: &Value,
) -> String {
    let Some(spec) = registry.find(name) else {
        return format!("error: unknown tool '{name}'");
    };
    match spec.kind {
        ToolKind::MethodCoverage => match string_argument(arguments, "class_name") {
            Ok(class_name) => tool_method_coverage(fixture, &class_name).to_text(),
            Err(message) => message,
        },
        ToolKind::CodeSnippet => match string_argument(arguments, "method_id")
            .and_then(|raw| MethodId::new(raw).map_err(|e| format!("error: {e}")))
        {
            Ok(method) => tool_code_snippet(fixture, &method),
            Err(message) => message,
        },
        ToolKind::Comments => match string_argument(arguments, "method_id")
            .and_then(|raw| MethodId::new(raw).map_err(|e| format!("error: {e}")))
        {
            Ok(method) => tool_comments(fixture, &method),
            Err(message) => message,
        },
    }
}
