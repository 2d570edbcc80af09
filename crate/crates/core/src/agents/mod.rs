//! The three agent roles, the tool-call protocol between them and the stores,
//! and the two interchangeable backends: a remote chat-completion endpoint
//! and deterministic scripted policies that run the whole loop offline.
//!
//! A backend is anything that, given the system prompt, the message history,
//! and the available tools, produces either a final text answer or one tool
//! call. Agents touch the pools only through tool handlers, so a transcript
//! of tool calls replays into the exact same pool mutations.

pub mod episodes;
pub mod prompts;
pub mod remote;
pub mod scripted;
pub mod tools;

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum AgentError {
    #[error("step budget must be at least 1")]
    ZeroBudget,
    #[error("flood target must be at least 1")]
    ZeroFloodTarget,
    #[error("transport failure after {attempts} attempt(s): {message}")]
    Transport { attempts: usize, message: String },
    #[error("endpoint returned status {status}: {body}")]
    HttpStatus { status: u16, body: String },
    #[error("malformed backend response: {message}; raw payload: {raw}")]
    MalformedResponse { message: String, raw: String },
    #[error("scripted policy error: {0}")]
    Policy(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MsgRole {
    System,
    User,
    Assistant,
    Tool,
}

/// One tool invocation requested by a backend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolCall {
    pub id: String,
    pub name: String,
    pub arguments: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: MsgRole,
    pub content: String,
    /// Set on assistant messages that request a tool.
    pub tool_call: Option<ToolCall>,
    /// Set on tool messages; references the prior call's id.
    pub tool_call_id: Option<String>,
}

impl ChatMessage {
    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage {
            role: MsgRole::User,
            content: content.into(),
            tool_call: None,
            tool_call_id: None,
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        ChatMessage {
            role: MsgRole::Assistant,
            content: content.into(),
            tool_call: None,
            tool_call_id: None,
        }
    }

    pub fn assistant_call(call: ToolCall) -> Self {
        ChatMessage {
            role: MsgRole::Assistant,
            content: String::new(),
            tool_call: Some(call),
            tool_call_id: None,
        }
    }

    pub fn tool_result(call_id: impl Into<String>, content: impl Into<String>) -> Self {
        ChatMessage {
            role: MsgRole::Tool,
            content: content.into(),
            tool_call: None,
            tool_call_id: Some(call_id.into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArgSpec {
    pub name: String,
    /// JSON schema type name: "string", "number", "integer", "object", "array".
    pub kind: String,
    pub required: bool,
    pub description: String,
}

impl ArgSpec {
    pub fn new(name: &str, kind: &str, required: bool, description: &str) -> Self {
        ArgSpec {
            name: name.into(),
            kind: kind.into(),
            required,
            description: description.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolSpec {
    pub name: String,
    pub description: String,
    pub args: Vec<ArgSpec>,
}

/// What a backend does with one step of an episode.
#[derive(Debug, Clone, PartialEq)]
pub enum BackendStep {
    Final(String),
    Call(ToolCall),
}

/// Behavioral contract shared by the remote endpoint and the scripted
/// policies. Implementations must let every episode terminate within the
/// configured step budget.
pub trait AgentBackend {
    fn step(
        &mut self,
        system: &str,
        history: &[ChatMessage],
        tools: &[ToolSpec],
    ) -> Result<BackendStep, AgentError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FocusScope {
    Exploratory,
    Exploitive,
}

impl std::fmt::Display for FocusScope {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FocusScope::Exploratory => write!(f, "exploratory"),
            FocusScope::Exploitive => write!(f, "exploitive"),
        }
    }
}

/// The natural-language directive steering the next extraction round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FocusArea {
    pub text: String,
    pub scope: FocusScope,
    pub iteration: u64,
}

impl FocusArea {
    /// Parses a focus from a final answer. Structured answers carry
    /// `FOCUS:` and `SCOPE:` lines; free text falls back to the whole answer
    /// with the scope inferred from an "exploit..." mention.
    pub fn parse(answer: &str, iteration: u64) -> FocusArea {
        let mut text = None;
        let mut scope = None;
        for line in answer.lines() {
            let trimmed = line.trim();
            let lower = trimmed.to_lowercase();
            if let Some(rest) = lower.strip_prefix("focus:") {
                let start = trimmed.len() - rest.len();
                text = Some(trimmed[start..].trim().to_string());
            } else if let Some(rest) = lower.strip_prefix("scope:") {
                scope = Some(if rest.contains("exploit") {
                    FocusScope::Exploitive
                } else {
                    FocusScope::Exploratory
                });
            }
        }
        let text = text.unwrap_or_else(|| answer.trim().to_string());
        let scope = scope.unwrap_or_else(|| {
            if answer.to_lowercase().contains("exploit") {
                FocusScope::Exploitive
            } else {
                FocusScope::Exploratory
            }
        });
        FocusArea {
            text,
            scope,
            iteration,
        }
    }
}

/// Append-only notebook an agent keeps within a run. Notes are stamped with
/// logical time (iteration, episode step) so artifacts stay byte-reproducible.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScratchPad {
    pub role: String,
    notes: Vec<PadNote>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PadNote {
    pub iteration: u64,
    pub step: usize,
    pub text: String,
}

impl ScratchPad {
    pub fn new(role: &str) -> Self {
        ScratchPad {
            role: role.into(),
            notes: Vec::new(),
        }
    }

    pub fn append(&mut self, iteration: u64, step: usize, text: impl Into<String>) {
        self.notes.push(PadNote {
            iteration,
            step,
            text: text.into(),
        });
    }

    pub fn notes(&self) -> &[PadNote] {
        &self.notes
    }

    pub fn render(&self) -> String {
        let mut out = format!("# {} scratch pad\n", self.role);
        for n in &self.notes {
            out.push_str(&format!(
                "[iter {} step {}] {}\n",
                n.iteration, n.step, n.text
            ));
        }
        out
    }
}
