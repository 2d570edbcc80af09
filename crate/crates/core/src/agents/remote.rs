//! Chat-completions backend: posts `{model, messages, tools}` to an HTTP
//! endpoint and interprets the first choice as either assistant text or a
//! tool call. Transport failures and 5xx responses retry with exponential
//! backoff; malformed payloads surface with the raw body attached.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{AgentBackend, AgentError, BackendStep, ChatMessage, MsgRole, ToolCall, ToolSpec};

#[derive(Debug, Clone)]
pub struct RemoteBackend {
    endpoint: String,
    model: String,
    api_key: Option<String>,
    retries: usize,
    backoff_base: Duration,
    client: reqwest::blocking::Client,
}

impl RemoteBackend {
    pub fn new(
        endpoint: impl Into<String>,
        model: impl Into<String>,
        api_key: Option<String>,
        timeout: Duration,
        retries: usize,
    ) -> Result<Self, AgentError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| AgentError::Transport {
                attempts: 0,
                message: e.to_string(),
            })?;
        Ok(RemoteBackend {
            endpoint: endpoint.into(),
            model: model.into(),
            api_key,
            retries,
            backoff_base: Duration::from_millis(100),
            client,
        })
    }

    /// Shrinks the retry backoff; used by tests to keep the suite fast.
    pub fn with_backoff_base(mut self, base: Duration) -> Self {
        self.backoff_base = base;
        self
    }

    fn request_body(&self, system: &str, history: &[ChatMessage], tools: &[ToolSpec]) -> Value {
        let mut messages = vec![json!({ "role": "system", "content": system })];
        for msg in history {
            match msg.role {
                MsgRole::System => {
                    messages.push(json!({ "role": "system", "content": msg.content }))
                }
                MsgRole::User => messages.push(json!({ "role": "user", "content": msg.content })),
                MsgRole::Assistant => {
                    if let Some(call) = &msg.tool_call {
                        messages.push(json!({
                            "role": "assistant",
                            "content": Value::Null,
                            "tool_calls": [{
                                "id": call.id,
                                "type": "function",
                                "function": {
                                    "name": call.name,
                                    "arguments": call.arguments.to_string(),
                                },
                            }],
                        }));
                    } else {
                        messages.push(json!({ "role": "assistant", "content": msg.content }));
                    }
                }
                MsgRole::Tool => messages.push(json!({
                    "role": "tool",
                    "tool_call_id": msg.tool_call_id,
                    "content": msg.content,
                })),
            }
        }
        let mut body = json!({ "model": self.model, "messages": messages });
        if !tools.is_empty() {
            let tool_defs: Vec<Value> = tools
                .iter()
                .map(|t| {
                    let mut properties = serde_json::Map::new();
                    let mut required = Vec::new();
                    for arg in &t.args {
                        properties.insert(
                            arg.name.clone(),
                            json!({ "type": arg.kind, "description": arg.description }),
                        );
                        if arg.required {
                            required.push(json!(arg.name));
                        }
                    }
                    json!({
                        "type": "function",
                        "function": {
                            "name": t.name,
                            "description": t.description,
                            "parameters": {
                                "type": "object",
                                "properties": properties,
                                "required": required,
                            },
                        },
                    })
                })
                .collect();
            body["tools"] = Value::Array(tool_defs);
        }
        body
    }
}

#[derive(Deserialize)]
struct ApiResponse {
    choices: Vec<ApiChoice>,
}

#[derive(Deserialize)]
struct ApiChoice {
    message: ApiMessage,
}

#[derive(Deserialize, Serialize)]
struct ApiMessage {
    #[serde(default)]
    content: Option<String>,
    #[serde(default)]
    tool_calls: Option<Vec<ApiToolCall>>,
}

#[derive(Deserialize, Serialize)]
struct ApiToolCall {
    #[serde(default)]
    id: Option<String>,
    function: ApiFunction,
}

#[derive(Deserialize, Serialize)]
struct ApiFunction {
    name: String,
    arguments: String,
}

impl AgentBackend for RemoteBackend {
    fn step(
        &mut self,
        system: &str,
        history: &[ChatMessage],
        tools: &[ToolSpec],
    ) -> Result<BackendStep, AgentError> {
        let body = self.request_body(system, history, tools);
        let attempts = self.retries + 1;
        let mut last_error = AgentError::Transport {
            attempts,
            message: "no attempt made".into(),
        };
        for attempt in 0..attempts {
            if attempt > 0 {
                std::thread::sleep(self.backoff_base * (1 << (attempt - 1).min(8)));
            }
            let mut request = self.client.post(&self.endpoint).json(&body);
            if let Some(key) = &self.api_key {
                request = request.bearer_auth(key);
            }
            match request.send() {
                Err(e) => {
                    last_error = AgentError::Transport {
                        attempts: attempt + 1,
                        message: e.to_string(),
                    };
                }
                Ok(resp) => {
                    let status = resp.status();
                    let text = resp.text().map_err(|e| AgentError::Transport {
                        attempts: attempt + 1,
                        message: e.to_string(),
                    })?;
                    if status.is_server_error() {
                        last_error = AgentError::HttpStatus {
                            status: status.as_u16(),
                            body: text,
                        };
                        continue;
                    }
                    if !status.is_success() {
                        return Err(AgentError::HttpStatus {
                            status: status.as_u16(),
                            body: text,
                        });
                    }
                    return parse_response(&text);
                }
            }
        }
        Err(last_error)
    }
}

fn parse_response(raw: &str) -> Result<BackendStep, AgentError> {
    let parsed: ApiResponse =
        serde_json::from_str(raw).map_err(|e| AgentError::MalformedResponse {
            message: e.to_string(),
            raw: raw.to_string(),
        })?;
    let choice =
        parsed
            .choices
            .into_iter()
            .next()
            .ok_or_else(|| AgentError::MalformedResponse {
                message: "response has no choices".into(),
                raw: raw.to_string(),
            })?;
    if let Some(calls) = choice.message.tool_calls {
        if let Some(call) = calls.into_iter().next() {
            let arguments: Value = serde_json::from_str(&call.function.arguments).map_err(|e| {
                AgentError::MalformedResponse {
                    message: format!("tool call arguments are not valid JSON: {e}"),
                    raw: raw.to_string(),
                }
            })?;
            return Ok(BackendStep::Call(ToolCall {
                id: call.id.unwrap_or_else(|| "call-0".into()),
                name: call.function.name,
                arguments,
            }));
        }
    }
    match choice.message.content {
        Some(content) => Ok(BackendStep::Final(content)),
        None => Err(AgentError::MalformedResponse {
            message: "choice carries neither content nor tool_calls".into(),
            raw: raw.to_string(),
        }),
    }
}
