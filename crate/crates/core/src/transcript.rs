//! Append-only run transcript: every message, tool call, and tool result in
//! order, one JSON object per line. The transcript is the complete pool
//! mutation log — replaying its `append_new_attribute` and
//! `attribute_pruning_tool` calls (honoring each call's recorded result)
//! reconstructs the feature pool exactly.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::dsl::Transformation;
use crate::pools::{FeaturePool, PoolError};

#[derive(Debug, thiserror::Error)]
pub enum TranscriptError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed transcript line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("replay failed at event {event}: {source}")]
    Replay { event: usize, source: PoolError },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEvent {
    pub iteration: u64,
    pub agent: String,
    pub step: usize,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum EventKind {
    Message {
        role: String,
        content: String,
    },
    ToolCall {
        name: String,
        arguments: serde_json::Value,
    },
    ToolResult {
        name: String,
        content: String,
    },
    Final {
        content: String,
    },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Transcript {
    events: Vec<TranscriptEvent>,
}

impl Transcript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, event: TranscriptEvent) {
        self.events.push(event);
    }

    pub fn events(&self) -> &[TranscriptEvent] {
        &self.events
    }

    pub fn save(&self, path: &Path) -> Result<(), TranscriptError> {
        let mut out = String::new();
        for event in &self.events {
            out.push_str(&serde_json::to_string(event).expect("transcript serializes"));
            out.push('\n');
        }
        std::fs::write(path, out).map_err(|source| TranscriptError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, TranscriptError> {
        let text = std::fs::read_to_string(path).map_err(|source| TranscriptError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut events = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            events.push(
                serde_json::from_str(line).map_err(|e| TranscriptError::Malformed {
                    line: idx + 1,
                    message: e.to_string(),
                })?,
            );
        }
        Ok(Transcript { events })
    }
}

/// Rebuilds a feature pool by re-applying the pool-mutating tool calls in
/// transcript order. A call only counts when its recorded result says it was
/// accepted (appends) or staged (prunes) — rejected calls are skipped, the
/// same way the live tool layer skipped them.
pub fn replay_pool_mutations(
    transcript: &Transcript,
    dataset: &Dataset,
) -> Result<FeaturePool, TranscriptError> {
    let mut pool = FeaturePool::new();
    let events = transcript.events();
    for (idx, event) in events.iter().enumerate() {
        let EventKind::ToolCall { name, arguments } = &event.kind else {
            continue;
        };
        // The paired result is the next tool_result event for the same agent.
        let result = events[idx + 1..].iter().find_map(|e| match &e.kind {
            EventKind::ToolResult { name: rn, content } if rn == name && e.agent == event.agent => {
                Some(content.clone())
            }
            _ => None,
        });
        let Some(result) = result else { continue };
        let parsed: serde_json::Value = match serde_json::from_str(&result) {
            Ok(v) => v,
            Err(_) => continue,
        };
        match name.as_str() {
            "append_new_attribute" => {
                if parsed.get("accepted").and_then(|v| v.as_bool()) != Some(true) {
                    continue;
                }
                let get = |key: &str| {
                    arguments
                        .get(key)
                        .and_then(|v| v.as_str())
                        .unwrap_or_default()
                        .to_string()
                };
                let t = Transformation::new(
                    get("name"),
                    &get("dsl_source"),
                    get("justification"),
                    get("explanation"),
                    event.iteration,
                    dataset,
                )
                .map_err(|e| TranscriptError::Replay {
                    event: idx,
                    source: PoolError::Dsl(e),
                })?;
                pool.append_features(vec![t], event.iteration, dataset)
                    .map_err(|source| TranscriptError::Replay { event: idx, source })?;
            }
            "attribute_pruning_tool" => {
                let staged: Vec<String> = parsed
                    .get("staged")
                    .and_then(|v| v.as_array())
                    .map(|a| {
                        a.iter()
                            .filter_map(|v| v.as_str().map(str::to_string))
                            .collect()
                    })
                    .unwrap_or_default();
                if staged.is_empty() {
                    continue;
                }
                let mut reasons = std::collections::BTreeMap::new();
                if let Some(map) = arguments.get("reasons").and_then(|v| v.as_object()) {
                    for (k, v) in map {
                        if let Some(s) = v.as_str() {
                            reasons.insert(k.clone(), s.to_string());
                        }
                    }
                }
                pool.prune(&staged, event.iteration, &reasons)
                    .map_err(|source| TranscriptError::Replay { event: idx, source })?;
            }
            _ => {}
        }
    }
    Ok(pool)
}
