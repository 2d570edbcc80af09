//! The tool layer: everything an agent may do to the world goes through one
//! of these handlers, so every mutation is visible in the transcript. Each
//! role gets a host object owning its episode state; the episode runner
//! drives backend steps against the host until a final answer or the budget
//! runs out.

use std::collections::BTreeMap;

use serde_json::{json, Value};

use crate::dataset::{describe, ColumnStats, ColumnValues, Dataset};
use crate::dsl::{self, Transformation};
use crate::knowledge::{self, KnowledgeSource};
use crate::pools::{FeaturePool, FeatureStatus, TestPool};
use crate::transcript::{EventKind, Transcript, TranscriptEvent};

use super::{
    AgentBackend, AgentError, ArgSpec, BackendStep, ChatMessage, ScratchPad, ToolCall, ToolSpec,
};

/// Per-episode tool surface. `dispatch` returns the payload for the tool
/// result message; errors become `{"error": ...}` payloads handed back to
/// the backend rather than aborting the episode.
pub trait ToolHost {
    fn specs(&self) -> Vec<ToolSpec>;
    fn dispatch(&mut self, call: &ToolCall, step: usize) -> Result<Value, String>;
}

#[derive(Debug, Clone)]
pub struct EpisodeOutcome {
    pub final_text: Option<String>,
    pub steps_used: usize,
}

/// Drives one agent episode: step the backend, execute tool calls against
/// the host, append everything to the history and the transcript, stop on a
/// final answer. Exhausting the budget is not an error here; callers decide
/// what a missing final answer means for their role.
#[allow(clippy::too_many_arguments)]
pub fn run_episode(
    backend: &mut dyn AgentBackend,
    host: &mut dyn ToolHost,
    system: &str,
    initial_user: String,
    budget: usize,
    iteration: u64,
    agent: &str,
    transcript: &mut Transcript,
) -> Result<EpisodeOutcome, AgentError> {
    if budget == 0 {
        return Err(AgentError::ZeroBudget);
    }
    let mut history = vec![ChatMessage::user(initial_user.clone())];
    transcript.push(TranscriptEvent {
        iteration,
        agent: agent.into(),
        step: 0,
        kind: EventKind::Message {
            role: "system".into(),
            content: system.to_string(),
        },
    });
    transcript.push(TranscriptEvent {
        iteration,
        agent: agent.into(),
        step: 0,
        kind: EventKind::Message {
            role: "user".into(),
            content: initial_user,
        },
    });
    let specs = host.specs();
    for step in 1..=budget {
        match backend.step(system, &history, &specs)? {
            BackendStep::Final(text) => {
                transcript.push(TranscriptEvent {
                    iteration,
                    agent: agent.into(),
                    step,
                    kind: EventKind::Final {
                        content: text.clone(),
                    },
                });
                return Ok(EpisodeOutcome {
                    final_text: Some(text),
                    steps_used: step,
                });
            }
            BackendStep::Call(call) => {
                transcript.push(TranscriptEvent {
                    iteration,
                    agent: agent.into(),
                    step,
                    kind: EventKind::ToolCall {
                        name: call.name.clone(),
                        arguments: call.arguments.clone(),
                    },
                });
                let payload = match host.dispatch(&call, step) {
                    Ok(v) => v,
                    Err(message) => json!({ "error": message }),
                };
                let content = serde_json::to_string(&payload).expect("tool payloads serialize");
                transcript.push(TranscriptEvent {
                    iteration,
                    agent: agent.into(),
                    step,
                    kind: EventKind::ToolResult {
                        name: call.name.clone(),
                        content: content.clone(),
                    },
                });
                history.push(ChatMessage::assistant_call(call.clone()));
                history.push(ChatMessage::tool_result(call.id.clone(), content));
            }
        }
    }
    Ok(EpisodeOutcome {
        final_text: None,
        steps_used: budget,
    })
}

fn arg_str<'a>(args: &'a Value, key: &str) -> Result<&'a str, String> {
    args.get(key)
        .and_then(|v| v.as_str())
        .ok_or_else(|| format!("missing required string argument '{key}'"))
}

fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    Some(if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    })
}

/// The read-only structured table tool standing in for an open dataframe
/// environment: `head`, `describe` (plus per-column medians), `value_counts`,
/// and `evaluate_dsl` returning summary statistics of a candidate expression.
pub fn table_tool(dataset: &Dataset, args: &Value) -> Result<Value, String> {
    let op = arg_str(args, "op")?;
    match op {
        "head" => {
            let k = args.get("k").and_then(|v| v.as_u64()).unwrap_or(5).min(20) as usize;
            let k = k.min(dataset.n_rows);
            let mut rows = Vec::with_capacity(k);
            for row in 0..k {
                let mut obj = serde_json::Map::new();
                for col in &dataset.columns {
                    let cell = match &col.values {
                        ColumnValues::Numeric(v) => v[row].map(|x| json!(x)).unwrap_or(Value::Null),
                        ColumnValues::Categorical(v) => {
                            v[row].as_ref().map(|s| json!(s)).unwrap_or(Value::Null)
                        }
                    };
                    obj.insert(col.name.clone(), cell);
                }
                rows.push(Value::Object(obj));
            }
            Ok(json!({ "rows": rows, "n_rows": dataset.n_rows }))
        }
        "describe" => {
            let summary = describe(dataset);
            let mut cols = Vec::new();
            for (col, cs) in dataset.columns.iter().zip(&summary.columns) {
                let mut obj = serde_json::Map::new();
                obj.insert("name".into(), json!(cs.name));
                obj.insert(
                    "kind".into(),
                    json!(match cs.kind {
                        crate::dataset::ColumnKind::Numeric => "numeric",
                        crate::dataset::ColumnKind::Categorical => "categorical",
                    }),
                );
                obj.insert("missing_rate".into(), json!(cs.missing_rate));
                match (&cs.stats, &col.values) {
                    (
                        ColumnStats::Numeric {
                            mean,
                            std,
                            min,
                            max,
                        },
                        ColumnValues::Numeric(v),
                    ) => {
                        let present: Vec<f64> = v.iter().flatten().copied().collect();
                        obj.insert("mean".into(), json!(mean));
                        obj.insert("std".into(), json!(std));
                        obj.insert("min".into(), json!(min));
                        obj.insert("max".into(), json!(max));
                        obj.insert("median".into(), json!(median(&present)));
                    }
                    (ColumnStats::Categorical { cardinality, top }, _) => {
                        obj.insert("cardinality".into(), json!(cardinality));
                        obj.insert("top".into(), json!(top));
                    }
                    _ => {}
                }
                cols.push(Value::Object(obj));
            }
            Ok(json!({
                "columns": cols,
                "target": summary.target,
                "n_rows": dataset.n_rows,
            }))
        }
        "value_counts" => {
            let name = arg_str(args, "column")?;
            let col = dataset
                .column(name)
                .ok_or_else(|| format!("unknown column '{name}'"))?;
            match &col.values {
                ColumnValues::Categorical(vals) => {
                    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
                    for v in vals.iter().flatten() {
                        *counts.entry(v.as_str()).or_default() += 1;
                    }
                    let mut table: Vec<(String, usize)> = counts
                        .into_iter()
                        .map(|(k, v)| (k.to_string(), v))
                        .collect();
                    table.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
                    table.truncate(20);
                    Ok(json!({ "column": name, "counts": table }))
                }
                ColumnValues::Numeric(_) => Err(format!(
                    "value_counts needs a categorical column; '{name}' is numeric"
                )),
            }
        }
        "evaluate_dsl" => {
            let source = arg_str(args, "expression")?;
            let expr = dsl::parse(source).map_err(|e| e.to_string())?;
            dsl::validate(&expr, dataset).map_err(|e| e.to_string())?;
            let values = dsl::evaluate(&expr, dataset);
            let present: Vec<f64> = values.iter().flatten().copied().collect();
            let stats = crate::dataset::population_stats(&present);
            Ok(json!({
                "expression": dsl::format(&expr),
                "missing_count": values.len() - present.len(),
                "stats": stats.map(|(mean, std, min, max)| json!({
                    "mean": mean, "std": std, "min": min, "max": max
                })),
            }))
        }
        other => Err(format!("unknown table op '{other}'")),
    }
}

fn knowledge_lookup(
    source: Option<&KnowledgeSource>,
    backend: &mut Option<Box<dyn AgentBackend>>,
    query: &str,
) -> Result<Value, String> {
    let Some(source) = source else {
        return Err("no knowledge source configured for this role".into());
    };
    let answer = knowledge::answer(query, source, backend, 3).map_err(|e| e.to_string())?;
    Ok(serde_json::to_value(answer).expect("answer serializes"))
}

fn spec(name: &str, description: &str, args: Vec<ArgSpec>) -> ToolSpec {
    ToolSpec {
        name: name.into(),
        description: description.into(),
        args,
    }
}

fn note_spec() -> ToolSpec {
    spec(
        "take_note_tool",
        "Append a note to your scratch pad for later iterations.",
        vec![ArgSpec::new("note", "string", true, "The note to record.")],
    )
}

fn table_spec() -> ToolSpec {
    spec(
        "generic_pandas_tool",
        "Read-only table queries: op=head (k rows), op=describe (per-column stats), \
         op=value_counts (column), op=evaluate_dsl (expression summary stats).",
        vec![
            ArgSpec::new(
                "op",
                "string",
                true,
                "head | describe | value_counts | evaluate_dsl",
            ),
            ArgSpec::new("k", "integer", false, "Row count for head."),
            ArgSpec::new("column", "string", false, "Column for value_counts."),
            ArgSpec::new(
                "expression",
                "string",
                false,
                "DSL expression for evaluate_dsl.",
            ),
        ],
    )
}

fn lookup_spec() -> ToolSpec {
    spec(
        "attribute_lookup_tool",
        "Look up a feature's definition, justification, and status.",
        vec![ArgSpec::new("name", "string", true, "Feature name.")],
    )
}

fn lookup_attribute(pool: &FeaturePool, name: &str) -> Result<Value, String> {
    let record = pool
        .lookup(name)
        .ok_or_else(|| format!("no feature named '{name}'"))?;
    Ok(json!({
        "name": record.name(),
        "source_text": record.transformation.source_text,
        "justification": record.transformation.justification,
        "explanation": record.transformation.explanation,
        "status": match record.status {
            FeatureStatus::Active => "active",
            FeatureStatus::Pruned => "pruned",
        },
        "created_iter": record.created_iter,
        "pruned_iter": record.pruned_iter,
        "prune_reason": record.prune_reason,
    }))
}

/// Pulls `(name, gain)` rows out of an assessment's importance table.
pub(crate) fn parse_top_features(markdown: &str) -> Vec<(String, f64)> {
    let mut in_section = false;
    let mut rows = Vec::new();
    for line in markdown.lines() {
        if line.starts_with("### ") {
            in_section = line.contains("Post-Pruning Importance");
            continue;
        }
        if !in_section || !line.starts_with('|') {
            continue;
        }
        let cells: Vec<&str> = line.trim_matches('|').split('|').map(str::trim).collect();
        if cells.len() < 2 || cells[0] == "Feature" || cells[0].starts_with("---") {
            continue;
        }
        if let Ok(gain) = cells[1].parse::<f64>() {
            rows.push((cells[0].to_string(), gain));
        }
    }
    rows
}

/// Tool surface for the scientist: knowledge search, notebook, table
/// summaries, the test-pool reader, and feature lookup.
pub struct ScientistHost<'a> {
    pub dataset: &'a Dataset,
    pub feature_pool: &'a FeaturePool,
    pub test_pool: &'a TestPool,
    pub knowledge: Option<&'a KnowledgeSource>,
    pub knowledge_backend: Option<Box<dyn AgentBackend>>,
    pub pad: &'a mut ScratchPad,
    pub iteration: u64,
}

impl ToolHost for ScientistHost<'_> {
    fn specs(&self) -> Vec<ToolSpec> {
        vec![
            spec(
                "search_tool",
                "Search the configured knowledge source and get a cited summary.",
                vec![ArgSpec::new("query", "string", true, "What to search for.")],
            ),
            note_spec(),
            table_spec(),
            spec(
                "test_pool_tool",
                "Read the cumulative evaluation records from previous iterations.",
                vec![],
            ),
            lookup_spec(),
        ]
    }

    fn dispatch(&mut self, call: &ToolCall, step: usize) -> Result<Value, String> {
        match call.name.as_str() {
            "search_tool" => {
                let query = arg_str(&call.arguments, "query")?;
                knowledge_lookup(self.knowledge, &mut self.knowledge_backend, query)
            }
            "take_note_tool" => {
                let note = arg_str(&call.arguments, "note")?;
                self.pad.append(self.iteration, step, note);
                Ok(json!({ "noted": true }))
            }
            "generic_pandas_tool" => table_tool(self.dataset, &call.arguments),
            "test_pool_tool" => {
                let records: Vec<Value> = self
                    .test_pool
                    .records()
                    .iter()
                    .map(|r| {
                        json!({
                            "iteration": r.iteration,
                            "metric_name": r.metric.name,
                            "metric_mean": r.metric.mean,
                            "metric_std": r.metric.std,
                            "active_count_after": r.active_count_after,
                            "pruned_count": r.pruned_names.len(),
                            "focus_text": r.focus.text,
                            "focus_scope": r.focus.scope,
                        })
                    })
                    .collect();
                let top = self
                    .test_pool
                    .latest()
                    .map(|r| parse_top_features(&r.assessment_markdown))
                    .unwrap_or_default();
                Ok(json!({ "records": records, "latest_top_features": top }))
            }
            "attribute_lookup_tool" => {
                lookup_attribute(self.feature_pool, arg_str(&call.arguments, "name")?)
            }
            other => Err(format!("unknown tool '{other}'")),
        }
    }
}

/// Tool surface for the extractor: table discovery plus `append_new_attribute`,
/// which validates DSL and name uniqueness and stages accepted features.
pub struct ExtractorHost<'a> {
    pub dataset: &'a Dataset,
    pub feature_pool: &'a FeaturePool,
    pub knowledge: Option<&'a KnowledgeSource>,
    pub knowledge_backend: Option<Box<dyn AgentBackend>>,
    pub pad: &'a mut ScratchPad,
    pub iteration: u64,
    pub pending: Vec<Transformation>,
    /// Hard cap on accepted features this episode (4x the flood target).
    pub cap: usize,
}

impl ToolHost for ExtractorHost<'_> {
    fn specs(&self) -> Vec<ToolSpec> {
        vec![
            table_spec(),
            spec(
                "append_new_attribute",
                "Propose one new feature: a DSL expression over raw columns with a \
                 justification and a plain-language explanation.",
                vec![
                    ArgSpec::new("name", "string", true, "Identifier for the new feature."),
                    ArgSpec::new(
                        "dsl_source",
                        "string",
                        true,
                        "Feature expression in the DSL.",
                    ),
                    ArgSpec::new(
                        "justification",
                        "string",
                        true,
                        "Why this feature fits the focus.",
                    ),
                    ArgSpec::new("explanation", "string", true, "What the feature computes."),
                ],
            ),
            spec(
                "list_known_attributes_tool",
                "List active features (including ones accepted this round).",
                vec![],
            ),
            spec(
                "search_in_literature_tool",
                "Search the configured knowledge source and get a cited summary.",
                vec![ArgSpec::new("query", "string", true, "What to search for.")],
            ),
            note_spec(),
        ]
    }

    fn dispatch(&mut self, call: &ToolCall, step: usize) -> Result<Value, String> {
        match call.name.as_str() {
            "generic_pandas_tool" => table_tool(self.dataset, &call.arguments),
            "append_new_attribute" => {
                if self.pending.len() >= self.cap {
                    return Err(format!(
                        "flood cap reached ({} accepted); stop proposing",
                        self.cap
                    ));
                }
                let name = arg_str(&call.arguments, "name")?;
                if self.feature_pool.is_name_active(name)
                    || self.pending.iter().any(|t| t.name == name)
                {
                    return Err(format!("a feature named '{name}' already exists"));
                }
                let t = Transformation::new(
                    name,
                    arg_str(&call.arguments, "dsl_source")?,
                    arg_str(&call.arguments, "justification")?,
                    arg_str(&call.arguments, "explanation")?,
                    self.iteration,
                    self.dataset,
                )
                .map_err(|e| e.to_string())?;
                let canonical = t.source_text.clone();
                self.pending.push(t);
                Ok(json!({ "accepted": true, "name": name, "canonical": canonical }))
            }
            "list_known_attributes_tool" => {
                let mut attrs: Vec<Value> = self
                    .feature_pool
                    .active()
                    .map(|r| json!({ "name": r.name(), "source_text": r.transformation.source_text }))
                    .collect();
                attrs.extend(
                    self.pending
                        .iter()
                        .map(|t| json!({ "name": t.name, "source_text": t.source_text })),
                );
                Ok(json!({ "attributes": attrs }))
            }
            "search_in_literature_tool" => {
                let query = arg_str(&call.arguments, "query")?;
                knowledge_lookup(self.knowledge, &mut self.knowledge_backend, query)
            }
            "take_note_tool" => {
                let note = arg_str(&call.arguments, "note")?;
                self.pad.append(self.iteration, step, note);
                Ok(json!({ "noted": true }))
            }
            other => Err(format!("unknown tool '{other}'")),
        }
    }
}

/// Tool surface for the tester: staging prunes plus lookups and notes. The
/// host refuses to let a prune batch empty the active set; `protected` is the
/// highest-gain feature of the current evaluation.
pub struct TesterHost<'a> {
    pub feature_pool: &'a FeaturePool,
    pub knowledge: Option<&'a KnowledgeSource>,
    pub knowledge_backend: Option<Box<dyn AgentBackend>>,
    pub pad: &'a mut ScratchPad,
    pub iteration: u64,
    pub staged: Vec<(String, String)>,
    pub protected: String,
}

impl ToolHost for TesterHost<'_> {
    fn specs(&self) -> Vec<ToolSpec> {
        vec![
            spec(
                "attribute_pruning_tool",
                "Prune named features from the active pool, with a reason per name.",
                vec![
                    ArgSpec::new("names", "array", true, "Feature names to prune."),
                    ArgSpec::new("reasons", "object", false, "Map feature name -> reason."),
                ],
            ),
            lookup_spec(),
            note_spec(),
            spec(
                "search_in_literature_tool",
                "Search the configured knowledge source and get a cited summary.",
                vec![ArgSpec::new("query", "string", true, "What to search for.")],
            ),
        ]
    }

    fn dispatch(&mut self, call: &ToolCall, step: usize) -> Result<Value, String> {
        match call.name.as_str() {
            "attribute_pruning_tool" => {
                let names: Vec<String> = call
                    .arguments
                    .get("names")
                    .and_then(|v| v.as_array())
                    .ok_or("missing required array argument 'names'")?
                    .iter()
                    .filter_map(|v| v.as_str().map(str::to_string))
                    .collect();
                let reasons: BTreeMap<String, String> = call
                    .arguments
                    .get("reasons")
                    .and_then(|v| v.as_object())
                    .map(|m| {
                        m.iter()
                            .filter_map(|(k, v)| v.as_str().map(|s| (k.clone(), s.to_string())))
                            .collect()
                    })
                    .unwrap_or_default();
                let mut accepted = Vec::new();
                let mut rejected = BTreeMap::new();
                for name in names {
                    if !self.feature_pool.is_name_active(&name) {
                        rejected.insert(name, "not an active feature".to_string());
                    } else if self.staged.iter().any(|(n, _)| *n == name)
                        || accepted.contains(&name)
                    {
                        rejected.insert(name, "already staged for pruning".to_string());
                    } else {
                        accepted.push(name);
                    }
                }
                let active_total = self.feature_pool.active_count();
                if self.staged.len() + accepted.len() >= active_total {
                    let victim =
                        if let Some(pos) = accepted.iter().position(|n| *n == self.protected) {
                            pos
                        } else {
                            accepted.len().saturating_sub(1)
                        };
                    let name = accepted.remove(victim);
                    rejected.insert(
                        name,
                        "refused: pruning this would empty the active feature set".to_string(),
                    );
                }
                for name in &accepted {
                    let reason = reasons
                        .get(name)
                        .cloned()
                        .unwrap_or_else(|| "pruned by tester".to_string());
                    self.staged.push((name.clone(), reason));
                }
                Ok(json!({ "staged": accepted, "rejected": rejected }))
            }
            "attribute_lookup_tool" => {
                lookup_attribute(self.feature_pool, arg_str(&call.arguments, "name")?)
            }
            "take_note_tool" => {
                let note = arg_str(&call.arguments, "note")?;
                self.pad.append(self.iteration, step, note);
                Ok(json!({ "noted": true }))
            }
            "search_in_literature_tool" => {
                let query = arg_str(&call.arguments, "query")?;
                knowledge_lookup(self.knowledge, &mut self.knowledge_backend, query)
            }
            other => Err(format!("unknown tool '{other}'")),
        }
    }
}
