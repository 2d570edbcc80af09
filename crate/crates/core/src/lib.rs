//! Automatic feature extraction for tabular prediction, driven by a
//! three-agent loop: a scientist sets a focus area, an extractor floods the
//! pool with candidate transformations written in a small symbolic DSL, and
//! a tester evaluates the active set with a gradient-boosted learner, prunes
//! redundant or weak features, and writes a qualitative assessment. Agents
//! run against either a remote chat-completion endpoint or deterministic
//! scripted policies, so the whole system works offline and reproducibly.

pub mod agents;
pub mod analysis;
pub mod dataset;
pub mod dsl;
pub mod knowledge;
pub mod learner;
pub mod matrix;
pub mod orchestrator;
pub mod pools;
pub mod report;
pub mod rng;
pub mod transcript;

pub use agents::{AgentBackend, BackendStep, ChatMessage, FocusArea, FocusScope, ScratchPad};
pub use dataset::{Dataset, FoldPlan, TaskKind};
pub use dsl::{Expr, Transformation};
pub use matrix::FeatureMatrix;
pub use orchestrator::{run, select_best, RunConfig, RunResult};
pub use pools::{FeaturePool, TestPool};
