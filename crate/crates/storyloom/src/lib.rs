//! Plot-node driven story generation with an offline evaluation suite.
//!
//! The engine builds stories in three stages: a premise/synopsis and
//! chapter plans, then per-chapter plot structuring as subject-verb-object
//! nodes refined through a retrieve-and-review loop over a storyline and
//! an entity knowledge graph, then chapter prose conditioned on the nodes.
//! The companion evaluation suite measures diversity (DistinctL-n, diverse
//! verbs), runs a pairwise judge arena with position-swap debiasing, and
//! computes bootstrap ranking probabilities, Brier loss, and Cohen's
//! kappa.
//!
//! Everything runs offline against a [`gateway::ScriptedBackend`]; an
//! OpenAI-compatible HTTP backend plugs in for real engines. See the book
//! under `book/` for a guided tour.

pub mod eval;
pub mod gateway;
pub mod nekg;
pub mod node;
pub mod pipeline;
pub mod project;
pub mod review;
pub mod storyline;

pub use gateway::{Backend, Gateway, GatewayError, ScriptedBackend, TemplateStore};
pub use nekg::{EntityRef, EventEdge, GraphError, GraphExportFormat, NekgGraph};
pub use node::{
    validate_chapter_nodes, ChapterPlan, ChapterShape, Node, NodeError, NodeKind,
};
pub use pipeline::{
    run_pipeline, ChapterContext, ContextBundle, Pipeline, PipelineAbort, PipelineConfig,
    PipelineError, PipelineOutput, RunEvent, RunLog,
};
pub use project::{ChapterNode, ProjectError, StoryProject};
pub use review::{review_type_stats, ReviewOutcome, ReviewRecord, ReviewType};
pub use storyline::{Storyline, StorylineEntry, StorylineError};
