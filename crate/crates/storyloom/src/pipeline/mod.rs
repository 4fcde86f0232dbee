//! The three-stage generation pipeline.
//!
//! Stage 1 turns the user prompt into a premise, a synopsis, and chapter
//! plans. Stage 2 structures each chapter as plot nodes: boundary nodes
//! first, then a loop that proposes a pseudo plot node, retrieves recent
//! graph context for it, reviews it, and appends the accepted or modified
//! node until it aligns with the chapter end node. Stage 3 writes each
//! chapter as prose conditioned on its nodes and the previous block.
//!
//! Every step is driven through the [`Gateway`], so a scripted backend
//! replays whole runs deterministically.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub mod log;

pub use log::{RunEvent, RunLog, MARKER_LOOP_BUDGET_EXHAUSTED};

use crate::gateway::parse::{
    parse_alignment_verdict, parse_chapter_plans, parse_node_list, parse_node_triplet,
    parse_premise_synopsis, parse_review_outcome, RawReview, RawTriplet,
};
use crate::gateway::{Backend, Completion, Decoding, Gateway, GatewayError, PromptRequest};
use crate::nekg::{EventEdge, GraphError, NekgGraph};
use crate::node::{validate_chapter_nodes, ChapterPlan, Node, NodeError, NodeKind};
use crate::project::{ChapterNode, StoryProject};
use crate::review::ReviewRecord;
use crate::storyline::{Storyline, StorylineError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Node(#[from] NodeError),
    #[error(transparent)]
    Storyline(#[from] StorylineError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("the model returned an empty {0}")]
    EmptyGeneration(&'static str),
    #[error("expected {expected} chapter plans, got {got}")]
    PlanCountMismatch { expected: usize, got: usize },
    #[error("invalid pipeline configuration: {0}")]
    InvalidConfig(String),
}

/// Everything that parameterizes one pipeline run. Snapshotted into the
/// project file for reproducibility audits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub n_chapters: usize,
    pub max_cpn_per_chapter: usize,
    /// Retrieval limit for events between the pseudo node's subject and object.
    pub pair_limit: usize,
    /// Retrieval limit for events involving each endpoint separately.
    pub entity_limit: usize,
    /// How many recent storyline entries feed the pseudo-node prompt.
    pub recent_limit: usize,
    pub use_nekg: bool,
    pub use_review: bool,
    /// Split compound entities on the token "and" when recording events.
    pub split_conjunctions: bool,
    pub rng_seed: u64,
    /// Backend descriptor recorded for audit (model name or "scripted").
    pub backend: String,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            n_chapters: 7,
            max_cpn_per_chapter: 12,
            pair_limit: 3,
            entity_limit: 3,
            recent_limit: 5,
            use_nekg: true,
            use_review: true,
            split_conjunctions: false,
            rng_seed: 0,
            backend: "scripted".to_string(),
            temperature: 0.0,
            max_tokens: 16384,
        }
    }
}

impl PipelineConfig {
    pub fn decoding(&self) -> Decoding {
        Decoding {
            temperature: self.temperature,
            max_tokens: self.max_tokens,
            seed: Some(self.rng_seed),
        }
    }

    fn validate(&self) -> Result<(), PipelineError> {
        if self.n_chapters == 0 {
            return Err(PipelineError::InvalidConfig("n_chapters must be >= 1".into()));
        }
        if self.max_cpn_per_chapter == 0 {
            return Err(PipelineError::InvalidConfig(
                "max_cpn_per_chapter must be >= 1".into(),
            ));
        }
        Ok(())
    }

    /// Closed-form ceiling on LLM calls for one chapter: boundary + text
    /// block, plus pseudo/review/alignment per loop turn, each parsed call
    /// allowed one corrective re-prompt.
    pub fn max_llm_calls_per_chapter(&self) -> usize {
        let parsed_calls = 1 + 3 * self.max_cpn_per_chapter;
        2 + 3 * self.max_cpn_per_chapter + parsed_calls
    }
}

/// The plans surrounding one chapter, for boundary-node prompts.
#[derive(Debug, Clone)]
pub struct ChapterContext {
    pub premise: String,
    pub plan: ChapterPlan,
    pub previous: Option<ChapterPlan>,
    pub next: Option<ChapterPlan>,
}

impl ChapterContext {
    pub fn from_plans(premise: &str, plans: &[ChapterPlan], index: usize) -> Self {
        ChapterContext {
            premise: premise.to_string(),
            plan: plans[index].clone(),
            previous: index.checked_sub(1).map(|p| plans[p].clone()),
            next: plans.get(index + 1).cloned(),
        }
    }
}

/// Graph context retrieved for one pseudo plot node.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ContextBundle {
    /// Most recent events between the subject and object.
    pub pair_events: Vec<EventEdge>,
    /// Most recent events involving the subject.
    pub subject_events: Vec<EventEdge>,
    /// Most recent events involving the object.
    pub object_events: Vec<EventEdge>,
}

impl ContextBundle {
    pub fn empty() -> Self {
        ContextBundle::default()
    }
}

/// Everything a finished (or aborted) run produced.
#[derive(Debug)]
pub struct PipelineOutput {
    pub project: StoryProject,
    pub storyline: Storyline,
    /// Empty when the run had `use_nekg = false`.
    pub graph: NekgGraph,
    pub log: RunLog,
}

/// A failed run, carrying the partial output for inspection.
#[derive(Debug)]
pub struct PipelineAbort {
    pub error: PipelineError,
    pub partial: PipelineOutput,
}

impl std::fmt::Display for PipelineAbort {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "pipeline aborted: {}", self.error)
    }
}

impl std::error::Error for PipelineAbort {}

/// Drives one story generation run.
pub struct Pipeline<'a> {
    config: PipelineConfig,
    gateway: &'a Gateway,
    backend: &'a dyn Backend,
    log: RunLog,
}

fn fmt_edge(edge: &EventEdge) -> String {
    format!(
        "t{} ch{}: {} {} {}",
        edge.time_stamp, edge.chapter_index, edge.subject, edge.verb, edge.object
    )
}

fn fmt_edges(edges: &[EventEdge]) -> String {
    if edges.is_empty() {
        "(none)".to_string()
    } else {
        edges.iter().map(fmt_edge).collect::<Vec<_>>().join("\n")
    }
}

fn fmt_nodes(nodes: &[(Node, NodeKind)]) -> String {
    if nodes.is_empty() {
        "(none yet)".to_string()
    } else {
        nodes
            .iter()
            .map(|(n, k)| format!("[{k}] {n}"))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

impl<'a> Pipeline<'a> {
    pub fn new(config: PipelineConfig, gateway: &'a Gateway, backend: &'a dyn Backend) -> Self {
        Pipeline {
            config,
            gateway,
            backend,
            log: RunLog::new(),
        }
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn log(&self) -> &RunLog {
        &self.log
    }

    fn call(
        &mut self,
        template_id: &str,
        bindings: &BTreeMap<String, String>,
        chapter: Option<usize>,
    ) -> Result<Completion, PipelineError> {
        let request = PromptRequest {
            template_id: template_id.to_string(),
            bindings: bindings.clone(),
            decoding: self.config.decoding(),
        };
        match self.gateway.complete(self.backend, &request) {
            Ok(done) => {
                self.log.llm_call(template_id, chapter, done.attempt_count, "ok");
                Ok(done)
            }
            Err(err) => {
                self.log.llm_call(template_id, chapter, 0, &err.to_string());
                Err(err.into())
            }
        }
    }

    /// One call plus at most one corrective re-prompt quoting the failure.
    fn call_corrected<T>(
        &mut self,
        template_id: &str,
        mut bindings: BTreeMap<String, String>,
        chapter: Option<usize>,
        extract: impl Fn(&str) -> Result<T, PipelineError>,
    ) -> Result<T, PipelineError> {
        bindings.insert("CORRECTION".to_string(), String::new());
        let first = self.call(template_id, &bindings, chapter)?;
        match extract(&first.text) {
            Ok(value) => Ok(value),
            Err(first_err) => {
                bindings.insert(
                    "CORRECTION".to_string(),
                    format!(
                        "\nYour previous reply could not be used: {first_err}\n\
Answer again, following the required format exactly."
                    ),
                );
                let second = self.call(template_id, &bindings, chapter)?;
                extract(&second.text)
            }
        }
    }

    fn normalize(raw: &RawTriplet) -> Result<Node, PipelineError> {
        Ok(Node::normalize(&raw.subject, &raw.verb, Some(&raw.object))?)
    }

    /// Stage 1: premise and synopsis from the user prompt.
    pub fn stage1_premise_synopsis(
        &mut self,
        user_input: &str,
    ) -> Result<(String, String), PipelineError> {
        let bindings = BTreeMap::from([("USER_INPUT".to_string(), user_input.to_string())]);
        let (premise, synopsis) = self.call_corrected(
            "premise_synopsis",
            bindings,
            None,
            |text| Ok(parse_premise_synopsis(text)?),
        )?;
        if premise.trim().is_empty() {
            return Err(PipelineError::EmptyGeneration("premise"));
        }
        if synopsis.trim().is_empty() {
            return Err(PipelineError::EmptyGeneration("synopsis"));
        }
        Ok((premise, synopsis))
    }

    /// Stage 1: exactly `n_chapters` titled, abstracted chapter plans.
    pub fn stage1_chapter_plans(
        &mut self,
        premise: &str,
        synopsis: &str,
    ) -> Result<Vec<ChapterPlan>, PipelineError> {
        let expected = self.config.n_chapters;
        let bindings = BTreeMap::from([
            ("PREMISE".to_string(), premise.to_string()),
            ("SYNOPSIS".to_string(), synopsis.to_string()),
            ("N_CHAPTERS".to_string(), expected.to_string()),
        ]);
        let plans = self.call_corrected("chapter_plans", bindings, None, |text| {
            let raw = parse_chapter_plans(text)?;
            if raw.len() != expected {
                return Err(PipelineError::PlanCountMismatch {
                    expected,
                    got: raw.len(),
                });
            }
            for (i, plan) in raw.iter().enumerate() {
                if plan.title.trim().is_empty() || plan.summary.trim().is_empty() {
                    return Err(PipelineError::EmptyGeneration(if plan.title.trim().is_empty() {
                        "chapter title"
                    } else {
                        "chapter abstract"
                    }));
                }
                let _ = i;
            }
            Ok(raw)
        })?;
        Ok(plans
            .into_iter()
            .enumerate()
            .map(|(index, p)| ChapterPlan {
                index,
                title: p.title.trim().to_string(),
                summary: p.summary.trim().to_string(),
            })
            .collect())
    }

    /// Stage 2: one chapter's begin and end nodes, in a single call that
    /// sees the preceding and following chapter plans when they exist.
    pub fn stage2_boundary_nodes(
        &mut self,
        ctx: &ChapterContext,
    ) -> Result<(Node, Node), PipelineError> {
        let previous = ctx
            .previous
            .as_ref()
            .map(|p| format!("Preceding chapter \"{}\":\n{}\n\n", p.title, p.summary))
            .unwrap_or_default();
        let next = ctx
            .next
            .as_ref()
            .map(|p| format!("Following chapter \"{}\":\n{}\n\n", p.title, p.summary))
            .unwrap_or_default();
        let bindings = BTreeMap::from([
            ("PREMISE".to_string(), ctx.premise.clone()),
            ("PREVIOUS_CHAPTER".to_string(), previous),
            ("TITLE".to_string(), ctx.plan.title.clone()),
            ("ABSTRACT".to_string(), ctx.plan.summary.clone()),
            ("NEXT_CHAPTER".to_string(), next),
        ]);
        let chapter = Some(ctx.plan.index);
        let nodes = self.call_corrected("boundary_nodes", bindings, chapter, |text| {
            let raw = parse_node_list(text)?;
            if raw.len() != 2 {
                return Err(GatewayError::ParseFailure {
                    schema: "node_list",
                    reason: format!("expected exactly 2 boundary nodes, got {}", raw.len()),
                    snippet: String::new(),
                }
                .into());
            }
            Ok(raw)
        })?;
        let cbn = Self::normalize(&nodes[0])?;
        let cen = Self::normalize(&nodes[1])?;
        Ok((cbn, cen))
    }

    /// Stage 2: whether the latest plot node aligns with the end node.
    /// Exact triplet equality short-circuits without an LLM call.
    pub fn stage2_alignment_check(
        &mut self,
        cpn: &Node,
        cen: &Node,
        chapter: Option<usize>,
    ) -> Result<bool, PipelineError> {
        if cpn == cen {
            return Ok(true);
        }
        let bindings = BTreeMap::from([
            ("CEN".to_string(), cen.to_string()),
            ("CPN".to_string(), cpn.to_string()),
        ]);
        self.call_corrected("alignment", bindings, chapter, |text| {
            Ok(parse_alignment_verdict(text)?)
        })
    }

    fn retrieve_context(&mut self, graph: &NekgGraph, pseudo: &Node, chapter: usize) -> ContextBundle {
        if !self.config.use_nekg {
            return ContextBundle::empty();
        }
        let pair_events =
            graph.events_between(pseudo.subject(), pseudo.object(), self.config.pair_limit);
        self.log.graph_op("events_between", Some(chapter));
        let subject_events = graph.events_involving(pseudo.subject(), self.config.entity_limit);
        self.log.graph_op("events_involving", Some(chapter));
        let object_events = graph.events_involving(pseudo.object(), self.config.entity_limit);
        self.log.graph_op("events_involving", Some(chapter));
        ContextBundle {
            pair_events,
            subject_events,
            object_events,
        }
    }

    fn review_pseudo(
        &mut self,
        pseudo: &Node,
        cbn: &Node,
        cen: &Node,
        nodes_so_far: &[(Node, NodeKind)],
        bundle: &ContextBundle,
        chapter: usize,
    ) -> Result<(Node, ReviewRecord), PipelineError> {
        let bindings = BTreeMap::from([
            ("PSEUDO".to_string(), pseudo.to_string()),
            ("CBN".to_string(), cbn.to_string()),
            ("CEN".to_string(), cen.to_string()),
            ("CPNS".to_string(), fmt_nodes(nodes_so_far)),
            ("PAIR_EVENTS".to_string(), fmt_edges(&bundle.pair_events)),
            ("SUBJECT_EVENTS".to_string(), fmt_edges(&bundle.subject_events)),
            ("OBJECT_EVENTS".to_string(), fmt_edges(&bundle.object_events)),
        ]);
        let outcome = self.call_corrected("review", bindings, Some(chapter), |text| {
            Ok(parse_review_outcome(text)?)
        })?;
        match outcome {
            RawReview::Pass => Ok((
                pseudo.clone(),
                ReviewRecord::accepted(chapter, pseudo.clone()),
            )),
            RawReview::Fail {
                review_type,
                modified,
                explanation,
            } => {
                let final_node = Self::normalize(&modified)?;
                Ok((
                    final_node.clone(),
                    ReviewRecord::modified(
                        chapter,
                        pseudo.clone(),
                        final_node.clone(),
                        review_type,
                        explanation,
                    ),
                ))
            }
        }
    }

    fn record(
        &mut self,
        storyline: &mut Storyline,
        graph: &mut NekgGraph,
        node: Node,
        kind: NodeKind,
        chapter: usize,
    ) -> Result<(), PipelineError> {
        let entry = storyline.append(node, kind, chapter)?.clone();
        if self.config.use_nekg {
            if self.config.split_conjunctions {
                graph.record_event_split(&entry)?;
            } else {
                graph.record_event(&entry)?;
            }
            self.log.graph_op("record_event", Some(chapter));
        }
        Ok(())
    }

    /// Stage 2: the pseudo-node loop for one chapter.
    ///
    /// The chapter begin node must already be appended to the storyline
    /// (and graph); this appends every accepted plot node and finally the
    /// end node, returning the chapter's full node list plus the review
    /// records the loop produced.
    pub fn stage2_generate_chapter(
        &mut self,
        ctx: &ChapterContext,
        cbn: &Node,
        cen: &Node,
        storyline: &mut Storyline,
        graph: &mut NekgGraph,
    ) -> Result<(Vec<(Node, NodeKind)>, Vec<ReviewRecord>), PipelineError> {
        let chapter = ctx.plan.index;
        let mut nodes: Vec<(Node, NodeKind)> = vec![(cbn.clone(), NodeKind::CBN)];
        let mut records: Vec<ReviewRecord> = Vec::new();
        let mut cpn_count = 0usize;
        let mut budget_exhausted = false;
        loop {
            let recent = storyline
                .latest(self.config.recent_limit)
                .iter()
                .map(|e| format!("t{} ch{} [{}] {}", e.time_stamp, e.chapter_index, e.kind, e.node))
                .collect::<Vec<_>>()
                .join("\n");
            let bindings = BTreeMap::from([
                ("CBN".to_string(), cbn.to_string()),
                ("CEN".to_string(), cen.to_string()),
                ("CPNS".to_string(), fmt_nodes(&nodes[1..])),
                (
                    "RECENT".to_string(),
                    if recent.is_empty() { "(none)".to_string() } else { recent },
                ),
            ]);
            let raw = self.call_corrected("pseudo_cpn", bindings, Some(chapter), |text| {
                Ok(parse_node_triplet(text)?)
            })?;
            let pseudo = Self::normalize(&raw)?;

            let bundle = self.retrieve_context(graph, &pseudo, chapter);

            let final_node = if self.config.use_review {
                let (final_node, record) =
                    self.review_pseudo(&pseudo, cbn, cen, &nodes[1..], &bundle, chapter)?;
                records.push(record);
                final_node
            } else {
                pseudo
            };

            self.record(storyline, graph, final_node.clone(), NodeKind::CPN, chapter)?;
            nodes.push((final_node.clone(), NodeKind::CPN));
            cpn_count += 1;

            if self.stage2_alignment_check(&final_node, cen, Some(chapter))? {
                break;
            }
            if cpn_count >= self.config.max_cpn_per_chapter {
                budget_exhausted = true;
                break;
            }
        }
        self.record(storyline, graph, cen.clone(), NodeKind::CEN, chapter)?;
        nodes.push((cen.clone(), NodeKind::CEN));
        if budget_exhausted {
            self.log.marker(MARKER_LOOP_BUDGET_EXHAUSTED, Some(chapter));
        }
        debug_assert!(validate_chapter_nodes(&nodes).is_valid());
        Ok((nodes, records))
    }

    /// Stage 3: one chapter of prose from its nodes and the previous block.
    pub fn stage3_text_block(
        &mut self,
        ctx: &ChapterContext,
        nodes: &[(Node, NodeKind)],
        previous_block: Option<&str>,
    ) -> Result<String, PipelineError> {
        let previous = previous_block
            .map(|b| format!("Text block from the preceding chapter:\n{b}\n\n"))
            .unwrap_or_default();
        let bindings = BTreeMap::from([
            ("PREMISE".to_string(), ctx.premise.clone()),
            ("TITLE".to_string(), ctx.plan.title.clone()),
            ("ABSTRACT".to_string(), ctx.plan.summary.clone()),
            ("PREVIOUS_BLOCK".to_string(), previous),
            ("NODES".to_string(), fmt_nodes(nodes)),
        ]);
        let done = self.call("text_block", &bindings, Some(ctx.plan.index))?;
        let text = done.text.trim().to_string();
        if text.is_empty() {
            return Err(PipelineError::EmptyGeneration("text block"));
        }
        Ok(text)
    }

    /// Runs all three stages. On a fatal error the partial project is
    /// returned inside the abort for persistence and inspection.
    pub fn run(mut self, user_input: &str) -> Result<PipelineOutput, Box<PipelineAbort>> {
        let mut project = StoryProject::new(user_input, self.config.clone());
        let mut storyline = Storyline::new();
        let mut graph = NekgGraph::new();
        let result = self.run_inner(user_input, &mut project, &mut storyline, &mut graph);
        project.storyline = storyline.entries().to_vec();
        let output = PipelineOutput {
            project,
            storyline,
            graph,
            log: self.log,
        };
        match result {
            Ok(()) => Ok(output),
            Err(error) => Err(Box::new(PipelineAbort {
                error,
                partial: output,
            })),
        }
    }

    fn run_inner(
        &mut self,
        user_input: &str,
        project: &mut StoryProject,
        storyline: &mut Storyline,
        graph: &mut NekgGraph,
    ) -> Result<(), PipelineError> {
        self.config.validate()?;
        if user_input.trim().is_empty() {
            return Err(PipelineError::InvalidConfig("user input is empty".into()));
        }

        let (premise, synopsis) = self.stage1_premise_synopsis(user_input)?;
        project.premise = premise;
        project.synopsis = synopsis;

        let plans = self.stage1_chapter_plans(&project.premise, &project.synopsis)?;
        project.chapters = plans;
        project.chapter_nodes = vec![Vec::new(); project.chapters.len()];
        project.text_blocks = vec![None; project.chapters.len()];

        for index in 0..project.chapters.len() {
            let ctx = ChapterContext::from_plans(&project.premise, &project.chapters, index);
            let (cbn, cen) = self.stage2_boundary_nodes(&ctx)?;
            self.record(storyline, graph, cbn.clone(), NodeKind::CBN, index)?;
            let (nodes, records) =
                self.stage2_generate_chapter(&ctx, &cbn, &cen, storyline, graph)?;
            project.chapter_nodes[index] = nodes
                .into_iter()
                .map(|(node, kind)| ChapterNode { node, kind })
                .collect();
            project.review_log.extend(records);
        }

        let mut previous: Option<String> = None;
        for index in 0..project.chapters.len() {
            let ctx = ChapterContext::from_plans(&project.premise, &project.chapters, index);
            let nodes: Vec<(Node, NodeKind)> = project.chapter_nodes[index]
                .iter()
                .map(|cn| (cn.node.clone(), cn.kind))
                .collect();
            let block = self.stage3_text_block(&ctx, &nodes, previous.as_deref())?;
            project.text_blocks[index] = Some(block.clone());
            previous = Some(block);
        }
        Ok(())
    }
}

/// Convenience entry point mirroring the stage methods: builds a
/// [`Pipeline`] and runs it.
pub fn run_pipeline(
    user_input: &str,
    config: PipelineConfig,
    gateway: &Gateway,
    backend: &dyn Backend,
) -> Result<PipelineOutput, Box<PipelineAbort>> {
    Pipeline::new(config, gateway, backend).run(user_input)
}
