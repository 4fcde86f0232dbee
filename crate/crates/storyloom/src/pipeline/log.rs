//! Structured run log: one event per LLM call, graph operation, and
//! loop marker. Content carries no wall-clock time, so logs from scripted
//! reruns are byte-identical.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum RunEvent {
    LlmCall {
        seq: u64,
        template_id: String,
        #[serde(skip_serializing_if = "Option::is_none")]
        chapter: Option<usize>,
        attempts: u32,
        outcome: String,
    },
    GraphOp {
        seq: u64,
        op: String,
        #[serde(skip_serializing_if = "Option::is_none")]
        chapter: Option<usize>,
    },
    Marker {
        seq: u64,
        kind: String,
        #[serde(skip_serializing_if = "Option::is_none")]
        chapter: Option<usize>,
    },
}

pub const MARKER_LOOP_BUDGET_EXHAUSTED: &str = "loop_budget_exhausted";

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunLog {
    events: Vec<RunEvent>,
    next_seq: u64,
}

impl RunLog {
    pub fn new() -> Self {
        RunLog::default()
    }

    fn seq(&mut self) -> u64 {
        self.next_seq += 1;
        self.next_seq
    }

    pub fn llm_call(&mut self, template_id: &str, chapter: Option<usize>, attempts: u32, outcome: &str) {
        let seq = self.seq();
        self.events.push(RunEvent::LlmCall {
            seq,
            template_id: template_id.to_string(),
            chapter,
            attempts,
            outcome: outcome.to_string(),
        });
    }

    pub fn graph_op(&mut self, op: &str, chapter: Option<usize>) {
        let seq = self.seq();
        self.events.push(RunEvent::GraphOp {
            seq,
            op: op.to_string(),
            chapter,
        });
    }

    pub fn marker(&mut self, kind: &str, chapter: Option<usize>) {
        let seq = self.seq();
        self.events.push(RunEvent::Marker {
            seq,
            kind: kind.to_string(),
            chapter,
        });
    }

    pub fn events(&self) -> &[RunEvent] {
        &self.events
    }

    pub fn llm_call_count(&self) -> usize {
        self.events
            .iter()
            .filter(|e| matches!(e, RunEvent::LlmCall { .. }))
            .count()
    }

    pub fn llm_calls_for_chapter(&self, chapter: usize) -> usize {
        self.events
            .iter()
            .filter(|e| matches!(e, RunEvent::LlmCall { chapter: Some(c), .. } if *c == chapter))
            .count()
    }

    pub fn graph_op_count(&self) -> usize {
        self.events
            .iter()
            .filter(|e| matches!(e, RunEvent::GraphOp { .. }))
            .count()
    }

    pub fn markers(&self, kind: &str) -> Vec<&RunEvent> {
        self.events
            .iter()
            .filter(|e| matches!(e, RunEvent::Marker { kind: k, .. } if k == kind))
            .collect()
    }

    pub fn write_jsonl<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        for event in &self.events {
            serde_json::to_writer(&mut w, event)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}
