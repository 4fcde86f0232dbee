//! The persisted unit of work: one story project file.
//!
//! The JSON schema is stable and documented in the book's persistence
//! chapter. Kinds serialize as the strings "CBN"/"CPN"/"CEN"; the
//! `abstract` field name is kept in JSON even though the Rust field is
//! `summary`. Serialization is deterministic so reruns of a scripted
//! pipeline produce byte-identical files.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::node::{validate_chapter_nodes, ChapterPlan, ChapterShape, Node, NodeKind};
use crate::pipeline::PipelineConfig;
use crate::review::ReviewRecord;
use crate::storyline::StorylineEntry;

pub const PROJECT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ProjectError {
    #[error("cannot read or write project file: {0}")]
    Io(#[from] std::io::Error),
    #[error("project file is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("project file violates an invariant: {0}")]
    Invalid(String),
}

/// One node of a chapter, with its positional kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChapterNode {
    pub node: Node,
    pub kind: NodeKind,
}

/// Premise, plans, nodes, text, and audit trail for one story.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoryProject {
    pub schema_version: u32,
    pub user_input: String,
    pub premise: String,
    pub synopsis: String,
    pub chapters: Vec<ChapterPlan>,
    /// Per chapter, the ordered node list; empty until stage 2 ran.
    pub chapter_nodes: Vec<Vec<ChapterNode>>,
    /// Per chapter, the prose block; `null` until stage 3 ran.
    pub text_blocks: Vec<Option<String>>,
    pub review_log: Vec<ReviewRecord>,
    /// Flat timestamped record of every node, in generation order.
    pub storyline: Vec<StorylineEntry>,
    pub config_snapshot: PipelineConfig,
}

impl StoryProject {
    pub fn new(user_input: &str, config: PipelineConfig) -> Self {
        StoryProject {
            schema_version: PROJECT_SCHEMA_VERSION,
            user_input: user_input.to_string(),
            premise: String::new(),
            synopsis: String::new(),
            chapters: Vec::new(),
            chapter_nodes: Vec::new(),
            text_blocks: Vec::new(),
            review_log: Vec::new(),
            storyline: Vec::new(),
            config_snapshot: config,
        }
    }

    /// Checks the structural invariants of a complete or partial project.
    pub fn validate(&self) -> Result<(), ProjectError> {
        for (i, plan) in self.chapters.iter().enumerate() {
            if plan.index != i {
                return Err(ProjectError::Invalid(format!(
                    "chapter at position {i} carries index {}",
                    plan.index
                )));
            }
            if plan.title.trim().is_empty() || plan.summary.trim().is_empty() {
                return Err(ProjectError::Invalid(format!(
                    "chapter {i} has an empty title or abstract"
                )));
            }
        }
        if !self.chapters.is_empty() {
            if self.chapter_nodes.len() != self.chapters.len() {
                return Err(ProjectError::Invalid(format!(
                    "chapter_nodes has {} entries for {} chapters",
                    self.chapter_nodes.len(),
                    self.chapters.len()
                )));
            }
            if self.text_blocks.len() != self.chapters.len() {
                return Err(ProjectError::Invalid(format!(
                    "text_blocks has {} entries for {} chapters",
                    self.text_blocks.len(),
                    self.chapters.len()
                )));
            }
        }
        for (i, nodes) in self.chapter_nodes.iter().enumerate() {
            let pairs: Vec<(Node, NodeKind)> =
                nodes.iter().map(|cn| (cn.node.clone(), cn.kind)).collect();
            if let ChapterShape::InvalidAt(at) = validate_chapter_nodes(&pairs) {
                return Err(ProjectError::Invalid(format!(
                    "chapter {i} node sequence violates CBN CPN* CEN at position {at}"
                )));
            }
        }
        let mut last_stamp = 0u64;
        let mut last_chapter = 0usize;
        for entry in &self.storyline {
            if entry.time_stamp <= last_stamp {
                return Err(ProjectError::Invalid(format!(
                    "storyline stamps not strictly increasing at {}",
                    entry.time_stamp
                )));
            }
            if entry.chapter_index < last_chapter {
                return Err(ProjectError::Invalid(format!(
                    "storyline chapter index decreases at stamp {}",
                    entry.time_stamp
                )));
            }
            last_stamp = entry.time_stamp;
            last_chapter = entry.chapter_index;
        }
        Ok(())
    }

    /// Deterministic pretty JSON with a trailing newline.
    pub fn to_json_string(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("project serializes");
        out.push('\n');
        out
    }

    pub fn from_json_str(text: &str) -> Result<Self, ProjectError> {
        let project: StoryProject = serde_json::from_str(text)?;
        project.validate()?;
        Ok(project)
    }

    pub fn save(&self, path: &Path) -> Result<(), ProjectError> {
        std::fs::write(path, self.to_json_string())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ProjectError> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    /// Word counts over the written text blocks, whitespace-separated.
    pub fn block_word_counts(&self) -> Vec<usize> {
        self.text_blocks
            .iter()
            .flatten()
            .map(|b| b.split_whitespace().count())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn node(s: &str, v: &str, o: &str) -> Node {
        Node::normalize(s, v, Some(o)).unwrap()
    }

    fn sample() -> StoryProject {
        let mut project = StoryProject::new("a prompt", PipelineConfig::default());
        project.premise = "premise".into();
        project.synopsis = "synopsis".into();
        project.chapters = vec![ChapterPlan {
            index: 0,
            title: "One".into(),
            summary: "Things happen.".into(),
        }];
        project.chapter_nodes = vec![vec![
            ChapterNode { node: node("Ethan", "return", "town"), kind: NodeKind::CBN },
            ChapterNode { node: node("Ethan", "meet", "Lily"), kind: NodeKind::CEN },
        ]];
        project.text_blocks = vec![Some("Ethan came home.".into())];
        project.storyline = vec![
            StorylineEntry {
                time_stamp: 1,
                chapter_index: 0,
                node: node("Ethan", "return", "town"),
                kind: NodeKind::CBN,
            },
            StorylineEntry {
                time_stamp: 2,
                chapter_index: 0,
                node: node("Ethan", "meet", "Lily"),
                kind: NodeKind::CEN,
            },
        ];
        project
    }

    #[test]
    fn round_trip_is_lossless_and_stable() {
        let project = sample();
        let json = project.to_json_string();
        let back = StoryProject::from_json_str(&json).unwrap();
        assert_eq!(back, project);
        assert_eq!(back.to_json_string(), json);
    }

    #[test]
    fn kinds_serialize_as_strings() {
        let json = sample().to_json_string();
        assert!(json.contains("\"kind\": \"CBN\""));
        assert!(json.contains("\"kind\": \"CEN\""));
        assert!(json.contains("\"abstract\": \"Things happen.\""));
    }

    #[test]
    fn validate_rejects_bad_chapter_shape() {
        let mut project = sample();
        project.chapter_nodes[0].remove(0);
        let err = project.validate().unwrap_err();
        assert!(err.to_string().contains("CBN CPN* CEN"));
    }

    #[test]
    fn validate_rejects_noncontiguous_indices() {
        let mut project = sample();
        project.chapters[0].index = 3;
        assert!(project.validate().is_err());
    }

    #[test]
    fn validate_rejects_decreasing_stamps() {
        let mut project = sample();
        project.storyline[1].time_stamp = 1;
        assert!(project.validate().is_err());
    }
}
