//! Plot nodes: subject-verb-object triplets with positional kinds.
//!
//! A [`Node`] is the atomic plot unit. Subject-verb pairs are normalized
//! into subject-verb-subject triplets so every node carries three fields.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NodeError {
    #[error("node subject is empty after trimming")]
    EmptySubject,
    #[error("node verb is empty after trimming")]
    EmptyVerb,
}

/// A subject-verb-object event triplet.
///
/// Construct via [`Node::normalize`]; the fields are private so the
/// invariants (non-empty subject/verb, non-empty object) always hold.
/// Equality and hashing cover the three text fields only, never the
/// `sv_normalized` flag: a normalized node and a genuinely reflexive
/// node with the same triplet compare equal.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "RawNode")]
pub struct Node {
    subject: String,
    verb: String,
    object: String,
    sv_normalized: bool,
}

#[derive(Deserialize)]
struct RawNode {
    subject: String,
    verb: String,
    object: String,
    #[serde(default)]
    sv_normalized: bool,
}

impl TryFrom<RawNode> for Node {
    type Error = NodeError;

    fn try_from(raw: RawNode) -> Result<Self, NodeError> {
        let node = Node::normalize(&raw.subject, &raw.verb, Some(&raw.object))?;
        // A serialized SVS node round-trips with its flag; reject a flag
        // that contradicts the triplet rather than silently clearing it.
        if raw.sv_normalized && node.object == node.subject {
            Ok(Node { sv_normalized: true, ..node })
        } else {
            Ok(node)
        }
    }
}

impl Node {
    /// Normalizes raw triplet strings into a [`Node`].
    ///
    /// Trims Unicode whitespace from every field. A missing or
    /// empty-after-trim object is replaced by the subject and the node is
    /// flagged `sv_normalized`. Interior whitespace is preserved, so
    /// compound entities like "Ethan and Lily" stay single entities.
    pub fn normalize(subject: &str, verb: &str, object: Option<&str>) -> Result<Self, NodeError> {
        let subject = subject.trim();
        if subject.is_empty() {
            return Err(NodeError::EmptySubject);
        }
        let verb = verb.trim();
        if verb.is_empty() {
            return Err(NodeError::EmptyVerb);
        }
        let object = object.map(str::trim).unwrap_or("");
        if object.is_empty() {
            Ok(Node {
                subject: subject.to_string(),
                verb: verb.to_string(),
                object: subject.to_string(),
                sv_normalized: true,
            })
        } else {
            Ok(Node {
                subject: subject.to_string(),
                verb: verb.to_string(),
                object: object.to_string(),
                sv_normalized: false,
            })
        }
    }

    pub fn subject(&self) -> &str {
        &self.subject
    }

    pub fn verb(&self) -> &str {
        &self.verb
    }

    pub fn object(&self) -> &str {
        &self.object
    }

    /// True when the object was copied from the subject during normalization.
    pub fn is_sv_normalized(&self) -> bool {
        self.sv_normalized
    }
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.subject == other.subject && self.verb == other.verb && self.object == other.object
    }
}

impl Eq for Node {}

impl std::hash::Hash for Node {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.subject.hash(state);
        self.verb.hash(state);
        self.object.hash(state);
    }
}

impl std::fmt::Display for Node {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} {} {}", self.subject, self.verb, self.object)
    }
}

/// Positional role of a node within a chapter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NodeKind {
    /// Chapter Begin Node: the start node of a chapter.
    CBN,
    /// Chapter Plot Node: drives the story forward within the chapter.
    CPN,
    /// Chapter End Node: the end node of a chapter.
    CEN,
}

impl std::fmt::Display for NodeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            NodeKind::CBN => "CBN",
            NodeKind::CPN => "CPN",
            NodeKind::CEN => "CEN",
        };
        f.write_str(s)
    }
}

/// Title and abstract for one planned chapter.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChapterPlan {
    /// 0-based chapter ordinal; contiguous within a project.
    pub index: usize,
    pub title: String,
    #[serde(rename = "abstract")]
    pub summary: String,
}

/// Result of checking a chapter's node-kind sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChapterShape {
    Valid,
    /// Index of the first node whose kind violates the CBN CPN* CEN shape.
    InvalidAt(usize),
}

impl ChapterShape {
    pub fn is_valid(&self) -> bool {
        matches!(self, ChapterShape::Valid)
    }
}

/// Checks that a chapter's kinds spell CBN CPN* CEN.
///
/// An empty list is valid (chapter not yet structured). A non-empty list
/// needs at least a begin and an end node; a single node can never satisfy
/// both roles, so it is reported at index 0.
pub fn validate_chapter_nodes(nodes: &[(Node, NodeKind)]) -> ChapterShape {
    let len = nodes.len();
    if len == 0 {
        return ChapterShape::Valid;
    }
    if len == 1 {
        return ChapterShape::InvalidAt(0);
    }
    for (i, (_, kind)) in nodes.iter().enumerate() {
        let expected = if i == 0 {
            NodeKind::CBN
        } else if i == len - 1 {
            NodeKind::CEN
        } else {
            NodeKind::CPN
        };
        if *kind != expected {
            return ChapterShape::InvalidAt(i);
        }
    }
    ChapterShape::Valid
}
