//! Append-only chronological record of generated plot nodes.
//!
//! Every appended node receives a `time_stamp` from a logical counter,
//! never wall-clock time, so runs replay identically. History is never
//! rewritten; revisions show up as new entries plus review records.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::node::{Node, NodeKind};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StorylineError {
    #[error("chapter index went backwards: last entry at chapter {last}, append requested chapter {requested}")]
    OutOfOrderChapter { last: usize, requested: usize },
}

/// One timestamped plot node in the storyline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StorylineEntry {
    /// Strictly positive, globally unique, monotone in append order.
    pub time_stamp: u64,
    pub chapter_index: usize,
    pub node: Node,
    pub kind: NodeKind,
}

/// The full chronological plot record.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Storyline {
    entries: Vec<StorylineEntry>,
    next_stamp: u64,
}

impl Storyline {
    pub fn new() -> Self {
        Storyline { entries: Vec::new(), next_stamp: 1 }
    }

    /// Appends a node, issuing the next time_stamp.
    ///
    /// Chapter indices must be non-decreasing across appends; there is no
    /// retroactive insertion.
    pub fn append(
        &mut self,
        node: Node,
        kind: NodeKind,
        chapter_index: usize,
    ) -> Result<&StorylineEntry, StorylineError> {
        if let Some(last) = self.entries.last() {
            if chapter_index < last.chapter_index {
                return Err(StorylineError::OutOfOrderChapter {
                    last: last.chapter_index,
                    requested: chapter_index,
                });
            }
        }
        let entry = StorylineEntry {
            time_stamp: self.next_stamp,
            chapter_index,
            node,
            kind,
        };
        self.next_stamp += 1;
        self.entries.push(entry);
        Ok(self.entries.last().expect("just pushed"))
    }

    pub fn entries(&self) -> &[StorylineEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// All entries for one chapter, in time_stamp order.
    pub fn entries_for_chapter(&self, chapter_index: usize) -> Vec<&StorylineEntry> {
        self.entries
            .iter()
            .filter(|e| e.chapter_index == chapter_index)
            .collect()
    }

    /// The `k` most recent entries, ascending by time_stamp.
    pub fn latest(&self, k: usize) -> &[StorylineEntry] {
        let start = self.entries.len().saturating_sub(k);
        &self.entries[start..]
    }

    /// Rebuilds a storyline from persisted entries (e.g. a project file).
    pub fn from_entries(entries: Vec<StorylineEntry>) -> Self {
        let next_stamp = entries.iter().map(|e| e.time_stamp).max().unwrap_or(0) + 1;
        Storyline { entries, next_stamp }
    }

    /// Writes one JSON record per line, for standalone inspection.
    pub fn write_jsonl<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        for entry in &self.entries {
            serde_json::to_writer(&mut w, entry)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn node(tag: usize) -> Node {
        Node::normalize(&format!("s{tag}"), "act", Some(&format!("o{tag}"))).unwrap()
    }

    #[test]
    fn first_append_gets_stamp_one() {
        let mut line = Storyline::new();
        let entry = line.append(node(0), NodeKind::CBN, 0).unwrap();
        assert_eq!(entry.time_stamp, 1);
    }

    #[test]
    fn stamps_are_consecutive() {
        let mut line = Storyline::new();
        for i in 0..3 {
            line.append(node(i), NodeKind::CPN, 0).unwrap();
        }
        let stamps: Vec<u64> = line.entries().iter().map(|e| e.time_stamp).collect();
        assert_eq!(stamps, vec![1, 2, 3]);
    }

    #[test]
    fn chapter_index_cannot_decrease() {
        let mut line = Storyline::new();
        line.append(node(0), NodeKind::CBN, 2).unwrap();
        let err = line.append(node(1), NodeKind::CBN, 0).unwrap_err();
        assert_eq!(err, StorylineError::OutOfOrderChapter { last: 2, requested: 0 });
    }

    #[test]
    fn entries_for_chapter_basic() {
        let mut line = Storyline::new();
        assert!(line.entries_for_chapter(3).is_empty());
        line.append(node(0), NodeKind::CBN, 0).unwrap();
        line.append(node(1), NodeKind::CEN, 0).unwrap();
        line.append(node(2), NodeKind::CBN, 1).unwrap();
        let ch0: Vec<u64> = line.entries_for_chapter(0).iter().map(|e| e.time_stamp).collect();
        assert_eq!(ch0, vec![1, 2]);
    }

    #[test]
    fn latest_clamps_to_store_size() {
        let mut line = Storyline::new();
        assert!(line.latest(0).is_empty());
        for i in 0..3 {
            line.append(node(i), NodeKind::CPN, 0).unwrap();
        }
        assert!(line.latest(0).is_empty());
        assert_eq!(line.latest(5).len(), 3);
        let last_two: Vec<u64> = line.latest(2).iter().map(|e| e.time_stamp).collect();
        assert_eq!(last_two, vec![2, 3]);
    }

    #[test]
    fn jsonl_export_one_line_per_entry() {
        let mut line = Storyline::new();
        line.append(node(0), NodeKind::CBN, 0).unwrap();
        line.append(node(1), NodeKind::CEN, 0).unwrap();
        let mut buf = Vec::new();
        line.write_jsonl(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2);
        let first: StorylineEntry = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(first.time_stamp, 1);
    }

    proptest! {
        #[test]
        fn stamps_cover_one_to_n(chapters in proptest::collection::vec(0usize..5, 1..60)) {
            let mut sorted = chapters.clone();
            sorted.sort_unstable();
            let mut line = Storyline::new();
            for (i, ch) in sorted.iter().enumerate() {
                let entry = line.append(node(i), NodeKind::CPN, *ch).unwrap();
                prop_assert_eq!(entry.time_stamp, (i + 1) as u64);
            }
            let stamps: Vec<u64> = line.entries().iter().map(|e| e.time_stamp).collect();
            let expected: Vec<u64> = (1..=sorted.len() as u64).collect();
            prop_assert_eq!(stamps, expected);
        }

        #[test]
        fn chapter_filter_matches_linear_scan(chapters in proptest::collection::vec(0usize..4, 0..50), query in 0usize..4) {
            let mut sorted = chapters.clone();
            sorted.sort_unstable();
            let mut line = Storyline::new();
            for (i, ch) in sorted.iter().enumerate() {
                line.append(node(i), NodeKind::CPN, *ch).unwrap();
            }
            let got: Vec<u64> = line.entries_for_chapter(query).iter().map(|e| e.time_stamp).collect();
            let oracle: Vec<u64> = line
                .entries()
                .iter()
                .filter(|e| e.chapter_index == query)
                .map(|e| e.time_stamp)
                .collect();
            prop_assert_eq!(got, oracle);
        }

        #[test]
        fn latest_matches_sort_and_slice(count in 0usize..100, k in 0usize..20) {
            let mut line = Storyline::new();
            for i in 0..count {
                line.append(node(i), NodeKind::CPN, 0).unwrap();
            }
            let got: Vec<u64> = line.latest(k).iter().map(|e| e.time_stamp).collect();
            let mut all: Vec<u64> = line.entries().iter().map(|e| e.time_stamp).collect();
            all.sort_unstable();
            let oracle: Vec<u64> = all.iter().rev().take(k).rev().copied().collect();
            prop_assert_eq!(got, oracle);
        }

        #[test]
        fn chapter_partition_reconstructs_store(chapters in proptest::collection::vec(0usize..4, 0..50)) {
            let mut sorted = chapters.clone();
            sorted.sort_unstable();
            let mut line = Storyline::new();
            for (i, ch) in sorted.iter().enumerate() {
                line.append(node(i), NodeKind::CPN, *ch).unwrap();
            }
            let mut rebuilt: Vec<u64> = Vec::new();
            for ch in 0..4 {
                rebuilt.extend(line.entries_for_chapter(ch).iter().map(|e| e.time_stamp));
            }
            let full: Vec<u64> = line.entries().iter().map(|e| e.time_stamp).collect();
            prop_assert_eq!(rebuilt, full);
        }
    }
}
