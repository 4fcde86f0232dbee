//! Review records produced by the plot-node review loop.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::node::Node;

/// The closed taxonomy of plot-node modifications.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ReviewType {
    #[serde(rename = "Theme Enhancement")]
    ThemeEnhancement,
    #[serde(rename = "Logic Adjustment")]
    LogicAdjustment,
    #[serde(rename = "Emotion Deepening")]
    EmotionDeepening,
    #[serde(rename = "Mystery Enhancement")]
    MysteryEnhancement,
    #[serde(rename = "Plot Resolution")]
    PlotResolution,
    #[serde(rename = "Language Optimization")]
    LanguageOptimization,
    #[serde(rename = "Redundancy Optimization")]
    RedundancyOptimization,
}

impl ReviewType {
    pub const ALL: [ReviewType; 7] = [
        ReviewType::ThemeEnhancement,
        ReviewType::LogicAdjustment,
        ReviewType::EmotionDeepening,
        ReviewType::MysteryEnhancement,
        ReviewType::PlotResolution,
        ReviewType::LanguageOptimization,
        ReviewType::RedundancyOptimization,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            ReviewType::ThemeEnhancement => "Theme Enhancement",
            ReviewType::LogicAdjustment => "Logic Adjustment",
            ReviewType::EmotionDeepening => "Emotion Deepening",
            ReviewType::MysteryEnhancement => "Mystery Enhancement",
            ReviewType::PlotResolution => "Plot Resolution",
            ReviewType::LanguageOptimization => "Language Optimization",
            ReviewType::RedundancyOptimization => "Redundancy Optimization",
        }
    }
}

impl std::fmt::Display for ReviewType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for ReviewType {
    type Err = String;

    /// Accepts the canonical label, tolerating case and spacing.
    fn from_str(s: &str) -> Result<Self, String> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .map(|c| c.to_ascii_lowercase())
            .collect();
        ReviewType::ALL
            .into_iter()
            .find(|t| {
                t.label()
                    .chars()
                    .filter(|c| c.is_ascii_alphanumeric())
                    .map(|c| c.to_ascii_lowercase())
                    .collect::<String>()
                    == key
            })
            .ok_or_else(|| format!("unknown review type {s:?}"))
    }
}

/// Whether a reviewed pseudo node was kept or replaced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReviewOutcome {
    Accepted,
    Modified {
        #[serde(rename = "final")]
        final_node: Node,
    },
}

/// One review-loop event: the pseudo node and what became of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawReviewRecord")]
pub struct ReviewRecord {
    pub chapter_index: usize,
    pub pseudo: Node,
    pub outcome: ReviewOutcome,
    /// Present exactly when the outcome is `Modified`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub review_type: Option<ReviewType>,
    pub explanation: String,
}

#[derive(Deserialize)]
struct RawReviewRecord {
    chapter_index: usize,
    pseudo: Node,
    outcome: ReviewOutcome,
    #[serde(default)]
    review_type: Option<ReviewType>,
    #[serde(default)]
    explanation: String,
}

impl TryFrom<RawReviewRecord> for ReviewRecord {
    type Error = String;

    fn try_from(raw: RawReviewRecord) -> Result<Self, String> {
        let modified = matches!(raw.outcome, ReviewOutcome::Modified { .. });
        if modified != raw.review_type.is_some() {
            return Err("review_type must be present exactly when the outcome is modified".into());
        }
        Ok(ReviewRecord {
            chapter_index: raw.chapter_index,
            pseudo: raw.pseudo,
            outcome: raw.outcome,
            review_type: raw.review_type,
            explanation: raw.explanation,
        })
    }
}

impl ReviewRecord {
    pub fn accepted(chapter_index: usize, pseudo: Node) -> Self {
        ReviewRecord {
            chapter_index,
            pseudo,
            outcome: ReviewOutcome::Accepted,
            review_type: None,
            explanation: String::new(),
        }
    }

    pub fn modified(
        chapter_index: usize,
        pseudo: Node,
        final_node: Node,
        review_type: ReviewType,
        explanation: String,
    ) -> Self {
        ReviewRecord {
            chapter_index,
            pseudo,
            outcome: ReviewOutcome::Modified { final_node },
            review_type: Some(review_type),
            explanation,
        }
    }

    /// The node that actually entered the chapter.
    pub fn final_node(&self) -> &Node {
        match &self.outcome {
            ReviewOutcome::Accepted => &self.pseudo,
            ReviewOutcome::Modified { final_node } => final_node,
        }
    }
}

/// Proportion of each review type among `Modified` records.
///
/// Counts only modifications; proportions sum to 1 when any exist and are
/// all zero otherwise.
pub fn review_type_stats<'a, I>(records: I) -> BTreeMap<ReviewType, f64>
where
    I: IntoIterator<Item = &'a ReviewRecord>,
{
    let mut counts: BTreeMap<ReviewType, u64> =
        ReviewType::ALL.into_iter().map(|t| (t, 0)).collect();
    let mut total = 0u64;
    for record in records {
        if let Some(t) = record.review_type {
            *counts.get_mut(&t).expect("all types present") += 1;
            total += 1;
        }
    }
    counts
        .into_iter()
        .map(|(t, c)| {
            let p = if total == 0 { 0.0 } else { c as f64 / total as f64 };
            (t, p)
        })
        .collect()
}
