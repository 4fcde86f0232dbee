//! The evaluation report: one JSON document plus a plain-text table.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::arena::{PairOutcome, SwapSummary, Weighting};
use super::stats::BootstrapStats;
use super::text::{
    corpus_stats, distinctl_n_with, diverse_verbs, tokenize, LogBase, TextMetricError, VerbLexicon,
};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Diversity metrics for one text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextMetricsRow {
    pub name: String,
    pub word_count: usize,
    /// DistinctL-n per requested n; `null` when the text is too short.
    pub distinctl: BTreeMap<usize, Option<f64>>,
    pub diverse_verbs: f64,
}

/// Corpus-level aggregates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSection {
    pub texts: usize,
    pub avg_word_count: f64,
    /// Mean DistinctL-n over the texts long enough for each n.
    pub mean_distinctl: BTreeMap<usize, Option<f64>>,
    pub mean_diverse_verbs: f64,
}

/// Arena results for one dimension, including the optional bootstrap and
/// Brier extensions when ground truth was supplied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArenaSection {
    pub summary: SwapSummary,
    pub weighting: Weighting,
    pub score: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bootstrap: Option<BootstrapStats>,
    /// P(system score < baseline anchor) from the bootstrap distribution.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_below_baseline: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ground_truth_below: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub brier: Option<f64>,
}

/// The one evaluation output document. Sections are present when the
/// command that produced the report computed them.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: u32,
    /// Resolved configuration, echoed for reproducibility audits.
    pub config: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub per_text: Vec<TextMetricsRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corpus: Option<CorpusSection>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub arena: BTreeMap<String, ArenaSection>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub verdicts: Vec<PairOutcome>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
}

impl EvalReport {
    pub fn new(config: BTreeMap<String, String>) -> Self {
        EvalReport {
            schema_version: REPORT_SCHEMA_VERSION,
            config,
            ..EvalReport::default()
        }
    }

    pub fn to_json_string(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("report serializes");
        out.push('\n');
        out
    }

    /// Human-readable summary table.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        if let Some(corpus) = &self.corpus {
            out.push_str(&format!(
                "corpus: {} texts, avg word count {:.1}\n",
                corpus.texts, corpus.avg_word_count
            ));
            out.push_str("text                     words");
            for n in corpus.mean_distinctl.keys() {
                out.push_str(&format!("  DistinctL-{n}"));
            }
            out.push_str("  DiverseVerbs\n");
            for row in &self.per_text {
                out.push_str(&format!("{:<24} {:>5}", clip(&row.name, 24), row.word_count));
                for value in row.distinctl.values() {
                    match value {
                        Some(v) => out.push_str(&format!("  {v:>11.4}")),
                        None => out.push_str(&format!("  {:>11}", "-")),
                    }
                }
                out.push_str(&format!("  {:>12.4}\n", row.diverse_verbs));
            }
            out.push_str(&format!("{:<24} {:>5}", "(mean)", ""));
            for value in corpus.mean_distinctl.values() {
                match value {
                    Some(v) => out.push_str(&format!("  {v:>11.4}")),
                    None => out.push_str(&format!("  {:>11}", "-")),
                }
            }
            out.push_str(&format!("  {:>12.4}\n", corpus.mean_diverse_verbs));
        }
        for (dimension, section) in &self.arena {
            out.push_str(&format!(
                "{dimension}: score {:.1}  (wins {} / ties {} / losses {}, win rate {:.3})\n",
                section.score,
                section.summary.wins_a,
                section.summary.ties,
                section.summary.wins_b,
                section.summary.win_rate_a,
            ));
            if let Some(p) = section.p_below_baseline {
                out.push_str(&format!("  P(score < baseline) = {p:.4}\n"));
            }
            if let Some(brier) = section.brier {
                out.push_str(&format!("  Brier loss = {brier:.4}\n"));
            }
            if !section.summary.incomplete.is_empty() {
                out.push_str(&format!(
                    "  incomplete pairs: {}\n",
                    section.summary.incomplete.len()
                ));
            }
        }
        if let Some(kappa) = self.kappa {
            out.push_str(&format!("cohen_kappa: {kappa:.4}\n"));
        }
        out
    }
}

fn clip(s: &str, max: usize) -> String {
    if s.chars().count() <= max {
        s.to_string()
    } else {
        s.chars().take(max - 1).collect::<String>() + "…"
    }
}

/// Computes per-text and corpus diversity metrics for named texts.
pub fn corpus_metrics(
    texts: &[(String, String)],
    ns: &[usize],
    lexicon: &VerbLexicon,
    base: LogBase,
) -> Result<(Vec<TextMetricsRow>, CorpusSection), TextMetricError> {
    if texts.is_empty() {
        return Err(TextMetricError::EmptyCorpus);
    }
    let mut rows = Vec::with_capacity(texts.len());
    for (name, text) in texts {
        let tokens = tokenize(text);
        let mut distinctl = BTreeMap::new();
        for &n in ns {
            distinctl.insert(n, distinctl_n_with(&tokens, n, base).ok());
        }
        rows.push(TextMetricsRow {
            name: name.clone(),
            word_count: tokens.word_count,
            diverse_verbs: diverse_verbs(&tokens, lexicon),
            distinctl,
        });
    }
    let counts: Vec<usize> = rows.iter().map(|r| r.word_count).collect();
    let stats = corpus_stats(&counts)?;
    let mut mean_distinctl = BTreeMap::new();
    for &n in ns {
        let values: Vec<f64> = rows
            .iter()
            .filter_map(|r| r.distinctl.get(&n).copied().flatten())
            .collect();
        let mean = if values.is_empty() {
            None
        } else {
            Some(values.iter().sum::<f64>() / values.len() as f64)
        };
        mean_distinctl.insert(n, mean);
    }
    let mean_diverse_verbs =
        rows.iter().map(|r| r.diverse_verbs).sum::<f64>() / rows.len() as f64;
    Ok((
        rows,
        CorpusSection {
            texts: texts.len(),
            avg_word_count: stats.avg_word_count,
            mean_distinctl,
            mean_diverse_verbs,
        },
    ))
}
