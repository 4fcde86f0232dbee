//! The quantitative evaluation stack: text-diversity metrics, the
//! pairwise judge arena with position swap, bootstrap ranking
//! probabilities with Brier loss, Cohen's kappa, and prompt-dataset
//! loading.

pub mod arena;
pub mod dataset;
pub mod kappa;
pub mod report;
pub mod stats;
pub mod text;

pub use arena::{
    arena_score, judge_pair, parse_verdict, swap_aggregate, ArenaError, Dimension, PairOutcome,
    Round, SwapSummary, Verdict, Weighting,
};
pub use dataset::{
    load_prompt_dataset, parse_prompt_dataset, DatasetError, PromptDataset, PromptRecord,
    KNOWN_TAGS,
};
pub use kappa::{cohen_kappa, KappaError};
pub use report::{corpus_metrics, ArenaSection, CorpusSection, EvalReport, TextMetricsRow};
pub use stats::{
    bootstrap_scores, brier_loss, erf, normal_cdf, pairwise_probability, BootstrapStats,
    ProbabilityMode, StatsError,
};
pub use text::{
    corpus_stats, distinctl_n, distinctl_n_with, diverse_verbs, tokenize, CorpusStats, LogBase,
    TextMetricError, TokenizedText, VerbLexicon,
};
