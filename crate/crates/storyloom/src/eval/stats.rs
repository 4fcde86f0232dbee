//! Bootstrap statistics, pairwise ranking probabilities, and the Brier
//! score loss over those predictions.
//!
//! Replicates are means of with-replacement resamples drawn from a seeded
//! ChaCha generator, so fixed seeds reproduce bit-identical statistics.
//! The ranking probability P(score_i < score_j) comes either from the
//! normal approximation Phi((mu_j - mu_i) / sqrt(var_i + var_j)) or
//! empirically from the replicate samples.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StatsError {
    #[error("bootstrap needs at least one replicate")]
    ZeroReplicates,
    #[error("bootstrap needs a non-empty score list")]
    EmptyScores,
    #[error("normal mode needs variance_i + variance_j > 0")]
    ZeroVariance,
    #[error("empirical mode needs equal sample counts, got {a} and {b}")]
    SampleLengthMismatch { a: usize, b: usize },
    #[error("probability and outcome lists differ in length: {a} vs {b}")]
    LengthMismatch { a: usize, b: usize },
    #[error("input lists must be non-empty")]
    EmptyInput,
}

/// Bootstrap replicate statistics for one system's per-prompt scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapStats {
    pub mean: f64,
    /// Population variance of the replicates.
    pub variance: f64,
    pub samples: Vec<f64>,
    pub b: usize,
    pub seed: u64,
}

/// Draws `b` bootstrap replicates; each is the mean of `scores.len()`
/// draws with replacement.
pub fn bootstrap_scores(scores: &[f64], b: usize, seed: u64) -> Result<BootstrapStats, StatsError> {
    if b == 0 {
        return Err(StatsError::ZeroReplicates);
    }
    if scores.is_empty() {
        return Err(StatsError::EmptyScores);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = scores.len();
    let mut samples = Vec::with_capacity(b);
    for _ in 0..b {
        let mut sum = 0.0f64;
        for _ in 0..n {
            sum += scores[rng.random_range(0..n)];
        }
        samples.push(sum / n as f64);
    }
    let mean = samples.iter().sum::<f64>() / b as f64;
    let variance = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / b as f64;
    Ok(BootstrapStats {
        mean,
        variance,
        samples,
        b,
        seed,
    })
}

/// Error function via its positive-term power series,
/// erf(x) = (2/sqrt(pi)) e^(-x^2) * sum_k (2x^2)^k x / (2k+1)!!,
/// summed to convergence; odd symmetry is applied by sign. Absolute error
/// is far below 1e-7 across the range the normal CDF needs.
pub fn erf(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let sign = x.signum();
    let x = x.abs();
    if x > 8.0 {
        return sign;
    }
    let two_pi_sqrt_inv = 2.0 / std::f64::consts::PI.sqrt();
    let mut term = x;
    let mut sum = x;
    let mut k = 0u32;
    loop {
        k += 1;
        term *= 2.0 * x * x / (2.0 * f64::from(k) + 1.0);
        let next = sum + term;
        if next == sum || k > 400 {
            break;
        }
        sum = next;
    }
    sign * (two_pi_sqrt_inv * (-x * x).exp() * sum).min(1.0)
}

/// Standard normal CDF. Exactly 0.5 at zero; Phi(x) + Phi(-x) == 1 in
/// floating point because erf is odd by construction.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 + 0.5 * erf(x / std::f64::consts::SQRT_2)
}

/// How [`pairwise_probability`] estimates P(score_i < score_j).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbabilityMode {
    Normal,
    Empirical,
}

/// Probability that system i scores below system j.
pub fn pairwise_probability(
    stats_i: &BootstrapStats,
    stats_j: &BootstrapStats,
    mode: ProbabilityMode,
) -> Result<f64, StatsError> {
    match mode {
        ProbabilityMode::Normal => {
            let var = stats_i.variance + stats_j.variance;
            if var <= 0.0 {
                return Err(StatsError::ZeroVariance);
            }
            Ok(normal_cdf((stats_j.mean - stats_i.mean) / var.sqrt()))
        }
        ProbabilityMode::Empirical => {
            if stats_i.samples.len() != stats_j.samples.len() {
                return Err(StatsError::SampleLengthMismatch {
                    a: stats_i.samples.len(),
                    b: stats_j.samples.len(),
                });
            }
            if stats_i.samples.is_empty() {
                return Err(StatsError::EmptyInput);
            }
            let below = stats_i
                .samples
                .iter()
                .zip(&stats_j.samples)
                .filter(|(a, b)| a < b)
                .count();
            Ok(below as f64 / stats_i.samples.len() as f64)
        }
    }
}

/// Mean squared error of probabilistic predictions against 0/1 outcomes.
pub fn brier_loss(probabilities: &[f64], outcomes: &[bool]) -> Result<f64, StatsError> {
    if probabilities.len() != outcomes.len() {
        return Err(StatsError::LengthMismatch {
            a: probabilities.len(),
            b: outcomes.len(),
        });
    }
    if probabilities.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    let sum: f64 = probabilities
        .iter()
        .zip(outcomes)
        .map(|(p, o)| {
            let target = if *o { 1.0 } else { 0.0 };
            (p - target).powi(2)
        })
        .sum();
    Ok(sum / probabilities.len() as f64)
}
