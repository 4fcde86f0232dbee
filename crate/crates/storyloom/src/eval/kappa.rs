//! Cohen's kappa: chance-corrected inter-annotator agreement,
//! kappa = (Po - Pe) / (1 - Pe).

use std::collections::BTreeMap;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum KappaError {
    #[error("label lists differ in length: {a} vs {b}")]
    LengthMismatch { a: usize, b: usize },
    #[error("label lists are empty")]
    EmptyInput,
}

/// Cohen's kappa over two equal-length label sequences.
///
/// Po is the observed agreement fraction; Pe sums the products of the two
/// raters' marginals per label. The degenerate total-agreement case where
/// both raters used a single identical label (Pe = 1) returns 1.0; the
/// marginal check runs in exact integer arithmetic so it never trips on
/// floating-point dust.
pub fn cohen_kappa<T: Ord>(labels_a: &[T], labels_b: &[T]) -> Result<f64, KappaError> {
    if labels_a.len() != labels_b.len() {
        return Err(KappaError::LengthMismatch {
            a: labels_a.len(),
            b: labels_b.len(),
        });
    }
    if labels_a.is_empty() {
        return Err(KappaError::EmptyInput);
    }
    let n = labels_a.len() as u128;
    let agreements = labels_a
        .iter()
        .zip(labels_b)
        .filter(|(a, b)| a == b)
        .count() as u128;

    let mut marginals_a: BTreeMap<&T, u128> = BTreeMap::new();
    let mut marginals_b: BTreeMap<&T, u128> = BTreeMap::new();
    for label in labels_a {
        *marginals_a.entry(label).or_insert(0) += 1;
    }
    for label in labels_b {
        *marginals_b.entry(label).or_insert(0) += 1;
    }
    // sum over labels of count_a * count_b, exact
    let chance_products: u128 = marginals_a
        .iter()
        .map(|(label, ca)| ca * marginals_b.get(label).copied().unwrap_or(0))
        .sum();

    if chance_products == n * n {
        // both raters constant on the same label; agreement is total
        return Ok(1.0);
    }
    let po = agreements as f64 / n as f64;
    let pe = chance_products as f64 / (n * n) as f64;
    Ok((po - pe) / (1.0 - pe))
}
