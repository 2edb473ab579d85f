use super::number::{defuzzify_centroid, pairwise_similarity, TrapezoidalFuzzyNumber};
use crate::error::{config, Result};

/// Mix between expert weight and relative agreement in the consensus
/// coefficient.
pub const DEFAULT_BETA: f64 = 0.5;

/// Similarity aggregation of one metric's opinions with [`DEFAULT_BETA`].
pub fn sam_aggregate(
    opinions: &[TrapezoidalFuzzyNumber],
    weights: &[f64],
) -> Result<(TrapezoidalFuzzyNumber, f64)> {
    sam_aggregate_with_beta(opinions, weights, DEFAULT_BETA)
}

/// Similarity aggregation method:
///
/// 1. average agreement `AA_u` = mean of `S(R_u, R_v)` over the other experts,
/// 2. relative agreement `RA_u = AA_u / Σ AA`,
/// 3. consensus coefficient `CC_u = β w_u + (1 - β) RA_u`,
/// 4. aggregate `R = Σ CC_u R_u`, scored by its centroid.
pub fn sam_aggregate_with_beta(
    opinions: &[TrapezoidalFuzzyNumber],
    weights: &[f64],
    beta: f64,
) -> Result<(TrapezoidalFuzzyNumber, f64)> {
    if opinions.is_empty() || opinions.len() != weights.len() {
        return Err(config(format!(
            "need one weight per opinion, got {} opinions and {} weights",
            opinions.len(),
            weights.len()
        )));
    }
    if !(0.0..=1.0).contains(&beta) {
        return Err(config(format!("beta must lie in [0, 1], got {beta}")));
    }
    if opinions.len() == 1 {
        return Ok((opinions[0], defuzzify_centroid(&opinions[0])));
    }
    let n = opinions.len();
    let average_agreement: Vec<f64> = (0..n)
        .map(|u| {
            let total: f64 = (0..n)
                .filter(|&v| v != u)
                .map(|v| pairwise_similarity(&opinions[u], &opinions[v]))
                .sum();
            total / (n - 1) as f64
        })
        .collect();
    let aa_total: f64 = average_agreement.iter().sum();
    let consensus: Vec<f64> = average_agreement
        .iter()
        .zip(weights)
        .map(|(aa, w)| {
            // With total disagreement every AA is zero; fall back to uniform.
            let ra = if aa_total > 0.0 { aa / aa_total } else { 1.0 / n as f64 };
            beta * w + (1.0 - beta) * ra
        })
        .collect();
    let aggregate = TrapezoidalFuzzyNumber::convex_combination(opinions, &consensus);
    Ok((aggregate, defuzzify_centroid(&aggregate)))
}
