use serde::{Deserialize, Serialize};

use super::opinions::MetricScoreTable;
use crate::error::{config, Result};
use crate::similarity::LossWeights;

/// Score fed to the model before any validation result exists.
pub const NEUTRAL_SCORE: f64 = 0.5;

/// Maps the metric scores onto the three similarity indices: shape from
/// DTW, time from TDI and space from RMSE (MSE when RMSE is absent), then
/// normalizes them to sum to one.
pub fn derive_loss_weights(scores: &MetricScoreTable) -> Result<LossWeights> {
    let need = |name: &str| {
        scores
            .get(name)
            .ok_or_else(|| config(format!("metric scores lack a {name} entry")))
    };
    let shape = need("DTW")?;
    let time = need("TDI")?;
    let space = scores
        .get("RMSE")
        .or_else(|| scores.get("MSE"))
        .ok_or_else(|| config("metric scores lack an RMSE or MSE entry"))?;
    let total = shape + time + space;
    if total <= 0.0 {
        return Err(config("index scores sum to zero"));
    }
    let shape = shape / total;
    let time = time / total;
    // Close the sum exactly.
    let space = 1.0 - shape - time;
    LossWeights::new(shape, time, space)
}

/// Validation values of the three similarity indices after one epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndexMetrics {
    pub soft_dtw: f64,
    pub tdi: f64,
    pub mse: f64,
}

/// Feedback score `s = Σ λ · 1 / (1 + max(metric, 0))` of the latest epoch,
/// or [`NEUTRAL_SCORE`] when nothing has been evaluated yet.
///
/// Soft-DTW can be negative for `γ > 0`, hence the clamp.
pub fn feedback_score(weights: LossWeights, history: &[IndexMetrics]) -> f64 {
    let Some(last) = history.last() else {
        return NEUTRAL_SCORE;
    };
    let q = |v: f64| 1.0 / (1.0 + v.max(0.0));
    weights.shape * q(last.soft_dtw) + weights.time * q(last.tdi) + weights.space * q(last.mse)
}

/// Constant feature channel carrying the feedback score.
pub fn score_channel(score: f64, len: usize) -> Vec<f64> {
    vec![score; len]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn equal_scores_give_equal_weights() {
        let t = MetricScoreTable(vec![("DTW".into(), 0.6), ("TDI".into(), 0.6), ("RMSE".into(), 0.6)]);
        let w = derive_loss_weights(&t).unwrap();
        assert_abs_diff_eq!(w.shape, 1.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w.time, 1.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w.space, 1.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn missing_index_is_a_config_error() {
        let t = MetricScoreTable(vec![("DTW".into(), 0.6), ("RMSE".into(), 0.6)]);
        assert_eq!(derive_loss_weights(&t).unwrap_err().class(), "config");
    }

    #[test]
    fn mse_substitutes_for_rmse() {
        let t = MetricScoreTable(vec![("DTW".into(), 0.5), ("TDI".into(), 0.25), ("MSE".into(), 0.25)]);
        let w = derive_loss_weights(&t).unwrap();
        assert_abs_diff_eq!(w.space, 0.25, epsilon = 1e-12);
    }

    #[test]
    fn feedback_examples() {
        let w = LossWeights::new(0.372, 0.306, 0.322).unwrap();
        assert_eq!(feedback_score(w, &[]), 0.5);
        let perfect = IndexMetrics { soft_dtw: 0.0, tdi: 0.0, mse: 0.0 };
        assert_abs_diff_eq!(feedback_score(w, &[perfect]), 1.0, epsilon = 1e-12);
        let m = IndexMetrics { soft_dtw: 1.0, tdi: 0.0, mse: 1.0 };
        assert_abs_diff_eq!(feedback_score(w, &[perfect, m]), 0.653, epsilon = 1e-12);
    }

    #[test]
    fn score_channel_broadcasts() {
        assert_eq!(score_channel(0.7, 40), vec![0.7; 40]);
    }
}
