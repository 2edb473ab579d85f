use ndarray::{s, ArrayView3, Axis};
use serde::Serialize;

use super::train::{forecast, ModelMeta};
use crate::error::{shape, Result};
use crate::nn::Checkpoint;
use crate::prep::{NormStats, WindowedDataset};
use crate::similarity::{dtw_hard, pairwise_cost_1d, point_metrics, tdi, TdiMode};

/// The six reported metrics. MAPE is in percent of physical values; the
/// others are on standardized values.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct MetricRow {
    pub mse: f64,
    pub rmse: f64,
    pub mae: f64,
    pub mape: f64,
    pub dtw: f64,
    pub tdi: f64,
}

impl MetricRow {
    pub const HEADER: &'static str = "mse,rmse,mae,mape,dtw,tdi";

    fn mean(rows: &[MetricRow]) -> MetricRow {
        let n = rows.len() as f64;
        let sum = |f: fn(&MetricRow) -> f64| rows.iter().map(f).sum::<f64>() / n;
        MetricRow {
            mse: sum(|r| r.mse),
            rmse: sum(|r| r.rmse),
            mae: sum(|r| r.mae),
            mape: sum(|r| r.mape),
            dtw: sum(|r| r.dtw),
            tdi: sum(|r| r.tdi),
        }
    }

    pub fn csv_fields(&self) -> String {
        format!(
            "{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
            self.mse, self.rmse, self.mae, self.mape, self.dtw, self.tdi
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelMetrics {
    pub channel: String,
    pub metrics: MetricRow,
}

/// One model's test-split results: pooled (mean over forecast channels)
/// and per channel.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelReport {
    pub model: String,
    pub pooled: MetricRow,
    pub channels: Vec<ChannelMetrics>,
}

/// Scores forecasts against the truth. `targets[k]` is the channel of
/// `stats` for forecast channel `k`; `names[k]` labels it.
pub fn evaluate_forecasts(
    model: &str,
    y_hat: ArrayView3<f64>,
    y: ArrayView3<f64>,
    stats: &NormStats,
    targets: &[usize],
    names: &[String],
) -> Result<ModelReport> {
    if y_hat.dim() != y.dim() || y.is_empty() {
        return Err(shape(format!(
            "forecast shape {:?} does not match truth shape {:?}",
            y_hat.dim(),
            y.dim()
        )));
    }
    let (n, _, k) = y.dim();
    if targets.len() != k || names.len() != k {
        return Err(shape(format!("{k} forecast channels but {} target indices", targets.len())));
    }
    let mut channels = Vec::with_capacity(k);
    for c in 0..k {
        let p = y_hat.slice(s![.., .., c]);
        let t = y.slice(s![.., .., c]);
        let flat_p: Vec<f64> = p.iter().copied().collect();
        let flat_t: Vec<f64> = t.iter().copied().collect();
        let std_metrics = point_metrics(&flat_p, &flat_t)?;
        let (mu, sd) = (stats.mu[targets[c]], stats.sigma[targets[c]]);
        let phys_p: Vec<f64> = flat_p.iter().map(|v| mu + v * sd).collect();
        let phys_t: Vec<f64> = flat_t.iter().map(|v| mu + v * sd).collect();
        let mape = point_metrics(&phys_p, &phys_t)?.mape_percent;
        let (mut dtw_sum, mut tdi_sum) = (0.0, 0.0);
        for b in 0..n {
            let ps = p.index_axis(Axis(0), b).to_vec();
            let ts = t.index_axis(Axis(0), b).to_vec();
            dtw_sum += dtw_hard(&pairwise_cost_1d(&ps, &ts)).0;
            tdi_sum += tdi(&ps, &ts, 0.0, TdiMode::Hard)?;
        }
        channels.push(ChannelMetrics {
            channel: names[c].clone(),
            metrics: MetricRow {
                mse: std_metrics.mse,
                rmse: std_metrics.rmse,
                mae: std_metrics.mae,
                mape,
                dtw: dtw_sum / n as f64,
                tdi: tdi_sum / n as f64,
            },
        });
    }
    let rows: Vec<MetricRow> = channels.iter().map(|c| c.metrics).collect();
    Ok(ModelReport {
        model: model.to_string(),
        pooled: MetricRow::mean(&rows),
        channels,
    })
}

/// Eval-mode forecasts of a checkpoint on `test`, scored.
pub fn evaluate_model(checkpoint: &Checkpoint, test: &WindowedDataset, names: &[String]) -> Result<ModelReport> {
    let meta = ModelMeta::from_checkpoint(checkpoint)?;
    let cfg = checkpoint.network.config();
    let d = test.inputs.len_of(Axis(2)) + usize::from(meta.score.is_some());
    if d != cfg.input_dim
        || test.inputs.len_of(Axis(1)) != cfg.window_len
        || test.targets.len_of(Axis(1)) != cfg.horizon
        || test.targets.len_of(Axis(2)) != cfg.n_targets
        || meta.feature_indices != test.feature_indices
        || meta.target_indices != test.target_indices
    {
        return Err(shape(format!(
            "checkpoint of {} does not match the data: expects {} inputs over {} steps and {} × {} outputs",
            meta.model, cfg.input_dim, cfg.window_len, cfg.horizon, cfg.n_targets
        )));
    }
    let y_hat = forecast(&checkpoint.network, test.inputs.view(), meta.score, 64)?;
    evaluate_forecasts(
        &meta.model,
        y_hat.view(),
        test.targets.view(),
        &test.stats,
        &test.target_indices,
        names,
    )
}

/// Results of several models on the same data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub seed: u64,
    pub config_hash: String,
    /// Sorted by pooled MSE, ties by name.
    pub models: Vec<ModelReport>,
}

impl EvaluationReport {
    pub fn new(seed: u64, config_hash: String, mut models: Vec<ModelReport>) -> Self {
        models.sort_by(|a, b| {
            a.pooled
                .mse
                .total_cmp(&b.pooled.mse)
                .then_with(|| a.model.cmp(&b.model))
        });
        Self {
            seed,
            config_hash,
            models,
        }
    }

    pub fn get(&self, model: &str) -> Option<&ModelReport> {
        self.models.iter().find(|m| m.model == model)
    }

    /// Pooled metrics, one row per model.
    pub fn to_csv(&self) -> String {
        let mut out = format!("model,{}\n", MetricRow::HEADER);
        for m in &self.models {
            out.push_str(&format!("{},{}\n", m.model, m.pooled.csv_fields()));
        }
        out
    }

    pub fn channels_csv(&self) -> String {
        let mut out = format!("model,channel,{}\n", MetricRow::HEADER);
        for m in &self.models {
            for c in &m.channels {
                out.push_str(&format!("{},{},{}\n", m.model, c.channel, c.metrics.csv_fields()));
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialises");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array3;

    fn stats(k: usize) -> NormStats {
        NormStats {
            mu: vec![100.0; k],
            sigma: vec![2.0; k],
            flagged: vec![false; k],
        }
    }

    #[test]
    fn perfect_predictor_scores_zero() {
        let y = Array3::from_shape_fn((3, 6, 2), |(b, h, k)| ((b + h + k) as f64).sin());
        let names = vec!["a".to_string(), "b".to_string()];
        let r = evaluate_forecasts("oracle", y.view(), y.view(), &stats(2), &[0, 1], &names).unwrap();
        assert_eq!(r.pooled, MetricRow::default());
        assert_eq!(r.channels.len(), 2);
    }

    #[test]
    fn report_sorted_by_mse_then_name() {
        let row = |name: &str, mse: f64| ModelReport {
            model: name.into(),
            pooled: MetricRow {
                mse,
                ..Default::default()
            },
            channels: vec![],
        };
        let r = EvaluationReport::new(1, "h".into(), vec![row("b", 0.2), row("c", 0.1), row("a", 0.2)]);
        let names: Vec<&str> = r.models.iter().map(|m| m.model.as_str()).collect();
        assert_eq!(names, ["c", "a", "b"]);
        assert_eq!(r.to_csv().lines().next().unwrap(), "model,mse,rmse,mae,mape,dtw,tdi");
        assert_eq!(r.to_csv().lines().count(), 4);
    }
}
