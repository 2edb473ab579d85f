use ndarray::{s, Array3, ArrayView3, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::zoo::{LossKind, ModelZooEntry};
use crate::error::{shape, Error, Result};
use crate::fuzzy::{feedback_score, IndexMetrics, NEUTRAL_SCORE};
use crate::nn::{adam_step, clip_grad_norm, AdamConfig, Checkpoint, DropoutMode, Network, RngState};
use crate::prep::WindowedDataset;
use crate::similarity::{composite_loss, mse_loss, soft_dtw_and_tdi, LossWeights};

/// Model facts stored alongside the weights in a checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub model: String,
    pub loss: LossKind,
    /// Feedback score fed as the extra input channel; `None` when the model
    /// has no such channel.
    pub score: Option<f64>,
    pub weights: LossWeights,
    pub gamma: f64,
    pub feature_indices: Vec<usize>,
    pub target_indices: Vec<usize>,
    pub epochs: usize,
}

impl ModelMeta {
    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        serde_json::from_value(ckpt.meta.clone())
            .map_err(|e| Error::Config(format!("checkpoint metadata: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_mse: f64,
    /// Soft-DTW and soft TDI on the validation split (feedback models).
    pub val_soft_dtw: Option<f64>,
    pub val_tdi: Option<f64>,
    /// Score channel value used during this epoch.
    pub score: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub entry: ModelZooEntry,
    pub checkpoint: Checkpoint,
    pub log: Vec<EpochLog>,
}

impl TrainedModel {
    pub fn meta(&self) -> ModelMeta {
        ModelMeta::from_checkpoint(&self.checkpoint).expect("written by train_model")
    }
}

/// Appends the feedback score as a constant input channel when `score` is
/// set; otherwise copies the inputs.
pub fn model_inputs(inputs: ArrayView3<f64>, score: Option<f64>) -> Array3<f64> {
    let Some(score) = score else {
        return inputs.to_owned();
    };
    let (b, l, d) = inputs.dim();
    let mut out = Array3::from_elem((b, l, d + 1), score);
    out.slice_mut(s![.., .., ..d]).assign(&inputs);
    out
}

/// Eval-mode forecasts in chunks of `batch` windows.
pub fn forecast(net: &Network, inputs: ArrayView3<f64>, score: Option<f64>, batch: usize) -> Result<Array3<f64>> {
    let n = inputs.len_of(Axis(0));
    let cfg = net.config();
    let mut out = Array3::zeros((n, cfg.horizon, cfg.n_targets));
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut start = 0;
    while start < n {
        let end = (start + batch.max(1)).min(n);
        let x = model_inputs(inputs.slice(s![start..end, .., ..]), score);
        let y = net.predict(x.view(), DropoutMode::Eval, &mut rng)?;
        out.slice_mut(s![start..end, .., ..]).assign(&y);
        start = end;
    }
    Ok(out)
}

/// Mean soft-DTW, soft TDI and MSE over every `(window, channel)` series.
pub fn index_metrics(y_hat: ArrayView3<f64>, y: ArrayView3<f64>, gamma: f64) -> Result<IndexMetrics> {
    if y_hat.dim() != y.dim() || y.is_empty() {
        return Err(shape("validation forecast and truth differ in shape"));
    }
    let (n, _, k) = y.dim();
    let (mut sd, mut td) = (0.0, 0.0);
    for b in 0..n {
        for c in 0..k {
            let p = y_hat.slice(s![b, .., c]).to_vec();
            let t = y.slice(s![b, .., c]).to_vec();
            let (a, tt) = soft_dtw_and_tdi(&p, &t, gamma)?;
            sd += a;
            td += tt;
        }
    }
    let series = (n * k) as f64;
    let mse = (&y_hat - &y).mapv(|v| v * v).mean().unwrap_or(0.0);
    Ok(IndexMetrics {
        soft_dtw: sd / series,
        tdi: td / series,
        mse,
    })
}

fn diverged(epoch: usize) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::Numeric(message) => Error::Training { epoch, message },
        other => other,
    }
}

/// Trains one zoo entry with mini-batch Adam. Feedback models get their
/// validation indices scored after every epoch; the score is the extra
/// input channel of the next epoch (0.5 before the first evaluation).
pub fn train_model(
    entry: &ModelZooEntry,
    train: &WindowedDataset,
    val: &WindowedDataset,
    cfg: &RunConfig,
    on_epoch: &mut dyn FnMut(&EpochLog),
) -> Result<TrainedModel> {
    cfg.validate()?;
    if train.is_empty() || val.is_empty() {
        return Err(shape("training and validation splits must contain windows"));
    }
    let n_features = train.inputs.len_of(Axis(2));
    let mut net = Network::new(entry.network_config(cfg, n_features))?;
    let weights = match entry.loss {
        LossKind::Mse => LossWeights::MSE_ONLY,
        LossKind::CompositeFeedback => cfg.loss_weights()?,
    };
    let adam = AdamConfig {
        lr: cfg.lr,
        weight_decay: cfg.weight_decay,
        ..Default::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(entry.id);

    let mut score = entry.feedback().then_some(NEUTRAL_SCORE);
    let mut history: Vec<IndexMetrics> = Vec::new();
    let mut log = Vec::with_capacity(cfg.epochs);
    let mut order: Vec<usize> = (0..train.len()).collect();
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let x = model_inputs(train.inputs.select(Axis(0), chunk).view(), score);
            let y = train.targets.select(Axis(0), chunk);
            let out = net
                .forward(x.view(), DropoutMode::Train, &mut rng)
                .map_err(diverged(epoch))?;
            let (loss, grad) = match entry.loss {
                LossKind::Mse => mse_loss(out.view(), y.view())?,
                LossKind::CompositeFeedback => composite_loss(out.view(), y.view(), weights, cfg.gamma)?,
            };
            if !loss.is_finite() {
                return Err(Error::Training {
                    epoch,
                    message: format!("loss became {loss}"),
                });
            }
            total += loss * chunk.len() as f64;
            net.backward(grad.view()).map_err(diverged(epoch))?;
            clip_grad_norm(net.params_mut(), cfg.clip_norm);
            adam_step(net.params_mut(), &adam).map_err(diverged(epoch))?;
        }

        let val_hat = forecast(&net, val.inputs.view(), score, cfg.batch_size).map_err(diverged(epoch))?;
        let mut record = EpochLog {
            epoch,
            train_loss: total / train.len() as f64,
            val_mse: 0.0,
            val_soft_dtw: None,
            val_tdi: None,
            score,
        };
        if entry.feedback() {
            let m = index_metrics(val_hat.view(), val.targets.view(), cfg.gamma)?;
            record.val_mse = m.mse;
            record.val_soft_dtw = Some(m.soft_dtw);
            record.val_tdi = Some(m.tdi);
            history.push(m);
            score = Some(feedback_score(weights, &history));
        } else {
            record.val_mse = mse_loss(val_hat.view(), val.targets.view())?.0;
        }
        if !record.val_mse.is_finite() {
            return Err(Error::Training {
                epoch,
                message: "validation error is not finite".into(),
            });
        }
        on_epoch(&record);
        log.push(record);
    }

    let meta = ModelMeta {
        model: entry.name.to_string(),
        loss: entry.loss,
        score,
        weights,
        gamma: cfg.gamma,
        feature_indices: train.feature_indices.clone(),
        target_indices: train.target_indices.clone(),
        epochs: cfg.epochs,
    };
    let checkpoint = Checkpoint {
        network: net,
        rng: Some(RngState::capture(&rng)),
        meta: serde_json::to_value(&meta).expect("metadata serialises"),
    };
    Ok(TrainedModel {
        entry: entry.clone(),
        checkpoint,
        log,
    })
}

/// Epoch log as CSV; missing values are left empty.
pub fn epoch_log_csv(log: &[EpochLog]) -> String {
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.8}")).unwrap_or_default();
    let mut out = String::from("epoch,train_loss,val_mse,val_soft_dtw,val_tdi,score\n");
    for r in log {
        out.push_str(&format!(
            "{},{:.8},{:.8},{},{},{}\n",
            r.epoch,
            r.train_loss,
            r.val_mse,
            opt(r.val_soft_dtw),
            opt(r.val_tdi),
            opt(r.score)
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array3;

    #[test]
    fn score_channel_is_appended_last() {
        let x = Array3::from_elem((2, 3, 2), 1.0);
        let y = model_inputs(x.view(), Some(0.5));
        assert_eq!(y.dim(), (2, 3, 3));
        assert!(y.slice(s![.., .., 2]).iter().all(|v| *v == 0.5));
        assert!(y.slice(s![.., .., ..2]).iter().all(|v| *v == 1.0));
        assert_eq!(model_inputs(x.view(), None), x);
    }

    #[test]
    fn perfect_forecast_has_zero_hard_indices() {
        let y = Array3::from_shape_fn((2, 5, 2), |(b, h, k)| (b + h * k) as f64);
        let m = index_metrics(y.view(), y.view(), 0.0).unwrap();
        assert_eq!((m.soft_dtw, m.tdi, m.mse), (0.0, 0.0, 0.0));
    }
}
