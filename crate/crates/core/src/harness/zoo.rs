use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use crate::error::{config, Result};
use crate::nn::{CellKind, NetworkConfig};

/// Training objective of a zoo entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossKind {
    Mse,
    /// Composite shape/time/space loss with the per-epoch feedback score
    /// appended as an input channel.
    CompositeFeedback,
}

/// One model of the comparison.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelZooEntry {
    /// Position in the reference zoo; also selects the training RNG stream.
    pub id: u64,
    pub name: &'static str,
    pub cell: CellKind,
    pub bidirectional: bool,
    pub residual_head: bool,
    pub loss: LossKind,
}

impl ModelZooEntry {
    pub fn feedback(&self) -> bool {
        self.loss == LossKind::CompositeFeedback
    }

    /// Network for `n_features` selected channels under `cfg`.
    pub fn network_config(&self, cfg: &RunConfig, n_features: usize) -> NetworkConfig {
        NetworkConfig {
            input_dim: n_features + usize::from(self.feedback()),
            window_len: cfg.window.window_len,
            horizon: cfg.window.horizon,
            n_targets: cfg.forecast_targets,
            cell: self.cell,
            hidden_dim: cfg.hidden_dim,
            n_layers: cfg.n_layers,
            bidirectional: self.bidirectional,
            residual_head: self.residual_head,
            input_skip: self.residual_head,
            linear_dim: cfg.linear_dim,
            n_linear: cfg.n_linear,
            proj_dim: cfg.proj_dim,
            dropout_rate: cfg.dropout_rate,
            seed: cfg.seed,
        }
    }
}

const fn entry(
    id: u64,
    name: &'static str,
    cell: CellKind,
    bidirectional: bool,
    residual_head: bool,
    loss: LossKind,
) -> ModelZooEntry {
    ModelZooEntry {
        id,
        name,
        cell,
        bidirectional,
        residual_head,
        loss,
    }
}

/// The seven compared models.
pub const DEFAULT_ZOO: [ModelZooEntry; 7] = [
    entry(1, "RNN", CellKind::Elman, false, false, LossKind::Mse),
    entry(2, "LSTM", CellKind::Lstm, false, false, LossKind::Mse),
    entry(3, "BiLSTM", CellKind::Lstm, true, false, LossKind::Mse),
    entry(4, "Res-RNN", CellKind::Elman, false, true, LossKind::Mse),
    entry(5, "Res-LSTM", CellKind::Lstm, false, true, LossKind::Mse),
    entry(6, "Res-BiLSTM", CellKind::Lstm, true, true, LossKind::Mse),
    entry(7, "EFEM-BiLSTM", CellKind::Lstm, true, true, LossKind::CompositeFeedback),
];

/// Looks a model up by name, ignoring case.
pub fn zoo_entry(name: &str) -> Result<ModelZooEntry> {
    DEFAULT_ZOO
        .iter()
        .find(|e| e.name.eq_ignore_ascii_case(name))
        .cloned()
        .ok_or_else(|| {
            let names: Vec<&str> = DEFAULT_ZOO.iter().map(|e| e.name).collect();
            config(format!("unknown model {name:?}; expected one of {}", names.join(", ")))
        })
}

/// The configured subset of the zoo, in reference order.
pub fn select_zoo(names: &[String]) -> Result<Vec<ModelZooEntry>> {
    if names.is_empty() {
        return Ok(DEFAULT_ZOO.to_vec());
    }
    let mut picked: Vec<ModelZooEntry> = names.iter().map(|n| zoo_entry(n)).collect::<Result<_>>()?;
    picked.sort_by_key(|e| e.id);
    if picked.windows(2).any(|w| w[0].id == w[1].id) {
        return Err(config("zoo.models lists a model twice"));
    }
    Ok(picked)
}
