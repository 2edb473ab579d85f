//! Flat `section.key = value` run configuration.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{config, Error, Result};
use crate::fuzzy::{derive_loss_weights, OpinionMatrix};
use crate::prep::{WindowConfig, DEFAULT_THRESHOLD};
use crate::scenario::{default_break_sizes, ScenarioConfig};
use crate::similarity::{LossWeights, DEFAULT_GAMMA};

/// Where the composite-loss weights come from.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightSource {
    /// Built-in reference expert panel.
    ReferencePanel,
    /// Expert opinion file evaluated with the fuzzy pipeline.
    Opinions(PathBuf),
    Explicit(LossWeights),
}

/// Every setting of a run. Defaults describe the full-size experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub scenario: ScenarioConfig,
    pub break_sizes: Vec<f64>,
    pub select_threshold: f64,
    pub window: WindowConfig,
    /// How many of the scenario's target channels are forecast, taken in
    /// order.
    pub forecast_targets: usize,
    pub split_ratio: (usize, usize, usize),
    pub hidden_dim: usize,
    pub n_layers: usize,
    pub linear_dim: usize,
    pub n_linear: usize,
    pub proj_dim: usize,
    pub dropout_rate: f64,
    pub gamma: f64,
    pub weights: WeightSource,
    pub lr: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub clip_norm: f64,
    pub n_passes: usize,
    /// Model names to compare; empty means the whole zoo.
    pub models: Vec<String>,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let scenario = ScenarioConfig::default();
        Self {
            seed: scenario.seed,
            forecast_targets: scenario.n_targets,
            scenario,
            break_sizes: default_break_sizes(),
            select_threshold: DEFAULT_THRESHOLD,
            window: WindowConfig::default(),
            split_ratio: (8, 1, 1),
            hidden_dim: 256,
            n_layers: 2,
            linear_dim: 520,
            n_linear: 2,
            proj_dim: 8,
            dropout_rate: 0.2,
            gamma: DEFAULT_GAMMA,
            weights: WeightSource::ReferencePanel,
            lr: 1e-3,
            weight_decay: 1e-4,
            batch_size: 64,
            epochs: 1000,
            clip_norm: 5.0,
            n_passes: 100,
            models: Vec::new(),
            out_dir: PathBuf::from("out"),
        }
    }
}

/// Every accepted key, in the order [`RunConfig::to_text`] writes them.
pub const CONFIG_KEYS: &[&str] = &[
    "seed",
    "scenario.sizes",
    "scenario.steps",
    "scenario.channels",
    "scenario.targets",
    "scenario.noise_std",
    "scenario.fault_time",
    "scenario.sample_interval",
    "select.threshold",
    "window.len",
    "window.horizon",
    "window.stride",
    "window.targets",
    "split.ratio",
    "model.hidden",
    "model.layers",
    "model.linear_dim",
    "model.n_linear",
    "model.proj_dim",
    "model.dropout",
    "loss.gamma",
    "loss.weights",
    "train.lr",
    "train.weight_decay",
    "train.batch_size",
    "train.epochs",
    "train.clip_norm",
    "uncertainty.passes",
    "zoo.models",
    "output.dir",
];

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| config(format!("{key}: cannot parse {value:?}")))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(|v| parse_num::<f64>(key, v.trim()))
        .collect()
}

fn join(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| format!("{v}"))
        .collect::<Vec<_>>()
        .join(",")
}

impl RunConfig {
    /// Parses configuration text. Blank lines and `#` comments are ignored;
    /// unknown keys and repeated keys are errors.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut seen = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: n + 1,
                message: format!("expected `key = value`, found {line:?}"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if seen.insert(key.to_string(), n + 1).is_some() {
                return Err(Error::Parse {
                    line: n + 1,
                    message: format!("key {key} given twice"),
                });
            }
            cfg.set(key, value).map_err(|e| match e {
                Error::Config(message) => Error::Parse {
                    line: n + 1,
                    message,
                },
                other => other,
            })?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg = Self::parse(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "seed" => self.seed = parse_num(key, value)?,
            "scenario.sizes" => {
                self.break_sizes = if value == "default" {
                    default_break_sizes()
                } else {
                    parse_list(key, value)?
                }
            }
            "scenario.steps" => self.scenario.steps_per_scenario = parse_num(key, value)?,
            "scenario.channels" => self.scenario.n_channels = parse_num(key, value)?,
            "scenario.targets" => {
                self.scenario.n_targets = parse_num(key, value)?;
                self.forecast_targets = self.forecast_targets.min(self.scenario.n_targets);
            }
            "scenario.noise_std" => self.scenario.noise_std = parse_num(key, value)?,
            "scenario.fault_time" => self.scenario.fault_time = parse_num(key, value)?,
            "scenario.sample_interval" => self.scenario.sample_interval = parse_num(key, value)?,
            "select.threshold" => self.select_threshold = parse_num(key, value)?,
            "window.len" => self.window.window_len = parse_num(key, value)?,
            "window.horizon" => self.window.horizon = parse_num(key, value)?,
            "window.stride" => self.window.stride = parse_num(key, value)?,
            "window.targets" => self.forecast_targets = parse_num(key, value)?,
            "split.ratio" => {
                let parts: Vec<usize> = value
                    .split(':')
                    .map(|v| parse_num(key, v.trim()))
                    .collect::<Result<_>>()?;
                let [a, b, c] = parts[..] else {
                    return Err(config(format!("{key}: expected train:val:test, got {value:?}")));
                };
                self.split_ratio = (a, b, c);
            }
            "model.hidden" => self.hidden_dim = parse_num(key, value)?,
            "model.layers" => self.n_layers = parse_num(key, value)?,
            "model.linear_dim" => self.linear_dim = parse_num(key, value)?,
            "model.n_linear" => self.n_linear = parse_num(key, value)?,
            "model.proj_dim" => self.proj_dim = parse_num(key, value)?,
            "model.dropout" => self.dropout_rate = parse_num(key, value)?,
            "loss.gamma" => self.gamma = parse_num(key, value)?,
            "loss.weights" => {
                self.weights = if value == "reference" {
                    WeightSource::ReferencePanel
                } else if let Some(path) = value.strip_prefix("opinions:") {
                    WeightSource::Opinions(PathBuf::from(path.trim()))
                } else {
                    let w = parse_list(key, value)?;
                    let [shape, time, space] = w[..] else {
                        return Err(config(format!(
                            "{key}: expected `reference`, `opinions:PATH` or shape,time,space"
                        )));
                    };
                    WeightSource::Explicit(LossWeights::new(shape, time, space)?)
                }
            }
            "train.lr" => self.lr = parse_num(key, value)?,
            "train.weight_decay" => self.weight_decay = parse_num(key, value)?,
            "train.batch_size" => self.batch_size = parse_num(key, value)?,
            "train.epochs" => self.epochs = parse_num(key, value)?,
            "train.clip_norm" => self.clip_norm = parse_num(key, value)?,
            "uncertainty.passes" => self.n_passes = parse_num(key, value)?,
            "zoo.models" => {
                self.models = if value == "all" {
                    Vec::new()
                } else {
                    value.split(',').map(|s| s.trim().to_string()).collect()
                }
            }
            "output.dir" => self.out_dir = PathBuf::from(value),
            _ => return Err(config(format!("unknown key {key}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let mut sc = self.scenario.clone();
        sc.seed = self.seed;
        sc.validate()?;
        self.window.validate()?;
        if self.break_sizes.is_empty() || self.break_sizes.iter().any(|s| !(*s > 0.0)) {
            return Err(config("scenario.sizes must be a non-empty list of positive sizes"));
        }
        if self.forecast_targets == 0 || self.forecast_targets > self.scenario.n_targets {
            return Err(config(format!(
                "window.targets must lie in 1..={}",
                self.scenario.n_targets
            )));
        }
        if self.batch_size == 0 {
            return Err(config("train.batch_size must be at least 1"));
        }
        if self.hidden_dim == 0 || self.n_layers == 0 || self.linear_dim == 0 || self.proj_dim == 0 {
            return Err(config("model dimensions must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(config("model.dropout must lie in [0, 1)"));
        }
        if !(self.gamma >= 0.0) {
            return Err(config("loss.gamma must be non-negative"));
        }
        if !(self.lr > 0.0) || !(self.weight_decay >= 0.0) || !(self.clip_norm > 0.0) {
            return Err(config("train.lr and train.clip_norm must be positive, weight decay non-negative"));
        }
        if self.n_passes < 2 {
            return Err(config("uncertainty.passes must be at least 2"));
        }
        if let WeightSource::Opinions(path) = &self.weights {
            if !path.is_file() {
                return Err(config(format!("opinion file {} does not exist", path.display())));
            }
        }
        Ok(())
    }

    /// Scenario settings with the run seed applied.
    pub fn scenario_config(&self) -> ScenarioConfig {
        ScenarioConfig {
            seed: self.seed,
            ..self.scenario.clone()
        }
    }

    /// Composite-loss weights from the configured source.
    pub fn loss_weights(&self) -> Result<LossWeights> {
        match &self.weights {
            WeightSource::ReferencePanel => derive_loss_weights(&OpinionMatrix::reference().evaluate()?),
            WeightSource::Opinions(path) => derive_loss_weights(&OpinionMatrix::from_file(path)?.evaluate()?),
            WeightSource::Explicit(w) => Ok(*w),
        }
    }

    /// Canonical text form: every key, in [`CONFIG_KEYS`] order.
    pub fn to_text(&self) -> String {
        let s = &self.scenario;
        let weights = match &self.weights {
            WeightSource::ReferencePanel => "reference".to_string(),
            WeightSource::Opinions(p) => format!("opinions:{}", p.display()),
            WeightSource::Explicit(w) => join(&[w.shape, w.time, w.space]),
        };
        let models = if self.models.is_empty() {
            "all".to_string()
        } else {
            self.models.join(",")
        };
        let values = [
            self.seed.to_string(),
            join(&self.break_sizes),
            s.steps_per_scenario.to_string(),
            s.n_channels.to_string(),
            s.n_targets.to_string(),
            s.noise_std.to_string(),
            s.fault_time.to_string(),
            s.sample_interval.to_string(),
            self.select_threshold.to_string(),
            self.window.window_len.to_string(),
            self.window.horizon.to_string(),
            self.window.stride.to_string(),
            self.forecast_targets.to_string(),
            format!("{}:{}:{}", self.split_ratio.0, self.split_ratio.1, self.split_ratio.2),
            self.hidden_dim.to_string(),
            self.n_layers.to_string(),
            self.linear_dim.to_string(),
            self.n_linear.to_string(),
            self.proj_dim.to_string(),
            self.dropout_rate.to_string(),
            self.gamma.to_string(),
            weights,
            self.lr.to_string(),
            self.weight_decay.to_string(),
            self.batch_size.to_string(),
            self.epochs.to_string(),
            self.clip_norm.to_string(),
            self.n_passes.to_string(),
            models,
            self.out_dir.display().to_string(),
        ];
        let mut out = String::new();
        for (k, v) in CONFIG_KEYS.iter().zip(values) {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    /// SHA-256 of the canonical text, excluding the output directory, as
    /// 16 hex digits.
    pub fn hash(&self) -> String {
        let text: String = self
            .to_text()
            .lines()
            .filter(|l| !l.starts_with("output.dir"))
            .map(|l| format!("{l}\n"))
            .collect();
        let digest = Sha256::digest(text.as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}
