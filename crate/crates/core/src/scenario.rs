//! Synthetic main-steam-line-break campaigns.
//!
//! Each channel sits at a steady operating value until the fault, ramps
//! linearly for a fixed trip delay with a slope proportional to the break
//! size, and then relaxes exponentially toward a new post-trip equilibrium.
//! The first `n_targets` channels are the monitored plant parameters; the
//! remaining channels are lagged, rescaled copies of targets and pure-noise
//! distractors.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{config, Error, Result};

/// Break size that maps to a unit-strength response.
pub const REFERENCE_BREAK: f64 = 0.13;
/// Delay between the fault and the reactor trip.
pub const TRIP_DELAY_S: f64 = 60.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    /// Break area in m².
    pub break_size: f64,
    pub fault_time: f64,
    pub sample_interval: f64,
    pub steps_per_scenario: usize,
    pub n_channels: usize,
    pub n_targets: usize,
    /// Noise standard deviation as a fraction of each channel's span.
    pub noise_std: f64,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            break_size: REFERENCE_BREAK,
            fault_time: 400.0,
            sample_interval: 10.0,
            steps_per_scenario: 1000,
            n_channels: 78,
            n_targets: 24,
            noise_std: 0.01,
            seed: 42,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sample_interval > 0.0) {
            return Err(config("sample_interval must be positive"));
        }
        let ratio = self.fault_time / self.sample_interval;
        if self.fault_time < 0.0 || (ratio - ratio.round()).abs() > 1e-9 {
            return Err(config(format!(
                "fault_time {} is not a multiple of sample_interval {}",
                self.fault_time, self.sample_interval
            )));
        }
        if !(self.break_size > 0.0) || !self.break_size.is_finite() {
            return Err(config(format!("break_size must be positive, got {}", self.break_size)));
        }
        if self.steps_per_scenario as f64 * self.sample_interval <= self.fault_time {
            return Err(config(
                "steps_per_scenario × sample_interval must exceed fault_time",
            ));
        }
        if self.n_targets == 0 || self.n_targets > self.n_channels {
            return Err(config(format!(
                "n_targets must be in 1..=n_channels ({}), got {}",
                self.n_channels, self.n_targets
            )));
        }
        if self.n_targets > TARGETS.len() {
            return Err(config(format!(
                "at most {} target channels are defined, got {}",
                TARGETS.len(),
                self.n_targets
            )));
        }
        if !(self.noise_std >= 0.0) || !self.noise_std.is_finite() {
            return Err(config("noise_std must be finite and non-negative"));
        }
        Ok(())
    }

    pub fn fault_index(&self) -> usize {
        (self.fault_time / self.sample_interval).round() as usize
    }
}

/// A timestamped multichannel transient.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSeries {
    pub time_s: Vec<f64>,
    /// `steps × channels`.
    pub values: Array2<f64>,
    pub channel_names: Vec<String>,
    pub target_indices: Vec<usize>,
    pub break_size: f64,
    pub seed: u64,
    pub fault_time: f64,
}

impl ScenarioSeries {
    pub fn steps(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_channels(&self) -> usize {
        self.values.ncols()
    }

    pub fn target_names(&self) -> Vec<String> {
        self.target_indices
            .iter()
            .map(|&i| self.channel_names[i].clone())
            .collect()
    }
}

/// Steady value, span and response coefficients (in spans, per unit
/// normalized break) of one monitored parameter.
struct TargetSpec {
    name: &'static str,
    base: f64,
    span: f64,
    /// Deviation reached at the trip.
    peak: f64,
    /// Post-trip equilibrium offset `eq0 + eq1 · x`.
    eq0: f64,
    eq1: f64,
    /// Relaxation time constant at zero break, seconds.
    tau: f64,
}

const fn t(name: &'static str, base: f64, span: f64, peak: f64, eq0: f64, eq1: f64, tau: f64) -> TargetSpec {
    TargetSpec {
        name,
        base,
        span,
        peak,
        eq0,
        eq1,
        tau,
    }
}

const TARGETS: [TargetSpec; 24] = [
    t("Reactor Thermal Power", 100.0, 100.0, 0.12, -0.93, 0.0, 40.0),
    t("Pressure of Containment", 101.3, 200.0, 0.05, 0.05, 0.45, 300.0),
    t("Temperature of Containment", 45.0, 100.0, 0.08, 0.10, 0.50, 250.0),
    t("Hot-leg #1 Temperature", 327.0, 60.0, 0.04, -0.15, -0.35, 200.0),
    t("Hot-leg #2 Temperature", 327.0, 60.0, 0.04, -0.14, -0.30, 210.0),
    t("Hot-leg #3 Temperature", 327.0, 60.0, 0.04, -0.13, -0.28, 220.0),
    t("Cold-leg #1 Temperature", 292.0, 60.0, -0.10, -0.10, -0.50, 220.0),
    t("Cold-leg #2 Temperature", 292.0, 60.0, -0.06, -0.08, -0.40, 230.0),
    t("Cold-leg #3 Temperature", 292.0, 60.0, -0.08, -0.09, -0.45, 240.0),
    t("Pressurizer Temperature", 345.0, 40.0, -0.10, -0.10, -0.40, 250.0),
    t("Pressurizer Level", 60.0, 100.0, -0.15, -0.10, -0.45, 180.0),
    t("Pressurizer Pressure", 15.5, 4.0, -0.25, -0.10, -0.50, 200.0),
    t("Loop#1 Flow", 4700.0, 1000.0, 0.01, -0.02, -0.05, 150.0),
    t("Loop#2 Flow", 4700.0, 1000.0, 0.01, -0.02, -0.05, 160.0),
    t("Loop#3 Flow", 4700.0, 1000.0, 0.02, -0.05, -0.30, 120.0),
    t("SG#1 Pressure", 6.7, 3.0, -0.30, -0.05, -0.60, 150.0),
    t("SG#2 Pressure", 6.7, 3.0, -0.15, -0.04, -0.30, 170.0),
    t("SG#3 Pressure", 6.7, 3.0, -0.15, -0.04, -0.32, 170.0),
    t("SG#1 Steam Flow", 540.0, 1000.0, 0.60, -0.20, 0.50, 200.0),
    t("SG#2 Steam Flow", 540.0, 1000.0, 0.20, -0.50, 0.0, 60.0),
    t("SG#3 Steam Flow", 540.0, 1000.0, 0.20, -0.50, 0.0, 60.0),
    t("SG#1 Narrow Range Level", 50.0, 100.0, -0.10, -0.10, -0.30, 200.0),
    t("SG#2 Narrow Range Level", 50.0, 100.0, -0.06, -0.08, -0.18, 210.0),
    t("SG#3 Narrow Range Level", 50.0, 100.0, -0.06, -0.08, -0.20, 210.0),
];

/// Noise-free deviation of a target from its steady value, in physical units.
fn target_deviation(spec: &TargetSpec, strength: f64, since_fault: f64) -> f64 {
    if since_fault <= 0.0 {
        return 0.0;
    }
    let peak = spec.peak * strength;
    if since_fault <= TRIP_DELAY_S {
        return spec.span * peak * since_fault / TRIP_DELAY_S;
    }
    let eq = spec.eq0 + spec.eq1 * strength;
    let tau = spec.tau / (1.0 + 0.5 * strength);
    spec.span * (eq + (peak - eq) * (-(since_fault - TRIP_DELAY_S) / tau).exp())
}

/// Channel layout shared by every scenario of a configuration.
enum Channel {
    Target(usize),
    /// Lagged, rescaled copy of a target.
    Echo {
        source: usize,
        lag_steps: usize,
        gain: f64,
        base: f64,
    },
    Distractor {
        base: f64,
    },
}

impl Channel {
    fn span(&self) -> f64 {
        match self {
            Channel::Target(i) => TARGETS[*i].span,
            Channel::Echo { source, gain, .. } => TARGETS[*source].span * gain.abs(),
            Channel::Distractor { .. } => 10.0,
        }
    }
}

fn layout(cfg: &ScenarioConfig) -> (Vec<Channel>, Vec<String>) {
    let k = cfg.n_targets;
    let aux = cfg.n_channels - k;
    let distractors = aux / 3;
    let echoes = aux - distractors;
    let mut channels = Vec::with_capacity(cfg.n_channels);
    let mut names = Vec::with_capacity(cfg.n_channels);
    for (i, t) in TARGETS.iter().take(k).enumerate() {
        channels.push(Channel::Target(i));
        names.push(t.name.to_string());
    }
    for j in 0..echoes {
        let source = j % k;
        let sign = if (j / k).is_multiple_of(2) { 1.0 } else { -1.0 };
        channels.push(Channel::Echo {
            source,
            lag_steps: 1 + j % 5,
            gain: sign * (0.5 + 0.05 * (j % 7) as f64),
            base: 10.0 + j as f64,
        });
        names.push(format!("Aux #{:02}", j + 1));
    }
    for j in 0..distractors {
        channels.push(Channel::Distractor {
            base: 50.0 + j as f64,
        });
        names.push(format!("Distractor #{:02}", j + 1));
    }
    (channels, names)
}

/// Generates one scenario. Identical configurations give bit-identical output.
pub fn generate_scenario(cfg: &ScenarioConfig) -> Result<ScenarioSeries> {
    cfg.validate()?;
    let steps = cfg.steps_per_scenario;
    let dt = cfg.sample_interval;
    let strength = cfg.break_size / REFERENCE_BREAK;
    let (channels, names) = layout(cfg);
    let time_s: Vec<f64> = (0..steps).map(|i| i as f64 * dt).collect();
    let fault_index = cfg.fault_index();

    let clean_dev = |target: usize, row: isize| -> f64 {
        if row < fault_index as isize {
            return 0.0;
        }
        let since = (row as usize - fault_index) as f64 * dt;
        target_deviation(&TARGETS[target], strength, since)
    };

    let mut values = Array2::<f64>::zeros((steps, channels.len()));
    for (c, ch) in channels.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(c as u64);
        let noise_scale = cfg.noise_std * ch.span();
        for row in 0..steps {
            let clean = match ch {
                Channel::Target(i) => TARGETS[*i].base + clean_dev(*i, row as isize),
                Channel::Echo {
                    source,
                    lag_steps,
                    gain,
                    base,
                } => base + gain * clean_dev(*source, row as isize - *lag_steps as isize),
                Channel::Distractor { base } => *base,
            };
            let z: f64 = StandardNormal.sample(&mut rng);
            values[[row, c]] = clean + noise_scale * z;
        }
    }

    Ok(ScenarioSeries {
        time_s,
        values,
        channel_names: names,
        target_indices: (0..cfg.n_targets).collect(),
        break_size: cfg.break_size,
        seed: cfg.seed,
        fault_time: cfg.fault_time,
    })
}

/// The default campaign: 20 break sizes evenly spaced from 0.005 m² to 0.13 m².
pub fn default_break_sizes() -> Vec<f64> {
    let (lo, hi, n) = (0.005, REFERENCE_BREAK, 20);
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// One scenario per break size, with seed `base.seed + index`.
pub fn generate_campaign(base: &ScenarioConfig, sizes: &[f64]) -> Result<Vec<ScenarioSeries>> {
    if sizes.is_empty() {
        return Err(config("break-size list is empty"));
    }
    if let Some(bad) = sizes.iter().find(|s| !(**s > 0.0)) {
        return Err(config(format!("break sizes must be positive, found {bad}")));
    }
    let configs: Vec<ScenarioConfig> = sizes
        .iter()
        .enumerate()
        .map(|(i, &size)| ScenarioConfig {
            break_size: size,
            seed: base.seed.wrapping_add(i as u64),
            ..base.clone()
        })
        .collect();
    configs.par_iter().map(generate_scenario).collect()
}

#[derive(Debug, Serialize, Deserialize)]
struct ScenarioMeta {
    break_size: f64,
    seed: u64,
    fault_time: f64,
    target_channels: Vec<String>,
}

/// Writes `<stem>.csv` and `<stem>.meta.json` into `dir`; returns the CSV path.
pub fn write_scenario(series: &ScenarioSeries, dir: &Path, stem: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let csv_path = dir.join(format!("{stem}.csv"));
    let meta_path = dir.join(format!("{stem}.meta.json"));
    std::fs::write(&csv_path, scenario_csv(series)).map_err(|e| Error::io(&csv_path, e))?;
    let meta = ScenarioMeta {
        break_size: series.break_size,
        seed: series.seed,
        fault_time: series.fault_time,
        target_channels: series.target_names(),
    };
    let json = serde_json::to_string_pretty(&meta).expect("metadata serializes");
    std::fs::write(&meta_path, json + "\n").map_err(|e| Error::io(&meta_path, e))?;
    Ok(csv_path)
}

pub fn scenario_csv(series: &ScenarioSeries) -> String {
    let mut out = String::from("time_s");
    for name in &series.channel_names {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for (row, t) in series.values.rows().into_iter().zip(&series.time_s) {
        let _ = write!(out, "{t}");
        for v in row {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

/// Reads a scenario written by [`write_scenario`].
pub fn read_scenario(csv_path: &Path) -> Result<ScenarioSeries> {
    let text = std::fs::read_to_string(csv_path).map_err(|e| Error::io(csv_path, e))?;
    let meta_path = csv_path.with_extension("meta.json");
    let meta_text = std::fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    let meta: ScenarioMeta = serde_json::from_str(&meta_text).map_err(|e| Error::Parse {
        line: e.line(),
        message: e.to_string(),
    })?;

    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| config("empty scenario CSV"))?;
    let mut cols = header.split(',');
    if cols.next() != Some("time_s") {
        return Err(Error::Parse {
            line: 1,
            message: "header must start with time_s".into(),
        });
    }
    let channel_names: Vec<String> = cols.map(str::to_string).collect();
    let mut time_s = Vec::new();
    let mut flat = Vec::new();
    for (idx, line) in lines.enumerate() {
        let mut fields = line.split(',');
        let parse = |s: Option<&str>| -> Result<f64> {
            s.and_then(|v| v.parse().ok()).ok_or_else(|| Error::Parse {
                line: idx + 2,
                message: "malformed number or missing field".into(),
            })
        };
        time_s.push(parse(fields.next())?);
        for _ in 0..channel_names.len() {
            flat.push(parse(fields.next())?);
        }
    }
    let values = Array2::from_shape_vec((time_s.len(), channel_names.len()), flat)
        .map_err(|e| config(e.to_string()))?;
    let target_indices = meta
        .target_channels
        .iter()
        .map(|name| {
            channel_names
                .iter()
                .position(|c| c == name)
                .ok_or_else(|| config(format!("target channel {name:?} not in CSV header")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScenarioSeries {
        time_s,
        values,
        channel_names,
        target_indices,
        break_size: meta.break_size,
        seed: meta.seed,
        fault_time: meta.fault_time,
    })
}
