//! Normalization, rank-correlation feature screening, sliding windows and
//! scenario-level splits.

use std::fmt::Write as _;

use ndarray::{s, Array2, Array3, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{config, shape, Error, Result};
use crate::scenario::ScenarioSeries;

/// Standard deviations below this are treated as zero variance.
pub const SIGMA_FLOOR: f64 = 1e-12;
/// Default `|ρs|` screening threshold.
pub const DEFAULT_THRESHOLD: f64 = 0.4;

/// Per-channel mean and population standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct NormStats {
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
    /// Channels whose variance vanished; their sigma was replaced by 1.
    pub flagged: Vec<bool>,
}

impl NormStats {
    /// Fits pooled statistics over the rows of every block.
    pub fn fit(blocks: &[ArrayView2<f64>]) -> Result<Self> {
        let channels = blocks
            .first()
            .map(|b| b.ncols())
            .ok_or_else(|| shape("cannot fit statistics on no data"))?;
        let mut rows = 0usize;
        for block in blocks {
            if block.ncols() != channels {
                return Err(shape(format!(
                    "channel count mismatch: {} vs {}",
                    block.ncols(),
                    channels
                )));
            }
            check_finite(block, rows)?;
            rows += block.nrows();
        }
        if rows == 0 {
            return Err(shape("cannot fit statistics on empty series"));
        }
        let n = rows as f64;
        let mut mu = vec![0.0; channels];
        for block in blocks {
            for row in block.rows() {
                for (m, v) in mu.iter_mut().zip(row) {
                    *m += v;
                }
            }
        }
        mu.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; channels];
        for block in blocks {
            for row in block.rows() {
                for ((acc, v), m) in var.iter_mut().zip(row).zip(&mu) {
                    *acc += (v - m) * (v - m);
                }
            }
        }
        let mut sigma = Vec::with_capacity(channels);
        let mut flagged = Vec::with_capacity(channels);
        for acc in var {
            let sd = (acc / n).sqrt();
            let degenerate = sd < SIGMA_FLOOR;
            sigma.push(if degenerate { 1.0 } else { sd });
            flagged.push(degenerate);
        }
        Ok(Self { mu, sigma, flagged })
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    /// Statistics restricted to the given channels, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            mu: indices.iter().map(|&i| self.mu[i]).collect(),
            sigma: indices.iter().map(|&i| self.sigma[i]).collect(),
            flagged: indices.iter().map(|&i| self.flagged[i]).collect(),
        }
    }

    pub fn to_csv(&self, names: &[String]) -> String {
        let mut out = String::from("channel,mu,sigma\n");
        for (i, (m, s)) in self.mu.iter().zip(&self.sigma).enumerate() {
            let name = names.get(i).map(String::as_str).unwrap_or("");
            let _ = writeln!(out, "{name},{m},{s}");
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<(Vec<String>, Self)> {
        let mut names = Vec::new();
        let mut mu = Vec::new();
        let mut sigma = Vec::new();
        for (idx, line) in text.lines().enumerate().skip(1) {
            let fields: Vec<&str> = line.rsplitn(3, ',').collect();
            let bad = || Error::Parse {
                line: idx + 1,
                message: "expected channel,mu,sigma".into(),
            };
            if fields.len() != 3 {
                return Err(bad());
            }
            sigma.push(fields[0].parse::<f64>().map_err(|_| bad())?);
            mu.push(fields[1].parse::<f64>().map_err(|_| bad())?);
            names.push(fields[2].to_string());
        }
        let flagged = vec![false; mu.len()];
        Ok((names, Self { mu, sigma, flagged }))
    }
}

fn check_finite(block: &ArrayView2<f64>, row_offset: usize) -> Result<()> {
    for ((row, channel), v) in block.indexed_iter() {
        if !v.is_finite() {
            return Err(Error::NonFinite {
                channel,
                row: row + row_offset,
            });
        }
    }
    Ok(())
}

/// Standardizes `values` (rows × channels). Statistics are fitted on the
/// input unless supplied, in which case they are applied verbatim.
pub fn zscore_fit_apply(
    values: ArrayView2<f64>,
    stats: Option<&NormStats>,
) -> Result<(Array2<f64>, NormStats)> {
    if values.is_empty() {
        return Err(shape("cannot normalize an empty series"));
    }
    check_finite(&values, 0)?;
    let stats = match stats {
        Some(s) => {
            if s.len() != values.ncols() {
                return Err(shape(format!(
                    "statistics cover {} channels, data has {}",
                    s.len(),
                    values.ncols()
                )));
            }
            s.clone()
        }
        None => NormStats::fit(&[values])?,
    };
    let mut out = values.to_owned();
    for (mut col, (m, sd)) in out.columns_mut().into_iter().zip(stats.mu.iter().zip(&stats.sigma)) {
        col.mapv_inplace(|v| (v - m) / sd);
    }
    Ok((out, stats))
}

/// Maps standardized values back to physical units: `μ + value · σ`.
pub fn inverse_standardize(normalized: ArrayView2<f64>, stats: &NormStats) -> Result<Array2<f64>> {
    if normalized.ncols() != stats.len() {
        return Err(shape(format!(
            "statistics cover {} channels, data has {}",
            stats.len(),
            normalized.ncols()
        )));
    }
    let mut out = normalized.to_owned();
    for (mut col, (m, sd)) in out.columns_mut().into_iter().zip(stats.mu.iter().zip(&stats.sigma)) {
        col.mapv_inplace(|v| m + v * sd);
    }
    Ok(out)
}

/// 1-based ranks; tied values share their average rank.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = rank;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 3 {
        return Err(shape(format!(
            "spearman needs equal lengths of at least 3, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    pearson(&average_ranks(x), &average_ranks(y)).ok_or_else(|| {
        Error::UndefinedCorrelation("a series has no rank variance (all values equal)".into())
    })
}

/// Screening outcome for every channel.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSelection {
    /// Selected channels, ascending.
    pub indices: Vec<usize>,
    /// Largest `|ρs|` against any target, per channel. Zero-variance
    /// channels score 0.
    pub max_abs_rho: Vec<f64>,
}

impl FeatureSelection {
    pub fn to_csv(&self, names: &[String]) -> String {
        let mut out = String::from("channel,max_abs_rho,selected\n");
        for (i, rho) in self.max_abs_rho.iter().enumerate() {
            let selected = self.indices.binary_search(&i).is_ok();
            let _ = writeln!(out, "{},{rho:.6},{selected}", names[i]);
        }
        out
    }
}

/// Keeps channels whose largest `|ρs|` against any target reaches
/// `threshold`, over the pooled rows of the campaign. Targets are always kept.
pub fn select_features(
    campaign: &[ScenarioSeries],
    target_indices: &[usize],
    threshold: f64,
) -> Result<FeatureSelection> {
    let first = campaign
        .first()
        .ok_or_else(|| config("feature selection needs at least one scenario"))?;
    let channels = first.n_channels();
    if campaign.iter().any(|s| s.n_channels() != channels) {
        return Err(shape("scenarios disagree on channel count"));
    }
    let pooled: Vec<ArrayView2<f64>> = campaign.iter().map(|s| s.values.view()).collect();
    let pooled = ndarray::concatenate(Axis(0), &pooled).map_err(|e| shape(e.to_string()))?;
    if pooled.nrows() < 3 {
        return Err(shape("feature selection needs at least 3 rows"));
    }
    let ranks: Vec<Vec<f64>> = (0..channels)
        .map(|c| average_ranks(&pooled.column(c).to_vec()))
        .collect();

    let mut max_abs_rho = vec![0.0; channels];
    for (c, rc) in ranks.iter().enumerate() {
        for &t in target_indices {
            let rt = ranks
                .get(t)
                .ok_or_else(|| config(format!("target index {t} out of range")))?;
            if let Some(rho) = pearson(rc, rt) {
                max_abs_rho[c] = f64::max(max_abs_rho[c], rho.abs());
            }
        }
    }
    let mut indices: Vec<usize> = (0..channels)
        .filter(|c| target_indices.contains(c) || max_abs_rho[*c] >= threshold)
        .collect();
    indices.sort_unstable();
    if indices.is_empty() {
        return Err(Error::Selection(format!(
            "no channel reaches |rho| >= {threshold}; lower the threshold"
        )));
    }
    Ok(FeatureSelection {
        indices,
        max_abs_rho,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowConfig {
    pub window_len: usize,
    pub horizon: usize,
    /// Offset between consecutive window starts. 1 takes every offset.
    pub stride: usize,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self {
            window_len: 40,
            horizon: 128,
            stride: 1,
        }
    }
}

impl WindowConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window_len == 0 || self.horizon == 0 || self.stride == 0 {
            return Err(config("window length, horizon and stride must be at least 1"));
        }
        Ok(())
    }

    /// Number of windows cut from a scenario of `steps` rows.
    pub fn count(&self, steps: usize) -> usize {
        let span = self.window_len + self.horizon;
        if steps < span {
            0
        } else {
            (steps - span) / self.stride + 1
        }
    }
}

/// Input windows and their forecast targets.
#[derive(Debug, Clone)]
pub struct WindowedDataset {
    /// `samples × L × D`.
    pub inputs: Array3<f64>,
    /// `samples × H × K`.
    pub targets: Array3<f64>,
    pub stats: NormStats,
    pub feature_indices: Vec<usize>,
    pub target_indices: Vec<usize>,
    /// `(scenario, start row)` of each sample.
    pub origins: Vec<(usize, usize)>,
}

impl WindowedDataset {
    pub fn len(&self) -> usize {
        self.inputs.len_of(Axis(0))
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Copies the selected samples into a new dataset.
    pub fn select(&self, samples: &[usize]) -> Self {
        Self {
            inputs: self.inputs.select(Axis(0), samples),
            targets: self.targets.select(Axis(0), samples),
            stats: self.stats.clone(),
            feature_indices: self.feature_indices.clone(),
            target_indices: self.target_indices.clone(),
            origins: samples.iter().map(|&i| self.origins[i]).collect(),
        }
    }
}

/// Cuts every scenario into `(L × D input, H × K target)` pairs. Windows
/// never cross a scenario boundary.
pub fn make_windows(
    normalized: &[Array2<f64>],
    stats: &NormStats,
    feature_indices: &[usize],
    target_indices: &[usize],
    cfg: WindowConfig,
) -> Result<WindowedDataset> {
    cfg.validate()?;
    let (l, h) = (cfg.window_len, cfg.horizon);
    for (i, block) in normalized.iter().enumerate() {
        if block.nrows() < l + h {
            return Err(Error::Window(format!(
                "scenario {i} has {} rows, fewer than window {l} + horizon {h}",
                block.nrows()
            )));
        }
    }
    let total: usize = normalized.iter().map(|b| cfg.count(b.nrows())).sum();
    let (d, k) = (feature_indices.len(), target_indices.len());
    let mut inputs = Array3::zeros((total, l, d));
    let mut targets = Array3::zeros((total, h, k));
    let mut origins = Vec::with_capacity(total);
    let mut n = 0;
    for (si, block) in normalized.iter().enumerate() {
        let features = block.select(Axis(1), feature_indices);
        let outputs = block.select(Axis(1), target_indices);
        for w in 0..cfg.count(block.nrows()) {
            let start = w * cfg.stride;
            inputs
                .slice_mut(s![n, .., ..])
                .assign(&features.slice(s![start..start + l, ..]));
            targets
                .slice_mut(s![n, .., ..])
                .assign(&outputs.slice(s![start + l..start + l + h, ..]));
            origins.push((si, start));
            n += 1;
        }
    }
    Ok(WindowedDataset {
        inputs,
        targets,
        stats: stats.clone(),
        feature_indices: feature_indices.to_vec(),
        target_indices: target_indices.to_vec(),
        origins,
    })
}

/// Scenario indices of a train/validation/test split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Assigns whole scenarios to train/validation/test in the given ratio.
/// Each split is returned in ascending order.
pub fn split_campaign(n_scenarios: usize, ratio: (usize, usize, usize), seed: u64) -> Result<Split> {
    let parts = ratio.0 + ratio.1 + ratio.2;
    if ratio.0 == 0 || ratio.1 == 0 || ratio.2 == 0 {
        return Err(Error::Split("every split ratio must be positive".into()));
    }
    if n_scenarios < parts {
        return Err(Error::Split(format!(
            "{n_scenarios} scenarios cannot be split {}:{}:{}",
            ratio.0, ratio.1, ratio.2
        )));
    }
    let n_val = (n_scenarios * ratio.1 / parts).max(1);
    let n_test = (n_scenarios * ratio.2 / parts).max(1);
    let mut order: Vec<usize> = (0..n_scenarios).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut val = order[..n_val].to_vec();
    let mut test = order[n_val..n_val + n_test].to_vec();
    let mut train = order[n_val + n_test..].to_vec();
    train.sort_unstable();
    val.sort_unstable();
    test.sort_unstable();
    Ok(Split { train, val, test })
}
