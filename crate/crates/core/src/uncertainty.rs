//! Monte-Carlo dropout ensembles, 95% bands and the mapping back to
//! physical units.

use ndarray::{s, Array3, Array4, ArrayView3, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{config, shape, Result};
use crate::nn::{DropoutMode, Network};
use crate::prep::NormStats;

pub const DEFAULT_PASSES: usize = 100;
/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.96;

/// Stochastic forecasts for a batch of windows: `passes × batch × H × K`.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveEnsemble {
    pub passes: Array4<f64>,
    pub seed: u64,
}

impl PredictiveEnsemble {
    pub fn n_passes(&self) -> usize {
        self.passes.len_of(Axis(0))
    }
}

/// Mean forecast and its band, `batch × H × K`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceBand {
    pub mean: Array3<f64>,
    pub lower: Array3<f64>,
    pub upper: Array3<f64>,
    pub level: f64,
}

/// Runs `n_passes` forward passes with dropout active. Pass `p` draws its
/// masks from ChaCha8 stream `p` of `seed`, so the ensemble does not depend
/// on how passes are scheduled across threads.
pub fn mc_dropout_predict(
    net: &Network,
    inputs: ArrayView3<f64>,
    n_passes: usize,
    seed: u64,
) -> Result<PredictiveEnsemble> {
    if n_passes < 2 {
        return Err(config(format!("MC dropout needs at least 2 passes, got {n_passes}")));
    }
    let outs: Vec<Array3<f64>> = (0..n_passes)
        .into_par_iter()
        .map(|p| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(p as u64);
            net.predict(inputs, DropoutMode::Mc, &mut rng)
        })
        .collect::<Result<_>>()?;
    let (b, h, k) = outs[0].dim();
    let mut passes = Array4::zeros((n_passes, b, h, k));
    for (p, out) in outs.iter().enumerate() {
        passes.slice_mut(s![p, .., .., ..]).assign(out);
    }
    Ok(PredictiveEnsemble { passes, seed })
}

/// Per-element mean and `mean ± 1.96 σ`, with the `n − 1` sample standard
/// deviation over passes.
///
/// Moments are accumulated relative to the first pass, so identical passes
/// give exactly that pass as the mean and exactly zero width.
pub fn confidence_band(ens: &PredictiveEnsemble) -> ConfidenceBand {
    let n = ens.n_passes() as f64;
    let first = ens.passes.index_axis(Axis(0), 0);
    let mut shift = Array3::<f64>::zeros(first.raw_dim());
    for pass in ens.passes.outer_iter() {
        ndarray::Zip::from(&mut shift)
            .and(&pass)
            .and(&first)
            .for_each(|s, &x, &x0| *s += x - x0);
    }
    shift /= n;
    let mut var = Array3::<f64>::zeros(first.raw_dim());
    for pass in ens.passes.outer_iter() {
        ndarray::Zip::from(&mut var)
            .and(&pass)
            .and(&first)
            .and(&shift)
            .for_each(|v, &x, &x0, &d| {
                let e = x - x0 - d;
                *v += e * e;
            });
    }
    let mean = &first + &shift;
    let half = var.mapv(|v| Z_95 * (v / (n - 1.0)).sqrt());
    ConfidenceBand {
        lower: &mean - &half,
        upper: &mean + &half,
        mean,
        level: 0.95,
    }
}

/// Maps a band on standardized targets to physical units. `targets[k]` is
/// the channel of `stats` that forecast channel `k` belongs to.
pub fn postprocess(band: &ConfidenceBand, stats: &NormStats, targets: &[usize]) -> Result<ConfidenceBand> {
    let k = band.mean.len_of(Axis(2));
    if targets.len() != k {
        return Err(shape(format!(
            "band has {k} channels but {} target indices were given",
            targets.len()
        )));
    }
    if let Some(bad) = targets.iter().find(|&&t| t >= stats.len()) {
        return Err(shape(format!(
            "target channel {bad} is not covered by statistics of {} channels",
            stats.len()
        )));
    }
    let map = |a: &Array3<f64>| {
        let mut out = a.clone();
        for (kk, &t) in targets.iter().enumerate() {
            let (m, sd) = (stats.mu[t], stats.sigma[t]);
            out.slice_mut(s![.., .., kk]).mapv_inplace(|v| m + v * sd);
        }
        out
    };
    Ok(ConfidenceBand {
        mean: map(&band.mean),
        lower: map(&band.lower),
        upper: map(&band.upper),
        level: band.level,
    })
}

/// Fraction of truth values inside `[lower, upper]`.
pub fn coverage(band: &ConfidenceBand, truth: ArrayView3<f64>) -> Result<f64> {
    if truth.dim() != band.mean.dim() {
        return Err(shape(format!(
            "truth shape {:?} does not match band shape {:?}",
            truth.dim(),
            band.mean.dim()
        )));
    }
    let mut inside = 0usize;
    ndarray::Zip::from(&truth)
        .and(&band.lower)
        .and(&band.upper)
        .for_each(|&t, &lo, &hi| {
            if lo <= t && t <= hi {
                inside += 1;
            }
        });
    Ok(inside as f64 / truth.len() as f64)
}

/// One forecast channel of one window as CSV with header
/// `step,time_s,truth,mean,lower95,upper95`. `step` counts from 1 after
/// the window; `time_s` is absolute scenario time. `truth` may be empty.
pub fn prediction_csv(
    band: &ConfidenceBand,
    sample: usize,
    channel: usize,
    truth: &[f64],
    first_time_s: f64,
    interval_s: f64,
) -> String {
    let mut out = String::from("step,time_s,truth,mean,lower95,upper95\n");
    let horizon = band.mean.len_of(Axis(1));
    for h in 0..horizon {
        let t = truth.get(h).map(|v| format!("{v:.6}")).unwrap_or_default();
        out.push_str(&format!(
            "{},{:.1},{},{:.6},{:.6},{:.6}\n",
            h + 1,
            first_time_s + h as f64 * interval_s,
            t,
            band.mean[[sample, h, channel]],
            band.lower[[sample, h, channel]],
            band.upper[[sample, h, channel]],
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn ensemble(values: &[f64]) -> PredictiveEnsemble {
        let passes = Array4::from_shape_vec((values.len(), 1, 1, 1), values.to_vec()).unwrap();
        PredictiveEnsemble { passes, seed: 0 }
    }

    #[test]
    fn two_pass_band() {
        let band = confidence_band(&ensemble(&[0.0, 2.0]));
        assert_eq!(band.mean[[0, 0, 0]], 1.0);
        let half = Z_95 * 2f64.sqrt();
        assert_abs_diff_eq!(band.upper[[0, 0, 0]], 1.0 + half, epsilon = 1e-15);
        assert_abs_diff_eq!(band.lower[[0, 0, 0]], 1.0 - half, epsilon = 1e-15);
    }

    #[test]
    fn identical_passes_have_zero_width() {
        // A plain mean of 100 copies of 0.1 is not exactly 0.1.
        let band = confidence_band(&ensemble(&[0.1; 100]));
        assert_eq!(band.mean[[0, 0, 0]], 0.1);
        assert_eq!(band.lower, band.mean);
        assert_eq!(band.upper, band.mean);
    }

    #[test]
    fn postprocess_maps_zero_to_mean() {
        let band = confidence_band(&ensemble(&[0.0, 0.0]));
        let stats = NormStats {
            mu: vec![1.0, 155.3],
            sigma: vec![1.0, 2.1],
            flagged: vec![false, false],
        };
        let phys = postprocess(&band, &stats, &[1]).unwrap();
        assert_abs_diff_eq!(phys.mean[[0, 0, 0]], 155.3, epsilon = 1e-12);
        assert_eq!(phys.lower, phys.upper);
        assert_eq!(postprocess(&band, &stats, &[2]).unwrap_err().class(), "shape");
    }

    #[test]
    fn coverage_counts_inclusive_bounds() {
        let band = confidence_band(&ensemble(&[0.0, 2.0]));
        let truth = Array3::from_elem((1, 1, 1), band.upper[[0, 0, 0]]);
        assert_eq!(coverage(&band, truth.view()).unwrap(), 1.0);
        let truth = Array3::from_elem((1, 1, 1), 100.0);
        assert_eq!(coverage(&band, truth.view()).unwrap(), 0.0);
    }

    #[test]
    fn csv_layout() {
        let band = confidence_band(&ensemble(&[1.0, 1.0]));
        let csv = prediction_csv(&band, 0, 0, &[1.5], 400.0, 10.0);
        assert_eq!(
            csv,
            "step,time_s,truth,mean,lower95,upper95\n1,400.0,1.500000,1.000000,1.000000,1.000000\n"
        );
    }
}
