use ndarray::{Array3, ArrayView3, Axis};
use serde::{Deserialize, Serialize};

use super::soft::SoftDtwTape;
use super::tdi::{chain_to_forecast, penalty_matrix};
use super::{dtw_hard, pairwise_cost_1d};
use crate::error::{config, shape, Result};

/// Smoothing used for training losses when none is configured.
pub const DEFAULT_GAMMA: f64 = 0.1;

/// Mixing weights of the shape (soft-DTW), time (soft TDI) and space (MSE)
/// terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub shape: f64,
    pub time: f64,
    pub space: f64,
}

impl LossWeights {
    pub const MSE_ONLY: LossWeights = LossWeights {
        shape: 0.0,
        time: 0.0,
        space: 1.0,
    };

    pub fn new(shape: f64, time: f64, space: f64) -> Result<Self> {
        let w = LossWeights { shape, time, space };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let parts = [self.shape, self.time, self.space];
        if parts.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(config(format!("loss weights must be non-negative: {self:?}")));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(config(format!("loss weights must sum to 1, got {sum}")));
        }
        Ok(())
    }
}

/// Mean squared error over every element, with its gradient.
pub fn mse_loss(y_hat: ArrayView3<f64>, y: ArrayView3<f64>) -> Result<(f64, Array3<f64>)> {
    check_shapes(&y_hat, &y)?;
    let n = y.len() as f64;
    let diff = &y_hat - &y;
    let value = diff.iter().map(|d| d * d).sum::<f64>() / n;
    Ok((value, diff * (2.0 / n)))
}

/// Weighted shape/time/space loss on `(batch, horizon, channel)` forecasts.
///
/// Soft-DTW and soft TDI are evaluated per univariate `(sample, channel)`
/// series and averaged over samples and channels; the space term is the
/// element-wise MSE. At `gamma = 0` the hard DTW and hard TDI are used, with
/// the optimal path as a subgradient.
pub fn composite_loss(
    y_hat: ArrayView3<f64>,
    y: ArrayView3<f64>,
    weights: LossWeights,
    gamma: f64,
) -> Result<(f64, Array3<f64>)> {
    weights.validate()?;
    let (mut value, mut grad) = mse_loss(y_hat, y)?;
    value *= weights.space;
    grad *= weights.space;
    if weights.shape == 0.0 && weights.time == 0.0 {
        return Ok((value, grad));
    }
    if gamma < 0.0 {
        return Err(config("composite loss needs gamma >= 0"));
    }

    let (batch, horizon, channels) = y.dim();
    let series_count = (batch * channels) as f64;
    let omega = penalty_matrix(horizon);
    let omega = omega.as_slice().expect("contiguous");
    let mut pred = vec![0.0; horizon];
    let mut truth = vec![0.0; horizon];
    let mut shape_sum = 0.0;
    let mut time_sum = 0.0;
    let mut g_delta = vec![0.0; horizon * horizon];
    for b in 0..batch {
        for k in 0..channels {
            for h in 0..horizon {
                pred[h] = y_hat[[b, h, k]];
                truth[h] = y[[b, h, k]];
            }
            let cost = pairwise_cost_1d(&pred, &truth);
            if gamma == 0.0 {
                // Hard limit: the path indicator is a subgradient of DTW and
                // hard TDI is piecewise constant.
                let (v, path) = dtw_hard(&cost);
                shape_sum += v;
                g_delta.iter_mut().for_each(|g| *g = 0.0);
                for &(i, j) in path.steps() {
                    time_sum += omega[i * horizon + j];
                    g_delta[i * horizon + j] = weights.shape;
                }
            } else {
                let tape = SoftDtwTape::forward(&cost, gamma);
                let e = tape.alignment_flat();
                shape_sum += tape.value();
                for (g, a) in g_delta.iter_mut().zip(&e) {
                    *g = weights.shape * a;
                }
                if weights.time > 0.0 {
                    let (t, hv) = tape.alignment_inner_grad(&e, omega);
                    time_sum += t;
                    for (g, v) in g_delta.iter_mut().zip(&hv) {
                        *g += weights.time * v;
                    }
                }
            }
            let gx = chain_to_forecast(&pred, &truth, &g_delta);
            let mut lane = grad.index_axis_mut(Axis(0), b);
            for (h, v) in gx.into_iter().enumerate() {
                lane[[h, k]] += v / series_count;
            }
        }
    }
    value += (weights.shape * shape_sum + weights.time * time_sum) / series_count;
    Ok((value, grad))
}

fn check_shapes(y_hat: &ArrayView3<f64>, y: &ArrayView3<f64>) -> Result<()> {
    if y_hat.dim() != y.dim() {
        return Err(shape(format!(
            "forecast shape {:?} does not match target shape {:?}",
            y_hat.dim(),
            y.dim()
        )));
    }
    if y.is_empty() {
        return Err(shape("empty forecast"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weight_sum_checked() {
        assert_eq!(LossWeights::new(0.5, 0.5, 0.1).unwrap_err().class(), "config");
        assert!(LossWeights::new(0.2, 0.3, 0.5).is_ok());
    }

    #[test]
    fn mse_only_weights_equal_mse() {
        let y_hat = Array3::from_shape_fn((2, 5, 3), |(b, h, k)| (b + 2 * h + 3 * k) as f64 * 0.1);
        let y = Array3::from_shape_fn((2, 5, 3), |(b, h, k)| ((b * h + k) as f64).sin());
        let (c, gc) = composite_loss(y_hat.view(), y.view(), LossWeights::MSE_ONLY, 0.1).unwrap();
        let (m, gm) = mse_loss(y_hat.view(), y.view()).unwrap();
        assert_eq!(c, m);
        assert_eq!(gc, gm);
    }

    #[test]
    fn perfect_forecast_in_hard_limit_has_zero_loss_and_gradient() {
        let y = Array3::from_shape_fn((1, 6, 2), |(_, h, k)| (h as f64 * 0.7 + k as f64).cos());
        let w = LossWeights::new(0.372, 0.306, 0.322).unwrap();
        let (v, g) = composite_loss(y.view(), y.view(), w, 0.0).unwrap();
        assert_eq!(v, 0.0);
        assert!(g.iter().all(|x| *x == 0.0));
    }
}
