use ndarray::Array2;

use super::soft::SoftDtwTape;
use super::{dtw_hard, pairwise_cost_1d};
use crate::error::{shape, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TdiMode {
    /// Inner product of the optimal hard path with the penalty matrix.
    Hard,
    /// Inner product of the soft-DTW expected alignment with the penalty
    /// matrix; differentiable.
    Soft,
}

/// `Ω[i][j] = (i - j)^2 / k^2`.
pub fn penalty_matrix(k: usize) -> Array2<f64> {
    let k2 = (k * k) as f64;
    Array2::from_shape_fn((k, k), |(i, j)| {
        let d = i as f64 - j as f64;
        d * d / k2
    })
}

/// Temporal distortion index between a forecast and the truth.
pub fn tdi(x_hat: &[f64], y: &[f64], gamma: f64, mode: TdiMode) -> Result<f64> {
    check_lengths(x_hat, y)?;
    let k = y.len();
    let omega = penalty_matrix(k);
    let cost = pairwise_cost_1d(x_hat, y);
    let value = match mode {
        TdiMode::Soft if gamma > 0.0 => {
            let tape = SoftDtwTape::forward(&cost, gamma);
            let e = tape.alignment_flat();
            e.iter().zip(omega.iter()).map(|(a, b)| a * b).sum()
        }
        _ => {
            let (_, path) = dtw_hard(&cost);
            path.steps().iter().map(|&(i, j)| omega[[i, j]]).sum()
        }
    };
    Ok(value)
}

/// Soft TDI and its gradient with respect to `x_hat` (squared cost).
pub fn soft_tdi_with_grad(x_hat: &[f64], y: &[f64], gamma: f64) -> Result<(f64, Vec<f64>)> {
    check_lengths(x_hat, y)?;
    if gamma <= 0.0 {
        return Err(crate::error::config("soft TDI gradient needs gamma > 0"));
    }
    let k = y.len();
    let omega = penalty_matrix(k);
    let tape = SoftDtwTape::forward(&pairwise_cost_1d(x_hat, y), gamma);
    let e = tape.alignment_flat();
    let (value, g_delta) = tape.alignment_inner_grad(&e, omega.as_slice().expect("contiguous"));
    Ok((value, chain_to_forecast(x_hat, y, &g_delta)))
}

/// Soft-DTW value and soft TDI of one pair from a single forward sweep.
pub fn soft_dtw_and_tdi(x_hat: &[f64], y: &[f64], gamma: f64) -> Result<(f64, f64)> {
    check_lengths(x_hat, y)?;
    if gamma <= 0.0 {
        let (v, path) = dtw_hard(&pairwise_cost_1d(x_hat, y));
        let omega = penalty_matrix(y.len());
        return Ok((v, path.steps().iter().map(|&(i, j)| omega[[i, j]]).sum()));
    }
    let tape = SoftDtwTape::forward(&pairwise_cost_1d(x_hat, y), gamma);
    let k = y.len() as f64;
    let m = y.len();
    let e = tape.alignment_flat();
    let t = e
        .iter()
        .enumerate()
        .map(|(idx, a)| {
            let d = (idx / m) as f64 - (idx % m) as f64;
            a * d * d / (k * k)
        })
        .sum();
    Ok((tape.value(), t))
}

/// Pulls a gradient with respect to the squared-cost matrix back onto the
/// forecast: `∂/∂x_i = Σ_j G[i][j] · 2 (x_i - y_j)`.
pub(crate) fn chain_to_forecast(x_hat: &[f64], y: &[f64], g_delta: &[f64]) -> Vec<f64> {
    let m = y.len();
    x_hat
        .iter()
        .enumerate()
        .map(|(i, &xi)| {
            g_delta[i * m..(i + 1) * m]
                .iter()
                .zip(y)
                .map(|(g, yj)| g * 2.0 * (xi - yj))
                .sum()
        })
        .collect()
}

fn check_lengths(x_hat: &[f64], y: &[f64]) -> Result<()> {
    if x_hat.len() != y.len() {
        return Err(shape(format!(
            "TDI needs equal lengths, got {} and {}",
            x_hat.len(),
            y.len()
        )));
    }
    if y.is_empty() {
        return Err(shape("TDI of empty series"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_series_have_zero_tdi() {
        let y = [1.0, 3.0, 2.0, 5.0];
        assert_eq!(tdi(&y, &y, 0.0, TdiMode::Hard).unwrap(), 0.0);
    }

    #[test]
    fn length_mismatch_is_a_shape_error() {
        let err = tdi(&[1.0], &[1.0, 2.0], 0.1, TdiMode::Hard).unwrap_err();
        assert_eq!(err.class(), "shape");
    }

    #[test]
    fn penalty_is_zero_on_diagonal() {
        let om = penalty_matrix(4);
        assert_eq!(om[[2, 2]], 0.0);
        assert_eq!(om[[0, 3]], 9.0 / 16.0);
    }
}
