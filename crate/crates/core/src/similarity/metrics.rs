use serde::Serialize;

use crate::error::{shape, Result};

const MAPE_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct PointMetrics {
    pub mse: f64,
    pub rmse: f64,
    pub mae: f64,
    pub mape_percent: f64,
}

/// Mean squared / absolute / absolute-percentage error. The MAPE
/// denominator is clamped at `1e-8`.
pub fn point_metrics(y_hat: &[f64], y: &[f64]) -> Result<PointMetrics> {
    if y_hat.len() != y.len() || y.is_empty() {
        return Err(shape(format!(
            "point metrics need equal non-empty lengths, got {} and {}",
            y_hat.len(),
            y.len()
        )));
    }
    let n = y.len() as f64;
    let (mut se, mut ae, mut ape) = (0.0, 0.0, 0.0);
    for (p, t) in y_hat.iter().zip(y) {
        let e = p - t;
        se += e * e;
        ae += e.abs();
        ape += e.abs() / t.abs().max(MAPE_FLOOR);
    }
    let mse = se / n;
    Ok(PointMetrics {
        mse,
        rmse: mse.sqrt(),
        mae: ae / n,
        mape_percent: 100.0 * ape / n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_prediction_is_all_zero() {
        let y = [1.0, -2.0, 3.5];
        assert_eq!(point_metrics(&y, &y).unwrap(), PointMetrics::default());
    }

    #[test]
    fn single_point_percentage() {
        let m = point_metrics(&[90.0], &[100.0]).unwrap();
        assert_eq!(m.mae, 10.0);
        assert!((m.mape_percent - 10.0).abs() < 1e-12);
    }

    #[test]
    fn symmetric_errors() {
        let m = point_metrics(&[0.0, 0.0], &[1.0, -1.0]).unwrap();
        assert_eq!(m.mse, 1.0);
        assert_eq!(m.rmse, 1.0);
    }

    #[test]
    fn zero_truth_is_clamped() {
        let m = point_metrics(&[1e-9], &[0.0]).unwrap();
        assert!(m.mape_percent.is_finite());
    }
}
