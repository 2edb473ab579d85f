use ndarray::{Array2, ArrayView2};

use crate::error::{shape, Result};

/// Pairwise squared-Euclidean cost between the points of two series.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    delta: Array2<f64>,
}

impl CostMatrix {
    /// Wraps an existing matrix. Entries must be finite and non-negative.
    pub fn new(delta: Array2<f64>) -> Result<Self> {
        if delta.is_empty() {
            return Err(shape("cost matrix must be non-empty"));
        }
        if let Some(bad) = delta.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(shape(format!(
                "cost matrix entries must be finite and non-negative, found {bad}"
            )));
        }
        Ok(Self { delta })
    }


    pub fn delta(&self) -> &Array2<f64> {
        &self.delta
    }

    pub fn rows(&self) -> usize {
        self.delta.nrows()
    }

    pub fn cols(&self) -> usize {
        self.delta.ncols()
    }
}

/// `delta[i][j] = ||x_i - y_j||^2` for multivariate series stored row-per-step.
pub fn pairwise_cost(x: ArrayView2<f64>, y: ArrayView2<f64>) -> Result<CostMatrix> {
    if x.ncols() != y.ncols() {
        return Err(shape(format!(
            "feature dimension mismatch: {} vs {}",
            x.ncols(),
            y.ncols()
        )));
    }
    if x.nrows() == 0 || y.nrows() == 0 {
        return Err(shape("series must be non-empty"));
    }
    let delta = Array2::from_shape_fn((x.nrows(), y.nrows()), |(i, j)| {
        x.row(i)
            .iter()
            .zip(y.row(j).iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    });
    Ok(CostMatrix { delta })
}

/// Scalar-series shorthand for [`pairwise_cost`].
pub fn pairwise_cost_1d(x: &[f64], y: &[f64]) -> CostMatrix {
    let delta = Array2::from_shape_fn((x.len(), y.len()), |(i, j)| {
        let d = x[i] - y[j];
        d * d
    });
    CostMatrix { delta }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn zero_series_give_zero_costs() {
        let c = pairwise_cost_1d(&[0.0, 0.0], &[0.0, 0.0]);
        assert_eq!(c.delta(), &Array2::<f64>::zeros((2, 2)));
    }

    #[test]
    fn scalar_difference_is_squared() {
        let c = pairwise_cost_1d(&[1.0], &[2.0]);
        assert_eq!(c.delta(), &array![[1.0]]);
    }

    #[test]
    fn vector_cost_is_squared_norm() {
        let c = pairwise_cost(array![[0.0, 0.0]].view(), array![[3.0, 4.0]].view()).unwrap();
        assert_eq!(c.delta(), &array![[25.0]]);
    }

    #[test]
    fn mismatched_dims_rejected() {
        let err = pairwise_cost(array![[0.0, 0.0]].view(), array![[3.0]].view()).unwrap_err();
        assert_eq!(err.class(), "shape");
    }
}
