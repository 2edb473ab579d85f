use ndarray::Array2;

use super::{dtw_hard, CostMatrix};

/// Smoothed minimum `-γ log Σ exp(-a_i / γ)`; the plain minimum at `γ = 0`.
///
/// Evaluated with a max-shift so large arguments do not underflow.
pub fn soft_min(values: &[f64], gamma: f64) -> f64 {
    assert!(!values.is_empty(), "soft_min of an empty list");
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if gamma == 0.0 || !min.is_finite() {
        return min;
    }
    let sum: f64 = values.iter().map(|a| (-(a - min) / gamma).exp()).sum();
    min - gamma * sum.ln()
}

/// Output of [`soft_dtw`].
#[derive(Debug, Clone)]
pub struct SoftDtwResult {
    pub value: f64,
    pub gamma: f64,
    /// Expected alignment `∂value/∂delta`. For `γ = 0` this is the indicator
    /// of the hard DTW path, which is a valid subgradient.
    pub alignment: Array2<f64>,
    /// Cumulative soft costs `r[i][j]`.
    pub cumulative: Array2<f64>,
}

/// Soft-DTW value and its gradient with respect to the cost matrix.
pub fn soft_dtw(cost: &CostMatrix, gamma: f64) -> SoftDtwResult {
    assert!(gamma >= 0.0, "gamma must be non-negative");
    if gamma == 0.0 {
        let (value, path) = dtw_hard(cost);
        let (n, m) = (cost.rows(), cost.cols());
        let cumulative = hard_cumulative(cost);
        return SoftDtwResult {
            value,
            gamma,
            alignment: path.to_matrix(n, m),
            cumulative,
        };
    }
    let tape = SoftDtwTape::forward(cost, gamma);
    let alignment = tape.alignment();
    SoftDtwResult {
        value: tape.value(),
        gamma,
        alignment,
        cumulative: Array2::from_shape_vec((tape.n, tape.m), tape.r).expect("shape"),
    }
}

fn hard_cumulative(cost: &CostMatrix) -> Array2<f64> {
    let delta = cost.delta();
    let (n, m) = delta.dim();
    let mut r = Array2::<f64>::zeros((n, m));
    for i in 0..n {
        for j in 0..m {
            let best = match (i, j) {
                (0, 0) => 0.0,
                (0, _) => r[[0, j - 1]],
                (_, 0) => r[[i - 1, 0]],
                _ => r[[i - 1, j - 1]].min(r[[i - 1, j]]).min(r[[i, j - 1]]),
            };
            r[[i, j]] = delta[[i, j]] + best;
        }
    }
    r
}

/// `exp(x)` for `x <= 0`, short-circuiting the minimum itself and terms too
/// small to change a sum that already contains `1`.
#[inline]
fn shifted_exp(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else if x < -60.0 {
        0.0
    } else {
        x.exp()
    }
}

/// Forward soft-DTW recursion with the soft-min weights kept for the
/// reverse sweeps. All buffers are row-major `n × m`.
pub(crate) struct SoftDtwTape {
    n: usize,
    m: usize,
    gamma: f64,
    r: Vec<f64>,
    // Soft-min weights of the diagonal, vertical (i-1, j) and horizontal
    // (i, j-1) predecessors of each cell.
    w_diag: Vec<f64>,
    w_up: Vec<f64>,
    w_left: Vec<f64>,
}

impl SoftDtwTape {
    pub(crate) fn forward(cost: &CostMatrix, gamma: f64) -> Self {
        debug_assert!(gamma > 0.0);
        let (n, m) = (cost.rows(), cost.cols());
        let delta = cost.delta();
        let len = n * m;
        let mut r = vec![0.0; len];
        let mut w_diag = vec![0.0; len];
        let mut w_up = vec![0.0; len];
        let mut w_left = vec![0.0; len];
        let delta = delta.as_standard_layout();
        let delta = delta.as_slice().expect("contiguous");
        let inf = f64::INFINITY;
        let inv_gamma = 1.0 / gamma;
        r[0] = delta[0];
        w_diag[0] = 1.0;
        for i in 0..n {
            for j in 0..m {
                let idx = i * m + j;
                if idx == 0 {
                    continue;
                }
                let a = if i > 0 && j > 0 { r[idx - m - 1] } else { inf };
                let b = if i > 0 { r[idx - m] } else { inf };
                let c = if j > 0 { r[idx - 1] } else { inf };
                let min = a.min(b).min(c);
                let ea = shifted_exp((min - a) * inv_gamma);
                let eb = shifted_exp((min - b) * inv_gamma);
                let ec = shifted_exp((min - c) * inv_gamma);
                let s = ea + eb + ec;
                let inv_s = 1.0 / s;
                r[idx] = delta[idx] + min - gamma * s.ln();
                w_diag[idx] = ea * inv_s;
                w_up[idx] = eb * inv_s;
                w_left[idx] = ec * inv_s;
            }
        }
        Self {
            n,
            m,
            gamma,
            r,
            w_diag,
            w_up,
            w_left,
        }
    }

    pub(crate) fn value(&self) -> f64 {
        self.r[self.n * self.m - 1]
    }

    /// Flat `∂value/∂delta`, by the reverse recursion over successors.
    pub(crate) fn alignment_flat(&self) -> Vec<f64> {
        let (n, m) = (self.n, self.m);
        let mut e = vec![0.0; n * m];
        e[n * m - 1] = 1.0;
        for i in (0..n).rev() {
            for j in (0..m).rev() {
                let idx = i * m + j;
                if i == n - 1 && j == m - 1 {
                    continue;
                }
                let mut acc = 0.0;
                if i + 1 < n && j + 1 < m {
                    acc += e[idx + m + 1] * self.w_diag[idx + m + 1];
                }
                if i + 1 < n {
                    acc += e[idx + m] * self.w_up[idx + m];
                }
                if j + 1 < m {
                    acc += e[idx + 1] * self.w_left[idx + 1];
                }
                e[idx] = acc;
            }
        }
        e
    }

    pub(crate) fn alignment(&self) -> Array2<f64> {
        Array2::from_shape_vec((self.n, self.m), self.alignment_flat()).expect("shape")
    }

    /// Returns `⟨E, Ω⟩` and its gradient with respect to delta, given the
    /// alignment `e` from [`Self::alignment_flat`] and a fixed matrix `omega`.
    ///
    /// The value is the directional derivative of soft-DTW along `omega`;
    /// the gradient is the Hessian-vector product, obtained by reverse-mode
    /// differentiation of that directional recursion.
    pub(crate) fn alignment_inner_grad(&self, e: &[f64], omega: &[f64]) -> (f64, Vec<f64>) {
        let (n, m) = (self.n, self.m);
        let len = n * m;
        let mut rdot = vec![0.0; len];
        for i in 0..n {
            for j in 0..m {
                let idx = i * m + j;
                let mut acc = omega[idx];
                if i > 0 && j > 0 {
                    acc += self.w_diag[idx] * rdot[idx - m - 1];
                }
                if i > 0 {
                    acc += self.w_up[idx] * rdot[idx - m];
                }
                if j > 0 {
                    acc += self.w_left[idx] * rdot[idx - 1];
                }
                rdot[idx] = acc;
            }
        }
        let value = rdot[len - 1];

        let inv_gamma = 1.0 / self.gamma;
        let mut rbar = vec![0.0; len];
        for i in (0..n).rev() {
            for j in (0..m).rev() {
                let idx = i * m + j;
                let adj = rbar[idx];
                let q = rdot[idx] - omega[idx];
                let scale = e[idx] * inv_gamma;
                if i > 0 && j > 0 {
                    let w = self.w_diag[idx];
                    let p = idx - m - 1;
                    rbar[p] += w * adj - scale * w * (rdot[p] - q);
                }
                if i > 0 {
                    let w = self.w_up[idx];
                    let p = idx - m;
                    rbar[p] += w * adj - scale * w * (rdot[p] - q);
                }
                if j > 0 {
                    let w = self.w_left[idx];
                    let p = idx - 1;
                    rbar[p] += w * adj - scale * w * (rdot[p] - q);
                }
            }
        }
        (value, rbar)
    }
}
