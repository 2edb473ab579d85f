//! Batched recurrent directions over time-major `(steps · batch) × width`
//! matrices; row `t * batch + b` holds sample `b` at step `t`.

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array2, ArrayView2};

use super::cell::sigmoid;
use super::network::CellKind;

/// Activations recorded for one direction of one layer.
#[derive(Debug, Clone)]
pub(crate) struct DirCache {
    /// LSTM: post-activation gates `[i, f, g, o]`; Elman: the hidden state.
    pub acts: Array2<f64>,
    /// LSTM cell state and its tanh; empty for Elman.
    pub c: Array2<f64>,
    pub tc: Array2<f64>,
    pub h: Array2<f64>,
}

fn step_index(s: usize, steps: usize, reverse: bool) -> usize {
    if reverse {
        steps - 1 - s
    } else {
        s
    }
}

/// Runs one direction given the input pre-activations `pre = X W_inᵀ + b`.
pub(crate) fn dir_forward(
    kind: CellKind,
    mut pre: Array2<f64>,
    w_rec: ArrayView2<f64>,
    batch: usize,
    steps: usize,
    reverse: bool,
) -> DirCache {
    let hidden = w_rec.ncols();
    let rows = batch * steps;
    let mut h_all = Array2::<f64>::zeros((rows, hidden));
    let lstm = kind == CellKind::Lstm;
    let (mut c_all, mut tc_all) = if lstm {
        (Array2::zeros((rows, hidden)), Array2::zeros((rows, hidden)))
    } else {
        (Array2::zeros((0, hidden)), Array2::zeros((0, hidden)))
    };
    let mut prev_t: Option<usize> = None;
    for s_ in 0..steps {
        let t = step_index(s_, steps, reverse);
        let r = t * batch..(t + 1) * batch;
        if let Some(p) = prev_t {
            let h_prev = h_all.slice(s![p * batch..(p + 1) * batch, ..]).to_owned();
            let mut a = pre.slice_mut(s![r.clone(), ..]);
            general_mat_mul(1.0, &h_prev, &w_rec.t(), 1.0, &mut a);
        }
        for b in 0..batch {
            let row = t * batch + b;
            let prev_row = prev_t.map(|p| p * batch + b);
            if lstm {
                for j in 0..hidden {
                    let i = sigmoid(pre[[row, j]]);
                    let f = sigmoid(pre[[row, hidden + j]]);
                    let g = pre[[row, 2 * hidden + j]].tanh();
                    let o = sigmoid(pre[[row, 3 * hidden + j]]);
                    let c_prev = prev_row.map_or(0.0, |pr| c_all[[pr, j]]);
                    let c = f * c_prev + i * g;
                    let tc = c.tanh();
                    pre[[row, j]] = i;
                    pre[[row, hidden + j]] = f;
                    pre[[row, 2 * hidden + j]] = g;
                    pre[[row, 3 * hidden + j]] = o;
                    c_all[[row, j]] = c;
                    tc_all[[row, j]] = tc;
                    h_all[[row, j]] = o * tc;
                }
            } else {
                for j in 0..hidden {
                    let h = pre[[row, j]].tanh();
                    pre[[row, j]] = h;
                    h_all[[row, j]] = h;
                }
            }
        }
        prev_t = Some(t);
    }
    DirCache {
        acts: pre,
        c: c_all,
        tc: tc_all,
        h: h_all,
    }
}

/// Backpropagates through one direction. `d_h` is the gradient reaching the
/// hidden outputs from above. Returns the pre-activation gradient and the
/// recurrent weight gradient.
pub(crate) fn dir_backward(
    kind: CellKind,
    cache: &DirCache,
    w_rec: ArrayView2<f64>,
    d_h: ArrayView2<f64>,
    batch: usize,
    steps: usize,
    reverse: bool,
) -> (Array2<f64>, Array2<f64>) {
    let hidden = w_rec.ncols();
    let gates = w_rec.nrows();
    let rows = batch * steps;
    let lstm = kind == CellKind::Lstm;
    let mut d_a = Array2::<f64>::zeros((rows, gates));
    let mut h_prev_all = Array2::<f64>::zeros((rows, hidden));
    let mut dh_rec = Array2::<f64>::zeros((batch, hidden));
    let mut dc_next = Array2::<f64>::zeros((batch, hidden));
    for s_ in (0..steps).rev() {
        let t = step_index(s_, steps, reverse);
        let prev_t = (s_ > 0).then(|| step_index(s_ - 1, steps, reverse));
        for b in 0..batch {
            let row = t * batch + b;
            let prev_row = prev_t.map(|p| p * batch + b);
            if let Some(pr) = prev_row {
                for j in 0..hidden {
                    h_prev_all[[row, j]] = cache.h[[pr, j]];
                }
            }
            for j in 0..hidden {
                let dh = d_h[[row, j]] + dh_rec[[b, j]];
                if lstm {
                    let i = cache.acts[[row, j]];
                    let f = cache.acts[[row, hidden + j]];
                    let g = cache.acts[[row, 2 * hidden + j]];
                    let o = cache.acts[[row, 3 * hidden + j]];
                    let tc = cache.tc[[row, j]];
                    let c_prev = prev_row.map_or(0.0, |pr| cache.c[[pr, j]]);
                    let dc = dc_next[[b, j]] + dh * o * (1.0 - tc * tc);
                    d_a[[row, j]] = dc * g * i * (1.0 - i);
                    d_a[[row, hidden + j]] = dc * c_prev * f * (1.0 - f);
                    d_a[[row, 2 * hidden + j]] = dc * i * (1.0 - g * g);
                    d_a[[row, 3 * hidden + j]] = dh * tc * o * (1.0 - o);
                    dc_next[[b, j]] = dc * f;
                } else {
                    let h = cache.acts[[row, j]];
                    d_a[[row, j]] = dh * (1.0 - h * h);
                }
            }
        }
        if s_ > 0 {
            let d_at = d_a.slice(s![t * batch..(t + 1) * batch, ..]);
            general_mat_mul(1.0, &d_at, &w_rec, 0.0, &mut dh_rec);
        }
    }
    let d_wrec = d_a.t().dot(&h_prev_all);
    (d_a, d_wrec)
}
