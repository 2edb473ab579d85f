//! Single-step reference cells. The batched recurrent layers compute the
//! same recurrences; these are kept for inspection and cross-checking.

use ndarray::{Array1, Array2, ArrayView1};

use crate::error::{shape, Error, Result};

/// LSTM weights with gates stacked in the order input, forget, candidate,
/// output: `w_input` is `4h × in`, `w_recurrent` is `4h × h`.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmCellParams {
    pub w_input: Array2<f64>,
    pub w_recurrent: Array2<f64>,
    pub bias: Array1<f64>,
}

impl LstmCellParams {
    pub fn hidden(&self) -> usize {
        self.w_recurrent.ncols()
    }

    fn check(&self, gates: usize, x_len: usize, h_len: usize) -> Result<()> {
        let h = self.hidden();
        if self.w_recurrent.nrows() != gates * h
            || self.w_input.nrows() != gates * h
            || self.bias.len() != gates * h
        {
            return Err(shape("cell weights do not stack the expected gate count"));
        }
        if self.w_input.ncols() != x_len {
            return Err(shape(format!(
                "cell expects input of width {}, got {x_len}",
                self.w_input.ncols()
            )));
        }
        if h_len != h {
            return Err(shape(format!("cell expects hidden width {h}, got {h_len}")));
        }
        Ok(())
    }
}

/// Hidden and cell state; `c` is unused by Elman cells.
#[derive(Debug, Clone, PartialEq)]
pub struct CellState {
    pub h: Array1<f64>,
    pub c: Array1<f64>,
}

impl CellState {
    pub fn zeros(hidden: usize) -> Self {
        Self {
            h: Array1::zeros(hidden),
            c: Array1::zeros(hidden),
        }
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn finite(values: &Array1<f64>, what: &str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Numeric(format!("non-finite {what} activation")))
    }
}

/// One LSTM step.
pub fn lstm_cell_forward(
    params: &LstmCellParams,
    x: ArrayView1<f64>,
    prev: &CellState,
) -> Result<CellState> {
    params.check(4, x.len(), prev.h.len())?;
    let h = params.hidden();
    let a = params.w_input.dot(&x) + params.w_recurrent.dot(&prev.h) + &params.bias;
    let i = a.slice(ndarray::s![0..h]).mapv(sigmoid);
    let f = a.slice(ndarray::s![h..2 * h]).mapv(sigmoid);
    let g = a.slice(ndarray::s![2 * h..3 * h]).mapv(f64::tanh);
    let o = a.slice(ndarray::s![3 * h..4 * h]).mapv(sigmoid);
    for (gate, name) in [(&i, "input gate"), (&f, "forget gate"), (&g, "candidate"), (&o, "output gate")] {
        finite(gate, name)?;
    }
    let c = &f * &prev.c + &i * &g;
    finite(&c, "cell state")?;
    let h_new = &o * &c.mapv(f64::tanh);
    Ok(CellState { h: h_new, c })
}

/// One Elman step `h' = tanh(W x + U h + b)` using single-gate weights.
pub fn elman_cell_forward(
    params: &LstmCellParams,
    x: ArrayView1<f64>,
    prev: &CellState,
) -> Result<CellState> {
    params.check(1, x.len(), prev.h.len())?;
    let h = (params.w_input.dot(&x) + params.w_recurrent.dot(&prev.h) + &params.bias).mapv(f64::tanh);
    finite(&h, "hidden")?;
    Ok(CellState {
        c: Array1::zeros(h.len()),
        h,
    })
}
