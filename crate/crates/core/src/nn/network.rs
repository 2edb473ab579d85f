use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array2, Array3, ArrayView2, ArrayView3, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::cell::LstmCellParams;
use super::dropout::{check_rate, make_mask, DropoutMode};
use super::params::NetworkParameters;
use super::recurrent::{dir_backward, dir_forward, DirCache};
use crate::error::{config, shape, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellKind {
    /// `h' = tanh(W x + U h + b)`.
    Elman,
    Lstm,
}

impl CellKind {
    fn gates(self) -> usize {
        match self {
            CellKind::Elman => 1,
            CellKind::Lstm => 4,
        }
    }
}

/// Architecture of a forecasting network.
///
/// The plain head maps the concatenation of the top layer's last output and
/// its time-average straight to the `horizon × n_targets` forecast. The
/// residual head also sees a per-step linear projection of the raw input
/// window, lifts everything to `linear_dim`, applies `n_linear` residual
/// tanh blocks and, with `input_skip`, adds a linear map of the last input
/// step to the output.
///
/// Inverted dropout with drop probability `dropout_rate` sits between
/// recurrent layers and, in the residual head, on the lifted vector, on each
/// block output and on the final hidden vector before the output layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub input_dim: usize,
    pub window_len: usize,
    pub horizon: usize,
    pub n_targets: usize,
    pub cell: CellKind,
    pub hidden_dim: usize,
    pub n_layers: usize,
    pub bidirectional: bool,
    pub residual_head: bool,
    pub input_skip: bool,
    pub linear_dim: usize,
    pub n_linear: usize,
    pub proj_dim: usize,
    pub dropout_rate: f64,
    pub seed: u64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            input_dim: 1,
            window_len: 40,
            horizon: 128,
            n_targets: 1,
            cell: CellKind::Lstm,
            hidden_dim: 256,
            n_layers: 2,
            bidirectional: true,
            residual_head: true,
            input_skip: true,
            linear_dim: 520,
            n_linear: 2,
            proj_dim: 8,
            dropout_rate: 0.2,
            seed: 0,
        }
    }
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("input_dim", self.input_dim),
            ("window_len", self.window_len),
            ("horizon", self.horizon),
            ("n_targets", self.n_targets),
            ("hidden_dim", self.hidden_dim),
            ("n_layers", self.n_layers),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(config(format!("network {name} must be positive")));
            }
        }
        if self.residual_head && (self.linear_dim == 0 || self.proj_dim == 0) {
            return Err(config("residual head needs positive linear_dim and proj_dim"));
        }
        if self.input_skip && !self.residual_head {
            return Err(config("input_skip requires the residual head"));
        }
        check_rate(self.dropout_rate)
    }

    pub fn directions(&self) -> usize {
        if self.bidirectional {
            2
        } else {
            1
        }
    }

    /// Width of the top recurrent layer output.
    pub fn recurrent_width(&self) -> usize {
        self.hidden_dim * self.directions()
    }

    fn summary_width(&self) -> usize {
        let base = 2 * self.recurrent_width();
        if self.residual_head {
            base + self.window_len * self.proj_dim
        } else {
            base
        }
    }

    pub fn output_width(&self) -> usize {
        self.horizon * self.n_targets
    }
}

#[derive(Debug, Clone, Copy)]
struct Affine {
    w: usize,
    b: usize,
}

#[derive(Debug, Clone, Copy)]
struct DirParams {
    w_in: usize,
    w_rec: usize,
    bias: usize,
}

#[derive(Debug, Clone)]
struct Layout {
    layers: Vec<Vec<DirParams>>,
    proj: Option<Affine>,
    lift: Option<Affine>,
    blocks: Vec<Affine>,
    out: Affine,
    skip: Option<usize>,
}

#[derive(Debug, Clone)]
struct LayerTape {
    input: Array2<f64>,
    dirs: Vec<DirCache>,
    /// Mask applied to this layer's output before the next layer.
    out_mask: Option<Array2<f64>>,
}

#[derive(Debug, Clone)]
struct Tape {
    batch: usize,
    x0: Array2<f64>,
    layers: Vec<LayerTape>,
    z_mask: Option<Array2<f64>>,
    z_used: Array2<f64>,
    us: Vec<Array2<f64>>,
    block_t: Vec<Array2<f64>>,
    block_masks: Vec<Option<Array2<f64>>>,
    /// Input of the output layer as used, and its dropout mask (residual
    /// head only; the plain head's input is `z_used`).
    head_in: Array2<f64>,
    head_mask: Option<Array2<f64>>,
    x_last: Array2<f64>,
}

/// A stacked (bi)directional recurrent network with its forecast head.
#[derive(Debug, Clone)]
pub struct Network {
    config: NetworkConfig,
    params: NetworkParameters,
    layout: Layout,
    tape: Option<Tape>,
}

fn uniform_init(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    let bound = 1.0 / (cols as f64).sqrt();
    Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-bound..=bound))
}

fn affine(x: &Array2<f64>, w: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    let mut y = x.dot(&w.t());
    y += b;
    y
}

fn masked(x: Array2<f64>, mask: &Option<Array2<f64>>) -> Array2<f64> {
    match mask {
        Some(m) => x * m,
        None => x,
    }
}

impl Network {
    /// Builds a network with freshly initialised weights drawn from
    /// `config.seed`.
    pub fn new(config: NetworkConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut params = NetworkParameters::default();
        let hidden = config.hidden_dim;
        let gates = config.cell.gates();
        let mut layers = Vec::with_capacity(config.n_layers);
        for l in 0..config.n_layers {
            let in_dim = if l == 0 {
                config.input_dim
            } else {
                config.recurrent_width()
            };
            let mut dirs = Vec::new();
            for d in 0..config.directions() {
                let tag = if d == 0 { "fwd" } else { "bwd" };
                let w_in = params.push(
                    format!("layer{l}.{tag}.w_in"),
                    uniform_init(&mut rng, gates * hidden, in_dim),
                );
                let w_rec = params.push(
                    format!("layer{l}.{tag}.w_rec"),
                    uniform_init(&mut rng, gates * hidden, hidden),
                );
                let mut b = Array2::zeros((1, gates * hidden));
                if config.cell == CellKind::Lstm {
                    b.slice_mut(s![.., hidden..2 * hidden]).fill(1.0);
                }
                let bias = params.push(format!("layer{l}.{tag}.bias"), b);
                dirs.push(DirParams { w_in, w_rec, bias });
            }
            layers.push(dirs);
        }

        let out_dim = config.output_width();
        let mut push_affine = |params: &mut NetworkParameters, name: &str, rows: usize, cols: usize| Affine {
            w: params.push(format!("{name}.w"), uniform_init(&mut rng, rows, cols)),
            b: params.push(format!("{name}.b"), Array2::zeros((1, rows))),
        };
        let layout = if config.residual_head {
            let proj = push_affine(&mut params, "head.proj", config.proj_dim, config.input_dim);
            let lift = push_affine(&mut params, "head.lift", config.linear_dim, config.summary_width());
            let blocks = (0..config.n_linear)
                .map(|k| {
                    push_affine(
                        &mut params,
                        &format!("head.block{k}"),
                        config.linear_dim,
                        config.linear_dim,
                    )
                })
                .collect();
            let out = push_affine(&mut params, "head.out", out_dim, config.linear_dim);
            let skip = config.input_skip.then(|| {
                params.push(
                    "head.skip.w",
                    uniform_init(&mut rng, out_dim, config.input_dim),
                )
            });
            Layout {
                layers,
                proj: Some(proj),
                lift: Some(lift),
                blocks,
                out,
                skip,
            }
        } else {
            let out = push_affine(&mut params, "head.out", out_dim, config.summary_width());
            Layout {
                layers,
                proj: None,
                lift: None,
                blocks: Vec::new(),
                out,
                skip: None,
            }
        };
        Ok(Self {
            config,
            params,
            layout,
            tape: None,
        })
    }

    /// Rebuilds a network around stored parameters.
    pub(crate) fn from_parts(config: NetworkConfig, params: NetworkParameters) -> Result<Self> {
        let mut net = Network::new(config)?;
        if net.params.params.len() != params.params.len() {
            return Err(shape("parameter count does not match the architecture"));
        }
        for (mine, theirs) in net.params.params.iter().zip(&params.params) {
            if mine.name != theirs.name || mine.value.dim() != theirs.value.dim() {
                return Err(shape(format!(
                    "parameter {} {:?} does not match stored {} {:?}",
                    mine.name,
                    mine.value.dim(),
                    theirs.name,
                    theirs.value.dim()
                )));
            }
        }
        net.params = params;
        Ok(net)
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    /// Changes the dropout rate used by subsequent passes, e.g. to switch
    /// MC-dropout inference on or off for a trained model.
    pub fn set_dropout_rate(&mut self, rate: f64) -> Result<()> {
        check_rate(rate)?;
        self.config.dropout_rate = rate;
        Ok(())
    }

    pub fn params(&self) -> &NetworkParameters {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut NetworkParameters {
        &mut self.params
    }

    /// Weights of one recurrent direction (`0` forward, `1` backward) in
    /// single-step cell form.
    pub fn cell_params(&self, layer: usize, direction: usize) -> Option<LstmCellParams> {
        let d = self.layout.layers.get(layer)?.get(direction)?;
        let p = &self.params.params;
        Some(LstmCellParams {
            w_input: p[d.w_in].value.clone(),
            w_recurrent: p[d.w_rec].value.clone(),
            bias: p[d.bias].value.row(0).to_owned(),
        })
    }

    /// Forward pass that records what `backward` needs.
    pub fn forward<R: Rng + ?Sized>(
        &mut self,
        inputs: ArrayView3<f64>,
        mode: DropoutMode,
        rng: &mut R,
    ) -> Result<Array3<f64>> {
        let (out, tape) = self.run(inputs, mode, rng)?;
        self.tape = Some(tape);
        Ok(out)
    }

    /// Forward pass without recording.
    pub fn predict<R: Rng + ?Sized>(
        &self,
        inputs: ArrayView3<f64>,
        mode: DropoutMode,
        rng: &mut R,
    ) -> Result<Array3<f64>> {
        Ok(self.run(inputs, mode, rng)?.0)
    }

    /// Outputs of the top recurrent layer for one `steps × input_dim`
    /// sequence, without dropout.
    pub fn recurrent_outputs(&self, sequence: ArrayView2<f64>) -> Result<Array2<f64>> {
        let (steps, dim) = sequence.dim();
        if dim != self.config.input_dim || steps == 0 {
            return Err(shape(format!(
                "expected a non-empty sequence of width {}, got {steps} × {dim}",
                self.config.input_dim
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let layers = self.run_recurrent(sequence.to_owned(), 1, steps, DropoutMode::Eval, &mut rng);
        Ok(layers.1)
    }

    fn check_inputs(&self, inputs: &ArrayView3<f64>) -> Result<()> {
        let (b, l, d) = inputs.dim();
        if b == 0 || l != self.config.window_len || d != self.config.input_dim {
            return Err(shape(format!(
                "network expects (batch, {}, {}) inputs, got ({b}, {l}, {d})",
                self.config.window_len, self.config.input_dim
            )));
        }
        Ok(())
    }

    fn run_recurrent<R: Rng + ?Sized>(
        &self,
        x0: Array2<f64>,
        batch: usize,
        steps: usize,
        mode: DropoutMode,
        rng: &mut R,
    ) -> (Vec<LayerTape>, Array2<f64>) {
        let p = &self.params.params;
        let n_layers = self.layout.layers.len();
        let hidden = self.config.hidden_dim;
        let mut input = x0;
        let mut tapes = Vec::with_capacity(n_layers);
        for (l, dirs) in self.layout.layers.iter().enumerate() {
            let mut out = Array2::zeros((batch * steps, hidden * dirs.len()));
            let mut caches = Vec::with_capacity(dirs.len());
            for (d, dp) in dirs.iter().enumerate() {
                let pre = affine(&input, &p[dp.w_in].value, &p[dp.bias].value);
                let cache = dir_forward(
                    self.config.cell,
                    pre,
                    p[dp.w_rec].value.view(),
                    batch,
                    steps,
                    d == 1,
                );
                out.slice_mut(s![.., d * hidden..(d + 1) * hidden]).assign(&cache.h);
                caches.push(cache);
            }
            let out_mask = if l + 1 < n_layers {
                make_mask(out.dim(), self.config.dropout_rate, mode, rng)
            } else {
                None
            };
            let next = masked(out, &out_mask);
            tapes.push(LayerTape {
                input: std::mem::replace(&mut input, next),
                dirs: caches,
                out_mask,
            });
        }
        (tapes, input)
    }

    fn run<R: Rng + ?Sized>(
        &self,
        inputs: ArrayView3<f64>,
        mode: DropoutMode,
        rng: &mut R,
    ) -> Result<(Array3<f64>, Tape)> {
        self.check_inputs(&inputs)?;
        let cfg = &self.config;
        let (batch, steps, dim) = inputs.dim();
        let p = &self.params.params;

        let mut x0 = Array2::zeros((steps * batch, dim));
        for t in 0..steps {
            x0.slice_mut(s![t * batch..(t + 1) * batch, ..])
                .assign(&inputs.index_axis(Axis(1), t));
        }
        let (layers, top) = self.run_recurrent(x0.clone(), batch, steps, mode, rng);

        let width = cfg.recurrent_width();
        let mut z = Array2::zeros((batch, cfg.summary_width()));
        z.slice_mut(s![.., 0..width])
            .assign(&top.slice(s![(steps - 1) * batch.., ..]));
        {
            let mut mean = z.slice_mut(s![.., width..2 * width]);
            for t in 0..steps {
                mean += &top.slice(s![t * batch..(t + 1) * batch, ..]);
            }
            mean /= steps as f64;
        }
        let x_last = x0.slice(s![(steps - 1) * batch.., ..]).to_owned();
        if let Some(proj) = self.layout.proj {
            let pr = affine(&x0, &p[proj.w].value, &p[proj.b].value);
            let pd = cfg.proj_dim;
            for t in 0..steps {
                let col = 2 * width + t * pd;
                z.slice_mut(s![.., col..col + pd])
                    .assign(&pr.slice(s![t * batch..(t + 1) * batch, ..]));
            }
        }
        let z_mask = make_mask(z.dim(), cfg.dropout_rate, mode, rng);
        let z_used = masked(z, &z_mask);

        let mut us = Vec::new();
        let mut block_t = Vec::new();
        let mut block_masks = Vec::new();
        let mut head_mask = None;
        let head_in = if let Some(lift) = self.layout.lift {
            let mut u = affine(&z_used, &p[lift.w].value, &p[lift.b].value);
            for blk in &self.layout.blocks {
                let t = affine(&u, &p[blk.w].value, &p[blk.b].value).mapv(f64::tanh);
                let mask = make_mask(t.dim(), cfg.dropout_rate, mode, rng);
                let next = &u + &masked(t.clone(), &mask);
                us.push(std::mem::replace(&mut u, next));
                block_t.push(t);
                block_masks.push(mask);
            }
            us.push(u.clone());
            head_mask = make_mask(u.dim(), cfg.dropout_rate, mode, rng);
            masked(u, &head_mask)
        } else {
            z_used.clone()
        };
        let out_aff = self.layout.out;
        let mut out = affine(&head_in, &p[out_aff.w].value, &p[out_aff.b].value);
        if let Some(skip) = self.layout.skip {
            general_mat_mul(1.0, &x_last, &p[skip].value.t(), 1.0, &mut out);
        }
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite network output".into()));
        }
        let out = out
            .into_shape_with_order((batch, cfg.horizon, cfg.n_targets))
            .map_err(|e| shape(e.to_string()))?;
        let tape = Tape {
            batch,
            x0,
            layers,
            z_mask,
            z_used,
            us,
            block_t,
            block_masks,
            head_in,
            head_mask,
            x_last,
        };
        Ok((out, tape))
    }

    /// Writes the gradient of the loss into every parameter's `grad`, given
    /// `d_out = ∂loss/∂output` for the last recorded `forward`.
    pub fn backward(&mut self, d_out: ArrayView3<f64>) -> Result<()> {
        let tape = self
            .tape
            .take()
            .ok_or_else(|| Error::Usage("backward called without a recorded forward pass".into()))?;
        let cfg = self.config.clone();
        let batch = tape.batch;
        if d_out.dim() != (batch, cfg.horizon, cfg.n_targets) {
            return Err(shape(format!(
                "output gradient has shape {:?}, expected ({batch}, {}, {})",
                d_out.dim(),
                cfg.horizon,
                cfg.n_targets
            )));
        }
        let d_out = d_out
            .to_owned()
            .into_shape_with_order((batch, cfg.output_width()))
            .map_err(|e| shape(e.to_string()))?;
        self.params.zero_grad();
        let layout = self.layout.clone();
        let p = &mut self.params.params;

        let add_affine = |p: &mut Vec<super::Param>, a: Affine, dy: &Array2<f64>, x: &Array2<f64>| {
            general_mat_mul(1.0, &dy.t(), x, 1.0, &mut p[a.w].grad);
            let mut gb = p[a.b].grad.row_mut(0);
            gb += &dy.sum_axis(Axis(0));
        };

        // Head.
        add_affine(p, layout.out, &d_out, &tape.head_in);
        if let Some(skip) = layout.skip {
            general_mat_mul(1.0, &d_out.t(), &tape.x_last, 1.0, &mut p[skip].grad);
        }
        let mut d_head = d_out.dot(&p[layout.out.w].value);
        if let Some(lift) = layout.lift {
            d_head = masked(d_head, &tape.head_mask);
            for (k, blk) in layout.blocks.iter().enumerate().rev() {
                let t = &tape.block_t[k];
                let mut d_a = masked(d_head.clone(), &tape.block_masks[k]);
                d_a.zip_mut_with(t, |g, t| *g *= 1.0 - t * t);
                add_affine(p, *blk, &d_a, &tape.us[k]);
                general_mat_mul(1.0, &d_a, &p[blk.w].value, 1.0, &mut d_head);
            }
            add_affine(p, lift, &d_head, &tape.z_used);
            d_head = d_head.dot(&p[lift.w].value);
        }
        let d_z = masked(d_head, &tape.z_mask);

        let steps = cfg.window_len;
        let width = cfg.recurrent_width();
        let mut d_top = Array2::<f64>::zeros((steps * batch, width));
        let d_mean = d_z.slice(s![.., width..2 * width]).mapv(|v| v / steps as f64);
        for t in 0..steps {
            let mut rows = d_top.slice_mut(s![t * batch..(t + 1) * batch, ..]);
            rows += &d_mean;
        }
        {
            let mut last = d_top.slice_mut(s![(steps - 1) * batch.., ..]);
            last += &d_z.slice(s![.., 0..width]);
        }
        if let Some(proj) = layout.proj {
            let pd = cfg.proj_dim;
            let mut d_proj = Array2::zeros((steps * batch, pd));
            for t in 0..steps {
                let col = 2 * width + t * pd;
                d_proj
                    .slice_mut(s![t * batch..(t + 1) * batch, ..])
                    .assign(&d_z.slice(s![.., col..col + pd]));
            }
            add_affine(p, proj, &d_proj, &tape.x0);
        }

        // Recurrent stack, top down.
        let hidden = cfg.hidden_dim;
        let mut d_layer_out = d_top;
        for (l, dirs) in layout.layers.iter().enumerate().rev() {
            let lt = &tape.layers[l];
            let mut d_input = Array2::zeros(lt.input.dim());
            for (d, dp) in dirs.iter().enumerate() {
                let d_h = d_layer_out.slice(s![.., d * hidden..(d + 1) * hidden]);
                let (d_a, d_wrec) = dir_backward(
                    cfg.cell,
                    &lt.dirs[d],
                    p[dp.w_rec].value.view(),
                    d_h,
                    batch,
                    steps,
                    d == 1,
                );
                p[dp.w_rec].grad += &d_wrec;
                general_mat_mul(1.0, &d_a.t(), &lt.input, 1.0, &mut p[dp.w_in].grad);
                let mut gb = p[dp.bias].grad.row_mut(0);
                gb += &d_a.sum_axis(Axis(0));
                if l > 0 {
                    general_mat_mul(1.0, &d_a, &p[dp.w_in].value, 1.0, &mut d_input);
                }
            }
            if l > 0 {
                d_layer_out = masked(d_input, &tape.layers[l - 1].out_mask);
            }
        }
        if p.iter().any(|q| q.grad.iter().any(|g| !g.is_finite())) {
            return Err(Error::Numeric("non-finite gradient".into()));
        }
        Ok(())
    }
}
