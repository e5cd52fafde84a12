//! Stacked LSTM regressor with hand-written backpropagation through time.
//!
//! Per layer and time step, gate blocks are stacked as `[i, f, o, g]`:
//!
//! ```text
//! i, f, o = σ(W_x·x_t + W_h·h_{t−1} + b)      g = tanh(…)
//! c_t = f ⊙ c_{t−1} + i ⊙ g                  h_t = o ⊙ tanh(c_t)
//! ```
//!
//! Each layer's output sequence passes through inverted dropout (training
//! only) before feeding the next layer. The final output at the last step
//! goes through the configured activation and a single dense unit.
//!
//! All parameters live in one flat vector so that optimizers and gradient
//! checks can treat them uniformly; [`LstmModel::tensors`] describes the
//! layout.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dataset::{Scaler, SequenceSample};
use super::train::TrainConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Sigmoid,
    Tanh,
}

impl Activation {
    pub const ALL: [Activation; 3] = [Activation::Relu, Activation::Sigmoid, Activation::Tanh];

    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Sigmoid => sigmoid(x),
            Activation::Tanh => x.tanh(),
        }
    }

    /// Derivative at `x`, given `y = apply(x)`.
    fn derivative(self, x: f64, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Tanh => 1.0 - y * y,
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "relu" => Ok(Activation::Relu),
            "sigmoid" => Ok(Activation::Sigmoid),
            "tanh" => Ok(Activation::Tanh),
            _ => Err(Error::Config(format!("unknown activation {s:?}"))),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Sigmoid => "sigmoid",
            Activation::Tanh => "tanh",
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct LayerLayout {
    input: usize,
    hidden: usize,
    w_x: usize,
    w_h: usize,
    bias: usize,
}

/// Name, offset and shape (rows, cols) of one parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorInfo {
    pub name: String,
    pub offset: usize,
    pub rows: usize,
    pub cols: usize,
}

impl TensorInfo {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmModel {
    pub config: TrainConfig,
    pub n_features: usize,
    pub scaler: Scaler,
    params: Vec<f64>,
    layers: Vec<LayerLayout>,
    dense_w: usize,
    dense_b: usize,
}

struct LayerCache {
    /// T × input
    xs: Vec<f64>,
    /// T × 4H, post-activation gates
    gates: Vec<f64>,
    /// (T+1) × H, row 0 is the zero initial state
    cs: Vec<f64>,
    hs: Vec<f64>,
    /// T × H
    tanh_c: Vec<f64>,
    /// T × H inverted-dropout multipliers
    mask: Option<Vec<f64>>,
}

pub(crate) struct ForwardCache {
    layers: Vec<LayerCache>,
    top_pre: Vec<f64>,
    top_act: Vec<f64>,
    pub(crate) output: f64,
}

fn build_layout(n_features: usize, hidden: usize, n_layers: usize) -> (Vec<LayerLayout>, usize, usize, usize) {
    let mut off = 0;
    let mut layers = Vec::with_capacity(n_layers);
    for l in 0..n_layers {
        let input = if l == 0 { n_features } else { hidden };
        let w_x = off;
        let w_h = w_x + 4 * hidden * input;
        let bias = w_h + 4 * hidden * hidden;
        off = bias + 4 * hidden;
        layers.push(LayerLayout { input, hidden, w_x, w_h, bias });
    }
    let dense_w = off;
    let dense_b = dense_w + hidden;
    (layers, dense_w, dense_b, dense_b + 1)
}

impl LstmModel {
    /// Fresh model: Glorot-uniform matrices, zero biases except the forget
    /// gate (1.0), identity scaler.
    pub fn new(config: &TrainConfig, n_features: usize) -> Result<Self> {
        config.validate()?;
        if n_features == 0 {
            return Err(Error::Config("model needs at least one input feature".into()));
        }
        let mut model = Self::zeros(config, n_features);
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let h = config.hidden_units;
        for l in model.layers.clone() {
            let lim_x = (6.0 / (l.input + 4 * h) as f64).sqrt();
            for w in &mut model.params[l.w_x..l.w_h] {
                *w = rng.gen_range(-lim_x..lim_x);
            }
            let lim_h = (6.0 / (h + 4 * h) as f64).sqrt();
            for w in &mut model.params[l.w_h..l.bias] {
                *w = rng.gen_range(-lim_h..lim_h);
            }
            for b in &mut model.params[l.bias + h..l.bias + 2 * h] {
                *b = 1.0;
            }
        }
        let lim_d = (6.0 / (h + 1) as f64).sqrt();
        for w in &mut model.params[model.dense_w..model.dense_b] {
            *w = rng.gen_range(-lim_d..lim_d);
        }
        Ok(model)
    }

    /// All parameters zero, identity scaler.
    pub fn zeros(config: &TrainConfig, n_features: usize) -> Self {
        let (layers, dense_w, dense_b, total) = build_layout(n_features, config.hidden_units, config.lstm_layers);
        LstmModel {
            config: config.clone(),
            n_features,
            scaler: Scaler::identity(n_features),
            params: vec![0.0; total],
            layers,
            dense_w,
            dense_b,
        }
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn set_dense_bias(&mut self, b: f64) {
        self.params[self.dense_b] = b;
    }

    pub fn dense_bias(&self) -> f64 {
        self.params[self.dense_b]
    }

    /// Layout of the flat parameter vector, in storage order.
    pub fn tensors(&self) -> Vec<TensorInfo> {
        let mut out = Vec::new();
        for (i, l) in self.layers.iter().enumerate() {
            let h4 = 4 * l.hidden;
            out.push(TensorInfo { name: format!("layer{i}.w_x"), offset: l.w_x, rows: h4, cols: l.input });
            out.push(TensorInfo { name: format!("layer{i}.w_h"), offset: l.w_h, rows: h4, cols: l.hidden });
            out.push(TensorInfo { name: format!("layer{i}.bias"), offset: l.bias, rows: 1, cols: h4 });
        }
        let h = self.config.hidden_units;
        out.push(TensorInfo { name: "dense.w".into(), offset: self.dense_w, rows: 1, cols: h });
        out.push(TensorInfo { name: "dense.b".into(), offset: self.dense_b, rows: 1, cols: 1 });
        out
    }

    fn check_window(&self, window: &[Vec<f64>]) -> Result<()> {
        if window.len() != self.config.look_back {
            return Err(Error::Input(format!(
                "window has {} steps, model expects {}",
                window.len(),
                self.config.look_back
            )));
        }
        if window.iter().any(|v| v.len() != self.n_features) {
            return Err(Error::Input(format!("model expects {} features per step", self.n_features)));
        }
        Ok(())
    }

    /// Scaled prediction for a raw sample. Passing an RNG switches on
    /// training mode (dropout); without one the call is deterministic.
    pub fn forward(&self, sample: &SequenceSample, training: Option<&mut ChaCha8Rng>) -> Result<f64> {
        self.check_window(&sample.window)?;
        let x = self.scaler.scale_window(&sample.window);
        Ok(self.forward_cached(&x, training).output)
    }

    /// Mass % predicted for a raw sample, inference mode.
    pub fn predict(&self, sample: &SequenceSample) -> Result<f64> {
        self.forward(sample, None).map(|y| self.scaler.unscale_target(y))
    }

    /// Forward pass on an already scaled, time-major flattened window.
    pub(crate) fn forward_cached(&self, x: &[f64], training: Option<&mut ChaCha8Rng>) -> ForwardCache {
        let steps = self.config.look_back;
        let p = &self.params;
        let keep = 1.0 - self.config.dropout;
        let mut rng = if self.config.dropout > 0.0 { training } else { None };
        let mut layer_input: Vec<f64> = x.to_vec();
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::new();

        for l in &self.layers {
            let (n_in, h) = (l.input, l.hidden);
            let mut gates = vec![0.0; steps * 4 * h];
            let mut cs = vec![0.0; (steps + 1) * h];
            let mut hs = vec![0.0; (steps + 1) * h];
            let mut tanh_c = vec![0.0; steps * h];
            pre.resize(4 * h, 0.0);
            for t in 0..steps {
                let xt = &layer_input[t * n_in..(t + 1) * n_in];
                let hp = &hs[t * h..(t + 1) * h];
                for r in 0..4 * h {
                    let wx = &p[l.w_x + r * n_in..l.w_x + (r + 1) * n_in];
                    let wh = &p[l.w_h + r * h..l.w_h + (r + 1) * h];
                    let mut acc = p[l.bias + r];
                    acc += wx.iter().zip(xt).map(|(a, b)| a * b).sum::<f64>();
                    acc += wh.iter().zip(hp).map(|(a, b)| a * b).sum::<f64>();
                    pre[r] = acc;
                }
                let g = &mut gates[t * 4 * h..(t + 1) * 4 * h];
                for j in 0..3 * h {
                    g[j] = sigmoid(pre[j]);
                }
                for j in 3 * h..4 * h {
                    g[j] = pre[j].tanh();
                }
                for j in 0..h {
                    let (i, f, o, cand) = (g[j], g[h + j], g[2 * h + j], g[3 * h + j]);
                    let c = f * cs[t * h + j] + i * cand;
                    let tc = c.tanh();
                    cs[(t + 1) * h + j] = c;
                    tanh_c[t * h + j] = tc;
                    hs[(t + 1) * h + j] = o * tc;
                }
            }
            let mask = rng.as_deref_mut().map(|r| {
                (0..steps * h)
                    .map(|_| if r.gen::<f64>() < keep { 1.0 / keep } else { 0.0 })
                    .collect::<Vec<f64>>()
            });
            let mut out = hs[h..].to_vec();
            if let Some(m) = &mask {
                for (o, k) in out.iter_mut().zip(m) {
                    *o *= k;
                }
            }
            caches.push(LayerCache { xs: std::mem::take(&mut layer_input), gates, cs, hs, tanh_c, mask });
            layer_input = out;
        }

        let h = self.config.hidden_units;
        let top_pre = layer_input[(steps - 1) * h..steps * h].to_vec();
        let act = self.config.activation;
        let top_act: Vec<f64> = top_pre.iter().map(|&v| act.apply(v)).collect();
        let output = p[self.dense_b]
            + p[self.dense_w..self.dense_w + h].iter().zip(&top_act).map(|(a, b)| a * b).sum::<f64>();
        ForwardCache { layers: caches, top_pre, top_act, output }
    }

    /// Accumulates `d_output · ∂output/∂θ` into `grad`.
    pub(crate) fn backward(&self, cache: &ForwardCache, d_output: f64, grad: &mut [f64]) {
        let steps = self.config.look_back;
        let p = &self.params;
        let h_top = self.config.hidden_units;
        let act = self.config.activation;

        grad[self.dense_b] += d_output;
        let mut d_out = vec![0.0; steps * h_top];
        for j in 0..h_top {
            grad[self.dense_w + j] += d_output * cache.top_act[j];
            let w = p[self.dense_w + j];
            d_out[(steps - 1) * h_top + j] = d_output * w * act.derivative(cache.top_pre[j], cache.top_act[j]);
        }

        for (l, lc) in self.layers.iter().zip(&cache.layers).rev() {
            let (n_in, h) = (l.input, l.hidden);
            let mut d_in = vec![0.0; steps * n_in];
            let mut dh_next = vec![0.0; h];
            let mut dc_next = vec![0.0; h];
            let mut dpre = vec![0.0; 4 * h];
            for t in (0..steps).rev() {
                let g = &lc.gates[t * 4 * h..(t + 1) * 4 * h];
                for j in 0..h {
                    let mut dh = d_out[t * h + j];
                    if let Some(m) = &lc.mask {
                        dh *= m[t * h + j];
                    }
                    dh += dh_next[j];
                    let (i, f, o, cand) = (g[j], g[h + j], g[2 * h + j], g[3 * h + j]);
                    let tc = lc.tanh_c[t * h + j];
                    let c_prev = lc.cs[t * h + j];
                    let dc = dh * o * (1.0 - tc * tc) + dc_next[j];
                    dpre[j] = dc * cand * i * (1.0 - i);
                    dpre[h + j] = dc * c_prev * f * (1.0 - f);
                    dpre[2 * h + j] = dh * tc * o * (1.0 - o);
                    dpre[3 * h + j] = dc * i * (1.0 - cand * cand);
                    dc_next[j] = dc * f;
                }
                let xt = &lc.xs[t * n_in..(t + 1) * n_in];
                let hp = &lc.hs[t * h..(t + 1) * h];
                dh_next.iter_mut().for_each(|v| *v = 0.0);
                let dx = &mut d_in[t * n_in..(t + 1) * n_in];
                for (r, &dr) in dpre.iter().enumerate() {
                    if dr == 0.0 {
                        continue;
                    }
                    grad[l.bias + r] += dr;
                    let gx = l.w_x + r * n_in;
                    for k in 0..n_in {
                        grad[gx + k] += dr * xt[k];
                        dx[k] += p[gx + k] * dr;
                    }
                    let gh = l.w_h + r * h;
                    for k in 0..h {
                        grad[gh + k] += dr * hp[k];
                        dh_next[k] += p[gh + k] * dr;
                    }
                }
            }
            d_out = d_in;
        }
    }

    /// Squared error of one scaled sample and its gradient accumulated into
    /// `grad` with weight `scale`.
    pub(crate) fn accumulate_gradient(
        &self,
        x: &[f64],
        target: f64,
        scale: f64,
        training: Option<&mut ChaCha8Rng>,
        grad: &mut [f64],
    ) -> f64 {
        let cache = self.forward_cached(x, training);
        let err = cache.output - target;
        self.backward(&cache, scale * 2.0 * err, grad);
        err * err
    }

    /// Nested per-layer weights: `(w_x rows, w_h rows, bias)`, rows of
    /// length `input` and `hidden` respectively.
    pub fn layer_weights(&self) -> Vec<(Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<f64>)> {
        self.layers
            .iter()
            .map(|l| {
                let rows = |off: usize, cols: usize| -> Vec<Vec<f64>> {
                    (0..4 * l.hidden).map(|r| self.params[off + r * cols..off + (r + 1) * cols].to_vec()).collect()
                };
                (
                    rows(l.w_x, l.input),
                    rows(l.w_h, l.hidden),
                    self.params[l.bias..l.bias + 4 * l.hidden].to_vec(),
                )
            })
            .collect()
    }

    pub fn dense_weights(&self) -> (Vec<f64>, f64) {
        (self.params[self.dense_w..self.dense_b].to_vec(), self.params[self.dense_b])
    }

    /// Rebuilds a model from nested weights, checking every shape.
    pub fn from_weights(
        config: &TrainConfig,
        n_features: usize,
        scaler: Scaler,
        layers: &[(Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<f64>)],
        dense: (&[f64], f64),
    ) -> Result<Self> {
        config.validate()?;
        let mut model = Self::zeros(config, n_features);
        if layers.len() != model.layers.len() {
            return Err(Error::Input(format!(
                "checkpoint has {} layers, config says {}",
                layers.len(),
                model.layers.len()
            )));
        }
        if scaler.n_features() != n_features {
            return Err(Error::Input("scaler feature count mismatch".into()));
        }
        let shape_err = |what: &str| Error::Input(format!("checkpoint tensor {what} has the wrong shape"));
        for (i, (l, (wx, wh, b))) in model.layers.clone().iter().zip(layers).enumerate() {
            let copy_rows = |rows: &Vec<Vec<f64>>, cols: usize, off: usize, params: &mut [f64], name: &str| -> Result<()> {
                if rows.len() != 4 * l.hidden || rows.iter().any(|r| r.len() != cols) {
                    return Err(shape_err(name));
                }
                for (r, row) in rows.iter().enumerate() {
                    params[off + r * cols..off + (r + 1) * cols].copy_from_slice(row);
                }
                Ok(())
            };
            copy_rows(wx, l.input, l.w_x, &mut model.params, &format!("layer{i}.w_x"))?;
            copy_rows(wh, l.hidden, l.w_h, &mut model.params, &format!("layer{i}.w_h"))?;
            if b.len() != 4 * l.hidden {
                return Err(shape_err(&format!("layer{i}.bias")));
            }
            model.params[l.bias..l.bias + 4 * l.hidden].copy_from_slice(b);
        }
        if dense.0.len() != config.hidden_units {
            return Err(shape_err("dense.w"));
        }
        let (dw, db) = (model.dense_w, model.dense_b);
        model.params[dw..db].copy_from_slice(dense.0);
        model.params[db] = dense.1;
        for (min, max) in scaler.feature_min.iter().zip(&scaler.feature_max) {
            if !(min < max) {
                return Err(Error::Input("scaler requires min < max per feature".into()));
            }
        }
        model.scaler = scaler;
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(hidden: usize, layers: usize, look_back: usize) -> TrainConfig {
        TrainConfig { hidden_units: hidden, lstm_layers: layers, look_back, dropout: 0.0, ..TrainConfig::default() }
    }

    fn sample(look_back: usize, nf: usize) -> SequenceSample {
        SequenceSample {
            curve_id: "c".into(),
            window: (0..look_back).map(|t| (0..nf).map(|j| 0.1 * (t + j) as f64).collect()).collect(),
            target: 0.5,
            temperature_c: 0.0,
        }
    }

    #[test]
    fn zero_weights_predict_dense_bias() {
        let mut m = LstmModel::zeros(&cfg(3, 2, 5), 4);
        m.set_dense_bias(0.37);
        assert_eq!(m.forward(&sample(5, 4), None).unwrap(), 0.37);
    }

    #[test]
    fn hand_computed_single_unit_cell() {
        // hidden = 1, one input, window [0.5, −1.0]
        let config = TrainConfig { activation: Activation::Tanh, ..cfg(1, 1, 2) };
        let mut m = LstmModel::zeros(&config, 1);
        let infos = m.tensors();
        let (wx, wh, b) = (infos[0].offset, infos[1].offset, infos[2].offset);
        let p = m.params_mut();
        // gate order i, f, o, g
        p[wx..wx + 4].copy_from_slice(&[0.5, -0.3, 0.8, 1.2]);
        p[wh..wh + 4].copy_from_slice(&[0.1, 0.2, -0.4, 0.7]);
        p[b..b + 4].copy_from_slice(&[0.0, 1.0, 0.1, -0.2]);
        let dw = infos[3].offset;
        p[dw] = 2.0;
        p[dw + 1] = 0.25;
        let s = SequenceSample { curve_id: "x".into(), window: vec![vec![0.5], vec![-1.0]], target: 0.0, temperature_c: 0.0 };
        // t0: i=σ(.25)=.562177, f=σ(.85)=.700567, o=σ(.5)=.622459,
        //     g=tanh(.4)=.379949, c=.213598, h=.130971
        // t1: i=.380623, f=.790210, o=.320301, g=−.863850,
        //     c=−.160014, h=−.050820
        // y = 2·tanh(−.050820) + .25 = .148448
        let y = m.forward(&s, None).unwrap();
        assert!((y - 0.148448).abs() < 1e-6, "{y}");
    }

    #[test]
    fn inference_is_deterministic() {
        let m = LstmModel::new(&cfg(4, 2, 6), 3).unwrap();
        let s = sample(6, 3);
        assert_eq!(m.forward(&s, None).unwrap().to_bits(), m.forward(&s, None).unwrap().to_bits());
    }

    #[test]
    fn rejects_wrong_window() {
        let m = LstmModel::new(&cfg(4, 1, 6), 3).unwrap();
        assert!(m.forward(&sample(5, 3), None).is_err());
        assert!(m.forward(&sample(6, 2), None).is_err());
    }

    #[test]
    fn forget_bias_initialized_to_one() {
        let m = LstmModel::new(&cfg(3, 1, 2), 2).unwrap();
        let b = &m.tensors()[2];
        let bias = &m.params()[b.offset..b.offset + b.len()];
        assert_eq!(&bias[0..3], &[0.0; 3]);
        assert_eq!(&bias[3..6], &[1.0; 3]);
    }

    #[test]
    fn weights_round_trip() {
        let m = LstmModel::new(&cfg(3, 2, 4), 5).unwrap();
        let (dw, db) = m.dense_weights();
        let back = LstmModel::from_weights(&m.config, 5, m.scaler.clone(), &m.layer_weights(), (&dw, db)).unwrap();
        assert_eq!(back, m);
    }
}
