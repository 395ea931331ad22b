//! Convolutional-recurrent policy/value network with hand-written
//! forward and backward passes.
//!
//! Parameters live in one flat vector. Layers are laid out in order, each as
//! weights followed by biases, then the policy head and the value head.

use std::fmt;

use forage_core::{Action, CHANNELS};
use rand::Rng;

use crate::error::LearnError;

pub const ACTIONS: usize = Action::COUNT;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Layer {
    /// 3x3 convolution, stride 1, zero padding 1, ReLU.
    Conv { channels: usize },
    /// 2x2 max pooling, stride 2; odd trailing rows/columns are dropped.
    MaxPool,
    /// Fully connected, ReLU.
    Dense { width: usize },
    /// LSTM cell.
    Lstm { width: usize },
}

impl fmt::Display for Layer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Layer::Conv { channels } => write!(f, "conv:{channels}"),
            Layer::MaxPool => f.write_str("pool"),
            Layer::Dense { width } => write!(f, "dense:{width}"),
            Layer::Lstm { width } => write!(f, "lstm:{width}"),
        }
    }
}

impl Layer {
    pub fn parse(token: &str) -> Option<Layer> {
        if token == "pool" {
            return Some(Layer::MaxPool);
        }
        let (kind, n) = token.split_once(':')?;
        let n: usize = n.parse().ok().filter(|n| *n > 0)?;
        match kind {
            "conv" => Some(Layer::Conv { channels: n }),
            "dense" => Some(Layer::Dense { width: n }),
            "lstm" => Some(Layer::Lstm { width: n }),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NetworkSpec {
    pub fov: usize,
    pub layers: Vec<Layer>,
}

impl NetworkSpec {
    /// conv(32) -> pool -> conv(32) -> dense(128) -> lstm(128).
    pub fn standard(fov: usize) -> Self {
        Self {
            fov,
            layers: vec![
                Layer::Conv { channels: 32 },
                Layer::MaxPool,
                Layer::Conv { channels: 32 },
                Layer::Dense { width: 128 },
                Layer::Lstm { width: 128 },
            ],
        }
    }

    /// Small network for tests and quick runs.
    pub fn micro(fov: usize) -> Self {
        Self {
            fov,
            layers: vec![
                Layer::Conv { channels: 2 },
                Layer::MaxPool,
                Layer::Dense { width: 6 },
                Layer::Lstm { width: 8 },
            ],
        }
    }

    pub fn input_len(&self) -> usize {
        CHANNELS * self.fov * self.fov
    }

    pub fn body_text(&self) -> String {
        self.layers.iter().map(Layer::to_string).collect::<Vec<_>>().join(" ")
    }

    pub fn parse_body(fov: usize, text: &str) -> Result<Self, LearnError> {
        let layers = text
            .split_whitespace()
            .map(|t| Layer::parse(t).ok_or_else(|| LearnError::Spec(format!("unknown layer {t:?}"))))
            .collect::<Result<Vec<_>, _>>()?;
        let spec = Self { fov, layers };
        spec.plan()?;
        Ok(spec)
    }

    fn plan(&self) -> Result<Plan, LearnError> {
        let fail = |m: String| Err(LearnError::Spec(m));
        if self.fov < 3 || self.fov.is_multiple_of(2) {
            return fail(format!("fov must be odd and >= 3, got {}", self.fov));
        }
        if self.layers.iter().filter(|l| matches!(l, Layer::Lstm { .. })).count() != 1 {
            return fail("exactly one lstm layer is required".into());
        }
        let mut shape = Shape::Spatial {
            c: CHANNELS,
            h: self.fov,
            w: self.fov,
        };
        let mut offset = 0;
        let mut stages = Vec::new();
        let mut lstm = 0;
        for (i, layer) in self.layers.iter().enumerate() {
            let input = shape;
            let (out, params) = match (*layer, input) {
                (Layer::Conv { channels }, Shape::Spatial { c, h, w }) => {
                    (Shape::Spatial { c: channels, h, w }, channels * c * 9 + channels)
                }
                (Layer::MaxPool, Shape::Spatial { c, h, w }) => {
                    if h < 2 || w < 2 {
                        return fail(format!("layer {i}: cannot pool a {h}x{w} map"));
                    }
                    (Shape::Spatial { c, h: h / 2, w: w / 2 }, 0)
                }
                (Layer::Conv { .. } | Layer::MaxPool, Shape::Flat(_)) => {
                    return fail(format!("layer {i} ({layer}) is spatial but follows a flat layer"));
                }
                (Layer::Dense { width }, s) => (Shape::Flat(width), width * s.len() + width),
                (Layer::Lstm { width }, s) => {
                    lstm = i;
                    (Shape::Flat(width), 4 * width * (s.len() + width) + 4 * width)
                }
            };
            stages.push(Stage {
                layer: *layer,
                input,
                offset,
            });
            offset += params;
            shape = out;
        }
        let features = shape.len();
        let policy = offset;
        let value = policy + ACTIONS * features + ACTIONS;
        Ok(Plan {
            stages,
            lstm,
            features,
            policy,
            value,
            len: value + features + 1,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Shape {
    Spatial { c: usize, h: usize, w: usize },
    Flat(usize),
}

impl Shape {
    fn len(self) -> usize {
        match self {
            Shape::Spatial { c, h, w } => c * h * w,
            Shape::Flat(n) => n,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
struct Stage {
    layer: Layer,
    input: Shape,
    offset: usize,
}

#[derive(Clone, Debug, PartialEq)]
struct Plan {
    stages: Vec<Stage>,
    lstm: usize,
    features: usize,
    policy: usize,
    value: usize,
    len: usize,
}

/// LSTM hidden and cell state.
#[derive(Clone, Debug, PartialEq)]
pub struct Recurrent {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl Recurrent {
    pub fn zeros(width: usize) -> Self {
        Self {
            h: vec![0.0; width],
            c: vec![0.0; width],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepOutput {
    pub logits: [f64; ACTIONS],
    pub probs: [f64; ACTIONS],
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq)]
enum Cache {
    /// Pre-activation and input.
    Affine { input: Vec<f64>, pre: Vec<f64> },
    Pool { argmax: Vec<usize>, margin: f64 },
    Lstm(LstmCache),
}

#[derive(Clone, Debug, PartialEq)]
struct LstmCache {
    x: Vec<f64>,
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    i: Vec<f64>,
    f: Vec<f64>,
    g: Vec<f64>,
    o: Vec<f64>,
    tanh_c: Vec<f64>,
}

/// Everything the backward pass needs from a forward pass over a sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct SequenceTape {
    caches: Vec<Vec<Cache>>,
    features: Vec<Vec<f64>>,
    pub outputs: Vec<StepOutput>,
}

impl SequenceTape {
    pub fn len(&self) -> usize {
        self.outputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outputs.is_empty()
    }

    /// Smallest distance of any ReLU pre-activation from 0, or of a
    /// positive pooled maximum from the runner-up. Finite differences are
    /// only meaningful when this is well above the probe step.
    pub fn kink_margin(&self) -> f64 {
        let mut m = f64::INFINITY;
        for step in &self.caches {
            for cache in step {
                match cache {
                    Cache::Affine { pre, .. } => {
                        m = pre.iter().fold(m, |m, z| m.min(z.abs()));
                    }
                    Cache::Pool { margin, .. } => m = m.min(*margin),
                    Cache::Lstm(_) => {}
                }
            }
        }
        m
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    spec: NetworkSpec,
    plan: Plan,
    pub params: Vec<f64>,
}

impl Network {
    /// Zero parameters everywhere.
    pub fn zeros(spec: NetworkSpec) -> Result<Self, LearnError> {
        let plan = spec.plan()?;
        let params = vec![0.0; plan.len];
        Ok(Self { spec, plan, params })
    }

    /// He-uniform body weights, zero biases except a unit LSTM forget bias,
    /// and zero heads so the initial policy is uniform and the value 0.
    pub fn init(spec: NetworkSpec, rng: &mut impl Rng) -> Result<Self, LearnError> {
        let mut net = Self::zeros(spec)?;
        for stage in net.plan.stages.clone() {
            let n_in = stage.input.len();
            match stage.layer {
                Layer::Conv { channels } => {
                    let c = match stage.input {
                        Shape::Spatial { c, .. } => c,
                        Shape::Flat(_) => unreachable!("planned"),
                    };
                    let fan_in = (c * 9) as f64;
                    let bound = (6.0 / fan_in).sqrt();
                    for p in &mut net.params[stage.offset..stage.offset + channels * c * 9] {
                        *p = rng.gen_range(-bound..bound);
                    }
                }
                Layer::MaxPool => {}
                Layer::Dense { width } => {
                    let bound = (6.0 / n_in as f64).sqrt();
                    for p in &mut net.params[stage.offset..stage.offset + width * n_in] {
                        *p = rng.gen_range(-bound..bound);
                    }
                }
                Layer::Lstm { width } => {
                    let bound = 1.0 / (width as f64).sqrt();
                    let weights = 4 * width * (n_in + width);
                    for p in &mut net.params[stage.offset..stage.offset + weights] {
                        *p = rng.gen_range(-bound..bound);
                    }
                    let bias = stage.offset + weights;
                    for p in &mut net.params[bias + width..bias + 2 * width] {
                        *p = 1.0;
                    }
                }
            }
        }
        Ok(net)
    }

    pub fn from_params(spec: NetworkSpec, params: Vec<f64>) -> Result<Self, LearnError> {
        let plan = spec.plan()?;
        if params.len() != plan.len {
            return Err(LearnError::ShapeMismatch {
                expected: plan.len,
                got: params.len(),
            });
        }
        Ok(Self { spec, plan, params })
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn param_count(&self) -> usize {
        self.plan.len
    }

    pub fn lstm_width(&self) -> usize {
        match self.plan.stages[self.plan.lstm].layer {
            Layer::Lstm { width } => width,
            _ => unreachable!("planned"),
        }
    }

    pub fn initial_state(&self) -> Recurrent {
        Recurrent::zeros(self.lstm_width())
    }

    /// Zero-filled gradient buffer matching `params`.
    pub fn zero_grad(&self) -> Vec<f64> {
        vec![0.0; self.plan.len]
    }

    fn check_input(&self, obs: &[f64]) -> Result<(), LearnError> {
        let expected = self.spec.input_len();
        if obs.len() != expected {
            return Err(LearnError::ShapeMismatch {
                expected,
                got: obs.len(),
            });
        }
        Ok(())
    }

    /// One step of inference, advancing `state`.
    pub fn step(&self, obs: &[f64], state: &mut Recurrent) -> Result<StepOutput, LearnError> {
        self.check_input(obs)?;
        let mut caches = Vec::with_capacity(self.plan.stages.len());
        let features = self.forward_body(obs, state, &mut caches);
        Ok(self.heads(&features))
    }

    /// Forward pass over a sequence from the zero state, keeping caches.
    pub fn forward_sequence(&self, observations: &[Vec<f64>]) -> Result<SequenceTape, LearnError> {
        let mut state = self.initial_state();
        let mut tape = SequenceTape {
            caches: Vec::with_capacity(observations.len()),
            features: Vec::with_capacity(observations.len()),
            outputs: Vec::with_capacity(observations.len()),
        };
        for obs in observations {
            self.check_input(obs)?;
            let mut caches = Vec::with_capacity(self.plan.stages.len());
            let features = self.forward_body(obs, &mut state, &mut caches);
            tape.outputs.push(self.heads(&features));
            tape.caches.push(caches);
            tape.features.push(features);
        }
        Ok(tape)
    }

    fn forward_body(&self, obs: &[f64], state: &mut Recurrent, caches: &mut Vec<Cache>) -> Vec<f64> {
        let mut x = obs.to_vec();
        for stage in &self.plan.stages {
            let p = &self.params[stage.offset..];
            x = match (stage.layer, stage.input) {
                (Layer::Conv { channels }, Shape::Spatial { c, h, w }) => {
                    let pre = conv_forward(p, c, h, w, channels, &x);
                    let out = pre.iter().map(|z| z.max(0.0)).collect();
                    caches.push(Cache::Affine { input: x, pre });
                    out
                }
                (Layer::MaxPool, Shape::Spatial { c, h, w }) => {
                    let (out, argmax, margin) = pool_forward(c, h, w, &x);
                    caches.push(Cache::Pool { argmax, margin });
                    out
                }
                (Layer::Dense { width }, _) => {
                    let pre = dense_forward(p, x.len(), width, &x);
                    let out = pre.iter().map(|z| z.max(0.0)).collect();
                    caches.push(Cache::Affine { input: x, pre });
                    out
                }
                (Layer::Lstm { width }, _) => {
                    let cache = lstm_forward(p, x, width, state);
                    caches.push(Cache::Lstm(cache));
                    state.h.clone()
                }
                _ => unreachable!("planned"),
            };
        }
        x
    }

    fn heads(&self, features: &[f64]) -> StepOutput {
        let m = self.plan.features;
        let wp = &self.params[self.plan.policy..];
        let mut logits = [0.0; ACTIONS];
        for (a, l) in logits.iter_mut().enumerate() {
            *l = dot(&wp[a * m..(a + 1) * m], features) + wp[ACTIONS * m + a];
        }
        let wv = &self.params[self.plan.value..];
        let value = dot(&wv[..m], features) + wv[m];
        StepOutput {
            logits,
            probs: softmax(&logits),
            value,
        }
    }

    /// Accumulates into `grad` the gradient of a loss whose derivatives with
    /// respect to each step's logits and value are given.
    pub fn backward_sequence(
        &self,
        tape: &SequenceTape,
        dlogits: &[[f64; ACTIONS]],
        dvalue: &[f64],
        grad: &mut [f64],
    ) {
        assert_eq!(dlogits.len(), tape.len());
        assert_eq!(dvalue.len(), tape.len());
        assert_eq!(grad.len(), self.plan.len);
        let m = self.plan.features;
        let lstm = self.plan.lstm;
        let width = self.lstm_width();

        // heads and post-recurrent layers, per step
        let mut d_lstm_out = Vec::with_capacity(tape.len());
        for t in 0..tape.len() {
            let feat = &tape.features[t];
            let mut dfeat = vec![0.0; m];
            {
                let (pol, val) = (self.plan.policy, self.plan.value);
                for a in 0..ACTIONS {
                    let g = dlogits[t][a];
                    if g != 0.0 {
                        axpy(&mut grad[pol + a * m..pol + (a + 1) * m], g, feat);
                        axpy(&mut dfeat, g, &self.params[pol + a * m..pol + (a + 1) * m]);
                    }
                    grad[pol + ACTIONS * m + a] += g;
                }
                let g = dvalue[t];
                axpy(&mut grad[val..val + m], g, feat);
                axpy(&mut dfeat, g, &self.params[val..val + m]);
                grad[val + m] += g;
            }
            let mut dy = dfeat;
            for s in (lstm + 1..self.plan.stages.len()).rev() {
                dy = self.stage_backward(s, &tape.caches[t][s], dy, grad);
            }
            d_lstm_out.push(dy);
        }

        // recurrent cell, backwards in time
        let stage = &self.plan.stages[lstm];
        let n_in = stage.input.len();
        let mut dh_next = vec![0.0; width];
        let mut dc_next = vec![0.0; width];
        let mut d_lstm_in = vec![Vec::new(); tape.len()];
        for t in (0..tape.len()).rev() {
            let Cache::Lstm(cache) = &tape.caches[t][lstm] else {
                unreachable!("planned")
            };
            let mut dh = d_lstm_out[t].clone();
            for (a, b) in dh.iter_mut().zip(&dh_next) {
                *a += b;
            }
            let (dx, dh_prev, dc_prev) = lstm_backward(
                &self.params[stage.offset..],
                &mut grad[stage.offset..],
                n_in,
                width,
                cache,
                &dh,
                &dc_next,
            );
            d_lstm_in[t] = dx;
            dh_next = dh_prev;
            dc_next = dc_prev;
        }

        // pre-recurrent layers, per step
        for (t, dx) in d_lstm_in.into_iter().enumerate() {
            let mut dy = dx;
            for s in (0..lstm).rev() {
                dy = self.stage_backward(s, &tape.caches[t][s], dy, grad);
            }
        }
    }

    fn stage_backward(&self, s: usize, cache: &Cache, dy: Vec<f64>, grad: &mut [f64]) -> Vec<f64> {
        let stage = &self.plan.stages[s];
        let p = &self.params[stage.offset..];
        let g = &mut grad[stage.offset..];
        match (stage.layer, stage.input, cache) {
            (Layer::Conv { channels }, Shape::Spatial { c, h, w }, Cache::Affine { input, pre }) => {
                let dpre = relu_backward(pre, dy);
                conv_backward(p, g, c, h, w, channels, input, &dpre)
            }
            (Layer::MaxPool, input, Cache::Pool { argmax, .. }) => {
                let mut dx = vec![0.0; input.len()];
                for (k, &i) in argmax.iter().enumerate() {
                    dx[i] += dy[k];
                }
                dx
            }
            (Layer::Dense { width }, _, Cache::Affine { input, pre }) => {
                let dpre = relu_backward(pre, dy);
                dense_backward(p, g, input.len(), width, input, &dpre)
            }
            _ => unreachable!("cache matches stage"),
        }
    }
}

pub fn softmax(logits: &[f64; ACTIONS]) -> [f64; ACTIONS] {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out = [0.0; ACTIONS];
    let mut sum = 0.0;
    for (o, l) in out.iter_mut().zip(logits) {
        *o = (l - max).exp();
        sum += *o;
    }
    for o in &mut out {
        *o /= sum;
    }
    out
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn relu_backward(pre: &[f64], mut dy: Vec<f64>) -> Vec<f64> {
    for (d, z) in dy.iter_mut().zip(pre) {
        if *z <= 0.0 {
            *d = 0.0;
        }
    }
    dy
}

/// Weights `[out][in][3][3]` then biases `[out]`; input and output are
/// channel-major.
fn conv_forward(p: &[f64], c_in: usize, h: usize, w: usize, c_out: usize, x: &[f64]) -> Vec<f64> {
    let bias = &p[c_out * c_in * 9..];
    let mut y = vec![0.0; c_out * h * w];
    for o in 0..c_out {
        let out = &mut y[o * h * w..(o + 1) * h * w];
        out.fill(bias[o]);
        for i in 0..c_in {
            let k = &p[(o * c_in + i) * 9..(o * c_in + i + 1) * 9];
            let plane = &x[i * h * w..(i + 1) * h * w];
            for (ki, &kv) in k.iter().enumerate() {
                let (dr, dc) = (ki as isize / 3 - 1, ki as isize % 3 - 1);
                for r in 0..h {
                    let sr = r as isize + dr;
                    if sr < 0 || sr >= h as isize {
                        continue;
                    }
                    let row = &plane[sr as usize * w..(sr as usize + 1) * w];
                    let orow = &mut out[r * w..(r + 1) * w];
                    let (c0, c1) = ((-dc).max(0) as usize, (w as isize - dc.max(0)) as usize);
                    for col in c0..c1 {
                        orow[col] += kv * row[(col as isize + dc) as usize];
                    }
                }
            }
        }
    }
    y
}

#[allow(clippy::too_many_arguments)]
fn conv_backward(
    p: &[f64],
    g: &mut [f64],
    c_in: usize,
    h: usize,
    w: usize,
    c_out: usize,
    x: &[f64],
    dy: &[f64],
) -> Vec<f64> {
    let mut dx = vec![0.0; c_in * h * w];
    let nb = c_out * c_in * 9;
    for o in 0..c_out {
        let d = &dy[o * h * w..(o + 1) * h * w];
        g[nb + o] += d.iter().sum::<f64>();
        for i in 0..c_in {
            let base = (o * c_in + i) * 9;
            let plane = &x[i * h * w..(i + 1) * h * w];
            let dplane = &mut dx[i * h * w..(i + 1) * h * w];
            for ki in 0..9 {
                let (dr, dc) = (ki as isize / 3 - 1, ki as isize % 3 - 1);
                let kv = p[base + ki];
                let mut acc = 0.0;
                for r in 0..h {
                    let sr = r as isize + dr;
                    if sr < 0 || sr >= h as isize {
                        continue;
                    }
                    let (c0, c1) = ((-dc).max(0) as usize, (w as isize - dc.max(0)) as usize);
                    for col in c0..c1 {
                        let src = sr as usize * w + (col as isize + dc) as usize;
                        let gy = d[r * w + col];
                        acc += gy * plane[src];
                        dplane[src] += gy * kv;
                    }
                }
                g[base + ki] += acc;
            }
        }
    }
    dx
}

/// Returns the pooled map, the input index of each maximum, and the
/// smallest gap between a positive maximum and the runner-up in its window.
fn pool_forward(c: usize, h: usize, w: usize, x: &[f64]) -> (Vec<f64>, Vec<usize>, f64) {
    let (ph, pw) = (h / 2, w / 2);
    let mut y = Vec::with_capacity(c * ph * pw);
    let mut argmax = Vec::with_capacity(c * ph * pw);
    let mut margin = f64::INFINITY;
    for ch in 0..c {
        for r in 0..ph {
            for col in 0..pw {
                let idx = [
                    (ch * h + 2 * r) * w + 2 * col,
                    (ch * h + 2 * r) * w + 2 * col + 1,
                    (ch * h + 2 * r + 1) * w + 2 * col,
                    (ch * h + 2 * r + 1) * w + 2 * col + 1,
                ];
                let mut best = idx[0];
                for &i in &idx[1..] {
                    if x[i] > x[best] {
                        best = i;
                    }
                }
                if x[best] > 0.0 {
                    let second = idx
                        .iter()
                        .filter(|&&i| i != best)
                        .map(|&i| x[i])
                        .fold(f64::NEG_INFINITY, f64::max);
                    margin = margin.min(x[best] - second);
                }
                y.push(x[best]);
                argmax.push(best);
            }
        }
    }
    (y, argmax, margin)
}

/// Weights `[out][in]` then biases `[out]`.
fn dense_forward(p: &[f64], n_in: usize, n_out: usize, x: &[f64]) -> Vec<f64> {
    let bias = &p[n_out * n_in..];
    (0..n_out).map(|o| dot(&p[o * n_in..(o + 1) * n_in], x) + bias[o]).collect()
}

fn dense_backward(p: &[f64], g: &mut [f64], n_in: usize, n_out: usize, x: &[f64], dy: &[f64]) -> Vec<f64> {
    let mut dx = vec![0.0; n_in];
    for o in 0..n_out {
        let d = dy[o];
        if d == 0.0 {
            continue;
        }
        axpy(&mut g[o * n_in..(o + 1) * n_in], d, x);
        axpy(&mut dx, d, &p[o * n_in..(o + 1) * n_in]);
        g[n_out * n_in + o] += d;
    }
    dx
}

/// Input weights `[4w][n]`, recurrent weights `[4w][w]`, biases `[4w]`;
/// gate blocks in the order input, forget, cell, output.
fn lstm_forward(p: &[f64], x: Vec<f64>, width: usize, state: &mut Recurrent) -> LstmCache {
    let n = x.len();
    let wh = 4 * width * n;
    let b = wh + 4 * width * width;
    let mut z = vec![0.0; 4 * width];
    for (k, zk) in z.iter_mut().enumerate() {
        *zk = dot(&p[k * n..(k + 1) * n], &x) + dot(&p[wh + k * width..wh + (k + 1) * width], &state.h) + p[b + k];
    }
    let i: Vec<f64> = z[..width].iter().map(|v| sigmoid(*v)).collect();
    let f: Vec<f64> = z[width..2 * width].iter().map(|v| sigmoid(*v)).collect();
    let g: Vec<f64> = z[2 * width..3 * width].iter().map(|v| v.tanh()).collect();
    let o: Vec<f64> = z[3 * width..].iter().map(|v| sigmoid(*v)).collect();
    let c_prev = std::mem::take(&mut state.c);
    let h_prev = std::mem::take(&mut state.h);
    let c: Vec<f64> = (0..width).map(|j| f[j] * c_prev[j] + i[j] * g[j]).collect();
    let tanh_c: Vec<f64> = c.iter().map(|v| v.tanh()).collect();
    state.h = (0..width).map(|j| o[j] * tanh_c[j]).collect();
    state.c = c;
    LstmCache {
        x,
        h_prev,
        c_prev,
        i,
        f,
        g,
        o,
        tanh_c,
    }
}

/// Returns `(dx, dh_prev, dc_prev)`.
fn lstm_backward(
    p: &[f64],
    grad: &mut [f64],
    n: usize,
    width: usize,
    k: &LstmCache,
    dh: &[f64],
    dc_next: &[f64],
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let wh = 4 * width * n;
    let b = wh + 4 * width * width;
    let mut dz = vec![0.0; 4 * width];
    let mut dc_prev = vec![0.0; width];
    for j in 0..width {
        let dc = dc_next[j] + dh[j] * k.o[j] * (1.0 - k.tanh_c[j] * k.tanh_c[j]);
        let (di, df, dg, d_o) = (dc * k.g[j], dc * k.c_prev[j], dc * k.i[j], dh[j] * k.tanh_c[j]);
        dz[j] = di * k.i[j] * (1.0 - k.i[j]);
        dz[width + j] = df * k.f[j] * (1.0 - k.f[j]);
        dz[2 * width + j] = dg * (1.0 - k.g[j] * k.g[j]);
        dz[3 * width + j] = d_o * k.o[j] * (1.0 - k.o[j]);
        dc_prev[j] = dc * k.f[j];
    }
    let mut dx = vec![0.0; n];
    let mut dh_prev = vec![0.0; width];
    for (r, &d) in dz.iter().enumerate() {
        if d == 0.0 {
            continue;
        }
        axpy(&mut grad[r * n..(r + 1) * n], d, &k.x);
        axpy(&mut dx, d, &p[r * n..(r + 1) * n]);
        axpy(&mut grad[wh + r * width..wh + (r + 1) * width], d, &k.h_prev);
        axpy(&mut dh_prev, d, &p[wh + r * width..wh + (r + 1) * width]);
        grad[b + r] += d;
    }
    (dx, dh_prev, dc_prev)
}
