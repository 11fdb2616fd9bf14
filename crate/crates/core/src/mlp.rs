//! One-hidden-layer ReLU/softmax classifier with cross-entropy loss,
//! analytic gradients and the SGD and Adam updates.

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::complexity::{MacCounter, Phase};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::pca::PcaModel;
use crate::seed::{self, Stream};

pub const MODEL_VERSION: u32 = 1;

/// Lower clip on the true-class probability inside the loss.
pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub version: u32,
    #[serde(default)]
    pub seed: u64,
    /// Input width.
    pub k: usize,
    /// Hidden units.
    pub h: usize,
    /// Classes.
    pub c: usize,
    /// When false the output bias is pinned at zero.
    pub output_bias: bool,
    /// `h×k`
    pub w1: Matrix,
    pub b1: Vec<f64>,
    /// `c×h`
    pub w_out: Matrix,
    pub b_out: Vec<f64>,
}

/// Mean-over-batch gradients, shaped like the model's parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gradients {
    pub w1: Matrix,
    pub b1: Vec<f64>,
    pub w_out: Matrix,
    pub b_out: Vec<f64>,
}

impl Gradients {
    pub fn zeros_like(model: &MlpModel) -> Self {
        Self {
            w1: Matrix::zeros(model.h, model.k),
            b1: vec![0.0; model.h],
            w_out: Matrix::zeros(model.c, model.h),
            b_out: vec![0.0; model.c],
        }
    }

    pub fn tensors(&self) -> [&[f64]; 4] {
        [self.w1.as_slice(), &self.b1, self.w_out.as_slice(), &self.b_out]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 4] {
        [
            self.w1.as_mut_slice(),
            &mut self.b1,
            self.w_out.as_mut_slice(),
            &mut self.b_out,
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }

    fn matches(&self, model: &MlpModel) -> bool {
        self.tensors()
            .iter()
            .zip(model.tensors())
            .all(|(g, p)| g.len() == p.len())
    }
}

/// Hidden activations and class probabilities for a batch.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardPass {
    pub hidden: Matrix,
    pub probs: Matrix,
}

#[inline]
pub fn relu(x: f64) -> f64 {
    if x < 0.0 {
        0.0
    } else {
        x
    }
}

/// Softmax of one row in place, after subtracting the row maximum.
pub fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
}

/// Uniform `±√(6/fan_in)` weights, zero biases.
pub fn init_model(k: usize, h: usize, c: usize, seed: u64) -> Result<MlpModel> {
    if k == 0 || h == 0 || c == 0 {
        return Err(Error::Config(format!(
            "network dimensions must be positive, got k={k} h={h} c={c}"
        )));
    }
    let mut rng = seed::rng(seed, Stream::Init, &[]);
    let mut layer = |rows: usize, cols: usize| {
        let a = (6.0 / cols as f64).sqrt();
        let data = (0..rows * cols).map(|_| rng.random_range(-a..=a)).collect();
        Matrix::from_vec(rows, cols, data).expect("sized above")
    };
    let w1 = layer(h, k);
    let w_out = layer(c, h);
    Ok(MlpModel {
        version: MODEL_VERSION,
        seed,
        k,
        h,
        c,
        output_bias: true,
        w1,
        b1: vec![0.0; h],
        w_out,
        b_out: vec![0.0; c],
    })
}

impl MlpModel {
    pub fn tensors(&self) -> [&[f64]; 4] {
        [self.w1.as_slice(), &self.b1, self.w_out.as_slice(), &self.b_out]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 4] {
        [
            self.w1.as_mut_slice(),
            &mut self.b1,
            self.w_out.as_mut_slice(),
            &mut self.b_out,
        ]
    }

    pub fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn with_output_bias(mut self, enabled: bool) -> Self {
        self.output_bias = enabled;
        if !enabled {
            self.b_out.iter_mut().for_each(|b| *b = 0.0);
        }
        self
    }

    pub fn same_shape(&self, other: &MlpModel) -> bool {
        (self.k, self.h, self.c) == (other.k, other.h, other.c)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.w1.rows() == self.h
            && self.w1.cols() == self.k
            && self.b1.len() == self.h
            && self.w_out.rows() == self.c
            && self.w_out.cols() == self.h
            && self.b_out.len() == self.c;
        if !ok {
            return Err(Error::Shape(format!(
                "parameters do not match dims (k={}, h={}, c={})",
                self.k, self.h, self.c
            )));
        }
        if !self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite())) {
            return Err(Error::NonFinite("model parameters"));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(text)?;
        if m.version != MODEL_VERSION {
            return Err(Error::Format(format!("unsupported model version {}", m.version)));
        }
        m.validate()?;
        Ok(m)
    }

    /// SHA-256 over dims and the little-endian bytes of every parameter.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        for dim in [self.k, self.h, self.c] {
            hasher.update((dim as u64).to_le_bytes());
        }
        for t in self.tensors() {
            for v in t {
                hasher.update(v.to_le_bytes());
            }
        }
        hex::encode(hasher.finalize())
    }

    /// `p ← p − η·g` in place.
    pub fn apply_sgd(&mut self, grads: &Gradients, lr: f64) -> Result<()> {
        check_update(self, grads)?;
        if !(lr > 0.0 && lr.is_finite()) {
            return Err(Error::Config(format!("learning rate must be > 0, got {lr}")));
        }
        for (p, g) in self.tensors_mut().into_iter().zip(grads.tensors()) {
            for (p, g) in p.iter_mut().zip(g) {
                *p -= lr * g;
            }
        }
        Ok(())
    }
}

fn check_update(model: &MlpModel, grads: &Gradients) -> Result<()> {
    if !grads.matches(model) {
        return Err(Error::Shape("gradients do not match the model".into()));
    }
    if !grads.is_finite() {
        return Err(Error::NonFinite("gradients"));
    }
    Ok(())
}

pub fn forward(model: &MlpModel, batch: &Matrix) -> Result<ForwardPass> {
    forward_counted(model, batch, None)
}

/// Forward pass; the two products cost `B·(k·h + h·c)` MACs under
/// [`Phase::Forward`].
pub fn forward_counted(model: &MlpModel, batch: &Matrix, counter: Option<&MacCounter>) -> Result<ForwardPass> {
    if batch.cols() != model.k {
        return Err(Error::Dimension {
            expected: model.k,
            actual: batch.cols(),
        });
    }
    if !batch.is_finite() {
        return Err(Error::NonFinite("forward input"));
    }
    let mut hidden = batch.matmul_transposed(&model.w1, counter, Phase::Forward)?;
    for i in 0..hidden.rows() {
        for (v, b) in hidden.row_mut(i).iter_mut().zip(&model.b1) {
            *v = relu(*v + b);
        }
    }
    let mut probs = hidden.matmul_transposed(&model.w_out, counter, Phase::Forward)?;
    for i in 0..probs.rows() {
        let row = probs.row_mut(i);
        for (v, b) in row.iter_mut().zip(&model.b_out) {
            *v += b;
        }
        softmax_in_place(row);
    }
    Ok(ForwardPass { hidden, probs })
}

/// Mean cross-entropy `(1/B)·Σ −ln p_true`, with `p_true` clipped to
/// `[1e-12, 1]`.
pub fn loss(probs: &Matrix, labels: &[usize]) -> Result<f64> {
    if probs.rows() != labels.len() {
        return Err(Error::Shape(format!(
            "{} probability rows for {} labels",
            probs.rows(),
            labels.len()
        )));
    }
    if labels.is_empty() {
        return Err(Error::NoRows);
    }
    let c = probs.cols();
    let mut total = 0.0;
    for (row, &l) in probs.iter_rows().zip(labels) {
        if l >= c {
            return Err(Error::Config(format!("label {l} out of range for {c} classes")));
        }
        let s: f64 = row.iter().sum();
        if (s - 1.0).abs() > 1e-6 {
            return Err(Error::Shape(format!("probability row sums to {s}")));
        }
        total -= row[l].clamp(PROB_FLOOR, 1.0).ln();
    }
    Ok(total / labels.len() as f64)
}

pub fn backward(model: &MlpModel, batch: &Matrix, labels: &[usize]) -> Result<Gradients> {
    let pass = forward(model, batch)?;
    backward_from(model, batch, labels, &pass, None)
}

/// Gradients given an existing forward pass. The three products cost
/// `B·(h·c + h·c + h·k)` MACs under [`Phase::Backward`].
pub fn backward_from(
    model: &MlpModel,
    batch: &Matrix,
    labels: &[usize],
    pass: &ForwardPass,
    counter: Option<&MacCounter>,
) -> Result<Gradients> {
    let b = batch.rows();
    if labels.len() != b || pass.probs.rows() != b {
        return Err(Error::Shape(format!("{} labels for a batch of {b}", labels.len())));
    }
    if b == 0 {
        return Err(Error::NoRows);
    }
    let inv_b = 1.0 / b as f64;
    let mut delta_out = pass.probs.clone();
    for (i, &l) in labels.iter().enumerate() {
        if l >= model.c {
            return Err(Error::Config(format!("label {l} out of range for {} classes", model.c)));
        }
        let row = delta_out.row_mut(i);
        row[l] -= 1.0;
        row.iter_mut().for_each(|v| *v *= inv_b);
    }
    let w_out = delta_out.transposed_matmul(&pass.hidden, counter, Phase::Backward)?;
    let b_out = if model.output_bias {
        column_sums(&delta_out)
    } else {
        vec![0.0; model.c]
    };
    let mut delta_hidden = delta_out.matmul(&model.w_out, counter, Phase::Backward)?;
    for i in 0..b {
        for (d, &a) in delta_hidden.row_mut(i).iter_mut().zip(pass.hidden.row(i)) {
            // hidden > 0 exactly when the pre-activation is > 0
            if a <= 0.0 {
                *d = 0.0;
            }
        }
    }
    let w1 = delta_hidden.transposed_matmul(batch, counter, Phase::Backward)?;
    let b1 = column_sums(&delta_hidden);
    Ok(Gradients { w1, b1, w_out, b_out })
}

fn column_sums(m: &Matrix) -> Vec<f64> {
    let mut s = vec![0.0; m.cols()];
    for row in m.iter_rows() {
        for (a, &v) in s.iter_mut().zip(row) {
            *a += v;
        }
    }
    s
}

pub fn sgd_step(model: &MlpModel, grads: &Gradients, lr: f64) -> Result<MlpModel> {
    let mut next = model.clone();
    next.apply_sgd(grads, lr)?;
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First/second moment accumulators and step count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub version: u32,
    pub config: AdamConfig,
    pub t: u64,
    pub m: Gradients,
    pub v: Gradients,
}

impl AdamState {
    pub fn new(model: &MlpModel, config: AdamConfig) -> Self {
        Self {
            version: MODEL_VERSION,
            config,
            t: 0,
            m: Gradients::zeros_like(model),
            v: Gradients::zeros_like(model),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: Self = serde_json::from_str(text)?;
        if s.version != MODEL_VERSION {
            return Err(Error::Format(format!("unsupported optimizer version {}", s.version)));
        }
        Ok(s)
    }

    /// One Adam update of `model` in place.
    pub fn step(&mut self, model: &mut MlpModel, grads: &Gradients) -> Result<()> {
        check_update(model, grads)?;
        if !self.m.matches(model) {
            return Err(Error::Shape("optimizer state does not match the model".into()));
        }
        let AdamConfig { lr, beta1, beta2, eps } = self.config;
        self.t += 1;
        let t = self.t as f64;
        let m_corr = 1.0 / (1.0 - beta1.powf(t));
        let v_corr = 1.0 / (1.0 - beta2.powf(t));
        let params = model.tensors_mut();
        let ms = self.m.tensors_mut();
        let vs = self.v.tensors_mut();
        for (((p, m), v), g) in params.into_iter().zip(ms).zip(vs).zip(grads.tensors()) {
            for i in 0..p.len() {
                m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                let m_hat = m[i] * m_corr;
                let v_hat = v[i] * v_corr;
                p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

pub fn adam_step(model: &MlpModel, grads: &Gradients, state: &AdamState) -> Result<(MlpModel, AdamState)> {
    let mut model = model.clone();
    let mut state = state.clone();
    state.step(&mut model, grads)?;
    Ok((model, state))
}

/// Index of the largest entry; the lowest index wins ties.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Labels for already-projected inputs.
pub fn predict_projected(model: &MlpModel, projected: &Matrix) -> Result<Vec<usize>> {
    Ok(forward(model, projected)?.probs.iter_rows().map(argmax).collect())
}

/// Labels for encoded `N×d` inputs: project, forward, argmax.
pub fn predict(model: &MlpModel, pca: &PcaModel, encoded: &Matrix) -> Result<Vec<usize>> {
    check_pipeline(model, pca)?;
    predict_projected(model, &pca.project_matrix(encoded)?)
}

/// Class probabilities for encoded `N×d` inputs.
pub fn predict_proba(model: &MlpModel, pca: &PcaModel, encoded: &Matrix) -> Result<Matrix> {
    check_pipeline(model, pca)?;
    Ok(forward(model, &pca.project_matrix(encoded)?)?.probs)
}

fn check_pipeline(model: &MlpModel, pca: &PcaModel) -> Result<()> {
    if pca.k != model.k {
        return Err(Error::Dimension {
            expected: model.k,
            actual: pca.k,
        });
    }
    Ok(())
}
