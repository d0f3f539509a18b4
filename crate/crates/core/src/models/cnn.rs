//! Convolutional text classifier: frozen word embeddings, one valid 1-D
//! convolution layer with ReLU, global max pooling over time, and a single
//! sigmoid output unit trained with binary cross-entropy and Adam.
//!
//! Trainable parameters live in one flat vector laid out as
//! `[conv weights (F x K x D) | conv biases (F) | dense weights (F) | dense bias]`.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Document, Label};
use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::models::gbt::{logistic_loss, sigmoid};

/// Random streams derived from the training seed.
const INIT_STREAM: u64 = 1;
const SHUFFLE_STREAM: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CnnConfig {
    pub n_filters: usize,
    pub kernel_size: usize,
    pub embedding_dim: usize,
    pub max_sequence_length: usize,
}

impl Default for CnnConfig {
    fn default() -> Self {
        CnnConfig {
            n_filters: 126,
            kernel_size: 5,
            embedding_dim: 300,
            max_sequence_length: 400,
        }
    }
}

impl CnnConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_filters == 0 || self.kernel_size == 0 || self.embedding_dim == 0 {
            return Err(Error::invalid("filters, kernel size and embedding dim must be positive"));
        }
        if self.max_sequence_length < self.kernel_size {
            return Err(Error::invalid(format!(
                "max_sequence_length {} is shorter than the kernel ({})",
                self.max_sequence_length, self.kernel_size
            )));
        }
        Ok(())
    }

    fn conv_len(&self) -> usize {
        self.n_filters * self.kernel_size * self.embedding_dim
    }

    pub fn n_params(&self) -> usize {
        self.conv_len() + 2 * self.n_filters + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 10,
            batch_size: 10,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 42,
        }
    }
}

/// Token to embedding-row map. Id 0 is padding and out-of-vocabulary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct TokenIndex {
    tokens: Vec<String>,
    ids: HashMap<String, usize>,
}

impl From<Vec<String>> for TokenIndex {
    fn from(tokens: Vec<String>) -> Self {
        let ids = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i + 1)).collect();
        TokenIndex { tokens, ids }
    }
}

impl From<TokenIndex> for Vec<String> {
    fn from(t: TokenIndex) -> Self {
        t.tokens
    }
}

impl TokenIndex {
    /// Index the `max_tokens` most frequent training tokens (ties in
    /// codepoint order); ids follow that ranking starting at 1.
    pub fn build(docs: &[Document], max_tokens: usize) -> TokenIndex {
        let mut freq: HashMap<&str, usize> = HashMap::new();
        for d in docs {
            for t in &d.tokens {
                *freq.entry(t.as_str()).or_insert(0) += 1;
            }
        }
        let mut ranked: Vec<(&str, usize)> = freq.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        ranked.truncate(max_tokens);
        TokenIndex::from(ranked.into_iter().map(|(t, _)| t.to_string()).collect::<Vec<_>>())
    }

    /// Number of real tokens (excluding the padding id).
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Rows needed in the embedding matrix, padding row included.
    pub fn n_rows(&self) -> usize {
        self.tokens.len() + 1
    }

    pub fn id(&self, token: &str) -> usize {
        self.ids.get(token).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> {
        self.tokens.iter().enumerate().map(|(i, t)| (t.as_str(), i + 1))
    }

    /// Ids of a document, truncated at the tail and right-padded with 0.
    pub fn encode(&self, doc: &Document, max_len: usize) -> Vec<usize> {
        let mut ids: Vec<usize> = doc.tokens.iter().take(max_len).map(|t| self.id(t)).collect();
        ids.resize(max_len, 0);
        ids
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvNetModel {
    config: CnnConfig,
    /// V x D, row 0 all zero, never updated by training.
    embedding: DenseMatrix,
    params: Vec<f64>,
}

/// Gradient of the loss w.r.t. every trainable parameter, same layout as
/// the model's parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct CnnGradients {
    pub loss: f64,
    pub probability: f64,
    pub grads: Vec<f64>,
}

struct ForwardPass {
    /// Per filter: max pre-activation over time and the first position reaching it.
    max_pre: Vec<f64>,
    argmax: Vec<usize>,
    pooled: Vec<f64>,
    logit: f64,
}

impl ConvNetModel {
    /// Glorot-uniform conv and dense weights, zero biases, drawn from the
    /// init stream of `seed`. Embedding row 0 is forced to zero.
    pub fn new(config: CnnConfig, embedding: DenseMatrix, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(INIT_STREAM);
        let (f, k, d) = (config.n_filters, config.kernel_size, config.embedding_dim);
        let mut params = vec![0.0; config.n_params()];
        let conv_limit = (6.0 / ((k * d + k * f) as f64)).sqrt();
        for w in &mut params[..config.conv_len()] {
            *w = rng.gen_range(-conv_limit..conv_limit);
        }
        let dense_limit = (6.0 / ((f + 1) as f64)).sqrt();
        let off = config.conv_len() + f;
        for w in &mut params[off..off + f] {
            *w = rng.gen_range(-dense_limit..dense_limit);
        }
        ConvNetModel::from_parts(config, embedding, params)
    }

    pub fn from_parts(config: CnnConfig, mut embedding: DenseMatrix, params: Vec<f64>) -> Result<Self> {
        config.validate()?;
        if embedding.n_cols() != config.embedding_dim {
            return Err(Error::DimensionMismatch {
                expected: config.embedding_dim,
                found: embedding.n_cols(),
            });
        }
        if embedding.n_rows() == 0 {
            return Err(Error::invalid("embedding matrix needs the padding row"));
        }
        if params.len() != config.n_params() {
            return Err(Error::DimensionMismatch {
                expected: config.n_params(),
                found: params.len(),
            });
        }
        embedding.row_mut(0).fill(0.0);
        Ok(ConvNetModel {
            config,
            embedding,
            params,
        })
    }

    pub fn config(&self) -> &CnnConfig {
        &self.config
    }

    pub fn embedding(&self) -> &DenseMatrix {
        &self.embedding
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn vocab_size(&self) -> usize {
        self.embedding.n_rows()
    }

    /// Weight of filter `f`, kernel offset `j`, embedding component `e`.
    pub fn conv_weight(&self, f: usize, j: usize, e: usize) -> f64 {
        let (k, d) = (self.config.kernel_size, self.config.embedding_dim);
        self.params[(f * k + j) * d + e]
    }

    pub fn conv_bias(&self) -> &[f64] {
        let off = self.config.conv_len();
        &self.params[off..off + self.config.n_filters]
    }

    pub fn dense_weights(&self) -> &[f64] {
        let off = self.config.conv_len() + self.config.n_filters;
        &self.params[off..off + self.config.n_filters]
    }

    pub fn dense_bias(&self) -> f64 {
        self.params[self.params.len() - 1]
    }

    /// Offset of the dense bias in the parameter vector.
    pub fn dense_bias_index(&self) -> usize {
        self.params.len() - 1
    }

    fn check_ids(&self, ids: &[usize]) -> Result<()> {
        if ids.len() != self.config.max_sequence_length {
            return Err(Error::DimensionMismatch {
                expected: self.config.max_sequence_length,
                found: ids.len(),
            });
        }
        if let Some(&bad) = ids.iter().find(|&&id| id >= self.vocab_size()) {
            return Err(Error::invalid(format!(
                "token id {bad} out of range for vocabulary of {}",
                self.vocab_size()
            )));
        }
        Ok(())
    }

    fn forward_pass(&self, ids: &[usize]) -> ForwardPass {
        let (nf, k, d) = (self.config.n_filters, self.config.kernel_size, self.config.embedding_dim);
        let steps = ids.len() - k + 1;
        let bias = self.conv_bias();
        // pre[f * steps + t]
        let mut pre = vec![0.0; nf * steps];
        for f in 0..nf {
            pre[f * steps..(f + 1) * steps].fill(bias[f]);
        }
        for (p, &id) in ids.iter().enumerate() {
            if id == 0 {
                continue;
            }
            let emb = self.embedding.row(id);
            let j_lo = (p + 1).saturating_sub(steps);
            let j_hi = k.min(p + 1);
            for f in 0..nf {
                for j in j_lo..j_hi {
                    let w = &self.params[(f * k + j) * d..(f * k + j + 1) * d];
                    let dot: f64 = w.iter().zip(emb).map(|(a, b)| a * b).sum();
                    pre[f * steps + (p - j)] += dot;
                }
            }
        }
        let mut max_pre = vec![f64::NEG_INFINITY; nf];
        let mut argmax = vec![0; nf];
        for f in 0..nf {
            for t in 0..steps {
                let v = pre[f * steps + t];
                if v > max_pre[f] {
                    max_pre[f] = v;
                    argmax[f] = t;
                }
            }
        }
        let pooled: Vec<f64> = max_pre.iter().map(|&v| v.max(0.0)).collect();
        let logit = self.dense_bias()
            + pooled
                .iter()
                .zip(self.dense_weights())
                .map(|(a, b)| a * b)
                .sum::<f64>();
        ForwardPass {
            max_pre,
            argmax,
            pooled,
            logit,
        }
    }

    /// Loss and gradients for one example with target `y` in {0, 1}.
    fn backward(&self, ids: &[usize], y: f64) -> CnnGradients {
        let (nf, k, d) = (self.config.n_filters, self.config.kernel_size, self.config.embedding_dim);
        let fp = self.forward_pass(ids);
        let p = sigmoid(fp.logit);
        let delta = p - y;
        let mut grads = vec![0.0; self.params.len()];
        let conv_len = self.config.conv_len();
        let dense_w = self.dense_weights();
        for f in 0..nf {
            grads[conv_len + nf + f] = delta * fp.pooled[f];
            if fp.max_pre[f] > 0.0 {
                let dpool = delta * dense_w[f];
                grads[conv_len + f] = dpool;
                let t = fp.argmax[f];
                for j in 0..k {
                    let id = ids[t + j];
                    if id == 0 {
                        continue;
                    }
                    let emb = self.embedding.row(id);
                    let g = &mut grads[(f * k + j) * d..(f * k + j + 1) * d];
                    for (gi, &e) in g.iter_mut().zip(emb) {
                        *gi += dpool * e;
                    }
                }
            }
        }
        let last = grads.len() - 1;
        grads[last] = delta;
        CnnGradients {
            loss: logistic_loss(fp.logit, y),
            probability: p,
            grads,
        }
    }

    fn loss_at(&self, ids: &[usize], y: f64) -> f64 {
        logistic_loss(self.forward_pass(ids).logit, y)
    }
}

/// P(fake) for one padded id sequence.
pub fn cnn_forward(model: &ConvNetModel, ids: &[usize]) -> Result<f64> {
    model.check_ids(ids)?;
    Ok(sigmoid(model.forward_pass(ids).logit))
}

/// Analytic binary cross-entropy gradients for one example.
pub fn cnn_gradients(model: &ConvNetModel, ids: &[usize], label: Label) -> Result<CnnGradients> {
    model.check_ids(ids)?;
    Ok(model.backward(ids, label.target()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheck {
    pub max_relative_error: f64,
    /// Parameter index where the largest error occurred.
    pub worst_index: usize,
    pub within_tolerance: bool,
}

/// Finite-difference step used by [`grad_check`].
pub const GRAD_CHECK_STEP: f64 = 1e-5;
/// Denominator floor for relative errors, so parameters with (near-)zero
/// gradient are compared on an absolute scale.
pub const GRAD_CHECK_FLOOR: f64 = 1e-6;

/// Relative error `|a - n| / max(|a|, |n|, floor)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(GRAD_CHECK_FLOOR)
}

/// Compare analytic gradients against central differences for every
/// trainable parameter.
pub fn grad_check(model: &ConvNetModel, ids: &[usize], label: Label, tolerance: f64) -> Result<GradCheck> {
    model.check_ids(ids)?;
    let y = label.target();
    let analytic = model.backward(ids, y).grads;
    let errors: Vec<f64> = (0..analytic.len())
        .into_par_iter()
        .map(|i| {
            let mut probe = model.clone();
            let orig = probe.params[i];
            probe.params[i] = orig + GRAD_CHECK_STEP;
            let up = probe.loss_at(ids, y);
            probe.params[i] = orig - GRAD_CHECK_STEP;
            let down = probe.loss_at(ids, y);
            relative_error(analytic[i], (up - down) / (2.0 * GRAD_CHECK_STEP))
        })
        .collect();
    let (worst_index, max_relative_error) = errors
        .iter()
        .copied()
        .enumerate()
        .fold((0, 0.0), |acc, (i, e)| if e > acc.1 { (i, e) } else { acc });
    Ok(GradCheck {
        max_relative_error,
        worst_index,
        within_tolerance: max_relative_error < tolerance,
    })
}

struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    step: i32,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    fn new(cfg: &TrainConfig, n: usize) -> Self {
        Adam {
            lr: cfg.learning_rate,
            beta1: cfg.beta1,
            beta2: cfg.beta2,
            eps: cfg.epsilon,
            step: 0,
            m: vec![0.0; n],
            v: vec![0.0; n],
        }
    }

    fn update(&mut self, params: &mut [f64], grads: &[f64]) {
        self.step += 1;
        let c1 = 1.0 - self.beta1.powi(self.step);
        let c2 = 1.0 - self.beta2.powi(self.step);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CnnTraining {
    pub model: ConvNetModel,
    /// Mean per-example training loss of each epoch.
    pub loss_history: Vec<f64>,
}

/// Mini-batch Adam on mean binary cross-entropy. Embeddings stay frozen.
/// Shuffling draws from the shuffle stream of `cfg.seed`, so identical
/// inputs give bitwise-identical results.
pub fn cnn_train(
    model: &ConvNetModel,
    sequences: &[Vec<usize>],
    labels: &[Label],
    cfg: &TrainConfig,
) -> Result<CnnTraining> {
    if sequences.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: sequences.len(),
            found: labels.len(),
        });
    }
    if cfg.batch_size == 0 {
        return Err(Error::invalid("batch_size must be at least 1"));
    }
    for label in Label::ALL {
        if !labels.contains(&label) {
            return Err(Error::InsufficientData(format!("no training examples of class {label}")));
        }
    }
    for s in sequences {
        model.check_ids(s)?;
    }

    let mut model = model.clone();
    let mut adam = Adam::new(cfg, model.params.len());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(SHUFFLE_STREAM);
    let mut order: Vec<usize> = (0..sequences.len()).collect();
    let mut loss_history = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for (batch_no, batch) in order.chunks(cfg.batch_size).enumerate() {
            let results: Vec<CnnGradients> = batch
                .par_iter()
                .map(|&i| model.backward(&sequences[i], labels[i].target()))
                .collect();
            let mut grads = vec![0.0; model.params.len()];
            let mut batch_loss = 0.0;
            for r in &results {
                batch_loss += r.loss;
                for (g, x) in grads.iter_mut().zip(&r.grads) {
                    *g += x;
                }
            }
            if !batch_loss.is_finite() {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    batch: batch_no,
                });
            }
            let scale = 1.0 / batch.len() as f64;
            grads.iter_mut().for_each(|g| *g *= scale);
            adam.update(&mut model.params, &grads);
            epoch_loss += batch_loss;
        }
        loss_history.push(epoch_loss / sequences.len() as f64);
    }
    Ok(CnnTraining { model, loss_history })
}
