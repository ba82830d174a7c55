//! Reward models: a one-hot logistic GLM and a small embedding MLP, with
//! log-loss gradients and Adam updates.
//!
//! Both models expose their parameters as one flat `f64` slice so the
//! optimizer and the finite-difference checks in the tests can treat them
//! uniformly. The MLP maps each categorical field to an 8-dimensional
//! embedding, concatenates the embeddings, and applies two 128-unit ReLU
//! layers followed by a sigmoid output. Dropout, when requested, acts on
//! the last hidden layer only (inverted dropout: survivors are rescaled by
//! `1/(1-rate)`).

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::types::{FeatureVector, FieldLayout, Interaction};

/// Probabilities are clipped to this range inside the loss so that
/// `ln` stays finite. Gradients use the raw prediction.
pub const PROB_CLAMP: f64 = 1e-7;

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
}

fn sample_loss(p: f64, r: f64) -> f64 {
    let p = clamp_prob(p);
    -(r * p.ln() + (1.0 - r) * (1.0 - p).ln())
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamParams {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        AdamParams {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamParams {
    pub fn with_learning_rate(learning_rate: f64) -> Self {
        AdamParams {
            learning_rate,
            ..Default::default()
        }
    }
}

/// Per-parameter first/second moment accumulators plus the step counter.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
    pub hyper: AdamParams,
}

impl AdamState {
    pub fn new(num_params: usize, hyper: AdamParams) -> Self {
        AdamState {
            m: vec![0.0; num_params],
            v: vec![0.0; num_params],
            step: 0,
            hyper,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One bias-corrected Adam update applied in place.
    pub fn apply(&mut self, params: &mut [f64], grad: &[f64]) -> Result<()> {
        if params.len() != self.m.len() || grad.len() != self.m.len() {
            return Err(Error::invalid_input(format!(
                "shape mismatch: {} params, {} grads, {} accumulators",
                params.len(),
                grad.len(),
                self.m.len()
            )));
        }
        self.step += 1;
        let AdamParams {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.hyper;
        let bc1 = 1.0 - beta1.powi(self.step as i32);
        let bc2 = 1.0 - beta2.powi(self.step as i32);
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = beta1 * self.m[i] + (1.0 - beta1) * g;
            self.v[i] = beta2 * self.v[i] + (1.0 - beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Logistic GLM
// ---------------------------------------------------------------------------

/// One weight per categorical value per field, plus a bias (last slot).
#[derive(Debug, Clone)]
pub struct LogisticGlm {
    layout: FieldLayout,
    offsets: Vec<usize>,
    params: Vec<f64>,
}

impl LogisticGlm {
    /// Zero-initialized model: predicts 0.5 everywhere.
    pub fn new(layout: FieldLayout) -> Self {
        let mut offsets = Vec::with_capacity(layout.num_fields());
        let mut acc = 0usize;
        for &card in &layout.cardinalities {
            offsets.push(acc);
            acc += card;
        }
        LogisticGlm {
            layout,
            offsets,
            params: vec![0.0; acc + 1],
        }
    }

    pub fn layout(&self) -> &FieldLayout {
        &self.layout
    }

    fn bias_index(&self) -> usize {
        self.params.len() - 1
    }

    pub fn bias(&self) -> f64 {
        self.params[self.bias_index()]
    }

    pub fn set_bias(&mut self, b: f64) {
        let i = self.bias_index();
        self.params[i] = b;
    }

    pub fn logit(&self, x: &FeatureVector) -> Result<f64> {
        self.layout.check(x)?;
        let mut z = self.bias();
        for (j, &code) in x.codes.iter().enumerate() {
            z += self.params[self.offsets[j] + code as usize];
        }
        Ok(z)
    }

    pub fn predict(&self, x: &FeatureVector) -> Result<f64> {
        Ok(sigmoid(self.logit(x)?))
    }

    pub fn logloss(&self, batch: &[Interaction]) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::invalid_input("log-loss over empty batch"));
        }
        let mut total = 0.0;
        for it in batch {
            total += sample_loss(self.predict(&it.features)?, it.reward_f64());
        }
        Ok(total / batch.len() as f64)
    }

    /// Mean gradient of the log-loss over the batch.
    pub fn grad_logloss(&self, batch: &[Interaction]) -> Result<Vec<f64>> {
        if batch.is_empty() {
            return Err(Error::invalid_input("gradient over empty batch"));
        }
        let mut grad = vec![0.0; self.params.len()];
        let scale = 1.0 / batch.len() as f64;
        let bias_idx = self.bias_index();
        for it in batch {
            let err = (self.predict(&it.features)? - it.reward_f64()) * scale;
            for (j, &code) in it.features.codes.iter().enumerate() {
                grad[self.offsets[j] + code as usize] += err;
            }
            grad[bias_idx] += err;
        }
        Ok(grad)
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }
}

// ---------------------------------------------------------------------------
// Embedding MLP
// ---------------------------------------------------------------------------

pub const EMBED_DIM: usize = 8;
pub const HIDDEN_DIM: usize = 128;

#[derive(Debug, Clone)]
struct MlpOffsets {
    embed: Vec<usize>,
    w1: usize,
    b1: usize,
    w2: usize,
    b2: usize,
    w_out: usize,
    b_out: usize,
    total: usize,
}

impl MlpOffsets {
    fn new(layout: &FieldLayout, embed_dim: usize, hidden: usize) -> Self {
        let mut embed = Vec::with_capacity(layout.num_fields());
        let mut acc = 0usize;
        for &card in &layout.cardinalities {
            embed.push(acc);
            acc += card * embed_dim;
        }
        let in_dim = layout.num_fields() * embed_dim;
        let w1 = acc;
        let b1 = w1 + in_dim * hidden;
        let w2 = b1 + hidden;
        let b2 = w2 + hidden * hidden;
        let w_out = b2 + hidden;
        let b_out = w_out + hidden;
        MlpOffsets {
            embed,
            w1,
            b1,
            w2,
            b2,
            w_out,
            b_out,
            total: b_out + 1,
        }
    }
}

/// Per-field embeddings, two ReLU hidden layers, sigmoid output.
#[derive(Debug, Clone)]
pub struct Mlp {
    layout: FieldLayout,
    embed_dim: usize,
    hidden: usize,
    offsets: MlpOffsets,
    params: Vec<f64>,
}

struct ForwardCache {
    embedded: Vec<f64>,
    h1: Vec<f64>,
    h2_pre: Vec<f64>,
    h2: Vec<f64>,
    logit: f64,
}

/// Dropout mask over the last hidden layer: surviving units and the
/// inverted-dropout rescale factor.
#[derive(Debug, Clone)]
pub struct DropoutMask {
    pub keep: Vec<bool>,
    pub scale: f64,
}

impl DropoutMask {
    pub fn draw(hidden: usize, rate: f64, rng: &mut RngStream) -> Result<Self> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::invalid_input(format!(
                "dropout rate {rate} outside [0, 1)"
            )));
        }
        let keep = (0..hidden).map(|_| !rng.coin(rate)).collect();
        Ok(DropoutMask {
            keep,
            scale: 1.0 / (1.0 - rate),
        })
    }
}

impl Mlp {
    /// Random symmetric initialization: each weight table uniform on
    /// `[-limit, limit]` with `limit = sqrt(6 / (fan_in + fan_out))`,
    /// biases zero.
    pub fn init(layout: FieldLayout, rng: &mut RngStream) -> Self {
        let embed_dim = EMBED_DIM;
        let hidden = HIDDEN_DIM;
        let offsets = MlpOffsets::new(&layout, embed_dim, hidden);
        let mut params = vec![0.0; offsets.total];
        let in_dim = layout.num_fields() * embed_dim;

        for (j, &card) in layout.cardinalities.iter().enumerate() {
            let limit = (6.0 / (card + embed_dim) as f64).sqrt();
            let start = offsets.embed[j];
            for p in params[start..start + card * embed_dim].iter_mut() {
                *p = rng.uniform_in(-limit, limit);
            }
        }
        let limit = (6.0 / (in_dim + hidden) as f64).sqrt();
        for p in params[offsets.w1..offsets.b1].iter_mut() {
            *p = rng.uniform_in(-limit, limit);
        }
        let limit = (6.0 / (hidden + hidden) as f64).sqrt();
        for p in params[offsets.w2..offsets.b2].iter_mut() {
            *p = rng.uniform_in(-limit, limit);
        }
        let limit = (6.0 / (hidden + 1) as f64).sqrt();
        for i in 0..hidden {
            params[offsets.w_out + i] = rng.uniform_in(-limit, limit);
        }

        Mlp {
            layout,
            embed_dim,
            hidden,
            offsets,
            params,
        }
    }

    pub fn layout(&self) -> &FieldLayout {
        &self.layout
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden
    }

    fn forward(&self, x: &FeatureVector, mask: Option<&DropoutMask>) -> ForwardCache {
        let o = &self.offsets;
        let h = self.hidden;
        let in_dim = self.layout.num_fields() * self.embed_dim;

        let mut embedded = vec![0.0; in_dim];
        for (j, &code) in x.codes.iter().enumerate() {
            let src = o.embed[j] + code as usize * self.embed_dim;
            embedded[j * self.embed_dim..(j + 1) * self.embed_dim]
                .copy_from_slice(&self.params[src..src + self.embed_dim]);
        }

        let mut h1 = self.params[o.b1..o.b1 + h].to_vec();
        for (i, &e) in embedded.iter().enumerate() {
            if e == 0.0 {
                continue;
            }
            let row = &self.params[o.w1 + i * h..o.w1 + (i + 1) * h];
            for (acc, &w) in h1.iter_mut().zip(row) {
                *acc += e * w;
            }
        }
        for v in h1.iter_mut() {
            *v = v.max(0.0);
        }

        let mut h2_pre = self.params[o.b2..o.b2 + h].to_vec();
        for (i, &a) in h1.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            let row = &self.params[o.w2 + i * h..o.w2 + (i + 1) * h];
            for (acc, &w) in h2_pre.iter_mut().zip(row) {
                *acc += a * w;
            }
        }
        let mut h2: Vec<f64> = h2_pre.iter().map(|&v| v.max(0.0)).collect();
        if let Some(mask) = mask {
            for (v, &keep) in h2.iter_mut().zip(&mask.keep) {
                *v = if keep { *v * mask.scale } else { 0.0 };
            }
        }

        let mut logit = self.params[o.b_out];
        for (i, &a) in h2.iter().enumerate() {
            logit += a * self.params[o.w_out + i];
        }

        ForwardCache {
            embedded,
            h1,
            h2_pre,
            h2,
            logit,
        }
    }

    pub fn logit(&self, x: &FeatureVector) -> Result<f64> {
        self.layout.check(x)?;
        Ok(self.forward(x, None).logit)
    }

    pub fn logit_masked(&self, x: &FeatureVector, mask: &DropoutMask) -> Result<f64> {
        self.layout.check(x)?;
        Ok(self.forward(x, Some(mask)).logit)
    }

    pub fn predict(&self, x: &FeatureVector) -> Result<f64> {
        Ok(sigmoid(self.logit(x)?))
    }

    /// A stochastic forward pass with a fresh dropout mask on the last
    /// hidden layer.
    pub fn mc_dropout_predict(
        &self,
        x: &FeatureVector,
        rate: f64,
        rng: &mut RngStream,
    ) -> Result<f64> {
        if rate == 0.0 {
            return self.predict(x);
        }
        let mask = DropoutMask::draw(self.hidden, rate, rng)?;
        Ok(sigmoid(self.logit_masked(x, &mask)?))
    }

    pub fn logloss(&self, batch: &[Interaction]) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::invalid_input("log-loss over empty batch"));
        }
        let mut total = 0.0;
        for it in batch {
            total += sample_loss(self.predict(&it.features)?, it.reward_f64());
        }
        Ok(total / batch.len() as f64)
    }

    /// Mean log-loss gradient; with `dropout`, a fresh mask is drawn per
    /// sample and backpropagation respects the mask.
    pub fn grad_logloss_with(
        &self,
        batch: &[Interaction],
        dropout: Option<(f64, &mut RngStream)>,
    ) -> Result<Vec<f64>> {
        if batch.is_empty() {
            return Err(Error::invalid_input("gradient over empty batch"));
        }
        let mut grad = vec![0.0; self.params.len()];
        let scale = 1.0 / batch.len() as f64;
        let mut dropout = dropout;
        for it in batch {
            self.layout.check(&it.features)?;
            let mask = match &mut dropout {
                Some((rate, rng)) => Some(DropoutMask::draw(self.hidden, *rate, rng)?),
                None => None,
            };
            self.accumulate_sample_grad(it, mask.as_ref(), scale, &mut grad);
        }
        Ok(grad)
    }

    pub fn grad_logloss(&self, batch: &[Interaction]) -> Result<Vec<f64>> {
        self.grad_logloss_with(batch, None)
    }

    fn accumulate_sample_grad(
        &self,
        it: &Interaction,
        mask: Option<&DropoutMask>,
        scale: f64,
        grad: &mut [f64],
    ) {
        let o = &self.offsets;
        let h = self.hidden;
        let cache = self.forward(&it.features, mask);
        let p = sigmoid(cache.logit);
        let dz = (p - it.reward_f64()) * scale;

        // Output layer.
        for (i, &a) in cache.h2.iter().enumerate() {
            grad[o.w_out + i] += dz * a;
        }
        grad[o.b_out] += dz;

        // Back through dropout and the second ReLU.
        let mut dh2 = vec![0.0; h];
        for i in 0..h {
            let mut d = dz * self.params[o.w_out + i];
            if let Some(mask) = mask {
                d = if mask.keep[i] { d * mask.scale } else { 0.0 };
            }
            dh2[i] = if cache.h2_pre[i] > 0.0 { d } else { 0.0 };
        }

        for (i, &a) in cache.h1.iter().enumerate() {
            if a != 0.0 {
                let row = &mut grad[o.w2 + i * h..o.w2 + (i + 1) * h];
                for (g, &d) in row.iter_mut().zip(&dh2) {
                    *g += a * d;
                }
            }
        }
        for (i, &d) in dh2.iter().enumerate() {
            grad[o.b2 + i] += d;
        }

        // Back through the first ReLU.
        let mut dh1 = vec![0.0; h];
        for i in 0..h {
            if cache.h1[i] > 0.0 {
                let row = &self.params[o.w2 + i * h..o.w2 + (i + 1) * h];
                let mut acc = 0.0;
                for (w, d) in row.iter().zip(&dh2) {
                    acc += w * d;
                }
                dh1[i] = acc;
            }
        }

        for (i, &e) in cache.embedded.iter().enumerate() {
            if e != 0.0 {
                let row = &mut grad[o.w1 + i * h..o.w1 + (i + 1) * h];
                for (g, &d) in row.iter_mut().zip(&dh1) {
                    *g += e * d;
                }
            }
        }
        for (i, &d) in dh1.iter().enumerate() {
            grad[o.b1 + i] += d;
        }

        // Into the embeddings.
        for (j, &code) in it.features.codes.iter().enumerate() {
            let dst = o.embed[j] + code as usize * self.embed_dim;
            for k in 0..self.embed_dim {
                let row = &self.params[o.w1 + (j * self.embed_dim + k) * h
                    ..o.w1 + (j * self.embed_dim + k + 1) * h];
                let mut acc = 0.0;
                for (w, d) in row.iter().zip(&dh1) {
                    acc += w * d;
                }
                grad[dst + k] += acc;
            }
        }
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn output_bias_index(&self) -> usize {
        self.offsets.b_out
    }
}

// ---------------------------------------------------------------------------
// Unified reward model
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Glm,
    Mlp,
}

/// Either reward-model family behind one interface.
#[derive(Debug, Clone)]
pub enum RewardModel {
    Glm(LogisticGlm),
    Mlp(Mlp),
}

/// Fresh model: GLM weights start at zero, MLP weights are drawn from the
/// given stream so that distinct streams give distinct models.
pub fn init_model(kind: ModelKind, layout: &FieldLayout, rng: &mut RngStream) -> RewardModel {
    match kind {
        ModelKind::Glm => RewardModel::Glm(LogisticGlm::new(layout.clone())),
        ModelKind::Mlp => RewardModel::Mlp(Mlp::init(layout.clone(), rng)),
    }
}

impl RewardModel {
    pub fn predict(&self, x: &FeatureVector) -> Result<f64> {
        match self {
            RewardModel::Glm(m) => m.predict(x),
            RewardModel::Mlp(m) => m.predict(x),
        }
    }

    pub fn logloss(&self, batch: &[Interaction]) -> Result<f64> {
        match self {
            RewardModel::Glm(m) => m.logloss(batch),
            RewardModel::Mlp(m) => m.logloss(batch),
        }
    }

    pub fn grad_logloss(&self, batch: &[Interaction]) -> Result<Vec<f64>> {
        match self {
            RewardModel::Glm(m) => m.grad_logloss(batch),
            RewardModel::Mlp(m) => m.grad_logloss(batch),
        }
    }

    pub fn params(&self) -> &[f64] {
        match self {
            RewardModel::Glm(m) => m.params(),
            RewardModel::Mlp(m) => m.params(),
        }
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        match self {
            RewardModel::Glm(m) => m.params_mut(),
            RewardModel::Mlp(m) => m.params_mut(),
        }
    }

    pub fn num_params(&self) -> usize {
        self.params().len()
    }

    pub fn as_mlp(&self) -> Option<&Mlp> {
        match self {
            RewardModel::Mlp(m) => Some(m),
            _ => None,
        }
    }
}

/// One Adam step on the model's flat parameter vector.
pub fn adam_step(model: &mut RewardModel, grad: &[f64], state: &mut AdamState) -> Result<()> {
    state.apply(model.params_mut(), grad)
}
