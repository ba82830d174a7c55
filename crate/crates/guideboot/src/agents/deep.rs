//! Deep baselines: a trained reward network combined with count-based
//! exploration (UCB bonus or Beta sampling keyed on the action identifier)
//! or with Monte-Carlo dropout.

use rand_distr::{Beta, Distribution};

use super::{argmax_by, Agent};
use crate::error::{Error, Result};
use crate::models::{
    adam_step, init_model, AdamParams, AdamState, DropoutMask, Mlp, ModelKind, RewardModel,
};
use crate::rng::RngStream;
use crate::types::{argmax_tiebreak, CandidateSet, FieldLayout, Interaction};

/// Per-action impression/success counts plus the global decision counter.
#[derive(Debug, Clone)]
pub struct CountBanditState {
    impressions: Vec<u64>,
    successes: Vec<u64>,
    t: u64,
}

impl CountBanditState {
    pub fn new(num_actions: usize) -> Self {
        CountBanditState {
            impressions: vec![0; num_actions],
            successes: vec![0; num_actions],
            t: 0,
        }
    }

    pub fn record(&mut self, action: usize, reward: u8) -> Result<()> {
        if action >= self.impressions.len() {
            return Err(Error::invalid_input(format!(
                "action {action} out of range for {} actions",
                self.impressions.len()
            )));
        }
        self.impressions[action] += 1;
        self.successes[action] += u64::from(reward);
        Ok(())
    }

    pub fn impressions(&self, action: usize) -> u64 {
        self.impressions[action]
    }

    pub fn successes(&self, action: usize) -> u64 {
        self.successes[action]
    }

    pub fn step(&self) -> u64 {
        self.t
    }
}

/// UCB1-style score on top of a model estimate: `p_hat +
/// alpha * sqrt(2 ln t / count)`. An unseen action (count 0) scores
/// positive infinity so it is always explored first.
pub fn deep_ucb1_score(p_hat: f64, t: u64, count: u64, alpha: f64) -> f64 {
    if count == 0 {
        return f64::INFINITY;
    }
    p_hat + alpha * (2.0 * (t as f64).ln() / count as f64).sqrt()
}

/// One Thompson draw from the count-shaped Beta: `a = p_hat * count`,
/// `b = (1 - p_hat) * count`, both scaled by `shaping` and floored at 1.
/// An unseen action draws from Beta(1, 1), i.e. uniformly.
pub fn deep_ts_beta_sample(
    p_hat: f64,
    count: u64,
    shaping: f64,
    rng: &mut RngStream,
) -> Result<f64> {
    if !(shaping > 0.0) {
        return Err(Error::invalid_input(format!(
            "shaping factor must be positive, got {shaping}"
        )));
    }
    if count == 0 {
        return Ok(rng.uniform());
    }
    if !(0.0..=1.0).contains(&p_hat) {
        return Err(Error::invalid_input(format!(
            "p_hat {p_hat} outside [0, 1]"
        )));
    }
    let a = (p_hat * count as f64 * shaping).max(1.0);
    let b = ((1.0 - p_hat) * count as f64 * shaping).max(1.0);
    let beta = Beta::new(a, b).map_err(|e| Error::invalid_input(e.to_string()))?;
    Ok(beta.sample(rng))
}

fn flush_plain(
    model: &mut RewardModel,
    adam: &mut AdamState,
    buffer: &mut Vec<Interaction>,
    minibatches: usize,
    split_stream: &mut RngStream,
) -> Result<()> {
    let batches = crate::guidance::shuffle_split(buffer, minibatches, split_stream)?;
    for batch in &batches {
        let grad = model.grad_logloss(batch)?;
        adam_step(model, &grad, adam)?;
    }
    buffer.clear();
    Ok(())
}

/// Model estimate plus a count-based UCB bonus on the action identifier.
pub struct DeepUcb1Agent {
    layout: FieldLayout,
    model: RewardModel,
    adam: AdamState,
    counts: CountBanditState,
    alpha: f64,
    buffer: Vec<Interaction>,
    capacity: usize,
    minibatches: usize,
    split_stream: RngStream,
}

impl DeepUcb1Agent {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        layout: &FieldLayout,
        kind: ModelKind,
        alpha: f64,
        capacity: usize,
        minibatches: usize,
        adam: AdamParams,
        parent: &RngStream,
    ) -> Result<Self> {
        if capacity < minibatches || minibatches == 0 {
            return Err(Error::invalid_input(format!(
                "need capacity >= minibatches >= 1, got c = {capacity}, n = {minibatches}"
            )));
        }
        let mut init_stream = parent.derive("init-0")?;
        let model = init_model(kind, layout, &mut init_stream);
        let adam = AdamState::new(model.num_params(), adam);
        Ok(DeepUcb1Agent {
            layout: layout.clone(),
            counts: CountBanditState::new(layout.cardinalities[layout.action_field]),
            model,
            adam,
            alpha,
            buffer: Vec::with_capacity(capacity),
            capacity,
            minibatches,
            split_stream: parent.derive("split-0")?,
        })
    }

    pub fn model(&self) -> &RewardModel {
        &self.model
    }
}

impl Agent for DeepUcb1Agent {
    fn select(&mut self, candidates: &CandidateSet) -> Result<usize> {
        self.counts.t += 1;
        let t = self.counts.t;
        // An unseen action has an infinite score: take the first one.
        for (i, x) in candidates.candidates.iter().enumerate() {
            if self.counts.impressions(x.action_code(&self.layout) as usize) == 0 {
                return Ok(i);
            }
        }
        let counts = &self.counts;
        let layout = &self.layout;
        let model = &self.model;
        let alpha = self.alpha;
        argmax_by(candidates, |x| {
            let count = counts.impressions(x.action_code(layout) as usize);
            Ok(deep_ucb1_score(model.predict(x)?, t, count, alpha))
        })
    }

    fn observe(&mut self, interaction: Interaction) -> Result<()> {
        let action = interaction.features.action_code(&self.layout) as usize;
        self.counts.record(action, interaction.reward)?;
        self.buffer.push(interaction);
        if self.buffer.len() >= self.capacity {
            flush_plain(
                &mut self.model,
                &mut self.adam,
                &mut self.buffer,
                self.minibatches,
                &mut self.split_stream,
            )?;
        }
        Ok(())
    }
}

/// Thompson sampling from count-shaped Beta distributions centered on the
/// model estimate.
pub struct DeepTsBetaAgent {
    layout: FieldLayout,
    model: RewardModel,
    adam: AdamState,
    counts: CountBanditState,
    shaping: f64,
    buffer: Vec<Interaction>,
    capacity: usize,
    minibatches: usize,
    split_stream: RngStream,
    sample_stream: RngStream,
}

impl DeepTsBetaAgent {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        layout: &FieldLayout,
        kind: ModelKind,
        shaping: f64,
        capacity: usize,
        minibatches: usize,
        adam: AdamParams,
        parent: &RngStream,
    ) -> Result<Self> {
        if capacity < minibatches || minibatches == 0 {
            return Err(Error::invalid_input(format!(
                "need capacity >= minibatches >= 1, got c = {capacity}, n = {minibatches}"
            )));
        }
        if !(shaping > 0.0) {
            return Err(Error::invalid_input(format!(
                "shaping factor must be positive, got {shaping}"
            )));
        }
        let mut init_stream = parent.derive("init-0")?;
        let model = init_model(kind, layout, &mut init_stream);
        let adam = AdamState::new(model.num_params(), adam);
        Ok(DeepTsBetaAgent {
            layout: layout.clone(),
            counts: CountBanditState::new(layout.cardinalities[layout.action_field]),
            model,
            adam,
            shaping,
            buffer: Vec::with_capacity(capacity),
            capacity,
            minibatches,
            split_stream: parent.derive("split-0")?,
            sample_stream: parent.derive("sample")?,
        })
    }
}

impl Agent for DeepTsBetaAgent {
    fn select(&mut self, candidates: &CandidateSet) -> Result<usize> {
        self.counts.t += 1;
        let mut scores = Vec::with_capacity(candidates.len());
        for x in &candidates.candidates {
            let count = self.counts.impressions(x.action_code(&self.layout) as usize);
            let p_hat = self.model.predict(x)?;
            scores.push(deep_ts_beta_sample(
                p_hat,
                count,
                self.shaping,
                &mut self.sample_stream,
            )?);
        }
        argmax_tiebreak(&scores)
    }

    fn observe(&mut self, interaction: Interaction) -> Result<()> {
        let action = interaction.features.action_code(&self.layout) as usize;
        self.counts.record(action, interaction.reward)?;
        self.buffer.push(interaction);
        if self.buffer.len() >= self.capacity {
            flush_plain(
                &mut self.model,
                &mut self.adam,
                &mut self.buffer,
                self.minibatches,
                &mut self.split_stream,
            )?;
        }
        Ok(())
    }
}

/// Thompson-sampling approximation via dropout: one shared mask per
/// decision while scoring all candidates; per-sample masks during training.
pub struct McDropoutAgent {
    model: Mlp,
    adam: AdamState,
    rate: f64,
    buffer: Vec<Interaction>,
    capacity: usize,
    minibatches: usize,
    split_stream: RngStream,
    mask_stream: RngStream,
    train_dropout_stream: RngStream,
}

impl McDropoutAgent {
    pub fn new(
        layout: &FieldLayout,
        rate: f64,
        capacity: usize,
        minibatches: usize,
        adam: AdamParams,
        parent: &RngStream,
    ) -> Result<Self> {
        if capacity < minibatches || minibatches == 0 {
            return Err(Error::invalid_input(format!(
                "need capacity >= minibatches >= 1, got c = {capacity}, n = {minibatches}"
            )));
        }
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::invalid_input(format!(
                "dropout rate {rate} outside [0, 1)"
            )));
        }
        let mut init_stream = parent.derive("init-0")?;
        let model = Mlp::init(layout.clone(), &mut init_stream);
        let adam = AdamState::new(model.params().len(), adam);
        Ok(McDropoutAgent {
            model,
            adam,
            rate,
            buffer: Vec::with_capacity(capacity),
            capacity,
            minibatches,
            split_stream: parent.derive("split-0")?,
            mask_stream: parent.derive("mask")?,
            train_dropout_stream: parent.derive("dropout")?,
        })
    }

    pub fn model(&self) -> &Mlp {
        &self.model
    }
}

impl Agent for McDropoutAgent {
    fn select(&mut self, candidates: &CandidateSet) -> Result<usize> {
        if self.rate == 0.0 {
            let model = &self.model;
            return argmax_by(candidates, |x| model.predict(x));
        }
        let mask = DropoutMask::draw(self.model.hidden_dim(), self.rate, &mut self.mask_stream)?;
        let model = &self.model;
        // Sigmoid is monotone: rank on the masked logit directly.
        argmax_by(candidates, |x| model.logit_masked(x, &mask))
    }

    fn observe(&mut self, interaction: Interaction) -> Result<()> {
        self.buffer.push(interaction);
        if self.buffer.len() >= self.capacity {
            let batches = crate::guidance::shuffle_split(
                &self.buffer,
                self.minibatches,
                &mut self.split_stream,
            )?;
            for batch in &batches {
                let grad = self
                    .model
                    .grad_logloss_with(batch, Some((self.rate, &mut self.train_dropout_stream)))?;
                self.adam.apply(self.model.params_mut(), &grad)?;
            }
            self.buffer.clear();
        }
        Ok(())
    }
}
