//! Experience-replay ensemble agents: guided bootstrap, vanilla bootstrap,
//! and the pseudo-reward-pair variant.
//!
//! All three share one loop: keep the full interaction history, pick one
//! of K models uniformly to act, and after every observation give each
//! model one Adam step on its own bootstrap resample of the history. They
//! differ only in how exploration noise enters the training data:
//!
//! - guided bootstrap injects fake samples per resampled point with
//!   probability `min(alpha / rho(x), 1)`;
//! - vanilla bootstrap injects nothing;
//! - the pseudo-pair variant inserts the pair `{(x,1),(x,0)}` into the
//!   buffer itself with a fixed probability when a real sample arrives
//!   (one coin for the pair).

use super::{argmax_by, Agent};
use crate::error::Result;
use crate::guidance::{augment_with_fakes, bootstrap_resample, DensityKind, GuidanceState};
use crate::models::{adam_step, init_model, AdamParams, AdamState, ModelKind, RewardModel};
use crate::rng::RngStream;
use crate::types::{CandidateSet, FieldLayout, Interaction};

/// Replay agent with K independently trained reward models.
pub struct GuideBootAgent {
    models: Vec<RewardModel>,
    adam: Vec<AdamState>,
    buffer: Vec<Interaction>,
    guidance: Option<GuidanceState>,
    batch_size: usize,
    select_stream: RngStream,
    resample_streams: Vec<RngStream>,
    fake_streams: Vec<RngStream>,
    pseudo_pair: Option<(f64, RngStream)>,
}

impl GuideBootAgent {
    fn build(
        layout: &FieldLayout,
        kind: ModelKind,
        num_models: usize,
        batch_size: usize,
        adam: AdamParams,
        guidance: Option<GuidanceState>,
        pseudo_pair_prob: Option<f64>,
        parent: &RngStream,
    ) -> Result<Self> {
        let mut models = Vec::with_capacity(num_models);
        let mut resample_streams = Vec::with_capacity(num_models);
        let mut fake_streams = Vec::with_capacity(num_models);
        for k in 0..num_models {
            let mut init_stream = parent.derive(&format!("init-{k}"))?;
            models.push(init_model(kind, layout, &mut init_stream));
            resample_streams.push(parent.derive(&format!("resample-{k}"))?);
            fake_streams.push(parent.derive(&format!("fake-{k}"))?);
        }
        let adam = models
            .iter()
            .map(|m| AdamState::new(m.num_params(), adam))
            .collect();
        let pseudo_pair = match pseudo_pair_prob {
            Some(p) => Some((p, parent.derive("pseudo-pair")?)),
            None => None,
        };
        Ok(GuideBootAgent {
            models,
            adam,
            buffer: Vec::new(),
            guidance,
            batch_size,
            select_stream: parent.derive("select")?,
            resample_streams,
            fake_streams,
            pseudo_pair,
        })
    }

    /// Guided bootstrap with the given guidance parameters.
    #[allow(clippy::too_many_arguments)]
    pub fn guided(
        layout: &FieldLayout,
        kind: ModelKind,
        num_models: usize,
        batch_size: usize,
        adam: AdamParams,
        alpha: f64,
        density: DensityKind,
        parent: &RngStream,
    ) -> Result<Self> {
        let guidance = GuidanceState::new(layout, alpha, density)?;
        Self::build(
            layout,
            kind,
            num_models,
            batch_size,
            adam,
            Some(guidance),
            None,
            parent,
        )
    }

    /// Vanilla bootstrap: no fake samples.
    pub fn vanilla(
        layout: &FieldLayout,
        kind: ModelKind,
        num_models: usize,
        batch_size: usize,
        adam: AdamParams,
        parent: &RngStream,
    ) -> Result<Self> {
        Self::build(layout, kind, num_models, batch_size, adam, None, None, parent)
    }

    /// Pseudo-reward-pair bootstrap: on each real insertion, the pair
    /// `{(x,1),(x,0)}` also enters the buffer with probability
    /// `pair_prob` (both or neither).
    #[allow(clippy::too_many_arguments)]
    pub fn pseudo_pairs(
        layout: &FieldLayout,
        kind: ModelKind,
        num_models: usize,
        batch_size: usize,
        adam: AdamParams,
        pair_prob: f64,
        parent: &RngStream,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&pair_prob) {
            return Err(crate::error::Error::invalid_input(format!(
                "pair probability {pair_prob} outside [0, 1]"
            )));
        }
        Self::build(
            layout,
            kind,
            num_models,
            batch_size,
            adam,
            None,
            Some(pair_prob),
            parent,
        )
    }

    pub fn num_models(&self) -> usize {
        self.models.len()
    }

    pub fn models(&self) -> &[RewardModel] {
        &self.models
    }

    pub fn buffer_len(&self) -> usize {
        self.buffer.len()
    }

    /// Build the per-model training batches for the current buffer:
    /// an independent bootstrap resample per model, augmented with fakes
    /// when guidance is active.
    pub fn training_batches(&mut self) -> Result<Vec<Vec<Interaction>>> {
        let mut batches = Vec::with_capacity(self.models.len());
        for k in 0..self.models.len() {
            let mut batch =
                bootstrap_resample(&self.buffer, self.batch_size, &mut self.resample_streams[k])?;
            if let Some(g) = &self.guidance {
                batch = augment_with_fakes(&batch, g, &mut self.fake_streams[k]);
            }
            batches.push(batch);
        }
        Ok(batches)
    }

    /// One Adam step per model on its batch.
    pub fn apply_training_batches(&mut self, batches: &[Vec<Interaction>]) -> Result<()> {
        for (k, batch) in batches.iter().enumerate() {
            let grad = self.models[k].grad_logloss(batch)?;
            adam_step(&mut self.models[k], &grad, &mut self.adam[k])?;
        }
        Ok(())
    }
}

impl Agent for GuideBootAgent {
    fn select(&mut self, candidates: &CandidateSet) -> Result<usize> {
        let k = self.select_stream.below(self.models.len());
        let model = &self.models[k];
        argmax_by(candidates, |x| model.predict(x))
    }

    fn observe(&mut self, interaction: Interaction) -> Result<()> {
        if let Some(g) = &mut self.guidance {
            g.update_counts(&interaction.features);
        }
        if let Some((p, stream)) = &mut self.pseudo_pair {
            if stream.coin(*p) {
                self.buffer.push(Interaction {
                    features: interaction.features.clone(),
                    reward: 1,
                    step: interaction.step,
                });
                self.buffer.push(Interaction {
                    features: interaction.features.clone(),
                    reward: 0,
                    step: interaction.step,
                });
            }
        }
        self.buffer.push(interaction);
        let batches = self.training_batches()?;
        self.apply_training_batches(&batches)
    }
}
