//! Streaming agents: they never keep the full history, only an online
//! buffer of the most recent `c` interactions. When the buffer fills, each
//! model trains on its own shuffle-and-split of the buffer (with fake
//! samples injected per minibatch for the guided variant) and the buffer
//! is cleared.

use super::{argmax_by, Agent};
use crate::error::{Error, Result};
use crate::guidance::{augment_with_fakes, shuffle_split, DensityKind, GuidanceState};
use crate::models::{adam_step, init_model, AdamParams, AdamState, ModelKind, RewardModel};
use crate::rng::RngStream;
use crate::types::{CandidateSet, FieldLayout, Interaction};

/// Streaming guided bootstrap: K models, capacity-c online buffer,
/// n minibatches per flush.
pub struct OnlineGuideBootAgent {
    models: Vec<RewardModel>,
    adam: Vec<AdamState>,
    guidance: Option<GuidanceState>,
    buffer: Vec<Interaction>,
    capacity: usize,
    minibatches: usize,
    select_stream: RngStream,
    split_streams: Vec<RngStream>,
    fake_streams: Vec<RngStream>,
}

impl OnlineGuideBootAgent {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        layout: &FieldLayout,
        kind: ModelKind,
        num_models: usize,
        capacity: usize,
        minibatches: usize,
        adam: AdamParams,
        guidance: Option<(f64, DensityKind)>,
        parent: &RngStream,
    ) -> Result<Self> {
        if capacity < minibatches || minibatches == 0 {
            return Err(Error::invalid_input(format!(
                "need capacity >= minibatches >= 1, got c = {capacity}, n = {minibatches}"
            )));
        }
        let mut models = Vec::with_capacity(num_models);
        let mut split_streams = Vec::with_capacity(num_models);
        let mut fake_streams = Vec::with_capacity(num_models);
        for k in 0..num_models {
            let mut init_stream = parent.derive(&format!("init-{k}"))?;
            models.push(init_model(kind, layout, &mut init_stream));
            split_streams.push(parent.derive(&format!("split-{k}"))?);
            fake_streams.push(parent.derive(&format!("fake-{k}"))?);
        }
        let adam = models
            .iter()
            .map(|m| AdamState::new(m.num_params(), adam))
            .collect();
        let guidance = match guidance {
            Some((alpha, density)) => Some(GuidanceState::new(layout, alpha, density)?),
            None => None,
        };
        Ok(OnlineGuideBootAgent {
            models,
            adam,
            guidance,
            buffer: Vec::with_capacity(capacity),
            capacity,
            minibatches,
            select_stream: parent.derive("select")?,
            split_streams,
            fake_streams,
        })
    }

    pub fn models(&self) -> &[RewardModel] {
        &self.models
    }

    pub fn buffer_len(&self) -> usize {
        self.buffer.len()
    }

    /// Train on the buffered interactions and clear the buffer. Counts are
    /// updated from the whole buffer before any minibatch is built, so
    /// every model's fakes see the same density snapshot.
    pub fn flush(&mut self) -> Result<()> {
        if self.buffer.is_empty() {
            return Err(Error::invalid_input("flush of an empty online buffer"));
        }
        if let Some(g) = &mut self.guidance {
            for it in &self.buffer {
                g.update_counts(&it.features);
            }
        }
        for k in 0..self.models.len() {
            let batches = shuffle_split(&self.buffer, self.minibatches, &mut self.split_streams[k])?;
            for batch in &batches {
                let batch = match &self.guidance {
                    Some(g) => augment_with_fakes(batch, g, &mut self.fake_streams[k]),
                    None => batch.clone(),
                };
                let grad = self.models[k].grad_logloss(&batch)?;
                adam_step(&mut self.models[k], &grad, &mut self.adam[k])?;
            }
        }
        self.buffer.clear();
        Ok(())
    }
}

impl Agent for OnlineGuideBootAgent {
    fn select(&mut self, candidates: &CandidateSet) -> Result<usize> {
        let k = self.select_stream.below(self.models.len());
        let model = &self.models[k];
        argmax_by(candidates, |x| model.predict(x))
    }

    fn observe(&mut self, interaction: Interaction) -> Result<()> {
        self.buffer.push(interaction);
        if self.buffer.len() >= self.capacity {
            self.flush()?;
        }
        Ok(())
    }
}

/// The conventional greedy online loop: one model, plain shuffled splits,
/// no fake samples.
pub struct GreedyOnlineAgent {
    model: RewardModel,
    adam: AdamState,
    buffer: Vec<Interaction>,
    capacity: usize,
    minibatches: usize,
    split_stream: RngStream,
}

impl GreedyOnlineAgent {
    pub fn new(
        layout: &FieldLayout,
        kind: ModelKind,
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
        Ok(GreedyOnlineAgent {
            model,
            adam,
            buffer: Vec::with_capacity(capacity),
            capacity,
            minibatches,
            split_stream: parent.derive("split-0")?,
        })
    }

    pub fn model(&self) -> &RewardModel {
        &self.model
    }

    pub fn flush(&mut self) -> Result<()> {
        if self.buffer.is_empty() {
            return Err(Error::invalid_input("flush of an empty online buffer"));
        }
        let batches = shuffle_split(&self.buffer, self.minibatches, &mut self.split_stream)?;
        for batch in &batches {
            let grad = self.model.grad_logloss(batch)?;
            adam_step(&mut self.model, &grad, &mut self.adam)?;
        }
        self.buffer.clear();
        Ok(())
    }
}

impl Agent for GreedyOnlineAgent {
    fn select(&mut self, candidates: &CandidateSet) -> Result<usize> {
        argmax_by(candidates, |x| self.model.predict(x))
    }

    fn observe(&mut self, interaction: Interaction) -> Result<()> {
        self.buffer.push(interaction);
        if self.buffer.len() >= self.capacity {
            self.flush()?;
        }
        Ok(())
    }
}
