//! Classic baselines: uniform random, the epsilon-greedy family, and the
//! online bootstrap (per-sample Poisson weights).

use rand_distr::{Distribution, Poisson};

use super::{argmax_by, Agent};
use crate::error::{Error, Result};
use crate::models::{adam_step, init_model, AdamParams, AdamState, ModelKind, RewardModel};
use crate::rng::RngStream;
use crate::types::{CandidateSet, FieldLayout, Interaction};

/// Linearly decaying exploration rate: 0.1 at t = 0 down to 0 at t = T.
pub fn epsilon_schedule(t: u64, horizon: u64) -> Result<f64> {
    if horizon == 0 || t > horizon {
        return Err(Error::invalid_input(format!(
            "need 0 <= t <= T with T >= 1, got t = {t}, T = {horizon}"
        )));
    }
    Ok(0.1 * (1.0 - t as f64 / horizon as f64))
}

/// Fixed or linearly decaying exploration rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpsilonKind {
    Fixed(f64),
    /// `epsilon_schedule` over the given horizon.
    LinearDecay { horizon: u64 },
}

/// Greedy model with epsilon exploration; trains like the greedy online
/// loop (capacity-c buffer, n minibatches per flush).
pub struct EpsilonGreedyAgent {
    model: RewardModel,
    adam: AdamState,
    buffer: Vec<Interaction>,
    capacity: usize,
    minibatches: usize,
    split_stream: RngStream,
    explore_stream: RngStream,
    epsilon: EpsilonKind,
    t: u64,
}

impl EpsilonGreedyAgent {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        layout: &FieldLayout,
        kind: ModelKind,
        capacity: usize,
        minibatches: usize,
        adam: AdamParams,
        epsilon: EpsilonKind,
        parent: &RngStream,
    ) -> Result<Self> {
        if capacity < minibatches || minibatches == 0 {
            return Err(Error::invalid_input(format!(
                "need capacity >= minibatches >= 1, got c = {capacity}, n = {minibatches}"
            )));
        }
        match epsilon {
            EpsilonKind::Fixed(e) if !(0.0..=1.0).contains(&e) => {
                return Err(Error::invalid_input(format!(
                    "epsilon {e} outside [0, 1]"
                )));
            }
            EpsilonKind::LinearDecay { horizon: 0 } => {
                return Err(Error::invalid_input("decay horizon must be >= 1"));
            }
            _ => {}
        }
        let mut init_stream = parent.derive("init-0")?;
        let model = init_model(kind, layout, &mut init_stream);
        let adam = AdamState::new(model.num_params(), adam);
        Ok(EpsilonGreedyAgent {
            model,
            adam,
            buffer: Vec::with_capacity(capacity),
            capacity,
            minibatches,
            split_stream: parent.derive("split-0")?,
            explore_stream: parent.derive("explore")?,
            epsilon,
            t: 0,
        })
    }

    pub fn model(&self) -> &RewardModel {
        &self.model
    }

    fn current_epsilon(&self) -> Result<f64> {
        match self.epsilon {
            EpsilonKind::Fixed(e) => Ok(e),
            EpsilonKind::LinearDecay { horizon } => {
                epsilon_schedule(self.t.min(horizon), horizon)
            }
        }
    }
}

impl Agent for EpsilonGreedyAgent {
    fn select(&mut self, candidates: &CandidateSet) -> Result<usize> {
        let eps = self.current_epsilon()?;
        self.t += 1;
        if eps > 0.0 && self.explore_stream.coin(eps) {
            return Ok(self.explore_stream.below(candidates.len()));
        }
        argmax_by(candidates, |x| self.model.predict(x))
    }

    fn observe(&mut self, interaction: Interaction) -> Result<()> {
        self.buffer.push(interaction);
        if self.buffer.len() >= self.capacity {
            let batches =
                crate::guidance::shuffle_split(&self.buffer, self.minibatches, &mut self.split_stream)?;
            for batch in &batches {
                let grad = self.model.grad_logloss(batch)?;
                adam_step(&mut self.model, &grad, &mut self.adam)?;
            }
            self.buffer.clear();
        }
        Ok(())
    }
}

/// Online bootstrap: K models, each arriving sample trains model k with a
/// Poisson(1) multiplicity drawn independently per model.
pub struct ObbAgent {
    models: Vec<RewardModel>,
    adam: Vec<AdamState>,
    select_stream: RngStream,
    weight_streams: Vec<RngStream>,
}

impl ObbAgent {
    pub fn new(
        layout: &FieldLayout,
        kind: ModelKind,
        num_models: usize,
        adam: AdamParams,
        parent: &RngStream,
    ) -> Result<Self> {
        if num_models == 0 {
            return Err(Error::invalid_input("need at least one model"));
        }
        let mut models = Vec::with_capacity(num_models);
        let mut weight_streams = Vec::with_capacity(num_models);
        for k in 0..num_models {
            let mut init_stream = parent.derive(&format!("init-{k}"))?;
            models.push(init_model(kind, layout, &mut init_stream));
            weight_streams.push(parent.derive(&format!("weight-{k}"))?);
        }
        let adam = models
            .iter()
            .map(|m| AdamState::new(m.num_params(), adam))
            .collect();
        Ok(ObbAgent {
            models,
            adam,
            select_stream: parent.derive("select")?,
            weight_streams,
        })
    }

    pub fn models(&self) -> &[RewardModel] {
        &self.models
    }
}

impl Agent for ObbAgent {
    fn select(&mut self, candidates: &CandidateSet) -> Result<usize> {
        let k = self.select_stream.below(self.models.len());
        let model = &self.models[k];
        argmax_by(candidates, |x| model.predict(x))
    }

    fn observe(&mut self, interaction: Interaction) -> Result<()> {
        let poisson = Poisson::new(1.0).map_err(|e| Error::invalid_state(e.to_string()))?;
        for k in 0..self.models.len() {
            let w = poisson.sample(&mut self.weight_streams[k]) as usize;
            if w == 0 {
                continue;
            }
            let batch = vec![interaction.clone(); w];
            let grad = self.models[k].grad_logloss(&batch)?;
            adam_step(&mut self.models[k], &grad, &mut self.adam[k])?;
        }
        Ok(())
    }
}

/// Picks uniformly among the candidates; never learns.
pub struct UniformAgent {
    stream: RngStream,
}

impl UniformAgent {
    pub fn new(parent: &RngStream) -> Result<Self> {
        Ok(UniformAgent {
            stream: parent.derive("select")?,
        })
    }
}

impl Agent for UniformAgent {
    fn select(&mut self, candidates: &CandidateSet) -> Result<usize> {
        Ok(self.stream.below(candidates.len()))
    }

    fn observe(&mut self, _interaction: Interaction) -> Result<()> {
        Ok(())
    }
}
