//! Decision policies: the guided-bootstrap agents (replay and streaming)
//! and the baseline roster.

mod bayes_glm;
mod deep;
mod ensemble;
mod online;
mod simple;

pub use bayes_glm::{BayesGlmState, GlmUcbAgent, TsBlrAgent};
pub use deep::{
    deep_ts_beta_sample, deep_ucb1_score, CountBanditState, DeepTsBetaAgent, DeepUcb1Agent,
    McDropoutAgent,
};
pub use ensemble::GuideBootAgent;
pub use online::{GreedyOnlineAgent, OnlineGuideBootAgent};
pub use simple::{epsilon_schedule, EpsilonGreedyAgent, EpsilonKind, ObbAgent, UniformAgent};

use crate::error::Result;
use crate::types::{CandidateSet, Interaction};

/// A bandit policy driven by the harness: pick a candidate, then observe
/// the chosen candidate's reward. Agents own their randomness (derived
/// streams handed over at construction), so a full run is a pure function
/// of the construction arguments.
pub trait Agent {
    fn select(&mut self, candidates: &CandidateSet) -> Result<usize>;
    fn observe(&mut self, interaction: Interaction) -> Result<()>;
}

/// Score every candidate with `score` and take the argmax (ties to the
/// lowest index).
pub(crate) fn argmax_by<F>(candidates: &CandidateSet, mut score: F) -> Result<usize>
where
    F: FnMut(&crate::types::FeatureVector) -> Result<f64>,
{
    let scores: Result<Vec<f64>> = candidates.candidates.iter().map(|x| score(x)).collect();
    crate::types::argmax_tiebreak(&scores?)
}
