//! Guided-bootstrap contextual bandits.
//!
//! A toolkit for Bernoulli contextual bandit experiments built around
//! *guided bootstrap* exploration: an ensemble of reward models is trained
//! on bootstrap-resampled history augmented with randomly generated fake
//! samples, where the probability of injecting a fake sample for an input
//! is `min(alpha / rho(x), 1)` and `rho` is a count-based density estimate.
//! Inputs the agent has rarely seen get strong label noise (exploration
//! pressure); well-covered inputs train almost purely on real data.
//!
//! The crate ships:
//!
//! - replay and online-streaming guided-bootstrap agents, plus classic and
//!   deep baselines (epsilon-greedy, GLM-UCB, Thompson sampling on a
//!   Laplace-approximated Bayesian GLM, vanilla bootstrap, Poisson online
//!   bootstrap, pseudo-reward bootstrap, count-based UCB/Beta scoring on a
//!   neural reward model, MC-dropout);
//! - synthetic Bernoulli environments (a well-specified GLM task, a
//!   nonlinear variant, and a logged candidate-pool format);
//! - closed-form single-arm estimator moments and a Monte-Carlo brute-force
//!   oracle used to verify the guidance machinery;
//! - a deterministic, seeded experiment harness with regret accounting and
//!   CSV outputs.

pub mod agents;
pub mod envs;
pub mod error;
pub mod guidance;
pub mod harness;
pub mod models;
pub mod oracles;
pub mod rng;
pub mod stats;
pub mod types;

pub use error::{Error, Result};
pub use rng::RngStream;
pub use types::{argmax_tiebreak, CandidateSet, FeatureVector, FieldLayout, Interaction};
