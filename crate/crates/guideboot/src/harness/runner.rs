//! Seeded episode execution, agent construction, and multi-seed
//! aggregation.
//!
//! Every episode is a pure function of (config, agent name, seed): the
//! seed's root stream is forked into labeled substreams for environment
//! generation, candidate draws, reward feedback, and the agent itself, so
//! distinct agents at the same seed face identical environments and
//! identical feedback coins.

use rayon::prelude::*;

use crate::agents::{
    Agent, DeepTsBetaAgent, DeepUcb1Agent, EpsilonGreedyAgent, EpsilonKind, GlmUcbAgent,
    GreedyOnlineAgent, GuideBootAgent, McDropoutAgent, ObbAgent, OnlineGuideBootAgent, TsBlrAgent,
    UniformAgent,
};
use crate::envs::{
    best_expected, sample_feedback, Environment, LoggedPool, NonlinearSyntheticSpec,
    SyntheticGlmSpec,
};
use crate::error::{Error, Result};
use crate::models::AdamParams;
use crate::rng::RngStream;
use crate::stats::{mean, sample_std};
use crate::types::{FieldLayout, Interaction};

use super::config::{AgentHyper, EnvKind, RunConfig};

/// One logged step of one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretRecord {
    pub seed: u64,
    pub agent: String,
    pub step: u64,
    pub action: u32,
    pub reward: u8,
    pub expected_reward: f64,
    pub best_expected: f64,
    pub instant_regret: f64,
    pub cum_regret: f64,
}

/// One aggregated metric for one agent across seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub agent: String,
    pub metric: String,
    pub mean: f64,
    pub std: f64,
    pub seeds: usize,
}

/// Build the seed's environment. Synthetic environments are generated from
/// the seed's "env" substream; a logged pool is loaded from disk and is
/// seed-independent.
pub fn build_environment(config: &RunConfig, seed: u64) -> Result<Environment> {
    let root = RngStream::from_seed(seed);
    let mut env_stream = root.derive("env")?;
    Ok(match config.env.kind {
        EnvKind::GlmSynthetic => Environment::Glm(SyntheticGlmSpec::generate(&mut env_stream)),
        EnvKind::NonlinearSynthetic => {
            Environment::Nonlinear(NonlinearSyntheticSpec::generate(&mut env_stream))
        }
        EnvKind::LoggedPool => {
            let path = config
                .env
                .pool_path
                .as_ref()
                .ok_or_else(|| Error::invalid_input("logged-pool environment without a path"))?;
            Environment::Logged(LoggedPool::from_path(path)?)
        }
    })
}

/// Instantiate a registered agent from the shared hyperparameter block.
pub fn build_agent(
    name: &str,
    hyper: &AgentHyper,
    layout: &FieldLayout,
    horizon: u64,
    parent: &RngStream,
) -> Result<Box<dyn Agent>> {
    let adam = AdamParams::with_learning_rate(hyper.learning_rate);
    let kind = hyper.model_kind;
    Ok(match name {
        "uniform" => Box::new(UniformAgent::new(parent)?),
        "epsilon-greedy" => Box::new(EpsilonGreedyAgent::new(
            layout,
            kind,
            hyper.capacity,
            hyper.minibatches,
            adam,
            EpsilonKind::Fixed(hyper.epsilon),
            parent,
        )?),
        "epsilon-greedy-decay" => Box::new(EpsilonGreedyAgent::new(
            layout,
            kind,
            hyper.capacity,
            hyper.minibatches,
            adam,
            EpsilonKind::LinearDecay { horizon },
            parent,
        )?),
        "glm-ucb" => Box::new(GlmUcbAgent::new(layout, 1.0, hyper.refit_period)?),
        "ts-blr" => Box::new(TsBlrAgent::new(layout, 1.0, hyper.refit_period, parent)?),
        "bootstrap" => Box::new(GuideBootAgent::vanilla(
            layout,
            kind,
            hyper.models,
            hyper.batch_size,
            adam,
            parent,
        )?),
        "obb" => Box::new(ObbAgent::new(layout, kind, hyper.models, adam, parent)?),
        "giro" => Box::new(GuideBootAgent::pseudo_pairs(
            layout,
            kind,
            hyper.models,
            hyper.batch_size,
            adam,
            hyper.pair_prob,
            parent,
        )?),
        "guideboot" => Box::new(GuideBootAgent::guided(
            layout,
            kind,
            hyper.models,
            hyper.batch_size,
            adam,
            hyper.alpha,
            hyper.density,
            parent,
        )?),
        "online-guideboot" => Box::new(OnlineGuideBootAgent::new(
            layout,
            kind,
            hyper.models,
            hyper.capacity,
            hyper.minibatches,
            adam,
            Some((hyper.alpha, hyper.density)),
            parent,
        )?),
        "greedy-online" => Box::new(GreedyOnlineAgent::new(
            layout,
            kind,
            hyper.capacity,
            hyper.minibatches,
            adam,
            parent,
        )?),
        "deep-ucb1" => Box::new(DeepUcb1Agent::new(
            layout,
            kind,
            hyper.ucb_alpha,
            hyper.capacity,
            hyper.minibatches,
            adam,
            parent,
        )?),
        "deep-ts-beta" => Box::new(DeepTsBetaAgent::new(
            layout,
            kind,
            hyper.shaping,
            hyper.capacity,
            hyper.minibatches,
            adam,
            parent,
        )?),
        "mc-dropout" => Box::new(McDropoutAgent::new(
            layout,
            hyper.dropout_rate,
            hyper.capacity,
            hyper.minibatches,
            adam,
            parent,
        )?),
        other => {
            return Err(Error::invalid_input(format!(
                "unknown agent `{other}`"
            )))
        }
    })
}

/// Run one agent for one seed over the full horizon. Emits one record per
/// `stride` steps plus the final step.
pub fn run_episode(config: &RunConfig, agent_name: &str, seed: u64) -> Result<Vec<RegretRecord>> {
    let env = build_environment(config, seed)?;
    let horizon = config.env.horizon;
    if let Some(max) = env.max_steps() {
        if horizon > max {
            return Err(Error::invalid_input(format!(
                "horizon {horizon} exceeds the logged pool's {max} steps"
            )));
        }
    }
    let layout = env.layout().clone();
    let root = RngStream::from_seed(seed);
    let mut candidate_stream = root.derive("candidates")?;
    let mut feedback_stream = root.derive("feedback")?;
    let agent_parent = root.derive(&format!("agent-{agent_name}"))?;
    let mut agent = build_agent(agent_name, &config.hyper, &layout, horizon, &agent_parent)?;

    let stride = config.output.stride;
    let mut records = Vec::with_capacity((horizon / stride + 1) as usize);
    let mut cum_regret = 0.0;
    for t in 1..=horizon {
        let (set, expected) = env.candidates_at(t - 1, &mut candidate_stream)?;
        let i = agent.select(&set)?;
        let chosen = &set.candidates[i];
        let p = expected[i];
        let best = best_expected(&expected)?;
        let reward = sample_feedback(p, &mut feedback_stream)?;
        let instant = best - p;
        cum_regret += instant;
        let action = chosen.action_code(&layout);
        agent.observe(Interaction::new(chosen.clone(), reward, t)?)?;
        if t % stride == 0 || t == horizon {
            records.push(RegretRecord {
                seed,
                agent: agent_name.to_string(),
                step: t,
                action,
                reward,
                expected_reward: p,
                best_expected: best,
                instant_regret: instant,
                cum_regret,
            });
        }
    }
    Ok(records)
}

/// Run every (agent, seed) episode, seeds in parallel, and merge in
/// (agent, seed, step) order.
pub fn run_experiment(config: &RunConfig) -> Result<Vec<RegretRecord>> {
    let pairs: Vec<(String, u64)> = config
        .agents
        .iter()
        .flat_map(|a| config.seeds.iter().map(move |&s| (a.clone(), s)))
        .collect();
    let per_pair: Vec<Vec<RegretRecord>> = pairs
        .par_iter()
        .map(|(agent, seed)| run_episode(config, agent, *seed))
        .collect::<Result<_>>()?;
    Ok(per_pair.into_iter().flatten().collect())
}

/// Per-agent mean/std of the final cumulative regret and of the average
/// realized reward over the logged steps, across seeds.
pub fn aggregate(records: &[RegretRecord]) -> Result<Vec<SummaryRow>> {
    use std::collections::BTreeMap;
    // (agent, seed) → (final step, final cum regret, reward sum, count).
    let mut groups: BTreeMap<(String, u64), (u64, f64, f64, usize)> = BTreeMap::new();
    for r in records {
        let entry = groups
            .entry((r.agent.clone(), r.seed))
            .or_insert((0, 0.0, 0.0, 0));
        if r.step >= entry.0 {
            entry.0 = r.step;
            entry.1 = r.cum_regret;
        }
        entry.2 += f64::from(r.reward);
        entry.3 += 1;
    }
    let mut by_agent: BTreeMap<String, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for ((agent, _seed), (_, final_regret, reward_sum, count)) in groups {
        let e = by_agent.entry(agent).or_default();
        e.0.push(final_regret);
        e.1.push(reward_sum / count as f64);
    }
    let mut rows = Vec::new();
    for (agent, (regrets, rewards)) in by_agent {
        rows.push(SummaryRow {
            agent: agent.clone(),
            metric: "final_cum_regret".into(),
            mean: mean(&regrets)?,
            std: sample_std(&regrets)?,
            seeds: regrets.len(),
        });
        rows.push(SummaryRow {
            agent,
            metric: "average_reward".into(),
            mean: mean(&rewards)?,
            std: sample_std(&rewards)?,
            seeds: rewards.len(),
        });
    }
    Ok(rows)
}
