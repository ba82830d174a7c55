//! Synthetic Bernoulli environments and the logged candidate-pool format.
//!
//! The main benchmark is a generalized-linear Bernoulli task: 25 actions,
//! each candidate described by three categorical fields
//! `[action, attr1, attr2]` with cardinalities `[25, 5, 5]`, expected
//! reward `sigmoid(w0[a] + w1[x1] + w2[x2] - 1)` with coefficients drawn
//! uniformly from `[-0.25, 0.25]`. A nonlinear variant replaces the two
//! attribute terms with a pairwise interaction table so that a GLM reward
//! model is misspecified. A logged pool replays a fixed file of candidate
//! sets with groundtruth probabilities.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::models::sigmoid;
use crate::rng::RngStream;
use crate::types::{CandidateSet, FeatureVector, FieldLayout};

pub const GLM_NUM_ACTIONS: usize = 25;
pub const GLM_ATTR_CARDINALITY: usize = 5;
pub const GLM_INTERCEPT: f64 = -1.0;

fn glm_layout() -> FieldLayout {
    FieldLayout::new(
        vec![GLM_NUM_ACTIONS, GLM_ATTR_CARDINALITY, GLM_ATTR_CARDINALITY],
        0,
    )
    .expect("static layout")
}

/// The well-specified GLM Bernoulli environment.
#[derive(Debug, Clone)]
pub struct SyntheticGlmSpec {
    pub layout: FieldLayout,
    pub w0: Vec<f64>,
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
    pub intercept: f64,
}

impl SyntheticGlmSpec {
    /// Draw a randomized environment: all coefficients i.i.d. uniform on
    /// `[-0.25, 0.25]`.
    pub fn generate(rng: &mut RngStream) -> Self {
        let draw = |rng: &mut RngStream, n: usize| -> Vec<f64> {
            (0..n).map(|_| rng.uniform_in(-0.25, 0.25)).collect()
        };
        let w0 = draw(rng, GLM_NUM_ACTIONS);
        let w1 = draw(rng, GLM_ATTR_CARDINALITY);
        let w2 = draw(rng, GLM_ATTR_CARDINALITY);
        SyntheticGlmSpec {
            layout: glm_layout(),
            w0,
            w1,
            w2,
            intercept: GLM_INTERCEPT,
        }
    }

    pub fn expected_reward(&self, x: &FeatureVector) -> Result<f64> {
        self.layout.check(x)?;
        let z = self.w0[x.codes[0] as usize]
            + self.w1[x.codes[1] as usize]
            + self.w2[x.codes[2] as usize]
            + self.intercept;
        Ok(sigmoid(z))
    }
}

/// Nonlinear variant: `sigmoid(w0[a] + w12[x1][x2] - 1)` with the
/// interaction entries drawn from `[-0.5, 0.5]`. A one-hot GLM cannot fit
/// the interaction table exactly.
#[derive(Debug, Clone)]
pub struct NonlinearSyntheticSpec {
    pub layout: FieldLayout,
    pub w0: Vec<f64>,
    pub w12: Vec<Vec<f64>>,
    pub intercept: f64,
}

impl NonlinearSyntheticSpec {
    pub fn generate(rng: &mut RngStream) -> Self {
        let w0 = (0..GLM_NUM_ACTIONS)
            .map(|_| rng.uniform_in(-0.25, 0.25))
            .collect();
        let w12 = (0..GLM_ATTR_CARDINALITY)
            .map(|_| {
                (0..GLM_ATTR_CARDINALITY)
                    .map(|_| rng.uniform_in(-0.5, 0.5))
                    .collect()
            })
            .collect();
        NonlinearSyntheticSpec {
            layout: glm_layout(),
            w0,
            w12,
            intercept: GLM_INTERCEPT,
        }
    }

    pub fn expected_reward(&self, x: &FeatureVector) -> Result<f64> {
        self.layout.check(x)?;
        let z = self.w0[x.codes[0] as usize]
            + self.w12[x.codes[1] as usize][x.codes[2] as usize]
            + self.intercept;
        Ok(sigmoid(z))
    }
}

/// One candidate per action, attribute codes uniform over their cardinality.
fn draw_synthetic_candidates(rng: &mut RngStream) -> CandidateSet {
    let candidates = (0..GLM_NUM_ACTIONS)
        .map(|a| {
            let x1 = rng.below(GLM_ATTR_CARDINALITY) as u32;
            let x2 = rng.below(GLM_ATTR_CARDINALITY) as u32;
            FeatureVector::new(vec![a as u32, x1, x2])
        })
        .collect();
    CandidateSet::new(candidates).expect("nonempty by construction")
}

/// Bernoulli feedback for a groundtruth probability.
pub fn sample_feedback(p: f64, rng: &mut RngStream) -> Result<u8> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid_input(format!(
            "probability {p} outside [0, 1]"
        )));
    }
    Ok(u8::from(rng.uniform() < p))
}

/// Maximum expected reward over a candidate set (the per-step regret
/// baseline).
pub fn best_expected(expected: &[f64]) -> Result<f64> {
    let idx = crate::types::argmax_tiebreak(expected)?;
    Ok(expected[idx])
}

/// A fixed sequence of candidate sets with groundtruth probabilities,
/// loaded from a line-oriented text file.
#[derive(Debug, Clone)]
pub struct LoggedPool {
    pub layout: FieldLayout,
    pub steps: Vec<(CandidateSet, Vec<f64>)>,
}

impl LoggedPool {
    /// Parse the pool format: one step per line,
    /// `m;codes_1|...|codes_m;p_1|...|p_m`, candidate codes comma-separated
    /// integers, probabilities decimal text. Blank lines and `#` comments
    /// are skipped. The action field is field 0.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut steps: Vec<(CandidateSet, Vec<f64>)> = Vec::new();
        let mut num_fields: Option<usize> = None;
        for (lineno, raw) in text.lines().enumerate() {
            let lineno = lineno + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split(';');
            let (m_part, codes_part, probs_part) =
                match (parts.next(), parts.next(), parts.next(), parts.next()) {
                    (Some(a), Some(b), Some(c), None) => (a, b, c),
                    _ => {
                        return Err(Error::parse(
                            path,
                            lineno,
                            "expected three ';'-separated sections",
                        ))
                    }
                };
            let m: usize = m_part.trim().parse().map_err(|_| {
                Error::parse(path, lineno, format!("bad candidate count '{m_part}'"))
            })?;
            if m == 0 {
                return Err(Error::parse(path, lineno, "candidate count must be >= 1"));
            }
            let mut candidates = Vec::with_capacity(m);
            for chunk in codes_part.split('|') {
                let codes: Result<Vec<u32>> = chunk
                    .split(',')
                    .map(|c| {
                        c.trim().parse::<u32>().map_err(|_| {
                            Error::parse(path, lineno, format!("bad field code '{c}'"))
                        })
                    })
                    .collect();
                let codes = codes?;
                match num_fields {
                    None => num_fields = Some(codes.len()),
                    Some(j) if j != codes.len() => {
                        return Err(Error::parse(
                            path,
                            lineno,
                            format!("candidate has {} fields, expected {j}", codes.len()),
                        ))
                    }
                    _ => {}
                }
                candidates.push(FeatureVector::new(codes));
            }
            if candidates.len() != m {
                return Err(Error::parse(
                    path,
                    lineno,
                    format!("declared {m} candidates, found {}", candidates.len()),
                ));
            }
            let probs: Result<Vec<f64>> = probs_part
                .split('|')
                .map(|p| {
                    let v: f64 = p.trim().parse().map_err(|_| {
                        Error::parse(path, lineno, format!("bad probability '{p}'"))
                    })?;
                    if !(0.0..=1.0).contains(&v) {
                        return Err(Error::parse(
                            path,
                            lineno,
                            format!("probability {v} outside [0, 1]"),
                        ));
                    }
                    Ok(v)
                })
                .collect();
            let probs = probs?;
            if probs.len() != m {
                return Err(Error::parse(
                    path,
                    lineno,
                    format!("declared {m} probabilities, found {}", probs.len()),
                ));
            }
            steps.push((CandidateSet::new(candidates).expect("m >= 1"), probs));
        }
        if steps.is_empty() {
            return Err(Error::parse(path, 0, "pool file contains no steps"));
        }
        let num_fields = num_fields.expect("at least one step");
        // Cardinalities are inferred from the largest code seen per field.
        let mut cards = vec![1usize; num_fields];
        for (set, _) in &steps {
            for cand in &set.candidates {
                for (j, &code) in cand.codes.iter().enumerate() {
                    cards[j] = cards[j].max(code as usize + 1);
                }
            }
        }
        Ok(LoggedPool {
            layout: FieldLayout::new(cards, 0)?,
            steps,
        })
    }

    /// Render steps back into the pool text format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (set, probs) in &self.steps {
            let codes = set
                .candidates
                .iter()
                .map(|c| {
                    c.codes
                        .iter()
                        .map(|v| v.to_string())
                        .collect::<Vec<_>>()
                        .join(",")
                })
                .collect::<Vec<_>>()
                .join("|");
            let ps = probs
                .iter()
                .map(|p| format!("{p}"))
                .collect::<Vec<_>>()
                .join("|");
            let _ = writeln!(out, "{};{};{}", set.len(), codes, ps);
        }
        out
    }
}

/// A bandit environment driven by the harness: given a step index and a
/// stream, produce the candidate set and its groundtruth expected rewards.
#[derive(Debug, Clone)]
pub enum Environment {
    Glm(SyntheticGlmSpec),
    Nonlinear(NonlinearSyntheticSpec),
    Logged(LoggedPool),
}

impl Environment {
    pub fn layout(&self) -> &FieldLayout {
        match self {
            Environment::Glm(s) => &s.layout,
            Environment::Nonlinear(s) => &s.layout,
            Environment::Logged(p) => &p.layout,
        }
    }

    /// Number of steps the environment can serve, if bounded.
    pub fn max_steps(&self) -> Option<u64> {
        match self {
            Environment::Logged(p) => Some(p.steps.len() as u64),
            _ => None,
        }
    }

    pub fn candidates_at(
        &self,
        step: u64,
        rng: &mut RngStream,
    ) -> Result<(CandidateSet, Vec<f64>)> {
        match self {
            Environment::Glm(spec) => {
                let set = draw_synthetic_candidates(rng);
                let expected: Result<Vec<f64>> = set
                    .candidates
                    .iter()
                    .map(|x| spec.expected_reward(x))
                    .collect();
                Ok((set, expected?))
            }
            Environment::Nonlinear(spec) => {
                let set = draw_synthetic_candidates(rng);
                let expected: Result<Vec<f64>> = set
                    .candidates
                    .iter()
                    .map(|x| spec.expected_reward(x))
                    .collect();
                Ok((set, expected?))
            }
            Environment::Logged(pool) => {
                let idx = step as usize;
                let (set, probs) = pool.steps.get(idx).ok_or_else(|| {
                    Error::invalid_input(format!(
                        "step {idx} beyond logged pool of {} steps",
                        pool.steps.len()
                    ))
                })?;
                Ok((set.clone(), probs.clone()))
            }
        }
    }
}
