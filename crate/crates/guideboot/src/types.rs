//! Shared domain types and argmax selection.

use crate::error::{Error, Result};

/// Field structure shared by every feature vector in one environment:
/// the number of categorical values per field and which field carries the
/// action identifier.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldLayout {
    pub cardinalities: Vec<usize>,
    pub action_field: usize,
}

impl FieldLayout {
    pub fn new(cardinalities: Vec<usize>, action_field: usize) -> Result<Self> {
        if cardinalities.is_empty() {
            return Err(Error::invalid_input("layout needs at least one field"));
        }
        if action_field >= cardinalities.len() {
            return Err(Error::invalid_input(format!(
                "action field {action_field} out of range for {} fields",
                cardinalities.len()
            )));
        }
        Ok(FieldLayout {
            cardinalities,
            action_field,
        })
    }

    pub fn num_fields(&self) -> usize {
        self.cardinalities.len()
    }

    /// Total one-hot dimension (sum of cardinalities).
    pub fn onehot_dim(&self) -> usize {
        self.cardinalities.iter().sum()
    }

    pub fn check(&self, x: &FeatureVector) -> Result<()> {
        if x.codes.len() != self.cardinalities.len() {
            return Err(Error::invalid_input(format!(
                "feature vector has {} fields, layout declares {}",
                x.codes.len(),
                self.cardinalities.len()
            )));
        }
        for (j, (&code, &card)) in x.codes.iter().zip(&self.cardinalities).enumerate() {
            if code as usize >= card {
                return Err(Error::invalid_input(format!(
                    "code {code} out of range for field {j} (cardinality {card})"
                )));
            }
        }
        Ok(())
    }
}

/// Ordered categorical field codes describing one (context, action) pair.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FeatureVector {
    pub codes: Vec<u32>,
}

impl FeatureVector {
    pub fn new(codes: Vec<u32>) -> Self {
        FeatureVector { codes }
    }

    /// The action identifier code under `layout`.
    pub fn action_code(&self, layout: &FieldLayout) -> u32 {
        self.codes[layout.action_field]
    }
}

/// One logged pull: features of the chosen candidate and its binary reward.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interaction {
    pub features: FeatureVector,
    pub reward: u8,
    pub step: u64,
}

impl Interaction {
    pub fn new(features: FeatureVector, reward: u8, step: u64) -> Result<Self> {
        if reward > 1 {
            return Err(Error::invalid_input(format!(
                "reward must be 0 or 1, got {reward}"
            )));
        }
        Ok(Interaction {
            features,
            reward,
            step,
        })
    }

    pub fn reward_f64(&self) -> f64 {
        f64::from(self.reward)
    }
}

/// The candidate actions offered at one time step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateSet {
    pub candidates: Vec<FeatureVector>,
}

impl CandidateSet {
    pub fn new(candidates: Vec<FeatureVector>) -> Result<Self> {
        if candidates.is_empty() {
            return Err(Error::invalid_input("candidate set must be nonempty"));
        }
        Ok(CandidateSet { candidates })
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }
}

/// Index of the maximum score, ties broken by lowest index.
pub fn argmax_tiebreak(scores: &[f64]) -> Result<usize> {
    if scores.is_empty() {
        return Err(Error::invalid_input("argmax over empty score list"));
    }
    let mut best = 0usize;
    for (i, &s) in scores.iter().enumerate() {
        if !s.is_finite() {
            return Err(Error::invalid_input(format!(
                "non-finite score {s} at index {i}"
            )));
        }
        if s > scores[best] {
            best = i;
        }
    }
    Ok(best)
}
