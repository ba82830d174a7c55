//! Count-based density estimation, the guidance function, and fake-sample
//! augmentation, plus the two batch constructions (bootstrap resampling and
//! shuffle-and-split) the agents train on.
//!
//! The guidance function `g(x) = min(alpha / rho(x), 1)` is the probability
//! of injecting, independently, one fake positive `(x, 1)` and one fake
//! negative `(x, 0)` for each real sample in a training batch. `rho` is
//! either the impression count of the sample's action, or the unscaled
//! harmonic average of per-field value counts
//! `rho(x) = [sum_j 1/count_j(x_j)]^-1`. Unseen values make `rho` zero by
//! convention, which the cap turns into g = 1: maximal exploration
//! pressure on inputs the agent has never observed.

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::types::{FeatureVector, FieldLayout, Interaction};

/// Which unnormalized density estimate backs the guidance function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DensityKind {
    /// `rho(x)` = impression count of the action field's value.
    ActionCount,
    /// `rho(x)` = harmonic form over all fields.
    Harmonic,
}

/// Per-field value counts plus the guidance parameters.
///
/// `alpha = 0` disables augmentation entirely (g = 0): the state still
/// counts, but no fake coins are flipped.
#[derive(Debug, Clone)]
pub struct GuidanceState {
    field_counts: Vec<Vec<u64>>,
    action_field: usize,
    pub alpha: f64,
    pub kind: DensityKind,
    observed: u64,
}

impl GuidanceState {
    pub fn new(layout: &FieldLayout, alpha: f64, kind: DensityKind) -> Result<Self> {
        if alpha < 0.0 || !alpha.is_finite() {
            return Err(Error::invalid_input(format!(
                "guidance alpha must be finite and >= 0, got {alpha}"
            )));
        }
        Ok(GuidanceState {
            field_counts: layout.cardinalities.iter().map(|&c| vec![0u64; c]).collect(),
            action_field: layout.action_field,
            alpha,
            kind,
            observed: 0,
        })
    }

    /// Record one observed interaction's features.
    pub fn update_counts(&mut self, x: &FeatureVector) {
        for (j, &code) in x.codes.iter().enumerate() {
            self.field_counts[j][code as usize] += 1;
        }
        self.observed += 1;
    }

    /// Number of interactions counted so far.
    pub fn observed(&self) -> u64 {
        self.observed
    }

    pub fn action_count(&self, action_code: u32) -> u64 {
        self.field_counts[self.action_field][action_code as usize]
    }

    /// Unnormalized density of `x`. Any zero count in scope yields 0,
    /// which the guidance cap maps to 1.
    pub fn density(&self, x: &FeatureVector) -> f64 {
        match self.kind {
            DensityKind::ActionCount => {
                self.field_counts[self.action_field][x.codes[self.action_field] as usize] as f64
            }
            DensityKind::Harmonic => {
                let mut inv_sum = 0.0;
                for (j, &code) in x.codes.iter().enumerate() {
                    let c = self.field_counts[j][code as usize];
                    if c == 0 {
                        return 0.0;
                    }
                    inv_sum += 1.0 / c as f64;
                }
                1.0 / inv_sum
            }
        }
    }

    /// Fake-sample probability `min(alpha / rho(x), 1)`; 1 when `rho` is 0.
    pub fn guidance_value(&self, x: &FeatureVector) -> f64 {
        if self.alpha == 0.0 {
            return 0.0;
        }
        let rho = self.density(x);
        if rho <= 0.0 {
            return 1.0;
        }
        (self.alpha / rho).min(1.0)
    }
}

/// Extend `batch` with fake samples: independently for each real sample,
/// a fake positive with probability `g` and a fake negative with
/// probability `g`. Real samples are never removed; fakes copy the real
/// sample's features.
pub fn augment_with_fakes(
    batch: &[Interaction],
    state: &GuidanceState,
    rng: &mut RngStream,
) -> Vec<Interaction> {
    if state.alpha == 0.0 {
        return batch.to_vec();
    }
    let mut out = Vec::with_capacity(batch.len());
    for it in batch {
        let g = state.guidance_value(&it.features);
        out.push(it.clone());
        if rng.coin(g) {
            out.push(Interaction {
                features: it.features.clone(),
                reward: 1,
                step: it.step,
            });
        }
        if rng.coin(g) {
            out.push(Interaction {
                features: it.features.clone(),
                reward: 0,
                step: it.step,
            });
        }
    }
    out
}

/// `b` i.i.d. uniform draws with replacement from `buffer`.
pub fn bootstrap_resample(
    buffer: &[Interaction],
    b: usize,
    rng: &mut RngStream,
) -> Result<Vec<Interaction>> {
    if buffer.is_empty() {
        return Err(Error::invalid_input("resample from empty buffer"));
    }
    if b == 0 {
        return Err(Error::invalid_input("resample size must be >= 1"));
    }
    Ok((0..b).map(|_| buffer[rng.below(buffer.len())].clone()).collect())
}

/// Uniformly shuffle `buffer` and split it into `n` disjoint batches whose
/// sizes differ by at most one (the first `len % n` batches get the extra
/// element).
pub fn shuffle_split(
    buffer: &[Interaction],
    n: usize,
    rng: &mut RngStream,
) -> Result<Vec<Vec<Interaction>>> {
    if n == 0 {
        return Err(Error::invalid_input("batch count must be >= 1"));
    }
    if buffer.len() < n {
        return Err(Error::invalid_input(format!(
            "cannot split {} samples into {n} batches",
            buffer.len()
        )));
    }
    let mut order: Vec<usize> = (0..buffer.len()).collect();
    rng.shuffle(&mut order);
    let base = buffer.len() / n;
    let extra = buffer.len() % n;
    let mut batches = Vec::with_capacity(n);
    let mut pos = 0usize;
    for i in 0..n {
        let size = base + usize::from(i < extra);
        let batch = order[pos..pos + size]
            .iter()
            .map(|&idx| buffer[idx].clone())
            .collect();
        pos += size;
        batches.push(batch);
    }
    Ok(batches)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn layout() -> FieldLayout {
        FieldLayout::new(vec![4, 3, 3], 0).unwrap()
    }

    fn x(codes: Vec<u32>) -> FeatureVector {
        FeatureVector::new(codes)
    }

    fn it(codes: Vec<u32>, reward: u8) -> Interaction {
        Interaction::new(x(codes), reward, 0).unwrap()
    }

    #[test]
    fn counts_accumulate() {
        let mut s = GuidanceState::new(&layout(), 1.0, DensityKind::ActionCount).unwrap();
        s.update_counts(&x(vec![2, 1, 0]));
        assert_eq!(s.action_count(2), 1);
        for _ in 0..4 {
            s.update_counts(&x(vec![2, 1, 0]));
        }
        assert_eq!(s.action_count(2), 5);
        assert_eq!(s.observed(), 5);
        assert_eq!(s.action_count(0), 0);
    }

    #[test]
    fn action_count_density() {
        let mut s = GuidanceState::new(&layout(), 1.0, DensityKind::ActionCount).unwrap();
        for _ in 0..4 {
            s.update_counts(&x(vec![1, 0, 0]));
        }
        assert_eq!(s.density(&x(vec![1, 2, 2])), 4.0);
        assert_eq!(s.density(&x(vec![0, 0, 0])), 0.0);
    }

    #[test]
    fn harmonic_density_arithmetic() {
        // J = 2 layout, counts {3, 6} -> (1/3 + 1/6)^-1 = 2.
        let two_fields = FieldLayout::new(vec![2, 2], 0).unwrap();
        let mut s = GuidanceState::new(&two_fields, 1.0, DensityKind::Harmonic).unwrap();
        for i in 0..6u64 {
            // Field 0 value 0 appears 3 times, field 1 value 0 all 6 times.
            let f0 = if i < 3 { 0 } else { 1 };
            s.update_counts(&x(vec![f0, 0]));
        }
        assert!((s.density(&x(vec![0, 0])) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn harmonic_density_all_ones_is_third() {
        let mut s = GuidanceState::new(&layout(), 1.0, DensityKind::Harmonic).unwrap();
        s.update_counts(&x(vec![0, 0, 0]));
        let rho = s.density(&x(vec![0, 0, 0]));
        assert!((rho - 1.0 / 3.0).abs() < 1e-12);
        // Below 1: the guidance cap absorbs it.
        assert_eq!(s.guidance_value(&x(vec![0, 0, 0])), 1.0);
    }

    #[test]
    fn guidance_values() {
        let mut s = GuidanceState::new(&layout(), 1.0, DensityKind::ActionCount).unwrap();
        for _ in 0..4 {
            s.update_counts(&x(vec![1, 0, 0]));
        }
        assert_eq!(s.guidance_value(&x(vec![1, 0, 0])), 0.25);
        // Unseen action: cap engaged.
        assert_eq!(s.guidance_value(&x(vec![3, 0, 0])), 1.0);

        let mut s1 = GuidanceState::new(&layout(), 1.0, DensityKind::ActionCount).unwrap();
        s1.update_counts(&x(vec![1, 0, 0]));
        // rho = 1 = alpha: exactly at the cap boundary.
        assert_eq!(s1.guidance_value(&x(vec![1, 0, 0])), 1.0);
    }

    #[test]
    fn alpha_zero_disables_guidance() {
        let mut s = GuidanceState::new(&layout(), 0.0, DensityKind::ActionCount).unwrap();
        s.update_counts(&x(vec![1, 0, 0]));
        assert_eq!(s.guidance_value(&x(vec![1, 0, 0])), 0.0);
        assert_eq!(s.guidance_value(&x(vec![3, 0, 0])), 0.0);
        let batch = vec![it(vec![1, 0, 0], 1)];
        let mut rng = RngStream::from_seed(1);
        assert_eq!(augment_with_fakes(&batch, &s, &mut rng), batch);
    }

    #[test]
    fn negative_alpha_rejected() {
        assert!(GuidanceState::new(&layout(), -1.0, DensityKind::Harmonic).is_err());
    }

    #[test]
    fn forced_augmentation_adds_both_fakes() {
        // Unseen input: g = 1, both coins forced.
        let s = GuidanceState::new(&layout(), 1.0, DensityKind::ActionCount).unwrap();
        let batch = vec![it(vec![2, 1, 1], 1)];
        let mut rng = RngStream::from_seed(3);
        let out = augment_with_fakes(&batch, &s, &mut rng);
        assert_eq!(out.len(), 3);
        assert_eq!(out[0], batch[0]);
        assert_eq!(out[1].reward, 1);
        assert_eq!(out[2].reward, 0);
        assert_eq!(out[1].features, batch[0].features);
        assert_eq!(out[2].features, batch[0].features);
    }

    #[test]
    fn augmentation_rate_matches_guidance() {
        // g = 0.5: expected output size on a one-sample batch is 2.0.
        let mut s = GuidanceState::new(&layout(), 2.0, DensityKind::ActionCount).unwrap();
        for _ in 0..4 {
            s.update_counts(&x(vec![0, 0, 0]));
        }
        assert_eq!(s.guidance_value(&x(vec![0, 1, 1])), 0.5);
        let batch = vec![it(vec![0, 1, 1], 0)];
        let mut rng = RngStream::from_seed(4);
        let trials = 100_000usize;
        let mut total = 0usize;
        for _ in 0..trials {
            total += augment_with_fakes(&batch, &s, &mut rng).len();
        }
        let mean = total as f64 / trials as f64;
        // Size is 1 + X + Y with X, Y ~ Bernoulli(1/2): variance 0.5.
        let se = (0.5f64 / trials as f64).sqrt();
        assert!((mean - 2.0).abs() < 3.0 * se, "mean {mean}");
    }

    #[test]
    fn resample_single_sample_buffer() {
        let buffer = vec![it(vec![1, 1, 1], 1)];
        let mut rng = RngStream::from_seed(5);
        let out = bootstrap_resample(&buffer, 7, &mut rng).unwrap();
        assert_eq!(out.len(), 7);
        assert!(out.iter().all(|s| *s == buffer[0]));
        assert!(bootstrap_resample(&[], 1, &mut rng).is_err());
    }

    #[test]
    fn resample_distinct_fraction() {
        // b = t = 1000: expected distinct fraction is 1 - (1 - 1/t)^t.
        let t = 1000usize;
        let buffer: Vec<Interaction> = (0..t)
            .map(|i| {
                let mut s = it(vec![0, 0, 0], (i % 2) as u8);
                s.step = i as u64;
                s
            })
            .collect();
        let mut rng = RngStream::from_seed(6);
        let expected = 1.0 - (1.0 - 1.0 / t as f64).powi(t as i32);
        let resamples = 1000usize;
        let mut frac_sum = 0.0;
        let mut seen = vec![false; t];
        for _ in 0..resamples {
            seen.iter_mut().for_each(|s| *s = false);
            let mut distinct = 0usize;
            for s in bootstrap_resample(&buffer, t, &mut rng).unwrap() {
                let idx = s.step as usize;
                if !seen[idx] {
                    seen[idx] = true;
                    distinct += 1;
                }
            }
            frac_sum += distinct as f64 / t as f64;
        }
        let mean = frac_sum / resamples as f64;
        assert!((mean - expected).abs() < 0.01, "mean {mean} vs {expected}");
    }

    #[test]
    fn resample_positionwise_uniform() {
        let buffer: Vec<Interaction> = (0..4).map(|i| it(vec![i, 0, 0], 0)).collect();
        let mut rng = RngStream::from_seed(7);
        let draws = 100_000usize;
        let mut counts = [0u64; 4];
        for _ in 0..draws / 4 {
            for s in bootstrap_resample(&buffer, 4, &mut rng).unwrap() {
                counts[s.features.codes[0] as usize] += 1;
            }
        }
        let total: u64 = counts.iter().sum();
        let p = 0.25;
        let se = (p * (1.0 - p) / total as f64).sqrt();
        for &c in &counts {
            let freq = c as f64 / total as f64;
            assert!((freq - p).abs() < 3.0 * se, "freq {freq}");
        }
    }

    #[test]
    fn shuffle_split_divisible() {
        let buffer: Vec<Interaction> = (0..512)
            .map(|i| {
                let mut s = it(vec![(i % 4) as u32, 0, 0], 0);
                s.step = i as u64;
                s
            })
            .collect();
        let mut rng = RngStream::from_seed(8);
        let batches = shuffle_split(&buffer, 4, &mut rng).unwrap();
        assert_eq!(batches.len(), 4);
        assert!(batches.iter().all(|b| b.len() == 128));
        let mut steps: Vec<u64> = batches.iter().flatten().map(|s| s.step).collect();
        steps.sort_unstable();
        assert_eq!(steps, (0..512).collect::<Vec<u64>>());
    }

    #[test]
    fn shuffle_split_remainder_sizes() {
        let buffer: Vec<Interaction> = (0..10).map(|_| it(vec![0, 0, 0], 0)).collect();
        let mut rng = RngStream::from_seed(9);
        let batches = shuffle_split(&buffer, 3, &mut rng).unwrap();
        let sizes: Vec<usize> = batches.iter().map(|b| b.len()).collect();
        assert_eq!(sizes, vec![4, 3, 3]);
    }

    #[test]
    fn shuffle_split_single_batch_is_permutation() {
        let buffer: Vec<Interaction> = (0..20)
            .map(|i| {
                let mut s = it(vec![0, 0, 0], 0);
                s.step = i;
                s
            })
            .collect();
        let mut rng = RngStream::from_seed(10);
        let batches = shuffle_split(&buffer, 1, &mut rng).unwrap();
        assert_eq!(batches.len(), 1);
        let mut steps: Vec<u64> = batches[0].iter().map(|s| s.step).collect();
        steps.sort_unstable();
        assert_eq!(steps, (0..20).collect::<Vec<u64>>());
    }

    #[test]
    fn shuffle_split_too_small_rejected() {
        let buffer: Vec<Interaction> = (0..2).map(|_| it(vec![0, 0, 0], 0)).collect();
        let mut rng = RngStream::from_seed(11);
        assert!(shuffle_split(&buffer, 3, &mut rng).is_err());
    }

    proptest! {
        // More data never increases exploration pressure, for either
        // density kind.
        #[test]
        fn guidance_nonincreasing_in_counts(
            updates in proptest::collection::vec((0u32..4, 0u32..3, 0u32..3), 1..200),
            kind in prop_oneof![Just(DensityKind::ActionCount), Just(DensityKind::Harmonic)],
        ) {
            let layout = FieldLayout::new(vec![4, 3, 3], 0).unwrap();
            let mut s = GuidanceState::new(&layout, 1.0, kind).unwrap();
            let probe = FeatureVector::new(vec![1, 1, 1]);
            let mut last = s.guidance_value(&probe);
            prop_assert!(last > 0.0 && last <= 1.0);
            for (a, b, c) in updates {
                s.update_counts(&FeatureVector::new(vec![a, b, c]));
                let now = s.guidance_value(&probe);
                prop_assert!(now > 0.0 && now <= 1.0);
                prop_assert!(now <= last + 1e-12);
                last = now;
            }
        }
    }

    #[test]
    fn single_arm_pipeline_matches_oracle() {
        // Bridge to the closed-form analysis: one action pulled n times with
        // n_s successes, resample n-out-of-n, augment with g = alpha/n, and
        // average rewards. The pipeline must reproduce the brute-force
        // estimator's distribution; both share a small finite-size bias
        // relative to the Beta-posterior mean (see oracles module).
        use crate::oracles::{guideboot_estimator_stats, mc_guideboot_estimator};

        let (n, n_s, alpha) = (50usize, 5usize, 1.0f64);
        let single = FieldLayout::new(vec![1], 0).unwrap();
        let buffer: Vec<Interaction> = (0..n)
            .map(|i| it_single(u8::from(i < n_s), i as u64))
            .collect();
        let mut state = GuidanceState::new(&single, alpha, DensityKind::ActionCount).unwrap();
        for s in &buffer {
            state.update_counts(&s.features);
        }
        assert_eq!(state.guidance_value(&buffer[0].features), alpha / n as f64);

        let mut rng = RngStream::from_seed(12);
        let trials = 200_000usize;
        let mut sum = 0.0;
        for _ in 0..trials {
            let resampled = bootstrap_resample(&buffer, n, &mut rng).unwrap();
            let full = augment_with_fakes(&resampled, &state, &mut rng);
            let mean: f64 = full.iter().map(|s| s.reward_f64()).sum::<f64>() / full.len() as f64;
            sum += mean;
        }
        let pipeline_mean = sum / trials as f64;

        let mut oracle_rng = RngStream::from_seed(13);
        let oracle = mc_guideboot_estimator(alpha, n, n_s, trials, &mut oracle_rng).unwrap();
        let closed = guideboot_estimator_stats(alpha, n as f64, n_s as f64).unwrap();
        let se = (closed.variance / trials as f64).sqrt();
        assert!(
            (pipeline_mean - oracle.mean).abs() < 5.0 * se,
            "pipeline {pipeline_mean} vs oracle {}",
            oracle.mean
        );
        // Close to the Beta-posterior mean up to the documented O(1/n) bias
        // of the post-resampling construction.
        assert!((pipeline_mean - closed.mean).abs() < 1e-3);
    }

    fn it_single(reward: u8, step: u64) -> Interaction {
        Interaction::new(FeatureVector::new(vec![0]), reward, step).unwrap()
    }
}
