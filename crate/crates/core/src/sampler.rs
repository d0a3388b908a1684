//! Weighted sampling of distinct node indices.
//!
//! Sampling uses the Gumbel-top-k trick: perturb each log-probability with an
//! independent standard Gumbel variate and keep the `k` largest keys. The
//! resulting subset has exactly the law of drawing `k` items one at a time
//! without replacement, each draw proportional to the remaining probabilities.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::difficulty::SelectionDistribution;
use crate::error::{LdtsError, Result};

/// Sorted, duplicate-free node indices in `[0, n)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SampleSet {
    indices: Vec<usize>,
}

impl SampleSet {
    /// Builds a set from arbitrary indices; they are sorted and must be
    /// distinct and `< n`.
    pub fn from_indices(mut indices: Vec<usize>, n: usize) -> Result<Self> {
        if indices.is_empty() {
            return Err(LdtsError::Argument("sample set must not be empty".into()));
        }
        indices.sort_unstable();
        if let Some(w) = indices.windows(2).find(|w| w[0] == w[1]) {
            return Err(LdtsError::Argument(format!("duplicate index {}", w[0])));
        }
        if let Some(&last) = indices.last() {
            if last >= n {
                return Err(LdtsError::Argument(format!(
                    "index {last} out of range for {n} nodes"
                )));
            }
        }
        Ok(SampleSet { indices })
    }

    /// Every index in `[0, n)`.
    pub fn full(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(LdtsError::EmptyDataset);
        }
        Ok(SampleSet {
            indices: (0..n).collect(),
        })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.indices.binary_search(&index).is_ok()
    }

    /// Membership mask of length `n`.
    pub fn mask(&self, n: usize) -> Vec<bool> {
        let mut mask = vec![false; n];
        for &i in &self.indices {
            mask[i] = true;
        }
        mask
    }
}

/// Stream used for parameter initialisation; epochs use their own index.
pub const INIT_STREAM: u64 = u64::MAX;

/// Seeded ChaCha8 generator.
///
/// A run is identified by a 64-bit seed; independent streams are selected by
/// a 64-bit stream id (the trainer uses the epoch index), so the draws at
/// epoch `t` do not depend on how many epochs ran before or after it.
#[derive(Debug, Clone)]
pub struct RngState {
    seed: u64,
    rng: ChaCha8Rng,
}

/// Serializable position of an [`RngState`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngSnapshot {
    pub seed: u64,
    pub stream: u64,
    pub word_pos: u128,
}

impl RngState {
    pub fn new(seed: u64) -> Self {
        RngState::for_stream(seed, 0)
    }

    pub fn for_stream(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        RngState { seed, rng }
    }

    /// Stream for the sampling draws of `epoch`.
    pub fn for_epoch(seed: u64, epoch: usize) -> Self {
        RngState::for_stream(seed, epoch as u64)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn snapshot(&self) -> RngSnapshot {
        RngSnapshot {
            seed: self.seed,
            stream: self.rng.get_stream(),
            word_pos: self.rng.get_word_pos(),
        }
    }

    pub fn restore(snapshot: RngSnapshot) -> Self {
        let mut state = RngState::for_stream(snapshot.seed, snapshot.stream);
        state.rng.set_word_pos(snapshot.word_pos);
        state
    }

    /// Uniform draw from the open interval `(0, 1)`.
    pub fn open_unit(&mut self) -> f64 {
        loop {
            let u: f64 = self.rng.random();
            if u > 0.0 {
                return u;
            }
        }
    }

    /// Standard Gumbel variate, `−ln(−ln U)`.
    pub fn gumbel(&mut self) -> f64 {
        -(-self.open_unit().ln()).ln()
    }
}

impl RngCore for RngState {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Draws `k` distinct indices, without replacement, proportionally to `dist`.
pub fn sample_without_replacement(
    dist: &SelectionDistribution,
    k: usize,
    rng: &mut RngState,
) -> Result<SampleSet> {
    let n = dist.len();
    if k < 1 || k > n {
        return Err(LdtsError::Argument(format!(
            "k must be in [1, {n}], got {k}"
        )));
    }
    if k == n {
        return SampleSet::full(n);
    }
    let keys: Vec<f64> = dist
        .log_probabilities()
        .iter()
        .map(|lp| lp + rng.gumbel())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    let by_key_desc = |a: &usize, b: &usize| keys[*b].total_cmp(&keys[*a]).then(a.cmp(b));
    order.select_nth_unstable_by(k - 1, by_key_desc);
    order.truncate(k);
    SampleSet::from_indices(order, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{any, prop, prop_assert, prop_assert_eq, proptest};
    use rand::RngCore;

    fn dist(p: &[f64]) -> SelectionDistribution {
        SelectionDistribution::from_probabilities(p.to_vec()).unwrap()
    }

    #[test]
    fn full_selection_when_k_equals_n() {
        let d = dist(&[0.1, 0.2, 0.3, 0.4]);
        let s = sample_without_replacement(&d, 4, &mut RngState::new(3)).unwrap();
        assert_eq!(s.indices(), &[0, 1, 2, 3]);
    }

    #[test]
    fn rejects_bad_k() {
        let d = dist(&[0.5, 0.5]);
        let mut rng = RngState::new(0);
        assert!(sample_without_replacement(&d, 0, &mut rng).is_err());
        assert!(sample_without_replacement(&d, 3, &mut rng).is_err());
    }

    #[test]
    fn same_seed_same_sample() {
        let d = dist(&[0.05, 0.15, 0.3, 0.1, 0.4]);
        let a = sample_without_replacement(&d, 2, &mut RngState::new(99)).unwrap();
        let b = sample_without_replacement(&d, 2, &mut RngState::new(99)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_draw_frequency() {
        let d = dist(&[0.2, 0.8]);
        let mut rng = RngState::new(2024);
        let draws = 100_000;
        let hits = (0..draws)
            .filter(|_| {
                sample_without_replacement(&d, 1, &mut rng)
                    .unwrap()
                    .indices()[0]
                    == 1
            })
            .count();
        let freq = hits as f64 / draws as f64;
        assert!((freq - 0.8).abs() < 0.01, "{freq}");
    }

    #[test]
    fn epoch_streams_are_independent_of_each_other() {
        let mut a = RngState::for_epoch(5, 3);
        let mut b = RngState::for_epoch(5, 4);
        let mut a2 = RngState::for_epoch(5, 3);
        let x = a.next_u64();
        assert_eq!(x, a2.next_u64());
        assert_ne!(x, b.next_u64());
    }

    #[test]
    fn snapshot_round_trip() {
        let mut rng = RngState::for_stream(11, 7);
        for _ in 0..13 {
            rng.next_u32();
        }
        let snap = rng.snapshot();
        let mut restored = RngState::restore(snap);
        assert_eq!(rng.next_u64(), restored.next_u64());
    }

    #[test]
    fn tiny_probabilities_are_still_reachable() {
        // the second entry underflows in linear space but not in log space
        let d = crate::difficulty::to_probability(&[0.0, -800.0, 0.0]).unwrap();
        let s = sample_without_replacement(&d, 2, &mut RngState::new(1)).unwrap();
        assert_eq!(s.indices(), &[0, 2]);
    }

    #[test]
    fn sample_set_validation() {
        assert!(SampleSet::from_indices(vec![], 3).is_err());
        assert!(SampleSet::from_indices(vec![1, 1], 3).is_err());
        assert!(SampleSet::from_indices(vec![3], 3).is_err());
        let s = SampleSet::from_indices(vec![2, 0], 3).unwrap();
        assert_eq!(s.indices(), &[0, 2]);
        assert_eq!(s.mask(3), vec![true, false, true]);
    }

    proptest! {
        #[test]
        fn output_is_k_distinct_valid_indices(
            weights in prop::collection::vec(0.01f64..1.0, 1..60),
            kf in 0.0f64..1.0,
            seed in any::<u64>(),
        ) {
            let total: f64 = weights.iter().sum();
            let p: Vec<f64> = weights.iter().map(|w| w / total).collect();
            let d = SelectionDistribution::from_probabilities(p).unwrap();
            let n = d.len();
            let k = ((kf * n as f64) as usize).clamp(1, n);
            let s = sample_without_replacement(&d, k, &mut RngState::new(seed)).unwrap();
            prop_assert_eq!(s.len(), k);
            prop_assert!(s.indices().windows(2).all(|w| w[0] < w[1]));
            prop_assert!(s.indices().iter().all(|&i| i < n));
        }
    }
}
