//! Per-node difficulty signals.
//!
//! The loss-decrease evaluator scores a node by how much its loss fell since
//! the previous epoch (`D = previous − current`). Large decreases mark easy
//! nodes. The decreases are turned into a sampling distribution with a
//! temperature-1 softmax. The absolute-loss evaluator ranks nodes by their
//! current loss alone and is kept as a baseline.

use crate::error::{LdtsError, Result};
use crate::sampler::SampleSet;

/// Previous and current per-node losses (nats) for one epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct LossRecord {
    previous: Vec<f64>,
    current: Vec<f64>,
    epoch: usize,
}

impl LossRecord {
    pub fn new(previous: Vec<f64>, current: Vec<f64>, epoch: usize) -> Result<Self> {
        if previous.len() != current.len() {
            return Err(LdtsError::Shape(format!(
                "previous has {} entries, current has {}",
                previous.len(),
                current.len()
            )));
        }
        if current.is_empty() {
            return Err(LdtsError::EmptyDataset);
        }
        check_finite(&previous, "previous loss")?;
        check_finite(&current, "current loss")?;
        Ok(LossRecord {
            previous,
            current,
            epoch,
        })
    }

    /// First-epoch record, with the previous losses initialised to zero.
    pub fn first(current: Vec<f64>) -> Result<Self> {
        LossRecord::new(vec![0.0; current.len()], current, 0)
    }

    /// Record for the next epoch: the current losses become the previous ones.
    pub fn advance(self, next: Vec<f64>) -> Result<Self> {
        LossRecord::new(self.current, next, self.epoch + 1)
    }

    pub fn previous(&self) -> &[f64] {
        &self.previous
    }

    pub fn current(&self) -> &[f64] {
        &self.current
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }

    pub fn len(&self) -> usize {
        self.current.len()
    }

    pub fn is_empty(&self) -> bool {
        self.current.is_empty()
    }
}

/// Per-node sampling probabilities, kept alongside their logarithms so that
/// samplers can work in log space.
///
/// Entries are strictly positive as long as no decrease lies more than about
/// 745 nats below the maximum. Past that, `exp` underflows and the
/// probability reads 0, but the log-probability stays exact.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionDistribution {
    probabilities: Vec<f64>,
    log_probabilities: Vec<f64>,
}

impl SelectionDistribution {
    /// Wraps an explicit probability vector. Entries must be strictly positive
    /// and sum to 1 within 1e-9.
    pub fn from_probabilities(probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.is_empty() {
            return Err(LdtsError::EmptyDataset);
        }
        check_finite(&probabilities, "probability")?;
        if let Some(i) = probabilities.iter().position(|&p| p <= 0.0) {
            return Err(LdtsError::Numeric(format!(
                "probability at index {i} is not strictly positive"
            )));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(LdtsError::Numeric(format!(
                "probabilities sum to {total}, expected 1"
            )));
        }
        let log_probabilities = probabilities.iter().map(|p| p.ln()).collect();
        Ok(SelectionDistribution {
            probabilities,
            log_probabilities,
        })
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn log_probabilities(&self) -> &[f64] {
        &self.log_probabilities
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }
}

/// `D[i] = previous[i] − current[i]`.
pub fn loss_decrease(record: &LossRecord) -> Vec<f64> {
    record
        .previous
        .iter()
        .zip(&record.current)
        .map(|(p, c)| p - c)
        .collect()
}

/// Softmax of the loss decreases, stabilised by subtracting the maximum.
pub fn to_probability(decrease: &[f64]) -> Result<SelectionDistribution> {
    if decrease.is_empty() {
        return Err(LdtsError::EmptyDataset);
    }
    check_finite(decrease, "loss decrease")?;
    let max = decrease.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let shifted: Vec<f64> = decrease.iter().map(|d| d - max).collect();
    let exps: Vec<f64> = shifted.iter().map(|s| s.exp()).collect();
    let total: f64 = exps.iter().sum();
    let log_total = total.ln();
    Ok(SelectionDistribution {
        probabilities: exps.iter().map(|e| e / total).collect(),
        log_probabilities: shifted.iter().map(|s| s - log_total).collect(),
    })
}

/// Indices of the `k` smallest losses. Ties go to the lower index.
pub fn easiest_by_absolute_loss(current: &[f64], k: usize) -> Result<SampleSet> {
    let n = current.len();
    if k < 1 || k > n {
        return Err(LdtsError::Argument(format!(
            "k must be in [1, {n}], got {k}"
        )));
    }
    check_finite(current, "loss")?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| current[a].total_cmp(&current[b]).then(a.cmp(&b)));
    order.truncate(k);
    SampleSet::from_indices(order, n)
}

pub(crate) fn check_finite(values: &[f64], what: &str) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(LdtsError::Numeric(format!(
            "{what} at index {i} is not finite ({})",
            values[i]
        ))),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn record(prev: &[f64], cur: &[f64]) -> LossRecord {
        LossRecord::new(prev.to_vec(), cur.to_vec(), 1).unwrap()
    }

    #[test]
    fn decrease_examples() {
        assert_eq!(
            loss_decrease(&record(&[0.0, 0.0], &[0.7, 0.3])),
            vec![-0.7, -0.3]
        );
        assert_eq!(
            loss_decrease(&record(&[1.0, 0.5], &[0.4, 0.5])),
            vec![0.6, 0.0]
        );
        assert_eq!(
            loss_decrease(&record(&[0.2, 0.9], &[0.2, 0.9])),
            vec![0.0, 0.0]
        );
    }

    #[test]
    fn record_errors() {
        assert!(matches!(
            LossRecord::new(vec![0.0], vec![1.0, 2.0], 0),
            Err(LdtsError::Shape(_))
        ));
        assert!(matches!(
            LossRecord::new(vec![0.0], vec![f64::NAN], 0),
            Err(LdtsError::Numeric(_))
        ));
    }

    #[test]
    fn advance_shifts_current_into_previous() {
        let r = LossRecord::first(vec![0.7, 0.3]).unwrap();
        let r = r.advance(vec![0.5, 0.4]).unwrap();
        assert_eq!(r.epoch(), 1);
        assert_eq!(r.previous(), &[0.7, 0.3]);
        let d = loss_decrease(&r);
        assert!((d[0] - 0.2).abs() < 1e-15 && (d[1] + 0.1).abs() < 1e-15);
    }

    #[test]
    fn softmax_examples() {
        let p = to_probability(&[0.0, 0.0, 0.0]).unwrap();
        for v in p.probabilities() {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
        let p = to_probability(&[5.0, 5.0, 5.0]).unwrap();
        for v in p.probabilities() {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
        let p = to_probability(&[std::f64::consts::LN_2, 0.0]).unwrap();
        assert!((p.probabilities()[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((p.probabilities()[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn softmax_rejects_non_finite() {
        assert!(to_probability(&[0.0, f64::INFINITY]).is_err());
        assert!(to_probability(&[]).is_err());
    }

    #[test]
    fn log_probabilities_survive_wide_ranges() {
        let p = to_probability(&[0.0, -2000.0]).unwrap();
        assert_eq!(p.probabilities()[1], 0.0);
        assert!((p.log_probabilities()[1] + 2000.0).abs() < 1e-9);
    }

    #[test]
    fn from_probabilities_validates() {
        assert!(SelectionDistribution::from_probabilities(vec![0.2, 0.8]).is_ok());
        assert!(SelectionDistribution::from_probabilities(vec![0.0, 1.0]).is_err());
        assert!(SelectionDistribution::from_probabilities(vec![0.3, 0.3]).is_err());
    }

    #[test]
    fn absolute_loss_examples() {
        let cur = [0.9, 0.1, 0.5];
        assert_eq!(easiest_by_absolute_loss(&cur, 1).unwrap().indices(), &[1]);
        assert_eq!(
            easiest_by_absolute_loss(&cur, 3).unwrap().indices(),
            &[0, 1, 2]
        );
        assert_eq!(
            easiest_by_absolute_loss(&[0.5, 0.5, 0.9], 1)
                .unwrap()
                .indices(),
            &[0]
        );
        assert!(easiest_by_absolute_loss(&cur, 0).is_err());
        assert!(easiest_by_absolute_loss(&cur, 4).is_err());
    }

    proptest! {
        #[test]
        fn zero_previous_negates_current(cur in prop::collection::vec(0.0f64..20.0, 1..50)) {
            let r = LossRecord::first(cur.clone()).unwrap();
            let d = loss_decrease(&r);
            for (a, b) in d.iter().zip(&cur) {
                prop_assert_eq!(*a, -*b);
            }
        }

        #[test]
        fn absolute_loss_selection_is_shift_invariant(
            cur in prop::collection::vec((0u32..5000).prop_map(|v| v as f64 / 1024.0), 1..40),
            shift in (1u32..10240).prop_map(|v| v as f64 / 1024.0),
            kf in 0.0f64..1.0,
        ) {
            let n = cur.len();
            let k = ((kf * n as f64) as usize).clamp(1, n);
            let a = easiest_by_absolute_loss(&cur, k).unwrap();
            // dyadic values, so the shift is exact
            let shifted: Vec<f64> = cur.iter().map(|c| c + shift).collect();
            let b = easiest_by_absolute_loss(&shifted, k).unwrap();
            prop_assert_eq!(a.indices(), b.indices());
            let mut rest: Vec<usize> = (0..n).filter(|i| !a.contains(*i)).collect();
            rest.extend_from_slice(a.indices());
            rest.sort_unstable();
            prop_assert_eq!(rest, (0..n).collect::<Vec<_>>());
        }
    }
}
