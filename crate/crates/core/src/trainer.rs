//! Training loops.
//!
//! Every strategy runs the same full-batch loop; they differ only in which
//! training nodes contribute to the gradient at each epoch:
//!
//! * `Plain`: all of them.
//! * `AbsoluteLossCurriculum`: the `k` nodes with the lowest current loss.
//! * `LossDecreaseCurriculum`: `k` nodes sampled without replacement from
//!   `softmax(previous_loss − current_loss)`.
//!
//! `k` follows the pacing schedule and reaches the whole training set at the
//! saturation epoch `T`. After `T`, training continues on all nodes until
//! validation accuracy stops improving for `patience` epochs.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use ndarray::{Array2, Axis};

use crate::data::{aggregate_features, Dataset, Split};
use crate::difficulty::{
    easiest_by_absolute_loss, loss_decrease, to_probability, LossRecord, SelectionDistribution,
};
use crate::error::{LdtsError, Result};
use crate::nn::{forward, init_params, masked_backward, per_sample_loss, sgd_step, ModelParams};
use crate::pacing::{sample_count, PacingConfig, PacingKind};
use crate::sampler::{sample_without_replacement, RngState, SampleSet, INIT_STREAM};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    Plain,
    AbsoluteLossCurriculum,
    LossDecreaseCurriculum,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [
        Strategy::Plain,
        Strategy::AbsoluteLossCurriculum,
        Strategy::LossDecreaseCurriculum,
    ];

    /// Short name used on the command line and in result files.
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Plain => "plain",
            Strategy::AbsoluteLossCurriculum => "clgnn",
            Strategy::LossDecreaseCurriculum => "ldts",
        }
    }

    pub fn is_curriculum(self) -> bool {
        self != Strategy::Plain
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = LdtsError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plain" => Ok(Strategy::Plain),
            "clgnn" | "absolute" => Ok(Strategy::AbsoluteLossCurriculum),
            "ldts" => Ok(Strategy::LossDecreaseCurriculum),
            other => Err(LdtsError::Config(format!("unknown strategy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub strategy: Strategy,
    pub pacing: PacingConfig,
    pub lr: f64,
    pub max_epochs: usize,
    /// Epochs without validation improvement (counted after `T`) before stopping.
    pub patience: usize,
    pub hidden_dim: usize,
    pub seed: u64,
}

impl TrainConfig {
    /// Defaults: linear pacing with `λ₀ = 0.25`, `T = 100`.
    pub fn new(strategy: Strategy, seed: u64) -> Self {
        TrainConfig {
            strategy,
            pacing: PacingConfig::new(PacingKind::Linear, 0.25, 100).expect("valid default"),
            lr: 0.2,
            max_epochs: 400,
            patience: 50,
            hidden_dim: 32,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(LdtsError::Config(format!(
                "learning rate must be positive, got {}",
                self.lr
            )));
        }
        if self.patience < 1 {
            return Err(LdtsError::Config("patience must be at least 1".into()));
        }
        if self.max_epochs < 1 {
            return Err(LdtsError::Config("max_epochs must be at least 1".into()));
        }
        if self.strategy.is_curriculum() && self.max_epochs < self.pacing.saturation_epoch() {
            return Err(LdtsError::Config(format!(
                "max_epochs ({}) must be at least T ({}) for curriculum strategies",
                self.max_epochs,
                self.pacing.saturation_epoch()
            )));
        }
        if self.hidden_dim < 1 {
            return Err(LdtsError::Config(
                "hidden dimension must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Per-epoch telemetry.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochReport {
    pub epoch: usize,
    /// Mean loss over the nodes that were backpropagated.
    pub sampled_loss: f64,
    /// Mean loss over the whole training split, before the update.
    pub train_loss: f64,
    pub val_accuracy: f64,
    pub test_accuracy: f64,
    pub sampled_count: usize,
    /// Share of backpropagated nodes whose label is clean, when flags exist.
    pub clean_sample_fraction: Option<f64>,
    /// Mean selection probability of clean / noisy training nodes (loss-decrease strategy only).
    pub clean_probability: Option<f64>,
    pub noisy_probability: Option<f64>,
}

pub const TELEMETRY_HEADER: &str = "epoch,sampled_loss,train_loss,val_accuracy,test_accuracy,sampled_count,clean_sample_fraction,clean_probability,noisy_probability";

impl EpochReport {
    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.epoch,
            self.sampled_loss,
            self.train_loss,
            self.val_accuracy,
            self.test_accuracy,
            self.sampled_count,
            opt(self.clean_sample_fraction),
            opt(self.clean_probability),
            opt(self.noisy_probability),
        )
    }
}

pub fn write_telemetry(path: &Path, reports: &[EpochReport]) -> Result<()> {
    let mut out = String::with_capacity(64 * (reports.len() + 1));
    out.push_str(TELEMETRY_HEADER);
    out.push('\n');
    for r in reports {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(out.as_bytes()))
        .map_err(|e| LdtsError::io(path, e))
}

/// Rows of one split, with aggregated features.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitData {
    pub features: Array2<f64>,
    pub labels: Vec<usize>,
    pub noisy: Option<Vec<bool>>,
}

impl SplitData {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// A dataset with features aggregated and rows grouped by split.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedData {
    pub class_count: usize,
    pub train: SplitData,
    pub val: SplitData,
    pub test: SplitData,
}

impl PreparedData {
    pub fn from_dataset(ds: &Dataset) -> Result<Self> {
        ds.validate().map_err(LdtsError::Config)?;
        let x = aggregate_features(ds);
        let take = |which: Split| {
            let idx = ds.split_indices(which);
            SplitData {
                features: x.select(Axis(0), &idx),
                labels: idx.iter().map(|&i| ds.labels[i]).collect(),
                noisy: ds
                    .noisy
                    .as_ref()
                    .map(|f| idx.iter().map(|&i| f[i]).collect()),
            }
        };
        let data = PreparedData {
            class_count: ds.class_count,
            train: take(Split::Train),
            val: take(Split::Val),
            test: take(Split::Test),
        };
        for (name, split) in [
            ("train", &data.train),
            ("val", &data.val),
            ("test", &data.test),
        ] {
            if split.is_empty() {
                return Err(LdtsError::Config(format!("{name} split is empty")));
            }
        }
        Ok(data)
    }

    pub fn split(&self, which: Split) -> &SplitData {
        match which {
            Split::Train => &self.train,
            Split::Val => &self.val,
            Split::Test => &self.test,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.train.features.ncols()
    }
}

/// Fraction of predictions equal to the labels.
pub fn accuracy(predictions: &[usize], labels: &[usize]) -> Result<f64> {
    if labels.is_empty() {
        return Err(LdtsError::Argument("cannot evaluate an empty split".into()));
    }
    if predictions.len() != labels.len() {
        return Err(LdtsError::Shape(format!(
            "{} predictions for {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    let correct = predictions
        .iter()
        .zip(labels)
        .filter(|(p, y)| p == y)
        .count();
    Ok(correct as f64 / labels.len() as f64)
}

/// Multi-class accuracy of `params` on one split (arg-max ties go to the lowest class).
pub fn evaluate(params: &ModelParams, data: &PreparedData, which: Split) -> Result<f64> {
    let split = data.split(which);
    if split.is_empty() {
        return Err(LdtsError::Argument(format!("{which} split is empty")));
    }
    let logits = forward(params, split.features.view())?;
    accuracy(&logits.predictions(), &split.labels)
}

/// Everything the loop computed during one epoch, handed to observers.
#[derive(Debug)]
pub struct EpochTrace<'a> {
    pub epoch: usize,
    /// Parameters the epoch started from.
    pub params: &'a ModelParams,
    pub updated: &'a ModelParams,
    /// Per-node training losses under `params`.
    pub losses: &'a [f64],
    pub decrease: Option<&'a [f64]>,
    pub distribution: Option<&'a SelectionDistribution>,
    pub sample: &'a SampleSet,
    pub report: &'a EpochReport,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters after the epoch with the best validation accuracy.
    pub params: ModelParams,
    pub reports: Vec<EpochReport>,
    pub best_epoch: usize,
}

impl TrainOutcome {
    pub fn best_report(&self) -> &EpochReport {
        &self.reports[self.best_epoch]
    }
}

pub fn train(cfg: &TrainConfig, data: &PreparedData) -> Result<TrainOutcome> {
    train_with_observer(cfg, data, |_| {})
}

pub fn train_with_observer<F>(
    cfg: &TrainConfig,
    data: &PreparedData,
    mut observer: F,
) -> Result<TrainOutcome>
where
    F: FnMut(&EpochTrace<'_>),
{
    cfg.validate()?;
    let train = &data.train;
    let n = train.len();
    if n == 0 {
        return Err(LdtsError::EmptyDataset);
    }
    let saturation = cfg.pacing.saturation_epoch();
    let mut params = init_params(
        data.input_dim(),
        cfg.hidden_dim,
        data.class_count,
        &mut RngState::for_stream(cfg.seed, INIT_STREAM),
    )?;
    let mut previous = vec![0.0; n];
    let mut reports: Vec<EpochReport> = Vec::new();
    let mut best: Option<(f64, usize, ModelParams)> = None;
    let mut stale = 0usize;

    let diverged = |epoch: usize, reports: &[EpochReport]| LdtsError::Diverged {
        epoch,
        last_report: reports.last().cloned().map(Box::new),
    };

    for epoch in 0..cfg.max_epochs {
        let logits = forward(&params, train.features.view())?;
        let losses = per_sample_loss(&logits, &train.labels)?;
        if losses.iter().any(|l| !l.is_finite()) {
            return Err(diverged(epoch, &reports));
        }

        let fraction = match cfg.strategy {
            Strategy::Plain => 1.0,
            _ => cfg.pacing.fraction(epoch),
        };
        let k = sample_count(n, fraction)?;
        let mut decrease = None;
        let mut distribution = None;
        let sample = match cfg.strategy {
            Strategy::Plain => SampleSet::full(n)?,
            Strategy::AbsoluteLossCurriculum => easiest_by_absolute_loss(&losses, k)?,
            Strategy::LossDecreaseCurriculum => {
                let record = LossRecord::new(std::mem::take(&mut previous), losses.clone(), epoch)?;
                let d = loss_decrease(&record);
                let p = to_probability(&d)?;
                let s =
                    sample_without_replacement(&p, k, &mut RngState::for_epoch(cfg.seed, epoch))?;
                decrease = Some(d);
                distribution = Some(p);
                s
            }
        };

        let grads = masked_backward(&params, train.features.view(), &train.labels, &sample)?;
        let updated = match sgd_step(&params, &grads, cfg.lr) {
            Ok(p) => p,
            Err(LdtsError::Numeric(_)) => return Err(diverged(epoch, &reports)),
            Err(e) => return Err(e),
        };

        let sampled_loss =
            sample.indices().iter().map(|&i| losses[i]).sum::<f64>() / sample.len() as f64;
        let train_loss = losses.iter().sum::<f64>() / n as f64;
        let (clean_sample_fraction, clean_probability, noisy_probability) = match &train.noisy {
            Some(flags) => {
                let clean = sample.indices().iter().filter(|&&i| !flags[i]).count();
                let (cp, np) = distribution
                    .as_ref()
                    .map(|p| mean_probability_by_flag(p.probabilities(), flags))
                    .unwrap_or((None, None));
                (Some(clean as f64 / sample.len() as f64), cp, np)
            }
            None => (None, None, None),
        };
        let report = EpochReport {
            epoch,
            sampled_loss,
            train_loss,
            val_accuracy: evaluate(&updated, data, Split::Val)?,
            test_accuracy: evaluate(&updated, data, Split::Test)?,
            sampled_count: sample.len(),
            clean_sample_fraction,
            clean_probability,
            noisy_probability,
        };
        observer(&EpochTrace {
            epoch,
            params: &params,
            updated: &updated,
            losses: &losses,
            decrease: decrease.as_deref(),
            distribution: distribution.as_ref(),
            sample: &sample,
            report: &report,
        });

        let improved = best
            .as_ref()
            .is_none_or(|(v, _, _)| report.val_accuracy > *v);
        if improved {
            best = Some((report.val_accuracy, epoch, updated.clone()));
            stale = 0;
        } else if epoch > saturation {
            stale += 1;
        }
        reports.push(report);
        previous = losses;
        params = updated;

        if epoch > saturation && stale >= cfg.patience {
            break;
        }
    }

    let (_, best_epoch, best_params) = best.expect("at least one epoch ran");
    Ok(TrainOutcome {
        params: best_params,
        reports,
        best_epoch,
    })
}

fn mean_probability_by_flag(p: &[f64], noisy: &[bool]) -> (Option<f64>, Option<f64>) {
    let (mut clean, mut n_clean, mut dirty, mut n_dirty) = (0.0, 0usize, 0.0, 0usize);
    for (&pi, &flag) in p.iter().zip(noisy) {
        if flag {
            dirty += pi;
            n_dirty += 1;
        } else {
            clean += pi;
            n_clean += 1;
        }
    }
    let mean = |s: f64, c: usize| (c > 0).then(|| s / c as f64);
    (mean(clean, n_clean), mean(dirty, n_dirty))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic, SynthConfig};

    fn small_data(noise: f64, seed: u64) -> PreparedData {
        let ds = generate_synthetic(&SynthConfig {
            n_target: 300,
            noise_fraction: noise,
            seed,
            ..SynthConfig::default()
        })
        .unwrap();
        PreparedData::from_dataset(&ds).unwrap()
    }

    fn cfg(strategy: Strategy, lam: f64, t: usize, max_epochs: usize) -> TrainConfig {
        TrainConfig {
            pacing: PacingConfig::new(PacingKind::Linear, lam, t).unwrap(),
            max_epochs,
            ..TrainConfig::new(strategy, 3)
        }
    }

    #[test]
    fn k_schedule_follows_pacing() {
        let ds = generate_synthetic(&SynthConfig {
            n_target: 2000,
            train_fraction: 0.5,
            seed: 1,
            ..SynthConfig::default()
        })
        .unwrap();
        let data = PreparedData::from_dataset(&ds).unwrap();
        assert_eq!(data.train.len(), 1000);
        let c = TrainConfig {
            patience: 1,
            ..cfg(Strategy::LossDecreaseCurriculum, 0.25, 100, 101)
        };
        let out = train(&c, &data).unwrap();
        let k: Vec<usize> = out.reports.iter().map(|r| r.sampled_count).collect();
        assert_eq!((k[0], k[50], k[100]), (250, 625, 1000));
        assert!(k.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn stops_only_after_saturation() {
        let data = small_data(0.0, 2);
        let c = TrainConfig {
            patience: 1,
            ..cfg(Strategy::AbsoluteLossCurriculum, 0.5, 20, 500)
        };
        let out = train(&c, &data).unwrap();
        assert!(out.reports.len() > 21);
        assert!(out.reports.len() < 500);
        let best = out.best_report().val_accuracy;
        assert!(out.reports.iter().all(|r| r.val_accuracy <= best));
    }

    #[test]
    fn returns_best_validation_parameters() {
        let data = small_data(0.2, 4);
        let c = cfg(Strategy::LossDecreaseCurriculum, 0.3, 10, 60);
        let out = train(&c, &data).unwrap();
        let acc = evaluate(&out.params, &data, Split::Val).unwrap();
        assert_eq!(acc, out.best_report().val_accuracy);
        assert_eq!(
            evaluate(&out.params, &data, Split::Test).unwrap(),
            out.best_report().test_accuracy
        );
    }

    #[test]
    fn rejects_inconsistent_config() {
        let data = small_data(0.0, 5);
        let c = cfg(Strategy::LossDecreaseCurriculum, 0.3, 100, 50);
        assert!(matches!(train(&c, &data), Err(LdtsError::Config(_))));
        let c = TrainConfig {
            lr: -1.0,
            ..cfg(Strategy::Plain, 0.3, 10, 50)
        };
        assert!(matches!(train(&c, &data), Err(LdtsError::Config(_))));
    }

    #[test]
    fn divergence_reports_last_good_epoch() {
        let data = small_data(0.0, 6);
        let c = TrainConfig {
            lr: 1e6,
            ..cfg(Strategy::Plain, 1.0, 1, 200)
        };
        match train(&c, &data) {
            Err(LdtsError::Diverged { epoch, last_report }) => {
                assert!(epoch > 0);
                assert_eq!(last_report.unwrap().epoch, epoch - 1);
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy(&[0, 1, 2], &[0, 1, 2]).unwrap(), 1.0);
        assert_eq!(accuracy(&[0, 0, 0, 0], &[0, 1, 0, 1]).unwrap(), 0.5);
        assert!(accuracy(&[], &[]).is_err());
    }

    #[test]
    fn evaluate_matches_naive_recount() {
        let data = small_data(0.1, 8);
        let params =
            init_params(data.input_dim(), 7, data.class_count, &mut RngState::new(8)).unwrap();
        let acc = evaluate(&params, &data, Split::Test).unwrap();
        let x = &data.test.features;
        let mut correct = 0;
        for (i, &y) in data.test.labels.iter().enumerate() {
            let mut scores = vec![0.0; data.class_count];
            for (c, s) in scores.iter_mut().enumerate() {
                let mut o = params.b2[c];
                for j in 0..7 {
                    let mut z = params.b1[j];
                    for f in 0..x.ncols() {
                        z += params.w1[[j, f]] * x[[i, f]];
                    }
                    o += params.w2[[c, j]] * z.max(0.0);
                }
                *s = o;
            }
            let mut arg = 0;
            for c in 1..scores.len() {
                if scores[c] > scores[arg] {
                    arg = c;
                }
            }
            if arg == y {
                correct += 1;
            }
        }
        assert_eq!(acc, correct as f64 / data.test.len() as f64);
    }

    #[test]
    fn strategy_names_round_trip() {
        for s in Strategy::ALL {
            assert_eq!(s.as_str().parse::<Strategy>().unwrap(), s);
        }
        assert!("sgd".parse::<Strategy>().is_err());
    }
}
