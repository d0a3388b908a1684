//! Training-schedule (pacing) functions.
//!
//! A pacing function maps an epoch index `t` to the fraction `λ_t ∈ (0, 1]` of
//! the training set that is used at that epoch. It starts at `λ₀` and first
//! reaches 1 at the saturation epoch `T`:
//!
//! | kind      | `λ_t` for `t < T`                      |
//! |-----------|----------------------------------------|
//! | linear    | `λ₀ + (1 − λ₀)·t/T`                    |
//! | root      | `sqrt(λ₀² + (1 − λ₀²)·t/T)`            |
//! | geometric | `2^(log2 λ₀ − log2 λ₀ · t/T)`          |
//!
//! every value is clamped by `min(1, ·)`.

use std::fmt;
use std::str::FromStr;

use crate::error::{LdtsError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PacingKind {
    Linear,
    Root,
    Geometric,
}

impl PacingKind {
    pub const ALL: [PacingKind; 3] = [PacingKind::Linear, PacingKind::Root, PacingKind::Geometric];

    pub fn as_str(self) -> &'static str {
        match self {
            PacingKind::Linear => "linear",
            PacingKind::Root => "root",
            PacingKind::Geometric => "geom",
        }
    }
}

impl fmt::Display for PacingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PacingKind {
    type Err = LdtsError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(PacingKind::Linear),
            "root" => Ok(PacingKind::Root),
            "geom" | "geometric" => Ok(PacingKind::Geometric),
            other => Err(LdtsError::Config(format!("unknown pacing kind `{other}`"))),
        }
    }
}

/// Validated schedule parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacingConfig {
    lambda0: f64,
    saturation_epoch: usize,
    kind: PacingKind,
}

impl PacingConfig {
    /// `lambda0` must lie in `(0, 1]` and `saturation_epoch` must be at least 1.
    pub fn new(kind: PacingKind, lambda0: f64, saturation_epoch: usize) -> Result<Self> {
        if !(lambda0 > 0.0 && lambda0 <= 1.0) {
            return Err(LdtsError::Config(format!(
                "lambda0 must be in (0, 1], got {lambda0}"
            )));
        }
        if saturation_epoch < 1 {
            return Err(LdtsError::Config("T must be at least 1".into()));
        }
        Ok(PacingConfig {
            lambda0,
            saturation_epoch,
            kind,
        })
    }

    pub fn lambda0(&self) -> f64 {
        self.lambda0
    }

    /// Epoch `T` at which the schedule first reaches 1.
    pub fn saturation_epoch(&self) -> usize {
        self.saturation_epoch
    }

    pub fn kind(&self) -> PacingKind {
        self.kind
    }

    pub fn fraction(&self, epoch: usize) -> f64 {
        pacing_fraction(self, epoch)
    }
}

/// Fraction of the training set used at `epoch`.
///
/// Exactly `λ₀` at epoch 0 and exactly 1 from epoch `T` on.
pub fn pacing_fraction(cfg: &PacingConfig, epoch: usize) -> f64 {
    if epoch == 0 {
        return cfg.lambda0;
    }
    if epoch >= cfg.saturation_epoch {
        return 1.0;
    }
    let lam = cfg.lambda0;
    let progress = epoch as f64 / cfg.saturation_epoch as f64;
    let raw = match cfg.kind {
        PacingKind::Linear => lam + (1.0 - lam) * progress,
        PacingKind::Root => (lam * lam + (1.0 - lam * lam) * progress).sqrt(),
        PacingKind::Geometric => {
            let l = lam.log2();
            (l - l * progress).exp2()
        }
    };
    raw.min(1.0)
}

/// Number of nodes to train on: `floor(n · fraction)` clamped to `[1, n]`.
///
/// A product within floating-point rounding of an integer is taken to be that
/// integer, so decimal fractions such as `10 × 0.7` give the decimal answer.
pub fn sample_count(n: usize, fraction: f64) -> Result<usize> {
    if n == 0 {
        return Err(LdtsError::EmptyDataset);
    }
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(LdtsError::Argument(format!(
            "fraction must be in (0, 1], got {fraction}"
        )));
    }
    let product = n as f64 * fraction;
    let nearest = product.round();
    let k = if (product - nearest).abs() <= 2.0 * f64::EPSILON * product {
        nearest
    } else {
        product.floor()
    };
    Ok((k as usize).clamp(1, n))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(kind: PacingKind, lam: f64, t: usize) -> PacingConfig {
        PacingConfig::new(kind, lam, t).unwrap()
    }

    #[test]
    fn boundary_values() {
        for kind in PacingKind::ALL {
            let c = cfg(kind, 0.2, 100);
            assert_eq!(pacing_fraction(&c, 0), 0.2);
            assert_eq!(pacing_fraction(&c, 100), 1.0);
            assert_eq!(pacing_fraction(&c, 1000), 1.0);
        }
    }

    #[test]
    #[allow(clippy::excessive_precision)]
    fn root_midpoint() {
        // sqrt(0.04 + 0.96 * 0.5) = sqrt(0.52), evaluated with 40-digit arithmetic
        let expected = 0.721_110_255_092_797_858_6_f64;
        let got = pacing_fraction(&cfg(PacingKind::Root, 0.2, 100), 50);
        assert!((got - expected).abs() < 1e-15, "{got}");
    }

    #[test]
    fn geometric_midpoint() {
        let got = pacing_fraction(&cfg(PacingKind::Geometric, 0.25, 100), 50);
        assert!((got - 0.5).abs() < 1e-15, "{got}");
    }

    #[test]
    fn lambda_one_is_constant() {
        for kind in PacingKind::ALL {
            let c = cfg(kind, 1.0, 7);
            for t in 0..20 {
                assert_eq!(pacing_fraction(&c, t), 1.0);
            }
        }
    }

    #[test]
    fn rejects_bad_config() {
        for lam in [0.0, -0.1, 1.0001, f64::NAN, f64::INFINITY] {
            assert!(PacingConfig::new(PacingKind::Linear, lam, 10).is_err());
        }
        assert!(PacingConfig::new(PacingKind::Geometric, 0.5, 0).is_err());
    }

    #[test]
    fn sample_count_examples() {
        assert_eq!(sample_count(10, 1.0).unwrap(), 10);
        assert_eq!(sample_count(10, 0.35).unwrap(), 3);
        assert_eq!(sample_count(5, 0.01).unwrap(), 1);
        assert!(matches!(sample_count(0, 0.5), Err(LdtsError::EmptyDataset)));
        assert!(sample_count(4, 0.0).is_err());
        assert!(sample_count(4, 1.5).is_err());
    }

    #[test]
    fn sample_count_decimal_products() {
        // both fractions are stored slightly below their decimal values
        assert_eq!(sample_count(100, 0.29).unwrap(), 29);
        assert_eq!(sample_count(10, 0.7).unwrap(), 7);
        assert_eq!(sample_count(1000, 0.625).unwrap(), 625);
    }

    #[test]
    fn parse_kind() {
        assert_eq!("geom".parse::<PacingKind>().unwrap(), PacingKind::Geometric);
        assert_eq!("root".parse::<PacingKind>().unwrap(), PacingKind::Root);
        assert!("cosine".parse::<PacingKind>().is_err());
    }
}
