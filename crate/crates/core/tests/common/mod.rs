//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use ldts::nn::{forward, per_sample_loss, ModelParams};
use ldts::sampler::SampleSet;
use ndarray::{Array1, Array2};
use rand::Rng;

/// Mean loss over `sample`, evaluated straight from the forward pass.
pub fn sample_mean_loss(
    params: &ModelParams,
    x: &Array2<f64>,
    y: &[usize],
    sample: &SampleSet,
) -> f64 {
    let losses = per_sample_loss(&forward(params, x.view()).unwrap(), y).unwrap();
    sample.indices().iter().map(|&i| losses[i]).sum::<f64>() / sample.len() as f64
}

/// Central finite differences of the sampled mean loss, one coordinate at a time.
pub fn finite_difference_gradient(
    params: &ModelParams,
    x: &Array2<f64>,
    y: &[usize],
    sample: &SampleSet,
    h: f64,
) -> Vec<f64> {
    (0..params.parameter_count())
        .map(|i| {
            let mut plus = params.clone();
            *plus.flat_mut(i) += h;
            let mut minus = params.clone();
            *minus.flat_mut(i) -= h;
            (sample_mean_loss(&plus, x, y, sample) - sample_mean_loss(&minus, x, y, sample))
                / (2.0 * h)
        })
        .collect()
}

/// Relative error with a floor on the denominator: coordinates whose true
/// gradient is essentially zero are judged on absolute error instead.
pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

/// Probability that sequential proportional sampling without replacement of
/// `subset.len()` items yields exactly `subset`, by enumerating draw orders.
pub fn subset_probability(p: &[f64], subset: &[usize]) -> f64 {
    fn go(p: &[f64], remaining: &mut Vec<usize>, taken_mass: f64) -> f64 {
        if remaining.is_empty() {
            return 1.0;
        }
        let mut total = 0.0;
        for pos in 0..remaining.len() {
            let i = remaining.remove(pos);
            total += p[i] / (1.0 - taken_mass) * go(p, remaining, taken_mass + p[i]);
            remaining.insert(pos, i);
        }
        total
    }
    go(p, &mut subset.to_vec(), 0.0)
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for first in 0..n {
        for rest in subsets(n, k - 1) {
            if rest.first().is_none_or(|&r| r > first) {
                let mut s = vec![first];
                s.extend(rest);
                out.push(s);
            }
        }
    }
    out
}

pub fn random_params<R: Rng>(
    input: usize,
    hidden: usize,
    classes: usize,
    rng: &mut R,
) -> ModelParams {
    let mut m =
        |r: usize, c: usize| Array2::from_shape_simple_fn((r, c), || rng.random_range(-1.0..1.0));
    let w1 = m(hidden, input);
    let b1: Array1<f64> = m(1, hidden).row(0).to_owned();
    let w2 = m(classes, hidden);
    let b2: Array1<f64> = m(1, classes).row(0).to_owned();
    ModelParams { w1, b1, w2, b2 }
}
