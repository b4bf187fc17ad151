//! Quality measures for comparing algorithms on a common set of problems.

use serde::{Deserialize, Serialize};

use crate::distance::random_permutation;
use crate::error::{Error, Result};
use crate::model::{Instance, Permutation};
use crate::rng::rng_from_seed;

/// Best, average and worst relative error, in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorSummary {
    pub bre: f64,
    pub are: f64,
    pub wre: f64,
}

pub fn relative_errors(results: &[f64], c_star: f64) -> Result<ErrorSummary> {
    if c_star.is_nan() || c_star <= 0.0 {
        return Err(Error::arg(format!("reference value must be positive, got {c_star}")));
    }
    if results.is_empty() {
        return Err(Error::arg("no results to summarize"));
    }
    let min = results.iter().copied().fold(f64::INFINITY, f64::min);
    let max = results.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = results.iter().sum::<f64>() / results.len() as f64;
    let pct = |v: f64| 100.0 * (v - c_star) / c_star;
    Ok(ErrorSummary { bre: pct(min), are: pct(mean), wre: pct(max) })
}

/// Regularized performance scores of several algorithms on one multi-task
/// instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RPSTable {
    /// One score per algorithm; lower is better.
    pub scores: Vec<f64>,
    pub mu: Vec<f64>,
    /// Population standard deviation per problem.
    pub sigma: Vec<f64>,
    /// Problems whose results were all equal and contributed nothing.
    pub degenerate: Vec<usize>,
}

/// `results[a][k][l]` is algorithm `a`'s result on problem `k` in
/// repetition `l`. Every algorithm must cover the same problems and
/// repetition counts.
pub fn rps(results: &[Vec<Vec<f64>>]) -> Result<RPSTable> {
    let first = results.first().ok_or_else(|| Error::arg("no algorithms"))?;
    let k_count = first.len();
    for (a, per_alg) in results.iter().enumerate() {
        if per_alg.len() != k_count {
            return Err(Error::dims(format!("{k_count} problems"), format!("{} for algorithm {a}", per_alg.len())));
        }
        for (k, reps) in per_alg.iter().enumerate() {
            if reps.is_empty() || reps.len() != first[k].len() {
                return Err(Error::arg(format!("algorithm {a} has a missing cell on problem {k}")));
            }
        }
    }
    let mut mu = Vec::with_capacity(k_count);
    let mut sigma = Vec::with_capacity(k_count);
    let mut degenerate = Vec::new();
    for k in 0..k_count {
        let all: Vec<f64> = results.iter().flat_map(|a| a[k].iter().copied()).collect();
        let m = all.iter().sum::<f64>() / all.len() as f64;
        let s = (all.iter().map(|v| (v - m).powi(2)).sum::<f64>() / all.len() as f64).sqrt();
        if s <= 1e-12 * m.abs().max(1.0) {
            degenerate.push(k);
        }
        mu.push(m);
        sigma.push(s);
    }
    let scores = results
        .iter()
        .map(|a| {
            (0..k_count)
                .filter(|k| !degenerate.contains(k))
                .map(|k| a[k].iter().map(|v| (v - mu[k]) / sigma[k]).sum::<f64>())
                .sum()
        })
        .collect();
    Ok(RPSTable { scores, mu, sigma, degenerate })
}

/// Rank of `source_best` among `samples` uniformly random solutions of
/// `target`: one plus the number of samples strictly better.
pub fn transferability_value(source_best: &Permutation, target: &Instance, samples: usize, rng_seed: u64) -> Result<usize> {
    if samples == 0 {
        return Err(Error::arg("at least one sample is required"));
    }
    if source_best.len() != target.n() {
        return Err(Error::dims(target.n(), source_best.len()));
    }
    let mut row = vec![0.0; target.m()];
    let reference = target.sequence_value(source_best.as_slice(), &mut row);
    let mut rng = rng_from_seed(rng_seed);
    let better = (0..samples)
        .filter(|_| target.sequence_value(random_permutation(target.n(), &mut rng).as_slice(), &mut row) < reference)
        .count();
    Ok(1 + better)
}
