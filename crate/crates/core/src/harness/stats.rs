//! Small statistics needed by the studies.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::distance::average_ranks;
use crate::error::{Error, Result};

/// Above this many non-zero differences the normal approximation is used.
pub const EXACT_LIMIT: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// Sum of ranks of positive differences `x − y`.
    pub w_plus: f64,
    pub w_minus: f64,
    /// Non-zero differences used.
    pub n: usize,
    /// Two-sided p-value.
    pub p_value: f64,
    pub exact: bool,
}

/// Paired Wilcoxon signed-rank test. Zero differences are dropped and tied
/// magnitudes get average ranks. Exact for up to [`EXACT_LIMIT`] pairs.
pub fn wilcoxon_signed_rank(x: &[f64], y: &[f64]) -> Result<WilcoxonResult> {
    if x.len() != y.len() {
        return Err(Error::dims(x.len(), y.len()));
    }
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).filter(|v| *v != 0.0).collect();
    let n = d.len();
    if n == 0 {
        return Ok(WilcoxonResult { w_plus: 0.0, w_minus: 0.0, n: 0, p_value: 1.0, exact: true });
    }
    let ranks = average_ranks(&d.iter().map(|v| v.abs()).collect::<Vec<_>>());
    let w_plus: f64 = d.iter().zip(&ranks).filter(|(v, _)| **v > 0.0).map(|(_, r)| r).sum();
    let total = (n * (n + 1)) as f64 / 2.0;
    let w_minus = total - w_plus;
    let (p_value, exact) = if n <= EXACT_LIMIT {
        (exact_p(&ranks, w_plus), true)
    } else {
        (normal_p(&ranks, w_plus), false)
    };
    Ok(WilcoxonResult { w_plus, w_minus, n, p_value, exact })
}

/// Counts sign assignments by their doubled rank sum; average ranks are
/// multiples of one half, so doubling makes them integers.
fn exact_p(ranks: &[f64], w_plus: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let max: usize = doubled.iter().sum();
    let mut ways = vec![0f64; max + 1];
    ways[0] = 1.0;
    for &r in &doubled {
        for s in (r..=max).rev() {
            ways[s] += ways[s - r];
        }
    }
    let total = 2f64.powi(ranks.len() as i32);
    let w = (2.0 * w_plus).round() as usize;
    let lower: f64 = ways[..=w].iter().sum::<f64>() / total;
    let upper: f64 = ways[w..].iter().sum::<f64>() / total;
    (2.0 * lower.min(upper)).min(1.0)
}

fn normal_p(ranks: &[f64], w_plus: f64) -> f64 {
    let n = ranks.len() as f64;
    let mean = n * (n + 1.0) / 4.0;
    let var = ranks.iter().map(|r| r * r).sum::<f64>() / 4.0;
    if var == 0.0 {
        return 1.0;
    }
    let z = ((w_plus - mean).abs() - 0.5).max(0.0) / var.sqrt();
    let normal = Normal::standard();
    (2.0 * (1.0 - normal.cdf(z))).min(1.0)
}

/// Ordinary least-squares line `y = slope·x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() {
        return Err(Error::dims(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(Error::arg("a line needs at least two points"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::arg("all x values are equal"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(LinearFit { slope, intercept, r2 })
}
