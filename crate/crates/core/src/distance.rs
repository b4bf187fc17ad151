//! Inter-task distance between flowshop problems.
//!
//! Two problems are order-isomorphic when one processing-time matrix is a
//! positive scaling plus a uniform shift of the other. The distance measures
//! how far `Q` is from the closest such image of `P`, normalized to `[0, 1]`:
//! 0 means the problems rank every permutation identically, 1 means the
//! centered matrices share no positive linear component.

use ndarray::{s, Array2, Zip};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::assignment::max_weight_assignment;
use crate::error::{Error, Result};
use crate::model::{Instance, Permutation, SolutionMatrix};
use crate::rng::rng_from_seed;

/// Result of comparing two problem matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceReport {
    pub t_star: f64,
    pub b_star: f64,
    /// Frobenius norm of the centered residual.
    pub raw: f64,
    pub normalized: f64,
    pub preprocessing: Preprocessing,
}

/// What was done to the inputs before they were compared.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Preprocessing {
    /// Original `(n, m)` of the first and second problem.
    pub q_dims: (usize, usize),
    pub p_dims: (usize, usize),
    /// Common shape after zero padding.
    pub padded: (usize, usize),
    /// Row assignment applied to `Q` (`Q' = X·Q`), when jobs were aligned.
    pub matching: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchingResult {
    /// Row `i` of the aligned `Q` is row `assignment.cols()[i]` of `Q`.
    pub assignment: SolutionMatrix,
    /// Sum of the matched row correlations.
    pub score: f64,
}

fn mean(p: &Array2<f64>) -> f64 {
    p.sum() / p.len() as f64
}

fn frob(p: &Array2<f64>) -> f64 {
    p.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn is_flat(centered: &Array2<f64>, original: &Array2<f64>) -> bool {
    let scale = original.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    centered.iter().all(|v| v.abs() <= 1e-12 * scale.max(1.0))
}

/// Subtracts the grand mean.
pub fn center(p: &Array2<f64>) -> Array2<f64> {
    let mu = mean(p);
    p.mapv(|v| v - mu)
}

fn same_shape(q: &Array2<f64>, p: &Array2<f64>) -> Result<()> {
    if q.dim() != p.dim() {
        return Err(Error::dims(format!("{:?}", q.dim()), format!("{:?}", p.dim())));
    }
    if q.is_empty() {
        return Err(Error::arg("empty matrix"));
    }
    Ok(())
}

/// Least-squares fit of `Q ≈ t·P + b·E` with `t` clamped at zero.
///
/// Fails with [`Error::DegenerateSource`] when `P` is constant.
pub fn fit_scale_shift(q: &Array2<f64>, p: &Array2<f64>) -> Result<(f64, f64)> {
    same_shape(q, p)?;
    let pc = center(p);
    if is_flat(&pc, p) {
        return Err(Error::DegenerateSource);
    }
    let qc = center(q);
    let t = ((&qc * &pc).sum() / (&pc * &pc).sum()).max(0.0);
    Ok((t, mean(q) - t * mean(p)))
}

/// Normalized distance between two equally shaped matrices.
pub fn normalized_distance(q: &Array2<f64>, p: &Array2<f64>) -> Result<DistanceReport> {
    same_shape(q, p)?;
    let qc = center(q);
    let pc = center(p);
    let q_flat = is_flat(&qc, q);
    let p_flat = is_flat(&pc, p);
    let qn = frob(&qc);
    let pre = Preprocessing { q_dims: q.dim(), p_dims: p.dim(), padded: q.dim(), matching: None };
    if p_flat {
        return Ok(DistanceReport {
            t_star: 0.0,
            b_star: mean(q),
            raw: qn,
            normalized: if q_flat { 0.0 } else { 1.0 },
            preprocessing: pre,
        });
    }
    let (t_star, b_star) = fit_scale_shift(q, p)?;
    let mut resid = qc;
    Zip::from(&mut resid).and(&pc).for_each(|r, &v| *r -= t_star * v);
    let raw = frob(&resid);
    let normalized = if q_flat || t_star == 0.0 {
        1.0
    } else {
        // tan of half the angle between the centered matrices
        (raw / (qn + t_star * frob(&pc))).clamp(0.0, 1.0)
    };
    Ok(DistanceReport { t_star, b_star, raw, normalized, preprocessing: pre })
}

fn pad(inst: &Instance, n: usize, m: usize) -> Result<Instance> {
    if inst.n() == n && inst.m() == m {
        return Ok(inst.clone());
    }
    let mut p = Array2::zeros((n, m));
    p.slice_mut(s![..inst.n(), ..inst.m()]).assign(inst.p());
    let due = inst.due().map(|d| {
        let horizon = inst.total_processing();
        let mut d = d.to_vec();
        d.resize(n, horizon);
        d
    });
    Instance::build(p, inst.objective(), due, inst.is_signed())
}

/// Zero-pads both problems to a common shape. Virtual jobs go last, virtual
/// machines go last, and virtual jobs of tardy-count problems get a due
/// date nobody can miss.
pub fn augment_dimensions(q: &Instance, p: &Instance) -> Result<(Instance, Instance)> {
    let n = q.n().max(p.n());
    let m = q.m().max(p.m());
    Ok((pad(q, n, m)?, pad(p, n, m)?))
}

/// Pearson correlation; zero when either side has no variance.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len() as f64;
    if a.is_empty() {
        return 0.0;
    }
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return 0.0;
    }
    (sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0)
}

/// `s[i][j]` is the correlation of row `i` of `a` with row `j` of `b`.
pub fn row_correlations(a: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    assert_eq!(a.ncols(), b.ncols());
    let rows_a: Vec<Vec<f64>> = a.outer_iter().map(|r| r.to_vec()).collect();
    let rows_b: Vec<Vec<f64>> = b.outer_iter().map(|r| r.to_vec()).collect();
    Array2::from_shape_fn((a.nrows(), b.nrows()), |(i, j)| pearson(&rows_a[i], &rows_b[j]))
}

/// Reorders the jobs of `q` to best line up, row by row, with those of `p`.
pub fn match_jobs(q: &Instance, p: &Instance) -> Result<MatchingResult> {
    if q.n() != p.n() || q.m() != p.m() {
        return Err(Error::dims(format!("{}x{}", p.n(), p.m()), format!("{}x{}", q.n(), q.m())));
    }
    let s = row_correlations(&q.spec_matrix(), &p.spec_matrix());
    // column i of s is row i of P; assign each to one row of Q
    let pick = max_weight_assignment(&s.t().to_owned());
    let score = pick.iter().enumerate().map(|(i, &r)| s[[r, i]]).sum();
    Ok(MatchingResult { assignment: SolutionMatrix::from_cols(pick)?, score })
}

/// Full pipeline: pad, optionally align jobs, then compare.
pub fn inter_task_distance(q: &Instance, p: &Instance, align_jobs: bool) -> Result<DistanceReport> {
    let (mut qa, pa) = augment_dimensions(q, p)?;
    let mut matching = None;
    if align_jobs {
        let mr = match_jobs(&qa, &pa)?;
        qa = qa.row_transform(&mr.assignment)?;
        matching = Some(mr.assignment.cols().to_vec());
    }
    let mut report = normalized_distance(&qa.spec_matrix(), &pa.spec_matrix())?;
    report.preprocessing = Preprocessing {
        q_dims: (q.n(), q.m()),
        p_dims: (p.n(), p.m()),
        padded: (pa.n(), pa.m()),
        matching,
    };
    Ok(report)
}

/// Fraction of job pairs ordered differently by the two sequences.
pub fn precedence_distance(a: &Permutation, b: &Permutation) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::dims(a.len(), b.len()));
    }
    let n = a.len();
    if n < 2 {
        return Ok(0.0);
    }
    let pb = b.positions();
    let seq = a.as_slice();
    let mut inverted = 0usize;
    for i in 0..n {
        for j in i + 1..n {
            if pb[seq[i]] > pb[seq[j]] {
                inverted += 1;
            }
        }
    }
    Ok(2.0 * inverted as f64 / (n * (n - 1)) as f64)
}

/// 1-based ranks with ties sharing their average rank.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    pearson(&average_ranks(a), &average_ranks(b))
}

/// Uniformly random job sequence.
pub fn random_permutation<R: rand::Rng + ?Sized>(n: usize, rng: &mut R) -> Permutation {
    let mut v: Vec<usize> = (0..n).collect();
    v.shuffle(rng);
    Permutation::new_unchecked(v)
}

/// Spearman correlation of the two objectives over a random sample of
/// permutations.
pub fn spearman_rcc(q: &Instance, p: &Instance, samples: usize, rng_seed: u64) -> Result<f64> {
    if samples < 2 {
        return Err(Error::arg("at least two samples are needed"));
    }
    if q.n() != p.n() {
        return Err(Error::dims(format!("{} jobs", q.n()), format!("{} jobs", p.n())));
    }
    let mut rng = rng_from_seed(rng_seed);
    let mut row_q = vec![0.0; q.m()];
    let mut row_p = vec![0.0; p.m()];
    let mut fq = Vec::with_capacity(samples);
    let mut fp = Vec::with_capacity(samples);
    for _ in 0..samples {
        let pi = random_permutation(q.n(), &mut rng);
        fq.push(q.sequence_value(pi.as_slice(), &mut row_q));
        fp.push(p.sequence_value(pi.as_slice(), &mut row_p));
    }
    Ok(spearman(&fq, &fp))
}
