//! Multi-task benchmark generation and the `.mt` pair file format.
//!
//! A pair is built from a base instance by redrawing each cell of its
//! processing-time matrix with probability `p_r`. Every cell has its own
//! RNG stream derived from `(seed, job, machine)`, so the replacement mask
//! can be recomputed from the seed alone.

use std::fs;
use std::path::Path;

use ndarray::Array2;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distance::inter_task_distance;
use crate::error::{Error, Result};
use crate::model::{Instance, Objective};
use crate::rng::{derive_seed, rng_from_seed};

#[derive(Debug, Clone, PartialEq)]
pub struct MultiTaskInstance {
    pub problem1: Instance,
    pub problem2: Instance,
    pub p_r: f64,
    pub seed: u64,
    pub recorded_distance: Option<f64>,
}

fn check_pr(p_r: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p_r) {
        return Err(Error::arg(format!("replacing probability {p_r} outside [0, 1]")));
    }
    Ok(())
}

/// Draws for one cell: whether it is replaced, and the replacement value.
fn cell(seed: u64, i: usize, j: usize, p_r: f64) -> Option<f64> {
    let mut rng = rng_from_seed(derive_seed(seed, &[i as u64, j as u64]));
    let u: f64 = rng.random();
    (u < p_r).then(|| rng.random_range(1..=99) as f64)
}

/// Which cells of an `n×m` matrix a given `(p_r, seed)` replaces.
pub fn replacement_mask(n: usize, m: usize, p_r: f64, seed: u64) -> Result<Array2<bool>> {
    check_pr(p_r)?;
    Ok(Array2::from_shape_fn((n, m), |(i, j)| cell(seed, i, j, p_r).is_some()))
}

pub fn generate_pair(base: &Instance, p_r: f64, seed: u64) -> Result<MultiTaskInstance> {
    check_pr(p_r)?;
    let p = base.p();
    let p2 = Array2::from_shape_fn(p.dim(), |(i, j)| cell(seed, i, j, p_r).unwrap_or(p[[i, j]]));
    let problem2 = Instance::new(p2, base.objective(), base.due().map(<[f64]>::to_vec))?;
    Ok(MultiTaskInstance { problem1: base.clone(), problem2, p_r, seed, recorded_distance: None })
}

/// One pair per `(base, p_r, rep)`, with the distance recorded. Sub-seeds
/// depend only on the indices, so the suite is identical however it is
/// scheduled.
pub fn generate_suite(bases: &[Instance], p_r_grid: &[f64], reps: usize, seed: u64) -> Result<Vec<MultiTaskInstance>> {
    if bases.is_empty() || p_r_grid.is_empty() || reps == 0 {
        return Err(Error::arg("a suite needs at least one base, one p_r and one repetition"));
    }
    p_r_grid.iter().try_for_each(|&p| check_pr(p))?;
    let cells: Vec<(usize, usize, usize)> = (0..bases.len())
        .flat_map(|b| (0..p_r_grid.len()).flat_map(move |k| (0..reps).map(move |r| (b, k, r))))
        .collect();
    cells
        .par_iter()
        .map(|&(b, k, r)| {
            let sub = derive_seed(seed, &[b as u64, k as u64, r as u64]);
            let mut pair = generate_pair(&bases[b], p_r_grid[k], sub)?;
            pair.recorded_distance = Some(inter_task_distance(&pair.problem1, &pair.problem2, false)?.normalized);
            Ok(pair)
        })
        .collect()
}

/// `k/steps` for `k = 1..=steps`.
pub fn p_r_grid(steps: usize) -> Vec<f64> {
    (1..=steps).map(|k| k as f64 / steps as f64).collect()
}

/// On-disk form of a pair. Matrices are lists of job rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiTaskFile {
    pub n: usize,
    pub m: usize,
    pub objective: Objective,
    pub p1_matrix: Vec<Vec<f64>>,
    pub p2_matrix: Vec<Vec<f64>>,
    pub p_r: f64,
    pub seed: u64,
    pub distance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub due1: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub due2: Option<Vec<f64>>,
}

fn rows(p: &Array2<f64>) -> Vec<Vec<f64>> {
    p.outer_iter().map(|r| r.to_vec()).collect()
}

impl From<&MultiTaskInstance> for MultiTaskFile {
    fn from(mt: &MultiTaskInstance) -> Self {
        Self {
            n: mt.problem1.n(),
            m: mt.problem1.m(),
            objective: mt.problem1.objective(),
            p1_matrix: rows(mt.problem1.p()),
            p2_matrix: rows(mt.problem2.p()),
            p_r: mt.p_r,
            seed: mt.seed,
            distance: mt.recorded_distance,
            due1: mt.problem1.due().map(<[f64]>::to_vec),
            due2: mt.problem2.due().map(<[f64]>::to_vec),
        }
    }
}

impl TryFrom<MultiTaskFile> for MultiTaskInstance {
    type Error = Error;

    fn try_from(f: MultiTaskFile) -> Result<Self> {
        let problem1 = Instance::from_rows(&f.p1_matrix, f.objective, f.due1)?;
        let problem2 = Instance::from_rows(&f.p2_matrix, f.objective, f.due2)?;
        for p in [&problem1, &problem2] {
            if (p.n(), p.m()) != (f.n, f.m) {
                return Err(Error::dims(format!("{}x{}", f.n, f.m), format!("{}x{}", p.n(), p.m())));
            }
        }
        check_pr(f.p_r)?;
        Ok(Self { problem1, problem2, p_r: f.p_r, seed: f.seed, recorded_distance: f.distance })
    }
}

pub fn to_mt_string(mt: &MultiTaskInstance) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&MultiTaskFile::from(mt))?;
    s.push('\n');
    Ok(s)
}

pub fn from_mt_str(s: &str) -> Result<MultiTaskInstance> {
    serde_json::from_str::<MultiTaskFile>(s)?.try_into()
}

pub fn save_mt(mt: &MultiTaskInstance, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, to_mt_string(mt)?)?;
    Ok(())
}

pub fn load_mt(path: impl AsRef<Path>) -> Result<MultiTaskInstance> {
    from_mt_str(&fs::read_to_string(path)?)
}
