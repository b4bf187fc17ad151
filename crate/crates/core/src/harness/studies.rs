//! Experiment runners. Each study fans independent runs out over a worker
//! pool and sorts results by key, so the output does not depend on
//! scheduling.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{relative_errors, rps, transferability_value, ErrorSummary, RPSTable};
use super::stats::{linear_fit, wilcoxon_signed_rank, LinearFit, WilcoxonResult};
use crate::benchgen::MultiTaskInstance;
use crate::distance::{inter_task_distance, spearman_rcc};
use crate::error::{Error, Result};
use crate::model::Convergence;
use crate::mtco::{run_pair, run_stss, RunConfig, Variant};
use crate::rng::derive_seed;
use crate::transform::TransformRecord;

/// Environment variable holding the worker count.
pub const WORKERS_ENV: &str = "MTCO_WORKERS";

pub fn worker_count() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&w| w > 0)
        .unwrap_or_else(rayon::current_num_threads)
}

/// Runs `f` on a pool sized by [`worker_count`].
pub fn with_workers<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count())
        .build()
        .map_err(|e| Error::arg(format!("cannot start workers: {e}")))?;
    Ok(pool.install(f))
}

fn pair_distance(mt: &MultiTaskInstance) -> Result<f64> {
    match mt.recorded_distance {
        Some(d) => Ok(d),
        None => Ok(inter_task_distance(&mt.problem1, &mt.problem2, false)?.normalized),
    }
}

fn non_empty(suite: &[MultiTaskInstance]) -> Result<()> {
    if suite.is_empty() {
        return Err(Error::arg("empty suite"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SrccRow {
    pub pair: usize,
    pub p_r: f64,
    pub distance: f64,
    pub srcc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SrccStudy {
    pub samples: usize,
    pub rows: Vec<SrccRow>,
    /// SRCC against distance; absent when every distance is equal.
    pub fit: Option<LinearFit>,
}

/// Distance and sampled rank correlation of the two objectives for every
/// pair, with a least-squares line through the points.
pub fn study_distance_srcc(suite: &[MultiTaskInstance], samples: usize, seed: u64) -> Result<SrccStudy> {
    non_empty(suite)?;
    let rows = with_workers(|| {
        suite
            .par_iter()
            .enumerate()
            .map(|(i, mt)| {
                let srcc = spearman_rcc(&mt.problem1, &mt.problem2, samples, derive_seed(seed, &[i as u64]))?;
                Ok(SrccRow { pair: i, p_r: mt.p_r, distance: pair_distance(mt)?, srcc })
            })
            .collect::<Result<Vec<_>>>()
    })??;
    let x: Vec<f64> = rows.iter().map(|r| r.distance).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.srcc).collect();
    Ok(SrccStudy { samples, fit: linear_fit(&x, &y).ok(), rows })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferabilityRow {
    pub pair: usize,
    pub p_r: f64,
    pub distance: f64,
    /// Rank of problem 1's best solution on problem 2.
    pub rank: usize,
    /// Rank of problem 2's best solution on problem 1.
    pub reverse_rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferabilityStudy {
    pub samples: usize,
    pub rows: Vec<TransferabilityRow>,
}

impl TransferabilityStudy {
    /// Share of pairs with distance in `[lo, hi]` whose rank is at most
    /// `max_rank`, or `None` if no pair falls in the range.
    pub fn share_within(&self, lo: f64, hi: f64, max_rank: usize) -> Option<f64> {
        let sel: Vec<&TransferabilityRow> = self.rows.iter().filter(|r| (lo..=hi).contains(&r.distance)).collect();
        (!sel.is_empty()).then(|| sel.iter().filter(|r| r.rank <= max_rank).count() as f64 / sel.len() as f64)
    }
}

/// Solves each problem alone with `cfg`, then ranks its best solution among
/// random solutions of the other problem.
pub fn study_transferability(
    suite: &[MultiTaskInstance],
    samples: usize,
    cfg: &RunConfig,
    seed: u64,
) -> Result<TransferabilityStudy> {
    non_empty(suite)?;
    let rows = with_workers(|| {
        suite
            .par_iter()
            .enumerate()
            .map(|(i, mt)| {
                let k = i as u64;
                let solve = |slot: u64, inst| {
                    run_stss(inst, &RunConfig { rng_seed: derive_seed(seed, &[k, slot]), ..cfg.clone() })
                };
                let b1 = solve(0, &mt.problem1)?.best;
                let b2 = solve(1, &mt.problem2)?.best;
                Ok(TransferabilityRow {
                    pair: i,
                    p_r: mt.p_r,
                    distance: pair_distance(mt)?,
                    rank: transferability_value(&b1, &mt.problem2, samples, derive_seed(seed, &[k, 2]))?,
                    reverse_rank: transferability_value(&b2, &mt.problem1, samples, derive_seed(seed, &[k, 3]))?,
                })
            })
            .collect::<Result<Vec<_>>>()
    })??;
    Ok(TransferabilityStudy { samples, rows })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareConfig {
    pub variants: Vec<Variant>,
    pub reps: usize,
    pub run: RunConfig,
    pub seed: u64,
}

impl CompareConfig {
    pub fn new(variants: Vec<Variant>, reps: usize, run: RunConfig, seed: u64) -> Self {
        Self { variants, reps, run, seed }
    }
}

/// Final outcome of one problem in one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub pair: usize,
    /// 1 or 2.
    pub problem: usize,
    pub variant: Variant,
    pub rep: usize,
    pub seed: u64,
    pub best_value: f64,
    pub evals: u64,
    pub budget: u64,
    pub fired: usize,
    pub convergence: Convergence,
    pub transform: Option<TransformRecord>,
}

impl RunRecord {
    fn evals_to_reach(&self, target: f64) -> Option<u64> {
        self.convergence.iter().find(|(_, v)| *v <= target).map(|(e, _)| *e)
    }

    fn best_at(&self, evals: u64) -> Option<f64> {
        self.convergence.iter().take_while(|(e, _)| *e <= evals).last().map(|(_, v)| *v)
    }
}

/// Which part of a pair an error row describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    Problem1,
    Problem2,
    /// Mean of the two problems' errors.
    Instance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    pub pair: usize,
    pub p_r: f64,
    pub variant: Variant,
    pub scope: Scope,
    pub bre: f64,
    pub are: f64,
    pub wre: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedupRow {
    pub pair: usize,
    pub problem: usize,
    pub rep: usize,
    pub variant: Variant,
    pub p_r: f64,
    /// Baseline evaluations to reach its own final value.
    pub baseline_evals: u64,
    /// Evaluations this variant needed for the same value; the budget when
    /// it never got there.
    pub evals: u64,
    pub reached: bool,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub variant: Variant,
    pub mean_bre: f64,
    pub mean_are: f64,
    pub mean_wre: f64,
    pub mean_rps: f64,
    /// Against STSS, when it is part of the study.
    pub mean_speedup: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformRow {
    pub pair: usize,
    pub p_r: f64,
    pub d_before: f64,
    pub d_after: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareStudy {
    pub config: CompareConfig,
    pub p_r: Vec<f64>,
    /// Reference value per pair and problem: the best found by any run.
    pub c_star: Vec<[f64; 2]>,
    pub runs: Vec<RunRecord>,
}

/// Runs every variant on every pair `reps` times. Repetition `r` of pair
/// `i` uses the same seed for all variants.
pub fn study_compare(suite: &[MultiTaskInstance], cfg: &CompareConfig) -> Result<CompareStudy> {
    non_empty(suite)?;
    if cfg.variants.is_empty() || cfg.reps == 0 {
        return Err(Error::arg("a comparison needs at least one variant and one repetition"));
    }
    cfg.run.validate()?;
    let jobs: Vec<(usize, usize, usize)> = (0..suite.len())
        .flat_map(|i| (0..cfg.variants.len()).flat_map(move |v| (0..cfg.reps).map(move |r| (i, v, r))))
        .collect();
    let mut runs: Vec<RunRecord> = with_workers(|| {
        jobs.par_iter()
            .map(|&(i, v, r)| {
                let mt = &suite[i];
                let variant = cfg.variants[v];
                let seed = derive_seed(cfg.seed, &[i as u64, r as u64]);
                let run = RunConfig { variant, rng_seed: seed, ..cfg.run.clone() };
                let (t1, t2) = run_pair(&mt.problem1, &mt.problem2, &run)?;
                Ok([(1, t1, &mt.problem1), (2, t2, &mt.problem2)].map(|(problem, t, inst)| RunRecord {
                    pair: i,
                    problem,
                    variant,
                    rep: r,
                    seed,
                    best_value: t.best_value,
                    evals: t.evals,
                    budget: run.budget_for(inst.n()),
                    fired: t.fired().count(),
                    transform: t.transform.clone(),
                    convergence: t.convergence,
                }))
            })
            .collect::<Result<Vec<_>>>()
    })??
    .into_iter()
    .flatten()
    .collect();
    let order = |v: Variant| cfg.variants.iter().position(|&x| x == v);
    runs.sort_by_key(|r| (r.pair, order(r.variant), r.rep, r.problem));
    let mut c_star = vec![[f64::INFINITY; 2]; suite.len()];
    for r in &runs {
        let c = &mut c_star[r.pair][r.problem - 1];
        *c = c.min(r.best_value);
    }
    Ok(CompareStudy { config: cfg.clone(), p_r: suite.iter().map(|mt| mt.p_r).collect(), c_star, runs })
}

/// STSS against full MTCO.
pub fn study_mtco_vs_stss(suite: &[MultiTaskInstance], run: &RunConfig, reps: usize, seed: u64) -> Result<CompareStudy> {
    study_compare(suite, &CompareConfig::new(vec![Variant::Stss, Variant::Mtco], reps, run.clone(), seed))
}

/// STSS, the three single-knowledge variants and full MTCO.
pub fn study_ablation(suite: &[MultiTaskInstance], run: &RunConfig, reps: usize, seed: u64) -> Result<CompareStudy> {
    let variants = vec![Variant::Stss, Variant::MtcoP, Variant::MtcoC, Variant::MtcoE, Variant::Mtco];
    study_compare(suite, &CompareConfig::new(variants, reps, run.clone(), seed))
}

/// MTCO with and without the problem transformation.
pub fn study_transformation(suite: &[MultiTaskInstance], run: &RunConfig, reps: usize, seed: u64) -> Result<CompareStudy> {
    study_compare(suite, &CompareConfig::new(vec![Variant::Mtco, Variant::MtcoNoPt], reps, run.clone(), seed))
}

fn mean(v: impl IntoIterator<Item = f64>) -> f64 {
    let (s, n) = v.into_iter().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

impl CompareStudy {
    pub fn variants(&self) -> &[Variant] {
        &self.config.variants
    }

    /// The same study seen through a subset of its variants; reference
    /// values are recomputed from the remaining runs.
    pub fn restrict(&self, variants: &[Variant]) -> Result<Self> {
        if let Some(v) = variants.iter().find(|v| !self.variants().contains(v)) {
            return Err(Error::arg(format!("{v} is not part of this study")));
        }
        let runs: Vec<RunRecord> = self.runs.iter().filter(|r| variants.contains(&r.variant)).cloned().collect();
        let mut c_star = vec![[f64::INFINITY; 2]; self.p_r.len()];
        for r in &runs {
            let c = &mut c_star[r.pair][r.problem - 1];
            *c = c.min(r.best_value);
        }
        let config = CompareConfig { variants: variants.to_vec(), ..self.config.clone() };
        Ok(Self { config, p_r: self.p_r.clone(), c_star, runs })
    }

    fn finals(&self, pair: usize, problem: usize, variant: Variant) -> Vec<f64> {
        self.runs
            .iter()
            .filter(|r| r.pair == pair && r.problem == problem && r.variant == variant)
            .map(|r| r.best_value)
            .collect()
    }

    /// Error rows for each pair and variant: one per problem plus their mean.
    pub fn errors(&self) -> Result<Vec<ErrorRow>> {
        let mut out = Vec::new();
        for pair in 0..self.p_r.len() {
            for &variant in self.variants() {
                let e1 = relative_errors(&self.finals(pair, 1, variant), self.c_star[pair][0])?;
                let e2 = relative_errors(&self.finals(pair, 2, variant), self.c_star[pair][1])?;
                let both = ErrorSummary {
                    bre: (e1.bre + e2.bre) / 2.0,
                    are: (e1.are + e2.are) / 2.0,
                    wre: (e1.wre + e2.wre) / 2.0,
                };
                for (scope, e) in [(Scope::Problem1, e1), (Scope::Problem2, e2), (Scope::Instance, both)] {
                    out.push(ErrorRow { pair, p_r: self.p_r[pair], variant, scope, bre: e.bre, are: e.are, wre: e.wre });
                }
            }
        }
        Ok(out)
    }

    /// Scores of all variants on each pair, which is one multi-task instance
    /// of two problems.
    pub fn rps_by_pair(&self) -> Result<Vec<RPSTable>> {
        (0..self.p_r.len())
            .map(|pair| {
                let data: Vec<Vec<Vec<f64>>> =
                    self.variants().iter().map(|&v| vec![self.finals(pair, 1, v), self.finals(pair, 2, v)]).collect();
                rps(&data)
            })
            .collect()
    }

    /// Evaluations each variant needs to match `baseline`'s final value in
    /// the same repetition.
    pub fn speedups(&self, baseline: Variant) -> Vec<SpeedupRow> {
        let base: BTreeMap<(usize, usize, usize), &RunRecord> =
            self.runs.iter().filter(|r| r.variant == baseline).map(|r| ((r.pair, r.problem, r.rep), r)).collect();
        self.runs
            .iter()
            .filter(|r| r.variant != baseline)
            .filter_map(|r| {
                let b = base.get(&(r.pair, r.problem, r.rep))?;
                let baseline_evals = b.evals_to_reach(b.best_value)?;
                let hit = r.evals_to_reach(b.best_value);
                let evals = hit.unwrap_or(r.budget).max(1);
                Some(SpeedupRow {
                    pair: r.pair,
                    problem: r.problem,
                    rep: r.rep,
                    variant: r.variant,
                    p_r: self.p_r[r.pair],
                    baseline_evals,
                    evals,
                    reached: hit.is_some(),
                    ratio: baseline_evals as f64 / evals as f64,
                })
            })
            .collect()
    }

    pub fn summary(&self) -> Result<Vec<SummaryRow>> {
        let errors = self.errors()?;
        let tables = self.rps_by_pair()?;
        let speedups = self.variants().contains(&Variant::Stss).then(|| self.speedups(Variant::Stss));
        Ok(self
            .variants()
            .iter()
            .enumerate()
            .map(|(a, &variant)| {
                let inst = || errors.iter().filter(move |e| e.variant == variant && e.scope == Scope::Instance);
                SummaryRow {
                    variant,
                    mean_bre: mean(inst().map(|e| e.bre)),
                    mean_are: mean(inst().map(|e| e.are)),
                    mean_wre: mean(inst().map(|e| e.wre)),
                    mean_rps: mean(tables.iter().map(|t| t.scores[a])),
                    mean_speedup: speedups
                        .as_ref()
                        .filter(|_| variant != Variant::Stss)
                        .map(|s| mean(s.iter().filter(|r| r.variant == variant).map(|r| r.ratio))),
                }
            })
            .collect())
    }

    pub fn summary_for(&self, variant: Variant) -> Result<SummaryRow> {
        self.summary()?
            .into_iter()
            .find(|s| s.variant == variant)
            .ok_or_else(|| Error::arg(format!("{variant} is not part of this study")))
    }

    /// Paired test of final values, `a` against `b`, over every pair,
    /// problem and repetition.
    pub fn wilcoxon(&self, a: Variant, b: Variant) -> Result<WilcoxonResult> {
        let key = |r: &RunRecord| (r.pair, r.problem, r.rep);
        let bs: BTreeMap<_, f64> = self.runs.iter().filter(|r| r.variant == b).map(|r| (key(r), r.best_value)).collect();
        let (x, y): (Vec<f64>, Vec<f64>) = self
            .runs
            .iter()
            .filter(|r| r.variant == a)
            .filter_map(|r| bs.get(&key(r)).map(|&v| (r.best_value, v)))
            .unzip();
        wilcoxon_signed_rank(&x, &y)
    }

    /// Transformation outcome per pair, taken from the first run that
    /// attempted one.
    pub fn transforms(&self) -> Vec<TransformRow> {
        let mut seen = BTreeMap::new();
        for r in &self.runs {
            if let Some(t) = &r.transform {
                seen.entry(r.pair).or_insert_with(|| TransformRow {
                    pair: r.pair,
                    p_r: self.p_r[r.pair],
                    d_before: t.d_before,
                    d_after: t.d_after,
                    accepted: t.accepted,
                });
            }
        }
        seen.into_values().collect()
    }

    /// Mean relative error of the best-so-far value at `points` evenly
    /// spaced fractions of the budget. Runs without a complete evaluation
    /// yet are left out of that point.
    pub fn convergence_curve(&self, variant: Variant, points: usize) -> Vec<(f64, f64)> {
        (1..=points)
            .map(|k| {
                let frac = k as f64 / points as f64;
                let errs = self.runs.iter().filter(|r| r.variant == variant).filter_map(|r| {
                    let at = (frac * r.budget as f64).round() as u64;
                    let c = self.c_star[r.pair][r.problem - 1];
                    r.best_at(at).map(|v| 100.0 * (v - c) / c)
                });
                (frac, mean(errs))
            })
            .filter(|(_, e)| e.is_finite())
            .collect()
    }

    /// Per replacing probability: mean evaluations of the baseline and of
    /// `variant`, and their ratio.
    pub fn speedup_by_pr(&self, baseline: Variant, variant: Variant) -> Vec<(f64, f64, f64, f64)> {
        let rows: Vec<SpeedupRow> = self.speedups(baseline).into_iter().filter(|r| r.variant == variant).collect();
        let mut keys: Vec<f64> = rows.iter().map(|r| r.p_r).collect();
        keys.sort_by(f64::total_cmp);
        keys.dedup();
        keys.into_iter()
            .map(|p| {
                let sel = || rows.iter().filter(move |r| r.p_r == p);
                let b = mean(sel().map(|r| r.baseline_evals as f64));
                let v = mean(sel().map(|r| r.evals as f64));
                (p, b, v, b / v)
            })
            .collect()
    }
}
