//! Two-problem scatter search with adaptive knowledge transfer.
//!
//! Each problem runs its own scatter search (population, reference set,
//! pairwise combination, annealing of the best new trial) with its own
//! evaluation budget. Between iterations the searches may hand each other
//! solutions; a voting rule driven by the inter-task distance decides, per
//! knowledge type, whether a hand-over happens.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::distance::{augment_dimensions, inter_task_distance, DistanceReport};
use crate::error::{Error, Result};
use crate::model::{
    evaluate, perm_to_matrix, Convergence, Evaluator, Instance, Permutation, SolutionMatrix,
};
use crate::rng::{derive_seed, rng_from_seed, SearchRng};
use crate::search::anneal::{Annealer, SAParams};
use crate::search::combine::solution_combination;
use crate::search::heuristics::diversify;
use crate::search::refset::{pairs, ReferenceSet};
use crate::transfer::{
    apply_solution_evolution, partial_solution_transfer_with, solution_evolution_operator, VotingState,
};
use crate::transform::{inverse_map_solution, transform_pair, TransformRecord};

/// Serialized by name, e.g. `"mtco-p"` or `"mtco-dfixed=0.7"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Variant {
    Mtco,
    Stss,
    /// Partial-solution transfer only.
    MtcoP,
    /// Complete-solution transfer only.
    MtcoC,
    /// Solution-evolution transfer only.
    MtcoE,
    /// All transfers, voting against a fixed distance instead of the
    /// measured one.
    MtcoDfixed(f64),
    /// All transfers, no problem transformation.
    MtcoNoPt,
}

impl Variant {
    fn modalities(&self) -> &'static [Modality] {
        match self {
            Variant::Stss => &[],
            Variant::MtcoP => &[Modality::Partial],
            Variant::MtcoC => &[Modality::Complete],
            Variant::MtcoE => &[Modality::Evolution],
            Variant::Mtco | Variant::MtcoDfixed(_) | Variant::MtcoNoPt => {
                &[Modality::Complete, Modality::Partial, Modality::Evolution]
            }
        }
    }

    fn transforms(&self) -> bool {
        !matches!(self, Variant::Stss | Variant::MtcoNoPt)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Variant::Mtco => f.write_str("mtco"),
            Variant::Stss => f.write_str("stss"),
            Variant::MtcoP => f.write_str("mtco-p"),
            Variant::MtcoC => f.write_str("mtco-c"),
            Variant::MtcoE => f.write_str("mtco-e"),
            Variant::MtcoDfixed(d) => write!(f, "mtco-dfixed={d}"),
            Variant::MtcoNoPt => f.write_str("mtco-nopt"),
        }
    }
}

impl From<Variant> for String {
    fn from(v: Variant) -> Self {
        v.to_string()
    }
}

impl TryFrom<String> for Variant {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        Ok(match lower.as_str() {
            "mtco" => Variant::Mtco,
            "stss" => Variant::Stss,
            "mtco-p" => Variant::MtcoP,
            "mtco-c" => Variant::MtcoC,
            "mtco-e" => Variant::MtcoE,
            "mtco-nopt" => Variant::MtcoNoPt,
            other => {
                let d = other
                    .strip_prefix("mtco-dfixed=")
                    .or_else(|| other.strip_prefix("mtco-dfixed:"))
                    .ok_or_else(|| Error::arg(format!("unknown variant `{s}`")))?;
                let d: f64 = d.parse().map_err(|_| Error::arg(format!("bad fixed distance in `{s}`")))?;
                if !(0.0..=1.0).contains(&d) {
                    return Err(Error::arg(format!("fixed distance {d} outside [0, 1]")));
                }
                Variant::MtcoDfixed(d)
            }
        })
    }
}

/// How reference-set pairs are consumed per iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SubsetMode {
    /// One pair per iteration, cycling through all pairs.
    #[default]
    RoundRobin,
    /// Every pair, every iteration.
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub n_trial: usize,
    pub rs_size: usize,
    /// Evaluations per problem; `None` means `200·n·(n−1)`.
    pub max_evals: Option<u64>,
    /// Distances above this mark a pair as weakly related.
    pub boundary: f64,
    pub variant: Variant,
    pub rng_seed: u64,
    pub subset_mode: SubsetMode,
    /// Annealing evaluations per improvement call; `None` means `n·(n−1)`.
    pub sa_evals: Option<u64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n_trial: 20,
            rs_size: 12,
            max_evals: None,
            boundary: 0.5,
            variant: Variant::Mtco,
            rng_seed: 0,
            subset_mode: SubsetMode::RoundRobin,
            sa_evals: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_trial < 4 {
            return Err(Error::arg("n_trial must be at least 4"));
        }
        if self.rs_size < 2 {
            return Err(Error::arg("rs_size must be at least 2"));
        }
        if !(0.0..=1.0).contains(&self.boundary) {
            return Err(Error::arg("boundary must lie in [0, 1]"));
        }
        Ok(())
    }

    pub fn budget_for(&self, n: usize) -> u64 {
        self.max_evals.unwrap_or(200 * (n * n.saturating_sub(1)) as u64).max(1)
    }

    fn sa_budget_for(&self, n: usize) -> u64 {
        self.sa_evals.unwrap_or((n * n.saturating_sub(1)) as u64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Modality {
    Complete,
    Partial,
    Evolution,
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Modality::Complete => "complete",
            Modality::Partial => "partial",
            Modality::Evolution => "evolution",
        })
    }
}

/// One voting decision on knowledge flowing into a problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferEvent {
    pub modality: Modality,
    /// 1-based problem indices.
    pub from: usize,
    pub to: usize,
    pub fired: bool,
    /// Receiver's evaluation count when the decision was taken.
    pub eval_stamp: u64,
}

/// Everything recorded about one problem's search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    /// `(evaluations used, best-so-far value)` at each improvement.
    pub convergence: Convergence,
    /// Best solution in the original problem's job numbering.
    pub best: Permutation,
    pub best_value: f64,
    pub evals: u64,
    /// Decisions on knowledge received by this problem.
    pub transfers: Vec<TransferEvent>,
    pub distance: Option<DistanceReport>,
    pub transform: Option<TransformRecord>,
}

impl RunTrace {
    pub fn fired(&self) -> impl Iterator<Item = &TransferEvent> {
        self.transfers.iter().filter(|t| t.fired)
    }

    /// Evaluations needed to reach `target` or better, if it was reached.
    pub fn evals_to_reach(&self, target: f64) -> Option<u64> {
        self.convergence.iter().find(|(_, v)| *v <= target).map(|(e, _)| *e)
    }
}

/// Seed used for problem `slot` (0 or 1) of a two-problem run.
pub fn slot_seed(seed: u64, slot: usize) -> u64 {
    derive_seed(seed, &[slot as u64])
}

struct Task<'a> {
    ev: Evaluator<'a>,
    rs: ReferenceSet,
    annealer: Annealer,
    rng: SearchRng,
    pairs: Vec<(usize, usize)>,
    cursor: usize,
    sa_budget: u64,
    subset_mode: SubsetMode,
    /// Best solution when the reference set was built; anchors the
    /// evolution operator.
    anchor: Permutation,
    votes: [VotingState; 3],
    log: Vec<TransferEvent>,
}

impl<'a> Task<'a> {
    fn start(inst: &'a Instance, cfg: &RunConfig, budget: u64, seed: u64) -> Result<Self> {
        let mut ev = Evaluator::with_budget(inst, budget);
        let mut rng = rng_from_seed(seed);
        let pop = diversify(&mut ev, cfg.n_trial, &mut rng)?;
        let rs = ReferenceSet::from_candidates(
            cfg.rs_size,
            pop.into_iter().map(|(s, v)| (Permutation::new_unchecked(s), v)),
        );
        let anchor = rs
            .best()
            .map(|b| b.0.clone())
            .unwrap_or_else(|| Permutation::identity(inst.n()));
        let pairs = if rs.len() >= 2 { pairs(rs.len())? } else { Vec::new() };
        Ok(Self {
            ev,
            rs,
            annealer: Annealer::new(SAParams::for_instance(inst))?,
            rng,
            pairs,
            cursor: 0,
            sa_budget: cfg.sa_budget_for(inst.n()),
            subset_mode: cfg.subset_mode,
            anchor,
            votes: [VotingState::default(); 3],
            log: Vec::new(),
        })
    }

    fn best(&self) -> (Permutation, f64) {
        match self.ev.best() {
            Some((v, s)) => (Permutation::new_unchecked(s.to_vec()), v),
            None => (self.anchor.clone(), f64::INFINITY),
        }
    }

    fn done(&self) -> bool {
        self.ev.exhausted() || self.rs.len() < 2
    }

    fn combination_trials(&mut self) -> Vec<(Permutation, f64)> {
        let picks: Vec<(usize, usize)> = match self.subset_mode {
            SubsetMode::Full => self.pairs.clone(),
            SubsetMode::RoundRobin => {
                let p = self.pairs[self.cursor % self.pairs.len()];
                self.cursor += 1;
                vec![p]
            }
        };
        let mut out = Vec::with_capacity(picks.len());
        for (i, j) in picks {
            let (a, b) = (self.rs.get(i).0.clone(), self.rs.get(j).0.clone());
            let child = solution_combination(&a, &b, &mut self.rng).expect("equal lengths");
            let Some(v) = self.ev.try_value(child.as_slice()) else { break };
            out.push((child, v));
        }
        out
    }

    fn transfer_trials(&mut self, source: &Snapshot, d: f64, modalities: &[Modality], from: usize, to: usize) -> Vec<(Permutation, f64)> {
        let mut out = Vec::new();
        for &m in modalities {
            if self.ev.exhausted() {
                break;
            }
            let fired = self.votes[m as usize].decide(d).expect("distance validated");
            self.log.push(TransferEvent { modality: m, from, to, fired, eval_stamp: self.ev.count() });
            if !fired {
                continue;
            }
            let target_best = self.best().0;
            let trial = match m {
                Modality::Complete => self.ev.try_value(source.best.as_slice()).map(|v| (source.best.clone(), v)),
                Modality::Partial => {
                    let (p, v) = partial_solution_transfer_with(&mut self.ev, &source.best, &target_best)
                        .expect("equal lengths");
                    v.is_finite().then_some((p, v))
                }
                Modality::Evolution => {
                    let trial = apply_solution_evolution(&source.evolution, &target_best).expect("equal lengths");
                    self.ev.try_value(trial.as_slice()).map(|v| (trial, v))
                }
            };
            out.extend(trial);
        }
        out
    }

    fn improve_and_update(&mut self, mut trials: Vec<(Permutation, f64)>) {
        let Some(start) = trials.iter().min_by(|a, b| a.1.total_cmp(&b.1)).cloned() else { return };
        let budget = self.sa_budget.min(self.ev.remaining());
        if budget > 0 {
            let (seq, v) = self.annealer.run(&mut self.ev, start.0.as_slice(), start.1, budget, &mut self.rng);
            trials.push((Permutation::new_unchecked(seq), v));
        }
        let mut changed = false;
        for (p, v) in trials {
            changed |= self.rs.insert(p, v);
        }
        if changed && self.rs.len() != self.pairs.len() {
            self.pairs = pairs(self.rs.len()).unwrap_or_default();
        }
    }

    fn snapshot(&self) -> Snapshot {
        let best = self.best().0;
        let evolution = solution_evolution_operator(&perm_to_matrix(&self.anchor), &perm_to_matrix(&best))
            .expect("equal lengths");
        Snapshot { best, evolution }
    }
}

struct Snapshot {
    best: Permutation,
    evolution: SolutionMatrix,
}

fn finish(task: Task<'_>, original: &Instance, o: Option<&SolutionMatrix>) -> Result<RunTrace> {
    let (best_t, searched_value) = task.best();
    let mut best = match o {
        Some(o) => inverse_map_solution(&best_t, o)?,
        None => best_t,
    };
    let mut best_value = searched_value;
    if best.len() != original.n() {
        // drop zero-padded virtual jobs
        best = Permutation::new_unchecked(best.into_vec().into_iter().filter(|&j| j < original.n()).collect());
        best_value = evaluate(original, &best)?.value;
    }
    Ok(RunTrace {
        convergence: task.ev.trace().clone(),
        best,
        best_value,
        evals: task.ev.count(),
        transfers: task.log,
        distance: None,
        transform: None,
    })
}

/// Single-problem scatter search, seeded directly by `cfg.rng_seed`.
pub fn run_stss(inst: &Instance, cfg: &RunConfig) -> Result<RunTrace> {
    cfg.validate()?;
    let mut task = Task::start(inst, cfg, cfg.budget_for(inst.n()), cfg.rng_seed)?;
    while !task.done() {
        let trials = task.combination_trials();
        task.improve_and_update(trials);
    }
    finish(task, inst, None)
}

/// Solves both problems together. Returns one trace per problem.
pub fn run_mtco(p1: &Instance, p2: &Instance, cfg: &RunConfig) -> Result<(RunTrace, RunTrace)> {
    cfg.validate()?;
    let (a, b) = augment_dimensions(p1, p2)?;
    let report = inter_task_distance(&a, &b, false)?;
    let mut d = report.normalized;
    let mut transform = None;
    let (a, b) = if cfg.variant.transforms() && d > cfg.boundary {
        let (ta, tb, rec) = transform_pair(&a, &b)?;
        if rec.accepted {
            d = rec.d_after;
        }
        transform = Some(rec);
        (ta, tb)
    } else {
        (a, b)
    };
    if let Variant::MtcoDfixed(d0) = cfg.variant {
        d = d0;
    }
    let modalities = cfg.variant.modalities();
    let n = a.n();
    let budget = cfg.budget_for(n);
    // one evaluation per problem is held back for a last exchange of bests
    let reserve = modalities.contains(&Modality::Complete) && d < 1.0;
    let mut tasks = [
        Task::start(&a, cfg, budget, slot_seed(cfg.rng_seed, 0))?,
        Task::start(&b, cfg, budget, slot_seed(cfg.rng_seed, 1))?,
    ];
    if reserve {
        for t in tasks.iter_mut() {
            t.ev.set_limit(budget.saturating_sub(1));
        }
    }
    while tasks.iter().any(|t| !t.done()) {
        let snaps = [tasks[0].snapshot(), tasks[1].snapshot()];
        for (k, task) in tasks.iter_mut().enumerate() {
            if task.done() {
                continue;
            }
            let mut trials = task.combination_trials();
            trials.extend(task.transfer_trials(&snaps[1 - k], d, modalities, 2 - k, k + 1));
            task.improve_and_update(trials);
        }
    }
    if reserve {
        let snaps = [tasks[0].snapshot(), tasks[1].snapshot()];
        for (k, task) in tasks.iter_mut().enumerate() {
            task.ev.set_limit(budget);
            task.transfer_trials(&snaps[1 - k], d, &[Modality::Complete], 2 - k, k + 1);
        }
    }
    let [ta, tb] = tasks;
    let o_p = transform.as_ref().filter(|r| r.accepted).map(|r| r.o_p.clone());
    let o_q = transform.as_ref().filter(|r| r.accepted).map(|r| r.o_q.clone());
    let mut r1 = finish(ta, p1, o_p.as_ref())?;
    let mut r2 = finish(tb, p2, o_q.as_ref())?;
    for r in [&mut r1, &mut r2] {
        r.distance = Some(report.clone());
        r.transform = transform.clone();
    }
    Ok((r1, r2))
}

/// Runs one of the single-knowledge ablations.
pub fn run_ablation(p1: &Instance, p2: &Instance, cfg: &RunConfig) -> Result<(RunTrace, RunTrace)> {
    if !matches!(cfg.variant, Variant::MtcoP | Variant::MtcoC | Variant::MtcoE) {
        return Err(Error::arg(format!("{} is not an ablation variant", cfg.variant)));
    }
    run_mtco(p1, p2, cfg)
}

/// Dispatches on the configured variant; STSS solves the two problems
/// independently with the per-slot seeds a joint run would use.
pub fn run_pair(p1: &Instance, p2: &Instance, cfg: &RunConfig) -> Result<(RunTrace, RunTrace)> {
    if cfg.variant == Variant::Stss {
        let c1 = RunConfig { rng_seed: slot_seed(cfg.rng_seed, 0), ..cfg.clone() };
        let c2 = RunConfig { rng_seed: slot_seed(cfg.rng_seed, 1), ..cfg.clone() };
        return Ok((run_stss(p1, &c1)?, run_stss(p2, &c2)?));
    }
    run_mtco(p1, p2, cfg)
}
