//! Constructive heuristics used to seed the scatter search.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{Evaluator, Instance, Permutation};

/// Tries `job` at every position of `seq` and keeps the earliest best one.
///
/// Returns the chosen position and the resulting value, or `None` when the
/// budget ran out before any position was scored. With a single candidate
/// position nothing is evaluated and the value is `NaN`.
pub fn best_insertion(ev: &mut Evaluator<'_>, seq: &[usize], job: usize) -> Option<(usize, f64)> {
    if seq.is_empty() {
        return Some((0, f64::NAN));
    }
    let mut trial = Vec::with_capacity(seq.len() + 1);
    let mut best: Option<(usize, f64)> = None;
    for pos in 0..=seq.len() {
        trial.clear();
        trial.extend_from_slice(&seq[..pos]);
        trial.push(job);
        trial.extend_from_slice(&seq[pos..]);
        let Some(v) = ev.try_value(&trial) else { break };
        if best.is_none_or(|(_, b)| v < b) {
            best = Some((pos, v));
        }
    }
    best
}

/// Inserts `jobs` one by one into `seq` at their best positions. Once the
/// budget is spent, remaining jobs are appended unevaluated.
///
/// The returned value is the last complete evaluation, or `INFINITY` if the
/// final sequence was never scored.
pub fn insert_all(ev: &mut Evaluator<'_>, mut seq: Vec<usize>, jobs: &[usize]) -> (Vec<usize>, f64) {
    let mut value = f64::INFINITY;
    for &job in jobs {
        match best_insertion(ev, &seq, job) {
            Some((pos, v)) => {
                seq.insert(pos, job);
                value = v;
            }
            None => {
                seq.push(job);
                value = f64::INFINITY;
            }
        }
    }
    if value.is_nan() {
        value = ev.try_value(&seq).unwrap_or(f64::INFINITY);
    }
    (seq, value)
}

/// Jobs sorted by descending `key`, lower index first on ties.
fn descending_by(inst: &Instance, key: impl Fn(usize) -> f64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..inst.n()).collect();
    order.sort_by(|&a, &b| key(b).total_cmp(&key(a)).then(a.cmp(&b)));
    order
}

/// Initial job orders for insertion-based construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InsertionOrder {
    /// Descending total processing time (plain NEH).
    TotalTime,
    /// Descending time on the first machine.
    FirstMachine,
    /// Descending time on the last machine.
    LastMachine,
}

pub fn insertion_order(inst: &Instance, order: InsertionOrder) -> Vec<usize> {
    let p = inst.p();
    let last = inst.m() - 1;
    match order {
        InsertionOrder::TotalTime => descending_by(inst, |j| p.row(j).sum()),
        InsertionOrder::FirstMachine => descending_by(inst, |j| p[[j, 0]]),
        InsertionOrder::LastMachine => descending_by(inst, |j| p[[j, last]]),
    }
}

pub fn neh_with(ev: &mut Evaluator<'_>, order: InsertionOrder) -> (Vec<usize>, f64) {
    let jobs = insertion_order(ev.instance(), order);
    insert_all(ev, Vec::with_capacity(jobs.len()), &jobs)
}

pub fn neh(inst: &Instance) -> Permutation {
    let mut ev = Evaluator::new(inst);
    Permutation::new_unchecked(neh_with(&mut ev, InsertionOrder::TotalTime).0)
}

/// Johnson's rule for the two-machine flowshop with times `a` then `b`.
pub fn johnson(a: &[f64], b: &[f64]) -> Vec<usize> {
    let (mut first, mut second): (Vec<usize>, Vec<usize>) = (0..a.len()).partition(|&j| a[j] <= b[j]);
    first.sort_by(|&x, &y| a[x].total_cmp(&a[y]).then(x.cmp(&y)));
    second.sort_by(|&x, &y| b[y].total_cmp(&b[x]).then(x.cmp(&y)));
    first.extend(second);
    first
}

/// Campbell–Dudek–Smith: best of the `m−1` Johnson surrogates.
pub fn cds_with(ev: &mut Evaluator<'_>) -> Result<(Vec<usize>, f64)> {
    let inst = ev.instance();
    let (n, m) = (inst.n(), inst.m());
    if m < 2 {
        return Err(Error::arg("CDS needs at least two machines"));
    }
    let p = inst.p();
    let mut best: Option<(Vec<usize>, f64)> = None;
    for k in 1..m {
        let a: Vec<f64> = (0..n).map(|j| (0..k).map(|i| p[[j, i]]).sum()).collect();
        let b: Vec<f64> = (0..n).map(|j| (m - k..m).map(|i| p[[j, i]]).sum()).collect();
        let seq = johnson(&a, &b);
        let Some(v) = ev.try_value(&seq) else {
            return Ok(best.unwrap_or((seq, f64::INFINITY)));
        };
        if best.as_ref().is_none_or(|(_, bv)| v < *bv) {
            best = Some((seq, v));
        }
    }
    Ok(best.expect("m >= 2"))
}

pub fn cds(inst: &Instance) -> Result<Permutation> {
    let mut ev = Evaluator::new(inst);
    cds_with(&mut ev).map(|(s, _)| Permutation::new_unchecked(s))
}

/// Randomized insertion: a random job order followed by best-position
/// insertion of each job.
pub fn random_insertion<R: Rng + ?Sized>(ev: &mut Evaluator<'_>, rng: &mut R) -> (Vec<usize>, f64) {
    let mut jobs: Vec<usize> = (0..ev.instance().n()).collect();
    jobs.shuffle(rng);
    insert_all(ev, Vec::with_capacity(jobs.len()), &jobs)
}

/// Initial population: NEH, CDS and the two alternative-order NEH variants,
/// then randomized insertion for the remaining slots. Duplicates are
/// redrawn; when the instance has fewer than `n_trial` distinct sequences
/// the population is smaller.
pub fn diversify<R: Rng + ?Sized>(
    ev: &mut Evaluator<'_>,
    n_trial: usize,
    rng: &mut R,
) -> Result<Vec<(Vec<usize>, f64)>> {
    if n_trial < 4 {
        return Err(Error::arg("the initial population needs at least four slots"));
    }
    let mut pop: Vec<(Vec<usize>, f64)> = Vec::with_capacity(n_trial);
    let push = |pop: &mut Vec<(Vec<usize>, f64)>, cand: (Vec<usize>, f64)| {
        if !pop.iter().any(|(s, _)| *s == cand.0) {
            pop.push(cand);
        }
    };
    push(&mut pop, neh_with(ev, InsertionOrder::TotalTime));
    if ev.instance().m() >= 2 {
        push(&mut pop, cds_with(ev)?);
    }
    push(&mut pop, neh_with(ev, InsertionOrder::FirstMachine));
    push(&mut pop, neh_with(ev, InsertionOrder::LastMachine));
    let mut attempts = 0;
    while pop.len() < n_trial && attempts < 10 * n_trial && !ev.exhausted() {
        push(&mut pop, random_insertion(ev, rng));
        attempts += 1;
    }
    Ok(pop)
}

pub fn diversification_generation(inst: &Instance, n_trial: usize, rng_seed: u64) -> Result<Vec<Permutation>> {
    let mut ev = Evaluator::new(inst);
    let mut rng = crate::rng::rng_from_seed(rng_seed);
    Ok(diversify(&mut ev, n_trial, &mut rng)?.into_iter().map(|(s, _)| Permutation::new_unchecked(s)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::evaluate;
    use crate::testutil::{optimum, rand_inst};
    use ndarray::array;

    fn value(inst: &Instance, seq: &[usize]) -> f64 {
        evaluate(inst, &Permutation::new(seq.to_vec()).unwrap()).unwrap().value
    }

    #[test]
    fn neh_single_job() {
        let inst = Instance::makespan(array![[3.0, 4.0]]).unwrap();
        assert_eq!(neh(&inst).as_slice(), &[0]);
    }

    #[test]
    fn neh_is_deterministic_and_near_optimal() {
        for seed in 0..20 {
            let n = 3 + (seed as usize % 4);
            let inst = rand_inst(n, 4, seed);
            let a = neh(&inst);
            assert_eq!(a, neh(&inst));
            let opt = optimum(&inst).0;
            let v = value(&inst, a.as_slice());
            assert!(v >= opt && v <= 1.2 * opt, "seed {seed}: {v} vs {opt}");
        }
    }

    #[test]
    fn insertion_value_matches_evaluation() {
        let inst = rand_inst(8, 5, 3);
        let mut ev = Evaluator::new(&inst);
        let (seq, v) = neh_with(&mut ev, InsertionOrder::TotalTime);
        assert_eq!(v, value(&inst, &seq));
        assert_eq!(ev.count(), (2..=8).sum::<usize>() as u64);
    }

    #[test]
    fn johnson_is_optimal_for_two_machines() {
        for seed in 0..30 {
            let n = 2 + (seed as usize % 5);
            let inst = rand_inst(n, 2, 100 + seed);
            let c = cds(&inst).unwrap();
            assert_eq!(value(&inst, c.as_slice()), optimum(&inst).0, "seed {seed}");
        }
    }

    #[test]
    fn cds_beats_each_surrogate() {
        let inst = rand_inst(9, 5, 7);
        let best = value(&inst, cds(&inst).unwrap().as_slice());
        let p = inst.p();
        for k in 1..5 {
            let a: Vec<f64> = (0..9).map(|j| (0..k).map(|i| p[[j, i]]).sum()).collect();
            let b: Vec<f64> = (0..9).map(|j| (5 - k..5).map(|i| p[[j, i]]).sum()).collect();
            assert!(best <= value(&inst, &johnson(&a, &b)));
        }
        assert!(cds(&rand_inst(4, 1, 1)).is_err());
    }

    #[test]
    fn population_is_distinct_and_seeded() {
        let inst = rand_inst(20, 5, 11);
        let a = diversification_generation(&inst, 20, 5).unwrap();
        assert_eq!(a.len(), 20);
        let mut uniq = a.clone();
        uniq.sort();
        uniq.dedup();
        assert_eq!(uniq.len(), 20);
        assert_eq!(a, diversification_generation(&inst, 20, 5).unwrap());
        assert_eq!(a[0], neh(&inst));
        assert!(diversification_generation(&inst, 3, 5).is_err());
    }

    #[test]
    fn tiny_instances_give_smaller_populations() {
        let inst = rand_inst(3, 2, 1);
        let pop = diversification_generation(&inst, 20, 1).unwrap();
        assert!(pop.len() <= 6);
    }

    #[test]
    fn exhausted_budget_still_yields_permutations() {
        let inst = rand_inst(10, 3, 2);
        let mut ev = Evaluator::with_budget(&inst, 5);
        let (seq, _) = neh_with(&mut ev, InsertionOrder::TotalTime);
        assert!(Permutation::new(seq).is_ok());
        assert_eq!(ev.count(), 5);
    }
}
