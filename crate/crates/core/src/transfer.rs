//! Knowledge exchanged between the two searches, and the voting rule that
//! decides when an exchange happens.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{matrix_to_perm, perm_to_matrix, Evaluator, Instance, Permutation, SolutionMatrix};
use crate::search::heuristics::best_insertion;

/// Running tally of transfer (`v1`) and no-transfer (`v2`) votes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VotingState {
    pub v1: u64,
    pub v2: u64,
}

impl VotingState {
    /// Votes so that the share of refusals tracks `d`; ties favour transfer.
    pub fn decide(&mut self, d: f64) -> Result<bool> {
        if !(0.0..=1.0).contains(&d) {
            return Err(Error::arg(format!("distance {d} outside [0, 1]")));
        }
        let total = (self.v1 + self.v2 + 1) as f64;
        let fire = (self.v2 as f64 / total - d).abs() <= ((self.v2 + 1) as f64 / total - d).abs();
        if fire {
            self.v1 += 1;
        } else {
            self.v2 += 1;
        }
        Ok(fire)
    }
}

pub fn adaptive_decision(state: VotingState, d: f64) -> Result<(bool, VotingState)> {
    let mut s = state;
    let fire = s.decide(d)?;
    Ok((fire, s))
}

/// The permutation matrix that carries `x_init` to `x_best`.
pub fn solution_evolution_operator(x_init: &SolutionMatrix, x_best: &SolutionMatrix) -> Result<SolutionMatrix> {
    if x_init.n() != x_best.n() {
        return Err(Error::dims(x_init.n(), x_best.n()));
    }
    Ok(x_best * &x_init.transpose())
}

/// Applies a source search's evolution operator to a target solution.
pub fn apply_solution_evolution(o_pi: &SolutionMatrix, target_best: &Permutation) -> Result<Permutation> {
    if o_pi.n() != target_best.len() {
        return Err(Error::dims(o_pi.n(), target_best.len()));
    }
    Ok(matrix_to_perm(&(o_pi * &perm_to_matrix(target_best))))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvarianceProfile {
    /// `h[job]`: share of other jobs whose relative order with `job` agrees
    /// between the two solutions.
    pub h: Vec<f64>,
    /// Number of jobs to remove and reinsert.
    pub pt: usize,
}

pub fn invariance_index(source_best: &Permutation, target_best: &Permutation) -> Result<InvarianceProfile> {
    let n = source_best.len();
    if target_best.len() != n {
        return Err(Error::dims(n, target_best.len()));
    }
    if n < 2 {
        return Err(Error::arg("the invariance index needs at least two jobs"));
    }
    let (pa, pb) = (source_best.positions(), target_best.positions());
    let mut agree = vec![0usize; n];
    for i in 0..n {
        for j in i + 1..n {
            if (pa[i] < pa[j]) == (pb[i] < pb[j]) {
                agree[i] += 1;
                agree[j] += 1;
            }
        }
    }
    let h: Vec<f64> = agree.iter().map(|&a| a as f64 / (n - 1) as f64).collect();
    let stable = h.iter().filter(|&&v| v > 0.5).count();
    let pt = if n < 8 { (n / 2).max(1) } else { stable.max(4).min(n / 2) };
    Ok(InvarianceProfile { h, pt })
}

/// Jobs to strip from the target solution, in reinsertion order (lowest
/// invariance first, lower job index first on ties).
pub fn non_invariance_set(profile: &InvarianceProfile) -> Vec<usize> {
    let mut jobs: Vec<usize> = (0..profile.h.len()).collect();
    jobs.sort_by(|&a, &b| profile.h[a].total_cmp(&profile.h[b]).then(a.cmp(&b)));
    jobs.truncate(profile.pt);
    jobs
}

/// Strips the least stable jobs from `target_best` and greedily reinserts
/// them, billing every scored position to `ev`.
pub fn partial_solution_transfer_with(
    ev: &mut Evaluator<'_>,
    source_best: &Permutation,
    target_best: &Permutation,
) -> Result<(Permutation, f64)> {
    if target_best.len() != ev.instance().n() {
        return Err(Error::dims(ev.instance().n(), target_best.len()));
    }
    let profile = invariance_index(source_best, target_best)?;
    let removed = non_invariance_set(&profile);
    let mut out = vec![false; target_best.len()];
    for &j in &removed {
        out[j] = true;
    }
    let mut seq: Vec<usize> = target_best.as_slice().iter().copied().filter(|&j| !out[j]).collect();
    let mut value = f64::INFINITY;
    for &job in &removed {
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
    Ok((Permutation::new_unchecked(seq), value))
}

pub fn partial_solution_transfer(
    source_best: &Permutation,
    target_best: &Permutation,
    target: &Instance,
) -> Result<Permutation> {
    let mut ev = Evaluator::new(target);
    partial_solution_transfer_with(&mut ev, source_best, target_best).map(|(p, _)| p)
}

/// The source's best solution, reused verbatim as a target trial.
pub fn complete_solution_transfer(source_best: &Permutation, target_n: usize) -> Result<Permutation> {
    if source_best.len() != target_n {
        return Err(Error::dims(target_n, source_best.len()));
    }
    Ok(source_best.clone())
}
