use rand::Rng;
use serde::{Deserialize, Serialize};

use super::combine::{insert_move, random_positions};
use crate::error::{Error, Result};
use crate::model::{Convergence, Evaluator, Instance, Permutation};

/// Geometric cooling schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SAParams {
    pub t0: f64,
    pub lambda: f64,
    /// Metropolis steps at each temperature.
    pub steps: u64,
}

impl SAParams {
    /// `T₀` is a tenth of the mean processing time, `λ = 0.9`, and each
    /// temperature level runs `n(n−1)` steps.
    pub fn for_instance(inst: &Instance) -> Self {
        let (n, m) = (inst.n(), inst.m());
        let t0 = inst.total_processing() / (10 * n * m) as f64;
        Self { t0: t0.max(f64::MIN_POSITIVE), lambda: 0.9, steps: ((n * n.saturating_sub(1)) as u64).max(1) }
    }

    pub fn validate(&self) -> Result<()> {
        if self.t0.is_nan() || self.t0 <= 0.0 {
            return Err(Error::arg(format!("initial temperature must be positive, got {}", self.t0)));
        }
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return Err(Error::arg(format!("cooling factor must lie in (0, 1), got {}", self.lambda)));
        }
        if self.steps == 0 {
            return Err(Error::arg("at least one step per temperature is required"));
        }
        Ok(())
    }
}

/// `min(1, exp(−ΔE/T))`.
pub fn acceptance_probability(delta: f64, temperature: f64) -> f64 {
    if delta <= 0.0 {
        1.0
    } else if temperature <= 0.0 {
        0.0
    } else {
        (-delta / temperature).exp()
    }
}

/// Annealing state that survives across calls, so repeated short
/// improvement phases share one cooling schedule.
#[derive(Debug, Clone)]
pub struct Annealer {
    params: SAParams,
    temperature: f64,
    level_steps: u64,
}

impl Annealer {
    pub fn new(params: SAParams) -> Result<Self> {
        params.validate()?;
        Ok(Self { params, temperature: params.t0, level_steps: 0 })
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    /// Random insert-move walk from `start` using at most `budget`
    /// evaluations. Returns the best sequence visited (possibly `start`).
    pub fn run<R: Rng + ?Sized>(
        &mut self,
        ev: &mut Evaluator<'_>,
        start: &[usize],
        start_value: f64,
        budget: u64,
        rng: &mut R,
    ) -> (Vec<usize>, f64) {
        let n = start.len();
        let mut best = (start.to_vec(), start_value);
        if n < 2 {
            return best;
        }
        let mut cur = start.to_vec();
        let mut cur_v = start_value;
        let mut cand = cur.clone();
        for _ in 0..budget {
            cand.copy_from_slice(&cur);
            let (i, j) = random_positions(n, rng);
            insert_move(&mut cand, i, j);
            let Some(v) = ev.try_value(&cand) else { break };
            let delta = v - cur_v;
            if delta <= 0.0 || rng.random::<f64>() < acceptance_probability(delta, self.temperature) {
                std::mem::swap(&mut cur, &mut cand);
                cur_v = v;
                if v < best.1 {
                    best = (cur.clone(), v);
                }
            }
            self.level_steps += 1;
            if self.level_steps == self.params.steps {
                self.level_steps = 0;
                self.temperature *= self.params.lambda;
            }
        }
        best
    }
}

/// Standalone annealing run from `start` with a fresh evaluation budget
/// (the start itself costs one evaluation).
pub fn simulated_annealing<R: Rng + ?Sized>(
    inst: &Instance,
    start: &Permutation,
    params: SAParams,
    budget: u64,
    rng: &mut R,
) -> Result<(Permutation, f64, Convergence)> {
    if budget == 0 {
        return Err(Error::arg("annealing needs a budget of at least one evaluation"));
    }
    if start.len() != inst.n() {
        return Err(Error::dims(inst.n(), start.len()));
    }
    let mut annealer = Annealer::new(params)?;
    let mut ev = Evaluator::with_budget(inst, budget);
    let v0 = ev.try_value(start.as_slice()).expect("budget >= 1");
    let (seq, v) = annealer.run(&mut ev, start.as_slice(), v0, budget - 1, rng);
    Ok((Permutation::new_unchecked(seq), v, ev.trace().clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::evaluate;
    use crate::rng::rng_from_seed;
    use crate::testutil::{optimum, rand_inst};

    #[test]
    fn acceptance_rule() {
        assert_eq!(acceptance_probability(-3.0, 1.0), 1.0);
        assert_eq!(acceptance_probability(0.0, 1.0), 1.0);
        assert_eq!(acceptance_probability(2.0, 0.0), 0.0);
        assert!(acceptance_probability(2.0, 1e-300) == 0.0);
        assert!((acceptance_probability(1.0, 2.0) - (-0.5f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn default_schedule() {
        let inst = rand_inst(5, 4, 1);
        let sa = SAParams::for_instance(&inst);
        assert_eq!(sa.steps, 20);
        assert_eq!(sa.lambda, 0.9);
        assert!((sa.t0 - inst.total_processing() / 200.0).abs() < 1e-12);
        assert!(SAParams { t0: 0.0, ..sa }.validate().is_err());
        assert!(SAParams { lambda: 1.0, ..sa }.validate().is_err());
        assert!(SAParams { steps: 0, ..sa }.validate().is_err());
    }

    #[test]
    fn temperature_drops_once_per_level() {
        let inst = rand_inst(4, 3, 2);
        let params = SAParams::for_instance(&inst);
        let mut a = Annealer::new(params).unwrap();
        let mut ev = Evaluator::new(&inst);
        let start = [0, 1, 2, 3];
        let v = ev.try_value(&start).unwrap();
        a.run(&mut ev, &start, v, 13, &mut rng_from_seed(1));
        assert!((a.temperature() - params.t0 * 0.9).abs() < 1e-12);
        a.run(&mut ev, &start, v, 11, &mut rng_from_seed(1));
        assert!((a.temperature() - params.t0 * 0.81).abs() < 1e-12);
    }

    #[test]
    fn never_worse_than_start_and_monotone_trace() {
        for seed in 0..10 {
            let inst = rand_inst(8, 4, seed);
            let start = Permutation::identity(8);
            let v0 = evaluate(&inst, &start).unwrap().value;
            let (best, v, trace) =
                simulated_annealing(&inst, &start, SAParams::for_instance(&inst), 500, &mut rng_from_seed(seed))
                    .unwrap();
            assert!(v <= v0);
            assert_eq!(evaluate(&inst, &best).unwrap().value, v);
            assert!(trace.windows(2).all(|w| w[1].1 < w[0].1 && w[1].0 > w[0].0));
            assert!(trace.last().unwrap().0 <= 500);
        }
    }

    #[test]
    fn finds_small_optima() {
        let inst = rand_inst(5, 3, 9);
        let (_, v, _) = simulated_annealing(
            &inst,
            &Permutation::identity(5),
            SAParams::for_instance(&inst),
            3000,
            &mut rng_from_seed(4),
        )
        .unwrap();
        assert_eq!(v, optimum(&inst).0);
    }
}
