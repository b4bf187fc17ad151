use ndarray::Array2;
use rand::Rng;

use crate::model::Instance;
use crate::rng::rng_from_seed;

/// Every permutation of `0..n` in lexicographic order.
pub fn all_perms(n: usize) -> Vec<Vec<usize>> {
    fn rec(cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if cur.len() == used.len() {
            out.push(cur.clone());
            return;
        }
        for j in 0..used.len() {
            if !used[j] {
                used[j] = true;
                cur.push(j);
                rec(cur, used, out);
                cur.pop();
                used[j] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

pub fn rand_matrix(n: usize, m: usize, seed: u64) -> Array2<f64> {
    let mut rng = rng_from_seed(seed);
    Array2::from_shape_fn((n, m), |_| rng.random_range(1..100) as f64)
}

pub fn rand_inst(n: usize, m: usize, seed: u64) -> Instance {
    Instance::makespan(rand_matrix(n, m, seed)).unwrap()
}

/// Brute-force optimum over all permutations.
pub fn optimum(inst: &Instance) -> (f64, Vec<usize>) {
    let mut row = vec![0.0; inst.m()];
    all_perms(inst.n())
        .into_iter()
        .map(|p| (inst.sequence_value(&p, &mut row), p))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .unwrap()
}
