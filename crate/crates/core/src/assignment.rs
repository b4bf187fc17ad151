//! Square linear assignment via the O(n³) shortest augmenting path method
//! with row/column potentials.

use ndarray::Array2;

/// Returns `a` with `a[row] = col` minimizing `Σ cost[row][a[row]]`.
///
/// Rows are inserted in index order and each augmenting search scans
/// columns left to right keeping the first strict minimum, so equal-cost
/// optima resolve deterministically.
pub fn min_cost_assignment(cost: &Array2<f64>) -> Vec<usize> {
    let (n, m) = cost.dim();
    assert_eq!(n, m, "assignment matrix must be square");
    if n == 0 {
        return Vec::new();
    }
    let inf = f64::INFINITY;
    // 1-based with column 0 as the virtual source
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[[i0 - 1, j - 1]] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![0; n];
    for j in 1..=n {
        out[owner[j] - 1] = j - 1;
    }
    out
}

/// Maximum-weight counterpart of [`min_cost_assignment`].
pub fn max_weight_assignment(weight: &Array2<f64>) -> Vec<usize> {
    min_cost_assignment(&weight.mapv(|w| -w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    fn cost_of(c: &Array2<f64>, a: &[usize]) -> f64 {
        a.iter().enumerate().map(|(i, &j)| c[[i, j]]).sum()
    }

    fn brute_min(c: &Array2<f64>) -> f64 {
        fn rec(c: &Array2<f64>, row: usize, used: &mut Vec<bool>, acc: f64, best: &mut f64) {
            let n = c.nrows();
            if row == n {
                *best = best.min(acc);
                return;
            }
            for j in 0..n {
                if !used[j] {
                    used[j] = true;
                    rec(c, row + 1, used, acc + c[[row, j]], best);
                    used[j] = false;
                }
            }
        }
        let mut best = f64::INFINITY;
        rec(c, 0, &mut vec![false; c.nrows()], 0.0, &mut best);
        best
    }

    #[test]
    fn classic_example() {
        let c = array![[4.0, 1.0, 3.0], [2.0, 0.0, 5.0], [3.0, 2.0, 2.0]];
        let a = min_cost_assignment(&c);
        assert_eq!(cost_of(&c, &a), 5.0);
    }

    #[test]
    fn identity_weights_give_identity() {
        let w = Array2::from_diag(&ndarray::arr1(&[1.0, 1.0, 1.0, 1.0]));
        assert_eq!(max_weight_assignment(&w), vec![0, 1, 2, 3]);
    }

    proptest! {
        #[test]
        fn matches_brute_force(n in 1usize..=7, seed in any::<u64>()) {
            use rand::Rng;
            let mut rng = crate::rng::rng_from_seed(seed);
            let c = Array2::from_shape_fn((n, n), |_| rng.random_range(-1.0..1.0));
            let a = min_cost_assignment(&c);
            let mut seen = a.clone();
            seen.sort_unstable();
            prop_assert_eq!(seen, (0..n).collect::<Vec<_>>());
            prop_assert!((cost_of(&c, &a) - brute_min(&c)).abs() < 1e-9);
        }
    }
}
