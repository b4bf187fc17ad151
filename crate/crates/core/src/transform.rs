//! Matching-feature transformation of weakly related problem pairs.
//!
//! Jobs of the two problems are paired greedily by row correlation and both
//! problems are reordered so paired jobs share an index. The reordered
//! problems are equivalent to the originals (solutions map back exactly) but
//! usually sit closer together under the inter-task distance.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::distance::{normalized_distance, row_correlations};
use crate::error::{Error, Result};
use crate::model::{matrix_to_perm, perm_to_matrix, Instance, Permutation, SolutionMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformRecord {
    pub o_p: SolutionMatrix,
    pub o_q: SolutionMatrix,
    pub accepted: bool,
    pub d_before: f64,
    pub d_after: f64,
}

fn same_dims(p: &Instance, q: &Instance) -> Result<()> {
    if (p.n(), p.m()) != (q.n(), q.m()) {
        return Err(Error::dims(format!("{}x{}", p.n(), p.m()), format!("{}x{}", q.n(), q.m())));
    }
    Ok(())
}

/// `mf[i][j]`: correlation between job `i` of `p` and job `j` of `q`.
pub fn matching_feature_matrix(p: &Instance, q: &Instance) -> Result<Array2<f64>> {
    same_dims(p, q)?;
    Ok(row_correlations(&p.spec_matrix(), &q.spec_matrix()))
}

/// Repeatedly pairs the most correlated remaining jobs. The `i`-th pair
/// picked becomes row `i` of both transformed problems.
pub fn greedy_match(mf: &Array2<f64>) -> (SolutionMatrix, SolutionMatrix) {
    let n = mf.nrows();
    assert_eq!(n, mf.ncols(), "matching feature matrix must be square");
    let mut row_used = vec![false; n];
    let mut col_used = vec![false; n];
    let mut o_p = Vec::with_capacity(n);
    let mut o_q = Vec::with_capacity(n);
    for _ in 0..n {
        let mut best: Option<(f64, usize, usize)> = None;
        for r in (0..n).filter(|&r| !row_used[r]) {
            for c in (0..n).filter(|&c| !col_used[c]) {
                let v = mf[[r, c]];
                if best.is_none_or(|(b, _, _)| v > b) {
                    best = Some((v, r, c));
                }
            }
        }
        let (_, r, c) = best.expect("a free cell remains");
        row_used[r] = true;
        col_used[c] = true;
        o_p.push(r);
        o_q.push(c);
    }
    (
        SolutionMatrix::from_cols(o_p).expect("each row picked once"),
        SolutionMatrix::from_cols(o_q).expect("each column picked once"),
    )
}

/// Transforms both problems and keeps the result only if it brings them
/// strictly closer.
pub fn transform_pair(p: &Instance, q: &Instance) -> Result<(Instance, Instance, TransformRecord)> {
    same_dims(p, q)?;
    let d_before = normalized_distance(&p.spec_matrix(), &q.spec_matrix())?.normalized;
    let (o_p, o_q) = greedy_match(&matching_feature_matrix(p, q)?);
    let p_new = p.row_transform(&o_p)?;
    let q_new = q.row_transform(&o_q)?;
    let d_after = normalized_distance(&p_new.spec_matrix(), &q_new.spec_matrix())?.normalized;
    if d_after < d_before {
        let rec = TransformRecord { o_p, o_q, accepted: true, d_before, d_after };
        Ok((p_new, q_new, rec))
    } else {
        let id = SolutionMatrix::identity(p.n());
        let rec = TransformRecord { o_p: id.clone(), o_q: id, accepted: false, d_before, d_after };
        Ok((p.clone(), q.clone(), rec))
    }
}

/// Maps a solution of `O·P` back to a solution of `P` with the same value.
pub fn inverse_map_solution(perm_t: &Permutation, o: &SolutionMatrix) -> Result<Permutation> {
    if perm_t.len() != o.n() {
        return Err(Error::dims(o.n(), perm_t.len()));
    }
    Ok(matrix_to_perm(&(&perm_to_matrix(perm_t) * o)))
}
