use rand::Rng;

use crate::error::{Error, Result};
use crate::model::Permutation;

/// Successor of `last` in `reference` among jobs not yet enrolled, scanning
/// cyclically.
fn proposal(reference: &[usize], pos: &[usize], last: usize, enrolled: &[bool]) -> usize {
    let n = reference.len();
    let start = pos[last];
    (1..=n).map(|k| reference[(start + k) % n]).find(|&j| !enrolled[j]).expect("a job remains")
}

/// Builds a trial left to right. Both references propose the job following
/// the last one placed; agreeing votes are taken, disagreements are settled
/// by a fair coin. The better reference should be passed first.
pub fn solution_combination<R: Rng + ?Sized>(pi1: &Permutation, pi2: &Permutation, rng: &mut R) -> Result<Permutation> {
    if pi1.len() != pi2.len() {
        return Err(Error::dims(pi1.len(), pi2.len()));
    }
    let n = pi1.len();
    if n == 0 {
        return Ok(pi1.clone());
    }
    let (a, b) = (pi1.as_slice(), pi2.as_slice());
    let (pa, pb) = (pi1.positions(), pi2.positions());
    let mut enrolled = vec![false; n];
    let mut out = Vec::with_capacity(n);
    out.push(a[0]);
    enrolled[a[0]] = true;
    while out.len() < n {
        let last = out[out.len() - 1];
        let c1 = proposal(a, &pa, last, &enrolled);
        let c2 = proposal(b, &pb, last, &enrolled);
        let pick = if c1 == c2 || rng.random_bool(0.5) { c1 } else { c2 };
        enrolled[pick] = true;
        out.push(pick);
    }
    Ok(Permutation::new_unchecked(out))
}

/// Removes the element at the later of `i`, `j` and reinserts it in front of
/// the earlier one.
pub fn insert_move(seq: &mut [usize], i: usize, j: usize) {
    let (lo, hi) = if i < j { (i, j) } else { (j, i) };
    seq[lo..=hi].rotate_right(1);
}

/// Two distinct positions drawn uniformly.
pub fn random_positions<R: Rng + ?Sized>(n: usize, rng: &mut R) -> (usize, usize) {
    let i = rng.random_range(0..n);
    let mut j = rng.random_range(0..n - 1);
    if j >= i {
        j += 1;
    }
    (i, j)
}

pub fn insert_neighbor<R: Rng + ?Sized>(pi: &Permutation, rng: &mut R) -> Result<Permutation> {
    if pi.len() < 2 {
        return Err(Error::arg("an insert move needs at least two jobs"));
    }
    let mut s = pi.as_slice().to_vec();
    let (i, j) = random_positions(s.len(), rng);
    insert_move(&mut s, i, j);
    Ok(Permutation::new_unchecked(s))
}
