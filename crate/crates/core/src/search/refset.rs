use crate::error::{Error, Result};
use crate::model::Permutation;

/// The `capacity` best distinct solutions seen so far, best first.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSet {
    members: Vec<(Permutation, f64)>,
    capacity: usize,
}

impl ReferenceSet {
    pub fn new(capacity: usize) -> Self {
        Self { members: Vec::with_capacity(capacity + 1), capacity }
    }

    /// Builds from a candidate pool, keeping the best `capacity`.
    pub fn from_candidates(capacity: usize, pool: impl IntoIterator<Item = (Permutation, f64)>) -> Self {
        let mut rs = Self::new(capacity);
        for (p, v) in pool {
            rs.insert(p, v);
        }
        rs
    }

    /// Inserts unless the set is full and `value` does not beat the worst
    /// member, or the permutation is already present. Returns whether the
    /// set changed.
    pub fn insert(&mut self, perm: Permutation, value: f64) -> bool {
        if self.capacity == 0 || !value.is_finite() {
            return false;
        }
        if self.members.len() == self.capacity && value >= self.members[self.members.len() - 1].1 {
            return false;
        }
        if self.contains(&perm) {
            return false;
        }
        // after existing members of equal value
        let at = self.members.partition_point(|(_, v)| *v <= value);
        self.members.insert(at, (perm, value));
        self.members.truncate(self.capacity);
        true
    }

    pub fn contains(&self, perm: &Permutation) -> bool {
        self.members.iter().any(|(p, _)| p == perm)
    }

    pub fn members(&self) -> &[(Permutation, f64)] {
        &self.members
    }

    pub fn get(&self, i: usize) -> &(Permutation, f64) {
        &self.members[i]
    }

    pub fn best(&self) -> Option<&(Permutation, f64)> {
        self.members.first()
    }

    pub fn worst(&self) -> Option<&(Permutation, f64)> {
        self.members.last()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }
}

/// All unordered pairs of member ranks.
pub fn subset_generation(rs: &ReferenceSet) -> Result<Vec<(usize, usize)>> {
    pairs(rs.len())
}

pub(crate) fn pairs(b: usize) -> Result<Vec<(usize, usize)>> {
    if b < 2 {
        return Err(Error::arg("subset generation needs at least two reference solutions"));
    }
    Ok((0..b).flat_map(|i| (i + 1..b).map(move |j| (i, j))).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(seq: &[usize]) -> Permutation {
        Permutation::new(seq.to_vec()).unwrap()
    }

    #[test]
    fn full_set_rejects_worse_and_duplicates() {
        let mut rs = ReferenceSet::new(2);
        assert!(rs.insert(p(&[0, 1, 2]), 5.0));
        assert!(rs.insert(p(&[1, 0, 2]), 3.0));
        assert!(!rs.insert(p(&[2, 1, 0]), 9.0));
        assert!(!rs.insert(p(&[1, 0, 2]), 3.0));
        assert!(!rs.insert(p(&[0, 1, 2]), 1.0));
        assert!(rs.insert(p(&[2, 0, 1]), 4.0));
        let vals: Vec<f64> = rs.members().iter().map(|m| m.1).collect();
        assert_eq!(vals, vec![3.0, 4.0]);
    }

    #[test]
    fn equal_values_distinct_permutations_coexist() {
        let mut rs = ReferenceSet::new(3);
        assert!(rs.insert(p(&[0, 1]), 2.0));
        assert!(rs.insert(p(&[1, 0]), 2.0));
        assert_eq!(rs.len(), 2);
    }

    #[test]
    fn pair_counts() {
        assert_eq!(pairs(12).unwrap().len(), 66);
        assert_eq!(pairs(2).unwrap(), vec![(0, 1)]);
        assert!(pairs(1).is_err());
        let all = pairs(7).unwrap();
        assert!(all.iter().all(|&(i, j)| i < j));
        let mut d = all.clone();
        d.dedup();
        assert_eq!(d.len(), all.len());
    }

    proptest! {
        #[test]
        fn stays_sorted_and_bounded(cap in 1usize..8, ops in prop::collection::vec((0usize..24, 0u8..20), 0..60)) {
            let perms = crate::testutil::all_perms(4);
            let mut rs = ReferenceSet::new(cap);
            for (k, v) in ops {
                rs.insert(Permutation::new(perms[k].clone()).unwrap(), v as f64);
                prop_assert!(rs.len() <= cap);
                prop_assert!(rs.members().windows(2).all(|w| w[0].1 <= w[1].1));
                for (i, a) in rs.members().iter().enumerate() {
                    prop_assert!(rs.members()[i + 1..].iter().all(|b| b.0 != a.0));
                }
            }
        }
    }
}
