//! Index tuples and the small amount of combinatorics the operators need.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{HodgeError, Result};

/// A strictly increasing list of point indices: the canonical representative
/// of an unordered (ℓ+1)-tuple of distinct points.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IndexTuple(Vec<usize>);

impl IndexTuple {
    /// Wraps indices that are already strictly increasing.
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(HodgeError::NotCanonical(indices));
        }
        Ok(IndexTuple(indices))
    }

    pub(crate) fn new_unchecked(indices: Vec<usize>) -> Self {
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        IndexTuple(indices)
    }

    /// Sorts an arbitrary tuple. Returns `None` when an index repeats (the
    /// alternating extension is zero there), otherwise the canonical tuple and
    /// the sign of the sorting permutation.
    pub fn canonicalize(raw: &[usize]) -> Option<(IndexTuple, f64)> {
        let mut v = raw.to_vec();
        let sign = sort_with_sign(&mut v)?;
        Some((IndexTuple(v), sign))
    }

    /// Level ℓ of the tuple, i.e. its length minus one.
    pub fn level(&self) -> usize {
        self.0.len() - 1
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    /// The face obtained by dropping position `j`.
    pub fn face(&self, j: usize) -> IndexTuple {
        let mut v = Vec::with_capacity(self.0.len() - 1);
        v.extend_from_slice(&self.0[..j]);
        v.extend_from_slice(&self.0[j + 1..]);
        IndexTuple(v)
    }

    /// Inserts `vertex` and returns the new tuple with the position it landed at.
    /// `None` if the vertex is already present.
    pub fn insert(&self, vertex: usize) -> Option<(IndexTuple, usize)> {
        match self.0.binary_search(&vertex) {
            Ok(_) => None,
            Err(pos) => {
                let mut v = self.0.clone();
                v.insert(pos, vertex);
                Some((IndexTuple(v), pos))
            }
        }
    }
}

impl fmt::Debug for IndexTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl AsRef<[usize]> for IndexTuple {
    fn as_ref(&self) -> &[usize] {
        &self.0
    }
}

/// Insertion sort counting transpositions. `None` on a repeated entry.
pub(crate) fn sort_with_sign(v: &mut [usize]) -> Option<f64> {
    let mut swaps = 0usize;
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && v[j - 1] > v[j] {
            v.swap(j - 1, j);
            swaps += 1;
            j -= 1;
        }
        if j > 0 && v[j - 1] == v[j] {
            return None;
        }
    }
    if v.windows(2).any(|w| w[0] == w[1]) {
        return None;
    }
    Some(if swaps.is_multiple_of(2) { 1.0 } else { -1.0 })
}

/// Exact factorial as a float, valid for `k <= 20`.
pub fn factorial(k: usize) -> f64 {
    assert!(k <= 20, "factorial({k}) overflows u64");
    (1..=k as u64).product::<u64>() as f64
}

/// Binomial coefficient C(n, k), exact while it fits in 128 bits.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k as u128 {
        acc = acc * (n as u128 - i) / (i + 1);
    }
    acc as f64
}

/// All permutations of `0..k` paired with their signs, in lexicographic order.
pub fn signed_permutations(k: usize) -> Vec<(Vec<usize>, f64)> {
    let mut out = Vec::new();
    let mut perm: Vec<usize> = (0..k).collect();
    loop {
        let mut scratch = perm.clone();
        let sign = sort_with_sign(&mut scratch).expect("permutation has distinct entries");
        out.push((perm.clone(), sign));
        // next lexicographic permutation
        let Some(i) = (1..k).rev().find(|&i| perm[i - 1] < perm[i]) else {
            break;
        };
        let j = (i..k).rev().find(|&j| perm[j] > perm[i - 1]).unwrap();
        perm.swap(i - 1, j);
        perm[i..].reverse();
    }
    out
}

/// Every strictly increasing `k`-subset of `0..n`, in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<IndexTuple> {
    let mut out = Vec::new();
    if k == 0 || k > n {
        return out;
    }
    let mut c: Vec<usize> = (0..k).collect();
    loop {
        out.push(IndexTuple(c.clone()));
        let Some(i) = (0..k).rev().find(|&i| c[i] < n - k + i) else {
            break;
        };
        c[i] += 1;
        for j in i + 1..k {
            c[j] = c[j - 1] + 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonicalize_tracks_sign() {
        let (t, s) = IndexTuple::canonicalize(&[1, 0]).unwrap();
        assert_eq!(t.indices(), &[0, 1]);
        assert_eq!(s, -1.0);
        // a 3-cycle is even
        let (t, s) = IndexTuple::canonicalize(&[2, 0, 1]).unwrap();
        assert_eq!(t.indices(), &[0, 1, 2]);
        assert_eq!(s, 1.0);
        assert!(IndexTuple::canonicalize(&[3, 1, 3]).is_none());
        assert!(IndexTuple::canonicalize(&[0, 0]).is_none());
    }

    #[test]
    fn permutation_signs_sum_to_zero() {
        for k in 2..=6 {
            let perms = signed_permutations(k);
            assert_eq!(perms.len() as f64, factorial(k));
            assert_eq!(perms.iter().map(|p| p.1).sum::<f64>(), 0.0);
        }
        assert_eq!(signed_permutations(1), vec![(vec![0], 1.0)]);
    }

    #[test]
    fn binomials_and_combinations_agree() {
        for n in 1..9 {
            for k in 1..=n {
                assert_eq!(combinations(n, k).len() as f64, binomial(n, k));
            }
        }
        assert_eq!(binomial(3000, 3), 4_495_501_000.0);
        assert_eq!(binomial(4, 5), 0.0);
    }

    #[test]
    fn face_and_insert() {
        let t = IndexTuple::new(vec![1, 4, 7]).unwrap();
        assert_eq!(t.face(1).indices(), &[1, 7]);
        assert_eq!(t.insert(5).unwrap(), (IndexTuple::new(vec![1, 4, 5, 7]).unwrap(), 2));
        assert!(t.insert(4).is_none());
        assert!(IndexTuple::new(vec![2, 2]).is_err());
    }
}
