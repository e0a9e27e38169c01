//! Weighted, downward-closed families of index tuples.

use serde::{Deserialize, Serialize};
use std::collections::HashMap;

use crate::error::{HodgeError, Result};
use crate::tuple::{combinations, IndexTuple};

/// The level-ℓ tuples of a skeleton with their weights, in lexicographic order.
#[derive(Debug, Clone, Default)]
pub struct SkeletonLevel {
    tuples: Vec<IndexTuple>,
    weights: Vec<f64>,
    index: HashMap<IndexTuple, usize>,
}

impl SkeletonLevel {
    fn from_sorted(tuples: Vec<IndexTuple>, weights: Vec<f64>) -> Self {
        let index = tuples.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        SkeletonLevel { tuples, weights, index }
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn tuples(&self) -> &[IndexTuple] {
        &self.tuples
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn position(&self, tuple: &IndexTuple) -> Option<usize> {
        self.index.get(tuple).copied()
    }

    pub fn weight(&self, tuple: &IndexTuple) -> Option<f64> {
        self.position(tuple).map(|i| self.weights[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&IndexTuple, f64)> {
        self.tuples.iter().zip(self.weights.iter().copied())
    }
}

/// A weighted complex on `n` points: for each level ℓ ≤ ℓ_max a set of
/// strictly increasing (ℓ+1)-tuples carrying positive weights k_{i₀⋯i_ℓ}.
///
/// Every constructor enforces downward closure and positivity. A level that
/// exists but holds no tuples is distinct from a level beyond `max_level`:
/// the former is an honest empty set, the latter is reported as missing.
#[derive(Debug, Clone)]
pub struct ComplexSkeleton {
    n: usize,
    levels: Vec<SkeletonLevel>,
}

impl ComplexSkeleton {
    /// Builds a skeleton from explicit tuples per level. Tuples are sorted
    /// into canonical order; duplicates are rejected.
    pub fn from_levels(n: usize, levels: Vec<Vec<(IndexTuple, f64)>>) -> Result<Self> {
        if levels.is_empty() {
            return Err(HodgeError::Invalid("a skeleton needs at least level 0".into()));
        }
        let mut built = Vec::with_capacity(levels.len());
        for (ell, mut entries) in levels.into_iter().enumerate() {
            for (t, w) in &entries {
                if t.len() != ell + 1 {
                    return Err(HodgeError::TupleLength { expected: ell + 1, got: t.len() });
                }
                if let Some(&i) = t.indices().iter().find(|&&i| i >= n) {
                    return Err(HodgeError::IndexOutOfRange { index: i, n });
                }
                if !(*w > 0.0 && w.is_finite()) {
                    return Err(HodgeError::NonPositiveWeight { tuple: t.indices().to_vec(), weight: *w });
                }
            }
            entries.sort_by(|a, b| a.0.cmp(&b.0));
            if let Some(w) = entries.windows(2).find(|w| w[0].0 == w[1].0) {
                return Err(HodgeError::Invalid(format!("duplicate tuple {:?}", w[0].0)));
            }
            let (tuples, weights) = entries.into_iter().unzip();
            built.push(SkeletonLevel::from_sorted(tuples, weights));
        }
        let skel = ComplexSkeleton { n, levels: built };
        skel.verify_downward_closed()?;
        Ok(skel)
    }

    /// Assembles a skeleton from levels already known to be canonical and
    /// downward closed (clique enumeration output).
    pub(crate) fn from_sorted_levels(n: usize, levels: Vec<(Vec<IndexTuple>, Vec<f64>)>) -> Self {
        let levels = levels.into_iter().map(|(t, w)| SkeletonLevel::from_sorted(t, w)).collect();
        ComplexSkeleton { n, levels }
    }

    /// The complete complex on `n` points through `max_level`, with weights
    /// supplied per tuple.
    pub fn complete<F>(n: usize, max_level: usize, weight: F) -> Result<Self>
    where
        F: Fn(&IndexTuple) -> f64,
    {
        let levels = (0..=max_level)
            .map(|ell| {
                combinations(n, ell + 1)
                    .into_iter()
                    .map(|t| {
                        let w = weight(&t);
                        (t, w)
                    })
                    .collect()
            })
            .collect();
        Self::from_levels(n, levels)
    }

    /// Complete complex with unit weights everywhere.
    pub fn complete_unit(n: usize, max_level: usize) -> Result<Self> {
        Self::complete(n, max_level, |_| 1.0)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn max_level(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn level(&self, ell: usize) -> Result<&SkeletonLevel> {
        self.levels.get(ell).ok_or(HodgeError::MissingLevel(ell))
    }

    pub fn has_level(&self, ell: usize) -> bool {
        ell < self.levels.len()
    }

    pub fn weight(&self, tuple: &IndexTuple) -> Option<f64> {
        self.levels.get(tuple.level())?.weight(tuple)
    }

    /// Replaces the level-0 weights (one per vertex present at level 0).
    pub fn with_vertex_weights(&self, weights: &[f64]) -> Result<Self> {
        let level0 = &self.levels[0];
        if weights.len() != level0.len() {
            return Err(HodgeError::FunctionLength { expected: level0.len(), got: weights.len() });
        }
        for (t, &w) in level0.tuples.iter().zip(weights) {
            if !(w > 0.0 && w.is_finite()) {
                return Err(HodgeError::NonPositiveWeight { tuple: t.indices().to_vec(), weight: w });
            }
        }
        let mut out = self.clone();
        out.levels[0].weights = weights.to_vec();
        Ok(out)
    }

    /// Drops every level above `max_level`.
    pub fn truncated(&self, max_level: usize) -> Self {
        let mut out = self.clone();
        out.levels.truncate(max_level + 1);
        out
    }

    /// Checks by explicit sub-tuple enumeration that every face of every
    /// stored tuple is stored.
    pub fn verify_downward_closed(&self) -> Result<()> {
        for ell in 1..self.levels.len() {
            let below = &self.levels[ell - 1];
            for t in &self.levels[ell].tuples {
                for j in 0..t.len() {
                    let face = t.face(j);
                    if below.position(&face).is_none() {
                        return Err(HodgeError::NotDownwardClosed {
                            tuple: t.indices().to_vec(),
                            face: face.indices().to_vec(),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn to_file(&self) -> SkeletonFile {
        SkeletonFile {
            n: self.n,
            levels: self
                .levels
                .iter()
                .enumerate()
                .map(|(ell, lvl)| LevelFile {
                    level: ell,
                    tuples: lvl.iter().map(|(t, w)| (t.indices().to_vec(), w)).collect(),
                })
                .collect(),
        }
    }

    pub fn from_file(file: SkeletonFile) -> Result<Self> {
        let mut levels: Vec<Vec<(IndexTuple, f64)>> = Vec::new();
        for lf in file.levels {
            if lf.level >= levels.len() {
                levels.resize_with(lf.level + 1, Vec::new);
            }
            for (idx, w) in lf.tuples {
                levels[lf.level].push((IndexTuple::new(idx)?, w));
            }
        }
        Self::from_levels(file.n, levels)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_file())?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_file(serde_json::from_str(s)?)
    }
}

/// On-disk layout: `{"n": .., "levels": [{"level": ℓ, "tuples": [[[i₀, …], w], …]}]}`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SkeletonFile {
    pub n: usize,
    pub levels: Vec<LevelFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct LevelFile {
    pub level: usize,
    pub tuples: Vec<(Vec<usize>, f64)>,
}

/// Small fixtures used throughout the tests and by the CLI.
pub mod fixtures {
    use super::*;

    fn t(v: &[usize]) -> IndexTuple {
        IndexTuple::new(v.to_vec()).expect("fixture tuples are canonical")
    }

    /// Three vertices, three edges, no 2-simplex (level 2 present but empty).
    pub fn hollow_triangle() -> ComplexSkeleton {
        ComplexSkeleton::from_levels(
            3,
            vec![
                vec![(t(&[0]), 1.0), (t(&[1]), 1.0), (t(&[2]), 1.0)],
                vec![(t(&[0, 1]), 1.0), (t(&[0, 2]), 1.0), (t(&[1, 2]), 1.0)],
                vec![],
            ],
        )
        .unwrap()
    }

    /// The hollow triangle plus its 2-simplex, unit weights.
    pub fn filled_triangle() -> ComplexSkeleton {
        ComplexSkeleton::complete_unit(3, 2).unwrap()
    }

    /// Path 0 – 1 – 2 with unit weights.
    pub fn path3() -> ComplexSkeleton {
        ComplexSkeleton::from_levels(
            3,
            vec![
                vec![(t(&[0]), 1.0), (t(&[1]), 1.0), (t(&[2]), 1.0)],
                vec![(t(&[0, 1]), 1.0), (t(&[1, 2]), 1.0)],
                vec![],
            ],
        )
        .unwrap()
    }

    /// Disjoint union, each part placed on the next block of vertex indices.
    pub fn disjoint_union(parts: &[ComplexSkeleton]) -> ComplexSkeleton {
        let top = parts.iter().map(|p| p.max_level()).max().unwrap_or(0);
        let mut levels: Vec<Vec<(IndexTuple, f64)>> = vec![Vec::new(); top + 1];
        let mut offset = 0;
        for p in parts {
            for (ell, lvl) in levels.iter_mut().enumerate().take(p.max_level() + 1) {
                for (tup, w) in p.level(ell).unwrap().iter() {
                    let shifted = tup.indices().iter().map(|i| i + offset).collect();
                    lvl.push((IndexTuple::new(shifted).unwrap(), w));
                }
            }
            offset += p.n();
        }
        ComplexSkeleton::from_levels(offset, levels).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(v: &[usize]) -> IndexTuple {
        IndexTuple::new(v.to_vec()).unwrap()
    }

    #[test]
    fn rejects_missing_face() {
        let err = ComplexSkeleton::from_levels(3, vec![vec![(t(&[0]), 1.0), (t(&[1]), 1.0)], vec![(t(&[0, 2]), 1.0)]])
            .unwrap_err();
        assert!(matches!(err, HodgeError::NotDownwardClosed { .. }));
    }

    #[test]
    fn rejects_bad_weights() {
        let zero = ComplexSkeleton::from_levels(1, vec![vec![(t(&[0]), 0.0)]]);
        assert!(matches!(zero, Err(HodgeError::NonPositiveWeight { .. })));
        let nan = ComplexSkeleton::from_levels(1, vec![vec![(t(&[0]), f64::NAN)]]);
        assert!(nan.is_err());
    }

    #[test]
    fn complete_counts() {
        let s = ComplexSkeleton::complete_unit(6, 3).unwrap();
        assert_eq!(s.level(0).unwrap().len(), 6);
        assert_eq!(s.level(1).unwrap().len(), 15);
        assert_eq!(s.level(2).unwrap().len(), 20);
        assert_eq!(s.level(3).unwrap().len(), 15);
        assert!(matches!(s.level(4), Err(HodgeError::MissingLevel(4))));
    }

    #[test]
    fn json_layout() {
        let s = fixtures::path3();
        let json = s.to_json().unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["n"], 3);
        assert_eq!(v["levels"][1]["level"], 1);
        assert_eq!(v["levels"][1]["tuples"][1][0], serde_json::json!([1, 2]));
        let back = ComplexSkeleton::from_json(&json).unwrap();
        assert_eq!(back.to_file(), s.to_file());
    }

    #[test]
    fn disjoint_union_offsets() {
        let u = fixtures::disjoint_union(&[fixtures::hollow_triangle(), fixtures::hollow_triangle()]);
        assert_eq!(u.n(), 6);
        assert!(u.level(1).unwrap().position(&t(&[3, 5])).is_some());
        assert!(u.level(1).unwrap().position(&t(&[2, 3])).is_none());
    }
}
