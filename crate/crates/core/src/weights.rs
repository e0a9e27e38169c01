//! Heat-kernel weights on tuples and the truncated clique skeletons built
//! from them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{HodgeError, Result};
use crate::manifolds::{heat_kernel, wrap, Manifold, PointCloud};
use crate::skeleton::ComplexSkeleton;
use crate::tuple::{binomial, factorial, IndexTuple};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    /// The manifold's exact heat kernel.
    Exact,
    /// Ambient Gaussian (4πt)^{−d/2} exp(−|x−y|²/4t) in the standard flat
    /// embedding. Provided for experimentation only; nothing in this crate
    /// makes accuracy claims about it.
    Gaussian,
}

/// Evaluator for k_t(x, y).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelModel {
    pub manifold: Manifold,
    pub kind: KernelKind,
    pub t: f64,
}

impl KernelModel {
    pub fn exact(manifold: Manifold, t: f64) -> Result<Self> {
        Self::new(manifold, KernelKind::Exact, t)
    }

    pub fn gaussian(manifold: Manifold, t: f64) -> Result<Self> {
        Self::new(manifold, KernelKind::Gaussian, t)
    }

    pub fn new(manifold: Manifold, kind: KernelKind, t: f64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(HodgeError::NonPositiveTime(t));
        }
        Ok(KernelModel { manifold, kind, t })
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        match self.kind {
            KernelKind::Exact => heat_kernel(self.manifold, x, y, self.t).expect("t validated"),
            KernelKind::Gaussian => {
                // each unit circle factor embeds with radius 1/2π
                let r2 = 1.0 / (4.0 * PI * PI);
                let sq: f64 = x.iter().zip(y).map(|(a, b)| 2.0 * r2 * (1.0 - (2.0 * PI * wrap(a - b)).cos())).sum();
                let d = self.manifold.dim() as f64;
                (4.0 * PI * self.t).powf(-d / 2.0) * (-sq / (4.0 * self.t)).exp()
            }
        }
    }

    /// Dense symmetric matrix of k_t(x_i, x_j) over a cloud.
    pub fn matrix(&self, cloud: &PointCloud) -> Result<KernelMatrix> {
        if cloud.manifold() != self.manifold {
            return Err(HodgeError::Invalid(format!(
                "kernel for the {} applied to a cloud on the {}",
                self.manifold,
                cloud.manifold()
            )));
        }
        let n = cloud.len();
        let mut values = vec![0.0; n * n];
        values.par_chunks_mut(n.max(1)).enumerate().for_each(|(i, row)| {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.eval(cloud.point(i.min(j)), cloud.point(i.max(j)));
            }
        });
        Ok(KernelMatrix { n, t: self.t, values })
    }
}

/// Pairwise kernel values of a point cloud.
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    n: usize,
    t: f64,
    values: Vec<f64>,
}

impl KernelMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    /// Sum of k over unordered pairs with k ≥ `threshold` (and k > 0).
    pub fn retained_mass(&self, threshold: f64) -> f64 {
        (0..self.n)
            .flat_map(|i| (i + 1..self.n).map(move |j| (i, j)))
            .map(|(i, j)| self.get(i, j))
            .filter(|&k| keeps_edge(k, threshold))
            .sum()
    }

    /// The largest threshold whose retained pairwise mass is at least
    /// `fraction` of the total.
    pub fn threshold_for_mass_fraction(&self, fraction: f64) -> Result<f64> {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(HodgeError::Invalid(format!("mass fraction {fraction}")));
        }
        let mut pairs: Vec<f64> =
            (0..self.n).flat_map(|i| (i + 1..self.n).map(move |j| (i, j))).map(|(i, j)| self.get(i, j)).collect();
        if pairs.is_empty() {
            return Err(HodgeError::TooFewPoints { needed: 2, got: self.n });
        }
        pairs.sort_by(|a, b| b.total_cmp(a));
        let total: f64 = pairs.iter().sum();
        let mut acc = 0.0;
        for &k in &pairs {
            acc += k;
            if acc >= fraction * total {
                return Ok(k);
            }
        }
        Ok(0.0)
    }
}

#[inline]
fn keeps_edge(k: f64, threshold: f64) -> bool {
    k >= threshold && k > 0.0
}

/// Which pairs become edges, and how far up the clique complex goes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationPolicy {
    /// Pairs with k_t(x_i, x_j) ≥ threshold are edges (ties included).
    pub threshold: f64,
    pub max_level: usize,
}

impl TruncationPolicy {
    /// τ = 0: every pair is an edge.
    pub fn complete(max_level: usize) -> Self {
        TruncationPolicy { threshold: 0.0, max_level }
    }

    pub fn new(threshold: f64, max_level: usize) -> Result<Self> {
        if !(threshold >= 0.0 && threshold.is_finite()) {
            return Err(HodgeError::Invalid(format!("threshold {threshold}")));
        }
        Ok(TruncationPolicy { threshold, max_level })
    }

    pub fn is_complete(&self) -> bool {
        self.threshold == 0.0
    }
}

/// k_{i₀⋯i_ℓ} = (1/C(n,ℓ+1)) (ℓ!/(2t)^ℓ) (1/(ℓ+1)) Σ_a Π_{b≠a} k_t(x_{i_a}, x_{i_b}).
pub fn heat_weight(tuple: &[usize], cloud: &PointCloud, kernel: &KernelModel) -> Result<f64> {
    let n = cloud.len();
    if tuple.is_empty() || tuple.len() > n {
        return Err(HodgeError::TooFewPoints { needed: tuple.len().max(1), got: n });
    }
    if let Some(&index) = tuple.iter().find(|&&i| i >= n) {
        return Err(HodgeError::IndexOutOfRange { index, n });
    }
    Ok(heat_weight_with(tuple, n, kernel.t, |a, b| kernel.eval(cloud.point(a), cloud.point(b))))
}

/// [`heat_weight`] with kernel values read from a precomputed matrix.
pub fn heat_weight_from_matrix(tuple: &[usize], kmat: &KernelMatrix) -> f64 {
    heat_weight_with(tuple, kmat.n, kmat.t, |a, b| kmat.get(a, b))
}

#[inline]
fn heat_weight_with<K: Fn(usize, usize) -> f64>(tuple: &[usize], n: usize, t: f64, k: K) -> f64 {
    let arity = tuple.len();
    let ell = arity - 1;
    let mut avg = 0.0;
    for a in 0..arity {
        let mut prod = 1.0;
        for b in 0..arity {
            if b != a {
                prod *= k(tuple[a], tuple[b]);
            }
        }
        avg += prod;
    }
    avg /= arity as f64;
    avg * factorial(ell) / ((2.0 * t).powi(ell as i32) * binomial(n, arity))
}

/// The graph of pairs that survive a threshold, stored as sorted
/// higher-index neighbour lists.
#[derive(Debug, Clone)]
pub struct ThresholdGraph {
    forward: Vec<Vec<usize>>,
}

impl ThresholdGraph {
    pub fn new(kmat: &KernelMatrix, threshold: f64) -> Self {
        let n = kmat.n;
        let forward = (0..n)
            .into_par_iter()
            .map(|i| (i + 1..n).filter(|&j| keeps_edge(kmat.get(i, j), threshold)).collect())
            .collect();
        ThresholdGraph { forward }
    }

    pub fn n(&self) -> usize {
        self.forward.len()
    }

    pub fn edge_count(&self) -> usize {
        self.forward.iter().map(Vec::len).sum()
    }

    /// Calls `visit` on every (level+1)-clique whose smallest vertex is `first`,
    /// in lexicographic order.
    pub fn for_each_clique_from<F: FnMut(&[usize])>(&self, first: usize, level: usize, mut visit: F) {
        let mut stack = vec![first];
        if level == 0 {
            visit(&stack);
            return;
        }
        self.extend(&mut stack, &self.forward[first], level, &mut visit);
    }

    fn extend<F: FnMut(&[usize])>(
        &self,
        stack: &mut Vec<usize>,
        candidates: &[usize],
        remaining: usize,
        visit: &mut F,
    ) {
        for (pos, &v) in candidates.iter().enumerate() {
            stack.push(v);
            if remaining == 1 {
                visit(stack);
            } else {
                let next = intersect_sorted(&candidates[pos + 1..], &self.forward[v]);
                self.extend(stack, &next, remaining - 1, visit);
            }
            stack.pop();
        }
    }

    /// All (level+1)-cliques in lexicographic order.
    pub fn cliques(&self, level: usize) -> Vec<IndexTuple> {
        (0..self.n())
            .into_par_iter()
            .map(|i| {
                let mut out = Vec::new();
                self.for_each_clique_from(i, level, |c| out.push(IndexTuple::new_unchecked(c.to_vec())));
                out
            })
            .flatten()
            .collect()
    }
}

fn intersect_sorted(a: &[usize], b: &[usize]) -> Vec<usize> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// Clique complex of the thresholded kernel graph with heat weights.
///
/// A threshold above every pairwise value leaves only the vertices; the
/// levels above 0 are then present but empty.
pub fn build_skeleton(cloud: &PointCloud, kernel: &KernelModel, policy: &TruncationPolicy) -> Result<ComplexSkeleton> {
    let kmat = kernel.matrix(cloud)?;
    build_skeleton_from_matrix(&kmat, policy)
}

pub fn build_skeleton_from_matrix(kmat: &KernelMatrix, policy: &TruncationPolicy) -> Result<ComplexSkeleton> {
    let n = kmat.n;
    if n < policy.max_level + 1 {
        return Err(HodgeError::TooFewPoints { needed: policy.max_level + 1, got: n });
    }
    let graph = ThresholdGraph::new(kmat, policy.threshold);
    let mut levels: Vec<(Vec<IndexTuple>, Vec<f64>)> = Vec::with_capacity(policy.max_level + 1);
    for ell in 0..=policy.max_level {
        let candidates = graph.cliques(ell);
        let weights: Vec<f64> = candidates.par_iter().map(|t| heat_weight_from_matrix(t.indices(), kmat)).collect();
        let prev = levels.last();
        let (tuples, weights): (Vec<IndexTuple>, Vec<f64>) = candidates
            .into_iter()
            .zip(weights)
            // an underflowed weight drops the tuple, and then its cofaces
            .filter(|(t, w)| {
                *w > 0.0 && prev.is_none_or(|(lower, _)| (0..t.len()).all(|j| lower.binary_search(&t.face(j)).is_ok()))
            })
            .unzip();
        levels.push((tuples, weights));
    }
    Ok(ComplexSkeleton::from_sorted_levels(n, levels))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VertexWeightMode {
    /// k_i = 1, making ℒ₀ the unnormalized graph Laplacian D − K.
    Unit,
    /// k_i = d_i = Σ_j k_ij, making ℒ₀ the random-walk Laplacian I − D⁻¹K.
    Degree,
}

/// Vertex weights derived from the level-1 weights, in level-0 order.
pub fn degree_weights(skel: &ComplexSkeleton, mode: VertexWeightMode) -> Result<Vec<f64>> {
    let vertices = skel.level(0)?;
    let edges = skel.level(1)?;
    match mode {
        VertexWeightMode::Unit => Ok(vec![1.0; vertices.len()]),
        VertexWeightMode::Degree => {
            let mut deg = vec![0.0; skel.n()];
            for (e, w) in edges.iter() {
                deg[e.indices()[0]] += w;
                deg[e.indices()[1]] += w;
            }
            vertices
                .tuples()
                .iter()
                .map(|v| {
                    let i = v.indices()[0];
                    if deg[i] > 0.0 {
                        Ok(deg[i])
                    } else {
                        Err(HodgeError::IsolatedVertex(i))
                    }
                })
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifolds::sample_uniform;
    use crate::tuple::combinations;

    #[test]
    fn vertex_and_edge_weights() {
        let cloud = sample_uniform(Manifold::Circle, 7, 5);
        let k = KernelModel::exact(Manifold::Circle, 0.03).unwrap();
        for i in 0..7 {
            assert!((heat_weight(&[i], &cloud, &k).unwrap() - 1.0 / 7.0).abs() < 1e-16);
        }
        let kt = k.eval(cloud.point(2), cloud.point(5));
        let w = heat_weight(&[2, 5], &cloud, &k).unwrap();
        assert!((w - kt / (21.0 * 0.06)).abs() < 1e-14 * w);
        // doubling t halves the (2t)^ℓ prefactor at ℓ = 1
        let k2 = KernelModel::exact(Manifold::Circle, 0.06).unwrap();
        let ratio = heat_weight_with(&[2, 5], 7, 0.06, |_, _| kt) / heat_weight_with(&[2, 5], 7, 0.03, |_, _| kt);
        assert_eq!(ratio, 0.5);
        assert!(heat_weight(&[2, 5], &cloud, &k2).unwrap() > 0.0);
    }

    #[test]
    fn weights_are_permutation_invariant() {
        let cloud = sample_uniform(Manifold::Torus, 6, 11);
        let k = KernelModel::exact(Manifold::Torus, 0.05).unwrap();
        let base = heat_weight(&[0, 3, 4, 5], &cloud, &k).unwrap();
        for p in [[3, 0, 5, 4], [5, 4, 3, 0], [4, 5, 0, 3]] {
            let w = heat_weight(&p, &cloud, &k).unwrap();
            assert!((w - base).abs() <= 1e-14 * base);
        }
        assert!(KernelModel::exact(Manifold::Circle, 0.0).is_err());
    }

    #[test]
    fn complete_and_empty_thresholds() {
        let cloud = sample_uniform(Manifold::Circle, 8, 1);
        let k = KernelModel::exact(Manifold::Circle, 0.02).unwrap();
        let full = build_skeleton(&cloud, &k, &TruncationPolicy::complete(3)).unwrap();
        for ell in 0..=3 {
            assert_eq!(full.level(ell).unwrap().len(), combinations(8, ell + 1).len());
        }
        let kmat = k.matrix(&cloud).unwrap();
        let max = (0..8).flat_map(|i| (i + 1..8).map(move |j| (i, j))).map(|(i, j)| kmat.get(i, j)).fold(0.0, f64::max);
        let empty = build_skeleton(&cloud, &k, &TruncationPolicy::new(max * 1.01, 2).unwrap()).unwrap();
        assert_eq!(empty.level(0).unwrap().len(), 8);
        assert!(empty.level(1).unwrap().is_empty());
        assert!(empty.level(2).unwrap().is_empty());
    }

    #[test]
    fn threshold_between_second_and_third_pair() {
        let cloud = PointCloud::from_coords(Manifold::Circle, vec![0.0, 0.1, 0.35, 0.6], None).unwrap();
        let k = KernelModel::exact(Manifold::Circle, 0.01).unwrap();
        let kmat = k.matrix(&cloud).unwrap();
        let mut vals: Vec<f64> =
            (0..4).flat_map(|i| (i + 1..4).map(move |j| (i, j))).map(|(i, j)| kmat.get(i, j)).collect();
        vals.sort_by(|a, b| b.total_cmp(a));
        let tau = 0.5 * (vals[1] + vals[2]);
        let s = build_skeleton(&cloud, &k, &TruncationPolicy::new(tau, 2).unwrap()).unwrap();
        assert_eq!(s.level(1).unwrap().len(), 2);
        assert!(s.level(2).unwrap().is_empty());
    }

    #[test]
    fn truncated_skeletons_are_downward_closed() {
        for seed in 0..20 {
            let n = 6 + (seed as usize % 15);
            let cloud = sample_uniform(Manifold::Torus, n, seed);
            let k = KernelModel::exact(Manifold::Torus, 0.02).unwrap();
            let kmat = k.matrix(&cloud).unwrap();
            let tau = kmat.threshold_for_mass_fraction(0.7).unwrap();
            let s = build_skeleton_from_matrix(&kmat, &TruncationPolicy::new(tau, 3).unwrap()).unwrap();
            s.verify_downward_closed().unwrap();
            // each level is exactly the clique set
            let g = ThresholdGraph::new(&kmat, tau);
            for ell in 0..=3 {
                let brute: Vec<IndexTuple> = combinations(n, ell + 1)
                    .into_iter()
                    .filter(|t| {
                        let v = t.indices();
                        v.iter().enumerate().all(|(a, &i)| v[a + 1..].iter().all(|&j| kmat.get(i, j) >= tau))
                    })
                    .collect();
                assert_eq!(g.cliques(ell), brute);
                assert_eq!(s.level(ell).unwrap().tuples(), brute.as_slice());
            }
        }
    }

    #[test]
    fn mass_fraction_threshold() {
        let cloud = sample_uniform(Manifold::Circle, 50, 3);
        let kmat = KernelModel::exact(Manifold::Circle, 0.01).unwrap().matrix(&cloud).unwrap();
        let total = kmat.retained_mass(0.0);
        let tau = kmat.threshold_for_mass_fraction(0.99).unwrap();
        assert!(kmat.retained_mass(tau) >= 0.99 * total);
        assert!(kmat.retained_mass(tau * (1.0 + 1e-9)) < 0.99 * total);
    }

    #[test]
    fn degree_modes() {
        let tri = ComplexSkeleton::complete_unit(3, 1).unwrap();
        assert_eq!(degree_weights(&tri, VertexWeightMode::Degree).unwrap(), vec![2.0; 3]);
        assert_eq!(degree_weights(&tri, VertexWeightMode::Unit).unwrap(), vec![1.0; 3]);
        let t = |v: Vec<usize>| IndexTuple::new(v).unwrap();
        let lonely = ComplexSkeleton::from_levels(
            3,
            vec![vec![(t(vec![0]), 1.0), (t(vec![1]), 1.0), (t(vec![2]), 1.0)], vec![(t(vec![0, 1]), 1.0)]],
        )
        .unwrap();
        assert!(matches!(degree_weights(&lonely, VertexWeightMode::Degree), Err(HodgeError::IsolatedVertex(2))));
    }

    #[test]
    fn gaussian_extension_basics() {
        let g = KernelModel::gaussian(Manifold::Torus, 0.01).unwrap();
        let (x, y) = ([0.1, 0.2], [0.8, 0.3]);
        assert_eq!(g.eval(&x, &y), g.eval(&y, &x));
        assert!(g.eval(&x, &y) > 0.0);
        assert!(g.eval(&x, &x) > g.eval(&x, &y));
    }
}
