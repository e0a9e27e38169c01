//! The empirical Dirichlet energy as a U-statistic over (ℓ+1)-subsets of the
//! sample, evaluated exactly or over a truncated tuple set.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::time::Instant;

use crate::error::{HodgeError, Result};
use crate::forms::FunctionOnCloud;
use crate::manifolds::{sample_uniform, Manifold, PointCloud, TestFunction};
use crate::numeric::{det_of, par_ordered_sum};
use crate::skeleton::ComplexSkeleton;
use crate::stats;
use crate::tuple::{binomial, factorial};
use crate::weights::{KernelKind, KernelMatrix, KernelModel, ThresholdGraph};

/// Complete-mode enumeration is refused beyond this many tuples unless the
/// instance is within ℓ ≤ 2, n ≤ 3000.
pub const COMPLETE_TUPLE_CAP: f64 = 1e7;

/// h_t(x₀,…,x_ℓ) = (1/(ℓ+1)) Σ_a Π_{b≠a} (1/t)k_t(x_a,x_b) · det²(f_a(x_b) − f_a(x₀)).
#[derive(Debug, Clone)]
pub struct UStatKernelSpec {
    t: f64,
    functions: Vec<FunctionOnCloud>,
}

impl UStatKernelSpec {
    pub fn new(t: f64, functions: Vec<FunctionOnCloud>) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(HodgeError::NonPositiveTime(t));
        }
        let Some(first) = functions.first() else {
            return Err(HodgeError::NoFunctions);
        };
        if let Some(f) = functions.iter().find(|f| f.len() != first.len()) {
            return Err(HodgeError::FunctionLength { expected: first.len(), got: f.len() });
        }
        Ok(UStatKernelSpec { t, functions })
    }

    /// Restricts closed-form test functions to a cloud.
    pub fn from_test_functions(cloud: &PointCloud, t: f64, fs: &[TestFunction]) -> Result<Self> {
        let functions = fs.iter().map(|f| f.restrict(cloud)).collect::<Result<Vec<_>>>()?;
        Self::new(t, functions)
    }

    pub fn ell(&self) -> usize {
        self.functions.len()
    }

    /// Number of points per tuple, ℓ + 1.
    pub fn order(&self) -> usize {
        self.functions.len() + 1
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn functions(&self) -> &[FunctionOnCloud] {
        &self.functions
    }

    /// h_t at the listed points, in the given (not necessarily sorted) order.
    pub fn evaluate(&self, kernel: &KernelModel, cloud: &PointCloud, points: &[usize]) -> Result<f64> {
        if points.len() != self.order() {
            return Err(HodgeError::TupleLength { expected: self.order(), got: points.len() });
        }
        self.check_cloud(cloud)?;
        if let Some(&index) = points.iter().find(|&&i| i >= cloud.len()) {
            return Err(HodgeError::IndexOutOfRange { index, n: cloud.len() });
        }
        Ok(self.term(points, |a, b| kernel.eval(cloud.point(a), cloud.point(b))))
    }

    fn check_cloud(&self, cloud: &PointCloud) -> Result<()> {
        let n = self.functions[0].len();
        if n != cloud.len() {
            return Err(HodgeError::FunctionLength { expected: cloud.len(), got: n });
        }
        Ok(())
    }

    #[inline]
    fn term<K: Fn(usize, usize) -> f64>(&self, tuple: &[usize], k: K) -> f64 {
        let fs = &self.functions;
        let ell = fs.len();
        let i0 = tuple[0];
        let d = det_of(ell, |a, b| fs[a].at(tuple[b + 1]) - fs[a].at(i0));
        if d == 0.0 {
            return 0.0;
        }
        let inv_t = 1.0 / self.t;
        let mut avg = 0.0;
        for a in 0..=ell {
            let mut prod = 1.0;
            for b in 0..=ell {
                if b != a {
                    prod *= inv_t * k(tuple[a], tuple[b]);
                }
            }
            avg += prod;
        }
        avg / (ell + 1) as f64 * d * d
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateMode {
    Complete,
    Truncated,
}

impl std::fmt::Display for EstimateMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EstimateMode::Complete => "complete",
            EstimateMode::Truncated => "truncated",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub value: f64,
    pub tuple_count: u64,
    pub elapsed_ms: f64,
    pub mode: EstimateMode,
}

/// Which (ℓ+1)-tuples the sum runs over. The normalization is C(n, ℓ+1) in
/// every case.
#[derive(Debug, Clone, Copy)]
pub enum TupleSet<'a> {
    /// Every increasing tuple.
    Complete,
    /// Cliques of the graph of pairs with k_t ≥ threshold (and k_t > 0).
    Threshold(f64),
    /// The level-ℓ tuples of a prebuilt skeleton.
    Skeleton(&'a ComplexSkeleton),
}

impl TupleSet<'_> {
    fn mode(&self) -> EstimateMode {
        match self {
            TupleSet::Complete => EstimateMode::Complete,
            _ => EstimateMode::Truncated,
        }
    }
}

/// U_n(ℓ,t) = (1/C(n,ℓ+1)) Σ h_t over the chosen tuples.
pub fn u_statistic(
    cloud: &PointCloud,
    spec: &UStatKernelSpec,
    kernel: &KernelModel,
    set: TupleSet<'_>,
) -> Result<EstimateResult> {
    let start = Instant::now();
    let n = cloud.len();
    let order = spec.order();
    if n < order {
        return Err(HodgeError::TooFewPoints { needed: order, got: n });
    }
    spec.check_cloud(cloud)?;
    if (kernel.t - spec.t).abs() > 0.0 {
        return Err(HodgeError::Invalid(format!(
            "kernel time {} differs from the estimator time {}",
            kernel.t, spec.t
        )));
    }
    let (sum, count) = match set {
        TupleSet::Complete => {
            let total = binomial(n, order);
            if total > COMPLETE_TUPLE_CAP && !(order <= 3 && n <= 3000) {
                return Err(HodgeError::Unsupported(format!(
                    "complete enumeration of {total:e} tuples; use a truncated tuple set"
                )));
            }
            let kmat = kernel.matrix(cloud)?;
            let sum = par_ordered_sum(n, |i0| {
                let mut acc = 0.0;
                for_each_combination_from(n, i0, order, |t| acc += spec.term(t, |a, b| kmat.get(a, b)));
                acc
            });
            (sum, total as u64)
        }
        TupleSet::Threshold(threshold) => {
            let kmat = kernel.matrix(cloud)?;
            let graph = ThresholdGraph::new(&kmat, threshold);
            sum_over_graph(spec, &kmat, &graph)
        }
        TupleSet::Skeleton(skel) => {
            if skel.n() != n {
                return Err(HodgeError::FunctionLength { expected: skel.n(), got: n });
            }
            let level = skel.level(spec.ell())?;
            let tuples = level.tuples();
            let sum = par_ordered_sum(tuples.len(), |i| {
                spec.term(tuples[i].indices(), |a, b| kernel.eval(cloud.point(a), cloud.point(b)))
            });
            (sum, tuples.len() as u64)
        }
    };
    Ok(EstimateResult {
        value: sum / binomial(n, order),
        tuple_count: count,
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        mode: set.mode(),
    })
}

fn sum_over_graph(spec: &UStatKernelSpec, kmat: &KernelMatrix, graph: &ThresholdGraph) -> (f64, u64) {
    let ell = spec.ell();
    let parts: Vec<(f64, u64)> = (0..graph.n())
        .into_par_iter()
        .map(|i0| {
            let (mut acc, mut count) = (0.0, 0u64);
            graph.for_each_clique_from(i0, ell, |t| {
                acc += spec.term(t, |a, b| kmat.get(a, b));
                count += 1;
            });
            (acc, count)
        })
        .collect();
    let sums: Vec<f64> = parts.iter().map(|p| p.0).collect();
    (crate::numeric::pairwise_sum(&sums), parts.iter().map(|p| p.1).sum())
}

/// Visits the increasing `arity`-tuples of 0..n whose first entry is `first`,
/// lexicographically.
fn for_each_combination_from<F: FnMut(&[usize])>(n: usize, first: usize, arity: usize, mut visit: F) {
    let mut tuple = vec![first];
    fn rec<F: FnMut(&[usize])>(n: usize, tuple: &mut Vec<usize>, arity: usize, visit: &mut F) {
        if tuple.len() == arity {
            visit(tuple);
            return;
        }
        let next = tuple[tuple.len() - 1] + 1;
        for v in next..n {
            tuple.push(v);
            rec(n, tuple, arity, visit);
            tuple.pop();
        }
    }
    rec(n, &mut tuple, arity, &mut visit);
}

/// ⟨ω, ℒ^up_{ℓ−1} ω⟩_n for the empirical form ω = f₁·(δf₂∧…∧δf_ℓ) under heat
/// weights, computed as U_n/(ℓ!·2^ℓ).
pub fn empirical_dirichlet(
    cloud: &PointCloud,
    functions: &[FunctionOnCloud],
    kernel: &KernelModel,
    set: TupleSet<'_>,
) -> Result<EstimateResult> {
    let spec = UStatKernelSpec::new(kernel.t, functions.to_vec())?;
    let ell = spec.ell();
    let mut r = u_statistic(cloud, &spec, kernel, set)?;
    if r.tuple_count == 0 {
        return Err(HodgeError::EmptyLevel(ell));
    }
    r.value /= factorial(ell) * 2f64.powi(ell as i32);
    Ok(r)
}

/// How a sweep picks its tuple set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum Coverage {
    Complete,
    /// Fixed kernel threshold τ.
    Threshold(f64),
    /// Per-cloud τ keeping at least this fraction of the pairwise kernel mass.
    MassFraction(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub manifold: Manifold,
    pub functions: Vec<TestFunction>,
    pub ns: Vec<usize>,
    pub ts: Vec<f64>,
    pub seeds: Vec<u64>,
    pub coverage: Coverage,
    #[serde(default = "default_kernel")]
    pub kernel: KernelKind,
}

fn default_kernel() -> KernelKind {
    KernelKind::Exact
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub t: f64,
    pub seed: u64,
    /// Threshold actually used (0 in complete mode).
    pub threshold: f64,
    pub result: EstimateResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub n: usize,
    pub t: f64,
    pub count: usize,
    pub median: f64,
    pub iqr: f64,
    pub std: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub cells: Vec<CellSummary>,
}

impl SweepTable {
    pub fn cell(&self, n: usize, t: f64) -> Option<&CellSummary> {
        self.cells.iter().find(|c| c.n == n && c.t == t)
    }

    pub fn values(&self, n: usize, t: f64) -> Vec<f64> {
        self.rows.iter().filter(|r| r.n == n && r.t == t).map(|r| r.result.value).collect()
    }
}

/// Runs the estimator on a fresh uniform sample for every (n, t, seed) cell.
/// Rows come back in (n, t, seed) order of the config and depend only on it.
pub fn replicate_sweep(config: &SweepConfig) -> Result<SweepTable> {
    if config.functions.is_empty() {
        return Err(HodgeError::NoFunctions);
    }
    for f in &config.functions {
        f.check(config.manifold)?;
    }
    if config.ns.is_empty() || config.ts.is_empty() || config.seeds.is_empty() {
        return Err(HodgeError::Invalid("sweep grid has an empty axis".into()));
    }
    let mut cells = Vec::new();
    for &n in &config.ns {
        for &t in &config.ts {
            KernelModel::new(config.manifold, config.kernel, t)?;
            for &seed in &config.seeds {
                cells.push((n, t, seed));
            }
        }
    }
    let rows = cells.par_iter().map(|&(n, t, seed)| run_cell(config, n, t, seed)).collect::<Result<Vec<_>>>()?;
    let mut summaries = Vec::new();
    for &n in &config.ns {
        for &t in &config.ts {
            let v: Vec<f64> = rows.iter().filter(|r| r.n == n && r.t == t).map(|r| r.result.value).collect();
            summaries.push(CellSummary {
                n,
                t,
                count: v.len(),
                median: stats::median(&v),
                iqr: stats::iqr(&v),
                std: stats::std_dev(&v),
                mean: stats::mean(&v),
            });
        }
    }
    Ok(SweepTable { rows, cells: summaries })
}

fn run_cell(config: &SweepConfig, n: usize, t: f64, seed: u64) -> Result<SweepRow> {
    let cloud = sample_uniform(config.manifold, n, seed);
    let kernel = KernelModel::new(config.manifold, config.kernel, t)?;
    let spec = UStatKernelSpec::from_test_functions(&cloud, t, &config.functions)?;
    let threshold = match config.coverage {
        Coverage::Complete => 0.0,
        Coverage::Threshold(tau) => tau,
        Coverage::MassFraction(frac) => kernel.matrix(&cloud)?.threshold_for_mass_fraction(frac)?,
    };
    let set = match config.coverage {
        Coverage::Complete => TupleSet::Complete,
        _ => TupleSet::Threshold(threshold),
    };
    let result = empirical_dirichlet(&cloud, spec.functions(), &kernel, set)?;
    Ok(SweepRow { n, t, seed, threshold, result })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::dirichlet_quadratic_form;
    use crate::weights::{build_skeleton, TruncationPolicy};
    use rand::seq::SliceRandom;
    use rand::SeedableRng;

    fn circle_setup(n: usize, seed: u64, t: f64) -> (PointCloud, KernelModel, UStatKernelSpec) {
        let cloud = sample_uniform(Manifold::Circle, n, seed);
        let kernel = KernelModel::exact(Manifold::Circle, t).unwrap();
        let spec = UStatKernelSpec::from_test_functions(&cloud, t, &[TestFunction::cos(&[1])]).unwrap();
        (cloud, kernel, spec)
    }

    #[test]
    fn two_points_by_hand() {
        let (cloud, kernel, spec) = circle_setup(2, 4, 0.03);
        let u = u_statistic(&cloud, &spec, &kernel, TupleSet::Complete).unwrap();
        let f = spec.functions()[0].values();
        let k = kernel.eval(cloud.point(0), cloud.point(1));
        let hand = k / 0.03 * (f[1] - f[0]).powi(2);
        assert!((u.value - hand).abs() <= 1e-14 * hand);
        assert_eq!(u.tuple_count, 1);
        let e = empirical_dirichlet(&cloud, spec.functions(), &kernel, TupleSet::Complete).unwrap();
        assert!((e.value - hand / 2.0).abs() <= 1e-14 * hand);
        assert!(e.value.is_finite());
    }

    #[test]
    fn constant_function_gives_zero() {
        let cloud = sample_uniform(Manifold::Circle, 30, 1);
        let kernel = KernelModel::exact(Manifold::Circle, 0.02).unwrap();
        let spec = UStatKernelSpec::new(0.02, vec![FunctionOnCloud::constant(30, 2.5)]).unwrap();
        assert_eq!(u_statistic(&cloud, &spec, &kernel, TupleSet::Complete).unwrap().value, 0.0);
    }

    #[test]
    fn symmetric_and_nonnegative() {
        let cloud = sample_uniform(Manifold::Torus, 12, 8);
        let kernel = KernelModel::exact(Manifold::Torus, 0.04).unwrap();
        let spec = UStatKernelSpec::from_test_functions(
            &cloud,
            0.04,
            &[TestFunction::cos(&[1, 0]), TestFunction::sin(&[1, 1])],
        )
        .unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let mut pts: Vec<usize> = (0..12).collect();
            pts.shuffle(&mut rng);
            pts.truncate(3);
            let base = spec.evaluate(&kernel, &cloud, &pts).unwrap();
            assert!(base >= 0.0);
            for _ in 0..5 {
                pts.shuffle(&mut rng);
                let v = spec.evaluate(&kernel, &cloud, &pts).unwrap();
                assert!((v - base).abs() <= 1e-12 * base.max(1e-300));
            }
        }
    }

    #[test]
    fn bit_identical_across_thread_counts() {
        let (cloud, kernel, spec) = circle_setup(300, 5, 0.01);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| u_statistic(&cloud, &spec, &kernel, TupleSet::Complete).unwrap().value)
        };
        let one = run(1);
        assert_eq!(one.to_bits(), run(3).to_bits());
        assert_eq!(one.to_bits(), run(8).to_bits());
    }

    #[test]
    fn truncation_increases_towards_complete() {
        let (cloud, kernel, spec) = circle_setup(60, 9, 0.01);
        let complete = u_statistic(&cloud, &spec, &kernel, TupleSet::Complete).unwrap();
        let mut last = 0.0;
        for tau in [10.0, 1.0, 0.1, 1e-3, 1e-6, 1e-12] {
            let r = u_statistic(&cloud, &spec, &kernel, TupleSet::Threshold(tau)).unwrap();
            assert_eq!(r.mode, EstimateMode::Truncated);
            assert!(r.value >= last);
            assert!(r.value <= complete.value * (1.0 + 1e-12));
            last = r.value;
        }
        assert!((last - complete.value).abs() <= 1e-10 * complete.value);
    }

    #[test]
    fn matches_the_forms_path() {
        for (seed, ell) in [(1u64, 1usize), (2, 2), (3, 1), (4, 2)] {
            let n = 14 + seed as usize * 5;
            let cloud = sample_uniform(Manifold::Circle, n, seed);
            let kernel = KernelModel::exact(Manifold::Circle, 0.02).unwrap();
            let fs: Vec<TestFunction> = [TestFunction::cos(&[1]), TestFunction::sin(&[2])][..ell].to_vec();
            let spec = UStatKernelSpec::from_test_functions(&cloud, 0.02, &fs).unwrap();
            let skel = build_skeleton(&cloud, &kernel, &TruncationPolicy::complete(ell)).unwrap();
            let forms = dirichlet_quadratic_form(spec.functions(), &skel).unwrap();
            let u = u_statistic(&cloud, &spec, &kernel, TupleSet::Complete).unwrap();
            let via_u = u.value / (factorial(ell) * 2f64.powi(ell as i32));
            assert!((forms - via_u).abs() <= 1e-10 * forms.abs(), "{forms} vs {via_u}");
            let on_skel = u_statistic(&cloud, &spec, &kernel, TupleSet::Skeleton(&skel)).unwrap();
            assert!((on_skel.value - u.value).abs() <= 1e-12 * u.value);
        }
    }

    #[test]
    fn errors() {
        let (cloud, kernel, spec) = circle_setup(1, 0, 0.01);
        assert!(matches!(
            u_statistic(&cloud, &spec, &kernel, TupleSet::Complete),
            Err(HodgeError::TooFewPoints { needed: 2, got: 1 })
        ));
        let (cloud, kernel, spec) = circle_setup(20, 0, 0.001);
        assert!(matches!(
            empirical_dirichlet(&cloud, spec.functions(), &kernel, TupleSet::Threshold(1e300)),
            Err(HodgeError::EmptyLevel(1))
        ));
    }

    #[test]
    fn sweep_is_deterministic() {
        let config = SweepConfig {
            manifold: Manifold::Circle,
            functions: vec![TestFunction::cos(&[1])],
            ns: vec![40, 80],
            ts: vec![0.05],
            seeds: vec![1, 2, 3],
            coverage: Coverage::Complete,
            kernel: KernelKind::Exact,
        };
        let a = replicate_sweep(&config).unwrap();
        let b = replicate_sweep(&config).unwrap();
        assert_eq!(a.rows.len(), 6);
        for (x, y) in a.rows.iter().zip(&b.rows) {
            assert_eq!(x.result.value.to_bits(), y.result.value.to_bits());
        }
        assert_eq!(a.cells.len(), 2);
        assert_eq!(a.cell(80, 0.05).unwrap().count, 3);
    }
}
