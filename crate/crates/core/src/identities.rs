//! Randomized checks of the algebraic identities tying the operators
//! together. Each family draws its own seeded instances and reports the
//! largest normalized violation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::forms::{
    coboundary, coboundary_adjoint, det_form, dirichlet_quadratic_form, hodge_down, hodge_full, hodge_up,
    inner_product, multiply_by_function, norm, wedge, Form, FunctionOnCloud,
};
use crate::manifolds::{andreief_check, Manifold, QuadratureRule, TestFunction};
use crate::skeleton::ComplexSkeleton;
use crate::tuple::{signed_permutations, IndexTuple};
use crate::weights::{degree_weights, VertexWeightMode};

/// Signature shared by [`wedge`] and any stand-in used to exercise the suite.
pub type WedgeFn = fn(&Form, &Form, &ComplexSkeleton) -> Result<Form>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub instances: usize,
    pub seed: u64,
    /// Maximum normalized violation.
    pub tolerance: f64,
    pub max_points: usize,
    pub max_level: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig { instances: 100, seed: 0x1de7, tolerance: 1e-10, max_points: 8, max_level: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyOutcome {
    pub name: String,
    pub statement: String,
    pub instances: usize,
    pub max_violation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub config: SuiteConfig,
    pub families: Vec<FamilyOutcome>,
    pub passed: bool,
    pub first_failure: Option<String>,
}

/// Random clique complex: an Erdős–Rényi graph on `n` vertices with edge
/// probability `p`, all cliques up to `max_level`, and weights drawn from
/// [0.1, 2].
pub fn random_clique_complex<R: Rng>(rng: &mut R, n: usize, max_level: usize, p: f64) -> ComplexSkeleton {
    let mut adj = vec![vec![false; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let e = rng.random::<f64>() < p;
            adj[i][j] = e;
            adj[j][i] = e;
        }
    }
    let mut levels: Vec<Vec<(IndexTuple, f64)>> = Vec::new();
    let mut current: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    for _ in 0..=max_level {
        levels.push(
            current
                .iter()
                .map(|c| (IndexTuple::new(c.clone()).expect("increasing"), rng.random_range(0.1..2.0)))
                .collect(),
        );
        current = current
            .iter()
            .flat_map(|c| {
                let last = *c.last().unwrap();
                let adj = &adj;
                (last + 1..n).filter(move |&v| c.iter().all(|&u| adj[u][v])).map(move |v| {
                    let mut d = c.clone();
                    d.push(v);
                    d
                })
            })
            .collect();
    }
    ComplexSkeleton::from_levels(n, levels).expect("clique complexes are downward closed")
}

fn random_form<R: Rng>(rng: &mut R, skel: &ComplexSkeleton, level: usize) -> Result<Form> {
    Form::from_fn(skel, level, |_| rng.random_range(-1.0..1.0))
}

fn random_function<R: Rng>(rng: &mut R, n: usize) -> FunctionOnCloud {
    FunctionOnCloud::new((0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).expect("finite")
}

fn max_abs_diff(a: &Form, b: &Form) -> f64 {
    a.sub(b).map(|d| d.max_abs()).unwrap_or(f64::INFINITY)
}

fn relative(diff: f64, scale: f64) -> f64 {
    diff / scale.max(f64::MIN_POSITIVE).max(1e-300)
}

pub struct IdentitySuite {
    config: SuiteConfig,
    wedge: WedgeFn,
}

type Family = (&'static str, &'static str, fn(&IdentitySuite, &mut ChaCha8Rng) -> Result<f64>);

const FAMILIES: &[Family] = &[
    ("cochain", "δ(δω) = 0", IdentitySuite::cochain),
    ("adjointness", "⟨δ*ω, η⟩ = ⟨ω, δη⟩", IdentitySuite::adjointness),
    ("wedge_averaging", "f∧ω equals the tuple average of f times ω", IdentitySuite::wedge_averaging),
    ("leibniz_rule", "δ(f₁·δf₂∧…∧δf_ℓ) = δf₁∧…∧δf_ℓ", IdentitySuite::leibniz_rule),
    ("wedge_determinant", "δf₁∧…∧δf_ℓ = (1/ℓ!)det(δf_a(x_{i₀}, x_{i_b}))", IdentitySuite::wedge_determinant),
    (
        "dirichlet_quadratic_form",
        "⟨ω, ℒ^up ω⟩ equals the weighted sum of squared determinants",
        IdentitySuite::dirichlet_form,
    ),
    ("graph_dirichlet_energy", "⟨f, ℒ₀ f⟩ = ½ Σ_{i,j} k_ij (f_j − f_i)²", IdentitySuite::graph_energy),
    ("unnormalized_graph_laplacian", "unit vertex weights give ℒ₀ = D − K", IdentitySuite::unnormalized_laplacian),
    ("random_walk_graph_laplacian", "degree vertex weights give ℒ₀ = I − D⁻¹K", IdentitySuite::random_walk_laplacian),
    ("andreief", "det(∫φ_aφ_b) = (1/ℓ!)∫det²(φ_a(y_b))", IdentitySuite::andreief),
    ("alternating_closure", "wedge outputs obey the permutation sign rule", IdentitySuite::alternating_closure),
    ("self_adjointness", "⟨ℒω, η⟩ = ⟨ω, ℒη⟩", IdentitySuite::self_adjointness),
    ("positivity", "⟨ω, ℒ^up ω⟩ ≥ 0 and ⟨ω, ℒ^down ω⟩ ≥ 0", IdentitySuite::positivity),
];

impl IdentitySuite {
    pub fn new(config: SuiteConfig) -> Self {
        IdentitySuite { config, wedge }
    }

    /// Replaces the wedge product used by the wedge-based families.
    pub fn with_wedge(mut self, wedge: WedgeFn) -> Self {
        self.wedge = wedge;
        self
    }

    pub fn family_names() -> Vec<&'static str> {
        FAMILIES.iter().map(|f| f.0).collect()
    }

    /// Runs every family. A family whose check errors counts as an infinite
    /// violation.
    pub fn run(&self) -> IdentityReport {
        let families: Vec<FamilyOutcome> = FAMILIES
            .iter()
            .enumerate()
            .map(|(k, (name, statement, check))| {
                let mut worst: f64 = 0.0;
                for i in 0..self.config.instances {
                    let seed = self.config.seed ^ ((k as u64) << 32) ^ i as u64;
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    let v = check(self, &mut rng).unwrap_or(f64::INFINITY);
                    worst = if v.is_nan() { f64::INFINITY } else { worst.max(v) };
                }
                FamilyOutcome {
                    name: name.to_string(),
                    statement: statement.to_string(),
                    instances: self.config.instances,
                    max_violation: worst,
                    tolerance: self.config.tolerance,
                    passed: worst <= self.config.tolerance,
                }
            })
            .collect();
        let first_failure = families.iter().find(|f| !f.passed).map(|f| f.name.clone());
        IdentityReport { config: self.config, passed: first_failure.is_none(), first_failure, families }
    }

    fn skeleton(&self, rng: &mut ChaCha8Rng, min_n: usize, level: usize) -> ComplexSkeleton {
        let n = rng.random_range(min_n.max(level + 1)..=self.config.max_points.max(min_n).max(level + 1));
        let p = rng.random_range(0.5..1.0);
        random_clique_complex(rng, n, level, p)
    }

    fn level(&self, rng: &mut ChaCha8Rng, lo: usize, hi: usize) -> usize {
        rng.random_range(lo..=hi.max(lo))
    }

    fn cochain(&self, rng: &mut ChaCha8Rng) -> Result<f64> {
        let ell = self.level(rng, 0, self.config.max_level.saturating_sub(2));
        let s = self.skeleton(rng, 3, ell + 2);
        let w = random_form(rng, &s, ell)?;
        let dd = coboundary(&coboundary(&w, &s)?, &s)?;
        Ok(relative(dd.max_abs(), w.max_abs()))
    }

    fn adjointness(&self, rng: &mut ChaCha8Rng) -> Result<f64> {
        let ell = self.level(rng, 0, self.config.max_level - 1);
        let s = self.skeleton(rng, 2, ell + 1);
        let eta = random_form(rng, &s, ell)?;
        let w = random_form(rng, &s, ell + 1)?;
        let lhs = inner_product(&coboundary_adjoint(&w, &s)?, &eta, &s)?;
        let rhs = inner_product(&w, &coboundary(&eta, &s)?, &s)?;
        Ok(relative((lhs - rhs).abs(), norm(&w, &s)? * norm(&eta, &s)?))
    }

    fn wedge_averaging(&self, rng: &mut ChaCha8Rng) -> Result<f64> {
        let ell = self.level(rng, 0, self.config.max_level);
        let s = self.skeleton(rng, 2, ell);
        let f = random_function(rng, s.n());
        let w = random_form(rng, &s, ell)?;
        let via_wedge = (self.wedge)(&Form::from_function(&f, &s)?, &w, &s)?;
        let direct = multiply_by_function(&f, &w)?;
        Ok(relative(max_abs_diff(&via_wedge, &direct), direct.max_abs().max(1.0)))
    }

    /// δf₂∧(δf₃∧(…)) with the suite's wedge.
    fn wedge_of_coboundaries(&self, fs: &[FunctionOnCloud], s: &ComplexSkeleton) -> Result<Form> {
        let d = |f: &FunctionOnCloud| coboundary(&Form::from_function(f, s)?, s);
        let mut acc = d(&fs[fs.len() - 1])?;
        for f in fs[..fs.len() - 1].iter().rev() {
            acc = (self.wedge)(&d(f)?, &acc, s)?;
        }
        Ok(acc)
    }

    fn leibniz_rule(&self, rng: &mut ChaCha8Rng) -> Result<f64> {
        let ell = self.level(rng, 1, self.config.max_level + 1);
        let s = self.skeleton(rng, ell + 1, ell);
        let fs: Vec<FunctionOnCloud> = (0..ell).map(|_| random_function(rng, s.n())).collect();
        let f1 = Form::from_function(&fs[0], &s)?;
        let omega = if ell == 1 { f1 } else { (self.wedge)(&f1, &self.wedge_of_coboundaries(&fs[1..], &s)?, &s)? };
        let lhs = coboundary(&omega, &s)?;
        let rhs = det_form(&fs, &s)?;
        Ok(relative(max_abs_diff(&lhs, &rhs), rhs.max_abs().max(1.0)))
    }

    fn wedge_determinant(&self, rng: &mut ChaCha8Rng) -> Result<f64> {
        let ell = self.level(rng, 1, self.config.max_level + 1);
        let s = self.skeleton(rng, ell + 1, ell);
        let fs: Vec<FunctionOnCloud> = (0..ell).map(|_| random_function(rng, s.n())).collect();
        let lhs = self.wedge_of_coboundaries(&fs, &s)?;
        let rhs = det_form(&fs, &s)?;
        Ok(relative(max_abs_diff(&lhs, &rhs), rhs.max_abs().max(1.0)))
    }

    fn dirichlet_form(&self, rng: &mut ChaCha8Rng) -> Result<f64> {
        let ell = self.level(rng, 1, self.config.max_level);
        let s = self.skeleton(rng, ell + 1, ell);
        let fs: Vec<FunctionOnCloud> = (0..ell).map(|_| random_function(rng, s.n())).collect();
        let omega = crate::forms::empirical_form(&fs, &s)?;
        let lhs = inner_product(&omega, &hodge_up(&omega, &s)?, &s)?;
        let rhs = dirichlet_quadratic_form(&fs, &s)?;
        Ok(relative((lhs - rhs).abs(), rhs.abs().max(1e-12)))
    }

    fn graph_energy(&self, rng: &mut ChaCha8Rng) -> Result<f64> {
        let s = self.skeleton(rng, 2, 1);
        let f = random_function(rng, s.n());
        let edges = s.level(1)?;
        let mut brute = 0.0;
        for i in 0..s.n() {
            for j in 0..s.n() {
                if i == j {
                    continue;
                }
                let e = IndexTuple::new(vec![i.min(j), i.max(j)])?;
                let k = edges.weight(&e).unwrap_or(0.0);
                brute += 0.5 * k * (f.at(j) - f.at(i)).powi(2);
            }
        }
        let fz = Form::from_function(&f, &s)?;
        let lhs = inner_product(&fz, &hodge_up(&fz, &s)?, &s)?;
        let closed = dirichlet_quadratic_form(std::slice::from_ref(&f), &s)?;
        Ok(relative((lhs - brute).abs().max((closed - brute).abs()), brute.max(1e-12)))
    }

    /// ℒ₀ f against (K-based) f_i ↦ (d_i f_i − Σ_j k_ij f_j)/k_i.
    fn graph_laplacian(&self, rng: &mut ChaCha8Rng, mode: VertexWeightMode) -> Result<f64> {
        let mut s = self.skeleton(rng, 2, 1);
        while degree_weights(&s, VertexWeightMode::Degree).is_err() {
            s = self.skeleton(rng, 2, 1);
        }
        let vw = degree_weights(&s, mode)?;
        let s = s.with_vertex_weights(&vw)?;
        let n = s.n();
        let f = random_function(rng, n);
        let mut kf = vec![0.0; n];
        let mut deg = vec![0.0; n];
        for (e, w) in s.level(1)?.iter() {
            let (i, j) = (e.indices()[0], e.indices()[1]);
            kf[i] += w * f.at(j);
            kf[j] += w * f.at(i);
            deg[i] += w;
            deg[j] += w;
        }
        let expected: Vec<f64> = (0..n).map(|i| (deg[i] * f.at(i) - kf[i]) / vw[i]).collect();
        let got = hodge_up(&Form::from_function(&f, &s)?, &s)?.to_vector(&s)?;
        let scale = expected.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let diff = expected.iter().zip(&got).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        Ok(relative(diff, scale))
    }

    fn unnormalized_laplacian(&self, rng: &mut ChaCha8Rng) -> Result<f64> {
        self.graph_laplacian(rng, VertexWeightMode::Unit)
    }

    fn random_walk_laplacian(&self, rng: &mut ChaCha8Rng) -> Result<f64> {
        self.graph_laplacian(rng, VertexWeightMode::Degree)
    }

    fn andreief(&self, rng: &mut ChaCha8Rng) -> Result<f64> {
        let ell = rng.random_range(1..=3usize);
        let fs: Vec<TestFunction> = (0..ell)
            .map(|_| {
                let k = rng.random_range(0..=3i64);
                match rng.random_range(0..3) {
                    0 if k == 0 => TestFunction::constant(rng.random_range(0.5..2.0)),
                    0 | 1 => TestFunction::cos(&[k]),
                    _ => TestFunction::sin(&[k.max(1)]),
                }
            })
            .collect();
        let rule = QuadratureRule::periodic(Manifold::Circle, 16);
        let (lhs, rhs) = andreief_check(&fs, &rule)?;
        Ok(relative((lhs - rhs).abs(), lhs.abs().max(1.0)))
    }

    fn alternating_closure(&self, rng: &mut ChaCha8Rng) -> Result<f64> {
        let l = self.level(rng, 0, 2);
        let m = self.level(rng, 0, 2);
        let s = self.skeleton(rng, l + m + 1, l + m);
        let w = (self.wedge)(&random_form(rng, &s, l)?, &random_form(rng, &s, m)?, &s)?;
        let mut worst: f64 = 0.0;
        for (t, v) in w.iter() {
            for (perm, sign) in signed_permutations(t.len()) {
                let raw: Vec<usize> = perm.iter().map(|&p| t.indices()[p]).collect();
                worst = worst.max((w.eval_alternating(&raw)? - sign * v).abs());
            }
        }
        Ok(worst)
    }

    fn self_adjointness(&self, rng: &mut ChaCha8Rng) -> Result<f64> {
        let ell = self.level(rng, 0, self.config.max_level - 1);
        let s = self.skeleton(rng, 2, ell + 1);
        let w = random_form(rng, &s, ell)?;
        let eta = random_form(rng, &s, ell)?;
        let lhs = inner_product(&hodge_full(&w, &s)?, &eta, &s)?;
        let rhs = inner_product(&w, &hodge_full(&eta, &s)?, &s)?;
        Ok(relative((lhs - rhs).abs(), norm(&w, &s)? * norm(&eta, &s)?))
    }

    fn positivity(&self, rng: &mut ChaCha8Rng) -> Result<f64> {
        let ell = self.level(rng, 0, self.config.max_level - 1);
        let s = self.skeleton(rng, 2, ell + 1);
        let w = random_form(rng, &s, ell)?;
        let nn = inner_product(&w, &w, &s)?;
        let mut lowest = inner_product(&w, &hodge_up(&w, &s)?, &s)?;
        if ell > 0 {
            lowest = lowest.min(inner_product(&w, &hodge_down(&w, &s)?, &s)?);
        }
        Ok((-lowest / nn.max(1e-300)).max(0.0))
    }
}
