//! Alternating forms on a point cloud and the discrete exterior calculus
//! acting on them.
//!
//! A [`Form`] stores one value per strictly increasing tuple. Evaluation at
//! any other ordering goes through [`IndexTuple::canonicalize`] and picks up
//! the sign of the sorting permutation; tuples with a repeated index and
//! tuples missing from the storage evaluate to zero.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::{HodgeError, Result};
use crate::numeric::{det_of, pairwise_sum};
use crate::skeleton::ComplexSkeleton;
use crate::tuple::{factorial, signed_permutations, IndexTuple};

/// Brute-force wedge products sum over S_{ℓ+m+1}; beyond 8! terms per tuple
/// they are refused.
pub const MAX_WEDGE_ARITY: usize = 8;

/// Restriction of a function to the data points.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionOnCloud(Vec<f64>);

impl FunctionOnCloud {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(HodgeError::NonFinite { index, value });
        }
        Ok(FunctionOnCloud(values))
    }

    pub fn constant(n: usize, c: f64) -> Self {
        FunctionOnCloud(vec![c; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn at(&self, i: usize) -> f64 {
        self.0[i]
    }
}

/// An alternating ℓ-form in canonical storage.
#[derive(Debug, Clone, PartialEq)]
pub struct Form {
    level: usize,
    n: usize,
    values: BTreeMap<IndexTuple, f64>,
}

impl Form {
    /// The zero form carried by every level-ℓ tuple of `skel`.
    pub fn zeros(skel: &ComplexSkeleton, level: usize) -> Result<Self> {
        Self::from_fn(skel, level, |_| 0.0)
    }

    pub fn from_fn<F: FnMut(&IndexTuple) -> f64>(skel: &ComplexSkeleton, level: usize, mut f: F) -> Result<Self> {
        let values = skel.level(level)?.tuples().iter().map(|t| (t.clone(), f(t))).collect();
        Ok(Form { level, n: skel.n(), values })
    }

    /// Builds a form from values at arbitrarily ordered tuples, applying the
    /// alternating rule to reach canonical storage.
    pub fn from_entries<I>(n: usize, level: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<usize>, f64)>,
    {
        let mut values = BTreeMap::new();
        for (raw, v) in entries {
            check_tuple(&raw, level, n)?;
            let (t, sign) = IndexTuple::canonicalize(&raw)
                .ok_or_else(|| HodgeError::Invalid(format!("repeated index in {raw:?}")))?;
            values.insert(t, sign * v);
        }
        Ok(Form { level, n, values })
    }

    /// The 0-form given by a function's values.
    pub fn from_function(f: &FunctionOnCloud, skel: &ComplexSkeleton) -> Result<Self> {
        if f.len() != skel.n() {
            return Err(HodgeError::FunctionLength { expected: skel.n(), got: f.len() });
        }
        Self::from_fn(skel, 0, |t| f.at(t.indices()[0]))
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Stored value at a canonical tuple (zero when absent).
    pub fn get(&self, t: &IndexTuple) -> f64 {
        self.values.get(t).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&IndexTuple, f64)> {
        self.values.iter().map(|(t, &v)| (t, v))
    }

    /// Value at an arbitrarily ordered tuple.
    pub fn eval_alternating(&self, raw: &[usize]) -> Result<f64> {
        check_tuple(raw, self.level, self.n)?;
        Ok(self.eval_unchecked(raw))
    }

    fn eval_unchecked(&self, raw: &[usize]) -> f64 {
        match IndexTuple::canonicalize(raw) {
            Some((t, sign)) => sign * self.get(&t),
            None => 0.0,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.values().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scale(&self, c: f64) -> Form {
        let mut out = self.clone();
        out.values.values_mut().for_each(|v| *v *= c);
        out
    }

    pub fn add(&self, other: &Form) -> Result<Form> {
        self.combine(other, 1.0)
    }

    pub fn sub(&self, other: &Form) -> Result<Form> {
        self.combine(other, -1.0)
    }

    fn combine(&self, other: &Form, c: f64) -> Result<Form> {
        if self.level != other.level {
            return Err(HodgeError::LevelMismatch { left: self.level, right: other.level });
        }
        let mut out = self.clone();
        for (t, v) in &other.values {
            *out.values.entry(t.clone()).or_insert(0.0) += c * v;
        }
        Ok(out)
    }

    /// Values on the skeleton's level-ℓ tuples, in canonical order.
    pub fn to_vector(&self, skel: &ComplexSkeleton) -> Result<Vec<f64>> {
        Ok(skel.level(self.level)?.tuples().iter().map(|t| self.get(t)).collect())
    }

    pub fn from_vector(skel: &ComplexSkeleton, level: usize, values: &[f64]) -> Result<Self> {
        let lvl = skel.level(level)?;
        if lvl.len() != values.len() {
            return Err(HodgeError::FunctionLength { expected: lvl.len(), got: values.len() });
        }
        let mut it = values.iter();
        Self::from_fn(skel, level, |_| *it.next().unwrap())
    }

    pub fn to_file(&self) -> FormFile {
        FormFile {
            level: self.level,
            n: self.n,
            entries: self.iter().map(|(t, v)| (t.indices().to_vec(), v)).collect(),
        }
    }

    pub fn from_file(file: FormFile) -> Result<Self> {
        Self::from_entries(file.n, file.level, file.entries)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_file())?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_file(serde_json::from_str(s)?)
    }
}

/// On-disk layout: `{"level": ℓ, "n": n, "entries": [[[i₀, …], value], …]}`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FormFile {
    pub level: usize,
    pub n: usize,
    pub entries: Vec<(Vec<usize>, f64)>,
}

fn check_tuple(raw: &[usize], level: usize, n: usize) -> Result<()> {
    if raw.len() != level + 1 {
        return Err(HodgeError::TupleLength { expected: level + 1, got: raw.len() });
    }
    if let Some(&index) = raw.iter().find(|&&i| i >= n) {
        return Err(HodgeError::IndexOutOfRange { index, n });
    }
    Ok(())
}

/// ⟨a, b⟩_n = Σ_{i₀<…<i_ℓ} k_{i₀⋯i_ℓ} a(i₀,…,i_ℓ) b(i₀,…,i_ℓ).
pub fn inner_product(a: &Form, b: &Form, skel: &ComplexSkeleton) -> Result<f64> {
    if a.level != b.level {
        return Err(HodgeError::LevelMismatch { left: a.level, right: b.level });
    }
    let terms: Vec<f64> = skel.level(a.level)?.iter().map(|(t, w)| w * a.get(t) * b.get(t)).collect();
    Ok(pairwise_sum(&terms))
}

/// Norm induced by the weighted inner product.
pub fn norm(a: &Form, skel: &ComplexSkeleton) -> Result<f64> {
    Ok(inner_product(a, a, skel)?.max(0.0).sqrt())
}

/// (δω)(i₀,…,i_{ℓ+1}) = Σ_j (−1)^j ω(i₀,…,î_j,…,i_{ℓ+1}) on the skeleton's
/// level-(ℓ+1) tuples.
pub fn coboundary(form: &Form, skel: &ComplexSkeleton) -> Result<Form> {
    let target = form.level + 1;
    Form::from_fn(skel, target, |t| {
        (0..t.len())
            .map(|j| {
                let v = form.get(&t.face(j));
                if j % 2 == 0 {
                    v
                } else {
                    -v
                }
            })
            .sum()
    })
}

/// Adjoint of the coboundary with respect to ⟨·,·⟩_n:
/// (δ*ω)(i₀,…,i_ℓ) = Σ_j (k_{j i₀⋯i_ℓ}/k_{i₀⋯i_ℓ}) ω(j,i₀,…,i_ℓ).
pub fn coboundary_adjoint(form: &Form, skel: &ComplexSkeleton) -> Result<Form> {
    if form.level == 0 {
        return Err(HodgeError::Invalid("the adjoint maps level ℓ+1 to ℓ; got a 0-form".into()));
    }
    let upper = skel.level(form.level)?;
    let lower = skel.level(form.level - 1)?;
    let mut acc = vec![0.0; lower.len()];
    for (tau, k_tau) in upper.iter() {
        let w = form.get(tau);
        if w == 0.0 {
            continue;
        }
        for j in 0..tau.len() {
            let sigma = tau.face(j);
            let pos = lower.position(&sigma).ok_or_else(|| HodgeError::NotDownwardClosed {
                tuple: tau.indices().to_vec(),
                face: sigma.indices().to_vec(),
            })?;
            // ω(v, σ) = (−1)^j ω(τ) where v = τ_j sits at position j of τ
            let signed = if j % 2 == 0 { w } else { -w };
            acc[pos] += k_tau / lower.weights()[pos] * signed;
        }
    }
    Form::from_vector(skel, form.level - 1, &acc)
}

/// ℒ^up_ℓ = δ*_ℓ δ_ℓ.
pub fn hodge_up(form: &Form, skel: &ComplexSkeleton) -> Result<Form> {
    coboundary_adjoint(&coboundary(form, skel)?, skel)
}

/// ℒ^down_ℓ = δ_{ℓ−1} δ*_{ℓ−1}, defined for ℓ ≥ 1.
pub fn hodge_down(form: &Form, skel: &ComplexSkeleton) -> Result<Form> {
    if form.level == 0 {
        return Err(HodgeError::DownAtLevelZero);
    }
    coboundary(&coboundary_adjoint(form, skel)?, skel)
}

/// ℒ_ℓ = ℒ^up_ℓ + ℒ^down_ℓ, with ℒ₀ = ℒ^up₀.
pub fn hodge_full(form: &Form, skel: &ComplexSkeleton) -> Result<Form> {
    let up = hodge_up(form, skel)?;
    if form.level == 0 {
        return Ok(up);
    }
    up.add(&hodge_down(form, skel)?)
}

/// Reference wedge product: the signed average over all permutations of the
/// ℓ+m+1 arguments, with the two factors sharing the middle argument.
pub fn wedge(a: &Form, b: &Form, skel: &ComplexSkeleton) -> Result<Form> {
    let arity = a.level + b.level + 1;
    if arity > MAX_WEDGE_ARITY {
        return Err(HodgeError::WedgeTooLarge { left: a.level, right: b.level, arity });
    }
    let perms = signed_permutations(arity);
    let norm = factorial(arity);
    let (l, m) = (a.level, b.level);
    let mut left = vec![0usize; l + 1];
    let mut right = vec![0usize; m + 1];
    Form::from_fn(skel, l + m, |t| {
        let idx = t.indices();
        let mut sum = 0.0;
        for (sigma, sign) in &perms {
            for (p, slot) in left.iter_mut().enumerate() {
                *slot = idx[sigma[p]];
            }
            for (p, slot) in right.iter_mut().enumerate() {
                *slot = idx[sigma[l + p]];
            }
            sum += sign * a.eval_unchecked(&left) * b.eval_unchecked(&right);
        }
        sum / norm
    })
}

/// f·ω for a function f (a 0-form): the average of f over the tuple times ω.
pub fn multiply_by_function(f: &FunctionOnCloud, form: &Form) -> Result<Form> {
    if f.len() != form.n {
        return Err(HodgeError::FunctionLength { expected: form.n, got: f.len() });
    }
    let mut out = form.clone();
    let k = (form.level + 1) as f64;
    for (t, v) in out.values.iter_mut() {
        let avg = t.indices().iter().map(|&i| f.at(i)).sum::<f64>() / k;
        *v *= avg;
    }
    Ok(out)
}

fn check_functions(fs: &[FunctionOnCloud], skel: &ComplexSkeleton) -> Result<()> {
    if fs.is_empty() {
        return Err(HodgeError::NoFunctions);
    }
    for f in fs {
        if f.len() != skel.n() {
            return Err(HodgeError::FunctionLength { expected: skel.n(), got: f.len() });
        }
    }
    Ok(())
}

/// det(f_a(x_{i_b}) − f_a(x_{i₀}))_{a,b=1..ℓ} at a single tuple, without the 1/ℓ! factor.
pub fn coboundary_determinant(fs: &[FunctionOnCloud], tuple: &[usize]) -> f64 {
    let ell = fs.len();
    let i0 = tuple[0];
    det_of(ell, |a, b| fs[a].at(tuple[b + 1]) - fs[a].at(i0))
}

/// δf₁∧…∧δf_ℓ evaluated through the determinant formula.
pub fn det_form(fs: &[FunctionOnCloud], skel: &ComplexSkeleton) -> Result<Form> {
    check_functions(fs, skel)?;
    let scale = 1.0 / factorial(fs.len());
    Form::from_fn(skel, fs.len(), |t| scale * coboundary_determinant(fs, t.indices()))
}

/// The empirical (ℓ−1)-form f₁·(δf₂∧…∧δf_ℓ).
pub fn empirical_form(fs: &[FunctionOnCloud], skel: &ComplexSkeleton) -> Result<Form> {
    check_functions(fs, skel)?;
    if fs.len() == 1 {
        return Form::from_function(&fs[0], skel);
    }
    let eta = det_form(&fs[1..], skel)?;
    multiply_by_function(&fs[0], &eta)
}

/// (1/ℓ!²) Σ_{i₀<…<i_ℓ} k_{i₀⋯i_ℓ} det²(δf_a(x_{i₀}, x_{i_b})), the quadratic
/// form ⟨ω, ℒ^up_{ℓ−1} ω⟩_n of the empirical form ω.
pub fn dirichlet_quadratic_form(fs: &[FunctionOnCloud], skel: &ComplexSkeleton) -> Result<f64> {
    check_functions(fs, skel)?;
    let ell = fs.len();
    let scale = 1.0 / (factorial(ell) * factorial(ell));
    let terms: Vec<f64> = skel
        .level(ell)?
        .iter()
        .map(|(t, w)| {
            let d = coboundary_determinant(fs, t.indices());
            w * d * d
        })
        .collect();
    Ok(scale * pairwise_sum(&terms))
}
