//! Matrix forms of the coboundary and the Hodge Laplacians, their spectra,
//! and Betti numbers.

pub mod eigen;
pub mod sparse;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HodgeError, Result};
use crate::forms::{coboundary, coboundary_adjoint, inner_product, norm, Form};
use crate::skeleton::ComplexSkeleton;
pub use eigen::{dense_eigen, lanczos_smallest, smallest_eigenpairs, EigenPairs, SolverKind, DENSE_LIMIT};
pub use sparse::CsrMatrix;

/// Residual tolerance handed to the iterative solver.
pub const SOLVER_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    Up,
    Down,
    Full,
    Coboundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    /// Canonical tuples, entries act on form values directly.
    Raw,
    /// Conjugated by W^{1/2} so the matrix is symmetric.
    Symmetrized,
}

/// A Hodge-type operator in the canonical tuple basis of a skeleton level.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub level: usize,
    pub kind: OperatorKind,
    pub basis: Basis,
    pub matrix: CsrMatrix,
    row_weights: Vec<f64>,
    col_weights: Vec<f64>,
}

impl OperatorMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    /// S = W^{1/2} L W^{−1/2}. Only square operators can be symmetrized.
    pub fn symmetrized(&self) -> Result<OperatorMatrix> {
        if self.kind == OperatorKind::Coboundary {
            return Err(HodgeError::Invalid("the coboundary matrix is rectangular".into()));
        }
        if self.basis == Basis::Symmetrized {
            return Ok(self.clone());
        }
        let left: Vec<f64> = self.row_weights.iter().map(|w| w.sqrt()).collect();
        let right: Vec<f64> = self.col_weights.iter().map(|w| 1.0 / w.sqrt()).collect();
        Ok(OperatorMatrix { basis: Basis::Symmetrized, matrix: self.matrix.scale(&left, &right), ..self.clone() })
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matrix.matvec(x)
    }

    pub fn to_coo_text(&self) -> String {
        self.matrix.to_coo_text()
    }
}

/// δ_ℓ as a (level ℓ+1) × (level ℓ) matrix.
pub fn coboundary_matrix(skel: &ComplexSkeleton, ell: usize) -> Result<CsrMatrix> {
    let lower = skel.level(ell)?;
    let upper = skel.level(ell + 1)?;
    let rows = upper
        .tuples()
        .par_iter()
        .map(|tau| {
            (0..tau.len())
                .map(|j| {
                    let face = tau.face(j);
                    let col = lower.position(&face).ok_or_else(|| HodgeError::NotDownwardClosed {
                        tuple: tau.indices().to_vec(),
                        face: face.indices().to_vec(),
                    })?;
                    Ok((col, if j % 2 == 0 { 1.0 } else { -1.0 }))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CsrMatrix::from_rows(lower.len(), rows))
}

/// δ*_ℓ = W_ℓ^{−1} δ_ℓᵀ W_{ℓ+1}, a (level ℓ) × (level ℓ+1) matrix.
pub fn adjoint_matrix(skel: &ComplexSkeleton, ell: usize) -> Result<CsrMatrix> {
    let d = coboundary_matrix(skel, ell)?;
    let inv: Vec<f64> = skel.level(ell)?.weights().iter().map(|w| 1.0 / w).collect();
    Ok(d.transpose().scale(&inv, skel.level(ell + 1)?.weights()))
}

/// Assembles the requested operator at level ℓ in the raw basis.
pub fn assemble(skel: &ComplexSkeleton, ell: usize, kind: OperatorKind) -> Result<OperatorMatrix> {
    let weights = |l: usize| -> Result<Vec<f64>> { Ok(skel.level(l)?.weights().to_vec()) };
    let up = || -> Result<CsrMatrix> { Ok(adjoint_matrix(skel, ell)?.matmul(&coboundary_matrix(skel, ell)?)) };
    let down = || -> Result<CsrMatrix> {
        if ell == 0 {
            return Err(HodgeError::DownAtLevelZero);
        }
        Ok(coboundary_matrix(skel, ell - 1)?.matmul(&adjoint_matrix(skel, ell - 1)?))
    };
    let (matrix, row_weights, col_weights) = match kind {
        OperatorKind::Up => (up()?, weights(ell)?, weights(ell)?),
        OperatorKind::Down => (down()?, weights(ell)?, weights(ell)?),
        OperatorKind::Full => {
            let m = if ell == 0 { up()? } else { up()?.add(&down()?) };
            (m, weights(ell)?, weights(ell)?)
        }
        OperatorKind::Coboundary => (coboundary_matrix(skel, ell)?, weights(ell + 1)?, weights(ell)?),
    };
    Ok(OperatorMatrix { level: ell, kind, basis: Basis::Raw, matrix, row_weights, col_weights })
}

/// λ counts as zero when λ < max(abs, rel·λ_max).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelTolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Default for KernelTolerance {
    fn default() -> Self {
        KernelTolerance { abs: 1e-8, rel: 1e-8 }
    }
}

impl KernelTolerance {
    pub fn threshold(&self, lambda_max: f64) -> f64 {
        self.abs.max(self.rel * lambda_max)
    }

    /// Some eigenvalue lies within a factor 10 of the threshold.
    pub fn is_ambiguous(&self, values: &[f64], threshold: f64) -> bool {
        values.iter().any(|&l| l.abs() >= threshold / 10.0 && l.abs() <= threshold * 10.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub level: usize,
    pub kind: OperatorKind,
    pub dimension: usize,
    /// The smallest eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    pub kernel_dim: usize,
    /// Every computed eigenvalue was below the threshold and more exist, so
    /// the true kernel may be larger.
    pub kernel_dim_is_lower_bound: bool,
    pub tolerance: KernelTolerance,
    pub threshold: f64,
    pub lambda_max: f64,
    pub ambiguous: bool,
    pub solver: SolverKind,
}

/// The `k` smallest eigenvalues of an operator's symmetrized form.
pub fn eigen_smallest(op: &OperatorMatrix, k: usize, tol: KernelTolerance) -> Result<SpectrumReport> {
    let s = op.symmetrized()?;
    let n = s.dim();
    let (pairs, lambda_max) = if n < DENSE_LIMIT {
        let all = dense_eigen(&s.matrix);
        let lmax = all.values.last().copied().unwrap_or(0.0).max(0.0);
        (all, lmax)
    } else {
        (lanczos_smallest(&s.matrix, k, SOLVER_TOLERANCE)?, eigen::largest_eigenvalue(&s.matrix))
    };
    let mut values = pairs.values;
    values.truncate(k.min(n));
    let threshold = tol.threshold(lambda_max);
    let kernel_dim = values.iter().filter(|&&l| l < threshold).count();
    Ok(SpectrumReport {
        level: op.level,
        kind: op.kind,
        dimension: n,
        kernel_dim_is_lower_bound: kernel_dim == values.len() && values.len() < n,
        ambiguous: tol.is_ambiguous(&values, threshold),
        eigenvalues: values,
        kernel_dim,
        tolerance: tol,
        threshold,
        lambda_max,
        solver: pairs.solver,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BettiNumber {
    pub level: usize,
    pub value: usize,
    /// An eigenvalue sits within a factor 10 of the zero threshold.
    pub ambiguous: bool,
    pub threshold: f64,
}

/// dim ker ℒ_ℓ under the default kernel tolerance.
pub fn betti(skel: &ComplexSkeleton, ell: usize) -> Result<BettiNumber> {
    let op = assemble(skel, ell, OperatorKind::Full)?;
    let n = op.dim();
    let tol = KernelTolerance::default();
    let mut k = n.min(16);
    loop {
        let r = eigen_smallest(&op, if n < DENSE_LIMIT { n } else { k }, tol)?;
        if !r.kernel_dim_is_lower_bound || k >= n {
            return Ok(BettiNumber { level: ell, value: r.kernel_dim, ambiguous: r.ambiguous, threshold: r.threshold });
        }
        k = (2 * k).min(n);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumComparison {
    pub left: Vec<f64>,
    pub right: Vec<f64>,
    /// Pairs that differ beyond tolerance; `None` marks a missing partner.
    pub mismatches: Vec<(Option<f64>, Option<f64>)>,
}

impl SpectrumComparison {
    fn new(mut left: Vec<f64>, mut right: Vec<f64>, tol: f64) -> Self {
        left.sort_by(f64::total_cmp);
        right.sort_by(f64::total_cmp);
        let mut mismatches = Vec::new();
        for i in 0..left.len().max(right.len()) {
            match (left.get(i), right.get(i)) {
                (Some(&a), Some(&b)) if (a - b).abs() <= tol * 1f64.max(a.abs()).max(b.abs()) => {}
                (a, b) => mismatches.push((a.copied(), b.copied())),
            }
        }
        SpectrumComparison { left, right, mismatches }
    }

    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureReport {
    pub level: usize,
    /// Nonzero spectrum of ℒ_ℓ against the union of those of ℒ^up_ℓ and ℒ^down_ℓ.
    pub full_vs_union: SpectrumComparison,
    /// Nonzero spectrum of ℒ^down_ℓ against that of ℒ^up_{ℓ−1}.
    pub down_vs_lower_up: SpectrumComparison,
    pub tolerance: f64,
}

impl StructureReport {
    pub fn passed(&self) -> bool {
        self.full_vs_union.passed() && self.down_vs_lower_up.passed()
    }
}

/// Agreement tolerance for eigenvalue-wise comparisons, relative to max(1, |λ|).
pub const STRUCTURE_TOLERANCE: f64 = 1e-8;

fn nonzero_spectrum(skel: &ComplexSkeleton, ell: usize, kind: OperatorKind) -> Result<Vec<f64>> {
    let s = assemble(skel, ell, kind)?.symmetrized()?;
    let values = dense_eigen(&s.matrix).values;
    let lmax = values.last().copied().unwrap_or(0.0).max(0.0);
    let threshold = KernelTolerance::default().threshold(lmax);
    Ok(values.into_iter().filter(|&l| l >= threshold).collect())
}

/// Checks the decomposition of the nonzero Hodge spectrum at level ℓ ≥ 1 by
/// dense solves. A level that is absent or empty passes vacuously.
pub fn spectrum_structure_check(skel: &ComplexSkeleton, ell: usize) -> Result<StructureReport> {
    if ell == 0 {
        return Err(HodgeError::Invalid("the spectral structure check needs ℓ ≥ 1".into()));
    }
    let vacuous = |tolerance| StructureReport {
        level: ell,
        full_vs_union: SpectrumComparison::new(vec![], vec![], tolerance),
        down_vs_lower_up: SpectrumComparison::new(vec![], vec![], tolerance),
        tolerance,
    };
    if !skel.has_level(ell) || skel.level(ell)?.is_empty() {
        return Ok(vacuous(STRUCTURE_TOLERANCE));
    }
    let full = nonzero_spectrum(skel, ell, OperatorKind::Full)?;
    let up = nonzero_spectrum(skel, ell, OperatorKind::Up)?;
    let down = nonzero_spectrum(skel, ell, OperatorKind::Down)?;
    let lower_up = nonzero_spectrum(skel, ell - 1, OperatorKind::Up)?;
    let union: Vec<f64> = up.into_iter().chain(down.iter().copied()).collect();
    Ok(StructureReport {
        level: ell,
        full_vs_union: SpectrumComparison::new(full, union, STRUCTURE_TOLERANCE),
        down_vs_lower_up: SpectrumComparison::new(down, lower_up, STRUCTURE_TOLERANCE),
        tolerance: STRUCTURE_TOLERANCE,
    })
}

/// Harmonic ℓ-forms (dense kernel of ℒ_ℓ) and the largest normalized
/// ⟨h, δg⟩_n and ⟨h, δ*g⟩_n over basis forms g at the neighbouring levels.
pub fn hodge_orthogonality(skel: &ComplexSkeleton, ell: usize) -> Result<f64> {
    let op = assemble(skel, ell, OperatorKind::Full)?;
    let s = op.symmetrized()?;
    let pairs = dense_eigen(&s.matrix);
    let lmax = pairs.values.last().copied().unwrap_or(0.0).max(0.0);
    let threshold = KernelTolerance::default().threshold(lmax);
    let weights = skel.level(ell)?.weights();
    let basis = |level: usize| -> Result<Vec<Form>> {
        let len = skel.level(level)?.len();
        (0..len)
            .map(|i| {
                let mut v = vec![0.0; len];
                v[i] = 1.0;
                Form::from_vector(skel, level, &v)
            })
            .collect()
    };
    let mut images = Vec::new();
    if ell > 0 {
        for g in basis(ell - 1)? {
            images.push(coboundary(&g, skel)?);
        }
    }
    for g in basis(ell + 1)? {
        images.push(coboundary_adjoint(&g, skel)?);
    }
    let mut worst: f64 = 0.0;
    for (l, u) in pairs.values.iter().zip(&pairs.vectors) {
        if *l >= threshold {
            continue;
        }
        let raw: Vec<f64> = u.iter().zip(weights).map(|(x, w)| x / w.sqrt()).collect();
        let h = Form::from_vector(skel, ell, &raw)?;
        let hn = norm(&h, skel)?;
        for img in &images {
            let gn = norm(img, skel)?;
            if gn > 0.0 {
                worst = worst.max(inner_product(&h, img, skel)?.abs() / (hn * gn));
            }
        }
    }
    Ok(worst)
}
