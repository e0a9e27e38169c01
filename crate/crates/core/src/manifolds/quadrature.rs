//! Continuous Dirichlet energies and their heat-kernel smoothings, evaluated
//! by periodic trapezoid quadrature (spectrally accurate for smooth periodic
//! integrands, exact for trigonometric polynomials below the grid's Nyquist
//! degree).

use serde::Serialize;

use super::heat::circle_heat_kernel;
use super::{heat_kernel, Manifold, TestFunction};
use crate::error::{HodgeError, Result};
use crate::numeric::{det_of, pairwise_sum, par_ordered_sum};
use crate::tuple::factorial;

pub const DEFAULT_CIRCLE_GRID: usize = 512;
pub const DEFAULT_TORUS_GRID: usize = 128;
/// Maximum relative change allowed between a grid and its half-resolution
/// counterpart.
pub const REFINEMENT_TOLERANCE: f64 = 1e-6;

/// Work above this many kernel-product evaluations switches the smoothed
/// energy to the reduced (Gram-determinant) route.
const NESTED_BUDGET: f64 = 1e9;

fn check_all(manifold: Manifold, fs: &[TestFunction]) -> Result<()> {
    if fs.is_empty() {
        return Err(HodgeError::NoFunctions);
    }
    fs.iter().try_for_each(|f| f.check(manifold))
}

fn check_time(t: f64) -> Result<()> {
    if t > 0.0 {
        Ok(())
    } else {
        Err(HodgeError::NonPositiveTime(t))
    }
}

/// Tensor grid of `per_axis^d` nodes with a tabulated circle kernel.
struct Grid {
    manifold: Manifold,
    per_axis: usize,
    kappa: Vec<f64>,
}

impl Grid {
    fn new(manifold: Manifold, per_axis: usize, t: f64) -> Self {
        let kappa = (0..per_axis).map(|d| circle_heat_kernel(d as f64 / per_axis as f64, t)).collect();
        Grid { manifold, per_axis, kappa }
    }

    fn nodes(&self) -> usize {
        self.per_axis.pow(self.manifold.dim() as u32)
    }

    fn coords(&self, p: usize) -> Vec<f64> {
        let n = self.per_axis as f64;
        match self.manifold {
            Manifold::Circle => vec![p as f64 / n],
            Manifold::Torus => vec![(p / self.per_axis) as f64 / n, (p % self.per_axis) as f64 / n],
        }
    }

    #[inline]
    fn kernel(&self, p: usize, q: usize) -> f64 {
        let m = self.per_axis;
        let diff = |a: usize, b: usize| (b + m - a) % m;
        match self.manifold {
            Manifold::Circle => self.kappa[diff(p, q)],
            Manifold::Torus => self.kappa[diff(p / m, q / m)] * self.kappa[diff(p % m, q % m)],
        }
    }

    fn tabulate(&self, f: &TestFunction) -> Vec<f64> {
        (0..self.nodes()).map(|p| f.eval(&self.coords(p))).collect()
    }
}

/// ∫_M det(⟨df_a, df_b⟩_x) dx = ⟨df₁∧…∧df_ℓ, df₁∧…∧df_ℓ⟩.
///
/// The integrand is a trigonometric polynomial, so the trapezoid rule on a
/// grid finer than its degree returns it exactly up to rounding.
pub fn analytic_dirichlet(manifold: Manifold, fs: &[TestFunction]) -> Result<f64> {
    check_all(manifold, fs)?;
    let degree: u64 = fs.iter().map(|f| 2 * f.max_frequency()).sum();
    let per_axis = (degree as usize + 2).max(16);
    let grid = Grid { manifold, per_axis, kappa: Vec::new() };
    let ell = fs.len();
    let integrand: Vec<f64> = (0..grid.nodes())
        .map(|p| {
            let x = grid.coords(p);
            let grads: Vec<Vec<f64>> = fs.iter().map(|f| f.gradient(&x)).collect();
            det_of(ell, |a, b| grads[a].iter().zip(&grads[b]).map(|(u, v)| u * v).sum())
        })
        .collect();
    Ok(pairwise_sum(&integrand) / grid.nodes() as f64)
}

/// Which evaluation the smoothed energy used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SmoothingRoute {
    /// Direct (ℓ+1)-fold quadrature of det² times the kernel product.
    Nested,
    /// Outer quadrature of det((1/2t)∫k_t(x,y)δf_a δf_b dy), equal to the
    /// nested integral by Andréief's identity.
    Reduced,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmoothedDirichlet {
    pub value: f64,
    /// The same quantity on a grid with half the resolution.
    pub coarse_value: f64,
    pub rel_change: f64,
    pub grid: usize,
    pub route: SmoothingRoute,
}

fn nested_feasible(manifold: Manifold, ell: usize, per_axis: usize) -> bool {
    ell <= 2 && (per_axis as f64).powi((manifold.dim() * (ell + 1)) as i32) <= NESTED_BUDGET
}

/// (1/(ℓ!(2t)^ℓ)) ∫_{M^{ℓ+1}} det²(δf_a(x, x_b)) Π_b k_t(x, x_b) dx_b dx, the
/// expectation of the empirical Dirichlet form.
///
/// Uses nested quadrature when affordable, otherwise the reduced route. The
/// value is recomputed on the half-resolution grid and rejected if the two
/// differ by more than [`REFINEMENT_TOLERANCE`].
pub fn smoothed_dirichlet_quadrature(
    manifold: Manifold,
    fs: &[TestFunction],
    t: f64,
    grid: usize,
) -> Result<SmoothedDirichlet> {
    check_all(manifold, fs)?;
    check_time(t)?;
    if grid < 8 || !grid.is_multiple_of(2) {
        return Err(HodgeError::Invalid(format!("grid size {grid} must be even and at least 8")));
    }
    let route =
        if nested_feasible(manifold, fs.len(), grid) { SmoothingRoute::Nested } else { SmoothingRoute::Reduced };
    let eval = |g: usize| match route {
        SmoothingRoute::Nested => smoothed_dirichlet_nested(manifold, fs, t, g),
        SmoothingRoute::Reduced => smoothed_dirichlet_reduced(manifold, fs, t, g),
    };
    let value = eval(grid)?;
    let coarse_value = eval(grid / 2)?;
    let rel_change = if value == coarse_value { 0.0 } else { (value - coarse_value).abs() / value.abs() };
    if !(rel_change <= REFINEMENT_TOLERANCE) {
        return Err(HodgeError::GridTooCoarse { rel_change });
    }
    Ok(SmoothedDirichlet { value, coarse_value, rel_change, grid, route })
}

/// Nested quadrature of the smoothed energy, ℓ ∈ {1, 2}.
pub fn smoothed_dirichlet_nested(manifold: Manifold, fs: &[TestFunction], t: f64, grid: usize) -> Result<f64> {
    check_all(manifold, fs)?;
    check_time(t)?;
    let ell = fs.len();
    if ell > 2 {
        return Err(HodgeError::Unsupported(format!("nested quadrature at ℓ = {ell}")));
    }
    let g = Grid::new(manifold, grid, t);
    let m = g.nodes();
    let vals: Vec<Vec<f64>> = fs.iter().map(|f| g.tabulate(f)).collect();
    let total = par_ordered_sum(m, |p| {
        let kp: Vec<f64> = (0..m).map(|q| g.kernel(p, q)).collect();
        let a: Vec<f64> = (0..m).map(|q| vals[0][q] - vals[0][p]).collect();
        if ell == 1 {
            return (0..m).map(|q| kp[q] * a[q] * a[q]).sum::<f64>();
        }
        let b: Vec<f64> = (0..m).map(|q| vals[1][q] - vals[1][p]).collect();
        let mut s = 0.0;
        for q1 in 0..m {
            let mut inner = 0.0;
            for q2 in 0..m {
                let d = a[q1] * b[q2] - a[q2] * b[q1];
                inner += kp[q2] * d * d;
            }
            s += kp[q1] * inner;
        }
        s
    });
    let prefactor = 1.0 / (factorial(ell) * (2.0 * t).powi(ell as i32));
    Ok(prefactor * total / (m as f64).powi(ell as i32 + 1))
}

/// ∫_M det(G_t(x)) dx with G_t(x)_{ab} = (1/2t)∫ k_t(x,y)(f_a(x)−f_a(y))(f_b(x)−f_b(y)) dy.
pub fn smoothed_dirichlet_reduced(manifold: Manifold, fs: &[TestFunction], t: f64, grid: usize) -> Result<f64> {
    check_all(manifold, fs)?;
    check_time(t)?;
    let ell = fs.len();
    let g = Grid::new(manifold, grid, t);
    let m = g.nodes();
    let vals: Vec<Vec<f64>> = fs.iter().map(|f| g.tabulate(f)).collect();
    let scale = 1.0 / (2.0 * t * m as f64);
    let total = par_ordered_sum(m, |p| {
        let mut gram = vec![0.0; ell * ell];
        let mut diff = vec![0.0; ell];
        for q in 0..m {
            let k = g.kernel(p, q);
            for a in 0..ell {
                diff[a] = vals[a][q] - vals[a][p];
            }
            for a in 0..ell {
                for b in 0..ell {
                    gram[a * ell + b] += k * diff[a] * diff[b];
                }
            }
        }
        det_of(ell, |a, b| scale * gram[a * ell + b])
    });
    Ok(total / m as f64)
}

/// Pointwise carré du champ against its heat-kernel approximation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CarreDuChamp {
    /// ⟨df_a, df_b⟩_x from the closed-form gradients.
    pub lhs: f64,
    /// (1/2t)∫ k_t(x,y)(f_a(x)−f_a(y))(f_b(x)−f_b(y)) dy by quadrature.
    pub rhs: f64,
    pub gap: f64,
}

pub fn carre_du_champ_check(
    manifold: Manifold,
    fa: &TestFunction,
    fb: &TestFunction,
    x: &[f64],
    t: f64,
    grid: usize,
) -> Result<CarreDuChamp> {
    fa.check(manifold)?;
    fb.check(manifold)?;
    check_time(t)?;
    if x.len() != manifold.dim() {
        return Err(HodgeError::Invalid(format!("point {x:?} on the {manifold}")));
    }
    let ga = fa.gradient(x);
    let gb = fb.gradient(x);
    let lhs: f64 = ga.iter().zip(&gb).map(|(u, v)| u * v).sum();
    let g = Grid { manifold, per_axis: grid, kappa: Vec::new() };
    let (fax, fbx) = (fa.eval(x), fb.eval(x));
    let terms: Vec<f64> = (0..g.nodes())
        .map(|q| {
            let y = g.coords(q);
            let k = heat_kernel(manifold, x, &y, t).expect("t checked above");
            k * (fax - fa.eval(&y)) * (fbx - fb.eval(&y))
        })
        .collect();
    let rhs = pairwise_sum(&terms) / (2.0 * t * g.nodes() as f64);
    Ok(CarreDuChamp { lhs, rhs, gap: (lhs - rhs).abs() })
}

/// A discrete measure: nodes in a manifold's coordinates with weights.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    manifold: Manifold,
    nodes: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    /// Periodic trapezoid rule for the volume measure.
    pub fn periodic(manifold: Manifold, per_axis: usize) -> Self {
        let g = Grid { manifold, per_axis, kappa: Vec::new() };
        let m = g.nodes();
        QuadratureRule { manifold, nodes: (0..m).map(|p| g.coords(p)).collect(), weights: vec![1.0 / m as f64; m] }
    }

    /// Trapezoid rule for the measure k_t(center, y) dy.
    pub fn heat_weighted(manifold: Manifold, center: &[f64], t: f64, per_axis: usize) -> Result<Self> {
        check_time(t)?;
        let mut rule = Self::periodic(manifold, per_axis);
        for (w, y) in rule.weights.iter_mut().zip(&rule.nodes) {
            *w *= heat_kernel(manifold, center, y, t)?;
        }
        Ok(rule)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Both sides of Andréief's identity
/// det(∫φ_aφ_b dν) = (1/ℓ!)∫ det²(φ_a(y_b)) dν^ℓ, by quadrature.
pub fn andreief_check(fs: &[TestFunction], rule: &QuadratureRule) -> Result<(f64, f64)> {
    check_all(rule.manifold, fs)?;
    let ell = fs.len();
    let m = rule.len();
    if (m as f64).powi(ell as i32) > NESTED_BUDGET {
        return Err(HodgeError::Unsupported(format!("{m}^{ell} quadrature nodes")));
    }
    let vals: Vec<Vec<f64>> = fs.iter().map(|f| rule.nodes.iter().map(|y| f.eval(y)).collect()).collect();
    let lhs = det_of(ell, |a, b| {
        let terms: Vec<f64> = (0..m).map(|q| rule.weights[q] * vals[a][q] * vals[b][q]).collect();
        pairwise_sum(&terms)
    });
    // outer index runs over y_1; the remaining ℓ−1 nodes are enumerated inside
    let rest = m.pow(ell as u32 - 1);
    let total = par_ordered_sum(m, |q1| {
        let mut idx = vec![q1; ell];
        let mut s = 0.0;
        for r in 0..rest {
            let mut rem = r;
            let mut w = rule.weights[q1];
            for slot in idx.iter_mut().skip(1) {
                *slot = rem % m;
                rem /= m;
                w *= rule.weights[*slot];
            }
            let d = det_of(ell, |a, b| vals[a][idx[b]]);
            s += w * d * d;
        }
        s
    });
    Ok((lhs, total / factorial(ell)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn analytic_values() {
        let c = analytic_dirichlet(Manifold::Circle, &[TestFunction::cos(&[1])]).unwrap();
        assert!((c - 4.0 * PI * PI).abs() < 1e-10);
        let t = analytic_dirichlet(Manifold::Torus, &[TestFunction::cos(&[1, 0]), TestFunction::cos(&[0, 1])]).unwrap();
        assert!((t - 16.0 * PI.powi(4)).abs() < 1e-8, "{t}");
        let f = TestFunction::cos(&[1, 1]);
        let z = analytic_dirichlet(Manifold::Torus, &[f.clone(), f]).unwrap();
        assert!(z.abs() < 1e-9);
        let bad = analytic_dirichlet(Manifold::Circle, &[TestFunction::cos(&[1, 0])]);
        assert!(matches!(bad, Err(HodgeError::Unsupported(_))));
    }

    /// For f = √2cos(2πx) the smoothed energy has the closed form
    /// (1 − e^{−4π²t})/t, from ∫k_t(u)cos(2πu)du = e^{−4π²t}.
    #[test]
    fn smoothed_circle_closed_form() {
        let f = [TestFunction::cos(&[1])];
        for &t in &[0.005, 0.01, 0.04] {
            let s = smoothed_dirichlet_quadrature(Manifold::Circle, &f, t, 512).unwrap();
            let exact = (1.0 - (-4.0 * PI * PI * t).exp()) / t;
            assert!((s.value - exact).abs() < 1e-9 * exact, "t={t}: {} vs {exact}", s.value);
            assert_eq!(s.route, SmoothingRoute::Nested);
        }
        let zero = smoothed_dirichlet_quadrature(Manifold::Circle, &[TestFunction::constant(2.0)], 0.01, 64).unwrap();
        assert_eq!(zero.value, 0.0);
    }

    #[test]
    fn nested_and_reduced_routes_agree() {
        let fs = [TestFunction::cos(&[1]), TestFunction::sin(&[2])];
        let a = smoothed_dirichlet_nested(Manifold::Circle, &fs, 0.02, 64).unwrap();
        let b = smoothed_dirichlet_reduced(Manifold::Circle, &fs, 0.02, 64).unwrap();
        assert!((a - b).abs() < 1e-9 * b.abs().max(1.0), "{a} vs {b}");
        let g = [TestFunction::cos(&[1, 0])];
        let a = smoothed_dirichlet_nested(Manifold::Torus, &g, 0.02, 32).unwrap();
        let b = smoothed_dirichlet_reduced(Manifold::Torus, &g, 0.02, 32).unwrap();
        assert!((a - b).abs() < 1e-9 * b.abs());
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let f = [TestFunction::cos(&[1])];
        let r = smoothed_dirichlet_quadrature(Manifold::Circle, &f, 1e-4, 16);
        assert!(matches!(r, Err(HodgeError::GridTooCoarse { .. })));
        assert!(smoothed_dirichlet_quadrature(Manifold::Circle, &f, 0.01, 15).is_err());
    }

    #[test]
    fn carre_du_champ() {
        let f = TestFunction::cos(&[1]);
        let at0 = carre_du_champ_check(Manifold::Circle, &f, &f, &[0.0], 0.01, 512).unwrap();
        assert!(at0.lhs.abs() < 1e-12);
        let q = carre_du_champ_check(Manifold::Circle, &f, &f, &[0.25], 0.01, 512).unwrap();
        assert!((q.lhs - 8.0 * PI * PI).abs() < 1e-9);
        let c = TestFunction::constant(1.0);
        let z = carre_du_champ_check(Manifold::Circle, &f, &c, &[0.25], 0.01, 512).unwrap();
        assert_eq!((z.lhs, z.rhs), (0.0, 0.0));
    }

    #[test]
    fn andreief_examples() {
        let rule = QuadratureRule::periodic(Manifold::Circle, 64);
        let one = [TestFunction::sin(&[3])];
        let (l, r) = andreief_check(&one, &rule).unwrap();
        assert!((l - r).abs() < 1e-15);
        let pair = [TestFunction::constant(1.0), TestFunction::cos(&[1])];
        let (l, r) = andreief_check(&pair, &rule).unwrap();
        assert!((l - 1.0).abs() < 1e-12 && (r - 1.0).abs() < 1e-12);
        let rep = [TestFunction::cos(&[1]), TestFunction::cos(&[1])];
        let (l, r) = andreief_check(&rep, &rule).unwrap();
        assert!(l.abs() < 1e-12 && r.abs() < 1e-12);
    }
}
