//! Volume-one model manifolds, uniform samples on them, exact heat kernels
//! and the continuous quantities the empirical estimators approximate.

mod functions;
mod heat;
mod quadrature;

pub use functions::TestFunction;
pub use heat::{circle_heat_kernel, circle_kernel_images, circle_kernel_spectral, heat_kernel, SPECTRAL_SWITCH_T};
pub use quadrature::{
    analytic_dirichlet, andreief_check, carre_du_champ_check, smoothed_dirichlet_nested, smoothed_dirichlet_quadrature,
    smoothed_dirichlet_reduced, CarreDuChamp, QuadratureRule, SmoothedDirichlet, SmoothingRoute, DEFAULT_CIRCLE_GRID,
    DEFAULT_TORUS_GRID, REFINEMENT_TOLERANCE,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{HodgeError, Result};

/// Closed, connected model manifolds of unit volume, parametrized by
/// periodic coordinates in `[0, 1)^d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Manifold {
    /// Circle of circumference 1.
    Circle,
    /// Flat torus ℝ²/ℤ².
    Torus,
}

impl Manifold {
    pub fn dim(self) -> usize {
        match self {
            Manifold::Circle => 1,
            Manifold::Torus => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Manifold::Circle => "circle",
            Manifold::Torus => "torus",
        }
    }
}

impl fmt::Display for Manifold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Manifold {
    type Err = HodgeError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "circle" => Ok(Manifold::Circle),
            "torus" => Ok(Manifold::Torus),
            other => Err(HodgeError::Unsupported(format!("manifold {other:?}"))),
        }
    }
}

/// Signed difference of two periodic coordinates, wrapped into `[-½, ½]`.
#[inline]
pub fn wrap(d: f64) -> f64 {
    d - d.round()
}

/// Geodesic distance on the manifold.
pub fn intrinsic_distance(manifold: Manifold, x: &[f64], y: &[f64]) -> f64 {
    let per_axis = |a: f64, b: f64| {
        let d = (a - b).rem_euclid(1.0);
        d.min(1.0 - d)
    };
    match manifold {
        Manifold::Circle => per_axis(x[0], y[0]),
        Manifold::Torus => per_axis(x[0], y[0]).hypot(per_axis(x[1], y[1])),
    }
}

/// Points on a model manifold, stored as intrinsic coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    manifold: Manifold,
    coords: Vec<f64>,
    seed: Option<u64>,
}

impl PointCloud {
    pub fn from_coords(manifold: Manifold, coords: Vec<f64>, seed: Option<u64>) -> Result<Self> {
        let d = manifold.dim();
        if !coords.len().is_multiple_of(d) {
            return Err(HodgeError::Invalid(format!(
                "{} coordinates do not split into {d}-dimensional points",
                coords.len()
            )));
        }
        if let Some(&c) = coords.iter().find(|c| !(0.0..1.0).contains(*c)) {
            return Err(HodgeError::Invalid(format!("coordinate {c} outside [0, 1)")));
        }
        Ok(PointCloud { manifold, coords, seed })
    }

    pub fn manifold(&self) -> Manifold {
        self.manifold
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.manifold.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        let d = self.manifold.dim();
        &self.coords[i * d..(i + 1) * d]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// CSV with a `#` provenance header, then one point per row.
    pub fn to_csv(&self) -> String {
        let mut out = format!("# manifold={} n={}", self.manifold, self.len());
        if let Some(s) = self.seed {
            out.push_str(&format!(" seed={s}"));
        }
        out.push('\n');
        out.push_str(match self.manifold {
            Manifold::Circle => "x\n",
            Manifold::Torus => "x,y\n",
        });
        for i in 0..self.len() {
            let row: Vec<String> = self.point(i).iter().map(|c| format!("{c:?}")).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .and_then(|l| l.strip_prefix('#'))
            .ok_or_else(|| HodgeError::Parse("missing '#' header line".into()))?;
        let mut manifold = None;
        let mut seed = None;
        for kv in header.split_whitespace() {
            match kv.split_once('=') {
                Some(("manifold", v)) => manifold = Some(v.parse::<Manifold>()?),
                Some(("seed", v)) => seed = Some(v.parse::<u64>().map_err(|e| HodgeError::Parse(e.to_string()))?),
                _ => {}
            }
        }
        let manifold = manifold.ok_or_else(|| HodgeError::Parse("header lacks manifold=".into()))?;
        lines.next();
        let mut coords = Vec::new();
        for line in lines.filter(|l| !l.trim().is_empty()) {
            for field in line.split(',') {
                coords.push(field.trim().parse::<f64>().map_err(|e| HodgeError::Parse(format!("{field:?}: {e}")))?);
            }
        }
        Self::from_coords(manifold, coords, seed)
    }
}

/// I.i.d. uniform points; identical seeds give bit-identical clouds.
pub fn sample_uniform(manifold: Manifold, n: usize, seed: u64) -> PointCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords = (0..n * manifold.dim()).map(|_| rng.random::<f64>()).collect();
    PointCloud { manifold, coords, seed: Some(seed) }
}

/// Uniform sample on a union of circle arcs `[start, end)` (lengths may
/// differ; the arc is picked with probability proportional to its length).
pub fn sample_on_arcs(n: usize, arcs: &[(f64, f64)], seed: u64) -> Result<PointCloud> {
    if arcs.is_empty() || arcs.iter().any(|&(a, b)| !(0.0 <= a && a < b && b <= 1.0)) {
        return Err(HodgeError::Invalid(format!("bad arcs {arcs:?}")));
    }
    let total: f64 = arcs.iter().map(|(a, b)| b - a).sum();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords = (0..n)
        .map(|_| {
            let mut u = rng.random::<f64>() * total;
            for &(a, b) in arcs {
                if u < b - a {
                    return (a + u).min(b - f64::EPSILON).rem_euclid(1.0);
                }
                u -= b - a;
            }
            let (a, _) = arcs[arcs.len() - 1];
            a
        })
        .collect();
    Ok(PointCloud { manifold: Manifold::Circle, coords, seed: Some(seed) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distances() {
        assert!((intrinsic_distance(Manifold::Circle, &[0.1], &[0.9]) - 0.2).abs() < 1e-15);
        assert_eq!(intrinsic_distance(Manifold::Circle, &[0.3], &[0.3]), 0.0);
        let d = intrinsic_distance(Manifold::Torus, &[0.0, 0.0], &[0.5, 0.5]);
        assert!((d - 0.5f64.sqrt()).abs() < 1e-15);
        let d = intrinsic_distance(Manifold::Torus, &[0.95, 0.1], &[0.05, 0.1]);
        assert!((d - 0.1).abs() < 1e-15);
    }

    #[test]
    fn sampling_is_reproducible() {
        let a = sample_uniform(Manifold::Circle, 4, 17);
        let b = sample_uniform(Manifold::Circle, 4, 17);
        assert_eq!(
            a.coords().iter().map(|c| c.to_bits()).collect::<Vec<_>>(),
            b.coords().iter().map(|c| c.to_bits()).collect::<Vec<_>>()
        );
        assert_ne!(a, sample_uniform(Manifold::Circle, 4, 18));
        let t = sample_uniform(Manifold::Torus, 500, 3);
        assert_eq!(t.len(), 500);
        assert!(t.coords().iter().all(|c| (0.0..1.0).contains(c)));
    }

    #[test]
    fn sample_mean_of_cosine_is_zero() {
        let n = 100_000;
        let cloud = sample_uniform(Manifold::Circle, n, 2024);
        let f = TestFunction::cos(&[1]);
        let vals: Vec<f64> = (0..n).map(|i| f.eval(cloud.point(i))).collect();
        let mean = vals.iter().sum::<f64>() / n as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        assert!(mean.abs() < 3.0 * se, "mean {mean} se {se}");
    }

    #[test]
    fn csv_round_trip() {
        let c = sample_uniform(Manifold::Torus, 5, 9);
        let text = c.to_csv();
        assert!(text.starts_with("# manifold=torus n=5 seed=9\nx,y\n"));
        assert_eq!(PointCloud::from_csv(&text).unwrap(), c);
        assert!(PointCloud::from_csv("x\n0.5\n").is_err());
    }

    #[test]
    fn arcs_stay_inside() {
        let c = sample_on_arcs(200, &[(0.0, 0.2), (0.5, 0.7)], 1).unwrap();
        for i in 0..c.len() {
            let x = c.point(i)[0];
            assert!((0.0..0.2).contains(&x) || (0.5..0.7).contains(&x));
        }
        assert!(sample_on_arcs(10, &[(0.3, 0.2)], 1).is_err());
    }
}
