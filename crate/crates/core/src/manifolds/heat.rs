//! Exact heat kernels of the circle and the flat torus.
//!
//! On the unit-circumference circle the kernel has two classical series:
//! the image sum Σ_m exp(−(δ+m)²/4t)/√(4πt) and the Fourier series
//! 1 + 2Σ_m e^{−4π²m²t} cos(2πmδ). The first converges fast for small t, the
//! second for large t. The torus kernel is the product of two circle kernels.

use std::f64::consts::PI;

use super::{wrap, Manifold};
use crate::error::{HodgeError, Result};

/// Below this diffusion time the image sum is used, above it the Fourier series.
pub const SPECTRAL_SWITCH_T: f64 = 0.05;

const TAIL: f64 = 1e-15;
const MAX_TERMS: i64 = 100_000;

/// Image (periodized Gaussian) form of the circle kernel at separation `delta`.
pub fn circle_kernel_images(delta: f64, t: f64) -> f64 {
    let d = wrap(delta);
    let g = |m: f64| (-(d + m) * (d + m) / (4.0 * t)).exp();
    let mut sum = g(0.0);
    for m in 1..MAX_TERMS {
        let m = m as f64;
        let term = g(m) + g(-m);
        sum += term;
        if term <= TAIL * sum {
            break;
        }
    }
    sum / (4.0 * PI * t).sqrt()
}

/// Fourier form of the circle kernel at separation `delta`.
pub fn circle_kernel_spectral(delta: f64, t: f64) -> f64 {
    let d = wrap(delta);
    let mut sum = 0.0;
    for m in 1..MAX_TERMS {
        let m = m as f64;
        let decay = (-4.0 * PI * PI * m * m * t).exp();
        if decay < TAIL {
            break;
        }
        sum += decay * (2.0 * PI * m * d).cos();
    }
    1.0 + 2.0 * sum
}

/// Circle kernel with the regime switch at [`SPECTRAL_SWITCH_T`].
#[inline]
pub fn circle_heat_kernel(delta: f64, t: f64) -> f64 {
    if t < SPECTRAL_SWITCH_T {
        circle_kernel_images(delta, t)
    } else {
        circle_kernel_spectral(delta, t)
    }
}

/// k_t(x, y) on the given manifold.
pub fn heat_kernel(manifold: Manifold, x: &[f64], y: &[f64], t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(HodgeError::NonPositiveTime(t));
    }
    Ok(match manifold {
        Manifold::Circle => circle_heat_kernel(x[0] - y[0], t),
        Manifold::Torus => circle_heat_kernel(x[0] - y[0], t) * circle_heat_kernel(x[1] - y[1], t),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn representations_agree() {
        let ts = [1e-4, 3e-4, 1e-3, 0.003, 0.01, 0.03, 0.05, 0.1, 0.3, 1.0];
        for &t in &ts {
            for j in 0..=40 {
                let d = j as f64 / 80.0;
                let a = circle_kernel_images(d, t);
                let b = circle_kernel_spectral(d, t);
                assert!((a - b).abs() <= 1e-12, "t={t} d={d}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn large_time_limit_and_symmetry() {
        for j in 0..20 {
            let x = [j as f64 / 20.0];
            let y = [0.37];
            let k = heat_kernel(Manifold::Circle, &x, &y, 10.0).unwrap();
            assert!((k - 1.0).abs() < 1e-10);
            for &t in &[0.001, 0.02, 0.2] {
                let a = heat_kernel(Manifold::Circle, &x, &y, t).unwrap();
                let b = heat_kernel(Manifold::Circle, &y, &x, t).unwrap();
                assert_eq!(a, b);
                assert!(a > 0.0);
            }
        }
        assert!(matches!(heat_kernel(Manifold::Circle, &[0.0], &[0.1], 0.0), Err(HodgeError::NonPositiveTime(_))));
    }

    #[test]
    fn unit_mass() {
        let n = 4096;
        for &t in &[0.001, 0.01, 0.1] {
            for &x in &[0.0, 0.123, 0.5] {
                let mass: f64 = (0..n).map(|j| circle_heat_kernel(x - j as f64 / n as f64, t)).sum::<f64>() / n as f64;
                assert!((mass - 1.0).abs() < 1e-10, "t={t}: {mass}");
            }
        }
    }

    #[test]
    fn short_time_diagonal() {
        let t: f64 = 1e-4;
        let scaled = t.sqrt() * circle_heat_kernel(0.0, t);
        let target = (4.0 * PI).powf(-0.5);
        assert!((scaled / target - 1.0).abs() < 0.01);
    }

    #[test]
    fn semigroup_property() {
        let n = 2048;
        for &t in &[0.01, 0.05] {
            for &s in &[0.01, 0.05] {
                for &(x, y) in &[(0.0, 0.3), (0.7, 0.71), (0.2, 0.9)] {
                    let conv: f64 = (0..n)
                        .map(|j| {
                            let z = j as f64 / n as f64;
                            circle_heat_kernel(x - z, t) * circle_heat_kernel(z - y, s)
                        })
                        .sum::<f64>()
                        / n as f64;
                    let direct = circle_heat_kernel(x - y, t + s);
                    assert!((conv - direct).abs() <= 1e-8, "{conv} vs {direct}");
                }
            }
        }
    }

    #[test]
    fn torus_is_product() {
        let x = [0.1, 0.8];
        let y = [0.3, 0.05];
        let k = heat_kernel(Manifold::Torus, &x, &y, 0.02).unwrap();
        let p = circle_heat_kernel(x[0] - y[0], 0.02) * circle_heat_kernel(x[1] - y[1], 0.02);
        assert_eq!(k, p);
    }
}
