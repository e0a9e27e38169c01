use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, SQRT_2};

use super::{Manifold, PointCloud};
use crate::error::{HodgeError, Result};
use crate::forms::FunctionOnCloud;

/// Smooth test functions with closed-form gradients. The trigonometric
/// members are √2·cos(2πk·x) and √2·sin(2πk·x): mean zero and unit L² norm
/// for a nonzero integer frequency vector k.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFunction {
    Constant { value: f64 },
    Cos { freq: Vec<i64> },
    Sin { freq: Vec<i64> },
}

impl TestFunction {
    pub fn cos(freq: &[i64]) -> Self {
        TestFunction::Cos { freq: freq.to_vec() }
    }

    pub fn sin(freq: &[i64]) -> Self {
        TestFunction::Sin { freq: freq.to_vec() }
    }

    pub fn constant(value: f64) -> Self {
        TestFunction::Constant { value }
    }

    fn phase(freq: &[i64], x: &[f64]) -> f64 {
        2.0 * PI * freq.iter().zip(x).map(|(&k, &c)| k as f64 * c).sum::<f64>()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            TestFunction::Constant { value } => *value,
            TestFunction::Cos { freq } => SQRT_2 * Self::phase(freq, x).cos(),
            TestFunction::Sin { freq } => SQRT_2 * Self::phase(freq, x).sin(),
        }
    }

    /// Gradient in the flat periodic coordinates.
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        match self {
            TestFunction::Constant { .. } => vec![0.0; x.len()],
            TestFunction::Cos { freq } => {
                let s = -SQRT_2 * Self::phase(freq, x).sin();
                freq.iter().map(|&k| s * 2.0 * PI * k as f64).collect()
            }
            TestFunction::Sin { freq } => {
                let c = SQRT_2 * Self::phase(freq, x).cos();
                freq.iter().map(|&k| c * 2.0 * PI * k as f64).collect()
            }
        }
    }

    /// Largest absolute frequency along any axis.
    pub fn max_frequency(&self) -> u64 {
        match self {
            TestFunction::Constant { .. } => 0,
            TestFunction::Cos { freq } | TestFunction::Sin { freq } => {
                freq.iter().map(|k| k.unsigned_abs()).max().unwrap_or(0)
            }
        }
    }

    pub fn check(&self, manifold: Manifold) -> Result<()> {
        match self {
            TestFunction::Constant { value } if !value.is_finite() => {
                Err(HodgeError::Unsupported(format!("constant {value}")))
            }
            TestFunction::Cos { freq } | TestFunction::Sin { freq } if freq.len() != manifold.dim() => {
                Err(HodgeError::Unsupported(format!(
                    "frequency vector {freq:?} on the {}-dimensional {manifold}",
                    manifold.dim()
                )))
            }
            _ => Ok(()),
        }
    }

    pub fn restrict(&self, cloud: &PointCloud) -> Result<FunctionOnCloud> {
        self.check(cloud.manifold())?;
        FunctionOnCloud::new((0..cloud.len()).map(|i| self.eval(cloud.point(i))).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_matches_finite_differences() {
        let fs = [TestFunction::cos(&[1, 0]), TestFunction::sin(&[2, -1]), TestFunction::constant(3.0)];
        let x = [0.31, 0.77];
        let h = 1e-6;
        for f in &fs {
            let g = f.gradient(&x);
            for axis in 0..2 {
                let mut xp = x;
                let mut xm = x;
                xp[axis] += h;
                xm[axis] -= h;
                let fd = (f.eval(&xp) - f.eval(&xm)) / (2.0 * h);
                assert!((fd - g[axis]).abs() < 1e-6, "{f:?} axis {axis}");
            }
        }
    }

    #[test]
    fn serde_shape() {
        let f: TestFunction = serde_json::from_str(r#"{"kind":"cos","freq":[1]}"#).unwrap();
        assert_eq!(f, TestFunction::cos(&[1]));
        assert!(TestFunction::cos(&[1]).check(Manifold::Torus).is_err());
    }
}
