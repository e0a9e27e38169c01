//! Summary statistics and slope fits for replicate sweeps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{HodgeError, Result};

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Linearly interpolated quantile, `q ∈ [0, 1]`.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let v = sorted(values);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}

pub fn median(values: &[f64]) -> f64 {
    quantile(values, 0.5)
}

pub fn iqr(values: &[f64]) -> f64 {
    quantile(values, 0.75) - quantile(values, 0.25)
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation (n − 1 denominator); 0 for fewer than two values.
pub fn std_dev(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
}

/// Ordinary least squares y ≈ slope·x + intercept.
pub fn ols(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(HodgeError::Invalid(format!(
            "line fit needs two or more paired points, got {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    let (mx, my) = (mean(xs), mean(ys));
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(HodgeError::Invalid("line fit with constant abscissa".into()));
    }
    let slope = sxy / sxx;
    Ok(LineFit { slope, intercept: my - slope * mx })
}

/// OLS on (ln x, ln y). Nonpositive values are rejected.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    if let Some(v) = xs.iter().chain(ys).find(|v| !(**v > 0.0)) {
        return Err(HodgeError::Invalid(format!("log-log fit of nonpositive value {v}")));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    ols(&lx, &ly)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

/// Percentile bootstrap (95%) of a log-log slope. `groups[i]` holds the
/// replicates observed at `xs[i]`; each resample draws every group with
/// replacement and reduces it with `statistic`.
pub fn bootstrap_loglog_slope<S>(
    xs: &[f64],
    groups: &[Vec<f64>],
    statistic: S,
    resamples: usize,
    seed: u64,
) -> Result<Interval>
where
    S: Fn(&[f64]) -> f64,
{
    if xs.len() != groups.len() || groups.iter().any(Vec::is_empty) {
        return Err(HodgeError::Invalid("bootstrap needs one nonempty group per abscissa".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut slopes = Vec::with_capacity(resamples);
    let mut buf = Vec::new();
    for _ in 0..resamples {
        let ys: Vec<f64> = groups
            .iter()
            .map(|g| {
                buf.clear();
                buf.extend((0..g.len()).map(|_| g[rng.random_range(0..g.len())]));
                statistic(&buf)
            })
            .collect();
        if let Ok(fit) = loglog_slope(xs, &ys) {
            slopes.push(fit.slope);
        }
    }
    if slopes.is_empty() {
        return Err(HodgeError::Invalid("every bootstrap resample was degenerate".into()));
    }
    Ok(Interval { lo: quantile(&slopes, 0.025), hi: quantile(&slopes, 0.975) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_statistics() {
        let v = [5.0, 1.0, 3.0, 2.0, 4.0];
        assert_eq!(median(&v), 3.0);
        assert_eq!(median(&[1.0, 2.0, 3.0, 4.0]), 2.5);
        assert_eq!(iqr(&v), 2.0);
        assert!((std_dev(&v) - 2.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(std_dev(&[7.0]), 0.0);
    }

    #[test]
    fn exact_power_law() {
        let xs = [0.04, 0.02, 0.01, 0.005];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(1.5)).collect();
        let fit = loglog_slope(&xs, &ys).unwrap();
        assert!((fit.slope - 1.5).abs() < 1e-12);
        assert!((fit.intercept - 3f64.ln()).abs() < 1e-12);
        assert!(loglog_slope(&xs, &[1.0, 0.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn bootstrap_brackets_the_slope() {
        let xs = [250.0, 500.0, 1000.0, 2000.0];
        let groups: Vec<Vec<f64>> = xs
            .iter()
            .map(|n: &f64| (0..20).map(|i| n.powf(-0.5) * (1.0 + 0.01 * (i as f64 - 9.5))).collect())
            .collect();
        let ci = bootstrap_loglog_slope(&xs, &groups, median, 200, 1).unwrap();
        assert!(ci.lo <= -0.5 + 0.02 && ci.hi >= -0.5 - 0.02, "{ci:?}");
        assert!(ci.hi - ci.lo < 0.1);
    }
}
