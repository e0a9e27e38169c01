//! Deterministic reductions and small dense linear algebra.

use rayon::prelude::*;

/// Pairwise (cascade) summation. The association order depends only on the
/// length of the slice.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Maps `0..count` in parallel and reduces the partial results pairwise in
/// index order, so the answer is bit-identical for every thread count.
pub fn par_ordered_sum<F>(count: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let partials: Vec<f64> = (0..count).into_par_iter().map(f).collect();
    pairwise_sum(&partials)
}

/// Determinant by Gaussian elimination with partial pivoting. `m` is
/// row-major and `k × k`; it is overwritten.
pub fn det_in_place(m: &mut [f64], k: usize) -> f64 {
    debug_assert_eq!(m.len(), k * k);
    let mut det = 1.0;
    for col in 0..k {
        let mut pivot = col;
        let mut best = m[col * k + col].abs();
        for row in col + 1..k {
            let v = m[row * k + col].abs();
            if v > best {
                best = v;
                pivot = row;
            }
        }
        if best == 0.0 {
            return 0.0;
        }
        if pivot != col {
            for c in 0..k {
                m.swap(col * k + c, pivot * k + c);
            }
            det = -det;
        }
        let p = m[col * k + col];
        det *= p;
        for row in col + 1..k {
            let factor = m[row * k + col] / p;
            if factor != 0.0 {
                for c in col + 1..k {
                    m[row * k + c] -= factor * m[col * k + c];
                }
            }
        }
    }
    det
}

/// Determinant of the `k × k` matrix with entries `f(a, b)`.
pub fn det_of<F: Fn(usize, usize) -> f64>(k: usize, f: F) -> f64 {
    match k {
        0 => 1.0,
        1 => f(0, 0),
        2 => f(0, 0) * f(1, 1) - f(0, 1) * f(1, 0),
        _ => {
            let mut m = Vec::with_capacity(k * k);
            for a in 0..k {
                for b in 0..k {
                    m.push(f(a, b));
                }
            }
            det_in_place(&mut m, k)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn det_matches_cofactor_expansion() {
        fn cofactor(m: &[Vec<f64>]) -> f64 {
            let k = m.len();
            if k == 1 {
                return m[0][0];
            }
            (0..k)
                .map(|j| {
                    let minor: Vec<Vec<f64>> = m[1..]
                        .iter()
                        .map(|r| r.iter().enumerate().filter(|&(c, _)| c != j).map(|(_, &v)| v).collect())
                        .collect();
                    let s = if j % 2 == 0 { 1.0 } else { -1.0 };
                    s * m[0][j] * cofactor(&minor)
                })
                .sum()
        }
        let m = vec![
            vec![0.0, 2.0, -1.0, 3.0],
            vec![1.5, 0.0, 4.0, -2.0],
            vec![2.0, 1.0, 0.5, 0.0],
            vec![-1.0, 3.0, 2.0, 1.0],
        ];
        let d = det_of(4, |a, b| m[a][b]);
        assert!((d - cofactor(&m)).abs() < 1e-12);
        let d3 = det_of(3, |a, b| m[a][b]);
        let m3: Vec<Vec<f64>> = m[..3].iter().map(|r| r[..3].to_vec()).collect();
        assert!((d3 - cofactor(&m3)).abs() < 1e-12);
        assert_eq!(det_of(3, |a, _| a as f64), 0.0);
    }

    #[test]
    fn ordered_sum_is_thread_independent() {
        let f = |i: usize| ((i as f64) * 0.37).sin() * 1e3;
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| par_ordered_sum(10_000, f));
        let b = four.install(|| par_ordered_sum(10_000, f));
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
