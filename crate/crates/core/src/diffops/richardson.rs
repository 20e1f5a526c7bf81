//! Richardson extrapolation over a geometric step sequence with an arbitrary
//! (increasing) sequence of error exponents.

/// Outcome of one extrapolation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extrapolated {
    pub value: f64,
    /// Distance between the chosen diagonal entry and the previous one.
    pub error_estimate: f64,
    /// Column of the tableau the value was taken from.
    pub column: usize,
}

/// Extrapolate `q(ε) = L + c₁ε^{γ₁} + c₂ε^{γ₂} + …` to `ε = 0` from samples
/// at `ε_j = ε_0 / ratio^j`.
///
/// Column `k` of the tableau removes the `ε^{γ_k}` term. Every diagonal entry
/// `T[k][k]` is a candidate; the one closest to its predecessor wins, which
/// keeps the estimate stable once roundoff starts to dominate the finer
/// levels.
///
/// # Panics
/// If fewer than two samples are given or `exponents` is shorter than
/// `samples.len() - 1`.
pub fn extrapolate(samples: &[f64], ratio: f64, exponents: &[f64]) -> Extrapolated {
    let n = samples.len();
    assert!(n >= 2, "need at least two samples");
    assert!(exponents.len() >= n - 1, "not enough exponents");

    let mut prev: Vec<f64> = Vec::with_capacity(n);
    let mut diag = vec![samples[0]];
    for (j, &q) in samples.iter().enumerate() {
        let mut row = Vec::with_capacity(j + 1);
        row.push(q);
        for k in 1..=j {
            let factor = ratio.powf(exponents[k - 1]) - 1.0;
            let last = row[k - 1];
            row.push(last + (last - prev[k - 1]) / factor);
        }
        if j > 0 {
            diag.push(row[j]);
        }
        prev = row;
    }

    let mut best = Extrapolated {
        value: diag[1],
        error_estimate: (diag[1] - diag[0]).abs(),
        column: 1,
    };
    for k in 2..n {
        let err = (diag[k] - diag[k - 1]).abs();
        // NaN never wins.
        if err < best.error_estimate || best.error_estimate.is_nan() {
            best = Extrapolated {
                value: diag[k],
                error_estimate: err,
                column: k,
            };
        }
    }
    best
}

/// `1, 2, 3, …` (or `2, 4, 6, …` when `even`).
pub fn integer_exponents(count: usize, even: bool) -> Vec<f64> {
    let step = if even { 2.0 } else { 1.0 };
    (1..=count).map(|k| step * k as f64).collect()
}

/// The sorted union of `{k - α}` and `{k}` for `k ≥ 1`, without zero and
/// without duplicates. Covers both a Hölder-type leading term and smooth
/// corrections.
pub fn holder_exponents(count: usize, alpha: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(count);
    let mut k = 1.0;
    while out.len() < count {
        for g in [k - alpha, k] {
            let dup = out.last().is_some_and(|&last: &f64| (g - last).abs() < 1e-12);
            if g > 1e-12 && !dup && out.len() < count {
                out.push(g);
            }
        }
        k += 1.0;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn removes_polynomial_error_exactly() {
        // q(ε) = 3 + 2ε - 5ε² + ε³
        let q = |e: f64| 3.0 + 2.0 * e - 5.0 * e * e + e * e * e;
        let samples: Vec<f64> = (0..5).map(|j| q(0.5 / 2f64.powi(j))).collect();
        let r = extrapolate(&samples, 2.0, &integer_exponents(4, false));
        assert!((r.value - 3.0).abs() < 1e-13, "{r:?}");
    }

    #[test]
    fn fractional_exponents() {
        let a = 0.3;
        let q = |e: f64| 1.0 + e.powf(1.0 - a) + 0.5 * e + 0.25 * e.powf(2.0 - a);
        let samples: Vec<f64> = (0..6).map(|j| q(1e-2 / 2f64.powi(j))).collect();
        let r = extrapolate(&samples, 2.0, &holder_exponents(5, a));
        assert!((r.value - 1.0).abs() < 1e-10, "{r:?}");
    }

    #[test]
    fn holder_exponent_sets() {
        assert_eq!(holder_exponents(4, 0.5), vec![0.5, 1.0, 1.5, 2.0]);
        assert_eq!(holder_exponents(3, 1.0), vec![1.0, 2.0, 3.0]);
        assert_eq!(integer_exponents(3, true), vec![2.0, 4.0, 6.0]);
    }

    #[test]
    fn constant_sequence_has_zero_error() {
        let r = extrapolate(&[4.0; 6], 2.0, &integer_exponents(5, false));
        assert_eq!(r.value, 4.0);
        assert_eq!(r.error_estimate, 0.0);
    }
}
