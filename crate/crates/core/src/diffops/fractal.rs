//! Mass and staircase functions of the fractal (measure-based) calculus.

use crate::specfun::gamma;

/// `(b - a)^α / Γ(1 + α)`.
///
/// # Panics
/// If `b < a`, or if `1 + α` is a pole of Γ.
pub fn mass_function(alpha: f64, a: f64, b: f64) -> f64 {
    assert!(b >= a, "mass_function needs b >= a (a = {a}, b = {b})");
    let g = gamma(1.0 + alpha).expect("Γ(1 + α) must be finite");
    (b - a).powf(alpha) / g
}

/// Signed cumulative mass: `+γ` on `[a, x]` when `x ≥ a`, `-γ` on `[x, a]`
/// otherwise.
pub fn staircase(alpha: f64, a: f64, x: f64) -> f64 {
    if x >= a {
        mass_function(alpha, a, x)
    } else {
        -mass_function(alpha, x, a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn mass_examples() {
        assert_relative_eq!(mass_function(1.0, 0.0, 3.0), 3.0, max_relative = 1e-14);
        // 1/Γ(1.5) = 2/√π
        let expected = 2.0 / std::f64::consts::PI.sqrt();
        assert_relative_eq!(mass_function(0.5, 0.0, 1.0), expected, max_relative = 1e-13);
        assert_eq!(mass_function(0.4, 2.0, 2.0), 0.0);
    }

    #[test]
    fn staircase_examples() {
        assert_relative_eq!(staircase(1.0, 0.0, 2.0), 2.0, max_relative = 1e-14);
        assert_relative_eq!(staircase(1.0, 0.0, -2.0), -2.0, max_relative = 1e-14);
        let expected = 2.0 / std::f64::consts::PI.sqrt();
        assert_relative_eq!(staircase(0.5, 1.0, 2.0), expected, max_relative = 1e-13);
        assert_eq!(staircase(0.7, 1.5, 1.5), 0.0);
    }

    #[test]
    #[should_panic(expected = "b >= a")]
    fn reversed_interval_panics() {
        mass_function(0.5, 1.0, 0.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn staircase_is_odd_about_a(alpha in 0.05f64..1.0, a in -5.0f64..5.0, d in 0.01f64..5.0) {
                let up = staircase(alpha, a, a + d);
                let down = staircase(alpha, a, a - d);
                prop_assert!((up + down).abs() <= 1e-12 * up.abs().max(1.0));
            }
        }
    }
}
