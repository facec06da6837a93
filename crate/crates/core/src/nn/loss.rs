/// Huber loss and its derivative with respect to the residual.
pub fn huber(residual: f64, delta: f64) -> (f64, f64) {
    let a = residual.abs();
    if a <= delta {
        (0.5 * residual * residual, residual)
    } else {
        (delta * (a - 0.5 * delta), delta * residual.signum())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{prop_assert, prop_assume, proptest};

    #[test]
    fn examples() {
        assert_eq!(huber(0.0, 1.0), (0.0, 0.0));
        assert_eq!(huber(0.5, 1.0), (0.125, 0.5));
        assert_eq!(huber(2.0, 1.0), (1.5, 1.0));
        assert_eq!(huber(-2.0, 1.0), (1.5, -1.0));
    }

    #[test]
    fn continuous_at_delta() {
        for delta in [0.1, 1.0, 3.5] {
            for s in [1.0, -1.0] {
                let (l_in, d_in) = huber(s * delta, delta);
                let (l_out, d_out) = huber(s * delta * (1.0 + 1e-12), delta);
                assert!((l_in - l_out).abs() < 1e-10);
                assert!((d_in - d_out).abs() < 1e-10);
            }
        }
    }

    proptest! {
        #[test]
        fn derivative_matches_finite_difference(r in -10.0f64..10.0, delta in 0.1f64..5.0) {
            prop_assume!((r.abs() - delta).abs() > 1e-3);
            let h = 1e-6;
            let fd = (huber(r + h, delta).0 - huber(r - h, delta).0) / (2.0 * h);
            prop_assert!((fd - huber(r, delta).1).abs() < 1e-6);
        }
    }
}
