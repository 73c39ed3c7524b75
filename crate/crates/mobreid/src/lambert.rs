//! Lower branch of the Lambert W function on (-1/e, 0).

use crate::error::{Error, Result};

const INV_E: f64 = 1.0 / std::f64::consts::E;

/// W_{-1}(x) for x in [-1/e, 0): the solution w <= -1 of w e^w = x.
///
/// Halley iteration from an asymptotic initial guess, absolute
/// tolerance 1e-12. Returns -1 exactly at x = -1/e.
pub fn lambert_w_m1(x: f64) -> Result<f64> {
    if !(x >= -INV_E && x < 0.0) {
        return Err(Error::InvalidArgument(format!(
            "lambert W_-1 argument {x} outside [-1/e, 0)"
        )));
    }
    if x == -INV_E {
        return Ok(-1.0);
    }
    // Initial guess: series near the branch point, log asymptotics near 0-.
    let mut w = if x > -0.3 {
        let l1 = (-x).ln();
        let l2 = (-l1).ln();
        l1 - l2 + l2 / l1
    } else {
        // p = -sqrt(2(1 + e x)) picks the lower branch
        let p = -(2.0 * (1.0 + std::f64::consts::E * x)).max(0.0).sqrt();
        -1.0 + p - p * p / 3.0
    };
    for _ in 0..64 {
        let ew = w.exp();
        let f = w * ew - x;
        let denom = ew * (w + 1.0) - (w + 2.0) * f / (2.0 * w + 2.0);
        let step = f / denom;
        let next = w - step;
        if (next - w).abs() <= 1e-12 {
            return Ok(next);
        }
        w = next;
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverts_w_exp_w_on_a_grid() {
        // forward map w -> w e^w over the branch domain w <= -1
        for i in 1..200 {
            let w = -1.0 - (i as f64) * 0.1;
            let x = w * w.exp();
            let back = lambert_w_m1(x).unwrap();
            assert!((back - w).abs() < 1e-9, "w={w} back={back}");
        }
    }

    #[test]
    fn branch_point_and_domain_edges() {
        assert_eq!(lambert_w_m1(-INV_E).unwrap(), -1.0);
        assert!(lambert_w_m1(0.0).is_err());
        assert!(lambert_w_m1(-1.0).is_err());
        // very small magnitude argument: w is a large negative number
        let w = lambert_w_m1(-1e-15).unwrap();
        assert!((w * w.exp() - -1e-15).abs() / 1e-15 < 1e-9);
    }
}
