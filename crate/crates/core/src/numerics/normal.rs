use std::f64::consts::{FRAC_1_SQRT_2, PI};

use super::{NumericsError, Result};

/// Standard normal CDF without input checks. Relies on `erfc` so both tails keep
/// full relative precision.
#[inline]
pub(crate) fn phi(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal cumulative distribution function.
pub fn std_normal_cdf(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(NumericsError::NonFinite("std_normal_cdf"));
    }
    Ok(phi(x))
}

/// Inverse of the standard normal CDF for `0 < p < 1`.
pub fn std_normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(NumericsError::Domain {
            what: "probability",
            value: p,
        });
    }
    Ok(phi_inv(p))
}

// Acklam's rational approximation (relative error ~1e-9), polished below.
const A: [f64; 6] = [
    -3.969683028665376e+01,
    2.209460984245205e+02,
    -2.759285104469687e+02,
    1.383577518672690e+02,
    -3.066479806614716e+01,
    2.506628277459239e+00,
];
const B: [f64; 5] = [
    -5.447609879822406e+01,
    1.615858368580409e+02,
    -1.556989798598866e+02,
    6.680131188771972e+01,
    -1.328068155288572e+01,
];
const C: [f64; 6] = [
    -7.784894002430293e-03,
    -3.223964580411365e-01,
    -2.400758277161838e+00,
    -2.549732539343734e+00,
    4.374664141464968e+00,
    2.938163982698783e+00,
];
const D: [f64; 4] = [
    7.784695709041462e-03,
    3.224671290700398e-01,
    2.445134137142996e+00,
    3.754408661907416e+00,
];
const P_LOW: f64 = 0.02425;

fn initial_guess(p: f64) -> f64 {
    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    }
}

/// Quantile for `p` in (0, 1); no argument checks.
pub(crate) fn phi_inv(p: f64) -> f64 {
    // 1 - p is exact for p >= 0.5, so work in the lower tail.
    if p > 0.5 {
        return -phi_inv(1.0 - p);
    }
    if p == 0.5 {
        return 0.0;
    }
    let mut x = initial_guess(p);
    let sqrt_2pi = (2.0 * PI).sqrt();
    for _ in 0..4 {
        let e = phi(x) - p;
        let u = e * sqrt_2pi * (0.5 * x * x).exp();
        let step = u / (1.0 + 0.5 * x * u);
        x -= step;
        if step.abs() <= 1e-15 * x.abs().max(1.0) {
            break;
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference values computed with 40-digit arithmetic (mpmath ncdf / erfinv).
    const PHI_1: f64 = 0.841_344_746_068_542_948_6;
    const PHI_M3: f64 = 0.001_349_898_031_630_094_526_7;
    const PHI_2_5: f64 = 0.993_790_334_674_223_864_8;
    const PHI_M8: f64 = 6.220_960_574_271_784e-16;

    #[test]
    fn cdf_reference_values() {
        assert_eq!(std_normal_cdf(0.0).unwrap(), 0.5);
        assert!((std_normal_cdf(1.0).unwrap() - PHI_1).abs() <= 1e-12);
        assert!((std_normal_cdf(-1.0).unwrap() - (1.0 - PHI_1)).abs() <= 1e-12);
        assert!((std_normal_cdf(-3.0).unwrap() - PHI_M3).abs() <= 1e-12);
        assert!((std_normal_cdf(2.5).unwrap() - PHI_2_5).abs() <= 1e-12);
        assert!((std_normal_cdf(-8.0).unwrap() - PHI_M8).abs() / PHI_M8 <= 1e-10);
    }

    #[test]
    fn cdf_rejects_non_finite() {
        assert!(std_normal_cdf(f64::NAN).is_err());
        assert!(std_normal_cdf(f64::INFINITY).is_err());
    }

    #[test]
    fn quantile_reference_values() {
        assert_eq!(std_normal_quantile(0.5).unwrap(), 0.0);
        // Inverse of the CDF oracle at 0.841344746 (mpmath erfinv).
        let x = std_normal_quantile(0.841344746).unwrap();
        assert!((x - 0.999_999_999_716_730_4).abs() <= 1e-12);
        assert!((x - 1.0).abs() <= 1e-8);
        let x = std_normal_quantile(0.7).unwrap();
        assert!((x - 0.524_400_512_708_040_8).abs() <= 1e-13);
        let x = std_normal_quantile(1e-9).unwrap();
        assert!((x + 5.997_807_015_007_687).abs() <= 1e-11);
        assert!((phi(x) - 1e-9).abs() <= 1e-10);
    }

    #[test]
    fn quantile_tail_matches_bisection() {
        // Independent bisection on the CDF (upper tail via 1 - p, which Phi
        // cannot resolve near one).
        for &p in &[1e-12, 1e-9, 3e-5, 0.01, 0.2, 0.45, 0.8, 0.99, 1.0 - 1e-9] {
            let (mut lo, mut hi) = (-40.0_f64, 40.0_f64);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let below = if p < 0.5 { phi(mid) < p } else { phi(-mid) > 1.0 - p };
                if below {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let q = std_normal_quantile(p).unwrap();
            assert!((q - 0.5 * (lo + hi)).abs() <= 1e-9 * q.abs().max(1.0), "p = {p}");
        }
    }

    #[test]
    fn quantile_domain_errors_name_value() {
        for p in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            let err = std_normal_quantile(p).unwrap_err();
            assert!(matches!(err, NumericsError::Domain { .. }));
        }
        let msg = std_normal_quantile(1.5).unwrap_err().to_string();
        assert!(msg.contains("1.5"), "{msg}");
    }
}
