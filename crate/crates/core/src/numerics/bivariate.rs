//! Bivariate standard normal CDF after Drezner & Wesolowsky with Genz's
//! modifications for double precision and |rho| close to one.
#![allow(clippy::excessive_precision)]

use std::f64::consts::PI;

use super::normal::phi;
use super::{NumericsError, Result};

// Gauss-Legendre 20-point rule on [-1, 1]: (weight, abscissa) for the negative half.
const GL20: [(f64, f64); 10] = [
    (0.1761400713915212e-01, -0.9931285991850949e+00),
    (0.4060142980038694e-01, -0.9639719272779138e+00),
    (0.6267204833410906e-01, -0.9122344282513259e+00),
    (0.8327674157670475e-01, -0.8391169718222188e+00),
    (0.1019301198172404e+00, -0.7463319064601508e+00),
    (0.1181945319615184e+00, -0.6360536807265150e+00),
    (0.1316886384491766e+00, -0.5108670019508271e+00),
    (0.1420961093183821e+00, -0.3737060887154196e+00),
    (0.1491729864726037e+00, -0.2277858511416451e+00),
    (0.1527533871307259e+00, -0.7652652113349733e-01),
];

const SPLIT: f64 = 0.925;

/// `P(X <= a, Y <= b)` for standard normals with correlation `rho`.
///
/// `rho` may be exactly ±1, in which case the degenerate closed forms are used.
/// The result is exactly symmetric in `(a, b)`.
pub fn bivariate_normal_cdf(a: f64, b: f64, rho: f64) -> Result<f64> {
    if !a.is_finite() || !b.is_finite() || rho.is_nan() {
        return Err(NumericsError::NonFinite("bivariate_normal_cdf"));
    }
    if rho.abs() > 1.0 {
        return Err(NumericsError::Domain {
            what: "correlation",
            value: rho,
        });
    }
    Ok(bvn_lower(a, b, rho))
}

/// Unchecked lower-orthant probability; `|rho| <= 1`, finite limits.
pub(crate) fn bvn_lower(a: f64, b: f64, rho: f64) -> f64 {
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    if rho >= 1.0 {
        return phi(a);
    }
    if rho <= -1.0 {
        return (phi(a) - phi(-b)).max(0.0);
    }
    if rho <= -SPLIT {
        // P(X <= a, Y <= b) = P(X <= a) - P(X <= a, -Y < -b)
        let v = phi(a) - upper_orthant(-a, b, -rho);
        return v.clamp(0.0, 1.0);
    }
    upper_orthant(-a, -b, rho).clamp(0.0, 1.0)
}

/// `P(X > h, Y > k)` for `rho` in (-0.925, 1).
fn upper_orthant(h: f64, k: f64, r: f64) -> f64 {
    let hk = h * k;
    if r.abs() < SPLIT {
        let mut bvn = 0.0;
        if r != 0.0 {
            let hs = 0.5 * (h * h + k * k);
            let asr = 0.5 * r.asin();
            for &(w, x) in &GL20 {
                for sign in [-1.0, 1.0] {
                    let sn = (asr * (sign * x + 1.0)).sin();
                    bvn += w * ((sn * hk - hs) / (1.0 - sn * sn)).exp();
                }
            }
            bvn *= asr / (2.0 * PI);
        }
        return bvn + phi(-h) * phi(-k);
    }

    // 0.925 <= r < 1
    let a_s = (1.0 - r) * (1.0 + r);
    let mut a = a_s.sqrt();
    let b_s = (h - k) * (h - k);
    let c = (4.0 - hk) / 8.0;
    let d = (12.0 - hk) / 16.0;
    let asr = -0.5 * (b_s / a_s + hk);
    let mut bvn = 0.0;
    if asr > -100.0 {
        bvn = a
            * asr.exp()
            * (1.0 - c * (b_s - a_s) * (1.0 - d * b_s / 5.0) / 3.0 + c * d * a_s * a_s / 5.0);
    }
    if -hk < 100.0 {
        let b = b_s.sqrt();
        bvn -= (-0.5 * hk).exp()
            * (2.0 * PI).sqrt()
            * phi(-b / a)
            * b
            * (1.0 - c * b_s * (1.0 - d * b_s / 5.0) / 3.0);
    }
    a *= 0.5;
    for &(w, x) in &GL20 {
        for sign in [-1.0, 1.0] {
            let xs = (a * (sign * x + 1.0)).powi(2);
            let rs = (1.0 - xs).sqrt();
            let asr = -0.5 * (b_s / xs + hk);
            if asr > -100.0 {
                bvn += a
                    * w
                    * asr.exp()
                    * ((-hk * (1.0 - rs) / (2.0 * (1.0 + rs))).exp() / rs
                        - (1.0 + c * xs * (1.0 + d * xs)));
            }
        }
    }
    -bvn / (2.0 * PI) + phi(-h.max(k))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Plackett's identity integrated with adaptive Simpson in the angle
    /// variable `rho = sin(t)`: Phi2 = Phi(a)Phi(b) + int_0^asin(rho) g(t) dt.
    fn plackett_oracle(a: f64, b: f64, rho: f64) -> f64 {
        let g = |t: f64| {
            let c = t.cos();
            (-(a * a - 2.0 * a * b * t.sin() + b * b) / (2.0 * c * c)).exp() / (2.0 * PI)
        };
        fn simpson<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, flo: f64, fm: f64, fhi: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (lo + hi);
            let lm = 0.5 * (lo + m);
            let rm = 0.5 * (m + hi);
            let flm = f(lm);
            let frm = f(rm);
            let left = (m - lo) / 6.0 * (flo + 4.0 * flm + fm);
            let right = (hi - m) / 6.0 * (fm + 4.0 * frm + fhi);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                return left + right + (left + right - whole) / 15.0;
            }
            simpson(f, lo, m, flo, flm, fm, left, tol / 2.0, depth - 1)
                + simpson(f, m, hi, fm, frm, fhi, right, tol / 2.0, depth - 1)
        }
        let hi = rho.asin();
        let (flo, fhi, fm) = (g(0.0), g(hi), g(0.5 * hi));
        let whole = hi / 6.0 * (flo + 4.0 * fm + fhi);
        phi(a) * phi(b) + simpson(&g, 0.0, hi, flo, fm, fhi, whole, 1e-15, 40)
    }

    #[test]
    fn independence_factorizes() {
        for &(a, b) in &[(0.3, -1.2), (2.0, 2.0), (-3.0, 0.5)] {
            let v = bivariate_normal_cdf(a, b, 0.0).unwrap();
            assert!((v - phi(a) * phi(b)).abs() <= 1e-15);
        }
    }

    #[test]
    fn orthant_identity() {
        assert!((bivariate_normal_cdf(0.0, 0.0, 0.5).unwrap() - 1.0 / 3.0).abs() <= 1e-14);
        assert!((bivariate_normal_cdf(0.0, 0.0, -0.5).unwrap() - 1.0 / 6.0).abs() <= 1e-14);
        for i in -99..=99 {
            let rho = i as f64 / 100.0;
            let expect = 0.25 + rho.asin() / (2.0 * PI);
            assert!((bvn_lower(0.0, 0.0, rho) - expect).abs() <= 1e-13, "rho = {rho}");
        }
    }

    #[test]
    fn reference_values_high_precision() {
        // 40-digit Plackett quadrature (mpmath), frozen.
        let cases = [
            (0.5, -0.3, 0.4, 0.317_126_928_286_165_1),
            (1.2, 0.7, 0.95, 0.756_082_832_572_084_3),
            (-1.5, -0.8, -0.97, 2.900_198_058_850_813e-23),
            (-0.3, 0.9, 0.99, 0.382_088_577_811_047_4),
            (2.0, -2.0, -0.5, 0.018_697_185_713_016_23),
            (0.524_400_512_708_041, 0.524_400_512_708_041, 0.6, 0.572_748_362_697_769_7),
            (-2.5, 1.0, 0.999, 0.006_209_665_325_776_135),
            (0.1, 0.2, -0.93, 0.137_139_776_399_404_4),
        ];
        for (a, b, rho, expect) in cases {
            let v = bivariate_normal_cdf(a, b, rho).unwrap();
            assert!((v - expect).abs() <= 1e-13, "({a}, {b}, {rho}): {v} vs {expect}");
        }
    }

    #[test]
    fn matches_plackett_oracle_on_grid() {
        let limits = [-2.7, -1.1, -0.2, 0.0, 0.6, 1.9];
        let rhos = [-0.999, -0.95, -0.925, -0.6, -0.1, 0.2, 0.7, 0.924, 0.93, 0.99, 0.9999];
        for &a in &limits {
            for &b in &limits {
                for &rho in &rhos {
                    let v = bvn_lower(a, b, rho);
                    let o = plackett_oracle(a, b, rho);
                    assert!((v - o).abs() <= 1e-11, "({a}, {b}, {rho}): {v} vs {o}");
                }
            }
        }
    }

    #[test]
    fn degenerate_endpoints() {
        assert_eq!(bvn_lower(0.3, -0.4, 1.0), phi(-0.4));
        assert!((bvn_lower(0.3, -0.4, -1.0) - (phi(0.3) - phi(0.4)).max(0.0)).abs() < 1e-16);
        assert_eq!(bvn_lower(-1.0, -1.0, -1.0), 0.0);
        assert!(bivariate_normal_cdf(0.0, 0.0, 1.0 + 1e-9).is_err());
        assert!(bivariate_normal_cdf(f64::NAN, 0.0, 0.0).is_err());
    }

    #[test]
    fn continuous_across_branch_split() {
        for &(a, b) in &[(0.4, 0.1), (-1.0, 0.5), (1.5, 1.5)] {
            for &s in &[SPLIT, -SPLIT] {
                let below = bvn_lower(a, b, s - 1e-12 * s.signum());
                let at = bvn_lower(a, b, s);
                assert!((below - at).abs() <= 1e-12, "({a}, {b}, {s})");
            }
        }
    }
}
