//! Complex special functions and the boundary branch rules used on the
//! imaginary axis of the Laplace plane.
//!
//! The Faddeeva function `w(u) = exp(-u^2) erfc(-iu)` is evaluated in the
//! first quadrant and extended by symmetry:
//!
//! * inside the ellipse `(x/6.3)^2 + (y/4.4)^2 < 0.085264` (radius ~1.8 on
//!   the real axis) by the Maclaurin series of `erf`,
//! * outside the unit ellipse by the Laplace continued fraction, truncated
//!   after `3 + 1442/(26 rho + 77)` levels,
//! * in between by the continued fraction shifted up by `h` and re-expanded
//!   as a truncated Taylor series back down to `u` (Gautschi's bridge).
//!
//! The lower half-plane is reached only through `w(u) = 2 exp(-u^2) - w(-u)`.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type ComplexScalar = Complex64;

const TWO_OVER_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;
const INV_SQRT_PI: f64 = 0.5 * std::f64::consts::FRAC_2_SQRT_PI;
/// ln(f64::MAX), minus a little headroom for the factor 2 in the reflection.
const MAX_EXP: f64 = 709.0;

/// Faddeeva function `w(u)`.
///
/// Fails with [`Error::Overflow`] when `u` lies so deep in the lower
/// half-plane that `exp(-u^2)` is not representable.
pub fn faddeeva_w(u: Complex64) -> Result<Complex64> {
    faddeeva_w_scaled(u, Complex64::new(0.0, 0.0))
}

/// `exp(log_scale) * w(u)`, with the scale folded into the reflection
/// exponent so that `exp(log_scale - u^2)` may stay finite even where
/// `exp(-u^2)` alone would overflow.
pub fn faddeeva_w_scaled(u: Complex64, log_scale: Complex64) -> Result<Complex64> {
    if !(u.re.is_finite() && u.im.is_finite()) {
        return Err(Error::Domain(format!("faddeeva_w argument not finite: {u}")));
    }
    if u.im >= 0.0 {
        return Ok(scaled_exp(log_scale)? * w_upper(u));
    }
    let refl = log_scale - u * u;
    if refl.re > MAX_EXP {
        return Err(Error::Overflow(u));
    }
    let mirrored = w_upper(-u);
    Ok(2.0 * refl.exp() - scaled_exp(log_scale)? * mirrored)
}

fn scaled_exp(s: Complex64) -> Result<Complex64> {
    if s.re == 0.0 && s.im == 0.0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    if s.re > MAX_EXP {
        return Err(Error::Overflow(s));
    }
    Ok(s.exp())
}

/// `w(u)` for `Im u >= 0`.
fn w_upper(u: Complex64) -> Complex64 {
    let w = w_first_quadrant(u.re.abs(), u.im);
    // w(-conj(u)) = conj(w(u))
    if u.re < 0.0 {
        w.conj()
    } else {
        w
    }
}

fn w_first_quadrant(x: f64, y: f64) -> Complex64 {
    debug_assert!(x >= 0.0 && y >= 0.0);
    if x.max(y) > 1e7 {
        // One level of the continued fraction; relative error ~1/(2|u|^2).
        let u = Complex64::new(x, y);
        return Complex64::new(0.0, INV_SQRT_PI) / u;
    }

    let xs = x / 6.3;
    let ys = y / 4.4;
    let qrho = xs * xs + ys * ys;
    let xquad = x * x - y * y;
    let yquad = 2.0 * x * y;

    if qrho < 0.085_264 {
        // erfc(-iu) = 1 + erf(iu), erf(iu) = (2/sqrt(pi)) iu sum u^{2n} / (n! (2n+1))
        let r = (1.0 - 0.85 * ys) * qrho.sqrt();
        let n = (6.0 + 72.0 * r).round() as usize;
        let mut j = 2 * n + 1;
        let mut sum = Complex64::new(1.0 / j as f64, 0.0);
        let z2 = Complex64::new(xquad, yquad);
        for i in (1..=n).rev() {
            j -= 2;
            sum = sum * z2 / i as f64 + 1.0 / j as f64;
        }
        let iu = Complex64::new(-y, x);
        let erfc_neg_iu = 1.0 + TWO_OVER_SQRT_PI * iu * sum;
        let e = (-xquad).exp();
        let exp_neg_u2 = Complex64::new(e * yquad.cos(), -e * yquad.sin());
        return exp_neg_u2 * erfc_neg_iu;
    }

    let (h, kapn, nu) = if qrho > 1.0 {
        let rho = qrho.sqrt();
        (0.0, 0usize, (3.0 + 1442.0 / (26.0 * rho + 77.0)).floor() as usize)
    } else {
        let r = (1.0 - ys) * (1.0 - qrho).sqrt();
        (
            1.88 * r,
            (7.0 + 34.0 * r).round() as usize,
            (16.0 + 26.0 * r).round() as usize,
        )
    };
    let bridged = h > 0.0;
    let h2 = 2.0 * h;
    let mut qlambda = if bridged { h2.powi(kapn as i32) } else { 0.0 };

    let (mut rx, mut ry, mut sx, mut sy) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for n in (0..=nu).rev() {
        let np1 = (n + 1) as f64;
        let tx = y + h + np1 * rx;
        let ty = x - np1 * ry;
        let c = 0.5 / (tx * tx + ty * ty);
        rx = c * tx;
        ry = c * ty;
        if bridged && n <= kapn {
            let t = qlambda + sx;
            let nsx = rx * t - ry * sy;
            sy = ry * t + rx * sy;
            sx = nsx;
            qlambda /= h2;
        }
    }
    let (re, im) = if bridged {
        (TWO_OVER_SQRT_PI * sx, TWO_OVER_SQRT_PI * sy)
    } else {
        (TWO_OVER_SQRT_PI * rx, TWO_OVER_SQRT_PI * ry)
    };
    if y == 0.0 {
        Complex64::new((-x * x).exp(), im)
    } else {
        Complex64::new(re, im)
    }
}

/// Complementary error function of a complex argument, `exp(-z^2) w(iz)`.
pub fn erfc(z: Complex64) -> Result<Complex64> {
    let iz = Complex64::new(-z.im, z.re);
    faddeeva_w_scaled(iz, -z * z)
}

/// Real complementary error function, accurate in relative terms on the
/// right tail.
pub fn erfc_real(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        return 2.0 - erfc_real(-x);
    }
    // w(ix) = erfcx(x) is real for real x
    let erfcx = w_first_quadrant(0.0, x).re;
    erfcx * (-x * x).exp()
}

/// Boundary value of `sqrt(iz)` at `z = 0+ + iy` (cut on the negative axis).
pub fn boundary_sqrt_iz(y: f64) -> Complex64 {
    if y >= 0.0 {
        Complex64::new(0.0, y.sqrt())
    } else {
        Complex64::new((-y).sqrt(), 0.0)
    }
}

/// Boundary value of `sqrt(-iz)` at `z = 0+ + iy`.
pub fn boundary_sqrt_neg_iz(y: f64) -> Complex64 {
    if y >= 0.0 {
        Complex64::new(y.sqrt(), 0.0)
    } else {
        Complex64::new(0.0, -(-y).sqrt())
    }
}

/// `int_0^inf exp(-(a x^2 + 2 b x + c)) dx = (1/2) sqrt(pi/a) exp(-c) w(i b / sqrt(a))`,
/// the `erfc` form rewritten through `w` so no intermediate overflows.
pub fn gaussian_integral(a: Complex64, b: Complex64, c: Complex64) -> Result<Complex64> {
    if !(a.re > 0.0) {
        return Err(Error::Domain(format!(
            "gaussian_integral requires Re(a) > 0, got a = {a}"
        )));
    }
    let sqrt_a = a.sqrt();
    let arg = Complex64::new(0.0, 1.0) * b / sqrt_a;
    let pref = 0.5 * std::f64::consts::PI.sqrt() / sqrt_a;
    Ok(pref * faddeeva_w_scaled(arg, -c)?)
}

/// A point of the closed right half of the Laplace plane.
///
/// Points on the imaginary axis carry the `0+` limit and take their square
/// roots from the boundary tables; interior points use principal branches,
/// which join the tables continuously.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LaplacePoint {
    Interior(Complex64),
    Boundary(f64),
}

impl LaplacePoint {
    /// Classifies `z`; `Re z == 0` becomes a boundary point.
    pub fn new(z: Complex64) -> Result<Self> {
        if !(z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::Domain(format!("Laplace argument not finite: {z}")));
        }
        if z.re < 0.0 {
            return Err(Error::Domain(format!(
                "Laplace argument must satisfy Re z >= 0, got {z}"
            )));
        }
        Ok(if z.re == 0.0 {
            Self::Boundary(z.im)
        } else {
            Self::Interior(z)
        })
    }

    pub fn z(&self) -> Complex64 {
        match *self {
            Self::Interior(z) => z,
            Self::Boundary(y) => Complex64::new(0.0, y),
        }
    }

    pub fn is_origin(&self) -> bool {
        matches!(*self, Self::Boundary(y) if y == 0.0)
    }

    pub fn sqrt_iz(&self) -> Complex64 {
        match *self {
            Self::Interior(z) => (Complex64::new(0.0, 1.0) * z).sqrt(),
            Self::Boundary(y) => boundary_sqrt_iz(y),
        }
    }

    pub fn sqrt_neg_iz(&self) -> Complex64 {
        match *self {
            Self::Interior(z) => (Complex64::new(0.0, -1.0) * z).sqrt(),
            Self::Boundary(y) => boundary_sqrt_neg_iz(y),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
    }

    /// erfc(1) from the Maclaurin series of erf, summed to convergence.
    fn erfc_one_series() -> f64 {
        let mut sum = 0.0;
        let mut fact = 1.0;
        for n in 0..40 {
            if n > 0 {
                fact *= n as f64;
            }
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            sum += sign / (fact * (2 * n + 1) as f64);
        }
        1.0 - TWO_OVER_SQRT_PI * sum
    }

    /// Composite Gauss-Legendre oracle on `[0, upper]`, with `upper` chosen
    /// where the Gaussian envelope has dropped below `e^-60`.
    fn gaussian_integral_oracle(a: Complex64, b: Complex64, cc: Complex64) -> (Complex64, f64) {
        let f = |x: f64| (-(a * x * x + 2.0 * b * x + cc)).exp();
        let mut upper = 1.0;
        while a.re * upper * upper + 2.0 * b.re * upper < 60.0 + b.re.min(0.0).powi(2) / a.re {
            upper *= 1.5;
        }
        let rule = crate::quadrature::GaussLegendre::new(24);
        let panels = 96;
        let mag: f64 = rule.integrate_composite(0.0, upper, panels, |x| f(x).norm());
        let acc: Complex64 = rule.integrate_composite(0.0, upper, panels, f);
        (acc, mag)
    }

    #[test]
    fn w_at_origin_is_one() {
        let w = faddeeva_w(c(0.0, 0.0)).unwrap();
        assert_eq!(w, c(1.0, 0.0));
    }

    #[test]
    fn w_at_i_matches_e_erfc_one() {
        let expected = std::f64::consts::E * erfc_one_series();
        let w = faddeeva_w(c(0.0, 1.0)).unwrap();
        assert!((w.re - expected).abs() < 1e-13, "{w} vs {expected}");
        assert!(w.im.abs() < 1e-15);
        assert!((expected - 0.427_583_576_15).abs() < 1e-11);
    }

    #[test]
    fn reflection_identity_at_one_plus_two_i() {
        let u = c(1.0, 2.0);
        let lhs = faddeeva_w(-u).unwrap() + faddeeva_w(u).unwrap();
        let rhs = 2.0 * (-u * u).exp();
        assert!(rel(lhs, rhs) < 1e-12, "{lhs} vs {rhs}");
    }

    #[test]
    fn overflow_is_signalled_not_infinite() {
        let err = faddeeva_w(c(0.0, -40.0)).unwrap_err();
        assert!(matches!(err, Error::Overflow(_)));
        assert!(faddeeva_w(c(f64::NAN, 0.0)).is_err());
    }

    #[test]
    fn large_argument_asymptotics() {
        let u = c(3e7, 2e7);
        let w = faddeeva_w(u).unwrap();
        let asym = Complex64::new(0.0, INV_SQRT_PI) / u;
        assert!(rel(w, asym) < 1e-12);
    }

    #[test]
    fn real_axis_real_part_is_gaussian() {
        for x in [0.3, 2.5, 6.0, 9.0] {
            let w = faddeeva_w(c(x, 0.0)).unwrap();
            assert!((w.re - (-x * x).exp()).abs() <= 1e-15 * w.norm());
        }
    }

    #[test]
    fn erfc_real_matches_known_values() {
        assert!((erfc_real(0.0) - 1.0).abs() < 1e-15);
        assert!((erfc_real(1.0) - 0.157_299_207_050_285_13).abs() < 1e-15);
        assert!((erfc_real(-1.0) - 1.842_700_792_949_715).abs() < 1e-14);
        // deep tail keeps relative accuracy
        let v = erfc_real(10.0);
        assert!((v / 2.088_487_583_762_545e-45 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn complex_erfc_consistent_with_real() {
        for x in [-2.0, -0.5, 0.0, 0.7, 3.0] {
            let z = erfc(c(x, 0.0)).unwrap();
            assert!((z.re - erfc_real(x)).abs() < 1e-14);
            assert!(z.im.abs() < 1e-14);
        }
    }

    #[test]
    fn boundary_tables() {
        assert_eq!(boundary_sqrt_iz(0.0), c(0.0, 0.0));
        assert_eq!(boundary_sqrt_neg_iz(0.0), c(0.0, 0.0));
        assert_eq!(boundary_sqrt_iz(4.0), c(0.0, 2.0));
        assert_eq!(boundary_sqrt_neg_iz(4.0), c(2.0, 0.0));
        assert_eq!(boundary_sqrt_iz(-4.0), c(2.0, 0.0));
        assert_eq!(boundary_sqrt_neg_iz(-4.0), c(0.0, -2.0));
    }

    #[test]
    fn boundary_squares_on_log_grid() {
        for k in 0..=48 {
            let mag = 10f64.powf(-6.0 + 12.0 * k as f64 / 48.0);
            for y in [mag, -mag] {
                let iz = c(-y, 0.0);
                let s = boundary_sqrt_iz(y);
                let t = boundary_sqrt_neg_iz(y);
                assert!(rel(s * s, iz) < 1e-14);
                assert!(rel(t * t, -iz) < 1e-14);
            }
        }
    }

    #[test]
    fn interior_points_join_boundary_tables() {
        for y in [-9.0, -0.1, 0.3, 5.0] {
            let inner = LaplacePoint::new(c(1e-12, y)).unwrap();
            let edge = LaplacePoint::new(c(0.0, y)).unwrap();
            assert!(matches!(edge, LaplacePoint::Boundary(_)));
            assert!((inner.sqrt_iz() - edge.sqrt_iz()).norm() < 1e-6);
            assert!((inner.sqrt_neg_iz() - edge.sqrt_neg_iz()).norm() < 1e-6);
        }
        assert!(LaplacePoint::new(c(-1.0, 0.0)).is_err());
        assert!(LaplacePoint::new(c(0.0, 0.0)).unwrap().is_origin());
    }

    #[test]
    fn gaussian_integral_examples() {
        let half_gauss = gaussian_integral(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)).unwrap();
        assert!((half_gauss.re - 0.886_226_925_452_758).abs() < 1e-15);

        let (oracle, _) = gaussian_integral_oracle(c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0));
        let v = gaussian_integral(c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)).unwrap();
        assert!(rel(v, oracle) < 1e-10, "{v} vs {oracle}");
        // e sqrt(pi) erfc(1) / 2
        assert!((v.re - 0.378_936_078_070_656_05).abs() < 1e-14);

        let (oracle, _) = gaussian_integral_oracle(c(2.0, 0.0), c(0.0, 1.0), c(0.0, 0.0));
        let v = gaussian_integral(c(2.0, 0.0), c(0.0, 1.0), c(0.0, 0.0)).unwrap();
        assert!(rel(v, oracle) < 1e-10, "{v} vs {oracle}");
    }

    #[test]
    fn gaussian_integral_rejects_non_decaying() {
        assert!(matches!(
            gaussian_integral(c(0.0, 1.0), c(0.0, 0.0), c(0.0, 0.0)),
            Err(Error::Domain(_))
        ));
        assert!(gaussian_integral(c(-1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(400))]

        #[test]
        fn w_bounded_in_upper_half_plane(x in -40.0f64..40.0, y in 0.0f64..40.0) {
            let w = faddeeva_w(c(x, y)).unwrap();
            prop_assert!(w.norm() <= 1.0 + 1e-12);
        }

        #[test]
        fn w_conjugation_symmetry(x in -25.0f64..25.0, y in -5.0f64..25.0) {
            let u = c(x, y);
            let lhs = faddeeva_w((-u).conj()).unwrap();
            let rhs = faddeeva_w(u).unwrap().conj();
            prop_assert!((lhs - rhs).norm() <= 1e-12 * rhs.norm().max(1.0));
        }

        #[test]
        fn w_satisfies_its_ode(x in -8.0f64..8.0, y in 0.05f64..8.0) {
            // w' = -2 u w + 2i/sqrt(pi), checked by a central difference
            let u = c(x, y);
            let h = 1e-5;
            let d = (faddeeva_w(u + h).unwrap() - faddeeva_w(u - h).unwrap()) / (2.0 * h);
            let rhs = -2.0 * u * faddeeva_w(u).unwrap() + Complex64::new(0.0, TWO_OVER_SQRT_PI);
            prop_assert!((d - rhs).norm() < 1e-7 * (1.0 + rhs.norm()));
        }

        #[test]
        fn gaussian_integral_matches_quadrature(
            ar in 0.1f64..10.0, ai in -1.0f64..1.0,
            br in -1.5f64..1.5, bi in -1.5f64..1.5,
            cr in -1.0f64..1.0, ci in -1.0f64..1.0,
        ) {
            let (a, b, cc) = (c(ar, ai), c(br, bi), c(cr, ci));
            let v = gaussian_integral(a, b, cc).unwrap();
            let (oracle, mag) = gaussian_integral_oracle(a, b, cc);
            prop_assert!((v - oracle).norm() <= 1e-10 * mag.max(oracle.norm()), "{} vs {}", v, oracle);
        }
    }
}
