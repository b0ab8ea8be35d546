//! Log-derivatives of theta functions: `zeta_a`, `wp_a`, `wp_a'` and the
//! function `S(u) = log(theta_1(u) / theta_4(u))` with its derivatives in
//! `u` and `tau`.
//!
//! Everything is read off the Taylor series of `log theta_a(x + h)` in `h`,
//! which the [`crate::series`] module builds from the exact theta Taylor
//! coefficients. `zeta_a` is its first coefficient, `wp_a = -2 c_2`,
//! `wp_a' = -6 c_3`, and so on.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::series::Series;
use crate::theta::{theta_const, theta_taylor, ModularParam, ThetaIndex};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Direct calls closer than this to a pole fail with `PoleProximity`.
pub const POLE_RADIUS: f64 = 1e-8;

/// Distance from `x` to the nearest zero of `theta_a` (mod the lattice `1, tau`).
pub fn zero_distance(a: ThetaIndex, x: Complex64, m: &ModularParam) -> f64 {
    let offset = match a {
        ThetaIndex::One => Complex64::new(0.0, 0.0),
        ThetaIndex::Two => Complex64::new(0.5, 0.0),
        ThetaIndex::Three => Complex64::new(0.5, m.im_tau() / 2.0),
        ThetaIndex::Four => Complex64::new(0.0, m.im_tau() / 2.0),
    };
    lattice_distance(x - offset, 1.0, m.im_tau())
}

/// Distance from `x` to the lattice `period_re * Z + i period_im * Z`.
pub fn lattice_distance(x: Complex64, period_re: f64, period_im: f64) -> f64 {
    let re = x.re - period_re * (x.re / period_re).round();
    let im = x.im - period_im * (x.im / period_im).round();
    re.hypot(im)
}

fn guard(function: &'static str, a: ThetaIndex, x: Complex64, m: &ModularParam) -> Result<()> {
    let d = zero_distance(a, x, m);
    if d < POLE_RADIUS {
        return Err(Error::PoleProximity {
            function,
            at: format!("{x}"),
            distance: d,
        });
    }
    Ok(())
}

/// Taylor series of `log theta_a(x + h)` in `h` with `order + 1` coefficients.
/// The constant term is the principal logarithm of `theta_a(x)`.
pub fn log_theta_series(a: ThetaIndex, x: Complex64, m: &ModularParam, order: usize) -> Result<Series> {
    guard("log theta", a, x, m)?;
    Ok(Series::from_coeffs(theta_taylor(a, x, m, order)).ln())
}

/// `zeta_a`, `wp_a`, `wp_a'`, `wp_a''` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZetaJet {
    pub zeta: Complex64,
    pub wp: Complex64,
    pub wp1: Complex64,
    pub wp2: Complex64,
}

pub fn zeta_jet(a: ThetaIndex, x: Complex64, m: &ModularParam) -> Result<ZetaJet> {
    let s = log_theta_series(a, x, m, 4)?;
    Ok(ZetaJet {
        zeta: s.coeff(1),
        wp: -2.0 * s.coeff(2),
        wp1: -6.0 * s.coeff(3),
        wp2: -24.0 * s.coeff(4),
    })
}

/// `theta_a'(x) / theta_a(x)`.
pub fn zeta_a(a: ThetaIndex, x: Complex64, m: &ModularParam) -> Result<Complex64> {
    guard("zeta", a, x, m)?;
    let t = theta_taylor(a, x, m, 1);
    Ok(t[1] / t[0])
}

/// `-d/dx zeta_a(x)`.
pub fn wp_a(a: ThetaIndex, x: Complex64, m: &ModularParam) -> Result<Complex64> {
    guard("wp", a, x, m)?;
    Ok(zeta_jet(a, x, m)?.wp)
}

/// `d/dx wp_a(x)`.
pub fn wp_a_prime(a: ThetaIndex, x: Complex64, m: &ModularParam) -> Result<Complex64> {
    guard("wp'", a, x, m)?;
    Ok(zeta_jet(a, x, m)?.wp1)
}

/// `S` and its first three `u`-derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SValue {
    pub value: Complex64,
    pub d1: Complex64,
    pub d2: Complex64,
    pub d3: Complex64,
    /// Number of `2 pi i` sheets added to the principal logarithm.
    pub branch_tag: i64,
}

/// Carries the branch of `S` from one sample of a path to the next.
#[derive(Debug, Clone, Default)]
pub struct PathContext {
    last: Option<Complex64>,
}

impl PathContext {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn last(&self) -> Option<Complex64> {
        self.last
    }
}

/// Taylor series of `S(x + h)` in `h`, `order + 1` coefficients, principal branch.
pub fn s_series(x: Complex64, m: &ModularParam, order: usize) -> Result<Series> {
    let l1 = log_theta_series(ThetaIndex::One, x, m, order)?;
    let l4 = log_theta_series(ThetaIndex::Four, x, m, order)?;
    let mut s = &l1 - &l4;
    // principal log of the ratio rather than a difference of logs
    let t1 = theta_taylor(ThetaIndex::One, x, m, 0)[0];
    let t4 = theta_taylor(ThetaIndex::Four, x, m, 0)[0];
    let mut c = s.coeffs().to_vec();
    c[0] = (t1 / t4).ln();
    s = Series::from_coeffs(c);
    Ok(s)
}

pub fn s_fn(x: Complex64, m: &ModularParam, path: Option<&mut PathContext>) -> Result<SValue> {
    let s = s_series(x, m, 3)?;
    let principal = s.coeff(0);
    let mut value = principal;
    let mut branch_tag = 0;
    if let Some(ctx) = path {
        if let Some(prev) = ctx.last {
            let k = ((prev.im - principal.im) / (2.0 * PI)).round();
            value = principal + Complex64::new(0.0, 2.0 * PI * k);
            let jump = (value.im - prev.im).abs();
            if jump > PI / 2.0 {
                return Err(Error::BranchJump { jump });
            }
            branch_tag = k as i64;
        }
        ctx.last = Some(value);
    }
    Ok(SValue {
        value,
        d1: s.coeff(1),
        d2: 2.0 * s.coeff(2),
        d3: 6.0 * s.coeff(3),
        branch_tag,
    })
}

/// `S'(x)` alone.
pub fn s_prime(x: Complex64, m: &ModularParam) -> Result<Complex64> {
    Ok(zeta_a(ThetaIndex::One, x, m)? - zeta_a(ThetaIndex::Four, x, m)?)
}

/// `d S / d tau` from `2 pi i S. = S' zeta_2 + (pi^2/2) theta_4(0)^4`.
pub fn s_dtau(x: Complex64, m: &ModularParam) -> Result<Complex64> {
    let s1 = s_prime(x, m)?;
    let z2 = zeta_a(ThetaIndex::Two, x, m)?;
    let t4 = theta_const(ThetaIndex::Four, m);
    Ok((s1 * z2 + PI * PI / 2.0 * t4.powi(4)) / (2.0 * PI * I))
}

/// `d S' / d tau` from `2 pi i S.' = S'' zeta_2 - S' wp_2`.
pub fn s_prime_dtau(x: Complex64, m: &ModularParam) -> Result<Complex64> {
    let s = s_fn(x, m, None)?;
    let j2 = zeta_jet(ThetaIndex::Two, x, m)?;
    Ok((s.d2 * j2.zeta - s.d1 * j2.wp) / (2.0 * PI * I))
}

/// `d/d tau` of `zeta_1(x, tau/2)`; `m` is the full parameter `tau`.
pub fn zeta1_halfmod_dtau(x: Complex64, m: &ModularParam) -> Result<Complex64> {
    let j = zeta_jet(ThetaIndex::One, x, &m.half())?;
    Ok((-j.zeta * j.wp - 0.5 * j.wp1) / (4.0 * PI * I))
}

/// `d/d tau` of `wp_1(x, tau/2)`; `m` is the full parameter `tau`.
pub fn wp1_halfmod_dtau(x: Complex64, m: &ModularParam) -> Result<Complex64> {
    let j = zeta_jet(ThetaIndex::One, x, &m.half())?;
    Ok((-j.wp * j.wp + j.zeta * j.wp1 + 0.5 * j.wp2) / (4.0 * PI * I))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theta::{theta, theta_du};
    use approx::assert_abs_diff_eq;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn tau_i() -> ModularParam {
        ModularParam::from_imag(1.0).unwrap()
    }

    #[test]
    fn zeta2_is_odd_at_origin() {
        assert_abs_diff_eq!(
            zeta_a(ThetaIndex::Two, c(0.0), &tau_i()).unwrap().norm(),
            0.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn leading_pole_terms() {
        let m = tau_i();
        let z = zeta_a(ThetaIndex::One, c(0.01), &m).unwrap();
        assert!((z - c(100.0)).norm() < 0.5);
        let p = wp_a(ThetaIndex::One, c(0.01), &m).unwrap();
        assert!(((p.re - 1e4) / 1e4).abs() < 0.02);
    }

    #[test]
    fn zeta_is_quotient_of_kernel_calls() {
        let m = tau_i();
        let x = c(0.3);
        let direct = theta_du(ThetaIndex::One, 1, x, &m).unwrap() / theta(ThetaIndex::One, x, &m);
        assert_eq!(zeta_a(ThetaIndex::One, x, &m).unwrap(), direct);
    }

    #[test]
    fn pole_is_rejected() {
        let m = tau_i();
        let e = zeta_a(ThetaIndex::One, c(1.0 + 1e-10), &m).unwrap_err();
        assert!(matches!(e, Error::PoleProximity { .. }));
        let e = s_fn(Complex64::new(0.0, 0.5), &m, None).unwrap_err();
        assert!(matches!(e, Error::PoleProximity { .. }));
    }

    #[test]
    fn wp_prime_is_odd() {
        let m = tau_i();
        let x = Complex64::new(0.21, 0.13);
        let s = wp_a_prime(ThetaIndex::One, x, &m).unwrap() + wp_a_prime(ThetaIndex::One, -x, &m).unwrap();
        assert!(s.norm() < 1e-11);
    }

    #[test]
    fn s_shifts_by_i_pi_along_a_unit_path() {
        let m = tau_i();
        let x0 = Complex64::new(0.2, 0.1);
        let start = s_fn(x0, &m, None).unwrap().value;
        let mut ctx = PathContext::new();
        let mut last = start;
        for k in 0..=200 {
            last = s_fn(x0 + c(k as f64 / 200.0), &m, Some(&mut ctx)).unwrap().value;
        }
        let d = last - start;
        assert!((d.norm() - PI).abs() < 1e-11 && d.re.abs() < 1e-11, "{d}");
    }

    #[test]
    fn branch_jump_is_detected() {
        let m = tau_i();
        let mut ctx = PathContext::new();
        s_fn(Complex64::new(0.2, 0.1), &m, Some(&mut ctx)).unwrap();
        // a full real period in one step flips the sign of theta_1
        let e = s_fn(Complex64::new(1.2, 0.1), &m, Some(&mut ctx)).unwrap_err();
        assert!(matches!(e, Error::BranchJump { .. }));
    }

    #[test]
    fn s_prime_is_one_over_x_near_zero() {
        let m = tau_i();
        let s = s_fn(c(1e-3), &m, None).unwrap();
        assert!((s.d1 - c(1e3)).norm() < 1.0);
    }

    #[test]
    fn tau_derivatives_match_finite_differences() {
        let h = 1e-5;
        let m = tau_i();
        let up = ModularParam::from_imag(1.0 + h).unwrap();
        let dn = ModularParam::from_imag(1.0 - h).unwrap();
        let x = c(0.31);
        let di = Complex64::new(0.0, 2.0 * h);
        let fd = (s_fn(x, &up, None).unwrap().value - s_fn(x, &dn, None).unwrap().value) / di;
        assert!((fd - s_dtau(x, &m).unwrap()).norm() < 1e-6);
        let fd = (s_fn(x, &up, None).unwrap().d1 - s_fn(x, &dn, None).unwrap().d1) / di;
        assert!((fd - s_prime_dtau(x, &m).unwrap()).norm() < 1e-6);
        let x = Complex64::new(0.31, 0.05);
        let fd =
            (zeta_a(ThetaIndex::One, x, &up.half()).unwrap() - zeta_a(ThetaIndex::One, x, &dn.half()).unwrap()) / di;
        assert!((fd - zeta1_halfmod_dtau(x, &m).unwrap()).norm() < 1e-6);
        let fd = (wp_a(ThetaIndex::One, x, &up.half()).unwrap() - wp_a(ThetaIndex::One, x, &dn.half()).unwrap()) / di;
        assert!((fd - wp1_halfmod_dtau(x, &m).unwrap()).norm() < 1e-5);
    }

    #[test]
    fn halfmod_dtau_is_odd() {
        let m = tau_i();
        let x = Complex64::new(0.17, 0.08);
        let s = zeta1_halfmod_dtau(x, &m).unwrap() + zeta1_halfmod_dtau(-x, &m).unwrap();
        assert!(s.norm() < 1e-11);
    }

    #[test]
    fn laurent_behaviour_at_origin() {
        let h = tau_i().half();
        for k in 2..=5 {
            let x = c(10f64.powi(-k));
            let rel = 10f64.powi(-2 * k + 2);
            let z = zeta_a(ThetaIndex::One, x, &h).unwrap() * x;
            let p = wp_a(ThetaIndex::One, x, &h).unwrap() * x * x;
            assert!((z - c(1.0)).norm() < rel, "k={k} z={z}");
            assert!((p - c(1.0)).norm() < rel, "k={k} p={p}");
        }
    }
}
