//! Jacobi theta functions for a purely imaginary modular parameter.
//!
//! All four functions are evaluated from their q-series,
//!
//! ```text
//! theta_1(u) = -sum_k exp(i pi tau (k+1/2)^2 + 2 pi i (u+1/2)(k+1/2))
//! theta_2(u) =  sum_k exp(i pi tau (k+1/2)^2 + 2 pi i u (k+1/2))
//! theta_3(u) =  sum_k exp(i pi tau k^2 + 2 pi i u k)
//! theta_4(u) =  sum_k exp(i pi tau k^2 + 2 pi i (u+1/2) k)
//! ```
//!
//! grouped into `+nu/-nu` pairs. Derivatives in `u` are taken term by term,
//! which makes every Taylor coefficient exact up to the series truncation.
//! Derivatives in `tau` go through the heat equation
//! `4 pi i d_tau theta_a = theta_a''`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Default tail tolerance for the q-series.
pub const SERIES_TOL: f64 = 1e-15;

/// Below this imaginary part the q-series still converge but need many terms.
pub const LOW_IM_TAU: f64 = 0.05;

const MAX_TERMS: usize = 400;

/// Which of the four Jacobi theta functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ThetaIndex {
    One,
    Two,
    Three,
    Four,
}

impl ThetaIndex {
    pub const ALL: [ThetaIndex; 4] = [ThetaIndex::One, ThetaIndex::Two, ThetaIndex::Three, ThetaIndex::Four];

    pub fn number(self) -> u8 {
        match self {
            ThetaIndex::One => 1,
            ThetaIndex::Two => 2,
            ThetaIndex::Three => 3,
            ThetaIndex::Four => 4,
        }
    }

    fn half_integer(self) -> bool {
        matches!(self, ThetaIndex::One | ThetaIndex::Two)
    }
}

impl TryFrom<u8> for ThetaIndex {
    type Error = Error;

    fn try_from(a: u8) -> Result<Self> {
        match a {
            1 => Ok(ThetaIndex::One),
            2 => Ok(ThetaIndex::Two),
            3 => Ok(ThetaIndex::Three),
            4 => Ok(ThetaIndex::Four),
            _ => Err(Error::Config(format!("theta index {a} not in 1..=4"))),
        }
    }
}

/// A purely imaginary modular parameter together with its nome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModularParam {
    tau: Complex64,
    nome: f64,
    truncation: usize,
    tol: f64,
}

impl ModularParam {
    pub fn new(tau: Complex64) -> Result<Self> {
        Self::with_tolerance(tau, SERIES_TOL)
    }

    /// `tau = i * im`.
    pub fn from_imag(im: f64) -> Result<Self> {
        Self::new(Complex64::new(0.0, im))
    }

    pub fn with_tolerance(tau: Complex64, tol: f64) -> Result<Self> {
        if !(tau.im > 0.0) || !tau.re.is_finite() || tau.re.abs() >= 1e-14 || !(tol > 0.0) {
            return Err(Error::InvalidModularParam { re: tau.re, im: tau.im });
        }
        let nome = (-PI * tau.im).exp();
        // smallest k with q^{(k+1/2)^2} < tol
        let mut truncation = 1;
        while truncation < MAX_TERMS && nome.powf((truncation as f64 + 0.5).powi(2)) >= tol {
            truncation += 1;
        }
        Ok(Self {
            tau: Complex64::new(0.0, tau.im),
            nome,
            truncation,
            tol,
        })
    }

    pub fn tau(&self) -> Complex64 {
        self.tau
    }

    pub fn im_tau(&self) -> f64 {
        self.tau.im
    }

    pub fn nome(&self) -> f64 {
        self.nome
    }

    pub fn truncation_k(&self) -> usize {
        self.truncation
    }

    pub fn tolerance(&self) -> f64 {
        self.tol
    }

    /// The parameter `tau / 2`, built from `tau / 2` directly.
    pub fn half(&self) -> ModularParam {
        Self::with_tolerance(self.tau / 2.0, self.tol).expect("half of a valid tau is valid")
    }

    /// `true` when `Im tau` is below the range where the series are cheap.
    pub fn is_poorly_convergent(&self) -> bool {
        self.tau.im < LOW_IM_TAU
    }
}

/// Taylor coefficients `theta_a^{(n)}(u) / n!` for `n = 0..=order`.
pub fn theta_taylor(a: ThetaIndex, u: Complex64, m: &ModularParam, order: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); order + 1];
    let t = m.tau.im;
    let y = u.im.abs();

    if !a.half_integer() {
        out[0] += 1.0;
    }
    let mut max_bound = 0.0_f64;
    for k in 0..MAX_TERMS {
        let nu = if a.half_integer() {
            k as f64 + 0.5
        } else {
            (k + 1) as f64
        };
        let omega = 2.0 * PI * nu;
        // crude magnitude of the pair, including the derivative weight
        let log_bound = -PI * t * nu * nu + omega * y + (order as f64) * omega.max(1.0).ln();
        let bound = log_bound.exp();
        max_bound = max_bound.max(bound);
        if k >= m.truncation && bound < m.tol * 1e-3 * max_bound.max(1.0) {
            break;
        }
        if log_bound < -745.0 && k >= m.truncation {
            break;
        }

        let weight = (I * PI * m.tau * nu * nu).exp();
        let e_plus = (I * omega * u).exp();
        let e_minus = (-I * omega * u).exp();
        // (plus, minus) prefactors of e^{+i w u}, e^{-i w u}
        let (cp, cm) = match a {
            ThetaIndex::One => {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                (-I * sign * weight, I * sign * weight)
            }
            ThetaIndex::Two | ThetaIndex::Three => (weight, weight),
            ThetaIndex::Four => {
                let sign = if (k + 1) % 2 == 0 { 1.0 } else { -1.0 };
                (sign * weight, sign * weight)
            }
        };
        let mut tp = cp * e_plus;
        let mut tm = cm * e_minus;
        let step = I * omega;
        for (n, slot) in out.iter_mut().enumerate() {
            if n > 0 {
                tp *= step / n as f64;
                tm *= -step / n as f64;
            }
            *slot += tp + tm;
        }
    }
    out
}

/// `theta_a(u, tau)`.
pub fn theta(a: ThetaIndex, u: Complex64, m: &ModularParam) -> Complex64 {
    theta_taylor(a, u, m, 0)[0]
}

/// `theta_a(0, tau)`.
pub fn theta_const(a: ThetaIndex, m: &ModularParam) -> f64 {
    theta(a, Complex64::new(0.0, 0.0), m).re
}

/// `order`-th derivative in `u`, `order <= 6`.
pub fn theta_du(a: ThetaIndex, order: usize, u: Complex64, m: &ModularParam) -> Result<Complex64> {
    if order > 6 {
        return Err(Error::UnsupportedOrder(order));
    }
    let c = theta_taylor(a, u, m, order);
    Ok(c[order] * factorial(order))
}

/// `d theta_a / d tau` through the heat equation.
pub fn theta_dtau(a: ThetaIndex, u: Complex64, m: &ModularParam) -> Complex64 {
    let c = theta_taylor(a, u, m, 2);
    2.0 * c[2] / (4.0 * PI * I)
}

/// Product form of `theta_1`; a cross-check for the series.
pub fn theta1_infinite_product(u: Complex64, m: &ModularParam) -> Complex64 {
    let tau = m.tau;
    let mut acc = I * (I * PI * tau / 4.0 - I * PI * u).exp();
    for k in 1..MAX_TERMS {
        let kf = k as f64;
        let f1 = 1.0 - (2.0 * PI * I * kf * tau).exp();
        let f2 = 1.0 - (2.0 * PI * I * ((kf - 1.0) * tau + u)).exp();
        let f3 = 1.0 - (2.0 * PI * I * (kf * tau - u)).exp();
        acc *= f1 * f2 * f3;
        let dev = (f1 - 1.0).norm().max((f2 - 1.0).norm()).max((f3 - 1.0).norm());
        if k > 1 && dev < m.tol {
            break;
        }
    }
    acc
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}
