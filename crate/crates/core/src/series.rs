//! Truncated power series with complex coefficients.
//!
//! A [`Series`] of length `n` stores `a_0 + a_1 x + ... + a_{n-1} x^{n-1}` and
//! every operation keeps the same truncation order. Used for Taylor
//! expansions of elliptic functions and for composing them with the
//! `1/z`-expansion of `u(z)`.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq)]
pub struct Series(Vec<Complex64>);

impl Series {
    pub fn zero(len: usize) -> Self {
        Series(vec![Complex64::new(0.0, 0.0); len])
    }

    pub fn from_coeffs(coeffs: Vec<Complex64>) -> Self {
        Series(coeffs)
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Series(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.0
    }

    pub fn coeff(&self, n: usize) -> Complex64 {
        self.0.get(n).copied().unwrap_or_default()
    }

    pub fn truncate(mut self, len: usize) -> Self {
        self.0.resize(len, Complex64::new(0.0, 0.0));
        self
    }

    pub fn scale(&self, k: Complex64) -> Series {
        Series(self.0.iter().map(|&a| a * k).collect())
    }

    /// Formal derivative; the top coefficient is lost.
    pub fn derivative(&self) -> Series {
        let n = self.len();
        let mut out = Series::zero(n.saturating_sub(1));
        for k in 1..n {
            out.0[k - 1] = self.0[k] * k as f64;
        }
        out
    }

    /// Multiplicative inverse, needs `a_0 != 0`.
    pub fn recip(&self) -> Series {
        let n = self.len();
        let mut out = Series::zero(n);
        if n == 0 {
            return out;
        }
        let a0 = self.0[0];
        out.0[0] = a0.inv();
        for k in 1..n {
            let mut s = Complex64::new(0.0, 0.0);
            for j in 1..=k {
                s += self.0[j] * out.0[k - j];
            }
            out.0[k] = -s / a0;
        }
        out
    }

    pub fn div(&self, other: &Series) -> Series {
        self * &other.recip()
    }

    /// `log` of a series with nonzero constant term; the constant is the
    /// principal logarithm of `a_0`.
    pub fn ln(&self) -> Series {
        let n = self.len();
        let mut out = Series::zero(n);
        if n == 0 {
            return out;
        }
        out.0[0] = self.0[0].ln();
        // (log f)' = f'/f
        let q = self.derivative().div(&self.clone().truncate(n - 1));
        for k in 1..n {
            out.0[k] = q.0[k - 1] / k as f64;
        }
        out
    }

    /// `sum_n f_n g^n` where `f` are the coefficients of `self` and `g` has
    /// zero constant term. Output length is that of `g`.
    pub fn compose(&self, g: &Series) -> Series {
        let n = g.len();
        debug_assert!(n == 0 || g.0[0].norm() == 0.0, "inner series must vanish at 0");
        let mut out = Series::zero(n);
        let mut power = Series::zero(n);
        if n == 0 {
            return out;
        }
        power.0[0] = Complex64::new(1.0, 0.0);
        for (k, &fk) in self.0.iter().enumerate() {
            if k >= n {
                break;
            }
            if k > 0 {
                power = &power * g;
            }
            for j in k..n {
                out.0[j] += fk * power.0[j];
            }
        }
        out
    }

    pub fn eval(&self, x: Complex64) -> Complex64 {
        self.0
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &a| acc * x + a)
    }
}

impl Add for &Series {
    type Output = Series;
    fn add(self, rhs: &Series) -> Series {
        let n = self.len().max(rhs.len());
        Series((0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect())
    }
}

impl Sub for &Series {
    type Output = Series;
    fn sub(self, rhs: &Series) -> Series {
        let n = self.len().max(rhs.len());
        Series((0..n).map(|k| self.coeff(k) - rhs.coeff(k)).collect())
    }
}

impl Neg for &Series {
    type Output = Series;
    fn neg(self) -> Series {
        Series(self.0.iter().map(|a| -a).collect())
    }
}

impl Mul for &Series {
    type Output = Series;
    fn mul(self, rhs: &Series) -> Series {
        let n = self.len().min(rhs.len());
        let mut out = Series::zero(n);
        for i in 0..n {
            if self.0[i] == Complex64::new(0.0, 0.0) {
                continue;
            }
            for j in 0..n - i {
                out.0[i + j] += self.0[i] * rhs.0[j];
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn log_of_geometric_series() {
        // 1/(1-x) -> -log(1-x) = x + x^2/2 + ...
        let g = Series::from_real(&[1.0; 8]);
        let l = g.ln();
        for k in 1..8 {
            assert!((l.coeff(k) - c(1.0 / k as f64)).norm() < 1e-14);
        }
    }

    #[test]
    fn composition_matches_pointwise() {
        let f = Series::from_real(&[0.3, 1.0, -0.5, 0.25, 0.1, 0.0, 0.02]);
        let g = Series::from_real(&[0.0, 0.2, 0.05, -0.01, 0.0, 0.0, 0.0]);
        let h = f.compose(&g);
        let x = c(0.01);
        let direct = f.eval(g.eval(x));
        assert!((h.eval(x) - direct).norm() < 1e-14);
    }

    proptest! {
        #[test]
        fn recip_is_inverse(a in proptest::collection::vec(-1.0f64..1.0, 1..10)) {
            let mut a = a;
            a[0] += 2.0;
            let s = Series::from_real(&a);
            let p = &s * &s.recip();
            prop_assert!((p.coeff(0) - c(1.0)).norm() < 1e-12);
            for k in 1..p.len() {
                prop_assert!(p.coeff(k).norm() < 1e-10);
            }
        }
    }
}
