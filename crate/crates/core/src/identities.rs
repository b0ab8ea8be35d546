//! A catalogue of theta-function identities, each checked on random samples.
//!
//! Every entry evaluates its two sides through different routes of the
//! kernel (theta products against log-derivative series, heat-equation
//! derivatives against term-wise `tau` derivatives, and so on), so a pass is
//! a statement about the numerics and not a tautology. Residuals are scaled
//! by the magnitude of the participating terms, see [`crate::report::balance`].

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::elliptic::{s_fn, zeta_jet, SValue, ZetaJet};
use crate::error::Result;
use crate::report::{balance, ResidualReport};
use crate::sampling::Sampler;
use crate::theta::{theta, theta_const, theta_dtau, theta_du, ModularParam, ThetaIndex};

pub const IDENTITY_TOL: f64 = 1e-10;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

use ThetaIndex::{Four, One, Three, Two};

/// Both moduli plus short-hand evaluators. `h` is `tau' = tau / 2`.
pub struct Moduli {
    pub full: ModularParam,
    pub h: ModularParam,
}

impl Moduli {
    pub fn new(m: &ModularParam) -> Self {
        Moduli { full: *m, h: m.half() }
    }

    fn t(&self, a: ThetaIndex, x: Complex64) -> Complex64 {
        theta(a, x, &self.full)
    }

    fn th(&self, a: ThetaIndex, x: Complex64) -> Complex64 {
        theta(a, x, &self.h)
    }

    fn t0(&self, a: ThetaIndex) -> f64 {
        theta_const(a, &self.full)
    }

    fn th0(&self, a: ThetaIndex) -> f64 {
        theta_const(a, &self.h)
    }

    fn j(&self, a: ThetaIndex, x: Complex64) -> Result<ZetaJet> {
        zeta_jet(a, x, &self.full)
    }

    fn jh(&self, a: ThetaIndex, x: Complex64) -> Result<ZetaJet> {
        zeta_jet(a, x, &self.h)
    }

    fn s(&self, x: Complex64) -> Result<SValue> {
        s_fn(x, &self.full, None)
    }
}

type ArgsFn = fn(&[Complex64]) -> Vec<Complex64>;
type EvalFn = fn(&Moduli, &[Complex64]) -> Result<f64>;

struct Identity {
    name: &'static str,
    arity: usize,
    /// Arguments at which some participating function may blow up.
    args: ArgsFn,
    eval: EvalFn,
}

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn none(_: &[Complex64]) -> Vec<Complex64> {
    Vec::new()
}

fn first(p: &[Complex64]) -> Vec<Complex64> {
    vec![p[0]]
}

fn first_and_half_shift(p: &[Complex64]) -> Vec<Complex64> {
    vec![p[0], p[0] + 0.5]
}

/// `d theta / d tau` by differentiating each q-series term in `tau`.
fn theta_dtau_termwise(a: ThetaIndex, u: Complex64, m: &ModularParam) -> Complex64 {
    let tau = m.tau();
    let mut s = Complex64::new(0.0, 0.0);
    for k in -40i32..=40 {
        let kf = k as f64;
        let (nu, phase) = match a {
            One => (kf + 0.5, u + 0.5),
            Two => (kf + 0.5, u),
            Three => (kf, u),
            Four => (kf, u + 0.5),
        };
        let mut term = (I * PI * tau * nu * nu + 2.0 * PI * I * phase * nu).exp() * (I * PI * nu * nu);
        if a == One {
            term = -term;
        }
        s += term;
    }
    s
}

fn catalogue() -> Vec<Identity> {
    vec![
        Identity {
            name: "theta1prime",
            arity: 0,
            args: none,
            eval: |e, _| {
                let lhs = theta_du(One, 1, c(0.0), &e.full)?;
                let rhs = PI * e.t0(Two) * e.t0(Three) * e.t0(Four);
                Ok(balance(&[lhs, c(-rhs)]))
            },
        },
        Identity {
            name: "heat",
            arity: 1,
            args: none,
            eval: |e, p| {
                let mut worst = 0.0_f64;
                for a in ThetaIndex::ALL {
                    let lhs = 4.0 * PI * I * theta_dtau_termwise(a, p[0], &e.full);
                    let rhs = theta_du(a, 2, p[0], &e.full)?;
                    worst = worst.max(balance(&[lhs, -rhs]));
                }
                Ok(worst)
            },
        },
        Identity {
            name: "n2a",
            arity: 1,
            args: first,
            eval: |e, p| {
                let x = p[0];
                let rhs = PI * e.t0(Four).powi(2) * e.t(Two, x) * e.t(Three, x) / (e.t(One, x) * e.t(Four, x));
                Ok(balance(&[e.s(x)?.d1, -rhs]))
            },
        },
        Identity {
            name: "n2b",
            arity: 1,
            args: first,
            eval: |e, p| {
                let x = p[0];
                let rhs = PI * e.th0(Three) * e.th0(Four) * e.th(Two, x) / e.th(One, x);
                Ok(balance(&[e.s(x)?.d1, -rhs]))
            },
        },
        Identity {
            name: "n3a",
            arity: 1,
            args: first,
            eval: |e, p| {
                let x = p[0];
                let k = PI * PI * e.t0(Two).powi(2) * e.t0(Three).powi(2) * e.t0(Four).powi(3);
                let rhs = -k * e.t(Four, 2.0 * x) / (e.t(One, x) * e.t(Four, x)).powi(2);
                Ok(balance(&[e.s(x)?.d2, -rhs]))
            },
        },
        Identity {
            name: "n3b",
            arity: 1,
            args: first,
            eval: |e, p| {
                let x = p[0];
                let k = PI * PI * e.th0(Three) * e.th0(Four) * e.th0(Two).powi(2);
                let rhs = -k * e.th(Three, x) * e.th(Four, x) / e.th(One, x).powi(2);
                Ok(balance(&[e.s(x)?.d2, -rhs]))
            },
        },
        Identity {
            name: "n4",
            arity: 1,
            args: first,
            eval: |e, p| {
                let x = p[0];
                let sdot = theta_dtau(One, x, &e.full) / e.t(One, x) - theta_dtau(Four, x, &e.full) / e.t(Four, x);
                let z2 = e.j(Two, x)?.zeta;
                let k = PI * PI / 2.0 * e.t0(Four).powi(4);
                Ok(balance(&[2.0 * PI * I * sdot, -e.s(x)?.d1 * z2, c(-k)]))
            },
        },
        Identity {
            name: "n5",
            arity: 1,
            args: first,
            eval: |e, p| {
                let x = p[0];
                // tau-derivative of zeta_a at its own modulus, from the heat equation
                let zdot = |j: ZetaJet| (-j.wp1 - 2.0 * j.zeta * j.wp) / (4.0 * PI * I);
                let sdot1 = zdot(e.j(One, x)?) - zdot(e.j(Four, x)?);
                let s = e.s(x)?;
                let j2 = e.j(Two, x)?;
                Ok(balance(&[2.0 * PI * I * sdot1, -s.d2 * j2.zeta, s.d1 * j2.wp]))
            },
        },
        Identity {
            name: "n6",
            arity: 1,
            args: first,
            eval: |e, p| {
                let x = p[0];
                let s = e.s(x)?;
                Ok(balance(&[s.d1 * s.d2, -0.5 * e.jh(One, x)?.wp1]))
            },
        },
        Identity {
            name: "n6a",
            arity: 1,
            args: first_and_half_shift,
            eval: |e, p| {
                let x = p[0];
                let k = PI * PI * e.t0(Four).powi(4);
                Ok(balance(&[e.s(x)?.d1 * e.s(x + 0.5)?.d1, c(k)]))
            },
        },
        Identity {
            name: "n8",
            arity: 1,
            args: first,
            eval: |e, p| {
                let x = p[0];
                Ok(balance(&[e.s(x)?.d1, -2.0 * e.j(One, x)?.zeta, e.jh(One, x)?.zeta]))
            },
        },
        Identity {
            name: "n9",
            arity: 1,
            args: first_and_half_shift,
            eval: |e, p| {
                let x = p[0];
                Ok(balance(&[
                    2.0 * e.j(Two, x)?.zeta,
                    -e.jh(Two, x)?.zeta,
                    -e.s(x + 0.5)?.d1,
                ]))
            },
        },
        Identity {
            name: "n10",
            arity: 1,
            args: first_and_half_shift,
            eval: |e, p| {
                let x = p[0];
                Ok(balance(&[2.0 * e.j(Two, x)?.wp, -e.jh(Two, x)?.wp, e.s(x + 0.5)?.d2]))
            },
        },
        Identity {
            name: "n11",
            arity: 2,
            args: |p| vec![p[0], p[1], p[0] - p[1], p[0] + p[1]],
            eval: |e, p| {
                let (x, y) = (p[0], p[1]);
                let t1p = theta_du(One, 1, c(0.0), &e.full)?;
                let rhs = t1p * t1p * e.t(One, x - y) * e.t(One, x + y) / (e.t(Two, x) * e.t(Two, y)).powi(2);
                Ok(balance(&[e.j(Two, x)?.wp, -e.j(Two, y)?.wp, -rhs]))
            },
        },
        Identity {
            name: "n12",
            arity: 1,
            args: first,
            eval: |e, p| {
                let x = p[0];
                let s1 = e.s(x)?.d1;
                Ok(balance(&[e.jh(One, x)?.wp, -e.jh(Two, c(0.0))?.wp, -s1 * s1]))
            },
        },
        Identity {
            name: "den1",
            arity: 4,
            args: none,
            eval: |e, p| {
                let (x, y, u, v) = (p[0], p[1], p[2], p[3]);
                let x1 = (x + y + u + v) / 2.0;
                let y1 = (x + y - u - v) / 2.0;
                let u1 = (x - y + u - v) / 2.0;
                let v1 = (x - y - u + v) / 2.0;
                let l = |a, b, c, d| {
                    [
                        e.th(Two, a) * e.th(Two, b) * e.th(One, c) * e.th(One, d),
                        -e.th(One, a) * e.th(One, b) * e.th(Two, c) * e.th(Two, d),
                    ]
                };
                let [a, b] = l(x, y, u, v);
                let [c1, d1] = l(x1, y1, u1, v1);
                Ok(balance(&[a, b, -c1, -d1]))
            },
        },
        Identity {
            name: "num3",
            arity: 1,
            args: none,
            eval: |e, p| {
                let x = p[0];
                let lhs = e.t(One, 2.0 * x) * e.t0(Two) * e.t0(Three) * e.t0(Four);
                let rhs = 2.0 * e.t(One, x) * e.t(Two, x) * e.t(Three, x) * e.t(Four, x);
                Ok(balance(&[lhs, -rhs]))
            },
        },
        Identity {
            name: "A16",
            arity: 2,
            args: |p| vec![p[0], p[1], p[0] - p[1], p[0] + p[1]],
            eval: |e, p| {
                let (a, b) = (p[0], p[1]);
                let k = PI * e.t0(Two) * e.t0(Three) * e.t0(Four).powi(2);
                let rhs = k * e.t(One, a - b) * e.t(Four, a - b) * e.t(Two, a + b)
                    / (e.t(One, a) * e.t(Four, a) * e.t(One, b) * e.t(Four, b) * e.t(Two, a - b));
                Ok(balance(&[
                    -e.jh(One, a)?.zeta,
                    e.jh(One, b)?.zeta,
                    2.0 * e.j(Two, a - b)?.zeta,
                    -rhs,
                ]))
            },
        },
        Identity {
            name: "c5",
            arity: 2,
            args: |p| vec![p[0], p[1], p[1] - p[0]],
            eval: |e, p| {
                let (xi, xj) = (p[0], p[1]);
                let si = e.s(xi)?;
                let terms = [
                    si.d2 * e.jh(One, xj - xi)?.zeta,
                    -si.d2 * e.jh(One, xj)?.zeta,
                    si.d1 * e.jh(One, xi - xj)?.wp,
                    2.0 * si.d2 * e.j(Two, xi)?.zeta,
                    -2.0 * si.d1 * e.j(Two, xi)?.wp,
                    e.s(xj)?.d1 * e.s(xj - xi)?.d2,
                ];
                Ok(balance(&terms))
            },
        },
        Identity {
            name: "c6",
            arity: 1,
            args: first_and_half_shift,
            eval: |e, p| {
                let x = p[0];
                let terms = [
                    -e.s(x)?.d1 * e.jh(Two, x)?.wp,
                    e.s(x)?.d1 * e.jh(Two, c(0.0))?.wp,
                    e.s(c(0.5))?.d2 * e.s(x + 0.5)?.d1,
                ];
                Ok(balance(&terms))
            },
        },
        Identity {
            name: "h",
            arity: 3,
            args: |p| vec![p[0], p[1], p[2], p[0] - p[1], p[2] - p[0], p[2] - p[1]],
            eval: |e, p| Ok(balance(&h_terms(e, p[0], p[1], p[2])?)),
        },
        Identity {
            name: "f",
            arity: 3,
            args: |p| vec![p[0], p[1], p[0] - p[1], p[2] + p[0], p[2] + p[1]],
            eval: |e, p| Ok(balance(&f_terms(e, p[0], p[1], p[2])?)),
        },
    ]
}

/// Terms of the curvature identity `h(xi_i, xi_j, xi_k) = 0`.
pub fn h_terms(e: &Moduli, xi: Complex64, xj: Complex64, xk: Complex64) -> Result<Vec<Complex64>> {
    let d = xi - xj;
    let sd = e.s(d)?;
    let (si, sj, sk) = (e.s(xi)?, e.s(xj)?, e.s(xk)?);
    let z1 = |x| e.jh(One, x).map(|j| j.zeta);
    let j2d = e.jh(Two, d)?;
    let s2 = |x| e.s(x).map(|s| s.d2);
    Ok(vec![
        sd.d3 * (z1(xk - xi)? - z1(xk - xj)? + j2d.zeta),
        -2.0 * sd.d2 * j2d.wp,
        -sd.d1 * j2d.wp1,
        2.0 * sd.d2 * e.jh(One, xj - xk)?.wp,
        sd.d2 * sj.d2 / sj.d1 * (-z1(xk)? + z1(xk - xj)? + e.jh(Two, xj)?.zeta),
        -sd.d2 * si.d2 / si.d1 * (-z1(xk)? + z1(xk - xi)? + e.jh(Two, xi)?.zeta),
        sd.d2 * (e.jh(Two, xi)?.wp - e.jh(Two, xj)?.wp),
        -sk.d1 / si.d1 * s2(xk - xi)? * sd.d2,
        sk.d1 / sj.d1 * s2(xk - xj)? * sd.d2,
        s2(xk - xi)? * s2(xk - xj)?,
    ])
}

/// Terms of the conserved-density identity `f(xi_i, xi_j, u) = 0`.
pub fn f_terms(e: &Moduli, xi: Complex64, xj: Complex64, u: Complex64) -> Result<Vec<Complex64>> {
    let (si, sj) = (e.s(xi)?, e.s(xj)?);
    let suj = e.s(u + xj)?;
    let sui = e.s(u + xi)?;
    let z1 = |x| e.jh(One, x).map(|j| j.zeta);
    let z2 = |x| e.jh(Two, x).map(|j| j.zeta);
    let w2 = |x| e.jh(Two, x).map(|j| j.wp);
    Ok(vec![
        2.0 * sj.d1 * suj.d1 * e.jh(One, xi - xj)?.wp,
        sj.d1 * suj.d2 * (-z1(u + xi)? + z1(xi - xj)? + z2(u + xj)?),
        -sj.d1 * suj.d1 * w2(u + xj)?,
        sj.d2 * suj.d1 * (-z1(xi)? + z1(xi - xj)? + z2(xj)?),
        -sj.d1 * suj.d1 * w2(xj)?,
        e.s(xi - xj)?.d2 * (si.d1 * suj.d1 + sj.d1 * sui.d1),
    ])
}

pub fn identity_names() -> Vec<&'static str> {
    catalogue().iter().map(|i| i.name).collect()
}

/// One report per catalogue identity, with the default seed.
pub fn identity_suite(m: &ModularParam, sample_count: usize) -> Vec<ResidualReport> {
    identity_suite_seeded(m, sample_count, 0)
}

pub fn identity_suite_seeded(m: &ModularParam, sample_count: usize, seed: u64) -> Vec<ResidualReport> {
    let e = Moduli::new(m);
    let mut sampler = Sampler::new(seed);
    catalogue()
        .into_iter()
        .map(|id| {
            let count = if id.arity == 0 { 1 } else { sample_count };
            let points = sampler.admissible(m, id.arity, count, id.args);
            let mut residuals = Vec::with_capacity(points.len());
            for p in &points {
                match (id.eval)(&e, p) {
                    Ok(r) => residuals.push(r),
                    Err(err) => return ResidualReport::failed(id.name, m.im_tau(), IDENTITY_TOL, err),
                }
            }
            ResidualReport::from_residuals(id.name, m.im_tau(), &residuals, IDENTITY_TOL)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_identity_holds_at_tau_i() {
        let m = ModularParam::from_imag(1.0).unwrap();
        for r in identity_suite(&m, 40) {
            assert!(r.pass, "{r:?}");
        }
    }

    #[test]
    fn antisymmetric_identity_vanishes_on_the_diagonal() {
        let e = Moduli::new(&ModularParam::from_imag(1.0).unwrap());
        let x = Complex64::new(0.3, 0.2);
        let id = catalogue().into_iter().find(|i| i.name == "n11").unwrap();
        assert_eq!((id.eval)(&e, &[x, x]).unwrap(), 0.0);
    }

    #[test]
    fn theta_product_identity_with_repeated_arguments() {
        // x = u, y = v: both sides vanish, the right one through theta_1(0)
        let e = Moduli::new(&ModularParam::from_imag(1.0).unwrap());
        let x = Complex64::new(0.3, 0.1);
        let y = Complex64::new(0.55, 0.2);
        let id = catalogue().into_iter().find(|i| i.name == "den1").unwrap();
        let r = (id.eval)(&e, &[x, y, x, y]).unwrap();
        assert!(r < 1e-15);
    }

    #[test]
    fn catalogue_size() {
        assert_eq!(identity_names().len(), 22);
    }
}
