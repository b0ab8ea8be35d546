//! Faber functions, characteristic speeds, Christoffel symbols and the
//! diagonal metric of the reduced hierarchy.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::elliptic::{s_fn, s_prime, s_prime_dtau, s_series};
use crate::error::{Error, Result};
use crate::identities::{h_terms, Moduli};
use crate::loewner::{gt_direction_derivative, loewner_rhs_pointwise, GTState, HydroField, ULaurent};
use crate::report::{balance, ResidualReport};
use crate::sampling::Sampler;
use crate::series::Series;
use crate::theta::{theta, theta_const, ModularParam, ThetaIndex};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

pub const DEGENERATE_DENOMINATOR: f64 = 1e-12;

fn four_pi_i() -> Complex64 {
    4.0 * PI * I
}

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// `Q(u, xi) = S'(u + xi) / S'(xi)`.
pub fn q_generating(u: Complex64, xi: f64, m: &ModularParam) -> Result<Complex64> {
    Ok(s_prime(u + xi, m)? / s_prime(re(xi), m)?)
}

/// Coefficients `b_k` of `S'(u(z) + w) = sum_k b_k z^-k`, so that
/// `Phi_k'(w) = k b_k` and `b_0 = S'(w)`.
pub fn faber_composed(c: &ULaurent, w: Complex64, m: &ModularParam, order: usize) -> Result<Series> {
    if order > c.coeffs.len() {
        return Err(Error::OrderExceeded {
            requested: order,
            available: c.coeffs.len(),
        });
    }
    let s = s_series(w, m, order + 1)?;
    let sp: Vec<Complex64> = (0..=order).map(|n| (n as f64 + 1.0) * s.coeff(n + 1)).collect();
    let u = c.series().truncate(order + 1);
    let mut out = Series::from_coeffs(sp.clone()).compose(&u).coeffs().to_vec();
    out[0] = sp[0];
    Ok(Series::from_coeffs(out))
}

/// Characteristic speeds `phi_{j,k} = Phi_k'(xi_j) / S'(xi_j)`, `k = 1..=K`.
#[derive(Debug, Clone, PartialEq)]
pub struct FaberTable {
    pub order: usize,
    pub coeffs: Vec<f64>,
    pub tau: f64,
    pub xi: Vec<f64>,
    /// `speeds[j][k - 1]`
    pub speeds: Vec<Vec<f64>>,
}

impl FaberTable {
    /// `phi_{j,k}` with `phi_{j,0} = 1`.
    pub fn speed(&self, j: usize, k: usize) -> f64 {
        if k == 0 {
            1.0
        } else {
            self.speeds[j][k - 1]
        }
    }

    /// `Phi_k'(w)` from the stored expansion.
    pub fn phi_prime(&self, k: usize, w: Complex64) -> Result<Complex64> {
        let m = ModularParam::from_imag(self.tau)?;
        let c = ULaurent {
            coeffs: self.coeffs.clone(),
            samples: Vec::new(),
        };
        Ok(k as f64 * faber_composed(&c, w, &m, self.order)?.coeff(k))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("j,k,phi\n");
        for j in 0..self.speeds.len() {
            for k in 0..=self.order {
                out.push_str(&format!("{},{},{:.17e}\n", j + 1, k, self.speed(j, k)));
            }
        }
        out
    }
}

pub fn faber_speeds(c: &ULaurent, s: &GTState, order: usize) -> Result<FaberTable> {
    let m = s.modular()?;
    let mut speeds = Vec::with_capacity(s.n());
    for &xi in &s.xi {
        let b = faber_composed(c, re(xi), &m, order)?;
        speeds.push((1..=order).map(|k| (k as f64 * b.coeff(k) / b.coeff(0)).re).collect());
    }
    Ok(FaberTable {
        order,
        coeffs: c.coeffs.clone(),
        tau: s.tau.im,
        xi: s.xi.clone(),
        speeds,
    })
}

/// `Gamma_ij = -(1/4 pi i) S'(xi_j)/S'(xi_i) S''(xi_i - xi_j) v_j`.
pub fn gamma_closed(s: &GTState, i: usize, j: usize) -> Result<Complex64> {
    s.check_separation()?;
    let m = s.modular()?;
    let si = s_prime(re(s.xi[i]), &m)?;
    let sj = s_prime(re(s.xi[j]), &m)?;
    let s2 = s_fn(re(s.xi[i] - s.xi[j]), &m, None)?.d2;
    Ok(-sj / si * s2 * s.v[j] / four_pi_i())
}

/// `d_j Q(u(z), xi_i) / (Q(u(z), xi_j) - Q(u(z), xi_i))` with the numerator
/// by the chain rule through the Löwner and Gibbons-Tsarev equations.
pub fn gamma_from_ratio(s: &GTState, u: Complex64, i: usize, j: usize) -> Result<Complex64> {
    let m = s.modular()?;
    let xi = re(s.xi[i]);
    let qi = q_generating(u, s.xi[i], &m)?;
    let qj = q_generating(u, s.xi[j], &m)?;
    let den = qj - qi;
    if s.v[j].norm() == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    if den.norm() < DEGENERATE_DENOMINATOR {
        return Err(Error::DegenerateDenominator { z: format!("u = {u}") });
    }
    let du = loewner_rhs_pointwise(u, s, j)?;
    let dxi = gt_direction_derivative(s, j)?.xi[i];
    let dtau = s.v[j];
    let a = s_fn(u + xi, &m, None)?;
    let b = s_fn(xi, &m, None)?;
    let num = (a.d2 * (du + dxi) + s_prime_dtau(u + xi, &m)? * dtau) / b.d1
        - qi * (b.d2 * dxi + s_prime_dtau(xi, &m)? * dtau) / b.d1;
    Ok(num / den)
}

/// `g_i = (1/4 pi i) S'(xi_i)^2 v_i`.
pub fn metric_g(s: &GTState, i: usize) -> Result<Complex64> {
    let m = s.modular()?;
    let sp = s_prime(re(s.xi[i]), &m)?;
    Ok(sp * sp * s.v[i] / four_pi_i())
}

/// `G = log R` with `R = pi c_1 theta_2(0) theta_3(0)`.
pub fn potential_from_c1(c: &ULaurent, s: &GTState) -> Result<f64> {
    let m = s.modular()?;
    let c1 = c.coeffs.first().copied().unwrap_or(0.0);
    if !(c1 > 0.0) {
        return Err(Error::Config(format!("c_1 = {c1} must be positive")));
    }
    Ok((PI * c1 * theta_const(ThetaIndex::Two, &m) * theta_const(ThetaIndex::Three, &m)).ln())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricData {
    /// Off-diagonal `Gamma_ij`; the diagonal is zero.
    pub gamma: Vec<Vec<Complex64>>,
    pub g: Vec<Complex64>,
    pub potential_g: f64,
}

pub fn metric_data(s: &GTState, c: &ULaurent) -> Result<MetricData> {
    let n = s.n();
    let mut gamma = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for (i, row) in gamma.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            if i != j {
                *x = gamma_closed(s, i, j)?;
            }
        }
    }
    Ok(MetricData {
        gamma,
        g: (0..n).map(|i| metric_g(s, i)).collect::<Result<_>>()?,
        potential_g: potential_from_c1(c, s)?,
    })
}

fn report<F>(field: &HydroField, name: &str, tol: f64, run: F) -> ResidualReport
where
    F: FnOnce() -> Result<Vec<f64>>,
{
    let tau = field.state(&field.centre()).tau.im;
    match run() {
        Ok(r) => ResidualReport::from_residuals(name, tau, &r, tol),
        Err(e) => ResidualReport::failed(name, tau, tol, e),
    }
}

/// Spread of the ratio over the z-samples (relative) and its distance from
/// the closed form, at every grid node. Returns `[gamma_z, gamma_route]`.
pub fn check_gamma_ratio(field: &HydroField, spread_tol: f64, route_tol: f64) -> [ResidualReport; 2] {
    let mut spread = Vec::new();
    let mut route = Vec::new();
    let mut err = None;
    'nodes: for g in field.grid_indices() {
        let s = field.state(&g);
        let u = field.laurent(&g);
        for i in 0..field.n() {
            for j in 0..field.n() {
                if i == j {
                    continue;
                }
                let closed = match gamma_closed(&s, i, j) {
                    Ok(x) => x,
                    Err(e) => {
                        err = Some(e);
                        break 'nodes;
                    }
                };
                let mut vals = Vec::new();
                for &(_, uz) in &u.samples {
                    match gamma_from_ratio(&s, uz, i, j) {
                        Ok(x) => vals.push(x),
                        Err(Error::DegenerateDenominator { .. }) => {}
                        Err(e) => {
                            err = Some(e);
                            break 'nodes;
                        }
                    }
                }
                let scale = closed.norm().max(1e-300);
                for a in &vals {
                    route.push((a - closed).norm());
                    for b in &vals {
                        spread.push((a - b).norm() / scale);
                    }
                }
            }
        }
    }
    let tau = field.state(&field.centre()).tau.im;
    match err {
        Some(e) => [
            ResidualReport::failed("gamma_z", tau, spread_tol, e.clone()),
            ResidualReport::failed("gamma_route", tau, route_tol, e),
        ],
        None => [
            ResidualReport::from_residuals("gamma_z", tau, &spread, spread_tol),
            ResidualReport::from_residuals("gamma_route", tau, &route, route_tol),
        ],
    }
}

/// `Gamma_ij = (1/2) d_j log g_i` by central differences.
pub fn check_gamma_log(field: &HydroField, tol: f64) -> ResidualReport {
    report(field, "c2", tol, || {
        let mut res = Vec::new();
        for g in field.interior(1) {
            let s = field.state(&g);
            for i in 0..field.n() {
                for j in 0..field.n() {
                    if i == j {
                        continue;
                    }
                    let gi = metric_g(&s, i)?;
                    let fd = if gi.norm() == 0.0 {
                        Complex64::new(0.0, 0.0)
                    } else {
                        field.central(&g, j, |h| Ok((metric_g(&field.state(h), i)? / gi).ln()))? * 0.5
                    };
                    res.push((fd - gamma_closed(&s, i, j)?).norm());
                }
            }
        }
        Ok(res)
    })
}

/// `d_k g_i = d_i g_k`.
pub fn check_egorov(field: &HydroField, tol: f64) -> ResidualReport {
    report(field, "q1", tol, || {
        let mut res = Vec::new();
        for g in field.interior(1) {
            for i in 0..field.n() {
                for k in i + 1..field.n() {
                    let a = field.central(&g, k, |h| metric_g(&field.state(h), i))?;
                    let b = field.central(&g, i, |h| metric_g(&field.state(h), k))?;
                    res.push((a - b).norm());
                }
            }
        }
        Ok(res)
    })
}

/// `g_i = d_i log R`.
pub fn check_potential(field: &HydroField, tol: f64) -> ResidualReport {
    report(field, "p1", tol, || {
        let mut res = Vec::new();
        for g in field.interior(1) {
            let s = field.state(&g);
            for i in 0..field.n() {
                let fd = field.central(&g, i, |h| {
                    Ok(re(potential_from_c1(&field.laurent(h), &field.state(h))?))
                })?;
                res.push((fd - metric_g(&s, i)?).norm());
            }
        }
        Ok(res)
    })
}

fn triples(n: usize) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                if i != j && j != k && i != k {
                    out.push((i, j, k));
                }
            }
        }
    }
    out
}

/// `d_k Gamma_ij = d_j Gamma_ik` for distinct `i, j, k`.
pub fn check_tsarev(field: &HydroField, tol: f64) -> ResidualReport {
    report(field, "c2a", tol, || {
        if field.n() < 3 {
            return Err(Error::NotEnoughAxes(field.n()));
        }
        let mut res = Vec::new();
        for g in field.interior(1) {
            for (i, j, k) in triples(field.n()) {
                let a = field.central(&g, k, |h| gamma_closed(&field.state(h), i, j))?;
                let b = field.central(&g, j, |h| gamma_closed(&field.state(h), i, k))?;
                res.push((a - b).norm());
            }
        }
        Ok(res)
    })
}

/// `d_k Gamma_ij = Gamma_ij Gamma_jk + Gamma_ik Gamma_kj - Gamma_ik Gamma_ij`
/// by central differences, and the analytic `h`-function at the node
/// triples. Returns `[c101, h]`.
pub fn check_curvature(field: &HydroField, tol: f64, h_tol: f64) -> [ResidualReport; 2] {
    let c101 = report(field, "c101", tol, || {
        if field.n() < 3 {
            return Err(Error::NotEnoughAxes(field.n()));
        }
        let mut res = Vec::new();
        for g in field.interior(1) {
            let s = field.state(&g);
            let gm = |a, b| gamma_closed(&s, a, b);
            for (i, j, k) in triples(field.n()) {
                let fd = field.central(&g, k, |h| gamma_closed(&field.state(h), i, j))?;
                let rhs = gm(i, j)? * gm(j, k)? + gm(i, k)? * gm(k, j)? - gm(i, k)? * gm(i, j)?;
                res.push((fd - rhs).norm());
            }
        }
        Ok(res)
    });
    let h = report(field, "h", h_tol, || {
        if field.n() < 3 {
            return Err(Error::NotEnoughAxes(field.n()));
        }
        let mut res = Vec::new();
        for g in field.grid_indices() {
            let s = field.state(&g);
            let e = Moduli::new(&s.modular()?);
            for (i, j, k) in triples(field.n()) {
                res.push(balance(&h_terms(&e, re(s.xi[i]), re(s.xi[j]), re(s.xi[k]))?));
            }
        }
        Ok(res)
    });
    [c101, h]
}

/// Largest imaginary part of `Gamma_ij` and `g_i` over the grid.
pub fn check_metric_reality(field: &HydroField, tol: f64) -> ResidualReport {
    report(field, "metric_reality", tol, || {
        let mut res = Vec::new();
        for g in field.grid_indices() {
            let d = metric_data(&field.state(&g), &field.laurent(&g))?;
            res.extend(d.g.iter().map(|x| x.im.abs()));
            res.extend(d.gamma.iter().flatten().map(|x| x.im.abs()));
        }
        Ok(res)
    })
}

/// `Q(u(z), xi_j) - 1 - sum_k phi_{j,k} z^-k / k` at `|z| = radius` on every
/// grid node, with `u` the truncated expansion.
pub fn check_faber_generating(field: &HydroField, radius: f64, tol: f64) -> ResidualReport {
    report(field, "faber_q", tol, || {
        let mut res = Vec::new();
        for g in field.grid_indices() {
            let s = field.state(&g);
            let c = field.laurent(&g);
            let m = s.modular()?;
            let table = faber_speeds(&c, &s, field.series_order())?;
            for a in 0..8 {
                let z = Complex64::from_polar(radius, a as f64 * PI / 4.0 + 0.1);
                let u = c.eval(z);
                for j in 0..s.n() {
                    let sum: Complex64 = (1..=table.order)
                        .map(|k| table.speed(j, k) * z.powi(-(k as i32)) / k as f64)
                        .sum();
                    res.push((q_generating(u, s.xi[j], &m)? - 1.0 - sum).norm());
                }
            }
        }
        Ok(res)
    })
}

/// The factorised form of `Q(u, xi_j) - Q(u, xi_i)` against direct
/// subtraction at random `(u, xi_i, xi_j)`.
pub fn check_q_difference(m: &ModularParam, samples: usize, seed: u64, tol: f64) -> ResidualReport {
    let h = m.half();
    let t = |a, x| theta(a, x, m);
    let th = |a, x| theta(a, x, &h);
    use ThetaIndex::*;
    let run = || -> Result<Vec<f64>> {
        let pts = Sampler::new(seed).admissible(m, 3, samples, |p| {
            let (xi, xj) = (re(p[1].re), re(p[2].re));
            vec![p[0], p[0] + xi, p[0] + xj, xi, xj, xj - xi, p[0] + xi + xj]
        });
        let mut res = Vec::new();
        for p in pts {
            let (u, xi, xj) = (p[0], p[1].re, p[2].re);
            let direct = q_generating(u, xj, m)? - q_generating(u, xi, m)?;
            let w = u + xi + xj;
            let (ci, cj) = (re(xi), re(xj));
            let fact = t(Two, w) * t(Three, w) * t(One, u) * t(Four, u)
                / (t(One, u + ci) * t(Four, u + ci) * t(One, u + cj) * t(Four, u + cj))
                * th(One, cj - ci)
                * theta_const(Two, &h)
                / (th(Two, ci) * th(Two, cj));
            res.push((direct - fact).norm() / direct.norm().max(1.0));
        }
        Ok(res)
    };
    match run() {
        Ok(r) => ResidualReport::from_residuals("den3", m.im_tau(), &r, tol),
        Err(e) => ResidualReport::failed("den3", m.im_tau(), tol, e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loewner::Scenario;

    fn setup() -> (GTState, ULaurent) {
        let sc = Scenario::default_n2();
        let mut c = sc.initial_laurent().unwrap();
        c.coeffs[1] = 0.02;
        c.coeffs[2] = -0.005;
        (sc.initial_state(), c)
    }

    #[test]
    fn q_is_one_at_zero_and_periodic() {
        let m = ModularParam::from_imag(1.0).unwrap();
        assert!((q_generating(Complex64::new(0.0, 0.0), 0.3, &m).unwrap() - 1.0).norm() < 1e-15);
        let u = Complex64::new(0.07, 0.02);
        let a = q_generating(u, 0.3, &m).unwrap();
        let b = q_generating(u, 1.3, &m).unwrap();
        assert!((a - b).norm() < 1e-11);
    }

    #[test]
    fn first_speed_by_hand() {
        let (s, c) = setup();
        let t = faber_speeds(&c, &s, 4).unwrap();
        let m = s.modular().unwrap();
        let sv = s_fn(re(s.xi[0]), &m, None).unwrap();
        assert!((t.speed(0, 1) - (c.coeffs[0] * sv.d2 / sv.d1).re).abs() < 1e-14);
        assert_eq!(t.speed(1, 0), 1.0);
        let p = t.phi_prime(1, re(s.xi[0])).unwrap();
        assert!((p - c.coeffs[0] * sv.d2).norm() < 1e-14);
    }

    #[test]
    fn zero_expansion_has_zero_speeds() {
        let (s, mut c) = setup();
        c.coeffs.iter_mut().for_each(|x| *x = 0.0);
        let t = faber_speeds(&c, &s, 6).unwrap();
        assert!(t.speeds.iter().flatten().all(|&x| x == 0.0));
        assert!(faber_speeds(&c, &s, 17).is_err());
    }

    #[test]
    fn speeds_match_contour_coefficients() {
        let (s, c) = setup();
        let m = s.modular().unwrap();
        let t = faber_speeds(&c, &s, 6).unwrap();
        let n = 64;
        for j in 0..2 {
            let vals: Vec<(Complex64, Complex64)> = (0..n)
                .map(|p| {
                    let z = Complex64::from_polar(1.0, 2.0 * PI * p as f64 / n as f64);
                    (z, q_generating(c.eval(z), s.xi[j], &m).unwrap() - 1.0)
                })
                .collect();
            for k in 1..=6 {
                let a: Complex64 = vals.iter().map(|(z, f)| f * z.powi(k as i32)).sum::<Complex64>() / n as f64;
                assert!((k as f64 * a - t.speed(j, k)).norm() < 1e-9, "{j} {k}");
            }
        }
    }

    #[test]
    fn gamma_relations() {
        let (s, c) = setup();
        let m = s.modular().unwrap();
        let g01 = gamma_closed(&s, 0, 1).unwrap();
        let g10 = gamma_closed(&s, 1, 0).unwrap();
        let s0 = s_prime(re(s.xi[0]), &m).unwrap();
        let s1 = s_prime(re(s.xi[1]), &m).unwrap();
        let expect = (s0 / s1).powi(2) * s.v[0] / s.v[1];
        assert!((g10 / g01 - expect).norm() < 1e-13);
        assert!(g01.im.abs() < 1e-15);
        for z in [4.0, 6.0, 10.0] {
            let r = gamma_from_ratio(&s, c.eval(re(z)), 0, 1).unwrap();
            assert!((r - g01).norm() < 1e-10 * g01.norm(), "{r} {g01}");
        }
        let mut frozen = s.clone();
        frozen.v = vec![Complex64::new(0.0, 0.0); 2];
        assert_eq!(gamma_closed(&frozen, 0, 1).unwrap().norm(), 0.0);
        assert_eq!(gamma_from_ratio(&frozen, re(0.025), 0, 1).unwrap().norm(), 0.0);
    }

    #[test]
    fn metric_is_real_and_linear_in_v() {
        let (mut s, _) = setup();
        let g = metric_g(&s, 0).unwrap();
        assert!(g.im.abs() < 1e-16 && g.re != 0.0);
        s.v[0] *= 2.0;
        assert!((metric_g(&s, 0).unwrap() - 2.0 * g).norm() < 1e-17);
    }

    #[test]
    fn q_difference_factorisation() {
        for t in [0.8, 1.0] {
            let r = check_q_difference(&ModularParam::from_imag(t).unwrap(), 100, 3, 1e-10);
            assert!(r.pass && r.samples == 100, "{r:?}");
        }
    }

    #[test]
    fn faber_csv_layout() {
        let (s, c) = setup();
        let csv = faber_speeds(&c, &s, 2).unwrap().to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "j,k,phi");
        assert_eq!(lines.len(), 1 + 2 * 3);
        assert!(lines[1].starts_with("1,0,1.0"));
    }
}
