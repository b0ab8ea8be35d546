//! Symmetries of the diagonal system, the generalised hodograph solution
//! `lambda(t)`, and checks of the resulting hierarchy equations.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::elliptic::s_fn;
use crate::error::{Error, Result};
use crate::goursat::{solve_richardson, LatticeField, LatticeSystem};
use crate::identities::{f_terms, Moduli};
use crate::loewner::{s_on_sheet, GTState, HydroField, ULaurent};
use crate::metric::{faber_speeds, gamma_closed, metric_g, FaberTable};
use crate::report::{balance, ResidualReport};
use crate::sampling::Sampler;
use crate::series::Series;
use crate::theta::{theta_const, theta_taylor, ModularParam, ThetaIndex};

pub const NEWTON_TOL: f64 = 1e-10;
pub const NEWTON_MAX_ITER: usize = 50;
pub const JACOBIAN_STEP: f64 = 1e-6;
/// Truncation order of `nabla(z)`.
pub const DEFAULT_K: usize = 6;
/// Own-axis slope of the default symmetry `R_i`.
pub const DEFAULT_SLOPE: f64 = 2.0;
/// Step in every `t_n` for the hierarchy checks.
pub const T_STEP: f64 = 0.0005;
/// Step pair `(h, h/2)` for the convergence-order diagnostic.
pub const ORDER_STEP: f64 = 0.016;

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

struct SymmetrySystem<'a> {
    field: &'a HydroField,
    r0: Vec<f64>,
    slope: Vec<f64>,
}

impl SymmetrySystem<'_> {
    fn state_at(&self, lambda: &[f64]) -> Result<GTState> {
        let lat = self.field.lattice();
        let h = lat.spacing();
        let mut node = Vec::with_capacity(lambda.len());
        for (k, &l) in lambda.iter().enumerate() {
            let p = l / h + lat.base()[k] as f64;
            if (p - p.round()).abs() > 1e-9 {
                return Ok(self.field.at(lambda)?.0);
            }
            node.push(p.round() as usize);
        }
        Ok(self.field.state(&node))
    }
}

impl LatticeSystem for SymmetrySystem<'_> {
    fn dim(&self) -> usize {
        self.field.n()
    }

    fn components(&self) -> usize {
        self.field.n()
    }

    fn own_axis(&self, comp: usize) -> Option<usize> {
        Some(comp)
    }

    fn axis_value(&self, comp: usize, lambda_k: f64) -> Complex64 {
        re(self.r0[comp] + self.slope[comp] * lambda_k)
    }

    fn derivative(&self, d: usize, lambda: &[f64], state: &[Complex64], out: &mut [Complex64]) -> Result<()> {
        let s = self.state_at(lambda)?;
        for i in 0..self.field.n() {
            out[i] = if i == d {
                Complex64::new(0.0, 0.0)
            } else {
                gamma_closed(&s, i, d)? * (state[d] - state[i])
            };
        }
        Ok(())
    }
}

/// Solution `R_i` of `d_j R_i = Gamma_ij (R_j - R_i)`, tabulated on the
/// field's lattice.
#[derive(Debug, Clone)]
pub struct SymmetrySolution {
    lattice: LatticeField,
    /// Set when every `R_i` is the same constant.
    pub constant: Option<f64>,
}

impl SymmetrySolution {
    pub fn at_node(&self, node: &[usize]) -> Vec<f64> {
        self.lattice.node(node).iter().map(|x| x.re).collect()
    }

    pub fn at(&self, lambda: &[f64]) -> Result<Vec<f64>> {
        if let Some(c) = self.constant {
            self.lattice.interpolate(lambda, 1)?;
            return Ok(vec![c; self.lattice.components()]);
        }
        Ok(self.lattice.interpolate(lambda, 6)?.iter().map(|x| x.re).collect())
    }
}

/// Integrate the symmetry system from `r0` at the base point. Along its own
/// axis `R_i` has slope `slope[i]`; elsewhere it is fixed by the system.
pub fn integrate_symmetry(field: &HydroField, r0: &[f64], slope: &[f64]) -> Result<SymmetrySolution> {
    let n = field.n();
    if r0.len() != n || slope.len() != n {
        return Err(Error::Config("symmetry data needs N entries".into()));
    }
    if r0.iter().all(|&r| r == r0[0]) && slope.iter().all(|&s| s == 0.0) {
        let lat = field.lattice();
        let data = vec![re(r0[0]); n];
        let lattice = crate::goursat::solve(
            &ConstantSystem(n),
            lat.shape(),
            lat.base(),
            lat.spacing(),
            &(0..n).collect::<Vec<_>>(),
            &data,
        )?;
        return Ok(SymmetrySolution {
            lattice,
            constant: Some(r0[0]),
        });
    }
    let sys = SymmetrySystem {
        field,
        r0: r0.to_vec(),
        slope: slope.to_vec(),
    };
    let lat = field.lattice();
    let priority: Vec<usize> = (0..n).collect();
    let x0: Vec<Complex64> = r0.iter().map(|&r| re(r)).collect();
    let lattice = solve_richardson(&sys, lat.shape(), lat.base(), lat.spacing(), &priority, &x0)?;
    Ok(SymmetrySolution {
        lattice,
        constant: None,
    })
}

/// Same as [`integrate_symmetry`] with an explicit staircase priority.
pub fn integrate_symmetry_ordered(
    field: &HydroField,
    r0: &[f64],
    slope: &[f64],
    priority: &[usize],
) -> Result<SymmetrySolution> {
    let sys = SymmetrySystem {
        field,
        r0: r0.to_vec(),
        slope: slope.to_vec(),
    };
    let lat = field.lattice();
    let x0: Vec<Complex64> = r0.iter().map(|&r| re(r)).collect();
    let lattice = solve_richardson(&sys, lat.shape(), lat.base(), lat.spacing(), priority, &x0)?;
    Ok(SymmetrySolution {
        lattice,
        constant: None,
    })
}

struct ConstantSystem(usize);

impl LatticeSystem for ConstantSystem {
    fn dim(&self) -> usize {
        self.0
    }
    fn components(&self) -> usize {
        self.0
    }
    fn own_axis(&self, _comp: usize) -> Option<usize> {
        None
    }
    fn axis_value(&self, _comp: usize, _lambda_k: f64) -> Complex64 {
        Complex64::new(0.0, 0.0)
    }
    fn derivative(&self, _d: usize, _l: &[f64], _s: &[Complex64], out: &mut [Complex64]) -> Result<()> {
        out.iter_mut().for_each(|o| *o = Complex64::new(0.0, 0.0));
        Ok(())
    }
}

/// `d_j R_i` against `Gamma_ij (R_j - R_i)` on the grid interior.
pub fn check_symmetry(field: &HydroField, sym: &SymmetrySolution, tol: f64) -> ResidualReport {
    let tau = field.state(&field.centre()).tau.im;
    let run = || -> Result<Vec<f64>> {
        let mut res = Vec::new();
        for g in field.interior(1) {
            let s = field.state(&g);
            let r = sym.at_node(&g);
            for i in 0..field.n() {
                for j in 0..field.n() {
                    if i == j {
                        continue;
                    }
                    let fd = field.central(&g, j, |h| Ok(re(sym.at_node(h)[i])))?;
                    res.push((fd - gamma_closed(&s, i, j)? * (r[j] - r[i])).norm());
                }
            }
        }
        Ok(res)
    };
    match run() {
        Ok(r) => ResidualReport::from_residuals("g4", tau, &r, tol),
        Err(e) => ResidualReport::failed("g4", tau, tol, e),
    }
}

/// Times `t_0, t_1, ..., t_K` and the matching Riemann invariants.
#[derive(Debug, Clone, PartialEq)]
pub struct TimePoint {
    pub t0: f64,
    /// `t_1 .. t_K`
    pub t: Vec<f64>,
    pub lambda: Vec<f64>,
    pub converged: bool,
    pub newton_iters: usize,
    /// Largest off-diagonal Jacobian entry at the returned point.
    pub offdiag: f64,
    pub residual: f64,
}

impl TimePoint {
    pub fn seed(t0: f64, t: Vec<f64>, lambda: Vec<f64>) -> Self {
        TimePoint {
            t0,
            t,
            lambda,
            converged: false,
            newton_iters: 0,
            offdiag: f64::NAN,
            residual: f64::NAN,
        }
    }

    /// `t_n`, `n >= 0`.
    pub fn time(&self, n: usize) -> f64 {
        if n == 0 {
            self.t0
        } else {
            self.t.get(n - 1).copied().unwrap_or(0.0)
        }
    }

    pub fn shifted(&self, n: usize, delta: f64) -> Self {
        let mut p = self.clone();
        if n == 0 {
            p.t0 += delta;
        } else {
            if p.t.len() < n {
                p.t.resize(n, 0.0);
            }
            p.t[n - 1] += delta;
        }
        p
    }
}

pub fn time_points_csv(points: &[TimePoint]) -> String {
    let k = points.iter().map(|p| p.t.len()).max().unwrap_or(0);
    let n = points.first().map(|p| p.lambda.len()).unwrap_or(0);
    let mut head = vec!["t0".to_string()];
    head.extend((1..=k).map(|i| format!("t{i}")));
    head.extend((1..=n).map(|i| format!("lambda{i}")));
    head.push("iters".into());
    let mut out = head.join(",");
    out.push('\n');
    for p in points {
        let mut row: Vec<String> = (0..=k).map(|i| format!("{:.17e}", p.time(i))).collect();
        row.extend(p.lambda.iter().map(|x| format!("{x:.17e}")));
        row.push(p.newton_iters.to_string());
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Speeds and state at an arbitrary point of the field.
pub fn speeds_at(field: &HydroField, lambda: &[f64], order: usize) -> Result<FaberTable> {
    let (s, c) = field.at(lambda)?;
    faber_speeds(&c, &s, order)
}

/// `t_0 + sum_n phi_{i,n}(lambda) t_n - R_i(lambda)`.
pub fn hodograph_residual(
    field: &HydroField,
    sym: &SymmetrySolution,
    t: &TimePoint,
    lambda: &[f64],
) -> Result<Vec<f64>> {
    let k = t.t.len().max(1);
    let table = speeds_at(field, lambda, k)?;
    let r = sym.at(lambda)?;
    Ok((0..field.n())
        .map(|i| t.t0 + (1..=t.t.len()).map(|n| table.speed(i, n) * t.time(n)).sum::<f64>() - r[i])
        .collect())
}

fn jacobian(field: &HydroField, sym: &SymmetrySolution, t: &TimePoint, lambda: &[f64]) -> Result<Vec<Vec<f64>>> {
    let n = lambda.len();
    let mut jac = vec![vec![0.0; n]; n];
    for j in 0..n {
        let mut p = lambda.to_vec();
        let mut m = lambda.to_vec();
        p[j] += JACOBIAN_STEP;
        m[j] -= JACOBIAN_STEP;
        let fp = hodograph_residual(field, sym, t, &p)?;
        let fm = hodograph_residual(field, sym, t, &m)?;
        for i in 0..n {
            jac[i][j] = (fp[i] - fm[i]) / (2.0 * JACOBIAN_STEP);
        }
    }
    Ok(jac)
}

/// Gaussian elimination with partial pivoting.
fn linear_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    let scale = a.iter().flatten().fold(0.0_f64, |m, x| m.max(x.abs()));
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .unwrap_or(col);
        if a[piv][col].abs() <= 1e-13 * scale.max(1e-300) {
            return Err(Error::SingularJacobian(format!(
                "pivot {:.3e} in column {col}",
                a[piv][col]
            )));
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Ok(x)
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Damped Newton iteration for `lambda(t)` starting from `seed.lambda`.
pub fn hodograph_solve(field: &HydroField, sym: &SymmetrySolution, seed: &TimePoint) -> Result<TimePoint> {
    let mut lambda = seed.lambda.clone();
    let mut f = hodograph_residual(field, sym, seed, &lambda)?;
    let mut iters = 0;
    // iterate past the tolerance until the residual stops shrinking
    while iters < NEWTON_MAX_ITER {
        let norm = sup(&f);
        if norm < 1e-15 {
            break;
        }
        let jac = jacobian(field, sym, seed, &lambda)?;
        let step = linear_solve(jac, f.iter().map(|x| -x).collect())?;
        let mut damp = 1.0;
        let mut accepted = None;
        for _ in 0..30 {
            let trial: Vec<f64> = lambda.iter().zip(&step).map(|(l, s)| l + damp * s).collect();
            if let Ok(ft) = hodograph_residual(field, sym, seed, &trial) {
                if sup(&ft) < norm {
                    accepted = Some((trial, ft));
                    break;
                }
            }
            damp *= 0.5;
        }
        iters += 1;
        match accepted {
            Some((l, ft)) => {
                lambda = l;
                f = ft;
            }
            None => break,
        }
    }
    let residual = sup(&f);
    if residual >= NEWTON_TOL {
        return Err(Error::NoConvergence {
            iterations: iters,
            residual,
        });
    }
    let jac = jacobian(field, sym, seed, &lambda)?;
    let mut offdiag = 0.0_f64;
    for (i, row) in jac.iter().enumerate() {
        for (j, x) in row.iter().enumerate() {
            if i != j {
                offdiag = offdiag.max(x.abs());
            }
        }
    }
    Ok(TimePoint {
        lambda,
        converged: true,
        newton_iters: iters,
        offdiag,
        residual,
        ..seed.clone()
    })
}

/// Symmetry through the base point for which `lambda = 0` solves the
/// hodograph relation at `centre`: `R_i(0) = t_0 + sum_n phi_{i,n}(0) t_n`.
pub fn manufactured_symmetry(field: &HydroField, centre: &TimePoint, slope: &[f64]) -> Result<SymmetrySolution> {
    let table = speeds_at(field, &vec![0.0; field.n()], centre.t.len().max(1))?;
    let r0: Vec<f64> = (0..field.n())
        .map(|i| {
            centre.t0
                + (1..=centre.t.len())
                    .map(|n| table.speed(i, n) * centre.time(n))
                    .sum::<f64>()
        })
        .collect();
    integrate_symmetry(field, &r0, slope)
}

/// Central point and per-time steps of a finite-difference stencil in `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct TGrid {
    pub centre: TimePoint,
    /// Step in `t_n` (`n = 0..`); zero leaves `t_n` fixed.
    pub steps: Vec<f64>,
}

impl TGrid {
    /// `t_0 = 0 +- 0.002`, `t_1 = 0.01 +- 0.002`, `t_2 = 0 +- 0.002`.
    pub fn default_for(n: usize, k: usize) -> Self {
        let mut t = vec![0.0; k];
        t[0] = 0.01;
        let mut steps = vec![0.0; k + 1];
        for s in steps.iter_mut().take(3) {
            *s = T_STEP;
        }
        TGrid {
            centre: TimePoint::seed(0.0, t, vec![0.0; n]),
            steps,
        }
    }

    pub fn with_all_steps(mut self, delta: f64) -> Self {
        self.steps.iter_mut().for_each(|s| *s = delta);
        self
    }
}

/// Hodograph solutions at the centre of `grid` and at `centre +- step e_n`.
pub struct TStencil {
    pub centre: TimePoint,
    /// `(n, minus, plus)` for every varied time.
    pub arms: Vec<(usize, TimePoint, TimePoint)>,
    pub steps: Vec<f64>,
}

impl TStencil {
    pub fn solve(field: &HydroField, sym: &SymmetrySolution, grid: &TGrid) -> Result<Self> {
        let centre = hodograph_solve(field, sym, &grid.centre)?;
        let mut arms = Vec::new();
        for (n, &d) in grid.steps.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            let seed = |delta| {
                let mut p = centre.shifted(n, delta);
                p.converged = false;
                p
            };
            let minus = hodograph_solve(field, sym, &seed(-d))?;
            let plus = hodograph_solve(field, sym, &seed(d))?;
            arms.push((n, minus, plus));
        }
        Ok(TStencil {
            centre,
            arms,
            steps: grid.steps.clone(),
        })
    }

    pub fn points(&self) -> Vec<TimePoint> {
        let mut out = vec![self.centre.clone()];
        for (_, m, p) in &self.arms {
            out.push(m.clone());
            out.push(p.clone());
        }
        out
    }

    /// Central difference in `t_n` of a function of the solved point.
    pub fn d<F>(&self, n: usize, f: &F) -> Result<Option<Complex64>>
    where
        F: Fn(&TimePoint) -> Result<Complex64>,
    {
        match self.arms.iter().find(|(m, _, _)| *m == n) {
            Some((_, minus, plus)) => Ok(Some((f(plus)? - f(minus)?) / (2.0 * self.steps[n]))),
            None => Ok(None),
        }
    }
}

fn tau_of(field: &HydroField) -> f64 {
    field.state(&field.centre()).tau.im
}

/// `d lambda_i / d t_n = phi_{i,n} d lambda_i / d t_0` for every varied
/// `n >= 1`.
pub fn check_hydro_evolution(field: &HydroField, sym: &SymmetrySolution, grid: &TGrid, tol: f64) -> ResidualReport {
    let tau = tau_of(field);
    let run = || -> Result<Vec<f64>> {
        if grid.steps.iter().all(|&s| s == 0.0) {
            return Ok(Vec::new());
        }
        let st = TStencil::solve(field, sym, grid)?;
        let table = speeds_at(field, &st.centre.lambda, grid.centre.t.len().max(1))?;
        let mut res = Vec::new();
        for i in 0..field.n() {
            let lam = |p: &TimePoint| Ok(re(p.lambda[i]));
            let Some(d0) = st.d(0, &lam)? else {
                return Ok(Vec::new());
            };
            for n in 1..grid.steps.len() {
                if let Some(dn) = st.d(n, &lam)? {
                    res.push((dn - table.speed(i, n) * d0).norm());
                }
            }
        }
        Ok(res)
    };
    match run() {
        Ok(r) => ResidualReport::from_residuals("g0", tau, &r, tol),
        Err(e) => ResidualReport::failed("g0", tau, tol, e),
    }
}

/// Off-diagonal Jacobian entries and hodograph residuals at every point of
/// the stencil.
pub fn check_hodograph_points(field: &HydroField, sym: &SymmetrySolution, grid: &TGrid, tol: f64) -> ResidualReport {
    let tau = tau_of(field);
    match TStencil::solve(field, sym, grid) {
        Ok(st) => {
            let r: Vec<f64> = st.points().iter().map(|p| p.offdiag.max(p.residual)).collect();
            ResidualReport::from_residuals("hodograph", tau, &r, tol)
        }
        Err(e) => ResidualReport::failed("hodograph", tau, tol, e),
    }
}

/// `S(w)` at an arbitrary point, on the sheet nearest `reference`.
fn s_near(
    field: &HydroField,
    lambda: &[f64],
    w: impl Fn(&ULaurent) -> Complex64,
    reference: Complex64,
) -> Result<Complex64> {
    let (s, c) = field.at(lambda)?;
    let v = s_fn(w(&c), &s.modular()?, None)?.value;
    let k = ((reference.im - v.im) / (2.0 * PI)).round();
    Ok(v + Complex64::new(0.0, 2.0 * PI * k))
}

/// `nabla(z) = d_0 + sum_{k <= K} z^-k / k d_k` applied to `S(w)` on the stencil.
fn nabla<W>(field: &HydroField, st: &TStencil, z: Complex64, order: usize, w: W) -> Result<Complex64>
where
    W: Fn(&ULaurent) -> Complex64 + Copy,
{
    let reference = s_near(field, &st.centre.lambda, w, Complex64::new(0.0, 0.0))?;
    let f = |p: &TimePoint| s_near(field, &p.lambda, w, reference);
    let mut out = st.d(0, &f)?.ok_or_else(|| Error::Config("t_0 is not varied".into()))?;
    for k in 1..=order {
        let dk = st
            .d(k, &f)?
            .ok_or_else(|| Error::Config(format!("t_{k} is not varied")))?;
        out += z.powi(-(k as i32)) / k as f64 * dk;
    }
    Ok(out)
}

/// `|nabla(z1) S(u(z2)) - d_0 S(u(z1) - u(z2))|` with all `t`-derivatives
/// taken with step `delta`.
pub fn dkp_two_point_residual(
    field: &HydroField,
    sym: &SymmetrySolution,
    centre: &TimePoint,
    order: usize,
    delta: f64,
    z1: Complex64,
    z2: Complex64,
) -> Result<f64> {
    let grid = TGrid {
        centre: centre.clone(),
        steps: vec![delta; order + 1],
    };
    let st = TStencil::solve(field, sym, &grid)?;
    let lhs = nabla(field, &st, z1, order, move |c: &ULaurent| c.at(z2))?;
    let reference = s_near(
        field,
        &st.centre.lambda,
        move |c: &ULaurent| c.at(z1) - c.at(z2),
        Complex64::new(0.0, 0.0),
    )?;
    let rhs = st
        .d(0, &|p: &TimePoint| {
            s_near(field, &p.lambda, move |c: &ULaurent| c.at(z1) - c.at(z2), reference)
        })?
        .expect("t_0 varied");
    Ok((lhs - rhs).norm())
}

/// Largest pairwise difference of the three members of the symmetric
/// relation at `(z1, z2, z3)`.
pub fn dkp_three_point_residual(
    field: &HydroField,
    sym: &SymmetrySolution,
    centre: &TimePoint,
    order: usize,
    delta: f64,
    z: [Complex64; 3],
) -> Result<f64> {
    let grid = TGrid {
        centre: centre.clone(),
        steps: vec![delta; order + 1],
    };
    let st = TStencil::solve(field, sym, &grid)?;
    let [z1, z2, z3] = z;
    let a = nabla(field, &st, z1, order, move |c: &ULaurent| c.at(z2) - c.at(z3))?;
    let b = nabla(field, &st, z2, order, move |c: &ULaurent| c.at(z1) - c.at(z3))?;
    let c = nabla(field, &st, z3, order, move |c: &ULaurent| c.at(z1) - c.at(z2))?;
    Ok((a - b).norm().max((b - c).norm()).max((a - c).norm()))
}

/// Reports `e12` (at `delta`), `e12_order` (`|ratio - 4|` for the residual
/// at `order_delta` over the residual at `order_delta / 2`, tolerance 0.5)
/// and `e11`.
#[allow(clippy::too_many_arguments)]
pub fn check_dkp(
    field: &HydroField,
    sym: &SymmetrySolution,
    centre: &TimePoint,
    order: usize,
    delta: f64,
    order_delta: f64,
    z1: Complex64,
    z2: Complex64,
    triple: [Complex64; 3],
    tol: f64,
) -> [ResidualReport; 3] {
    let tau = tau_of(field);
    let e12 = dkp_two_point_residual(field, sym, centre, order, delta, z1, z2);
    let e12a = dkp_two_point_residual(field, sym, centre, order, order_delta, z1, z2);
    let e12h = dkp_two_point_residual(field, sym, centre, order, order_delta / 2.0, z1, z2);
    let e11 = dkp_three_point_residual(field, sym, centre, order, delta, triple);
    let r12 = match &e12 {
        Ok(r) => ResidualReport::from_residuals("e12", tau, &[*r], tol),
        Err(e) => ResidualReport::failed("e12", tau, tol, e),
    };
    let ratio = match (&e12a, &e12h) {
        (Ok(a), Ok(b)) => ResidualReport::from_residuals("e12_order", tau, &[(a / b - 4.0).abs()], 0.5),
        (Err(e), _) | (_, Err(e)) => ResidualReport::failed("e12_order", tau, 0.5, e),
    };
    let r11 = match e11 {
        Ok(r) => ResidualReport::from_residuals("e11", tau, &[r], tol),
        Err(e) => ResidualReport::failed("e11", tau, tol, e),
    };
    [r12, ratio, r11]
}

/// `p^2 - R^2 (w + 1/w) - V` at `u`, as its four terms, with `p = c_1 S'(u)`,
/// `w = exp(-2 S(u))`, `R = pi c_1 theta_2(0) theta_3(0)`,
/// `V = -(pi c_1)^2 (theta_2(0)^4 + theta_3(0)^4)`.
pub fn curve_terms(c1: f64, u: Complex64, m: &ModularParam) -> Result<[Complex64; 4]> {
    let s = s_fn(u, m, None)?;
    let p = c1 * s.d1;
    let w = (-2.0 * s.value).exp();
    let (t2, t3) = (theta_const(ThetaIndex::Two, m), theta_const(ThetaIndex::Three, m));
    let gamma = PI * c1;
    let r = gamma * t2 * t3;
    let v = -gamma * gamma * (t2.powi(4) + t3.powi(4));
    Ok([p * p, -r * r * w, -r * r / w, re(-v)])
}

pub fn check_curve(c: &ULaurent, s: &GTState, samples: usize, seed: u64, tol: f64) -> ResidualReport {
    let run = || -> Result<Vec<f64>> {
        let m = s.modular()?;
        let c1 = c.coeffs.first().copied().unwrap_or(0.0);
        let pts = Sampler::new(seed).admissible(&m, 1, samples, |p| vec![p[0]]);
        pts.iter().map(|p| Ok(balance(&curve_terms(c1, p[0], &m)?))).collect()
    };
    match run() {
        Ok(r) => ResidualReport::from_residuals("d5", s.tau.im, &r, tol),
        Err(e) => ResidualReport::failed("d5", s.tau.im, tol, e),
    }
}

/// `F_00, F_01, .., F_0K` from `S(u(z)) = -log z + F_00 + sum_n F_0n z^-n / n`.
pub fn conserved_density_series(c: &ULaurent, m: &ModularParam, order: usize) -> Result<Vec<f64>> {
    if order > c.coeffs.len() {
        return Err(Error::OrderExceeded {
            requested: order,
            available: c.coeffs.len(),
        });
    }
    let c1 = c.coeffs.first().copied().unwrap_or(0.0);
    if !(c1 > 0.0) {
        return Err(Error::Config(format!("c_1 = {c1} must be positive")));
    }
    let len = order + 1;
    // S(u) - log u about u = 0
    let t1 = theta_taylor(ThetaIndex::One, Complex64::new(0.0, 0.0), m, len);
    let t4 = theta_taylor(ThetaIndex::Four, Complex64::new(0.0, 0.0), m, len - 1);
    let regular = &Series::from_coeffs(t1[1..].to_vec()).ln() - &Series::from_coeffs(t4).ln();
    // u(z) / (c_1 / z) as a series in 1/z
    let ratio = Series::from_coeffs(
        (0..len)
            .map(|k| re(c.coeffs.get(k).copied().unwrap_or(0.0) / c1))
            .collect(),
    );
    let u = c.series().truncate(len);
    let total = &(&ratio.ln() + &regular.compose(&u)) + &Series::from_coeffs(vec![re(c1.ln())]);
    let mut out = vec![(regular.coeff(0) + c1.ln()).re];
    out.extend((1..len).map(|n| (n as f64 * total.coeff(n)).re));
    Ok(out)
}

/// `g_j phi_{j,n} = d_j F_0n` for `n <= order`, the conserved-density
/// equation for `S(u(z))` at every z-sample, the analytic `f`-function, and
/// `F_00 = log(pi c_1 theta_2(0) theta_3(0))`. Returns
/// `[cq5, cq3, f, f00]`.
pub fn check_conserved(field: &HydroField, order: usize, tol: f64, f_tol: f64, f00_tol: f64) -> [ResidualReport; 4] {
    let tau = tau_of(field);
    let wrap = |name: &str, t: f64, r: Result<Vec<f64>>| match r {
        Ok(r) => ResidualReport::from_residuals(name, tau, &r, t),
        Err(e) => ResidualReport::failed(name, tau, t, e),
    };
    let density = |node: &[usize], n: usize| -> Result<Complex64> {
        let s = field.state(node);
        Ok(re(conserved_density_series(
            &field.laurent(node),
            &s.modular()?,
            order,
        )?[n]))
    };
    let cq5 = (|| {
        let mut res = Vec::new();
        for g in field.interior(1) {
            let s = field.state(&g);
            let table = faber_speeds(&field.laurent(&g), &s, order)?;
            for j in 0..field.n() {
                let gj = metric_g(&s, j)?;
                for n in 0..=order {
                    let fd = field.central(&g, j, |h| density(h, n))?;
                    res.push((fd - gj * table.speed(j, n)).norm());
                }
            }
        }
        Ok(res)
    })();
    let cq3 = (|| {
        let mut res = Vec::new();
        for g in field.interior(1) {
            let s = field.state(&g);
            let u = field.laurent(&g);
            for &z in field.z_samples() {
                let w = move |c: &ULaurent| c.at(z);
                let reference = s_fn(u.at(z), &s.modular()?, None)?.value;
                let p = |h: &[usize]| s_on_sheet(field, h, w, reference);
                for i in 0..field.n() {
                    for j in i + 1..field.n() {
                        let dij = field.central(&g, i, |h| field.central(h, j, p))?;
                        let di = field.central(&g, i, p)?;
                        let dj = field.central(&g, j, p)?;
                        let rhs = gamma_closed(&s, i, j)? * di + gamma_closed(&s, j, i)? * dj;
                        res.push((dij - rhs).norm());
                    }
                }
            }
        }
        Ok(res)
    })();
    let f = (|| {
        let mut res = Vec::new();
        for g in field.grid_indices() {
            let s = field.state(&g);
            let e = Moduli::new(&s.modular()?);
            let u = field.laurent(&g);
            for i in 0..field.n() {
                for j in 0..field.n() {
                    if i == j {
                        continue;
                    }
                    for &(_, uz) in &u.samples {
                        res.push(balance(&f_terms(&e, re(s.xi[i]), re(s.xi[j]), uz)?));
                    }
                }
            }
        }
        Ok(res)
    })();
    let f00 = (|| {
        let mut res = Vec::new();
        for g in field.grid_indices() {
            let s = field.state(&g);
            let m = s.modular()?;
            let c = field.laurent(&g);
            let a = conserved_density_series(&c, &m, order)?[0];
            let b = crate::metric::potential_from_c1(&c, &s)?;
            res.push((a - b).abs());
        }
        Ok(res)
    })();
    [
        wrap("cq5", tol, cq5),
        wrap("cq3", tol, cq3),
        wrap("f", f_tol, f),
        wrap("f00", f00_tol, f00),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_solve_and_singularity() {
        let x = linear_solve(vec![vec![2.0, 1.0], vec![1.0, 3.0]], vec![3.0, 5.0]).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-15 && (x[1] - 1.4).abs() < 1e-15);
        assert!(matches!(
            linear_solve(vec![vec![1.0, 2.0], vec![2.0, 4.0]], vec![1.0, 1.0]),
            Err(Error::SingularJacobian(_))
        ));
    }

    #[test]
    fn curve_at_generic_and_near_pole() {
        let m = ModularParam::from_imag(1.0).unwrap();
        let r = balance(&curve_terms(0.3, Complex64::new(0.25, 0.0), &m).unwrap());
        assert!(r < 1e-10, "{r}");
        let t = curve_terms(0.3, Complex64::new(1e-3, 0.0), &m).unwrap();
        let total: Complex64 = t.iter().sum();
        assert!(total.norm() < 1e-6, "{total}");
    }

    #[test]
    fn f00_matches_closed_form_and_scales() {
        let m = ModularParam::from_imag(1.2).unwrap();
        let c = ULaurent {
            coeffs: vec![0.3, 0.02, -0.01, 0.004, 0.0, 0.0],
            samples: Vec::new(),
        };
        let f = conserved_density_series(&c, &m, 6).unwrap();
        let t2 = theta_const(ThetaIndex::Two, &m);
        let t3 = theta_const(ThetaIndex::Three, &m);
        assert!((f[0] - (PI * 0.3 * t2 * t3).ln()).abs() < 1e-11);
        // c_k -> t^k c_k is z -> z / t
        let t = 2.0_f64;
        let scaled = ULaurent {
            coeffs: c
                .coeffs
                .iter()
                .enumerate()
                .map(|(k, x)| x * t.powi(k as i32 + 1))
                .collect(),
            samples: Vec::new(),
        };
        let g = conserved_density_series(&scaled, &m, 6).unwrap();
        assert!((g[0] - f[0] - t.ln()).abs() < 1e-12);
        for n in 1..=6 {
            assert!(
                (g[n] - f[n] * t.powi(n as i32)).abs() < 1e-10 * (1.0 + g[n].abs()),
                "{n}"
            );
        }
    }

    #[test]
    fn first_density_from_large_z() {
        let m = ModularParam::from_imag(1.0).unwrap();
        let c = ULaurent {
            coeffs: vec![0.4, 0.03, 0.0, 0.0],
            samples: Vec::new(),
        };
        let f = conserved_density_series(&c, &m, 4).unwrap();
        // (S(u(z)) + log z - F00) z = F01 + O(1/z)
        let est = |z: f64| (s_fn(c.eval(re(z)), &m, None).unwrap().value.re + z.ln() - f[0]) * z;
        let rich = (10.0 * est(1e4) - est(1e3)) / 9.0;
        assert!((rich - f[1]).abs() < 1e-7, "{rich} {}", f[1]);
        assert!(f[1].abs() > 1e-3);
    }

    #[test]
    fn time_point_csv_columns() {
        let p = TimePoint {
            newton_iters: 3,
            ..TimePoint::seed(0.0, vec![0.01, 0.0], vec![0.1, 0.2])
        };
        let csv = time_points_csv(&[p]);
        assert!(csv.starts_with("t0,t1,t2,lambda1,lambda2,iters\n"));
        assert!(csv.trim_end().ends_with(",3"));
    }
}
