//! Elliptic Löwner flows and the Gibbons-Tsarev system over lambda-space.
//!
//! Along direction `lambda_k` the state `(tau, xi, v)` moves by
//!
//! ```text
//! d tau  / d l_k = v_k
//! d xi_j / d l_k = (zeta_1(xi_k - xi_j) - zeta_1(xi_k)) v_k / (4 pi i)       j != k
//! d v_j  / d l_k = wp_1(xi_j - xi_k) v_j v_k / (2 pi i)                       j != k
//! d u    / d l_k = (zeta_1(xi_k) - zeta_1(u + xi_k)) v_k / (4 pi i)
//! ```
//!
//! with all `zeta_1`, `wp_1` at `tau / 2`. The own-direction rates
//! `D_k = d xi_k / d l_k` and `W_k = d v_k / d l_k` are free data, but only
//! on the `lambda_k`-axis through the base point: away from it they are fixed
//! by commuting the mixed derivatives of the equations above, and the state
//! carries them as extra unknowns. The [`crate::goursat`] solver then
//! integrates everything on a lattice.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::elliptic::{lattice_distance, log_theta_series, s_fn, zeta_jet, ZetaJet};
use crate::error::{Error, Result};
use crate::goursat::{solve_richardson, LatticeField, LatticeSystem};
use crate::report::ResidualReport;
use crate::sampling::Sampler;
use crate::series::Series;
use crate::theta::{ModularParam, ThetaIndex};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Minimum separation of driving points (and of each from the origin).
pub const COLLISION_TOL: f64 = 1e-3;

pub const DEFAULT_SERIES_ORDER: usize = 16;

fn four_pi_i() -> Complex64 {
    4.0 * PI * I
}

/// Closed-form driving functions of one variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Driving {
    Constant(f64),
    /// `a + b * lambda`
    Linear([f64; 2]),
    Sinusoidal {
        amplitude: f64,
        frequency: f64,
        #[serde(default)]
        phase: f64,
    },
}

impl Driving {
    pub fn eval(&self, lambda: f64) -> f64 {
        match *self {
            Driving::Constant(a) => a,
            Driving::Linear([a, b]) => a + b * lambda,
            Driving::Sinusoidal {
                amplitude,
                frequency,
                phase,
            } => amplitude * (frequency * lambda + phase).sin(),
        }
    }
}

/// Own-direction data: `d xi_k / d l_k = d_k(l_k)` and
/// `d v_k / d l_k = i w_k(l_k)` on the `k`-th axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrivingSpec {
    pub d: Vec<Driving>,
    pub w: Vec<Driving>,
}

impl DrivingSpec {
    pub fn zero(n: usize) -> Self {
        DrivingSpec {
            d: vec![Driving::Constant(0.0); n],
            w: vec![Driving::Constant(0.0); n],
        }
    }

    pub fn own_xi(&self, k: usize, lambda_k: f64) -> f64 {
        self.d[k].eval(lambda_k)
    }

    pub fn own_v(&self, k: usize, lambda_k: f64) -> Complex64 {
        I * self.w[k].eval(lambda_k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub spacing: f64,
    /// Nodes per axis, centred on the base point.
    pub extent: usize,
}

/// Scenario configuration. `tau0` and `v0` hold imaginary parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(rename = "N")]
    pub n: usize,
    pub tau0: f64,
    pub xi0: Vec<f64>,
    pub v0: Vec<f64>,
    pub driving: DrivingSpec,
    pub u0_coeffs: Vec<f64>,
    /// Points `[re, im]`.
    pub z_samples: Vec<[f64; 2]>,
    pub grid: GridSpec,
    pub step: f64,
    #[serde(default = "default_order")]
    pub series_order: usize,
}

fn default_order() -> usize {
    DEFAULT_SERIES_ORDER
}

impl Scenario {
    pub fn default_n2() -> Self {
        Scenario {
            name: Some("default-n2".into()),
            n: 2,
            tau0: 1.0,
            xi0: vec![0.2, 0.6],
            v0: vec![0.12, 0.08],
            driving: DrivingSpec::zero(2),
            u0_coeffs: vec![0.1],
            z_samples: vec![[4.0, 0.0], [6.0, 0.0], [10.0, 0.0], [8.0, 2.0], [-7.0, 3.0]],
            grid: GridSpec {
                spacing: 0.02,
                extent: 5,
            },
            step: 1e-3,
            series_order: DEFAULT_SERIES_ORDER,
        }
    }

    pub fn default_n3() -> Self {
        Scenario {
            name: Some("default-n3".into()),
            n: 3,
            tau0: 1.0,
            xi0: vec![0.15, 0.45, 0.75],
            v0: vec![0.12, 0.08, 0.1],
            driving: DrivingSpec::zero(3),
            u0_coeffs: vec![0.1],
            z_samples: vec![[4.0, 0.0], [6.0, 0.0], [10.0, 0.0], [8.0, 2.0]],
            grid: GridSpec {
                spacing: 0.02,
                extent: 5,
            },
            step: 2e-3,
            series_order: DEFAULT_SERIES_ORDER,
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "default-n2" => Ok(Self::default_n2()),
            "default-n3" => Ok(Self::default_n3()),
            other => Err(Error::Config(format!(
                "unknown scenario '{other}' (known: default-n2, default-n3)"
            ))),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.n == 0 {
            return bad("N must be positive");
        }
        if self.xi0.len() != self.n || self.v0.len() != self.n {
            return bad("xi0 and v0 need N entries");
        }
        if self.driving.d.len() != self.n || self.driving.w.len() != self.n {
            return bad("driving.d and driving.w need N entries");
        }
        if !(self.tau0 > 0.0) {
            return bad("tau0 (imaginary part) must be positive");
        }
        if self.u0_coeffs.len() > self.series_order {
            return bad("more u0 coefficients than series_order");
        }
        if self.grid.extent == 0 || self.grid.extent.is_multiple_of(2) {
            return bad("grid.extent must be odd (the base point is the centre node)");
        }
        if !(self.step > 0.0) || !(self.grid.spacing > 0.0) {
            return bad("step and grid.spacing must be positive");
        }
        let ratio = self.grid.spacing / (2.0 * self.step);
        if (ratio - ratio.round()).abs() > 1e-9 || ratio.round() < 1.0 {
            return bad("grid.spacing must be a positive multiple of 2 * step");
        }
        self.initial_state().check_separation()
    }

    pub fn z_points(&self) -> Vec<Complex64> {
        self.z_samples.iter().map(|z| Complex64::new(z[0], z[1])).collect()
    }

    pub fn initial_state(&self) -> GTState {
        GTState {
            tau: Complex64::new(0.0, self.tau0),
            xi: self.xi0.clone(),
            v: self.v0.iter().map(|&b| Complex64::new(0.0, b)).collect(),
            lambda: vec![0.0; self.n],
            own_xi: (0..self.n).map(|k| self.driving.own_xi(k, 0.0)).collect(),
            own_v: (0..self.n).map(|k| self.driving.own_v(k, 0.0)).collect(),
        }
    }

    pub fn initial_laurent(&self) -> Result<ULaurent> {
        let mut coeffs = self.u0_coeffs.clone();
        coeffs.resize(self.series_order, 0.0);
        let c = ULaurent {
            coeffs,
            samples: Vec::new(),
        };
        let samples = self.z_points().into_iter().map(|z| (z, c.eval(z))).collect();
        Ok(ULaurent { samples, ..c })
    }
}

/// Reduction state at one point of lambda-space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GTState {
    pub tau: Complex64,
    pub xi: Vec<f64>,
    pub v: Vec<Complex64>,
    pub lambda: Vec<f64>,
    /// `d xi_k / d l_k` at this point.
    pub own_xi: Vec<f64>,
    /// `d v_k / d l_k` at this point.
    pub own_v: Vec<Complex64>,
}

impl GTState {
    pub fn n(&self) -> usize {
        self.xi.len()
    }

    pub fn modular(&self) -> Result<ModularParam> {
        ModularParam::new(Complex64::new(0.0, self.tau.im))
    }

    /// Fails if two driving points, or a driving point and the origin,
    /// come within [`COLLISION_TOL`] modulo the lattice `1, tau/2`.
    pub fn check_separation(&self) -> Result<()> {
        let t = self.tau.im / 2.0;
        for j in 0..self.n() {
            let d = lattice_distance(Complex64::new(self.xi[j], 0.0), 1.0, t);
            if d < COLLISION_TOL {
                return Err(Error::Collision {
                    detail: format!("xi_{} = {:.6} is at a lattice point", j + 1, self.xi[j]),
                });
            }
            for k in j + 1..self.n() {
                let d = lattice_distance(Complex64::new(self.xi[j] - self.xi[k], 0.0), 1.0, t);
                if d < COLLISION_TOL {
                    return Err(Error::Collision {
                        detail: format!("xi_{} and xi_{} (separation {:.2e})", j + 1, k + 1, d),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Truncated expansion `u(z) = c_1/z + ... + c_M/z^M` plus pointwise values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ULaurent {
    pub coeffs: Vec<f64>,
    pub samples: Vec<(Complex64, Complex64)>,
}

impl ULaurent {
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let w = z.inv();
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| (acc + c) * w)
    }

    /// `u` as a power series in `1/z` (constant term zero).
    pub fn series(&self) -> Series {
        let mut c = vec![Complex64::new(0.0, 0.0)];
        c.extend(self.coeffs.iter().map(|&x| Complex64::new(x, 0.0)));
        Series::from_coeffs(c)
    }

    /// Pointwise sample at `z` if there is one, otherwise the series.
    pub fn at(&self, z: Complex64) -> Complex64 {
        self.samples
            .iter()
            .find(|(s, _)| (s - z).norm() < 1e-12)
            .map(|&(_, u)| u)
            .unwrap_or_else(|| self.eval(z))
    }
}

/// `d/d l_k` of `(tau, xi, v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateDerivative {
    pub tau: Complex64,
    pub xi: Vec<Complex64>,
    pub v: Vec<Complex64>,
}

/// Half-modulus functions needed for one direction.
struct PairJets {
    /// jet of `zeta_1(., tau/2)` at `xi_d - xi_k`
    diff: Vec<Option<ZetaJet>>,
    /// jets at each `xi_k`
    at: Vec<ZetaJet>,
}

fn dot_zeta(j: &ZetaJet) -> Complex64 {
    (-j.zeta * j.wp - 0.5 * j.wp1) / four_pi_i()
}

fn dot_wp(j: &ZetaJet) -> Complex64 {
    (-j.wp * j.wp + j.zeta * j.wp1 + 0.5 * j.wp2) / four_pi_i()
}

fn pair_jets(xi: &[Complex64], d: usize, half: &ModularParam) -> Result<PairJets> {
    let n = xi.len();
    let mut diff = Vec::with_capacity(n);
    let mut at = Vec::with_capacity(n);
    for k in 0..n {
        at.push(zeta_jet(ThetaIndex::One, xi[k], half)?);
        diff.push(if k == d {
            None
        } else {
            Some(zeta_jet(ThetaIndex::One, xi[d] - xi[k], half)?)
        });
    }
    Ok(PairJets { diff, at })
}

/// Component layout of the lattice state vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Layout {
    pub n: usize,
    pub order: usize,
    pub samples: usize,
}

impl Layout {
    pub const TAU: usize = 0;

    pub fn xi(&self, j: usize) -> usize {
        1 + j
    }
    pub fn v(&self, j: usize) -> usize {
        1 + self.n + j
    }
    pub fn own_xi(&self, k: usize) -> usize {
        1 + 2 * self.n + k
    }
    pub fn own_v(&self, k: usize) -> usize {
        1 + 3 * self.n + k
    }
    /// `c_m`, `m >= 1`.
    pub fn coeff(&self, m: usize) -> usize {
        1 + 4 * self.n + m - 1
    }
    pub fn sample(&self, s: usize) -> usize {
        1 + 4 * self.n + self.order + s
    }
    pub fn len(&self) -> usize {
        1 + 4 * self.n + self.order + self.samples
    }
    pub fn is_empty(&self) -> bool {
        false
    }

    fn pack(&self, s: &GTState, u: &ULaurent) -> Vec<Complex64> {
        let mut x = vec![Complex64::new(0.0, 0.0); self.len()];
        x[Self::TAU] = s.tau;
        for j in 0..self.n {
            x[self.xi(j)] = Complex64::new(s.xi[j], 0.0);
            x[self.v(j)] = s.v[j];
            x[self.own_xi(j)] = Complex64::new(s.own_xi[j], 0.0);
            x[self.own_v(j)] = s.own_v[j];
        }
        for m in 1..=self.order {
            x[self.coeff(m)] = Complex64::new(u.coeffs.get(m - 1).copied().unwrap_or(0.0), 0.0);
        }
        for (s, &(_, uv)) in u.samples.iter().enumerate().take(self.samples) {
            x[self.sample(s)] = uv;
        }
        x
    }

    pub fn state(&self, x: &[Complex64], lambda: &[f64]) -> GTState {
        GTState {
            tau: x[Self::TAU],
            xi: (0..self.n).map(|j| x[self.xi(j)].re).collect(),
            v: (0..self.n).map(|j| x[self.v(j)]).collect(),
            lambda: lambda.to_vec(),
            own_xi: (0..self.n).map(|k| x[self.own_xi(k)].re).collect(),
            own_v: (0..self.n).map(|k| x[self.own_v(k)]).collect(),
        }
    }

    pub fn laurent(&self, x: &[Complex64], z: &[Complex64]) -> ULaurent {
        ULaurent {
            coeffs: (1..=self.order).map(|m| x[self.coeff(m)].re).collect(),
            samples: z.iter().enumerate().map(|(s, &zz)| (zz, x[self.sample(s)])).collect(),
        }
    }
}

/// The Gibbons-Tsarev + Löwner system as a lattice system.
pub struct GTSystem {
    pub layout: Layout,
    pub driving: DrivingSpec,
}

impl GTSystem {
    /// All component rates in direction `d` for the raw state `x`.
    fn rates(&self, d: usize, x: &[Complex64], out: &mut [Complex64]) -> Result<()> {
        let l = &self.layout;
        let n = l.n;
        let tau = x[Layout::TAU];
        let full = ModularParam::new(Complex64::new(0.0, tau.im))?;
        let half = full.half();
        let xi: Vec<Complex64> = (0..n).map(|j| x[l.xi(j)]).collect();
        let v: Vec<Complex64> = (0..n).map(|j| x[l.v(j)]).collect();
        let dd: Vec<Complex64> = (0..n).map(|k| x[l.own_xi(k)]).collect();
        let ww: Vec<Complex64> = (0..n).map(|k| x[l.own_v(k)]).collect();

        let mut probe = l.state(x, &vec![0.0; n]);
        probe.tau = tau;
        probe.check_separation()?;

        let jets = pair_jets(&xi, d, &half)?;
        let jd = jets.at[d];
        let vd = v[d];

        out.iter_mut().for_each(|o| *o = Complex64::new(0.0, 0.0));
        out[Layout::TAU] = vd;
        for k in 0..n {
            if k == d {
                out[l.xi(d)] = dd[d];
                out[l.v(d)] = ww[d];
                continue;
            }
            let jdk = jets.diff[k].expect("off-diagonal jet");
            let jk = jets.at[k];
            // d_d xi_k, d_d v_k
            out[l.xi(k)] = (jdk.zeta - jd.zeta) * vd / four_pi_i();
            out[l.v(k)] = jdk.wp * v[k] * vd / (2.0 * PI * I);

            // rates of xi_d, v_d in direction k
            // zeta_1(xi_k - xi_d) = -zeta(xi_d - xi_k), wp even, wp' odd
            let dk_xi_d = (-jdk.zeta - jk.zeta) * v[k] / four_pi_i();
            let dk_v_d = jdk.wp * v[d] * v[k] / (2.0 * PI * I);

            // D_k moved along d: commute d_d d_k xi_k = d_k d_d xi_k
            let a_dk = jdk.zeta - jd.zeta;
            let dk_a = -jdk.wp * (dk_xi_d - dd[k]) + jd.wp * dk_xi_d + (dot_zeta(&jdk) - dot_zeta(&jd)) * v[k];
            out[l.own_xi(k)] = (dk_a * vd + a_dk * dk_v_d) / four_pi_i();

            // W_k moved along d, from d_k [wp_1(xi_k - xi_d) v_k v_d]
            let p = jdk.wp;
            let p1 = -jdk.wp1;
            let pdot = dot_wp(&jdk);
            out[l.own_v(k)] = ((p1 * (dd[k] - dk_xi_d) + pdot * v[k]) * v[k] * vd + p * (ww[k] * vd + v[k] * dk_v_d))
                / (2.0 * PI * I);
        }

        if l.order > 0 {
            let lz = log_theta_series(ThetaIndex::One, xi[d], &half, l.order + 1)?;
            // -zeta_1(xi_d + w) + zeta_1(xi_d) = sum_{n>=1} a_n w^n
            let mut a = vec![Complex64::new(0.0, 0.0); l.order + 1];
            for (k, slot) in a.iter_mut().enumerate().skip(1) {
                *slot = -(k as f64 + 1.0) * lz.coeff(k + 1);
            }
            let mut u = vec![Complex64::new(0.0, 0.0); l.order + 1];
            for m in 1..=l.order {
                u[m] = x[l.coeff(m)];
            }
            let du = Series::from_coeffs(a).compose(&Series::from_coeffs(u));
            let k = vd / four_pi_i();
            for m in 1..=l.order {
                out[l.coeff(m)] = k * du.coeff(m);
            }
        }
        for s in 0..l.samples {
            let us = x[l.sample(s)];
            let z = zeta_jet(ThetaIndex::One, us + xi[d], &half)?.zeta;
            out[l.sample(s)] = (jd.zeta - z) * vd / four_pi_i();
        }
        Ok(())
    }
}

impl LatticeSystem for GTSystem {
    fn dim(&self) -> usize {
        self.layout.n
    }

    fn components(&self) -> usize {
        self.layout.len()
    }

    fn own_axis(&self, comp: usize) -> Option<usize> {
        let n = self.layout.n;
        if comp > 2 * n && comp < 1 + 3 * n {
            Some(comp - 1 - 2 * n)
        } else if comp > 3 * n && comp < 1 + 4 * n {
            Some(comp - 1 - 3 * n)
        } else {
            None
        }
    }

    fn axis_value(&self, comp: usize, lambda_k: f64) -> Complex64 {
        let n = self.layout.n;
        if comp < 1 + 3 * n {
            Complex64::new(self.driving.own_xi(comp - 1 - 2 * n, lambda_k), 0.0)
        } else {
            self.driving.own_v(comp - 1 - 3 * n, lambda_k)
        }
    }

    fn derivative(&self, d: usize, _lambda: &[f64], state: &[Complex64], out: &mut [Complex64]) -> Result<()> {
        self.rates(d, state, out)
    }
}

/// `d/d l_k` of `(tau, xi, v)` at `s`, using its own-direction rates.
pub fn gt_direction_derivative(s: &GTState, k: usize) -> Result<StateDerivative> {
    let layout = Layout {
        n: s.n(),
        order: 0,
        samples: 0,
    };
    let sys = GTSystem {
        layout,
        driving: DrivingSpec::zero(s.n()),
    };
    let x = layout.pack(
        s,
        &ULaurent {
            coeffs: Vec::new(),
            samples: Vec::new(),
        },
    );
    let mut out = vec![Complex64::new(0.0, 0.0); layout.len()];
    sys.rates(k, &x, &mut out)?;
    Ok(StateDerivative {
        tau: out[Layout::TAU],
        xi: (0..s.n()).map(|j| out[layout.xi(j)]).collect(),
        v: (0..s.n()).map(|j| out[layout.v(j)]).collect(),
    })
}

/// `d u / d l_j` at a point `u` of the plane.
pub fn loewner_rhs_pointwise(u: Complex64, s: &GTState, j: usize) -> Result<Complex64> {
    let half = s.modular()?.half();
    let xi = Complex64::new(s.xi[j], 0.0);
    let a = zeta_jet(ThetaIndex::One, u + xi, &half)?.zeta;
    let b = zeta_jet(ThetaIndex::One, xi, &half)?.zeta;
    Ok((b - a) * s.v[j] / four_pi_i())
}

/// The same right-hand side written at modulus `tau` with `zeta_1 + zeta_4`.
pub fn loewner_rhs_pointwise_full(u: Complex64, s: &GTState, j: usize) -> Result<Complex64> {
    let m = s.modular()?;
    let xi = Complex64::new(s.xi[j], 0.0);
    let z = |x| -> Result<Complex64> {
        Ok(zeta_jet(ThetaIndex::One, x, &m)?.zeta + zeta_jet(ThetaIndex::Four, x, &m)?.zeta)
    };
    Ok((z(xi)? - z(u + xi)?) * s.v[j] / four_pi_i())
}

/// `d c_m / d l_j` for `m = 1..=order`.
pub fn loewner_rhs_series(c: &ULaurent, s: &GTState, j: usize, order: usize) -> Result<Vec<Complex64>> {
    if order > c.coeffs.len() {
        return Err(Error::OrderExceeded {
            requested: order,
            available: c.coeffs.len(),
        });
    }
    let layout = Layout {
        n: s.n(),
        order,
        samples: 0,
    };
    let sys = GTSystem {
        layout,
        driving: DrivingSpec::zero(s.n()),
    };
    let trimmed = ULaurent {
        coeffs: c.coeffs[..order].to_vec(),
        samples: Vec::new(),
    };
    let x = layout.pack(s, &trimmed);
    let mut out = vec![Complex64::new(0.0, 0.0); layout.len()];
    sys.rates(j, &x, &mut out)?;
    Ok((1..=order).map(|m| out[layout.coeff(m)]).collect())
}

/// States tabulated over lambda-space.
#[derive(Debug, Clone)]
pub struct HydroField {
    layout: Layout,
    lattice: LatticeField,
    z: Vec<Complex64>,
    /// lattice nodes per grid spacing
    stride: usize,
    extent: Vec<usize>,
    spacing: f64,
}

impl HydroField {
    pub fn n(&self) -> usize {
        self.layout.n
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn series_order(&self) -> usize {
        self.layout.order
    }

    pub fn z_samples(&self) -> &[Complex64] {
        &self.z
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn lattice(&self) -> &LatticeField {
        &self.lattice
    }

    pub fn grid_shape(&self) -> &[usize] {
        &self.extent
    }

    /// Lattice nodes between consecutive grid nodes.
    pub fn stride(&self) -> usize {
        self.stride
    }

    /// Node indices below address the integration lattice; the grid is the
    /// sub-lattice of every `stride`-th node.
    pub fn grid_indices(&self) -> Vec<Vec<usize>> {
        crate::goursat::all_indices(&self.extent)
            .into_iter()
            .map(|g| g.iter().map(|&i| i * self.stride).collect())
            .collect()
    }

    pub fn grid_position(&self, node: &[usize]) -> Vec<usize> {
        node.iter().map(|&i| i / self.stride).collect()
    }

    /// The grid node at the base point.
    pub fn centre(&self) -> Vec<usize> {
        self.lattice.base().to_vec()
    }

    /// Grid nodes at least `margin` grid spacings from every face.
    pub fn interior(&self, margin: usize) -> Vec<Vec<usize>> {
        let m = margin * self.stride;
        let shape = self.lattice.shape();
        self.grid_indices()
            .into_iter()
            .filter(|idx| idx.iter().zip(shape).all(|(&i, &e)| i >= m && i + m < e))
            .collect()
    }

    pub fn raw(&self, node: &[usize]) -> &[Complex64] {
        self.lattice.node(node)
    }

    pub fn lambda(&self, node: &[usize]) -> Vec<f64> {
        self.lattice.lambda(node)
    }

    pub fn state(&self, node: &[usize]) -> GTState {
        self.layout.state(self.raw(node), &self.lambda(node))
    }

    pub fn laurent(&self, node: &[usize]) -> ULaurent {
        self.layout.laurent(self.raw(node), &self.z)
    }

    /// State and expansion at an arbitrary point, by interpolation.
    pub fn at(&self, lambda: &[f64]) -> Result<(GTState, ULaurent)> {
        let x = self.lattice.interpolate(lambda, 6)?;
        Ok((self.layout.state(&x, lambda), self.layout.laurent(&x, &self.z)))
    }

    fn shifted(&self, node: &[usize], axis: usize, step: isize) -> Option<Vec<usize>> {
        let i = node[axis] as isize + step;
        if i < 0 || i >= self.lattice.shape()[axis] as isize {
            return None;
        }
        let mut n = node.to_vec();
        n[axis] = i as usize;
        Some(n)
    }

    /// Lattice offset used by [`HydroField::central`].
    pub fn fd_offset(&self) -> usize {
        (self.stride / 2).max(1)
    }

    /// Derivative of a node function along `axis`: five-point stencil at
    /// half the grid spacing where the lattice allows it, three-point
    /// otherwise.
    pub fn central<F>(&self, node: &[usize], axis: usize, f: F) -> Result<Complex64>
    where
        F: Fn(&[usize]) -> Result<Complex64>,
    {
        let o = self.fd_offset() as isize;
        let h = self.lattice.spacing();
        let at = |k: isize| -> Result<Complex64> {
            let n = self
                .shifted(node, axis, k)
                .ok_or_else(|| Error::OutOfDomain(format!("{:?} + {k} along axis {axis}", node)))?;
            f(&n)
        };
        if self.shifted(node, axis, 2 * o).is_some() && self.shifted(node, axis, -2 * o).is_some() {
            let d = -at(2 * o)? + 8.0 * at(o)? - 8.0 * at(-o)? + at(-2 * o)?;
            Ok(d / (12.0 * o as f64 * h))
        } else {
            Ok((at(1)? - at(-1)?) / (2.0 * h))
        }
    }

    /// Largest departure from real `xi`, `c` and imaginary `tau`, `v` over
    /// every lattice node.
    pub fn reality_defect(&self) -> f64 {
        let l = self.layout;
        let mut worst = 0.0_f64;
        for idx in self.lattice.indices() {
            let x = self.lattice.node(&idx);
            worst = worst.max(x[Layout::TAU].re.abs());
            for j in 0..l.n {
                worst = worst.max(x[l.xi(j)].im.abs()).max(x[l.v(j)].re.abs());
                worst = worst.max(x[l.own_xi(j)].im.abs()).max(x[l.own_v(j)].re.abs());
            }
            for m in 1..=l.order {
                worst = worst.max(x[l.coeff(m)].im.abs());
            }
        }
        worst
    }

    /// Largest `|c_M| / z_min^M` over the grid.
    pub fn tail_bound(&self, z_min: f64) -> f64 {
        let m = self.layout.order;
        if m == 0 {
            return 0.0;
        }
        self.grid_indices()
            .iter()
            .map(|g| self.raw(g)[self.layout.coeff(m)].norm() / z_min.powi(m as i32))
            .fold(0.0, f64::max)
    }

    /// One JSON object per grid node.
    pub fn to_json(&self) -> serde_json::Value {
        let nodes: Vec<serde_json::Value> = self
            .grid_indices()
            .iter()
            .map(|g| {
                let s = self.state(g);
                let u = self.laurent(g);
                serde_json::json!({
                    "index": self.grid_position(g),
                    "lambda": s.lambda,
                    "tau": s.tau.im,
                    "xi": s.xi,
                    "v": s.v.iter().map(|v| v.im).collect::<Vec<_>>(),
                    "own_xi": s.own_xi,
                    "own_v": s.own_v.iter().map(|v| v.im).collect::<Vec<_>>(),
                    "coeffs": u.coeffs,
                    "samples": u.samples.iter().map(|(z, w)| [z.re, z.im, w.re, w.im]).collect::<Vec<_>>(),
                })
            })
            .collect();
        serde_json::json!({ "N": self.n(), "spacing": self.spacing, "nodes": nodes })
    }

    /// Flattened per-node scalars, one row per grid node.
    pub fn to_csv(&self) -> String {
        let n = self.n();
        let mut head: Vec<String> = (1..=n).map(|k| format!("lambda{k}")).collect();
        head.push("tau_im".into());
        head.extend((1..=n).map(|k| format!("xi{k}")));
        head.extend((1..=n).map(|k| format!("v{k}_im")));
        head.extend((1..=self.layout.order).map(|m| format!("c{m}")));
        for s in 1..=self.z.len() {
            head.push(format!("u{s}_re"));
            head.push(format!("u{s}_im"));
        }
        let mut out = head.join(",");
        out.push('\n');
        for g in self.grid_indices() {
            let s = self.state(&g);
            let u = self.laurent(&g);
            let mut row: Vec<String> = s.lambda.iter().map(|x| format!("{x:.6}")).collect();
            row.push(format!("{:.17e}", s.tau.im));
            row.extend(s.xi.iter().map(|x| format!("{x:.17e}")));
            row.extend(s.v.iter().map(|x| format!("{:.17e}", x.im)));
            row.extend(u.coeffs.iter().map(|x| format!("{x:.17e}")));
            for (_, w) in &u.samples {
                row.push(format!("{:.17e}", w.re));
                row.push(format!("{:.17e}", w.im));
            }
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Integrate a scenario over its grid. `priority` fixes the staircase order
/// (the first listed direction is stepped last along each path).
pub fn integrate_field(sc: &Scenario, priority: &[usize]) -> Result<HydroField> {
    sc.validate()?;
    let s0 = sc.initial_state();
    s0.check_separation()?;
    let u0 = sc.initial_laurent()?;
    let stride = (sc.grid.spacing / (2.0 * sc.step)).round() as usize;
    let half = sc.grid.extent / 2;
    let extent = vec![sc.grid.extent; sc.n];
    let shape = vec![(sc.grid.extent - 1) * stride + 1; sc.n];
    let base = vec![half * stride; sc.n];
    integrate_lattice(sc, &s0, &u0, &shape, &base, priority, stride, extent)
}

#[allow(clippy::too_many_arguments)]
fn integrate_lattice(
    sc: &Scenario,
    s0: &GTState,
    u0: &ULaurent,
    shape: &[usize],
    base: &[usize],
    priority: &[usize],
    stride: usize,
    extent: Vec<usize>,
) -> Result<HydroField> {
    let layout = Layout {
        n: sc.n,
        order: u0.coeffs.len(),
        samples: u0.samples.len(),
    };
    let sys = GTSystem {
        layout,
        driving: sc.driving.clone(),
    };
    let x0 = layout.pack(s0, u0);
    let lattice = solve_richardson(&sys, shape, base, 2.0 * sc.step, priority, &x0)?;
    Ok(HydroField {
        layout,
        lattice,
        z: u0.samples.iter().map(|&(z, _)| z).collect(),
        stride,
        extent,
        spacing: 2.0 * sc.step * stride as f64,
    })
}

/// Integrate along an axis-aligned staircase starting at the base point.
/// Each axis may appear once; targets must be multiples of `2 * step`. The
/// returned field covers the box spanned by the path, one grid node per
/// lattice node.
pub fn integrate_staircase(
    initial: &GTState,
    u0: &ULaurent,
    path: &[(usize, f64)],
    spec: &DrivingSpec,
    step: f64,
) -> Result<HydroField> {
    let n = initial.n();
    let h = 2.0 * step;
    let mut shape = vec![1; n];
    let mut base = vec![0; n];
    let mut seen = Vec::new();
    for &(axis, target) in path {
        if axis >= n || seen.contains(&axis) {
            return Err(Error::Config(format!("staircase axis {axis} repeated or out of range")));
        }
        seen.push(axis);
        let k = target / h;
        if (k - k.round()).abs() > 1e-9 {
            return Err(Error::Config(format!("target {target} is not a multiple of {h}")));
        }
        let k = k.round() as isize;
        shape[axis] = k.unsigned_abs() + 1;
        base[axis] = if k < 0 { k.unsigned_abs() } else { 0 };
    }
    // the last segment is walked last, so it comes first in the priority
    let priority: Vec<usize> = seen.iter().rev().copied().collect();
    let sc = Scenario {
        name: None,
        n,
        tau0: initial.tau.im,
        xi0: initial.xi.clone(),
        v0: initial.v.iter().map(|v| v.im).collect(),
        driving: spec.clone(),
        u0_coeffs: u0.coeffs.clone(),
        z_samples: u0.samples.iter().map(|(z, _)| [z.re, z.im]).collect(),
        grid: GridSpec { spacing: h, extent: 1 },
        step,
        series_order: u0.coeffs.len(),
    };
    initial.check_separation()?;
    let extent = shape.clone();
    integrate_lattice(&sc, initial, u0, &shape.clone(), &base, &priority, 1, extent)
}

/// Cross-derivative data entering the compatibility function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossData {
    /// `d xi_k / d l_j`
    pub dxik_dj: Complex64,
    /// `d xi_j / d l_k`
    pub dxij_dk: Complex64,
    /// `d^2 tau / d l_j d l_k`
    pub d2tau: Complex64,
}

impl CrossData {
    /// The values prescribed by the Gibbons-Tsarev equations.
    pub fn from_gt(s: &GTState, j: usize, k: usize) -> Result<Self> {
        let dj = gt_direction_derivative(s, j)?;
        let dk = gt_direction_derivative(s, k)?;
        Ok(CrossData {
            dxik_dj: dj.xi[k],
            dxij_dk: dk.xi[j],
            d2tau: dj.v[k],
        })
    }
}

/// `F_jk(u) = d_j d_k u - d_k d_j u` written through its coefficient functions.
pub fn f_jk_evaluate(s: &GTState, cross: &CrossData, u: Complex64, j: usize, k: usize) -> Result<Complex64> {
    let half = s.modular()?.half();
    let jet = |x: Complex64| zeta_jet(ThetaIndex::One, x, &half);
    let xj = Complex64::new(s.xi[j], 0.0);
    let xk = Complex64::new(s.xi[k], 0.0);
    // a: at u + xi, b: at xi
    let (ak, bk, aj, bj) = (jet(u + xk)?, jet(xk)?, jet(u + xj)?, jet(xj)?);
    let c = four_pi_i().inv();
    let f1_jk = c * (ak.wp - bk.wp);
    let f1_kj = c * (aj.wp - bj.wp);
    let f2 = c * (-ak.zeta + bk.zeta + aj.zeta - bj.zeta);
    let g = 0.5 * c * c * (ak.wp1 - aj.wp1 - bk.wp1 + bj.wp1) + c * c * (ak.zeta - aj.zeta + bj.zeta) * ak.wp
        - c * c * (aj.zeta - ak.zeta + bk.zeta) * aj.wp
        + c * c * (-bk.zeta * bk.wp + bj.zeta * bj.wp);
    let (vj, vk) = (s.v[j], s.v[k]);
    Ok(f1_jk * cross.dxik_dj * vk - f1_kj * cross.dxij_dk * vj + f2 * cross.d2tau + g * vj * vk)
}

/// `S(w)` at `node`, with `w` read from the node's expansion, on the sheet
/// nearest `reference`.
pub fn s_on_sheet<W>(field: &HydroField, node: &[usize], w: W, reference: Complex64) -> Result<Complex64>
where
    W: Fn(&ULaurent) -> Complex64,
{
    let m = field.state(node).modular()?;
    let v = s_fn(w(&field.laurent(node)), &m, None)?.value;
    let k = ((reference.im - v.im) / (2.0 * PI)).round();
    Ok(v + Complex64::new(0.0, 2.0 * PI * k))
}

/// Grid finite differences of `S(u(z1) - u(z2))` and `S(u(z1))` against
/// their closed-form `lambda_j` derivatives.
pub fn check_f201(field: &HydroField, z1: Complex64, z2: Complex64, tol: f64) -> ResidualReport {
    let tau = centre_tau(field);
    if (z1 - z2).norm() < 1e-14 {
        // u(z1) - u(z2) vanishes identically; nothing to compare
        return ResidualReport::from_residuals("f201", tau, &[], tol);
    }
    let run = || -> Result<Vec<f64>> {
        let mut res = Vec::new();
        let pair = |c: &ULaurent| c.at(z1) - c.at(z2);
        let single = |c: &ULaurent| c.at(z1);
        for g in field.interior(1) {
            let s = field.state(&g);
            let m = s.modular()?;
            let u = field.laurent(&g);
            let (u1, u2) = (u.at(z1), u.at(z2));
            let ref_pair = s_fn(u1 - u2, &m, None)?.value;
            let ref_single = s_fn(u1, &m, None)?.value;
            for j in 0..field.n() {
                let xj = Complex64::new(s.xi[j], 0.0);
                let fd = field.central(&g, j, |h| s_on_sheet(field, h, pair, ref_pair))?;
                let closed = s_fn(u1 + xj, &m, None)?.d1 * s_fn(u2 + xj, &m, None)?.d1 * s.v[j] / four_pi_i();
                res.push((fd - closed).norm() / closed.norm().max(1.0));
                let fd = field.central(&g, j, |h| s_on_sheet(field, h, single, ref_single))?;
                let closed = s_fn(xj, &m, None)?.d1 * s_fn(u1 + xj, &m, None)?.d1 * s.v[j] / four_pi_i();
                res.push((fd - closed).norm() / closed.norm().max(1.0));
            }
        }
        Ok(res)
    };
    match run() {
        Ok(r) => ResidualReport::from_residuals("f201", tau, &r, tol),
        Err(e) => ResidualReport::failed("f201", tau, tol, e),
    }
}

fn centre_tau(field: &HydroField) -> f64 {
    field.state(&field.centre()).tau.im
}

/// Grid finite differences of `xi_k` along `lambda_j` and of the mixed
/// `tau`-derivative (as `d_j v_k` and as `d_k v_j`) against the closed forms.
pub fn check_gt_cross(field: &HydroField, tol: f64) -> ResidualReport {
    let tau = centre_tau(field);
    let l = field.layout();
    let run = || -> Result<Vec<f64>> {
        let mut res = Vec::new();
        for g in field.interior(1) {
            let s = field.state(&g);
            for j in 0..field.n() {
                let dj = gt_direction_derivative(&s, j)?;
                for k in 0..field.n() {
                    if k == j {
                        continue;
                    }
                    let fd = field.central(&g, j, |h| Ok(field.raw(h)[l.xi(k)]))?;
                    res.push((fd - dj.xi[k]).norm());
                    let fd = field.central(&g, j, |h| Ok(field.raw(h)[l.v(k)]))?;
                    res.push((fd - dj.v[k]).norm());
                    let fd = field.central(&g, k, |h| Ok(field.raw(h)[l.v(j)]))?;
                    res.push((fd - dj.v[k]).norm());
                }
            }
        }
        Ok(res)
    };
    match run() {
        Ok(r) => ResidualReport::from_residuals("gt", tau, &r, tol),
        Err(e) => ResidualReport::failed("gt", tau, tol, e),
    }
}

fn fjk_report<F>(field: &HydroField, name: &str, samples: usize, seed: u64, tol: f64, cross: F) -> ResidualReport
where
    F: Fn(&[usize], &GTState, usize, usize) -> Result<CrossData>,
{
    let tau = centre_tau(field);
    let run = || -> Result<Vec<f64>> {
        let mut res = Vec::new();
        let mut rng = Sampler::new(seed);
        for g in field.interior(1) {
            let s = field.state(&g);
            let m = s.modular()?;
            for j in 0..field.n() {
                for k in j + 1..field.n() {
                    let cd = cross(&g, &s, j, k)?;
                    let (xj, xk) = (s.xi[j], s.xi[k]);
                    let pts = rng.admissible(&m, 1, samples, |p| vec![p[0], p[0] + xj, p[0] + xk]);
                    for p in pts {
                        res.push(f_jk_evaluate(&s, &cd, p[0], j, k)?.norm());
                    }
                }
            }
        }
        Ok(res)
    };
    match run() {
        Ok(r) => ResidualReport::from_residuals(name, tau, &r, tol),
        Err(e) => ResidualReport::failed(name, tau, tol, e),
    }
}

/// `F_jk` at random `u` on every interior node with closed-form cross-data.
pub fn check_fjk(field: &HydroField, samples: usize, seed: u64, tol: f64) -> ResidualReport {
    fjk_report(field, "fjk", samples, seed, tol, |_, s, j, k| {
        CrossData::from_gt(s, j, k)
    })
}

/// `F_jk` with cross-data taken from grid finite differences.
pub fn check_fjk_fd(field: &HydroField, samples: usize, seed: u64, tol: f64) -> ResidualReport {
    let l = field.layout();
    fjk_report(field, "fjk_fd", samples, seed, tol, |g, _, j, k| {
        Ok(CrossData {
            dxik_dj: field.central(g, j, |h| Ok(field.raw(h)[l.xi(k)]))?,
            dxij_dk: field.central(g, k, |h| Ok(field.raw(h)[l.xi(j)]))?,
            d2tau: field.central(g, j, |h| Ok(field.raw(h)[l.v(k)]))?,
        })
    })
}
