//! Lattice integrator for first-order systems whose unknowns are known
//! through their derivatives in several directions at once.
//!
//! Two kinds of component occur. A *shared* component (like `tau` or `xi_j`)
//! has a formula for its derivative in every direction and is fixed by its
//! value at the base node. An *axis* component attached to direction `k`
//! (like `d xi_k / d lambda_k`) has formulas only for the other directions;
//! its values along the `k`-axis through the base are prescribed data.
//!
//! Nodes are processed in order of distance from the base. Each component of
//! a node is reached from a neighbour one step closer to the base, picking
//! the first direction in the caller's priority list that is available
//! (never the own direction of an axis component), and the step is the
//! implicit trapezoid rule solved by fixed-point iteration. Changing the
//! priority changes the staircase paths, which is how path independence is
//! probed. Solving at `h` and `h/2` and combining the results removes the
//! leading `h^2` error term.

use std::collections::HashMap;

use num_complex::Complex64;

use crate::error::{Error, Result};

const MAX_ITER: usize = 12;

pub trait LatticeSystem {
    /// Number of lattice directions.
    fn dim(&self) -> usize;

    fn components(&self) -> usize;

    /// `Some(k)` for a component prescribed along the `k`-axis.
    fn own_axis(&self, comp: usize) -> Option<usize>;

    /// Prescribed value of an axis component at coordinate `lambda_k`.
    fn axis_value(&self, comp: usize, lambda_k: f64) -> Complex64;

    /// Derivative of every component in direction `d` at `lambda`. Entries of
    /// axis components attached to `d` are ignored.
    fn derivative(&self, d: usize, lambda: &[f64], state: &[Complex64], out: &mut [Complex64]) -> Result<()>;
}

/// Component values on a rectangular lattice with uniform spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeField {
    shape: Vec<usize>,
    base: Vec<usize>,
    h: f64,
    ncomp: usize,
    data: Vec<Complex64>,
}

impl LatticeField {
    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn base(&self) -> &[usize] {
        &self.base
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn components(&self) -> usize {
        self.ncomp
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn flat(&self, idx: &[usize]) -> usize {
        flat_index(&self.shape, idx)
    }

    pub fn node(&self, idx: &[usize]) -> &[Complex64] {
        let f = self.flat(idx);
        &self.data[f * self.ncomp..(f + 1) * self.ncomp]
    }

    /// Lambda coordinates of a node; the base sits at the origin.
    pub fn lambda(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter()
            .zip(&self.base)
            .map(|(&i, &b)| (i as f64 - b as f64) * self.h)
            .collect()
    }

    /// Tensor-product Lagrange interpolation through `points` nodes per axis.
    pub fn interpolate(&self, lambda: &[f64], points: usize) -> Result<Vec<Complex64>> {
        let n = self.dim();
        let mut starts = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for k in 0..n {
            let pos = lambda[k] / self.h + self.base[k] as f64;
            let last = (self.shape[k] - 1) as f64;
            if !(pos >= -1e-9 && pos <= last + 1e-9) {
                return Err(Error::OutOfDomain(format!("{lambda:?}")));
            }
            let p = points.min(self.shape[k]);
            let start = ((pos.floor() as isize) - (p as isize - 1) / 2).clamp(0, (self.shape[k] - p) as isize) as usize;
            let w: Vec<f64> = (0..p)
                .map(|a| {
                    let xa = (start + a) as f64;
                    (0..p)
                        .filter(|&b| b != a)
                        .map(|b| {
                            let xb = (start + b) as f64;
                            (pos - xb) / (xa - xb)
                        })
                        .product()
                })
                .collect();
            starts.push(start);
            weights.push(w);
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.ncomp];
        let counts: Vec<usize> = weights.iter().map(|w| w.len()).collect();
        let mut offs = vec![0usize; n];
        let mut idx = vec![0usize; n];
        loop {
            let mut w = 1.0;
            for k in 0..n {
                idx[k] = starts[k] + offs[k];
                w *= weights[k][offs[k]];
            }
            for (o, v) in out.iter_mut().zip(self.node(&idx)) {
                *o += w * v;
            }
            if !advance(&mut offs, &counts) {
                break;
            }
        }
        Ok(out)
    }

    /// All node multi-indices in row-major order.
    pub fn indices(&self) -> Vec<Vec<usize>> {
        all_indices(&self.shape)
    }
}

fn flat_index(shape: &[usize], idx: &[usize]) -> usize {
    idx.iter().zip(shape).fold(0, |acc, (&i, &s)| acc * s + i)
}

fn advance(idx: &mut [usize], shape: &[usize]) -> bool {
    for k in (0..idx.len()).rev() {
        idx[k] += 1;
        if idx[k] < shape[k] {
            return true;
        }
        idx[k] = 0;
    }
    false
}

pub(crate) fn all_indices(shape: &[usize]) -> Vec<Vec<usize>> {
    if shape.contains(&0) {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(shape.iter().product());
    let mut idx = vec![0; shape.len()];
    loop {
        out.push(idx.clone());
        if !advance(&mut idx, shape) {
            break;
        }
    }
    out
}

/// Solve on a single lattice of spacing `h`.
pub fn solve<S: LatticeSystem + ?Sized>(
    sys: &S,
    shape: &[usize],
    base: &[usize],
    h: f64,
    priority: &[usize],
    initial: &[Complex64],
) -> Result<LatticeField> {
    let n = sys.dim();
    let ncomp = sys.components();
    if shape.len() != n || base.len() != n || initial.len() != ncomp {
        return Err(Error::Config("lattice shape does not match the system".into()));
    }
    if base.iter().zip(shape).any(|(&b, &s)| b >= s) {
        return Err(Error::Config("base node outside the lattice".into()));
    }
    let mut order = priority.to_vec();
    for d in 0..n {
        if !order.contains(&d) {
            order.push(d);
        }
    }

    let mut field = LatticeField {
        shape: shape.to_vec(),
        base: base.to_vec(),
        h,
        ncomp,
        data: vec![Complex64::new(0.0, 0.0); shape.iter().product::<usize>() * ncomp],
    };

    let mut nodes = all_indices(shape);
    let dist = |idx: &[usize]| idx.iter().zip(base).map(|(&i, &b)| i.abs_diff(b)).sum::<usize>();
    nodes.sort_by_key(|idx| dist(idx));

    // derivatives at the previous and current distance level, keyed by (flat node, direction)
    let mut prev_level: HashMap<(usize, usize), Vec<Complex64>> = HashMap::new();
    let mut cur_level: HashMap<(usize, usize), Vec<Complex64>> = HashMap::new();
    let mut level = 0;

    let mut scratch = vec![Complex64::new(0.0, 0.0); ncomp];
    let mut source_dir = vec![usize::MAX; ncomp];
    for idx in nodes {
        let here = dist(&idx);
        if here != level {
            prev_level = std::mem::take(&mut cur_level);
            level = here;
        }
        let lam = field.lambda(&idx);
        let f = field.flat(&idx);
        if here == 0 {
            field.data[f * ncomp..(f + 1) * ncomp].copy_from_slice(initial);
            continue;
        }

        // pick the direction each component is reached from
        for c in 0..ncomp {
            let own = sys.own_axis(c);
            source_dir[c] = order
                .iter()
                .copied()
                .find(|&d| Some(d) != own && idx[d] != base[d])
                .unwrap_or(usize::MAX);
        }
        let mut dirs: Vec<usize> = source_dir.iter().copied().filter(|&d| d != usize::MAX).collect();
        dirs.sort_unstable();
        dirs.dedup();

        // start values and derivatives at the predecessors
        let mut start = vec![Complex64::new(0.0, 0.0); ncomp];
        let mut step = vec![0.0; ncomp];
        let mut prev_deriv: HashMap<usize, Vec<Complex64>> = HashMap::new();
        for &d in &dirs {
            let mut p = idx.clone();
            let sign = if idx[d] > base[d] { 1.0 } else { -1.0 };
            p[d] = if sign > 0.0 { idx[d] - 1 } else { idx[d] + 1 };
            let pf = field.flat(&p);
            let der = match prev_level.get(&(pf, d)) {
                Some(v) => v.clone(),
                None => {
                    let plam = field.lambda(&p);
                    sys.derivative(d, &plam, &field.data[pf * ncomp..(pf + 1) * ncomp], &mut scratch)?;
                    prev_level.insert((pf, d), scratch.clone());
                    scratch.clone()
                }
            };
            for c in 0..ncomp {
                if source_dir[c] == d {
                    start[c] = field.data[pf * ncomp + c];
                    step[c] = sign * h;
                }
            }
            prev_deriv.insert(d, der);
        }

        let mut x = vec![Complex64::new(0.0, 0.0); ncomp];
        for c in 0..ncomp {
            let d = source_dir[c];
            x[c] = if d == usize::MAX {
                sys.axis_value(c, lam[sys.own_axis(c).expect("only axis components lack a source")])
            } else {
                start[c] + step[c] * prev_deriv[&d][c]
            };
        }

        let mut here_deriv: HashMap<usize, Vec<Complex64>> = HashMap::new();
        for _ in 0..MAX_ITER {
            for &d in &dirs {
                sys.derivative(d, &lam, &x, &mut scratch)?;
                here_deriv.insert(d, scratch.clone());
            }
            let mut change = 0.0_f64;
            let mut size = 0.0_f64;
            for c in 0..ncomp {
                let d = source_dir[c];
                if d == usize::MAX {
                    continue;
                }
                let new = start[c] + 0.5 * step[c] * (prev_deriv[&d][c] + here_deriv[&d][c]);
                change = change.max((new - x[c]).norm());
                size = size.max(new.norm());
                x[c] = new;
            }
            if change <= 1e-15 * (1.0 + size) {
                break;
            }
        }
        field.data[f * ncomp..(f + 1) * ncomp].copy_from_slice(&x);
        for (d, v) in here_deriv {
            cur_level.insert((f, d), v);
        }
    }
    Ok(field)
}

/// Solve at spacing `h` and `h/2` and return the extrapolated values on the
/// `h` lattice.
pub fn solve_richardson<S: LatticeSystem + ?Sized>(
    sys: &S,
    shape: &[usize],
    base: &[usize],
    h: f64,
    priority: &[usize],
    initial: &[Complex64],
) -> Result<LatticeField> {
    let mut coarse = solve(sys, shape, base, h, priority, initial)?;
    let fine_shape: Vec<usize> = shape.iter().map(|&s| 2 * s - 1).collect();
    let fine_base: Vec<usize> = base.iter().map(|&b| 2 * b).collect();
    let fine = solve(sys, &fine_shape, &fine_base, h / 2.0, priority, initial)?;
    let ncomp = coarse.ncomp;
    for idx in coarse.indices() {
        let cf = coarse.flat(&idx);
        let fidx: Vec<usize> = idx.iter().map(|&i| 2 * i).collect();
        let ff = fine.flat(&fidx);
        for c in 0..ncomp {
            let a = fine.data[ff * ncomp + c];
            let b = coarse.data[cf * ncomp + c];
            coarse.data[cf * ncomp + c] = (4.0 * a - b) / 3.0;
        }
    }
    Ok(coarse)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `f(x, y) = exp(a x + b y)` as a shared component, plus its own
    /// x-derivative `g = a f` prescribed along the x-axis as an axis
    /// component, evolving in `y` by `g_y = b g`.
    struct Exp {
        a: f64,
        b: f64,
    }

    impl LatticeSystem for Exp {
        fn dim(&self) -> usize {
            2
        }
        fn components(&self) -> usize {
            2
        }
        fn own_axis(&self, comp: usize) -> Option<usize> {
            (comp == 1).then_some(0)
        }
        fn axis_value(&self, _comp: usize, x: f64) -> Complex64 {
            Complex64::new(self.a * (self.a * x).exp(), 0.0)
        }
        fn derivative(&self, d: usize, _l: &[f64], s: &[Complex64], out: &mut [Complex64]) -> Result<()> {
            if d == 0 {
                out[0] = s[1];
                out[1] = Complex64::new(0.0, 0.0);
            } else {
                out[0] = self.b * s[0];
                out[1] = self.b * s[1];
            }
            Ok(())
        }
    }

    fn exact(sys: &Exp, l: &[f64]) -> f64 {
        (sys.a * l[0] + sys.b * l[1]).exp()
    }

    fn max_error(field: &LatticeField, sys: &Exp) -> f64 {
        field
            .indices()
            .iter()
            .map(|i| (field.node(i)[0].re - exact(sys, &field.lambda(i))).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn trapezoid_is_second_order_and_extrapolation_fourth() {
        let sys = Exp { a: 0.7, b: -1.3 };
        let init = [Complex64::new(1.0, 0.0), Complex64::new(0.7, 0.0)];
        let e1 = max_error(&solve(&sys, &[9, 9], &[4, 4], 0.1, &[0, 1], &init).unwrap(), &sys);
        let e2 = max_error(&solve(&sys, &[17, 17], &[8, 8], 0.05, &[0, 1], &init).unwrap(), &sys);
        let ratio = e1 / e2;
        assert!((3.8..4.2).contains(&ratio), "{ratio}");
        let r1 = max_error(
            &solve_richardson(&sys, &[9, 9], &[4, 4], 0.1, &[0, 1], &init).unwrap(),
            &sys,
        );
        let r2 = max_error(
            &solve_richardson(&sys, &[17, 17], &[8, 8], 0.05, &[0, 1], &init).unwrap(),
            &sys,
        );
        assert!(r1 / r2 > 12.0, "{}", r1 / r2);
        assert!(r1 < e1 / 50.0);
    }

    #[test]
    fn priority_order_only_moves_discretisation_error() {
        let sys = Exp { a: 0.4, b: 0.9 };
        let init = [Complex64::new(1.0, 0.0), Complex64::new(0.4, 0.0)];
        let p = solve_richardson(&sys, &[5, 5], &[0, 0], 0.05, &[0, 1], &init).unwrap();
        let q = solve_richardson(&sys, &[5, 5], &[0, 0], 0.05, &[1, 0], &init).unwrap();
        let d = (p.node(&[4, 4])[0] - q.node(&[4, 4])[0]).norm();
        assert!(d < 1e-7, "{d}");
    }

    #[test]
    fn single_node_lattice_is_the_initial_state() {
        let sys = Exp { a: 1.0, b: 1.0 };
        let init = [Complex64::new(2.0, 0.0), Complex64::new(1.0, 0.0)];
        let f = solve(&sys, &[1, 1], &[0, 0], 0.1, &[0, 1], &init).unwrap();
        assert_eq!(f.node(&[0, 0]), &init);
    }

    #[test]
    fn interpolation_is_exact_for_low_degree() {
        let sys = Exp { a: 0.5, b: 0.5 };
        let init = [Complex64::new(1.0, 0.0), Complex64::new(0.5, 0.0)];
        let mut f = solve(&sys, &[8, 8], &[3, 3], 0.1, &[0, 1], &init).unwrap();
        for idx in f.indices() {
            let l = f.lambda(&idx);
            let fl = f.flat(&idx);
            f.data[fl * 2] = Complex64::new(l[0].powi(3) - 2.0 * l[0] * l[1] * l[1] + 0.3, 0.0);
        }
        let v = f.interpolate(&[0.123, -0.271], 6).unwrap()[0].re;
        let e = 0.123f64.powi(3) - 2.0 * 0.123 * 0.271 * 0.271 + 0.3;
        assert!((v - e).abs() < 1e-13);
        assert!(f.interpolate(&[5.0, 0.0], 6).is_err());
    }
}
