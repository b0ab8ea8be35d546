//! Seeded random sampling in the fundamental rectangle with pole exclusion.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::elliptic::lattice_distance;
use crate::theta::ModularParam;

/// Samples closer than this to a half-period of either modulus are redrawn.
pub const EXCLUSION_RADIUS: f64 = 0.05;

pub struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Sampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.gen_range(lo..hi)
    }

    /// Uniform point of `[0, 1) x [0, Im tau)`.
    pub fn point(&mut self, m: &ModularParam) -> Complex64 {
        Complex64::new(self.rng.gen_range(0.0..1.0), self.rng.gen_range(0.0..m.im_tau()))
    }

    /// `count` tuples of `arity` points whose derived arguments all stay
    /// clear of singular points. Gives up after `100 * count` draws.
    pub fn admissible<F>(&mut self, m: &ModularParam, arity: usize, count: usize, args: F) -> Vec<Vec<Complex64>>
    where
        F: Fn(&[Complex64]) -> Vec<Complex64>,
    {
        let mut out = Vec::with_capacity(count);
        let mut draws = 0;
        while out.len() < count && draws < 100 * count.max(1) {
            draws += 1;
            let p: Vec<Complex64> = (0..arity).map(|_| self.point(m)).collect();
            if args(&p).iter().all(|&x| !near_singular(x, m, EXCLUSION_RADIUS)) {
                out.push(p);
            }
        }
        out
    }
}

/// `true` within `radius` of the lattice `Z/2 + (tau/4) Z`, which holds every
/// zero of every theta function at both `tau` and `tau/2`.
pub fn near_singular(x: Complex64, m: &ModularParam, radius: f64) -> bool {
    lattice_distance(x, 0.5, m.im_tau() / 4.0) < radius
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_points() {
        let m = ModularParam::from_imag(1.0).unwrap();
        let a: Vec<_> = (0..5)
            .map({
                let mut s = Sampler::new(7);
                move |_| s.point(&m)
            })
            .collect();
        let mut s = Sampler::new(7);
        for p in a {
            assert_eq!(p, s.point(&m));
        }
    }

    #[test]
    fn admissible_points_avoid_half_periods() {
        let m = ModularParam::from_imag(0.8).unwrap();
        let pts = Sampler::new(1).admissible(&m, 2, 200, |p| vec![p[0], p[0] - p[1]]);
        assert_eq!(pts.len(), 200);
        for p in pts {
            assert!(!near_singular(p[0], &m, EXCLUSION_RADIUS));
            assert!(!near_singular(p[0] - p[1], &m, EXCLUSION_RADIUS));
        }
    }
}
