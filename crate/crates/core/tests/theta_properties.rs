use std::f64::consts::PI;

use dkp_elliptic::elliptic::{s_prime, wp_a, zeta_a};
use dkp_elliptic::theta::{theta, theta1_infinite_product, theta_du};
use dkp_elliptic::{Complex64, ModularParam, ThetaIndex};
use proptest::prelude::*;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
    (a - b).norm() <= tol * b.norm().max(1.0)
}

fn point() -> impl Strategy<Value = (f64, Complex64)> {
    (0.5f64..2.0, -0.5f64..0.5, -0.3f64..0.3).prop_map(|(t, x, y)| (t, Complex64::new(x, y * t)))
}

proptest! {
    #[test]
    fn parity((t, u) in point()) {
        let m = ModularParam::from_imag(t).unwrap();
        prop_assert!(close(theta(ThetaIndex::One, -u, &m), -theta(ThetaIndex::One, u, &m), 1e-13));
        for a in [ThetaIndex::Two, ThetaIndex::Three, ThetaIndex::Four] {
            prop_assert!(close(theta(a, -u, &m), theta(a, u, &m), 1e-13));
        }
    }

    #[test]
    fn real_period((t, u) in point()) {
        let m = ModularParam::from_imag(t).unwrap();
        let one = Complex64::new(1.0, 0.0);
        for (a, sign) in [(ThetaIndex::One, -1.0), (ThetaIndex::Two, -1.0), (ThetaIndex::Three, 1.0), (ThetaIndex::Four, 1.0)] {
            prop_assert!(close(theta(a, u + one, &m), sign * theta(a, u, &m), 1e-12));
        }
    }

    #[test]
    fn quasi_period((t, u) in point()) {
        let m = ModularParam::from_imag(t).unwrap();
        let tau = m.tau();
        let factor = (-I * PI * tau - 2.0 * PI * I * u).exp();
        for (a, sign) in [(ThetaIndex::One, -1.0), (ThetaIndex::Two, 1.0), (ThetaIndex::Three, 1.0), (ThetaIndex::Four, -1.0)] {
            let lhs = theta(a, u + tau, &m);
            let rhs = sign * factor * theta(a, u, &m);
            prop_assert!((lhs - rhs).norm() <= 1e-11 * rhs.norm().max(1e-3), "{a:?}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn product_matches_series((t, u) in point()) {
        let m = ModularParam::from_imag(t).unwrap();
        prop_assert!(close(theta1_infinite_product(u, &m), theta(ThetaIndex::One, u, &m), 1e-12));
    }

    #[test]
    fn wp_is_doubly_periodic((t, u) in point()) {
        let m = ModularParam::from_imag(t).unwrap();
        let u = u + Complex64::new(0.05, 0.0);
        prop_assume!(u.norm() > 0.1);
        let base = wp_a(ThetaIndex::One, u, &m).unwrap();
        let shifted = wp_a(ThetaIndex::One, u + m.tau(), &m).unwrap();
        prop_assert!(close(shifted, base, 1e-9));
        let z1 = zeta_a(ThetaIndex::One, u + Complex64::new(1.0, 0.0), &m).unwrap();
        prop_assert!(close(z1, zeta_a(ThetaIndex::One, u, &m).unwrap(), 1e-11));
    }

    #[test]
    fn s_prime_is_odd((t, u) in point()) {
        let m = ModularParam::from_imag(t).unwrap();
        prop_assume!(u.norm() > 0.05);
        prop_assert!(close(s_prime(-u, &m).unwrap(), -s_prime(u, &m).unwrap(), 1e-12));
    }
}

#[test]
fn jacobi_derivative_identity() {
    for t in [0.6, 1.0, 1.7] {
        let m = ModularParam::from_imag(t).unwrap();
        let z = Complex64::new(0.0, 0.0);
        let lhs = theta_du(ThetaIndex::One, 1, z, &m).unwrap();
        let rhs = PI * theta(ThetaIndex::Two, z, &m) * theta(ThetaIndex::Three, z, &m) * theta(ThetaIndex::Four, z, &m);
        assert!((lhs - rhs).norm() < 1e-13, "tau = {t}i");
    }
}

#[test]
fn rejects_non_imaginary_tau() {
    assert!(ModularParam::new(Complex64::new(0.1, 1.0)).is_err());
    assert!(ModularParam::from_imag(-1.0).is_err());
}
