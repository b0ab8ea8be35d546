use serde::{Deserialize, Serialize};

/// Outcome of checking one identity or equation over a sample set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub identity_name: String,
    /// Imaginary part of the modular parameter the check ran at.
    pub tau: f64,
    pub samples: usize,
    pub max_residual: f64,
    pub rms_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl ResidualReport {
    pub fn from_residuals(name: impl Into<String>, tau: f64, residuals: &[f64], tolerance: f64) -> Self {
        let n = residuals.len();
        let max = residuals
            .iter()
            .fold(0.0_f64, |m, &r| if r.is_nan() { f64::NAN } else { m.max(r) });
        let rms = if n == 0 {
            0.0
        } else {
            (residuals.iter().map(|r| r * r).sum::<f64>() / n as f64).sqrt()
        };
        let mut r = ResidualReport {
            identity_name: name.into(),
            tau,
            samples: n,
            max_residual: max,
            rms_residual: rms,
            tolerance,
            pass: false,
            error: None,
        };
        r.judge();
        r
    }

    /// A check that could not be evaluated at all.
    pub fn failed(name: impl Into<String>, tau: f64, tolerance: f64, error: impl ToString) -> Self {
        ResidualReport {
            identity_name: name.into(),
            tau,
            samples: 0,
            max_residual: f64::NAN,
            rms_residual: f64::NAN,
            tolerance,
            pass: false,
            error: Some(error.to_string()),
        }
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self.judge();
        self
    }

    fn judge(&mut self) {
        self.pass = self.error.is_none() && self.max_residual.is_finite() && self.max_residual < self.tolerance;
    }
}

/// Residual of a sum that should vanish, scaled by the size of its terms so
/// that cancellation between large terms is judged relative to them.
pub fn balance(terms: &[num_complex::Complex64]) -> f64 {
    let sum: num_complex::Complex64 = terms.iter().sum();
    let scale: f64 = terms.iter().map(|t| t.norm()).sum();
    sum.norm() / scale.max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn summary_statistics() {
        let r = ResidualReport::from_residuals("x", 1.0, &[3e-12, 4e-12], 1e-10);
        assert_eq!(r.samples, 2);
        assert_eq!(r.max_residual, 4e-12);
        assert!((r.rms_residual - (12.5e-24f64).sqrt()).abs() < 1e-20);
        assert!(r.pass);
        assert!(!r.clone().with_tolerance(1e-12).pass);
    }

    #[test]
    fn nan_never_passes() {
        let r = ResidualReport::from_residuals("x", 1.0, &[1e-14, f64::NAN], 1e-10);
        assert!(!r.pass);
    }

    #[test]
    fn empty_sample_set_is_vacuous() {
        let r = ResidualReport::from_residuals("x", 1.0, &[], 1e-10);
        assert!(r.pass && r.samples == 0);
    }

    #[test]
    fn json_field_names() {
        let r = ResidualReport::from_residuals("n12", 1.0, &[1e-13], 1e-10);
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        for key in [
            "identity_name",
            "tau",
            "samples",
            "max_residual",
            "rms_residual",
            "tolerance",
            "pass",
        ] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert!(v.get("error").is_none());
    }

    #[test]
    fn balance_is_relative_for_large_terms() {
        let t = [Complex64::new(1e6, 0.0), Complex64::new(-1e6 + 1e-4, 0.0)];
        assert!((balance(&t) - 5e-11).abs() < 1e-15);
    }
}
