use dkp_elliptic::identities::identity_suite_seeded;
use dkp_elliptic::loewner::{self, integrate_field, Scenario};
use dkp_elliptic::runner::path_difference;
use dkp_elliptic::theta::theta;
use dkp_elliptic::{Complex64, ModularParam, ResidualReport, ThetaIndex};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn to_js(v: Value) -> String {
    v.to_string()
}

fn err(e: impl ToString) -> JsValue {
    JsValue::from_str(&e.to_string())
}

/// `theta_1..theta_4` at `u = re + i im` for `tau = i tau_im`, as JSON.
#[wasm_bindgen]
pub fn theta_values(tau_im: f64, re: f64, im: f64) -> Result<String, JsValue> {
    let m = ModularParam::from_imag(tau_im).map_err(err)?;
    let u = Complex64::new(re, im);
    let vals: Vec<Value> = ThetaIndex::ALL
        .iter()
        .map(|&a| {
            let t = theta(a, u, &m);
            json!({ "index": a.number(), "re": t.re, "im": t.im })
        })
        .collect();
    Ok(to_js(
        json!({ "nome": m.nome(), "terms": m.truncation_k(), "values": vals }),
    ))
}

/// The sampled identity suite at one `tau`, as a JSON array of reports.
#[wasm_bindgen]
pub fn identity_suite(tau_im: f64, samples: usize, seed: u32) -> Result<String, JsValue> {
    let m = ModularParam::from_imag(tau_im).map_err(err)?;
    let reports = identity_suite_seeded(&m, samples.clamp(1, 1000), seed as u64);
    serde_json::to_string(&reports).map_err(err)
}

/// Integrate a two-point reduction on a 5x5 grid and return the node values
/// together with the compatibility and path-independence residuals.
#[wasm_bindgen]
pub fn integrate_pair(xi1: f64, xi2: f64, v1: f64, v2: f64) -> Result<String, JsValue> {
    let mut sc = Scenario::default_n2();
    sc.name = Some("browser".into());
    sc.xi0 = vec![xi1, xi2];
    sc.v0 = vec![v1, v2];
    sc.validate().map_err(err)?;
    let f = integrate_field(&sc, &[0, 1]).map_err(err)?;
    let g = integrate_field(&sc, &[1, 0]).map_err(err)?;
    let tau = sc.tau0;
    let reports: Vec<ResidualReport> = vec![
        ResidualReport::from_residuals("path", tau, &[path_difference(&f, &g)], 1e-7),
        loewner::check_gt_cross(&f, 1e-5),
        loewner::check_fjk(&f, 50, 0, 1e-9),
        ResidualReport::from_residuals("reality", tau, &[f.reality_defect()], 1e-10),
    ];
    Ok(to_js(json!({ "field": f.to_json(), "reports": reports })))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theta_json_has_four_values() {
        let v: Value = serde_json::from_str(&theta_values(1.0, 0.1, 0.0).unwrap()).unwrap();
        assert_eq!(v["values"].as_array().unwrap().len(), 4);
        assert!(v["values"][0]["im"].as_f64().unwrap().abs() < 1e-15);
    }

    #[test]
    fn identity_reports_pass() {
        let v: Vec<ResidualReport> = serde_json::from_str(&identity_suite(1.0, 20, 1).unwrap()).unwrap();
        assert!(v.iter().all(|r| r.pass));
    }

    #[test]
    fn pair_integration_reports() {
        let v: Value = serde_json::from_str(&integrate_pair(0.2, 0.6, 0.12, 0.08).unwrap()).unwrap();
        let reports = v["reports"].as_array().unwrap();
        assert_eq!(reports.len(), 4);
        assert!(reports.iter().all(|r| r["pass"] == true));
        assert_eq!(v["field"]["nodes"].as_array().unwrap().len(), 25);
    }
}
