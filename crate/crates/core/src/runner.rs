//! Suite orchestration and report output.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hodograph::{self, TGrid, TimePoint, DEFAULT_K, DEFAULT_SLOPE, ORDER_STEP, T_STEP};
use crate::identities::identity_suite_seeded;
use crate::loewner::{self, integrate_field, HydroField, Scenario};
use crate::metric;
use crate::report::ResidualReport;
use crate::sampling::Sampler;
use crate::theta::ModularParam;

/// Suites in execution order.
pub const SUITES: [&str; 8] = [
    "identities",
    "gt",
    "gamma",
    "metric",
    "hodograph",
    "dkp",
    "conserved",
    "curve",
];

/// Imaginary parts of tau used by the identity suite when none is given.
pub const DEFAULT_TAUS: [f64; 3] = [0.8, 1.0, 1.5];

pub const IDENTITY_SAMPLES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Both,
}

impl std::str::FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "both" => Ok(Format::Both),
            other => Err(Error::Config(format!("unknown format '{other}' (json, csv, both)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub suites: Vec<String>,
    /// Per-suite tolerance overrides, applied to every report of the suite.
    pub tolerances: BTreeMap<String, f64>,
    pub output: Option<PathBuf>,
    pub format: Format,
    pub seed: u64,
    /// Imaginary part of tau for the identity suite.
    pub tau: Option<f64>,
}

impl RunConfig {
    pub fn new(scenario: Scenario, suites: Vec<String>) -> Self {
        RunConfig {
            scenario,
            suites,
            tolerances: BTreeMap::new(),
            output: None,
            format: Format::Json,
            seed: 0,
            tau: None,
        }
    }

    /// `"a,b,c"` or `"all"`.
    pub fn parse_suites(list: &str) -> Result<Vec<String>> {
        let names: Vec<String> = list
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(String::from)
            .collect();
        if names.iter().any(|s| s == "all") {
            return Ok(SUITES.iter().map(|s| s.to_string()).collect());
        }
        Ok(names)
    }

    /// `"SUITE=VALUE"`.
    pub fn parse_tolerance(arg: &str) -> Result<(String, f64)> {
        let (k, v) = arg
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("tolerance '{arg}' is not SUITE=VALUE")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("tolerance '{arg}' has no numeric value")))?;
        Ok((k.trim().to_string(), v))
    }

    pub fn validate(&self) -> Result<()> {
        if self.suites.is_empty() {
            return Err(Error::Config("no suites requested".into()));
        }
        for s in self.suites.iter().chain(self.tolerances.keys()) {
            if !SUITES.contains(&s.as_str()) {
                return Err(Error::Config(format!(
                    "unknown suite '{s}' (known: {})",
                    SUITES.join(", ")
                )));
            }
        }
        for (s, &t) in &self.tolerances {
            if !(t > 0.0) {
                return Err(Error::Config(format!("tolerance for '{s}' must be positive")));
            }
        }
        if let Some(t) = self.tau {
            if !(t > 0.0) {
                return Err(Error::Config("--tau must be positive".into()));
            }
        }
        self.scenario.validate()
    }

    fn wants(&self, suite: &str) -> bool {
        self.suites.iter().any(|s| s == suite)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteResult {
    pub suite: String,
    pub pass: bool,
    pub reports: Vec<ResidualReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub scenario: String,
    pub seed: u64,
    pub suites: Vec<SuiteResult>,
    /// Extra tables as `(file name, contents)`.
    pub artifacts: Vec<(String, String)>,
    pub warnings: Vec<String>,
}

impl RunOutcome {
    pub fn pass(&self) -> bool {
        self.suites.iter().all(|s| s.pass)
    }

    pub fn exit_code(&self) -> i32 {
        if self.pass() {
            0
        } else {
            1
        }
    }
}

fn suite(name: &str, reports: Vec<ResidualReport>, tol: Option<f64>) -> SuiteResult {
    let reports: Vec<ResidualReport> = match tol {
        Some(t) => reports.into_iter().map(|r| r.with_tolerance(t)).collect(),
        None => reports,
    };
    SuiteResult {
        suite: name.to_string(),
        pass: reports.iter().all(|r| r.pass),
        reports,
    }
}

fn failed_suite(name: &str, tau: f64, err: &Error) -> SuiteResult {
    SuiteResult {
        suite: name.to_string(),
        pass: false,
        reports: vec![ResidualReport::failed(name, tau, 0.0, err)],
    }
}

fn z(x: f64, y: f64) -> Complex64 {
    Complex64::new(x, y)
}

/// Largest difference of `tau`, `xi` and the u-samples between two
/// integrations of the same scenario.
pub fn path_difference(a: &HydroField, b: &HydroField) -> f64 {
    let l = a.layout();
    let mut comps = vec![loewner::Layout::TAU];
    comps.extend((0..l.n).map(|j| l.xi(j)));
    comps.extend((0..l.samples).map(|s| l.sample(s)));
    let mut worst = 0.0_f64;
    for g in a.grid_indices() {
        let (x, y) = (a.raw(&g), b.raw(&g));
        for &c in &comps {
            worst = worst.max((x[c] - y[c]).norm());
        }
    }
    worst
}

/// The two forms of the Löwner right-hand side at random `(u, xi)`.
pub fn check_loewner_forms(sc: &Scenario, samples: usize, seed: u64, tol: f64) -> ResidualReport {
    let s0 = sc.initial_state();
    let run = || -> Result<Vec<f64>> {
        let m = s0.modular()?;
        let pts = Sampler::new(seed).admissible(&m, 2, samples, |p| vec![p[0], p[0] + p[1].re, z(p[1].re, 0.0)]);
        let mut res = Vec::new();
        for p in pts {
            let mut s = s0.clone();
            s.xi[0] = p[1].re;
            s.v[0] = z(0.0, 1.0);
            let a = loewner::loewner_rhs_pointwise(p[0], &s, 0)?;
            let b = loewner::loewner_rhs_pointwise_full(p[0], &s, 0)?;
            res.push((a - b).norm() / a.norm().max(1.0));
        }
        Ok(res)
    };
    match run() {
        Ok(r) => ResidualReport::from_residuals("gt2_forms", sc.tau0, &r, tol),
        Err(e) => ResidualReport::failed("gt2_forms", sc.tau0, tol, e),
    }
}

/// Newton from a neighbouring grid node back to the manufactured centre.
pub fn check_recovery(
    field: &HydroField,
    sym: &hodograph::SymmetrySolution,
    centre: &TimePoint,
    tol: f64,
) -> ResidualReport {
    let tau = field.state(&field.centre()).tau.im;
    let run = || -> Result<Vec<f64>> {
        let mut node = field.centre();
        node[0] += field.stride();
        let seed = TimePoint::seed(centre.t0, centre.t.clone(), field.lambda(&node));
        let p = hodograph::hodograph_solve(field, sym, &seed)?;
        Ok(p.lambda.iter().map(|l| l.abs()).collect())
    };
    match run() {
        Ok(r) => ResidualReport::from_residuals("recovery", tau, &r, tol),
        Err(e) => ResidualReport::failed("recovery", tau, tol, e),
    }
}

/// Run the requested suites in dependency order.
pub fn run(config: &RunConfig) -> Result<RunOutcome> {
    config.validate()?;
    let sc = &config.scenario;
    let tol = |s: &str| config.tolerances.get(s).copied();
    let mut suites = Vec::new();
    let mut artifacts = Vec::new();
    let mut warnings = Vec::new();
    let mut note_tau = |t: f64| -> Result<ModularParam> {
        let m = ModularParam::from_imag(t)?;
        if m.is_poorly_convergent() && !warnings.iter().any(|w: &String| w.contains(&format!("= {t}i"))) {
            warnings.push(format!(
                "tau = {t}i: theta series converge slowly ({} terms)",
                m.truncation_k()
            ));
        }
        Ok(m)
    };

    if config.wants("identities") {
        let taus: Vec<f64> = match config.tau {
            Some(t) => vec![t],
            None => DEFAULT_TAUS.to_vec(),
        };
        let mut reports = Vec::new();
        for t in taus {
            reports.extend(identity_suite_seeded(&note_tau(t)?, IDENTITY_SAMPLES, config.seed));
        }
        suites.push(suite("identities", reports, tol("identities")));
    }

    let needs_field = SUITES[1..].iter().any(|s| config.wants(s));
    if needs_field {
        note_tau(sc.tau0)?;
    }
    if !needs_field {
        return Ok(outcome(config, suites, artifacts, warnings));
    }
    let forward: Vec<usize> = (0..sc.n).collect();
    let field = match integrate_field(sc, &forward) {
        Ok(f) => f,
        Err(e) => {
            for s in &SUITES[1..] {
                if config.wants(s) {
                    suites.push(failed_suite(s, sc.tau0, &e));
                }
            }
            return Ok(outcome(config, suites, artifacts, warnings));
        }
    };
    let tau = sc.tau0;
    let zs = sc.z_points();
    let z1 = zs.first().copied().unwrap_or(z(4.0, 0.0));
    let z2 = zs.iter().copied().find(|w| *w != z1).unwrap_or(z(6.0, 0.0));

    if config.wants("gt") {
        let mut reports = Vec::new();
        let backward: Vec<usize> = (0..sc.n).rev().collect();
        match integrate_field(sc, &backward) {
            Ok(other) => reports.push(ResidualReport::from_residuals(
                "path",
                tau,
                &[path_difference(&field, &other)],
                1e-7,
            )),
            Err(e) => reports.push(ResidualReport::failed("path", tau, 1e-7, e)),
        }
        reports.push(loewner::check_gt_cross(&field, 1e-5));
        reports.push(loewner::check_fjk(&field, 50, config.seed, 1e-9));
        reports.push(loewner::check_fjk_fd(&field, 50, config.seed, 1e-5));
        reports.push(loewner::check_f201(&field, z1, z2, 1e-5));
        reports.push(check_loewner_forms(sc, 100, config.seed, 1e-11));
        reports.push(ResidualReport::from_residuals(
            "reality",
            tau,
            &[field.reality_defect()],
            1e-10,
        ));
        reports.push(ResidualReport::from_residuals(
            "tail",
            tau,
            &[field.tail_bound(3.0)],
            1e-8,
        ));
        suites.push(suite("gt", reports, tol("gt")));
        let (json, csv) = (serde_json::to_string_pretty(&field.to_json())?, field.to_csv());
        push_table(&mut artifacts, config.format, "field", json, csv);
    }

    if config.wants("gamma") {
        let mut reports = metric::check_gamma_ratio(&field, 1e-9, 1e-8).to_vec();
        reports.push(metric::check_q_difference(
            &ModularParam::from_imag(tau)?,
            100,
            config.seed,
            1e-10,
        ));
        reports.push(metric::check_faber_generating(&field, 6.0, 1e-10));
        reports.push(metric::check_metric_reality(&field, 1e-10));
        suites.push(suite("gamma", reports, tol("gamma")));
    }

    if config.wants("metric") {
        let mut reports = vec![
            metric::check_gamma_log(&field, 1e-5),
            metric::check_egorov(&field, 1e-5),
            metric::check_potential(&field, 1e-5),
        ];
        // the triple-index relations need three axes
        if sc.n >= 3 {
            reports.push(metric::check_tsarev(&field, 1e-5));
            reports.extend(metric::check_curvature(&field, 1e-5, 1e-9));
        }
        suites.push(suite("metric", reports, tol("metric")));
    }

    let grid = TGrid::default_for(sc.n, DEFAULT_K);
    let hodo_needed = config.wants("hodograph") || config.wants("dkp");
    let sym = if hodo_needed {
        Some(hodograph::manufactured_symmetry(
            &field,
            &grid.centre,
            &vec![DEFAULT_SLOPE; sc.n],
        ))
    } else {
        None
    };

    if config.wants("hodograph") {
        match sym.as_ref().expect("symmetry built") {
            Ok(sym) => {
                let reports = vec![
                    hodograph::check_symmetry(&field, sym, 1e-5),
                    check_recovery(&field, sym, &grid.centre, 1e-9),
                    hodograph::check_hydro_evolution(&field, sym, &grid, 1e-6),
                    hodograph::check_hodograph_points(&field, sym, &grid, 1e-8),
                ];
                suites.push(suite("hodograph", reports, tol("hodograph")));
                if let Ok(st) = hodograph::TStencil::solve(&field, sym, &grid) {
                    artifacts.push(("timepoints.csv".into(), hodograph::time_points_csv(&st.points())));
                }
                if let Ok(table) = metric::faber_speeds(
                    &field.laurent(&field.centre()),
                    &field.state(&field.centre()),
                    DEFAULT_K,
                ) {
                    artifacts.push(("faber.csv".into(), table.to_csv()));
                }
            }
            Err(e) => suites.push(failed_suite("hodograph", tau, e)),
        }
    }

    if config.wants("dkp") {
        match sym.as_ref().expect("symmetry built") {
            Ok(sym) => {
                let e1 = zs
                    .iter()
                    .copied()
                    .find(|w| (w - z(10.0, 0.0)).norm() < 1e-12)
                    .unwrap_or(z(10.0, 0.0));
                let triple = [z(6.0, 0.0), z(10.0, 0.0), z(8.0, 2.0)];
                let reports = hodograph::check_dkp(
                    &field,
                    sym,
                    &grid.centre,
                    DEFAULT_K,
                    T_STEP,
                    ORDER_STEP,
                    e1,
                    z1,
                    triple,
                    1e-5,
                );
                suites.push(suite("dkp", reports.to_vec(), tol("dkp")));
            }
            Err(e) => suites.push(failed_suite("dkp", tau, e)),
        }
    }

    if config.wants("conserved") {
        let reports = hodograph::check_conserved(&field, DEFAULT_K, 1e-5, 1e-9, 1e-11);
        suites.push(suite("conserved", reports.to_vec(), tol("conserved")));
    }

    if config.wants("curve") {
        let c = field.laurent(&field.centre());
        let s = field.state(&field.centre());
        let reports = vec![hodograph::check_curve(&c, &s, 100, config.seed, 1e-10)];
        suites.push(suite("curve", reports, tol("curve")));
    }

    Ok(outcome(config, suites, artifacts, warnings))
}

fn push_table(artifacts: &mut Vec<(String, String)>, format: Format, stem: &str, json: String, csv: String) {
    if format != Format::Csv {
        artifacts.push((format!("{stem}.json"), json));
    }
    if format != Format::Json {
        artifacts.push((format!("{stem}.csv"), csv));
    }
}

fn outcome(
    config: &RunConfig,
    suites: Vec<SuiteResult>,
    artifacts: Vec<(String, String)>,
    warnings: Vec<String>,
) -> RunOutcome {
    RunOutcome {
        scenario: config.scenario.name.clone().unwrap_or_else(|| "custom".into()),
        seed: config.seed,
        suites,
        artifacts,
        warnings,
    }
}

pub fn reports_csv(reports: &[ResidualReport]) -> String {
    let mut out = String::from("identity_name,tau,samples,max_residual,rms_residual,tolerance,pass,error\n");
    for r in reports {
        out.push_str(&format!(
            "{},{},{},{:e},{:e},{:e},{},{}\n",
            r.identity_name,
            r.tau,
            r.samples,
            r.max_residual,
            r.rms_residual,
            r.tolerance,
            r.pass,
            r.error.as_deref().unwrap_or("").replace(',', ";")
        ));
    }
    out
}

#[derive(Serialize)]
struct Summary<'a> {
    scenario: &'a str,
    seed: u64,
    pass: bool,
    warnings: &'a [String],
    suites: Vec<SummaryLine<'a>>,
}

#[derive(Serialize)]
struct SummaryLine<'a> {
    suite: &'a str,
    pass: bool,
    reports: usize,
    failed: Vec<&'a str>,
}

pub fn summary_json(outcome: &RunOutcome) -> Result<String> {
    let s = Summary {
        scenario: &outcome.scenario,
        seed: outcome.seed,
        pass: outcome.pass(),
        warnings: &outcome.warnings,
        suites: outcome
            .suites
            .iter()
            .map(|s| SummaryLine {
                suite: &s.suite,
                pass: s.pass,
                reports: s.reports.len(),
                failed: s
                    .reports
                    .iter()
                    .filter(|r| !r.pass)
                    .map(|r| r.identity_name.as_str())
                    .collect(),
            })
            .collect(),
    };
    Ok(serde_json::to_string_pretty(&s)?)
}

/// Write one file per suite (per format), the extra tables and
/// `summary.json`. Returns the written paths.
pub fn emit_report(outcome: &RunOutcome, format: Format, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut write = |name: &str, text: &str| -> Result<()> {
        let p = dir.join(name);
        fs::write(&p, text)?;
        written.push(p);
        Ok(())
    };
    for s in &outcome.suites {
        if format != Format::Csv {
            write(&format!("{}.json", s.suite), &serde_json::to_string_pretty(&s.reports)?)?;
        }
        if format != Format::Json {
            write(&format!("{}.csv", s.suite), &reports_csv(&s.reports))?;
        }
    }
    for (name, text) in &outcome.artifacts {
        write(name, text)?;
    }
    write("summary.json", &summary_json(outcome)?)?;
    Ok(written)
}
