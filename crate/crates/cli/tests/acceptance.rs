//! One line per acceptance criterion. Tolerances are pinned here and do not
//! follow the library defaults.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use dkp_elliptic::hodograph::{self, TGrid, DEFAULT_K, DEFAULT_SLOPE, ORDER_STEP, T_STEP};
use dkp_elliptic::identities::identity_suite_seeded;
use dkp_elliptic::loewner::{self, integrate_field, HydroField, Scenario};
use dkp_elliptic::runner::{check_recovery, path_difference};
use dkp_elliptic::{metric, Complex64, ModularParam, ResidualReport};

const SEED: u64 = 0;

type Criterion<'a> = (&'static str, Box<dyn Fn() -> Verdict + 'a>);

struct Verdict {
    pass: bool,
    detail: String,
}

fn judge(reports: &[ResidualReport], budget: Option<(Duration, Duration)>) -> Verdict {
    let mut pass = reports.iter().all(|r| r.pass && r.samples > 0);
    let mut parts: Vec<String> = reports
        .iter()
        .map(|r| {
            let mark = if r.pass && r.samples > 0 { "" } else { "!" };
            format!("{mark}{}={:.1e}<{:.0e}", r.identity_name, r.max_residual, r.tolerance)
        })
        .collect();
    if let Some((took, limit)) = budget {
        pass &= took < limit;
        parts.push(format!("{:.2}s<{}s", took.as_secs_f64(), limit.as_secs()));
    }
    Verdict {
        pass,
        detail: parts.join(" "),
    }
}

fn field(sc: &Scenario) -> HydroField {
    integrate_field(sc, &(0..sc.n).collect::<Vec<_>>()).expect("integration")
}

fn c(x: f64, y: f64) -> Complex64 {
    Complex64::new(x, y)
}

fn identities() -> Verdict {
    let start = Instant::now();
    let mut reports = Vec::new();
    for t in [0.8, 1.0, 1.5] {
        reports.extend(identity_suite_seeded(&ModularParam::from_imag(t).unwrap(), 100, SEED));
    }
    let took = start.elapsed();
    let reports: Vec<_> = reports.into_iter().map(|r| r.with_tolerance(1e-10)).collect();
    let mut v = judge(&reports, Some((took, Duration::from_secs(5))));
    let thin = reports
        .iter()
        .filter(|r| r.identity_name != "theta1prime" && r.samples < 100)
        .count();
    v.pass &= thin == 0 && reports.len() >= 3 * 20;
    v.detail = format!(
        "{} reports, worst {:.1e} {}",
        reports.len(),
        worst(&reports),
        v.detail.rsplit(' ').next().unwrap()
    );
    v
}

fn worst(reports: &[ResidualReport]) -> f64 {
    reports.iter().map(|r| r.max_residual).fold(0.0, f64::max)
}

fn gibbons_tsarev() -> Verdict {
    let start = Instant::now();
    let f = field(&Scenario::default_n2());
    let reports = vec![
        loewner::check_gt_cross(&f, 1e-5),
        loewner::check_fjk(&f, 50, SEED, 1e-9),
    ];
    judge(&reports, Some((start.elapsed(), Duration::from_secs(10))))
}

fn path_independence() -> Verdict {
    let sc = Scenario::default_n2();
    assert_eq!(sc.step, 1e-3);
    let a = field(&sc);
    let b = integrate_field(&sc, &[1, 0]).expect("integration");
    judge(
        &[ResidualReport::from_residuals(
            "path",
            sc.tau0,
            &[path_difference(&a, &b)],
            1e-7,
        )],
        None,
    )
}

fn christoffel(f: &HydroField) -> Verdict {
    judge(&metric::check_gamma_ratio(f, 1e-9, 1e-8), None)
}

fn metric_suite() -> Verdict {
    let start = Instant::now();
    let f = field(&Scenario::default_n3());
    let [c101, _] = metric::check_curvature(&f, 1e-5, 1e-9);
    let reports = vec![
        metric::check_gamma_log(&f, 1e-5),
        metric::check_tsarev(&f, 1e-5),
        c101,
        metric::check_egorov(&f, 1e-5),
        metric::check_potential(&f, 1e-5),
    ];
    judge(&reports, Some((start.elapsed(), Duration::from_secs(30))))
}

fn hodograph_suite(f: &HydroField) -> Verdict {
    let grid = TGrid::default_for(f.n(), DEFAULT_K);
    let sym = hodograph::manufactured_symmetry(f, &grid.centre, &vec![DEFAULT_SLOPE; f.n()]).expect("symmetry");
    let reports = vec![
        check_recovery(f, &sym, &grid.centre, 1e-9),
        hodograph::check_hydro_evolution(f, &sym, &grid, 1e-6),
        hodograph::check_hodograph_points(f, &sym, &grid, 1e-8),
    ];
    judge(&reports, None)
}

fn dkp(f: &HydroField) -> Verdict {
    let grid = TGrid::default_for(f.n(), DEFAULT_K);
    let sym = hodograph::manufactured_symmetry(f, &grid.centre, &vec![DEFAULT_SLOPE; f.n()]).expect("symmetry");
    let triple = [c(6.0, 0.0), c(10.0, 0.0), c(8.0, 2.0)];
    // e12_order is |ratio - 4|, so 0.5 pins the ratio to [3.5, 4.5]
    let reports = hodograph::check_dkp(
        f,
        &sym,
        &grid.centre,
        6,
        T_STEP,
        ORDER_STEP,
        c(10.0, 0.0),
        c(4.0, 0.0),
        triple,
        1e-5,
    );
    let [e12, order, e11] = reports;
    judge(&[e12, order.with_tolerance(0.5), e11], None)
}

fn curve(f: &HydroField) -> Verdict {
    let node = f.centre();
    judge(
        &[hodograph::check_curve(
            &f.laurent(&node),
            &f.state(&node),
            100,
            SEED,
            1e-10,
        )],
        None,
    )
}

fn conserved(f: &HydroField) -> Verdict {
    let [cq5, cq3, _, f00] = hodograph::check_conserved(f, 6, 1e-5, 1e-9, 1e-11);
    judge(&[cq5, cq3, f00], None)
}

fn run_cli(out: &Path) -> (bool, Duration) {
    let start = Instant::now();
    let status = Command::new(env!("CARGO_BIN_EXE_dkp-verify"))
        .args([
            "--scenario",
            "default-n2",
            "--suites",
            "all",
            "--format",
            "both",
            "--out",
        ])
        .arg(out)
        .output()
        .expect("spawn cli");
    (status.status.code() == Some(0), start.elapsed())
}

fn dir_contents(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

fn pipeline() -> Verdict {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let (ok_a, took) = run_cli(a.path());
    let (ok_b, _) = run_cli(b.path());
    let same = dir_contents(a.path()) == dir_contents(b.path());
    let pass = ok_a && ok_b && same && took < Duration::from_secs(60);
    Verdict {
        pass,
        detail: format!(
            "exit0={} deterministic={} {:.2}s<60s",
            ok_a && ok_b,
            same,
            took.as_secs_f64()
        ),
    }
}

fn main() {
    let n2 = field(&Scenario::default_n2());
    let criteria: Vec<Criterion> = vec![
        ("identity suite", Box::new(identities)),
        ("gibbons-tsarev compatibility", Box::new(gibbons_tsarev)),
        ("path independence", Box::new(path_independence)),
        ("christoffel symbols", Box::new(|| christoffel(&n2))),
        ("metric suite (default-n3)", Box::new(metric_suite)),
        ("hodograph", Box::new(|| hodograph_suite(&n2))),
        ("dDKP equations", Box::new(|| dkp(&n2))),
        ("curve identity", Box::new(|| curve(&n2))),
        ("conserved quantities", Box::new(|| conserved(&n2))),
        ("full pipeline", Box::new(pipeline)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let v = check();
        if !v.pass {
            failed += 1;
        }
        println!(
            "{} criterion {:>2} {:<30} {}",
            if v.pass { "PASS" } else { "FAIL" },
            i + 1,
            name,
            v.detail
        );
    }
    println!("{}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
