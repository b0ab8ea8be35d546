use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{ArgGroup, Parser};
use dkp_elliptic::loewner::Scenario;
use dkp_elliptic::runner::{self, RunConfig};

#[derive(Debug, Parser)]
#[command(
    name = "dkp-verify",
    version,
    about = "Run residual suites for elliptic dDKP reductions"
)]
#[command(group(ArgGroup::new("source").args(["scenario", "config"])))]
struct Args {
    /// Built-in scenario (default-n2, default-n3)
    #[arg(long)]
    scenario: Option<String>,

    /// Scenario JSON file
    #[arg(long)]
    config: Option<PathBuf>,

    /// Comma-separated suites, or "all"
    #[arg(long, default_value = "all")]
    suites: String,

    /// Imaginary part of tau for the identity suite
    #[arg(long)]
    tau: Option<f64>,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Output directory for reports
    #[arg(long)]
    out: Option<PathBuf>,

    #[arg(long, default_value = "json", value_parser = ["json", "csv", "both"])]
    format: String,

    /// SUITE=VALUE, repeatable
    #[arg(long = "tol")]
    tol: Vec<String>,
}

fn config(args: &Args) -> Result<RunConfig> {
    let scenario = match (&args.scenario, &args.config) {
        (_, Some(path)) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            Scenario::from_json(&text)?
        }
        (Some(name), None) => Scenario::by_name(name)?,
        (None, None) => Scenario::default_n2(),
    };
    let mut cfg = RunConfig::new(scenario, RunConfig::parse_suites(&args.suites)?);
    for t in &args.tol {
        let (k, v) = RunConfig::parse_tolerance(t)?;
        cfg.tolerances.insert(k, v);
    }
    cfg.output = args.out.clone();
    cfg.format = args.format.parse()?;
    cfg.seed = args.seed;
    cfg.tau = args.tau;
    cfg.validate()?;
    Ok(cfg)
}

fn print_summary(outcome: &runner::RunOutcome) {
    for s in &outcome.suites {
        for r in &s.reports {
            let status = if r.pass { "pass" } else { "FAIL" };
            println!(
                "{:<11} {:<16} tau={:<5} n={:<4} max={:.3e} tol={:.1e} {}{}",
                s.suite,
                r.identity_name,
                r.tau,
                r.samples,
                r.max_residual,
                r.tolerance,
                status,
                r.error.as_deref().map(|e| format!(" ({e})")).unwrap_or_default()
            );
        }
    }
    println!(
        "{}",
        if outcome.pass() {
            "all suites passed"
        } else {
            "some suites failed"
        }
    );
}

fn main() -> ExitCode {
    let args = Args::parse();
    let cfg = match config(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let outcome = match runner::run(&cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    print_summary(&outcome);
    if let Some(dir) = &cfg.output {
        if let Err(e) = runner::emit_report(&outcome, cfg.format, dir) {
            eprintln!("error: writing reports: {e}");
            return ExitCode::from(2);
        }
    }
    ExitCode::from(outcome.exit_code() as u8)
}

#[cfg(test)]
mod tests {
    use super::*;
    use dkp_elliptic::runner::Format;

    #[test]
    fn parses_repeated_tolerances() {
        let a = Args::parse_from([
            "dkp-verify",
            "--scenario",
            "default-n3",
            "--tol",
            "gt=1e-3",
            "--tol",
            "dkp=2e-5",
        ]);
        let c = config(&a).unwrap();
        assert_eq!(c.scenario.n, 3);
        assert_eq!(c.tolerances.len(), 2);
        assert_eq!(c.format, Format::Json);
    }

    #[test]
    fn scenario_and_config_conflict() {
        assert!(Args::try_parse_from(["dkp-verify", "--scenario", "default-n2", "--config", "x.json"]).is_err());
    }
}
