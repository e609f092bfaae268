use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use regkit::harness::{run_experiment, verify_report, ExperimentConfig, Pipeline, RunReport};

/// Build and check multicalibrated partitions, hardcore distributions,
/// pseudoentropy witnesses and dense models on finite domains.
#[derive(Parser, Debug)]
#[command(name = "regkit", version)]
struct Args {
    /// ma, mc, ihcl_pp, ihcl_recover, pame_pp, pame_recover, dmt_pp, dmt_recover or verify
    #[arg(value_parser = parse_pipeline)]
    pipeline: Pipeline,
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Where to write the report; printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Re-check the report at --out (or the config's artifact) instead of building.
    #[arg(long)]
    verify_only: bool,
}

fn parse_pipeline(s: &str) -> Result<Pipeline, String> {
    Pipeline::parse(s).ok_or_else(|| {
        let names: Vec<&str> = Pipeline::ALL.iter().map(|p| p.name()).collect();
        format!("unknown pipeline `{s}`; expected one of {}", names.join(", "))
    })
}

fn run(args: &Args) -> regkit::Result<RunReport> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if args.pipeline != Pipeline::Verify && cfg.pipeline != args.pipeline {
        return Err(regkit::Error::Invalid(format!(
            "config describes pipeline `{}` but `{}` was requested",
            cfg.pipeline.name(),
            args.pipeline.name()
        )));
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if args.verify_only {
        let path = args.out.clone().or(cfg.artifact.clone()).ok_or_else(|| {
            regkit::Error::Invalid("--verify-only needs --out or an artifact path in the config".into())
        })?;
        let mut checked = verify_report(&RunReport::read(&path)?);
        checked.pipeline = Pipeline::Verify;
        return Ok(checked);
    }
    if args.pipeline == Pipeline::Verify {
        cfg.pipeline = Pipeline::Verify;
    }
    run_experiment(&cfg)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let report = match run(&args) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("regkit: {e}");
            return ExitCode::from(2);
        }
    };
    let written = match (&args.out, args.verify_only) {
        (Some(path), false) => report.write(path),
        _ => report.to_json().map(|s| println!("{s}")),
    };
    if let Err(e) = written {
        eprintln!("regkit: {e}");
        return ExitCode::from(2);
    }
    for c in report.failures() {
        eprintln!("FAIL {} [{}]: {:e} {:?} {:e} (tol {:e})", c.id, c.subject, c.lhs, c.relation, c.rhs, c.tolerance);
    }
    if let Some(e) = &report.error {
        eprintln!("error: {e}");
    }
    eprintln!(
        "{}: {} checks, {} failed, {:.3}s",
        if report.pass { "PASS" } else { "FAIL" },
        report.checks.len(),
        report.failures().count(),
        report.wall_time_seconds
    );
    if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
