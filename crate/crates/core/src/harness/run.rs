//! Pipeline dispatch: build the artifacts, then check them with `verify_all`.

use std::time::Instant;

use super::config::{gen_instance, ExperimentConfig, Instance, Pipeline};
use super::report::{Artifacts, HardcoreArtifact, McArtifact, RunReport, SCHEMA_VERSION};
use super::verify::verify_all;
use crate::dmt::{dmt_pp, lift_family, recover_dmt, DmtInstance};
use crate::domain::ComplexityLedger;
use crate::error::{Error, Result};
use crate::ihcl::{glue_hardcore, ihcl_pp, recover_ihcl, sample_hardcore_set, GoodPieceFilter};
use crate::mc::{build_approx_mc_partition, build_multiaccurate};
use crate::pame::{pame_pp, recover_pame};

/// Runs the configured pipeline. Module errors are recorded in the report
/// rather than returned; only an unreadable stored artifact is an `Err`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunReport> {
    let start = Instant::now();
    let mut report = RunReport {
        schema_version: SCHEMA_VERSION,
        pipeline: cfg.pipeline,
        seed: cfg.seed,
        config: cfg.clone(),
        instance: None,
        artifacts: Artifacts::default(),
        checks: Vec::new(),
        ledger: ComplexityLedger::default(),
        error: None,
        pass: false,
        wall_time_seconds: 0.0,
    };
    if cfg.pipeline == Pipeline::Verify {
        let path = cfg
            .artifact
            .as_ref()
            .ok_or_else(|| Error::Invalid("the verify pipeline needs an artifact path".into()))?;
        let stored = RunReport::read(path)?;
        let mut out = verify_report(&stored);
        out.pipeline = Pipeline::Verify;
        out.wall_time_seconds = start.elapsed().as_secs_f64();
        return Ok(out);
    }
    match gen_instance(cfg).and_then(|inst| build(cfg, &inst).map(|a| (inst, a))) {
        Ok((inst, (artifacts, ledger))) => {
            report.instance = Some(inst);
            report.artifacts = artifacts;
            report.ledger = ledger;
            report.checks = verify_all(&report);
        }
        Err(e) => report.error = Some(e.to_string()),
    }
    report.settle();
    report.wall_time_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Re-checks a stored report without rebuilding anything.
pub fn verify_report(stored: &RunReport) -> RunReport {
    let start = Instant::now();
    let mut out = stored.clone();
    out.checks = verify_all(stored);
    out.error = stored.error.clone();
    out.settle();
    out.wall_time_seconds = start.elapsed().as_secs_f64();
    out
}

fn target(inst: &Instance) -> Result<&crate::domain::BoundedFn> {
    inst.target.as_ref().ok_or_else(|| Error::Invalid("pipeline needs a single-function target".into()))
}

fn build(cfg: &ExperimentConfig, inst: &Instance) -> Result<(Artifacts, ComplexityLedger)> {
    let p = &cfg.params;
    let fam = &inst.family;
    let d = &inst.dist;
    let mut a = Artifacts::default();
    let ledger = match cfg.pipeline {
        Pipeline::Ma => {
            let pred = build_multiaccurate(fam, target(inst)?, d, p.eps)?;
            let l = pred.ledger;
            a.ma = Some(pred);
            l
        }
        Pipeline::Mc => {
            let (partition, report, _) = build_approx_mc_partition(fam, target(inst)?, d, p.eps, p.gamma()?)?;
            let l = partition.ledger;
            a.mc = Some(McArtifact { partition, report });
            l
        }
        Pipeline::IhclPp => {
            let g = target(inst)?;
            let gamma = p.gamma()?;
            let (partition, pieces, report) = ihcl_pp(fam, g, d, p.eps, gamma)?;
            let mut art = HardcoreArtifact { partition, report, pieces, filter: None, glued: None };
            if let Some(tau) = p.tau {
                let filter = GoodPieceFilter::by_balance(&art.partition.stats, gamma, tau);
                let mut glued = glue_hardcore(&art.partition, &art.pieces, d, &filter, p.glue_weights)?;
                glued.measure(g, fam)?;
                art.filter = Some(filter);
                art.glued = Some(glued);
            }
            let l = art.partition.ledger;
            a.hardcore = Some(art);
            l
        }
        Pipeline::IhclRecover => {
            let g = target(inst)?;
            let delta = p.delta()?;
            let mut rec = recover_ihcl(fam, g, d, p.eps, delta)?;
            if let Some(t) = p.rescale {
                rec.glued.rescale_to_density(d, t)?;
                rec.glued.measure(g, fam)?;
            }
            for i in 0..p.set_samples.unwrap_or(0) {
                let seed = cfg.seed.wrapping_add(i as u64);
                a.sets.push(sample_hardcore_set(&rec.glued.h, d, seed, p.inclusion_rule)?);
            }
            let l = rec.partition.ledger;
            a.ihcl = Some(rec);
            l
        }
        Pipeline::PamePp => {
            let j = inst.joint.as_ref().ok_or_else(|| Error::Invalid("pipeline needs a labelled target".into()))?;
            let pp = pame_pp(fam, j, p.eps, p.gamma()?)?;
            let l = pp.partition.ledger;
            a.pame = Some(pp);
            l
        }
        Pipeline::PameRecover => {
            let j = inst.joint.as_ref().ok_or_else(|| Error::Invalid("pipeline needs a labelled target".into()))?;
            let rec = recover_pame(fam, j, p.eps, p.delta()?)?;
            let l = rec.pp.partition.ledger;
            a.pame_recovery = Some(rec);
            l
        }
        Pipeline::DmtPp => {
            let s = inst.sdist.as_ref().ok_or_else(|| Error::Invalid("pipeline needs two distributions".into()))?;
            let union = DmtInstance::augmented(s, d)?;
            let pp = dmt_pp(&lift_family(fam)?, &union, p.eps, p.gamma()?)?;
            let l = pp.partition.ledger;
            a.dmt = Some(pp);
            l
        }
        Pipeline::DmtRecover => {
            let s = inst.sdist.as_ref().ok_or_else(|| Error::Invalid("pipeline needs two distributions".into()))?;
            let mut rec = recover_dmt(fam, s, d, p.eps, p.delta()?)?;
            if let Some(t) = p.rescale {
                rec.rescale_to_density(fam, s, d, t)?;
            }
            let l = rec.pp.partition.ledger;
            a.dmt_recovery = Some(rec);
            l
        }
        Pipeline::Verify => unreachable!("handled by run_experiment"),
    };
    Ok((a, ledger))
}
