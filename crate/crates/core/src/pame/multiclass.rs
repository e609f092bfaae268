use serde::{Deserialize, Serialize};

use crate::domain::{BoundedFn, Family};
use crate::error::{check_len, Error, Result};
use crate::mc::{lambda_grid, lambda_round, level_sets, run_engine, Scope, Selection};
use crate::partition::{Partition, PieceStats};

use super::JointDist;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MulticlassReport {
    pub eps: f64,
    pub gamma: f64,
    pub labels: usize,
    /// `values[piece][y] = E_{marg|P}[cond(., y)]`.
    pub values: Vec<Vec<f64>>,
    /// `violations[piece][member][y] = |E_{marg|P}[f (cond(., y) - v_{P,y})]|`.
    pub violations: Vec<Vec<Vec<f64>>>,
    pub qualifying: Vec<bool>,
    pub max_violation: f64,
    /// `(piece, member, label)` attaining `max_violation`.
    pub worst: Option<(usize, usize, usize)>,
    pub checked: usize,
    pub skipped: usize,
    pub pass: bool,
    pub iterations: usize,
}

/// Piece statistics for a labelled target: `v` is the label-1 mass, `m` the
/// largest label mass and `b = 1 - m`.
pub fn multiclass_stats(p: &Partition, j: &JointDist) -> Result<(Vec<PieceStats>, Vec<Vec<f64>>)> {
    check_len(j.len(), p.len())?;
    let mut eta = vec![0.0; p.k];
    let mut mass = vec![vec![0.0; j.labels]; p.k];
    for (x, &q) in p.assign.iter().enumerate() {
        let w = j.marg.prob(x);
        eta[q] += w;
        for (acc, c) in mass[q].iter_mut().zip(&j.cond[x]) {
            *acc += w * c;
        }
    }
    let mut stats = Vec::with_capacity(p.k);
    let mut values = Vec::with_capacity(p.k);
    for q in 0..p.k {
        if eta[q] <= 0.0 {
            stats.push(PieceStats::degenerate());
            values.push(vec![0.0; j.labels]);
            continue;
        }
        let mut row: Vec<f64> = mass[q].iter().map(|m| m / eta[q]).collect();
        let s: f64 = row.iter().sum();
        row.iter_mut().for_each(|r| *r /= s);
        let m = row.iter().copied().fold(0.0, f64::max);
        stats.push(PieceStats { v: row[1], b: 1.0 - m, eta: eta[q], m, degenerate: false });
        values.push(row);
    }
    Ok((stats, values))
}

/// Exhaustive check of per-label calibration on pieces of mass at least `gamma`.
/// Piece means are recomputed from the raw tables.
pub fn verify_multiclass(
    p: &Partition,
    fam: &Family,
    j: &JointDist,
    eps: f64,
    gamma: f64,
) -> Result<MulticlassReport> {
    let n = j.len();
    check_len(n, p.len())?;
    check_len(n, fam.domain_size())?;
    if p.assign.iter().any(|&q| q >= p.k) {
        return Err(Error::Invalid("piece id out of range".into()));
    }
    let mut buckets = vec![Vec::new(); p.k];
    for (x, &q) in p.assign.iter().enumerate() {
        buckets[q].push(x);
    }
    let labels = j.labels;
    let mut values = vec![vec![0.0; labels]; p.k];
    let mut violations = vec![vec![vec![0.0; labels]; fam.len()]; p.k];
    let mut qualifying = vec![false; p.k];
    let (mut max_violation, mut worst, mut checked) = (0.0f64, None, 0);
    for (q, xs) in buckets.iter().enumerate() {
        let eta: f64 = xs.iter().map(|&x| j.marg.masses()[x]).sum();
        if eta <= 0.0 {
            continue;
        }
        for y in 0..labels {
            values[q][y] = xs.iter().map(|&x| j.marg.masses()[x] * j.cond[x][y]).sum::<f64>() / eta;
        }
        qualifying[q] = eta >= gamma;
        if qualifying[q] {
            checked += 1;
        }
        for (fi, f) in fam.members().iter().enumerate() {
            let t = f.table.values();
            for y in 0..labels {
                let acc: f64 = xs.iter().map(|&x| j.marg.masses()[x] * t[x] * (j.cond[x][y] - values[q][y])).sum();
                let viol = (acc / eta).abs();
                violations[q][fi][y] = viol;
                if qualifying[q] && viol > max_violation {
                    max_violation = viol;
                    worst = Some((q, fi, y));
                }
            }
        }
    }
    Ok(MulticlassReport {
        eps,
        gamma,
        labels,
        values,
        violations,
        qualifying,
        max_violation,
        worst,
        checked,
        skipped: p.k - checked,
        pass: max_violation <= eps,
        iterations: 0,
    })
}

const DISCRETIZE_ROUNDS: usize = 3;

/// Partition on whose pieces of mass at least `gamma` every label indicator
/// is `eps`-calibrated against every member of the single-argument family.
pub fn multiclass_mc_partition(
    fam: &Family,
    j: &JointDist,
    eps: f64,
    gamma: f64,
) -> Result<(Partition, MulticlassReport)> {
    check_len(j.len(), fam.domain_size())?;
    if !(eps > 0.0 && eps < 1.0) || !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::Invalid(format!("need 0 < eps < 1 and 0 < gamma <= 1, got {eps}, {gamma}")));
    }
    let n = j.len();
    let targets: Vec<Vec<f64>> = (0..j.labels).map(|y| j.column(y)).collect();
    let init: Vec<Vec<f64>> = targets
        .iter()
        .map(|t| {
            let mean = j.marg.expect_values(t).expect("lengths checked");
            vec![mean; n]
        })
        .collect();
    let grid = lambda_grid(eps / 2.0)?;
    let mcoa_eps = eps * gamma / 2.0;
    let mut h = init;
    let mut iterations = 0;
    let mut ledger = crate::domain::ComplexityLedger::default();
    for round in 1..=DISCRETIZE_ROUNDS {
        let run = run_engine(fam, &j.marg, &targets, h, mcoa_eps, Selection::Worst, Scope::LevelSets)?;
        iterations += run.corrections;
        ledger.absorb(&run.ledger);
        let disc: Vec<Vec<f64>> =
            run.h.iter().map(|coord| coord.iter().map(|&v| lambda_round(&grid, v)).collect()).collect();
        ledger.post_ops += (n * j.labels) as u64;
        let (assign, sets) = level_sets(&disc, n);
        let label1 = BoundedFn::new(targets[1].clone())?;
        let mut p = Partition::new(assign, sets.len(), &label1, &j.marg)?;
        p.stats = multiclass_stats(&p, j)?.0;
        let mut report = verify_multiclass(&p, fam, j, eps, gamma)?;
        if report.pass || round == DISCRETIZE_ROUNDS {
            ledger.pieces = p.k as u64;
            p.ledger = ledger;
            report.iterations = iterations;
            return Ok((p, report));
        }
        h = disc;
    }
    unreachable!("the last round always returns")
}
