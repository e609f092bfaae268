//! Multiaccurate and multicalibrated predictors, and certified approximately
//! multicalibrated partitions.

mod engine;
mod verify;

use serde::{Deserialize, Serialize};

use crate::domain::{BoundedFn, ComplexityLedger, Dist, Family, IDENTITY_TOL};
use crate::error::{check_len, Error, Result};
use crate::partition::Partition;

pub use engine::CORRECTION_CEILING;
pub(crate) use engine::{level_sets, run as run_engine, Scope, Selection};
pub use verify::verify_approx_mc;

/// A `[0, 1]`-valued predictor together with its build history.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Predictor {
    pub table: BoundedFn,
    /// Distinct values taken by the predictor, ascending.
    pub levels: Vec<f64>,
    pub ledger: ComplexityLedger,
    /// Squared-error potential `sum_x d(x) (g(x) - h(x))^2` before the first
    /// correction and after each one.
    pub potential: Vec<f64>,
    /// Exact potential decrease of each correction.
    pub drops: Vec<f64>,
}

impl Predictor {
    pub fn new(table: BoundedFn) -> Self {
        let mut levels: Vec<f64> = table.values().to_vec();
        levels.sort_by(f64::total_cmp);
        levels.dedup();
        Predictor { table, levels, ledger: ComplexityLedger::default(), potential: vec![], drops: vec![] }
    }

    pub fn corrections(&self) -> usize {
        self.drops.len()
    }
}

/// `|E_d[f (g - h)]|`.
pub fn ma_violation(f: &BoundedFn, g: &BoundedFn, h: &BoundedFn, d: &Dist) -> Result<f64> {
    check_len(d.len(), f.len())?;
    check_len(d.len(), g.len())?;
    check_len(d.len(), h.len())?;
    let s: f64 = (0..d.len()).map(|x| d.prob(x) * f.get(x) * (g.get(x) - h.get(x))).sum();
    Ok(s.abs())
}

/// Largest multiaccuracy violation over the family.
pub fn ma_error(fam: &Family, g: &BoundedFn, h: &BoundedFn, d: &Dist) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for f in fam.iter() {
        worst = worst.max(ma_violation(&f.table, g, h, d)?);
    }
    Ok(worst)
}

/// Multicalibration-on-average error: the largest, over members `f`, of the
/// level-set-mass-weighted sum of `|E_{d | h = v}[f (g - h)]|`.
pub fn mcoa_error(fam: &Family, g: &BoundedFn, h: &BoundedFn, d: &Dist) -> Result<f64> {
    check_len(d.len(), g.len())?;
    check_len(d.len(), h.len())?;
    let hv = vec![h.values().to_vec()];
    let (_, sets) = level_sets(&hv, d.len());
    let mut worst: f64 = 0.0;
    for f in fam.iter() {
        check_len(d.len(), f.table.len())?;
        let total: f64 = sets
            .iter()
            .map(|set| {
                set.iter()
                    .map(|&x| d.prob(x) * f.table.get(x) * (g.get(x) - h.get(x)))
                    .sum::<f64>()
                    .abs()
            })
            .sum();
        worst = worst.max(total);
    }
    Ok(worst)
}

fn validate_inputs(fam: &Family, g: &BoundedFn, d: &Dist) -> Result<()> {
    check_len(d.len(), g.len())?;
    check_len(d.len(), fam.domain_size())?;
    if fam.is_empty() {
        return Err(Error::Invalid("empty family".into()));
    }
    Ok(())
}

fn predictor_from_run(run: engine::Run) -> Result<Predictor> {
    let table = BoundedFn::new(run.h.into_iter().next().expect("one coordinate"))?;
    let mut p = Predictor::new(table);
    p.ledger = run.ledger;
    p.potential = run.potential;
    p.drops = run.drops;
    Ok(p)
}

/// Builds an `eps`-multiaccurate predictor, starting from the constant `E_d[g]`.
///
/// Each correction lowers the potential by more than `eps^2`, so at most
/// `1 / (4 eps^2)` corrections occur.
pub fn build_multiaccurate(fam: &Family, g: &BoundedFn, d: &Dist, eps: f64) -> Result<Predictor> {
    validate_inputs(fam, g, d)?;
    let mean = d.expect(g)?;
    let run = run_engine(
        fam,
        d,
        &[g.values().to_vec()],
        vec![vec![mean; d.len()]],
        eps,
        Selection::First,
        Scope::Global,
    )?;
    predictor_from_run(run)
}

/// Builds a predictor with `mcoa_error <= eps`, starting from the constant `E_d[g]`.
pub fn build_mcoa(fam: &Family, g: &BoundedFn, d: &Dist, eps: f64) -> Result<Predictor> {
    validate_inputs(fam, g, d)?;
    let mean = d.expect(g)?;
    continue_mcoa(fam, g, d, eps, vec![mean; d.len()])
}

fn continue_mcoa(fam: &Family, g: &BoundedFn, d: &Dist, eps: f64, init: Vec<f64>) -> Result<Predictor> {
    let run = run_engine(
        fam,
        d,
        &[g.values().to_vec()],
        vec![init],
        eps,
        Selection::First,
        Scope::LevelSets,
    )?;
    predictor_from_run(run)
}

/// The rounding grid `{0, lambda/2, 3 lambda/2, ..., n lambda/2, 1}` with `n`
/// the largest odd integer below `2 / lambda`.
pub fn lambda_grid(lambda: f64) -> Result<Vec<f64>> {
    if !(lambda > 0.0 && lambda < 2.0) {
        return Err(Error::Invalid(format!("grid width {lambda} outside (0, 2)")));
    }
    let r = 2.0 / lambda;
    let mut n = if (r - r.round()).abs() < 1e-9 { r.round() as i64 - 1 } else { r.floor() as i64 };
    if n % 2 == 0 {
        n -= 1;
    }
    let mut grid = vec![0.0];
    let mut j = 1;
    while j <= n {
        grid.push(j as f64 * lambda / 2.0);
        j += 2;
    }
    grid.push(1.0);
    Ok(grid)
}

/// Nearest grid value; exact ties go to the larger value.
pub fn lambda_round(grid: &[f64], v: f64) -> f64 {
    let mut best = grid[0];
    let mut best_dist = (v - best).abs();
    for &c in &grid[1..] {
        let dist = (v - c).abs();
        if dist < best_dist - IDENTITY_TOL || (dist - best_dist).abs() <= IDENTITY_TOL {
            best = c;
            best_dist = dist;
        }
    }
    best
}

/// Rounds every value of `h` to the grid of width `lambda`.
pub fn lambda_discretize(h: &Predictor, lambda: f64) -> Result<Predictor> {
    let grid = lambda_grid(lambda)?;
    let table = BoundedFn::new(h.table.values().iter().map(|&v| lambda_round(&grid, v)).collect())?;
    let mut out = Predictor::new(table);
    out.ledger = h.ledger;
    out.ledger.post_ops += h.table.len() as u64;
    out.potential = h.potential.clone();
    out.drops = h.drops.clone();
    Ok(out)
}

/// Verification record for an approximately multicalibrated partition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub eps: f64,
    pub gamma: f64,
    /// `violations[piece][member] = |E_{d|P}[f (g - v_P)]|`; zero-mass pieces hold zeros.
    pub violations: Vec<Vec<f64>>,
    /// Pieces with mass at least `gamma`, the ones the guarantee covers.
    pub qualifying: Vec<bool>,
    pub max_violation: f64,
    /// `(piece, member)` attaining `max_violation`.
    pub worst: Option<(usize, usize)>,
    pub checked: usize,
    pub skipped: usize,
    pub piece_bound: f64,
    pub within_piece_bound: bool,
    pub pass: bool,
    /// Corrections made by the builder (zero for a stand-alone verification).
    pub iterations: usize,
    /// Largest conditional violation on level sets of mass at least `gamma`
    /// right after the on-average phase, measured against the predictor itself.
    pub level_set_violation: Option<f64>,
    pub potential: Vec<f64>,
    pub drops: Vec<f64>,
}

/// Upper bound on the piece count of a partition built with accuracy `eps`.
pub fn piece_bound(eps: f64) -> f64 {
    4.0 / eps + 2.0
}

/// Largest conditional violation `|E_{d|h=v}[f (g - h)]|` over level sets of mass at least `gamma`.
fn level_set_violation(fam: &Family, g: &BoundedFn, h: &BoundedFn, d: &Dist, gamma: f64) -> f64 {
    let (_, sets) = level_sets(&[h.values().to_vec()], d.len());
    let mut worst: f64 = 0.0;
    for set in &sets {
        let eta: f64 = set.iter().map(|&x| d.prob(x)).sum();
        if eta < gamma || eta <= 0.0 {
            continue;
        }
        for f in fam.iter() {
            let a: f64 = set.iter().map(|&x| d.prob(x) * f.table.get(x) * (g.get(x) - h.get(x))).sum();
            worst = worst.max(a.abs() / eta);
        }
    }
    worst
}

/// Rounds of on-average correction plus discretization attempted before giving up.
const DISCRETIZE_ROUNDS: usize = 3;

/// Builds a partition whose pieces of mass at least `gamma` are
/// `eps`-multicalibrated: `|E_{d|P}[f (g - v_P)]| <= eps` for all members.
///
/// Runs on-average calibration at `eps * gamma / 2`, rounds to the grid of
/// width `eps / 2`, and takes the level sets as pieces. The returned
/// predictor takes the value `v_P` on piece `P`.
pub fn build_approx_mc_partition(
    fam: &Family,
    g: &BoundedFn,
    d: &Dist,
    eps: f64,
    gamma: f64,
) -> Result<(Partition, McReport, Predictor)> {
    validate_inputs(fam, g, d)?;
    if !(eps > 0.0 && eps < 1.0) || !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::Invalid(format!("need 0 < eps < 1 and 0 < gamma <= 1, got {eps}, {gamma}")));
    }
    let mcoa_eps = eps * gamma / 2.0;
    let lambda = eps / 2.0;
    let mut pred = build_mcoa(fam, g, d, mcoa_eps)?;
    let reparam = level_set_violation(fam, g, &pred.table, d, gamma);
    let mut potential = pred.potential.clone();
    let mut drops = pred.drops.clone();
    let mut ledger = pred.ledger;
    let mut round = 0;
    loop {
        let disc = lambda_discretize(&pred, lambda)?;
        ledger.post_ops += d.len() as u64;
        let (assign, sets) = level_sets(&[disc.table.values().to_vec()], d.len());
        let mut partition = Partition::new(assign, sets.len(), g, d)?;
        let mut report = verify_approx_mc(&partition, fam, g, d, eps, gamma)?;
        round += 1;
        if report.pass || round >= DISCRETIZE_ROUNDS {
            ledger.pieces = partition.k as u64;
            ledger.post_ops += partition.k as u64;
            partition.ledger = ledger;
            report.iterations = drops.len();
            report.level_set_violation = Some(reparam);
            report.potential = potential;
            report.drops = drops;
            let values: Vec<f64> = partition.stats.iter().map(|s| s.v).collect();
            let mut snapped = Predictor::new(partition.piecewise(&values)?);
            snapped.ledger = ledger;
            return Ok((partition, report, snapped));
        }
        let next = continue_mcoa(fam, g, d, mcoa_eps, disc.table.values().to_vec())?;
        potential.extend_from_slice(&next.potential);
        drops.extend_from_slice(&next.drops);
        ledger.absorb(&next.ledger);
        pred = next;
    }
}
