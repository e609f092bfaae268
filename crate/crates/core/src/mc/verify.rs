//! Stand-alone check of the approximate multicalibration guarantee.
//!
//! Piece means and conditional expectations are recomputed here from the raw
//! tables; nothing is taken from the builder or from stored piece statistics.

use crate::domain::{BoundedFn, Dist, Family};
use crate::error::{check_len, Error, Result};
use crate::partition::Partition;

use super::{piece_bound, McReport};

pub fn verify_approx_mc(
    p: &Partition,
    fam: &Family,
    g: &BoundedFn,
    d: &Dist,
    eps: f64,
    gamma: f64,
) -> Result<McReport> {
    let n = p.assign.len();
    check_len(n, g.len())?;
    check_len(n, d.len())?;
    check_len(n, fam.domain_size())?;
    if p.assign.iter().any(|&q| q >= p.k) {
        return Err(Error::Invalid("piece id out of range".into()));
    }

    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); p.k];
    for (x, &q) in p.assign.iter().enumerate() {
        buckets[q].push(x);
    }
    let mut violations = vec![vec![0.0; fam.len()]; p.k];
    let mut qualifying = vec![false; p.k];
    let mut max_violation: f64 = 0.0;
    let mut worst = None;
    let mut checked = 0;
    for (q, xs) in buckets.iter().enumerate() {
        let mut eta = 0.0;
        let mut g_mass = 0.0;
        for &x in xs {
            let w = d.masses()[x];
            eta += w;
            g_mass += w * g.values()[x];
        }
        if eta <= 0.0 {
            continue;
        }
        let mean = g_mass / eta;
        qualifying[q] = eta >= gamma;
        for (fi, f) in fam.members().iter().enumerate() {
            let vals = f.table.values();
            let mut acc = 0.0;
            for &x in xs {
                acc += d.masses()[x] * vals[x] * (g.values()[x] - mean);
            }
            let viol = (acc / eta).abs();
            violations[q][fi] = viol;
            if qualifying[q] && viol > max_violation {
                max_violation = viol;
                worst = Some((q, fi));
            }
        }
        if qualifying[q] {
            checked += 1;
        }
    }
    let bound = piece_bound(eps);
    let within = p.k as f64 <= bound;
    Ok(McReport {
        eps,
        gamma,
        violations,
        qualifying,
        max_violation,
        worst,
        checked,
        skipped: p.k - checked,
        piece_bound: bound,
        within_piece_bound: within,
        pass: max_violation <= eps && within,
        iterations: 0,
        level_set_violation: None,
        potential: Vec::new(),
        drops: Vec::new(),
    })
}
