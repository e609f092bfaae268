//! Level-set-local boosting shared by the binary and multiclass builders.
//!
//! The predictor has one coordinate per target table. A correction picks a
//! member `f` and a coordinate `y`, then moves `h_y` along `f` on every level
//! set by the exact line-search step `a_v / sum_{X_v} d f^2`, where `a_v` is
//! that level set's unnormalized residual correlation. Each correction lowers
//! the squared-error potential by at least `(sum_v |a_v|)^2`.

use crate::domain::{ComplexityLedger, Dist, Family};
use crate::error::{Error, Result};

/// Hard ceiling on corrections, independent of the `4 * ceil(1 / eps^2)` cap.
pub const CORRECTION_CEILING: usize = 2_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Selection {
    /// Correct the first `(f, y)` above threshold in family-then-label order.
    First,
    /// Correct the largest violation.
    Worst,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Scope {
    /// Treat the whole domain as one level set (plain multiaccuracy).
    Global,
    /// Corrections are local to the level sets of the current predictor.
    LevelSets,
}

pub(crate) struct Run {
    pub h: Vec<Vec<f64>>,
    pub corrections: usize,
    pub potential: Vec<f64>,
    pub drops: Vec<f64>,
    pub ledger: ComplexityLedger,
}

pub(crate) fn correction_cap(eps: f64) -> usize {
    let c = 4.0 * (1.0 / (eps * eps)).ceil();
    if c.is_finite() && c < CORRECTION_CEILING as f64 {
        c as usize
    } else {
        CORRECTION_CEILING
    }
}

/// Groups points by the exact value of the predictor vector. Level ids follow
/// lexicographic order of the values.
pub(crate) fn level_sets(h: &[Vec<f64>], n: usize) -> (Vec<usize>, Vec<Vec<usize>>) {
    let mut order: Vec<usize> = (0..n).collect();
    let cmp = |a: &usize, b: &usize| {
        for coord in h {
            let o = coord[*a].total_cmp(&coord[*b]);
            if o != std::cmp::Ordering::Equal {
                return o;
            }
        }
        std::cmp::Ordering::Equal
    };
    order.sort_by(cmp);
    let mut assign = vec![0; n];
    let mut sets: Vec<Vec<usize>> = Vec::new();
    for (i, &x) in order.iter().enumerate() {
        if i == 0 || cmp(&order[i - 1], &x) != std::cmp::Ordering::Equal {
            sets.push(Vec::new());
        }
        assign[x] = sets.len() - 1;
        sets.last_mut().unwrap().push(x);
    }
    (assign, sets)
}

pub(crate) fn potential(targets: &[Vec<f64>], h: &[Vec<f64>], d: &Dist) -> f64 {
    let mut total = 0.0;
    for (t, hy) in targets.iter().zip(h) {
        for x in 0..d.len() {
            let r = t[x] - hy[x];
            total += d.prob(x) * r * r;
        }
    }
    total
}

fn residuals(
    f: &[f64],
    t: &[f64],
    hy: &[f64],
    d: &Dist,
    sets: &[Vec<usize>],
    out: &mut Vec<f64>,
) -> f64 {
    out.clear();
    let mut agg = 0.0;
    for set in sets {
        let a: f64 = set.iter().map(|&x| d.prob(x) * f[x] * (t[x] - hy[x])).sum();
        agg += a.abs();
        out.push(a);
    }
    agg
}

pub(crate) fn run(
    fam: &Family,
    d: &Dist,
    targets: &[Vec<f64>],
    init: Vec<Vec<f64>>,
    eps: f64,
    selection: Selection,
    scope: Scope,
) -> Result<Run> {
    if !(eps > 0.0) {
        return Err(Error::Invalid("accuracy parameter must be positive".into()));
    }
    let n = d.len();
    let cap = correction_cap(eps);
    let mut h = init;
    let mut ledger = ComplexityLedger::default();
    let mut pot = vec![potential(targets, &h, d)];
    let mut drops = Vec::new();
    let mut scratch = Vec::new();
    let mut best_a = Vec::new();
    loop {
        let (_, sets) = match scope {
            Scope::LevelSets => level_sets(&h, n),
            Scope::Global => (vec![0; n], vec![(0..n).collect()]),
        };
        let mut pick: Option<(usize, usize, f64)> = None;
        'scan: for (fi, f) in fam.iter().enumerate() {
            let fv = f.table.values();
            for (y, t) in targets.iter().enumerate() {
                let agg = residuals(fv, t, &h[y], d, &sets, &mut scratch);
                if agg > eps && pick.is_none_or(|(_, _, best)| agg > best) {
                    pick = Some((fi, y, agg));
                    std::mem::swap(&mut best_a, &mut scratch);
                    if selection == Selection::First {
                        break 'scan;
                    }
                }
            }
        }
        let Some((fi, y, agg)) = pick else {
            break;
        };
        if drops.len() >= cap {
            return Err(Error::Stalled { iterations: drops.len(), residual: agg });
        }
        let fv = fam.members()[fi].table.values();
        let t = &targets[y];
        let mut drop = 0.0;
        for (set, &a) in sets.iter().zip(&best_a) {
            if a == 0.0 {
                continue;
            }
            let denom: f64 = set.iter().map(|&x| d.prob(x) * fv[x] * fv[x]).sum();
            if denom <= 0.0 {
                continue;
            }
            let step = a / denom;
            for &x in set {
                if fv[x] == 0.0 {
                    continue;
                }
                let old = h[y][x];
                let new = (old + step * fv[x]).clamp(0.0, 1.0);
                drop += d.prob(x) * (new - old) * (2.0 * t[x] - old - new);
                h[y][x] = new;
            }
            ledger.post_ops += 3;
        }
        ledger.oracle_calls += 1;
        if drop < eps * eps * (1.0 - 1e-6) {
            return Err(Error::Degenerate(format!(
                "correction {} lowered the potential by {drop:e}, below eps^2 = {:e}",
                drops.len() + 1,
                eps * eps
            )));
        }
        drops.push(drop);
        pot.push(potential(targets, &h, d));
    }
    Ok(Run { h, corrections: drops.len(), potential: pot, drops, ledger })
}
