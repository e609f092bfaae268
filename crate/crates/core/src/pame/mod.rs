//! Min-entropy measures, multiclass calibration, and pseudo-average
//! min-entropy witnesses.

mod entropy;
mod multiclass;

use serde::{Deserialize, Serialize};

pub use entropy::{argmax_predictor, avg_min_entropy, min_entropy, predictability, prediction_success, JointDist};
pub use multiclass::{multiclass_mc_partition, multiclass_stats, verify_multiclass, MulticlassReport};

use crate::bernoulli::yao_agreement;
use crate::domain::{close_family, BoundedFn, Dist, Family, NamedFn};
use crate::error::{check_len, Error, Result};
use crate::ihcl::{GoodPieceFilter, HardcoreSet};
use crate::partition::Partition;

/// A conditional law for `C` given `X`, claimed indistinguishable from `B` and of high average min-entropy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PameWitness {
    /// Piece the witness lives on; `None` for a global witness.
    pub piece_id: Option<usize>,
    /// `cond_c[x][y] = Pr[C = y | X = x]`.
    pub cond_c: Vec<Vec<f64>>,
    /// Law of `X` paired with `C`.
    pub marg: Dist,
    /// Law of `X` paired with `B` in the comparison.
    pub reference_marg: Dist,
    pub k_claim: f64,
    pub eps_claim: f64,
    pub measured_ame: f64,
    pub measured_advantage: f64,
}

/// Average min-entropy of the witness and its advantage against `(X, B)`
/// over a family on the product domain (indexed `x * L + y`).
pub fn measure_pame(w: &PameWitness, fam: &Family, j: &JointDist) -> Result<(f64, f64)> {
    let l = j.labels;
    check_len(j.len(), w.cond_c.len())?;
    check_len(j.len() * l, fam.domain_size())?;
    let ame = avg_min_entropy(&JointDist { labels: l, cond: w.cond_c.clone(), marg: w.marg.clone() });
    let mut adv: f64 = 0.0;
    for f in fam.iter() {
        let t = f.table.values();
        let mut diff = 0.0;
        for x in 0..j.len() {
            let (pb, pc) = (w.reference_marg.prob(x), w.marg.prob(x));
            for y in 0..l {
                diff += t[x * l + y] * (pb * j.cond[x][y] - pc * w.cond_c[x][y]);
            }
        }
        adv = adv.max(diff.abs());
    }
    Ok((ame, adv))
}

/// `f_y(x) = f(x, y)` for every member and label, closed.
pub fn induced_family(fam: &Family, labels: usize) -> Result<Family> {
    if !fam.domain_size().is_multiple_of(labels) {
        return Err(Error::Invalid("family domain is not a product with the label set".into()));
    }
    let n = fam.domain_size() / labels;
    let mut raw = Vec::with_capacity(fam.len() * labels);
    for f in fam.iter() {
        for y in 0..labels {
            let t = BoundedFn::new((0..n).map(|x| f.table.get(x * labels + y)).collect())?;
            raw.push(NamedFn::new(format!("{}@{y}", f.name), t));
        }
    }
    close_family(n, raw)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PamePp {
    pub partition: Partition,
    pub report: MulticlassReport,
    pub witnesses: Vec<PameWitness>,
    /// Per-label accuracy the partition was built to.
    pub label_eps: f64,
}

/// Constant-row witness `C_P = (v_{P,y})_y` on every piece of mass at least `gamma`.
pub fn pame_pp(fam: &Family, j: &JointDist, eps: f64, gamma: f64) -> Result<PamePp> {
    check_len(j.len() * j.labels, fam.domain_size())?;
    let induced = induced_family(fam, j.labels)?;
    let label_eps = eps / j.labels as f64;
    let (partition, report) = multiclass_mc_partition(&induced, j, label_eps, gamma)?;
    let values = &report.values;
    let mut witnesses = Vec::new();
    for (q, s) in partition.stats.iter().enumerate() {
        if s.degenerate || s.eta < gamma {
            continue;
        }
        let marg = j.marg.conditional(|x| partition.assign[x] == q)?;
        let mut w = PameWitness {
            piece_id: Some(q),
            cond_c: vec![values[q].clone(); j.len()],
            reference_marg: marg.clone(),
            marg,
            k_claim: -s.m.log2(),
            eps_claim: eps,
            measured_ame: f64::NAN,
            measured_advantage: f64::NAN,
        };
        (w.measured_ame, w.measured_advantage) = measure_pame(&w, fam, j)?;
        witnesses.push(w);
    }
    Ok(PamePp { partition, report, witnesses, label_eps })
}

/// Global witness from the good pieces: rows from each good piece, `X`
/// restricted to the good region.
pub fn glue_pame(
    p: &Partition,
    witnesses: &[PameWitness],
    j: &JointDist,
    filter: &GoodPieceFilter,
    fam: &Family,
) -> Result<PameWitness> {
    check_len(p.k, filter.flags.len())?;
    check_len(j.len(), p.len())?;
    let mut rows: Vec<Option<&Vec<f64>>> = vec![None; p.k];
    for w in witnesses {
        if let Some(q) = w.piece_id.filter(|&q| filter.is_good(q)) {
            let x = p.members(q).first().copied().ok_or(Error::EmptyEvent)?;
            rows[q] = Some(&w.cond_c[x]);
        }
    }
    let good = |x: usize| rows[p.assign[x]].is_some();
    let marg = j.marg.conditional(good).map_err(|_| Error::Degenerate("no good pieces to glue".into()))?;
    let uniform = vec![1.0 / j.labels as f64; j.labels];
    let cond_c = (0..j.len()).map(|x| rows[p.assign[x]].cloned().unwrap_or_else(|| uniform.clone())).collect();
    let skipped: f64 = j.marg.mass_where(|x| !good(x));
    let eps_piece = witnesses.iter().map(|w| w.eps_claim).fold(0.0, f64::max);
    let mut w = PameWitness {
        piece_id: None,
        cond_c,
        marg,
        reference_marg: j.marg.clone(),
        k_claim: 0.0,
        eps_claim: eps_piece + skipped,
        measured_ame: f64::NAN,
        measured_advantage: f64::NAN,
    };
    (w.measured_ame, w.measured_advantage) = measure_pame(&w, fam, j)?;
    w.k_claim = w.measured_ame;
    Ok(w)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PameRecovery {
    pub eps: f64,
    pub delta: f64,
    pub gamma: f64,
    pub tau: f64,
    pub pp: PamePp,
    pub filter: GoodPieceFilter,
    /// Success of the piecewise-argmax predictor, `E_P[m_P]`.
    pub argmax_success: f64,
    /// `E_P[m_P 1_G(P)]`.
    pub good_label_mass: f64,
    /// Hardness to predict against the induced family plus the piecewise argmax.
    pub augmented_hardness: f64,
    pub witness: PameWitness,
    /// `log2(1 / (1 - delta))`.
    pub entropy_target: f64,
    /// Smallest `c >= 0` with `ame >= target - c eps`.
    pub entropy_constant: f64,
    /// `advantage / eps`.
    pub advantage_constant: f64,
}

/// Global witness of average min-entropy close to `log2(1 / (1 - delta))` for a binary target.
pub fn recover_pame(fam: &Family, j: &JointDist, eps: f64, delta: f64) -> Result<PameRecovery> {
    if j.labels != 2 {
        return Err(Error::Invalid("recovery is defined for binary labels".into()));
    }
    if !(delta > 0.0 && delta <= 0.5) {
        return Err(Error::Invalid(format!("delta {delta} outside (0, 1/2]")));
    }
    let eps_inner = eps * eps * delta;
    let gamma = eps * eps_inner;
    let tau = eps * delta;
    let pp = pame_pp(fam, j, eps, gamma)?;
    let p = &pp.partition;
    let filter = GoodPieceFilter::by_label_mass(&p.stats, gamma, tau);

    let argmax: Vec<f64> =
        pp.report.values.iter().map(|row| if row[1] > row[0] { 1.0 } else { 0.0 }).collect();
    let argmax_fn = p.piecewise(&argmax)?;
    let target = BoundedFn::new(j.column(1))?;
    let induced = induced_family(fam, 2)?.augmented(vec![NamedFn::new("piece_argmax", argmax_fn.clone())])?;
    let mut best: f64 = 0.0;
    for f in induced.iter() {
        best = best.max(yao_agreement(&f.table, &target, &j.marg)?);
    }
    let augmented_hardness = 1.0 - best;
    if augmented_hardness < delta {
        return Err(Error::Precondition(format!(
            "labels are only {augmented_hardness:.6}-hard to predict, below the requested {delta}"
        )));
    }
    let argmax_success: f64 = p.stats.iter().map(|s| s.eta * s.m).sum();
    let good_label_mass: f64 =
        p.stats.iter().zip(&filter.flags).filter(|(_, &g)| g).map(|(s, _)| s.eta * s.m).sum();
    let witness = glue_pame(p, &pp.witnesses, j, &filter, fam)?;
    let entropy_target = -(1.0 - delta).log2();
    Ok(PameRecovery {
        entropy_constant: ((entropy_target - witness.measured_ame) / eps).max(0.0),
        advantage_constant: witness.measured_advantage / eps,
        eps,
        delta,
        gamma,
        tau,
        filter,
        argmax_success,
        good_label_mass,
        augmented_hardness,
        witness,
        entropy_target,
        pp,
    })
}

/// Witness from a hardcore distribution: at `x` the label is a fair coin with
/// probability `rho H(x) / d(x)` and `g(x)` otherwise, where `rho` is the
/// density of `H` in `d`.
pub fn hardcore_to_pame_witness(h: &Dist, g: &BoundedFn, d: &Dist, fam: &Family) -> Result<PameWitness> {
    check_len(d.len(), h.len())?;
    check_len(d.len(), g.len())?;
    if !g.is_boolean() {
        return Err(Error::Invalid("hardcore witness needs a boolean target".into()));
    }
    if (0..d.len()).any(|x| h.prob(x) > 0.0 && d.prob(x) <= 0.0) {
        return Err(Error::Invalid("hardcore distribution charges a point of zero base mass".into()));
    }
    let rho = h.density_in(d)?;
    let rows = (0..d.len())
        .map(|x| {
            let lam = if d.prob(x) > 0.0 { (rho * h.prob(x) / d.prob(x)).min(1.0) } else { 0.0 };
            let mut row = vec![lam / 2.0; 2];
            row[g.get(x) as usize] += 1.0 - lam;
            row
        })
        .collect();
    witness_against_target(rows, g, d, fam)
}

/// Set form: a fair coin on the set, `g(x)` off it.
pub fn hardcore_set_to_pame_witness(set: &HardcoreSet, g: &BoundedFn, d: &Dist, fam: &Family) -> Result<PameWitness> {
    check_len(set.domain_size, g.len())?;
    let mut inside = vec![false; set.domain_size];
    set.members.iter().for_each(|&x| inside[x] = true);
    let rows = (0..d.len())
        .map(|x| {
            if inside[x] {
                vec![0.5, 0.5]
            } else {
                let mut row = vec![0.0; 2];
                row[g.get(x) as usize] = 1.0;
                row
            }
        })
        .collect();
    witness_against_target(rows, g, d, fam)
}

fn witness_against_target(rows: Vec<Vec<f64>>, g: &BoundedFn, d: &Dist, fam: &Family) -> Result<PameWitness> {
    let j = JointDist::from_bernoulli(g, d.clone())?;
    let mut w = PameWitness {
        piece_id: None,
        cond_c: rows,
        marg: d.clone(),
        reference_marg: d.clone(),
        k_claim: 0.0,
        eps_claim: 0.0,
        measured_ame: f64::NAN,
        measured_advantage: f64::NAN,
    };
    (w.measured_ame, w.measured_advantage) = measure_pame(&w, fam, &j)?;
    w.k_claim = w.measured_ame;
    w.eps_claim = w.measured_advantage;
    Ok(w)
}
