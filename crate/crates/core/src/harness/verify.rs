//! Re-checks a stored report from its instance tables and artifacts alone.
//!
//! Nothing here calls a builder or trusts a stored statistic: piece masses,
//! means, violations, densities and advantages are recomputed from the raw
//! tables with local arithmetic. Malformed artifacts produce failing checks,
//! never panics.

use super::config::{Instance, Pipeline};
use super::report::{Check, Relation, RunReport};
use crate::dmt::DmtPp;
use crate::domain::Family;
use crate::ihcl::{GluedHardcore, HardcorePiece, InclusionRule};
use crate::mc::McReport;
use crate::pame::PameWitness;
use crate::partition::Partition;

const TOL: f64 = 1e-9;
const EXACT: f64 = 1e-12;
/// Constant allowed in front of `eps` in the recovery bounds.
pub const RECOVERY_CONSTANT: f64 = 3.0;
/// Band around the claimed density within which a sampled set counts as on target.
pub const SET_DENSITY_BAND: f64 = 0.15;
/// Fraction of sampled sets that must meet each set criterion.
pub const SET_PASS_FRACTION: f64 = 0.9;

#[derive(Default)]
struct Checks(Vec<Check>);

impl Checks {
    fn le(&mut self, id: &str, subject: impl Into<String>, lhs: f64, rhs: f64, tol: f64) -> bool {
        self.push(Check::new(id, subject, lhs, Relation::Le, rhs, tol))
    }
    fn ge(&mut self, id: &str, subject: impl Into<String>, lhs: f64, rhs: f64, tol: f64) -> bool {
        self.push(Check::new(id, subject, lhs, Relation::Ge, rhs, tol))
    }
    fn eq(&mut self, id: &str, subject: impl Into<String>, lhs: f64, rhs: f64, tol: f64) -> bool {
        self.push(Check::new(id, subject, lhs, Relation::Eq, rhs, tol))
    }
    fn push(&mut self, c: Check) -> bool {
        let pass = c.pass;
        self.0.push(c);
        pass
    }
}

/// `|sum - 1|` plus any negative or non-finite mass.
fn defect(m: &[f64]) -> f64 {
    if m.iter().any(|v| !v.is_finite()) {
        return f64::INFINITY;
    }
    let neg: f64 = m.iter().filter(|&&v| v < 0.0).map(|v| -v).sum();
    (m.iter().sum::<f64>() - 1.0).abs() + neg
}

fn table_len_ok(fam: &Family, n: usize) -> bool {
    fam.domain_size() == n && fam.iter().all(|f| f.table.len() == n)
}

/// Points of each piece, or `None` when the assignment is malformed.
fn buckets(c: &mut Checks, p: &Partition, n: usize) -> Option<Vec<Vec<usize>>> {
    let bad_ids = p.assign.iter().filter(|&&q| q >= p.k).count();
    let shape = p.assign.len().abs_diff(n) + p.stats.len().abs_diff(p.k);
    let ok = c.eq("partition.assign", format!("k = {}", p.k), (bad_ids + shape) as f64, 0.0, 0.0);
    if !ok {
        return None;
    }
    let mut out = vec![Vec::new(); p.k];
    for (x, &q) in p.assign.iter().enumerate() {
        out[q].push(x);
    }
    Some(out)
}

/// Recomputed per-piece `(eta, label means)` under weights `w` and label rows `rows`.
fn piece_means(pieces: &[Vec<usize>], w: &[f64], rows: &[Vec<f64>]) -> Vec<(f64, Vec<f64>)> {
    let labels = rows.first().map_or(0, Vec::len);
    pieces
        .iter()
        .map(|xs| {
            let eta: f64 = xs.iter().map(|&x| w[x]).sum();
            let mut means = vec![0.0; labels];
            if eta > 0.0 {
                for &x in xs {
                    for (m, r) in means.iter_mut().zip(&rows[x]) {
                        *m += w[x] * r;
                    }
                }
                means.iter_mut().for_each(|m| *m /= eta);
            }
            (eta, means)
        })
        .collect()
}

/// Stored piece statistics against the recomputed ones.
fn check_stats(c: &mut Checks, p: &Partition, means: &[(f64, Vec<f64>)]) {
    let mut eta_err: f64 = 0.0;
    let mut v_err: f64 = 0.0;
    let mut worst_v = 0;
    for (q, (s, (eta, m))) in p.stats.iter().zip(means).enumerate() {
        eta_err = eta_err.max((s.eta - eta).abs());
        if *eta > 0.0 {
            let top = m.iter().copied().fold(0.0, f64::max);
            let v = m.get(1).copied().unwrap_or(f64::NAN);
            let err = (s.v - v).abs().max((s.m - top).abs()).max((s.b - (1.0 - top)).abs());
            if !(err <= v_err) {
                v_err = err;
                worst_v = q;
            }
        }
    }
    c.eq("partition.stats.eta", "all pieces", eta_err, 0.0, TOL);
    c.eq("partition.stats.v", format!("piece {worst_v}"), v_err, 0.0, TOL);
    let stored: f64 = p.stats.iter().map(|s| s.eta).sum();
    c.eq("partition.mass", "sum of eta", stored, 1.0, TOL);
}

/// Largest `|E_{w|P}[f (t - mean_P)]|` over pieces of mass at least `gamma`,
/// members `0..members` read through `val`, and label columns of `rows`.
fn max_violation(
    pieces: &[Vec<usize>],
    means: &[(f64, Vec<f64>)],
    w: &[f64],
    rows: &[Vec<f64>],
    members: usize,
    val: impl Fn(usize, usize) -> f64,
    gamma: f64,
    labels_used: &[usize],
) -> (f64, String) {
    let mut worst: f64 = 0.0;
    let mut at = String::from("none");
    for (q, (xs, (eta, m))) in pieces.iter().zip(means).enumerate() {
        if !(*eta >= gamma) || *eta <= 0.0 {
            continue;
        }
        for fi in 0..members {
            for &y in labels_used {
                let acc: f64 = xs.iter().map(|&x| w[x] * val(fi, x) * (rows[x][y] - m[y])).sum();
                let viol = (acc / eta).abs();
                if !(viol <= worst) {
                    worst = viol;
                    at = format!("piece {q}, member {fi}, label {y}");
                }
            }
        }
    }
    (worst, at)
}

fn check_mc_report(c: &mut Checks, stored: &McReport, recomputed: f64, k: usize, eps: f64) {
    c.le("mc.piece_count", "pieces", k as f64, 4.0 / eps + 2.0, 0.0);
    c.eq("mc.reported", "max_violation", stored.max_violation, recomputed, TOL);
}

fn bool_rows(g: &[f64]) -> Vec<Vec<f64>> {
    g.iter().map(|&v| vec![1.0 - v, v]).collect()
}

fn agreement(h: &[f64], g: &[f64], f: &[f64]) -> f64 {
    h.iter().zip(g).zip(f).map(|((w, gv), fv)| w * (fv * gv + (1.0 - fv) * (1.0 - gv))).sum()
}

fn max_family_agreement(fam: &Family, g: &[f64], h: &[f64]) -> f64 {
    fam.iter().map(|f| agreement(h, g, f.table.values())).fold(0.0, f64::max)
}

/// Largest `rho` with `rho h <= d` pointwise; `0` when `h` charges a point `d` does not.
fn density(h: &[f64], d: &[f64]) -> f64 {
    let mut rho = f64::INFINITY;
    for (&hv, &dv) in h.iter().zip(d) {
        if hv > 0.0 {
            rho = rho.min(dv / hv);
        }
    }
    rho
}

struct Ctx<'a> {
    inst: &'a Instance,
    d: &'a [f64],
    eps: f64,
    gamma: f64,
    delta: f64,
    tau: f64,
}

pub fn verify_all(r: &RunReport) -> Vec<Check> {
    let mut c = Checks::default();
    let Some(inst) = &r.instance else {
        c.eq("instance.present", "instance", 0.0, 1.0, 0.0);
        return c.0;
    };
    let pipeline = if r.pipeline == Pipeline::Verify { r.config.pipeline } else { r.pipeline };
    if !check_instance(&mut c, inst) {
        return c.0;
    }
    let p = &r.config.params;
    let ctx = Ctx {
        inst,
        d: inst.dist.masses(),
        eps: p.eps,
        gamma: p.gamma.unwrap_or(f64::NAN),
        delta: p.delta.unwrap_or(f64::NAN),
        tau: p.tau.unwrap_or(f64::NAN),
    };
    let a = &r.artifacts;
    let before = c.0.len();
    if let Some(pred) = &a.ma {
        check_ma(&mut c, &ctx, pred.table.values(), &pred.drops);
    }
    if let Some(m) = &a.mc {
        check_binary_mc(&mut c, &ctx, &m.partition, &m.report, ctx.eps, ctx.gamma);
        check_drops(&mut c, &m.report.drops, ctx.eps * ctx.gamma / 2.0);
    }
    if let Some(h) = &a.hardcore {
        if let Some(pieces) = check_binary_mc(&mut c, &ctx, &h.partition, &h.report, ctx.eps, ctx.gamma) {
            check_hardcore_pieces(&mut c, &ctx, &h.partition, &pieces, &h.pieces, ctx.eps);
        }
        if let Some(glued) = &h.glued {
            let bound = 0.5 + ctx.eps / (2.0 * ctx.tau * (1.0 - ctx.tau));
            check_glued(&mut c, &ctx, glued, glued.density_claim, bound);
        }
    }
    if let Some(rec) = &a.ihcl {
        let eps_pp = ctx.eps * ctx.eps * ctx.delta;
        let gamma = ctx.eps * eps_pp;
        if let Some(pieces) = check_binary_mc(&mut c, &ctx, &rec.partition, &rec.mc, eps_pp, gamma) {
            check_hardcore_pieces(&mut c, &ctx, &rec.partition, &pieces, &rec.pieces, eps_pp);
        }
        let density_bound = 2.0 * ctx.delta * (1.0 - RECOVERY_CONSTANT * ctx.eps);
        check_glued(&mut c, &ctx, &rec.glued, density_bound, 0.5 + RECOVERY_CONSTANT * ctx.eps);
        if !a.sets.is_empty() {
            check_sets(&mut c, &ctx, &rec.glued, &a.sets, r.config.params.inclusion_rule);
        }
    }
    if let Some(pp) = &a.pame {
        check_pame_pp(&mut c, &ctx, &pp.partition, &pp.witnesses, ctx.eps, ctx.gamma);
    }
    if let Some(rec) = &a.pame_recovery {
        let gamma = ctx.eps * ctx.eps * ctx.eps * ctx.delta;
        check_pame_pp(&mut c, &ctx, &rec.pp.partition, &rec.pp.witnesses, ctx.eps, gamma);
        let target = -(1.0 - ctx.delta).log2();
        check_pame_witness(
            &mut c,
            &ctx,
            "pame.global",
            &rec.witness,
            target - RECOVERY_CONSTANT * ctx.eps,
            RECOVERY_CONSTANT * ctx.eps,
        );
    }
    if let Some(pp) = &a.dmt {
        check_dmt_pp(&mut c, &ctx, pp, ctx.eps, ctx.gamma);
    }
    if let Some(rec) = &a.dmt_recovery {
        let eps_pp = ctx.eps * ctx.eps * ctx.delta;
        let gamma = ctx.eps * eps_pp;
        if let Some(pieces) = check_dmt_pp(&mut c, &ctx, &rec.pp, eps_pp, gamma) {
            check_dmt_model(&mut c, &ctx, &rec.pp.partition, &pieces, rec.model.masses(), rec.rescaled, eps_pp);
        }
    }
    if c.0.len() == before {
        c.eq("artifacts.present", pipeline.name(), 0.0, 1.0, 0.0);
    }
    c.0
}

fn check_instance(c: &mut Checks, inst: &Instance) -> bool {
    let n = inst.domain.size;
    let mut bad = inst.dist.len().abs_diff(n);
    let mut family_points = n;
    if let Some(g) = &inst.target {
        bad += g.len().abs_diff(n);
    }
    if let Some(j) = &inst.joint {
        let l = j.labels;
        bad += j.cond.len().abs_diff(n) + j.marg.len().abs_diff(n) + usize::from(l < 2);
        bad += j.cond.iter().filter(|row| row.len() != l).count();
        family_points = n * l;
    }
    if let Some(s) = &inst.sdist {
        bad += s.len().abs_diff(n);
    }
    if inst.target.is_none() && inst.joint.is_none() && inst.sdist.is_none() {
        bad += 1;
    }
    bad += usize::from(!table_len_ok(&inst.family, family_points));
    if !c.eq("instance.shape", "table lengths", bad as f64, 0.0, 0.0) {
        return false;
    }
    c.eq("instance.dist.normalization", "base distribution", defect(inst.dist.masses()), 0.0, TOL);
    if let Some(s) = &inst.sdist {
        c.eq("instance.dist.normalization", "S distribution", defect(s.masses()), 0.0, TOL);
    }
    if let Some(j) = &inst.joint {
        let worst = j.cond.iter().map(|row| defect(row)).fold(0.0, f64::max);
        c.eq("instance.joint.rows", "conditional rows", worst, 0.0, TOL);
    }
    true
}

/// The table an artifact needs, or a failing check naming what is missing.
fn need<'a, T>(c: &mut Checks, table: Option<&'a T>, what: &str) -> Option<&'a T> {
    if table.is_none() {
        c.eq("instance.shape", format!("missing {what}"), 1.0, 0.0, 0.0);
    }
    table
}

fn check_drops(c: &mut Checks, drops: &[f64], step: f64) {
    if let Some(min) = drops.iter().copied().reduce(f64::min) {
        c.ge("mc.potential_drop", format!("{} corrections", drops.len()), min, step * step, 0.0);
    }
}

fn check_ma(c: &mut Checks, ctx: &Ctx, h: &[f64], drops: &[f64]) {
    let Some(g) = need(c, ctx.inst.target.as_ref(), "target") else { return };
    let g = g.values();
    if !c.eq("ma.shape", "predictor length", h.len().abs_diff(g.len()) as f64, 0.0, 0.0) {
        return;
    }
    let mut worst: f64 = 0.0;
    for f in ctx.inst.family.iter() {
        let t = f.table.values();
        let a: f64 = (0..g.len()).map(|x| ctx.d[x] * t[x] * (g[x] - h[x])).sum();
        worst = worst.max(a.abs());
    }
    c.le("ma.violation", "all members", worst, ctx.eps, EXACT);
    if let Some(min) = drops.iter().copied().reduce(f64::min) {
        c.ge("ma.potential_drop", format!("{} corrections", drops.len()), min, ctx.eps * ctx.eps, 0.0);
    }
}

fn check_binary_mc(
    c: &mut Checks,
    ctx: &Ctx,
    p: &Partition,
    report: &McReport,
    eps: f64,
    gamma: f64,
) -> Option<Vec<Vec<usize>>> {
    let g = need(c, ctx.inst.target.as_ref(), "target")?.values();
    let pieces = buckets(c, p, g.len())?;
    let rows = bool_rows(g);
    let means = piece_means(&pieces, ctx.d, &rows);
    check_stats(c, p, &means);
    let fam = &ctx.inst.family;
    let (worst, at) =
        max_violation(&pieces, &means, ctx.d, &rows, fam.len(), |i, x| fam.members()[i].table.get(x), gamma, &[1]);
    c.le("mc.violation", at, worst, eps, EXACT);
    check_mc_report(c, report, worst, p.k, eps);
    Some(pieces)
}

fn check_hardcore_pieces(
    c: &mut Checks,
    ctx: &Ctx,
    p: &Partition,
    pieces: &[Vec<usize>],
    hard: &[HardcorePiece],
    eps: f64,
) {
    let Some(g) = need(c, ctx.inst.target.as_ref(), "target") else { return };
    let g = g.values();
    let n = g.len();
    for hp in hard {
        let subject = format!("piece {}", hp.piece_id);
        if !c.eq("hardcore.piece_id", subject.clone(), (hp.piece_id >= p.k) as u8 as f64, 0.0, 0.0) {
            continue;
        }
        let Some(h) = &hp.h else { continue };
        let h = h.masses();
        if !c.eq("hardcore.shape", subject.clone(), h.len().abs_diff(n) as f64, 0.0, 0.0) {
            continue;
        }
        let xs = &pieces[hp.piece_id];
        let eta: f64 = xs.iter().map(|&x| ctx.d[x]).sum();
        let v = xs.iter().map(|&x| ctx.d[x] * g[x]).sum::<f64>() / eta;
        let b = v.min(1.0 - v);
        let mut inside = vec![false; n];
        xs.iter().for_each(|&x| inside[x] = true);

        c.eq("hardcore.normalization", subject.clone(), defect(h), 0.0, TOL);
        let stray: f64 = (0..n).filter(|&x| !inside[x] || ctx.d[x] <= 0.0).map(|x| h[x].abs()).sum();
        c.le("hardcore.support", subject.clone(), stray, 0.0, EXACT);
        let mean: f64 = h.iter().zip(g).map(|(w, gv)| w * gv).sum();
        c.eq("hardcore.balance", subject.clone(), mean, 0.5, TOL);
        let excess = xs.iter().map(|&x| 2.0 * b * h[x] - ctx.d[x] / eta).fold(f64::NEG_INFINITY, f64::max);
        c.le("hardcore.density", subject.clone(), excess, 0.0, TOL);
        let agree = max_family_agreement(&ctx.inst.family, g, h);
        c.le("hardcore.agreement", subject.clone(), agree, 0.5 + eps / (2.0 * v * (1.0 - v)), TOL);
        if let Some(stored) = hp.max_agreement {
            c.eq("hardcore.agreement.reported", subject.clone(), stored, agree, TOL);
        }
        c.eq("hardcore.eps", subject, hp.eps_p, eps / (2.0 * b * (1.0 - b)), TOL);
    }
}

fn check_glued(c: &mut Checks, ctx: &Ctx, glued: &GluedHardcore, density_bound: f64, agreement_bound: f64) {
    let Some(g) = need(c, ctx.inst.target.as_ref(), "target") else { return };
    let g = g.values();
    let h = glued.h.masses();
    if !c.eq("glued.shape", "glued", h.len().abs_diff(g.len()) as f64, 0.0, 0.0) {
        return;
    }
    c.eq("glued.normalization", "glued", defect(h), 0.0, TOL);
    let rho = density(h, ctx.d);
    c.ge("glued.density", "glued", rho, density_bound, TOL);
    c.eq("glued.density.reported", "glued", glued.density_measured, rho, TOL);
    let agree = max_family_agreement(&ctx.inst.family, g, h);
    c.le("glued.agreement", "glued", agree, agreement_bound, TOL);
    if let Some(stored) = glued.max_agreement {
        c.eq("glued.agreement.reported", "glued", stored, agree, TOL);
    }
}

fn check_sets(c: &mut Checks, ctx: &Ctx, glued: &GluedHardcore, sets: &[crate::ihcl::HardcoreSet], rule: InclusionRule) {
    let Some(g) = need(c, ctx.inst.target.as_ref(), "target") else { return };
    let g = g.values();
    let n = g.len();
    let h = glued.h.masses();
    let top = h.iter().copied().fold(0.0, f64::max);
    let claim = h
        .iter()
        .map(|&m| match rule {
            InclusionRule::RelativeToMax => m / top,
            InclusionRule::Direct => m.min(1.0),
        })
        .sum::<f64>()
        / n as f64;
    let fam_bound = n as f64 * (ctx.eps * ctx.delta).powi(2);
    c.le("set.family_size", "log2 |F|", (ctx.inst.family.len() as f64).log2(), fam_bound, 0.0);
    let (mut dense_ok, mut hard_ok) = (0usize, 0usize);
    for (i, s) in sets.iter().enumerate() {
        let mut seen = vec![false; n];
        let valid = s.members.iter().all(|&x| x < n && !std::mem::replace(&mut seen[x], true));
        if !c.eq("set.members", format!("set {i}"), (!valid || s.members.is_empty()) as u8 as f64, 0.0, 0.0) {
            continue;
        }
        let dens = s.members.len() as f64 / n as f64;
        dense_ok += usize::from((dens - claim).abs() <= SET_DENSITY_BAND);
        let w = 1.0 / s.members.len() as f64;
        let mut on_set = vec![0.0; n];
        s.members.iter().for_each(|&x| on_set[x] = w);
        hard_ok += usize::from(max_family_agreement(&ctx.inst.family, g, &on_set) <= 0.5 + 4.0 * ctx.eps);
    }
    let total = sets.len() as f64;
    c.ge("set.density", format!("{dense_ok}/{} sets", sets.len()), dense_ok as f64 / total, SET_PASS_FRACTION, 0.0);
    c.ge("set.agreement", format!("{hard_ok}/{} sets", sets.len()), hard_ok as f64 / total, SET_PASS_FRACTION, 0.0);
}

fn avg_min_entropy(cond: &[Vec<f64>], marg: &[f64]) -> f64 {
    let guess: f64 = cond.iter().zip(marg).map(|(row, w)| w * row.iter().copied().fold(0.0, f64::max)).sum();
    -guess.log2()
}

fn check_pame_pp(c: &mut Checks, ctx: &Ctx, p: &Partition, witnesses: &[PameWitness], eps: f64, gamma: f64) {
    let Some(j) = need(c, ctx.inst.joint.as_ref(), "labelled target") else { return };
    let (n, l) = (j.len(), j.labels);
    let w = j.marg.masses();
    let Some(pieces) = buckets(c, p, n) else { return };
    let means = piece_means(&pieces, w, &j.cond);
    check_stats(c, p, &means);
    let fam = &ctx.inst.family;
    let labels: Vec<usize> = (0..l).collect();
    let (worst, at) =
        max_violation(&pieces, &means, w, &j.cond, fam.len() * l, |i, x| fam.members()[i / l].table.get(x * l + i % l), gamma, &labels);
    c.le("pame.mc.violation", at, worst, eps / l as f64, EXACT);

    for wit in witnesses {
        let Some(q) = wit.piece_id else {
            c.eq("pame.piece_id", "global witness in piece list", 1.0, 0.0, 0.0);
            continue;
        };
        let subject = format!("piece {q}");
        if !c.eq("pame.piece_id", subject.clone(), (q >= p.k) as u8 as f64, 0.0, 0.0) {
            continue;
        }
        let (eta, m) = &means[q];
        let mut expect = vec![0.0; n];
        if *eta > 0.0 {
            pieces[q].iter().for_each(|&x| expect[x] = w[x] / eta);
        }
        let marg_err = [wit.marg.masses(), wit.reference_marg.masses()]
            .iter()
            .map(|mm| if mm.len() != n { f64::INFINITY } else { mm.iter().zip(&expect).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) })
            .fold(0.0, f64::max);
        c.eq("pame.marg", subject.clone(), marg_err, 0.0, TOL);
        let top = m.iter().copied().fold(0.0, f64::max);
        if let Some(ame) = check_pame_witness(c, ctx, "pame", wit, f64::NEG_INFINITY, eps) {
            c.eq("pame.ame.piece", subject, ame, -top.log2(), EXACT);
        }
    }
}

/// Shared witness checks; returns the recomputed average min-entropy.
fn check_pame_witness(
    c: &mut Checks,
    ctx: &Ctx,
    prefix: &str,
    wit: &PameWitness,
    ame_floor: f64,
    adv_bound: f64,
) -> Option<f64> {
    let j = need(c, ctx.inst.joint.as_ref(), "labelled target")?;
    let (n, l) = (j.len(), j.labels);
    let subject = wit.piece_id.map_or("global".to_string(), |q| format!("piece {q}"));
    let shape = wit.cond_c.len().abs_diff(n)
        + wit.cond_c.iter().filter(|r| r.len() != l).count()
        + wit.marg.len().abs_diff(n)
        + wit.reference_marg.len().abs_diff(n);
    if !c.eq(&format!("{prefix}.shape"), subject.clone(), shape as f64, 0.0, 0.0) {
        return None;
    }
    let rows = wit.cond_c.iter().map(|r| defect(r)).fold(0.0, f64::max);
    c.eq(&format!("{prefix}.rows"), subject.clone(), rows, 0.0, TOL);
    let (pc, pb) = (wit.marg.masses(), wit.reference_marg.masses());
    let ame = avg_min_entropy(&wit.cond_c, pc);
    c.eq(&format!("{prefix}.ame"), subject.clone(), wit.measured_ame, ame, EXACT);
    if ame_floor.is_finite() {
        c.ge(&format!("{prefix}.ame.bound"), subject.clone(), ame, ame_floor, TOL);
    }
    let mut adv: f64 = 0.0;
    for f in ctx.inst.family.iter() {
        let t = f.table.values();
        let mut diff = 0.0;
        for x in 0..n {
            for y in 0..l {
                diff += t[x * l + y] * (pb[x] * j.cond[x][y] - pc[x] * wit.cond_c[x][y]);
            }
        }
        adv = adv.max(diff.abs());
    }
    c.le(&format!("{prefix}.advantage"), subject.clone(), adv, adv_bound, TOL);
    c.eq(&format!("{prefix}.advantage.reported"), subject, wit.measured_advantage, adv, TOL);
    Some(ame)
}

/// The augmented two-sided instance: `S` on `2x + 1`, `V` on `2x`.
fn union_tables(s: &[f64], ctx: &Ctx) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let v = ctx.d;
    let n = v.len();
    let mut s2 = vec![0.0; 2 * n];
    let mut v2 = vec![0.0; 2 * n];
    for x in 0..n {
        s2[2 * x + 1] = s[x];
        v2[2 * x] = v[x];
    }
    let mix = s2.iter().zip(&v2).map(|(a, b)| 0.5 * (a + b)).collect();
    (s2, v2, mix)
}

fn check_dmt_pp(c: &mut Checks, ctx: &Ctx, pp: &DmtPp, eps: f64, gamma: f64) -> Option<Vec<Vec<usize>>> {
    let s = need(c, ctx.inst.sdist.as_ref(), "S distribution")?.masses();
    let (s2, v2, mix) = union_tables(s, ctx);
    let n2 = mix.len();
    let p = &pp.partition;
    let pieces = buckets(c, p, n2)?;
    let side: Vec<f64> = (0..n2).map(|i| (i % 2) as f64).collect();
    let rows = bool_rows(&side);
    let means = piece_means(&pieces, &mix, &rows);
    check_stats(c, p, &means);
    let fam = &ctx.inst.family;
    let (worst, at) =
        max_violation(&pieces, &means, &mix, &rows, fam.len(), |i, x| fam.members()[i].table.get(x / 2), gamma, &[1]);
    c.le("mc.violation", at, worst, eps, EXACT);
    check_mc_report(c, &pp.report, worst, p.k, eps);

    for dp in &pp.pieces {
        let subject = format!("piece {}", dp.piece_id);
        if !c.eq("dmt.piece_id", subject.clone(), (dp.piece_id >= p.k) as u8 as f64, 0.0, 0.0) {
            continue;
        }
        let xs = &pieces[dp.piece_id];
        let eta = means[dp.piece_id].0;
        let pr_s: f64 = xs.iter().map(|&x| s2[x]).sum();
        let pr_v: f64 = xs.iter().map(|&x| v2[x]).sum();
        let v = pr_s / (2.0 * eta);
        c.eq("dmt.piece.v", subject.clone(), dp.v, v, TOL);
        let delta_err = (dp.delta_p - pr_v).abs().max((dp.delta_p - 2.0 * eta * (1.0 - v)).abs());
        c.eq("dmt.piece.delta", subject.clone(), delta_err, 0.0, TOL);
        if dp.s_p.len() != n2 || dp.v_p.len() != n2 || pr_s <= 0.0 || pr_v <= 0.0 {
            c.eq("dmt.piece.models", subject, 1.0, 0.0, 0.0);
            continue;
        }
        let cond = |full: &[f64], mass: f64| {
            let mut out = vec![0.0; n2];
            xs.iter().for_each(|&x| out[x] = full[x] / mass);
            out
        };
        let (sp, vp) = (cond(&s2, pr_s), cond(&v2, pr_v));
        let model_err = sp
            .iter()
            .zip(dp.s_p.masses())
            .chain(vp.iter().zip(dp.v_p.masses()))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        c.eq("dmt.piece.models", subject.clone(), model_err, 0.0, TOL);
        let mut adv: f64 = 0.0;
        for f in fam.iter() {
            let e: f64 = (0..n2).map(|x| f.table.get(x / 2) * (sp[x] - vp[x])).sum();
            adv = adv.max(e.abs());
        }
        c.le("dmt.piece.advantage", subject.clone(), adv, eps / (v * (1.0 - v)), TOL);
        c.eq("dmt.piece.advantage.reported", subject, dp.measured_advantage, adv, TOL);
    }
    Some(pieces)
}

fn check_dmt_model(
    c: &mut Checks,
    ctx: &Ctx,
    p: &Partition,
    pieces: &[Vec<usize>],
    mu: &[f64],
    rescaled: bool,
    eps_pp: f64,
) {
    let Some(s) = need(c, ctx.inst.sdist.as_ref(), "S distribution") else { return };
    let s = s.masses();
    let v = ctx.d;
    let n = v.len();
    if !c.eq("dmt.model.shape", "model", mu.len().abs_diff(n) as f64, 0.0, 0.0) {
        return;
    }
    c.eq("dmt.model.normalization", "model", defect(mu), 0.0, TOL);
    let stray: f64 = (0..n).filter(|&x| v[x] <= 0.0).map(|x| mu[x].abs()).sum();
    c.le("dmt.model.support", "mass off the V support", stray, 0.0, EXACT);
    c.ge("dmt.model.density", "model", density(mu, v), ctx.delta * (1.0 - RECOVERY_CONSTANT * ctx.eps), TOL);
    let mut adv: f64 = 0.0;
    for f in ctx.inst.family.iter() {
        let e: f64 = (0..n).map(|x| f.table.get(x) * (s[x] - mu[x])).sum();
        adv = adv.max(e.abs());
    }
    c.le("dmt.model.advantage", "model", adv, RECOVERY_CONSTANT * ctx.eps / ctx.delta, TOL);

    if rescaled {
        return;
    }
    let gamma = ctx.eps * eps_pp;
    let tau = ctx.eps * ctx.delta;
    let mut pr_s = vec![0.0; p.k];
    let mut pr_v = vec![0.0; p.k];
    for x in 0..n {
        pr_s[p.assign[2 * x + 1]] += s[x];
        pr_v[p.assign[2 * x]] += v[x];
    }
    let good: Vec<bool> = (0..pieces.len())
        .map(|q| {
            let eta = 0.5 * (pr_s[q] + pr_v[q]);
            let side_s = if eta > 0.0 { 0.5 * pr_s[q] / eta } else { 0.0 };
            eta >= gamma && side_s.min(1.0 - side_s) >= tau
        })
        .collect();
    let z: f64 = (0..p.k).filter(|&q| good[q]).map(|q| pr_s[q]).sum();
    let err = (0..n)
        .map(|x| {
            let q = p.assign[2 * x];
            let expect = if good[q] && pr_v[q] > 0.0 && z > 0.0 { pr_s[q] * v[x] / pr_v[q] / z } else { 0.0 };
            (mu[x] - expect).abs()
        })
        .fold(0.0, f64::max);
    c.eq("dmt.model.formula", "model", err, 0.0, TOL);
}
