//! Acceptance suite: one line per criterion, `PASS` or `FAIL`.
//!
//! Criteria listed in `KNOWN_UNATTAINABLE` are run and reported like the
//! others but do not fail the target.

mod common;

use std::time::{Duration, Instant};

use rand::Rng;
use regkit::bernoulli::{
    boosted_minority_distribution, class_conditional_advantage, hardness_of, yao_agreement, yao_correlation_form,
};
use regkit::dmt::{dmt_pp, lift_family, recover_dmt, DmtInstance};
use regkit::harness::corrupt::CORRUPTIONS;
use regkit::harness::generate::{gen_dist, gen_target, stream_rng, DistSpec, TargetSpec, DIST_STREAM, TARGET_STREAM};
use regkit::harness::verify_all;
use regkit::ihcl::{recover_ihcl, sample_hardcore_set, verify_hardcore_set, InclusionRule};
use regkit::mc::{build_approx_mc_partition, ma_violation};
use regkit::pame::{avg_min_entropy, pame_pp, predictability, recover_pame, JointDist};
use regkit::{close_family, BoundedFn, Dist, Domain, NamedFn};

use common::*;

/// Criteria whose literal statement cannot hold; they still run and print.
const KNOWN_UNATTAINABLE: &[u32] = &[1];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn within(start: Instant, limit: Duration) -> (bool, String) {
    let t = start.elapsed();
    (t < limit, format!("{:.3}s of {}s", t.as_secs_f64(), limit.as_secs()))
}

fn bit(x: usize, i: usize) -> bool {
    (x >> i) & 1 == 1
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let dom = Domain::bits(3);
    let g = gen_target(&TargetSpec::Counterexample, &dom, &mut stream_rng(0, TARGET_STREAM)).unwrap();
    let d = Dist::uniform(dom.size);
    let x1 = BoundedFn::from_bools((0..dom.size).map(|x| bit(x, 0)));
    let h = BoundedFn::constant(dom.size, 7.0 / 8.0).unwrap();
    let viol = ma_violation(&x1, &g, &h, &d).unwrap();
    let fam = close_family(dom.size, vec![NamedFn::new("x1", x1)]).unwrap();
    let hard = hardness_of(&g, &fam, &d).unwrap();
    let v = d.expect(&g).unwrap();
    let exact = (viol - 1.0 / 16.0).abs() <= 1e-12;
    let literal = hard >= v - 0.01;
    let (fast, t) = within(start, Duration::from_secs(1));
    outcome(
        exact && literal && fast,
        format!(
            "violation {viol:.17} (1/16 to 1e-12: {exact}); hardness {hard:.6} >= v - 0.01 = {:.6}: {literal}; \
             hardness vs 1 - v = {:.6}: {}; {t}",
            v - 0.01,
            1.0 - v,
            (hard - (1.0 - v)).abs() <= 1e-12
        ),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut r2 = rng(2);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let f: Vec<f64> = (0..32).map(|_| r2.random()).collect();
        let g: Vec<f64> = (0..32).map(|_| r2.random()).collect();
        let d = random_simplex(&mut r2, 32);
        let lhs = agreement_by_coins(&f, &g, &d);
        let (fb, gb, db) =
            (BoundedFn::new(f).unwrap(), BoundedFn::new(g).unwrap(), Dist::from_probs(d).unwrap());
        worst = worst.max((lhs - yao_correlation_form(&fb, &gb, &db).unwrap()).abs());
        worst = worst.max((lhs - yao_agreement(&fb, &gb, &db).unwrap()).abs());
    }
    let (fast, t) = within(start, Duration::from_secs(1));
    outcome(worst <= 1e-12 && fast, format!("1000 triples, max deviation {worst:.2e} (tol 1e-12); {t}"))
}

/// The 50 instances shared by criteria 3 and 4.
fn mc_instances() -> Vec<(BoundedFn, Dist)> {
    let dom = Domain::bits(6);
    (0..50u64)
        .map(|seed| {
            let mut r = stream_rng(seed, 11);
            let fixed: Vec<(usize, usize)> = {
                let width = r.random_range(0..3usize);
                let mut coords: Vec<usize> = Vec::new();
                while coords.len() < width {
                    let c = r.random_range(0..6);
                    if !coords.contains(&c) {
                        coords.push(c);
                    }
                }
                coords.into_iter().map(|c| (c, r.random_range(0..2))).collect()
            };
            let target = match seed % 5 {
                0 | 1 => TargetSpec::MaskedParity { fixed, bias: r.random_range(0.1..0.9) },
                2 => TargetSpec::RandomBoolean { bias: r.random_range(0.1..0.9) },
                3 => TargetSpec::Majority,
                _ => TargetSpec::TiltedParity { coordinate: seed as usize % 6, tilt: 0.25, noise: 0.2 },
            };
            let dist = if seed % 10 < 7 { DistSpec::Uniform } else { DistSpec::Random };
            let g = gen_target(&target, &dom, &mut stream_rng(seed, TARGET_STREAM)).unwrap();
            let d = gen_dist(&dist, &dom, &mut stream_rng(seed, DIST_STREAM)).unwrap();
            (g, d)
        })
        .collect()
}

const C3_EPS: f64 = 0.2;
const C3_GAMMA: f64 = 0.05;

fn criterion_3_and_4() -> (Outcome, Outcome) {
    let start = Instant::now();
    let fam = closed_juntas(6, 2);
    let step = C3_EPS * C3_GAMMA / 2.0;
    let (mut ok3, mut worst_v, mut max_k, mut min_drop) = (true, 0.0f64, 0usize, f64::INFINITY);
    let (mut pieces_seen, mut balanced, mut boosted, mut violations4) = (0usize, 0usize, 0usize, Vec::new());
    for (i, (g, d)) in mc_instances().iter().enumerate() {
        let (p, report, _) = build_approx_mc_partition(&fam, g, d, C3_EPS, C3_GAMMA).unwrap();
        max_k = max_k.max(p.k);
        ok3 &= report.pass && p.k as f64 <= 4.0 / C3_EPS + 2.0;
        for &drop in &report.drops {
            min_drop = min_drop.min(drop);
            ok3 &= drop >= step * step;
        }
        for q in 0..p.k {
            let members = p.mask(q);
            let eta: f64 = (0..d.len()).filter(|&x| members[x]).map(|x| d.prob(x)).sum();
            if eta < C3_GAMMA {
                continue;
            }
            let viol = piece_violation(&fam, g.values(), d.masses(), &members);
            worst_v = worst_v.max(viol);
            ok3 &= viol <= C3_EPS;

            // per-piece statements on the certified piece
            pieces_seen += 1;
            let local = restrict(d.masses(), &members);
            let v = expect(&local, g.values());
            let b = v.min(1.0 - v);
            let local_d = Dist::from_probs(local.clone()).unwrap();
            let hard = 1.0 - max_family_agreement(&fam, g.values(), &local);
            if hard < b - 2.0 * C3_EPS - 1e-12 {
                violations4.push(format!("instance {i} piece {q}: hardness {hard} < b - 2eps"));
            }
            if hard - hardness_of(g, &fam, &local_d).unwrap() > 1e-12 {
                violations4.push(format!("instance {i} piece {q}: hardness oracle mismatch"));
            }
            let one_mass: f64 = (0..d.len()).map(|x| local[x] * g.get(x)).sum();
            let zero_mass: f64 = (0..d.len()).map(|x| local[x] * (1.0 - g.get(x))).sum();
            if one_mass <= 0.0 || zero_mass <= 0.0 {
                continue;
            }
            balanced += 1;
            let bound = C3_EPS / (v * (1.0 - v));
            let adv = class_conditional_advantage(g, &local_d, &fam).unwrap();
            let ones: Vec<f64> = (0..d.len()).map(|x| local[x] * g.get(x) / one_mass).collect();
            let zeros: Vec<f64> = (0..d.len()).map(|x| local[x] * (1.0 - g.get(x)) / zero_mass).collect();
            let oracle_adv = max_gap(&fam, &ones, &zeros);
            if adv > bound + 1e-12 || oracle_adv > bound + 1e-12 || (adv - oracle_adv).abs() > 1e-12 {
                violations4.push(format!("instance {i} piece {q}: advantage {adv} vs {bound}"));
            }
            if g.values().iter().any(|&t| t != 0.0 && t != 1.0) {
                continue;
            }
            boosted += 1;
            let boost = boosted_minority_distribution(g, &local_d).unwrap();
            let mu = boost.mu.masses();
            let mean = expect(mu, g.values());
            let over = (0..d.len()).map(|x| 2.0 * b * mu[x] - local[x]).fold(f64::NEG_INFINITY, f64::max);
            let agree = max_family_agreement(&fam, g.values(), mu);
            if (mean - 0.5).abs() > 1e-9 || over > 1e-12 || agree > 0.5 + C3_EPS / (2.0 * v * (1.0 - v)) + 1e-12 {
                violations4.push(format!("instance {i} piece {q}: boost mean {mean}, excess {over}, agreement {agree}"));
            }
        }
    }
    let (fast, t) = within(start, Duration::from_secs(30));
    let c3 = outcome(
        ok3 && fast,
        format!(
            "50 instances, max violation {worst_v:.4} (<= {C3_EPS}), max k {max_k} (<= 22), \
             min potential drop {min_drop:.3e} (>= {:.3e}); {t}",
            step * step
        ),
    );
    let c4 = outcome(
        violations4.is_empty(),
        format!(
            "{pieces_seen} certified pieces, {balanced} with 0 < v < 1, {boosted} boolean ones boosted, {} violations{}",
            violations4.len(),
            violations4.first().map(|s| format!(" (first: {s})")).unwrap_or_default()
        ),
    );
    (c3, c4)
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let dom = Domain::bits(6);
    let g = gen_target(&TargetSpec::Parity, &dom, &mut stream_rng(0, TARGET_STREAM)).unwrap();
    let d = Dist::uniform(dom.size);
    let fam = closed_juntas(6, 2);
    let delta_star = 1.0 - max_family_agreement(&fam, g.values(), d.masses());
    let (eps, delta) = (0.1, 0.4);
    let rec = recover_ihcl(&fam, &g, &d, eps, delta).unwrap();
    let h = rec.glued.h.masses();
    let rho = (0..d.len()).filter(|&x| h[x] > 0.0).map(|x| d.prob(x) / h[x]).fold(f64::INFINITY, f64::min);
    let agree = max_family_agreement(&fam, g.values(), h);
    let c = ((1.0 - rho / (2.0 * delta)) / eps).max(0.0);
    let c_prime = ((agree - 0.5) / eps).max(0.0);
    let (fast, t) = within(start, Duration::from_secs(60));
    let pass = (delta_star - 0.5).abs() < 1e-12
        && c <= 3.0
        && c_prime <= 3.0
        && (c - rec.density_constant).abs() < 1e-9
        && (c_prime - rec.hardness_constant).abs() < 1e-9
        && fast;
    outcome(
        pass,
        format!("hardness {delta_star}, density {rho:.6} (c = {c:.4}), agreement {agree:.6} (c' = {c_prime:.4}); {t}"),
    )
}

fn criterion_6() -> Outcome {
    let (eps, delta) = (0.3, 0.3);
    let dom = Domain::bits(8);
    let x0 = BoundedFn::from_bools((0..dom.size).map(|x| bit(x, 0)));
    let fam = close_family(dom.size, vec![NamedFn::new("x0", x0)]).unwrap();
    let size_ok = (fam.len() as f64).log2() <= dom.size as f64 * eps * eps * delta * delta;
    let d = Dist::uniform(dom.size);
    let (mut dense_ok, mut hard_ok) = (0, 0);
    let mut worst_gap: f64 = 0.0;
    for seed in 0..20u64 {
        let spec = TargetSpec::MaskedParity { fixed: vec![(0, 1)], bias: 0.2 };
        let g = gen_target(&spec, &dom, &mut stream_rng(seed, TARGET_STREAM)).unwrap();
        let rec = recover_ihcl(&fam, &g, &d, eps, delta).unwrap();
        let set = sample_hardcore_set(&rec.glued.h, &d, seed, InclusionRule::RelativeToMax).unwrap();
        let report = verify_hardcore_set(&set, &g, &fam, eps, delta).unwrap();
        let h = rec.glued.h.masses();
        let top = h.iter().copied().fold(0.0, f64::max);
        let claim = h.iter().map(|m| m / top).sum::<f64>() / dom.size as f64;
        let dens = set.members.len() as f64 / dom.size as f64;
        worst_gap = worst_gap.max((dens - claim).abs());
        dense_ok += usize::from((dens - claim).abs() <= 0.15);
        let inside: Vec<bool> = (0..dom.size).map(|x| set.members.contains(&x)).collect();
        let agree = max_family_agreement(&fam, g.values(), &restrict(d.masses(), &inside));
        hard_ok += usize::from(agree <= 0.5 + 4.0 * eps && report.hardness_ok);
    }
    outcome(
        size_ok && dense_ok >= 18 && hard_ok >= 18,
        format!(
            "log2|F| <= n eps^2 delta^2: {size_ok}; density within 0.15 in {dense_ok}/20 (worst gap {worst_gap:.4}); \
             hardness <= 1/2 + 4eps in {hard_ok}/20"
        ),
    )
}

fn criterion_7() -> Outcome {
    let mut r7 = rng(7);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let n = r7.random_range(1..5usize);
        let l = r7.random_range(2..4usize);
        let cond: Vec<Vec<f64>> = (0..n).map(|_| random_simplex(&mut r7, l)).collect();
        let marg = random_simplex(&mut r7, n);
        let oracle = predictability_by_enumeration(&cond, &marg);
        let j = JointDist::new(cond, Dist::from_probs(marg).unwrap()).unwrap();
        worst = worst.max((oracle - 2f64.powf(-avg_min_entropy(&j))).abs());
        worst = worst.max((oracle - predictability(&j)).abs());
    }
    let identity = worst <= 1e-12;

    let mut witnesses = 0;
    let mut bad = Vec::new();
    // L = 2 on 64 points
    let dom2 = Domain::bits(6);
    let g = gen_target(
        &TargetSpec::TiltedParity { coordinate: 1, tilt: 0.2, noise: 0.15 },
        &dom2,
        &mut stream_rng(0, TARGET_STREAM),
    )
    .unwrap();
    let j2 = JointDist::from_bernoulli(&g, Dist::uniform(64)).unwrap();
    let fam2 = close_family(128, regkit::harness::generate::juntas(&dom2.with_labels(2), 2).unwrap()).unwrap();
    // L = 3 on 27 points
    let dom3 = Domain::mixed(vec![3, 3, 3]).unwrap();
    let mut r = rng(70);
    let cond3: Vec<Vec<f64>> = (0..27).map(|_| random_simplex(&mut r, 3)).collect();
    let j3 = JointDist::new(cond3, Dist::uniform(27)).unwrap();
    let fam3 = close_family(81, regkit::harness::generate::juntas(&dom3.with_labels(3), 1).unwrap()).unwrap();
    for (label, fam, j, eps, gamma) in [("L=2", &fam2, &j2, 0.2, 0.05), ("L=3", &fam3, &j3, 0.3, 0.03)] {
        let pp = pame_pp(fam, j, eps, gamma).unwrap();
        for w in &pp.witnesses {
            witnesses += 1;
            let q = w.piece_id.unwrap();
            let m = pp.partition.stats[q].m;
            let members = pp.partition.mask(q);
            let local = restrict(j.marg.masses(), &members);
            let oracle_m = (0..j.labels)
                .map(|y| (0..j.len()).map(|x| local[x] * j.cond[x][y]).sum::<f64>())
                .fold(0.0, f64::max);
            if (w.measured_ame + m.log2()).abs() > 1e-12 || (w.measured_ame + oracle_m.log2()).abs() > 1e-12 {
                bad.push(format!("{label} piece {q}: ame {} vs {}", w.measured_ame, -m.log2()));
            }
            let mut adv: f64 = 0.0;
            for f in fam.iter() {
                let t = f.table.values();
                let mut diff = 0.0;
                for x in 0..j.len() {
                    for y in 0..j.labels {
                        diff += t[x * j.labels + y] * local[x] * (j.cond[x][y] - w.cond_c[x][y]);
                    }
                }
                adv = adv.max(diff.abs());
            }
            if adv > eps + 1e-12 || (adv - w.measured_advantage).abs() > 1e-12 {
                bad.push(format!("{label} piece {q}: advantage {adv} > {eps}"));
            }
        }
    }
    outcome(
        identity && bad.is_empty() && witnesses > 0,
        format!(
            "1000 joints, max identity deviation {worst:.2e}; {witnesses} witnesses, {} failures{}",
            bad.len(),
            bad.first().map(|s| format!(" (first: {s})")).unwrap_or_default()
        ),
    )
}

fn criterion_8() -> Outcome {
    let dom = Domain::bits(7);
    let g = gen_target(
        &TargetSpec::TiltedParity { coordinate: 0, tilt: 0.2, noise: 0.1 },
        &dom,
        &mut stream_rng(0, TARGET_STREAM),
    )
    .unwrap();
    let j = JointDist::from_bernoulli(&g, Dist::uniform(dom.size)).unwrap();
    let fam = close_family(2 * dom.size, regkit::harness::generate::juntas(&dom.with_labels(2), 2).unwrap()).unwrap();
    let pred = predictability_by_enumeration_binary(&j);
    // hair below the measured value so the premise comparison is not decided by rounding
    let delta = 1.0 - pred - 1e-9;
    let eps = 0.1;
    match recover_pame(&fam, &j, eps, delta) {
        Ok(rec) => {
            let w = &rec.witness;
            let ame = -(0..j.len())
                .map(|x| w.marg.prob(x) * w.cond_c[x].iter().copied().fold(0.0, f64::max))
                .sum::<f64>()
                .log2();
            let target = -(1.0 - delta).log2();
            let c = ((target - ame) / eps).max(0.0);
            let c_adv = w.measured_advantage / eps;
            outcome(
                c <= 3.0 && c_adv <= 3.0 && (ame - w.measured_ame).abs() < 1e-12,
                format!(
                    "predictability {pred:.6}, delta {delta:.6}; ame {ame:.6} vs target {target:.6} (c = {c:.4}); \
                     advantage {:.3e} (c = {c_adv:.4})",
                    w.measured_advantage
                ),
            )
        }
        Err(e) => outcome(false, format!("recovery failed: {e}")),
    }
}

/// Bayes success `E[max(p, 1 - p)]` of a binary joint.
fn predictability_by_enumeration_binary(j: &JointDist) -> f64 {
    (0..j.len()).map(|x| j.marg.prob(x) * j.cond[x][0].max(j.cond[x][1])).sum()
}

fn criterion_9() -> Outcome {
    let start = Instant::now();
    let mut bad = Vec::new();
    let mut certified = 0;
    let small = closed_juntas(5, 2);
    let lifted = lift_family(&small).unwrap();
    let (eps, gamma) = (0.1, 0.05);
    for seed in 0..10u64 {
        let dom = Domain::bits(5);
        let s = gen_dist(&DistSpec::Random, &dom, &mut stream_rng(seed, DIST_STREAM)).unwrap();
        let v = gen_dist(&DistSpec::Random, &dom, &mut stream_rng(seed + 100, DIST_STREAM)).unwrap();
        let inst = DmtInstance::augmented(&s, &v).unwrap();
        let pp = dmt_pp(&lifted, &inst, eps, gamma).unwrap();
        for piece in &pp.pieces {
            certified += 1;
            let members = pp.partition.mask(piece.piece_id);
            let sp = restrict(inst.dist_s.masses(), &members);
            let vp = restrict(inst.dist_v.masses(), &members);
            let adv = max_gap(&lifted, &sp, &vp);
            if adv > piece.eps_p + 1e-12 || (adv - piece.measured_advantage).abs() > 1e-12 {
                bad.push(format!("seed {seed} piece {}: {adv} > {}", piece.piece_id, piece.eps_p));
            }
        }
    }

    let (eps, delta) = (0.05, 0.3);
    let dom = Domain::bits(6);
    let mut p = vec![0.5; 6];
    p[0] = delta;
    let vdist = gen_dist(&DistSpec::ProductBiased { p }, &dom, &mut stream_rng(0, DIST_STREAM)).unwrap();
    let sdist = vdist.conditional(|x| bit(x, 0)).unwrap();
    let fam = closed_juntas(6, 2);
    let rec = recover_dmt(&fam, &sdist, &vdist, eps, delta);
    let (fast, t) = within(start, Duration::from_secs(60));
    match rec {
        Ok(rec) => {
            let mu = rec.model.masses();
            let rho = (0..mu.len()).filter(|&x| mu[x] > 0.0).map(|x| vdist.prob(x) / mu[x]).fold(f64::INFINITY, f64::min);
            let adv = max_gap(&fam, sdist.masses(), mu);
            let c_density = ((1.0 - rho / delta) / eps).max(0.0);
            let c_adv = adv * delta / eps;
            outcome(
                bad.is_empty() && certified > 0 && c_density <= 3.0 && c_adv <= 3.0 && fast,
                format!(
                    "{certified} certified pieces over 10 instances, {} over bound; model density {rho:.6} \
                     (c = {c_density:.4}), advantage {adv:.3e} (c = {c_adv:.4}); {t}",
                    bad.len()
                ),
            )
        }
        Err(e) => outcome(false, format!("recovery failed: {e}")),
    }
}

fn criterion_10() -> Outcome {
    let bases = base_reports();
    let mut lines = Vec::new();
    let mut caught = 0;
    if let Some(b) = bases.iter().find(|b| !b.pass) {
        return outcome(false, format!("base report for {} does not pass", b.pipeline.name()));
    }
    for c in &CORRUPTIONS {
        let mut hit = None;
        for base in &bases {
            let mut r = base.clone();
            if (c.apply)(&mut r) {
                let failed: Vec<String> = verify_all(&r).into_iter().filter(|k| !k.pass).map(|k| k.id).collect();
                hit = Some(failed.iter().any(|id| id == c.expected_check));
                break;
            }
        }
        match hit {
            Some(true) => caught += 1,
            Some(false) => lines.push(format!("{} missed", c.name)),
            None => lines.push(format!("{} not applicable", c.name)),
        }
    }
    outcome(
        caught == CORRUPTIONS.len(),
        format!("{caught}/{} corruptions flagged by the expected check{}", CORRUPTIONS.len(), if lines.is_empty() {
            String::new()
        } else {
            format!(" ({})", lines.join(", "))
        }),
    )
}

fn main() {
    let (c3, c4) = criterion_3_and_4();
    let results = vec![
        (1, criterion_1()),
        (2, criterion_2()),
        (3, c3),
        (4, c4),
        (5, criterion_5()),
        (6, criterion_6()),
        (7, criterion_7()),
        (8, criterion_8()),
        (9, criterion_9()),
        (10, criterion_10()),
    ];
    let mut unexpected = 0;
    for (n, o) in &results {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        let note = if !o.pass && KNOWN_UNATTAINABLE.contains(n) { " [known unattainable]" } else { "" };
        println!("criterion {n:>2}: {tag}{note}: {}", o.detail);
        if !o.pass && !KNOWN_UNATTAINABLE.contains(n) {
            unexpected += 1;
        }
    }
    let passed = results.iter().filter(|(_, o)| o.pass).count();
    println!("acceptance: {passed}/{} criteria pass", results.len());
    if unexpected > 0 {
        std::process::exit(1);
    }
}
