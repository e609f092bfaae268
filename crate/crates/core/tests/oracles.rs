//! Library measurements against brute-force enumeration on small instances.

mod common;

use rand::Rng;
use regkit::bernoulli::{hardness_of, joint_indist_advantage};
use regkit::dmt::{pseudodensity_margin, recover_dmt};
use regkit::harness::generate::{gen_dist, gen_target, juntas, stream_rng, DistSpec, TargetSpec};
use regkit::mc::{ma_violation, verify_approx_mc};
use regkit::pame::{argmax_predictor, predictability, prediction_success, JointDist};
use regkit::{close_family, BoundedFn, Dist, Domain, Partition};

use common::*;

fn bits(x: usize, i: usize) -> f64 {
    ((x >> i) & 1) as f64
}

#[test]
fn joint_advantage_matches_coin_enumeration() {
    let mut r = rng(1);
    let dom = Domain::bits(3);
    let lifted = close_family(16, juntas(&dom.with_labels(2), 2).unwrap()).unwrap();
    for _ in 0..50 {
        let g: Vec<f64> = (0..8).map(|_| r.random()).collect();
        let d = random_simplex(&mut r, 8);
        let v = expect(&d, &g);
        let mut oracle: f64 = 0.0;
        for f in lifted.iter() {
            let t = f.table.values();
            let (mut real, mut fake) = (0.0, 0.0);
            for x in 0..8 {
                for b in 0..2 {
                    let pg = if b == 1 { g[x] } else { 1.0 - g[x] };
                    let pv = if b == 1 { v } else { 1.0 - v };
                    real += d[x] * pg * t[2 * x + b];
                    fake += d[x] * pv * t[2 * x + b];
                }
            }
            oracle = oracle.max((real - fake).abs());
        }
        let lib = joint_indist_advantage(&BoundedFn::new(g).unwrap(), &Dist::from_probs(d).unwrap(), &lifted).unwrap();
        assert!((lib - oracle).abs() <= 1e-12, "{lib} vs {oracle}");
    }
}

#[test]
fn predictability_matches_exhaustive_predictors() {
    let mut r = rng(2);
    for _ in 0..200 {
        let n = r.random_range(1..6usize);
        let l = r.random_range(2..4usize);
        let cond: Vec<Vec<f64>> = (0..n).map(|_| random_simplex(&mut r, l)).collect();
        let marg = random_simplex(&mut r, n);
        let oracle = predictability_by_enumeration(&cond, &marg);
        let j = JointDist::new(cond, Dist::from_probs(marg).unwrap()).unwrap();
        assert!((predictability(&j) - oracle).abs() <= 1e-12);
        let best = argmax_predictor(&j);
        assert!((prediction_success(&j, &best).unwrap() - oracle).abs() <= 1e-12);
    }
}

#[test]
fn hardness_matches_brute_force() {
    let fam = closed_juntas(4, 2);
    for seed in 0..20 {
        let dom = Domain::bits(4);
        let g = gen_target(&TargetSpec::RandomBoolean { bias: 0.5 }, &dom, &mut stream_rng(seed, 0)).unwrap();
        let d = gen_dist(&DistSpec::Random, &dom, &mut stream_rng(seed, 1)).unwrap();
        let oracle = 1.0 - max_family_agreement(&fam, g.values(), d.masses());
        assert!((hardness_of(&g, &fam, &d).unwrap() - oracle).abs() <= 1e-12);
    }
}

#[test]
fn single_piece_conjunction_is_caught() {
    let dom = Domain::bits(6);
    let g = BoundedFn::new((0..64).map(|x| bits(x, 0) * bits(x, 1)).collect()).unwrap();
    let d = Dist::uniform(64);
    let fam = close_family(64, juntas(&dom, 2).unwrap()).unwrap();
    let p = Partition::new(vec![0; 64], 1, &g, &d).unwrap();
    let report = verify_approx_mc(&p, &fam, &g, &d, 0.1, 0.05).unwrap();
    assert!(!report.pass);
    assert!((report.max_violation - 0.1875).abs() <= 1e-12);
    assert!((piece_violation(&fam, g.values(), d.masses(), &[true; 64]) - 0.1875).abs() <= 1e-12);
}

#[test]
fn constant_predictor_misses_counterexample_by_a_sixteenth() {
    let dom = Domain::bits(3);
    let g = gen_target(&TargetSpec::Counterexample, &dom, &mut stream_rng(0, 0)).unwrap();
    let x1 = BoundedFn::new((0..8).map(|x| bits(x, 0)).collect()).unwrap();
    let h = BoundedFn::constant(8, 7.0 / 8.0).unwrap();
    let d = Dist::uniform(8);
    assert!((ma_violation(&x1, &g, &h, &d).unwrap() - 1.0 / 16.0).abs() <= 1e-12);
    let fam = close_family(8, vec![regkit::NamedFn::new("x1", x1)]).unwrap();
    assert!((hardness_of(&g, &fam, &d).unwrap() - 1.0 / 8.0).abs() <= 1e-12);
}

#[test]
fn pseudodensity_margin_of_point_mass() {
    let fam = closed_juntas(3, 1);
    let s = Dist::point(8, 0);
    let v = Dist::uniform(8);
    assert!((pseudodensity_margin(&s, &v, &fam, 1.0).unwrap() - 0.5).abs() <= 1e-12);
    assert!((pseudodensity_margin(&s, &v, &fam, 0.4).unwrap() - 0.0).abs() <= 1e-12);
}

#[test]
fn planted_dense_model_is_recovered() {
    let (eps, delta) = (0.05, 0.3);
    let dom = Domain::bits(6);
    let mut p = vec![0.5; 6];
    p[0] = delta;
    let vdist = gen_dist(&DistSpec::ProductBiased { p }, &dom, &mut stream_rng(0, 1)).unwrap();
    let sdist = vdist.conditional(|x| x & 1 == 1).unwrap();
    let fam = closed_juntas(6, 2);
    assert!(pseudodensity_margin(&sdist, &vdist, &fam, delta).unwrap() <= 1e-12);
    let rec = recover_dmt(&fam, &sdist, &vdist, eps, delta).unwrap();
    assert!(max_gap(&fam, sdist.masses(), rec.model.masses()) <= 1e-9);
    for x in 0..64 {
        assert!(delta * rec.model.prob(x) <= vdist.prob(x) + 1e-12);
    }
}
