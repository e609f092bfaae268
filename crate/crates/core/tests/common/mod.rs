//! Brute-force oracles written without the library's measurement code.
#![allow(dead_code)]

use regkit::harness::generate::{juntas, stream_rng, DistSpec, TargetSpec};
use regkit::harness::{run_experiment, DomainSpec, ExperimentConfig, FamilySpec, Params, Pipeline, RunReport};
use regkit::{close_family, Domain, Family};

/// `Pr[f_rand = g_rand]` by enumerating both coins at every point.
pub fn agreement_by_coins(f: &[f64], g: &[f64], d: &[f64]) -> f64 {
    let mut total = 0.0;
    for x in 0..d.len() {
        for a in 0..2 {
            for b in 0..2 {
                if a == b {
                    let pa = if a == 1 { f[x] } else { 1.0 - f[x] };
                    let pb = if b == 1 { g[x] } else { 1.0 - g[x] };
                    total += d[x] * pa * pb;
                }
            }
        }
    }
    total
}

/// Best success over every map `x -> y`, enumerated exhaustively.
pub fn predictability_by_enumeration(cond: &[Vec<f64>], marg: &[f64]) -> f64 {
    let n = cond.len();
    let l = cond[0].len();
    let total = l.pow(n as u32);
    let mut best: f64 = 0.0;
    for code in 0..total {
        let mut c = code;
        let mut success = 0.0;
        for x in 0..n {
            success += marg[x] * cond[x][c % l];
            c /= l;
        }
        best = best.max(success);
    }
    best
}

/// `d` restricted to `members` and renormalized, as a full-length vector.
pub fn restrict(d: &[f64], members: &[bool]) -> Vec<f64> {
    let z: f64 = d.iter().zip(members).filter(|(_, &m)| m).map(|(w, _)| w).sum();
    d.iter().zip(members).map(|(w, &m)| if m { w / z } else { 0.0 }).collect()
}

pub fn expect(w: &[f64], t: &[f64]) -> f64 {
    w.iter().zip(t).map(|(a, b)| a * b).sum()
}

/// `max_f |E_a[f] - E_b[f]|`.
pub fn max_gap(fam: &Family, a: &[f64], b: &[f64]) -> f64 {
    fam.iter().map(|f| (expect(a, f.table.values()) - expect(b, f.table.values())).abs()).fold(0.0, f64::max)
}

/// `max_f Pr_w[f = g]` for boolean tables.
pub fn max_family_agreement(fam: &Family, g: &[f64], w: &[f64]) -> f64 {
    fam.iter().map(|f| agreement_by_coins(f.table.values(), g, w)).fold(0.0, f64::max)
}

/// `|E_{d|P}[f (g - v_P)]|` maximized over members, for one piece.
pub fn piece_violation(fam: &Family, g: &[f64], d: &[f64], members: &[bool]) -> f64 {
    let local = restrict(d, members);
    let v = expect(&local, g);
    fam.iter()
        .map(|f| {
            let t = f.table.values();
            (0..d.len()).map(|x| local[x] * t[x] * (g[x] - v)).sum::<f64>().abs()
        })
        .fold(0.0, f64::max)
}

pub fn closed_juntas(bits: usize, arity: usize) -> Family {
    let dom = Domain::bits(bits);
    close_family(dom.size, juntas(&dom, arity).unwrap()).unwrap()
}

pub fn random_simplex(rng: &mut impl rand::Rng, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 1e-3).collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|v| v / z).collect()
}

pub fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    stream_rng(seed, 9)
}

fn bit(x: usize, i: usize) -> bool {
    (x >> i) & 1 == 1
}

pub fn config(pipeline: Pipeline, domain: DomainSpec, target: TargetSpec, family: FamilySpec, params: Params) -> ExperimentConfig {
    ExperimentConfig {
        pipeline,
        domain,
        target,
        family,
        distribution: DistSpec::Uniform,
        params,
        seed: 0,
        artifact: None,
    }
}

pub fn params(eps: f64, gamma: Option<f64>, delta: Option<f64>, tau: Option<f64>) -> Params {
    Params {
        eps,
        gamma,
        delta,
        tau,
        labels: None,
        rescale: None,
        set_samples: None,
        inclusion_rule: Default::default(),
        glue_weights: Default::default(),
    }
}

/// Passing reports covering every artifact kind the corruptions touch.
pub fn base_reports() -> Vec<RunReport> {
    let and01: Vec<f64> = (0..64).map(|x| if bit(x, 0) && bit(x, 1) { 1.0 } else { 0.0 }).collect();
    let bits6 = DomainSpec::Bits { width: 6 };
    let juntas2 = FamilySpec::Juntas { arity: 2 };
    let configs = [
        config(Pipeline::Mc, bits6.clone(), TargetSpec::Table { values: and01 }, juntas2.clone(), params(0.1, Some(0.05), None, None)),
        config(
            Pipeline::IhclPp,
            bits6.clone(),
            TargetSpec::MaskedParity { fixed: vec![(0, 1), (3, 0)], bias: 0.3 },
            juntas2.clone(),
            params(0.2, Some(0.05), None, Some(0.1)),
        ),
        config(
            Pipeline::PamePp,
            bits6.clone(),
            TargetSpec::TiltedParity { coordinate: 1, tilt: 0.2, noise: 0.15 },
            juntas2.clone(),
            params(0.2, Some(0.05), None, None),
        ),
        config(
            Pipeline::DmtRecover,
            bits6,
            TargetSpec::DensePair {
                s: DistSpec::Conditioned {
                    base: Box::new(DistSpec::ProductBiased { p: vec![0.3, 0.5, 0.5, 0.5, 0.5, 0.5] }),
                    fixed: vec![(0, 1)],
                },
                v: DistSpec::ProductBiased { p: vec![0.3, 0.5, 0.5, 0.5, 0.5, 0.5] },
            },
            juntas2,
            params(0.05, None, Some(0.3), None),
        ),
    ];
    configs.iter().map(|c| run_experiment(c).unwrap()).collect()
}
