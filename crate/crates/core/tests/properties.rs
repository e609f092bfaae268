mod common;

use proptest::prelude::*;
use rand::Rng;
use regkit::bernoulli::{boosted_minority_distribution, yao_agreement};
use regkit::dmt::{dmt_pp, lift_family, DmtInstance};
use regkit::harness::generate::{gen_dist, gen_target, stream_rng, DistSpec, TargetSpec};
use regkit::ihcl::{glue_hardcore, ihcl_pp, GlueWeights, GoodPieceFilter};
use regkit::mc::{build_approx_mc_partition, build_multiaccurate, lambda_grid, lambda_round, verify_approx_mc};
use regkit::pame::{avg_min_entropy, pame_pp, predictability, JointDist};
use regkit::{close_family, BoundedFn, Dist, Domain};

use common::*;

fn instance(seed: u64, bits: usize, boolean: bool, random_d: bool) -> (BoundedFn, Dist) {
    let dom = Domain::bits(bits);
    let target = if boolean {
        match seed % 3 {
            0 => TargetSpec::RandomBoolean { bias: 0.4 },
            1 => TargetSpec::MaskedParity { fixed: vec![(0, 1)], bias: 0.3 },
            _ => TargetSpec::Parity,
        }
    } else {
        TargetSpec::RandomFractional { low: 0.0, high: 1.0 }
    };
    let dist = if random_d { DistSpec::Random } else { DistSpec::Uniform };
    let g = gen_target(&target, &dom, &mut stream_rng(seed, 0)).unwrap();
    let d = gen_dist(&dist, &dom, &mut stream_rng(seed, 1)).unwrap();
    (g, d)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn yao_identity_matches_coin_enumeration(seed in any::<u64>(), n in 1usize..40) {
        let mut r = rng(seed);
        let f: Vec<f64> = (0..n).map(|_| r.random()).collect();
        let g: Vec<f64> = (0..n).map(|_| r.random()).collect();
        let d = random_simplex(&mut r, n);
        let lib = yao_agreement(
            &BoundedFn::new(f.clone()).unwrap(),
            &BoundedFn::new(g.clone()).unwrap(),
            &Dist::from_probs(d.clone()).unwrap(),
        ).unwrap();
        prop_assert!((lib - agreement_by_coins(&f, &g, &d)).abs() <= 1e-12);
    }

    #[test]
    fn closure_is_idempotent(bits in 2usize..5, arity in 1usize..3) {
        let fam = closed_juntas(bits, arity.min(bits));
        let again = close_family(fam.domain_size(), fam.members().to_vec()).unwrap();
        prop_assert_eq!(fam.len(), again.len());
        prop_assert!(again.is_closed_under_negation());
        prop_assert!(again.contains_constants());
    }

    #[test]
    fn rounding_error_is_at_most_half_width(lambda in 0.01f64..1.0, v in 0.0f64..=1.0) {
        let grid = lambda_grid(lambda).unwrap();
        prop_assert!(grid.windows(2).all(|w| w[0] < w[1]));
        prop_assert!((lambda_round(&grid, v) - v).abs() <= lambda / 2.0 + 1e-12);
    }

    #[test]
    fn multiaccuracy_drops_bound_potential(seed in any::<u64>(), eps in 0.03f64..0.3) {
        let (g, d) = instance(seed, 4, seed % 2 == 0, seed % 4 < 2);
        let fam = closed_juntas(4, 1);
        let pred = build_multiaccurate(&fam, &g, &d, eps).unwrap();
        prop_assert!(pred.drops.iter().all(|&x| x >= eps * eps - 1e-12));
        let worst = fam.iter().map(|f| {
            (0..d.len()).map(|x| d.prob(x) * f.table.get(x) * (g.get(x) - pred.table.get(x))).sum::<f64>().abs()
        }).fold(0.0, f64::max);
        prop_assert!(worst <= eps + 1e-12);
    }

    #[test]
    fn minority_boost_is_balanced_and_dominated(seed in any::<u64>()) {
        let (g, d) = instance(seed, 5, true, true);
        let v = d.expect(&g).unwrap();
        prop_assume!(v > 0.0 && v < 1.0);
        let b = v.min(1.0 - v);
        let boost = boosted_minority_distribution(&g, &d).unwrap();
        let mu = boost.mu.masses();
        prop_assert!((mu.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(mu.iter().all(|&m| m >= 0.0));
        prop_assert!((expect(mu, g.values()) - 0.5).abs() <= 1e-9);
        for x in 0..d.len() {
            prop_assert!(2.0 * b * mu[x] <= d.prob(x) + 1e-12);
        }
    }

    #[test]
    fn predictability_is_two_to_minus_ame(seed in any::<u64>(), n in 1usize..30, l in 2usize..5) {
        let mut r = rng(seed);
        let cond: Vec<Vec<f64>> = (0..n).map(|_| random_simplex(&mut r, l)).collect();
        let marg = random_simplex(&mut r, n);
        let j = JointDist::new(cond, Dist::from_probs(marg).unwrap()).unwrap();
        prop_assert!((predictability(&j) - 2f64.powf(-avg_min_entropy(&j))).abs() <= 1e-12);
    }

    #[test]
    fn mc_partitions_satisfy_their_contract(seed in any::<u64>()) {
        let (g, d) = instance(seed, 5, seed % 3 != 0, seed % 2 == 0);
        let fam = closed_juntas(5, 2);
        let (eps, gamma) = (0.2, 0.05);
        let (p, report, _) = build_approx_mc_partition(&fam, &g, &d, eps, gamma).unwrap();
        prop_assert!(report.pass);
        prop_assert!(verify_approx_mc(&p, &fam, &g, &d, eps, gamma).unwrap().pass);
        prop_assert!(p.assign.iter().all(|&q| q < p.k));
        let total: f64 = p.stats.iter().map(|s| s.eta).sum();
        prop_assert!((total - 1.0).abs() <= 1e-9);
        for q in 0..p.k {
            let members = p.mask(q);
            let eta: f64 = (0..d.len()).filter(|&x| members[x]).map(|x| d.prob(x)).sum();
            if eta >= gamma {
                prop_assert!(piece_violation(&fam, g.values(), d.masses(), &members) <= eps + 1e-12);
            }
        }
    }

    #[test]
    fn glued_hardcore_is_a_distribution(seed in any::<u64>(), mass in any::<bool>()) {
        let (g, d) = instance(seed, 5, true, seed % 2 == 0);
        let fam = closed_juntas(5, 2);
        let (p, pieces, _) = ihcl_pp(&fam, &g, &d, 0.2, 0.05).unwrap();
        let filter = GoodPieceFilter::by_balance(&p.stats, 0.05, 0.05);
        prop_assume!(pieces.iter().any(|h| h.h.is_some() && filter.is_good(h.piece_id)));
        let weights = if mass { GlueWeights::Mass } else { GlueWeights::default() };
        let glued = glue_hardcore(&p, &pieces, &d, &filter, weights).unwrap();
        let h = glued.h.masses();
        prop_assert!((h.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(h.iter().all(|&m| m >= 0.0));
        for x in 0..h.len() {
            if h[x] > 0.0 {
                prop_assert!(filter.is_good(p.assign[x]));
            }
        }
    }

    #[test]
    fn dense_model_pieces_keep_their_books(seed in any::<u64>()) {
        let dom = Domain::bits(4);
        let s = gen_dist(&DistSpec::Random, &dom, &mut stream_rng(seed, 1)).unwrap();
        let v = gen_dist(&DistSpec::Random, &dom, &mut stream_rng(seed, 2)).unwrap();
        let inst = DmtInstance::augmented(&s, &v).unwrap();
        let lifted = lift_family(&closed_juntas(4, 1)).unwrap();
        let pp = dmt_pp(&lifted, &inst, 0.1, 0.05).unwrap();
        for piece in &pp.pieces {
            let members = pp.partition.mask(piece.piece_id);
            let stats = &pp.partition.stats[piece.piece_id];
            let s_mass: f64 = (0..members.len()).filter(|&x| members[x]).map(|x| inst.dist_s.prob(x)).sum();
            let v_mass: f64 = (0..members.len()).filter(|&x| members[x]).map(|x| inst.dist_v.prob(x)).sum();
            prop_assert!((piece.delta_p - v_mass).abs() <= 1e-12);
            prop_assert!((stats.eta - (s_mass + v_mass) / 2.0).abs() <= 1e-12);
            prop_assert!((piece.v - stats.v).abs() <= 1e-12);
            prop_assert!((piece.s_p.total() - 1.0).abs() <= 1e-12 && (piece.v_p.total() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn pame_witness_entropy_is_piece_label_mass(seed in any::<u64>()) {
        let dom = Domain::bits(4);
        let g = gen_target(&TargetSpec::RandomFractional { low: 0.1, high: 0.9 }, &dom, &mut stream_rng(seed, 0)).unwrap();
        let j = JointDist::from_bernoulli(&g, Dist::uniform(16)).unwrap();
        let fam = close_family(32, regkit::harness::generate::juntas(&dom.with_labels(2), 1).unwrap()).unwrap();
        let pp = pame_pp(&fam, &j, 0.2, 0.05).unwrap();
        for w in &pp.witnesses {
            let m = pp.partition.stats[w.piece_id.unwrap()].m;
            prop_assert!((w.measured_ame + m.log2()).abs() <= 1e-12);
            prop_assert!(w.measured_advantage <= 0.2 + 1e-12);
        }
    }
}
