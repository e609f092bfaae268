//! Seeded generators for domains, targets, families and distributions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{make_dist, BoundedFn, Dist, Domain, NamedFn};
use crate::error::{Error, Result};
use crate::pame::JointDist;

pub const TARGET_STREAM: u64 = 0;
pub const DIST_STREAM: u64 = 1;
pub const FAMILY_STREAM: u64 = 2;

/// A generator for one module's draws: stream `stream` of the run seed.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Largest joint radix a junta may read.
const MAX_JUNTA_INPUTS: usize = 16;

fn subsets(n: usize, max_size: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    fn rec(start: usize, n: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if !cur.is_empty() {
            out.push(cur.clone());
        }
        if left == 0 {
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, left - 1, cur, out);
            cur.pop();
        }
    }
    rec(0, n, max_size, &mut Vec::new(), &mut out);
    out.sort_by_key(|s| s.len());
    out
}

/// Every boolean function of at most `arity` coordinates.
pub fn juntas(domain: &Domain, arity: usize) -> Result<Vec<NamedFn>> {
    let mut out = Vec::new();
    for coords in subsets(domain.radices.len(), arity) {
        let inputs: usize = coords.iter().map(|&c| domain.radices[c]).product();
        if inputs > MAX_JUNTA_INPUTS {
            return Err(Error::TooLarge(format!("junta on {coords:?} reads {inputs} input values")));
        }
        let code = |x: usize| {
            coords.iter().rev().fold(0, |acc, &c| acc * domain.radices[c] + domain.digit(x, c))
        };
        for mask in 0u32..(1u32 << inputs) {
            let t = BoundedFn::from_bools((0..domain.size).map(|x| (mask >> code(x)) & 1 == 1));
            out.push(NamedFn::new(format!("junta{coords:?}#{mask}"), t));
        }
    }
    Ok(out)
}

fn need_bits(domain: &Domain, what: &str) -> Result<usize> {
    domain.bit_width().ok_or_else(|| Error::Invalid(format!("{what} needs a boolean-cube domain")))
}

/// Conjunctions of at most `width` literals.
pub fn conjunctions(domain: &Domain, width: usize) -> Result<Vec<NamedFn>> {
    let bits = need_bits(domain, "conjunctions")?;
    let mut out = Vec::new();
    for coords in subsets(bits, width) {
        for signs in 0u32..(1u32 << coords.len()) {
            let t = BoundedFn::from_bools((0..domain.size).map(|x| {
                coords.iter().enumerate().all(|(i, &c)| ((x >> c) & 1 == 1) == ((signs >> i) & 1 == 1))
            }));
            out.push(NamedFn::new(format!("and{coords:?}#{signs}"), t));
        }
    }
    Ok(out)
}

/// Parities of at most `width` coordinates.
pub fn parities(domain: &Domain, width: usize) -> Result<Vec<NamedFn>> {
    let bits = need_bits(domain, "parities")?;
    Ok(subsets(bits, width)
        .into_iter()
        .map(|coords| {
            let mask: usize = coords.iter().map(|c| 1 << c).sum();
            let t = BoundedFn::from_bools((0..domain.size).map(|x| (x & mask).count_ones() % 2 == 1));
            NamedFn::new(format!("xor{coords:?}"), t)
        })
        .collect())
}

pub fn explicit_tables(domain: &Domain, tables: &[Vec<f64>]) -> Result<Vec<NamedFn>> {
    tables
        .iter()
        .enumerate()
        .map(|(i, t)| {
            crate::error::check_len(domain.size, t.len())?;
            Ok(NamedFn::new(format!("table{i}"), BoundedFn::new(t.clone())?))
        })
        .collect()
}

/// Distribution specification.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistSpec {
    #[default]
    Uniform,
    Explicit { weights: Vec<f64> },
    /// Independent coordinates with `Pr[x_i = 1] = p[i]` on a boolean cube.
    ProductBiased { p: Vec<f64> },
    /// Independent uniform weights in `[0, 1)`, normalized.
    Random,
    /// `base` conditioned on the listed `(coordinate, value)` pairs.
    Conditioned { base: Box<DistSpec>, fixed: Vec<(usize, usize)> },
}

pub fn gen_dist(spec: &DistSpec, domain: &Domain, rng: &mut ChaCha8Rng) -> Result<Dist> {
    match spec {
        DistSpec::Uniform => Ok(Dist::uniform(domain.size)),
        DistSpec::Explicit { weights } => {
            crate::error::check_len(domain.size, weights.len())?;
            make_dist(weights)
        }
        DistSpec::ProductBiased { p } => {
            let bits = need_bits(domain, "a product-biased distribution")?;
            crate::error::check_len(bits, p.len())?;
            if p.iter().any(|q| !(0.0..=1.0).contains(q)) {
                return Err(Error::Invalid("coordinate biases must lie in [0, 1]".into()));
            }
            let w: Vec<f64> = (0..domain.size)
                .map(|x| (0..bits).map(|i| if (x >> i) & 1 == 1 { p[i] } else { 1.0 - p[i] }).product())
                .collect();
            make_dist(&w)
        }
        DistSpec::Random => make_dist(&(0..domain.size).map(|_| rng.random::<f64>()).collect::<Vec<_>>()),
        DistSpec::Conditioned { base, fixed } => {
            let base = gen_dist(base, domain, rng)?;
            if fixed.iter().any(|&(c, v)| c >= domain.radices.len() || v >= domain.radices[c]) {
                return Err(Error::Invalid("conditioning on a coordinate value outside the domain".into()));
            }
            base.conditional(|x| fixed.iter().all(|&(c, v)| domain.digit(x, c) == v))
        }
    }
}

/// Target specification.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetSpec {
    /// Independent bits with `Pr[g(x) = 1] = bias`.
    RandomBoolean { bias: f64 },
    /// Independent values uniform in `[low, high]`.
    RandomFractional { low: f64, high: f64 },
    /// XOR of all bits.
    Parity,
    /// 1 when more than half the bits are set.
    Majority,
    /// The first `a` bits select one of the remaining `2^a` bits.
    Address,
    /// 1 where bit 0 is set, 3/4 elsewhere.
    Counterexample,
    /// `1/2 + tilt (2 x_c - 1) + noise chi(x)`, with `chi` the +-1 parity of all bits.
    TiltedParity { coordinate: usize, tilt: f64, noise: f64 },
    /// Parity on the subcube fixing the listed `(coordinate, value)` pairs,
    /// independent bits with `Pr[1] = bias` elsewhere.
    MaskedParity { fixed: Vec<(usize, usize)>, bias: f64 },
    Table { values: Vec<f64> },
    /// Explicit conditional label table.
    Joint { rows: Vec<Vec<f64>> },
    /// Independent uniform conditional rows over `labels` labels.
    RandomJoint { labels: usize },
    /// Two distributions over the domain for the dense-model pipelines.
    DensePair { s: DistSpec, v: DistSpec },
}

pub fn gen_target(spec: &TargetSpec, domain: &Domain, rng: &mut ChaCha8Rng) -> Result<BoundedFn> {
    let n = domain.size;
    match spec {
        TargetSpec::RandomBoolean { bias } => {
            if !(0.0..=1.0).contains(bias) {
                return Err(Error::Invalid("bias must lie in [0, 1]".into()));
            }
            Ok(BoundedFn::from_bools((0..n).map(|_| rng.random::<f64>() < *bias)))
        }
        TargetSpec::RandomFractional { low, high } => {
            if !(0.0 <= *low && low <= high && *high <= 1.0) {
                return Err(Error::Invalid("need 0 <= low <= high <= 1".into()));
            }
            BoundedFn::new((0..n).map(|_| low + (high - low) * rng.random::<f64>()).collect())
        }
        TargetSpec::Parity => {
            need_bits(domain, "parity")?;
            Ok(BoundedFn::from_bools((0..n).map(|x: usize| x.count_ones() % 2 == 1)))
        }
        TargetSpec::Majority => {
            let bits = need_bits(domain, "majority")?;
            Ok(BoundedFn::from_bools((0..n).map(|x: usize| 2 * x.count_ones() as usize > bits)))
        }
        TargetSpec::Address => {
            let bits = need_bits(domain, "address")?;
            let a = (0..bits).find(|&a| a + (1 << a) == bits).ok_or_else(|| {
                Error::Invalid(format!("address function needs a + 2^a bits, got {bits}"))
            })?;
            Ok(BoundedFn::from_bools((0..n).map(|x| {
                let sel = x & ((1 << a) - 1);
                (x >> (a + sel)) & 1 == 1
            })))
        }
        TargetSpec::Counterexample => {
            need_bits(domain, "the counterexample")?;
            BoundedFn::new((0..n).map(|x| if x & 1 == 1 { 1.0 } else { 0.75 }).collect())
        }
        TargetSpec::TiltedParity { coordinate, tilt, noise } => {
            need_bits(domain, "tilted parity")?;
            if *coordinate >= domain.radices.len() || tilt.abs() + noise.abs() > 0.5 {
                return Err(Error::Invalid("tilted parity needs a valid coordinate and |tilt| + |noise| <= 1/2".into()));
            }
            BoundedFn::new(
                (0..n)
                    .map(|x: usize| {
                        let s = if (x >> coordinate) & 1 == 1 { 1.0 } else { -1.0 };
                        let chi = if x.count_ones() % 2 == 1 { -1.0 } else { 1.0 };
                        0.5 + tilt * s + noise * chi
                    })
                    .collect(),
            )
        }
        TargetSpec::MaskedParity { fixed, bias } => {
            need_bits(domain, "masked parity")?;
            if fixed.iter().any(|&(c, v)| c >= domain.radices.len() || v > 1) || !(0.0..=1.0).contains(bias) {
                return Err(Error::Invalid("masked parity needs valid coordinates and a bias in [0, 1]".into()));
            }
            Ok(BoundedFn::from_bools((0..n).map(|x: usize| {
                let inside = fixed.iter().all(|&(c, v)| (x >> c) & 1 == v);
                let coin = rng.random::<f64>() < *bias;
                if inside { x.count_ones() % 2 == 1 } else { coin }
            })))
        }
        TargetSpec::Table { values } => {
            crate::error::check_len(n, values.len())?;
            BoundedFn::new(values.clone())
        }
        TargetSpec::Joint { .. } | TargetSpec::RandomJoint { .. } | TargetSpec::DensePair { .. } => {
            Err(Error::Invalid("this target kind does not define a single function".into()))
        }
    }
}

/// Labelled target: explicit or random rows, or a `[0, 1]` target read as `Pr[label 1]`.
pub fn gen_joint(spec: &TargetSpec, domain: &Domain, marg: Dist, rng: &mut ChaCha8Rng) -> Result<JointDist> {
    match spec {
        TargetSpec::Joint { rows } => JointDist::new(rows.clone(), marg),
        TargetSpec::RandomJoint { labels } => {
            if *labels < 2 {
                return Err(Error::Invalid("need at least two labels".into()));
            }
            let rows = (0..domain.size)
                .map(|_| {
                    let w: Vec<f64> = (0..*labels).map(|_| rng.random::<f64>() + 1e-3).collect();
                    let z: f64 = w.iter().sum();
                    w.into_iter().map(|v| v / z).collect()
                })
                .collect();
            JointDist::new(rows, marg)
        }
        other => JointDist::from_bernoulli(&gen_target(other, domain, rng)?, marg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::close_family;

    #[test]
    fn closed_two_juntas_on_six_bits() {
        let dom = Domain::bits(6);
        let fam = close_family(64, juntas(&dom, 2).unwrap()).unwrap();
        assert_eq!(fam.len(), 2 + 12 + 15 * 10);
    }

    #[test]
    fn ternary_one_juntas() {
        let dom = Domain::mixed(vec![3, 3, 3]).unwrap();
        let fam = close_family(27, juntas(&dom, 1).unwrap()).unwrap();
        assert_eq!(fam.len(), 2 + 3 * 6);
    }

    #[test]
    fn address_function() {
        let dom = Domain::bits(6);
        let g = gen_target(&TargetSpec::Address, &dom, &mut stream_rng(0, 0)).unwrap();
        // selector 3 reads bit 2 + 3 = 5
        assert_eq!(g.get(0b100011), 1.0);
        assert_eq!(g.get(0b000011), 0.0);
    }

    #[test]
    fn conditioned_product() {
        let dom = Domain::bits(3);
        let spec = DistSpec::Conditioned {
            base: Box::new(DistSpec::ProductBiased { p: vec![0.3, 0.5, 0.5] }),
            fixed: vec![(0, 1)],
        };
        let d = gen_dist(&spec, &dom, &mut stream_rng(0, 1)).unwrap();
        assert!(d.masses().iter().enumerate().all(|(x, &m)| (x & 1 == 1) || m == 0.0));
        assert!((d.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn same_seed_same_draws() {
        let dom = Domain::bits(5);
        let spec = TargetSpec::RandomBoolean { bias: 0.3 };
        let a = gen_target(&spec, &dom, &mut stream_rng(7, TARGET_STREAM)).unwrap();
        let b = gen_target(&spec, &dom, &mut stream_rng(7, TARGET_STREAM)).unwrap();
        assert_eq!(a, b);
    }
}
