//! Agreement, hardness and advantage measurements against a constant-mean
//! Bernoulli reference, and the minority-boosting distribution.

use serde::{Deserialize, Serialize};

use crate::domain::{BoundedFn, Dist, Family, IDENTITY_TOL};
use crate::error::{check_len, Error, Result};

/// `Pr[f_rand(x) = g_rand(x)]` for `x ~ d`, where `u_rand(x) ~ Bern(u(x))` independently.
pub fn yao_agreement(f: &BoundedFn, g: &BoundedFn, d: &Dist) -> Result<f64> {
    check_len(d.len(), f.len())?;
    check_len(d.len(), g.len())?;
    let direct: f64 = (0..d.len())
        .map(|x| {
            let (a, b) = (f.get(x), g.get(x));
            d.prob(x) * (a * b + (1.0 - a) * (1.0 - b))
        })
        .sum();
    debug_assert!((direct - yao_correlation_form(f, g, d)?).abs() <= IDENTITY_TOL);
    Ok(direct)
}

/// The same agreement written as `2 E[(f - 1/2)(g - 1/2)] + 1/2`.
pub fn yao_correlation_form(f: &BoundedFn, g: &BoundedFn, d: &Dist) -> Result<f64> {
    check_len(d.len(), f.len())?;
    check_len(d.len(), g.len())?;
    let corr: f64 = (0..d.len()).map(|x| d.prob(x) * (f.get(x) - 0.5) * (g.get(x) - 0.5)).sum();
    Ok(2.0 * corr + 0.5)
}

/// Best agreement with `g` over the family, with the index of a maximizer.
pub fn max_agreement(g: &BoundedFn, fam: &Family, d: &Dist) -> Result<(f64, usize)> {
    if fam.is_empty() {
        return Err(Error::Invalid("empty family".into()));
    }
    let mut best = (f64::NEG_INFINITY, 0);
    for (i, f) in fam.iter().enumerate() {
        let a = yao_agreement(&f.table, g, d)?;
        if a > best.0 {
            best = (a, i);
        }
    }
    Ok(best)
}

/// Largest `delta` such that `g` is `delta`-hard for the family: `1 - max_f agreement(f, g)`.
pub fn hardness_of(g: &BoundedFn, fam: &Family, d: &Dist) -> Result<f64> {
    Ok(1.0 - max_agreement(g, fam, d)?.0)
}

/// Advantage of members over the product domain (indexed `2x + b`) in telling
/// `(x, g_rand(x))` from `(x, Bern(v))`, with `v = E_d[g]`.
pub fn joint_indist_advantage(g: &BoundedFn, d: &Dist, fprime: &Family) -> Result<f64> {
    check_len(d.len(), g.len())?;
    check_len(2 * d.len(), fprime.domain_size())?;
    let v = d.expect(g)?;
    let mut worst: f64 = 0.0;
    for f in fprime.iter() {
        let t = f.table.values();
        let s: f64 = (0..d.len()).map(|x| d.prob(x) * (t[2 * x + 1] - t[2 * x]) * (g.get(x) - v)).sum();
        worst = worst.max(s.abs());
    }
    Ok(worst)
}

/// The two class-conditional laws `d | g_rand = 1` and `d | g_rand = 0`.
pub fn class_conditionals(g: &BoundedFn, d: &Dist) -> Result<(Dist, Dist)> {
    check_len(d.len(), g.len())?;
    let ones: Vec<f64> = (0..d.len()).map(|x| d.prob(x) * g.get(x)).collect();
    let zeros: Vec<f64> = (0..d.len()).map(|x| d.prob(x) * (1.0 - g.get(x))).collect();
    let (z1, z0): (f64, f64) = (ones.iter().sum(), zeros.iter().sum());
    if z1 <= 0.0 || z0 <= 0.0 {
        return Err(Error::Degenerate("one class has zero mass".into()));
    }
    Ok((
        Dist::from_raw(ones.into_iter().map(|m| m / z1).collect()),
        Dist::from_raw(zeros.into_iter().map(|m| m / z0).collect()),
    ))
}

/// `max_f |E_{d | g=1}[f] - E_{d | g=0}[f]|` under randomized class semantics.
pub fn class_conditional_advantage(g: &BoundedFn, d: &Dist, fam: &Family) -> Result<f64> {
    let (d1, d0) = class_conditionals(g, d)?;
    let mut worst: f64 = 0.0;
    for f in fam.iter() {
        worst = worst.max((d1.expect(&f.table)? - d0.expect(&f.table)?).abs());
    }
    Ok(worst)
}

/// Reweighting of `d` that gives both values of a boolean target equal mass.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinorityBoost {
    pub mu: Dist,
    /// `E_d[g]`.
    pub v: f64,
    /// Density of `mu` in `d`, equal to `2 min(v, 1 - v)`.
    pub density_claim: f64,
    pub target_mean: f64,
}

impl MinorityBoost {
    /// Agreement ceiling on `mu` for a family against which `g` is
    /// `eps`-indistinguishable from the constant `v`.
    pub fn agreement_bound(&self, eps: f64) -> f64 {
        0.5 + eps / (2.0 * self.v * (1.0 - self.v))
    }
}

/// `mu(x) = d(x) / (2v)` where `g = 1` and `d(x) / (2(1 - v))` where `g = 0`.
pub fn boosted_minority_distribution(g: &BoundedFn, d: &Dist) -> Result<MinorityBoost> {
    check_len(d.len(), g.len())?;
    if !g.is_boolean() {
        return Err(Error::Invalid("minority boosting needs a boolean target".into()));
    }
    let v = d.expect(g)?;
    if v <= 0.0 || v >= 1.0 {
        return Err(Error::Degenerate(format!("target mean {v} leaves no minority to boost")));
    }
    let mass = (0..d.len())
        .map(|x| if g.get(x) == 1.0 { d.prob(x) / (2.0 * v) } else { d.prob(x) / (2.0 * (1.0 - v)) })
        .collect();
    Ok(MinorityBoost { mu: Dist::from_raw(mass), v, density_claim: 2.0 * v.min(1.0 - v), target_mean: 0.5 })
}
