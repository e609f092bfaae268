//! Pseudodensity, per-piece dense models over a two-sided domain, and
//! recovery of a single dense model.

use serde::{Deserialize, Serialize};

use crate::domain::{mix_to_density, BoundedFn, Dist, Family, NamedFn, NORM_TOL};
use crate::error::{check_len, Error, Result};
use crate::ihcl::GoodPieceFilter;
use crate::mc::{build_approx_mc_partition, McReport};
use crate::partition::Partition;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    S,
    V,
}

/// Two distributions on disjoint sides of one tagged domain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DmtInstance {
    pub sides: Vec<Side>,
    pub dist_s: Dist,
    pub dist_v: Dist,
    /// `(dist_s + dist_v) / 2`.
    pub mixture: Dist,
    /// Indicator of the S side.
    pub g: BoundedFn,
}

impl DmtInstance {
    pub fn new(sides: Vec<Side>, dist_s: Dist, dist_v: Dist) -> Result<Self> {
        check_len(sides.len(), dist_s.len())?;
        check_len(sides.len(), dist_v.len())?;
        for (x, side) in sides.iter().enumerate() {
            let stray = match side {
                Side::S => dist_v.prob(x),
                Side::V => dist_s.prob(x),
            };
            if stray > 0.0 {
                return Err(Error::Invalid(format!("point {x} carries mass from the other side")));
            }
        }
        if (dist_s.total() - 1.0).abs() > NORM_TOL || (dist_v.total() - 1.0).abs() > NORM_TOL {
            return Err(Error::Invalid("each side must carry a distribution".into()));
        }
        let mixture = dist_s.mix(&dist_v, 0.5)?;
        let g = BoundedFn::from_bools(sides.iter().map(|s| *s == Side::S));
        Ok(DmtInstance { sides, dist_s, dist_v, mixture, g })
    }

    /// `X x {0, 1}` indexed `2x + b`, with `S` placed on `b = 1` and `V` on `b = 0`.
    pub fn augmented(sdist: &Dist, vdist: &Dist) -> Result<Self> {
        check_len(sdist.len(), vdist.len())?;
        let n = sdist.len();
        let mut s = vec![0.0; 2 * n];
        let mut v = vec![0.0; 2 * n];
        let mut sides = vec![Side::V; 2 * n];
        for x in 0..n {
            s[2 * x + 1] = sdist.prob(x);
            v[2 * x] = vdist.prob(x);
            sides[2 * x + 1] = Side::S;
        }
        DmtInstance::new(sides, Dist::from_raw(s), Dist::from_raw(v))
    }
}

/// `f'(x, b) = f(x)` on the augmented domain.
pub fn lift_family(fam: &Family) -> Result<Family> {
    let members = fam
        .iter()
        .map(|f| {
            let t = BoundedFn::new(f.table.values().iter().flat_map(|&v| [v, v]).collect())?;
            Ok(NamedFn::new(f.name.clone(), t))
        })
        .collect::<Result<Vec<_>>>()?;
    Family::from_members(2 * fam.domain_size(), members)
}

/// `max_f (delta E_S[f] - E_V[f])^+`.
pub fn pseudodensity_margin(sdist: &Dist, vdist: &Dist, fam: &Family, delta: f64) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for f in fam.iter() {
        worst = worst.max(delta * sdist.expect(&f.table)? - vdist.expect(&f.table)?);
    }
    Ok(worst)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseModelPiece {
    pub piece_id: usize,
    pub s_p: Dist,
    pub v_p: Dist,
    pub v: f64,
    pub eta: f64,
    /// `eps / (v_P (1 - v_P))`.
    pub eps_p: f64,
    /// `Pr_V[P]`.
    pub delta_p: f64,
    pub measured_advantage: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DmtPp {
    pub partition: Partition,
    pub report: McReport,
    pub pieces: Vec<DenseModelPiece>,
    /// Pieces of mass at least `gamma` that lie on one side only.
    pub degenerate: Vec<usize>,
}

/// `max_f |E_a[f] - E_b[f]|`.
pub fn max_advantage(a: &Dist, b: &Dist, fam: &Family) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for f in fam.iter() {
        worst = worst.max((a.expect(&f.table)? - b.expect(&f.table)?).abs());
    }
    Ok(worst)
}

pub fn dmt_pp(fam: &Family, inst: &DmtInstance, eps: f64, gamma: f64) -> Result<DmtPp> {
    let (partition, report, _) = build_approx_mc_partition(fam, &inst.g, &inst.mixture, eps, gamma)?;
    let mut pieces = Vec::new();
    let mut degenerate = Vec::new();
    for (q, s) in partition.stats.iter().enumerate() {
        if s.degenerate || s.eta < gamma {
            continue;
        }
        if s.v <= 0.0 || s.v >= 1.0 {
            degenerate.push(q);
            continue;
        }
        let inside = |x: usize| partition.assign[x] == q;
        let s_mass = inst.dist_s.mass_where(inside);
        let delta_p = inst.dist_v.mass_where(inside);
        let v_closed = s_mass / (2.0 * s.eta);
        if (v_closed - s.v).abs() > NORM_TOL || (delta_p - 2.0 * s.eta * (1.0 - s.v)).abs() > NORM_TOL {
            return Err(Error::Degenerate(format!("piece {q} breaks the mixture bookkeeping")));
        }
        let s_p = inst.dist_s.conditional(inside)?;
        let v_p = inst.dist_v.conditional(inside)?;
        let measured_advantage = max_advantage(&s_p, &v_p, fam)?;
        pieces.push(DenseModelPiece {
            piece_id: q,
            eps_p: eps / (s.v * (1.0 - s.v)),
            v: s.v,
            eta: s.eta,
            delta_p,
            s_p,
            v_p,
            measured_advantage,
        });
    }
    Ok(DmtPp { partition, report, pieces, degenerate })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DmtRecovery {
    pub eps: f64,
    pub delta: f64,
    pub eps_pp: f64,
    pub gamma: f64,
    pub tau: f64,
    pub pp: DmtPp,
    pub filter: GoodPieceFilter,
    /// Pseudodensity margin against the family plus the piece indicators.
    pub margin: f64,
    /// Every piece satisfies `delta Pr_S[P] <= Pr_V[P] + eps_pp`.
    pub piece_bound_ok: bool,
    /// The model, a distribution over the original domain.
    pub model: Dist,
    /// `S`-mass of the good pieces.
    pub good_mass: f64,
    pub density: f64,
    pub advantage: f64,
    /// Smallest `c >= 0` with `density >= delta (1 - c eps)`.
    pub density_constant: f64,
    /// `advantage delta / eps`.
    pub advantage_constant: f64,
    pub rescaled: bool,
    pub rescale_tv: f64,
}

/// Builds a distribution `mu` dense in `vdist` that the family cannot tell from `sdist`.
pub fn recover_dmt(fam: &Family, sdist: &Dist, vdist: &Dist, eps: f64, delta: f64) -> Result<DmtRecovery> {
    check_len(fam.domain_size(), sdist.len())?;
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::Invalid(format!("delta {delta} outside (0, 1]")));
    }
    let n = sdist.len();
    let eps_pp = eps * eps * delta;
    let gamma = eps * eps_pp;
    let tau = eps * delta;
    let inst = DmtInstance::augmented(sdist, vdist)?;
    let lifted = lift_family(fam)?;
    let pp = dmt_pp(&lifted, &inst, eps_pp, gamma)?;
    let p = &pp.partition;

    let mut pr_s = vec![0.0; p.k];
    let mut pr_v = vec![0.0; p.k];
    for x in 0..n {
        pr_s[p.assign[2 * x + 1]] += sdist.prob(x);
        pr_v[p.assign[2 * x]] += vdist.prob(x);
    }
    let mut margin = pseudodensity_margin(sdist, vdist, fam, delta)?;
    for q in 0..p.k {
        margin = margin.max(delta * pr_s[q] - pr_v[q]);
    }
    if margin > eps_pp {
        return Err(Error::Precondition(format!(
            "pseudodensity margin {margin:.6e} at delta = {delta} exceeds {eps_pp:.6e}"
        )));
    }
    let piece_bound_ok = (0..p.k).all(|q| delta * pr_s[q] <= pr_v[q] + eps_pp);

    let filter = GoodPieceFilter::by_balance(&p.stats, gamma, tau);
    let good_mass: f64 = (0..p.k).filter(|&q| filter.is_good(q)).map(|q| pr_s[q]).sum();
    if good_mass <= 0.0 {
        return Err(Error::Degenerate("no good pieces carry S mass".into()));
    }
    let mass: Vec<f64> = (0..n)
        .map(|x| {
            let q = p.assign[2 * x];
            if filter.is_good(q) && pr_v[q] > 0.0 {
                pr_s[q] * vdist.prob(x) / pr_v[q] / good_mass
            } else {
                0.0
            }
        })
        .collect();
    let model = Dist::from_raw(mass);
    let density = model.density_in(vdist)?;
    let advantage = max_advantage(sdist, &model, fam)?;
    Ok(DmtRecovery {
        eps,
        delta,
        eps_pp,
        gamma,
        tau,
        filter,
        margin,
        piece_bound_ok,
        good_mass,
        density,
        advantage,
        density_constant: ((1.0 - density / delta) / eps).max(0.0),
        advantage_constant: advantage * delta / eps,
        model,
        pp,
        rescaled: false,
        rescale_tv: 0.0,
    })
}

impl DmtRecovery {
    /// Mixes `vdist` into the model until its density reaches `target`.
    pub fn rescale_to_density(&mut self, fam: &Family, sdist: &Dist, vdist: &Dist, target: f64) -> Result<()> {
        if let Some(m) = mix_to_density(&self.model, vdist, target)? {
            self.model = m.dist;
            self.rescale_tv = m.tv;
            self.rescaled = true;
            self.density = self.model.density_in(vdist)?;
            self.advantage = max_advantage(sdist, &self.model, fam)?;
            self.density_constant = ((1.0 - self.density / self.delta) / self.eps).max(0.0);
            self.advantage_constant = self.advantage * self.delta / self.eps;
        }
        Ok(())
    }
}
