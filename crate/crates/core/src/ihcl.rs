//! Per-piece hardcore distributions, good-piece filtering, gluing, recovery
//! of a single dense hardcore distribution, and conversion to sets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bernoulli::{boosted_minority_distribution, hardness_of, max_agreement};
use crate::domain::{mix_to_density, BoundedFn, Dist, Family, NamedFn, NORM_TOL};
use crate::error::{check_len, Error, Result};
use crate::mc::{build_approx_mc_partition, McReport};
use crate::partition::{Partition, PieceStats};

/// RNG stream reserved for set sampling.
pub const SET_STREAM: u64 = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HardcorePiece {
    pub piece_id: usize,
    /// Hardcore distribution supported on the piece; `None` for degenerate pieces.
    pub h: Option<Dist>,
    /// Density of `h` in `d|_P`: `2 b_P`.
    pub density_claim: f64,
    /// Agreement slack `eps / (2 b_P (1 - b_P))`; zero for degenerate pieces.
    pub eps_p: f64,
    /// Best agreement of a family member with the target on `h`.
    pub max_agreement: Option<f64>,
    pub degenerate: bool,
}

impl HardcorePiece {
    pub fn agreement_bound(&self) -> f64 {
        0.5 + self.eps_p
    }
}

/// Pieces of mass at least `gamma` whose balance statistic is at least `tau`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoodPieceFilter {
    pub gamma: f64,
    pub tau: f64,
    pub flags: Vec<bool>,
}

impl GoodPieceFilter {
    /// Balance statistic `b_P = min(v_P, 1 - v_P)`.
    pub fn by_balance(stats: &[PieceStats], gamma: f64, tau: f64) -> Self {
        Self::with(stats, gamma, tau, |s| s.b)
    }

    /// Balance statistic `1 - m_P`.
    pub fn by_label_mass(stats: &[PieceStats], gamma: f64, tau: f64) -> Self {
        Self::with(stats, gamma, tau, |s| 1.0 - s.m)
    }

    fn with(stats: &[PieceStats], gamma: f64, tau: f64, stat: impl Fn(&PieceStats) -> f64) -> Self {
        let flags = stats.iter().map(|s| !s.degenerate && s.eta >= gamma && stat(s) >= tau).collect();
        GoodPieceFilter { gamma, tau, flags }
    }

    pub fn is_good(&self, piece: usize) -> bool {
        self.flags[piece]
    }

    pub fn count(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }
}

/// Hardcore distribution on the piece: the minority-boosted `d|_P`.
pub fn ihcl_pp(
    fam: &Family,
    g: &BoundedFn,
    d: &Dist,
    eps: f64,
    gamma: f64,
) -> Result<(Partition, Vec<HardcorePiece>, McReport)> {
    if !g.is_boolean() {
        return Err(Error::Invalid("hardcore construction needs a boolean target".into()));
    }
    let (p, report, _) = build_approx_mc_partition(fam, g, d, eps, gamma)?;
    let mut pieces = Vec::new();
    for (id, s) in p.stats.iter().enumerate() {
        if s.degenerate || s.eta < gamma {
            continue;
        }
        if s.b <= 0.0 {
            pieces.push(HardcorePiece {
                piece_id: id,
                h: None,
                density_claim: 0.0,
                eps_p: 0.0,
                max_agreement: None,
                degenerate: true,
            });
            continue;
        }
        let local = d.conditional(|x| p.assign[x] == id)?;
        let boost = boosted_minority_distribution(g, &local)?;
        let mut piece = HardcorePiece {
            piece_id: id,
            density_claim: boost.density_claim,
            eps_p: eps / (2.0 * s.b * (1.0 - s.b)),
            h: Some(boost.mu),
            max_agreement: None,
            degenerate: false,
        };
        piece.max_agreement = Some(max_agreement(g, fam, piece.h.as_ref().unwrap())?.0);
        pieces.push(piece);
    }
    Ok((p, pieces, report))
}

/// `H_P(x) ∝ d(x) |g(x) - v_P|` on `P`.
///
/// Weighting by `d` makes this coincide with the minority boost for any `d`;
/// under uniform `d|_P` it is the plain normalized residual.
pub fn ttv_residual_distribution(g: &BoundedFn, v_p: f64, piece: &[bool], d: &Dist) -> Result<Dist> {
    check_len(d.len(), g.len())?;
    check_len(d.len(), piece.len())?;
    let w: Vec<f64> =
        (0..d.len()).map(|x| if piece[x] { d.prob(x) * (g.get(x) - v_p).abs() } else { 0.0 }).collect();
    let z: f64 = w.iter().sum();
    if z <= 0.0 {
        return Err(Error::Degenerate("target equals the piece mean everywhere on the piece".into()));
    }
    Ok(Dist::from_raw(w.into_iter().map(|m| m / z).collect()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BalanceReport {
    /// `E_P[b_P]` with `P` drawn by mass.
    pub mean_balance: f64,
    /// `E_P[b_P 1_G(P)]`.
    pub good_balance: f64,
    /// Agreement of the per-piece majority vote with the target.
    pub majority_agreement: f64,
    /// Hardness of the target against the family plus the majority vote.
    pub augmented_hardness: f64,
    pub delta: f64,
    /// `delta - gamma k - tau`.
    pub bound: f64,
    /// Whether the target is `delta`-hard against the augmented family.
    pub premise_holds: bool,
    /// `premise_holds` implies `good_balance >= bound`.
    pub pass: bool,
}

/// The per-piece majority vote `x -> 1[v_{P(x)} >= 1/2]`.
pub fn majority_predictor(p: &Partition) -> Result<BoundedFn> {
    let values: Vec<f64> = p.stats.iter().map(|s| if s.v >= 0.5 { 1.0 } else { 0.0 }).collect();
    p.piecewise(&values)
}

pub fn average_balance_check(
    p: &Partition,
    g: &BoundedFn,
    d: &Dist,
    fam: &Family,
    delta: f64,
    filter: &GoodPieceFilter,
) -> Result<BalanceReport> {
    check_len(p.k, filter.flags.len())?;
    let mean_balance: f64 = p.stats.iter().map(|s| s.eta * s.b).sum();
    let good_balance: f64 =
        p.stats.iter().zip(&filter.flags).filter(|(_, &good)| good).map(|(s, _)| s.eta * s.b).sum();
    let maj = majority_predictor(p)?;
    let majority_agreement = crate::bernoulli::yao_agreement(&maj, g, d)?;
    let augmented = fam.augmented(vec![NamedFn::new("majority", maj)])?;
    let augmented_hardness = hardness_of(g, &augmented, d)?;
    let bound = delta - filter.gamma * p.k as f64 - filter.tau;
    let premise_holds = augmented_hardness >= delta;
    Ok(BalanceReport {
        mean_balance,
        good_balance,
        majority_agreement,
        augmented_hardness,
        delta,
        bound,
        premise_holds,
        pass: !premise_holds || good_balance >= bound,
    })
}

/// How good pieces are weighted when glued.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GlueWeights {
    /// Weight `eta_P b_P`, which makes the glued density exactly `2 E[b_P 1_G]`.
    #[default]
    MassTimesBalance,
    /// Weight `eta_P`; the glued density is then `2 eta_G min_G b_P`.
    Mass,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GluedHardcore {
    pub h: Dist,
    pub weights: GlueWeights,
    /// Glue weight per piece (zero off the good pieces).
    pub piece_weights: Vec<f64>,
    /// Largest `rho` with `rho H <= d` pointwise.
    pub density_measured: f64,
    /// Density predicted from the piece statistics.
    pub density_claim: f64,
    pub max_agreement: Option<f64>,
    pub rescaled: bool,
    /// Weight of `d` mixed in by `rescale_to_density`.
    pub rescale_weight: f64,
    /// Total-variation distance moved by `rescale_to_density`.
    pub rescale_tv: f64,
}

pub fn glue_hardcore(
    p: &Partition,
    pieces: &[HardcorePiece],
    d: &Dist,
    filter: &GoodPieceFilter,
    weights: GlueWeights,
) -> Result<GluedHardcore> {
    check_len(p.k, filter.flags.len())?;
    check_len(p.len(), d.len())?;
    let mut piece_weights = vec![0.0; p.k];
    for hp in pieces {
        if filter.is_good(hp.piece_id) && hp.h.is_some() {
            let s = &p.stats[hp.piece_id];
            piece_weights[hp.piece_id] = match weights {
                GlueWeights::MassTimesBalance => s.eta * s.b,
                GlueWeights::Mass => s.eta,
            };
        }
    }
    let z: f64 = piece_weights.iter().sum();
    if z <= 0.0 {
        return Err(Error::Degenerate("no good pieces to glue".into()));
    }
    piece_weights.iter_mut().for_each(|w| *w /= z);
    let mut mass = vec![0.0; d.len()];
    for hp in pieces {
        let w = piece_weights[hp.piece_id];
        if let (true, Some(h)) = (w > 0.0, &hp.h) {
            for (x, m) in mass.iter_mut().enumerate() {
                *m += w * h.prob(x);
            }
        }
    }
    let h = Dist::from_raw(mass);
    let density_measured = h.density_in(d)?;
    let density_claim = p
        .stats
        .iter()
        .enumerate()
        .filter(|(i, _)| piece_weights[*i] > 0.0)
        .map(|(i, s)| 2.0 * s.b * s.eta / piece_weights[i])
        .fold(f64::INFINITY, f64::min);
    Ok(GluedHardcore {
        h,
        weights,
        piece_weights,
        density_measured,
        density_claim,
        max_agreement: None,
        rescaled: false,
        rescale_weight: 0.0,
        rescale_tv: 0.0,
    })
}

impl GluedHardcore {
    pub fn measure(&mut self, g: &BoundedFn, fam: &Family) -> Result<f64> {
        let a = max_agreement(g, fam, &self.h)?.0;
        self.max_agreement = Some(a);
        Ok(a)
    }

    /// Mixes in `d` just enough to reach density `target`, recording the cost.
    pub fn rescale_to_density(&mut self, d: &Dist, target: f64) -> Result<()> {
        if let Some(m) = mix_to_density(&self.h, d, target)? {
            self.h = m.dist;
            self.rescale_weight = m.weight;
            self.rescale_tv = m.tv;
            self.density_measured = self.h.density_in(d)?;
            self.rescaled = true;
            self.max_agreement = None;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IhclParams {
    pub eps: f64,
    pub delta: f64,
    pub eps_pp: f64,
    pub gamma: f64,
    pub tau: f64,
}

impl IhclParams {
    pub fn new(eps: f64, delta: f64) -> Self {
        let eps_pp = eps * eps * delta;
        IhclParams { eps, delta, eps_pp, gamma: eps * eps_pp, tau: eps * delta }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IhclRecovery {
    pub params: IhclParams,
    pub partition: Partition,
    pub mc: McReport,
    pub pieces: Vec<HardcorePiece>,
    pub filter: GoodPieceFilter,
    pub balance: BalanceReport,
    pub glued: GluedHardcore,
    /// Smallest `c >= 0` with `density >= 2 delta (1 - c eps)`.
    pub density_constant: f64,
    /// Smallest `c' >= 0` with `agreement <= 1/2 + c' eps`.
    pub hardness_constant: f64,
    /// `1/2 + eps_pp / tau`.
    pub agreement_bound: f64,
}

/// Recovers one hardcore distribution of density close to `2 delta`.
///
/// The premise, `delta`-hardness against the family plus the majority vote of
/// the partition, is measured and reported as a precondition failure.
pub fn recover_ihcl(fam: &Family, g: &BoundedFn, d: &Dist, eps: f64, delta: f64) -> Result<IhclRecovery> {
    if !(delta > 0.0 && delta <= 0.5) {
        return Err(Error::Invalid(format!("delta {delta} outside (0, 1/2]")));
    }
    let params = IhclParams::new(eps, delta);
    let (partition, pieces, mc) = ihcl_pp(fam, g, d, params.eps_pp, params.gamma)?;
    let filter = GoodPieceFilter::by_balance(&partition.stats, params.gamma, params.tau);
    let balance = average_balance_check(&partition, g, d, fam, delta, &filter)?;
    if !balance.premise_holds {
        return Err(Error::Precondition(format!(
            "target is only {:.6}-hard against the family plus the majority vote, below the requested {delta}",
            balance.augmented_hardness
        )));
    }
    let mut glued = glue_hardcore(&partition, &pieces, d, &filter, GlueWeights::default())?;
    let agreement = glued.measure(g, fam)?;
    Ok(IhclRecovery {
        density_constant: ((1.0 - glued.density_measured / (2.0 * delta)) / eps).max(0.0),
        hardness_constant: ((agreement - 0.5) / eps).max(0.0),
        agreement_bound: 0.5 + params.eps_pp / params.tau,
        params,
        partition,
        mc,
        pieces,
        filter,
        balance,
        glued,
    })
}

/// Inclusion probability used when turning a distribution into a set.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InclusionRule {
    /// `H(x) / max_y H(y)`.
    #[default]
    RelativeToMax,
    /// `H(x)` taken directly as a probability.
    Direct,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HardcoreSet {
    pub members: Vec<usize>,
    pub domain_size: usize,
    pub rule: InclusionRule,
    /// Expected `|S| / |X|` under the inclusion rule.
    pub density_claim: f64,
    pub attempts: usize,
}

impl HardcoreSet {
    pub fn density(&self) -> f64 {
        self.members.len() as f64 / self.domain_size as f64
    }
}

/// Resampling attempts before an empty draw becomes an error.
pub const SET_RETRIES: usize = 16;

/// Draws each point independently with the rule's inclusion probability.
pub fn sample_hardcore_set(h: &Dist, d: &Dist, seed: u64, rule: InclusionRule) -> Result<HardcoreSet> {
    check_len(d.len(), h.len())?;
    let first = d.prob(0);
    if d.masses().iter().any(|&m| (m - first).abs() > NORM_TOL / d.len() as f64) {
        return Err(Error::Precondition("set conversion needs a uniform base distribution".into()));
    }
    let top = h.max_mass();
    if top <= 0.0 {
        return Err(Error::Degenerate("hardcore distribution has no mass".into()));
    }
    let probs: Vec<f64> = h
        .masses()
        .iter()
        .map(|&m| match rule {
            InclusionRule::RelativeToMax => m / top,
            InclusionRule::Direct => m.min(1.0),
        })
        .collect();
    let density_claim = probs.iter().sum::<f64>() / h.len() as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(SET_STREAM);
    for attempt in 1..=SET_RETRIES {
        let members: Vec<usize> = probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p >= 1.0 || rng.random::<f64>() < p)
            .map(|(x, _)| x)
            .collect();
        if !members.is_empty() {
            return Ok(HardcoreSet { members, domain_size: h.len(), rule, density_claim, attempts: attempt });
        }
    }
    Err(Error::Degenerate(format!("sampled set empty after {SET_RETRIES} attempts")))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SetReport {
    pub density: f64,
    pub density_claim: f64,
    pub max_agreement: f64,
    /// `1/2 + 4 eps`.
    pub agreement_bound: f64,
    /// `log2 |F| <= |X| eps^2 delta^2`.
    pub family_size_ok: bool,
    pub hardness_ok: bool,
}

pub fn verify_hardcore_set(
    set: &HardcoreSet,
    g: &BoundedFn,
    fam: &Family,
    eps: f64,
    delta: f64,
) -> Result<SetReport> {
    check_len(set.domain_size, g.len())?;
    let inside: Vec<bool> = {
        let mut v = vec![false; set.domain_size];
        set.members.iter().for_each(|&x| v[x] = true);
        v
    };
    let uniform_on_set = Dist::uniform(set.domain_size).conditional(|x| inside[x])?;
    let max_agreement = max_agreement(g, fam, &uniform_on_set)?.0;
    let agreement_bound = 0.5 + 4.0 * eps;
    Ok(SetReport {
        density: set.density(),
        density_claim: set.density_claim,
        max_agreement,
        agreement_bound,
        family_size_ok: (fam.len() as f64).log2() <= set.domain_size as f64 * eps * eps * delta * delta,
        hardness_ok: max_agreement <= agreement_bound,
    })
}
