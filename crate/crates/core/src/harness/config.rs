//! Experiment configuration and instance materialization.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::generate::{
    conjunctions, explicit_tables, gen_dist, gen_joint, gen_target, juntas, parities, stream_rng, DistSpec,
    TargetSpec, DIST_STREAM, TARGET_STREAM,
};
use crate::domain::{close_family, BoundedFn, Dist, Domain, Family};
use crate::error::{Error, Result};
use crate::ihcl::{GlueWeights, InclusionRule};
use crate::pame::JointDist;

/// Largest domain accepted before any table is generated.
pub const MAX_DOMAIN: usize = 1 << 20;
/// Largest `|X| * |F|` product a single exhaustive check may evaluate.
pub const MAX_PRODUCTS: u128 = 1 << 26;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pipeline {
    Ma,
    Mc,
    IhclPp,
    IhclRecover,
    PamePp,
    PameRecover,
    DmtPp,
    DmtRecover,
    Verify,
}

impl Pipeline {
    pub const ALL: [Pipeline; 9] = [
        Pipeline::Ma,
        Pipeline::Mc,
        Pipeline::IhclPp,
        Pipeline::IhclRecover,
        Pipeline::PamePp,
        Pipeline::PameRecover,
        Pipeline::DmtPp,
        Pipeline::DmtRecover,
        Pipeline::Verify,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Pipeline::Ma => "ma",
            Pipeline::Mc => "mc",
            Pipeline::IhclPp => "ihcl_pp",
            Pipeline::IhclRecover => "ihcl_recover",
            Pipeline::PamePp => "pame_pp",
            Pipeline::PameRecover => "pame_recover",
            Pipeline::DmtPp => "dmt_pp",
            Pipeline::DmtRecover => "dmt_recover",
            Pipeline::Verify => "verify",
        }
    }

    pub fn parse(s: &str) -> Option<Pipeline> {
        Pipeline::ALL.into_iter().find(|p| p.name() == s)
    }

    fn is_labelled(self) -> bool {
        matches!(self, Pipeline::PamePp | Pipeline::PameRecover)
    }

    fn is_dense(self) -> bool {
        matches!(self, Pipeline::DmtPp | Pipeline::DmtRecover)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainSpec {
    Bits { width: usize },
    Size { size: usize },
    Radices { radices: Vec<usize> },
}

impl DomainSpec {
    pub fn build(&self) -> Result<Domain> {
        let dom = match self {
            DomainSpec::Bits { width } => {
                if *width == 0 || *width > 20 {
                    return Err(Error::TooLarge(format!("bit width {width} outside 1..=20")));
                }
                Domain::bits(*width)
            }
            DomainSpec::Size { size } => {
                if *size == 0 {
                    return Err(Error::Invalid("empty domain".into()));
                }
                Domain::flat(*size)
            }
            DomainSpec::Radices { radices } => Domain::mixed(radices.clone())?,
        };
        if dom.size > MAX_DOMAIN {
            return Err(Error::TooLarge(format!(
                "{} points exceeds the exhaustive limit of {MAX_DOMAIN}; shrink the domain",
                dom.size
            )));
        }
        Ok(dom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    Juntas { arity: usize },
    Conjunctions { width: usize },
    Parities { width: usize },
    Tables { tables: Vec<Vec<f64>> },
}

impl FamilySpec {
    /// Member count before closure, computed without building any table.
    fn raw_count(&self, domain: &Domain) -> u128 {
        let k = domain.radices.len();
        let mut total: u128 = 0;
        let mut visit = |coords: &[usize]| match self {
            FamilySpec::Juntas { .. } => {
                let inputs: u128 = coords.iter().map(|&c| domain.radices[c] as u128).product();
                total = total.saturating_add(if inputs >= 64 { u128::MAX } else { 1u128 << inputs });
            }
            FamilySpec::Conjunctions { .. } => total = total.saturating_add(1u128 << coords.len().min(64)),
            FamilySpec::Parities { .. } => total = total.saturating_add(1),
            FamilySpec::Tables { .. } => {}
        };
        let width = match self {
            FamilySpec::Juntas { arity } => *arity,
            FamilySpec::Conjunctions { width } | FamilySpec::Parities { width } => *width,
            FamilySpec::Tables { tables } => return tables.len() as u128,
        };
        fn rec(start: usize, k: usize, left: usize, cur: &mut Vec<usize>, visit: &mut dyn FnMut(&[usize])) {
            if !cur.is_empty() {
                visit(cur);
            }
            if left == 0 {
                return;
            }
            for i in start..k {
                cur.push(i);
                rec(i + 1, k, left - 1, cur, visit);
                cur.pop();
            }
        }
        rec(0, k, width.min(k), &mut Vec::new(), &mut visit);
        total
    }

    pub fn build(&self, domain: &Domain) -> Result<Family> {
        let estimate = self.raw_count(domain).saturating_mul(2).saturating_add(2);
        guard(domain.size, estimate)?;
        let raw = match self {
            FamilySpec::Juntas { arity } => juntas(domain, *arity)?,
            FamilySpec::Conjunctions { width } => conjunctions(domain, *width)?,
            FamilySpec::Parities { width } => parities(domain, *width)?,
            FamilySpec::Tables { tables } => explicit_tables(domain, tables)?,
        };
        close_family(domain.size, raw)
    }
}

fn guard(points: usize, members: u128) -> Result<()> {
    let products = (points as u128).saturating_mul(members);
    if products > MAX_PRODUCTS {
        return Err(Error::TooLarge(format!(
            "{points} points x {members} family members = {products} evaluations per check, above {MAX_PRODUCTS}; \
             reduce the bit width or the family arity"
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub eps: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    /// Label count for the labelled pipelines; inferred from the target when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<usize>,
    /// Density to mix the recovered object up to.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rescale: Option<f64>,
    /// Number of hardcore sets to sample after recovery.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub set_samples: Option<usize>,
    #[serde(default)]
    pub inclusion_rule: InclusionRule,
    #[serde(default)]
    pub glue_weights: GlueWeights,
}

impl Params {
    pub fn gamma(&self) -> Result<f64> {
        self.gamma.ok_or_else(|| Error::Invalid("params.gamma is required for this pipeline".into()))
    }

    pub fn delta(&self) -> Result<f64> {
        self.delta.ok_or_else(|| Error::Invalid("params.delta is required for this pipeline".into()))
    }

    fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: Option<f64>| match v {
            Some(x) if !(x > 0.0 && x <= 1.0) => Err(Error::Invalid(format!("params.{name} = {x} outside (0, 1]"))),
            _ => Ok(()),
        };
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::Invalid(format!("params.eps = {} outside (0, 1)", self.eps)));
        }
        unit("gamma", self.gamma)?;
        unit("delta", self.delta)?;
        unit("tau", self.tau)?;
        unit("rescale", self.rescale)?;
        if matches!(self.labels, Some(l) if l < 2) {
            return Err(Error::Invalid("params.labels must be at least 2".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub pipeline: Pipeline,
    pub domain: DomainSpec,
    pub target: TargetSpec,
    pub family: FamilySpec,
    #[serde(default)]
    pub distribution: DistSpec,
    pub params: Params,
    #[serde(default)]
    pub seed: u64,
    /// Stored report read by the `verify` pipeline.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub artifact: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.params.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn labels(&self) -> usize {
        self.params.labels.unwrap_or(match &self.target {
            TargetSpec::Joint { rows } => rows.first().map_or(2, Vec::len),
            TargetSpec::RandomJoint { labels } => *labels,
            _ => 2,
        })
    }
}

/// The materialized tables of one experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub domain: Domain,
    /// Base distribution; the `V` side for the dense-model pipelines.
    pub dist: Dist,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<BoundedFn>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub joint: Option<JointDist>,
    /// The `S` side for the dense-model pipelines.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sdist: Option<Dist>,
    /// Closed family; over `X x labels` (indexed `x * L + y`) for the labelled pipelines.
    pub family: Family,
}

/// Deterministic in the config, seed included.
pub fn gen_instance(cfg: &ExperimentConfig) -> Result<Instance> {
    let domain = cfg.domain.build()?;
    let mut dist_rng = stream_rng(cfg.seed, DIST_STREAM);
    let mut target_rng = stream_rng(cfg.seed, TARGET_STREAM);
    let pipeline = cfg.pipeline;

    if pipeline.is_dense() {
        let TargetSpec::DensePair { s, v } = &cfg.target else {
            return Err(Error::Invalid("dense-model pipelines need a dense_pair target".into()));
        };
        let sdist = gen_dist(s, &domain, &mut dist_rng)?;
        let vdist = gen_dist(v, &domain, &mut dist_rng)?;
        let family = cfg.family.build(&domain)?;
        guard(2 * domain.size, family.len() as u128)?;
        return Ok(Instance { domain, dist: vdist, target: None, joint: None, sdist: Some(sdist), family });
    }

    let dist = gen_dist(&cfg.distribution, &domain, &mut dist_rng)?;
    if pipeline.is_labelled() {
        let labels = cfg.labels();
        let joint = gen_joint(&cfg.target, &domain, dist.clone(), &mut target_rng)?;
        if joint.labels != labels {
            return Err(Error::Invalid(format!("target has {} labels, params ask for {labels}", joint.labels)));
        }
        let family = cfg.family.build(&domain.with_labels(labels))?;
        return Ok(Instance { domain, dist, target: None, joint: Some(joint), sdist: None, family });
    }
    let target = gen_target(&cfg.target, &domain, &mut target_rng)?;
    let family = cfg.family.build(&domain)?;
    Ok(Instance { domain, dist, target: Some(target), joint: None, sdist: None, family })
}
