//! Finite domains, distributions, bounded functions and closed families.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

/// Tolerance for normalization and equality checks.
pub const NORM_TOL: f64 = 1e-9;
/// Tolerance for algebraic identities.
pub const IDENTITY_TOL: f64 = 1e-12;

/// A finite domain indexed `0..size`, optionally carrying a mixed-radix
/// coordinate structure (coordinate 0 is the least significant digit).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Domain {
    pub size: usize,
    pub radices: Vec<usize>,
}

impl Domain {
    pub fn bits(width: usize) -> Self {
        Domain { size: 1 << width, radices: vec![2; width] }
    }

    pub fn mixed(radices: Vec<usize>) -> Result<Self> {
        if radices.iter().any(|&r| r < 2) {
            return Err(Error::Invalid("every radix must be at least 2".into()));
        }
        let size = radices
            .iter()
            .try_fold(1usize, |acc, &r| acc.checked_mul(r))
            .ok_or_else(|| Error::TooLarge("domain size overflows".into()))?;
        Ok(Domain { size, radices })
    }

    /// A plain domain without coordinates.
    pub fn flat(size: usize) -> Self {
        Domain { size, radices: vec![size] }
    }

    pub fn bit_width(&self) -> Option<usize> {
        self.radices.iter().all(|&r| r == 2).then_some(self.radices.len())
    }

    pub fn digit(&self, x: usize, coord: usize) -> usize {
        let stride: usize = self.radices[..coord].iter().product();
        (x / stride) % self.radices[coord]
    }

    /// Domain of pairs `(x, y)` with `y` in `0..labels`, indexed `x * labels + y`.
    pub fn with_labels(&self, labels: usize) -> Self {
        let mut radices = Vec::with_capacity(self.radices.len() + 1);
        radices.push(labels);
        radices.extend_from_slice(&self.radices);
        Domain { size: self.size * labels, radices }
    }
}

/// A probability distribution over `0..len`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dist {
    mass: Vec<f64>,
}

/// Normalizes non-negative weights into a distribution.
pub fn make_dist(weights: &[f64]) -> Result<Dist> {
    if weights.is_empty() {
        return Err(Error::Invalid("empty weight vector".into()));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::Invalid("weights must be finite and non-negative".into()));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::Invalid("weights sum to zero".into()));
    }
    Ok(Dist { mass: weights.iter().map(|w| w / total).collect() })
}

impl Dist {
    /// Wraps masses that already sum to one.
    pub fn from_probs(mass: Vec<f64>) -> Result<Self> {
        if mass.is_empty() || mass.iter().any(|m| !m.is_finite() || *m < 0.0) {
            return Err(Error::Invalid("masses must be finite and non-negative".into()));
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > NORM_TOL {
            return Err(Error::Invalid(format!("masses sum to {total}, not 1")));
        }
        Ok(Dist { mass })
    }

    /// Wraps masses without validation. Verifiers use this to inspect stored artifacts.
    pub fn from_raw(mass: Vec<f64>) -> Self {
        Dist { mass }
    }

    pub fn uniform(n: usize) -> Self {
        Dist { mass: vec![1.0 / n as f64; n] }
    }

    pub fn point(n: usize, i: usize) -> Self {
        let mut mass = vec![0.0; n];
        mass[i] = 1.0;
        Dist { mass }
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn masses(&self) -> &[f64] {
        &self.mass
    }

    pub fn prob(&self, i: usize) -> f64 {
        self.mass[i]
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    pub fn max_mass(&self) -> f64 {
        self.mass.iter().copied().fold(0.0, f64::max)
    }

    pub fn mass_where(&self, member: impl Fn(usize) -> bool) -> f64 {
        self.mass.iter().enumerate().filter(|(i, _)| member(*i)).map(|(_, m)| m).sum()
    }

    /// `d` conditioned on the event `member`.
    pub fn conditional(&self, member: impl Fn(usize) -> bool) -> Result<Dist> {
        let z = self.mass_where(&member);
        if z <= 0.0 {
            return Err(Error::EmptyEvent);
        }
        let mass = self
            .mass
            .iter()
            .enumerate()
            .map(|(i, m)| if member(i) { m / z } else { 0.0 })
            .collect();
        Ok(Dist { mass })
    }

    pub fn expect(&self, f: &BoundedFn) -> Result<f64> {
        self.expect_values(f.values())
    }

    pub fn expect_values(&self, values: &[f64]) -> Result<f64> {
        check_len(self.len(), values.len())?;
        Ok(dot(&self.mass, values))
    }

    /// `(1 - w) * self + w * other`.
    pub fn mix(&self, other: &Dist, w: f64) -> Result<Dist> {
        check_len(self.len(), other.len())?;
        let mass = self.mass.iter().zip(&other.mass).map(|(a, b)| (1.0 - w) * a + w * b).collect();
        Ok(Dist { mass })
    }

    pub fn tv_distance(&self, other: &Dist) -> Result<f64> {
        check_len(self.len(), other.len())?;
        Ok(0.5 * self.mass.iter().zip(&other.mass).map(|(a, b)| (a - b).abs()).sum::<f64>())
    }

    /// Largest `rho` with `rho * self <= reference` pointwise (the density of `self` in `reference`).
    pub fn density_in(&self, reference: &Dist) -> Result<f64> {
        check_len(self.len(), reference.len())?;
        let mut rho = f64::INFINITY;
        for (h, d) in self.mass.iter().zip(&reference.mass) {
            if *h > 0.0 {
                rho = rho.min(d / h);
            }
        }
        Ok(rho)
    }
}

/// Result of mixing a distribution with its reference to raise its density.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMix {
    pub dist: Dist,
    /// Weight of the reference in the mixture.
    pub weight: f64,
    /// Total-variation distance from the input.
    pub tv: f64,
}

/// Smallest mixture `(1 - w) h + w d` whose density in `d` reaches `target`,
/// or `None` when `h` already has that density.
pub fn mix_to_density(h: &Dist, d: &Dist, target: f64) -> Result<Option<DensityMix>> {
    if !(target > 0.0 && target <= 1.0) {
        return Err(Error::Invalid(format!("density target {target} outside (0, 1]")));
    }
    let rho = h.density_in(d)?;
    if rho >= target || rho >= 1.0 {
        return Ok(None);
    }
    let weight = if rho > 0.0 { (1.0 / rho - 1.0 / target) / (1.0 / rho - 1.0) } else { 1.0 };
    let dist = h.mix(d, weight)?;
    let tv = h.tv_distance(&dist)?;
    Ok(Some(DensityMix { dist, weight, tv }))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FnKind {
    Boolean,
    Fractional,
}

/// A function from the domain into `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundedFn {
    values: Vec<f64>,
    kind: FnKind,
}

impl BoundedFn {
    /// Validates the range and tags the table boolean when every entry is 0 or 1.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Invalid("function values must lie in [0, 1]".into()));
        }
        let kind = if values.iter().all(|&v| v == 0.0 || v == 1.0) {
            FnKind::Boolean
        } else {
            FnKind::Fractional
        };
        Ok(BoundedFn { values, kind })
    }

    pub fn from_bools(bits: impl IntoIterator<Item = bool>) -> Self {
        let values = bits.into_iter().map(|b| if b { 1.0 } else { 0.0 }).collect();
        BoundedFn { values, kind: FnKind::Boolean }
    }

    pub fn constant(n: usize, c: f64) -> Result<Self> {
        Self::new(vec![c; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn kind(&self) -> FnKind {
        self.kind
    }

    pub fn is_boolean(&self) -> bool {
        self.kind == FnKind::Boolean
    }

    pub fn complement(&self) -> Self {
        BoundedFn { values: self.values.iter().map(|v| 1.0 - v).collect(), kind: self.kind }
    }

    fn bit_key(&self) -> Vec<u64> {
        self.values.iter().map(|v| v.to_bits()).collect()
    }
}

/// Circuit-size accounting carried alongside every constructed object.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexityLedger {
    /// Oracle gates: evaluations of family members wired into the object.
    pub oracle_calls: u64,
    /// Arithmetic post-processing operations.
    pub post_ops: u64,
    /// Number of partition pieces.
    pub pieces: u64,
}

impl ComplexityLedger {
    pub fn absorb(&mut self, other: &ComplexityLedger) {
        self.oracle_calls += other.oracle_calls;
        self.post_ops += other.post_ops;
        self.pieces = self.pieces.max(other.pieces);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedFn {
    pub name: String,
    pub table: BoundedFn,
}

impl NamedFn {
    pub fn new(name: impl Into<String>, table: BoundedFn) -> Self {
        NamedFn { name: name.into(), table }
    }
}

/// A finite family of bounded functions over a common domain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Family {
    domain_size: usize,
    members: Vec<NamedFn>,
    closed_under_negation: bool,
    contains_constants: bool,
    pub ledger: ComplexityLedger,
}

/// Closes `raw` under `f -> 1 - f`, adds the constants, and drops exact duplicates.
///
/// Members keep the order of `raw`, each followed by its complement; the constants come last.
pub fn close_family(domain_size: usize, raw: Vec<NamedFn>) -> Result<Family> {
    let mut seen: HashSet<Vec<u64>> = HashSet::new();
    let mut members = Vec::with_capacity(2 * raw.len() + 2);
    let push = |f: NamedFn, seen: &mut HashSet<Vec<u64>>, members: &mut Vec<NamedFn>| {
        if seen.insert(f.table.bit_key()) {
            members.push(f);
        }
    };
    for f in raw {
        check_len(domain_size, f.table.len())?;
        if !seen.contains(&f.table.bit_key()) {
            let neg = NamedFn::new(negated_name(&f.name), f.table.complement());
            push(f, &mut seen, &mut members);
            push(neg, &mut seen, &mut members);
        }
    }
    let zero = BoundedFn::constant(domain_size, 0.0)?;
    let one = BoundedFn::constant(domain_size, 1.0)?;
    push(NamedFn::new("zero", zero), &mut seen, &mut members);
    push(NamedFn::new("one", one), &mut seen, &mut members);
    let ledger = ComplexityLedger { post_ops: members.len() as u64, ..Default::default() };
    Ok(Family {
        domain_size,
        members,
        closed_under_negation: true,
        contains_constants: true,
        ledger,
    })
}

fn negated_name(name: &str) -> String {
    match name {
        "zero" => return "one".into(),
        "one" => return "zero".into(),
        _ => {}
    }
    match name.strip_prefix("not(").and_then(|s| s.strip_suffix(')')) {
        Some(inner) => inner.to_string(),
        None => format!("not({name})"),
    }
}

impl Family {
    /// A family taken as given, with closure flags computed from its contents.
    pub fn from_members(domain_size: usize, members: Vec<NamedFn>) -> Result<Family> {
        for f in &members {
            check_len(domain_size, f.table.len())?;
        }
        let keys: HashSet<Vec<u64>> = members.iter().map(|f| f.table.bit_key()).collect();
        let closed = members.iter().all(|f| keys.contains(&f.table.complement().bit_key()));
        let zero = BoundedFn::constant(domain_size, 0.0)?.bit_key();
        let one = BoundedFn::constant(domain_size, 1.0)?.bit_key();
        Ok(Family {
            domain_size,
            closed_under_negation: closed,
            contains_constants: keys.contains(&zero) && keys.contains(&one),
            ledger: ComplexityLedger { post_ops: members.len() as u64, ..Default::default() },
            members,
        })
    }

    pub fn domain_size(&self) -> usize {
        self.domain_size
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[NamedFn] {
        &self.members
    }

    pub fn iter(&self) -> impl Iterator<Item = &NamedFn> {
        self.members.iter()
    }

    pub fn is_closed_under_negation(&self) -> bool {
        self.closed_under_negation
    }

    pub fn contains_constants(&self) -> bool {
        self.contains_constants
    }

    /// The closure of this family together with `extra`.
    pub fn augmented(&self, extra: Vec<NamedFn>) -> Result<Family> {
        let mut raw = self.members.clone();
        raw.extend(extra);
        close_family(self.domain_size, raw)
    }
}
