//! Finite partitions of the domain and their per-piece statistics.

use serde::{Deserialize, Serialize};

use crate::domain::{BoundedFn, ComplexityLedger, Dist};
use crate::error::{check_len, Error, Result};

/// Statistics of one piece `P` under `(g, d)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PieceStats {
    /// Mean of the target on the piece, `E_{d|P}[g]`.
    pub v: f64,
    /// Balance `min(v, 1 - v)`.
    pub b: f64,
    /// Mass `Pr_d[P]`.
    pub eta: f64,
    /// Largest label mass on the piece; `max(v, 1 - v)` for a binary target.
    pub m: f64,
    /// Set when the piece has zero mass; the other fields are then zero.
    pub degenerate: bool,
}

impl PieceStats {
    pub fn from_mean(v: f64, eta: f64) -> Self {
        let v = v.clamp(0.0, 1.0);
        PieceStats { v, b: v.min(1.0 - v), eta, m: v.max(1.0 - v), degenerate: false }
    }

    pub fn degenerate() -> Self {
        PieceStats { v: 0.0, b: 0.0, eta: 0.0, m: 0.0, degenerate: true }
    }
}

/// A partition of `0..n` into `k` pieces, given by a piece id per point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub assign: Vec<usize>,
    pub k: usize,
    pub stats: Vec<PieceStats>,
    pub ledger: ComplexityLedger,
}

impl Partition {
    pub fn new(assign: Vec<usize>, k: usize, g: &BoundedFn, d: &Dist) -> Result<Self> {
        if let Some(&bad) = assign.iter().find(|&&p| p >= k) {
            return Err(Error::Invalid(format!("piece id {bad} out of range for k = {k}")));
        }
        let mut p = Partition {
            assign,
            k,
            stats: Vec::new(),
            ledger: ComplexityLedger { pieces: k as u64, ..Default::default() },
        };
        p.stats = piece_stats(&p, g, d)?;
        Ok(p)
    }

    pub fn len(&self) -> usize {
        self.assign.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assign.is_empty()
    }

    pub fn piece_of(&self, x: usize) -> usize {
        self.assign[x]
    }

    pub fn members(&self, piece: usize) -> Vec<usize> {
        (0..self.assign.len()).filter(|&x| self.assign[x] == piece).collect()
    }

    pub fn mask(&self, piece: usize) -> Vec<bool> {
        self.assign.iter().map(|&p| p == piece).collect()
    }

    /// The piece-constant function taking value `values[P]` on piece `P`.
    pub fn piecewise(&self, values: &[f64]) -> Result<BoundedFn> {
        check_len(self.k, values.len())?;
        BoundedFn::new(self.assign.iter().map(|&p| values[p]).collect())
    }
}

/// Per-piece mean, balance and mass of `g` under `d`.
pub fn piece_stats(p: &Partition, g: &BoundedFn, d: &Dist) -> Result<Vec<PieceStats>> {
    check_len(p.len(), g.len())?;
    check_len(p.len(), d.len())?;
    let mut eta = vec![0.0; p.k];
    let mut mass_g = vec![0.0; p.k];
    for (x, &piece) in p.assign.iter().enumerate() {
        eta[piece] += d.prob(x);
        mass_g[piece] += d.prob(x) * g.get(x);
    }
    Ok((0..p.k)
        .map(|i| {
            if eta[i] > 0.0 {
                PieceStats::from_mean(mass_g[i] / eta[i], eta[i])
            } else {
                PieceStats::degenerate()
            }
        })
        .collect())
}

/// The law of the piece containing `x ~ d`.
pub fn piece_sampler(p: &Partition, d: &Dist) -> Result<Dist> {
    check_len(p.len(), d.len())?;
    let mut eta = vec![0.0; p.k];
    for (x, &piece) in p.assign.iter().enumerate() {
        eta[piece] += d.prob(x);
    }
    Ok(Dist::from_raw(eta))
}
