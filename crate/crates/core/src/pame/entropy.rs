use serde::{Deserialize, Serialize};

use crate::domain::{BoundedFn, Dist, IDENTITY_TOL, NORM_TOL};
use crate::error::{check_len, Error, Result};

/// A pair `(X, B)`: `X ~ marg`, and `B | X = x` has law `cond[x]` over `0..labels`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointDist {
    pub labels: usize,
    pub cond: Vec<Vec<f64>>,
    pub marg: Dist,
}

impl JointDist {
    pub fn new(cond: Vec<Vec<f64>>, marg: Dist) -> Result<Self> {
        check_len(marg.len(), cond.len())?;
        let labels = cond.first().map_or(0, Vec::len);
        if labels < 2 {
            return Err(Error::Invalid("need at least two labels".into()));
        }
        for row in &cond {
            check_len(labels, row.len())?;
            if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(Error::Invalid("conditional probabilities must be non-negative".into()));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > NORM_TOL {
                return Err(Error::Invalid(format!("conditional row sums to {s}")));
            }
        }
        Ok(JointDist { labels, cond, marg })
    }

    /// `B = g_rand(X)` for a `[0, 1]`-valued `g`: label 1 with probability `g(x)`.
    pub fn from_bernoulli(g: &BoundedFn, marg: Dist) -> Result<Self> {
        check_len(marg.len(), g.len())?;
        let cond = g.values().iter().map(|&p| vec![1.0 - p, p]).collect();
        JointDist::new(cond, marg)
    }

    pub fn len(&self) -> usize {
        self.cond.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cond.is_empty()
    }

    /// Column `y` of the conditional table, `x -> Pr[B = y | X = x]`.
    pub fn column(&self, y: usize) -> Vec<f64> {
        self.cond.iter().map(|row| row[y]).collect()
    }

    /// The same conditional table under a different law of `X`.
    pub fn with_marg(&self, marg: Dist) -> Result<Self> {
        check_len(self.len(), marg.len())?;
        Ok(JointDist { labels: self.labels, cond: self.cond.clone(), marg })
    }
}

/// `-log2 max_x d(x)`.
pub fn min_entropy(d: &Dist) -> f64 {
    -d.max_mass().log2()
}

/// `-log2 sum_x marg(x) max_y cond(x, y)`.
pub fn avg_min_entropy(j: &JointDist) -> f64 {
    let s: f64 = j
        .cond
        .iter()
        .enumerate()
        .map(|(x, row)| j.marg.prob(x) * row.iter().copied().fold(0.0, f64::max))
        .sum();
    -s.log2()
}

/// Pointwise most likely label (lowest index on ties).
pub fn argmax_predictor(j: &JointDist) -> Vec<usize> {
    j.cond
        .iter()
        .map(|row| {
            let mut best = 0;
            for (y, &p) in row.iter().enumerate() {
                if p > row[best] {
                    best = y;
                }
            }
            best
        })
        .collect()
}

/// `Pr[f(X) = B]` for a deterministic labelling `f`.
pub fn prediction_success(j: &JointDist, f: &[usize]) -> Result<f64> {
    check_len(j.len(), f.len())?;
    Ok(f.iter().enumerate().map(|(x, &y)| j.marg.prob(x) * j.cond[x][y]).sum())
}

/// Best success probability of any predictor `X -> [L]`, attained by the pointwise argmax.
pub fn predictability(j: &JointDist) -> f64 {
    let p = prediction_success(j, &argmax_predictor(j)).expect("predictor matches the domain");
    debug_assert!((p - 2f64.powf(-avg_min_entropy(j))).abs() <= IDENTITY_TOL);
    p
}
