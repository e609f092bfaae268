//! Finite-domain constructions of multicalibrated partitions and the hardcore,
//! pseudoentropy and dense-model objects derived from them, each paired with
//! an exhaustive verifier.

pub mod bernoulli;
pub mod dmt;
pub mod domain;
pub mod error;
pub mod harness;
pub mod ihcl;
pub mod mc;
pub mod pame;
pub mod partition;

pub use domain::{close_family, make_dist, BoundedFn, ComplexityLedger, Dist, Domain, Family, FnKind, NamedFn};
pub use error::{Error, Result};
pub use partition::{piece_sampler, piece_stats, Partition, PieceStats};
