//! Cumulative prospect theory (CPT) primitives and a CPT-aware power
//! allocator for multi-channel wireless systems.
//!
//! The crate has four layers:
//!
//! * [`utility`] and [`weighting`] -- reference-dependent value functions
//!   and probability weighting functions, with loss-aversion and
//!   risk-aversion diagnostics;
//! * [`prospect`] -- finite lotteries and rank-dependent CPT valuation;
//! * [`perception`] -- perceived (PWF-distorted) distributions and the
//!   perceptual utility of a composite metric;
//! * [`allocation`] and [`channel`] -- the budgeted SNR power-allocation
//!   solver (closed-form KKT inversion with dual bisection, plus an
//!   independent numeric oracle), Rayleigh channel draws, and unit
//!   conversions.
//!
//! The `cptalloc` binary drives scenarios from TOML configs and emits CSV;
//! see [`scenario`] and the guide under `book/`.
//!
//! ```
//! use cptalloc::utility::UtilitySpec;
//! use cptalloc::weighting::WeightingSpec;
//! use cptalloc::prospect::{cpt_value, Prospect};
//!
//! let u = UtilitySpec::Kw { x0: 0.0, lambda1: 1.0, lambda2: 2.0, alpha: 2.0, beta: 1.0 };
//! let w = WeightingSpec::Prelec { gamma: 1.0, theta: 0.65 };
//! let bet = Prospect::new(vec![(0.5, 1.0), (0.5, -1.0)])?;
//! // A loss-averse agent rejects the symmetric fair bet.
//! assert!(cpt_value(&bet, &u, &w)? < 0.0);
//! # Ok::<(), cptalloc::Error>(())
//! ```

pub mod allocation;
pub mod channel;
pub mod perception;
pub mod prospect;
pub mod scenario;
pub mod utility;
pub mod weighting;

use thiserror::Error as ThisError;

/// Crate-wide error type.
#[derive(Debug, ThisError)]
pub enum Error {
    /// Parameters violate a family or scenario invariant.
    #[error("invalid specification: {0}")]
    InvalidSpec(String),
    /// Input outside the operation's domain.
    #[error("out of domain: {0}")]
    OutOfDomain(String),
    /// A one-sided derivative does not exist as a finite value (KT family
    /// at the reference point with a fractional exponent).
    #[error("one-sided derivative is unbounded at the reference point")]
    UnboundedDerivative,
    /// An iterative scheme failed to reach its tolerance.
    #[error("failed to converge: {0}")]
    NonConvergent(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

// Keep the guide's code samples compiling: each chapter of book/ runs as a
// doctest against the public API.
#[doc = include_str!("../../../book/src/value-functions.md")]
#[cfg(doctest)]
pub struct GuideValueFunctions;

#[doc = include_str!("../../../book/src/probability-weighting.md")]
#[cfg(doctest)]
pub struct GuideProbabilityWeighting;

#[doc = include_str!("../../../book/src/prospects.md")]
#[cfg(doctest)]
pub struct GuideProspects;

#[doc = include_str!("../../../book/src/perception.md")]
#[cfg(doctest)]
pub struct GuidePerception;

#[doc = include_str!("../../../book/src/power-allocation.md")]
#[cfg(doctest)]
pub struct GuidePowerAllocation;

#[doc = include_str!("../../../book/src/risk-split.md")]
#[cfg(doctest)]
pub struct GuideRiskSplit;
