//! Probability weighting functions (PWFs).
//!
//! A PWF is a strictly increasing map `[0,1] -> [0,1]` with `w(0) = 0` and
//! `w(1) = 1` that models how an agent distorts objective probabilities.
//! Three families are provided: the identity (no distortion), the 1992
//! Tversky-Kahneman form, and the Prelec form
//! `w(p) = exp(-gamma * (-ln p)^theta)`.

use serde::{Deserialize, Serialize};

use crate::Error;

/// A validated probability weighting function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum WeightingSpec {
    /// `w(p) = p`; objective probabilities pass through unchanged.
    Identity,
    /// Tversky-Kahneman 1992 form `p^delta / (p^delta + (1-p)^delta)^(1/delta)`
    /// with `delta` in `(0, 1]`.
    Tk92 { delta: f64 },
    /// Prelec form `exp(-gamma * (-ln p)^theta)` with `gamma, theta > 0`.
    /// `0 < theta < 1` gives the inverse-S shape; `gamma` moves the fixed
    /// point relative to the diagonal (`gamma = 1` pins it at `1/e`).
    Prelec { gamma: f64, theta: f64 },
}

impl WeightingSpec {
    /// Validates the family parameters.
    pub fn validate(&self) -> Result<(), Error> {
        match *self {
            WeightingSpec::Identity => Ok(()),
            WeightingSpec::Tk92 { delta } => {
                if delta.is_finite() && delta > 0.0 && delta <= 1.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidSpec(format!(
                        "TK92 requires delta in (0,1], got {delta}"
                    )))
                }
            }
            WeightingSpec::Prelec { gamma, theta } => {
                if gamma.is_finite() && gamma > 0.0 && theta.is_finite() && theta > 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidSpec(format!(
                        "Prelec requires gamma > 0 and theta > 0, got gamma={gamma}, theta={theta}"
                    )))
                }
            }
        }
    }

    /// Evaluates `w(p)` for `p` in `[0,1]`.
    ///
    /// `p = 0` under Prelec is defined by the continuous extension `w(0) = 0`
    /// so no `ln(0)` propagates.
    pub fn value(&self, p: f64) -> Result<f64, Error> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::OutOfDomain(format!(
                "probability {p} outside [0,1]"
            )));
        }
        Ok(match *self {
            WeightingSpec::Identity => p,
            WeightingSpec::Tk92 { delta } => {
                if p == 0.0 {
                    0.0
                } else if p == 1.0 {
                    1.0
                } else {
                    let pd = p.powf(delta);
                    let qd = (1.0 - p).powf(delta);
                    pd / (pd + qd).powf(1.0 / delta)
                }
            }
            WeightingSpec::Prelec { gamma, theta } => {
                if p == 0.0 {
                    0.0
                } else if p == 1.0 {
                    1.0
                } else {
                    (-gamma * (-p.ln()).powf(theta)).exp()
                }
            }
        })
    }

    /// Analytic derivative `dw/dp` on the open interval `(0,1)`.
    ///
    /// The endpoints are rejected: for Prelec with `theta < 1` the derivative
    /// is unbounded there.
    pub fn derivative(&self, p: f64) -> Result<f64, Error> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::OutOfDomain(format!(
                "PWF derivative requires p in (0,1), got {p}"
            )));
        }
        Ok(match *self {
            WeightingSpec::Identity => 1.0,
            WeightingSpec::Tk92 { delta } => {
                let pd = p.powf(delta);
                let qd = (1.0 - p).powf(delta);
                let s = pd + qd;
                let pd1 = p.powf(delta - 1.0);
                let qd1 = (1.0 - p).powf(delta - 1.0);
                delta * pd1 * s.powf(-1.0 / delta)
                    - pd * s.powf(-1.0 / delta - 1.0) * (pd1 - qd1)
            }
            WeightingSpec::Prelec { gamma, theta } => {
                let l = -p.ln();
                let w = (-gamma * l.powf(theta)).exp();
                w * gamma * theta * l.powf(theta - 1.0) / p
            }
        })
    }

    /// Inverse `w^{-1}(s)` for `s` in `[0,1]`.
    ///
    /// Analytic for Identity and Prelec; monotone bisection for TK92.
    pub fn inverse(&self, s: f64) -> Result<f64, Error> {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::OutOfDomain(format!("w-value {s} outside [0,1]")));
        }
        Ok(match *self {
            WeightingSpec::Identity => s,
            WeightingSpec::Prelec { gamma, theta } => {
                if s == 0.0 {
                    0.0
                } else if s == 1.0 {
                    1.0
                } else {
                    (-((-s.ln()) / gamma).powf(1.0 / theta)).exp()
                }
            }
            WeightingSpec::Tk92 { .. } => {
                if s == 0.0 {
                    return Ok(0.0);
                }
                if s == 1.0 {
                    return Ok(1.0);
                }
                let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if self.value(mid)? < s {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            }
        })
    }
}
