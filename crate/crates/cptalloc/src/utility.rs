//! Reference-dependent value functions.
//!
//! Every family evaluates outcomes relative to a reference point `x0`:
//! `x >= x0` is the gain branch, `x < x0` the loss branch. Three families
//! are provided:
//!
//! * `Kt` -- piecewise power form `(x-x0)^alpha` / `-lambda (x0-x)^beta`,
//! * `Kw` -- the exponential (Kobberling-Wakker) form,
//! * `Generalized` -- an extended exponential form with per-branch
//!   amplitude, curvature, and vertical-shift parameters, validated against
//!   a caller-declared shape class per branch.

use serde::{Deserialize, Serialize};

use crate::Error;

/// Declared shape class for one branch of the `Generalized` family.
///
/// The validator checks the parameter inequalities that produce the declared
/// shape; a silently misdeclared shape would corrupt downstream concavity
/// assumptions in the allocation solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BranchShape {
    Concave,
    Convex,
}

/// Which one-sided derivative to take at the reference-point kink.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
    /// Right derivative at the kink, flagged via [`Slope::at_kink`].
    Auto,
}

/// A one-sided derivative value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Slope {
    pub value: f64,
    /// True when the evaluation point is the reference point, where the
    /// two one-sided derivatives generally differ.
    pub at_kink: bool,
}

/// A validated reference-dependent utility function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum UtilitySpec {
    /// `(x-x0)^alpha` for gains, `-lambda (x0-x)^beta` for losses, with
    /// `alpha, beta` in `(0,1]` and `lambda > 0`. Not marginally
    /// differentiable at `x0` when `alpha < 1` or `beta < 1`.
    Kt {
        x0: f64,
        alpha: f64,
        beta: f64,
        lambda: f64,
    },
    /// `lambda1 (1 - exp(-alpha (x-x0))) / alpha` for gains and the
    /// mirrored loss branch; all four parameters strictly positive.
    Kw {
        x0: f64,
        lambda1: f64,
        lambda2: f64,
        alpha: f64,
        beta: f64,
    },
    /// `lambda1 (mu1 - exp(alpha/gamma1 (x-x0))) / alpha` for gains,
    /// `lambda2 (mu2 - exp(beta/gamma2 (x-x0))) / beta` for losses.
    Generalized {
        x0: f64,
        lambda1: f64,
        lambda2: f64,
        alpha: f64,
        beta: f64,
        gamma1: f64,
        gamma2: f64,
        mu1: f64,
        mu2: f64,
        gain_shape: BranchShape,
        loss_shape: BranchShape,
    },
}

impl UtilitySpec {
    /// Case-study `Generalized` spec: concave on both branches, continuous
    /// at the reference point, strongly loss averse when
    /// `-lambda1/gamma1 < -lambda2/gamma2`.
    pub fn generalized_concave(
        x0: f64,
        lambda1: f64,
        lambda2: f64,
        alpha: f64,
        beta: f64,
        gamma1: f64,
        gamma2: f64,
    ) -> Self {
        UtilitySpec::Generalized {
            x0,
            lambda1,
            lambda2,
            alpha,
            beta,
            gamma1,
            gamma2,
            mu1: 1.0,
            mu2: 1.0,
            gain_shape: BranchShape::Concave,
            loss_shape: BranchShape::Concave,
        }
    }

    pub fn reference_point(&self) -> f64 {
        match *self {
            UtilitySpec::Kt { x0, .. }
            | UtilitySpec::Kw { x0, .. }
            | UtilitySpec::Generalized { x0, .. } => x0,
        }
    }

    /// Validates parameters (and, for `Generalized`, the declared shape
    /// inequalities for each branch).
    pub fn validate(&self) -> Result<(), Error> {
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        match *self {
            UtilitySpec::Kt {
                x0,
                alpha,
                beta,
                lambda,
            } => {
                if !x0.is_finite() {
                    return bad(format!("KT reference point must be finite, got {x0}"));
                }
                if !(alpha > 0.0 && alpha <= 1.0 && beta > 0.0 && beta <= 1.0) {
                    return bad(format!(
                        "KT requires alpha, beta in (0,1], got alpha={alpha}, beta={beta}"
                    ));
                }
                if !(lambda > 0.0 && lambda.is_finite()) {
                    return bad(format!("KT requires lambda > 0, got {lambda}"));
                }
                Ok(())
            }
            UtilitySpec::Kw {
                x0,
                lambda1,
                lambda2,
                alpha,
                beta,
            } => {
                let all = [x0, lambda1, lambda2, alpha, beta];
                if all.iter().any(|v| !v.is_finite()) {
                    return bad("KW parameters must be finite".into());
                }
                if !(lambda1 > 0.0 && lambda2 > 0.0 && alpha > 0.0 && beta > 0.0) {
                    return bad(format!(
                        "KW requires all of lambda1={lambda1}, lambda2={lambda2}, \
                         alpha={alpha}, beta={beta} strictly positive"
                    ));
                }
                Ok(())
            }
            UtilitySpec::Generalized {
                x0,
                lambda1,
                lambda2,
                alpha,
                beta,
                gamma1,
                gamma2,
                mu1,
                mu2,
                gain_shape,
                loss_shape,
            } => {
                let all = [x0, lambda1, lambda2, alpha, beta, gamma1, gamma2, mu1, mu2];
                if all.iter().any(|v| !v.is_finite()) {
                    return bad("Generalized parameters must be finite".into());
                }
                if alpha == 0.0 || beta == 0.0 || gamma1 == 0.0 || gamma2 == 0.0 {
                    return bad("Generalized requires nonzero alpha, beta, gamma1, gamma2".into());
                }
                // Strict monotonicity on each branch: slope -lambda/gamma > 0.
                if lambda1 / gamma1 >= 0.0 {
                    return bad(format!(
                        "gain branch not strictly increasing: lambda1/gamma1 = {} >= 0",
                        lambda1 / gamma1
                    ));
                }
                if lambda2 / gamma2 >= 0.0 {
                    return bad(format!(
                        "loss branch not strictly increasing: lambda2/gamma2 = {} >= 0",
                        lambda2 / gamma2
                    ));
                }
                match gain_shape {
                    BranchShape::Concave => {
                        if !(alpha / gamma1 < 0.0 && mu1 >= 1.0) {
                            return bad(format!(
                                "concave gain branch requires alpha/gamma1 < 0 and mu1 >= 1, \
                                 got alpha/gamma1={}, mu1={mu1}",
                                alpha / gamma1
                            ));
                        }
                    }
                    BranchShape::Convex => {
                        if !(alpha / gamma1 > 0.0 && mu1 <= 1.0) {
                            return bad(format!(
                                "convex gain branch requires alpha/gamma1 > 0 and mu1 <= 1, \
                                 got alpha/gamma1={}, mu1={mu1}",
                                alpha / gamma1
                            ));
                        }
                    }
                }
                match loss_shape {
                    BranchShape::Concave => {
                        if !(beta / gamma2 < 0.0 && mu2 <= 1.0) {
                            return bad(format!(
                                "concave loss branch requires beta/gamma2 < 0 and mu2 <= 1, \
                                 got beta/gamma2={}, mu2={mu2}",
                                beta / gamma2
                            ));
                        }
                    }
                    BranchShape::Convex => {
                        if !(beta / gamma2 > 0.0 && mu2 >= 1.0) {
                            return bad(format!(
                                "convex loss branch requires beta/gamma2 > 0 and mu2 >= 1, \
                                 got beta/gamma2={}, mu2={mu2}",
                                beta / gamma2
                            ));
                        }
                    }
                }
                Ok(())
            }
        }
    }

    /// Evaluates `u(x)`. Branch selection is `x >= x0 -> gain`.
    pub fn value(&self, x: f64) -> Result<f64, Error> {
        if !x.is_finite() {
            return Err(Error::OutOfDomain(format!("non-finite input {x}")));
        }
        Ok(match *self {
            UtilitySpec::Kt {
                x0,
                alpha,
                beta,
                lambda,
            } => {
                if x >= x0 {
                    (x - x0).powf(alpha)
                } else {
                    -lambda * (x0 - x).powf(beta)
                }
            }
            UtilitySpec::Kw {
                x0,
                lambda1,
                lambda2,
                alpha,
                beta,
            } => {
                if x >= x0 {
                    lambda1 * (1.0 - (-alpha * (x - x0)).exp()) / alpha
                } else {
                    -lambda2 * (1.0 - (-beta * (x0 - x)).exp()) / beta
                }
            }
            UtilitySpec::Generalized {
                x0,
                lambda1,
                lambda2,
                alpha,
                beta,
                gamma1,
                gamma2,
                mu1,
                mu2,
                ..
            } => {
                if x >= x0 {
                    lambda1 * (mu1 - (alpha / gamma1 * (x - x0)).exp()) / alpha
                } else {
                    lambda2 * (mu2 - (beta / gamma2 * (x - x0)).exp()) / beta
                }
            }
        })
    }

    /// Analytic one-sided derivative `du/dx`, always positive for validated
    /// specs.
    ///
    /// At `x = x0` the KT family with `alpha < 1` (right) or `beta < 1`
    /// (left) has an unbounded one-sided derivative, signaled as
    /// [`Error::UnboundedDerivative`] rather than returned as an IEEE
    /// infinity.
    pub fn derivative(&self, x: f64, side: Side) -> Result<Slope, Error> {
        if !x.is_finite() {
            return Err(Error::OutOfDomain(format!("non-finite input {x}")));
        }
        let x0 = self.reference_point();
        let at_kink = x == x0;
        // Effective branch: gain unless strictly below x0, or the caller
        // asked for the left derivative at the kink.
        let gain = if at_kink {
            !matches!(side, Side::Left)
        } else {
            x > x0
        };
        let value = match *self {
            UtilitySpec::Kt {
                x0,
                alpha,
                beta,
                lambda,
            } => {
                if gain {
                    if at_kink && alpha < 1.0 {
                        return Err(Error::UnboundedDerivative);
                    }
                    alpha * (x - x0).powf(alpha - 1.0)
                } else {
                    if at_kink && beta < 1.0 {
                        return Err(Error::UnboundedDerivative);
                    }
                    lambda * beta * (x0 - x).powf(beta - 1.0)
                }
            }
            UtilitySpec::Kw {
                x0,
                lambda1,
                lambda2,
                alpha,
                beta,
            } => {
                if gain {
                    lambda1 * (-alpha * (x - x0)).exp()
                } else {
                    lambda2 * (-beta * (x0 - x)).exp()
                }
            }
            UtilitySpec::Generalized {
                x0,
                lambda1,
                lambda2,
                alpha,
                beta,
                gamma1,
                gamma2,
                ..
            } => {
                if gain {
                    -(lambda1 / gamma1) * (alpha / gamma1 * (x - x0)).exp()
                } else {
                    -(lambda2 / gamma2) * (beta / gamma2 * (x - x0)).exp()
                }
            }
        };
        Ok(Slope { value, at_kink })
    }

    /// Arrow-Pratt coefficient of absolute risk aversion `-u''(x)/u'(x)`.
    ///
    /// Constant per branch for the exponential families: `-alpha/gamma1`
    /// (gain) and `-beta/gamma2` (loss) for `Generalized`, `alpha`/`-beta`
    /// for `Kw`. The signed analytic value is returned: positive where the
    /// branch is concave, negative where it is convex.
    ///
    /// Rejected at the kink `x = x0`, where `u''` does not exist.
    pub fn arrow_pratt(&self, x: f64) -> Result<f64, Error> {
        let x0 = self.reference_point();
        if x == x0 {
            return Err(Error::OutOfDomain(
                "Arrow-Pratt coefficient undefined at the reference point".into(),
            ));
        }
        if !x.is_finite() {
            return Err(Error::OutOfDomain(format!("non-finite input {x}")));
        }
        let gain = x > x0;
        Ok(match *self {
            UtilitySpec::Kt { alpha, beta, .. } => {
                if gain {
                    (1.0 - alpha) / (x - x0)
                } else {
                    (beta - 1.0) / (x0 - x)
                }
            }
            UtilitySpec::Kw { alpha, beta, .. } => {
                if gain {
                    alpha
                } else {
                    -beta
                }
            }
            UtilitySpec::Generalized {
                alpha,
                beta,
                gamma1,
                gamma2,
                ..
            } => {
                if gain {
                    -alpha / gamma1
                } else {
                    -beta / gamma2
                }
            }
        })
    }

    /// Supremum of the gain-branch derivative and infimum of the
    /// loss-branch derivative, where both are attained at the kink
    /// (exponential families only).
    fn kink_slopes(&self) -> Option<(f64, f64)> {
        match *self {
            UtilitySpec::Kt { .. } => None,
            UtilitySpec::Kw {
                lambda1, lambda2, ..
            } => Some((lambda1, lambda2)),
            UtilitySpec::Generalized {
                lambda1,
                lambda2,
                gamma1,
                gamma2,
                gain_shape,
                loss_shape,
                ..
            } => {
                if gain_shape == BranchShape::Concave && loss_shape == BranchShape::Concave {
                    Some((-lambda1 / gamma1, -lambda2 / gamma2))
                } else {
                    None
                }
            }
        }
    }

    /// True for concave-concave `Generalized` specs with
    /// `-lambda1/gamma1 < -lambda2/gamma2`, which satisfy strong loss
    /// aversion globally (the gain-branch slope never exceeds
    /// `-lambda1/gamma1` and the loss-branch slope never drops below
    /// `-lambda2/gamma2`).
    pub fn strong_loss_aversion_analytic(&self) -> Option<bool> {
        match *self {
            UtilitySpec::Generalized { .. } => self
                .kink_slopes()
                .map(|(gain_sup, loss_inf)| gain_sup < loss_inf),
            _ => None,
        }
    }
}

/// Loss-aversion diagnostics evaluated on a grid of symmetric offsets
/// `delta > 0` around the reference point.
#[derive(Debug, Clone, PartialEq)]
pub struct LossAversionReport {
    /// `u(x0+d) + u(x0-d) < 0` for every grid `d`.
    pub symmetric_bet_aversion: bool,
    /// `u'(x0+d) < u'(x0-d)` for every grid `d`.
    pub increasing_symmetric_bet_aversion: bool,
    /// `u(x0+d)/d < -u(x0-d)/d` (chord-slope comparison) on paired points.
    pub weak_loss_aversion: bool,
    /// `u'(x0+d) < u'(x0-d)` on paired points (Neilson, grid check).
    pub strong_loss_aversion: bool,
    /// Analytic global strong-loss-aversion verdict, when the family
    /// admits one (concave-concave `Generalized`).
    pub strong_loss_aversion_analytic: Option<bool>,
}

/// Evaluates the four loss-aversion criteria on `delta_grid`.
///
/// Requires `u(x0) = 0` (the classical continuity convention) and a
/// nonempty grid of strictly positive offsets.
pub fn loss_aversion_report(
    spec: &UtilitySpec,
    delta_grid: &[f64],
) -> Result<LossAversionReport, Error> {
    spec.validate()?;
    if delta_grid.is_empty() || delta_grid.iter().any(|d| d.is_nan() || *d <= 0.0 || !d.is_finite()) {
        return Err(Error::InvalidSpec(
            "delta grid must be nonempty and strictly positive".into(),
        ));
    }
    let x0 = spec.reference_point();
    if spec.value(x0)?.abs() > 1e-12 {
        return Err(Error::InvalidSpec(format!(
            "loss-aversion report requires u(x0) = 0, got {}",
            spec.value(x0)?
        )));
    }

    let mut symmetric = true;
    let mut increasing = true;
    let mut weak = true;
    let mut strong = true;
    for &d in delta_grid {
        let up = spec.value(x0 + d)?;
        let down = spec.value(x0 - d)?;
        symmetric &= up + down < 0.0;
        // Chord slopes: u(z)/(z-x0) < u(y)/(y-x0) for y = x0-d, z = x0+d.
        weak &= up / d < down / (-d);
        let dp = spec.derivative(x0 + d, Side::Auto)?.value;
        let dm = spec.derivative(x0 - d, Side::Auto)?.value;
        increasing &= dp < dm;
        strong &= dp < dm;
    }

    Ok(LossAversionReport {
        symmetric_bet_aversion: symmetric,
        increasing_symmetric_bet_aversion: increasing,
        weak_loss_aversion: weak,
        strong_loss_aversion: strong,
        strong_loss_aversion_analytic: spec.strong_loss_aversion_analytic(),
    })
}
