//! Finite prospects and rank-dependent valuation.
//!
//! A prospect is a finite lottery of `(probability, outcome)` pairs. Its
//! CPT value replaces raw probabilities with decision weights: differences
//! of the PWF applied to cumulative probabilities of outcomes ranked from
//! best to worst.

use crate::utility::UtilitySpec;
use crate::weighting::WeightingSpec;
use crate::Error;

/// Absolute tolerance for the probability sum; inside it probabilities are
/// renormalized, outside the prospect is rejected.
pub const PROB_SUM_TOL: f64 = 1e-12;

/// A validated finite lottery.
#[derive(Debug, Clone, PartialEq)]
pub struct Prospect {
    entries: Vec<(f64, f64)>,
}

impl Prospect {
    /// Builds a prospect from `(probability, outcome)` pairs.
    ///
    /// Probabilities must be nonnegative and sum to 1 within
    /// [`PROB_SUM_TOL`]; the stored probabilities are renormalized to sum
    /// to 1 exactly (up to rounding) so downstream cumulative sums do not
    /// drift.
    pub fn new(entries: Vec<(f64, f64)>) -> Result<Self, Error> {
        if entries.is_empty() {
            return Err(Error::InvalidSpec("prospect must have k >= 1 entries".into()));
        }
        for &(p, y) in &entries {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::InvalidSpec(format!("invalid probability {p}")));
            }
            if !y.is_finite() {
                return Err(Error::InvalidSpec(format!("non-finite outcome {y}")));
            }
        }
        let total: f64 = entries.iter().map(|e| e.0).sum();
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::InvalidSpec(format!(
                "probabilities sum to {total}, expected 1 within {PROB_SUM_TOL}"
            )));
        }
        let entries = entries.into_iter().map(|(p, y)| (p / total, y)).collect();
        Ok(Prospect { entries })
    }

    /// Degenerate prospect paying `outcome` with certainty.
    pub fn certain(outcome: f64) -> Result<Self, Error> {
        Prospect::new(vec![(1.0, outcome)])
    }

    pub fn entries(&self) -> &[(f64, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Rank-dependent decision weights for a prospect under a PWF.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionWeights {
    /// Weight per rank, best outcome first. Nonnegative, sums to 1.
    pub weights: Vec<f64>,
    /// `permutation[input_index] = rank` (0-based, rank 0 = best outcome).
    pub permutation: Vec<usize>,
}

/// Computes decision weights: outcomes sorted descending (stable, so ties
/// keep input order), then `d_l = w(C_l) - w(C_{l-1})` with `C_l` the
/// cumulative probability of the `l` best outcomes and `C_0 = 0`.
pub fn decision_weights(
    prospect: &Prospect,
    w: &WeightingSpec,
) -> Result<DecisionWeights, Error> {
    w.validate()?;
    let k = prospect.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        prospect.entries[b]
            .1
            .partial_cmp(&prospect.entries[a].1)
            .expect("finite outcomes")
    });
    let mut permutation = vec![0usize; k];
    for (rank, &idx) in order.iter().enumerate() {
        permutation[idx] = rank;
    }

    let mut weights = Vec::with_capacity(k);
    let mut cum = 0.0;
    let mut w_prev = 0.0;
    for (rank, &idx) in order.iter().enumerate() {
        cum += prospect.entries[idx].0;
        // Guard the final cumulative value against rounding past 1.
        let c = if rank + 1 == k { 1.0 } else { cum.min(1.0) };
        let w_cur = w.value(c)?;
        weights.push((w_cur - w_prev).max(0.0));
        w_prev = w_cur;
    }
    Ok(DecisionWeights {
        weights,
        permutation,
    })
}

/// CPT value of a prospect: `sum_l d_l * u(outcome at rank l)`.
///
/// With the identity PWF this is exactly the expected utility.
pub fn cpt_value(
    prospect: &Prospect,
    u: &UtilitySpec,
    w: &WeightingSpec,
) -> Result<f64, Error> {
    u.validate()?;
    let dw = decision_weights(prospect, w)?;
    let mut value = 0.0;
    for (idx, &(_, y)) in prospect.entries.iter().enumerate() {
        value += dw.weights[dw.permutation[idx]] * u.value(y)?;
    }
    Ok(value)
}

/// Classical two-sided CPT value with separate PWFs for gains and losses.
///
/// Outcomes at or above the reference point are weighted by `w_plus`
/// cumulated from the best outcome downward; outcomes below it by
/// `w_minus` cumulated from the worst outcome upward. Reduces to
/// [`cpt_value`] when `w_plus = w_minus` and all outcomes lie on one side
/// of the reference point.
pub fn cpt_value_two_sided(
    prospect: &Prospect,
    u: &UtilitySpec,
    w_plus: &WeightingSpec,
    w_minus: &WeightingSpec,
) -> Result<f64, Error> {
    u.validate()?;
    w_plus.validate()?;
    w_minus.validate()?;
    let x0 = u.reference_point();

    let mut gains: Vec<(f64, f64)> = Vec::new();
    let mut losses: Vec<(f64, f64)> = Vec::new();
    for &(p, y) in prospect.entries() {
        if y >= x0 {
            gains.push((p, y));
        } else {
            losses.push((p, y));
        }
    }
    // Best gain first; worst loss first.
    gains.sort_by(|a, b| b.1.partial_cmp(&a.1).expect("finite outcomes"));
    losses.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("finite outcomes"));

    let mut value = 0.0;
    for (side, w) in [(&gains, w_plus), (&losses, w_minus)] {
        let mut cum = 0.0;
        let mut w_prev = 0.0;
        for &(p, y) in side.iter() {
            cum = (cum + p).min(1.0);
            let w_cur = w.value(cum)?;
            value += (w_cur - w_prev) * u.value(y)?;
            w_prev = w_cur;
        }
    }
    Ok(value)
}
