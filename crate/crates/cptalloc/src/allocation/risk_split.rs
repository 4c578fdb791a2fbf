//! Budget split across independent risk sources.
//!
//! An agent spreads a budget over `m` sources; source `i` independently
//! pays `alpha_i * c_i * budget` with probability `q_i`. Every allocation
//! on a simplex grid is scored by its CPT value over the enumerated
//! outcome prospect. In the loss subdomain with a convex loss branch the
//! argmax lands on a corner (risk concentration); in the gain subdomain
//! with a concave gain branch, on the uniform split (diversification).

use crate::prospect::{cpt_value, Prospect};
use crate::utility::UtilitySpec;
use crate::weighting::WeightingSpec;
use crate::Error;

/// Shape of the best allocation relative to the simplex.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimplexVerdict {
    /// All mass on a single source.
    Corner,
    /// Uniform split `1/m` per source, within one grid step.
    Uniform,
    Interior,
}

impl std::fmt::Display for SimplexVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SimplexVerdict::Corner => "corner",
            SimplexVerdict::Uniform => "uniform",
            SimplexVerdict::Interior => "interior",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiskSplitResult {
    pub best_alloc: Vec<f64>,
    pub best_value: f64,
    pub verdict: SimplexVerdict,
    /// Every evaluated grid point with its CPT value, enumeration order.
    pub evaluations: Vec<(Vec<f64>, f64)>,
}

fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in 0..=total {
        for mut rest in compositions(total - first, parts - 1) {
            let mut v = Vec::with_capacity(parts);
            v.push(first);
            v.append(&mut rest);
            out.push(v);
        }
    }
    out
}

/// Outcome prospect of an allocation: all `2^m` success subsets.
fn outcome_prospect(
    alloc: &[f64],
    payoffs: &[(f64, f64)],
    budget: f64,
) -> Result<Prospect, Error> {
    let m = payoffs.len();
    let mut entries = Vec::with_capacity(1 << m);
    for mask in 0u32..(1u32 << m) {
        let mut prob = 1.0;
        let mut outcome = 0.0;
        for (i, &(c, q)) in payoffs.iter().enumerate() {
            if mask & (1 << i) != 0 {
                prob *= q;
                outcome += alloc[i] * c * budget;
            } else {
                prob *= 1.0 - q;
            }
        }
        entries.push((prob, outcome));
    }
    Prospect::new(entries)
}

/// Exhaustive simplex-grid search for the best risk split.
///
/// `divisions` is the per-axis grid resolution (step `1/divisions`);
/// sources beyond `m = 10` are rejected since outcome enumeration is
/// `2^m` per grid point.
pub fn risk_split_search(
    budget: f64,
    payoffs: &[(f64, f64)],
    u: &UtilitySpec,
    w: &WeightingSpec,
    divisions: usize,
) -> Result<RiskSplitResult, Error> {
    let m = payoffs.len();
    if m == 0 || m > 10 {
        return Err(Error::InvalidSpec(format!(
            "risk split supports 1..=10 sources, got {m}"
        )));
    }
    if divisions < 10 {
        return Err(Error::InvalidSpec(format!(
            "grid needs at least 10 divisions per axis, got {divisions}"
        )));
    }
    if !(budget > 0.0 && budget.is_finite()) {
        return Err(Error::InvalidSpec(format!("invalid budget {budget}")));
    }
    for &(c, q) in payoffs {
        if !c.is_finite() || !(0.0..=1.0).contains(&q) {
            return Err(Error::InvalidSpec(format!(
                "invalid payoff entry (c={c}, q={q})"
            )));
        }
    }
    u.validate()?;
    w.validate()?;

    let mut evaluations = Vec::new();
    let mut best_value = f64::NEG_INFINITY;
    let mut best_alloc = vec![0.0; m];
    for comp in compositions(divisions, m) {
        let alloc: Vec<f64> = comp.iter().map(|&k| k as f64 / divisions as f64).collect();
        let prospect = outcome_prospect(&alloc, payoffs, budget)?;
        let value = cpt_value(&prospect, u, w)?;
        if value > best_value {
            best_value = value;
            best_alloc = alloc.clone();
        }
        evaluations.push((alloc, value));
    }

    let step = 1.0 / divisions as f64;
    let uniform = 1.0 / m as f64;
    let verdict = if best_alloc.contains(&1.0) && m > 1 {
        SimplexVerdict::Corner
    } else if best_alloc.iter().all(|&a| (a - uniform).abs() <= step + 1e-12) {
        if m == 1 {
            SimplexVerdict::Corner
        } else {
            SimplexVerdict::Uniform
        }
    } else {
        SimplexVerdict::Interior
    };

    Ok(RiskSplitResult {
        best_alloc,
        best_value,
        verdict,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_source_takes_all() {
        let u = UtilitySpec::Kt {
            x0: 0.0,
            alpha: 0.5,
            beta: 0.5,
            lambda: 2.0,
        };
        let r =
            risk_split_search(1.0, &[(1.0, 0.5)], &u, &WeightingSpec::Identity, 10).unwrap();
        assert_eq!(r.best_alloc, vec![1.0]);
        assert_eq!(r.verdict, SimplexVerdict::Corner);
    }

    #[test]
    fn loss_domain_concentrates() {
        // All outcomes sit below x0 = 3, on the convex KT loss branch.
        let u = UtilitySpec::Kt {
            x0: 3.0,
            alpha: 0.5,
            beta: 0.5,
            lambda: 2.0,
        };
        let payoffs = [(1.0, 0.5), (1.0, 0.5)];
        let r =
            risk_split_search(1.0, &payoffs, &u, &WeightingSpec::Identity, 100).unwrap();
        assert_eq!(r.verdict, SimplexVerdict::Corner, "alloc {:?}", r.best_alloc);
    }

    #[test]
    fn gain_domain_diversifies() {
        // All outcomes at or above x0 = 0, on the concave KT gain branch.
        let u = UtilitySpec::Kt {
            x0: 0.0,
            alpha: 0.5,
            beta: 0.5,
            lambda: 2.0,
        };
        let payoffs = [(1.0, 0.5), (1.0, 0.5)];
        let r =
            risk_split_search(1.0, &payoffs, &u, &WeightingSpec::Identity, 100).unwrap();
        assert_eq!(
            r.verdict,
            SimplexVerdict::Uniform,
            "alloc {:?}",
            r.best_alloc
        );
        assert!((r.best_alloc[0] - 0.5).abs() <= 0.01 + 1e-12);
    }

    #[test]
    fn composition_grid_covers_simplex() {
        let comps = compositions(10, 3);
        // C(12, 2) compositions of 10 into 3 nonnegative parts.
        assert_eq!(comps.len(), 66);
        assert!(comps.iter().all(|c| c.iter().sum::<usize>() == 10));
    }

    #[test]
    fn rejects_oversized_instances() {
        let u = UtilitySpec::Kt {
            x0: 0.0,
            alpha: 0.5,
            beta: 0.5,
            lambda: 2.0,
        };
        let payoffs = vec![(1.0, 0.5); 11];
        assert!(
            risk_split_search(1.0, &payoffs, &u, &WeightingSpec::Identity, 10).is_err()
        );
        assert!(
            risk_split_search(1.0, &payoffs[..2], &u, &WeightingSpec::Identity, 5).is_err()
        );
    }
}
