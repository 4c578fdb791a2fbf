//! Independent numeric solver for the budgeted allocation.
//!
//! Multi-start projected gradient ascent on the budget simplex followed by
//! a derivative-free pairwise-exchange polish. The polish compares raw
//! objective values, so reference-point kinks and the convex KT loss
//! branch are handled without subgradient bookkeeping. Deliberately shares
//! no code with the closed-form KKT path in the parent module.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{stationarity_slope, verify_kkt, AgentSpec, AllocationResult, Label, PIN_TOL};
use crate::Error;

/// Euclidean projection onto `{P >= 0, sum P = budget}`.
fn project_simplex(point: &[f64], budget: f64) -> Vec<f64> {
    let mut sorted: Vec<f64> = point.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, &v) in sorted.iter().enumerate() {
        cum += v;
        let t = (cum - budget) / (k + 1) as f64;
        if v > t {
            theta = t;
        }
    }
    point.iter().map(|&v| (v - theta).max(0.0)).collect()
}

fn objective(agents: &[AgentSpec], powers: &[f64]) -> f64 {
    agents
        .iter()
        .zip(powers)
        .map(|(a, &p)| a.wp() * a.utility.value(a.snr(p)).unwrap_or(f64::NEG_INFINITY))
        .sum()
}

fn gradient(agents: &[AgentSpec], powers: &[f64]) -> Vec<f64> {
    agents
        .iter()
        .zip(powers)
        .map(|(a, &p)| stationarity_slope(a, a.snr(p)))
        .collect()
}

fn ascend(agents: &[AgentSpec], start: Vec<f64>, budget: f64) -> (Vec<f64>, f64) {
    let mut p = start;
    let mut value = objective(agents, &p);
    let mut step = budget;
    for _ in 0..600 {
        let g = gradient(agents, &p);
        let mut improved = false;
        // Armijo backtracking on the projected step.
        let mut s = step;
        for _ in 0..40 {
            let trial: Vec<f64> = p.iter().zip(&g).map(|(&pi, &gi)| pi + s * gi).collect();
            let proj = project_simplex(&trial, budget);
            let v = objective(agents, &proj);
            if v > value + 1e-16 * value.abs() {
                p = proj;
                value = v;
                step = s * 2.0;
                improved = true;
                break;
            }
            s *= 0.5;
        }
        if !improved {
            break;
        }
    }
    (p, value)
}

/// Move mass between agent pairs at shrinking step sizes, keeping any
/// strict improvement.
fn pairwise_polish(agents: &[AgentSpec], mut p: Vec<f64>, budget: f64) -> (Vec<f64>, f64) {
    let n = agents.len();
    let mut value = objective(agents, &p);
    let mut delta = budget / 4.0;
    while delta > 1e-13 * budget {
        loop {
            let mut improved = false;
            for from in 0..n {
                for to in 0..n {
                    // Re-check the donor each move: an earlier accepted
                    // transfer in this row may have drained it.
                    if to == from || p[from] < delta {
                        continue;
                    }
                    p[from] -= delta;
                    p[to] += delta;
                    let v = objective(agents, &p);
                    if v > value {
                        value = v;
                        improved = true;
                    } else {
                        p[from] += delta;
                        p[to] -= delta;
                    }
                }
            }
            if !improved {
                break;
            }
        }
        delta *= 0.5;
    }
    (p, value)
}

/// Maximizes `sum w(p_i) u(SNR_i)` over `{P >= 0, sum P <= P_total}` by
/// multi-start projected ascent (uniform, one-agent corners, random
/// starts) plus pairwise-exchange polish.
///
/// The utility functions are strictly increasing, so the optimum exhausts
/// the budget; the search runs on the simplex `sum P = P_total`.
pub fn solve_numeric(agents: &[AgentSpec], p_total: f64) -> Result<AllocationResult, Error> {
    if !(p_total > 0.0 && p_total.is_finite()) {
        return Err(Error::InvalidSpec(format!(
            "total power must be > 0, got {p_total}"
        )));
    }
    let n = agents.len();
    if n == 0 {
        return Err(Error::InvalidSpec("agent list must be nonempty".into()));
    }

    let mut starts: Vec<Vec<f64>> = Vec::new();
    starts.push(vec![p_total / n as f64; n]);
    for i in 0..n {
        let mut corner = vec![0.0; n];
        corner[i] = p_total;
        starts.push(corner);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x9e3779b97f4a7c15);
    while starts.len() < 8 + n {
        let raw: Vec<f64> = (0..n).map(|_| rng.gen::<f64>().max(1e-9)).collect();
        let s: f64 = raw.iter().sum();
        starts.push(raw.into_iter().map(|v| v * p_total / s).collect());
    }

    let mut best: Option<(Vec<f64>, f64)> = None;
    for start in starts {
        let (p, _) = ascend(agents, start, p_total);
        let (p, v) = pairwise_polish(agents, p, p_total);
        if best.as_ref().is_none_or(|(_, bv)| v > *bv) {
            best = Some((p, v));
        }
    }
    let (powers, value) = best.expect("at least one start");

    // Dual estimate: average stationarity slope over active agents.
    let active: Vec<f64> = agents
        .iter()
        .zip(&powers)
        .filter(|(_, &p)| p > 1e-12 * p_total)
        .map(|(a, &p)| stationarity_slope(a, a.snr(p)))
        .collect();
    let mu = if active.is_empty() {
        f64::MIN_POSITIVE
    } else {
        active.iter().sum::<f64>() / active.len() as f64
    };

    let labels = agents
        .iter()
        .zip(&powers)
        .map(|(a, &p)| {
            let snr = a.snr(p);
            let snr0 = a.utility.reference_point();
            if p <= 1e-15 * p_total {
                Label::Inactive
            } else if (snr - snr0).abs() <= PIN_TOL.sqrt() * snr0.max(1.0) {
                Label::Pinned
            } else if snr > snr0 {
                Label::Gain
            } else {
                Label::Loss
            }
        })
        .collect();

    let attained: f64 = powers.iter().sum();
    let kkt = verify_kkt(agents, &powers, mu, p_total)?;
    Ok(AllocationResult {
        powers,
        mu,
        labels,
        objective: value,
        kkt,
        slack: false,
        attained_power: attained,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{solve, unit_agent};
    use super::*;
    use crate::utility::UtilitySpec;
    use crate::weighting::WeightingSpec;

    #[test]
    fn projection_stays_on_simplex() {
        let p = project_simplex(&[3.0, -1.0, 0.5], 1.0);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p.iter().all(|&v| v >= 0.0));
        // Already-feasible points project to themselves.
        let q = project_simplex(&[0.25, 0.75], 1.0);
        assert!((q[0] - 0.25).abs() < 1e-12 && (q[1] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn single_agent_takes_everything() {
        let a = unit_agent(0, 1.0);
        let r = solve_numeric(std::slice::from_ref(&a), 4.0).unwrap();
        assert!((r.powers[0] - 4.0).abs() < 1e-9);
    }

    #[test]
    fn matches_closed_form_on_concave_instances() {
        let agents: Vec<_> = [0.5, 1.0, 2.0, 3.5].iter().enumerate()
            .map(|(i, &g)| unit_agent(i, g))
            .collect();
        for p_total in [2.0, 8.0, 25.0] {
            let exact = solve(&agents, p_total).unwrap();
            let numeric = solve_numeric(&agents, p_total).unwrap();
            let scale = exact.objective.abs().max(1e-9);
            assert!(
                (exact.objective - numeric.objective).abs() / scale < 1e-6,
                "P={p_total}: exact {} vs numeric {}",
                exact.objective,
                numeric.objective
            );
        }
    }

    #[test]
    fn kt_convex_loss_concentrates() {
        // Convex loss branch pushes mass onto few agents; cross-check a
        // dense grid search on two agents.
        let kt = UtilitySpec::Kt {
            x0: 5.0,
            alpha: 0.8,
            beta: 0.4,
            lambda: 1.5,
        };
        let agents: Vec<_> = [1.0, 1.3]
            .iter()
            .enumerate()
            .map(|(i, &g)| {
                AgentSpec::new(i, g, 1.0, 1.0, WeightingSpec::Identity, kt).unwrap()
            })
            .collect();
        let p_total = 3.0; // deep in the loss region for both agents
        let r = solve_numeric(&agents, p_total).unwrap();

        let steps = 200;
        let mut grid_best = f64::NEG_INFINITY;
        let mut grid_arg = 0.0;
        for k in 0..=steps {
            let p0 = p_total * k as f64 / steps as f64;
            let v = objective(&agents, &[p0, p_total - p0]);
            if v > grid_best {
                grid_best = v;
                grid_arg = p0;
            }
        }
        assert!(
            r.objective >= grid_best - 1e-9,
            "numeric {} below grid {} (argmax p0={grid_arg})",
            r.objective,
            grid_best
        );
        // Vertex-heavy: one agent hogs the budget.
        let max_share = r.powers.iter().fold(0.0f64, |m, &p| m.max(p)) / p_total;
        assert!(max_share > 0.95, "shares {:?}", r.powers);
    }

    #[test]
    fn diverted_path_used_for_non_concave_utilities() {
        let kt = UtilitySpec::Kt {
            x0: 1.0,
            alpha: 1.0,
            beta: 1.0,
            lambda: 2.0,
        };
        let a = AgentSpec::new(0, 1.0, 1.0, 1.0, WeightingSpec::Identity, kt).unwrap();
        assert!(!a.supports_closed_form());
        // solve() must still succeed by diversion.
        let r = solve(std::slice::from_ref(&a), 2.0).unwrap();
        assert!((r.powers[0] - 2.0).abs() < 1e-9);
    }
}
