//! CPT-aware power allocation over orthogonal channels.
//!
//! Each agent values its SNR through a reference-dependent utility and
//! weights its activation probability through a PWF. For the concave
//! exponential-family regime the KKT stationarity condition inverts in
//! closed form per agent, leaving a scalar dual variable found by
//! bisection on the total-power curve. A derivative-light projected-ascent
//! solver ([`solve_numeric`]) serves as independent oracle and as fallback
//! for regimes where the closed forms do not apply.

mod numeric;
mod risk_split;

pub use numeric::solve_numeric;
pub use risk_split::{risk_split_search, RiskSplitResult, SimplexVerdict};

use crate::utility::{BranchShape, Side, UtilitySpec};
use crate::weighting::WeightingSpec;
use crate::Error;

/// SNR distance from the reference point below which an agent counts as
/// pinned.
const PIN_TOL: f64 = 1e-9;

/// One agent: channel, noise, activation probability, and CPT features.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentSpec {
    pub id: usize,
    /// Linear power gain `|h|^2`.
    pub gain: f64,
    /// Linear noise power `N_0` (watts).
    pub noise: f64,
    /// Activation probability `p` in `(0, 1]`.
    pub activation: f64,
    pub pwf: WeightingSpec,
    pub utility: UtilitySpec,
    wp: f64,
    q: f64,
}

/// The closed-form parameters of a concave case-study utility.
#[derive(Debug, Clone, Copy)]
struct ConcaveParams {
    snr0: f64,
    lambda1: f64,
    lambda2: f64,
    alpha: f64,
    beta: f64,
    gamma1: f64,
    gamma2: f64,
}

impl AgentSpec {
    pub fn new(
        id: usize,
        gain: f64,
        noise: f64,
        activation: f64,
        pwf: WeightingSpec,
        utility: UtilitySpec,
    ) -> Result<Self, Error> {
        if !(gain > 0.0 && gain.is_finite()) {
            return Err(Error::InvalidSpec(format!("agent {id}: gain must be > 0, got {gain}")));
        }
        if !(noise > 0.0 && noise.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "agent {id}: noise must be > 0, got {noise}"
            )));
        }
        if !(activation > 0.0 && activation <= 1.0) {
            return Err(Error::InvalidSpec(format!(
                "agent {id}: activation must be in (0,1], got {activation}"
            )));
        }
        pwf.validate()?;
        utility.validate()?;
        let wp = pwf.value(activation)?;
        let q = wp * gain / noise;
        Ok(AgentSpec {
            id,
            gain,
            noise,
            activation,
            pwf,
            utility,
            wp,
            q,
        })
    }

    /// Cached `w(p)`.
    pub fn wp(&self) -> f64 {
        self.wp
    }

    /// Cached unit-power perceived channel quality `w(p) |h|^2 / N_0`.
    pub fn q(&self) -> f64 {
        self.q
    }

    /// SNR delivered by transmit power `p` on this channel.
    pub fn snr(&self, power: f64) -> f64 {
        power * self.gain / self.noise
    }

    fn concave_params(&self) -> Option<ConcaveParams> {
        match self.utility {
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
            } if mu1 == 1.0
                && mu2 == 1.0
                && gain_shape == BranchShape::Concave
                && loss_shape == BranchShape::Concave
                && x0 > 0.0 =>
            {
                Some(ConcaveParams {
                    snr0: x0,
                    lambda1,
                    lambda2,
                    alpha,
                    beta,
                    gamma1,
                    gamma2,
                })
            }
            _ => None,
        }
    }

    /// True when the agent's utility is in the closed-form regime:
    /// concave-concave `Generalized`, continuous at the reference point,
    /// strongly loss averse.
    pub fn supports_closed_form(&self) -> bool {
        self.concave_params().is_some()
            && self.utility.strong_loss_aversion_analytic() == Some(true)
    }

    /// Gain-subdomain dual threshold `-w(p) lambda1/gamma1 |h|^2/N_0`.
    fn gain_threshold(&self, c: &ConcaveParams) -> f64 {
        self.q * (-c.lambda1 / c.gamma1)
    }

    /// Loss-subdomain dual threshold `-w(p) lambda2/gamma2 |h|^2/N_0`.
    fn loss_threshold(&self, c: &ConcaveParams) -> f64 {
        self.q * (-c.lambda2 / c.gamma2)
    }

    /// Dual value at which the loss closed form reaches zero power.
    fn zero_cut(&self, c: &ConcaveParams) -> f64 {
        self.loss_threshold(c) * (-c.beta * c.snr0 / c.gamma2).exp()
    }
}

/// Where an agent sits relative to its reference SNR.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Label {
    Gain,
    Pinned,
    Loss,
    Inactive,
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Label::Gain => "gain",
            Label::Pinned => "pinned",
            Label::Loss => "loss",
            Label::Inactive => "inactive",
        };
        f.write_str(s)
    }
}

/// Dual-variable thresholds and per-agent kink intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct DualIntervals {
    /// Below this every agent is in the gain subdomain.
    pub mu_hat_1: f64,
    /// Above this every agent is in the loss subdomain (or beyond).
    pub mu_hat_2: f64,
    /// Per-agent kink interval `(gain threshold, loss threshold]`.
    pub gaps: Vec<(f64, f64)>,
    /// Per-agent dual value above which the agent receives zero power.
    pub zero_cuts: Vec<f64>,
}

/// A solved allocation with KKT diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationResult {
    /// Transmit power per agent, in input order (linear watts).
    pub powers: Vec<f64>,
    /// Dual variable for the total-power constraint.
    pub mu: f64,
    pub labels: Vec<Label>,
    /// `sum_i w(p_i) u(SNR_i)`.
    pub objective: f64,
    pub kkt: KktReport,
    /// Set when the requested budget could not be met within tolerance;
    /// `attained_power` then carries the nearest attainable total.
    pub slack: bool,
    pub attained_power: f64,
}

/// KKT residual magnitudes for an allocation.
#[derive(Debug, Clone, PartialEq)]
pub struct KktReport {
    /// Max over agents of the stationarity residual (kink subgradient
    /// interval distance for pinned agents).
    pub stationarity_max: f64,
    pub per_agent_stationarity: Vec<f64>,
    /// Budget overshoot plus negative-power mass.
    pub primal_residual: f64,
    /// `|mu (sum P - P_total)|`, scaled by the budget.
    pub slackness_residual: f64,
}

fn require_closed_form(agents: &[AgentSpec]) -> Result<Vec<ConcaveParams>, Error> {
    if agents.is_empty() {
        return Err(Error::InvalidSpec("agent list must be nonempty".into()));
    }
    agents
        .iter()
        .map(|a| {
            if !a.supports_closed_form() {
                return Err(Error::InvalidSpec(format!(
                    "agent {} utility is outside the closed-form regime",
                    a.id
                )));
            }
            Ok(a.concave_params().expect("checked"))
        })
        .collect()
}

fn label_for(snr: f64, snr0: f64, power: f64) -> Label {
    if power == 0.0 {
        Label::Inactive
    } else if (snr - snr0).abs() <= PIN_TOL * snr0.max(1.0) {
        Label::Pinned
    } else if snr > snr0 {
        Label::Gain
    } else {
        Label::Loss
    }
}

/// Power (and label) taken by one agent at dual value `mu`, by inverting
/// the stationarity condition on the appropriate branch.
///
/// Continuous and nonincreasing in `mu`: the gain closed form applies up
/// to the gain threshold, the kink pins the agent at the reference SNR
/// across the gap interval, the loss closed form runs from the loss
/// threshold down to zero power at the agent's zero cut.
pub fn per_agent_power(agent: &AgentSpec, mu: f64) -> Result<(f64, Label), Error> {
    // NaN must fail too, hence the comparison rather than `<= 0`.
    if mu.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
        return Err(Error::OutOfDomain(format!("dual value must be > 0, got {mu}")));
    }
    let c = agent.concave_params().ok_or_else(|| {
        Error::InvalidSpec(format!(
            "agent {}: per-agent closed form requires the concave regime",
            agent.id
        ))
    })?;
    let g1 = agent.gain_threshold(&c);
    let g2 = agent.loss_threshold(&c);
    let snr = if mu <= g1 {
        c.snr0 + c.gamma1 / c.alpha * (mu / g1).ln()
    } else if mu <= g2 {
        c.snr0
    } else {
        (c.snr0 + c.gamma2 / c.beta * (mu / g2).ln()).max(0.0)
    };
    let power = snr * agent.noise / agent.gain;
    Ok((power, label_for(snr, c.snr0, power)))
}

/// Dual thresholds for a set of agents.
pub fn dual_intervals(agents: &[AgentSpec]) -> Result<DualIntervals, Error> {
    let params = require_closed_form(agents)?;
    let mut gaps = Vec::with_capacity(agents.len());
    let mut zero_cuts = Vec::with_capacity(agents.len());
    for (a, c) in agents.iter().zip(&params) {
        gaps.push((a.gain_threshold(c), a.loss_threshold(c)));
        zero_cuts.push(a.zero_cut(c));
    }
    let mu_hat_1 = gaps.iter().map(|g| g.0).fold(f64::INFINITY, f64::min);
    let mu_hat_2 = gaps.iter().map(|g| g.1).fold(0.0, f64::max);
    Ok(DualIntervals {
        mu_hat_1,
        mu_hat_2,
        gaps,
        zero_cuts,
    })
}

/// Total transmit power demanded at dual value `mu`; nonincreasing in `mu`.
pub fn total_power(agents: &[AgentSpec], mu: f64) -> Result<f64, Error> {
    let mut total = 0.0;
    for a in agents {
        total += per_agent_power(a, mu)?.0;
    }
    Ok(total)
}

/// Weighted behavioral objective `sum_i w(p_i) u(SNR_i)` for any power
/// split, not just solver output.
pub fn objective_of(agents: &[AgentSpec], powers: &[f64]) -> Result<f64, Error> {
    let mut obj = 0.0;
    for (a, &p) in agents.iter().zip(powers) {
        obj += a.wp * a.utility.value(a.snr(p))?;
    }
    Ok(obj)
}

/// Stationarity slope `q u'(SNR)` with the kink resolved to the branch
/// the power sits on; falls back to a central difference where the
/// analytic one-sided derivative is unbounded.
pub(crate) fn stationarity_slope(agent: &AgentSpec, snr: f64) -> f64 {
    match agent.utility.derivative(snr, Side::Auto) {
        Ok(s) => agent.q * s.value,
        Err(_) => {
            let h = 1e-6 * snr.abs().max(1.0);
            let up = agent.utility.value(snr + h).unwrap_or(f64::NAN);
            let down = agent.utility.value(snr - h).unwrap_or(f64::NAN);
            agent.q * (up - down) / (2.0 * h)
        }
    }
}

/// KKT residuals of an allocation `(powers, mu)` against the agents.
pub fn verify_kkt(
    agents: &[AgentSpec],
    powers: &[f64],
    mu: f64,
    p_total: f64,
) -> Result<KktReport, Error> {
    if powers.len() != agents.len() {
        return Err(Error::InvalidSpec("power vector length mismatch".into()));
    }
    let mut per_agent = Vec::with_capacity(agents.len());
    for (a, &p) in agents.iter().zip(powers) {
        let snr = a.snr(p);
        let residual = match a.concave_params() {
            Some(c) => {
                let g1 = a.gain_threshold(&c);
                let g2 = a.loss_threshold(&c);
                match label_for(snr, c.snr0, p) {
                    // Kink subgradient: mu must land in [g1, g2].
                    Label::Pinned => (g1 - mu).max(mu - g2).max(0.0),
                    // Zero power needs k(i) = mu - q u'(0+) >= 0.
                    Label::Inactive => (a.zero_cut(&c) - mu).max(0.0),
                    _ => (mu - a.q * a.utility.derivative(snr, Side::Auto)?.value).abs(),
                }
            }
            None => {
                if p == 0.0 {
                    (stationarity_slope(a, 0.0) - mu).max(0.0)
                } else {
                    (mu - stationarity_slope(a, snr)).abs()
                }
            }
        };
        per_agent.push(residual);
    }
    let sum: f64 = powers.iter().sum();
    let negative_mass: f64 = powers.iter().map(|p| (-p).max(0.0)).sum();
    let primal = (sum - p_total).max(0.0) + negative_mass;
    // Normalized by mu * P so the residual is scale-free in both units.
    let slackness =
        (mu * (sum - p_total)).abs() / (mu.abs() * p_total).max(f64::MIN_POSITIVE);
    Ok(KktReport {
        stationarity_max: per_agent.iter().fold(0.0, |m: f64, &r| m.max(r)),
        per_agent_stationarity: per_agent,
        primal_residual: primal,
        slackness_residual: slackness,
    })
}

/// Solves the budgeted allocation by closed-form inversion plus dual
/// bisection.
///
/// Agents outside the concave closed-form regime are diverted to
/// [`solve_numeric`]. The bisection bracket starts around the dual
/// thresholds and expands geometrically until it straddles the budget;
/// it terminates when the budget matches within
/// `max(1e-9 P_total, 1e-12)` or the bracket collapses. A budget that
/// remains unmatched (flat total-power segment) is reported with
/// `slack = true` and the nearest attainable total rather than an
/// invented split.
pub fn solve(agents: &[AgentSpec], p_total: f64) -> Result<AllocationResult, Error> {
    if !(p_total > 0.0 && p_total.is_finite()) {
        return Err(Error::InvalidSpec(format!(
            "total power must be > 0, got {p_total}"
        )));
    }
    if agents.is_empty() {
        return Err(Error::InvalidSpec("agent list must be nonempty".into()));
    }
    if agents.iter().any(|a| !a.supports_closed_form()) {
        return solve_numeric(agents, p_total);
    }
    let intervals = dual_intervals(agents)?;

    // Relative tolerance only: an absolute floor would swamp physical
    // budgets (watts against -174 dBm/Hz noise are ~1e-20).
    let tol = 1e-9 * p_total;
    let mut lo = intervals.mu_hat_1 / 1024.0;
    let mut hi = intervals.mu_hat_2 * 1024.0;
    // Expand until the bracket straddles the budget. total_power is
    // nonincreasing in mu, so lo must demand at least P_total and hi at
    // most P_total.
    for _ in 0..200 {
        if total_power(agents, lo)? >= p_total {
            break;
        }
        lo /= 16.0;
        // Power grows only logarithmically as mu -> 0, so a budget far
        // beyond the SNR scale underflows the bracket. Refuse early with
        // a diagnosis instead of evaluating at mu = 0.
        if lo < 1e-280 {
            return Err(Error::NonConvergent(format!(
                "budget {p_total} unattainable: total power is only {} even at mu = {lo:e}; \
                 check power/noise units",
                total_power(agents, lo)?
            )));
        }
    }
    for _ in 0..200 {
        if total_power(agents, hi)? <= p_total {
            break;
        }
        hi *= 16.0;
    }

    let mut mu = 0.5 * (lo + hi);
    for _ in 0..400 {
        // Geometric midpoint: the bracket can span many decades.
        mu = (lo * hi).sqrt();
        let total = total_power(agents, mu)?;
        if (total - p_total).abs() <= tol || (hi - lo) <= 1e-14 * mu {
            break;
        }
        if total > p_total {
            lo = mu;
        } else {
            hi = mu;
        }
    }

    let mut powers = Vec::with_capacity(agents.len());
    let mut labels = Vec::with_capacity(agents.len());
    for a in agents {
        let (p, l) = per_agent_power(a, mu)?;
        powers.push(p);
        labels.push(l);
    }
    let attained: f64 = powers.iter().sum();
    let slack = (attained - p_total).abs() > tol;
    let objective = objective_of(agents, &powers)?;
    let kkt = verify_kkt(agents, &powers, mu, p_total)?;
    Ok(AllocationResult {
        powers,
        mu,
        labels,
        objective,
        kkt,
        slack,
        attained_power: attained,
    })
}

/// Classical water-filling baseline: maximizes the Shannon sum rate
/// `sum log2(1 + P_i g_i / N0)` subject to the same power budget,
/// ignoring perception and the behavioral utilities. Used only for
/// comparison against the behavioral allocation.
pub fn classical_waterfilling(agents: &[AgentSpec], p_total: f64) -> Result<Vec<f64>, Error> {
    if !(p_total > 0.0 && p_total.is_finite()) {
        return Err(Error::InvalidSpec(format!(
            "total power must be > 0, got {p_total}"
        )));
    }
    // Floor for agent i is N0/g_i; the water level nu solves
    // sum max(0, nu - floor_i) = P_total.
    let mut floors: Vec<f64> = agents.iter().map(|a| a.noise / a.gain).collect();
    floors.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = floors.len();
    let mut level = p_total + floors[0]; // k = 1 fallback
    for k in (1..=n).rev() {
        // Largest active set whose water level clears all its floors.
        let candidate = (p_total + floors[..k].iter().sum::<f64>()) / k as f64;
        if candidate > floors[k - 1] {
            level = candidate;
            break;
        }
    }
    Ok(agents
        .iter()
        .map(|a| (level - a.noise / a.gain).max(0.0))
        .collect())
}

/// Shannon sum rate in bits/s/Hz for a given power split.
pub fn sum_rate(agents: &[AgentSpec], powers: &[f64]) -> f64 {
    agents
        .iter()
        .zip(powers)
        .map(|(a, &p)| (1.0 + p * a.gain / a.noise).log2())
        .sum()
}

#[cfg(test)]
pub(crate) fn case_study_utility() -> UtilitySpec {
    UtilitySpec::generalized_concave(10f64.powf(0.7), 2.0, 4.0, 3.0, 2.0, -5.0, -5.0)
}

#[cfg(test)]
pub(crate) fn unit_agent(id: usize, gain: f64) -> AgentSpec {
    AgentSpec::new(
        id,
        gain,
        1.0,
        1.0,
        WeightingSpec::Identity,
        case_study_utility(),
    )
    .unwrap()
}
