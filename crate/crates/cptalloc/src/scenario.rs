//! Scenario configuration (TOML) and its resolution into agent sets.
//!
//! All physical quantities carry unit-suffixed keys (`snr0_db`,
//! `n0_dbm_per_hz`, `p_total_watts`); internal math is linear watts.

use serde::Deserialize;

use crate::allocation::AgentSpec;
use crate::channel::{db_to_linear, dbm_to_watts, draw_rayleigh_gains, draw_uniform};
use crate::utility::{BranchShape, UtilitySpec};
use crate::weighting::WeightingSpec;
use crate::Error;

fn default_bandwidth() -> f64 {
    1.0
}

fn default_mu() -> f64 {
    1.0
}

fn default_concave() -> BranchShape {
    BranchShape::Concave
}

/// Utility parameters without a reference point; the scenario's `snr0_db`
/// supplies it.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum UtilityConfig {
    Kt {
        alpha: f64,
        beta: f64,
        lambda: f64,
    },
    Kw {
        lambda1: f64,
        lambda2: f64,
        alpha: f64,
        beta: f64,
    },
    Generalized {
        lambda1: f64,
        lambda2: f64,
        alpha: f64,
        beta: f64,
        gamma1: f64,
        gamma2: f64,
        #[serde(default = "default_mu")]
        mu1: f64,
        #[serde(default = "default_mu")]
        mu2: f64,
        #[serde(default = "default_concave")]
        gain_shape: BranchShape,
        #[serde(default = "default_concave")]
        loss_shape: BranchShape,
    },
}

impl UtilityConfig {
    /// Binds the reference point (linear SNR) to produce a full spec.
    pub fn with_reference(&self, x0: f64) -> UtilitySpec {
        match *self {
            UtilityConfig::Kt { alpha, beta, lambda } => UtilitySpec::Kt {
                x0,
                alpha,
                beta,
                lambda,
            },
            UtilityConfig::Kw {
                lambda1,
                lambda2,
                alpha,
                beta,
            } => UtilitySpec::Kw {
                x0,
                lambda1,
                lambda2,
                alpha,
                beta,
            },
            UtilityConfig::Generalized {
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
            } => UtilitySpec::Generalized {
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
            },
        }
    }
}

/// How per-agent activation probabilities are assigned.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ActivationConfig {
    /// Explicit per-agent probabilities.
    Explicit(Vec<f64>),
    /// `"uniform-random"`: i.i.d. uniform `(0,1)` from the scenario seed.
    Named(String),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentsConfig {
    pub count: usize,
    /// Defaults to 1 for every agent.
    pub activation: Option<ActivationConfig>,
    /// Seed for `"uniform-random"` activations.
    pub activation_seed: Option<u64>,
    pub utility: UtilityConfig,
    pub pwf: WeightingSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    pub mean: Option<f64>,
    pub seed: Option<u64>,
    /// Explicit linear gains, overriding the random draw.
    pub gains: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RiskSplitSection {
    pub budget: f64,
    /// `[payoff c, success probability q]` per source.
    pub payoffs: Vec<[f64; 2]>,
    pub divisions: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub snr0_db: f64,
    pub n0_dbm_per_hz: f64,
    #[serde(default = "default_bandwidth")]
    pub bandwidth_hz: f64,
    pub p_total_watts: Option<f64>,
    pub p_total_sweep: Option<SweepConfig>,
    pub agents: AgentsConfig,
    pub channel: ChannelConfig,
    pub risk_split: Option<RiskSplitSection>,
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self, Error> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self, Error> {
        Scenario::from_toml(&std::fs::read_to_string(path)?)
    }

    /// Reference point in linear SNR.
    pub fn snr0(&self) -> f64 {
        db_to_linear(self.snr0_db)
    }

    /// Noise power in watts over the configured bandwidth.
    pub fn noise_watts(&self) -> Result<f64, Error> {
        dbm_to_watts(self.n0_dbm_per_hz, self.bandwidth_hz)
    }

    /// Channel gains: explicit, or a seeded Rayleigh draw.
    pub fn gains(&self) -> Result<Vec<f64>, Error> {
        if let Some(gains) = &self.channel.gains {
            if gains.len() != self.agents.count {
                return Err(Error::Config(format!(
                    "{} explicit gains for {} agents",
                    gains.len(),
                    self.agents.count
                )));
            }
            return Ok(gains.clone());
        }
        let mean = self.channel.mean.unwrap_or(1.0);
        let seed = self.channel.seed.unwrap_or(0);
        Ok(draw_rayleigh_gains(self.agents.count, mean, seed)?.gains)
    }

    /// Activation probabilities per agent.
    pub fn activations(&self) -> Result<Vec<f64>, Error> {
        let n = self.agents.count;
        match &self.agents.activation {
            None => Ok(vec![1.0; n]),
            Some(ActivationConfig::Explicit(ps)) => {
                if ps.len() != n {
                    return Err(Error::Config(format!(
                        "{} activation probabilities for {n} agents",
                        ps.len()
                    )));
                }
                Ok(ps.clone())
            }
            Some(ActivationConfig::Named(name)) if name == "uniform-random" => {
                let seed = self.agents.activation_seed.ok_or_else(|| {
                    Error::Config("uniform-random activations need activation_seed".into())
                })?;
                // Open interval: activation 0 is invalid.
                Ok(draw_uniform(n, seed)
                    .into_iter()
                    .map(|u| u.max(1e-12))
                    .collect())
            }
            Some(ActivationConfig::Named(other)) => Err(Error::Config(format!(
                "unknown activation mode {other:?} (expected \"uniform-random\" or a list)"
            ))),
        }
    }

    /// Builds the validated agent set, in channel order.
    pub fn build_agents(&self) -> Result<Vec<AgentSpec>, Error> {
        if self.agents.count == 0 {
            return Err(Error::Config("agents.count must be >= 1".into()));
        }
        let noise = self.noise_watts()?;
        let utility = self.agents.utility.with_reference(self.snr0());
        utility.validate()?;
        let gains = self.gains()?;
        let activations = self.activations()?;
        gains
            .iter()
            .zip(&activations)
            .enumerate()
            .map(|(i, (&g, &p))| AgentSpec::new(i, g, noise, p, self.agents.pwf, utility))
            .collect()
    }

    /// Key/value pairs for the CSV reproducibility manifest.
    pub fn manifest(&self) -> Vec<(String, String)> {
        let mut m = vec![
            ("snr0_db".into(), format!("{}", self.snr0_db)),
            ("n0_dbm_per_hz".into(), format!("{}", self.n0_dbm_per_hz)),
            ("bandwidth_hz".into(), format!("{}", self.bandwidth_hz)),
            ("agents".into(), format!("{}", self.agents.count)),
            ("utility".into(), format!("{:?}", self.agents.utility)),
            ("pwf".into(), format!("{:?}", self.agents.pwf)),
        ];
        if let Some(p) = self.p_total_watts {
            m.push(("p_total_watts".into(), format!("{p}")));
        }
        if let Some(s) = self.p_total_sweep {
            m.push((
                "p_total_sweep".into(),
                format!("{}:{}:{}", s.lo, s.hi, s.steps),
            ));
        }
        if let Some(g) = &self.channel.gains {
            m.push(("channel_gains".into(), format!("{g:?}")));
        } else {
            m.push((
                "channel_mean".into(),
                format!("{}", self.channel.mean.unwrap_or(1.0)),
            ));
            m.push((
                "channel_seed".into(),
                format!("{}", self.channel.seed.unwrap_or(0)),
            ));
        }
        match &self.agents.activation {
            None => m.push(("activation".into(), "1".into())),
            Some(ActivationConfig::Explicit(ps)) => {
                m.push(("activation".into(), format!("{ps:?}")))
            }
            Some(ActivationConfig::Named(n)) => {
                m.push(("activation".into(), n.clone()));
                if let Some(s) = self.agents.activation_seed {
                    m.push(("activation_seed".into(), format!("{s}")));
                }
            }
        }
        m
    }
}

/// Renders a CSV document: `#`-prefixed manifest comments, a header row,
/// then data rows. Comma separator, `.` decimal.
pub fn render_csv(manifest: &[(String, String)], header: &str, rows: &[String]) -> String {
    let mut out = String::new();
    for (k, v) in manifest {
        out.push_str(&format!("# {k}={v}\n"));
    }
    out.push_str(header);
    out.push('\n');
    for row in rows {
        out.push_str(row);
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const CASE_STUDY: &str = r#"
snr0_db = 7.0
n0_dbm_per_hz = -174.0
p_total_watts = 4.0e-20

[agents]
count = 6

[agents.utility]
family = "generalized"
lambda1 = 2.0
lambda2 = 4.0
alpha = 3.0
beta = 2.0
gamma1 = -5.0
gamma2 = -5.0

[agents.pwf]
family = "identity"

[channel]
mean = 1.0
seed = 42
"#;

    #[test]
    fn parses_case_study_scenario() {
        let s = Scenario::from_toml(CASE_STUDY).unwrap();
        assert_eq!(s.agents.count, 6);
        assert!((s.snr0() - 10f64.powf(0.7)).abs() < 1e-12);
        let agents = s.build_agents().unwrap();
        assert_eq!(agents.len(), 6);
        assert!(agents.iter().all(|a| a.supports_closed_form()));
        // N0 = -174 dBm/Hz over 1 Hz.
        assert!((agents[0].noise - 10f64.powf(-20.4)).abs() < 1e-25);
    }

    #[test]
    fn explicit_gains_and_activations() {
        let text = r#"
snr0_db = 0.0
n0_dbm_per_hz = -30.0
p_total_watts = 1.0

[agents]
count = 2
activation = [0.3, 0.9]

[agents.utility]
family = "generalized"
lambda1 = 2.0
lambda2 = 4.0
alpha = 3.0
beta = 2.0
gamma1 = -5.0
gamma2 = -5.0

[agents.pwf]
family = "prelec"
gamma = 1.0
theta = 0.5

[channel]
gains = [0.5, 1.5]
"#;
        let s = Scenario::from_toml(text).unwrap();
        let agents = s.build_agents().unwrap();
        assert_eq!(agents[1].gain, 1.5);
        assert_eq!(agents[0].activation, 0.3);
        assert!(agents[0].wp() < 0.3 + 1.0); // w(p) cached
    }

    #[test]
    fn uniform_random_activations_deterministic() {
        let text = CASE_STUDY.replace(
            "count = 6",
            "count = 6\nactivation = \"uniform-random\"\nactivation_seed = 9",
        );
        let a = Scenario::from_toml(&text).unwrap().activations().unwrap();
        let b = Scenario::from_toml(&text).unwrap().activations().unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|p| (0.0..=1.0).contains(p)));
    }

    #[test]
    fn rejects_inconsistent_config() {
        let bad = CASE_STUDY.replace("mean = 1.0\nseed = 42", "gains = [1.0, 2.0]");
        assert!(Scenario::from_toml(&bad).unwrap().build_agents().is_err());
        assert!(Scenario::from_toml("snr0_db = 1").is_err());
    }

    #[test]
    fn csv_rendering_shape() {
        let csv = render_csv(
            &[("seed".into(), "42".into())],
            "a,b",
            &["1,2".into(), "3,4".into()],
        );
        assert_eq!(csv, "# seed=42\na,b\n1,2\n3,4\n");
    }
}
