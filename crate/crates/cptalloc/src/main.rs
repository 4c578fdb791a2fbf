use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use cptalloc::allocation::{
    classical_waterfilling, dual_intervals, objective_of, risk_split_search, solve, sum_rate,
    AgentSpec,
};
use cptalloc::channel::linear_to_db;
use cptalloc::perception::PerceptualTransform;
use cptalloc::perception::ScalarDistribution;
use cptalloc::scenario::{render_csv, Scenario};
use cptalloc::utility::loss_aversion_report;
use cptalloc::Error;

#[derive(Parser)]
#[command(name = "cptalloc", version, about = "Behavioral power allocation toolkit")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum CurveKind {
    /// Utility u(SNR) over a linear-SNR grid.
    Utility,
    /// Probability weighting w(p) over a probability grid.
    Pwf,
    /// Base vs perceived channel-gain CDF over a gain grid.
    PerceivedCdf,
}

#[derive(Subcommand)]
enum Cmd {
    /// Tabulate a curve from the scenario's utility/weighting/channel.
    Curve {
        #[arg(long, value_enum)]
        kind: CurveKind,
        #[arg(long)]
        config: PathBuf,
        /// Evaluation grid, `lo:hi:steps` (steps points, inclusive).
        #[arg(long)]
        grid: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the power allocation for the configured budget.
    Allocate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the channel seed from the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Solve across the configured budget sweep.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the sweep range from the config, `lo:hi:steps`.
        #[arg(long)]
        grid: Option<String>,
    },
    /// Grid-search the best split of a budget across risky sources.
    RiskSplit {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check solver optimality and behavioral diagnostics; exits nonzero
    /// on any failed check.
    Validate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

/// Parses `lo:hi:steps` into an inclusive linear grid of `steps` points.
fn parse_grid(text: &str) -> Result<Vec<f64>, Error> {
    let parts: Vec<&str> = text.split(':').collect();
    let err = || Error::Config(format!("grid must be lo:hi:steps, got {text:?}"));
    if parts.len() != 3 {
        return Err(err());
    }
    let lo: f64 = parts[0].parse().map_err(|_| err())?;
    let hi: f64 = parts[1].parse().map_err(|_| err())?;
    let steps: usize = parts[2].parse().map_err(|_| err())?;
    if !(lo.is_finite() && hi.is_finite() && hi >= lo && steps >= 2) {
        return Err(err());
    }
    Ok((0..steps)
        .map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64)
        .collect())
}

fn load(config: &Path, seed: Option<u64>) -> Result<Scenario, Error> {
    let mut s = Scenario::load(config)?;
    if let Some(seed) = seed {
        s.channel.seed = Some(seed);
    }
    Ok(s)
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Error> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(Error::from),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_curve(
    kind: CurveKind,
    config: &Path,
    grid: &str,
    out: Option<&Path>,
) -> Result<(), Error> {
    let scenario = load(config, None)?;
    let grid = parse_grid(grid)?;
    let mut manifest = scenario.manifest();
    manifest.push(("command".into(), "curve".into()));
    let (header, rows) = match kind {
        CurveKind::Utility => {
            let u = scenario.agents.utility.with_reference(scenario.snr0());
            u.validate()?;
            let rows = grid
                .iter()
                .map(|&x| Ok(format!("{x},{}", u.value(x)?)))
                .collect::<Result<Vec<_>, Error>>()?;
            ("snr,utility", rows)
        }
        CurveKind::Pwf => {
            let w = scenario.agents.pwf;
            w.validate()?;
            let rows = grid
                .iter()
                .map(|&p| Ok(format!("{p},{}", w.value(p)?)))
                .collect::<Result<Vec<_>, Error>>()?;
            ("p,w", rows)
        }
        CurveKind::PerceivedCdf => {
            let mean = scenario.channel.mean.unwrap_or(1.0);
            let t = PerceptualTransform::new(
                ScalarDistribution::exponential(mean)?,
                scenario.agents.pwf,
            )?;
            let rows = grid
                .iter()
                .map(|&x| {
                    Ok(format!(
                        "{x},{},{}",
                        t.base.cdf(x),
                        t.perceived_cdf(x)?
                    ))
                })
                .collect::<Result<Vec<_>, Error>>()?;
            ("gain,cdf,perceived_cdf", rows)
        }
    };
    emit(out, &render_csv(&manifest, header, &rows))
}

/// Agent rows sorted by ascending channel quality `g/N0`.
fn agent_rows(agents: &[AgentSpec], powers: &[f64], labels: &[cptalloc::allocation::Label]) -> Vec<String> {
    let mut order: Vec<usize> = (0..agents.len()).collect();
    order.sort_by(|&i, &j| {
        let qi = agents[i].gain / agents[i].noise;
        let qj = agents[j].gain / agents[j].noise;
        qi.partial_cmp(&qj).unwrap()
    });
    order
        .into_iter()
        .map(|i| {
            let a = &agents[i];
            format!(
                "{},{},{},{},{},{}",
                a.id,
                a.gain,
                a.wp(),
                powers[i],
                linear_to_db(a.snr(powers[i]).max(f64::MIN_POSITIVE)),
                labels[i]
            )
        })
        .collect()
}

fn cmd_allocate(config: &Path, out: Option<&Path>, seed: Option<u64>) -> Result<(), Error> {
    let scenario = load(config, seed)?;
    let p_total = scenario
        .p_total_watts
        .ok_or_else(|| Error::Config("allocate needs p_total_watts".into()))?;
    let agents = scenario.build_agents()?;
    let result = solve(&agents, p_total)?;

    let n = agents.len() as f64;
    let equal: Vec<f64> = vec![p_total / n; agents.len()];
    let wf = classical_waterfilling(&agents, p_total)?;

    let mut manifest = scenario.manifest();
    manifest.push(("command".into(), "allocate".into()));
    manifest.push(("mu".into(), format!("{}", result.mu)));
    manifest.push(("objective".into(), format!("{}", result.objective)));
    manifest.push((
        "objective_equal_split".into(),
        format!("{}", objective_of(&agents, &equal)?),
    ));
    manifest.push((
        "objective_waterfilling".into(),
        format!("{}", objective_of(&agents, &wf)?),
    ));
    manifest.push(("sum_rate".into(), format!("{}", sum_rate(&agents, &result.powers))));
    manifest.push((
        "sum_rate_waterfilling".into(),
        format!("{}", sum_rate(&agents, &wf)),
    ));
    manifest.push((
        "stationarity_max".into(),
        format!("{}", result.kkt.stationarity_max),
    ));
    manifest.push((
        "primal_residual".into(),
        format!("{}", result.kkt.primal_residual),
    ));
    manifest.push(("slack".into(), format!("{}", result.slack)));

    let rows = agent_rows(&agents, &result.powers, &result.labels);
    emit(out, &render_csv(&manifest, "agent,gain,wp,power,snr_db,label", &rows))?;
    eprintln!(
        "mu={} objective={} equal_split={} waterfilling={} stationarity_max={} primal_residual={}",
        result.mu,
        result.objective,
        objective_of(&agents, &equal)?,
        objective_of(&agents, &wf)?,
        result.kkt.stationarity_max,
        result.kkt.primal_residual,
    );
    Ok(())
}

fn label_counts(labels: &[cptalloc::allocation::Label]) -> (usize, usize, usize, usize) {
    use cptalloc::allocation::Label;
    let mut c = (0, 0, 0, 0);
    for l in labels {
        match l {
            Label::Gain => c.0 += 1,
            Label::Pinned => c.1 += 1,
            Label::Loss => c.2 += 1,
            Label::Inactive => c.3 += 1,
        }
    }
    c
}

fn cmd_sweep(
    config: &Path,
    out: Option<&Path>,
    seed: Option<u64>,
    grid: Option<&str>,
) -> Result<(), Error> {
    let scenario = load(config, seed)?;
    let budgets = match (grid, scenario.p_total_sweep) {
        (Some(g), _) => parse_grid(g)?,
        (None, Some(s)) => {
            if !(s.lo > 0.0 && s.hi >= s.lo && s.steps >= 2) {
                return Err(Error::Config("p_total_sweep needs 0 < lo <= hi, steps >= 2".into()));
            }
            // Geometric spacing: budget sweeps span decades.
            (0..s.steps)
                .map(|i| s.lo * (s.hi / s.lo).powf(i as f64 / (s.steps - 1) as f64))
                .collect()
        }
        (None, None) => {
            return Err(Error::Config("sweep needs p_total_sweep or --grid".into()))
        }
    };
    if budgets.iter().any(|&b| b <= 0.0) {
        return Err(Error::Config("sweep budgets must be positive".into()));
    }
    let agents = scenario.build_agents()?;

    // Rank agents by channel quality once; peak_rank reports where the
    // most-powered agent sits in that order (1 = weakest channel).
    let mut order: Vec<usize> = (0..agents.len()).collect();
    order.sort_by(|&i, &j| {
        (agents[i].gain / agents[i].noise)
            .partial_cmp(&(agents[j].gain / agents[j].noise))
            .unwrap()
    });
    let mut rank_of = vec![0usize; agents.len()];
    for (rank, &i) in order.iter().enumerate() {
        rank_of[i] = rank + 1;
    }

    // Budgets are independent; solve them concurrently.
    let results: Vec<Result<_, Error>> = std::thread::scope(|scope| {
        let handles: Vec<_> = budgets
            .iter()
            .map(|&b| {
                let agents = &agents;
                scope.spawn(move || solve(agents, b))
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });

    let mut rows = Vec::with_capacity(budgets.len());
    for (&b, result) in budgets.iter().zip(results) {
        let r = result?;
        let (ng, np, nl, ni) = label_counts(&r.labels);
        let peak = r
            .powers
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(i, _)| rank_of[i])
            .unwrap();
        rows.push(format!(
            "{b},{},{},{ng},{np},{nl},{ni},{peak}",
            r.mu, r.objective
        ));
    }
    let mut manifest = scenario.manifest();
    manifest.push(("command".into(), "sweep".into()));
    emit(
        out,
        &render_csv(
            &manifest,
            "p_total,mu,objective,n_gain,n_pinned,n_loss,n_inactive,peak_rank",
            &rows,
        ),
    )
}

fn cmd_risk_split(config: &Path, out: Option<&Path>) -> Result<(), Error> {
    let scenario = load(config, None)?;
    let rs = scenario
        .risk_split
        .as_ref()
        .ok_or_else(|| Error::Config("risk-split needs a [risk_split] section".into()))?;
    let payoffs: Vec<(f64, f64)> = rs.payoffs.iter().map(|p| (p[0], p[1])).collect();
    let u = scenario.agents.utility.with_reference(scenario.snr0());
    let result = risk_split_search(rs.budget, &payoffs, &u, &scenario.agents.pwf, rs.divisions)?;

    let mut manifest = scenario.manifest();
    manifest.push(("command".into(), "risk-split".into()));
    manifest.push(("budget".into(), format!("{}", rs.budget)));
    manifest.push(("divisions".into(), format!("{}", rs.divisions)));
    manifest.push(("verdict".into(), format!("{}", result.verdict)));
    manifest.push(("best_value".into(), format!("{}", result.best_value)));
    let m = payoffs.len();
    let header: String = (1..=m)
        .map(|i| format!("alpha_{i},"))
        .collect::<String>()
        + "cpt_value";
    let rows: Vec<String> = result
        .evaluations
        .iter()
        .map(|(alloc, v)| {
            let mut row: String = alloc.iter().map(|a| format!("{a},")).collect();
            row.push_str(&format!("{v}"));
            row
        })
        .collect();
    emit(out, &render_csv(&manifest, &header, &rows))?;
    eprintln!(
        "verdict={} best_value={} best_alloc={:?}",
        result.verdict, result.best_value, result.best_alloc
    );
    Ok(())
}

fn cmd_validate(config: &Path, seed: Option<u64>) -> Result<bool, Error> {
    let scenario = load(config, seed)?;
    let agents = scenario.build_agents()?;
    let u = scenario.agents.utility.with_reference(scenario.snr0());
    let mut ok = true;
    let mut check = |name: &str, pass: bool, detail: String| {
        ok &= pass;
        println!("[{}] {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    };

    let d = dual_intervals(&agents)?;
    println!("dual thresholds: mu_hat_1={} mu_hat_2={}", d.mu_hat_1, d.mu_hat_2);
    for (a, ((lo, hi), zc)) in agents.iter().zip(d.gaps.iter().zip(&d.zero_cuts)) {
        println!(
            "  agent {}: pinned mu in ({lo}, {hi}], inactive above {zc}",
            a.id
        );
    }
    check(
        "threshold-order",
        d.mu_hat_1 <= d.mu_hat_2 && d.gaps.iter().all(|(lo, hi)| lo < hi),
        format!("mu_hat_1={} mu_hat_2={}", d.mu_hat_1, d.mu_hat_2),
    );

    let x0 = u.reference_point();
    let deltas: Vec<f64> = (1..=40).map(|i| x0 * i as f64 / 41.0).collect();
    let report = loss_aversion_report(&u, &deltas)?;
    println!("loss aversion: {report:?}");
    check(
        "loss-aversion-consistency",
        report.strong_loss_aversion_analytic != Some(true) || report.strong_loss_aversion,
        format!("analytic={:?} grid={}", report.strong_loss_aversion_analytic, report.strong_loss_aversion),
    );

    if let Some(p_total) = scenario.p_total_watts {
        let r = solve(&agents, p_total)?;
        check(
            "kkt-stationarity",
            r.kkt.stationarity_max <= 1e-6 * r.mu.max(1.0),
            format!("max residual {}", r.kkt.stationarity_max),
        );
        check(
            "budget",
            r.slack || r.kkt.primal_residual <= 1e-6 * p_total,
            format!("primal residual {}", r.kkt.primal_residual),
        );
        check(
            "slackness",
            r.kkt.slackness_residual <= 1e-6 * r.mu.max(1.0),
            format!("residual {}", r.kkt.slackness_residual),
        );
        // Any feasible perturbation must not beat the reported optimum.
        let n = agents.len() as f64;
        let equal = vec![p_total / n; agents.len()];
        check(
            "no-improvement-equal-split",
            objective_of(&agents, &equal)? <= r.objective + 1e-9 * r.objective.abs().max(1.0),
            format!("equal {} vs solved {}", objective_of(&agents, &equal)?, r.objective),
        );
    } else {
        println!("no p_total_watts configured; skipping solver checks");
    }
    Ok(ok)
}

fn run(cli: Cli) -> Result<bool, Error> {
    match cli.cmd {
        Cmd::Curve {
            kind,
            config,
            grid,
            out,
        } => cmd_curve(kind, &config, &grid, out.as_deref()).map(|_| true),
        Cmd::Allocate { config, out, seed } => {
            cmd_allocate(&config, out.as_deref(), seed).map(|_| true)
        }
        Cmd::Sweep {
            config,
            out,
            seed,
            grid,
        } => cmd_sweep(&config, out.as_deref(), seed, grid.as_deref()).map(|_| true),
        Cmd::RiskSplit { config, out } => cmd_risk_split(&config, out.as_deref()).map(|_| true),
        Cmd::Validate { config, seed } => cmd_validate(&config, seed),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
