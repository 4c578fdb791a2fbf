//! End-to-end tests of the binary: exit codes, CSV shape, and
//! byte-identical reproducibility from the recorded seeds.

use std::path::PathBuf;
use std::process::{Command, Output};

const SCENARIO: &str = r#"
snr0_db = 7.0
n0_dbm_per_hz = -30.0
p_total_watts = 3.0e-5

[p_total_sweep]
lo = 1.0e-6
hi = 1.0e-4
steps = 8

[agents]
count = 5
activation = "uniform-random"
activation_seed = 11

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
mean = 1.0
seed = 42

[risk_split]
budget = 1.0
payoffs = [[1.0, 0.6], [1.0, 0.6]]
divisions = 20
"#;

fn workdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("cptalloc-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_scenario(dir: &std::path::Path) -> PathBuf {
    let path = dir.join("scenario.toml");
    std::fs::write(&path, SCENARIO).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cptalloc"))
        .args(args)
        .output()
        .unwrap()
}

fn csv_parts(text: &str) -> (Vec<&str>, Vec<&str>) {
    let comments: Vec<&str> = text.lines().filter(|l| l.starts_with('#')).collect();
    let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    (comments, data)
}

#[test]
fn allocate_is_reproducible_and_well_formed() {
    let dir = workdir("allocate");
    let config = write_scenario(&dir);
    let out1 = dir.join("a1.csv");
    let out2 = dir.join("a2.csv");
    for out in [&out1, &out2] {
        let r = run(&[
            "allocate",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    }
    let a = std::fs::read(&out1).unwrap();
    let b = std::fs::read(&out2).unwrap();
    assert_eq!(a, b, "two runs of the same config must be byte-identical");

    let text = String::from_utf8(a).unwrap();
    let (comments, data) = csv_parts(&text);
    assert!(comments.iter().any(|c| c.contains("channel_seed=42")));
    assert!(comments.iter().any(|c| c.contains("mu=")));
    assert_eq!(data[0], "agent,gain,wp,power,snr_db,label");
    assert_eq!(data.len(), 1 + 5);
    // Rows sorted by ascending gain (equal noise), fields well-formed.
    let mut prev_gain = 0.0;
    for row in &data[1..] {
        let f: Vec<&str> = row.split(',').collect();
        assert_eq!(f.len(), 6);
        let gain: f64 = f[1].parse().unwrap();
        assert!(gain >= prev_gain);
        prev_gain = gain;
        let power: f64 = f[3].parse().unwrap();
        assert!(power >= 0.0);
        assert!(["gain", "pinned", "loss", "inactive"].contains(&f[5]));
    }
}

#[test]
fn seed_flag_overrides_config() {
    let dir = workdir("seed");
    let config = write_scenario(&dir);
    let base = run(&["allocate", "--config", config.to_str().unwrap()]);
    let same = run(&[
        "allocate",
        "--config",
        config.to_str().unwrap(),
        "--seed",
        "42",
    ]);
    let other = run(&[
        "allocate",
        "--config",
        config.to_str().unwrap(),
        "--seed",
        "43",
    ]);
    assert!(base.status.success() && same.status.success() && other.status.success());
    assert_eq!(base.stdout, same.stdout);
    assert_ne!(base.stdout, other.stdout);
}

#[test]
fn sweep_has_expected_columns_and_rows() {
    let dir = workdir("sweep");
    let config = write_scenario(&dir);
    let r = run(&["sweep", "--config", config.to_str().unwrap()]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let text = String::from_utf8(r.stdout).unwrap();
    let (_, data) = csv_parts(&text);
    assert_eq!(
        data[0],
        "p_total,mu,objective,n_gain,n_pinned,n_loss,n_inactive,peak_rank"
    );
    assert_eq!(data.len(), 1 + 8);
    for row in &data[1..] {
        let f: Vec<&str> = row.split(',').collect();
        assert_eq!(f.len(), 8);
        let counts: usize = f[3..7].iter().map(|c| c.parse::<usize>().unwrap()).sum();
        assert_eq!(counts, 5, "labels must partition the agents");
        let peak: usize = f[7].parse().unwrap();
        assert!((1..=5).contains(&peak));
    }
    // Budgets ascend; the dual descends.
    let mus: Vec<f64> = data[1..]
        .iter()
        .map(|r| r.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(mus.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn curve_grids_and_kinds() {
    let dir = workdir("curve");
    let config = write_scenario(&dir);
    for (kind, header, rows) in [
        ("utility", "snr,utility", 101),
        ("pwf", "p,w", 51),
        ("perceived-cdf", "gain,cdf,perceived_cdf", 21),
    ] {
        let grid = match kind {
            "utility" => "0:20:101",
            "pwf" => "0:1:51",
            _ => "0:5:21",
        };
        let r = run(&[
            "curve",
            "--kind",
            kind,
            "--config",
            config.to_str().unwrap(),
            "--grid",
            grid,
        ]);
        assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
        let text = String::from_utf8(r.stdout).unwrap();
        let (_, data) = csv_parts(&text);
        assert_eq!(data[0], header);
        assert_eq!(data.len(), 1 + rows);
    }
    // Malformed grid is rejected.
    let r = run(&[
        "curve",
        "--kind",
        "pwf",
        "--config",
        config.to_str().unwrap(),
        "--grid",
        "1:0:10",
    ]);
    assert!(!r.status.success());
}

#[test]
fn risk_split_reports_verdict() {
    let dir = workdir("risk");
    let config = write_scenario(&dir);
    let r = run(&["risk-split", "--config", config.to_str().unwrap()]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let text = String::from_utf8(r.stdout).unwrap();
    let (comments, data) = csv_parts(&text);
    assert!(comments.iter().any(|c| c.contains("verdict=")));
    assert_eq!(data[0], "alpha_1,alpha_2,cpt_value");
    // Full simplex grid: 21 points for 2 sources at 20 divisions.
    assert_eq!(data.len(), 1 + 21);
}

#[test]
fn validate_passes_and_rejects_bad_config() {
    let dir = workdir("validate");
    let config = write_scenario(&dir);
    let r = run(&["validate", "--config", config.to_str().unwrap()]);
    let stdout = String::from_utf8_lossy(&r.stdout);
    assert!(r.status.success(), "{stdout}");
    assert!(stdout.contains("[PASS]"));
    assert!(!stdout.contains("[FAIL]"));

    let bad = dir.join("bad.toml");
    std::fs::write(&bad, "snr0_db = 7.0\n").unwrap();
    let r = run(&["validate", "--config", bad.to_str().unwrap()]);
    assert!(!r.status.success());

    let missing = dir.join("nope.toml");
    let r = run(&["allocate", "--config", missing.to_str().unwrap()]);
    assert!(!r.status.success());
}
