use std::path::Path;
use std::process::{Command, Output};

use stochastic_liouville_cli::{Experiment, ExperimentConfig};

fn slsim(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_slsim"));
    cmd.args(args).env_remove("SLSIM_WORKERS");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("slsim runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

/// Header config, column names and rows of a result file.
fn parse_csv(text: &str) -> (ExperimentConfig, Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines();
    let header = lines.next().expect("header line");
    let config = ExperimentConfig::parse(header).expect("header is a config");
    let columns = lines.next().unwrap().split(',').map(str::to_owned).collect();
    let rows = lines
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect();
    (config, columns, rows)
}

const SMALL_GRID: &str = "
[grid]
n_steps = 256
record_stride = 4

[sampling]
n_samples = 64
";

#[test]
fn universal_check_writes_header_and_table() {
    let out = slsim(&["universal_check"], &[]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let (config, columns, rows) = parse_csv(&text);
    assert_eq!(config.experiment, Some(Experiment::UniversalCheck));
    assert_eq!(columns[..3], ["t", "omega_c_t", "f"]);
    assert_eq!(rows.len(), config.universal.n_points);
    // deep in the short-time regime the quadrature and ½ω_c²t² agree
    let f: f64 = rows[0][2].parse().unwrap();
    let short: f64 = rows[0][3].parse().unwrap();
    assert!((f / short - 1.0).abs() < 0.01);
}

#[test]
fn empty_sweep_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "sweep.toml", "[sweep]\nkappas = []\n");
    let out = slsim(&["steady_sweep", "--config", &cfg], &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sweep.kappas is empty"));
    assert!(out.stdout.is_empty());
}

#[test]
fn unknown_keys_and_wrong_experiment_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let typo = write_config(dir.path(), "typo.toml", "[bath]\nkapa = 0.1\n");
    assert_eq!(slsim(&["decay", "--config", &typo], &[]).status.code(), Some(2));
    let other = write_config(dir.path(), "other.toml", "experiment = \"gate\"\n");
    let out = slsim(&["decay", "--config", &other], &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`gate`"));
}

#[test]
fn rerun_from_header_is_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "decay.toml", SMALL_GRID);
    let first = dir.path().join("first.csv");
    let second = dir.path().join("second.csv");
    let out = slsim(
        &["decay", "--config", &cfg, "--seed", "17", "--workers", "2", "--out", first.to_str().unwrap()],
        &[],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = slsim(
        &["decay", "--config", first.to_str().unwrap(), "--out", second.to_str().unwrap()],
        &[],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let a = std::fs::read(&first).unwrap();
    let b = std::fs::read(&second).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b);
    let (config, _, _) = parse_csv(std::str::from_utf8(&a).unwrap());
    assert_eq!(config.sampling.base_seed, 17);
}

#[test]
fn decay_overlays_universal_prediction_at_short_times() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "decay.toml",
        &format!("{SMALL_GRID}\n[bath]\nkappa = 0.2\nomega_c = 50.0\nbeta = 5.0\n\n[decay]\nuniversal_until = 0.5\n"),
    );
    let out = slsim(&["decay", "--config", &cfg], &[]);
    assert!(out.status.success());
    let (_, columns, rows) = parse_csv(&String::from_utf8(out.stdout).unwrap());
    let (t, u, le) = (0, columns.iter().position(|c| c == "universal").unwrap(), 4);
    assert_eq!(rows.len(), 256 / 4 + 1);
    for row in &rows {
        let time: f64 = row[t].parse().unwrap();
        assert_eq!(row[u].is_empty(), time > 0.5, "t = {time}");
        assert!(!row[le].is_empty());
    }
}

#[test]
fn workers_come_from_flag_then_environment_then_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "w.toml",
        &format!("{SMALL_GRID}\n[sampling]\nworkers = 3\n").replace("[sampling]\nn_samples = 64\n", ""),
    );
    let header = |out: Output| parse_csv(&String::from_utf8(out.stdout).unwrap()).0.sampling.workers;
    let base = ["universal_check", "--config", cfg.as_str()];
    assert_eq!(header(slsim(&base, &[])), 3);
    assert_eq!(header(slsim(&base, &[("SLSIM_WORKERS", "5")])), 5);
    let mut with_flag = base.to_vec();
    with_flag.extend(["--workers", "2"]);
    assert_eq!(header(slsim(&with_flag, &[("SLSIM_WORKERS", "5")])), 2);
}

#[test]
fn failing_sweep_keeps_partial_output_and_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    // ten batches cannot be formed from five samples
    let cfg = write_config(
        dir.path(),
        "short.toml",
        "[sweep]\nkappas = [0.2]\n\n[sampling]\nn_samples = 5\nn_batches = 10\n",
    );
    let out = slsim(&["steady_sweep", "--config", &cfg], &[]);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().last().unwrap().starts_with("# partial:"), "{text}");
}

#[test]
fn steady_sweep_emits_benchmark_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "steady.toml",
        "[bath]\nbeta = 1.0\n\n[grid]\nh = 0.03125\nrecord_stride = 8\n\n[sweep]\nkappas = [0.2]\n\n[sampling]\nn_samples = 40\nn_batches = 4\n",
    );
    let bench = dir.path().join("bench.csv");
    let out = slsim(&["steady_sweep", "--config", &cfg, "--benchmark", bench.to_str().unwrap()], &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (_, columns, rows) = parse_csv(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(rows.len(), 1);
    let rho: f64 = rows[0][columns.iter().position(|c| c == "rho_e").unwrap()].parse().unwrap();
    let closed: f64 = rows[0][columns.iter().position(|c| c == "closed_form").unwrap()].parse().unwrap();
    assert!((0.0..0.5).contains(&rho) && (0.0..0.5).contains(&closed));

    let (_, bcols, brows) = parse_csv(&std::fs::read_to_string(&bench).unwrap());
    assert_eq!(bcols[..4], ["beta", "kappa", "n_levels", "n_samples"]);
    assert_eq!(brows[0][3], "40");
    assert_eq!(brows[0][5], "SLED");
}

#[test]
fn lindblad_larmor_fit_recovers_bare_frequency() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "larmor.toml",
        "method = \"le\"\n[bath]\nkappa = 0.05\n\n[grid]\nh = 0.03125\n",
    );
    let out = slsim(&["larmor", "--config", &cfg], &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (_, _, rows) = parse_csv(&String::from_utf8(out.stdout).unwrap());
    let omega: f64 = rows[0][0].parse().unwrap();
    assert!((omega - 1.0).abs() < 1e-6, "{omega}");
}

#[test]
fn gate_error_grows_with_coupling_at_weak_damping() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "gate.toml",
        "method = \"le\"\n[bath]\nbeta = 10.0\n\n[grid]\nh = 0.03125\n\n[gate]\ng = 0.05\nkappa_over_g = [0.0, 0.01, 0.05]\n",
    );
    let out = slsim(&["gate", "--config", &cfg], &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (_, _, rows) = parse_csv(&String::from_utf8(out.stdout).unwrap());
    let errors: Vec<f64> = rows.iter().map(|r| r[3].parse().unwrap()).collect();
    assert!(errors[0] < 1e-3, "{errors:?}");
    assert!(errors[0] < errors[1] && errors[1] < errors[2], "{errors:?}");
}

#[test]
fn noise_validation_reports_every_lag() {
    let out = slsim(&["noise_validate", "--samples", "2000", "--seed", "3"], &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let (config, columns, rows) = parse_csv(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(rows.len(), config.noise.lags.len());
    let pass = columns.iter().position(|c| c == "pass").unwrap();
    assert!(rows.iter().all(|r| r[0] == "xi_xi" && r[pass] == "true"));
}

#[test]
fn two_bath_relaxes_to_weighted_occupation() {
    let out = slsim(&["two_bath"], &[]);
    assert!(out.status.success());
    let (config, _, rows) = parse_csv(&String::from_utf8(out.stdout).unwrap());
    let last = rows.last().unwrap();
    let occ: f64 = last[1].parse().unwrap();
    let c = config.two_bath;
    let expected = (c.kappa * c.n_ee + c.gamma * c.n_i) / (c.kappa + c.gamma);
    assert!((occ - expected).abs() < 1e-9);
}

#[test]
fn zero_samples_are_rejected() {
    let out = slsim(&["decay", "--samples", "0"], &[]);
    assert_eq!(out.status.code(), Some(2));
}
