use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use stochastic_liouville::Method;
use stochastic_liouville_cli::{exit_code, run_experiment, CliError, Experiment, ExperimentConfig, Table, EXIT_CHECKS_FAILED};

/// Dissipative qubit dynamics from stochastic Liouville equations.
#[derive(Debug, Parser)]
#[command(name = "slsim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Excited-state decay with universal-decoherence and master-equation overlays.
    Decay(RunArgs),
    /// Steady-state excited population against the closed forms, over a κ grid.
    #[command(name = "steady_sweep", alias = "steady-sweep")]
    SteadySweep(RunArgs),
    /// Damped-cosine fit of ⟨σ_x⟩ against the renormalised frequency.
    Larmor(RunArgs),
    /// π-pulse error versus κ/g.
    Gate(RunArgs),
    /// Two-point statistics of the generated noise.
    #[command(name = "noise_validate", alias = "noise-validate")]
    NoiseValidate(RunArgs),
    /// Universal decoherence function and its limiting forms.
    #[command(name = "universal_check", alias = "universal-check")]
    UniversalCheck(RunArgs),
    /// Oscillator occupation between an engineered and an intrinsic bath.
    #[command(name = "two_bath", alias = "two-bath")]
    TwoBath(RunArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// TOML config, or an earlier output file to rerun from its header.
    #[arg(long)]
    config: Option<PathBuf>,
    /// First trajectory seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of trajectories.
    #[arg(long)]
    samples: Option<usize>,
    /// Worker threads for the ensemble.
    #[arg(long, env = "SLSIM_WORKERS")]
    workers: Option<usize>,
    /// sled, sln or le.
    #[arg(long, value_parser = parse_method)]
    method: Option<Method>,
    /// Result CSV; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Where to write the benchmark table, for experiments that produce one.
    #[arg(long)]
    benchmark: Option<PathBuf>,
}

fn parse_method(s: &str) -> Result<Method, String> {
    serde_json::from_value(serde_json::Value::String(s.to_lowercase()))
        .map_err(|_| format!("unknown method `{s}` (expected sled, sln or le)"))
}

impl Command {
    fn split(self) -> (Experiment, RunArgs) {
        match self {
            Command::Decay(a) => (Experiment::Decay, a),
            Command::SteadySweep(a) => (Experiment::SteadySweep, a),
            Command::Larmor(a) => (Experiment::Larmor, a),
            Command::Gate(a) => (Experiment::Gate, a),
            Command::NoiseValidate(a) => (Experiment::NoiseValidate, a),
            Command::UniversalCheck(a) => (Experiment::UniversalCheck, a),
            Command::TwoBath(a) => (Experiment::TwoBath, a),
        }
    }
}

fn resolve(experiment: Experiment, args: &RunArgs) -> Result<ExperimentConfig, CliError> {
    let mut config = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    match config.experiment {
        Some(e) if e != experiment => {
            return Err(CliError::Config(format!(
                "config is for `{e}` but `{experiment}` was requested"
            )))
        }
        _ => config.experiment = Some(experiment),
    }
    if let Some(seed) = args.seed {
        config.sampling.base_seed = seed;
    }
    if let Some(n) = args.samples {
        config.sampling.n_samples = n;
    }
    if let Some(w) = args.workers {
        config.sampling.workers = w;
    }
    if let Some(m) = args.method {
        config.method = m;
    }
    Ok(config)
}

fn write_table(table: &Table, config: &ExperimentConfig, path: Option<&Path>) -> Result<(), CliError> {
    match path {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            table.write(config, &mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            table.write(config, &mut lock)?;
            lock.flush()?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<u8, CliError> {
    let (experiment, args) = cli.command.split();
    let config = resolve(experiment, &args)?;
    let report = run_experiment(&config)?;
    write_table(&report.table, &config, args.out.as_deref())?;
    if let (Some(path), Some(bench)) = (&args.benchmark, &report.benchmark) {
        write_table(bench, &config, Some(path))?;
    }
    if let Some(e) = &report.error {
        eprintln!("error: {e} (partial output written)");
        return Ok(exit_code(e));
    }
    if report.failed_checks > 0 {
        eprintln!("{} statistical check(s) failed", report.failed_checks);
        return Ok(EXIT_CHECKS_FAILED);
    }
    Ok(0)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
