//! CSV tables with a one-line JSON header.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a rerun
//! from the header reproduces the file byte for byte.

use std::io::Write;

use serde::Serialize;
use stochastic_liouville::solvers::{EnsembleStats, SteadyEstimate};

use crate::config::ExperimentConfig;
use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as u64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_owned())
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Text(b.to_string())
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::Num)
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) => x.to_string(),
            Cell::Int(n) => n.to_string(),
            Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// Set when the run stopped early; the rows written so far are kept.
    pub partial: Option<String>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            partial: None,
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn write(&self, config: &ExperimentConfig, out: &mut impl Write) -> Result<(), CliError> {
        let header = serde_json::to_string(config).map_err(|e| CliError::Io(e.to_string()))?;
        writeln!(out, "#{header}")?;
        writeln!(out, "{}", self.columns.join(","))?;
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(Cell::render).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        if let Some(reason) = &self.partial {
            writeln!(out, "# partial: {}", reason.replace('\n', " "))?;
        }
        Ok(())
    }
}

/// One line of the performance table: temperature, levels, samples, steady
/// state error, method, wall time and throughput.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkRow {
    pub beta: f64,
    pub kappa: f64,
    pub n_levels: usize,
    pub n_samples: usize,
    pub sigma: f64,
    pub method: String,
    pub wall_time: f64,
    pub samples_per_second: f64,
}

pub const BENCHMARK_COLUMNS: [&str; 8] = [
    "beta",
    "kappa",
    "n_levels",
    "n_samples",
    "sigma",
    "method",
    "wall_time_s",
    "samples_per_s",
];

impl BenchmarkRow {
    pub fn cells(&self) -> Vec<Cell> {
        vec![
            self.beta.into(),
            self.kappa.into(),
            self.n_levels.into(),
            self.n_samples.into(),
            self.sigma.into(),
            self.method.as_str().into(),
            self.wall_time.into(),
            self.samples_per_second.into(),
        ]
    }

    /// Row for a steady-state estimate, whose `σ` is the batch-means error.
    pub fn from_steady(est: &SteadyEstimate, config: &ExperimentConfig, kappa: f64) -> Result<Self, CliError> {
        if est.n_samples == 0 {
            return Err(CliError::Config("benchmark of a run without samples".into()));
        }
        let total = (est.n_samples + est.n_clipped) as f64;
        Ok(Self {
            beta: config.bath.beta,
            kappa,
            n_levels: config.model.n_levels,
            n_samples: est.n_samples,
            sigma: est.stderr,
            method: config.method.label().into(),
            wall_time: est.wall_time,
            samples_per_second: total / est.wall_time.max(f64::MIN_POSITIVE),
        })
    }
}

/// Benchmark row for an ensemble: `σ` is the standard error of observable
/// `index` averaged over the steady-state window `[9/κ_T, 10/κ_T]`.
pub fn emit_benchmark(
    stats: &EnsembleStats,
    config: &ExperimentConfig,
    kappa: f64,
    index: usize,
) -> Result<BenchmarkRow, CliError> {
    if stats.n_samples == 0 {
        return Err(CliError::Config("benchmark of a run without samples".into()));
    }
    let window = stochastic_liouville::solvers::steady_window(&config.bath_spec(kappa));
    let (_, sigma) = stochastic_liouville::solvers::extract_steady(stats, index, window)?;
    Ok(BenchmarkRow {
        beta: config.bath.beta,
        kappa,
        n_levels: config.model.n_levels,
        n_samples: stats.n_samples,
        sigma,
        method: config.method.label().into(),
        wall_time: stats.wall_time,
        samples_per_second: stats.samples_per_second(),
    })
}
