//! Experiment configuration: TOML on disk, JSON in output headers.
//!
//! Every quantity is a ratio in units where `ħ = 1` and `ω_q = 1`.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use stochastic_liouville::model::{diagonalize_transmon, ideal_qubit};
use stochastic_liouville::solvers::Problem;
use stochastic_liouville::{BathSpec, CutoffFamily, Method, ModelKind, NoiseGrid, SystemModel, TransmonSpec};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Decay,
    SteadySweep,
    Larmor,
    Gate,
    NoiseValidate,
    UniversalCheck,
    TwoBath,
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).ok();
        write!(f, "{}", s.as_ref().and_then(|v| v.as_str()).unwrap_or("?"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    /// `E_J/E_C`, transmon only.
    pub e_j_over_e_c: f64,
    pub n_levels: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            kind: ModelKind::IdealQubit,
            e_j_over_e_c: 50.0,
            n_levels: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BathConfig {
    /// `κ/ω_q`
    pub kappa: f64,
    /// `ω_c/ω_q`
    pub omega_c: f64,
    /// `ħβω_q`; use a large value for zero temperature
    pub beta: f64,
    pub cutoff: CutoffFamily,
}

impl Default for BathConfig {
    fn default() -> Self {
        Self {
            kappa: 0.2,
            omega_c: 50.0,
            beta: 5.0,
            cutoff: CutoffFamily::Drude2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    /// `hω_q`
    pub h: f64,
    pub n_steps: usize,
    pub oversample: usize,
    pub record_stride: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            h: 1.0 / 128.0,
            n_steps: 4096,
            oversample: 2,
            record_stride: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingConfig {
    pub n_samples: usize,
    pub base_seed: u64,
    pub workers: usize,
    /// Batches for the steady-state error estimate.
    pub n_batches: usize,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            n_samples: 1000,
            base_seed: 0,
            workers: 1,
            n_batches: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecayConfig {
    /// Overlay the universal-decoherence prediction up to this `ω_q t`.
    pub universal_until: f64,
    /// Also integrate the weak-coupling master equation on the same grid.
    pub lindblad_overlay: bool,
}

impl Default for DecayConfig {
    fn default() -> Self {
        Self {
            universal_until: 0.5,
            lindblad_overlay: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// `κ/ω_q` values; the bath's own `kappa` is ignored.
    pub kappas: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            kappas: vec![0.05, 0.1, 0.2],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LarmorConfig {
    pub t_end: f64,
    /// Points before this time are left out of the fit.
    pub fit_from: f64,
}

impl Default for LarmorConfig {
    fn default() -> Self {
        Self {
            t_end: 25.0,
            fit_from: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GateConfig {
    /// Peak drive `g/ω_q`.
    pub g: f64,
    /// Ramp time; `None` uses `π/(10g)`.
    pub rise_time: Option<f64>,
    /// `κ/g` values; the bath's own `kappa` is ignored.
    pub kappa_over_g: Vec<f64>,
}

impl Default for GateConfig {
    fn default() -> Self {
        Self {
            g: 0.0025,
            rise_time: None,
            kappa_over_g: vec![0.1, 0.25, 0.5, 1.0, 2.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    /// Reference step; `None` uses the middle of the grid.
    pub reference: Option<usize>,
    pub lags: Vec<isize>,
    pub z_threshold: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            reference: None,
            lags: vec![-16, -4, -1, 0, 1, 2, 4, 8, 16],
            z_threshold: 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UniversalConfig {
    pub t_max: f64,
    pub n_points: usize,
}

impl Default for UniversalConfig {
    fn default() -> Self {
        Self {
            t_max: 0.1,
            n_points: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TwoBathConfig {
    pub kappa: f64,
    pub n_ee: f64,
    pub gamma: f64,
    pub n_i: f64,
    /// Initial level populations.
    pub initial: Vec<f64>,
    pub dt: f64,
    pub n_steps: usize,
}

impl Default for TwoBathConfig {
    fn default() -> Self {
        Self {
            kappa: 1.0,
            n_ee: 0.0,
            gamma: 1.0,
            n_i: 0.2,
            initial: vec![0.0, 1.0],
            dt: 0.025,
            n_steps: 1000,
        }
    }
}

/// Complete description of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Option<Experiment>,
    pub method: Method,
    pub model: ModelConfig,
    pub bath: BathConfig,
    pub grid: GridConfig,
    pub sampling: SamplingConfig,
    pub decay: DecayConfig,
    pub sweep: SweepConfig,
    pub larmor: LarmorConfig,
    pub gate: GateConfig,
    pub noise: NoiseConfig,
    pub universal: UniversalConfig,
    pub two_bath: TwoBathConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: None,
            method: Method::Sled,
            model: ModelConfig::default(),
            bath: BathConfig::default(),
            grid: GridConfig::default(),
            sampling: SamplingConfig::default(),
            decay: DecayConfig::default(),
            sweep: SweepConfig::default(),
            larmor: LarmorConfig::default(),
            gate: GateConfig::default(),
            noise: NoiseConfig::default(),
            universal: UniversalConfig::default(),
            two_bath: TwoBathConfig::default(),
        }
    }
}

fn positive(name: &str, x: f64) -> Result<(), CliError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(CliError::Config(format!("{name} must be positive and finite, got {x}")))
    }
}

fn non_negative(name: &str, x: f64) -> Result<(), CliError> {
    if x >= 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(CliError::Config(format!("{name} must be non-negative and finite, got {x}")))
    }
}

impl ExperimentConfig {
    /// Reads TOML, or the JSON header line of a previous output file.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        match text.lines().next() {
            Some(first) if first.starts_with('#') => serde_json::from_str(&first[1..])
                .map_err(|e| CliError::Config(format!("output header: {e}"))),
            _ => toml::from_str(text).map_err(|e| CliError::Config(e.to_string())),
        }
    }

    pub fn experiment(&self) -> Result<Experiment, CliError> {
        self.experiment
            .ok_or_else(|| CliError::Config("no experiment selected".into()))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let experiment = self.experiment()?;
        positive("bath.omega_c", self.bath.omega_c)?;
        non_negative("bath.kappa", self.bath.kappa)?;
        if !(self.bath.beta > 0.0) {
            return Err(CliError::Config("bath.beta must be positive".into()));
        }
        positive("grid.h", self.grid.h)?;
        if !self.grid.n_steps.is_power_of_two() || self.grid.n_steps < 2 {
            return Err(CliError::Config("grid.n_steps must be a power of two ≥ 2".into()));
        }
        if self.grid.oversample == 0 || self.grid.record_stride == 0 {
            return Err(CliError::Config("grid.oversample and grid.record_stride must be ≥ 1".into()));
        }
        if self.sampling.workers == 0 {
            return Err(CliError::Config("sampling.workers must be ≥ 1".into()));
        }
        if self.model.kind == ModelKind::IdealQubit && self.model.n_levels != 2 {
            return Err(CliError::Config("an ideal qubit has exactly two levels".into()));
        }
        let stochastic = self.method != Method::Lindblad;
        match experiment {
            Experiment::Decay | Experiment::Larmor if stochastic && self.sampling.n_samples < 2 => {
                return Err(CliError::Config("sampling.n_samples must be at least 2".into()));
            }
            Experiment::SteadySweep => {
                if self.sweep.kappas.is_empty() {
                    return Err(CliError::Config("sweep.kappas is empty".into()));
                }
                for &k in &self.sweep.kappas {
                    positive("sweep.kappas", k)?;
                }
                if self.method == Method::Lindblad {
                    return Err(CliError::Config("steady_sweep needs a stochastic method".into()));
                }
            }
            Experiment::Gate => {
                positive("gate.g", self.gate.g)?;
                if self.gate.kappa_over_g.is_empty() {
                    return Err(CliError::Config("gate.kappa_over_g is empty".into()));
                }
                for &r in &self.gate.kappa_over_g {
                    non_negative("gate.kappa_over_g", r)?;
                }
                if let Some(r) = self.gate.rise_time {
                    non_negative("gate.rise_time", r)?;
                }
            }
            Experiment::Larmor => {
                positive("larmor.t_end", self.larmor.t_end)?;
                non_negative("larmor.fit_from", self.larmor.fit_from)?;
                if self.larmor.fit_from >= self.larmor.t_end {
                    return Err(CliError::Config("larmor.fit_from must precede t_end".into()));
                }
            }
            Experiment::NoiseValidate => {
                if self.method == Method::Lindblad {
                    return Err(CliError::Config("noise_validate needs method sled or sln".into()));
                }
                if self.noise.lags.is_empty() {
                    return Err(CliError::Config("noise.lags is empty".into()));
                }
                positive("noise.z_threshold", self.noise.z_threshold)?;
            }
            Experiment::UniversalCheck => {
                positive("universal.t_max", self.universal.t_max)?;
                if self.universal.n_points == 0 {
                    return Err(CliError::Config("universal.n_points must be ≥ 1".into()));
                }
            }
            Experiment::TwoBath => {
                let c = &self.two_bath;
                for (name, x) in [("two_bath.kappa", c.kappa), ("two_bath.gamma", c.gamma)] {
                    non_negative(name, x)?;
                }
                non_negative("two_bath.n_ee", c.n_ee)?;
                non_negative("two_bath.n_i", c.n_i)?;
                positive("two_bath.dt", c.dt)?;
                if c.initial.is_empty() || (c.initial.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                    return Err(CliError::Config("two_bath.initial must be normalised populations".into()));
                }
            }
            _ => {}
        }
        Ok(())
    }

    pub fn system(&self) -> Result<SystemModel, CliError> {
        Ok(match self.model.kind {
            ModelKind::IdealQubit => ideal_qubit(1.0)?,
            ModelKind::Transmon => {
                let spec = TransmonSpec::new(self.model.e_j_over_e_c, 1.0, self.model.n_levels);
                diagonalize_transmon(&spec)?.in_qubit_units()
            }
        })
    }

    pub fn bath_spec(&self, kappa: f64) -> BathSpec {
        BathSpec::new(kappa, self.bath.omega_c, self.bath.beta, 1.0).with_cutoff(self.bath.cutoff)
    }

    /// System plus bath at coupling `kappa`.
    pub fn problem(&self, kappa: f64) -> Result<Problem, CliError> {
        Ok(Problem::new(self.system()?, self.bath_spec(kappa))?)
    }

    pub fn noise_grid(&self, n_steps: usize) -> NoiseGrid {
        NoiseGrid {
            h: self.grid.h,
            n_steps,
            oversample: self.grid.oversample,
        }
    }
}
