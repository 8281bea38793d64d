//! Time propagation of the reduced density matrix.

mod ensemble;
mod fit;
mod lindblad;
mod steady;
mod stochastic;

pub use ensemble::{ensemble_backend, run_ensemble, EnsembleConfig, EnsembleStats, DEFAULT_MAX_CLIP_FRACTION};
pub use fit::{fit_damped_cosine, FitResult};
pub use lindblad::{
    lindblad_evolve, lindblad_generator, lindblad_two_bath, LindbladSpec, Transition,
    TwoBathResult,
};
pub use steady::{extract_steady, steady_batched, steady_window, steps_to_cover, SteadyEstimate};
pub use stochastic::{
    run_trajectory, run_with_noise, sled_step, sln_step, SledPropagator, SlnPropagator,
    TrajectoryOptions, RUNAWAY_BOUND,
};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bath::BathSpec;
use crate::error::{invalid, Result};
use crate::linalg::{CMat, RMat};
use crate::model::{PulseSpec, SystemModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Sln,
    Sled,
    #[serde(rename = "le")]
    Lindblad,
}

impl Method {
    pub fn label(&self) -> &'static str {
        match self {
            Method::Sln => "SLN",
            Method::Sled => "SLED",
            Method::Lindblad => "LE",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Part {
    Re,
    Im,
}

/// A real linear functional of the density matrix, recorded along
/// trajectories and averaged over the ensemble.
#[derive(Debug, Clone, PartialEq)]
pub enum Observable {
    /// `ρ_kk`
    Population(usize),
    /// `Re ρ_jk` or `Im ρ_jk`
    Coherence { row: usize, col: usize, part: Part },
    /// `Re tr ρ`
    Trace,
    /// `Im tr ρ`
    TraceImag,
    /// Real or imaginary part of `ρ_jk − ρ_kj*`, zero for Hermitian `ρ`.
    HermitianDefect { row: usize, col: usize, part: Part },
    /// `Re tr(Oρ)` for a Hermitian operator `O`.
    Expectation { label: String, operator: CMat },
}

impl Observable {
    pub fn label(&self) -> String {
        let p = |part: &Part| match part {
            Part::Re => "re",
            Part::Im => "im",
        };
        match self {
            Observable::Population(k) => format!("rho_{k}{k}"),
            Observable::Coherence { row, col, part } => format!("{}_rho_{row}{col}", p(part)),
            Observable::Trace => "trace".into(),
            Observable::TraceImag => "trace_im".into(),
            Observable::HermitianDefect { row, col, part } => {
                format!("{}_herm_defect_{row}{col}", p(part))
            }
            Observable::Expectation { label, .. } => label.clone(),
        }
    }

    /// `⟨σ_x⟩ = 2 Re ρ_01` on the lowest two levels.
    pub fn sigma_x(n: usize) -> Self {
        let mut op = CMat::zeros(n, n);
        op[(0, 1)] = Complex64::new(1.0, 0.0);
        op[(1, 0)] = Complex64::new(1.0, 0.0);
        Observable::Expectation {
            label: "sigma_x".into(),
            operator: op,
        }
    }

    /// Weights `c` with value `Re Σ_i c_i vec(ρ)_i` (column-major `vec`).
    pub(crate) fn weights(&self, n: usize) -> Result<Vec<Complex64>> {
        let idx = |j: usize, k: usize| j + k * n;
        let one = Complex64::new(1.0, 0.0);
        let mi = Complex64::new(0.0, -1.0);
        let mut c = vec![Complex64::new(0.0, 0.0); n * n];
        let check = |i: usize| {
            if i < n {
                Ok(())
            } else {
                Err(invalid("observable", format!("level {i} outside {n}-level model")))
            }
        };
        match self {
            Observable::Population(k) => {
                check(*k)?;
                c[idx(*k, *k)] = one;
            }
            Observable::Coherence { row, col, part } => {
                check(*row)?;
                check(*col)?;
                c[idx(*row, *col)] = if *part == Part::Re { one } else { mi };
            }
            Observable::Trace => (0..n).for_each(|k| c[idx(k, k)] = one),
            Observable::TraceImag => (0..n).for_each(|k| c[idx(k, k)] = mi),
            Observable::HermitianDefect { row, col, part } => {
                check(*row)?;
                check(*col)?;
                match part {
                    Part::Re => {
                        c[idx(*row, *col)] += one;
                        c[idx(*col, *row)] -= one;
                    }
                    Part::Im => {
                        c[idx(*row, *col)] += mi;
                        c[idx(*col, *row)] += mi;
                    }
                }
            }
            Observable::Expectation { operator, .. } => {
                if operator.nrows() != n || operator.ncols() != n {
                    return Err(invalid("observable", "operator dimension mismatch"));
                }
                for j in 0..n {
                    for k in 0..n {
                        c[idx(j, k)] = operator[(k, j)];
                    }
                }
            }
        }
        Ok(c)
    }
}

/// Everything that defines the physics of a run: the system, the bath, the
/// coupling operator actually used and an optional gate pulse.
#[derive(Debug, Clone)]
pub struct Problem {
    pub model: SystemModel,
    pub bath: BathSpec,
    pub q: RMat,
    pub pulse: Option<PulseSpec>,
}

impl Problem {
    /// Uses the normalised coupling `|⟨0|q̂|1⟩| = 1`.
    pub fn new(model: SystemModel, bath: BathSpec) -> Result<Self> {
        bath.validate()?;
        let q = model.coupling_operator(true);
        Ok(Self {
            model,
            bath,
            q,
            pulse: None,
        })
    }

    pub fn with_coupling(mut self, q: RMat) -> Result<Self> {
        if q.nrows() != self.model.n_levels() || (&q - q.transpose()).norm() > 1e-12 {
            return Err(invalid("q", "coupling must be a symmetric N×N matrix"));
        }
        self.q = q;
        Ok(self)
    }

    pub fn with_pulse(mut self, pulse: PulseSpec) -> Result<Self> {
        pulse.validate()?;
        self.pulse = Some(pulse);
        Ok(self)
    }

    pub fn n_levels(&self) -> usize {
        self.model.n_levels()
    }

    /// Drive coefficient at time `t` (zero without a pulse).
    pub fn drive(&self, t: f64) -> f64 {
        self.pulse
            .map(|p| p.drive_coefficient(self.model.omega_q(), t))
            .unwrap_or(0.0)
    }
}

/// `|k⟩⟨k|`
pub fn basis_state(n: usize, k: usize) -> CMat {
    let mut rho = CMat::zeros(n, n);
    rho[(k, k)] = Complex64::new(1.0, 0.0);
    rho
}

/// `(|0⟩+|1⟩)(⟨0|+⟨1|)/2`, the `σ_x = +1` pointer state.
pub fn pointer_state(n: usize) -> CMat {
    let mut rho = CMat::zeros(n, n);
    for j in 0..2 {
        for k in 0..2 {
            rho[(j, k)] = Complex64::new(0.5, 0.0);
        }
    }
    rho
}

/// Recorded series of one trajectory or deterministic run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub labels: Vec<String>,
    /// `values[o][r]`: observable `o` at record `r`.
    pub values: Vec<Vec<f64>>,
}
