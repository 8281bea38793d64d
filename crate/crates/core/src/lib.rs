//! Numerically exact dynamics of a dissipative qubit or transmon coupled to
//! an ohmic bath.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`]: closed-system Hamiltonians, coupling operator and gate drive.
//! * [`bath`]: spectral density, occupation, spectra and correlation functions.
//! * [`noise`]: FFT-filtered Gaussian noise for the stochastic propagators.
//! * [`solvers`]: stochastic trajectories, ensembles, Lindblad baselines,
//!   steady-state extraction and damped-cosine fits.
//! * [`analytics`]: closed-form results used as independent oracles.
//!
//! Units are dimensionless with `ħ = 1`; callers usually also set `ω_q = 1`.

// `!(x > 0.0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Tabulated coefficients are kept digit for digit as published.
#![allow(clippy::excessive_precision)]

pub mod analytics;
pub mod bath;
pub mod error;
pub mod linalg;
pub mod model;
pub mod noise;
pub mod quad;
pub mod solvers;
pub mod special;

pub use bath::{BathSpec, CutoffFamily, IntrinsicBathSpec};
pub use error::{Error, Result};
pub use model::{ModelKind, PulseSpec, SystemModel, TransmonSpec};
pub use noise::{NoiseGrid, NoiseSample};
pub use solvers::{EnsembleStats, Method, Observable};
