//! Bath-side scalar functions.
//!
//! All two-sided quantities use the odd extension `J(−ω) = −J(ω)` of the
//! spectral density. Inverse temperature `beta` may be `f64::INFINITY` for
//! the zero-temperature limit.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::quad::{Integrator, Trig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CutoffFamily {
    /// `ω / (1 + ω²/ω_c²)²`
    #[default]
    Drude2,
    /// `ω · exp(−ω/ω_c)`
    Exponential,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BathSpec {
    pub kappa: f64,
    pub omega_c: f64,
    pub beta: f64,
    pub omega_q_ref: f64,
    #[serde(default)]
    pub cutoff: CutoffFamily,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntrinsicBathSpec {
    pub gamma: f64,
    pub n_i: f64,
}

impl IntrinsicBathSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0) {
            return Err(invalid("gamma", "must be non-negative"));
        }
        if !(self.n_i >= 0.0) {
            return Err(invalid("n_i", "must be non-negative"));
        }
        Ok(())
    }
}

/// `1/(e^{βω} − 1)`, continued to negative frequencies as `−(1 + n(|ω|))`.
pub fn bose_occupation(beta: f64, omega: f64) -> Result<f64> {
    if omega == 0.0 {
        return Err(invalid("omega", "occupation diverges at zero frequency"));
    }
    if omega < 0.0 {
        return Ok(-(1.0 + bose_occupation(beta, -omega)?));
    }
    if beta.is_infinite() {
        return Ok(0.0);
    }
    Ok(1.0 / (beta * omega).exp_m1())
}

/// `coth(x/2)` for `x > 0`, accurate near zero and saturating at large `x`.
pub(crate) fn coth_half(x: f64) -> f64 {
    if x.is_infinite() {
        1.0
    } else {
        1.0 + 2.0 / x.exp_m1()
    }
}

/// `coth(x/2) − 2/x`, the quantum excess over the classical white noise.
pub(crate) fn quantum_excess(x: f64) -> f64 {
    if x.is_infinite() {
        return 1.0;
    }
    if x < 0.5 {
        // Laurent series of coth(x/2) with the pole removed
        let x2 = x * x;
        x / 6.0 * (1.0 - x2 / 60.0 * (1.0 - x2 / 42.0 * (1.0 - x2 / 40.0)))
    } else {
        coth_half(x) - 2.0 / x
    }
}

impl BathSpec {
    pub fn new(kappa: f64, omega_c: f64, beta: f64, omega_q_ref: f64) -> Self {
        Self {
            kappa,
            omega_c,
            beta,
            omega_q_ref,
            cutoff: CutoffFamily::Drude2,
        }
    }

    pub fn with_cutoff(mut self, cutoff: CutoffFamily) -> Self {
        self.cutoff = cutoff;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa >= 0.0) || !self.kappa.is_finite() {
            return Err(invalid("kappa", "must be non-negative"));
        }
        if !(self.omega_c > 0.0) || !self.omega_c.is_finite() {
            return Err(invalid("omega_c", "must be positive"));
        }
        if !(self.beta > 0.0) {
            return Err(invalid("beta", "must be positive (infinity allowed)"));
        }
        if !(self.omega_q_ref > 0.0) || !self.omega_q_ref.is_finite() {
            return Err(invalid("omega_q_ref", "must be positive"));
        }
        Ok(())
    }

    pub fn kondo_parameter(&self) -> f64 {
        self.kappa / (PI * self.omega_q_ref)
    }

    /// Weak-coupling decay rate `κ coth(βω_q/2)`.
    pub fn kappa_t(&self) -> f64 {
        self.kappa * coth_half(self.beta * self.omega_q_ref)
    }

    fn shape(&self, omega: f64) -> f64 {
        let x = omega / self.omega_c;
        match self.cutoff {
            CutoffFamily::Drude2 => omega / ((1.0 + x * x) * (1.0 + x * x)),
            CutoffFamily::Exponential => omega * (-x).exp(),
        }
    }

    pub fn spectral_density(&self, omega: f64) -> Result<f64> {
        if omega < 0.0 {
            return Err(invalid(
                "omega",
                "spectral density is defined for ω ≥ 0; use the odd extension explicitly",
            ));
        }
        Ok(self.j(omega))
    }

    /// `J(ω)` for `ω ≥ 0` without the domain check.
    #[inline]
    pub fn j(&self, omega: f64) -> f64 {
        self.kappa / self.omega_q_ref * self.shape(omega)
    }

    /// Odd extension of `J`.
    #[inline]
    pub fn j_odd(&self, omega: f64) -> f64 {
        omega.signum() * self.j(omega.abs())
    }

    /// `S(ω) = J(ω)[n_β(ω) + 1]` on the full real axis.
    pub fn power_spectrum(&self, omega: f64) -> f64 {
        if omega == 0.0 {
            return self.kappa / (self.beta * self.omega_q_ref);
        }
        let w = omega.abs();
        let n = if self.beta.is_infinite() {
            0.0
        } else {
            1.0 / (self.beta * w).exp_m1()
        };
        if omega > 0.0 {
            self.j(w) * (n + 1.0)
        } else {
            self.j(w) * n
        }
    }

    /// `(J/2) coth(βω/2)`, the symmetrised spectrum; even in `ω`.
    pub fn symmetric_spectrum(&self, omega: f64) -> f64 {
        let w = omega.abs();
        if w == 0.0 {
            return self.kappa / (self.beta * self.omega_q_ref);
        }
        0.5 * self.j(w) * coth_half(self.beta * w)
    }

    /// `J(|ω|)[coth(β|ω|/2) − 2/(β|ω|)]`, the coloured part left after the
    /// white-noise term is split off.
    pub fn sled_noise_spectrum(&self, omega: f64) -> f64 {
        let w = omega.abs();
        if w == 0.0 {
            return 0.0;
        }
        self.j(w) * quantum_excess(self.beta * w)
    }

    /// Coefficient of the double-commutator white-noise term.
    pub fn white_noise_strength(&self) -> f64 {
        self.kappa / (2.0 * self.beta * self.omega_q_ref)
    }

    /// Frequencies at which the integrands change character.
    fn breakpoints(&self) -> Vec<f64> {
        let mut pts = vec![0.0];
        if self.beta.is_finite() {
            let thermal = 2.0 / self.beta;
            if thermal < self.omega_c {
                pts.push(thermal);
            }
        }
        if self.omega_q_ref < self.omega_c {
            pts.push(self.omega_q_ref);
        }
        pts.push(self.omega_c);
        pts.push(4.0 * self.omega_c);
        pts.push(20.0 * self.omega_c);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    /// `L(t) = ∫₀^∞ dω/2π J(ω)[coth(βω/2) cos ωt − i sin ωt]`.
    pub fn correlation_function(&self, t: f64) -> Result<Complex64> {
        if self.kappa == 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let integrator = Integrator::with_rel_tol(1e-10);
        let pts = self.breakpoints();
        let beta = self.beta;
        let sym = |w: f64| {
            if w == 0.0 {
                2.0 * self.kappa / (beta * self.omega_q_ref)
            } else {
                self.j(w) * coth_half(beta * w)
            }
        };
        let re = integrator.fourier(sym, t.abs(), Trig::Cos, &pts)?.value / (2.0 * PI);
        let im = if t == 0.0 {
            0.0
        } else {
            -integrator
                .fourier(|w| self.j(w), t.abs(), Trig::Sin, &pts)?
                .value
                * t.signum()
                / (2.0 * PI)
        };
        Ok(Complex64::new(re, im))
    }

    /// `∫₀^∞ dω/2π F(ω) cos ωt` with `F` the [`sled_noise_spectrum`](Self::sled_noise_spectrum):
    /// the autocorrelation the coloured real noise must carry.
    pub fn sled_noise_correlation(&self, t: f64) -> Result<f64> {
        if self.kappa == 0.0 {
            return Ok(0.0);
        }
        let integrator = Integrator::with_rel_tol(1e-10);
        let pts = self.breakpoints();
        Ok(integrator
            .fourier(|w| self.sled_noise_spectrum(w), t.abs(), Trig::Cos, &pts)?
            .value
            / (2.0 * PI))
    }

    /// Response function `χ_R(ω)` of the bath for the Drude cutoff: imaginary
    /// part `J/4` and the matching dispersive real part.
    pub fn response_function(&self, omega: f64) -> Result<Complex64> {
        if self.cutoff != CutoffFamily::Drude2 {
            return Err(invalid(
                "cutoff",
                "complex noise windows are only available for the Drude cutoff",
            ));
        }
        if omega == 0.0 {
            // limit of J(ω)ω_c/(8ω)
            return Ok(Complex64::new(
                self.kappa / self.omega_q_ref * self.omega_c / 8.0,
                0.0,
            ));
        }
        let j = self.j_odd(omega);
        let x = omega / self.omega_c;
        Ok(Complex64::new(
            j / 4.0 * (self.omega_c / (2.0 * omega)) * (1.0 - x * x),
            j / 4.0,
        ))
    }
}
