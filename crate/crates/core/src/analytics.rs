//! Closed-form and quadrature results for the ohmic spin-boson qubit.
//!
//! Nothing here touches the stochastic solvers, so every function can serve
//! as an independent oracle for them.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::bath::{coth_half, BathSpec, CutoffFamily};
use crate::error::{invalid, Result};
use crate::quad::{Integrator, Trig};
use crate::special::{digamma, trigamma, EULER_GAMMA};

/// Upper limit of the directly integrated part of the decoherence integrals,
/// in units of the cutoff. Beyond it the oscillatory tail is extrapolated.
const HEAD_CUTOFFS: f64 = 4.0;

fn integrator() -> Integrator {
    Integrator {
        rel_tol: 1e-10,
        abs_tol: 1e-14,
        max_subdivisions: 20_000,
    }
}

/// `J(ω)·ω_q/κ`, the coupling-free shape of the spectral density.
fn shape(bath: &BathSpec, w: f64) -> f64 {
    let x = w / bath.omega_c;
    match bath.cutoff {
        CutoffFamily::Drude2 => w / ((1.0 + x * x) * (1.0 + x * x)),
        CutoffFamily::Exponential => w * (-x).exp(),
    }
}

fn thermal_factor(bath: &BathSpec, w: f64) -> f64 {
    coth_half(bath.beta * w)
}

fn head_points(bath: &BathSpec, t: f64, end: f64) -> Result<Vec<f64>> {
    let mut pts = vec![0.0];
    if bath.beta.is_finite() && 2.0 / bath.beta < end {
        pts.push(2.0 / bath.beta);
    }
    if bath.omega_c < end {
        pts.push(bath.omega_c);
    }
    if t > 0.0 {
        let half = PI / t;
        let count = (end / half).ceil() as usize;
        if count > 50_000 {
            return Err(invalid("t", "ω_c·t too large for the oscillatory quadrature"));
        }
        pts.extend((1..count).map(|k| k as f64 * half).filter(|&w| w < end));
    }
    pts.push(end);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    Ok(pts)
}

/// `f(t) = (2ω_q/κ) ∫₀^∞ dω J(ω)/ω² coth(βω/2) [1 − cos ωt]`.
pub fn universal_f(bath: &BathSpec, t: f64) -> Result<f64> {
    if t < 0.0 {
        return Err(invalid("t", "must be non-negative"));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let g = |w: f64| 2.0 * shape(bath, w) / (w * w) * thermal_factor(bath, w);
    let end = HEAD_CUTOFFS * bath.omega_c;
    let integ = integrator();
    let head = integ
        .panels(
            |w| {
                let s = (0.5 * w * t).sin();
                g(w) * 2.0 * s * s
            },
            &head_points(bath, t, end)?,
        )?
        .value;
    let plain = integ.semi_infinite(g, &[end, 10.0 * end])?.value;
    let oscill = integ.fourier(g, t, Trig::Cos, &[end])?.value;
    Ok(head + plain - oscill)
}

/// `φ(t) = (2ω_q/κ) ∫₀^∞ dω J(ω)/ω² [ωt − sin ωt]`.
pub fn universal_phi(bath: &BathSpec, t: f64) -> Result<f64> {
    if t < 0.0 {
        return Err(invalid("t", "must be non-negative"));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let g = |w: f64| 2.0 * shape(bath, w) / (w * w);
    let kernel = |x: f64| {
        // x − sin x, with the series where the difference cancels
        if x < 1e-2 {
            let x3 = x * x * x;
            x3 / 6.0 * (1.0 - x * x / 20.0)
        } else {
            x - x.sin()
        }
    };
    let end = HEAD_CUTOFFS * bath.omega_c;
    let integ = integrator();
    let head = integ
        .panels(|w| g(w) * kernel(w * t), &head_points(bath, t, end)?)?
        .value;
    let linear = t * integ.semi_infinite(|w| g(w) * w, &[end, 10.0 * end])?.value;
    let oscill = integ.fourier(g, t, Trig::Sin, &[end])?.value;
    Ok(head + linear - oscill)
}

/// Short-time form `½ ω_c² t²`.
pub fn universal_f_short(bath: &BathSpec, t: f64) -> f64 {
    0.5 * (bath.omega_c * t).powi(2)
}

/// `2 ln[sinh(πt/β)/(πt/β)]`, the finite-temperature part of `f`.
pub fn universal_f_thermal(beta: f64, t: f64) -> f64 {
    if beta.is_infinite() || t == 0.0 {
        return 0.0;
    }
    let x = PI * t.abs() / beta;
    let ln_sinh_over_x = if x < 1e-4 {
        x * x / 6.0
    } else if x < 20.0 {
        (x.sinh() / x).ln()
    } else {
        x + (-(-2.0 * x).exp()).ln_1p() - 2f64.ln() - x.ln()
    };
    2.0 * ln_sinh_over_x
}

/// Long-time form `2[γ_E − ½ + ln(ω_c t)] + 2 ln[sinh(πt/β)/(πt/β)]`.
pub fn universal_f_asymptotic(bath: &BathSpec, t: f64) -> f64 {
    2.0 * (EULER_GAMMA - 0.5 + (bath.omega_c * t).ln()) + universal_f_thermal(bath.beta, t)
}

/// `½[1 + exp(−K f(t))]` for a qubit starting in the excited state.
pub fn universal_excited_prob(bath: &BathSpec, t: f64) -> Result<f64> {
    let f = universal_f(bath, t)?;
    Ok(excited_prob_from_f(bath.kondo_parameter(), f))
}

pub fn excited_prob_from_f(k: f64, f: f64) -> f64 {
    0.5 * (1.0 + (-k * f).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyStateParams {
    pub k: f64,
    pub g: f64,
    pub omega_eff: f64,
    pub omega: f64,
}

fn check_k(k: f64) -> Result<()> {
    if !(0.0..0.5).contains(&k) {
        return Err(invalid("K", "must lie in [0, 1/2)"));
    }
    Ok(())
}

/// `Re ψ(iy) − ln y`, which vanishes as `y → ∞`.
fn digamma_excess(y: f64) -> f64 {
    if y.is_infinite() {
        return 0.0;
    }
    // Re ψ(iy) = Re ψ(1+iy): the recurrence term 1/(iy) is imaginary.
    digamma(Complex64::new(1.0, y)).re - y.ln()
}

/// Renormalised qubit frequency
/// `Ω = ω_eff {1 + 2K[Re ψ(iβω_eff/2π) − ln(βω_eff/2π)]}^{1/2}` with
/// `ω_eff = G (ω_q/ω_c)^{K/(1−K)} ω_q` and `G = [Γ(1−2K) cos πK]^{1/(2(1−K))}`.
pub fn renormalized_frequency(k: f64, omega_q: f64, omega_c: f64, beta: f64) -> Result<SteadyStateParams> {
    check_k(k)?;
    // Γ(1) = 1 exactly, but the Lanczos evaluation is off by one ulp
    let g = if k == 0.0 {
        1.0
    } else {
        (gamma(1.0 - 2.0 * k) * (PI * k).cos()).powf(1.0 / (2.0 * (1.0 - k)))
    };
    let omega_eff = g * (omega_q / omega_c).powf(k / (1.0 - k)) * omega_q;
    let y = beta * omega_eff / (2.0 * PI);
    let bracket = 1.0 + 2.0 * k * digamma_excess(y);
    if !(bracket > 0.0) {
        return Err(invalid("K", "renormalised frequency is not real"));
    }
    Ok(SteadyStateParams {
        k,
        g,
        omega_eff,
        omega: omega_eff * bracket.sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    pub params: SteadyStateParams,
    pub d_omega_d_omega_eff: f64,
    pub d_omega_eff_d_omega_q: f64,
    pub sigma_z: f64,
    pub rho_e: f64,
}

impl SteadyState {
    pub fn d_omega_d_omega_q(&self) -> f64 {
        self.d_omega_d_omega_eff * self.d_omega_eff_d_omega_q
    }
}

/// `⟨σ_z⟩ = tanh(βΩ/2) (∂Ω/∂ω_eff)(∂ω_eff/∂ω_q)` and `ρ_e = (1 − ⟨σ_z⟩)/2`.
pub fn steady_sigma_z(k: f64, omega_q: f64, omega_c: f64, beta: f64) -> Result<SteadyState> {
    let params = renormalized_frequency(k, omega_q, omega_c, beta)?;
    let SteadyStateParams {
        g, omega_eff, omega, ..
    } = params;
    let d_omega_d_omega_eff = if beta.is_infinite() {
        omega / omega_eff
    } else {
        let y = beta * omega_eff / (2.0 * PI);
        // Im ψ'(iy) = Im ψ'(1+iy): the recurrence term −1/y² is real.
        let im_trigamma = trigamma(Complex64::new(1.0, y)).im;
        omega / omega_eff
            - k * beta * omega_eff * omega_eff / (2.0 * PI * omega)
                * (im_trigamma + 2.0 * PI / (beta * omega_eff))
    };
    let d_omega_eff_d_omega_q = g.powf(1.0 - k) / (1.0 - k) * (omega_eff / omega_c).powf(k);
    let tanh = if beta.is_infinite() {
        1.0
    } else {
        (0.5 * beta * omega).tanh()
    };
    let sigma_z = tanh * d_omega_d_omega_eff * d_omega_eff_d_omega_q;
    Ok(SteadyState {
        params,
        d_omega_d_omega_eff,
        d_omega_eff_d_omega_q,
        sigma_z,
        rho_e: 0.5 * (1.0 - sigma_z),
    })
}

/// Zero-temperature excited-state population to first order in `κ`,
/// `(κ/2πω_q)[−1 − γ_E + ln(ω_c/ω_q)]`.
pub fn steady_excited_low_t(kappa: f64, omega_q: f64, omega_c: f64) -> Result<f64> {
    let p = kappa / (2.0 * PI * omega_q) * (-1.0 - EULER_GAMMA + (omega_c / omega_q).ln());
    if p < 0.0 {
        return Err(invalid("omega_c", "cutoff too low for the low-temperature expansion"));
    }
    Ok(p)
}

fn cutoff_constant(family: CutoffFamily) -> f64 {
    match family {
        CutoffFamily::Exponential => EULER_GAMMA,
        CutoffFamily::Drude2 => 0.5,
    }
}

/// Zero-temperature perturbative Lamb-shifted frequency
/// `ω_q{1 − K[−c + ln(ω_c/ω_q)]}` with `c = γ_E` (exponential) or `½` (Drude).
pub fn lamb_shift_perturbative(k: f64, omega_q: f64, omega_c: f64, family: CutoffFamily) -> f64 {
    omega_q * (1.0 - k * (-cutoff_constant(family) + (omega_c / omega_q).ln()))
}

/// Coupling at which the perturbative shifted frequency reaches zero.
pub fn lamb_shift_zero_crossing(omega_q: f64, omega_c: f64, family: CutoffFamily) -> f64 {
    1.0 / ((omega_c / omega_q).ln() - cutoff_constant(family))
}

/// Shifted frequency of a harmonic oscillator, `ω_q{1 + K(1 − γ_E) ω_q/ω_c}`.
pub fn lamb_shift_harmonic(k: f64, omega_q: f64, omega_c: f64) -> f64 {
    omega_q * (1.0 + k * (1.0 - EULER_GAMMA) * omega_q / omega_c)
}

/// `χ = (1/2π) ∫₀^∞ dω J(ω)/(ω_q + ω)²` by quadrature.
pub fn entanglement_chi(bath: &BathSpec) -> Result<f64> {
    if bath.kappa == 0.0 {
        return Ok(0.0);
    }
    let wq = bath.omega_q_ref;
    let pts = [0.0, wq, bath.omega_c, 10.0 * bath.omega_c];
    let r = integrator().semi_infinite(|w| bath.j(w) / ((wq + w) * (wq + w)), &pts)?;
    Ok(r.value / (2.0 * PI))
}

/// Large-cutoff closed form `(K/2)[−3/2 + ln(ω_c/ω_q)]` for the Drude bath.
pub fn entanglement_chi_closed(bath: &BathSpec) -> f64 {
    0.5 * bath.kondo_parameter() * (-1.5 + (bath.omega_c / bath.omega_q_ref).ln())
}

/// Effective occupation `(κN_ee + γN_i)/(κ + γ)` of an oscillator between
/// two baths.
pub fn two_bath_occupation(kappa: f64, n_ee: f64, gamma: f64, n_i: f64) -> Result<f64> {
    if kappa + gamma == 0.0 {
        return Err(invalid("kappa+gamma", "division by zero"));
    }
    Ok((kappa * n_ee + gamma * n_i) / (kappa + gamma))
}
