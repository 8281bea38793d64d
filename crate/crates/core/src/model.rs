//! Closed-system models: transmon diagonalisation, the ideal qubit, the
//! coupling operator and a resonant trapezoidal gate drive.

use nalgebra::SymmetricEigen;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{CMat, RMat};

pub const DEFAULT_CHARGE_CUTOFF: usize = 30;
const CONVERGENCE_STEP: usize = 5;
const CONVERGENCE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransmonSpec {
    pub e_j: f64,
    pub e_c: f64,
    pub n_levels: usize,
    pub charge_cutoff: usize,
}

impl TransmonSpec {
    pub fn new(e_j: f64, e_c: f64, n_levels: usize) -> Self {
        Self {
            e_j,
            e_c,
            n_levels,
            charge_cutoff: DEFAULT_CHARGE_CUTOFF,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.e_j > 0.0) {
            return Err(invalid("e_j", "must be positive"));
        }
        if !(self.e_c > 0.0) {
            return Err(invalid("e_c", "must be positive"));
        }
        if self.e_j / self.e_c < 1.0 {
            return Err(invalid("e_j/e_c", "must be at least 1"));
        }
        if self.n_levels < 2 || self.n_levels > 2 * self.charge_cutoff + 1 {
            return Err(invalid(
                "n_levels",
                format!("must lie in 2..={}", 2 * self.charge_cutoff + 1),
            ));
        }
        Ok(())
    }

    /// Below this ratio the charge dispersion is no longer negligible.
    pub fn in_transmon_regime(&self) -> bool {
        self.e_j / self.e_c >= 20.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    IdealQubit,
    Transmon,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemModel {
    /// Eigenfrequencies with the ground state at zero.
    pub omega: Vec<f64>,
    /// `⟨k|n̂|m⟩` in the eigenbasis (exactly `σ_x` for the ideal qubit).
    pub q_op: RMat,
    pub kind: ModelKind,
}

fn charge_hamiltonian(spec: &TransmonSpec, cutoff: usize) -> RMat {
    let dim = 2 * cutoff + 1;
    let mut h = RMat::zeros(dim, dim);
    for i in 0..dim {
        let n = i as f64 - cutoff as f64;
        h[(i, i)] = 4.0 * spec.e_c * n * n;
        if i + 1 < dim {
            h[(i, i + 1)] = -0.5 * spec.e_j;
            h[(i + 1, i)] = -0.5 * spec.e_j;
        }
    }
    h
}

/// Sorted lowest eigenpairs: energies and eigenvectors as columns.
fn lowest_eigenpairs(spec: &TransmonSpec, cutoff: usize, keep: usize) -> (Vec<f64>, RMat) {
    let eig = SymmetricEigen::new(charge_hamiltonian(spec, cutoff));
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let dim = eig.eigenvalues.len();
    let energies = order[..keep].iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = RMat::zeros(dim, keep);
    for (c, &i) in order[..keep].iter().enumerate() {
        vecs.set_column(c, &eig.eigenvectors.column(i));
    }
    (energies, vecs)
}

fn gauge_frequencies(energies: &[f64]) -> Vec<f64> {
    energies.iter().map(|e| e - energies[0]).collect()
}

pub fn diagonalize_transmon(spec: &TransmonSpec) -> Result<SystemModel> {
    spec.validate()?;
    let keep = spec.n_levels;
    let (energies, mut vecs) = lowest_eigenpairs(spec, spec.charge_cutoff, keep);
    let omega = gauge_frequencies(&energies);

    let (finer, _) = lowest_eigenpairs(spec, spec.charge_cutoff + CONVERGENCE_STEP, keep);
    let finer = gauge_frequencies(&finer);
    for level in 1..keep {
        let change = ((finer[level] - omega[level]) / omega[level]).abs();
        if change > CONVERGENCE_TOL {
            return Err(Error::ChargeCutoffTooSmall {
                cutoff: spec.charge_cutoff,
                level,
                change,
            });
        }
    }

    let dim = vecs.nrows();
    let charge = RMat::from_diagonal(&nalgebra::DVector::from_fn(dim, |i, _| {
        i as f64 - spec.charge_cutoff as f64
    }));

    // Fix eigenvector signs: ground state with positive total weight, then
    // each neighbour chosen so that ⟨k|n̂|k+1⟩ ≥ 0.
    if vecs.column(0).sum() < 0.0 {
        vecs.column_mut(0).neg_mut();
    }
    for k in 1..keep {
        let element = vecs.column(k - 1).dot(&(&charge * vecs.column(k)));
        if element < 0.0 {
            vecs.column_mut(k).neg_mut();
        }
    }
    let mut q_op = vecs.transpose() * &charge * &vecs;
    // symmetrise away rounding
    q_op = (&q_op + q_op.transpose()) * 0.5;

    Ok(SystemModel {
        omega,
        q_op,
        kind: ModelKind::Transmon,
    })
}

pub fn ideal_qubit(omega_q: f64) -> Result<SystemModel> {
    if !(omega_q > 0.0) || !omega_q.is_finite() {
        return Err(invalid("omega_q", "must be positive and finite"));
    }
    Ok(SystemModel {
        omega: vec![0.0, omega_q],
        q_op: RMat::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]),
        kind: ModelKind::IdealQubit,
    })
}

impl SystemModel {
    pub fn n_levels(&self) -> usize {
        self.omega.len()
    }

    pub fn omega_q(&self) -> f64 {
        self.omega[1] - self.omega[0]
    }

    pub fn hamiltonian(&self) -> RMat {
        RMat::from_diagonal(&nalgebra::DVector::from_column_slice(&self.omega))
    }

    pub fn relative_anharmonicity(&self) -> Result<f64> {
        if self.n_levels() < 3 {
            return Err(Error::TooFewLevels {
                levels: self.n_levels(),
                required: 3,
            });
        }
        Ok((self.omega[2] - self.omega[1]) / (self.omega[1] - self.omega[0]) - 1.0)
    }

    /// The coupling operator, optionally rescaled so that `|⟨0|q̂|1⟩| = 1`.
    pub fn coupling_operator(&self, normalized: bool) -> RMat {
        if normalized {
            let scale = self.q_op[(0, 1)].abs();
            if scale > 0.0 {
                return &self.q_op / scale;
            }
        }
        self.q_op.clone()
    }

    /// Frequencies divided by `ω_q`, so that the qubit transition is at 1.
    pub fn in_qubit_units(&self) -> SystemModel {
        let wq = self.omega_q();
        SystemModel {
            omega: self.omega.iter().map(|w| w / wq).collect(),
            q_op: self.q_op.clone(),
            kind: self.kind,
        }
    }

    /// `i[H_S, q̂]/ω_q`, which is `σ_y` for the ideal qubit.
    pub fn momentum_operator(&self, q: &RMat) -> CMat {
        let wq = self.omega_q();
        CMat::from_fn(q.nrows(), q.ncols(), |k, m| {
            Complex64::new(0.0, (self.omega[k] - self.omega[m]) * q[(k, m)] / wq)
        })
    }
}

/// Resonant π-type pulse with a trapezoidal envelope.
///
/// The envelope `A(t)` ramps linearly to the plateau value `g` over
/// `rise_time`, holds, and ramps down symmetrically. The lab-frame drive
/// `A(t) cos(ω_q t) q̂` rotates the qubit by `∫A dt`, which is set equal to
/// `total_area`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseSpec {
    pub g: f64,
    pub rise_time: f64,
    pub total_area: f64,
}

impl PulseSpec {
    /// π pulse with the conventional rise time of a tenth of `π/g`.
    pub fn pi_pulse(g: f64) -> Self {
        Self {
            g,
            rise_time: std::f64::consts::PI / (10.0 * g),
            total_area: std::f64::consts::PI,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.g > 0.0) {
            return Err(invalid("g", "must be positive"));
        }
        if !(self.rise_time >= 0.0) {
            return Err(invalid("rise_time", "must be non-negative"));
        }
        if !(self.total_area > 0.0) {
            return Err(invalid("total_area", "must be positive"));
        }
        if self.plateau() < 0.0 {
            return Err(invalid(
                "rise_time",
                "too long for the requested area; pulse would be shorter than two ramps",
            ));
        }
        Ok(())
    }

    /// Plateau length from `g·(plateau + rise) = total_area`.
    pub fn plateau(&self) -> f64 {
        self.total_area / self.g - self.rise_time
    }

    pub fn duration(&self) -> f64 {
        self.plateau() + 2.0 * self.rise_time
    }

    pub fn envelope(&self, t: f64) -> f64 {
        let total = self.duration();
        if t < 0.0 || t > total {
            return 0.0;
        }
        let r = self.rise_time;
        if r > 0.0 && t < r {
            self.g * t / r
        } else if r > 0.0 && t > total - r {
            self.g * (total - t) / r
        } else {
            self.g
        }
    }

    /// Scalar multiplying `q̂` in the drive Hamiltonian.
    pub fn drive_coefficient(&self, omega_q: f64, t: f64) -> f64 {
        self.envelope(t) * (omega_q * t).cos()
    }
}

pub fn drive_term(model: &SystemModel, q: &RMat, pulse: &PulseSpec, t: f64) -> RMat {
    q * pulse.drive_coefficient(model.omega_q(), t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn transmon(ratio: f64, n: usize) -> SystemModel {
        diagonalize_transmon(&TransmonSpec::new(ratio, 1.0, n)).unwrap()
    }

    #[test]
    fn transmon_anharmonicity_near_minus_four_percent() {
        let m = transmon(100.0, 5);
        let a = m.relative_anharmonicity().unwrap();
        assert!((a + 0.04).abs() < 0.005, "alpha = {a}");
    }

    #[test]
    fn transmon_frequency_matches_plasma_asymptotic() {
        let m = transmon(100.0, 5);
        let approx = (8.0f64 * 100.0).sqrt() - 1.0;
        assert!((m.omega_q() / approx - 1.0).abs() < 0.02);
        assert_eq!(m.omega[0], 0.0);
    }

    #[test]
    fn plasma_ratio_approaches_one_from_below() {
        let ratios: Vec<f64> = [30.0, 100.0, 300.0]
            .iter()
            .map(|&r| transmon(r, 3).omega_q() / (8.0f64 * r).sqrt())
            .collect();
        assert!(ratios.windows(2).all(|w| w[0] < w[1]));
        assert!(ratios.iter().all(|&x| x < 1.0));
    }

    #[test]
    fn anharmonicity_negative_across_regime() {
        for &r in &[20.0, 50.0, 100.0, 250.0, 500.0] {
            assert!(transmon(r, 3).relative_anharmonicity().unwrap() < 0.0);
        }
    }

    #[test]
    fn coupling_matrix_elements() {
        let m = transmon(100.0, 5);
        let raw = m.coupling_operator(false);
        let ho = (100.0f64 / 8.0).powf(0.25) / 2f64.sqrt();
        assert!((raw[(0, 1)] / ho - 1.0).abs() < 0.05, "{}", raw[(0, 1)]);
        let q = m.coupling_operator(true);
        assert!((q[(0, 1)] - 1.0).abs() < 1e-14);
        assert!((q[(1, 2)] / 2f64.sqrt() - 1.0).abs() < 0.05);
        for k in 0..4 {
            assert!(q[(k, k + 1)] >= 0.0);
        }
        assert!((&q - q.transpose()).norm() < 1e-14);
    }

    #[test]
    fn cutoff_convergence_detected() {
        let spec = TransmonSpec {
            e_j: 100.0,
            e_c: 1.0,
            n_levels: 5,
            charge_cutoff: 3,
        };
        assert!(matches!(
            diagonalize_transmon(&spec),
            Err(Error::ChargeCutoffTooSmall { .. })
        ));
    }

    #[test]
    fn eigenvalues_stable_under_cutoff_increase() {
        let a = transmon(100.0, 5);
        let b = diagonalize_transmon(&TransmonSpec {
            charge_cutoff: 45,
            ..TransmonSpec::new(100.0, 1.0, 5)
        })
        .unwrap();
        for (x, y) in a.omega.iter().zip(&b.omega).skip(1) {
            assert!((x / y - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn ideal_qubit_definition() {
        let m = ideal_qubit(1.0).unwrap();
        assert_eq!(m.omega, vec![0.0, 1.0]);
        assert_eq!(m.q_op, RMat::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
        assert_eq!(m.coupling_operator(true), m.q_op);
        assert!(matches!(m.relative_anharmonicity(), Err(Error::TooFewLevels { .. })));
        assert!(ideal_qubit(2.0 * std::f64::consts::PI * 8e9).is_ok());
        assert!(ideal_qubit(0.0).is_err());
    }

    #[test]
    fn anharmonicity_arithmetic() {
        let m = SystemModel {
            omega: vec![0.0, 1.0, 1.9],
            q_op: RMat::zeros(3, 3),
            kind: ModelKind::Transmon,
        };
        assert!((m.relative_anharmonicity().unwrap() + 0.1).abs() < 1e-14);
        let harmonic = SystemModel {
            omega: vec![0.0, 1.0, 2.0],
            ..m
        };
        assert_eq!(harmonic.relative_anharmonicity().unwrap(), 0.0);
    }

    #[test]
    fn momentum_operator_is_sigma_y_for_qubit() {
        let m = ideal_qubit(1.0).unwrap();
        let p = m.momentum_operator(&m.q_op);
        assert_eq!(p[(0, 1)], Complex64::new(0.0, -1.0));
        assert_eq!(p[(1, 0)], Complex64::new(0.0, 1.0));
    }

    #[test]
    fn pulse_timing() {
        let g = 0.0025;
        let pulse = PulseSpec {
            g,
            rise_time: 0.0,
            total_area: std::f64::consts::PI,
        };
        assert!((pulse.plateau() - std::f64::consts::PI / g).abs() < 1e-9);
        let pi = PulseSpec::pi_pulse(g);
        let expect = std::f64::consts::PI / g * 1.1;
        assert!((pi.duration() - expect).abs() < 1e-9);
        // numerically integrated rotation angle equals the requested area
        let n = 200_000;
        let dt = pi.duration() / n as f64;
        let area: f64 = (0..n).map(|i| pi.envelope((i as f64 + 0.5) * dt) * dt).sum();
        assert!((area - std::f64::consts::PI).abs() < 1e-6);
        let m = ideal_qubit(1.0).unwrap();
        assert_eq!(drive_term(&m, &m.q_op, &pi, pi.duration() + 1.0), RMat::zeros(2, 2));
        let d = drive_term(&m, &m.q_op, &pi, 3.3);
        assert_eq!(d, d.transpose());
    }
}
