//! Weak-coupling baselines: a Lindblad equation with golden-rule rates
//! between eigenstates, and the two-bath population ladder of a harmonic
//! oscillator.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{Observable, Problem, Trajectory};
use crate::bath::{bose_occupation, IntrinsicBathSpec};
use crate::error::{invalid, Result};
use crate::linalg::{commutator, dissipator, expmv, to_complex, CMat, Dense, ExpmvWork, HermitianBasis, I};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub from: usize,
    pub to: usize,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LindbladSpec {
    pub transitions: Vec<Transition>,
}

impl LindbladSpec {
    /// Golden-rule rates of the problem's bath between all pairs of levels:
    /// `Γ_{k→m} = |q_km|² J(ω_km)(n_β(ω_km)+1)` downward and
    /// `|q_km|² J(ω_km) n_β(ω_km)` upward.
    pub fn from_bath(problem: &Problem) -> Result<Self> {
        let omega = &problem.model.omega;
        let mut transitions = Vec::new();
        for k in 0..omega.len() {
            for m in 0..k {
                let w = omega[k] - omega[m];
                let g2 = problem.q[(k, m)] * problem.q[(k, m)];
                if g2 == 0.0 || w <= 0.0 {
                    continue;
                }
                let j = problem.bath.j(w);
                let n = bose_occupation(problem.bath.beta, w)?;
                transitions.push(Transition {
                    from: k,
                    to: m,
                    rate: g2 * j * (n + 1.0),
                });
                if n > 0.0 {
                    transitions.push(Transition {
                        from: m,
                        to: k,
                        rate: g2 * j * n,
                    });
                }
            }
        }
        Ok(Self { transitions })
    }

    /// Adds a frequency-independent second bath with zero-temperature rate
    /// `γ` and occupation `N_i`, acting through the same matrix elements.
    pub fn with_intrinsic(mut self, problem: &Problem, intrinsic: &IntrinsicBathSpec) -> Result<Self> {
        intrinsic.validate()?;
        let n = problem.n_levels();
        for k in 0..n {
            for m in 0..k {
                let g2 = problem.q[(k, m)] * problem.q[(k, m)];
                if g2 == 0.0 {
                    continue;
                }
                self.transitions.push(Transition {
                    from: k,
                    to: m,
                    rate: g2 * intrinsic.gamma * (intrinsic.n_i + 1.0),
                });
                self.transitions.push(Transition {
                    from: m,
                    to: k,
                    rate: g2 * intrinsic.gamma * intrinsic.n_i,
                });
            }
        }
        Ok(self)
    }

    pub fn rate(&self, from: usize, to: usize) -> f64 {
        self.transitions
            .iter()
            .filter(|t| t.from == from && t.to == to)
            .map(|t| t.rate)
            .sum()
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        for t in &self.transitions {
            if !(t.rate >= 0.0) {
                return Err(invalid("rates", "must be non-negative"));
            }
            if t.from >= n || t.to >= n || t.from == t.to {
                return Err(invalid("transitions", "invalid level indices"));
            }
        }
        Ok(())
    }
}

/// Time-independent generator `−i[H_S,·] + Σ D[√Γ |to⟩⟨from|]`.
pub fn lindblad_generator(problem: &Problem, spec: &LindbladSpec) -> Result<CMat> {
    let n = problem.n_levels();
    spec.validate(n)?;
    let h = to_complex(&problem.model.hamiltonian());
    let mut l = commutator(&h).map(|z| -I * z);
    for t in &spec.transitions {
        let mut jump = CMat::zeros(n, n);
        jump[(t.to, t.from)] = Complex64::new(t.rate.sqrt(), 0.0);
        l += dissipator(&jump);
    }
    Ok(l)
}

/// Deterministic propagation on a grid of `n_steps` steps of size `h`.
///
/// Without a pulse the exact propagator over one record interval is formed
/// once; with a pulse every step exponentiates the generator frozen at the
/// step midpoint.
pub fn lindblad_evolve(
    problem: &Problem,
    spec: &LindbladSpec,
    initial: &CMat,
    h: f64,
    n_steps: usize,
    observables: &[Observable],
    record_stride: usize,
) -> Result<Trajectory> {
    let n = problem.n_levels();
    if record_stride == 0 {
        return Err(invalid("record_stride", "must be at least 1"));
    }
    if !(h > 0.0) {
        return Err(invalid("h", "must be positive"));
    }
    let basis = HermitianBasis::new(n);
    let l = lindblad_generator(problem, spec)?;
    let weights: Vec<Vec<f64>> = observables
        .iter()
        .map(|o| o.weights(n).map(|c| basis.real_functional(&c)))
        .collect::<Result<_>>()?;
    let record = |r: &[f64]| -> Vec<f64> {
        weights
            .iter()
            .map(|w| w.iter().zip(r).map(|(a, b)| a * b).sum())
            .collect()
    };
    let mut r = basis.real_coordinates(initial);
    let n_records = n_steps / record_stride + 1;
    let mut rows = Vec::with_capacity(n_records);
    rows.push(record(&r));

    let l_real = basis.real_superoperator(&l);
    match problem.pulse {
        None => {
            let prop = (l_real * (h * record_stride as f64)).exp();
            for _ in 1..n_records {
                let next = &prop * DVector::from_column_slice(&r);
                r.copy_from_slice(next.as_slice());
                rows.push(record(&r));
            }
        }
        Some(_) => {
            let q = to_complex(&problem.q);
            let lq = Dense::from_matrix(&basis.real_superoperator(&commutator(&q).map(|z| I * z)));
            let l0 = Dense::from_matrix(&l_real);
            let mut m = Dense::zeros(n * n);
            let mut work = ExpmvWork::new(n * n);
            for step in 0..n_steps {
                let c = -problem.drive((step as f64 + 0.5) * h);
                m.assign_combination(&l0, c, &lq);
                expmv(&m, h, &mut r, &mut work);
                if (step + 1) % record_stride == 0 {
                    rows.push(record(&r));
                }
            }
        }
    }
    let values = (0..observables.len())
        .map(|o| rows.iter().map(|row| row[o]).collect())
        .collect();
    Ok(Trajectory {
        times: (0..n_records).map(|i| (i * record_stride) as f64 * h).collect(),
        labels: observables.iter().map(|o| o.label()).collect(),
        values,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoBathResult {
    pub times: Vec<f64>,
    /// `Σ_n n P_n(t)`
    pub occupation: Vec<f64>,
    pub final_populations: Vec<f64>,
    /// `(κN_ee + γN_i)/(κ + γ)`
    pub steady_occupation: f64,
}

const LADDER_MIN: usize = 60;

/// Oscillator coupled to an engineered bath (`κ`, `N_ee`) and an intrinsic
/// one (`γ`, `N_i`). Only the level populations enter; `omega_q` fixes the
/// ladder spacing and is checked for positivity.
///
/// The ladder is truncated where the thermal tail is negligible; the upward
/// rate out of the top level is dropped so probability is conserved and
/// detailed balance holds on the truncated chain.
#[allow(clippy::too_many_arguments)]
pub fn lindblad_two_bath(
    omega_q: f64,
    kappa: f64,
    n_ee: f64,
    gamma: f64,
    n_i: f64,
    initial: &[f64],
    dt: f64,
    n_steps: usize,
) -> Result<TwoBathResult> {
    if !(omega_q > 0.0) {
        return Err(invalid("omega_q", "must be positive"));
    }
    if !(kappa >= 0.0 && gamma >= 0.0 && n_ee >= 0.0 && n_i >= 0.0) {
        return Err(invalid("rates", "rates and occupations must be non-negative"));
    }
    if kappa + gamma == 0.0 {
        return Err(invalid("kappa+gamma", "at least one bath must couple"));
    }
    let steady = (kappa * n_ee + gamma * n_i) / (kappa + gamma);
    let ratio = steady / (1.0 + steady);
    let tail = if ratio > 0.0 {
        (1e-16f64.ln() / ratio.ln()).ceil() as usize
    } else {
        0
    };
    let dim = LADDER_MIN.max(tail + 2).max(initial.len());

    let down = kappa * (n_ee + 1.0) + gamma * (n_i + 1.0);
    let up = kappa * n_ee + gamma * n_i;
    let mut g = DMatrix::<f64>::zeros(dim, dim);
    for n in 0..dim {
        let nf = n as f64;
        if n > 0 {
            g[(n - 1, n)] += down * nf;
            g[(n, n)] -= down * nf;
        }
        if n + 1 < dim {
            g[(n + 1, n)] += up * (nf + 1.0);
            g[(n, n)] -= up * (nf + 1.0);
        }
    }
    let prop = (g * dt).exp();
    let mut p = DVector::zeros(dim);
    for (i, &x) in initial.iter().enumerate() {
        p[i] = x;
    }
    let mean = |p: &DVector<f64>| p.iter().enumerate().map(|(n, x)| n as f64 * x).sum();
    let mut occupation = vec![mean(&p)];
    for _ in 0..n_steps {
        p = &prop * p;
        occupation.push(mean(&p));
    }
    Ok(TwoBathResult {
        times: (0..=n_steps).map(|i| i as f64 * dt).collect(),
        occupation,
        final_populations: p.iter().copied().collect(),
        steady_occupation: steady,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::BathSpec;
    use crate::model::ideal_qubit;
    use crate::solvers::basis_state;

    fn qubit(kappa: f64, beta: f64) -> Problem {
        Problem::new(ideal_qubit(1.0).unwrap(), BathSpec::new(kappa, 1e6, beta, 1.0)).unwrap()
    }

    #[test]
    fn zero_temperature_decay_is_exponential() {
        let p = qubit(0.1, f64::INFINITY);
        let spec = LindbladSpec::from_bath(&p).unwrap();
        let t = lindblad_evolve(&p, &spec, &basis_state(2, 1), 0.1, 300, &[Observable::Population(1)], 10)
            .unwrap();
        for (time, v) in t.times.iter().zip(&t.values[0]) {
            let expect = (-0.1 * time).exp();
            assert!((v - expect).abs() < 1e-6 * 1.0, "t={time}: {v} vs {expect}");
        }
    }

    #[test]
    fn detailed_balance_and_thermal_steady_state() {
        let p = qubit(0.1, 1.0);
        let spec = LindbladSpec::from_bath(&p).unwrap();
        let ratio = spec.rate(0, 1) / spec.rate(1, 0);
        assert!((ratio - (-1.0f64).exp()).abs() < 1e-12);
        let sz = Observable::Expectation {
            label: "sz".into(),
            operator: {
                let mut o = CMat::zeros(2, 2);
                o[(0, 0)] = Complex64::new(1.0, 0.0);
                o[(1, 1)] = Complex64::new(-1.0, 0.0);
                o
            },
        };
        let t = lindblad_evolve(&p, &spec, &basis_state(2, 1), 1.0, 400, &[sz], 400).unwrap();
        assert!((t.values[0][1] - (0.5f64).tanh()).abs() < 1e-10);
    }

    #[test]
    fn qubit_decay_rate_is_thermally_enhanced() {
        let p = qubit(0.05, 2.0);
        let spec = LindbladSpec::from_bath(&p).unwrap();
        let total = spec.rate(1, 0) + spec.rate(0, 1);
        assert!((total - p.bath.kappa_t()).abs() < 1e-6 * total);
    }

    #[test]
    fn two_bath_closed_forms() {
        let r = lindblad_two_bath(1.0, 1.0, 0.0, 1.0, 0.2, &[1.0], 0.5, 100).unwrap();
        assert!((r.steady_occupation - 0.1).abs() < 1e-15);
        assert!((r.occupation.last().unwrap() - 0.1).abs() < 1e-9);
        let r = lindblad_two_bath(1.0, 0.3, 0.25, 0.0, 0.7, &[0.0, 1.0], 1.0, 200).unwrap();
        assert!((r.steady_occupation - 0.25).abs() < 1e-15);
        let r = lindblad_two_bath(1.0, 1.0, 0.01, 0.01, 0.5, &[1.0], 0.5, 100).unwrap();
        assert!((r.steady_occupation - 0.014_851_485).abs() < 1e-8);
        assert!((r.occupation.last().unwrap() - r.steady_occupation).abs() < 1e-9);
        assert!(lindblad_two_bath(1.0, 0.0, 0.1, 0.0, 0.1, &[1.0], 1.0, 1).is_err());
    }
}
