//! Per-trajectory integration of the stochastic Liouville equations.
//!
//! Each step applies the first-order Magnus propagator `exp(h·𝓛_ℓ)`, where
//! the generator is frozen at the noise value of grid point `ℓ` (the left end
//! of the step) and at the drive value of the step midpoint.

use num_complex::Complex64;

use super::{Method, Observable, Problem, Trajectory};
use crate::error::{invalid, Error, Result};
use crate::linalg::{
    anticommutator, commutator, expmv, to_complex, unvectorize, vectorize, CMat, Dense,
    ExpmvWork, HermitianBasis, I,
};
use crate::noise::{NoiseGenerator, NoiseGrid, NoiseKind, NoiseScratch, NoiseValues};

/// A trajectory whose state exceeds this magnitude is treated as runaway.
pub const RUNAWAY_BOUND: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryOptions {
    /// Record every `record_stride`-th step.
    pub record_stride: usize,
    /// Propagate only this many steps of the noise grid.
    pub n_propagate: Option<usize>,
}

impl Default for TrajectoryOptions {
    fn default() -> Self {
        Self {
            record_stride: 1,
            n_propagate: None,
        }
    }
}

/// Dissipative propagator with one real noise, in the real Hermitian basis.
#[derive(Debug, Clone)]
pub struct SledPropagator {
    basis: HermitianBasis,
    l0: Dense<f64>,
    lq: Dense<f64>,
}

impl SledPropagator {
    pub fn new(problem: &Problem) -> Self {
        let model = &problem.model;
        let bath = &problem.bath;
        let h = to_complex(&model.hamiltonian());
        let q = to_complex(&problem.q);
        let p = model.momentum_operator(&problem.q);
        let cq = commutator(&q);
        let l0 = commutator(&h).map(|z| -I * z)
            - (&cq * &cq).map(|z| z * bath.white_noise_strength())
            - (&cq * anticommutator(&p)).map(|z| I * z * (bath.kappa / 4.0));
        let lq = cq.map(|z| I * z);
        let basis = HermitianBasis::new(model.n_levels());
        Self {
            l0: Dense::from_matrix(&basis.real_superoperator(&l0)),
            lq: Dense::from_matrix(&basis.real_superoperator(&lq)),
            basis,
        }
    }

    pub fn basis(&self) -> &HermitianBasis {
        &self.basis
    }

    #[inline]
    fn step(&self, r: &mut [f64], coeff: f64, h: f64, m: &mut Dense<f64>, work: &mut ExpmvWork<f64>) {
        m.assign_combination(&self.l0, coeff, &self.lq);
        expmv(m, h, r, work);
    }
}

/// Propagator with the complex noise pair, acting on `vec(ρ)`.
#[derive(Debug, Clone)]
pub struct SlnPropagator {
    lh: Dense<Complex64>,
    cq: Dense<Complex64>,
    aq: Dense<Complex64>,
}

impl SlnPropagator {
    pub fn new(problem: &Problem) -> Self {
        let h = to_complex(&problem.model.hamiltonian());
        let q = to_complex(&problem.q);
        Self {
            lh: Dense::from_matrix(&commutator(&h).map(|z| -I * z)),
            cq: Dense::from_matrix(&commutator(&q).map(|z| I * z)),
            aq: Dense::from_matrix(&anticommutator(&q).map(|z| I * z)),
        }
    }

    #[inline]
    fn step(
        &self,
        v: &mut [Complex64],
        xi: Complex64,
        nu: Complex64,
        h: f64,
        m: &mut Dense<Complex64>,
        work: &mut ExpmvWork<Complex64>,
    ) {
        m.assign_sum(&self.lh, &[(xi, &self.cq), (nu, &self.aq)]);
        expmv(m, h, v, work);
    }
}

fn validate_state(rho: &CMat, n: usize) -> Result<()> {
    if rho.nrows() != n || rho.ncols() != n {
        return Err(invalid("initial", format!("expected a {n}×{n} density matrix")));
    }
    if (rho.trace() - 1.0).norm() > 1e-10 {
        return Err(invalid("initial", "trace must be 1"));
    }
    if (rho - rho.adjoint()).norm() > 1e-10 {
        return Err(invalid("initial", "must be Hermitian"));
    }
    Ok(())
}

fn check_runaway<T: nalgebra::ComplexField<RealField = f64> + Copy>(
    v: &[T],
    step: usize,
) -> Result<()> {
    let norm = v.iter().map(|x| x.modulus()).fold(0.0, f64::max);
    if norm > RUNAWAY_BOUND || !norm.is_finite() {
        return Err(Error::Runaway {
            step,
            norm,
            bound: RUNAWAY_BOUND,
        });
    }
    Ok(())
}

/// One SLED step on a density matrix, `ρ ↦ exp(h𝓛)ρ`, with the drive
/// coefficient of the problem's pulse evaluated at `t_mid`.
pub fn sled_step(problem: &Problem, rho: &CMat, xi: f64, t_mid: f64, h: f64) -> Result<CMat> {
    let prop = SledPropagator::new(problem);
    let mut r = prop.basis.real_coordinates(rho);
    let d = r.len();
    let mut m = Dense::zeros(d);
    let mut work = ExpmvWork::new(d);
    prop.step(&mut r, xi - problem.drive(t_mid), h, &mut m, &mut work);
    check_runaway(&r, 1)?;
    Ok(prop.basis.density_matrix(&r))
}

/// One SLN step on a density matrix.
pub fn sln_step(
    problem: &Problem,
    rho: &CMat,
    xi: Complex64,
    nu: Complex64,
    t_mid: f64,
    h: f64,
) -> Result<CMat> {
    let prop = SlnPropagator::new(problem);
    let n = problem.n_levels();
    let mut v = vectorize(rho);
    let mut m = Dense::zeros(n * n);
    let mut work = ExpmvWork::new(n * n);
    prop.step(&mut v, xi - problem.drive(t_mid), nu, h, &mut m, &mut work);
    check_runaway(&v, 1)?;
    Ok(unvectorize(&v, n))
}

enum Kernel {
    Sled {
        prop: SledPropagator,
        weights: Vec<Vec<f64>>,
        init: Vec<f64>,
    },
    Sln {
        prop: SlnPropagator,
        weights: Vec<Vec<Complex64>>,
        init: Vec<Complex64>,
    },
}

/// Compiled trajectory integrator: generators, observables, drive table and
/// noise synthesis, shared read-only between workers.
pub(crate) struct Engine {
    kernel: Kernel,
    noise: Option<NoiseGenerator>,
    h: f64,
    n_propagate: usize,
    stride: usize,
    drive: Vec<f64>,
    labels: Vec<String>,
}

pub(crate) struct Workspace {
    noise: Option<NoiseScratch>,
    xi_r: Vec<f64>,
    xi_c: Vec<Complex64>,
    nu: Vec<Complex64>,
    state_r: Vec<f64>,
    state_c: Vec<Complex64>,
    m_r: Dense<f64>,
    m_c: Dense<Complex64>,
    work_r: ExpmvWork<f64>,
    work_c: ExpmvWork<Complex64>,
}

impl Engine {
    fn build(
        problem: &Problem,
        method: Method,
        h: f64,
        n_steps: usize,
        initial: &CMat,
        observables: &[Observable],
        opts: TrajectoryOptions,
    ) -> Result<Self> {
        let n = problem.n_levels();
        validate_state(initial, n)?;
        if opts.record_stride == 0 {
            return Err(invalid("record_stride", "must be at least 1"));
        }
        let n_propagate = opts.n_propagate.unwrap_or(n_steps);
        if n_propagate > n_steps {
            return Err(invalid("n_propagate", "cannot exceed the noise grid length"));
        }
        let weights_c = observables
            .iter()
            .map(|o| o.weights(n))
            .collect::<Result<Vec<_>>>()?;
        let kernel = match method {
            Method::Sled => {
                let prop = SledPropagator::new(problem);
                let weights = weights_c
                    .iter()
                    .map(|c| prop.basis.real_functional(c))
                    .collect();
                let init = prop.basis.real_coordinates(initial);
                Kernel::Sled {
                    prop,
                    weights,
                    init,
                }
            }
            Method::Sln => Kernel::Sln {
                prop: SlnPropagator::new(problem),
                weights: weights_c,
                init: vectorize(initial),
            },
            Method::Lindblad => {
                return Err(invalid(
                    "method",
                    "the Lindblad baseline is deterministic; use lindblad_evolve",
                ))
            }
        };
        let drive = (0..n_propagate)
            .map(|l| problem.drive((l as f64 + 0.5) * h))
            .collect();
        Ok(Self {
            kernel,
            noise: None,
            h,
            n_propagate,
            stride: opts.record_stride,
            drive,
            labels: observables.iter().map(|o| o.label()).collect(),
        })
    }

    pub(crate) fn new(
        problem: &Problem,
        method: Method,
        grid: NoiseGrid,
        initial: &CMat,
        observables: &[Observable],
        opts: TrajectoryOptions,
    ) -> Result<Self> {
        grid.validate()?;
        let mut engine = Self::build(problem, method, grid.h, grid.n_steps, initial, observables, opts)?;
        let kind = match method {
            Method::Sled => NoiseKind::Sled,
            _ => NoiseKind::Sln,
        };
        engine.noise = Some(NoiseGenerator::new(&problem.bath, grid, kind)?);
        Ok(engine)
    }

    pub(crate) fn labels(&self) -> &[String] {
        &self.labels
    }

    pub(crate) fn n_observables(&self) -> usize {
        self.labels.len()
    }

    pub(crate) fn n_records(&self) -> usize {
        self.n_propagate / self.stride + 1
    }

    pub(crate) fn times(&self) -> Vec<f64> {
        (0..self.n_records())
            .map(|r| (r * self.stride) as f64 * self.h)
            .collect()
    }

    pub(crate) fn workspace(&self) -> Workspace {
        let (d, n_noise) = match &self.kernel {
            Kernel::Sled { init, .. } => (init.len(), self.n_propagate),
            Kernel::Sln { init, .. } => (init.len(), self.n_propagate),
        };
        let grid_len = self
            .noise
            .as_ref()
            .map(|g| g.grid().n_steps)
            .unwrap_or(n_noise);
        let zero = Complex64::new(0.0, 0.0);
        let sled = matches!(self.kernel, Kernel::Sled { .. });
        Workspace {
            noise: self.noise.as_ref().map(|g| g.scratch()),
            xi_r: if sled { vec![0.0; grid_len] } else { Vec::new() },
            xi_c: if sled { Vec::new() } else { vec![zero; grid_len] },
            nu: if sled { Vec::new() } else { vec![zero; grid_len] },
            state_r: vec![0.0; d],
            state_c: vec![zero; d],
            m_r: Dense::zeros(d),
            m_c: Dense::zeros(d),
            work_r: ExpmvWork::new(d),
            work_c: ExpmvWork::new(d),
        }
    }

    /// Draws the noise for `seed` and integrates; `out` is record-major.
    pub(crate) fn run(&self, seed: u64, ws: &mut Workspace, out: &mut [f64]) -> Result<()> {
        let gen = self.noise.as_ref().expect("engine built with a noise grid");
        let scratch = ws.noise.as_mut().expect("workspace has noise scratch");
        match &self.kernel {
            Kernel::Sled { .. } => {
                gen.fill_sled(seed, &mut ws.xi_r, scratch);
                let xi = std::mem::take(&mut ws.xi_r);
                let res = self.propagate_sled(&xi, ws, out);
                ws.xi_r = xi;
                res
            }
            Kernel::Sln { .. } => {
                gen.fill_sln(seed, &mut ws.xi_c, &mut ws.nu, scratch);
                let xi = std::mem::take(&mut ws.xi_c);
                let nu = std::mem::take(&mut ws.nu);
                let res = self.propagate_sln(&xi, &nu, ws, out);
                ws.xi_c = xi;
                ws.nu = nu;
                res
            }
        }
    }

    fn record_real(weights: &[Vec<f64>], state: &[f64], out: &mut [f64]) {
        for (o, w) in out.iter_mut().zip(weights) {
            *o = w.iter().zip(state).map(|(a, b)| a * b).sum();
        }
    }

    fn record_complex(weights: &[Vec<Complex64>], state: &[Complex64], out: &mut [f64]) {
        for (o, w) in out.iter_mut().zip(weights) {
            *o = w.iter().zip(state).map(|(a, b)| (a * b).re).sum();
        }
    }

    pub(crate) fn propagate_sled(&self, xi: &[f64], ws: &mut Workspace, out: &mut [f64]) -> Result<()> {
        let Kernel::Sled {
            prop,
            weights,
            init,
        } = &self.kernel
        else {
            return Err(invalid("method", "engine is not a SLED engine"));
        };
        if xi.len() < self.n_propagate {
            return Err(invalid("xi", "noise shorter than the propagation length"));
        }
        let n_obs = weights.len();
        let state = &mut ws.state_r;
        state.copy_from_slice(init);
        Self::record_real(weights, state, &mut out[..n_obs]);
        let mut rec = 1;
        for (l, (&x, &d)) in xi.iter().zip(&self.drive).take(self.n_propagate).enumerate() {
            prop.step(state, x - d, self.h, &mut ws.m_r, &mut ws.work_r);
            check_runaway(state, l + 1)?;
            if (l + 1) % self.stride == 0 {
                Self::record_real(weights, state, &mut out[rec * n_obs..(rec + 1) * n_obs]);
                rec += 1;
            }
        }
        Ok(())
    }

    pub(crate) fn propagate_sln(
        &self,
        xi: &[Complex64],
        nu: &[Complex64],
        ws: &mut Workspace,
        out: &mut [f64],
    ) -> Result<()> {
        let Kernel::Sln {
            prop,
            weights,
            init,
        } = &self.kernel
        else {
            return Err(invalid("method", "engine is not a SLN engine"));
        };
        if xi.len() < self.n_propagate || nu.len() < self.n_propagate {
            return Err(invalid("xi", "noise shorter than the propagation length"));
        }
        let n_obs = weights.len();
        let state = &mut ws.state_c;
        state.copy_from_slice(init);
        Self::record_complex(weights, state, &mut out[..n_obs]);
        let mut rec = 1;
        for l in 0..self.n_propagate {
            let c = xi[l] - self.drive[l];
            prop.step(state, c, nu[l], self.h, &mut ws.m_c, &mut ws.work_c);
            check_runaway(state, l + 1)?;
            if (l + 1) % self.stride == 0 {
                Self::record_complex(weights, state, &mut out[rec * n_obs..(rec + 1) * n_obs]);
                rec += 1;
            }
        }
        Ok(())
    }

    fn trajectory(&self, flat: Vec<f64>) -> Trajectory {
        let n_obs = self.n_observables();
        let values = (0..n_obs)
            .map(|o| flat.iter().skip(o).step_by(n_obs.max(1)).copied().collect())
            .collect();
        Trajectory {
            times: self.times(),
            labels: self.labels.clone(),
            values,
        }
    }
}

/// Integrates one trajectory with noise drawn from `seed`.
pub fn run_trajectory(
    problem: &Problem,
    grid: NoiseGrid,
    seed: u64,
    method: Method,
    initial: &CMat,
    observables: &[Observable],
    opts: TrajectoryOptions,
) -> Result<Trajectory> {
    let engine = Engine::new(problem, method, grid, initial, observables, opts)?;
    let mut ws = engine.workspace();
    let mut flat = vec![0.0; engine.n_records() * engine.n_observables()];
    engine.run(seed, &mut ws, &mut flat)?;
    Ok(engine.trajectory(flat))
}

/// Integrates one trajectory for a caller-supplied noise realisation with
/// step `h`; noise value `ℓ` drives step `ℓ`.
pub fn run_with_noise(
    problem: &Problem,
    h: f64,
    xi: &NoiseValues,
    nu: Option<&[Complex64]>,
    initial: &CMat,
    observables: &[Observable],
    opts: TrajectoryOptions,
) -> Result<Trajectory> {
    let method = if nu.is_some() { Method::Sln } else { Method::Sled };
    let engine = Engine::build(problem, method, h, xi.len(), initial, observables, opts)?;
    let mut ws = engine.workspace();
    let mut flat = vec![0.0; engine.n_records() * engine.n_observables()];
    match (xi, nu) {
        (NoiseValues::Real(x), None) => engine.propagate_sled(x, &mut ws, &mut flat)?,
        (_, Some(nu)) => {
            let x: Vec<Complex64> = (0..xi.len()).map(|i| xi.get(i)).collect();
            engine.propagate_sln(&x, nu, &mut ws, &mut flat)?
        }
        (NoiseValues::Complex(_), None) => {
            return Err(invalid("xi", "complex noise requires ν as well"))
        }
    }
    Ok(engine.trajectory(flat))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::BathSpec;
    use crate::model::ideal_qubit;
    use crate::solvers::{basis_state, Part};

    fn problem(kappa: f64, beta: f64) -> Problem {
        Problem::new(ideal_qubit(1.0).unwrap(), BathSpec::new(kappa, 50.0, beta, 1.0)).unwrap()
    }

    fn superposition() -> CMat {
        let mut rho = CMat::zeros(2, 2);
        rho[(0, 0)] = Complex64::new(0.3, 0.0);
        rho[(1, 1)] = Complex64::new(0.7, 0.0);
        rho[(0, 1)] = Complex64::new(0.2, 0.4);
        rho[(1, 0)] = Complex64::new(0.2, -0.4);
        rho
    }

    #[test]
    fn closed_system_step_is_unitary() {
        let p = problem(0.0, 5.0);
        let rho = superposition();
        let h = 0.3;
        let out = sled_step(&p, &rho, 0.0, 0.5 * h, h).unwrap();
        assert!((out[(0, 0)].re - 0.3).abs() < 1e-14);
        assert!((out[(1, 1)].re - 0.7).abs() < 1e-14);
        let phase = Complex64::from_polar(1.0, h);
        assert!((out[(0, 1)] - rho[(0, 1)] * phase).norm() < 1e-14);
        let sln = sln_step(&p, &rho, Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), 0.5 * h, h)
            .unwrap();
        assert!((sln - out).norm() < 1e-13);
    }

    #[test]
    fn sled_step_preserves_trace_and_hermiticity() {
        let p = problem(0.2, f64::INFINITY);
        let out = sled_step(&p, &superposition(), 3.7, 0.0, 0.05).unwrap();
        assert!((out.trace() - 1.0).norm() < 1e-14);
        assert!((&out - out.adjoint()).norm() < 1e-14);
    }

    #[test]
    fn sln_with_real_xi_and_zero_nu_preserves_trace() {
        let p = problem(0.2, 5.0);
        let out = sln_step(&p, &superposition(), Complex64::new(2.5, 0.0), Complex64::new(0.0, 0.0), 0.0, 0.05)
            .unwrap();
        assert!((out.trace() - 1.0).norm() < 1e-14);
    }

    #[test]
    fn sln_nu_drives_trace() {
        // d tr ρ/dt = 2iν tr(qρ)
        let p = problem(0.2, 5.0);
        let rho = superposition();
        let nu = Complex64::new(0.0, 0.3);
        let h = 1e-4;
        let out = sln_step(&p, &rho, Complex64::new(0.0, 0.0), nu, 0.0, h).unwrap();
        let q = to_complex(&p.q);
        let expect = 2.0 * I * nu * (q * &rho).trace();
        let rate = (out.trace() - 1.0) / h;
        assert!((rate - expect).norm() < 1e-3 * expect.norm());
    }

    #[test]
    fn step_halving_local_error_is_second_order() {
        let p = problem(0.2, 5.0);
        let rho = superposition();
        let xi = 4.0;
        let mut errs = Vec::new();
        for k in 0..4 {
            let h = 0.1 / 2f64.powi(k);
            let once = sled_step(&p, &rho, xi, 0.0, h).unwrap();
            let half = sled_step(&p, &sled_step(&p, &rho, xi, 0.0, h / 2.0).unwrap(), xi, 0.0, h / 2.0).unwrap();
            errs.push((once - half).norm());
        }
        // constant generator: exponential is exact, both agree to roundoff
        assert!(errs.iter().all(|&e| e < 1e-13));
        // with a drive the frozen-midpoint generator gives O(h³) local error
        let pd = problem(0.2, 5.0).with_pulse(crate::model::PulseSpec {
            g: 0.5,
            rise_time: 0.0,
            total_area: 100.0,
        }).unwrap();
        let mut errs = Vec::new();
        let mut hs = Vec::new();
        for k in 0..4 {
            let h = 0.2 / 2f64.powi(k);
            let once = sled_step(&pd, &rho, xi, 1.0 + h / 2.0, h).unwrap();
            let mid = sled_step(&pd, &rho, xi, 1.0 + h / 4.0, h / 2.0).unwrap();
            let half = sled_step(&pd, &mid, xi, 1.0 + 3.0 * h / 4.0, h / 2.0).unwrap();
            errs.push((once - half).norm());
            hs.push(h);
        }
        let slope = (errs[0] / errs[3]).ln() / (hs[0] / hs[3]).ln();
        assert!(slope > 1.8, "slope {slope}");
    }

    #[test]
    fn trajectory_shape_and_determinism() {
        let p = problem(0.2, 5.0);
        let grid = NoiseGrid::new(1.0 / 128.0, 256);
        let obs = [
            Observable::Population(0),
            Observable::Population(1),
            Observable::Coherence { row: 1, col: 0, part: Part::Re },
        ];
        let a = run_trajectory(&p, grid, 7, Method::Sled, &basis_state(2, 1), &obs, Default::default())
            .unwrap();
        assert_eq!(a.times.len(), 257);
        assert_eq!(a.values.len(), 3);
        assert!(a.values.iter().all(|v| v.len() == 257));
        let b = run_trajectory(&p, grid, 7, Method::Sled, &basis_state(2, 1), &obs, Default::default())
            .unwrap();
        assert_eq!(a, b);
        let strided = run_trajectory(
            &p,
            grid,
            7,
            Method::Sled,
            &basis_state(2, 1),
            &obs,
            TrajectoryOptions {
                record_stride: 4,
                n_propagate: Some(128),
            },
        )
        .unwrap();
        assert_eq!(strided.times.len(), 33);
        assert_eq!(strided.values[1][32], a.values[1][128]);
    }

    #[test]
    fn zero_coupling_matches_closed_propagator() {
        let p = problem(0.0, 5.0);
        let grid = NoiseGrid::new(1.0 / 128.0, 128);
        let obs = [Observable::Coherence { row: 0, col: 1, part: Part::Re }];
        let rho = superposition();
        for method in [Method::Sled, Method::Sln] {
            let t = run_trajectory(&p, grid, 1, method, &rho, &obs, Default::default()).unwrap();
            for (time, v) in t.times.iter().zip(&t.values[0]) {
                let exact = (rho[(0, 1)] * Complex64::from_polar(1.0, *time)).re;
                assert!((v - exact).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn invalid_initial_state_rejected() {
        let p = problem(0.2, 5.0);
        let mut rho = basis_state(2, 1);
        rho[(0, 0)] = Complex64::new(0.5, 0.0);
        let r = run_trajectory(&p, NoiseGrid::new(0.01, 16), 1, Method::Sled, &rho, &[], Default::default());
        assert!(r.is_err());
    }
}
