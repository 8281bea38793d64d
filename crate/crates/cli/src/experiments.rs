//! One function per experiment kind. Each returns a [`Report`] whose table
//! is written even when a sweep stops early.

use std::f64::consts::PI;

use num_complex::Complex64;
use stochastic_liouville::analytics::{
    lamb_shift_perturbative, renormalized_frequency, steady_excited_low_t, steady_sigma_z,
    two_bath_occupation, universal_excited_prob, universal_f, universal_f_asymptotic,
    universal_f_short, universal_f_thermal,
};
use stochastic_liouville::noise::{validate_noise, Correlator, NoiseGenerator, NoiseReport};
use stochastic_liouville::solvers::{
    basis_state, fit_damped_cosine, lindblad_evolve, lindblad_two_bath, pointer_state, run_ensemble,
    steady_batched, steady_window, steps_to_cover, EnsembleConfig, LindbladSpec, Problem,
};
use stochastic_liouville::{Method, Observable, PulseSpec};

use crate::config::{Experiment, ExperimentConfig};
use crate::output::{emit_benchmark, BenchmarkRow, Cell, Table, BENCHMARK_COLUMNS};
use crate::CliError;

#[derive(Debug)]
pub struct Report {
    pub table: Table,
    pub benchmark: Option<Table>,
    /// Statistical checks that did not pass (noise validation).
    pub failed_checks: usize,
    /// The error that cut a sweep short; `table.partial` carries its text.
    pub error: Option<CliError>,
}

impl Report {
    fn complete(table: Table) -> Self {
        Self {
            table,
            benchmark: None,
            failed_checks: 0,
            error: None,
        }
    }

    fn stop(&mut self, error: CliError) {
        self.table.partial = Some(error.to_string());
        self.error = Some(error);
    }
}

/// Validates `config` and runs the experiment it selects.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Report, CliError> {
    config.validate()?;
    match config.experiment()? {
        Experiment::Decay => decay(config),
        Experiment::SteadySweep => Ok(steady_sweep(config)),
        Experiment::Larmor => larmor(config),
        Experiment::Gate => Ok(gate(config)),
        Experiment::NoiseValidate => noise_validate(config),
        Experiment::UniversalCheck => universal_check(config),
        Experiment::TwoBath => two_bath(config),
    }
}

fn ensemble_config(
    config: &ExperimentConfig,
    n_grid: usize,
    n_propagate: usize,
    initial: stochastic_liouville::linalg::CMat,
    observables: Vec<Observable>,
    stride: usize,
) -> EnsembleConfig {
    let mut e = EnsembleConfig::new(config.noise_grid(n_grid), config.method, initial, observables);
    e.n_samples = config.sampling.n_samples;
    e.base_seed = config.sampling.base_seed;
    e.n_workers = config.sampling.workers;
    e.options.record_stride = stride;
    e.options.n_propagate = Some(n_propagate);
    e
}

/// Mean, standard error and time grid of one observable, from an ensemble
/// or (for the master equation) a single deterministic run.
struct Series {
    times: Vec<f64>,
    mean: Vec<f64>,
    stderr: Vec<f64>,
}

fn lindblad_series(problem: &Problem, config: &ExperimentConfig, initial: &stochastic_liouville::linalg::CMat, obs: &Observable, n_steps: usize, stride: usize) -> Result<Series, CliError> {
    let spec = LindbladSpec::from_bath(problem)?;
    let t = lindblad_evolve(problem, &spec, initial, config.grid.h, n_steps, std::slice::from_ref(obs), stride)?;
    let n = t.times.len();
    Ok(Series {
        times: t.times,
        mean: t.values.into_iter().next().unwrap_or_default(),
        stderr: vec![0.0; n],
    })
}

fn decay(config: &ExperimentConfig) -> Result<Report, CliError> {
    let kappa = config.bath.kappa;
    let problem = config.problem(kappa)?;
    let n = problem.n_levels();
    let initial = basis_state(n, 1);
    let ground = Observable::Population(0);
    let (n_steps, stride) = (config.grid.n_steps, config.grid.record_stride);

    let overlay = if config.decay.lindblad_overlay || config.method == Method::Lindblad {
        Some(lindblad_series(&problem, config, &initial, &ground, n_steps, stride)?)
    } else {
        None
    };
    let mut benchmark = None;
    let series = match config.method {
        Method::Lindblad => lindblad_series(&problem, config, &initial, &ground, n_steps, stride)?,
        _ => {
            let e = ensemble_config(config, n_steps, n_steps, initial, vec![ground], stride);
            let stats = run_ensemble(&problem, &e)?;
            let window = steady_window(&problem.bath);
            if window.1 <= *stats.times.last().unwrap_or(&0.0) {
                let mut t = Table::new(&BENCHMARK_COLUMNS);
                t.push(emit_benchmark(&stats, config, kappa, 0)?.cells());
                benchmark = Some(t);
            }
            Series {
                times: stats.times,
                mean: stats.mean.into_iter().next().unwrap_or_default(),
                stderr: stats.stderr.into_iter().next().unwrap_or_default(),
            }
        }
    };

    let mut table = Table::new(&["t", "one_minus_rho_g", "stderr", "universal", "lindblad"]);
    for (r, &t) in series.times.iter().enumerate() {
        let universal = if t <= config.decay.universal_until {
            Some(universal_excited_prob(&problem.bath, t)?)
        } else {
            None
        };
        let le = overlay.as_ref().map(|s| 1.0 - s.mean[r]);
        table.push(vec![
            t.into(),
            (1.0 - series.mean[r]).into(),
            series.stderr[r].into(),
            universal.into(),
            le.into(),
        ]);
    }
    let mut report = Report::complete(table);
    report.benchmark = benchmark;
    Ok(report)
}

fn steady_sweep(config: &ExperimentConfig) -> Report {
    let mut report = Report::complete(Table::new(&[
        "kappa",
        "rho_e",
        "stderr",
        "closed_form",
        "low_temperature",
        "n_samples",
        "n_clipped",
    ]));
    let mut bench = Table::new(&BENCHMARK_COLUMNS);
    for &kappa in &config.sweep.kappas {
        match steady_point(config, kappa) {
            Ok((row, b)) => {
                report.table.push(row);
                bench.push(b.cells());
            }
            Err(e) => {
                report.stop(e);
                break;
            }
        }
    }
    report.benchmark = Some(bench);
    report
}

fn steady_point(config: &ExperimentConfig, kappa: f64) -> Result<(Vec<Cell>, BenchmarkRow), CliError> {
    let problem = config.problem(kappa)?;
    let window = steady_window(&problem.bath);
    let stride = config.grid.record_stride;
    let steps = steps_to_cover(window.1, config.grid.h, stride);
    let e = ensemble_config(
        config,
        steps.next_power_of_two().max(2),
        steps,
        basis_state(problem.n_levels(), 0),
        vec![Observable::Population(1)],
        stride,
    );
    let est = steady_batched(&problem, &e, 0, window, config.sampling.n_batches)?;
    let closed = steady_sigma_z(kappa / PI, 1.0, config.bath.omega_c, config.bath.beta)
        .ok()
        .map(|s| s.rho_e);
    let low_t = steady_excited_low_t(kappa, 1.0, config.bath.omega_c).ok();
    let row = vec![
        kappa.into(),
        est.mean.into(),
        est.stderr.into(),
        closed.into(),
        low_t.into(),
        est.n_samples.into(),
        est.n_clipped.into(),
    ];
    Ok((row, BenchmarkRow::from_steady(&est, config, kappa)?))
}

fn larmor(config: &ExperimentConfig) -> Result<Report, CliError> {
    let kappa = config.bath.kappa;
    let problem = config.problem(kappa)?;
    let n = problem.n_levels();
    let stride = config.grid.record_stride;
    let steps = steps_to_cover(config.larmor.t_end, config.grid.h, stride);
    let sx = Observable::sigma_x(n);
    let series = match config.method {
        Method::Lindblad => lindblad_series(&problem, config, &pointer_state(n), &sx, steps, stride)?,
        _ => {
            let e = ensemble_config(config, steps.next_power_of_two().max(2), steps, pointer_state(n), vec![sx], stride);
            let stats = run_ensemble(&problem, &e)?;
            Series {
                times: stats.times,
                mean: stats.mean.into_iter().next().unwrap_or_default(),
                stderr: stats.stderr.into_iter().next().unwrap_or_default(),
            }
        }
    };
    let (times, values): (Vec<f64>, Vec<f64>) = series
        .times
        .iter()
        .zip(&series.mean)
        .filter(|(&t, _)| t >= config.larmor.fit_from)
        .map(|(&t, &x)| (t, x))
        .unzip();
    let fit = fit_damped_cosine(&values, &times)?;
    let k = kappa / PI;
    let omega = renormalized_frequency(k, 1.0, config.bath.omega_c, config.bath.beta)
        .ok()
        .map(|p| p.omega);
    let perturbative = lamb_shift_perturbative(k, 1.0, config.bath.omega_c, config.bath.cutoff);
    let mut table = Table::new(&[
        "omega_fit",
        "omega_fit_stderr",
        "decay_rate",
        "amplitude",
        "omega_renormalized",
        "omega_perturbative",
        "relative_deviation",
    ]);
    table.push(vec![
        fit.frequency.into(),
        fit.frequency_stderr().into(),
        fit.decay_rate.into(),
        fit.amplitude.into(),
        omega.into(),
        perturbative.into(),
        omega.map(|w| fit.frequency / w - 1.0).into(),
    ]);
    Ok(Report::complete(table))
}

fn gate(config: &ExperimentConfig) -> Report {
    let mut report = Report::complete(Table::new(&[
        "kappa_over_g",
        "kappa",
        "lindblad_error",
        "error",
        "stderr",
    ]));
    for &ratio in &config.gate.kappa_over_g {
        match gate_point(config, ratio) {
            Ok(row) => report.table.push(row),
            Err(e) => {
                report.stop(e);
                break;
            }
        }
    }
    report
}

fn gate_point(config: &ExperimentConfig, ratio: f64) -> Result<Vec<Cell>, CliError> {
    let g = config.gate.g;
    let kappa = ratio * g;
    let pulse = PulseSpec {
        g,
        rise_time: config.gate.rise_time.unwrap_or(PI / (10.0 * g)),
        total_area: PI,
    };
    let problem = config.problem(kappa)?.with_pulse(pulse)?;
    let n = problem.n_levels();
    let steps = steps_to_cover(pulse.duration(), config.grid.h, 1);
    let excited = Observable::Population(1);
    let le = lindblad_series(&problem, config, &basis_state(n, 1), &excited, steps, steps)?;
    let le_error = *le.mean.last().unwrap_or(&f64::NAN);
    let (error, stderr) = match config.method {
        Method::Lindblad => (le_error, 0.0),
        _ => {
            let e = ensemble_config(config, steps.next_power_of_two().max(2), steps, basis_state(n, 1), vec![excited], steps);
            let stats = run_ensemble(&problem, &e)?;
            (
                *stats.mean[0].last().unwrap_or(&f64::NAN),
                *stats.stderr[0].last().unwrap_or(&f64::NAN),
            )
        }
    };
    Ok(vec![ratio.into(), kappa.into(), le_error.into(), error.into(), stderr.into()])
}

fn correlator_name(c: Correlator) -> &'static str {
    match c {
        Correlator::XiXi => "xi_xi",
        Correlator::XiNu => "xi_nu",
        Correlator::NuNu => "nu_nu",
    }
}

fn noise_validate(config: &ExperimentConfig) -> Result<Report, CliError> {
    let bath = config.bath_spec(config.bath.kappa);
    let grid = config.noise_grid(config.grid.n_steps);
    let h = grid.h;
    let reference = config.noise.reference.unwrap_or(grid.n_steps / 2);
    let lags = &config.noise.lags;
    let z = config.noise.z_threshold;
    let generator = match config.method {
        Method::Sln => NoiseGenerator::sln(&bath, grid)?,
        _ => NoiseGenerator::sled(&bath, grid)?,
    };
    let seeds = config.sampling.base_seed..config.sampling.base_seed + config.sampling.n_samples as u64;
    let samples: Vec<_> = seeds.map(|s| generator.generate(s)).collect();

    let mut reports: Vec<NoiseReport> = Vec::new();
    if config.method == Method::Sled {
        let target = lags
            .iter()
            .map(|&l| Ok(Complex64::new(bath.sled_noise_correlation(l as f64 * h)?, 0.0)))
            .collect::<Result<Vec<_>, CliError>>()?;
        reports.push(validate_noise(&samples, Correlator::XiXi, reference, lags, &target, z)?);
    } else {
        let xixi = lags
            .iter()
            .map(|&l| Ok(Complex64::new(bath.correlation_function(l as f64 * h)?.re, 0.0)))
            .collect::<Result<Vec<_>, CliError>>()?;
        reports.push(validate_noise(&samples, Correlator::XiXi, reference, lags, &xixi, z)?);
        // the equal-time cross value depends on the step-function convention
        let cross_lags: Vec<isize> = lags.iter().copied().filter(|&l| l != 0).collect();
        if !cross_lags.is_empty() {
            let cross = cross_lags
                .iter()
                .map(|&l| {
                    Ok(if l > 0 {
                        Complex64::new(0.0, bath.correlation_function(l as f64 * h)?.im)
                    } else {
                        Complex64::new(0.0, 0.0)
                    })
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            reports.push(validate_noise(&samples, Correlator::XiNu, reference, &cross_lags, &cross, z)?);
        }
        let zeros = vec![Complex64::new(0.0, 0.0); lags.len()];
        reports.push(validate_noise(&samples, Correlator::NuNu, reference, lags, &zeros, z)?);
    }

    let mut table = Table::new(&[
        "correlator",
        "lag",
        "tau",
        "mean_re",
        "mean_im",
        "target_re",
        "target_im",
        "stderr_re",
        "stderr_im",
        "z",
        "pass",
    ]);
    let mut failed = 0;
    for rep in &reports {
        for l in &rep.lags {
            let pass = l.z <= rep.z_threshold;
            failed += usize::from(!pass);
            table.push(vec![
                correlator_name(rep.correlator).into(),
                Cell::Text(l.lag.to_string()),
                (l.lag as f64 * h).into(),
                l.mean[0].into(),
                l.mean[1].into(),
                l.target[0].into(),
                l.target[1].into(),
                l.stderr[0].into(),
                l.stderr[1].into(),
                l.z.into(),
                pass.into(),
            ]);
        }
    }
    let mut report = Report::complete(table);
    report.failed_checks = failed;
    Ok(report)
}

fn universal_check(config: &ExperimentConfig) -> Result<Report, CliError> {
    let bath = config.bath_spec(config.bath.kappa);
    let mut table = Table::new(&[
        "t",
        "omega_c_t",
        "f",
        "f_short",
        "f_asymptotic",
        "f_thermal",
        "excited_prob",
    ]);
    let n = config.universal.n_points;
    for i in 1..=n {
        let t = config.universal.t_max * i as f64 / n as f64;
        let f = universal_f(&bath, t)?;
        table.push(vec![
            t.into(),
            (bath.omega_c * t).into(),
            f.into(),
            universal_f_short(&bath, t).into(),
            universal_f_asymptotic(&bath, t).into(),
            universal_f_thermal(bath.beta, t).into(),
            universal_excited_prob(&bath, t)?.into(),
        ]);
    }
    Ok(Report::complete(table))
}

fn two_bath(config: &ExperimentConfig) -> Result<Report, CliError> {
    let c = &config.two_bath;
    let result = lindblad_two_bath(1.0, c.kappa, c.n_ee, c.gamma, c.n_i, &c.initial, c.dt, c.n_steps)?;
    let steady = two_bath_occupation(c.kappa, c.n_ee, c.gamma, c.n_i)?;
    let mut table = Table::new(&["t", "occupation", "steady_occupation"]);
    for (&t, &occ) in result.times.iter().zip(&result.occupation) {
        table.push(vec![t.into(), occ.into(), steady.into()]);
    }
    Ok(Report::complete(table))
}
