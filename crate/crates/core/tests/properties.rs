use num_complex::Complex64;
use proptest::prelude::*;
use stochastic_liouville::analytics::excited_prob_from_f;
use stochastic_liouville::bath::bose_occupation;
use stochastic_liouville::linalg::{CMat, HermitianBasis};
use stochastic_liouville::model::ideal_qubit;
use stochastic_liouville::solvers::{sled_step, LindbladSpec, Problem};
use stochastic_liouville::{BathSpec, PulseSpec};

fn hermitian(n: usize, entries: &[f64]) -> CMat {
    let mut m = CMat::zeros(n, n);
    let mut it = entries.iter().copied();
    for j in 0..n {
        m[(j, j)] = Complex64::new(it.next().unwrap(), 0.0);
        for k in j + 1..n {
            let z = Complex64::new(it.next().unwrap(), it.next().unwrap());
            m[(j, k)] = z;
            m[(k, j)] = z.conj();
        }
    }
    m
}

proptest! {
    #[test]
    fn pulse_envelope_integrates_to_requested_area(
        g in 0.01f64..2.0,
        rise_fraction in 0.0f64..0.9,
        area in 0.1f64..10.0,
    ) {
        let rise_time = rise_fraction * area / g;
        let pulse = PulseSpec { g, rise_time, total_area: area };
        prop_assume!(pulse.validate().is_ok());
        // the envelope is piecewise linear, so the trapezoid rule is exact
        // on a grid that contains the kinks
        let kinks = [0.0, rise_time, pulse.duration() - rise_time, pulse.duration()];
        let integral: f64 = kinks
            .windows(2)
            .map(|w| 0.5 * (w[1] - w[0]) * (pulse.envelope(w[0]) + pulse.envelope(w[1])))
            .sum();
        prop_assert!((integral - area).abs() < 1e-9 * area);
    }

    #[test]
    fn golden_rule_rates_obey_detailed_balance(
        kappa in 1e-4f64..0.5,
        omega_c in 2.0f64..100.0,
        beta in 0.05f64..20.0,
    ) {
        let problem = Problem::new(
            ideal_qubit(1.0).unwrap(),
            BathSpec::new(kappa, omega_c, beta, 1.0),
        ).unwrap();
        let spec = LindbladSpec::from_bath(&problem).unwrap();
        let ratio = spec.rate(0, 1) / spec.rate(1, 0);
        prop_assert!((ratio / (-beta).exp() - 1.0).abs() < 1e-10, "ratio {}", ratio);
    }

    #[test]
    fn occupation_continuation_is_antisymmetric(beta in 0.01f64..50.0, omega in 1e-3f64..10.0) {
        let up = bose_occupation(beta, omega).unwrap();
        let down = bose_occupation(beta, -omega).unwrap();
        prop_assert!(up >= 0.0);
        prop_assert!((up + down + 1.0).abs() < 1e-12 * (1.0 + up));
    }

    #[test]
    fn hermitian_coordinates_round_trip(
        n in 2usize..5,
        entries in prop::collection::vec(-1.0f64..1.0, 16),
    ) {
        let rho = hermitian(n, &entries);
        let basis = HermitianBasis::new(n);
        let r = basis.real_coordinates(&rho);
        prop_assert_eq!(r.len(), basis.dim());
        let back = basis.density_matrix(&r);
        prop_assert!((back - &rho).norm() < 1e-14);
    }

    #[test]
    fn sled_step_keeps_trace_and_hermiticity(
        xi in -50.0f64..50.0,
        t_mid in 0.0f64..10.0,
        h in 1e-3f64..0.1,
        entries in prop::collection::vec(-1.0f64..1.0, 4),
    ) {
        let problem = Problem::new(
            ideal_qubit(1.0).unwrap(),
            BathSpec::new(0.2, 50.0, 5.0, 1.0),
        ).unwrap();
        let rho = hermitian(2, &entries);
        let next = sled_step(&problem, &rho, xi, t_mid, h).unwrap();
        prop_assert!((next.trace() - rho.trace()).norm() < 1e-12);
        prop_assert!((&next - next.adjoint()).norm() < 1e-12);
    }

    #[test]
    fn pure_dephasing_population_decays_monotonically_to_half(
        k in 0.0f64..0.49,
        f in 0.0f64..50.0,
        df in 0.0f64..5.0,
    ) {
        let p = excited_prob_from_f(k, f);
        prop_assert!((0.5..=1.0).contains(&p), "p = {}", p);
        prop_assert!(excited_prob_from_f(k, f + df) <= p);
    }
}
