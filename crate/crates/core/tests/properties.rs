use num_complex::Complex64;
use proptest::prelude::*;
use redfield_aqc::bath::{Bath, CorrelationGrid, OhmicBath, PhaseSign, StructuredBath, Temperature};
use redfield_aqc::dynamics::{integrate, DensityState, Formulation, IntegratorConfig};
use redfield_aqc::problem::{AdiabaticProblem, Schedule};
use redfield_aqc::rates::{rates_at, RateMode};

fn problem_strategy() -> impl Strategy<Value = AdiabaticProblem> {
    prop_oneof![
        (1u32..=12).prop_map(|n| AdiabaticProblem::grover(n).unwrap()),
        (0.05f64..0.95).prop_map(|a| AdiabaticProblem::single_site(a).unwrap()),
    ]
}

fn thermal(eta: f64) -> Bath {
    Bath::Ohmic(OhmicBath::ohmic(eta, 0.25, Temperature::Zero).unwrap())
}

proptest! {
    #[test]
    fn gap_is_hypot(problem in problem_strategy(), s in 0.0f64..=1.0) {
        let (d, o) = (problem.delta(s), problem.omega(s));
        let a = problem.gap(s);
        prop_assert!((a * a - d * d - o * o).abs() <= 1e-12 * (1.0 + a * a));
        let (_, gmin) = problem.min_gap();
        prop_assert!(a >= gmin * (1.0 - 1e-9));
    }

    #[test]
    fn schedules_run_from_zero_to_one(
        problem in problem_strategy(),
        total in 1.0f64..500.0,
        optimal in any::<bool>(),
        fractions in prop::collection::vec(0.0f64..=1.0, 2..20),
    ) {
        let schedule = if optimal {
            Schedule::optimal(total, &problem).unwrap()
        } else {
            Schedule::linear(total).unwrap()
        };
        prop_assert!(schedule.s(0.0).unwrap().abs() < 1e-12);
        prop_assert!((schedule.s(total).unwrap() - 1.0).abs() < 1e-9);
        let mut ts: Vec<f64> = fractions.iter().map(|f| f * total).collect();
        ts.sort_by(f64::total_cmp);
        let s: Vec<f64> = ts.iter().map(|&t| schedule.s(t).unwrap()).collect();
        prop_assert!(s.windows(2).all(|w| w[1] >= w[0] - 1e-12));
        for &t in &ts {
            prop_assert!(schedule.sdot(t).unwrap() > 0.0);
        }
    }

    #[test]
    fn bloch_round_trip(x in -1.0f64..1.0, y in -1.0f64..1.0, z in -1.0f64..1.0) {
        let state = DensityState::from_bloch([x, y, z]);
        let back = state.bloch();
        for (a, b) in back.iter().zip([x, y, z]) {
            prop_assert!((a - b).abs() < 1e-15);
        }
        prop_assert!((state.bloch_norm_sq() - (x * x + y * y + z * z)).abs() < 1e-14);
        let m = state.matrix();
        prop_assert!((m[(0, 0)].re + m[(1, 1)].re - 1.0).abs() < 1e-15);
        prop_assert!((m[(0, 1)] - m[(1, 0)].conj()).norm() < 1e-15);
    }

    #[test]
    fn rates_scale_linearly_with_coupling(
        eta in 0.001f64..1.0,
        scale in 0.1f64..10.0,
        t in 0.5f64..20.0,
        alpha in 0.05f64..1.0,
        structured in any::<bool>(),
    ) {
        let base = if structured {
            Bath::Structured(StructuredBath::new(eta, 0.25, 0.2, PhaseSign::Plus).unwrap())
        } else {
            thermal(eta)
        };
        let scaled = base.with_coupling(eta * scale);
        let step = base.max_grid_step(1.0);
        let g1 = CorrelationGrid::build(base, 20.0, step, 0.0, 1.0, 1 << 20).unwrap();
        let g2 = CorrelationGrid::build(scaled, 20.0, step, 0.0, 1.0, 1 << 20).unwrap();
        let r1 = rates_at(&g1, t, alpha, RateMode::Complex).unwrap();
        let r2 = rates_at(&g2, t, alpha, RateMode::Complex).unwrap();
        let close = |a: Complex64, b: Complex64| (a * scale - b).norm() <= 1e-12 * (1.0 + b.norm());
        prop_assert!(close(r1.g00, r2.g00));
        prop_assert!(close(r1.g01, r2.g01));
        prop_assert!(close(r1.g10, r2.g10));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn closed_formulations_agree(
        problem in problem_strategy(),
        total in 2.0f64..60.0,
        optimal in any::<bool>(),
    ) {
        let schedule = if optimal {
            Schedule::optimal(total, &problem).unwrap()
        } else {
            Schedule::linear(total).unwrap()
        };
        let run = |f: Formulation| {
            let config = IntegratorConfig::default().with_formulation(f);
            integrate(&problem, &schedule, None, RateMode::Complex, &config).unwrap()
        };
        let matrix = run(Formulation::MatrixRedfield);
        let bloch = run(Formulation::BlochPaper);
        let unitary = run(Formulation::ClosedUnitary);
        let p = matrix.final_success();
        prop_assert!((p - bloch.final_success()).abs() < 1e-6);
        prop_assert!((p - unitary.final_success()).abs() < 1e-6);
        prop_assert!((matrix.final_point().state.bloch_norm_sq() - 1.0).abs() < 1e-6);
    }
}

#[test]
fn weak_coupling_response_is_linear() {
    let problem = AdiabaticProblem::grover(4).unwrap();
    let schedule = Schedule::linear(20.0).unwrap();
    let config = IntegratorConfig::default();
    let p0 = |eta: f64| {
        let bath = thermal(eta);
        integrate(&problem, &schedule, Some(&bath), RateMode::Complex, &config)
            .unwrap()
            .final_success()
    };
    let closed = integrate(&problem, &schedule, None, RateMode::Complex, &config)
        .unwrap()
        .final_success();
    let ratio = (p0(0.01) - closed) / (p0(0.005) - closed);
    assert!((1.8..=2.2).contains(&ratio.abs()), "ratio {ratio}");
}
