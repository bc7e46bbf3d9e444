mod common;

use friction_stokes::analysis::{
    h1_distance, l2_pressure_distance, run_convergence_study, solve_level, threshold_experiment,
    ConvergenceStudy, DiscreteField, PressureNormalization, StudyConfig, SLIP_THRESHOLD,
};
use friction_stokes::assembly::{interpolate_pressure, interpolate_velocity, ManufacturedCase};
use friction_stokes::mesh::build_friedrichs_keller;
use friction_stokes::spaces::BcKind;
use friction_stokes::uzawa::StepScaling;
use rand::Rng;
use std::sync::OnceLock;

fn fallback_sbcf() -> &'static ConvergenceStudy {
    static STUDY: OnceLock<ConvergenceStudy> = OnceLock::new();
    STUDY.get_or_init(|| run_convergence_study(&StudyConfig::fallback(BcKind::Sbcf, 0.8)).unwrap())
}

fn small_config(bc: BcKind, g: f64) -> StudyConfig {
    StudyConfig {
        levels: vec![5, 10],
        reference: 20,
        ..StudyConfig::new(bc, g)
    }
}

#[test]
fn fallback_study_shape_and_velocity_rate() {
    let s = fallback_sbcf();
    assert_eq!(s.rows.iter().map(|r| r.n).collect::<Vec<_>>(), [10, 20, 40]);
    assert!(s.rows.windows(2).all(|w| w[1].h1_error < w[0].h1_error));
    let slope = s.h1_slope().unwrap();
    assert!(slope >= 1.8, "H1 slope {slope}");
    let csv = s.to_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "N,h,h1_error,h1_rate,l2_error,l2_rate,k_itr");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("10,1.00000e-1,"));
}

#[test]
fn velocity_errors_track_interpolation() {
    let case = ManufacturedCase::default();
    for row in &fallback_sbcf().rows {
        let mesh = build_friedrichs_keller(row.n).unwrap();
        let v = interpolate_velocity(&mesh, |p| case.velocity(p));
        let p = interpolate_pressure(&mesh, |x| case.pressure(x));
        let field = DiscreteField::new(mesh.clone(), &v, &p).unwrap();
        let interp = h1_distance(&mesh, &field, &case);
        let ratio = row.h1_error / interp;
        assert!((0.1..=10.0).contains(&ratio), "N={}: {} vs {interp}", row.n, row.h1_error);
    }
}

#[test]
fn studies_are_bitwise_reproducible() {
    for (bc, g) in [(BcKind::Sbcf, 0.8), (BcKind::Lbcf, 1.2)] {
        let a = run_convergence_study(&small_config(bc, g)).unwrap();
        let b = run_convergence_study(&small_config(bc, g)).unwrap();
        for (x, y) in a.rows.iter().zip(&b.rows) {
            assert_eq!(x.h1_error.to_bits(), y.h1_error.to_bits());
            assert_eq!(x.l2_error.to_bits(), y.l2_error.to_bits());
        }
        assert_eq!(a.to_csv(), b.to_csv());
    }
}

#[test]
fn single_level_has_empty_rates() {
    let config = StudyConfig {
        levels: vec![10],
        ..small_config(BcKind::Sbcf, 0.8)
    };
    let s = run_convergence_study(&config).unwrap();
    assert_eq!(s.rows.len(), 1);
    assert!(s.rows[0].h1_error > 0.0 && s.rows[0].l2_error > 0.0);
    assert!(s.rows[0].h1_rate.is_none() && s.rows[0].l2_rate.is_none());
    assert!(s.h1_slope().is_none());
    assert!(s.to_csv().lines().nth(1).unwrap().contains(",,"));
}

#[test]
fn rejects_non_nested_and_unordered_levels() {
    let bad_ref = StudyConfig {
        levels: vec![10, 15],
        reference: 40,
        ..StudyConfig::new(BcKind::Sbcf, 0.8)
    };
    assert!(run_convergence_study(&bad_ref).is_err());
    let unordered = StudyConfig {
        levels: vec![20, 10],
        reference: 40,
        ..StudyConfig::new(BcKind::Sbcf, 0.8)
    };
    assert!(run_convergence_study(&unordered).is_err());
}

#[test]
fn error_functionals_are_symmetric_and_subadditive() {
    let mut r = common::rng(20);
    for bc in [BcKind::Sbcf, BcKind::Lbcf] {
        let sols: Vec<_> = (0..3)
            .map(|_| solve_level(10, &small_config(bc, r.random_range(0.2..3.0))).unwrap())
            .collect();
        let f: Vec<DiscreteField> = sols.iter().map(|s| DiscreteField::from_solution(s).unwrap()).collect();
        let mesh = f[0].mesh().clone();
        let h1 = |i: usize, j: usize| h1_distance(&mesh, &f[i], &f[j]);
        for norm in [PressureNormalization::default(), PressureNormalization::MeanZero] {
            let l2 = |i: usize, j: usize| l2_pressure_distance(&mesh, &f[i], &f[j], norm.shift(&mesh, &f[i], &f[j]));
            for d in [&h1 as &dyn Fn(usize, usize) -> f64, &l2] {
                assert!((d(0, 1) - d(1, 0)).abs() <= 1e-12 * (1.0 + d(0, 1)));
                assert!(d(0, 2) <= d(0, 1) + d(1, 2) + 1e-12);
                assert!(d(1, 2) <= d(1, 0) + d(0, 2) + 1e-12);
                assert!(d(0, 0) <= 1e-14);
            }
        }
    }
}

#[test]
fn larger_friction_never_moves_the_boundary_more() {
    let g = [0.1, 0.4, 0.8, 1.2, 2.0, 3.0];
    for bc in [BcKind::Sbcf, BcKind::Lbcf] {
        let report = threshold_experiment(bc, &g, 10, StepScaling::default()).unwrap();
        // Speeds below the rest threshold are iteration residue, not motion.
        assert!(report.is_monotone(SLIP_THRESHOLD), "{bc}: {}", report.to_csv());
    }
}

#[test]
fn weak_leak_has_inflow_and_outflow() {
    let report = threshold_experiment(BcKind::Lbcf, &[0.1], 10, StepScaling::default()).unwrap();
    let e = &report.entries[0];
    assert!(e.max_trace_speed > 1e-3);
    assert!(e.positive > 0 && e.negative > 0, "{e:?}");
}

#[test]
fn strong_friction_sticks_everywhere() {
    let report = threshold_experiment(BcKind::Sbcf, &[2.0], 10, StepScaling::default()).unwrap();
    assert_eq!(report.entries[0].stick, 19);
}
