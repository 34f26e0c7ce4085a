//! Reference solves, order fitting and experiment artifacts on coarse meshes.

use walllaw::fem::{norm, NormKind, DEFAULT_NORM_DEGREE};
use walllaw::lab::*;
use walllaw::profile::RoughnessProfile;

fn coarse() -> ExperimentPlan {
    ExperimentPlan {
        refinements: 0,
        reference_extra_refinements: 0,
        cell_resolution: walllaw::cell::CellResolution {
            refinements: 0,
            ..Default::default()
        },
        epsilons: vec![0.5, 0.4, 0.3, 0.25],
        families: vec!["U0".parse().unwrap(), "U1_analytic".parse().unwrap(), "FirstFull".parse().unwrap()],
        ..Default::default()
    }
}

#[test]
fn flat_reference_is_the_taller_poiseuille() {
    let plan = ExperimentPlan {
        profile: RoughnessProfile::flat(0.05).unwrap(),
        ..coarse()
    };
    let eps = 0.3;
    let d = plan.reference_dofs(eps).unwrap();
    let u = solve_reference_on(&d, 2.0).unwrap();
    for (p, v) in d.coords().iter().zip(u.values()) {
        let exact = (1.0 - p[1]) * (p[1] + eps * 0.05);
        assert!((v - exact).abs() < 1e-10, "{p:?}: {v} vs {exact}");
    }
}

#[test]
fn slip_moves_the_maximum_below_the_centre_line() {
    let plan = coarse();
    let eps = 0.5;
    let d = plan.reference_dofs(eps).unwrap();
    let u = solve_reference_on(&d, 1.0).unwrap();
    let (i, _) = u
        .values()
        .iter()
        .enumerate()
        .fold((0, f64::MIN), |b, (i, &v)| if v > b.1 { (i, v) } else { b });
    let x2 = d.coords()[i][1];
    assert!(x2 < 0.5 && x2 > 0.5 - eps, "maximum at x2 = {x2}");
}

#[test]
fn reference_self_convergence() {
    let plan = ExperimentPlan::default();
    let eps = 0.3;
    let a = solve_reference(&plan, eps).unwrap();
    let fine = ExperimentPlan {
        reference_extra_refinements: plan.reference_extra_refinements + 1,
        ..ExperimentPlan::default()
    };
    let b = solve_reference(&fine, eps).unwrap();
    let na = norm(a.mesh(), &a, NormKind::L2, DEFAULT_NORM_DEGREE).unwrap();
    let nb = norm(b.mesh(), &b, NormKind::L2, DEFAULT_NORM_DEGREE).unwrap();
    assert!((na - nb).abs() / nb <= 1e-4, "{na} vs {nb}");
}

#[test]
fn fit_of_jittered_linear_errors() {
    let pts: Vec<(f64, f64)> = DEFAULT_EPSILONS
        .iter()
        .enumerate()
        .map(|(k, &e)| (e, e * (1.0 + 0.01 * (k as f64).sin())))
        .collect();
    let (a, r) = fit_order(&pts).unwrap();
    assert!((a - 1.0).abs() <= 0.02, "{a}");
    assert!(r < 0.01);
}

#[test]
fn experiment_writes_deterministic_artifacts() {
    let plan = coarse();
    let cells = solve_cells(&plan).unwrap();
    let a = run_experiment_with(&plan, &cells).unwrap();
    let b = run_experiment_with(&plan, &cells).unwrap();
    assert!(a.all_ok());
    assert_eq!(a.errors_csv(), b.errors_csv());
    assert_eq!(a.orders_csv(), b.orders_csv());

    let dir = tempfile::tempdir().unwrap();
    a.write(dir.path()).unwrap();
    let errors = std::fs::read_to_string(dir.path().join("errors.csv")).unwrap();
    let mut lines = errors.lines();
    assert_eq!(lines.next(), Some("family,epsilon,l2_error,h1semi_error"));
    assert_eq!(lines.count(), 3 * 4);
    let orders = std::fs::read_to_string(dir.path().join("orders.csv")).unwrap();
    assert!(orders.starts_with("family,alpha,fit_residual\nU0,"));
    let manifest = std::fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
    for key in ["interpolation", "norm_scaling", "fit", "beta_trace_checksum", "status[U0] = ok", "cell_height"] {
        assert!(manifest.contains(key), "manifest lacks {key}");
    }
    // the slip-corrected law beats Poiseuille everywhere
    let u0 = a.record("U0".parse().unwrap()).unwrap();
    let u1 = a.record("U1_analytic".parse().unwrap()).unwrap();
    for &(e, v) in &u1.errors {
        assert!(v < u0.error_at(e).unwrap());
    }
}
