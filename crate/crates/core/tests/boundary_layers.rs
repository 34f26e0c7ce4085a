//! Composite approximations built from coarse cell solutions.

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use walllaw::boundary_layers::*;
use walllaw::cell::{solve_cell_first, solve_cell_second, CellResolution, CellSolution};
use walllaw::profile::RoughnessProfile;
use walllaw::wall_laws::closed_form;

struct Cells {
    beta: Arc<CellSolution>,
    gamma: Arc<CellSolution>,
    profile: RoughnessProfile,
}

fn cells() -> &'static Cells {
    static CELLS: OnceLock<Cells> = OnceLock::new();
    CELLS.get_or_init(|| {
        let profile = RoughnessProfile::cosine(0.05).unwrap();
        let res = CellResolution {
            refinements: 0,
            ..CellResolution::default()
        };
        Cells {
            beta: Arc::new(solve_cell_first(&profile, 10.0, &res).unwrap()),
            gamma: Arc::new(solve_cell_second(&profile, 10.0, &res).unwrap()),
            profile,
        }
    })
}

/// SplitMix64, enough for scattering test points.
fn uniform(state: &mut u64) -> f64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    (z ^ (z >> 31)) as f64 / u64::MAX as f64
}

#[test]
fn expanded_and_compact_forms_agree_on_the_smooth_part() {
    let c = cells();
    let mut seed = 7;
    for eps in [0.1, 0.37] {
        let first = build_first_full(1.0, eps, c.beta.clone()).unwrap();
        let second = build_second_full(1.0, eps, c.beta.clone(), c.gamma.clone()).unwrap();
        for _ in 0..500 {
            let x = [2.0 * PI * eps * uniform(&mut seed), uniform(&mut seed)];
            for a in [&first, &second] {
                let (u, v) = (a.evaluate(x).unwrap(), a.evaluate_compact(x).unwrap());
                assert!((u - v).abs() < 1e-12, "{} at {x:?}: {u} vs {v}", a.order());
            }
        }
    }
}

#[test]
fn full_approximations_vanish_on_the_rough_wall() {
    let c = cells();
    for eps in [0.1, 0.2, 0.5] {
        let first = build_first_full(1.0, eps, c.beta.clone()).unwrap();
        let second = build_second_full(1.0, eps, c.beta.clone(), c.gamma.clone()).unwrap();
        // wall vertices of the 32-segment cell mesh
        for j in 0..32 {
            let y1 = 2.0 * PI * j as f64 / 32.0;
            let x = [eps * y1, eps * c.profile.evaluate(y1)];
            assert!(first.evaluate(x).unwrap().abs() <= 1e-6, "first at {x:?}");
            assert!(second.evaluate(x).unwrap().abs() <= 1e-6, "second at {x:?}");
        }
    }
}

#[test]
fn horizontal_averages_reproduce_the_averaged_profiles() {
    let c = cells();
    let (bb, gb) = (c.beta.average(), c.gamma.average());
    let eps = 0.2;
    let first = build_first_full(1.0, eps, c.beta.clone()).unwrap();
    let second = build_second_full(1.0, eps, c.beta.clone(), c.gamma.clone()).unwrap();
    // β(·, y2) − β̄ has zero mean on every level above the wall
    for x2 in [0.0, 0.05, 0.3, 0.9] {
        let a1 = first.horizontal_average(x2, 256).unwrap();
        assert!((a1 - closed_form::first(1.0, eps, bb, x2)).abs() < 1e-6, "x2={x2}");
        let a2 = second.horizontal_average(x2, 256).unwrap();
        assert!((a2 - closed_form::second(1.0, eps, bb, gb, x2)).abs() < 1e-6, "x2={x2}");
    }
}

#[test]
fn top_residual_is_exponentially_small() {
    let c = cells();
    for eps in [0.1, 0.15, 0.2] {
        let second = build_second_full(1.0, eps, c.beta.clone(), c.gamma.clone()).unwrap();
        let worst = (0..64)
            .map(|j| second.top_residual(2.0 * PI * eps * j as f64 / 64.0).unwrap().abs())
            .fold(0.0, f64::max);
        assert!(worst <= (-1.0 / (2.0 * eps)).exp(), "eps={eps}: {worst:e}");
    }
}

#[test]
fn flat_wall_gives_the_shifted_poiseuille() {
    let flat = RoughnessProfile::flat(0.05).unwrap();
    let res = CellResolution {
        refinements: 0,
        ..CellResolution::default()
    };
    let beta = Arc::new(solve_cell_first(&flat, 6.0, &res).unwrap());
    let eps = 0.3;
    let first = build_first_full(1.0, eps, beta).unwrap();
    for x2 in [0.0, 0.25, 0.5, 1.0] {
        let v = first.evaluate([0.4, x2]).unwrap();
        // β ≡ δ, so the composite is the Robin profile with β̄ = δ
        assert!((v - closed_form::first(1.0, eps, 0.05, x2)).abs() < 1e-10, "x2={x2}");
        let shifted = 0.5 * (1.0 - x2) * (x2 + eps * 0.05 / (1.0 + eps * 0.05));
        assert!((v - shifted).abs() < 1e-10);
    }
}

#[test]
fn error_against_itself_is_zero() {
    let eps = 0.3;
    let plan = walllaw::lab::ExperimentPlan {
        segments: 16,
        ..Default::default()
    };
    let dofs = plan.smooth_dofs(eps).unwrap();
    let zeroth = build_zeroth(1.0, eps);
    let u = walllaw::fem::FiniteElementField::interpolate(dofs.clone(), |x| closed_form::poiseuille(1.0, x[1]));
    let rec = error_decomposition(&u, &zeroth, dofs.mesh(), true).unwrap();
    assert!(rec.l2 < 1e-13 && rec.h1semi.unwrap() < 1e-6, "{rec:?}");
}
