//! Property-based invariants.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use proptest::prelude::*;
use walllaw::fem::{DofMap, ElementOrder, FiniteElementField};
use walllaw::fourier::{sample_points, FourierCoefficients};
use walllaw::lab::fit_order;
use walllaw::mesh::{build_mesh, BoundaryTag, DomainKind, DomainSpec};
use walllaw::profile::RoughnessProfile;
use walllaw::spline::PeriodicSpline;
use walllaw::wall_laws::closed_form;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fit_recovers_power_laws(alpha in 0.5f64..4.0, c in 1e-3f64..10.0) {
        let pts: Vec<(f64, f64)> = [0.5, 0.4, 0.3, 0.2, 0.1].iter().map(|&e: &f64| (e, c * e.powf(alpha))).collect();
        let (a, r) = fit_order(&pts).unwrap();
        prop_assert!((a - alpha).abs() < 1e-9);
        prop_assert!(r < 1e-9);
    }

    #[test]
    fn fourier_round_trip(coeffs in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..8)) {
        let k_max = coeffs.len();
        let eta: Vec<Complex64> = std::iter::once(Complex64::new(coeffs[0].0, 0.0))
            .chain(coeffs[1..].iter().map(|&(a, b)| Complex64::new(a, b)))
            .collect();
        let series = FourierCoefficients::new(eta.clone()).unwrap();
        let ys = sample_points(4 * k_max + 4);
        let samples: Vec<f64> = ys.iter().map(|&y| series.extend(y, 0.0)).collect();
        let back = FourierCoefficients::from_samples(&samples, k_max - 1).unwrap();
        for (k, e) in eta.iter().enumerate() {
            prop_assert!((back.coeff(k as i64) - e).norm() < 1e-12);
        }
        // harmonic in the upper half strip: mean preserved, oscillations decay
        let mean = (0..64).map(|j| series.extend(2.0 * PI * j as f64 / 64.0, 1.5)).sum::<f64>() / 64.0;
        prop_assert!((mean - eta[0].re).abs() < 1e-12);
    }

    #[test]
    fn spline_interpolates_and_is_periodic(values in proptest::collection::vec(-2.0f64..2.0, 4..40), t in -10.0f64..10.0) {
        let n = values.len();
        let s = PeriodicSpline::new(2.0 * PI, values.clone()).unwrap();
        for (j, v) in values.iter().enumerate() {
            prop_assert!((s.eval(2.0 * PI * j as f64 / n as f64) - v).abs() < 1e-12);
        }
        prop_assert!((s.eval(t) - s.eval(t + 2.0 * PI)).abs() < 1e-10);
    }

    #[test]
    fn closed_forms_honour_their_boundary_conditions(
        c in 0.1f64..5.0, eps in 0.01f64..1.0, bb in 0.01f64..1.0, gb in -1.0f64..0.0,
    ) {
        prop_assert!(closed_form::first(c, eps, bb, 1.0).abs() < 1e-13);
        prop_assert!(closed_form::second(c, eps, bb, gb, 1.0).abs() < 1e-13);
        let u1 = closed_form::first(c, eps, bb, 0.0);
        prop_assert!((u1 - eps * bb * closed_form::first_slope(c, eps, bb)).abs() < 1e-13);
        let u2 = closed_form::second(c, eps, bb, gb, 0.0);
        let rhs = eps * bb * closed_form::second_slope(c, eps, bb, gb)
            + 0.5 * eps * eps * gb * closed_form::second_curvature(c);
        prop_assert!((u2 - rhs).abs() < 1e-13);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn rough_cell_meshes_are_valid(delta in 0.03f64..0.3, eps in 0.1f64..0.75) {
        let p = RoughnessProfile::cosine(delta).unwrap();
        let m = build_mesh(&DomainSpec::new(DomainKind::RoughCell { epsilon: eps }, p.clone(), 32)).unwrap();
        m.check().unwrap();
        for e in m.boundary_edges().iter().filter(|e| e.tag == BoundaryTag::RoughBottom) {
            for &v in &e.vertices {
                let x = m.vertices()[v];
                prop_assert!((x[1] - eps * p.evaluate(x[0] / eps)).abs() < 1e-12);
            }
        }
        for &(l, r) in m.periodic_pairs() {
            let (a, b) = (m.vertices()[l], m.vertices()[r]);
            prop_assert!((a[1] - b[1]).abs() < 1e-12);
            prop_assert!((b[0] - a[0] - 2.0 * PI * eps).abs() < 1e-12);
        }
        let fine = m.refine();
        fine.check().unwrap();
        prop_assert!(fine.area() >= m.area() - 1e-12);
    }

    #[test]
    fn field_files_round_trip(seed in any::<u64>()) {
        let p = RoughnessProfile::cosine(0.05).unwrap();
        let m = build_mesh(&DomainSpec::new(DomainKind::SmoothCell { epsilon: 0.2 }, p, 16)).unwrap();
        let dofs = Arc::new(DofMap::new(Arc::new(m), ElementOrder::P2));
        let mut s = seed;
        let values: Vec<f64> = (0..dofs.n_dofs())
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            })
            .collect();
        let f = FiniteElementField::new(dofs.clone(), values).unwrap();
        let mut buf = Vec::new();
        f.write(&mut buf).unwrap();
        let g = FiniteElementField::read(&buf[..], dofs).unwrap();
        prop_assert_eq!(f.values(), g.values());
    }
}
