//! L² and H¹-seminorms of differences of evaluable functions.

use rayon::prelude::*;

use super::element::AffineMap;
use super::field::ScalarFunction;
use super::quadrature::TriangleRule;
use crate::error::Result;
use crate::mesh::TriangularMesh;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    L2,
    H1Semi,
}

/// Default quadrature degree: `2 * 2 + 2` for P2 fields.
pub const DEFAULT_NORM_DEGREE: usize = 6;

/// `‖a − b‖` over the triangles of `mesh`, by a collapsed Gauss rule exact
/// for total degree `degree`. Triangle contributions are summed in index order.
pub fn difference_norm(
    mesh: &TriangularMesh,
    a: &dyn ScalarFunction,
    b: &dyn ScalarFunction,
    kind: NormKind,
    degree: usize,
) -> Result<f64> {
    integrate_squares(mesh, degree, |x| match kind {
        NormKind::L2 => Ok((a.value(x)? - b.value(x)?).powi(2)),
        NormKind::H1Semi => {
            let (ga, gb) = (a.gradient(x)?, b.gradient(x)?);
            Ok((ga[0] - gb[0]).powi(2) + (ga[1] - gb[1]).powi(2))
        }
    })
}

/// `‖a‖` over the triangles of `mesh`.
pub fn norm(mesh: &TriangularMesh, a: &dyn ScalarFunction, kind: NormKind, degree: usize) -> Result<f64> {
    integrate_squares(mesh, degree, |x| match kind {
        NormKind::L2 => Ok(a.value(x)?.powi(2)),
        NormKind::H1Semi => {
            let g = a.gradient(x)?;
            Ok(g[0] * g[0] + g[1] * g[1])
        }
    })
}

fn integrate_squares<F>(mesh: &TriangularMesh, degree: usize, f: F) -> Result<f64>
where
    F: Fn([f64; 2]) -> Result<f64> + Sync,
{
    let rule = TriangleRule::for_degree(degree);
    let parts: Vec<f64> = (0..mesh.triangles().len())
        .into_par_iter()
        .map(|t| {
            let map = AffineMap::new(mesh.triangle_points(t));
            let mut acc = 0.0;
            for (p, w) in rule.points.iter().zip(&rule.weights) {
                acc += w * f(map.map(p[0], p[1]))?;
            }
            Ok(acc * map.det())
        })
        .collect::<Result<_>>()?;
    Ok(parts.iter().sum::<f64>().max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::field::Analytic;
    use crate::mesh::{build_mesh, DomainKind, DomainSpec};
    use crate::profile::RoughnessProfile;

    fn unit_strip() -> TriangularMesh {
        let flat = RoughnessProfile::flat(0.05).unwrap();
        build_mesh(&DomainSpec::new(
            DomainKind::SmoothCell { epsilon: 1.0 / (2.0 * std::f64::consts::PI) },
            flat,
            8,
        ))
        .unwrap()
    }

    #[test]
    fn poiseuille_norm() {
        let m = unit_strip();
        let u = Analytic::new(|p: [f64; 2]| p[1] * (1.0 - p[1]) / 2.0);
        let n = norm(&m, &u, NormKind::L2, 6).unwrap();
        assert!((n - 1.0 / (2.0 * 30f64.sqrt())).abs() < 1e-13);
    }

    #[test]
    fn constant_and_zero() {
        let m = unit_strip();
        let c = Analytic::new(|_| -3.0);
        assert!((norm(&m, &c, NormKind::L2, 2).unwrap() - 3.0).abs() < 1e-13);
        assert_eq!(difference_norm(&m, &c, &c, NormKind::L2, 2).unwrap(), 0.0);
        assert!(norm(&m, &c, NormKind::H1Semi, 2).unwrap() < 1e-8);
    }
}
