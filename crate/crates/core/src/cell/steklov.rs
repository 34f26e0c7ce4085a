//! Interface formulation of the first-order cell problem.
//!
//! The strip is split at `Γ = {y2 = 0}`. Above, the harmonic extension of an
//! interface trace `η` is explicit, `Σ η_k e^{i k y1 − |k| y2}`, with normal
//! derivative `−Σ |k| η_k e^{i k y1}`. Below, the rough layer `P` is solved by
//! finite elements with that flux on `Γ` and `β = −y2` on the wall. A relaxed
//! Dirichlet–Neumann iteration drives the trace of the layer solution to the
//! fixed point, which is the solution of the Steklov–Poincaré equation.

use std::sync::Arc;

use super::{CellMethod, CellOrder, CellResolution, CellSolution};
use crate::error::{Error, Result};
use crate::fem::{assemble_poisson, BoundaryCondition, DofMap, Factorization, Source};
use crate::fourier::FourierCoefficients;
use crate::mesh::{BoundaryTag, DomainKind};
use crate::profile::RoughnessProfile;

#[derive(Debug, Clone, PartialEq)]
pub struct SteklovOptions {
    /// Initial relaxation; halved whenever the interface residual grows.
    pub theta: f64,
    /// Stop when the largest interface update falls below this.
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for SteklovOptions {
    fn default() -> Self {
        Self {
            theta: 0.5,
            tol: 1e-10,
            max_iterations: 500,
        }
    }
}

pub fn steklov_poincare_solve(
    profile: &RoughnessProfile,
    resolution: &CellResolution,
    options: &SteklovOptions,
) -> Result<CellSolution> {
    if !(options.theta > 0.0 && options.theta <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "relaxation must lie in (0, 1], got {}",
            options.theta
        )));
    }
    let mesh = resolution.mesh(DomainKind::RoughLayer, profile)?;
    let dofs = Arc::new(DofMap::new(Arc::new(mesh), resolution.order));
    let system = assemble_poisson(
        &dofs,
        &Source::Constant(0.0),
        &[
            BoundaryCondition::dirichlet_fn(BoundaryTag::RoughBottom, |y| -y[1]),
            BoundaryCondition::neumann(BoundaryTag::Interface),
        ],
    )?;
    let factor = Factorization::new(&system)?;

    // interface nodes, equispaced in y1, periodic duplicate dropped
    let mut nodes: Vec<usize> = dofs
        .tagged_dofs(BoundaryTag::Interface)
        .into_iter()
        .filter(|&d| dofs.master(d) == d)
        .collect();
    nodes.sort_by(|&a, &b| dofs.coords()[a][0].total_cmp(&dofs.coords()[b][0]));
    let modes = nodes.len() / 2;

    let layer_solve = |coeffs: Option<&FourierCoefficients>| -> Result<Vec<f64>> {
        let mut rhs = system.rhs().to_vec();
        if let Some(c) = coeffs {
            let load = system.boundary_load(BoundaryTag::Interface, &|y| c.normal_derivative(y[0]));
            for (r, l) in rhs.iter_mut().zip(load) {
                *r += l;
            }
        }
        Ok(system.constraints().expand(&factor.solve(&rhs)))
    };
    let trace_of = |full: &[f64]| -> Vec<f64> { nodes.iter().map(|&d| full[d]).collect() };

    // start from the layer solution with a flux-free interface
    let mut full = layer_solve(None)?;
    let mut eta = trace_of(&full);
    let mut theta = options.theta;
    let mut history = Vec::new();
    let mut converged = None;
    for it in 1..=options.max_iterations {
        let coeffs = FourierCoefficients::from_samples(&eta, modes)?;
        full = layer_solve(Some(&coeffs))?;
        let next = trace_of(&full);
        let residual = next
            .iter()
            .zip(&eta)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if history.last().is_some_and(|&last| residual > last) {
            theta /= 2.0;
        }
        history.push(residual);
        if residual < options.tol {
            converged = Some(it);
            break;
        }
        for (e, n) in eta.iter_mut().zip(&next) {
            *e += theta * (n - *e);
        }
    }
    let Some(iterations) = converged else {
        return Err(Error::InterfaceNonConvergence {
            iterations: options.max_iterations,
            last: history.last().copied().unwrap_or(f64::NAN),
            history,
        });
    };
    let field = system.expand(&system.constraints().restrict(&full))?;
    CellSolution::assemble(
        CellOrder::First,
        field,
        resolution,
        None,
        CellMethod::SteklovPoincare { iterations, history },
        profile,
    )
}
