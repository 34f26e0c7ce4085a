//! Full boundary-layer approximations on the rough cell: macroscopic
//! profiles plus rescaled cell correctors `β(x/ε)`, `γ(x/ε)`.

use std::sync::Arc;

use crate::cell::{CellOrder, CellSolution};
use crate::error::{Error, Result};
use crate::fem::{difference_norm, FiniteElementField, NormKind, ScalarFunction, DEFAULT_NORM_DEGREE};
use crate::mesh::{Point, TriangularMesh};
use crate::wall_laws::closed_form;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CompositeOrder {
    Zeroth,
    FirstFull,
    SecondFull,
}

impl CompositeOrder {
    pub fn name(self) -> &'static str {
        match self {
            CompositeOrder::Zeroth => "Zeroth",
            CompositeOrder::FirstFull => "FirstFull",
            CompositeOrder::SecondFull => "SecondFull",
        }
    }
}

impl std::fmt::Display for CompositeOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.pad(self.name())
    }
}

/// A composite approximation `x ↦ macro(x2) + micro(x/ε)` defined on the
/// whole rough cell.
#[derive(Debug, Clone)]
pub struct CompositeApproximation {
    order: CompositeOrder,
    epsilon: f64,
    c: f64,
    beta: Option<Arc<CellSolution>>,
    gamma: Option<Arc<CellSolution>>,
}

fn check_cell(cell: &CellSolution, expected: CellOrder) -> Result<()> {
    if cell.order_tag() != expected {
        return Err(Error::InvalidInput(format!(
            "expected the {expected} cell solution, got the {}",
            cell.order_tag()
        )));
    }
    Ok(())
}

/// Poiseuille on `x2 ≥ 0`, its tangent `(C/2) x2` below: a C¹ function.
pub fn build_zeroth(c: f64, epsilon: f64) -> CompositeApproximation {
    CompositeApproximation {
        order: CompositeOrder::Zeroth,
        epsilon,
        c,
        beta: None,
        gamma: None,
    }
}

/// `u^{0,1} + ε/(1+εβ̄) ∂u^{0,1}/∂x2(x1,0) (β(x/ε) − β̄ x2)`.
pub fn build_first_full(c: f64, epsilon: f64, beta: Arc<CellSolution>) -> Result<CompositeApproximation> {
    check_cell(&beta, CellOrder::First)?;
    check_epsilon(epsilon)?;
    Ok(CompositeApproximation {
        order: CompositeOrder::FirstFull,
        epsilon,
        c,
        beta: Some(beta),
        gamma: None,
    })
}

/// Second-order composite with the series correction that restores the
/// homogeneous Dirichlet condition on the rough wall.
pub fn build_second_full(
    c: f64,
    epsilon: f64,
    beta: Arc<CellSolution>,
    gamma: Arc<CellSolution>,
) -> Result<CompositeApproximation> {
    check_cell(&beta, CellOrder::First)?;
    check_cell(&gamma, CellOrder::Second)?;
    check_epsilon(epsilon)?;
    Ok(CompositeApproximation {
        order: CompositeOrder::SecondFull,
        epsilon,
        c,
        beta: Some(beta),
        gamma: Some(gamma),
    })
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("epsilon must be positive, got {epsilon}")))
    }
}

impl CompositeApproximation {
    pub fn order(&self) -> CompositeOrder {
        self.order
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// The slow part alone: the zeroth (C¹) extension for `Zeroth` and
    /// `FirstFull`, the quadratic Poiseuille everywhere for `SecondFull`.
    pub fn macro_part(&self, x2: f64) -> f64 {
        match self.order {
            CompositeOrder::SecondFull => closed_form::poiseuille(self.c, x2),
            _ if x2 >= 0.0 => closed_form::poiseuille(self.c, x2),
            _ => 0.5 * self.c * x2,
        }
    }

    fn micro(cell: &Option<Arc<CellSolution>>, x: Point, eps: f64) -> Result<(f64, f64)> {
        let cell = cell.as_ref().expect("composite built without its cell solution");
        Ok((cell.evaluate([x[0] / eps, x[1] / eps])?, cell.average()))
    }

    /// Value at a point of the rough cell (expanded form).
    pub fn evaluate(&self, x: Point) -> Result<f64> {
        let (c, eps) = (self.c, self.epsilon);
        let m = self.macro_part(x[1]);
        match self.order {
            CompositeOrder::Zeroth => Ok(m),
            CompositeOrder::FirstFull => {
                let (b, bb) = Self::micro(&self.beta, x, eps)?;
                Ok(m + eps / (1.0 + eps * bb) * 0.5 * c * (b - bb * x[1]))
            }
            CompositeOrder::SecondFull => {
                let (b, bb) = Self::micro(&self.beta, x, eps)?;
                let (g, gb) = Self::micro(&self.gamma, x, eps)?;
                let first = b - bb * x[1];
                Ok(m + eps / (1.0 + eps * bb) * 0.5 * c * first
                    + 0.5 * eps * eps * closed_form::second_curvature(c)
                        * ((g - gb * x[1]) - eps * gb / (1.0 + eps * bb) * first))
            }
        }
    }

    /// Slow/fast separated form on `Ω⁰`: the averaged profile plus
    /// zero-mean oscillations. Equal to [`evaluate`](Self::evaluate) for
    /// `x2 ≥ 0`.
    pub fn evaluate_compact(&self, x: Point) -> Result<f64> {
        if x[1] < 0.0 {
            return Err(Error::OutsideDomain { x: x[0], y: x[1] });
        }
        let (c, eps) = (self.c, self.epsilon);
        match self.order {
            CompositeOrder::Zeroth => Ok(closed_form::poiseuille(c, x[1])),
            CompositeOrder::FirstFull => {
                let (b, bb) = Self::micro(&self.beta, x, eps)?;
                Ok(closed_form::first(c, eps, bb, x[1]) + eps * closed_form::first_slope(c, eps, bb) * (b - bb))
            }
            CompositeOrder::SecondFull => {
                let (b, bb) = Self::micro(&self.beta, x, eps)?;
                let (g, gb) = Self::micro(&self.gamma, x, eps)?;
                Ok(closed_form::second(c, eps, bb, gb, x[1])
                    + eps * closed_form::second_slope(c, eps, bb, gb) * (b - bb)
                    + 0.5 * eps * eps * closed_form::second_curvature(c) * (g - gb))
            }
        }
    }

    /// Mean over one period `[0, 2πε]` at height `x2`, by the `n`-point
    /// periodic trapezoid rule.
    pub fn horizontal_average(&self, x2: f64, n: usize) -> Result<f64> {
        let w = 2.0 * std::f64::consts::PI * self.epsilon;
        let mut s = 0.0;
        for j in 0..n {
            s += self.evaluate([w * j as f64 / n as f64, x2])?;
        }
        Ok(s / n as f64)
    }

    /// The value left on the top wall `x2 = 1` (zero for `Zeroth`).
    pub fn top_residual(&self, x1: f64) -> Result<f64> {
        self.evaluate([x1, 1.0])
    }
}

impl ScalarFunction for CompositeApproximation {
    fn value(&self, x: Point) -> Result<f64> {
        self.evaluate(x)
    }

    fn gradient(&self, x: Point) -> Result<[f64; 2]> {
        let h = 1e-6 * self.epsilon;
        let dx = (self.evaluate([x[0] + h, x[1]])? - self.evaluate([x[0] - h, x[1]])?) / (2.0 * h);
        let dy = (self.evaluate([x[0], x[1] + h])? - self.evaluate([x[0], x[1] - h])?) / (2.0 * h);
        Ok([dx, dy])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormRecord {
    pub l2: f64,
    pub h1semi: Option<f64>,
}

/// `‖u_ε − approx‖` over `smooth_mesh` (normally `Ω⁰`), evaluating both
/// at the quadrature points of the smooth mesh.
pub fn error_decomposition(
    u_eps: &FiniteElementField,
    approx: &dyn ScalarFunction,
    smooth_mesh: &TriangularMesh,
    with_h1: bool,
) -> Result<NormRecord> {
    let l2 = difference_norm(smooth_mesh, u_eps, approx, NormKind::L2, DEFAULT_NORM_DEGREE)?;
    let h1semi = if with_h1 {
        Some(difference_norm(smooth_mesh, u_eps, approx, NormKind::H1Semi, DEFAULT_NORM_DEGREE)?)
    } else {
        None
    };
    Ok(NormRecord { l2, h1semi })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeroth_extension_is_c1() {
        let z = build_zeroth(1.0, 0.2);
        assert!((z.macro_part(-0.2 * 0.05) + 0.5 * 0.2 * 0.05).abs() < 1e-15);
        assert_eq!(z.macro_part(0.5), 0.125);
        // second-order one-sided differences, exact for quadratics
        let h = 1e-4;
        let f = |x| z.macro_part(x);
        let left = (3.0 * f(0.0) - 4.0 * f(-h) + f(-2.0 * h)) / (2.0 * h);
        let right = (-3.0 * f(0.0) + 4.0 * f(h) - f(2.0 * h)) / (2.0 * h);
        assert!((left - right).abs() < 1e-8, "{left} {right}");
        assert!((left - 0.5).abs() < 1e-8);
    }
}
