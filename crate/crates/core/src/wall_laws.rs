//! Macroscopic approximations on the smooth cell `Ω⁰ = {0 < x2 < 1}`:
//! Poiseuille, the averaged Robin (first order) and Wentzell (second order)
//! wall laws, and the explicit / implicit multiscale laws that keep the
//! oscillating cell traces.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::Arc;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fem::{
    assemble_poisson, assemble_wentzell, solve, Analytic, BcKind, BoundaryCondition, DofMap,
    FiniteElementField, ScalarFunction, Source,
};
use crate::mesh::{BoundaryTag, Point};
use crate::spline::PeriodicSpline;

/// Relative residual requested from the linear solver.
pub const SOLVER_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum WallLawFamily {
    U0,
    U1Analytic,
    U1Fem,
    U2Analytic,
    U2Fem,
    ExplicitMS1,
    ExplicitMS2,
    ImplicitMS1,
}

impl WallLawFamily {
    pub const ALL: [WallLawFamily; 8] = [
        WallLawFamily::U0,
        WallLawFamily::U1Analytic,
        WallLawFamily::U1Fem,
        WallLawFamily::U2Analytic,
        WallLawFamily::U2Fem,
        WallLawFamily::ExplicitMS1,
        WallLawFamily::ExplicitMS2,
        WallLawFamily::ImplicitMS1,
    ];

    pub fn name(self) -> &'static str {
        match self {
            WallLawFamily::U0 => "U0",
            WallLawFamily::U1Analytic => "U1_analytic",
            WallLawFamily::U1Fem => "U1_fem",
            WallLawFamily::U2Analytic => "U2_analytic",
            WallLawFamily::U2Fem => "U2_fem",
            WallLawFamily::ExplicitMS1 => "ExplicitMS1",
            WallLawFamily::ExplicitMS2 => "ExplicitMS2",
            WallLawFamily::ImplicitMS1 => "ImplicitMS1",
        }
    }
}

impl fmt::Display for WallLawFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for WallLawFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidInput(format!("unknown wall-law family `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Analytic,
    Fem,
}

/// Straight-channel profiles in closed form.
pub mod closed_form {
    /// `(C/2)(1 − x2) x2`
    pub fn poiseuille(c: f64, x2: f64) -> f64 {
        0.5 * c * (1.0 - x2) * x2
    }

    /// Solution of the Robin law `u = εβ̄ ∂u/∂x2` at `x2 = 0`, `u = 0` at 1.
    pub fn first(c: f64, eps: f64, beta_bar: f64, x2: f64) -> f64 {
        let s = 1.0 + eps * beta_bar;
        -0.5 * c * (x2 * x2 - x2 / s - eps * beta_bar / s)
    }

    /// `∂u¹/∂x2` on the fictitious wall.
    pub fn first_slope(c: f64, eps: f64, beta_bar: f64) -> f64 {
        0.5 * c / (1.0 + eps * beta_bar)
    }

    /// Solution of the Wentzell law `u = εβ̄ ∂u/∂x2 + (ε²/2) γ̄ ∂²u/∂x2²`.
    pub fn second(c: f64, eps: f64, beta_bar: f64, gamma_bar: f64, x2: f64) -> f64 {
        let s = 1.0 + eps * beta_bar;
        -0.5 * c
            * (x2 * x2 - x2 * (1.0 + eps * eps * gamma_bar) / s - eps * (beta_bar - eps * gamma_bar) / s)
    }

    /// `∂u²/∂x2` on the fictitious wall.
    pub fn second_slope(c: f64, eps: f64, beta_bar: f64, gamma_bar: f64) -> f64 {
        0.5 * c * (1.0 + eps * eps * gamma_bar) / (1.0 + eps * beta_bar)
    }

    /// `∂²u²/∂x2²`, constant.
    pub fn second_curvature(c: f64) -> f64 {
        -c
    }
}

/// Provenance of the data a wall law was built from.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct InputsDigest {
    pub beta_bar: Option<f64>,
    pub gamma_bar: Option<f64>,
    pub beta_trace: Option<String>,
    pub gamma_trace: Option<String>,
}

#[derive(Clone)]
enum Repr {
    ClosedForm(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
    Field(FiniteElementField),
}

/// A macroscopic approximation on the smooth cell.
#[derive(Clone)]
pub struct WallLawSolution {
    family: WallLawFamily,
    epsilon: f64,
    c: f64,
    repr: Repr,
    dofs: Arc<DofMap>,
    inputs: InputsDigest,
}

impl fmt::Debug for WallLawSolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WallLawSolution")
            .field("family", &self.family)
            .field("epsilon", &self.epsilon)
            .field("c", &self.c)
            .field("inputs", &self.inputs)
            .finish()
    }
}

impl WallLawSolution {
    pub fn family(&self) -> WallLawFamily {
        self.family
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn inputs(&self) -> &InputsDigest {
        &self.inputs
    }

    /// The discrete field, when the law was solved by finite elements.
    pub fn field(&self) -> Option<&FiniteElementField> {
        match &self.repr {
            Repr::Field(f) => Some(f),
            Repr::ClosedForm(_) => None,
        }
    }

    /// Nodal interpolant on the smooth-cell space (the field itself for FEM
    /// laws).
    pub fn interpolant(&self) -> FiniteElementField {
        match &self.repr {
            Repr::Field(f) => f.clone(),
            Repr::ClosedForm(g) => FiniteElementField::interpolate(self.dofs.clone(), |p| g(p[1])),
        }
    }

    /// Largest nodal deviation from a profile `x2 ↦ g(x2)`.
    pub fn max_dof_deviation(&self, g: impl Fn(f64) -> f64) -> f64 {
        let f = self.interpolant();
        self.dofs
            .coords()
            .iter()
            .zip(f.values())
            .map(|(p, v)| (v - g(p[1])).abs())
            .fold(0.0, f64::max)
    }

    pub fn write_sidecar<W: Write>(&self, mut w: W) -> Result<()> {
        let opt = |v: Option<f64>| v.map_or("none".to_owned(), |x| format!("{x:.16e}"));
        writeln!(w, "walllaw-law v1")?;
        writeln!(w, "family {}", self.family)?;
        writeln!(w, "epsilon {:.16e}", self.epsilon)?;
        writeln!(w, "C {:.16e}", self.c)?;
        writeln!(w, "beta_bar {}", opt(self.inputs.beta_bar))?;
        writeln!(w, "gamma_bar {}", opt(self.inputs.gamma_bar))?;
        writeln!(w, "beta_trace {}", self.inputs.beta_trace.as_deref().unwrap_or("none"))?;
        writeln!(w, "gamma_trace {}", self.inputs.gamma_trace.as_deref().unwrap_or("none"))?;
        writeln!(w, "mesh {}", self.dofs.mesh().checksum())?;
        Ok(())
    }
}

impl ScalarFunction for WallLawSolution {
    fn value(&self, x: Point) -> Result<f64> {
        match &self.repr {
            Repr::ClosedForm(g) => Ok(g(x[1])),
            Repr::Field(f) => f.evaluate(x),
        }
    }

    fn gradient(&self, x: Point) -> Result<[f64; 2]> {
        match &self.repr {
            Repr::ClosedForm(g) => Analytic::new(|p: Point| g(p[1])).gradient(x),
            Repr::Field(f) => f.evaluate_gradient(x),
        }
    }
}

/// Checksum of a sampled trace (first 16 bytes of SHA-256, hex).
pub fn trace_checksum(trace: &PeriodicSpline) -> String {
    let mut h = Sha256::new();
    for v in trace.samples() {
        h.update(v.to_bits().to_le_bytes());
    }
    hex::encode(&h.finalize()[..16])
}

fn closed(
    family: WallLawFamily,
    epsilon: f64,
    c: f64,
    dofs: &Arc<DofMap>,
    inputs: InputsDigest,
    g: impl Fn(f64) -> f64 + Send + Sync + 'static,
) -> WallLawSolution {
    WallLawSolution {
        family,
        epsilon,
        c,
        repr: Repr::ClosedForm(Arc::new(g)),
        dofs: dofs.clone(),
        inputs,
    }
}

fn check_eps(epsilon: f64) -> Result<()> {
    if epsilon >= 0.0 && epsilon.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("epsilon must be non-negative, got {epsilon}")))
    }
}

fn check_beta_bar(beta_bar: f64) -> Result<()> {
    if beta_bar > 0.0 && beta_bar.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("beta_bar must be positive, got {beta_bar}")))
    }
}

fn solve_dirichlet(dofs: &Arc<DofMap>, c: f64, g: impl Fn(Point) -> f64 + Send + Sync + 'static) -> Result<FiniteElementField> {
    let sys = assemble_poisson(
        dofs,
        &Source::Constant(c),
        &[
            BoundaryCondition::dirichlet_fn(BoundaryTag::SmoothBottom, g),
            BoundaryCondition::dirichlet(BoundaryTag::Top, 0.0),
        ],
    )?;
    solve(&sys, SOLVER_TOL)
}

/// `u⁰ = (C/2)(1 − x2) x2`.
pub fn poiseuille(c: f64, dofs: &Arc<DofMap>) -> WallLawSolution {
    closed(WallLawFamily::U0, 0.0, c, dofs, InputsDigest::default(), move |x2| {
        closed_form::poiseuille(c, x2)
    })
}

/// Averaged first-order law `u¹ = εβ̄ ∂u¹/∂x2` on `x2 = 0`.
pub fn averaged_first(c: f64, epsilon: f64, beta_bar: f64, dofs: &Arc<DofMap>, mode: Mode) -> Result<WallLawSolution> {
    check_eps(epsilon)?;
    check_beta_bar(beta_bar)?;
    let inputs = InputsDigest {
        beta_bar: Some(beta_bar),
        ..Default::default()
    };
    match mode {
        Mode::Analytic => Ok(closed(WallLawFamily::U1Analytic, epsilon, c, dofs, inputs, move |x2| {
            closed_form::first(c, epsilon, beta_bar, x2)
        })),
        Mode::Fem => {
            let bottom = if epsilon == 0.0 {
                BoundaryCondition::dirichlet(BoundaryTag::SmoothBottom, 0.0)
            } else {
                BoundaryCondition::robin(BoundaryTag::SmoothBottom, epsilon * beta_bar)
            };
            let sys = assemble_poisson(
                dofs,
                &Source::Constant(c),
                &[bottom, BoundaryCondition::dirichlet(BoundaryTag::Top, 0.0)],
            )?;
            Ok(WallLawSolution {
                family: WallLawFamily::U1Fem,
                epsilon,
                c,
                repr: Repr::Field(solve(&sys, SOLVER_TOL)?),
                dofs: dofs.clone(),
                inputs,
            })
        }
    }
}

/// Averaged second-order (Wentzell) law.
pub fn averaged_second(
    c: f64,
    epsilon: f64,
    beta_bar: f64,
    gamma_bar: f64,
    dofs: &Arc<DofMap>,
    mode: Mode,
) -> Result<WallLawSolution> {
    check_eps(epsilon)?;
    check_beta_bar(beta_bar)?;
    let inputs = InputsDigest {
        beta_bar: Some(beta_bar),
        gamma_bar: Some(gamma_bar),
        ..Default::default()
    };
    match mode {
        Mode::Analytic => Ok(closed(WallLawFamily::U2Analytic, epsilon, c, dofs, inputs, move |x2| {
            closed_form::second(c, epsilon, beta_bar, gamma_bar, x2)
        })),
        Mode::Fem => {
            if epsilon == 0.0 {
                return averaged_first(c, 0.0, beta_bar, dofs, Mode::Fem).map(|mut s| {
                    s.family = WallLawFamily::U2Fem;
                    s.inputs = inputs;
                    s
                });
            }
            let sys = assemble_wentzell(dofs, c, epsilon, beta_bar, gamma_bar)?;
            Ok(WallLawSolution {
                family: WallLawFamily::U2Fem,
                epsilon,
                c,
                repr: Repr::Field(solve(&sys, SOLVER_TOL)?),
                dofs: dofs.clone(),
                inputs,
            })
        }
    }
}

/// Explicit multiscale law of first order: Dirichlet data
/// `ε ∂u¹/∂x2(x1, 0) β(x1/ε, 0)` on the fictitious wall.
pub fn explicit_ms_first(
    c: f64,
    epsilon: f64,
    beta_trace: &PeriodicSpline,
    beta_bar: f64,
    dofs: &Arc<DofMap>,
) -> Result<WallLawSolution> {
    check_eps(epsilon)?;
    check_beta_bar(beta_bar)?;
    let slope = closed_form::first_slope(c, epsilon, beta_bar);
    let beta = beta_trace.clone();
    let field = solve_dirichlet(dofs, c, move |x| epsilon * slope * beta.eval(x[0] / epsilon))?;
    Ok(WallLawSolution {
        family: WallLawFamily::ExplicitMS1,
        epsilon,
        c,
        repr: Repr::Field(field),
        dofs: dofs.clone(),
        inputs: InputsDigest {
            beta_bar: Some(beta_bar),
            beta_trace: Some(trace_checksum(beta_trace)),
            ..Default::default()
        },
    })
}

/// Explicit multiscale law of second order: Dirichlet data
/// `ε ∂u²/∂x2 β(x1/ε, 0) + (ε²/2) ∂²u²/∂x2² γ(x1/ε, 0)`.
pub fn explicit_ms_second(
    c: f64,
    epsilon: f64,
    beta_trace: &PeriodicSpline,
    gamma_trace: &PeriodicSpline,
    beta_bar: f64,
    gamma_bar: f64,
    dofs: &Arc<DofMap>,
) -> Result<WallLawSolution> {
    check_eps(epsilon)?;
    check_beta_bar(beta_bar)?;
    let slope = closed_form::second_slope(c, epsilon, beta_bar, gamma_bar);
    let curv = closed_form::second_curvature(c);
    let (beta, gamma) = (beta_trace.clone(), gamma_trace.clone());
    let field = solve_dirichlet(dofs, c, move |x| {
        let y1 = x[0] / epsilon;
        epsilon * slope * beta.eval(y1) + 0.5 * epsilon * epsilon * curv * gamma.eval(y1)
    })?;
    Ok(WallLawSolution {
        family: WallLawFamily::ExplicitMS2,
        epsilon,
        c,
        repr: Repr::Field(field),
        dofs: dofs.clone(),
        inputs: InputsDigest {
            beta_bar: Some(beta_bar),
            gamma_bar: Some(gamma_bar),
            beta_trace: Some(trace_checksum(beta_trace)),
            gamma_trace: Some(trace_checksum(gamma_trace)),
        },
    })
}

/// Implicit multiscale law: `w = ε β(x1/ε, 0) ∂w/∂x2` on the fictitious wall.
pub fn implicit_ms_first(c: f64, epsilon: f64, beta_trace: &PeriodicSpline, dofs: &Arc<DofMap>) -> Result<WallLawSolution> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidInput(format!("epsilon must be positive, got {epsilon}")));
    }
    let min = beta_trace.min_sample();
    if !(min > 0.0) {
        return Err(Error::Coercivity(format!(
            "the cell trace must be positive for the implicit law, minimum sample is {min}"
        )));
    }
    let beta = beta_trace.clone();
    let sys = assemble_poisson(
        dofs,
        &Source::Constant(c),
        &[
            BoundaryCondition::new(
                BoundaryTag::SmoothBottom,
                BcKind::RobinOscillating {
                    alpha: Arc::new(move |x1| epsilon * beta.eval(x1 / epsilon)),
                    period: 2.0 * std::f64::consts::PI * epsilon,
                },
            ),
            BoundaryCondition::dirichlet(BoundaryTag::Top, 0.0),
        ],
    )?;
    Ok(WallLawSolution {
        family: WallLawFamily::ImplicitMS1,
        epsilon,
        c,
        repr: Repr::Field(solve(&sys, SOLVER_TOL)?),
        dofs: dofs.clone(),
        inputs: InputsDigest {
            beta_trace: Some(trace_checksum(beta_trace)),
            ..Default::default()
        },
    })
}

#[cfg(test)]
mod tests {
    use super::closed_form::*;
    use super::WallLawFamily;

    #[test]
    fn closed_forms_satisfy_their_wall_laws() {
        let (c, eps, b, g) = (1.3, 0.2, 0.43215, -0.29795);
        let h = 1e-5;
        let d = |f: &dyn Fn(f64) -> f64, x: f64| (f(x + h) - f(x - h)) / (2.0 * h);
        let u1 = |x| first(c, eps, b, x);
        assert!(u1(1.0).abs() < 1e-15);
        assert!((u1(0.0) - eps * b * d(&u1, 0.0)).abs() < 1e-9);
        assert!((d(&u1, 0.0) - first_slope(c, eps, b)).abs() < 1e-9);
        let u2 = |x| second(c, eps, b, g, x);
        assert!(u2(1.0).abs() < 1e-15);
        let dd = (u2(h) - 2.0 * u2(0.0) + u2(-h)) / (h * h);
        assert!((dd - second_curvature(c)).abs() < 1e-4);
        assert!((u2(0.0) - eps * b * d(&u2, 0.0) - 0.5 * eps * eps * g * second_curvature(c)).abs() < 1e-9);
        assert!((d(&u2, 0.0) - second_slope(c, eps, b, g)).abs() < 1e-9);
        // γ̄ = 0 reduces to the first-order law
        assert!((second(c, eps, b, 0.0, 0.37) - first(c, eps, b, 0.37)).abs() < 1e-15);
        // ε = 0 is Poiseuille
        assert!((first(c, 0.0, b, 0.37) - poiseuille(c, 0.37)).abs() < 1e-15);
    }

    #[test]
    fn poiseuille_values() {
        assert_eq!(poiseuille(1.0, 0.5), 0.125);
        assert_eq!(poiseuille(1.0, 0.0), 0.0);
        assert_eq!(poiseuille(1.0, 1.0), 0.0);
    }

    #[test]
    fn family_names_round_trip() {
        for f in WallLawFamily::ALL {
            assert_eq!(f.name().parse::<WallLawFamily>().unwrap(), f);
        }
    }
}
