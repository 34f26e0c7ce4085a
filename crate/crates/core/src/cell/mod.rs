//! Boundary-layer cell problems on the periodic strip above one roughness
//! period:
//!
//! ```text
//! Δβ = 0 in Z⁺ ∪ Γ ∪ P,   β = −y2 on P⁰,   β 2π-periodic in y1
//! Δγ = 0 in Z⁺ ∪ Γ ∪ P,   γ = −y2² on P⁰
//! ```
//!
//! The infinite strip is truncated at `y2 = H` with a zero Neumann condition,
//! or (cross-check path) the upper half is replaced by its exact
//! Dirichlet-to-Neumann map, see [`steklov_poincare_solve`].

mod io;
mod steklov;

pub use io::{read_sidecar, write_sidecar, CellSidecar, CELL_HEADER};
pub use steklov::{steklov_poincare_solve, SteklovOptions};

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fem::{
    assemble_poisson, solve, BoundaryCondition, DofMap, ElementOrder, FiniteElementField, Source,
};
use crate::fourier::{sample_points, FourierCoefficients};
use crate::mesh::{build_mesh, BoundaryTag, DomainKind, DomainSpec, Point, TriangularMesh};
use crate::profile::RoughnessProfile;
use crate::spline::PeriodicSpline;

/// Smallest admissible truncation height for production cell solves.
pub const MIN_TRUNCATION: f64 = 5.0;
/// Smallest height accepted by the truncation sweep, which deliberately
/// probes short strips.
pub const MIN_SWEEP_HEIGHT: f64 = 2.0;
/// Distance below the truncation line where evaluation switches to the
/// Fourier tail.
pub const TAIL_SWITCH: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CellOrder {
    /// β, boundary data `−y2`.
    First,
    /// γ, boundary data `−y2²`.
    Second,
}

impl CellOrder {
    pub fn boundary_data(self, y2: f64) -> f64 {
        match self {
            CellOrder::First => -y2,
            CellOrder::Second => -y2 * y2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CellOrder::First => "first",
            CellOrder::Second => "second",
        }
    }
}

impl fmt::Display for CellOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CellOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "first" => Ok(CellOrder::First),
            "second" => Ok(CellOrder::Second),
            other => Err(Error::InvalidInput(format!("unknown cell order `{other}`"))),
        }
    }
}

/// Discretization knobs shared by all cell solves.
#[derive(Debug, Clone, PartialEq)]
pub struct CellResolution {
    /// Boundary segments per period of the coarse mesh.
    pub segments: usize,
    /// Uniform refinements applied after building.
    pub refinements: usize,
    pub order: ElementOrder,
    /// Equispaced samples of the trace on `y2 = 0`.
    pub trace_samples: usize,
    /// Fourier modes kept in the stored coefficients.
    pub k_max: usize,
    pub tol: f64,
}

impl Default for CellResolution {
    fn default() -> Self {
        Self {
            segments: 32,
            refinements: 2,
            order: ElementOrder::P2,
            trace_samples: 256,
            k_max: 32,
            tol: 1e-12,
        }
    }
}

impl CellResolution {
    /// The refined mesh these knobs produce for a cell domain.
    pub fn mesh(&self, kind: DomainKind, profile: &RoughnessProfile) -> Result<TriangularMesh> {
        let mut mesh = build_mesh(&DomainSpec::new(kind, profile.clone(), self.segments))?;
        for _ in 0..self.refinements {
            mesh = mesh.refine();
        }
        Ok(mesh)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CellMethod {
    TruncatedStrip,
    SteklovPoincare { iterations: usize, history: Vec<f64> },
}

/// A solved cell problem.
#[derive(Debug, Clone)]
pub struct CellSolution {
    order_tag: CellOrder,
    field: FiniteElementField,
    trace: PeriodicSpline,
    average: f64,
    fourier: FourierCoefficients,
    spectrum: FourierCoefficients,
    truncation_height: Option<f64>,
    method: CellMethod,
    max_data: f64,
}

impl CellSolution {
    pub(crate) fn assemble(
        order_tag: CellOrder,
        field: FiniteElementField,
        resolution: &CellResolution,
        truncation_height: Option<f64>,
        method: CellMethod,
        profile: &RoughnessProfile,
    ) -> Result<Self> {
        let ys = sample_points(resolution.trace_samples);
        let samples = ys
            .iter()
            .map(|&y| field.evaluate([y, 0.0]))
            .collect::<Result<Vec<f64>>>()?;
        let trace = PeriodicSpline::new(2.0 * PI, samples.clone())?;
        // trapezoid rule on a periodic grid = sample mean
        let average = samples.iter().sum::<f64>() / samples.len() as f64;
        let spectrum = FourierCoefficients::from_samples(&samples, samples.len() / 2)?;
        let fourier = spectrum.truncated(resolution.k_max);
        let max_data = (0..=2048)
            .map(|j| order_tag.boundary_data(profile.evaluate(2.0 * PI * j as f64 / 2048.0)).abs())
            .fold(0.0, f64::max);
        Ok(Self {
            order_tag,
            field,
            trace,
            average,
            fourier,
            spectrum,
            truncation_height,
            method,
            max_data,
        })
    }

    pub fn order_tag(&self) -> CellOrder {
        self.order_tag
    }

    pub fn field(&self) -> &FiniteElementField {
        &self.field
    }

    /// β̄ or γ̄: mean of the trace over one period.
    pub fn average(&self) -> f64 {
        self.average
    }

    /// `η_k`, `0 ≤ k ≤ K_max`.
    pub fn fourier_coeffs(&self) -> &FourierCoefficients {
        &self.fourier
    }

    /// All coefficients resolved by the trace samples.
    pub fn spectrum(&self) -> &FourierCoefficients {
        &self.spectrum
    }

    pub fn trace(&self) -> &PeriodicSpline {
        &self.trace
    }

    pub fn trace_at(&self, y1: f64) -> f64 {
        self.trace.eval(y1)
    }

    pub fn trace_samples(&self) -> &[f64] {
        self.trace.samples()
    }

    pub fn truncation_height(&self) -> Option<f64> {
        self.truncation_height
    }

    pub fn method(&self) -> &CellMethod {
        &self.method
    }

    /// Cell solution at `y`, periodic in `y1`. The discrete field is used up to
    /// `H − 1` (or up to `y2 = 0` when the upper half is analytic); above,
    /// the harmonic extension of the trace.
    pub fn evaluate(&self, y: Point) -> Result<f64> {
        let limit = match self.truncation_height {
            Some(h) => h - TAIL_SWITCH,
            None => 0.0,
        };
        if y[1] <= limit {
            self.field.evaluate(y)
        } else {
            Ok(self.spectrum.extend(y[0], y[1]))
        }
    }

    /// `(1/2π ∫ (a − b)²)^{1/2}`-type distance: the L²(Γ) norm of the trace
    /// difference over one period.
    pub fn trace_l2_distance(&self, other: &CellSolution) -> Result<f64> {
        let (a, b) = (self.trace_samples(), other.trace_samples());
        if a.len() != b.len() {
            return Err(Error::InvalidInput("traces have different sample counts".into()));
        }
        let mean_sq = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64;
        Ok((2.0 * PI * mean_sq).sqrt())
    }

    /// Largest violation of `0 ≤ β ≤ max |data|` over all dofs (first order
    /// only; zero for the second-order cell).
    pub fn max_principle_violation(&self) -> f64 {
        if self.order_tag != CellOrder::First {
            return 0.0;
        }
        self.field
            .values()
            .iter()
            .map(|&v| (-v).max(v - self.max_data).max(0.0))
            .fold(0.0, f64::max)
    }
}

/// Solves `Δw = 0` on the truncated strip with `w = data(y)` on the rough
/// bottom and `∂w/∂y2 = 0` at `y2 = H`.
pub fn solve_cell_with_data(
    profile: &RoughnessProfile,
    height: f64,
    resolution: &CellResolution,
    data: impl Fn(Point) -> f64 + Send + Sync + 'static,
) -> Result<FiniteElementField> {
    if !(height >= MIN_TRUNCATION) {
        return Err(Error::InvalidInput(format!(
            "truncation height must be at least {MIN_TRUNCATION}, got {height}"
        )));
    }
    strip_solve(profile, height, resolution, data)
}

fn strip_solve(
    profile: &RoughnessProfile,
    height: f64,
    resolution: &CellResolution,
    data: impl Fn(Point) -> f64 + Send + Sync + 'static,
) -> Result<FiniteElementField> {
    let mesh = resolution.mesh(DomainKind::MicroStrip { height }, profile)?;
    let dofs = Arc::new(DofMap::new(Arc::new(mesh), resolution.order));
    let sys = assemble_poisson(
        &dofs,
        &Source::Constant(0.0),
        &[
            BoundaryCondition::dirichlet_fn(BoundaryTag::RoughBottom, data),
            BoundaryCondition::neumann(BoundaryTag::NeumannTop),
        ],
    )?;
    solve(&sys, resolution.tol)
}

pub fn solve_cell(
    profile: &RoughnessProfile,
    height: f64,
    resolution: &CellResolution,
    order_tag: CellOrder,
) -> Result<CellSolution> {
    if !(height >= MIN_TRUNCATION) {
        return Err(Error::InvalidInput(format!(
            "truncation height must be at least {MIN_TRUNCATION}, got {height}"
        )));
    }
    truncated(profile, height, resolution, order_tag)
}

fn truncated(
    profile: &RoughnessProfile,
    height: f64,
    resolution: &CellResolution,
    order_tag: CellOrder,
) -> Result<CellSolution> {
    let field = strip_solve(profile, height, resolution, move |y| order_tag.boundary_data(y[1]))?;
    CellSolution::assemble(
        order_tag,
        field,
        resolution,
        Some(height),
        CellMethod::TruncatedStrip,
        profile,
    )
}

/// β on the truncated strip.
pub fn solve_cell_first(profile: &RoughnessProfile, height: f64, resolution: &CellResolution) -> Result<CellSolution> {
    solve_cell(profile, height, resolution, CellOrder::First)
}

/// γ on the truncated strip.
pub fn solve_cell_second(profile: &RoughnessProfile, height: f64, resolution: &CellResolution) -> Result<CellSolution> {
    solve_cell(profile, height, resolution, CellOrder::Second)
}

#[derive(Debug, Clone)]
pub struct DecayReport {
    pub heights: Vec<f64>,
    /// L²(one period) norm of `w − w̄` on each level.
    pub deviation: Vec<f64>,
    /// `−d log(deviation)/d y2`, least squares over levels in the fit window;
    /// `None` when the field is constant.
    pub fitted_rate: Option<f64>,
    /// Mode with the largest trace coefficient (`k ≥ 1`).
    pub dominant_mode: usize,
    /// Decay rate of `|η_k(y2)|` for the dominant mode over the fit window.
    pub mode_rate: Option<f64>,
}

/// Levels `0.5, 1, 1.5, …` used by [`decay_report`], and the window in which
/// rates are fitted (away from the truncation line).
pub const DECAY_STEP: f64 = 0.5;
pub const DECAY_FIT_WINDOW: (f64, f64) = (0.5, 5.0);
const DEVIATION_FLOOR: f64 = 1e-12;

pub fn decay_report(sol: &CellSolution) -> Result<DecayReport> {
    let top = sol.truncation_height().map_or(10.0, |h| h - TAIL_SWITCH);
    let levels: Vec<f64> = (1..)
        .map(|j| DECAY_STEP * j as f64)
        .take_while(|&y| y <= top + 1e-12)
        .collect();
    let n = sol.trace_samples().len();
    let ys = sample_points(n);
    let spectrum0 = sol.spectrum();
    let dominant_mode = (1..=spectrum0.k_max())
        .max_by(|&a, &b| {
            spectrum0.coeff(a as i64).norm().total_cmp(&spectrum0.coeff(b as i64).norm())
        })
        .unwrap_or(1);
    let mut deviation = Vec::with_capacity(levels.len());
    let mut mode_amp = Vec::with_capacity(levels.len());
    for &y2 in &levels {
        let vals = ys
            .iter()
            .map(|&y1| sol.evaluate([y1, y2]))
            .collect::<Result<Vec<f64>>>()?;
        let mean = vals.iter().sum::<f64>() / n as f64;
        let ms = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        deviation.push((2.0 * PI * ms).sqrt());
        let c = FourierCoefficients::from_samples(&vals, dominant_mode)?;
        mode_amp.push(c.coeff(dominant_mode as i64).norm());
    }
    let fit = |amp: &[f64]| -> Option<f64> {
        let pts: Vec<(f64, f64)> = levels
            .iter()
            .zip(amp)
            .filter(|(y, a)| **y >= DECAY_FIT_WINDOW.0 && **y <= DECAY_FIT_WINDOW.1 && **a > DEVIATION_FLOOR)
            .map(|(y, a)| (*y, a.ln()))
            .collect();
        if pts.len() < 2 {
            return None;
        }
        let n = pts.len() as f64;
        let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
        let (mx, my) = (sx / n, sy / n);
        let num: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
        let den: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
        Some(-num / den)
    };
    Ok(DecayReport {
        fitted_rate: fit(&deviation),
        mode_rate: fit(&mode_amp),
        heights: levels,
        deviation,
        dominant_mode,
    })
}

/// `(H, β̄(H))` for each truncation height; heights must increase and be at
/// least [`MIN_SWEEP_HEIGHT`].
pub fn truncation_sensitivity(
    profile: &RoughnessProfile,
    heights: &[f64],
    resolution: &CellResolution,
) -> Result<Vec<(f64, f64)>> {
    if heights.len() < 2 || heights.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput(
            "truncation heights must be increasing with at least two entries".into(),
        ));
    }
    if heights[0] < MIN_SWEEP_HEIGHT {
        return Err(Error::InvalidInput(format!(
            "truncation heights must be at least {MIN_SWEEP_HEIGHT}, got {}",
            heights[0]
        )));
    }
    heights
        .par_iter()
        .map(|&h| truncated(profile, h, resolution, CellOrder::First).map(|s| (h, s.average())))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coarse() -> CellResolution {
        CellResolution {
            refinements: 0,
            ..CellResolution::default()
        }
    }

    #[test]
    fn flat_profile_gives_constant_cells() {
        let flat = RoughnessProfile::flat(0.05).unwrap();
        let b = solve_cell_first(&flat, 6.0, &coarse()).unwrap();
        assert!((b.average() - 0.05).abs() < 1e-12);
        assert!(b.fourier_coeffs().coeffs()[1..].iter().all(|c| c.norm() < 1e-12));
        let g = solve_cell_second(&flat, 6.0, &coarse()).unwrap();
        assert!((g.average() + 0.0025).abs() < 1e-12);
        let d = decay_report(&b).unwrap();
        assert!(d.deviation.iter().all(|&v| v <= 1e-12));
        assert!(d.fitted_rate.is_none());
    }

    #[test]
    fn short_truncation_is_rejected() {
        let flat = RoughnessProfile::flat(0.05).unwrap();
        assert!(solve_cell_first(&flat, 2.0, &coarse()).is_err());
    }

    #[test]
    fn sensitivity_needs_increasing_heights() {
        let flat = RoughnessProfile::flat(0.05).unwrap();
        assert!(truncation_sensitivity(&flat, &[6.0], &coarse()).is_err());
        assert!(truncation_sensitivity(&flat, &[8.0, 6.0], &coarse()).is_err());
    }
}
