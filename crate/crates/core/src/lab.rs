//! Convergence experiment: reference solves on the rough cell, every
//! approximation family on the smooth cell, cross-mesh L² errors and fitted
//! orders.

use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;

use crate::boundary_layers::{
    build_first_full, build_second_full, build_zeroth, error_decomposition, CompositeOrder, NormRecord,
};
use crate::cell::{solve_cell_first, solve_cell_second, CellResolution, CellSolution};
use crate::error::{Error, Result};
use crate::fem::{
    assemble_poisson, solve, BoundaryCondition, DofMap, ElementOrder, FiniteElementField, ScalarFunction, Source,
};
use crate::io_util::write_atomic;
use crate::mesh::{build_mesh, BoundaryTag, DomainKind, DomainSpec, TriangularMesh};
use crate::profile::RoughnessProfile;
use crate::wall_laws::{self, trace_checksum, Mode, WallLawFamily};

pub const DEFAULT_EPSILONS: [f64; 8] = [0.5, 0.4, 0.3, 0.25, 0.2, 0.15, 0.125, 0.1];

/// Everything an error curve can be measured for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FamilyTag {
    Law(WallLawFamily),
    Composite(CompositeOrder),
}

impl FamilyTag {
    /// The six families of the reference convergence table.
    pub const TABLE: [FamilyTag; 6] = [
        FamilyTag::Law(WallLawFamily::U0),
        FamilyTag::Law(WallLawFamily::U1Analytic),
        FamilyTag::Law(WallLawFamily::U2Analytic),
        FamilyTag::Law(WallLawFamily::ExplicitMS1),
        FamilyTag::Law(WallLawFamily::ExplicitMS2),
        FamilyTag::Law(WallLawFamily::ImplicitMS1),
    ];

    pub fn name(self) -> &'static str {
        match self {
            FamilyTag::Law(f) => f.name(),
            FamilyTag::Composite(o) => o.name(),
        }
    }

    fn needs_gamma(self) -> bool {
        matches!(
            self,
            FamilyTag::Law(WallLawFamily::U2Analytic | WallLawFamily::U2Fem | WallLawFamily::ExplicitMS2)
                | FamilyTag::Composite(CompositeOrder::SecondFull)
        )
    }

    fn is_composite(self) -> bool {
        matches!(self, FamilyTag::Composite(_))
    }
}

impl fmt::Display for FamilyTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for FamilyTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Ok(f) = s.parse::<WallLawFamily>() {
            return Ok(FamilyTag::Law(f));
        }
        [CompositeOrder::Zeroth, CompositeOrder::FirstFull, CompositeOrder::SecondFull]
            .into_iter()
            .find(|o| o.name().eq_ignore_ascii_case(s.trim()))
            .map(FamilyTag::Composite)
            .ok_or_else(|| Error::InvalidInput(format!("unknown family `{s}`")))
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub profile: RoughnessProfile,
    pub c: f64,
    /// Sorted decreasingly on validation.
    pub epsilons: Vec<f64>,
    pub families: Vec<FamilyTag>,
    /// Truncation height of the cell strips.
    pub cell_height: f64,
    pub cell_resolution: CellResolution,
    /// Boundary segments per roughness period of the macroscopic meshes.
    pub segments: usize,
    /// Uniform refinements of the smooth (family) meshes.
    pub refinements: usize,
    /// Extra refinements of the rough reference mesh.
    pub reference_extra_refinements: usize,
    pub order: ElementOrder,
    /// Channel length the single-cell norms are scaled to.
    pub domain_length: f64,
    pub with_h1: bool,
    pub jobs: usize,
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        Self {
            profile: RoughnessProfile::cosine(0.05).expect("built-in profile"),
            c: 1.0,
            epsilons: DEFAULT_EPSILONS.to_vec(),
            families: FamilyTag::TABLE.to_vec(),
            cell_height: 10.0,
            cell_resolution: CellResolution::default(),
            segments: 32,
            refinements: 1,
            reference_extra_refinements: 1,
            order: ElementOrder::P2,
            domain_length: 10.0,
            with_h1: false,
            jobs: 1,
        }
    }
}

impl ExperimentPlan {
    /// Checks every precondition and sorts the ε list decreasingly.
    pub fn validate(&mut self) -> Result<()> {
        if self.epsilons.len() < 4 {
            return Err(Error::Config(format!(
                "need ≥ 4 values of epsilon for a meaningful fit, got {}",
                self.epsilons.len()
            )));
        }
        if let Some(e) = self.epsilons.iter().find(|&&e| !(e > 0.0 && e <= 1.0)) {
            return Err(Error::Config(format!("epsilon values must lie in (0, 1], got {e}")));
        }
        self.epsilons.sort_by(|a, b| b.total_cmp(a));
        if self.epsilons.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("epsilon values must be distinct".into()));
        }
        if self.families.is_empty() {
            return Err(Error::Config("no families requested".into()));
        }
        if !(self.c.is_finite()) {
            return Err(Error::Config(format!("C must be finite, got {}", self.c)));
        }
        if !(self.domain_length > 0.0) {
            return Err(Error::Config("domain length must be positive".into()));
        }
        if self.jobs == 0 {
            return Err(Error::Config("jobs must be at least 1".into()));
        }
        if self.cell_height < crate::cell::MIN_TRUNCATION {
            return Err(Error::Config(format!(
                "cell height must be at least {}, got {}",
                crate::cell::MIN_TRUNCATION,
                self.cell_height
            )));
        }
        Ok(())
    }

    /// `sqrt(L / 2πε)`: single-cell norms to the whole channel.
    pub fn norm_scale(&self, epsilon: f64) -> f64 {
        (self.domain_length / (2.0 * std::f64::consts::PI * epsilon)).sqrt()
    }

    fn mesh(&self, kind: DomainKind, refinements: usize) -> Result<TriangularMesh> {
        let mut m = build_mesh(&DomainSpec::new(kind, self.profile.clone(), self.segments))?;
        for _ in 0..refinements {
            m = m.refine();
        }
        Ok(m)
    }

    pub fn smooth_dofs(&self, epsilon: f64) -> Result<Arc<DofMap>> {
        let m = self.mesh(DomainKind::SmoothCell { epsilon }, self.refinements)?;
        Ok(Arc::new(DofMap::new(Arc::new(m), self.order)))
    }

    pub fn reference_dofs(&self, epsilon: f64) -> Result<Arc<DofMap>> {
        let m = self.mesh(
            DomainKind::RoughCell { epsilon },
            self.refinements + self.reference_extra_refinements,
        )?;
        Ok(Arc::new(DofMap::new(Arc::new(m), self.order)))
    }
}

/// The rough-cell problem `−Δu = C`, `u = 0` on the rough bottom and the
/// top, periodic sides.
pub fn solve_reference_on(dofs: &Arc<DofMap>, c: f64) -> Result<FiniteElementField> {
    let sys = assemble_poisson(
        dofs,
        &Source::Constant(c),
        &[
            BoundaryCondition::dirichlet(BoundaryTag::RoughBottom, 0.0),
            BoundaryCondition::dirichlet(BoundaryTag::Top, 0.0),
        ],
    )?;
    solve(&sys, wall_laws::SOLVER_TOL)
}

pub fn solve_reference(plan: &ExperimentPlan, epsilon: f64) -> Result<FiniteElementField> {
    solve_reference_on(&plan.reference_dofs(epsilon)?, plan.c)
}

/// Least-squares slope of `log e` against `log ε`, and the RMS deviation of
/// the fit.
pub fn fit_order(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    if points.len() < 3 {
        return Err(Error::InvalidInput(format!("need ≥ 3 points to fit an order, got {}", points.len())));
    }
    if let Some(&(e, v)) = points.iter().find(|&&(e, v)| !(e > 0.0 && v > 0.0)) {
        return Err(Error::InvalidInput(format!("nonpositive value in fit: ({e}, {v})")));
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidInput("all epsilon values coincide".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let rms = (xs.iter().zip(&ys).map(|(x, y)| (y - icpt - slope * x).powi(2)).sum::<f64>() / n).sqrt();
    Ok((slope, rms))
}

/// One (family, ε) measurement.
#[derive(Debug, Clone)]
pub struct ErrorEntry {
    pub family: FamilyTag,
    pub epsilon: f64,
    pub outcome: std::result::Result<NormRecord, String>,
}

#[derive(Debug, Clone)]
pub struct ConvergenceRecord {
    pub family: FamilyTag,
    /// `(ε, scaled L² error)` for the successful measurements, ε decreasing.
    pub errors: Vec<(f64, f64)>,
    pub alpha: Option<f64>,
    pub fit_residual: Option<f64>,
    /// `ok` or the first failure message.
    pub status: String,
}

impl ConvergenceRecord {
    pub fn error_at(&self, epsilon: f64) -> Option<f64> {
        self.errors.iter().find(|e| e.0 == epsilon).map(|e| e.1)
    }

    /// Number of places where the error grows as ε decreases.
    pub fn inversions(&self) -> usize {
        self.errors.windows(2).filter(|w| w[1].1 > w[0].1).count()
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub plan: ExperimentPlan,
    pub beta_bar: f64,
    pub gamma_bar: f64,
    pub beta_checksum: String,
    pub gamma_checksum: Option<String>,
    pub entries: Vec<ErrorEntry>,
    pub records: Vec<ConvergenceRecord>,
    pub reference_checksums: Vec<(f64, String)>,
}

impl ExperimentReport {
    pub fn record(&self, family: FamilyTag) -> Option<&ConvergenceRecord> {
        self.records.iter().find(|r| r.family == family)
    }

    pub fn all_ok(&self) -> bool {
        self.entries.iter().all(|e| e.outcome.is_ok()) && self.records.iter().all(|r| r.alpha.is_some())
    }

    pub fn errors_csv(&self) -> String {
        let mut s = String::from("family,epsilon,l2_error,h1semi_error\n");
        for e in &self.entries {
            if let Ok(n) = &e.outcome {
                let h1 = n.h1semi.map_or(String::new(), |v| format!("{v:.10e}"));
                let _ = writeln!(s, "{},{},{:.10e},{}", e.family, e.epsilon, n.l2, h1);
            }
        }
        s
    }

    pub fn orders_csv(&self) -> String {
        let mut s = String::from("family,alpha,fit_residual\n");
        for r in &self.records {
            let f = |v: Option<f64>| v.map_or("nan".to_owned(), |x| format!("{x:.6}"));
            let _ = writeln!(s, "{},{},{}", r.family, f(r.alpha), f(r.fit_residual));
        }
        s
    }

    pub fn manifest(&self) -> String {
        let p = &self.plan;
        let mut s = String::from("walllaw-experiment manifest v1\n");
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("profile", p.profile.description().to_owned());
        kv("delta", format!("{}", p.profile.delta()));
        kv("C", format!("{}", p.c));
        kv("epsilons", join(p.epsilons.iter().map(|e| e.to_string())));
        kv("families", join(p.families.iter().map(|f| f.to_string())));
        kv("cell_height", format!("{}", p.cell_height));
        kv("cell_segments", p.cell_resolution.segments.to_string());
        kv("cell_refinements", p.cell_resolution.refinements.to_string());
        kv("cell_order", p.cell_resolution.order.to_string());
        kv("cell_trace_samples", p.cell_resolution.trace_samples.to_string());
        kv("cell_k_max", p.cell_resolution.k_max.to_string());
        kv("cell_tail_switch", format!("H - {}", crate::cell::TAIL_SWITCH));
        kv("segments", p.segments.to_string());
        kv("refinements", p.refinements.to_string());
        kv("reference_extra_refinements", p.reference_extra_refinements.to_string());
        kv("order", p.order.to_string());
        kv("solver_tol", format!("{:e}", wall_laws::SOLVER_TOL));
        kv("solver", format!("LDL^T (RCM ordering) below {} dofs, Jacobi CG above", crate::fem::DIRECT_LIMIT));
        kv("norm_quadrature_degree", crate::fem::DEFAULT_NORM_DEGREE.to_string());
        kv("domain_length", format!("{}", p.domain_length));
        kv("norm_scaling", "single-cell L2(Omega0) times sqrt(L / (2 pi eps))".into());
        kv("interpolation", "reference evaluated at quadrature points of the smooth mesh".into());
        kv("fit", "ordinary least squares of ln(error) on ln(eps), all eps; residual = RMS".into());
        kv("jobs", p.jobs.to_string());
        kv("beta_bar", format!("{:.10}", self.beta_bar));
        kv("gamma_bar", format!("{:.10}", self.gamma_bar));
        kv("gamma_bar_abs", format!("{:.10}", self.gamma_bar.abs()));
        kv("beta_trace_checksum", self.beta_checksum.clone());
        kv("gamma_trace_checksum", self.gamma_checksum.clone().unwrap_or_else(|| "none".into()));
        for (e, c) in &self.reference_checksums {
            kv(&format!("reference_mesh[{e}]"), c.clone());
        }
        for r in &self.records {
            kv(&format!("status[{}]", r.family), r.status.clone());
        }
        s
    }

    /// Writes `errors.csv`, `orders.csv` and `manifest.txt`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        write_atomic(&dir.join("errors.csv"), self.errors_csv().as_bytes())?;
        write_atomic(&dir.join("orders.csv"), self.orders_csv().as_bytes())?;
        write_atomic(&dir.join("manifest.txt"), self.manifest().as_bytes())
    }
}

fn join(it: impl Iterator<Item = String>) -> String {
    it.collect::<Vec<_>>().join(", ")
}

/// Shared cell data.
#[derive(Debug, Clone)]
pub struct CellPair {
    pub beta: Arc<CellSolution>,
    pub gamma: Option<Arc<CellSolution>>,
}

pub fn solve_cells(plan: &ExperimentPlan) -> Result<CellPair> {
    let need_gamma = plan.families.iter().any(|f| f.needs_gamma());
    let beta = Arc::new(solve_cell_first(&plan.profile, plan.cell_height, &plan.cell_resolution)?);
    let gamma = if need_gamma {
        Some(Arc::new(solve_cell_second(&plan.profile, plan.cell_height, &plan.cell_resolution)?))
    } else {
        None
    };
    Ok(CellPair { beta, gamma })
}

fn measure(
    plan: &ExperimentPlan,
    cells: &CellPair,
    family: FamilyTag,
    epsilon: f64,
    reference: &FiniteElementField,
    smooth: &Arc<DofMap>,
) -> Result<NormRecord> {
    let c = plan.c;
    let bb = cells.beta.average();
    let gamma = || {
        cells
            .gamma
            .clone()
            .ok_or_else(|| Error::InvalidInput("second-order cell not solved".into()))
    };
    let approx: Box<dyn ScalarFunction> = match family {
        FamilyTag::Law(f) => Box::new(match f {
            WallLawFamily::U0 => wall_laws::poiseuille(c, smooth),
            WallLawFamily::U1Analytic => wall_laws::averaged_first(c, epsilon, bb, smooth, Mode::Analytic)?,
            WallLawFamily::U1Fem => wall_laws::averaged_first(c, epsilon, bb, smooth, Mode::Fem)?,
            WallLawFamily::U2Analytic => {
                wall_laws::averaged_second(c, epsilon, bb, gamma()?.average(), smooth, Mode::Analytic)?
            }
            WallLawFamily::U2Fem => wall_laws::averaged_second(c, epsilon, bb, gamma()?.average(), smooth, Mode::Fem)?,
            WallLawFamily::ExplicitMS1 => wall_laws::explicit_ms_first(c, epsilon, cells.beta.trace(), bb, smooth)?,
            WallLawFamily::ExplicitMS2 => {
                let g = gamma()?;
                wall_laws::explicit_ms_second(c, epsilon, cells.beta.trace(), g.trace(), bb, g.average(), smooth)?
            }
            WallLawFamily::ImplicitMS1 => wall_laws::implicit_ms_first(c, epsilon, cells.beta.trace(), smooth)?,
        }),
        FamilyTag::Composite(o) => Box::new(match o {
            CompositeOrder::Zeroth => build_zeroth(c, epsilon),
            CompositeOrder::FirstFull => build_first_full(c, epsilon, cells.beta.clone())?,
            CompositeOrder::SecondFull => build_second_full(c, epsilon, cells.beta.clone(), gamma()?)?,
        }),
    };
    let rec = error_decomposition(reference, approx.as_ref(), smooth.mesh(), plan.with_h1 && !family.is_composite())?;
    let k = plan.norm_scale(epsilon);
    Ok(NormRecord {
        l2: rec.l2 * k,
        h1semi: rec.h1semi.map(|h| h * k),
    })
}

/// Runs the whole study with precomputed cells. Failures are recorded per
/// (family, ε) and never abort the other measurements.
pub fn run_experiment_with(plan: &ExperimentPlan, cells: &CellPair) -> Result<ExperimentReport> {
    let mut plan = plan.clone();
    plan.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))?;
    let per_eps: Vec<(Vec<ErrorEntry>, Option<String>)> = pool.install(|| {
        plan.epsilons
            .par_iter()
            .map(|&eps| {
                let fail_all = |msg: String| {
                    plan.families
                        .iter()
                        .map(|&family| ErrorEntry {
                            family,
                            epsilon: eps,
                            outcome: Err(msg.clone()),
                        })
                        .collect::<Vec<_>>()
                };
                let reference = match plan.reference_dofs(eps).and_then(|d| solve_reference_on(&d, plan.c)) {
                    Ok(r) => r,
                    Err(e) => return (fail_all(format!("reference: {e}")), None),
                };
                let smooth = match plan.smooth_dofs(eps) {
                    Ok(s) => s,
                    Err(e) => return (fail_all(format!("smooth mesh: {e}")), None),
                };
                let entries = plan
                    .families
                    .iter()
                    .map(|&family| ErrorEntry {
                        family,
                        epsilon: eps,
                        outcome: measure(&plan, cells, family, eps, &reference, &smooth).map_err(|e| e.to_string()),
                    })
                    .collect();
                (entries, Some(reference.mesh().checksum()))
            })
            .collect()
    });
    let mut entries = Vec::new();
    let mut reference_checksums = Vec::new();
    for (&eps, (es, ck)) in plan.epsilons.iter().zip(per_eps) {
        entries.extend(es);
        if let Some(ck) = ck {
            reference_checksums.push((eps, ck));
        }
    }
    let records = plan
        .families
        .iter()
        .map(|&family| {
            let mine: Vec<&ErrorEntry> = entries.iter().filter(|e| e.family == family).collect();
            let errors: Vec<(f64, f64)> = mine
                .iter()
                .filter_map(|e| e.outcome.as_ref().ok().map(|n| (e.epsilon, n.l2)))
                .collect();
            let first_failure = mine.iter().find_map(|e| e.outcome.as_ref().err().cloned());
            let fit = fit_order(&errors);
            let status = match (&first_failure, &fit) {
                (Some(m), _) => format!("failed: {m}"),
                (None, Err(e)) => format!("fit failed: {e}"),
                (None, Ok(_)) => "ok".to_owned(),
            };
            let (alpha, fit_residual) = match fit {
                Ok((a, r)) => (Some(a), Some(r)),
                Err(_) => (None, None),
            };
            ConvergenceRecord {
                family,
                errors,
                alpha,
                fit_residual,
                status,
            }
        })
        .collect();
    Ok(ExperimentReport {
        beta_bar: cells.beta.average(),
        gamma_bar: cells.gamma.as_ref().map_or(f64::NAN, |g| g.average()),
        beta_checksum: trace_checksum(cells.beta.trace()),
        gamma_checksum: cells.gamma.as_ref().map(|g| trace_checksum(g.trace())),
        plan,
        entries,
        records,
        reference_checksums,
    })
}

/// Solves the cells, then runs the study.
pub fn run_experiment(plan: &ExperimentPlan) -> Result<ExperimentReport> {
    let mut p = plan.clone();
    p.validate()?;
    let cells = solve_cells(&p)?;
    run_experiment_with(&p, &cells)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_exact_powers() {
        let eps = [0.5, 0.4, 0.3, 0.2, 0.1];
        let pts: Vec<_> = eps.iter().map(|&e: &f64| (e, e * e)).collect();
        let (a, r) = fit_order(&pts).unwrap();
        assert!((a - 2.0).abs() < 1e-12 && r < 1e-12);
        let pts: Vec<_> = eps.iter().map(|&e: &f64| (e, 3.0 * e.powf(1.5))).collect();
        assert!((fit_order(&pts).unwrap().0 - 1.5).abs() < 1e-12);
    }

    #[test]
    fn fit_rejects_bad_input() {
        assert!(fit_order(&[(0.1, 1.0), (0.2, 2.0)]).is_err());
        assert!(fit_order(&[(0.1, 1.0), (0.2, 0.0), (0.3, 1.0)]).is_err());
    }

    #[test]
    fn plan_validation() {
        let mut p = ExperimentPlan {
            epsilons: vec![0.1, 0.2],
            ..Default::default()
        };
        assert!(p.validate().unwrap_err().to_string().contains("≥ 4"));
        p.epsilons = vec![0.1, 0.3, 0.2, 0.5];
        p.validate().unwrap();
        assert_eq!(p.epsilons, vec![0.5, 0.3, 0.2, 0.1]);
        p.epsilons = vec![0.1, 0.3, 0.2, 1.5];
        assert!(p.validate().is_err());
    }

    #[test]
    fn family_tags_parse() {
        for f in FamilyTag::TABLE {
            assert_eq!(f.name().parse::<FamilyTag>().unwrap(), f);
        }
        assert_eq!(
            "SecondFull".parse::<FamilyTag>().unwrap(),
            FamilyTag::Composite(CompositeOrder::SecondFull)
        );
    }
}
