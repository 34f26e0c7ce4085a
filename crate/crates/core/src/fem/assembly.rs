//! Assembly of the Poisson problem with Dirichlet, Robin and Wentzell
//! boundary terms. Periodic dofs are merged and Dirichlet dofs eliminated,
//! so the reduced matrix stays symmetric.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use sprs::{CsMat, TriMat};

use super::dofs::DofMap;
use super::element::{AffineMap, ElementOrder};
use super::field::FiniteElementField;
use super::quadrature::{gauss_legendre, TriangleRule};
use crate::error::{Error, Result};
use crate::mesh::{BoundaryEdge, BoundaryTag, Point};

/// Gauss points per boundary quadrature panel.
pub const EDGE_GAUSS_POINTS: usize = 6;
/// Quadrature panels per period of an oscillating Robin coefficient.
pub const PANELS_PER_PERIOD: f64 = 16.0;

pub type PointFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum Source {
    Constant(f64),
    Function(PointFn),
}

impl Source {
    fn at(&self, x: Point) -> f64 {
        match self {
            Source::Constant(c) => *c,
            Source::Function(f) => f(x),
        }
    }
}

#[derive(Clone)]
pub enum BcKind {
    DirichletConstant(f64),
    DirichletFunction(PointFn),
    /// `u = α ∂u/∂n_in`, i.e. the boundary term `(u/α, v)`.
    RobinConstant(f64),
    /// Robin condition with coefficient `α(x1)` oscillating with `period`.
    RobinOscillating {
        alpha: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        period: f64,
    },
    NeumannZero,
    /// `u = ε β̄ ∂u/∂x2 + (ε²/2) γ̄ ∂²u/∂x2²` on a flat wall where `−Δu = c`,
    /// imposed in the symmetric weak form.
    WentzellConstant {
        beta_bar: f64,
        gamma_bar: f64,
        epsilon: f64,
        c: f64,
    },
}

impl fmt::Debug for BcKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BcKind::DirichletConstant(v) => write!(f, "DirichletConstant({v})"),
            BcKind::DirichletFunction(_) => write!(f, "DirichletFunction"),
            BcKind::RobinConstant(a) => write!(f, "RobinConstant({a})"),
            BcKind::RobinOscillating { period, .. } => write!(f, "RobinOscillating(period {period})"),
            BcKind::NeumannZero => write!(f, "NeumannZero"),
            BcKind::WentzellConstant {
                beta_bar,
                gamma_bar,
                epsilon,
                c,
            } => write!(f, "Wentzell(beta_bar {beta_bar}, gamma_bar {gamma_bar}, eps {epsilon}, C {c})"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BoundaryCondition {
    pub tag: BoundaryTag,
    pub kind: BcKind,
}

impl BoundaryCondition {
    pub fn new(tag: BoundaryTag, kind: BcKind) -> Self {
        Self { tag, kind }
    }

    pub fn dirichlet(tag: BoundaryTag, value: f64) -> Self {
        Self::new(tag, BcKind::DirichletConstant(value))
    }

    pub fn dirichlet_fn(tag: BoundaryTag, g: impl Fn(Point) -> f64 + Send + Sync + 'static) -> Self {
        Self::new(tag, BcKind::DirichletFunction(Arc::new(g)))
    }

    pub fn robin(tag: BoundaryTag, alpha: f64) -> Self {
        Self::new(tag, BcKind::RobinConstant(alpha))
    }

    pub fn neumann(tag: BoundaryTag) -> Self {
        Self::new(tag, BcKind::NeumannZero)
    }

    fn is_dirichlet(&self) -> bool {
        matches!(self.kind, BcKind::DirichletConstant(_) | BcKind::DirichletFunction(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DofStatus {
    Free(usize),
    Fixed(f64),
}

/// Periodic merging and Dirichlet elimination record.
#[derive(Debug, Clone)]
pub struct Constraints {
    status: Vec<DofStatus>,
    n_free: usize,
}

impl Constraints {
    pub fn status(&self, d: usize) -> DofStatus {
        self.status[d]
    }

    pub fn n_free(&self) -> usize {
        self.n_free
    }

    /// Full dof vector from reduced unknowns.
    pub fn expand(&self, x: &[f64]) -> Vec<f64> {
        self.status
            .iter()
            .map(|s| match *s {
                DofStatus::Free(k) => x[k],
                DofStatus::Fixed(v) => v,
            })
            .collect()
    }

    /// Reduced vector from a full dof vector (masters' values).
    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.n_free];
        for (d, s) in self.status.iter().enumerate() {
            if let DofStatus::Free(k) = *s {
                x[k] = full[d];
            }
        }
        x
    }
}

/// Reduced system `A x = b` on the free dofs.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    matrix: CsMat<f64>,
    rhs: Vec<f64>,
    constraints: Constraints,
    dofs: Arc<DofMap>,
    epsilon: Option<f64>,
}

impl LinearSystem {
    pub fn matrix(&self) -> &CsMat<f64> {
        &self.matrix
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn rhs_mut(&mut self) -> &mut [f64] {
        &mut self.rhs
    }

    pub fn constraints(&self) -> &Constraints {
        &self.constraints
    }

    pub fn dof_map(&self) -> &Arc<DofMap> {
        &self.dofs
    }

    /// Scale parameter of a Wentzell form, used in indefiniteness reports.
    pub fn epsilon(&self) -> Option<f64> {
        self.epsilon
    }

    pub fn expand(&self, x: &[f64]) -> Result<FiniteElementField> {
        FiniteElementField::new(self.dofs.clone(), self.constraints.expand(x))
    }

    /// `‖A − Aᵀ‖_max / ‖A‖_max`.
    pub fn asymmetry(&self) -> f64 {
        let mut entries: HashMap<(usize, usize), f64> = HashMap::new();
        let mut amax: f64 = 0.0;
        for (v, (i, j)) in self.matrix.iter() {
            entries.insert((i, j), *v);
            amax = amax.max(v.abs());
        }
        let worst = entries
            .iter()
            .map(|(&(i, j), v)| (v - entries.get(&(j, i)).copied().unwrap_or(0.0)).abs())
            .fold(0.0, f64::max);
        if amax == 0.0 {
            0.0
        } else {
            worst / amax
        }
    }

    /// Reduced load `(g, v)` on edges with `tag`, `g` sampled by Gauss rules
    /// on `panels_per_edge` panels.
    pub fn boundary_load(&self, tag: BoundaryTag, g: &dyn Fn(Point) -> f64) -> Vec<f64> {
        let order = self.dofs.order();
        let mut out = vec![0.0; self.constraints.n_free];
        let (gx, gw) = gauss_legendre(EDGE_GAUSS_POINTS);
        let mut psi = [0.0; 3];
        for e in self.dofs.mesh().boundary_edges().iter().filter(|e| e.tag == tag) {
            let (p, q, len) = edge_geometry(&self.dofs, e);
            let ed = self.dofs.edge_dofs(e);
            for (r, w) in gx.iter().zip(&gw) {
                let x = lerp(p, q, *r);
                order.edge_values(*r, &mut psi);
                let gv = g(x) * w * len;
                for a in 0..order.edge_dofs() {
                    if let DofStatus::Free(k) = self.constraints.status(ed[a]) {
                        out[k] += gv * psi[a];
                    }
                }
            }
        }
        out
    }
}

/// Assembles `(∇u, ∇v) + boundary terms = (source, v) + boundary loads`.
pub fn assemble_poisson(
    dofs: &Arc<DofMap>,
    source: &Source,
    bcs: &[BoundaryCondition],
) -> Result<LinearSystem> {
    let mesh = dofs.mesh();
    let by_tag = check_coverage(mesh.boundary_edges(), bcs)?;
    let constraints = build_constraints(dofs, bcs)?;
    let order = dofs.order();
    let nl = order.local_dofs();

    let mut tri = TriMat::new((constraints.n_free, constraints.n_free));
    let mut rhs = vec![0.0; constraints.n_free];
    let add = |i: usize, j: usize, v: f64, rhs: &mut Vec<f64>, tri: &mut TriMat<f64>| {
        match (constraints.status[i], constraints.status[j]) {
            (DofStatus::Free(a), DofStatus::Free(b)) => tri.add_triplet(a, b, v),
            (DofStatus::Free(a), DofStatus::Fixed(g)) => rhs[a] -= v * g,
            _ => {}
        }
    };

    // element stiffness and load
    let rule = TriangleRule::for_degree(2 * order.degree() + 2);
    let mut phi = vec![[0.0; 6]; rule.len()];
    let mut dphi = vec![[[0.0; 2]; 6]; rule.len()];
    for (q, p) in rule.points.iter().enumerate() {
        order.values(p[0], p[1], &mut phi[q]);
        order.gradients(p[0], p[1], &mut dphi[q]);
    }
    for t in 0..mesh.triangles().len() {
        let map = AffineMap::new(mesh.triangle_points(t));
        let det = map.det();
        let mut k = [[0.0; 6]; 6];
        let mut f = [0.0; 6];
        for q in 0..rule.len() {
            let w = rule.weights[q] * det;
            let mut g = [[0.0; 2]; 6];
            for i in 0..nl {
                g[i] = map.push_gradient(dphi[q][i]);
            }
            let p = rule.points[q];
            let s = source.at(map.map(p[0], p[1])) * w;
            for i in 0..nl {
                f[i] += s * phi[q][i];
                for j in 0..nl {
                    k[i][j] += w * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
                }
            }
        }
        let ld = dofs.element_dofs(t);
        for i in 0..nl {
            if let DofStatus::Free(a) = constraints.status[ld[i]] {
                rhs[a] += f[i];
            }
            for j in 0..nl {
                add(ld[i], ld[j], k[i][j], &mut rhs, &mut tri);
            }
        }
    }

    // boundary terms
    let (gx, gw) = gauss_legendre(EDGE_GAUSS_POINTS);
    let ne = order.edge_dofs();
    let mut epsilon = None;
    let mut psi = [0.0; 3];
    let mut dpsi = [0.0; 3];
    for e in mesh.boundary_edges() {
        let Some(bc) = by_tag.get(&e.tag).map(|&i| &bcs[i]) else {
            continue;
        };
        let (p, q, len) = edge_geometry(dofs, e);
        let ed = dofs.edge_dofs(e);
        let mut m = [[0.0; 3]; 3];
        let mut f = [0.0; 3];
        match &bc.kind {
            BcKind::RobinConstant(alpha) => {
                if !(*alpha > 0.0) {
                    return Err(Error::Coercivity(format!(
                        "Robin coefficient {alpha} on {} must be positive",
                        e.tag
                    )));
                }
                edge_mass(order, &gx, &gw, len, 1, |_| Ok(1.0 / alpha), p, q, &mut m)?;
            }
            BcKind::RobinOscillating { alpha, period } => {
                let panels = (len / (period / PANELS_PER_PERIOD)).ceil().max(1.0) as usize;
                edge_mass(
                    order,
                    &gx,
                    &gw,
                    len,
                    panels,
                    |x| {
                        let a = alpha(x[0]);
                        if a > 0.0 && a.is_finite() {
                            Ok(1.0 / a)
                        } else {
                            Err(Error::Coercivity(format!(
                                "Robin coefficient {a} at x1 = {} is not positive",
                                x[0]
                            )))
                        }
                    },
                    p,
                    q,
                    &mut m,
                )?;
            }
            BcKind::WentzellConstant {
                beta_bar,
                gamma_bar,
                epsilon: eps,
                c,
            } => {
                if !(*beta_bar > 0.0) || !(*eps > 0.0) {
                    return Err(Error::Coercivity(format!(
                        "Wentzell form needs beta_bar > 0 and epsilon > 0, got {beta_bar}, {eps}"
                    )));
                }
                epsilon = Some(*eps);
                let kappa = eps * gamma_bar / (2.0 * beta_bar);
                let robin = 1.0 / (eps * beta_bar);
                edge_mass(order, &gx, &gw, len, 1, |_| Ok(robin), p, q, &mut m)?;
                for (r, w) in gx.iter().zip(&gw) {
                    order.edge_values(*r, &mut psi);
                    order.edge_derivatives(*r, &mut dpsi);
                    for a in 0..ne {
                        f[a] -= kappa * c * psi[a] * w * len;
                        for b in 0..ne {
                            m[a][b] -= kappa * dpsi[a] * dpsi[b] * w / len;
                        }
                    }
                }
            }
            _ => continue,
        }
        for a in 0..ne {
            if let DofStatus::Free(k) = constraints.status[ed[a]] {
                rhs[k] += f[a];
            }
            for b in 0..ne {
                add(ed[a], ed[b], m[a][b], &mut rhs, &mut tri);
            }
        }
    }

    Ok(LinearSystem {
        matrix: tri.to_csr(),
        rhs,
        constraints,
        dofs: dofs.clone(),
        epsilon,
    })
}

/// Symmetric Wentzell problem on a smooth cell: `−Δu = c`, Wentzell law on
/// the flat bottom, `u = 0` on the top, periodic sides.
pub fn assemble_wentzell(
    dofs: &Arc<DofMap>,
    c: f64,
    epsilon: f64,
    beta_bar: f64,
    gamma_bar: f64,
) -> Result<LinearSystem> {
    assemble_poisson(
        dofs,
        &Source::Constant(c),
        &[
            BoundaryCondition::new(
                BoundaryTag::SmoothBottom,
                BcKind::WentzellConstant {
                    beta_bar,
                    gamma_bar,
                    epsilon,
                    c,
                },
            ),
            BoundaryCondition::dirichlet(BoundaryTag::Top, 0.0),
        ],
    )
}

fn check_coverage(
    edges: &[BoundaryEdge],
    bcs: &[BoundaryCondition],
) -> Result<HashMap<BoundaryTag, usize>> {
    let mut by_tag = HashMap::new();
    for (i, bc) in bcs.iter().enumerate() {
        if bc.tag.is_periodic_side() {
            return Err(Error::Config(format!(
                "periodic side {} is identified automatically and takes no condition",
                bc.tag
            )));
        }
        if by_tag.insert(bc.tag, i).is_some() {
            return Err(Error::Config(format!("boundary tag {} has two conditions", bc.tag)));
        }
    }
    for e in edges {
        if !e.tag.is_periodic_side() && !by_tag.contains_key(&e.tag) {
            return Err(Error::Config(format!("boundary tag {} has no condition", e.tag)));
        }
    }
    Ok(by_tag)
}

fn build_constraints(dofs: &DofMap, bcs: &[BoundaryCondition]) -> Result<Constraints> {
    let n = dofs.n_dofs();
    let mut fixed: Vec<Option<f64>> = vec![None; n];
    for bc in bcs.iter().filter(|b| b.is_dirichlet()) {
        for d in dofs.tagged_dofs(bc.tag) {
            let m = dofs.master(d);
            if fixed[m].is_none() {
                fixed[m] = Some(match &bc.kind {
                    BcKind::DirichletConstant(v) => *v,
                    BcKind::DirichletFunction(g) => g(dofs.coords()[d]),
                    _ => unreachable!(),
                });
            }
        }
    }
    let mut status = vec![DofStatus::Fixed(0.0); n];
    let mut n_free = 0;
    for d in 0..n {
        if dofs.master(d) == d {
            status[d] = match fixed[d] {
                Some(v) => DofStatus::Fixed(v),
                None => {
                    n_free += 1;
                    DofStatus::Free(n_free - 1)
                }
            };
        }
    }
    for d in 0..n {
        status[d] = status[dofs.master(d)];
    }
    if n_free == 0 {
        return Err(Error::Config("every dof is constrained".into()));
    }
    Ok(Constraints { status, n_free })
}

fn edge_geometry(dofs: &DofMap, e: &BoundaryEdge) -> (Point, Point, f64) {
    let v = dofs.mesh().vertices();
    let (p, q) = (v[e.vertices[0]], v[e.vertices[1]]);
    (p, q, (q[0] - p[0]).hypot(q[1] - p[1]))
}

fn lerp(p: Point, q: Point, r: f64) -> Point {
    [p[0] + r * (q[0] - p[0]), p[1] + r * (q[1] - p[1])]
}

/// Accumulates `∫_e w(x) ψa ψb ds` over `panels` equal panels.
#[allow(clippy::too_many_arguments)]
fn edge_mass(
    order: ElementOrder,
    gx: &[f64],
    gw: &[f64],
    len: f64,
    panels: usize,
    weight: impl Fn(Point) -> Result<f64>,
    p: Point,
    q: Point,
    m: &mut [[f64; 3]; 3],
) -> Result<()> {
    let ne = order.edge_dofs();
    let mut psi = [0.0; 3];
    let h = 1.0 / panels as f64;
    for k in 0..panels {
        for (x, w) in gx.iter().zip(gw) {
            let r = (k as f64 + x) * h;
            order.edge_values(r, &mut psi);
            let s = weight(lerp(p, q, r))? * w * h * len;
            for a in 0..ne {
                for b in 0..ne {
                    m[a][b] += s * psi[a] * psi[b];
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::solve::{solve, DEFAULT_TOL};
    use crate::mesh::{build_mesh, DomainKind, DomainSpec};
    use crate::profile::RoughnessProfile;

    fn strip(order: ElementOrder, segments: usize) -> Arc<DofMap> {
        let flat = RoughnessProfile::flat(0.05).unwrap();
        let mesh = build_mesh(&DomainSpec::new(DomainKind::SmoothCell { epsilon: 0.2 }, flat, segments)).unwrap();
        Arc::new(DofMap::new(Arc::new(mesh), order))
    }

    #[test]
    fn p2_poiseuille_is_exact_at_dofs() {
        let dofs = strip(ElementOrder::P2, 8);
        let sys = assemble_poisson(
            &dofs,
            &Source::Constant(1.0),
            &[
                BoundaryCondition::dirichlet(BoundaryTag::SmoothBottom, 0.0),
                BoundaryCondition::dirichlet(BoundaryTag::Top, 0.0),
            ],
        )
        .unwrap();
        assert!(sys.asymmetry() <= 1e-12);
        let u = solve(&sys, DEFAULT_TOL).unwrap();
        for (p, v) in dofs.coords().iter().zip(u.values()) {
            assert!((v - p[1] * (1.0 - p[1]) / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_gamma_wentzell_equals_robin() {
        let dofs = strip(ElementOrder::P2, 8);
        let (eps, beta) = (0.1, 0.43215);
        let w = assemble_wentzell(&dofs, 1.0, eps, beta, 0.0).unwrap();
        let r = assemble_poisson(
            &dofs,
            &Source::Constant(1.0),
            &[
                BoundaryCondition::robin(BoundaryTag::SmoothBottom, eps * beta),
                BoundaryCondition::dirichlet(BoundaryTag::Top, 0.0),
            ],
        )
        .unwrap();
        assert_eq!(w.rhs(), r.rhs());
        let diff = (w.matrix() - r.matrix()).data().iter().fold(0.0f64, |a, v| a.max(v.abs()));
        assert_eq!(diff, 0.0);
    }

    #[test]
    fn coverage_is_enforced() {
        let dofs = strip(ElementOrder::P1, 8);
        let err = assemble_poisson(
            &dofs,
            &Source::Constant(1.0),
            &[BoundaryCondition::dirichlet(BoundaryTag::Top, 0.0)],
        )
        .unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        let err = assemble_poisson(
            &dofs,
            &Source::Constant(1.0),
            &[
                BoundaryCondition::dirichlet(BoundaryTag::Top, 0.0),
                BoundaryCondition::dirichlet(BoundaryTag::Top, 1.0),
                BoundaryCondition::neumann(BoundaryTag::SmoothBottom),
            ],
        )
        .unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn nonpositive_oscillating_robin_is_rejected() {
        let dofs = strip(ElementOrder::P2, 8);
        let err = assemble_poisson(
            &dofs,
            &Source::Constant(1.0),
            &[
                BoundaryCondition::new(
                    BoundaryTag::SmoothBottom,
                    BcKind::RobinOscillating {
                        alpha: Arc::new(|x1: f64| (x1 * 10.0).sin()),
                        period: 0.2 * 2.0 * std::f64::consts::PI,
                    },
                ),
                BoundaryCondition::dirichlet(BoundaryTag::Top, 0.0),
            ],
        )
        .unwrap_err();
        assert!(matches!(err, Error::Coercivity(_)));
    }
}
