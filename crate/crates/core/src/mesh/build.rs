//! Structured mesher for graph-bounded periodic channels.
//!
//! Every domain is a union of at most two blocks sharing the columns
//! `x1 = i W / n`:
//!
//! * a rough layer between the graph and the line `x2 = 0`; each column is
//!   split into as many equal cells as keep them roughly square, and
//!   neighbouring columns are stitched by a shortest-diagonal ladder, and
//! * a rectangular block `[0, W] x [0, T]` with uniform rows of height close to
//!   the column spacing, each quadrilateral cut along its shorter diagonal.
//!
//! The line `x2 = 0` is always a mesh line.

use std::f64::consts::PI;

use super::{BoundaryEdge, BoundaryTag, GraphBoundary, Point, TriangularMesh};
use crate::error::{Error, Result};
use crate::profile::RoughnessProfile;

/// Upper bound on circumradius / inradius of any generated triangle.
pub const MAX_ASPECT_RATIO: f64 = 8.0;
/// Fewest boundary segments accepted per roughness period.
pub const MIN_SEGMENTS_PER_PERIOD: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DomainKind {
    /// `ω^ε`: `x1 ∈ [0, 2πε]`, `x2 ∈ [ε f(x1/ε), 1]`.
    RoughCell { epsilon: f64 },
    /// `ω^ε₊`: `x1 ∈ [0, 2πε]`, `x2 ∈ [0, 1]`.
    SmoothCell { epsilon: f64 },
    /// Truncated cell strip: `y1 ∈ [0, 2π]`, `y2 ∈ [f(y1), H]`.
    MicroStrip { height: f64 },
    /// Rough layer of the cell strip: `y2 ∈ [f(y1), 0]`.
    RoughLayer,
    /// Plain non-periodic rectangle `[0, width] x [0, height]`.
    Rectangle { width: f64, height: f64 },
}

#[derive(Debug, Clone)]
pub struct DomainSpec {
    pub kind: DomainKind,
    pub profile: RoughnessProfile,
    /// Boundary segments per roughness period (columns of the mapped grid).
    pub segments: usize,
}

impl DomainSpec {
    pub fn new(kind: DomainKind, profile: RoughnessProfile, segments: usize) -> Self {
        Self {
            kind,
            profile,
            segments,
        }
    }

    /// Picks the column count from a requested mesh size.
    pub fn with_target_h(kind: DomainKind, profile: RoughnessProfile, target_h: f64) -> Result<Self> {
        if !(target_h > 0.0) {
            return Err(Error::InvalidDomain(format!(
                "target_h must be positive, got {target_h}"
            )));
        }
        let width = Self::new(kind, profile.clone(), 1).width();
        let segments = (width / target_h).ceil() as usize;
        Ok(Self::new(kind, profile, segments))
    }

    pub fn width(&self) -> f64 {
        match self.kind {
            DomainKind::RoughCell { epsilon } | DomainKind::SmoothCell { epsilon } => {
                2.0 * PI * epsilon
            }
            DomainKind::MicroStrip { .. } | DomainKind::RoughLayer => 2.0 * PI,
            DomainKind::Rectangle { width, .. } => width,
        }
    }

    fn scale(&self) -> f64 {
        match self.kind {
            DomainKind::RoughCell { epsilon } | DomainKind::SmoothCell { epsilon } => epsilon,
            _ => 1.0,
        }
    }

    fn top(&self) -> Option<f64> {
        match self.kind {
            DomainKind::RoughCell { .. } | DomainKind::SmoothCell { .. } => Some(1.0),
            DomainKind::MicroStrip { height } => Some(height),
            DomainKind::RoughLayer => None,
            DomainKind::Rectangle { height, .. } => Some(height),
        }
    }

    fn has_rough_layer(&self) -> bool {
        matches!(
            self.kind,
            DomainKind::RoughCell { .. } | DomainKind::MicroStrip { .. } | DomainKind::RoughLayer
        )
    }

    fn periodic(&self) -> bool {
        !matches!(self.kind, DomainKind::Rectangle { .. })
    }

    fn validate(&self) -> Result<()> {
        let positive = |v: f64, what: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidDomain(format!("{what} must be positive, got {v}")))
            }
        };
        match self.kind {
            DomainKind::RoughCell { epsilon } | DomainKind::SmoothCell { epsilon } => {
                positive(epsilon, "epsilon")?;
                if self.has_rough_layer() && epsilon * self.profile.min_value() <= -1.0 {
                    return Err(Error::InvalidDomain(format!(
                        "roughness depth {} reaches the top wall",
                        -epsilon * self.profile.min_value()
                    )));
                }
            }
            DomainKind::MicroStrip { height } => positive(height, "strip height")?,
            DomainKind::RoughLayer => {}
            DomainKind::Rectangle { width, height } => {
                positive(width, "width")?;
                positive(height, "height")?;
            }
        }
        if self.segments < MIN_SEGMENTS_PER_PERIOD {
            return Err(Error::InvalidDomain(format!(
                "{} segments per period cannot resolve the roughness (need at least {})",
                self.segments, MIN_SEGMENTS_PER_PERIOD
            )));
        }
        Ok(())
    }
}

/// Builds the conforming mesh described by `spec`.
pub fn build_mesh(spec: &DomainSpec) -> Result<TriangularMesh> {
    spec.validate()?;
    let n = spec.segments;
    let width = spec.width();
    let dx = width / n as f64;
    let scale = spec.scale();
    let xs: Vec<f64> = (0..=n).map(|i| width * i as f64 / n as f64).collect();

    let mut vertices: Vec<Point> = Vec::new();
    let mut triangles: Vec<[usize; 3]> = Vec::new();

    // columns[i]: vertex indices of column i from the bottom up to x2 = 0
    let mut columns: Vec<Vec<usize>> = Vec::with_capacity(n + 1);
    if spec.has_rough_layer() {
        let mut bottom: Vec<f64> = xs
            .iter()
            .map(|&x| scale * spec.profile.evaluate(x / scale))
            .collect();
        bottom[n] = bottom[0];
        for (i, (&x, &b)) in xs.iter().zip(&bottom).enumerate() {
            let m = if i == n {
                columns[0].len() - 1
            } else {
                layer_rows(-b, dx)
            };
            let col = (0..=m)
                .map(|j| {
                    let y = if j == m { 0.0 } else { b * (1.0 - j as f64 / m as f64) };
                    vertices.push([x, y]);
                    vertices.len() - 1
                })
                .collect();
            columns.push(col);
        }
        for i in 0..n {
            ladder(&vertices, &columns[i], &columns[i + 1], &mut triangles);
        }
    } else {
        for &x in &xs {
            vertices.push([x, 0.0]);
            columns.push(vec![vertices.len() - 1]);
        }
    }

    // rows[r][i]: upper-block vertices, row 0 being the line x2 = 0
    let mut rows: Vec<Vec<usize>> = vec![columns.iter().map(|c| *c.last().unwrap()).collect()];
    if let Some(top) = spec.top() {
        let upper = ((top / dx).round() as usize).max(1);
        for j in 1..=upper {
            let y = if j == upper { top } else { top * j as f64 / upper as f64 };
            rows.push(
                xs.iter()
                    .map(|&x| {
                        vertices.push([x, y]);
                        vertices.len() - 1
                    })
                    .collect(),
            );
        }
        for j in 0..upper {
            for i in 0..n {
                let q = [rows[j][i], rows[j][i + 1], rows[j + 1][i + 1], rows[j + 1][i]];
                triangles.extend(split_quad(&vertices, q));
            }
        }
    }

    let bottom_tag = if spec.has_rough_layer() {
        BoundaryTag::RoughBottom
    } else {
        BoundaryTag::SmoothBottom
    };
    let top_tag = match spec.kind {
        DomainKind::MicroStrip { .. } => BoundaryTag::NeumannTop,
        DomainKind::RoughLayer => BoundaryTag::Interface,
        _ => BoundaryTag::Top,
    };
    let (left_tag, right_tag) = if spec.periodic() {
        (BoundaryTag::PeriodicLeft, BoundaryTag::PeriodicRight)
    } else {
        (BoundaryTag::Left, BoundaryTag::Right)
    };
    let edge = |a: usize, b: usize, tag| BoundaryEdge {
        vertices: [a, b],
        tag,
    };
    let mut boundary = Vec::new();
    for i in 0..n {
        boundary.push(edge(columns[i][0], columns[i + 1][0], bottom_tag));
    }
    let last = rows.last().unwrap();
    for i in 0..n {
        boundary.push(edge(last[i + 1], last[i], top_tag));
    }
    // vertical sides, bottom to top
    let side = |col: &[usize], i: usize| -> Vec<usize> {
        col.iter().copied().chain(rows[1..].iter().map(|r| r[i])).collect()
    };
    let left = side(&columns[0], 0);
    let right = side(&columns[n], n);
    for w in left.windows(2) {
        boundary.push(edge(w[1], w[0], left_tag));
    }
    for w in right.windows(2) {
        boundary.push(edge(w[0], w[1], right_tag));
    }
    let periodic_pairs = if spec.periodic() {
        left.iter().copied().zip(right.iter().copied()).collect()
    } else {
        Vec::new()
    };
    let graph = spec.has_rough_layer().then(|| GraphBoundary {
        profile: spec.profile.clone(),
        scale,
    });
    let mesh = TriangularMesh::from_parts(vertices, triangles, boundary, periodic_pairs, graph)?;
    let aspect = mesh.max_aspect_ratio();
    if aspect > MAX_ASPECT_RATIO {
        return Err(Error::MeshQuality(format!(
            "aspect ratio {aspect:.3} exceeds {MAX_ASPECT_RATIO} with {n} segments per period; \
             the roughness clearance needs a finer column spacing"
        )));
    }
    Ok(mesh)
}

/// Rows of a layer column of the given thickness: cells about as tall as wide.
fn layer_rows(thickness: f64, dx: f64) -> usize {
    ((thickness / dx).round() as usize).max(1)
}

/// Triangulates the strip between two vertical node columns (bottom to top)
/// by advancing along the shorter diagonal.
fn ladder(vertices: &[Point], left: &[usize], right: &[usize], out: &mut Vec<[usize; 3]>) {
    let len = |i: usize, j: usize| {
        let (p, q) = (vertices[i], vertices[j]);
        (p[0] - q[0]).hypot(p[1] - q[1])
    };
    let (mut a, mut b) = (0, 0);
    while a + 1 < left.len() || b + 1 < right.len() {
        let advance_left = if a + 1 == left.len() {
            false
        } else if b + 1 == right.len() {
            true
        } else {
            len(left[a + 1], right[b]) <= len(left[a], right[b + 1])
        };
        if advance_left {
            out.push([left[a], right[b], left[a + 1]]);
            a += 1;
        } else {
            out.push([left[a], right[b], right[b + 1]]);
            b += 1;
        }
    }
}

/// Splits the counter-clockwise quad `[a, b, c, d]` along its shorter diagonal.
fn split_quad(vertices: &[Point], q: [usize; 4]) -> [[usize; 3]; 2] {
    let [a, b, c, d] = q;
    let len = |i: usize, j: usize| {
        let (p, r) = (vertices[i], vertices[j]);
        (p[0] - r[0]).hypot(p[1] - r[1])
    };
    if len(b, d) < len(a, c) * (1.0 - 1e-9) {
        [[a, b, d], [b, c, d]]
    } else {
        [[a, b, c], [a, c, d]]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::BoundaryTag;

    fn paper_profile() -> RoughnessProfile {
        RoughnessProfile::cosine(0.05).unwrap()
    }

    #[test]
    fn smooth_cell_is_a_rectangle() {
        let flat = RoughnessProfile::flat(0.05).unwrap();
        let spec = DomainSpec::with_target_h(DomainKind::SmoothCell { epsilon: 0.5 }, flat, 0.1).unwrap();
        let m = build_mesh(&spec).unwrap();
        let w = PI * 1.0;
        assert!((m.area() - w).abs() < 1e-12);
        for e in m.boundary_edges() {
            for &v in &e.vertices {
                let [x, y] = m.vertices()[v];
                let on_side = x.abs() < 1e-14
                    || (x - w).abs() < 1e-12
                    || y.abs() < 1e-14
                    || (y - 1.0).abs() < 1e-14;
                assert!(on_side, "boundary vertex ({x}, {y}) off the rectangle");
            }
        }
    }

    #[test]
    fn rough_cell_bottom_follows_graph() {
        let eps = 0.5;
        let p = paper_profile();
        let m = build_mesh(&DomainSpec::new(DomainKind::RoughCell { epsilon: eps }, p.clone(), 32)).unwrap();
        for v in m.tagged_vertices(BoundaryTag::RoughBottom) {
            let [x, y] = m.vertices()[v];
            assert!((y - eps * p.evaluate(x / eps)).abs() < 1e-12);
        }
        assert!(m.max_aspect_ratio() <= MAX_ASPECT_RATIO);
        // x2 = 0 is a mesh line
        assert!(m.vertices().iter().filter(|v| v[1] == 0.0).count() >= 33);
    }

    #[test]
    fn micro_strip_has_neumann_top() {
        let m = build_mesh(&DomainSpec::new(
            DomainKind::MicroStrip { height: 10.0 },
            paper_profile(),
            32,
        ))
        .unwrap();
        let [xmin, _, xmax, ymax] = m.bounding_box();
        assert!((xmax - xmin - 2.0 * PI).abs() < 1e-12);
        assert_eq!(ymax, 10.0);
        let top = m.tagged_vertices(BoundaryTag::NeumannTop);
        assert_eq!(top.len(), 33);
        assert!(top.iter().all(|&v| m.vertices()[v][1] == 10.0));
    }

    #[test]
    fn periodic_pairs_cover_one_side() {
        let m = build_mesh(&DomainSpec::new(
            DomainKind::RoughCell { epsilon: 0.25 },
            paper_profile(),
            32,
        ))
        .unwrap();
        let left = m.tagged_vertices(BoundaryTag::PeriodicLeft);
        assert_eq!(left.len(), m.periodic_pairs().len());
    }

    #[test]
    fn polygonal_area_is_exact() {
        let eps = 0.3;
        let p = paper_profile();
        let n = 24;
        let m = build_mesh(&DomainSpec::new(DomainKind::RoughCell { epsilon: eps }, p.clone(), n)).unwrap();
        let w = 2.0 * PI * eps;
        let dx = w / n as f64;
        let below: f64 = (0..n)
            .map(|i| {
                let a = eps * p.evaluate(i as f64 * dx / eps);
                let b = eps * p.evaluate((i + 1) as f64 * dx / eps);
                -0.5 * (a + b) * dx
            })
            .sum();
        let exact = w + below;
        assert!(((m.area() - exact) / exact).abs() < 1e-10);
    }

    #[test]
    fn rejects_coarse_resolution() {
        let err = build_mesh(&DomainSpec::new(DomainKind::MicroStrip { height: 10.0 }, paper_profile(), 4))
            .unwrap_err();
        assert!(matches!(err, Error::InvalidDomain(_)));
    }

    #[test]
    fn rejects_nonpositive_target_h() {
        assert!(DomainSpec::with_target_h(DomainKind::RoughLayer, paper_profile(), 0.0).is_err());
    }
}
