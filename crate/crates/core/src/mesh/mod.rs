//! Conforming triangular meshes of the rough cell, the smooth cell and the
//! microscopic strip, with periodic side identification.

mod build;
mod io;

pub use build::{build_mesh, DomainKind, DomainSpec, MAX_ASPECT_RATIO, MIN_SEGMENTS_PER_PERIOD};
pub use io::{export_mesh, import_mesh, read_mesh, write_mesh};

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::error::Error;
use crate::profile::RoughnessProfile;

pub type Point = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundaryTag {
    /// The rough wall `x2 = ε f(x1/ε)` (or `y2 = f(y1)`).
    RoughBottom,
    /// The flat fictitious wall `x2 = 0`.
    SmoothBottom,
    /// Top wall of a channel.
    Top,
    /// Truncation line of the microscopic strip.
    NeumannTop,
    PeriodicLeft,
    PeriodicRight,
    /// The line `y2 = 0` closing the rough layer from above.
    Interface,
    /// Non-periodic vertical sides of a plain rectangle.
    Left,
    Right,
}

impl BoundaryTag {
    pub const ALL: [BoundaryTag; 9] = [
        BoundaryTag::RoughBottom,
        BoundaryTag::SmoothBottom,
        BoundaryTag::Top,
        BoundaryTag::NeumannTop,
        BoundaryTag::PeriodicLeft,
        BoundaryTag::PeriodicRight,
        BoundaryTag::Interface,
        BoundaryTag::Left,
        BoundaryTag::Right,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BoundaryTag::RoughBottom => "RoughBottom",
            BoundaryTag::SmoothBottom => "SmoothBottom",
            BoundaryTag::Top => "Top",
            BoundaryTag::NeumannTop => "NeumannTop",
            BoundaryTag::PeriodicLeft => "PeriodicLeft",
            BoundaryTag::PeriodicRight => "PeriodicRight",
            BoundaryTag::Interface => "Interface",
            BoundaryTag::Left => "Left",
            BoundaryTag::Right => "Right",
        }
    }

    pub fn is_periodic_side(self) -> bool {
        matches!(self, BoundaryTag::PeriodicLeft | BoundaryTag::PeriodicRight)
    }
}

impl fmt::Display for BoundaryTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BoundaryTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BoundaryTag::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown boundary tag `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub vertices: [usize; 2],
    pub tag: BoundaryTag,
}

/// Exact description of a graph-shaped bottom: `x2 = scale * f(x1 / scale)`.
#[derive(Debug, Clone)]
pub struct GraphBoundary {
    pub profile: RoughnessProfile,
    pub scale: f64,
}

impl GraphBoundary {
    pub fn height(&self, x1: f64) -> f64 {
        self.scale * self.profile.evaluate(x1 / self.scale)
    }
}

#[derive(Debug, Clone)]
pub struct TriangularMesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    boundary: Vec<BoundaryEdge>,
    periodic_pairs: Vec<(usize, usize)>,
    graph: Option<GraphBoundary>,
}

impl TriangularMesh {
    /// Assembles a mesh from raw parts and checks the structural invariants.
    pub fn from_parts(
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        boundary: Vec<BoundaryEdge>,
        periodic_pairs: Vec<(usize, usize)>,
        graph: Option<GraphBoundary>,
    ) -> crate::Result<Self> {
        let mesh = Self {
            vertices,
            triangles,
            boundary,
            periodic_pairs,
            graph,
        };
        mesh.check()?;
        Ok(mesh)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary
    }

    pub fn periodic_pairs(&self) -> &[(usize, usize)] {
        &self.periodic_pairs
    }

    pub fn graph(&self) -> Option<&GraphBoundary> {
        self.graph.as_ref()
    }

    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Signed area of triangle `t` (positive for counter-clockwise).
    pub fn signed_area(&self, t: usize) -> f64 {
        let [p, q, r] = self.triangle_points(t);
        signed_area(p, q, r)
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.signed_area(t)).sum()
    }

    /// Longest edge length.
    pub fn h_max(&self) -> f64 {
        self.triangles
            .iter()
            .flat_map(|&[a, b, c]| [(a, b), (b, c), (c, a)])
            .map(|(i, j)| dist(self.vertices[i], self.vertices[j]))
            .fold(0.0, f64::max)
    }

    pub fn max_aspect_ratio(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| {
                let [p, q, r] = self.triangle_points(t);
                aspect_ratio(p, q, r)
            })
            .fold(0.0, f64::max)
    }

    pub fn min_angle(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| {
                let [p, q, r] = self.triangle_points(t);
                min_angle(p, q, r)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Axis-aligned bounding box `[xmin, ymin, xmax, ymax]`.
    pub fn bounding_box(&self) -> [f64; 4] {
        self.vertices.iter().fold(
            [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY],
            |b, p| [b[0].min(p[0]), b[1].min(p[1]), b[2].max(p[0]), b[3].max(p[1])],
        )
    }

    /// Vertex indices lying on edges with the given tag, sorted.
    pub fn tagged_vertices(&self, tag: BoundaryTag) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .boundary
            .iter()
            .filter(|e| e.tag == tag)
            .flat_map(|e| e.vertices)
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// SHA-256 over vertex coordinate bits and connectivity, hex encoded.
    pub fn checksum(&self) -> String {
        let mut h = Sha256::new();
        for p in &self.vertices {
            h.update(p[0].to_bits().to_le_bytes());
            h.update(p[1].to_bits().to_le_bytes());
        }
        for t in &self.triangles {
            for &i in t {
                h.update((i as u64).to_le_bytes());
            }
        }
        hex::encode(&h.finalize()[..16])
    }

    /// Uniform red refinement: every triangle is split into four. Midpoints of
    /// rough-bottom edges are moved vertically onto the exact graph when the
    /// mesh carries one.
    pub fn refine(&self) -> TriangularMesh {
        let mut vertices = self.vertices.clone();
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let rough: std::collections::HashSet<(usize, usize)> = self
            .boundary
            .iter()
            .filter(|e| e.tag == BoundaryTag::RoughBottom)
            .map(|e| edge_key(e.vertices[0], e.vertices[1]))
            .collect();
        let mut mid = |i: usize, j: usize, vertices: &mut Vec<Point>| -> usize {
            let key = edge_key(i, j);
            *midpoint.entry(key).or_insert_with(|| {
                let (p, q) = (vertices[i], vertices[j]);
                let mut m = [(p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0];
                if rough.contains(&key) {
                    if let Some(g) = &self.graph {
                        m[1] = g.height(m[0]);
                    }
                }
                vertices.push(m);
                vertices.len() - 1
            })
        };
        let mut triangles = Vec::with_capacity(4 * self.triangles.len());
        for &[a, b, c] in &self.triangles {
            let ab = mid(a, b, &mut vertices);
            let bc = mid(b, c, &mut vertices);
            let ca = mid(c, a, &mut vertices);
            triangles.push([a, ab, ca]);
            triangles.push([ab, b, bc]);
            triangles.push([ca, bc, c]);
            triangles.push([ab, bc, ca]);
        }
        let mut boundary = Vec::with_capacity(2 * self.boundary.len());
        for e in &self.boundary {
            let [i, j] = e.vertices;
            let m = mid(i, j, &mut vertices);
            boundary.push(BoundaryEdge {
                vertices: [i, m],
                tag: e.tag,
            });
            boundary.push(BoundaryEdge {
                vertices: [m, j],
                tag: e.tag,
            });
        }
        let partner: HashMap<usize, usize> = self.periodic_pairs.iter().copied().collect();
        let mut periodic_pairs = self.periodic_pairs.clone();
        for e in self.boundary.iter().filter(|e| e.tag == BoundaryTag::PeriodicLeft) {
            let [i, j] = e.vertices;
            if let (Some(&pi), Some(&pj)) = (partner.get(&i), partner.get(&j)) {
                let left = mid(i, j, &mut vertices);
                let right = mid(pi, pj, &mut vertices);
                periodic_pairs.push((left, right));
            }
        }
        periodic_pairs.sort_unstable();
        TriangularMesh {
            vertices,
            triangles,
            boundary,
            periodic_pairs,
            graph: self.graph.clone(),
        }
    }

    /// Verifies orientation, boundary-edge ownership, periodic matching and
    /// conformity.
    pub fn check(&self) -> crate::Result<()> {
        let nv = self.vertices.len();
        if self.triangles.is_empty() {
            return Err(Error::MeshQuality("mesh has no triangles".into()));
        }
        let mut edge_count: HashMap<(usize, usize), usize> = HashMap::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&i| i >= nv) {
                return Err(Error::MeshQuality(format!(
                    "triangle {t} references a missing vertex"
                )));
            }
            if self.signed_area(t) <= 0.0 {
                return Err(Error::MeshQuality(format!(
                    "triangle {t} has non-positive signed area {}",
                    self.signed_area(t)
                )));
            }
            for (i, j) in [(tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])] {
                *edge_count.entry(edge_key(i, j)).or_insert(0) += 1;
            }
        }
        if let Some((&(i, j), &n)) = edge_count.iter().find(|(_, &n)| n > 2) {
            return Err(Error::MeshQuality(format!(
                "edge ({i}, {j}) shared by {n} triangles"
            )));
        }
        for e in &self.boundary {
            let key = edge_key(e.vertices[0], e.vertices[1]);
            if edge_count.get(&key) != Some(&1) {
                return Err(Error::MeshQuality(format!(
                    "boundary edge {:?} ({}) does not belong to exactly one triangle",
                    e.vertices, e.tag
                )));
            }
        }
        let free_edges = edge_count.values().filter(|&&n| n == 1).count();
        if free_edges != self.boundary.len() {
            return Err(Error::MeshQuality(format!(
                "{} edges lie on the boundary but {} are tagged (hanging vertex or untagged edge)",
                free_edges,
                self.boundary.len()
            )));
        }
        let [xmin, _, xmax, _] = self.bounding_box();
        let tol = 1e-12 * (xmax - xmin).max(1.0);
        for &(l, r) in &self.periodic_pairs {
            if l >= nv || r >= nv {
                return Err(Error::MeshQuality("periodic pair references a missing vertex".into()));
            }
            if (self.vertices[l][1] - self.vertices[r][1]).abs() > tol {
                return Err(Error::MeshQuality(format!(
                    "periodic pair ({l}, {r}) has mismatched heights {} vs {}",
                    self.vertices[l][1], self.vertices[r][1]
                )));
            }
        }
        Ok(())
    }
}

pub(crate) fn edge_key(i: usize, j: usize) -> (usize, usize) {
    if i < j {
        (i, j)
    } else {
        (j, i)
    }
}

pub fn signed_area(p: Point, q: Point, r: Point) -> f64 {
    0.5 * ((q[0] - p[0]) * (r[1] - p[1]) - (r[0] - p[0]) * (q[1] - p[1]))
}

fn dist(p: Point, q: Point) -> f64 {
    (p[0] - q[0]).hypot(p[1] - q[1])
}

/// Circumradius over inradius (2 for an equilateral triangle).
pub fn aspect_ratio(p: Point, q: Point, r: Point) -> f64 {
    let a = dist(q, r);
    let b = dist(r, p);
    let c = dist(p, q);
    let area = signed_area(p, q, r).abs();
    if area == 0.0 {
        return f64::INFINITY;
    }
    let s = 0.5 * (a + b + c);
    a * b * c * s / (4.0 * area * area)
}

fn min_angle(p: Point, q: Point, r: Point) -> f64 {
    let angle = |o: Point, u: Point, v: Point| {
        let (ux, uy) = (u[0] - o[0], u[1] - o[1]);
        let (vx, vy) = (v[0] - o[0], v[1] - o[1]);
        (ux * vy - uy * vx).abs().atan2(ux * vx + uy * vy)
    };
    angle(p, q, r).min(angle(q, r, p)).min(angle(r, p, q))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aspect_of_equilateral_is_two() {
        let h = 3f64.sqrt() / 2.0;
        assert!((aspect_ratio([0.0, 0.0], [1.0, 0.0], [0.5, h]) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn tag_names_round_trip() {
        for t in BoundaryTag::ALL {
            assert_eq!(t.name().parse::<BoundaryTag>().unwrap(), t);
        }
        assert!("Nowhere".parse::<BoundaryTag>().is_err());
    }
}
