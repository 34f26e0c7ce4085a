//! Point location by a uniform bucket grid over triangle bounding boxes.

use super::element::AffineMap;
use crate::mesh::{Point, TriangularMesh};

/// Distance (in reference barycentric units) tolerated outside a triangle.
const BARY_TOL: f64 = 1e-10;

#[derive(Debug)]
pub(crate) struct Locator {
    origin: Point,
    bounds: [f64; 4],
    cell: [f64; 2],
    dims: [usize; 2],
    buckets: Vec<Vec<usize>>,
    maps: Vec<AffineMap>,
}

impl Locator {
    pub fn new(mesh: &TriangularMesh) -> Self {
        let [xmin, ymin, xmax, ymax] = mesh.bounding_box();
        let nt = mesh.triangles().len();
        let side = ((nt as f64 / 2.0).sqrt().ceil() as usize).max(1);
        let (w, h) = ((xmax - xmin).max(1e-300), (ymax - ymin).max(1e-300));
        // keep buckets roughly square
        let nx = ((side as f64 * (w / h).sqrt()).round() as usize).clamp(1, 4096);
        let ny = ((side as f64 * (h / w).sqrt()).round() as usize).clamp(1, 4096);
        let cell = [w / nx as f64, h / ny as f64];
        let mut buckets = vec![Vec::new(); nx * ny];
        let mut maps = Vec::with_capacity(nt);
        for t in 0..nt {
            let pts = mesh.triangle_points(t);
            maps.push(AffineMap::new(pts));
            let lo = [
                pts.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min),
                pts.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min),
            ];
            let hi = [
                pts.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max),
                pts.iter().map(|p| p[1]).fold(f64::NEG_INFINITY, f64::max),
            ];
            let i0 = bucket(lo[0], xmin, cell[0], nx);
            let i1 = bucket(hi[0], xmin, cell[0], nx);
            let j0 = bucket(lo[1], ymin, cell[1], ny);
            let j1 = bucket(hi[1], ymin, cell[1], ny);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    buckets[j * nx + i].push(t);
                }
            }
        }
        Self {
            origin: [xmin, ymin],
            bounds: [xmin, ymin, xmax, ymax],
            cell,
            dims: [nx, ny],
            buckets,
            maps,
        }
    }

    /// Bounding box of the mesh, `[xmin, ymin, xmax, ymax]`.
    pub fn bounds(&self) -> [f64; 4] {
        self.bounds
    }

    pub fn map(&self, t: usize) -> &AffineMap {
        &self.maps[t]
    }

    /// Containing triangle and reference coordinates, clamped into the
    /// triangle when the point sits within tolerance outside it.
    pub fn locate(&self, x: Point) -> Option<(usize, [f64; 2])> {
        let [nx, ny] = self.dims;
        let i = bucket(x[0], self.origin[0], self.cell[0], nx);
        let j = bucket(x[1], self.origin[1], self.cell[1], ny);
        let mut best: Option<(usize, [f64; 2], f64)> = None;
        for &t in &self.buckets[j * nx + i] {
            if let Some(hit) = self.consider(t, x, &mut best) {
                return Some(hit);
            }
        }
        if best.map_or(true, |b| b.2 > BARY_TOL) {
            // slow path: exhaustive search
            for t in 0..self.maps.len() {
                if let Some(hit) = self.consider(t, x, &mut best) {
                    return Some(hit);
                }
            }
        }
        match best {
            Some((t, r, out)) if out <= BARY_TOL => Some((t, clamp(r))),
            _ => None,
        }
    }
}

impl Locator {
    fn consider(
        &self,
        t: usize,
        x: Point,
        best: &mut Option<(usize, [f64; 2], f64)>,
    ) -> Option<(usize, [f64; 2])> {
        let r = self.maps[t].inverse(x);
        let out = outside(r);
        if out <= 0.0 {
            return Some((t, r));
        }
        if best.map_or(true, |b| out < b.2) {
            *best = Some((t, r, out));
        }
        None
    }
}

fn bucket(v: f64, lo: f64, h: f64, n: usize) -> usize {
    (((v - lo) / h).floor().max(0.0) as usize).min(n - 1)
}

/// How far reference point `r` lies outside the reference triangle.
fn outside(r: [f64; 2]) -> f64 {
    let l0 = 1.0 - r[0] - r[1];
    (-r[0]).max(-r[1]).max(-l0)
}

fn clamp(r: [f64; 2]) -> [f64; 2] {
    let s = r[0].max(0.0);
    let t = r[1].max(0.0);
    let sum = s + t;
    if sum > 1.0 {
        [s / sum, t / sum]
    } else {
        [s, t]
    }
}
