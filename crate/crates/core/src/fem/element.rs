//! Lagrange P1 / P2 shape functions.
//!
//! Local P2 ordering: vertices `v0, v1, v2`, then the midpoints of
//! `v0v1, v1v2, v2v0`.

use std::fmt;
use std::str::FromStr;

use crate::error::Error;
use crate::mesh::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ElementOrder {
    P1,
    P2,
}

impl ElementOrder {
    pub fn degree(self) -> usize {
        match self {
            ElementOrder::P1 => 1,
            ElementOrder::P2 => 2,
        }
    }

    pub fn from_degree(d: usize) -> crate::Result<Self> {
        match d {
            1 => Ok(ElementOrder::P1),
            2 => Ok(ElementOrder::P2),
            _ => Err(Error::InvalidInput(format!("element order must be 1 or 2, got {d}"))),
        }
    }

    /// Dofs per triangle.
    pub fn local_dofs(self) -> usize {
        match self {
            ElementOrder::P1 => 3,
            ElementOrder::P2 => 6,
        }
    }

    /// Dofs per boundary edge (endpoints, then the midpoint for P2).
    pub fn edge_dofs(self) -> usize {
        self.degree() + 1
    }

    /// Shape function values at reference point `(s, t)`.
    pub fn values(self, s: f64, t: f64, out: &mut [f64]) {
        let l = [1.0 - s - t, s, t];
        match self {
            ElementOrder::P1 => out[..3].copy_from_slice(&l),
            ElementOrder::P2 => {
                for i in 0..3 {
                    out[i] = l[i] * (2.0 * l[i] - 1.0);
                }
                out[3] = 4.0 * l[0] * l[1];
                out[4] = 4.0 * l[1] * l[2];
                out[5] = 4.0 * l[2] * l[0];
            }
        }
    }

    /// Reference gradients `(∂/∂s, ∂/∂t)` at `(s, t)`.
    pub fn gradients(self, s: f64, t: f64, out: &mut [[f64; 2]]) {
        let l = [1.0 - s - t, s, t];
        let dl = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];
        match self {
            ElementOrder::P1 => out[..3].copy_from_slice(&dl),
            ElementOrder::P2 => {
                for i in 0..3 {
                    let f = 4.0 * l[i] - 1.0;
                    out[i] = [f * dl[i][0], f * dl[i][1]];
                }
                for (k, (i, j)) in [(0, 1), (1, 2), (2, 0)].into_iter().enumerate() {
                    out[3 + k] = [
                        4.0 * (dl[i][0] * l[j] + l[i] * dl[j][0]),
                        4.0 * (dl[i][1] * l[j] + l[i] * dl[j][1]),
                    ];
                }
            }
        }
    }

    /// Edge shape functions at `r ∈ [0, 1]`: start, end, (midpoint).
    pub fn edge_values(self, r: f64, out: &mut [f64]) {
        match self {
            ElementOrder::P1 => {
                out[0] = 1.0 - r;
                out[1] = r;
            }
            ElementOrder::P2 => {
                out[0] = (1.0 - r) * (1.0 - 2.0 * r);
                out[1] = r * (2.0 * r - 1.0);
                out[2] = 4.0 * r * (1.0 - r);
            }
        }
    }

    /// `d/dr` of the edge shape functions.
    pub fn edge_derivatives(self, r: f64, out: &mut [f64]) {
        match self {
            ElementOrder::P1 => {
                out[0] = -1.0;
                out[1] = 1.0;
            }
            ElementOrder::P2 => {
                out[0] = 4.0 * r - 3.0;
                out[1] = 4.0 * r - 1.0;
                out[2] = 4.0 - 8.0 * r;
            }
        }
    }
}

impl fmt::Display for ElementOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P{}", self.degree())
    }
}

impl FromStr for ElementOrder {
    type Err = Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        let t = s.trim();
        let d = t.strip_prefix('P').or_else(|| t.strip_prefix('p')).unwrap_or(t);
        d.parse::<usize>()
            .map_err(|_| Error::InvalidInput(format!("cannot parse element order `{s}`")))
            .and_then(Self::from_degree)
    }
}

/// Affine map of the reference triangle onto `[p0, p1, p2]`.
#[derive(Debug, Clone, Copy)]
pub struct AffineMap {
    origin: Point,
    jac: [[f64; 2]; 2],
    inv_t: [[f64; 2]; 2],
    det: f64,
}

impl AffineMap {
    pub fn new(p: [Point; 3]) -> Self {
        let jac = [
            [p[1][0] - p[0][0], p[2][0] - p[0][0]],
            [p[1][1] - p[0][1], p[2][1] - p[0][1]],
        ];
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        // J^{-T}
        let inv_t = [
            [jac[1][1] / det, -jac[1][0] / det],
            [-jac[0][1] / det, jac[0][0] / det],
        ];
        Self {
            origin: p[0],
            jac,
            inv_t,
            det,
        }
    }

    /// `|det J|` = twice the triangle area.
    pub fn det(&self) -> f64 {
        self.det.abs()
    }

    pub fn map(&self, s: f64, t: f64) -> Point {
        [
            self.origin[0] + self.jac[0][0] * s + self.jac[0][1] * t,
            self.origin[1] + self.jac[1][0] * s + self.jac[1][1] * t,
        ]
    }

    /// Reference coordinates of a physical point.
    pub fn inverse(&self, x: Point) -> [f64; 2] {
        let dx = x[0] - self.origin[0];
        let dy = x[1] - self.origin[1];
        // J^{-1} = (J^{-T})^T
        [
            self.inv_t[0][0] * dx + self.inv_t[1][0] * dy,
            self.inv_t[0][1] * dx + self.inv_t[1][1] * dy,
        ]
    }

    /// Physical gradient from a reference gradient.
    pub fn push_gradient(&self, g: [f64; 2]) -> [f64; 2] {
        [
            self.inv_t[0][0] * g[0] + self.inv_t[0][1] * g[1],
            self.inv_t[1][0] * g[0] + self.inv_t[1][1] * g[1],
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const NODES_P2: [[f64; 2]; 6] = [
        [0.0, 0.0],
        [1.0, 0.0],
        [0.0, 1.0],
        [0.5, 0.0],
        [0.5, 0.5],
        [0.0, 0.5],
    ];

    #[test]
    fn p2_is_nodal() {
        let mut v = [0.0; 6];
        for (i, n) in NODES_P2.iter().enumerate() {
            ElementOrder::P2.values(n[0], n[1], &mut v);
            for (j, vj) in v.iter().enumerate() {
                assert!((vj - if i == j { 1.0 } else { 0.0 }).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let h = 1e-6;
        for order in [ElementOrder::P1, ElementOrder::P2] {
            let (s, t) = (0.21, 0.33);
            let mut g = [[0.0; 2]; 6];
            order.gradients(s, t, &mut g);
            let (mut a, mut b, mut c) = ([0.0; 6], [0.0; 6], [0.0; 6]);
            order.values(s + h, t, &mut a);
            order.values(s - h, t, &mut b);
            order.values(s, t + h, &mut c);
            let mut d = [0.0; 6];
            order.values(s, t - h, &mut d);
            for i in 0..order.local_dofs() {
                assert!((g[i][0] - (a[i] - b[i]) / (2.0 * h)).abs() < 1e-8);
                assert!((g[i][1] - (c[i] - d[i]) / (2.0 * h)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn affine_map_round_trip() {
        let m = AffineMap::new([[1.0, 2.0], [3.0, 2.5], [1.5, 4.0]]);
        let x = m.map(0.2, 0.3);
        let r = m.inverse(x);
        assert!((r[0] - 0.2).abs() < 1e-14 && (r[1] - 0.3).abs() < 1e-14);
        // gradient of the affine function x + 2y is (1, 2) in physical space
        let f = |p: Point| p[0] + 2.0 * p[1];
        let o = f(m.map(0.0, 0.0));
        let g_ref = [f(m.map(1.0, 0.0)) - o, f(m.map(0.0, 1.0)) - o];
        let g = m.push_gradient(g_ref);
        assert!((g[0] - 1.0).abs() < 1e-13 && (g[1] - 2.0).abs() < 1e-13);
    }

    #[test]
    fn order_parses() {
        assert_eq!("P2".parse::<ElementOrder>().unwrap(), ElementOrder::P2);
        assert_eq!("1".parse::<ElementOrder>().unwrap(), ElementOrder::P1);
        assert!("3".parse::<ElementOrder>().is_err());
    }
}
