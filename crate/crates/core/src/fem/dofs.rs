//! Global degree-of-freedom numbering: vertices first, then edge midpoints
//! (P2), with periodic identification.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock};

use super::element::ElementOrder;
use super::locate::Locator;
use crate::mesh::{edge_key, BoundaryEdge, BoundaryTag, Point, TriangularMesh};

#[derive(Debug)]
pub struct DofMap {
    mesh: Arc<TriangularMesh>,
    order: ElementOrder,
    edge_index: HashMap<(usize, usize), usize>,
    element_dofs: Vec<[usize; 6]>,
    coords: Vec<Point>,
    master: Vec<usize>,
    locator: OnceLock<Locator>,
}

impl DofMap {
    pub fn new(mesh: Arc<TriangularMesh>, order: ElementOrder) -> Self {
        let nv = mesh.vertices().len();
        let mut coords: Vec<Point> = mesh.vertices().to_vec();
        let mut edge_index = HashMap::new();
        let mut element_dofs = Vec::with_capacity(mesh.triangles().len());
        for &[a, b, c] in mesh.triangles() {
            let mut d = [a, b, c, 0, 0, 0];
            if order == ElementOrder::P2 {
                for (k, (i, j)) in [(a, b), (b, c), (c, a)].into_iter().enumerate() {
                    let next = nv + edge_index.len();
                    d[3 + k] = *edge_index.entry(edge_key(i, j)).or_insert_with(|| {
                        let (p, q) = (mesh.vertices()[i], mesh.vertices()[j]);
                        coords.push([(p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0]);
                        next
                    });
                }
            }
            element_dofs.push(d);
        }
        let master = periodic_masters(&mesh, order, nv, &edge_index, coords.len());
        Self {
            mesh,
            order,
            edge_index,
            element_dofs,
            coords,
            master,
            locator: OnceLock::new(),
        }
    }

    pub fn mesh(&self) -> &Arc<TriangularMesh> {
        &self.mesh
    }

    pub fn order(&self) -> ElementOrder {
        self.order
    }

    pub fn n_dofs(&self) -> usize {
        self.coords.len()
    }

    pub fn element_dofs(&self, t: usize) -> &[usize] {
        &self.element_dofs[t][..self.order.local_dofs()]
    }

    /// Dofs of a boundary edge: start, end, then the midpoint for P2.
    pub fn edge_dofs(&self, e: &BoundaryEdge) -> [usize; 3] {
        let [i, j] = e.vertices;
        match self.order {
            ElementOrder::P1 => [i, j, usize::MAX],
            ElementOrder::P2 => [i, j, self.edge_index[&edge_key(i, j)]],
        }
    }

    /// Nodal position of each dof (vertex or straight-edge midpoint).
    pub fn coords(&self) -> &[Point] {
        &self.coords
    }

    /// Periodic representative of each dof (itself when not identified).
    pub fn master(&self, d: usize) -> usize {
        self.master[d]
    }

    /// All dofs lying on edges with the given tag, sorted.
    pub fn tagged_dofs(&self, tag: BoundaryTag) -> Vec<usize> {
        let k = self.order.edge_dofs();
        let mut v: Vec<usize> = self
            .mesh
            .boundary_edges()
            .iter()
            .filter(|e| e.tag == tag)
            .flat_map(|e| self.edge_dofs(e).into_iter().take(k))
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub(crate) fn locator(&self) -> &Locator {
        self.locator.get_or_init(|| Locator::new(&self.mesh))
    }
}

fn periodic_masters(
    mesh: &TriangularMesh,
    order: ElementOrder,
    nv: usize,
    edge_index: &HashMap<(usize, usize), usize>,
    n: usize,
) -> Vec<usize> {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let union = |p: &mut Vec<usize>, a: usize, b: usize| {
        let (ra, rb) = (find(p, a), find(p, b));
        let (lo, hi) = (ra.min(rb), ra.max(rb));
        p[hi] = lo;
    };
    for &(l, r) in mesh.periodic_pairs() {
        union(&mut parent, l, r);
    }
    if order == ElementOrder::P2 {
        let partner: HashMap<usize, usize> = mesh.periodic_pairs().iter().copied().collect();
        for e in mesh.boundary_edges().iter().filter(|e| e.tag == BoundaryTag::PeriodicLeft) {
            let [i, j] = e.vertices;
            if let (Some(&pi), Some(&pj)) = (partner.get(&i), partner.get(&j)) {
                if let (Some(&a), Some(&b)) =
                    (edge_index.get(&edge_key(i, j)), edge_index.get(&edge_key(pi, pj)))
                {
                    union(&mut parent, a, b);
                }
            }
        }
    }
    debug_assert!(nv <= n);
    (0..n).map(|d| find(&mut parent, d)).collect()
}
