//! Finite element fields and their plain-text serialization.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::sync::Arc;

use super::dofs::DofMap;
use super::element::ElementOrder;
use crate::error::{Error, Result};
use crate::mesh::{Point, TriangularMesh};

pub const FIELD_HEADER: &str = "walllaw-field v1";

/// Something that can be sampled pointwise: discrete fields and closed forms.
pub trait ScalarFunction: Sync {
    fn value(&self, x: Point) -> Result<f64>;

    fn gradient(&self, x: Point) -> Result<[f64; 2]>;
}

/// Closed-form function with an optional exact gradient. Without one, the
/// gradient is taken by central differences.
pub struct Analytic<F, G = fn(Point) -> [f64; 2]> {
    f: F,
    grad: Option<G>,
}

impl<F: Fn(Point) -> f64 + Sync> Analytic<F> {
    pub fn new(f: F) -> Self {
        Self { f, grad: None }
    }
}

impl<F, G> Analytic<F, G>
where
    F: Fn(Point) -> f64 + Sync,
    G: Fn(Point) -> [f64; 2] + Sync,
{
    pub fn with_gradient(f: F, grad: G) -> Self {
        Self { f, grad: Some(grad) }
    }
}

impl<F, G> ScalarFunction for Analytic<F, G>
where
    F: Fn(Point) -> f64 + Sync,
    G: Fn(Point) -> [f64; 2] + Sync,
{
    fn value(&self, x: Point) -> Result<f64> {
        Ok((self.f)(x))
    }

    fn gradient(&self, x: Point) -> Result<[f64; 2]> {
        if let Some(g) = &self.grad {
            return Ok(g(x));
        }
        let h = 1e-6;
        let f = &self.f;
        Ok([
            (f([x[0] + h, x[1]]) - f([x[0] - h, x[1]])) / (2.0 * h),
            (f([x[0], x[1] + h]) - f([x[0], x[1] - h])) / (2.0 * h),
        ])
    }
}

#[derive(Debug, Clone)]
pub struct FiniteElementField {
    dofs: Arc<DofMap>,
    values: Vec<f64>,
}

impl FiniteElementField {
    pub fn new(dofs: Arc<DofMap>, values: Vec<f64>) -> Result<Self> {
        if values.len() != dofs.n_dofs() {
            return Err(Error::InvalidInput(format!(
                "field has {} values but the {} space has {} dofs",
                values.len(),
                dofs.order(),
                dofs.n_dofs()
            )));
        }
        Ok(Self { dofs, values })
    }

    /// Nodal interpolant of `f`.
    pub fn interpolate(dofs: Arc<DofMap>, f: impl Fn(Point) -> f64) -> Self {
        let values = dofs.coords().iter().map(|&p| f(p)).collect();
        Self { dofs, values }
    }

    pub fn dof_map(&self) -> &Arc<DofMap> {
        &self.dofs
    }

    pub fn mesh(&self) -> &Arc<TriangularMesh> {
        self.dofs.mesh()
    }

    pub fn order(&self) -> ElementOrder {
        self.dofs.order()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value inside triangle `t` at reference coordinates `r`.
    pub fn value_in(&self, t: usize, r: [f64; 2]) -> f64 {
        let mut phi = [0.0; 6];
        self.order().values(r[0], r[1], &mut phi);
        self.dofs
            .element_dofs(t)
            .iter()
            .zip(&phi)
            .map(|(&d, p)| self.values[d] * p)
            .sum()
    }

    /// Physical gradient inside triangle `t` at reference coordinates `r`.
    pub fn gradient_in(&self, t: usize, r: [f64; 2]) -> [f64; 2] {
        let mut g = [[0.0; 2]; 6];
        self.order().gradients(r[0], r[1], &mut g);
        let mut acc = [0.0; 2];
        for (&d, gi) in self.dofs.element_dofs(t).iter().zip(&g) {
            acc[0] += self.values[d] * gi[0];
            acc[1] += self.values[d] * gi[1];
        }
        self.dofs.locator().map(t).push_gradient(acc)
    }

    fn locate(&self, x: Point) -> Result<(usize, [f64; 2])> {
        let q = self.wrap(x);
        self.dofs
            .locator()
            .locate(q)
            .ok_or(Error::OutsideDomain { x: x[0], y: x[1] })
    }

    /// Periodic fields are evaluated modulo the cell width.
    fn wrap(&self, x: Point) -> Point {
        let mesh = self.mesh();
        if mesh.periodic_pairs().is_empty() {
            return x;
        }
        let [xmin, _, xmax, _] = self.dofs.locator().bounds();
        let w = xmax - xmin;
        if x[0] >= xmin && x[0] <= xmax {
            return x;
        }
        [xmin + (x[0] - xmin).rem_euclid(w), x[1]]
    }

    pub fn evaluate(&self, x: Point) -> Result<f64> {
        let (t, r) = self.locate(x)?;
        Ok(self.value_in(t, r))
    }

    pub fn evaluate_many(&self, points: &[Point]) -> Result<Vec<f64>> {
        points.iter().map(|&p| self.evaluate(p)).collect()
    }

    pub fn evaluate_gradient(&self, x: Point) -> Result<[f64; 2]> {
        let (t, r) = self.locate(x)?;
        Ok(self.gradient_in(t, r))
    }

    /// Largest nodal difference to another field on the same space.
    pub fn max_difference(&self, other: &FiniteElementField) -> Result<f64> {
        if !Arc::ptr_eq(&self.dofs, &other.dofs) && self.values.len() != other.values.len() {
            return Err(Error::InvalidInput("fields live on different spaces".into()));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{FIELD_HEADER}")?;
        writeln!(w, "mesh {}", self.mesh().checksum())?;
        writeln!(w, "order {}", self.order().degree())?;
        writeln!(w, "dofs {}", self.values.len())?;
        for v in &self.values {
            writeln!(w, "{v:.16e}")?;
        }
        Ok(())
    }

    /// Reads a field written for the space `dofs`; the stored mesh checksum
    /// must match.
    pub fn read<R: Read>(r: R, dofs: Arc<DofMap>) -> Result<Self> {
        let mut lines = BufReader::new(r).lines().enumerate();
        let mut next = |what: &str| -> Result<(usize, String)> {
            match lines.next() {
                Some((i, l)) => Ok((i + 1, l?)),
                None => Err(Error::Parse {
                    line: 0,
                    message: format!("unexpected end of file, expected {what}"),
                }),
            }
        };
        let (n, header) = next("header").map_err(|_| Error::Parse {
            line: 1,
            message: "no header".into(),
        })?;
        if header.trim() != FIELD_HEADER {
            return Err(Error::Parse {
                line: n,
                message: format!("expected header `{FIELD_HEADER}`"),
            });
        }
        let keyed = |(n, l): (usize, String), key: &str| -> Result<String> {
            l.trim()
                .strip_prefix(key)
                .map(|v| v.trim().to_owned())
                .ok_or(Error::Parse {
                    line: n,
                    message: format!("expected `{key} ...`"),
                })
        };
        let found = keyed(next("mesh checksum")?, "mesh")?;
        let expected = dofs.mesh().checksum();
        if found != expected {
            return Err(Error::ChecksumMismatch { expected, found });
        }
        let line = next("order")?;
        let ln = line.0;
        let order: ElementOrder = keyed(line, "order")?
            .parse()
            .map_err(|e: Error| Error::Parse { line: ln, message: e.to_string() })?;
        if order != dofs.order() {
            return Err(Error::InvalidInput(format!(
                "field is {order} but the space is {}",
                dofs.order()
            )));
        }
        let line = next("dof count")?;
        let ln = line.0;
        let count: usize = keyed(line, "dofs")?.parse().map_err(|_| Error::Parse {
            line: ln,
            message: "bad dof count".into(),
        })?;
        let mut values = Vec::with_capacity(count);
        for _ in 0..count {
            let (n, l) = next("value")?;
            values.push(l.trim().parse().map_err(|_| Error::Parse {
                line: n,
                message: format!("cannot parse `{}` as a number", l.trim()),
            })?);
        }
        Self::new(dofs, values)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut buf = Vec::new();
        self.write(&mut buf)?;
        crate::io_util::write_atomic(path.as_ref(), &buf)
    }

    pub fn load(path: impl AsRef<Path>, dofs: Arc<DofMap>) -> Result<Self> {
        Self::read(std::fs::File::open(path)?, dofs)
    }
}

impl ScalarFunction for FiniteElementField {
    fn value(&self, x: Point) -> Result<f64> {
        self.evaluate(x)
    }

    fn gradient(&self, x: Point) -> Result<[f64; 2]> {
        self.evaluate_gradient(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_mesh, DomainKind, DomainSpec};
    use crate::profile::RoughnessProfile;

    fn space(order: ElementOrder) -> Arc<DofMap> {
        let p = RoughnessProfile::cosine(0.05).unwrap();
        let mesh = build_mesh(&DomainSpec::new(DomainKind::RoughCell { epsilon: 0.3 }, p, 32)).unwrap();
        Arc::new(DofMap::new(Arc::new(mesh), order))
    }

    #[test]
    fn p1_reproduces_linears() {
        let f = FiniteElementField::interpolate(space(ElementOrder::P1), |p| p[0] + p[1]);
        for k in 0..200 {
            let x = [0.009 * k as f64, 0.9 - 0.0045 * k as f64];
            assert!((f.evaluate(x).unwrap() - (x[0] + x[1])).abs() < 1e-13);
        }
    }

    #[test]
    fn p2_reproduces_quadratics_and_gradients() {
        let f = FiniteElementField::interpolate(space(ElementOrder::P2), |p| p[1] * p[1]);
        for k in 0..200 {
            let x = [0.009 * k as f64, 0.95 - 0.0045 * k as f64];
            assert!((f.evaluate(x).unwrap() - x[1] * x[1]).abs() < 1e-13);
            let g = f.evaluate_gradient(x).unwrap();
            assert!(g[0].abs() < 1e-10 && (g[1] - 2.0 * x[1]).abs() < 1e-10);
        }
    }

    #[test]
    fn evaluation_wraps_periodically_and_rejects_outside() {
        let f = FiniteElementField::interpolate(space(ElementOrder::P2), |p| p[1]);
        let w = 2.0 * std::f64::consts::PI * 0.3;
        assert!((f.evaluate([w + 0.1, 0.5]).unwrap() - 0.5).abs() < 1e-13);
        assert!(matches!(
            f.evaluate([0.2, 1.5]),
            Err(Error::OutsideDomain { .. })
        ));
    }

    #[test]
    fn field_round_trip_and_checksum_guard() {
        let s = space(ElementOrder::P2);
        let f = FiniteElementField::interpolate(s.clone(), |p| p[0].sin() * p[1]);
        let mut buf = Vec::new();
        f.write(&mut buf).unwrap();
        let g = FiniteElementField::read(&buf[..], s).unwrap();
        assert_eq!(f.values(), g.values());

        let other = space(ElementOrder::P2);
        let text = String::from_utf8(buf).unwrap().replacen("mesh ", "mesh 0", 1);
        let err = FiniteElementField::read(text.as_bytes(), other).unwrap_err();
        assert!(matches!(err, Error::ChecksumMismatch { .. }));
    }
}
