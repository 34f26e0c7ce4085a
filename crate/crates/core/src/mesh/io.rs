//! Plain-text mesh format.
//!
//! ```text
//! walllaw-mesh v1
//! vertices N
//! x y            (N lines)
//! triangles M
//! i j k          (M lines, 0-based)
//! boundary B
//! i j TAG        (B lines)
//! periodic P
//! i j            (P lines)
//! ```
//!
//! Coordinates are written with 17 significant digits, so a round trip
//! reproduces them bit for bit.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::{BoundaryEdge, BoundaryTag, Point, TriangularMesh};
use crate::error::{Error, Result};

pub const MESH_HEADER: &str = "walllaw-mesh v1";

pub fn write_mesh<W: Write>(mesh: &TriangularMesh, mut w: W) -> Result<()> {
    writeln!(w, "{MESH_HEADER}")?;
    writeln!(w, "vertices {}", mesh.vertices().len())?;
    for p in mesh.vertices() {
        writeln!(w, "{:.16e} {:.16e}", p[0], p[1])?;
    }
    writeln!(w, "triangles {}", mesh.triangles().len())?;
    for t in mesh.triangles() {
        writeln!(w, "{} {} {}", t[0], t[1], t[2])?;
    }
    writeln!(w, "boundary {}", mesh.boundary_edges().len())?;
    for e in mesh.boundary_edges() {
        writeln!(w, "{} {} {}", e.vertices[0], e.vertices[1], e.tag)?;
    }
    writeln!(w, "periodic {}", mesh.periodic_pairs().len())?;
    for (l, r) in mesh.periodic_pairs() {
        writeln!(w, "{l} {r}")?;
    }
    Ok(())
}

/// Parses a mesh. The exact graph of a rough bottom is not stored, so an
/// imported mesh refines by plain midpoint subdivision.
pub fn read_mesh<R: Read>(r: R) -> Result<TriangularMesh> {
    let mut lines = Lines::new(BufReader::new(r));
    match lines.next_line()? {
        Some((_, h)) if h.trim() == MESH_HEADER => {}
        Some((n, h)) => {
            return Err(Error::Parse {
                line: n,
                message: format!("expected header `{MESH_HEADER}`, found `{}`", h.trim()),
            })
        }
        None => {
            return Err(Error::Parse {
                line: 1,
                message: "no header".into(),
            })
        }
    }
    let nv = lines.count_line("vertices")?;
    let mut vertices: Vec<Point> = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (n, f) = lines.fields("vertex")?;
        vertices.push([parse_at(n, &f, 0)?, parse_at(n, &f, 1)?]);
        expect_len(n, &f, 2)?;
    }
    let nt = lines.count_line("triangles")?;
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (n, f) = lines.fields("triangle")?;
        expect_len(n, &f, 3)?;
        triangles.push([parse_at(n, &f, 0)?, parse_at(n, &f, 1)?, parse_at(n, &f, 2)?]);
    }
    let nb = lines.count_line("boundary")?;
    let mut boundary = Vec::with_capacity(nb);
    for _ in 0..nb {
        let (n, f) = lines.fields("boundary edge")?;
        expect_len(n, &f, 3)?;
        let tag: BoundaryTag = f[2].parse().map_err(|e: Error| Error::Parse {
            line: n,
            message: e.to_string(),
        })?;
        boundary.push(BoundaryEdge {
            vertices: [parse_at(n, &f, 0)?, parse_at(n, &f, 1)?],
            tag,
        });
    }
    let np = lines.count_line("periodic")?;
    let mut periodic = Vec::with_capacity(np);
    for _ in 0..np {
        let (n, f) = lines.fields("periodic pair")?;
        expect_len(n, &f, 2)?;
        periodic.push((parse_at(n, &f, 0)?, parse_at(n, &f, 1)?));
    }
    if let Some((n, extra)) = lines.next_line()? {
        return Err(Error::Parse {
            line: n,
            message: format!("trailing content `{}`", extra.trim()),
        });
    }
    TriangularMesh::from_parts(vertices, triangles, boundary, periodic, None)
}

pub fn export_mesh(mesh: &TriangularMesh, path: impl AsRef<Path>) -> Result<()> {
    let mut buf = Vec::new();
    write_mesh(mesh, &mut buf)?;
    crate::io_util::write_atomic(path.as_ref(), &buf)
}

pub fn import_mesh(path: impl AsRef<Path>) -> Result<TriangularMesh> {
    read_mesh(fs::File::open(path)?)
}

struct Lines<R> {
    inner: R,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    fn new(inner: R) -> Self {
        Self { inner, line: 0 }
    }

    /// Next non-blank line with its 1-based number.
    fn next_line(&mut self) -> Result<Option<(usize, String)>> {
        loop {
            let mut s = String::new();
            if self.inner.read_line(&mut s)? == 0 {
                return Ok(None);
            }
            self.line += 1;
            if !s.trim().is_empty() {
                return Ok(Some((self.line, s)));
            }
        }
    }

    fn fields(&mut self, what: &str) -> Result<(usize, Vec<String>)> {
        match self.next_line()? {
            Some((n, s)) => Ok((n, s.split_whitespace().map(str::to_owned).collect())),
            None => Err(Error::Parse {
                line: self.line + 1,
                message: format!("unexpected end of file, expected {what}"),
            }),
        }
    }

    fn count_line(&mut self, keyword: &str) -> Result<usize> {
        let (n, f) = self.fields(keyword)?;
        if f.len() != 2 || f[0] != keyword {
            return Err(Error::Parse {
                line: n,
                message: format!("expected `{keyword} <count>`, found `{}`", f.join(" ")),
            });
        }
        parse_at(n, &f, 1)
    }
}

fn expect_len(line: usize, f: &[String], n: usize) -> Result<()> {
    if f.len() != n {
        return Err(Error::Parse {
            line,
            message: format!("expected {n} fields, found {}", f.len()),
        });
    }
    Ok(())
}

fn parse_at<T: std::str::FromStr>(line: usize, f: &[String], i: usize) -> Result<T> {
    let s = f.get(i).ok_or_else(|| Error::Parse {
        line,
        message: format!("missing field {}", i + 1),
    })?;
    s.parse().map_err(|_| Error::Parse {
        line,
        message: format!("cannot parse `{s}` as {}", std::any::type_name::<T>()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_mesh, DomainKind, DomainSpec};
    use crate::profile::RoughnessProfile;

    fn sample() -> TriangularMesh {
        let p = RoughnessProfile::cosine(0.05).unwrap();
        build_mesh(&DomainSpec::new(DomainKind::RoughCell { epsilon: 0.3 }, p, 32)).unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let m = sample();
        let mut buf = Vec::new();
        write_mesh(&m, &mut buf).unwrap();
        let back = read_mesh(&buf[..]).unwrap();
        assert_eq!(back.vertices(), m.vertices());
        assert_eq!(back.triangles(), m.triangles());
        assert_eq!(back.boundary_edges(), m.boundary_edges());
        assert_eq!(back.periodic_pairs(), m.periodic_pairs());
        assert_eq!(back.checksum(), m.checksum());
    }

    #[test]
    fn empty_file_has_no_header() {
        let err = read_mesh(&b""[..]).unwrap_err();
        assert!(err.to_string().contains("no header"), "{err}");
    }

    #[test]
    fn bad_triangle_index_reports_line() {
        let m = sample();
        let mut buf = Vec::new();
        write_mesh(&m, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines: Vec<String> = text.lines().map(str::to_owned).collect();
        // header, count, N vertices, count, first triangle
        let target = 3 + m.vertices().len() + 1;
        lines[target - 1] = "0 1.5 2".into();
        let err = read_mesh(lines.join("\n").as_bytes()).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, target),
            other => panic!("unexpected {other}"),
        }
    }
}
