//! Sidecar file describing a solved cell next to its field file.
//!
//! ```text
//! walllaw-cell v1
//! order first
//! height 10
//! average 4.3215...e-1
//! kmax 32
//! k re im        (kmax + 1 lines, k = 0 … kmax)
//! ```

use std::io::{BufRead, BufReader, Read, Write};

use num_complex::Complex64;

use super::{CellOrder, CellSolution};
use crate::error::{Error, Result};
use crate::fourier::FourierCoefficients;

pub const CELL_HEADER: &str = "walllaw-cell v1";

#[derive(Debug, Clone, PartialEq)]
pub struct CellSidecar {
    pub order: CellOrder,
    /// `None` when the upper half-strip was treated analytically.
    pub height: Option<f64>,
    pub average: f64,
    pub coeffs: FourierCoefficients,
}

impl From<&CellSolution> for CellSidecar {
    fn from(s: &CellSolution) -> Self {
        Self {
            order: s.order_tag(),
            height: s.truncation_height(),
            average: s.average(),
            coeffs: s.fourier_coeffs().clone(),
        }
    }
}

pub fn write_sidecar<W: Write>(sidecar: &CellSidecar, mut w: W) -> Result<()> {
    writeln!(w, "{CELL_HEADER}")?;
    writeln!(w, "order {}", sidecar.order)?;
    match sidecar.height {
        Some(h) => writeln!(w, "height {h:.16e}")?,
        None => writeln!(w, "height inf")?,
    }
    writeln!(w, "average {:.16e}", sidecar.average)?;
    writeln!(w, "kmax {}", sidecar.coeffs.k_max())?;
    for (k, c) in sidecar.coeffs.coeffs().iter().enumerate() {
        writeln!(w, "{k} {:.16e} {:.16e}", c.re, c.im)?;
    }
    Ok(())
}

pub fn read_sidecar<R: Read>(r: R) -> Result<CellSidecar> {
    let mut lines = BufReader::new(r).lines().enumerate();
    let mut next = || -> Result<(usize, String)> {
        match lines.next() {
            Some((i, l)) => Ok((i + 1, l?)),
            None => Err(Error::Parse {
                line: 0,
                message: "unexpected end of file".into(),
            }),
        }
    };
    let bad = |line: usize, message: String| Error::Parse { line, message };
    let (n, h) = next().map_err(|_| bad(1, "no header".into()))?;
    if h.trim() != CELL_HEADER {
        return Err(bad(n, format!("expected header `{CELL_HEADER}`")));
    }
    let mut value = |key: &str| -> Result<(usize, String)> {
        let (n, l) = next()?;
        l.trim()
            .strip_prefix(key)
            .map(|v| (n, v.trim().to_owned()))
            .ok_or_else(|| bad(n, format!("expected `{key} ...`")))
    };
    let (n, o) = value("order")?;
    let order = o.parse().map_err(|e: Error| bad(n, e.to_string()))?;
    let (n, h) = value("height")?;
    let height = if h == "inf" {
        None
    } else {
        Some(h.parse().map_err(|_| bad(n, format!("bad height `{h}`")))?)
    };
    let (n, a) = value("average")?;
    let average = a.parse().map_err(|_| bad(n, format!("bad average `{a}`")))?;
    let (n, k) = value("kmax")?;
    let kmax: usize = k.parse().map_err(|_| bad(n, format!("bad kmax `{k}`")))?;
    let mut coeffs = Vec::with_capacity(kmax + 1);
    for k in 0..=kmax {
        let (n, l) = next()?;
        let f: Vec<&str> = l.split_whitespace().collect();
        let parsed = (f.len() == 3)
            .then(|| (f[0].parse::<usize>(), f[1].parse::<f64>(), f[2].parse::<f64>()));
        match parsed {
            Some((Ok(kk), Ok(re), Ok(im))) if kk == k => coeffs.push(Complex64::new(re, im)),
            _ => return Err(bad(n, format!("expected `{k} re im`"))),
        }
    }
    Ok(CellSidecar {
        order,
        height,
        average,
        coeffs: FourierCoefficients::new(coeffs)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sidecar_round_trip() {
        let s = CellSidecar {
            order: CellOrder::Second,
            height: Some(10.0),
            average: -0.29795,
            coeffs: FourierCoefficients::new(vec![Complex64::new(-0.29795, 0.0), Complex64::new(0.1, -1e-17)]).unwrap(),
        };
        let mut buf = Vec::new();
        write_sidecar(&s, &mut buf).unwrap();
        assert_eq!(read_sidecar(&buf[..]).unwrap(), s);
        assert!(read_sidecar(&b""[..]).unwrap_err().to_string().contains("no header"));
    }
}
