//! Fourier coefficients of real 2π-periodic traces and their harmonic
//! extension into the half-plane `y2 > 0`.
//!
//! Convention: `η_k = (1/2π) ∫₀^{2π} η(y1) e^{−i k y1} dy1`, so `η_0` is the
//! mean and `η(y1) = Σ_k η_k e^{i k y1}`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Coefficients `η_0 … η_K` of a real trace (`η_{−k} = conj(η_k)`).
#[derive(Debug, Clone, PartialEq)]
pub struct FourierCoefficients {
    coeffs: Vec<Complex64>,
}

impl FourierCoefficients {
    pub fn new(coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidInput("at least η_0 is required".into()));
        }
        Ok(Self { coeffs })
    }

    /// Trapezoidal (exact for trigonometric polynomials) coefficients from
    /// `n` equispaced samples `η(2πj/n)`, keeping `|k| ≤ k_max` (capped at n/2;
    /// the Nyquist mode, if kept, is halved so the interpolant stays real).
    pub fn from_samples(samples: &[f64], k_max: usize) -> Result<Self> {
        let n = samples.len();
        if n < 2 {
            return Err(Error::InvalidInput("need at least two trace samples".into()));
        }
        let kmax = k_max.min(n / 2);
        let coeffs = (0..=kmax)
            .map(|k| {
                let s: Complex64 = samples
                    .iter()
                    .enumerate()
                    .map(|(j, &v)| v * Complex64::from_polar(1.0, -2.0 * PI * (k * j) as f64 / n as f64))
                    .sum();
                let c = s / n as f64;
                if n % 2 == 0 && k == n / 2 {
                    c / 2.0
                } else {
                    c
                }
            })
            .collect();
        Ok(Self { coeffs })
    }

    pub fn k_max(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, k: i64) -> Complex64 {
        let a = k.unsigned_abs() as usize;
        match self.coeffs.get(a) {
            Some(c) if k >= 0 => *c,
            Some(c) => c.conj(),
            None => Complex64::new(0.0, 0.0),
        }
    }

    /// Non-negative coefficients `η_0 … η_K`.
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn mean(&self) -> f64 {
        self.coeffs[0].re
    }

    pub fn truncated(&self, k_max: usize) -> Self {
        Self {
            coeffs: self.coeffs[..=k_max.min(self.k_max())].to_vec(),
        }
    }

    /// `Σ_k η_k e^{i k y1 − |k| y2}` for `y2 ≥ 0`.
    pub fn extend(&self, y1: f64, y2: f64) -> f64 {
        let mut acc = self.coeffs[0].re;
        for (k, c) in self.coeffs.iter().enumerate().skip(1) {
            let damp = (-(k as f64) * y2).exp();
            if damp == 0.0 {
                break;
            }
            acc += 2.0 * damp * (c * Complex64::from_polar(1.0, k as f64 * y1)).re;
        }
        acc
    }

    /// `∂/∂y2` of the harmonic extension at `y2 = 0`:
    /// `−Σ_k |k| η_k e^{i k y1}` (the Dirichlet-to-Neumann map of the half-plane,
    /// up to sign).
    pub fn normal_derivative(&self, y1: f64) -> f64 {
        let mut acc = 0.0;
        for (k, c) in self.coeffs.iter().enumerate().skip(1) {
            acc -= 2.0 * k as f64 * (c * Complex64::from_polar(1.0, k as f64 * y1)).re;
        }
        acc
    }
}

/// Harmonic extension of a trace given by its coefficients, at many points.
pub fn harmonic_extension_fourier(coeffs: &FourierCoefficients, points: &[[f64; 2]]) -> Result<Vec<f64>> {
    points
        .iter()
        .map(|p| {
            if p[1] < 0.0 {
                Err(Error::InvalidInput(format!(
                    "harmonic extension needs y2 ≥ 0, got {}",
                    p[1]
                )))
            } else {
                Ok(coeffs.extend(p[0], p[1]))
            }
        })
        .collect()
}

/// Equispaced sample abscissae `2πj/n`, `j = 0 … n−1`.
pub fn sample_points(n: usize) -> Vec<f64> {
    (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_mode_is_constant() {
        let c = FourierCoefficients::new(vec![Complex64::new(0.7, 0.0)]).unwrap();
        let v = harmonic_extension_fourier(&c, &[[0.3, 0.0], [5.0, 2.0]]).unwrap();
        assert_eq!(v, vec![0.7, 0.7]);
    }

    #[test]
    fn single_mode_decays_like_exp() {
        let c = FourierCoefficients::new(vec![Complex64::new(0.0, 0.0), Complex64::new(0.5, 0.0)]).unwrap();
        for &(y1, y2) in &[(0.0, 0.0), (1.0, 0.5), (2.5, 3.0)] {
            let f: f64 = y1;
            assert!((c.extend(y1, y2) - f.cos() * (-y2 as f64).exp()).abs() < 1e-15);
        }
        assert!((c.normal_derivative(0.4) + 0.4f64.cos()).abs() < 1e-15);
    }

    #[test]
    fn samples_round_trip_through_coefficients() {
        let n = 64;
        let ys = sample_points(n);
        let s: Vec<f64> = ys.iter().map(|y| (y.cos() + 0.3 * (3.0 * y).sin()).exp()).collect();
        let c = FourierCoefficients::from_samples(&s, n / 2).unwrap();
        for (y, v) in ys.iter().zip(&s) {
            assert!((c.extend(*y, 0.0) - v).abs() < 1e-12);
        }
        assert!((c.coeff(-3) - c.coeff(3).conj()).norm() < 1e-15);
    }

    #[test]
    fn negative_height_is_rejected() {
        let c = FourierCoefficients::new(vec![Complex64::new(1.0, 0.0)]).unwrap();
        assert!(harmonic_extension_fourier(&c, &[[0.0, -0.1]]).is_err());
    }
}
