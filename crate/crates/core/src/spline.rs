//! Periodic cubic spline through equispaced samples.

use crate::error::{Error, Result};

/// C² periodic cubic interpolant of samples `values[j] = g(j * period / n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicSpline {
    period: f64,
    values: Vec<f64>,
    second: Vec<f64>,
}

impl PeriodicSpline {
    pub fn new(period: f64, values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        if n < 3 {
            return Err(Error::InvalidInput(format!(
                "periodic spline needs at least 3 samples, got {n}"
            )));
        }
        if !(period > 0.0) || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "periodic spline needs a positive period and finite samples".into(),
            ));
        }
        let h = period / n as f64;
        let rhs: Vec<f64> = (0..n)
            .map(|i| {
                let prev = values[(i + n - 1) % n];
                let next = values[(i + 1) % n];
                6.0 * (next - 2.0 * values[i] + prev) / (h * h)
            })
            .collect();
        let second = solve_cyclic_1_4_1(&rhs);
        Ok(Self {
            period,
            values,
            second,
        })
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn samples(&self) -> &[f64] {
        &self.values
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.values.len();
        let h = self.period / n as f64;
        let s = t.rem_euclid(self.period) / h;
        let i = (s.floor() as usize).min(n - 1);
        let a = s - i as f64;
        let b = 1.0 - a;
        let j = (i + 1) % n;
        b * self.values[i]
            + a * self.values[j]
            + ((b * b * b - b) * self.second[i] + (a * a * a - a) * self.second[j]) * h * h / 6.0
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let n = self.values.len();
        let h = self.period / n as f64;
        let s = t.rem_euclid(self.period) / h;
        let i = (s.floor() as usize).min(n - 1);
        let a = s - i as f64;
        let b = 1.0 - a;
        let j = (i + 1) % n;
        (self.values[j] - self.values[i]) / h
            + ((1.0 - 3.0 * b * b) * self.second[i] + (3.0 * a * a - 1.0) * self.second[j]) * h
                / 6.0
    }

    pub fn min_sample(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Solves the circulant system `x[i-1] + 4 x[i] + x[i+1] = r[i]` (indices mod n).
fn solve_cyclic_1_4_1(rhs: &[f64]) -> Vec<f64> {
    let n = rhs.len();
    // Sherman–Morrison on the cyclic tridiagonal matrix with a = c = 1, b = 4.
    let gamma = -4.0;
    let mut diag = vec![4.0; n];
    diag[0] -= gamma;
    diag[n - 1] -= 1.0 / gamma;
    let x = thomas(&diag, rhs);
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = 1.0;
    let z = thomas(&diag, &u);
    let fact = (x[0] + x[n - 1] / gamma) / (1.0 + z[0] + z[n - 1] / gamma);
    x.iter().zip(&z).map(|(xi, zi)| xi - fact * zi).collect()
}

/// Tridiagonal solve with unit off-diagonals.
fn thomas(diag: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = 1.0 / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - c[i - 1];
        c[i] = 1.0 / m;
        d[i] = (rhs[i] - d[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn interpolates_samples() {
        let vals: Vec<f64> = (0..16).map(|j| (j as f64 * 0.7).sin() + 0.1 * j as f64).collect();
        let s = PeriodicSpline::new(3.0, vals.clone()).unwrap();
        for (j, v) in vals.iter().enumerate() {
            assert!((s.eval(j as f64 * 3.0 / 16.0) - v).abs() < 1e-13);
        }
    }

    #[test]
    fn reproduces_smooth_periodic_function() {
        let n = 256;
        let vals: Vec<f64> = (0..n)
            .map(|j| (2.0 * PI * j as f64 / n as f64).cos())
            .collect();
        let s = PeriodicSpline::new(2.0 * PI, vals).unwrap();
        for k in 0..100 {
            let t = 0.0617 * k as f64;
            assert!((s.eval(t) - t.cos()).abs() < 1e-8);
            assert!((s.derivative(t) + t.sin()).abs() < 1e-5);
        }
        // wraps around the period
        assert!((s.eval(-0.3) - (-0.3f64).cos()).abs() < 1e-8);
    }

    #[test]
    fn constant_samples_stay_constant() {
        let s = PeriodicSpline::new(1.0, vec![2.5; 10]).unwrap();
        assert!((s.eval(0.123) - 2.5).abs() < 1e-14);
    }

    #[test]
    fn rejects_too_few_samples() {
        assert!(PeriodicSpline::new(1.0, vec![1.0, 2.0]).is_err());
    }
}
