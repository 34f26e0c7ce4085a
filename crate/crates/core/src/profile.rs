//! Periodic roughness profiles `y2 = f(y1)`, `y1 ∈ [0, 2π]`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::spline::PeriodicSpline;

/// Number of samples used when validating a profile.
const VALIDATION_SAMPLES: usize = 2048;
/// Largest admissible finite-difference slope of a profile.
const MAX_SLOPE: f64 = 1.0e3;

#[derive(Clone)]
enum Shape {
    /// `f(y1) = -(1 + cos y1)/2 - delta`
    Cosine,
    /// `f(y1) = -delta`
    Flat,
    Tabulated(Arc<PeriodicSpline>),
}

/// Graph of one roughness period below the fictitious interface `y2 = 0`.
#[derive(Clone)]
pub struct RoughnessProfile {
    shape: Shape,
    delta: f64,
    description: String,
}

impl fmt::Debug for RoughnessProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RoughnessProfile")
            .field("delta", &self.delta)
            .field("description", &self.description)
            .finish()
    }
}

impl RoughnessProfile {
    /// Single cosine bump: `f(y1) = -(1 + cos y1)/2 - delta`.
    pub fn cosine(delta: f64) -> Result<Self> {
        Self {
            shape: Shape::Cosine,
            delta,
            description: format!("cosine, f(y1) = -(1+cos y1)/2 - {delta}"),
        }
        .validated()
    }

    /// Flat wall at depth `delta`.
    pub fn flat(delta: f64) -> Result<Self> {
        Self {
            shape: Shape::Flat,
            delta,
            description: format!("flat, f(y1) = -{delta}"),
        }
        .validated()
    }

    /// Profile interpolated (periodic cubic spline) through equispaced samples
    /// `samples[j] = f(2πj/n)`. `delta` is the clearance below `y2 = 0`.
    pub fn tabulated(samples: Vec<f64>, delta: f64, description: impl Into<String>) -> Result<Self> {
        let spline = PeriodicSpline::new(2.0 * PI, samples)?;
        Self {
            shape: Shape::Tabulated(Arc::new(spline)),
            delta,
            description: description.into(),
        }
        .validated()
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn is_flat(&self) -> bool {
        matches!(self.shape, Shape::Flat)
    }

    /// `f(y1)`, periodic with period 2π.
    pub fn evaluate(&self, y1: f64) -> f64 {
        match &self.shape {
            Shape::Cosine => -(1.0 + y1.cos()) / 2.0 - self.delta,
            Shape::Flat => -self.delta,
            Shape::Tabulated(s) => s.eval(y1),
        }
    }

    /// Deepest point of the profile (most negative `f`), sampled.
    pub fn min_value(&self) -> f64 {
        self.sampled().into_iter().fold(f64::INFINITY, f64::min)
    }

    /// Shallowest point of the profile (largest `f`), sampled.
    pub fn max_value(&self) -> f64 {
        self.sampled().into_iter().fold(f64::NEG_INFINITY, f64::max)
    }

    fn sampled(&self) -> Vec<f64> {
        (0..=VALIDATION_SAMPLES)
            .map(|j| self.evaluate(2.0 * PI * j as f64 / VALIDATION_SAMPLES as f64))
            .collect()
    }

    fn validated(self) -> Result<Self> {
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return Err(Error::InvalidProfile(format!(
                "delta must be positive, got {}",
                self.delta
            )));
        }
        let values = self.sampled();
        let first = values[0];
        let last = values[VALIDATION_SAMPLES];
        if (first - last).abs() > 1e-10 * (1.0 + first.abs()) {
            return Err(Error::InvalidProfile(format!(
                "not periodic: f(0) = {first}, f(2π) = {last}"
            )));
        }
        let tol = 1e-12 * self.delta.max(1.0);
        if let Some((j, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v > -self.delta + tol)
        {
            let y1 = 2.0 * PI * j as f64 / VALIDATION_SAMPLES as f64;
            return Err(Error::InvalidProfile(format!(
                "f({y1:.6}) = {v} is not below -delta = {}",
                -self.delta
            )));
        }
        let h = 2.0 * PI / VALIDATION_SAMPLES as f64;
        let slope = values
            .windows(2)
            .map(|w| ((w[1] - w[0]) / h).abs())
            .fold(0.0, f64::max);
        if slope > MAX_SLOPE {
            return Err(Error::InvalidProfile(format!(
                "difference quotient {slope:e} exceeds the Lipschitz bound {MAX_SLOPE:e}"
            )));
        }
        Ok(self)
    }
}
