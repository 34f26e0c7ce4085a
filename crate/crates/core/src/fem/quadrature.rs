//! Gauss–Legendre rules on `[0, 1]` and collapsed (Duffy) rules on the
//! reference triangle `{(s, t): s, t ≥ 0, s + t ≤ 1}`.

use std::f64::consts::PI;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss–Legendre rule needs at least one point");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        // Newton on P_n from the Chebyshev-like initial guess
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = 0.5 * (1.0 - x);
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Quadrature rule on the reference triangle (weights sum to 1/2).
#[derive(Debug, Clone)]
pub struct TriangleRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl TriangleRule {
    /// Collapsed tensor rule with `n x n` points, exact for polynomials of
    /// total degree `2n - 2`.
    pub fn collapsed(n: usize) -> Self {
        let (x, w) = gauss_legendre(n);
        let mut points = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for (xi, wi) in x.iter().zip(&w) {
            for (xj, wj) in x.iter().zip(&w) {
                // (u, v) ∈ [0,1]² ↦ (u, v (1 - u)), Jacobian 1 - u
                points.push([*xi, xj * (1.0 - xi)]);
                weights.push(wi * wj * (1.0 - xi));
            }
        }
        Self { points, weights }
    }

    /// Smallest collapsed rule exact for total degree `degree`.
    pub fn for_degree(degree: usize) -> Self {
        Self::collapsed((degree + 3) / 2)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_monomials() {
        for n in 1..=8 {
            let (x, w) = gauss_legendre(n);
            for p in 0..2 * n {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p as i32)).sum();
                assert!((q - 1.0 / (p as f64 + 1.0)).abs() < 1e-14, "n={n} p={p}");
            }
        }
    }

    #[test]
    fn triangle_rule_integrates_monomials() {
        // ∫ s^a t^b over the reference triangle = a! b! / (a + b + 2)!
        let fact = |k: u32| (1..=k).map(f64::from).product::<f64>();
        for degree in 0..=8 {
            let rule = TriangleRule::for_degree(degree);
            for a in 0..=degree as u32 {
                let b = degree as u32 - a;
                let exact = fact(a) * fact(b) / fact(a + b + 2);
                let q: f64 = rule
                    .points
                    .iter()
                    .zip(&rule.weights)
                    .map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32))
                    .sum();
                assert!((q - exact).abs() < 1e-15, "degree {degree}, a={a}");
            }
        }
    }
}
