//! Sparse symmetric solvers: LDLᵀ with reverse Cuthill–McKee ordering for
//! desk-scale systems, Jacobi-preconditioned conjugate gradients beyond.

use sprs::{CsMat, FillInReduction, SymmetryCheck};
use sprs_ldl::{Ldl, LdlNumeric};

use super::assembly::LinearSystem;
use super::field::FiniteElementField;
use crate::error::{Error, Result};

/// Systems with fewer free dofs than this are factorized directly.
pub const DIRECT_LIMIT: usize = 200_000;
/// Default relative residual target.
pub const DEFAULT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Auto,
    Direct,
    ConjugateGradient,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub kind: SolverKind,
    pub iterations: usize,
    /// `‖b − A x‖ / ‖b‖`
    pub residual: f64,
}

/// Reusable LDLᵀ factorization of a positive definite reduced matrix.
pub struct Factorization {
    ldl: LdlNumeric<f64, usize>,
    matrix: CsMat<f64>,
}

impl Factorization {
    pub fn new(system: &LinearSystem) -> Result<Self> {
        let matrix = system.matrix().to_csr();
        let ldl = Ldl::new()
            .fill_in_reduction(FillInReduction::ReverseCuthillMcKee)
            .check_symmetry(SymmetryCheck::DontCheckSymmetry)
            .numeric(matrix.view())
            .map_err(|e| not_definite(system, format!("factorization failed: {e}")))?;
        if let Some((k, d)) = ldl.d().iter().enumerate().find(|(_, d)| !(**d > 0.0)) {
            return Err(not_definite(system, format!("pivot {k} of LDLᵀ is {d:e}")));
        }
        Ok(Self { ldl, matrix })
    }

    /// Solves with one step of iterative refinement.
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut x: Vec<f64> = self.ldl.solve(rhs.to_vec());
        let r: Vec<f64> = rhs
            .iter()
            .zip(matvec(&self.matrix, &x))
            .map(|(b, ax)| b - ax)
            .collect();
        let dx: Vec<f64> = self.ldl.solve(r);
        for (xi, di) in x.iter_mut().zip(dx) {
            *xi += di;
        }
        x
    }

    pub fn residual(&self, x: &[f64], rhs: &[f64]) -> f64 {
        relative_residual(&self.matrix, x, rhs)
    }
}

fn not_definite(system: &LinearSystem, detail: String) -> Error {
    match system.epsilon() {
        Some(epsilon) => Error::Indefinite { epsilon, detail },
        None => Error::Coercivity(format!("assembled matrix is not positive definite: {detail}")),
    }
}

pub fn solve(system: &LinearSystem, tol: f64) -> Result<FiniteElementField> {
    solve_with(system, tol, SolverKind::Auto).map(|(f, _)| f)
}

pub fn solve_with(
    system: &LinearSystem,
    tol: f64,
    kind: SolverKind,
) -> Result<(FiniteElementField, SolveReport)> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("solver tolerance must be positive, got {tol}")));
    }
    let n = system.constraints().n_free();
    let kind = match kind {
        SolverKind::Auto if n < DIRECT_LIMIT => SolverKind::Direct,
        SolverKind::Auto => SolverKind::ConjugateGradient,
        k => k,
    };
    let (x, report) = match kind {
        SolverKind::Direct => {
            let f = Factorization::new(system)?;
            let x = f.solve(system.rhs());
            let residual = f.residual(&x, system.rhs());
            if residual > tol.max(1e-10) {
                return Err(Error::SolverFailure {
                    iterations: 1,
                    residual,
                    history: vec![residual],
                });
            }
            (
                x,
                SolveReport {
                    kind,
                    iterations: 1,
                    residual,
                },
            )
        }
        _ => {
            let (x, iterations, residual) = pcg(system, tol)?;
            (
                x,
                SolveReport {
                    kind: SolverKind::ConjugateGradient,
                    iterations,
                    residual,
                },
            )
        }
    };
    Ok((system.expand(&x)?, report))
}

fn pcg(system: &LinearSystem, tol: f64) -> Result<(Vec<f64>, usize, f64)> {
    let a = system.matrix();
    let b = system.rhs();
    let n = b.len();
    let diag: Vec<f64> = (0..n).map(|i| a.get(i, i).copied().unwrap_or(0.0)).collect();
    if let Some((i, d)) = diag.iter().enumerate().find(|(_, d)| !(**d > 0.0)) {
        return Err(not_definite(system, format!("diagonal entry {i} is {d:e}")));
    }
    let bnorm = norm2(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok((x, 0, 0.0));
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(r, d)| r / d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut history = Vec::new();
    let max_iter = 20 * n;
    for it in 1..=max_iter {
        let ap = matvec(a, &p);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(not_definite(system, format!("pᵀAp = {pap:e} at iteration {it}")));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let res = norm2(&r) / bnorm;
        history.push(res);
        if res <= tol {
            let true_res = relative_residual(a, &x, b);
            return Ok((x, it, true_res));
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::SolverFailure {
        iterations: max_iter,
        residual: history.last().copied().unwrap_or(f64::NAN),
        history,
    })
}

pub(crate) fn matvec(a: &CsMat<f64>, x: &[f64]) -> Vec<f64> {
    a.outer_iterator()
        .map(|row| row.iter().map(|(j, v)| v * x[j]).sum())
        .collect()
}

fn relative_residual(a: &CsMat<f64>, x: &[f64], b: &[f64]) -> f64 {
    let bnorm = norm2(b);
    let r: Vec<f64> = b.iter().zip(matvec(a, x)).map(|(b, ax)| b - ax).collect();
    if bnorm == 0.0 {
        norm2(&r)
    } else {
        norm2(&r) / bnorm
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
