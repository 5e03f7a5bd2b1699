//! Linear solves: Jacobi-preconditioned CG with a dense fallback, and
//! zero-mean constrained solves for periodic cell problems.

use nalgebra::{DMatrix, DVector};

use super::dofs::ConstraintMode;
use super::sparse::CsrMatrix;
use crate::error::{Error, Result};

/// Matrix, right-hand side and the constraint treatment already applied.
#[derive(Debug, Clone)]
pub struct SparseSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub mode: ConstraintMode,
    /// Zero-mean constraints `wᵀx = 0` paired with kernel vectors of the
    /// matrix; used only in [`ConstraintMode::ZeroMeanLagrange`].
    pub zero_mean: Vec<MeanConstraint>,
}

#[derive(Debug, Clone)]
pub struct MeanConstraint {
    pub weights: Vec<f64>,
    pub kernel: Vec<f64>,
}

impl SparseSystem {
    pub fn new(matrix: CsrMatrix, rhs: Vec<f64>, mode: ConstraintMode) -> Self {
        Self { matrix, rhs, mode, zero_mean: Vec::new() }
    }

    pub fn with_zero_mean(mut self, constraints: Vec<MeanConstraint>) -> Self {
        self.mode = ConstraintMode::ZeroMeanLagrange;
        self.zero_mean = constraints;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Systems smaller than this are solved densely.
    pub dense_below: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 20_000, dense_below: 500 }
    }
}

impl SolverOptions {
    pub fn iterative_only(mut self) -> Self {
        self.dense_below = 0;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    /// Relative residual `‖b - Ax‖ / ‖b‖` of the (compatible) system.
    pub residual: f64,
    pub dense: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn solve(sys: &SparseSystem, opts: &SolverOptions) -> Result<(Vec<f64>, SolveReport)> {
    let n = sys.matrix.dim();
    if sys.rhs.len() != n {
        return Err(Error::Invalid(format!("rhs length {} != matrix dimension {n}", sys.rhs.len())));
    }
    let constraints: &[MeanConstraint] =
        if sys.mode == ConstraintMode::ZeroMeanLagrange { &sys.zero_mean } else { &[] };
    if n < opts.dense_below {
        return dense_solve(&sys.matrix, &sys.rhs, constraints);
    }
    if constraints.is_empty() {
        let (x, it) = pcg(&sys.matrix, &sys.rhs, opts)?;
        let residual = relative_residual(&sys.matrix, &x, &sys.rhs);
        return Ok((x, SolveReport { iterations: it, residual, dense: false }));
    }
    // Multipliers from compatibility with the kernel: kᵀ(b - Σλw) = 0.
    let m = constraints.len();
    let gram = DMatrix::from_fn(m, m, |c, d| dot(&constraints[c].kernel, &constraints[d].weights));
    let kb = DVector::from_fn(m, |c, _| dot(&constraints[c].kernel, &sys.rhs));
    let lambda = gram.clone().lu().solve(&kb).ok_or(Error::Singular)?;
    let mut b = sys.rhs.clone();
    for (c, con) in constraints.iter().enumerate() {
        for (bi, wi) in b.iter_mut().zip(&con.weights) {
            *bi -= lambda[c] * wi;
        }
    }
    let (mut x, it) = pcg(&sys.matrix, &b, opts)?;
    // Shift along the kernel to the zero-mean representative.
    let wx = DVector::from_fn(m, |d, _| dot(&constraints[d].weights, &x));
    let beta = gram.transpose().lu().solve(&wx).ok_or(Error::Singular)?;
    for (c, con) in constraints.iter().enumerate() {
        for (xi, ki) in x.iter_mut().zip(&con.kernel) {
            *xi -= beta[c] * ki;
        }
    }
    let residual = relative_residual(&sys.matrix, &x, &b);
    Ok((x, SolveReport { iterations: it, residual, dense: false }))
}

fn relative_residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.apply(x);
    let r: Vec<f64> = b.iter().zip(&ax).map(|(b, y)| b - y).collect();
    let nb = norm(b);
    if nb == 0.0 {
        norm(&r)
    } else {
        norm(&r) / nb
    }
}

/// Jacobi-preconditioned conjugate gradients from a zero initial guess.
pub fn pcg(a: &CsrMatrix, b: &[f64], opts: &SolverOptions) -> Result<(Vec<f64>, usize)> {
    let n = a.dim();
    let mut x = vec![0.0; n];
    let nb = norm(b);
    if nb == 0.0 {
        return Ok((x, 0));
    }
    let inv_diag: Vec<f64> = a.diagonal().iter().map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 }).collect();
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    for it in 1..=opts.max_iter {
        a.mul_vec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::SolverFailure { iterations: it, residual: norm(&r) / nb });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rn = norm(&r) / nb;
        if rn <= opts.tol {
            return Ok((x, it));
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::SolverFailure { iterations: opts.max_iter, residual: relative_residual(a, &x, b) })
}

fn dense_solve(a: &CsrMatrix, b: &[f64], constraints: &[MeanConstraint]) -> Result<(Vec<f64>, SolveReport)> {
    let n = a.dim();
    let m = constraints.len();
    let x = if m == 0 {
        let dense = a.to_dense();
        let rhs = DVector::from_column_slice(b);
        match dense.clone().cholesky() {
            Some(ch) => ch.solve(&rhs),
            None => dense.lu().solve(&rhs).ok_or(Error::Singular)?,
        }
        .as_slice()
        .to_vec()
    } else {
        let mut aug = DMatrix::zeros(n + m, n + m);
        aug.view_mut((0, 0), (n, n)).copy_from(&a.to_dense());
        for (c, con) in constraints.iter().enumerate() {
            for i in 0..n {
                aug[(i, n + c)] = con.weights[i];
                aug[(n + c, i)] = con.weights[i];
            }
        }
        let mut rhs = DVector::zeros(n + m);
        rhs.rows_mut(0, n).copy_from_slice(b);
        let sol = aug.lu().solve(&rhs).ok_or(Error::Singular)?;
        sol.as_slice()[..n].to_vec()
    };
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular);
    }
    // Residual of the compatible part: project b onto range(A) via the
    // multipliers implicitly solved above.
    let ax = a.apply(&x);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(b, y)| b - y).collect();
    if m > 0 {
        let gram = DMatrix::from_fn(m, m, |c, d| dot(&constraints[c].kernel, &constraints[d].weights));
        let kr = DVector::from_fn(m, |c, _| dot(&constraints[c].kernel, &r));
        if let Some(l) = gram.lu().solve(&kr) {
            for (c, con) in constraints.iter().enumerate() {
                for (ri, wi) in r.iter_mut().zip(&con.weights) {
                    *ri -= l[c] * wi;
                }
            }
        }
    }
    let nb = norm(b);
    let residual = if nb == 0.0 { norm(&r) } else { norm(&r) / nb };
    Ok((x, SolveReport { iterations: 0, residual, dense: true }))
}
