use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::oracle::{dense_matvec, Objective};
use crate::rng::Stream;

/// `f(x) = 0.5 <x, A x> - <b, x>` with `A` symmetric positive definite.
#[derive(Debug, Clone)]
pub struct QuadraticProblem {
    a: DMatrix<f64>,
    b: Vec<f64>,
    known_solution: Vec<f64>,
    eigenvalues: Vec<f64>,
}

impl QuadraticProblem {
    pub fn new(a: DMatrix<f64>, b: Vec<f64>) -> Result<Self> {
        let d = a.nrows();
        if d == 0 || a.ncols() != d || b.len() != d {
            return Err(Error::InconsistentDimensions(format!(
                "A is {}x{}, b has {} entries",
                a.nrows(),
                a.ncols(),
                b.len()
            )));
        }
        crate::linalg::check_finite(a.as_slice())?;
        crate::linalg::check_finite(&b)?;
        let scale = a.amax().max(1.0);
        for i in 0..d {
            for j in 0..i {
                if (a[(i, j)] - a[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::InvalidProblem(format!(
                        "A is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        let mut eigenvalues: Vec<f64> = SymmetricEigen::new(a.clone()).eigenvalues.iter().copied().collect();
        eigenvalues.sort_by(f64::total_cmp);
        if eigenvalues[0] <= 0.0 {
            return Err(Error::InvalidProblem(format!(
                "A is not positive definite (smallest eigenvalue {:e})",
                eigenvalues[0]
            )));
        }
        let chol = a
            .clone()
            .cholesky()
            .ok_or_else(|| Error::InvalidProblem("Cholesky factorization failed".into()))?;
        let known_solution = chol.solve(&DVector::from_column_slice(&b)).iter().copied().collect();
        Ok(QuadraticProblem {
            a,
            b,
            known_solution,
            eigenvalues,
        })
    }

    pub fn diagonal(diag: &[f64], b: Vec<f64>) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(diag)), b)
    }

    /// `A = Q diag(eigenvalues) Q^T` with a seeded random orthogonal `Q` and
    /// standard-normal `b`.
    pub fn with_spectrum(seed: u64, eigenvalues: &[f64]) -> Result<Self> {
        let d = eigenvalues.len();
        let mut rng = Stream::new(seed);
        let q = random_orthogonal(&mut rng, d);
        let lam = DMatrix::from_diagonal(&DVector::from_column_slice(eigenvalues));
        let a = &q * lam * q.transpose();
        let a = (&a + a.transpose()) * 0.5;
        let b = rng.normal_vec(d);
        Self::new(a, b)
    }

    /// Log-spaced spectrum from 1 to `cond`.
    pub fn random(seed: u64, d: usize, cond: f64) -> Result<Self> {
        if d == 0 || !(cond >= 1.0) {
            return Err(Error::InvalidProblem(format!(
                "random quadratic needs d >= 1 and cond >= 1 (got {d}, {cond})"
            )));
        }
        Self::with_spectrum(seed, &log_spaced_spectrum(d, cond))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn rhs(&self) -> &[f64] {
        &self.b
    }

    pub fn known_solution(&self) -> &[f64] {
        &self.known_solution
    }

    /// Ascending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `-0.5 <b, A^{-1} b>`.
    pub fn optimal_value(&self) -> f64 {
        -0.5 * dot(&self.b, &self.known_solution)
    }
}

pub fn log_spaced_spectrum(d: usize, cond: f64) -> Vec<f64> {
    if d == 1 {
        return vec![1.0];
    }
    (0..d)
        .map(|i| cond.powf(i as f64 / (d - 1) as f64))
        .collect()
}

/// Orthogonal factor of a Gaussian matrix with the column signs fixed so
/// that `R` has a positive diagonal.
pub fn random_orthogonal(rng: &mut Stream, d: usize) -> DMatrix<f64> {
    let g = DMatrix::from_column_slice(d, d, &rng.normal_vec(d * d));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

impl Objective for QuadraticProblem {
    fn dim(&self) -> usize {
        self.b.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let mut ax = vec![0.0; x.len()];
        dense_matvec(&self.a, x, &mut ax);
        0.5 * dot(x, &ax) - dot(&self.b, x)
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        dense_matvec(&self.a, x, out);
        for (o, b) in out.iter_mut().zip(&self.b) {
            *o -= b;
        }
    }

    fn hvp(&self, _x: &[f64], v: &[f64], out: &mut [f64]) {
        dense_matvec(&self.a, v, out);
    }

    fn curvature_floor(&self) -> Option<f64> {
        Some(self.eigenvalues[0])
    }
}
