//! Matrix-free objective interface and oracle-unit accounting.
//!
//! Cost model: a function value is one unit, a gradient one unit, and a
//! Hessian-vector product two units. Regularizing the Hessian is a vector
//! update and costs nothing.

use crate::error::{Error, Result};
use crate::linalg::{axpy, check_dims, check_finite};

/// A twice-differentiable objective accessed only through values, gradients
/// and Hessian-vector products.
pub trait Objective: Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    fn gradient(&self, x: &[f64], out: &mut [f64]);

    fn hvp(&self, x: &[f64], v: &[f64], out: &mut [f64]);

    /// A proven lower bound on the smallest Hessian eigenvalue over the
    /// whole domain, when the objective has one in closed form.
    fn curvature_floor(&self) -> Option<f64> {
        None
    }
}

/// A symmetric linear map applied matrix-free.
pub trait LinearOperator {
    fn dim(&self) -> usize;

    fn apply(&mut self, v: &[f64], out: &mut [f64]) -> Result<()>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EvalKind {
    Value,
    Gradient,
    Hvp,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OracleCounter {
    pub f_evals: u64,
    pub grad_evals: u64,
    pub hvp_evals: u64,
}

impl OracleCounter {
    pub fn count(&mut self, kind: EvalKind) {
        match kind {
            EvalKind::Value => self.f_evals += 1,
            EvalKind::Gradient => self.grad_evals += 1,
            EvalKind::Hvp => self.hvp_evals += 1,
        }
    }

    pub fn units(&self) -> u64 {
        self.f_evals + self.grad_evals + 2 * self.hvp_evals
    }
}

/// Counting wrapper around an [`Objective`]. Every evaluation checks its
/// input dimension and refuses to return non-finite values.
pub struct Oracle<'p> {
    problem: &'p dyn Objective,
    counter: OracleCounter,
}

impl<'p> Oracle<'p> {
    pub fn new(problem: &'p dyn Objective) -> Self {
        Oracle {
            problem,
            counter: OracleCounter::default(),
        }
    }

    pub fn problem(&self) -> &'p dyn Objective {
        self.problem
    }

    pub fn dim(&self) -> usize {
        self.problem.dim()
    }

    pub fn counter(&self) -> OracleCounter {
        self.counter
    }

    pub fn units(&self) -> u64 {
        self.counter.units()
    }

    pub fn value(&mut self, x: &[f64]) -> Result<f64> {
        check_dims(self.dim(), x.len())?;
        self.counter.count(EvalKind::Value);
        let f = self.problem.value(x);
        if f.is_finite() {
            Ok(f)
        } else {
            Err(Error::NonFinite { index: 0 })
        }
    }

    pub fn gradient(&mut self, x: &[f64], out: &mut [f64]) -> Result<()> {
        check_dims(self.dim(), x.len())?;
        check_dims(self.dim(), out.len())?;
        self.counter.count(EvalKind::Gradient);
        self.problem.gradient(x, out);
        check_finite(out)
    }

    pub fn hvp(&mut self, x: &[f64], v: &[f64], out: &mut [f64]) -> Result<()> {
        check_dims(self.dim(), x.len())?;
        check_dims(self.dim(), v.len())?;
        check_dims(self.dim(), out.len())?;
        self.counter.count(EvalKind::Hvp);
        self.problem.hvp(x, v, out);
        check_finite(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regularization {
    None,
    /// `H = hess f + h I` with `h > 0`.
    Constant(f64),
    /// `H = hess f + sigma * sqrt(||g(x)||) I`, the shift frozen per iterate.
    Gradient(f64),
}

/// Oracle whose Hessian products carry an optional identity shift.
pub struct RegularizedOracle<'p> {
    pub inner: Oracle<'p>,
    mode: Regularization,
    frozen: Option<FrozenShift>,
}

struct FrozenShift {
    at: Vec<f64>,
    sqrt_g_norm: f64,
}

impl<'p> RegularizedOracle<'p> {
    pub fn new(problem: &'p dyn Objective, mode: Regularization) -> Self {
        RegularizedOracle {
            inner: Oracle::new(problem),
            mode,
            frozen: None,
        }
    }

    pub fn mode(&self) -> Regularization {
        self.mode
    }

    pub fn dim(&self) -> usize {
        self.inner.dim()
    }

    pub fn units(&self) -> u64 {
        self.inner.units()
    }

    pub fn counter(&self) -> OracleCounter {
        self.inner.counter()
    }

    /// Records `sqrt(||g(x)||)` for the iterate `x`. Must be called once per
    /// outer iterate before any regularized product at that iterate.
    pub fn freeze(&mut self, x: &[f64], g_norm: f64) {
        self.frozen = Some(FrozenShift {
            at: x.to_vec(),
            sqrt_g_norm: g_norm.sqrt(),
        });
    }

    /// Identity shift currently applied at `x`.
    pub fn shift_at(&self, x: &[f64]) -> Result<f64> {
        match self.mode {
            Regularization::None => Ok(0.0),
            Regularization::Constant(h) => Ok(h),
            Regularization::Gradient(sigma) => match &self.frozen {
                Some(fs) if fs.at.as_slice() == x => Ok(sigma * fs.sqrt_g_norm),
                _ => Err(Error::StaleRegularization),
            },
        }
    }

    pub fn value(&mut self, x: &[f64]) -> Result<f64> {
        self.inner.value(x)
    }

    pub fn gradient(&mut self, x: &[f64], out: &mut [f64]) -> Result<()> {
        self.inner.gradient(x, out)
    }

    /// Regularized Hessian-vector product; counts as one hvp.
    pub fn hvp(&mut self, x: &[f64], v: &[f64], out: &mut [f64]) -> Result<()> {
        let shift = self.shift_at(x)?;
        self.inner.hvp(x, v, out)?;
        if shift != 0.0 {
            axpy(shift, v, out);
        }
        Ok(())
    }

    /// The regularized Hessian at `x` as a linear operator.
    pub fn hessian_at<'a>(&'a mut self, x: &'a [f64]) -> HessianAt<'a, 'p> {
        HessianAt { oracle: self, x }
    }
}

pub struct HessianAt<'a, 'p> {
    oracle: &'a mut RegularizedOracle<'p>,
    x: &'a [f64],
}

impl LinearOperator for HessianAt<'_, '_> {
    fn dim(&self) -> usize {
        self.x.len()
    }

    fn apply(&mut self, v: &[f64], out: &mut [f64]) -> Result<()> {
        self.oracle.hvp(self.x, v, out)
    }
}

/// Dense symmetric matrix as an operator; rows are reduced left to right.
impl LinearOperator for nalgebra::DMatrix<f64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&mut self, v: &[f64], out: &mut [f64]) -> Result<()> {
        dense_matvec(self, v, out);
        Ok(())
    }
}

pub(crate) fn dense_matvec(a: &nalgebra::DMatrix<f64>, v: &[f64], out: &mut [f64]) {
    let n = a.nrows();
    assert_eq!(a.ncols(), v.len());
    assert_eq!(n, out.len());
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (j, vj) in v.iter().enumerate() {
            acc += a[(i, j)] * vj;
        }
        *o = acc;
    }
}
