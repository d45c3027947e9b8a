use crate::cr::GRADE_TOL;
use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm, xpby};
use crate::oracle::LinearOperator;

#[derive(Debug, Clone, PartialEq)]
pub struct CgResult {
    pub s: Vec<f64>,
    pub rnorm: f64,
    /// Iterations, equal to the number of operator applications.
    pub iterations: usize,
}

/// Conjugate gradients on `H s = -g` from `s = 0`, stopping once
/// `||r|| <= max(tol, GRADE_TOL) ||g||` or after `max_iter` iterations.
/// Non-positive curvature `<p, Hp> <= 0` is reported as `OperatorNotPd`.
pub fn cg_solve<O: LinearOperator + ?Sized>(
    op: &mut O,
    g: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<CgResult> {
    let n = g.len();
    let gnorm = norm(g);
    if gnorm == 0.0 {
        return Err(Error::ZeroGradient);
    }
    let stop = tol.max(GRADE_TOL) * gnorm;
    let mut s = vec![0.0; n];
    let mut r: Vec<f64> = g.iter().map(|v| -v).collect();
    let mut p = r.clone();
    let mut hp = vec![0.0; n];
    let mut rr = dot(&r, &r);
    let mut iterations = 0;
    while iterations < max_iter {
        op.apply(&p, &mut hp)?;
        let php = dot(&p, &hp);
        if !(php > 0.0) {
            return Err(Error::OperatorNotPd { rhr: php });
        }
        let alpha = rr / php;
        axpy(alpha, &p, &mut s);
        axpy(-alpha, &hp, &mut r);
        iterations += 1;
        let rr_next = dot(&r, &r);
        if rr_next.sqrt() <= stop {
            rr = rr_next;
            break;
        }
        xpby(&r, rr_next / rr, &mut p);
        rr = rr_next;
    }
    Ok(CgResult {
        s,
        rnorm: rr.sqrt(),
        iterations,
    })
}
