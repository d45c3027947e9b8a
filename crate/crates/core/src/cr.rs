//! Conjugate Residual for `H s = -g` with `H` symmetric positive definite.
//!
//! One operator application per iteration: `H r` is computed directly and
//! `H p` follows from the recurrence `Hp' = Hr' + gamma Hp`. The direction
//! update uses the new residual, `p' = r' + gamma p`.

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm, xpby};
use crate::oracle::LinearOperator;

/// `||Hp||^2` below this is treated as a breakdown.
pub const BREAKDOWN_TOL: f64 = 1e-300;

/// Relative residual at which the recursively updated residual is taken to
/// have reached the grade of `g` in floating point.
pub const GRADE_TOL: f64 = 1e-14;

/// Scalar diagnostics of one CR iterate `s^(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrSnapshot {
    pub t: usize,
    pub rnorm: f64,
    pub snorm: f64,
    /// `||H s||`, using `H s = -g - r`.
    pub hs_norm: f64,
    /// `<g, s>`
    pub gs: f64,
    /// `<s, H s>`
    pub s_hs: f64,
    /// `<s, H r>`
    pub s_hr: f64,
    pub hp_norm: f64,
    pub hr_norm: f64,
}

#[derive(Debug, Clone)]
pub struct CrState {
    t: usize,
    g: Vec<f64>,
    gnorm: f64,
    s: Vec<f64>,
    r: Vec<f64>,
    p: Vec<f64>,
    hp: Vec<f64>,
    hr: Vec<f64>,
    rhr: f64,
    alpha_hist: Vec<f64>,
    snapshots: Vec<CrSnapshot>,
}

impl CrState {
    /// `s = 0`, `r = p = -g`; costs one operator application.
    pub fn init<O: LinearOperator + ?Sized>(op: &mut O, g: &[f64]) -> Result<Self> {
        crate::linalg::check_dims(op.dim(), g.len())?;
        let gnorm = norm(g);
        if gnorm == 0.0 {
            return Err(Error::ZeroGradient);
        }
        let r: Vec<f64> = g.iter().map(|v| -v).collect();
        let mut hr = vec![0.0; g.len()];
        op.apply(&r, &mut hr)?;
        let rhr = dot(&r, &hr);
        let mut state = CrState {
            t: 0,
            g: g.to_vec(),
            gnorm,
            s: vec![0.0; g.len()],
            p: r.clone(),
            hp: hr.clone(),
            r,
            hr,
            rhr,
            alpha_hist: Vec::new(),
            snapshots: Vec::new(),
        };
        state.record();
        Ok(state)
    }

    /// One CR update; costs one operator application.
    pub fn step<O: LinearOperator + ?Sized>(&mut self, op: &mut O) -> Result<()> {
        if !(self.rhr > 0.0) {
            return Err(Error::OperatorNotPd { rhr: self.rhr });
        }
        let hp_sq = dot(&self.hp, &self.hp);
        if hp_sq < BREAKDOWN_TOL {
            return Err(Error::Breakdown { hp_sq });
        }
        let alpha = self.rhr / hp_sq;
        axpy(alpha, &self.p, &mut self.s);
        axpy(-alpha, &self.hp, &mut self.r);
        op.apply(&self.r, &mut self.hr)?;
        let rhr_next = dot(&self.r, &self.hr);
        let gamma = rhr_next / self.rhr;
        xpby(&self.r, gamma, &mut self.p);
        xpby(&self.hr, gamma, &mut self.hp);
        self.rhr = rhr_next;
        self.alpha_hist.push(alpha);
        self.t += 1;
        self.record();
        Ok(())
    }

    fn record(&mut self) {
        let hs: Vec<f64> = self.g.iter().zip(&self.r).map(|(g, r)| -g - r).collect();
        let snap = CrSnapshot {
            t: self.t,
            rnorm: norm(&self.r),
            snorm: norm(&self.s),
            hs_norm: norm(&hs),
            gs: dot(&self.g, &self.s),
            s_hs: dot(&self.s, &hs),
            s_hr: dot(&self.s, &self.hr),
            hp_norm: norm(&self.hp),
            hr_norm: norm(&self.hr),
        };
        self.snapshots.push(snap);
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn g(&self) -> &[f64] {
        &self.g
    }

    pub fn gnorm(&self) -> f64 {
        self.gnorm
    }

    pub fn s(&self) -> &[f64] {
        &self.s
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    pub fn rnorm(&self) -> f64 {
        self.snapshots[self.t].rnorm
    }

    pub fn rhr(&self) -> f64 {
        self.rhr
    }

    /// `alpha^(0..t)`.
    pub fn alpha_hist(&self) -> &[f64] {
        &self.alpha_hist
    }

    /// `||r^(0..=t)||`.
    pub fn rnorm_hist(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.rnorm).collect()
    }

    /// `<g, s^(0..=t)>`.
    pub fn gs_hist(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.gs).collect()
    }

    pub fn snapshots(&self) -> &[CrSnapshot] {
        &self.snapshots
    }

    /// `||(-g - H s) - r|| / ||g||`, the drift of the recursive residual.
    /// Costs one extra operator application.
    pub fn residual_drift<O: LinearOperator + ?Sized>(&self, op: &mut O) -> Result<f64> {
        let mut hs = vec![0.0; self.s.len()];
        op.apply(&self.s, &mut hs)?;
        let diff: Vec<f64> = self
            .g
            .iter()
            .zip(&hs)
            .zip(&self.r)
            .map(|((g, h), r)| -g - h - r)
            .collect();
        Ok(norm(&diff) / self.gnorm)
    }
}

/// Runs CR until `||r|| <= max(tol, GRADE_TOL) ||g||` or `max_iter` steps.
/// Uses `t + 1` operator applications.
pub fn cr_solve<O: LinearOperator + ?Sized>(
    op: &mut O,
    g: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<CrState> {
    assert!((0.0..1.0).contains(&tol), "tol must be in [0, 1)");
    assert!(max_iter >= 1, "max_iter must be >= 1");
    let mut state = CrState::init(op, g)?;
    let stop = tol.max(GRADE_TOL) * state.gnorm();
    while state.t() < max_iter && state.rnorm() > stop {
        state.step(op)?;
    }
    Ok(state)
}

/// Outcome of one property over a CR run.
#[derive(Debug, Clone, PartialEq)]
pub struct PropertyCheck {
    pub name: &'static str,
    pub passed: bool,
    /// Smallest normalized slack observed; negative beyond tolerance fails.
    pub worst_margin: f64,
    pub steps_checked: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrReport {
    pub checks: Vec<PropertyCheck>,
}

impl CrReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&PropertyCheck> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

/// Relative slack for strict inequalities between computed quantities.
pub const PROPERTY_REL_TOL: f64 = 1e-8;

struct Tally {
    name: &'static str,
    worst: f64,
    n: usize,
    tol: f64,
}

impl Tally {
    fn new(name: &'static str, tol: f64) -> Self {
        Tally {
            name,
            worst: f64::INFINITY,
            n: 0,
            tol,
        }
    }

    /// Records `margin` (already normalized); passing means `margin >= -tol`.
    fn push(&mut self, margin: f64) {
        self.worst = self.worst.min(if margin.is_nan() { f64::NEG_INFINITY } else { margin });
        self.n += 1;
    }

    fn finish(self) -> PropertyCheck {
        PropertyCheck {
            name: self.name,
            passed: self.n == 0 || self.worst >= -self.tol,
            worst_margin: if self.n == 0 { 0.0 } else { self.worst },
            steps_checked: self.n,
        }
    }
}

/// Checks the monotonicity, descent, orthogonality and step-length
/// properties of CR on a recorded run, given the true extreme eigenvalues
/// of `H`. With `exact_solution`, also checks that an iterate at the grade
/// equals `-H^{-1} g` to relative tolerance `1e-8`.
pub fn verify_cr_properties(
    state: &CrState,
    lambda_min: f64,
    lambda_max: f64,
    exact_solution: Option<&[f64]>,
) -> CrReport {
    let snaps = state.snapshots();
    let alphas = state.alpha_hist();
    let gn = state.gnorm();
    let g2 = gn * gn;
    let tol = PROPERTY_REL_TOL;

    let mut r_dec = Tally::new("residual_decreasing", tol);
    let mut s_inc = Tally::new("step_norm_increasing", tol);
    let mut hs_inc = Tally::new("hs_norm_increasing_bounded", tol);
    let mut gs_dec = Tally::new("gs_decreasing_negative", tol);
    let mut hp_le_hr = Tally::new("hp_norm_le_hr_norm", tol);
    let mut gs_le_shs = Tally::new("gs_le_minus_shs", tol);
    let mut s_hr_zero = Tally::new("s_hr_orthogonal", tol);
    let mut alpha_bounds = Tally::new("alpha_in_inverse_spectrum", 1e-10);
    let mut telescoping = Tally::new("gs_telescoping_bound", 1e-10);

    for t in 1..snaps.len() {
        let (prev, cur) = (&snaps[t - 1], &snaps[t]);
        r_dec.push((prev.rnorm - cur.rnorm) / prev.rnorm);
        s_inc.push((cur.snorm - prev.snorm) / cur.snorm);
        hs_inc.push(((cur.hs_norm - prev.hs_norm) / gn).min((gn - cur.hs_norm) / gn));
        let a = (prev.gs - cur.gs) / cur.gs.abs();
        let b = if t >= 2 { -prev.gs / prev.gs.abs() } else { f64::INFINITY };
        gs_dec.push(a.min(b).min(-cur.gs / cur.gs.abs()));
        gs_le_shs.push(((-cur.s_hs - cur.gs) / cur.gs.abs()).min(cur.s_hs / cur.gs.abs()));
        // <g, s_t> <= <g, s_{t-1}> - ||r_{t-1}||^2 / lambda_max, slack relative to ||g||^2 / lambda_max
        let bound = prev.gs - prev.rnorm * prev.rnorm / lambda_max;
        telescoping.push((bound - cur.gs) / (g2 / lambda_max));
    }
    for snap in snaps {
        hp_le_hr.push((snap.hr_norm - snap.hp_norm) / snap.hr_norm.max(f64::MIN_POSITIVE));
        s_hr_zero.push(-snap.s_hr.abs() / g2);
    }
    for &alpha in alphas {
        let lo = 1.0 / lambda_max;
        let hi = 1.0 / lambda_min;
        alpha_bounds.push(((alpha - lo) / hi).min((hi - alpha) / hi));
    }

    let mut checks = vec![
        r_dec.finish(),
        s_inc.finish(),
        hs_inc.finish(),
        gs_dec.finish(),
        hp_le_hr.finish(),
        gs_le_shs.finish(),
        s_hr_zero.finish(),
        alpha_bounds.finish(),
        telescoping.finish(),
    ];

    if let Some(exact) = exact_solution {
        let mut grade = Tally::new("grade_solution_exact", 1e-8);
        if state.rnorm() <= 1e-10 * gn {
            let diff: Vec<f64> = state.s().iter().zip(exact).map(|(a, b)| a - b).collect();
            grade.push(-norm(&diff) / norm(exact));
        }
        checks.push(grade.finish());
    }
    CrReport { checks }
}

/// Grade of `g` with respect to a dense `H` in floating point: the
/// numerical rank of the column-normalized Krylov matrix
/// `[g, Hg, ..., H^d g]` at tolerance `(d + 1) eps sigma_max`.
pub fn numerical_grade(h: &nalgebra::DMatrix<f64>, g: &[f64]) -> usize {
    let d = g.len();
    let mut k = nalgebra::DMatrix::zeros(d, d + 1);
    let mut v = nalgebra::DVector::from_column_slice(g);
    for j in 0..=d {
        let n = v.norm();
        if n == 0.0 || !n.is_finite() {
            break;
        }
        v /= n;
        k.set_column(j, &v);
        v = h * &v;
    }
    let sv = k.singular_values();
    let tol = (d + 1) as f64 * f64::EPSILON * sv.max();
    sv.iter().filter(|s| **s > tol).count()
}
