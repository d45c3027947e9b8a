//! CR with sufficient-iteration and adaptive sufficient-descent checks.
//!
//! Sufficiency is tested only at checkpoints `t = T + W m`. Iterates between
//! checkpoints are kept in a window so that a failed checkpoint can be
//! resolved by binary search without re-running CR.

use std::collections::VecDeque;
use std::fmt;

use crate::cr::{CrState, GRADE_TOL};
use crate::error::{Error, Result};
use crate::linalg::{add_scaled, dot};
use crate::oracle::{Oracle, RegularizedOracle};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DirectionType {
    /// A verified sufficient CR iterate.
    Suf,
    /// The `T`-th iterate, which failed its check.
    Ins,
    /// Residual tolerance reached or `T_max` iterations done.
    Ter,
}

impl DirectionType {
    pub fn as_str(self) -> &'static str {
        match self {
            DirectionType::Suf => "SUF",
            DirectionType::Ins => "INS",
            DirectionType::Ter => "TER",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "SUF" => Some(DirectionType::Suf),
            "INS" => Some(DirectionType::Ins),
            "TER" => Some(DirectionType::Ter),
            _ => None,
        }
    }
}

impl fmt::Display for DirectionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InnerResult {
    pub direction: Vec<f64>,
    pub dtype: DirectionType,
    /// CR iterations performed; the solve used `t_used + 1` hvps.
    pub t_used: usize,
    /// Index of the returned iterate (`<= t_used`).
    pub t_returned: usize,
    /// Residual norm of the returned iterate.
    pub rnorm: f64,
    /// `<g, direction>`
    pub gs: f64,
    pub checks_performed: usize,
    /// Threshold `rho_t` the returned iterate was checked against.
    pub rho_t: Option<f64>,
    /// `f(x) - f(x + direction)` if that value was evaluated.
    pub best_reduction: Option<f64>,
    /// `f(x + direction)` if evaluated during a check.
    pub f_trial: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SufficiencyParams {
    pub rho: f64,
    pub rho_t: f64,
}

impl SufficiencyParams {
    pub fn new(rho: f64) -> Self {
        SufficiencyParams { rho, rho_t: rho }
    }

    /// `rho_t = rho ||g||^2 / ||r^(t-1)||^2`, and `rho_0 = rho`.
    pub fn at(rho: f64, t: usize, gnorm: f64, rnorm_hist: &[f64]) -> Self {
        let rho_t = if t == 0 {
            rho
        } else {
            let rp = rnorm_hist[t - 1];
            rho * (gnorm * gnorm) / (rp * rp)
        };
        SufficiencyParams { rho, rho_t }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SufficiencyCheck {
    pub sufficient: bool,
    pub c: f64,
    /// `f(x + d)`, `+inf` if the evaluation was not finite.
    pub f_trial: f64,
    pub reduction: f64,
}

/// `f(x) - f(x + d) >= c (-<g, d>)`. One function evaluation; a non-finite
/// `f(x + d)` counts as insufficient.
pub fn is_c_sufficient(
    oracle: &mut Oracle<'_>,
    x: &[f64],
    fx: f64,
    gd: f64,
    d: &[f64],
    c: f64,
) -> Result<SufficiencyCheck> {
    debug_assert!(gd < 0.0, "sufficiency needs a descent direction");
    let mut xd = vec![0.0; x.len()];
    add_scaled(x, 1.0, d, &mut xd);
    let f_trial = match oracle.value(&xd) {
        Ok(v) => v,
        Err(Error::NonFinite { .. }) => f64::INFINITY,
        Err(e) => return Err(e),
    };
    let reduction = fx - f_trial;
    Ok(SufficiencyCheck {
        sufficient: reduction >= c * (-gd),
        c,
        f_trial,
        reduction,
    })
}

/// Ring buffer of CR iterates between checkpoints.
#[derive(Debug, Clone)]
pub struct IterateWindow {
    capacity: usize,
    items: VecDeque<(usize, Vec<f64>)>,
    spare: Vec<Vec<f64>>,
}

impl IterateWindow {
    pub fn new(capacity: usize) -> Self {
        IterateWindow {
            capacity,
            items: VecDeque::with_capacity(capacity),
            spare: Vec::new(),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Stores a copy of `s` as iterate `t`, evicting the oldest when full.
    pub fn push(&mut self, t: usize, s: &[f64]) {
        if self.capacity == 0 {
            return;
        }
        if self.items.len() == self.capacity {
            let (_, old) = self.items.pop_front().expect("window is full");
            self.spare.push(old);
        }
        let mut buf = self.spare.pop().unwrap_or_default();
        buf.clear();
        buf.extend_from_slice(s);
        self.items.push_back((t, buf));
    }

    pub fn get(&self, t: usize) -> Option<&[f64]> {
        self.items
            .iter()
            .find(|(ti, _)| *ti == t)
            .map(|(_, s)| s.as_slice())
    }

    pub fn clear(&mut self) {
        while let Some((_, buf)) = self.items.pop_front() {
            self.spare.push(buf);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerParams {
    pub rho: f64,
    pub omega: f64,
    /// Minimum iterations before the first sufficiency check (`T`).
    pub t_min: usize,
    pub t_max: usize,
    /// Iterations between sufficiency checks (`W`); 1 checks every step.
    pub check_window: usize,
}

struct Candidate {
    t: usize,
    s: Vec<f64>,
    check: SufficiencyCheck,
}

/// Inner solve at `x` with `fx = f(x)` and `g = g(x)` already known. The
/// Hessian is taken from `oracle` (regularized if configured; the shift
/// must already be frozen at `x`).
pub fn fn_cr_solve(
    oracle: &mut RegularizedOracle<'_>,
    x: &[f64],
    fx: f64,
    g: &[f64],
    params: &InnerParams,
) -> Result<InnerResult> {
    let InnerParams {
        rho,
        omega,
        t_min,
        t_max,
        check_window,
    } = *params;
    assert!(1 <= t_min && t_min <= t_max, "need 1 <= T <= T_max");
    assert!(check_window >= 1, "check window must be >= 1");

    let mut state = CrState::init(&mut oracle.hessian_at(x), g)?;
    let gnorm = state.gnorm();
    let stop = omega.max(GRADE_TOL) * gnorm;
    let mut window = IterateWindow::new(check_window);
    let mut checks = 0usize;
    // last checkpoint that passed, with its check outcome
    let mut last_pass: Option<Candidate> = None;

    let check = |oracle: &mut RegularizedOracle<'_>, state: &CrState, t: usize, s: &[f64]| {
        let rho_t = SufficiencyParams::at(rho, t, gnorm, &state.rnorm_hist()).rho_t;
        let gd = dot(g, s);
        is_c_sufficient(&mut oracle.inner, x, fx, gd, s, rho_t)
    };

    loop {
        let t = state.t();
        let mut checked_here: Option<SufficiencyCheck> = None;
        if t >= t_min && (t - t_min) % check_window == 0 {
            let c = check(oracle, &state, t, state.s())?;
            checks += 1;
            if c.sufficient {
                checked_here = Some(c);
                last_pass = Some(Candidate {
                    t,
                    s: state.s().to_vec(),
                    check: c,
                });
                window.clear();
            } else if t == t_min {
                let snap = state.snapshots()[t];
                return Ok(InnerResult {
                    direction: state.s().to_vec(),
                    dtype: DirectionType::Ins,
                    t_used: t,
                    t_returned: t,
                    rnorm: snap.rnorm,
                    gs: snap.gs,
                    checks_performed: checks,
                    rho_t: Some(c.c),
                    best_reduction: Some(c.reduction),
                    f_trial: Some(c.f_trial),
                });
            } else {
                let lo = last_pass.expect("a passing checkpoint precedes any later one");
                return search_window(oracle, &state, &window, lo, t, checks, &check);
            }
        } else if t > t_min {
            window.push(t, state.s());
        }

        if state.rnorm() <= stop || t == t_max {
            let snap = state.snapshots()[t];
            return Ok(InnerResult {
                direction: state.s().to_vec(),
                dtype: DirectionType::Ter,
                t_used: t,
                t_returned: t,
                rnorm: snap.rnorm,
                gs: snap.gs,
                checks_performed: checks,
                rho_t: checked_here.map(|c| c.c),
                best_reduction: checked_here.map(|c| c.reduction),
                f_trial: checked_here.map(|c| c.f_trial),
            });
        }
        state.step(&mut oracle.hessian_at(x))?;
    }
}

/// Binary search over stored iterates in `(lo.t, hi)` after the checkpoint
/// `hi` failed. Returns the largest-reduction passing candidate among `lo`
/// and the midpoints visited; ties go to the larger `t`.
fn search_window<F>(
    oracle: &mut RegularizedOracle<'_>,
    state: &CrState,
    window: &IterateWindow,
    lo: Candidate,
    hi: usize,
    mut checks: usize,
    check: &F,
) -> Result<InnerResult>
where
    F: Fn(&mut RegularizedOracle<'_>, &CrState, usize, &[f64]) -> Result<SufficiencyCheck>,
{
    let (mut lo_t, mut hi_t) = (lo.t, hi);
    let mut best = lo;
    while hi_t - lo_t > 1 {
        let mid = lo_t + (hi_t - lo_t) / 2;
        let s = window
            .get(mid)
            .expect("window holds every iterate between checkpoints");
        let c = check(oracle, state, mid, s)?;
        checks += 1;
        if c.sufficient {
            if c.reduction >= best.check.reduction {
                best = Candidate {
                    t: mid,
                    s: s.to_vec(),
                    check: c,
                };
            }
            lo_t = mid;
        } else {
            hi_t = mid;
        }
    }
    let snap = state.snapshots()[best.t];
    Ok(InnerResult {
        direction: best.s,
        dtype: DirectionType::Suf,
        t_used: state.t(),
        t_returned: best.t,
        rnorm: snap.rnorm,
        gs: snap.gs,
        checks_performed: checks,
        rho_t: Some(best.check.c),
        best_reduction: Some(best.check.reduction),
        f_trial: Some(best.check.f_trial),
    })
}
