use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::inner::{fn_cr_solve, DirectionType, InnerParams};
use crate::line_search::{backtrack, LineSearchParams};
use crate::linalg::{check_dims, check_finite, norm};
use crate::oracle::{Objective, RegularizedOracle, Regularization};
use crate::solvers::cg::cg_solve;
use crate::solvers::config::SolverConfig;
use crate::solvers::trace::{Status, StepInfo, Trace, TraceRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolverKind {
    FncrLs,
    FncrRegLs,
    NewtonCg,
    Gd,
}

impl SolverKind {
    pub const ALL: [SolverKind; 4] = [
        SolverKind::FncrLs,
        SolverKind::FncrRegLs,
        SolverKind::NewtonCg,
        SolverKind::Gd,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SolverKind::FncrLs => "fncr_ls",
            SolverKind::FncrRegLs => "fncr_reg_ls",
            SolverKind::NewtonCg => "newton_cg",
            SolverKind::Gd => "gd",
        }
    }

    /// Configuration defaults for this solver.
    pub fn default_config(self) -> SolverConfig {
        let base = SolverConfig::default();
        match self {
            SolverKind::FncrLs => base,
            SolverKind::FncrRegLs => SolverConfig { sigma: 0.01, ..base },
            SolverKind::NewtonCg => SolverConfig { omega: 0.1, ..base },
            SolverKind::Gd => SolverConfig { eta0: 0.01, ..base },
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SolverKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown solver {s:?} (expected fncr_ls, fncr_reg_ls, newton_cg or gd)"
                ))
            })
    }
}

/// A search direction and what produced it.
struct Direction {
    s: Vec<f64>,
    dtype: Option<DirectionType>,
    inner_t: usize,
    inner_checks: usize,
    t_returned: usize,
    /// `f(x + s)` if already evaluated.
    f_trial: Option<f64>,
}

struct IterateView<'a> {
    x: &'a [f64],
    fx: f64,
    g: &'a [f64],
    gnorm: f64,
}

/// Runs `kind` from `x0`. Configuration and starting-point problems are
/// returned as errors; failures during the run end the trace with
/// `Status::Failed` and the error attached.
pub fn solve(kind: SolverKind, problem: &dyn Objective, x0: &[f64], cfg: &SolverConfig) -> Result<Trace> {
    match kind {
        SolverKind::FncrLs | SolverKind::FncrRegLs => fncr_ls(problem, x0, cfg),
        SolverKind::NewtonCg => newton_cg_ls(problem, x0, cfg),
        SolverKind::Gd => gd_ls(problem, x0, cfg),
    }
}

/// CR-based inexact Newton with sufficient-descent checks and backtracking.
/// With `cfg.sigma > 0` the Hessian carries the shift `sigma sqrt(||g_k||)`.
pub fn fncr_ls(problem: &dyn Objective, x0: &[f64], cfg: &SolverConfig) -> Result<Trace> {
    let dim = problem.dim();
    drive(problem, x0, cfg, |oracle, it| {
        let (omega, t_min, t_max) = cfg.inner_schedule(it.gnorm, dim);
        let params = InnerParams {
            rho: cfg.rho,
            omega,
            t_min,
            t_max,
            check_window: cfg.check_window,
        };
        let res = fn_cr_solve(oracle, it.x, it.fx, it.g, &params)?;
        Ok(Direction {
            s: res.direction,
            dtype: Some(res.dtype),
            inner_t: res.t_used,
            inner_checks: res.checks_performed,
            t_returned: res.t_returned,
            f_trial: res.f_trial,
        })
    })
}

/// Truncated Newton with CG to `||r|| <= omega ||g||`, capped at `T_max`.
pub fn newton_cg_ls(problem: &dyn Objective, x0: &[f64], cfg: &SolverConfig) -> Result<Trace> {
    let t_max = cfg.t_max.min(problem.dim()).max(1);
    drive(problem, x0, cfg, |oracle, it| {
        let res = cg_solve(&mut oracle.hessian_at(it.x), it.g, cfg.omega, t_max)?;
        Ok(Direction {
            s: res.s,
            dtype: None,
            inner_t: res.iterations,
            inner_checks: 0,
            t_returned: res.iterations,
            f_trial: None,
        })
    })
}

/// Gradient descent with backtracking from `cfg.eta0`.
pub fn gd_ls(problem: &dyn Objective, x0: &[f64], cfg: &SolverConfig) -> Result<Trace> {
    drive(problem, x0, cfg, |_, it| {
        Ok(Direction {
            s: it.g.iter().map(|v| -v).collect(),
            dtype: None,
            inner_t: 0,
            inner_checks: 0,
            t_returned: 0,
            f_trial: None,
        })
    })
}

fn drive<D>(problem: &dyn Objective, x0: &[f64], cfg: &SolverConfig, mut direction: D) -> Result<Trace>
where
    D: FnMut(&mut RegularizedOracle<'_>, &IterateView<'_>) -> Result<Direction>,
{
    cfg.validate()?;
    check_dims(problem.dim(), x0.len())?;
    check_finite(x0)?;
    let start = Instant::now();
    let mode = if cfg.sigma > 0.0 {
        Regularization::Gradient(cfg.sigma)
    } else {
        Regularization::None
    };
    let mut oracle = RegularizedOracle::new(problem, mode);
    let mut x = x0.to_vec();
    let mut fx = oracle.value(&x)?;
    let mut g = vec![0.0; x.len()];
    oracle.gradient(&x, &mut g)?;
    let mut gnorm = norm(&g);
    let mut trace = Trace {
        f0: fx,
        gnorm0: gnorm,
        units0: oracle.units(),
        records: Vec::new(),
        steps: Vec::new(),
        status: Status::Failed,
        error: None,
        x: Vec::new(),
    };
    let ls_params = LineSearchParams {
        rho: cfg.ls_rho,
        zeta: cfg.zeta,
        eta0: cfg.eta0,
    };

    let mut k = 0usize;
    loop {
        if gnorm <= cfg.grad_tol {
            trace.status = Status::Converged;
            break;
        }
        if oracle.units() > cfg.oracle_budget {
            trace.status = Status::BudgetExhausted;
            break;
        }
        if k >= cfg.max_outer {
            trace.status = Status::MaxIterations;
            break;
        }
        let step = (|| -> Result<(TraceRecord, StepInfo)> {
            if cfg.sigma > 0.0 {
                oracle.freeze(&x, gnorm);
            }
            let shift = oracle.shift_at(&x)?;
            let view = IterateView {
                x: &x,
                fx,
                g: &g,
                gnorm,
            };
            let dir = direction(&mut oracle, &view)?;
            let reuse = if cfg.eta0 == 1.0 { dir.f_trial } else { None };
            let ls = backtrack(&mut oracle.inner, &x, fx, &g, &dir.s, &ls_params, reuse)?;
            check_finite(&ls.x_new)?;
            let gs = crate::linalg::dot(&g, &dir.s);
            x = ls.x_new;
            fx = ls.f_new;
            oracle.gradient(&x, &mut g)?;
            gnorm = norm(&g);
            let record = TraceRecord {
                k: k + 1,
                f: fx,
                gnorm,
                delta: None,
                oracle_units: oracle.units(),
                wall_ns: start.elapsed().as_nanos() as u64,
                dtype: dir.dtype,
                eta: ls.eta,
                inner_t: dir.inner_t,
                ls_backtracks: ls.j,
            };
            let info = StepInfo {
                gs,
                shift,
                ls_f_evals: ls.f_evals,
                inner_checks: dir.inner_checks,
                inner_t_returned: dir.t_returned,
            };
            Ok((record, info))
        })();
        match step {
            Ok((record, info)) => {
                trace.records.push(record);
                trace.steps.push(info);
                k += 1;
            }
            Err(e) => {
                trace.status = Status::Failed;
                trace.error = Some(e);
                break;
            }
        }
    }
    trace.x = x;
    Ok(trace)
}
