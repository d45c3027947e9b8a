//! Per-iteration convergence inequalities checked against a finished trace.

use crate::problems::ProblemInfo;
use crate::solvers::config::SolverConfig;
use crate::solvers::trace::Trace;

/// Radius `3 (1 - 2 rho) mu^2 / L_H` of the quadratic-convergence region in
/// gradient norm; infinite when `L_H = 0`.
pub fn local_radius(mu: f64, lh: f64, rho: f64) -> f64 {
    if lh <= 0.0 {
        return f64::INFINITY;
    }
    3.0 * (1.0 - 2.0 * rho) * mu * mu / lh
}

#[derive(Debug, Clone, PartialEq)]
pub struct InequalityCheck {
    pub name: &'static str,
    pub passed: bool,
    /// Smallest `(allowed - observed) / allowed`; negative means violated.
    pub worst_margin: f64,
    /// Iterations the inequality applied to.
    pub checked: usize,
}

impl InequalityCheck {
    fn new(name: &'static str) -> Self {
        InequalityCheck {
            name,
            passed: true,
            worst_margin: f64::INFINITY,
            checked: 0,
        }
    }

    /// Records `observed <= allowed` (or `<` when `strict`).
    fn push(&mut self, observed: f64, allowed: f64, strict: bool) {
        let ok = if strict {
            observed < allowed
        } else {
            observed <= allowed
        };
        self.passed &= ok;
        let margin = if allowed != 0.0 {
            (allowed - observed) / allowed.abs()
        } else {
            allowed - observed
        };
        self.worst_margin = self.worst_margin.min(margin);
        self.checked += 1;
    }
}

/// `delta_k <= slack * delta_0 / (1 + rho)^{k/2}` for every record.
pub fn linear_envelope(trace: &Trace, f_star: f64, rho: f64, slack: f64) -> InequalityCheck {
    let mut check = InequalityCheck::new("linear_envelope");
    let delta0 = trace.f0 - f_star;
    for r in &trace.records {
        let bound = slack * delta0 / (1.0 + rho).powf(r.k as f64 / 2.0);
        check.push(r.f - f_star, bound, false);
    }
    check
}

/// `||g_{k+1}|| <= max(slack (L_H / mu^2) ||g_k||^2, abs_floor)` whenever
/// `||g_k|| <= r`. `abs_floor` absorbs roundoff when `L_H = 0`.
pub fn quadratic_phase(
    trace: &Trace,
    mu: f64,
    lh: f64,
    rho: f64,
    slack: f64,
    abs_floor: f64,
) -> InequalityCheck {
    let mut check = InequalityCheck::new("quadratic_phase");
    let radius = local_radius(mu, lh, rho);
    let g = trace.gnorm_series();
    for k in 0..g.len().saturating_sub(1) {
        if g[k] <= radius {
            let bound = slack * lh / (mu * mu) * g[k] * g[k];
            check.push(g[k + 1], bound.max(abs_floor), false);
        }
    }
    check
}

/// Zero backtracks on every iteration.
pub fn no_backtracking(trace: &Trace) -> InequalityCheck {
    let mut check = InequalityCheck::new("no_backtracking");
    for r in &trace.records {
        check.push(r.ls_backtracks as f64, 0.0, false);
    }
    check
}

/// `f_{k+1} < f_k - (2 rho / sqrt(2 L_H)) ||g_k||^{3/2} / slack`.
pub fn regularized_decrease(trace: &Trace, lh: f64, rho: f64, slack: f64) -> InequalityCheck {
    let mut check = InequalityCheck::new("regularized_decrease");
    let f = trace.f_series();
    let g = trace.gnorm_series();
    let c = 2.0 * rho / (2.0 * lh).sqrt() / slack;
    for k in 0..f.len().saturating_sub(1) {
        check.push(f[k + 1], f[k] - c * g[k].powf(1.5), true);
    }
    check
}

/// Strict decrease of `f` across the trace.
pub fn strict_descent(trace: &Trace) -> InequalityCheck {
    let mut check = InequalityCheck::new("strict_descent");
    let f = trace.f_series();
    for w in f.windows(2) {
        check.push(w[1], w[0], true);
    }
    check
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub checks: Vec<InequalityCheck>,
}

impl RateReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&InequalityCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Runs the inequalities whose hypotheses `cfg` satisfies, with the given
/// multiplicative slack on the estimated constants:
/// the linear envelope when a reference optimum is known, the quadratic
/// phase when `1/3 < rho < 1/2`, and the no-backtracking pair when
/// `sigma > 0`, `rho <= 1/6` and `omega = 0`.
pub fn rate_checks(trace: &Trace, info: &ProblemInfo, cfg: &SolverConfig, slack: f64) -> RateReport {
    let mut checks = vec![strict_descent(trace)];
    if let Some(f_star) = info.f_star_ref {
        checks.push(linear_envelope(trace, f_star, cfg.rho, slack));
    }
    if cfg.rho > 1.0 / 3.0 && cfg.rho < 0.5 && info.mu_est > 0.0 {
        checks.push(quadratic_phase(trace, info.mu_est, info.lh_est, cfg.rho, slack, 0.0));
    }
    if cfg.sigma > 0.0 && cfg.rho <= 1.0 / 6.0 && cfg.omega == 0.0 && info.lh_est > 0.0 {
        checks.push(no_backtracking(trace));
        checks.push(regularized_decrease(trace, info.lh_est, cfg.rho, slack));
    }
    RateReport { checks }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::QuadraticProblem;
    use crate::solvers::outer::fncr_ls;

    #[test]
    fn radius_values() {
        assert!((local_radius(1.0, 3.0, 1.0 / 3.0) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(local_radius(1.0, 3.0, 0.5), 0.0);
        assert_eq!(local_radius(1.0, 0.0, 0.4), f64::INFINITY);
    }

    #[test]
    fn quadratic_problem_phase_is_vacuous() {
        let q = QuadraticProblem::random(3, 10, 10.0).unwrap();
        let cfg = SolverConfig {
            rho: 0.4,
            omega: 0.0,
            t_min: 10,
            t_max: 10,
            grad_tol: 0.0,
            max_outer: 3,
            ..Default::default()
        };
        let tr = fncr_ls(&q, &[0.0; 10], &cfg).unwrap();
        let exact = quadratic_phase(&tr, q.eigenvalues()[0], 0.0, 0.4, 1.1, 0.0);
        assert_eq!(exact.checked, tr.iterations());
        let check = quadratic_phase(&tr, q.eigenvalues()[0], 0.0, 0.4, 1.1, 1e-12 * tr.gnorm0);
        assert!(check.passed, "{check:?}");
    }
}
