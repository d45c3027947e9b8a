//! Seeded property suites and the cross-entropy fixtures they run on.

use std::fmt;

use nalgebra::DMatrix;

use crate::cr::{cr_solve, numerical_grade, verify_cr_properties, CrReport, CrState};
use crate::error::{Error, Result};
use crate::exec::ExecPolicy;
use crate::harness::run::{init_x0, Problem};
use crate::harness::spec::{parse_config, ExperimentSpec};
use crate::oracle::Objective;
use crate::problems::{CrossEntropyProblem, ProblemInfo, QuadraticProblem, Region};
use crate::rng::Stream;
use crate::solvers::rates::{
    linear_envelope, no_backtracking, quadratic_phase, regularized_decrease, strict_descent, InequalityCheck,
};
use crate::solvers::{fncr_ls, SolverConfig, Trace};

/// Strongly convex cross-entropy fixture.
pub const STRONGLY_CONVEX_SPEC: &str = "problem = synthetic(42, 500, 20, 2, 1.0)\nmu = 0.1\nseed = 42\n";
/// Convex over-parameterized fixture (`N < dim`, no ridge).
pub const OVERPARAM_SPEC: &str = "problem = synthetic(42, 50, 200, 2, 1.0)\nmu = 0\nseed = 42\n";
/// Reference optimum of the strongly convex fixture, from a run of
/// [`crate::harness::run::compute_f_star`] on `STRONGLY_CONVEX_SPEC`
/// (converged to `||g|| = 3.4e-14` in 194 units).
pub const STRONGLY_CONVEX_F_STAR: f64 = 191.57232283999357;

pub const CR_SYSTEMS: u64 = 1000;
pub const CR_DIM: usize = 20;
pub const GRADE_SYSTEMS: u64 = 200;

pub struct Fixture {
    pub spec: ExperimentSpec,
    pub problem: CrossEntropyProblem,
    pub x0: Vec<f64>,
}

impl Fixture {
    pub fn from_spec(text: &str, policy: ExecPolicy) -> Result<Self> {
        let mut spec = parse_config(text)?;
        spec.policy = policy;
        let Problem::CrossEntropy(problem) = Problem::build(&spec.problem, policy)? else {
            return Err(Error::InvalidProblem("fixture must be cross-entropy".into()));
        };
        let x0 = init_x0(problem.dim(), spec.seed, spec.init);
        Ok(Fixture { spec, problem, x0 })
    }

    pub fn strongly_convex(policy: ExecPolicy) -> Self {
        Self::from_spec(STRONGLY_CONVEX_SPEC, policy).expect("fixture spec is valid")
    }

    pub fn overparam(policy: ExecPolicy) -> Self {
        Self::from_spec(OVERPARAM_SPEC, policy).expect("fixture spec is valid")
    }

    /// Spectrum at `x0`; Hessian-Lipschitz estimate over a ball of radius 5
    /// around `x0`.
    pub fn info(&self) -> ProblemInfo {
        let region = Region {
            center: self.x0.clone(),
            radius: 5.0,
            samples: 64,
            seed: 1,
        };
        ProblemInfo::estimate(&self.problem, &self.x0, &region)
    }
}

/// Linear-rate setting: `omega = sqrt(1 / (2 kappa))`,
/// `T = ceil(sqrt(kappa) ln(8 kappa) / 4)`.
pub fn linear_rate_config(kappa: f64) -> SolverConfig {
    let base = SolverConfig::default();
    let t = (kappa.sqrt() * (8.0 * kappa).ln() / 4.0).ceil().max(1.0) as usize;
    SolverConfig {
        omega: (1.0 / (2.0 * kappa)).sqrt(),
        t_min: t,
        t_max: base.t_max.max(t),
        ls_rho: base.rho,
        ..base
    }
}

/// Quadratic-phase setting: `rho` in `(1/3, 1/2)`, exact inner solves.
pub fn quadratic_phase_config(rho: f64, dim: usize) -> SolverConfig {
    SolverConfig {
        rho,
        ls_rho: rho,
        omega: 0.0,
        t_min: dim,
        t_max: dim,
        grad_tol: 1e-9,
        ..Default::default()
    }
}

/// No-backtracking setting: `sigma = sqrt(L_H / 2)`, `rho = 1/6`,
/// `omega = 0`, `T = T_max = min(dim, 400)`, no budget.
pub fn no_backtracking_config(lh: f64, dim: usize) -> SolverConfig {
    let t = dim.min(400);
    SolverConfig {
        sigma: (lh / 2.0).sqrt(),
        rho: 1.0 / 6.0,
        ls_rho: 1.0 / 6.0,
        omega: 0.0,
        t_min: t,
        t_max: t,
        oracle_budget: u64::MAX,
        ..Default::default()
    }
}

/// Random SPD system with `kappa` log-uniform in `[1, 1e6]` and the other
/// eigenvalues log-uniform in `[1, kappa]`, plus a standard-normal `g`.
pub fn cr_system(seed: u64) -> (QuadraticProblem, Vec<f64>) {
    let mut rng = Stream::new(seed);
    let kappa = 10f64.powf(6.0 * rng.uniform());
    let mut ev = vec![1.0, kappa];
    ev.extend((0..CR_DIM - 2).map(|_| kappa.powf(rng.uniform())));
    let g = rng.normal_vec(CR_DIM);
    let q = QuadraticProblem::with_spectrum(seed, &ev).expect("positive spectrum");
    (q, g)
}

/// SPD system with exactly `k` distinct eigenvalues in `[1, 10]`; the
/// dimension is between 5 and 30.
pub fn few_eigenvalue_system(seed: u64) -> (QuadraticProblem, Vec<f64>, usize) {
    let mut rng = Stream::new(seed ^ 0x5eed);
    let d = 5 + (rng.next_u64() % 26) as usize;
    let k = 1 + (rng.next_u64() % d as u64) as usize;
    let mut distinct: Vec<f64> = Vec::with_capacity(k);
    while distinct.len() < k {
        let v = 10f64.powf(rng.uniform());
        if distinct.iter().all(|u| (u - v).abs() > 1e-3 * v) {
            distinct.push(v);
        }
    }
    let mut ev = distinct.clone();
    ev.extend((k..d).map(|_| distinct[(rng.next_u64() % k as u64) as usize]));
    let g = rng.normal_vec(d);
    let q = QuadraticProblem::with_spectrum(seed, &ev).expect("positive spectrum");
    (q, g, k)
}

/// CR run on `cr_system(seed)` stopped at the numerical grade, with the
/// property report against the true spectrum.
pub fn cr_system_report(seed: u64) -> (CrState, CrReport) {
    let (q, g) = cr_system(seed);
    let mut a = q.matrix().clone();
    let grade = numerical_grade(&a, &g).max(1);
    let state = cr_solve(&mut a, &g, 0.0, grade).expect("SPD system");
    let exact = dense_solve(&a, &g);
    let ev = q.eigenvalues();
    let report = verify_cr_properties(&state, ev[0], ev[ev.len() - 1], Some(&exact));
    (state, report)
}

/// Worst margin of `||r_t|| / ||g|| <= 2 ((sqrt(k) - 1) / (sqrt(k) + 1))^t`
/// over a full `d`-step run on `cr_system(seed)`; negative means violated.
pub fn envelope_margin(seed: u64) -> f64 {
    let (q, g) = cr_system(seed);
    let mut a = q.matrix().clone();
    let state = cr_solve(&mut a, &g, 0.0, CR_DIM).expect("SPD system");
    let ev = q.eigenvalues();
    let sk = (ev[ev.len() - 1] / ev[0]).sqrt();
    let q_rate = (sk - 1.0) / (sk + 1.0);
    state
        .rnorm_hist()
        .iter()
        .enumerate()
        .map(|(t, r)| {
            let bound = 2.0 * q_rate.powi(t as i32);
            (bound - r / state.gnorm()) / bound.max(f64::MIN_POSITIVE)
        })
        .fold(f64::INFINITY, f64::min)
}

/// `-H^{-1} g` by Cholesky.
pub fn dense_solve(a: &DMatrix<f64>, g: &[f64]) -> Vec<f64> {
    let chol = a.clone().cholesky().expect("SPD matrix");
    let x = chol.solve(&nalgebra::DVector::from_column_slice(g));
    x.iter().map(|v| -v).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteEntry {
    pub suite: &'static str,
    pub check: String,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for SuiteEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}/{}: {}", self.suite, self.check, self.detail)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SuiteReport {
    pub entries: Vec<SuiteEntry>,
}

impl SuiteReport {
    pub fn all_passed(&self) -> bool {
        self.entries.iter().all(|e| e.passed)
    }

    fn push(&mut self, suite: &'static str, check: impl Into<String>, passed: bool, detail: String) {
        self.entries.push(SuiteEntry {
            suite,
            check: check.into(),
            passed,
            detail,
        });
    }

    fn push_inequality(&mut self, suite: &'static str, c: &InequalityCheck) {
        let passed = c.passed && c.checked > 0;
        self.push(
            suite,
            c.name,
            passed,
            format!("{} iterations checked, worst margin {:.3e}", c.checked, c.worst_margin),
        );
    }
}

pub const SUITES: [&str; 4] = ["cr_properties", "lemma_bounds", "rate_checks", "all"];

pub fn run_suite(name: &str, policy: ExecPolicy) -> Result<SuiteReport> {
    let mut report = SuiteReport::default();
    match name {
        "cr_properties" => cr_properties(&mut report, policy),
        "lemma_bounds" => lemma_bounds(&mut report, policy),
        "rate_checks" => rate_checks(&mut report, policy)?,
        "all" => {
            cr_properties(&mut report, policy);
            lemma_bounds(&mut report, policy);
            rate_checks(&mut report, policy)?;
        }
        other => {
            return Err(Error::Config(format!(
                "unknown suite {other:?} (expected one of {})",
                SUITES.join(", ")
            )))
        }
    }
    Ok(report)
}

/// Aggregates per-system property reports by check name.
fn tally_cr_reports(report: &mut SuiteReport, suite: &'static str, reports: &[CrReport], names: &[&str]) {
    for name in names {
        let mut failed = Vec::new();
        let mut worst = f64::INFINITY;
        let mut steps = 0;
        for (seed, r) in reports.iter().enumerate() {
            if let Some(c) = r.checks.iter().find(|c| c.name == *name) {
                worst = worst.min(c.worst_margin);
                steps += c.steps_checked;
                if !c.passed {
                    failed.push(seed);
                }
            }
        }
        let shown: Vec<String> = failed.iter().take(5).map(|s| s.to_string()).collect();
        let detail = format!(
            "{}/{} systems failed, {steps} steps checked, worst margin {worst:.3e}{}",
            failed.len(),
            reports.len(),
            if failed.is_empty() {
                String::new()
            } else {
                format!(", first failing seeds [{}]", shown.join(", "))
            }
        );
        report.push(suite, *name, failed.is_empty(), detail);
    }
}

const CR_CHECKS: [&str; 8] = [
    "residual_decreasing",
    "step_norm_increasing",
    "hs_norm_increasing_bounded",
    "gs_decreasing_negative",
    "hp_norm_le_hr_norm",
    "gs_le_minus_shs",
    "s_hr_orthogonal",
    "grade_solution_exact",
];

fn cr_properties(report: &mut SuiteReport, policy: ExecPolicy) {
    let reports: Vec<CrReport> = policy.map(CR_SYSTEMS as usize, |s| cr_system_report(s as u64).1);
    tally_cr_reports(report, "cr_properties", &reports, &CR_CHECKS);

    let margins = policy.map(CR_SYSTEMS as usize, |s| envelope_margin(s as u64));
    let bad = margins.iter().filter(|m| **m < 0.0).count();
    let worst = margins.iter().copied().fold(f64::INFINITY, f64::min);
    report.push(
        "cr_properties",
        "chebyshev_envelope",
        bad == 0,
        format!("{bad}/{CR_SYSTEMS} systems violated, worst margin {worst:.3e}"),
    );

    let grade = policy.map(GRADE_SYSTEMS as usize, |s| {
        let (q, g, k) = few_eigenvalue_system(s as u64);
        let mut a = q.matrix().clone();
        let st = cr_solve(&mut a, &g, 0.0, k).expect("SPD system");
        st.rnorm() <= 1e-8 * st.gnorm()
    });
    let bad = grade.iter().filter(|ok| !**ok).count();
    report.push(
        "cr_properties",
        "grade_termination",
        bad == 0,
        format!("{bad}/{GRADE_SYSTEMS} systems missed ||r|| <= 1e-8 ||g|| within k steps"),
    );
}

fn lemma_bounds(report: &mut SuiteReport, policy: ExecPolicy) {
    let mut h = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&[1.0, 2.0]));
    let st = cr_solve(&mut h, &[1.0, 1.0], 0.0, 2).expect("SPD system");
    let ok = st.alpha_hist().iter().all(|a| (0.5..=1.0).contains(a));
    report.push(
        "lemma_bounds",
        "diag_1_2_alpha",
        ok,
        format!("alphas {:?} within [0.5, 1]", st.alpha_hist()),
    );
    let reports: Vec<CrReport> = policy.map(CR_SYSTEMS as usize, |s| cr_system_report(s as u64).1);
    tally_cr_reports(
        report,
        "lemma_bounds",
        &reports,
        &["alpha_in_inverse_spectrum", "gs_telescoping_bound"],
    );
}

/// Traces of the three rate settings: linear rate on the strongly convex
/// fixture, quadratic phase on the same fixture with `rho = 0.4`, and the
/// no-backtracking run on the over-parameterized fixture.
pub struct RateRuns {
    pub linear: Trace,
    pub linear_info: ProblemInfo,
    pub quadratic: Trace,
    pub quadratic_rho: f64,
    pub no_backtrack: Trace,
    pub no_backtrack_info: ProblemInfo,
}

pub const QUADRATIC_PHASE_RHO: f64 = 0.4;

pub fn rate_runs(policy: ExecPolicy) -> Result<RateRuns> {
    let sc = Fixture::strongly_convex(policy);
    let sc_info = sc.info();
    let linear = fncr_ls(&sc.problem, &sc.x0, &linear_rate_config(sc_info.kappa_est))?;
    let quadratic = fncr_ls(
        &sc.problem,
        &sc.x0,
        &quadratic_phase_config(QUADRATIC_PHASE_RHO, sc.problem.dim()),
    )?;
    let op = Fixture::overparam(policy);
    let op_info = op.info();
    let no_backtrack = fncr_ls(
        &op.problem,
        &op.x0,
        &no_backtracking_config(op_info.lh_est, op.problem.dim()),
    )?;
    Ok(RateRuns {
        linear,
        linear_info: sc_info,
        quadratic,
        quadratic_rho: QUADRATIC_PHASE_RHO,
        no_backtrack,
        no_backtrack_info: op_info,
    })
}

fn rate_checks(report: &mut SuiteReport, policy: ExecPolicy) -> Result<()> {
    let runs = rate_runs(policy)?;
    let cfg = SolverConfig::default();
    report.push_inequality(
        "rate_checks",
        &linear_envelope(&runs.linear, STRONGLY_CONVEX_F_STAR, cfg.rho, 1.05),
    );
    report.push_inequality("rate_checks", &strict_descent(&runs.linear));
    let i = &runs.linear_info;
    report.push_inequality(
        "rate_checks",
        &quadratic_phase(&runs.quadratic, i.mu_est, i.lh_est, runs.quadratic_rho, 1.1, 0.0),
    );
    report.push_inequality("rate_checks", &no_backtracking(&runs.no_backtrack));
    let i = &runs.no_backtrack_info;
    report.push_inequality(
        "rate_checks",
        &regularized_decrease(&runs.no_backtrack, i.lh_est, 1.0 / 6.0, 1.1),
    );
    Ok(())
}
