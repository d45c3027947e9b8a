use std::fmt;

use crate::error::Error;
use crate::inner::DirectionType;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Converged,
    BudgetExhausted,
    MaxIterations,
    Failed,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Converged => "Converged",
            Status::BudgetExhausted => "BudgetExhausted",
            Status::MaxIterations => "MaxIterations",
            Status::Failed => "Failed",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One outer iteration, describing the iterate `x_k` reached by step `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub k: usize,
    pub f: f64,
    pub gnorm: f64,
    pub delta: Option<f64>,
    pub oracle_units: u64,
    pub wall_ns: u64,
    /// `None` for solvers without typed directions.
    pub dtype: Option<DirectionType>,
    pub eta: f64,
    pub inner_t: usize,
    pub ls_backtracks: usize,
}

/// Per-step quantities kept for diagnostics but not serialized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    /// `<g_k, s_k>` for the unscaled direction.
    pub gs: f64,
    /// Identity shift of the operator used at `x_k`.
    pub shift: f64,
    /// Line-search function evaluations.
    pub ls_f_evals: usize,
    /// Inner sufficiency checks.
    pub inner_checks: usize,
    pub inner_t_returned: usize,
}

#[derive(Debug)]
pub struct Trace {
    pub f0: f64,
    pub gnorm0: f64,
    /// Units spent evaluating `f(x_0)` and `g(x_0)`.
    pub units0: u64,
    pub records: Vec<TraceRecord>,
    pub steps: Vec<StepInfo>,
    pub status: Status,
    pub error: Option<Error>,
    pub x: Vec<f64>,
}

impl Trace {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    pub fn final_f(&self) -> f64 {
        self.records.last().map_or(self.f0, |r| r.f)
    }

    pub fn final_gnorm(&self) -> f64 {
        self.records.last().map_or(self.gnorm0, |r| r.gnorm)
    }

    pub fn final_units(&self) -> u64 {
        self.records.last().map_or(self.units0, |r| r.oracle_units)
    }

    pub fn ins_count(&self) -> usize {
        self.records
            .iter()
            .filter(|r| r.dtype == Some(DirectionType::Ins))
            .count()
    }

    /// `f` values starting with `f(x_0)`.
    pub fn f_series(&self) -> Vec<f64> {
        std::iter::once(self.f0).chain(self.records.iter().map(|r| r.f)).collect()
    }

    /// Gradient norms starting with `||g(x_0)||`.
    pub fn gnorm_series(&self) -> Vec<f64> {
        std::iter::once(self.gnorm0)
            .chain(self.records.iter().map(|r| r.gnorm))
            .collect()
    }

    /// Fills `delta = f - f_star` on every record.
    pub fn set_f_star(&mut self, f_star: Option<f64>) {
        for r in &mut self.records {
            r.delta = f_star.map(|fs| r.f - fs);
        }
    }

    /// Units spent on the first gradient reaching `||g|| <= milestone`.
    pub fn units_to_reach(&self, milestone: f64) -> Option<u64> {
        if self.gnorm0 <= milestone {
            return Some(self.units0);
        }
        self.records
            .iter()
            .find(|r| r.gnorm <= milestone)
            .map(|r| r.oracle_units)
    }

    pub fn summary_line(&self) -> String {
        let mut line = format!(
            "status={} f={:.17e} gnorm={:.17e} units={} iterations={} ins={}",
            self.status,
            self.final_f(),
            self.final_gnorm(),
            self.final_units(),
            self.iterations(),
            self.ins_count()
        );
        if let Some(e) = &self.error {
            line.push_str(&format!(" error=\"{e}\""));
        }
        line
    }
}
