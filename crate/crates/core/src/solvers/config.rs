use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Inner sufficiency parameter, in (0, 1/2).
    pub rho: f64,
    /// Relative residual tolerance, in [0, 1).
    pub omega: f64,
    /// Iterations before the first sufficiency check.
    pub t_min: usize,
    pub t_max: usize,
    pub zeta: f64,
    pub eta0: f64,
    /// Gradient regularization weight; 0 disables it.
    pub sigma: f64,
    /// `T_k = ceil(theta / min(1, sqrt(||g_k||)))` when positive.
    pub theta: f64,
    /// `omega_k = min(||g_k||, omega_cap)` and
    /// `T_k = ceil(sqrt(kappa) ln(2 / ||g_k||) / 4)` with this `kappa` when set.
    pub kappa_schedule: Option<f64>,
    pub grad_tol: f64,
    pub oracle_budget: u64,
    pub max_outer: usize,
    pub check_window: usize,
    /// Line-search sufficiency parameter, in (0, 1/2).
    pub ls_rho: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            rho: 0.01,
            omega: 0.0,
            t_min: 5,
            t_max: 1000,
            zeta: 0.5,
            eta0: 1.0,
            sigma: 0.0,
            theta: 0.0,
            kappa_schedule: None,
            grad_tol: 1e-6,
            oracle_budget: 100_000,
            max_outer: 100_000,
            check_window: 20,
            ls_rho: 1e-4,
        }
    }
}

fn range_err(name: &str, value: impl std::fmt::Display, expect: &str) -> Error {
    Error::Config(format!("{name} = {value} is out of range: expected {expect}"))
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho < 0.5) {
            return Err(range_err("rho", self.rho, "0 < rho < 1/2"));
        }
        if !(self.ls_rho > 0.0 && self.ls_rho < 0.5) {
            return Err(range_err("ls_rho", self.ls_rho, "0 < ls_rho < 1/2"));
        }
        if !(self.omega >= 0.0 && self.omega < 1.0) {
            return Err(range_err("omega", self.omega, "0 <= omega < 1"));
        }
        if self.t_min < 1 {
            return Err(range_err("T", self.t_min, "T >= 1"));
        }
        if self.t_max < self.t_min {
            return Err(range_err("T_max", self.t_max, format!("T_max >= T = {}", self.t_min).as_str()));
        }
        if !(self.zeta > 0.0 && self.zeta < 1.0) {
            return Err(range_err("zeta", self.zeta, "0 < zeta < 1"));
        }
        if !(self.eta0 > 0.0 && self.eta0.is_finite()) {
            return Err(range_err("eta0", self.eta0, "eta0 > 0"));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(range_err("sigma", self.sigma, "sigma >= 0"));
        }
        if !(self.theta >= 0.0 && self.theta.is_finite()) {
            return Err(range_err("theta", self.theta, "theta >= 0"));
        }
        if let Some(k) = self.kappa_schedule {
            if !(k >= 1.0 && k.is_finite()) {
                return Err(range_err("kappa_schedule", k, "kappa >= 1"));
            }
        }
        if !(self.grad_tol >= 0.0) {
            return Err(range_err("grad_tol", self.grad_tol, "grad_tol >= 0"));
        }
        if self.check_window < 1 {
            return Err(range_err("check_window", self.check_window, "check_window >= 1"));
        }
        Ok(())
    }

    /// Inner iteration bounds for an iterate with gradient norm `gnorm` in
    /// dimension `dim`: `(omega_k, T_k, T_max)`.
    pub fn inner_schedule(&self, gnorm: f64, dim: usize) -> (f64, usize, usize) {
        let t_max = self.t_max.min(dim).max(1);
        let clamp = |t: f64| -> usize {
            if t.is_finite() {
                (t.max(1.0) as usize).min(t_max)
            } else {
                t_max
            }
        };
        if let Some(kappa) = self.kappa_schedule {
            let omega = gnorm.min(0.99);
            let t = (kappa.sqrt() * (2.0 / gnorm).ln() / 4.0).ceil();
            return (omega, clamp(t), t_max);
        }
        let t = if self.theta > 0.0 {
            clamp((self.theta / gnorm.sqrt().min(1.0)).ceil())
        } else {
            self.t_min.min(t_max)
        };
        (self.omega, t, t_max)
    }
}
