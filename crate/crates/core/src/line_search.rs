//! Backtracking on the sufficient-reduction condition.

use crate::error::{Error, Result};
use crate::linalg::{add_scaled, dot};
use crate::oracle::Oracle;

pub const J_MAX: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearchParams {
    pub rho: f64,
    pub zeta: f64,
    pub eta0: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineSearchResult {
    /// `eta0 * zeta^j`
    pub eta: f64,
    pub j: usize,
    pub f_new: f64,
    /// The accepted step `eta * s`.
    pub accepted: Vec<f64>,
    pub x_new: Vec<f64>,
    /// Function evaluations actually spent (one per trial, less a reused
    /// first trial).
    pub f_evals: usize,
}

/// Smallest `j >= 0` such that `eta0 zeta^j s` is `rho`-sufficient at `x`.
///
/// `f_first`, when given, is a known value of `f(x + eta0 s)` and replaces
/// the first trial's evaluation.
pub fn backtrack(
    oracle: &mut Oracle<'_>,
    x: &[f64],
    fx: f64,
    g: &[f64],
    s: &[f64],
    params: &LineSearchParams,
    f_first: Option<f64>,
) -> Result<LineSearchResult> {
    let gs = dot(g, s);
    if !(gs < 0.0) {
        return Err(Error::NotDescent { gs });
    }
    let LineSearchParams { rho, zeta, eta0 } = *params;
    let mut x_new = vec![0.0; x.len()];
    let mut f_evals = 0;
    let mut eta = eta0;
    for j in 0..=J_MAX {
        add_scaled(x, eta, s, &mut x_new);
        let f_new = match (j, f_first) {
            (0, Some(f)) => f,
            _ => {
                f_evals += 1;
                match oracle.value(&x_new) {
                    Ok(v) => v,
                    Err(Error::NonFinite { .. }) => f64::INFINITY,
                    Err(e) => return Err(e),
                }
            }
        };
        if fx - f_new >= rho * eta * (-gs) {
            let accepted = s.iter().map(|v| eta * v).collect();
            return Ok(LineSearchResult {
                eta,
                j,
                f_new,
                accepted,
                x_new,
                f_evals,
            });
        }
        eta *= zeta;
    }
    Err(Error::LineSearchFailure { trials: J_MAX + 1 })
}

/// Lower bound on the step size accepted by backtracking for a CR direction
/// of an operator with curvature floor `h`:
/// `min{1, zeta sqrt(3 (1 - 2 rho) / L_H) h^{3/4} / |<g,s>|^{1/4}}`.
pub fn eta_floor(gs: f64, h: f64, lh: f64, rho: f64, zeta: f64) -> f64 {
    if !(lh > 0.0) {
        return 1.0;
    }
    let bound = zeta * (3.0 * (1.0 - 2.0 * rho) / lh).sqrt() * h.powf(0.75) / gs.abs().powf(0.25);
    bound.min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::Objective;
    use crate::problems::QuadraticProblem;

    struct Quartic;

    impl Objective for Quartic {
        fn dim(&self) -> usize {
            1
        }
        fn value(&self, x: &[f64]) -> f64 {
            x[0].powi(4)
        }
        fn gradient(&self, x: &[f64], out: &mut [f64]) {
            out[0] = 4.0 * x[0].powi(3);
        }
        fn hvp(&self, x: &[f64], v: &[f64], out: &mut [f64]) {
            out[0] = 12.0 * x[0] * x[0] * v[0];
        }
    }

    const PARAMS: LineSearchParams = LineSearchParams {
        rho: 1e-4,
        zeta: 0.5,
        eta0: 1.0,
    };

    #[test]
    fn full_step_on_unit_quadratic() {
        let q = QuadraticProblem::diagonal(&[1.0, 1.0], vec![0.0; 2]).unwrap();
        let mut o = Oracle::new(&q);
        let res = backtrack(&mut o, &[1.0, 0.0], 0.5, &[1.0, 0.0], &[-1.0, 0.0], &PARAMS, None).unwrap();
        assert_eq!((res.eta, res.j, res.f_new), (1.0, 0, 0.0));
        assert_eq!(res.x_new, vec![0.0, 0.0]);
        assert_eq!(o.units(), 1);
    }

    #[test]
    fn quartic_overshoot_matches_scan() {
        let mut o = Oracle::new(&Quartic);
        let res = backtrack(&mut o, &[1.0], 1.0, &[4.0], &[-10.0], &PARAMS, None).unwrap();
        let scan = (0..=60)
            .find(|&j| {
                let eta = 0.5f64.powi(j);
                (1.0 - 10.0 * eta).powi(4) <= 1.0 - 1e-4 * eta * 40.0
            })
            .unwrap();
        assert_eq!(res.j, scan as usize);
        assert_eq!(res.eta, 0.5f64.powi(scan));
        assert_eq!(o.counter().f_evals, scan as u64 + 1);
    }

    #[test]
    fn reused_first_trial() {
        let mut o = Oracle::new(&Quartic);
        let res = backtrack(&mut o, &[1.0], 1.0, &[4.0], &[-10.0], &PARAMS, Some(6561.0)).unwrap();
        assert_eq!(res.f_evals, res.j);
        assert_eq!(o.counter().f_evals, res.j as u64);
    }

    #[test]
    fn ascent_is_rejected() {
        let mut o = Oracle::new(&Quartic);
        assert!(matches!(
            backtrack(&mut o, &[1.0], 1.0, &[4.0], &[1.0], &PARAMS, None),
            Err(Error::NotDescent { .. })
        ));
        assert_eq!(o.units(), 0);
    }

    #[test]
    fn failure_after_cap() {
        // inconsistent gradient: claims descent along +x where f increases
        let mut o = Oracle::new(&Quartic);
        let err = backtrack(&mut o, &[1.0], 1.0, &[-4.0], &[1.0], &PARAMS, None).unwrap_err();
        assert!(matches!(err, Error::LineSearchFailure { trials: 61 }));
    }

    #[test]
    fn floor_values() {
        assert_eq!(eta_floor(-1.0, 1.0, 0.0, 0.25, 0.5), 1.0);
        assert!((eta_floor(-1.0, 1.0, 1.5, 0.25, 0.5) - 0.5).abs() < 1e-15);
        assert_eq!(eta_floor(-1.0, 1.0, 1e-12, 0.25, 0.5), 1.0);
    }
}
