//! Curvature estimates used by the convergence-rate diagnostics.

use crate::linalg::{dot, norm, scale};
use crate::oracle::Objective;
use crate::rng::Stream;

pub const POWER_MAX_ITERS: usize = 200;
pub const POWER_REL_TOL: f64 = 1e-6;

const START_SEED: u64 = 0x005e_ed0f_5eed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumEstimate {
    pub mu_est: f64,
    pub lmax_est: f64,
    /// False if either power iteration hit its cap before the relative
    /// eigenvalue change dropped below tolerance.
    pub converged: bool,
}

/// Power iteration on `apply`, returning `(rayleigh quotient, converged)`.
fn power_iteration<F>(dim: usize, mut apply: F) -> (f64, bool)
where
    F: FnMut(&[f64], &mut [f64]),
{
    let mut v = Stream::new(START_SEED).normal_vec(dim);
    let n0 = norm(&v);
    scale(1.0 / n0, &mut v);
    let mut w = vec![0.0; dim];
    let mut lambda = f64::NAN;
    for _ in 0..POWER_MAX_ITERS {
        apply(&v, &mut w);
        let next = dot(&v, &w);
        let wn = norm(&w);
        if wn == 0.0 {
            return (0.0, true);
        }
        let done = (next - lambda).abs() <= POWER_REL_TOL * next.abs();
        lambda = next;
        if done {
            return (lambda, true);
        }
        std::mem::swap(&mut v, &mut w);
        scale(1.0 / wn, &mut v);
    }
    (lambda, false)
}

/// Extreme Hessian eigenvalues at `x`: power iteration on `H` for the
/// largest, then on `lmax I - H` for the smallest.
pub fn estimate_spectrum(problem: &dyn Objective, x: &[f64]) -> SpectrumEstimate {
    let dim = problem.dim();
    let (lmax, ok_max) = power_iteration(dim, |v, out| problem.hvp(x, v, out));
    let (top_shifted, ok_min) = power_iteration(dim, |v, out| {
        problem.hvp(x, v, out);
        for (o, vi) in out.iter_mut().zip(v) {
            *o = lmax * vi - *o;
        }
    });
    // Relative to lmax, shifted results below rounding level mean H = lmax I.
    let top_shifted = if top_shifted.abs() <= 1e-12 * lmax.abs() {
        0.0
    } else {
        top_shifted
    };
    SpectrumEstimate {
        mu_est: lmax - top_shifted,
        lmax_est: lmax,
        converged: ok_max && ok_min,
    }
}

/// Where to sample point pairs for the Hessian-Lipschitz estimate.
#[derive(Debug, Clone)]
pub struct Region {
    pub center: Vec<f64>,
    pub radius: f64,
    pub samples: usize,
    pub seed: u64,
}

const LH_POWER_STEPS: usize = 8;

/// Largest observed `||hvp(x,v) - hvp(y,v)|| / (||x - y|| ||v||)` over
/// sampled pairs.
///
/// Base points are `center + radius * u * w` with `u` uniform and `w` a
/// random unit vector. Even samples move along a random direction, odd ones
/// along the normalized `H(x) xi` so that the data-aligned directions where
/// curvature changes fastest are covered. For each pair the probe `v` is
/// refined by a few power steps on `(H(x) - H(y))^2`.
pub fn estimate_lipschitz_hessian(problem: &dyn Objective, region: &Region) -> f64 {
    let dim = problem.dim();
    assert_eq!(region.center.len(), dim);
    let mut rng = Stream::new(region.seed);
    let mut best = 0.0f64;
    let (mut hx, mut hy) = (vec![0.0; dim], vec![0.0; dim]);
    let mut x = vec![0.0; dim];
    let mut y = vec![0.0; dim];
    for sample in 0..region.samples {
        let mut w = rng.normal_vec(dim);
        let wn = norm(&w);
        scale(1.0 / wn, &mut w);
        let reach = region.radius * rng.uniform();
        for ((xi, c), wi) in x.iter_mut().zip(&region.center).zip(&w) {
            *xi = c + reach * wi;
        }

        let mut dir = rng.normal_vec(dim);
        if sample % 2 == 1 {
            problem.hvp(&x, &dir, &mut hx);
            if norm(&hx) > 0.0 {
                dir.copy_from_slice(&hx);
            }
        }
        let dn = norm(&dir);
        scale(1.0 / dn, &mut dir);
        let step = region.radius.max(1e-3) * 10f64.powf(-3.0 * rng.uniform());
        for ((yi, xi), di) in y.iter_mut().zip(&x).zip(&dir) {
            *yi = xi + step * di;
        }
        let gap = {
            let diff: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
            norm(&diff)
        };
        if gap == 0.0 {
            continue;
        }

        let mut v = rng.normal_vec(dim);
        for _ in 0..LH_POWER_STEPS {
            let vn = norm(&v);
            if vn == 0.0 {
                break;
            }
            scale(1.0 / vn, &mut v);
            problem.hvp(&x, &v, &mut hx);
            problem.hvp(&y, &v, &mut hy);
            for (a, b) in hx.iter_mut().zip(&hy) {
                *a -= b;
            }
            let ratio = norm(&hx) / gap;
            if ratio.is_finite() {
                best = best.max(ratio);
            }
            v.copy_from_slice(&hx);
        }
    }
    best
}

/// Problem constants consumed by the rate diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInfo {
    pub mu_est: f64,
    pub lmax_est: f64,
    pub kappa_est: f64,
    pub lh_est: f64,
    pub f_star_ref: Option<f64>,
    pub spectrum_converged: bool,
}

impl ProblemInfo {
    /// Spectrum at `x0`, Hessian-Lipschitz estimate over `region`. When the
    /// objective reports an exact curvature floor it is used as `mu_est`.
    pub fn estimate(problem: &dyn Objective, x0: &[f64], region: &Region) -> Self {
        let spec = estimate_spectrum(problem, x0);
        let mu_est = problem.curvature_floor().unwrap_or(spec.mu_est);
        ProblemInfo {
            mu_est,
            lmax_est: spec.lmax_est,
            kappa_est: spec.lmax_est / mu_est,
            lh_est: estimate_lipschitz_hessian(problem, region),
            f_star_ref: None,
            spectrum_converged: spec.converged,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{make_synthetic, CrossEntropyProblem, QuadraticProblem};

    #[test]
    fn diag_spectrum() {
        let q = QuadraticProblem::diagonal(&[1.0, 2.0], vec![1.0, 1.0]).unwrap();
        let s = estimate_spectrum(&q, &[0.0, 0.0]);
        assert!((s.mu_est - 1.0).abs() < 1e-4, "{s:?}");
        assert!((s.lmax_est - 2.0).abs() < 1e-4, "{s:?}");
        assert!(s.converged);
    }

    #[test]
    fn identity_spectrum() {
        let q = QuadraticProblem::diagonal(&[1.0; 5], vec![0.0; 5]).unwrap();
        let s = estimate_spectrum(&q, &[0.0; 5]);
        assert_eq!((s.mu_est, s.lmax_est), (1.0, 1.0));
    }

    #[test]
    fn dense_oracle_agrees() {
        let q = QuadraticProblem::with_spectrum(4, &[1.0, 3.0, 3.5, 8.0, 20.0]).unwrap();
        let s = estimate_spectrum(&q, &[0.0; 5]);
        let ev = q.eigenvalues();
        assert!((s.lmax_est - ev[4]).abs() < 1e-4 * ev[4]);
        assert!((s.mu_est - ev[0]).abs() < 1e-3);
    }

    #[test]
    fn quadratic_has_zero_lipschitz() {
        let q = QuadraticProblem::random(1, 10, 100.0).unwrap();
        let region = Region {
            center: vec![0.0; 10],
            radius: 5.0,
            samples: 20,
            seed: 3,
        };
        assert!(estimate_lipschitz_hessian(&q, &region) <= 1e-8);
    }

    #[test]
    fn cross_entropy_lipschitz_positive() {
        let data = make_synthetic(1, 40, 3, 2, 1.0).unwrap();
        let p = CrossEntropyProblem::new(data, 0.1);
        let region = Region {
            center: vec![0.0; 6],
            radius: 2.0,
            samples: 16,
            seed: 7,
        };
        let lh = estimate_lipschitz_hessian(&p, &region);
        assert!(lh > 0.0 && lh.is_finite());
    }
}
