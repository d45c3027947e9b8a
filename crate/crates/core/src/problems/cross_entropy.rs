//! Ridge-regularized multinomial cross-entropy.
//!
//! `f(x) = sum_i [logsumexp(z_i) - z_{i,b_i}] + mu ||x||^2` with logits
//! `z_ij = <a_i, x_j>` and `x = [x_1; ...; x_C]`, each block of length `d`.
//!
//! Per-sample quantities are computed independently (optionally in
//! parallel); every sum over samples then runs in sample order, so results do
//! not depend on the execution policy.

use std::sync::{Arc, Mutex};

use crate::exec::ExecPolicy;
use crate::oracle::Objective;
use crate::problems::Dataset;

const SAMPLE_CHUNK: usize = 32;
const OUTPUT_CHUNK: usize = 16;

/// Softmax probabilities cached for the last point: `(x, probs)`.
type ProbCache = Mutex<Option<(Vec<f64>, Arc<Vec<f64>>)>>;

pub struct CrossEntropyProblem {
    data: Dataset,
    mu: f64,
    /// Column-major copy of the features (`d x N`), for the sample sums.
    features_t: Vec<f64>,
    policy: ExecPolicy,
    probs: ProbCache,
}

impl CrossEntropyProblem {
    pub fn new(data: Dataset, mu: f64) -> Self {
        assert!(mu >= 0.0 && mu.is_finite(), "ridge coefficient must be >= 0");
        let (n, d) = (data.n_samples(), data.n_features());
        let mut features_t = vec![0.0; n * d];
        for i in 0..n {
            for (f, v) in data.row(i).iter().enumerate() {
                features_t[f * n + i] = *v;
            }
        }
        CrossEntropyProblem {
            data,
            mu,
            features_t,
            policy: ExecPolicy::default(),
            probs: Mutex::new(None),
        }
    }

    pub fn with_policy(mut self, policy: ExecPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    fn logits_into(&self, x: &[f64], i: usize, z: &mut [f64]) {
        let d = self.data.n_features();
        let a = self.data.row(i);
        for (j, zj) in z.iter_mut().enumerate() {
            let xj = &x[j * d..(j + 1) * d];
            let mut acc = 0.0;
            for (af, xf) in a.iter().zip(xj) {
                acc += af * xf;
            }
            *zj = acc;
        }
    }

    /// Applies `per_sample(i, slot)` to every sample, `slot` having `C` entries.
    fn per_sample<F>(&self, per_sample: F) -> Vec<f64>
    where
        F: Fn(usize, &mut [f64]) + Sync + Send,
    {
        let c = self.data.n_classes();
        let mut buf = vec![0.0; self.data.n_samples() * c];
        self.policy.fill_chunks(&mut buf, SAMPLE_CHUNK * c, |chunk, out| {
            for (k, slot) in out.chunks_mut(c).enumerate() {
                per_sample(chunk * SAMPLE_CHUNK + k, slot);
            }
        });
        buf
    }

    /// `out[j*d + f] = sum_i w[i*C + j] * a_if + 2 mu base[j*d + f]`.
    fn accumulate(&self, w: &[f64], base: &[f64], out: &mut [f64]) {
        let (n, d, c) = (
            self.data.n_samples(),
            self.data.n_features(),
            self.data.n_classes(),
        );
        let two_mu = 2.0 * self.mu;
        self.policy.fill_chunks(out, OUTPUT_CHUNK, |chunk, block| {
            for (k, o) in block.iter_mut().enumerate() {
                let idx = chunk * OUTPUT_CHUNK + k;
                let (j, f) = (idx / d, idx % d);
                let col = &self.features_t[f * n..(f + 1) * n];
                let mut acc = 0.0;
                for (i, a) in col.iter().enumerate() {
                    acc += w[i * c + j] * a;
                }
                *o = acc + two_mu * base[idx];
            }
        });
    }

    /// Softmax probabilities at `x`, row-major `N x C`; cached for the most
    /// recent `x`.
    fn probabilities(&self, x: &[f64]) -> Arc<Vec<f64>> {
        if let Some((at, p)) = self.probs.lock().expect("cache poisoned").as_ref() {
            if at.as_slice() == x {
                return Arc::clone(p);
            }
        }
        let p = Arc::new(self.per_sample(|i, slot| {
            self.logits_into(x, i, slot);
            let max = slot.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut total = 0.0;
            for z in slot.iter_mut() {
                *z = (*z - max).exp();
                total += *z;
            }
            for z in slot.iter_mut() {
                *z /= total;
            }
        }));
        *self.probs.lock().expect("cache poisoned") = Some((x.to_vec(), Arc::clone(&p)));
        p
    }
}

impl Objective for CrossEntropyProblem {
    fn dim(&self) -> usize {
        self.data.n_features() * self.data.n_classes()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let labels = self.data.labels();
        let losses = self.per_sample(|i, slot| {
            self.logits_into(x, i, slot);
            let max = slot.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut total = 0.0;
            for z in slot.iter() {
                total += (z - max).exp();
            }
            let loss = max + total.ln() - slot[labels[i]];
            slot.fill(0.0);
            slot[0] = loss;
        });
        let c = self.data.n_classes();
        let mut f = 0.0;
        for i in 0..self.data.n_samples() {
            f += losses[i * c];
        }
        f + self.mu * crate::linalg::norm_sq(x)
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let c = self.data.n_classes();
        let mut w = self.probabilities(x).as_ref().clone();
        for (i, &b) in self.data.labels().iter().enumerate() {
            w[i * c + b] -= 1.0;
        }
        self.accumulate(&w, x, out);
    }

    fn hvp(&self, x: &[f64], v: &[f64], out: &mut [f64]) {
        let p = self.probabilities(x);
        let w = self.per_sample(|i, slot| {
            self.logits_into(v, i, slot);
            let pi = &p[i * slot.len()..(i + 1) * slot.len()];
            let mut mean = 0.0;
            for (pj, uj) in pi.iter().zip(slot.iter()) {
                mean += pj * uj;
            }
            for (pj, uj) in pi.iter().zip(slot.iter_mut()) {
                *uj = pj * (*uj - mean);
            }
        });
        self.accumulate(&w, v, out);
    }

    fn curvature_floor(&self) -> Option<f64> {
        // Shifting every class block by the same vector leaves the softmax
        // unchanged, so the ridge curvature 2 mu is attained exactly.
        (self.mu > 0.0).then_some(2.0 * self.mu)
    }
}
