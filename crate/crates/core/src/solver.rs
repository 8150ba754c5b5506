//! Minimisation of `D(Q‖P|P_X) + μ·I_Q(X;Z)` over test channels with the
//! input marginal pinned to `P_X`.
//!
//! For `μ ≥ −1` the objective equals `−E_Q ln P + (1+μ)·I_Q − H_Q(Z)`, which
//! is convex in `Q_{Z|X}`. The solver is entropic mirror descent on the
//! product of simplices, kept in the log domain:
//!
//! ```text
//! ln Q'(z|x) = (1 − η(1+μ))·ln Q(z|x) + η·ln P(z|x) + ημ·ln Q_Z(z) + c_x
//! ```
//!
//! With `η = 1/(1+μ)` and `μ ≥ 0` this is exactly the alternating
//! minimisation `Q(·|x) ∝ [P(·|x)·Q_Z^μ]^{1/(1+μ)}`; for `μ < 0` the step
//! `η = 1` gives `Q' ∝ P·(Q/Q_Z)^{|μ|}`. Both steps decrease the objective
//! (the objective is smooth relative to the row entropies with constant
//! `max(1, 1+μ)`). Longer steps are tried first and backtracked.

use crate::channel::{ChannelSpec, ConditionalChannel, Distribution};
use crate::error::{invalid, Error, Result};
use crate::numeric::log_sum_exp;

/// Tolerances for the inner convex solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Stop once the per-step objective decrease falls below this...
    pub obj_tol: f64,
    /// ...and the simplex-gradient residual falls below this.
    pub residual_tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            obj_tol: 1e-10,
            residual_tol: 1e-8,
            max_iter: 100_000,
        }
    }
}

/// A minimiser of `D + μ·I` together with its coordinates on the
/// (I, D) plane.
#[derive(Debug, Clone)]
pub struct InnerSolution {
    pub mu: f64,
    pub q: ConditionalChannel,
    pub divergence: f64,
    pub mutual_info: f64,
    /// `divergence + mu * mutual_info`
    pub objective: f64,
    pub iterations: usize,
    pub residual: f64,
}

/// Precomputed data for repeated inner solves on one channel.
#[derive(Debug, Clone)]
pub struct InnerProblem {
    spec: ChannelSpec,
    reduced: ChannelSpec,
    keep: Vec<usize>,
    nx: usize,
    nz: usize,
    weights: Vec<f64>,
    log_weights: Vec<f64>,
    // row-major nx * nz, -inf where P(z|x) = 0 (frozen coordinates)
    log_p: Vec<f64>,
    options: SolverOptions,
}

struct Eval {
    objective: f64,
    divergence: f64,
    mutual_info: f64,
}

impl InnerProblem {
    pub fn new(spec: &ChannelSpec, options: SolverOptions) -> Self {
        let (reduced, keep) = spec.canonical();
        let nx = reduced.wiretap().inputs();
        let nz = reduced.wiretap().outputs();
        let weights = reduced.input_dist().probs().to_vec();
        let log_weights = weights.iter().map(|w| w.ln()).collect();
        let mut log_p = Vec::with_capacity(nx * nz);
        for x in 0..nx {
            for z in 0..nz {
                let p = reduced.wiretap().prob(x, z);
                log_p.push(if p > 0.0 { p.ln() } else { f64::NEG_INFINITY });
            }
        }
        Self {
            spec: spec.clone(),
            reduced,
            keep,
            nx,
            nz,
            weights,
            log_weights,
            log_p,
            options,
        }
    }

    pub fn spec(&self) -> &ChannelSpec {
        &self.spec
    }

    pub fn options(&self) -> &SolverOptions {
        &self.options
    }

    fn log_qz(&self, log_q: &[f64], out: &mut [f64]) {
        let mut buf = vec![0.0; self.nx];
        for (z, slot) in out.iter_mut().enumerate() {
            for x in 0..self.nx {
                buf[x] = self.log_weights[x] + log_q[x * self.nz + z];
            }
            *slot = log_sum_exp(&buf);
        }
    }

    fn evaluate(&self, log_q: &[f64], log_qz: &[f64], mu: f64) -> Eval {
        let mut div = 0.0;
        let mut info = 0.0;
        for x in 0..self.nx {
            let (mut d_row, mut i_row) = (0.0, 0.0);
            for z in 0..self.nz {
                let lq = log_q[x * self.nz + z];
                if lq == f64::NEG_INFINITY {
                    continue;
                }
                let q = lq.exp();
                if q == 0.0 {
                    continue;
                }
                d_row += q * (lq - self.log_p[x * self.nz + z]);
                i_row += q * (lq - log_qz[z]);
            }
            div += self.weights[x] * d_row;
            info += self.weights[x] * i_row;
        }
        let (div, info) = (div.max(0.0), info.max(0.0));
        Eval {
            objective: div + mu * info,
            divergence: div,
            mutual_info: info,
        }
    }

    // Per-row gradient (scaled by 1/P_X(x)) and the weighted residual
    // Σ_x P_X(x) Σ_z Q(z|x)|g − ḡ_x|.
    #[allow(clippy::needless_range_loop)]
    fn gradient(&self, log_q: &[f64], log_qz: &[f64], mu: f64, grad: &mut [f64]) -> f64 {
        let mut residual = 0.0;
        for x in 0..self.nx {
            let mut mean = 0.0;
            for z in 0..self.nz {
                let k = x * self.nz + z;
                if self.log_p[k] == f64::NEG_INFINITY {
                    grad[k] = 0.0;
                    continue;
                }
                let g = (log_q[k] - self.log_p[k]) + mu * (log_q[k] - log_qz[z]);
                grad[k] = g;
                mean += log_q[k].exp() * g;
            }
            let mut dev = 0.0;
            for z in 0..self.nz {
                let k = x * self.nz + z;
                if self.log_p[k] != f64::NEG_INFINITY {
                    dev += log_q[k].exp() * (grad[k] - mean).abs();
                }
            }
            residual += self.weights[x] * dev;
        }
        residual
    }

    fn step(&self, log_q: &[f64], grad: &[f64], eta: f64, out: &mut [f64]) {
        for x in 0..self.nx {
            let row = x * self.nz..(x + 1) * self.nz;
            for k in row.clone() {
                out[k] = if self.log_p[k] == f64::NEG_INFINITY {
                    f64::NEG_INFINITY
                } else {
                    log_q[k] - eta * grad[k]
                };
            }
            let norm = log_sum_exp(&out[row.clone()]);
            for k in row {
                out[k] -= norm;
            }
        }
    }

    /// Minimises `D + μ·I` for any `μ ≥ −1`.
    pub fn solve(&self, mu: f64) -> Result<InnerSolution> {
        if !mu.is_finite() || mu < -1.0 {
            return Err(invalid(format!("mu = {mu} outside [-1, inf)")));
        }
        let opts = self.options;
        let (nx, nz) = (self.nx, self.nz);
        let mut log_q = self.log_p.clone();
        let mut log_qz = vec![0.0; nz];
        self.log_qz(&log_q, &mut log_qz);
        let mut current = self.evaluate(&log_q, &log_qz, mu);

        let eta_safe = if mu >= 0.0 { 1.0 / (1.0 + mu) } else { 1.0 };
        let eta_cap = 1e3 * eta_safe;
        let mut eta = eta_safe;

        let mut grad = vec![0.0; nx * nz];
        let mut trial = vec![0.0; nx * nz];
        let mut trial_qz = vec![0.0; nz];
        let mut residual = self.gradient(&log_q, &log_qz, mu, &mut grad);
        let mut iterations = 0;

        while residual > 0.0 {
            if residual <= opts.residual_tol && iterations == 0 {
                break;
            }
            if iterations >= opts.max_iter {
                return Err(Error::NonConvergence {
                    mu,
                    iterations,
                    objective: current.objective,
                    residual,
                    best: self.rows_of(&log_q),
                });
            }
            iterations += 1;
            let accepted = loop {
                self.step(&log_q, &grad, eta, &mut trial);
                self.log_qz(&trial, &mut trial_qz);
                let cand = self.evaluate(&trial, &trial_qz, mu);
                let bound = current.objective + self.model_gap(&log_q, &trial, &grad, eta);
                let slack = 1e-15 * (1.0 + current.objective.abs());
                if cand.objective <= bound + slack || eta <= eta_safe {
                    break cand;
                }
                eta = (eta * 0.5).max(eta_safe);
            };
            let decrease = current.objective - accepted.objective;
            std::mem::swap(&mut log_q, &mut trial);
            std::mem::swap(&mut log_qz, &mut trial_qz);
            current = accepted;
            residual = self.gradient(&log_q, &log_qz, mu, &mut grad);
            // below the objective's resolution only the safe step is trusted
            eta = if decrease <= 1e-14 * (1.0 + current.objective.abs()) {
                eta_safe
            } else {
                (eta * 2.0).min(eta_cap)
            };
            if decrease.abs() < opts.obj_tol && residual <= opts.residual_tol {
                break;
            }
        }

        let rows = self
            .rows_of(&log_q)
            .into_iter()
            .map(Distribution::from_normalized)
            .collect();
        let reduced_q = ConditionalChannel::new(rows, self.reduced.input_dist().clone())?;
        Ok(InnerSolution {
            mu,
            q: self.spec.expand(&reduced_q, &self.keep),
            divergence: current.divergence,
            mutual_info: current.mutual_info,
            objective: current.objective,
            iterations,
            residual,
        })
    }

    // ⟨∇f, Q' − Q⟩ + KL(Q'‖Q)/η, both P_X-weighted: the descent-lemma model
    // of the step, which upper-bounds the new objective once η is small enough.
    fn model_gap(&self, log_q: &[f64], log_next: &[f64], grad: &[f64], eta: f64) -> f64 {
        let mut lin = 0.0;
        let mut kl = 0.0;
        for x in 0..self.nx {
            let (mut l, mut k) = (0.0, 0.0);
            for z in 0..self.nz {
                let i = x * self.nz + z;
                if self.log_p[i] == f64::NEG_INFINITY {
                    continue;
                }
                let (a, b) = (log_next[i].exp(), log_q[i].exp());
                l += (a - b) * grad[i];
                if a > 0.0 {
                    k += a * (log_next[i] - log_q[i]);
                }
            }
            lin += self.weights[x] * l;
            kl += self.weights[x] * k;
        }
        lin + kl / eta
    }

    fn rows_of(&self, log_q: &[f64]) -> Vec<Vec<f64>> {
        (0..self.nx)
            .map(|x| {
                let row: Vec<f64> = log_q[x * self.nz..(x + 1) * self.nz]
                    .iter()
                    .map(|l| l.exp())
                    .collect();
                let s: f64 = row.iter().sum();
                row.into_iter().map(|v| v / s).collect()
            })
            .collect()
    }

    /// Minimiser of `D` subject to `I_Q(X;Z) = 0`: every row equals
    /// `V(z) ∝ exp(Σ_x P_X(x) ln P(z|x))`. `None` when no output is reachable
    /// from every input.
    pub fn zero_information_channel(&self) -> Option<ConditionalChannel> {
        let terms: Vec<f64> = (0..self.nz)
            .map(|z| {
                (0..self.nx)
                    .map(|x| self.weights[x] * self.log_p[x * self.nz + z])
                    .sum()
            })
            .collect();
        let lse = log_sum_exp(&terms);
        if lse == f64::NEG_INFINITY {
            return None;
        }
        let v = Distribution::from_normalized(terms.iter().map(|t| (t - lse).exp()).collect());
        let reduced =
            ConditionalChannel::new(vec![v; self.nx], self.reduced.input_dist().clone()).ok()?;
        Some(self.spec.expand(&reduced, &self.keep))
    }

    /// `min {D : I_Q(X;Z) = 0}` (all rows equal a common `V`), which is
    /// `−ln Σ_z exp(Σ_x P_X(x) ln P(z|x))` over outputs reachable from every
    /// input; `+inf` when no output is.
    pub fn zero_information_divergence(&self) -> f64 {
        let mut terms = Vec::with_capacity(self.nz);
        for z in 0..self.nz {
            let mut acc = 0.0;
            for x in 0..self.nx {
                acc += self.weights[x] * self.log_p[x * self.nz + z];
            }
            terms.push(acc);
        }
        let lse = log_sum_exp(&terms);
        if lse == f64::NEG_INFINITY {
            f64::INFINITY
        } else {
            (-lse).max(0.0)
        }
    }
}

/// Global minimiser of `D(Q‖P|P_X) + μ·I_Q(X;Z)` for `μ ∈ [−1, 1]`.
pub fn inner_lagrangian_min(
    spec: &ChannelSpec,
    mu: f64,
    options: &SolverOptions,
) -> Result<InnerSolution> {
    if !(-1.0..=1.0).contains(&mu) {
        return Err(invalid(format!("mu = {mu} outside [-1, 1]")));
    }
    InnerProblem::new(spec, *options).solve(mu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{mutual_information, weighted_divergence, Dmc};

    fn bsc_star(p: f64, s: f64) -> f64 {
        let a = p.powf(1.0 / s);
        let b = (1.0 - p).powf(1.0 / s);
        a / (a + b)
    }

    #[test]
    fn mu_zero_returns_true_channel() {
        let spec = ChannelSpec::bsc(0.1).unwrap();
        let sol = inner_lagrangian_min(&spec, 0.0, &SolverOptions::default()).unwrap();
        assert_eq!(sol.divergence, 0.0);
        assert!((sol.mutual_info - spec.mutual_information()).abs() < 1e-14);
        assert!((sol.q.prob(0, 1) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn bsc_minimiser_matches_closed_form() {
        let spec = ChannelSpec::bsc(0.1).unwrap();
        let opts = SolverOptions::default();
        let sol = inner_lagrangian_min(&spec, 1.0, &opts).unwrap();
        let expected = 0.1f64.sqrt() / (0.1f64.sqrt() + 0.9f64.sqrt());
        assert!((expected - 0.25).abs() < 1e-12);
        assert!(
            (sol.q.prob(0, 1) - expected).abs() < 1e-7,
            "{}",
            sol.q.prob(0, 1)
        );
        for &mu in &[-0.9, -0.5, 0.3, 0.8] {
            let sol = inner_lagrangian_min(&spec, mu, &opts).unwrap();
            let eps = bsc_star(0.1, 1.0 + mu);
            assert!(
                (sol.q.prob(0, 1) - eps).abs() < 1e-6,
                "mu {mu}: {} vs {eps}",
                sol.q.prob(0, 1)
            );
        }
    }

    #[test]
    fn mu_minus_one_on_bsc_is_noiseless() {
        let spec = ChannelSpec::bsc(0.1).unwrap();
        let sol = inner_lagrangian_min(&spec, -1.0, &SolverOptions::default()).unwrap();
        assert!(sol.q.prob(0, 1) < 1e-8);
        assert!((sol.objective - ((1.0f64 / 0.9).ln() - 2f64.ln())).abs() < 1e-9);
    }

    #[test]
    fn reported_values_are_consistent() {
        let spec = ChannelSpec::new(
            Distribution::new(vec![0.2, 0.5, 0.3]).unwrap(),
            Dmc::new(vec![
                vec![0.7, 0.2, 0.1],
                vec![0.1, 0.6, 0.3],
                vec![0.25, 0.25, 0.5],
            ])
            .unwrap(),
            None,
        )
        .unwrap();
        for &mu in &[-1.0, -0.4, 0.0, 0.6, 1.0] {
            let sol = inner_lagrangian_min(&spec, mu, &SolverOptions::default()).unwrap();
            let d = weighted_divergence(&sol.q, spec.wiretap()).unwrap();
            let i = mutual_information(&sol.q);
            assert!((d - sol.divergence).abs() < 1e-10);
            assert!((i - sol.mutual_info).abs() < 1e-10);
        }
    }

    #[test]
    fn frozen_zeros_stay_zero() {
        let spec = ChannelSpec::new(
            Distribution::uniform(2),
            Dmc::new(vec![vec![0.8, 0.2, 0.0], vec![0.0, 0.3, 0.7]]).unwrap(),
            None,
        )
        .unwrap();
        for &mu in &[-1.0, -0.3, 0.5, 1.0] {
            let sol = inner_lagrangian_min(&spec, mu, &SolverOptions::default()).unwrap();
            assert_eq!(sol.q.prob(0, 2), 0.0);
            assert_eq!(sol.q.prob(1, 0), 0.0);
            assert!(sol.divergence.is_finite());
        }
    }

    #[test]
    fn rejects_out_of_range_mu() {
        let spec = ChannelSpec::bsc(0.2).unwrap();
        assert!(inner_lagrangian_min(&spec, 1.5, &SolverOptions::default()).is_err());
        assert!(InnerProblem::new(&spec, SolverOptions::default())
            .solve(-1.01)
            .is_err());
        assert!(InnerProblem::new(&spec, SolverOptions::default())
            .solve(5.0)
            .is_ok());
    }

    #[test]
    fn iteration_cap_reports_non_convergence() {
        let spec = ChannelSpec::bsc(0.1).unwrap();
        let opts = SolverOptions {
            max_iter: 1,
            residual_tol: 0.0,
            obj_tol: 0.0,
        };
        match inner_lagrangian_min(&spec, -0.5, &opts) {
            Err(Error::NonConvergence { best, .. }) => assert_eq!(best.len(), 2),
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn zero_information_divergence_examples() {
        let p = InnerProblem::new(&ChannelSpec::bsc(0.1).unwrap(), SolverOptions::default());
        // V = (1/2, 1/2): D = ln(1/2) - ½ln(0.09)
        let expected = -(2.0 * (0.09f64).sqrt()).ln();
        assert!((p.zero_information_divergence() - expected).abs() < 1e-14);
        let id = ChannelSpec::new(Distribution::uniform(2), Dmc::identity(2), None).unwrap();
        let p = InnerProblem::new(&id, SolverOptions::default());
        assert_eq!(p.zero_information_divergence(), f64::INFINITY);
    }
}
