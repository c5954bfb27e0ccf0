//! Direct collocation of the free-final-time problem: time is normalized to
//! s ∈ [0,1] so the horizon T becomes an ordinary decision variable, states
//! and controls live at N+1 nodes, and the dynamics enter as trapezoidal
//! defect equalities.

use nalgebra::DMatrix;

use super::{OcProblem, OcpError};
use crate::dynamics::{
    aba_forward_dynamics, dynamics_jacobian, dynamics_jacobian_fd, inverse_dynamics,
};

/// Which derivative path feeds the solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradMode {
    Dual,
    FiniteDiff,
}

/// One full evaluation of the transcription at a decision vector.
pub(crate) struct Eval {
    pub cost: f64,
    pub c: Vec<f64>,
    pub node_f: Vec<Vec<f64>>,
    pub node_jac: Option<Vec<DMatrix<f64>>>,
}

pub struct Transcription {
    problem: OcProblem,
    n: usize,
    intervals: usize,
    dim: usize,
    n_eq: usize,
    lb: Vec<f64>,
    ub: Vec<f64>,
}

impl Transcription {
    pub(crate) fn new(problem: OcProblem) -> Transcription {
        let n = problem.vkc.nq();
        let intervals = problem.intervals;
        let dim = (intervals + 1) * 3 * n + 1;
        let n_eq = 2 * n * intervals + 2 * n;
        let mut lb = vec![f64::NEG_INFINITY; dim];
        let mut ub = vec![f64::INFINITY; dim];
        for k in 0..=intervals {
            for i in 0..n {
                lb[k * 3 * n + i] = problem.q_lb[i];
                ub[k * 3 * n + i] = problem.q_ub[i];
                lb[k * 3 * n + n + i] = problem.qd_lb[i];
                ub[k * 3 * n + n + i] = problem.qd_ub[i];
                lb[k * 3 * n + 2 * n + i] = problem.u_lb[i];
                ub[k * 3 * n + 2 * n + i] = problem.u_ub[i];
            }
        }
        // The start state is enforced by pinning node 0.
        for i in 0..n {
            lb[i] = problem.q_init[i];
            ub[i] = problem.q_init[i];
            lb[n + i] = problem.qd_init[i];
            ub[n + i] = problem.qd_init[i];
        }
        lb[dim - 1] = problem.t_bounds.0;
        ub[dim - 1] = problem.t_bounds.1;
        Transcription {
            problem,
            n,
            intervals,
            dim,
            n_eq,
            lb,
            ub,
        }
    }

    pub fn problem(&self) -> &OcProblem {
        &self.problem
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_eq(&self) -> usize {
        self.n_eq
    }

    pub fn bounds(&self) -> (&[f64], &[f64]) {
        (&self.lb, &self.ub)
    }

    fn q_off(&self, k: usize) -> usize {
        k * 3 * self.n
    }

    fn qd_off(&self, k: usize) -> usize {
        k * 3 * self.n + self.n
    }

    fn u_off(&self, k: usize) -> usize {
        k * 3 * self.n + 2 * self.n
    }

    fn t_idx(&self) -> usize {
        self.dim - 1
    }

    /// Linear interpolation in q, ramped q̇, gravity-compensation u, and a
    /// mid-range horizon, all clamped into bounds.
    pub fn initial_guess(&self) -> Vec<f64> {
        let n = self.n;
        let p = &self.problem;
        let mut z = vec![0.0; self.dim];
        for k in 0..=self.intervals {
            let a = k as f64 / self.intervals as f64;
            let q: Vec<f64> = (0..n)
                .map(|i| p.q_init[i] + a * (p.q_goal[i] - p.q_init[i]))
                .collect();
            let u = inverse_dynamics(&p.vkc.chain, &q, &vec![0.0; n], &vec![0.0; n]);
            for i in 0..n {
                z[self.q_off(k) + i] = q[i];
                z[self.qd_off(k) + i] = p.qd_init[i] + a * (p.qd_goal[i] - p.qd_init[i]);
                z[self.u_off(k) + i] = u[i];
            }
        }
        z[self.t_idx()] = p.t_bounds.1 / 2.0;
        for i in 0..self.dim {
            z[i] = z[i].clamp(self.lb[i], self.ub[i]);
        }
        z
    }

    /// Running cost (velocity + effort, trapezoidal in physical time) plus
    /// the horizon itself.
    pub fn cost(&self, z: &[f64]) -> f64 {
        let t = z[self.t_idx()];
        let (velocity, effort) = self.running_sums(z);
        let h = 1.0 / self.intervals as f64;
        t * h * velocity + t * h * effort + t
    }

    /// Weighted node sums Σ w_k q̇ᵀWq̇ and Σ w_k uᵀWu (trapezoid weights).
    fn running_sums(&self, z: &[f64]) -> (f64, f64) {
        let n = self.n;
        let p = &self.problem;
        let mut velocity = 0.0;
        let mut effort = 0.0;
        for k in 0..=self.intervals {
            let w = if k == 0 || k == self.intervals { 0.5 } else { 1.0 };
            for i in 0..n {
                let qd = z[self.qd_off(k) + i];
                let u = z[self.u_off(k) + i];
                velocity += w * p.weights.w_qd[i] * qd * qd;
                effort += w * p.weights.w_u[i] * u * u;
            }
        }
        (velocity, effort)
    }

    pub fn cost_grad(&self, z: &[f64]) -> Vec<f64> {
        let n = self.n;
        let p = &self.problem;
        let t = z[self.t_idx()];
        let h = 1.0 / self.intervals as f64;
        let mut g = vec![0.0; self.dim];
        for k in 0..=self.intervals {
            let w = if k == 0 || k == self.intervals { 0.5 } else { 1.0 };
            for i in 0..n {
                let qd = z[self.qd_off(k) + i];
                let u = z[self.u_off(k) + i];
                g[self.qd_off(k) + i] = 2.0 * t * h * w * p.weights.w_qd[i] * qd;
                g[self.u_off(k) + i] = 2.0 * t * h * w * p.weights.w_u[i] * u;
            }
        }
        let (velocity, effort) = self.running_sums(z);
        g[self.t_idx()] = h * (velocity + effort) + 1.0;
        g
    }

    /// Equality constraints: 2n trapezoidal defects per interval, then the
    /// terminal state residuals.
    pub fn constraints(&self, z: &[f64]) -> Result<Vec<f64>, OcpError> {
        Ok(self.eval(z, false)?.c)
    }

    pub(crate) fn eval(&self, z: &[f64], with_jac: bool) -> Result<Eval, OcpError> {
        self.eval_mode(z, with_jac, GradMode::Dual)
    }

    pub(crate) fn eval_mode(
        &self,
        z: &[f64],
        with_jac: bool,
        mode: GradMode,
    ) -> Result<Eval, OcpError> {
        let n = self.n;
        let p = &self.problem;
        let t = z[self.t_idx()];
        let h = 1.0 / self.intervals as f64;
        let mut node_f = Vec::with_capacity(self.intervals + 1);
        let mut node_jac = if with_jac {
            Some(Vec::with_capacity(self.intervals + 1))
        } else {
            None
        };
        for k in 0..=self.intervals {
            let q = &z[self.q_off(k)..self.q_off(k) + n];
            let qd = &z[self.qd_off(k)..self.qd_off(k) + n];
            let u = &z[self.u_off(k)..self.u_off(k) + n];
            if let Some(jacs) = node_jac.as_mut() {
                let (f, jac) = match mode {
                    GradMode::Dual => dynamics_jacobian(&p.vkc.chain, q, qd, u)?,
                    GradMode::FiniteDiff => dynamics_jacobian_fd(&p.vkc.chain, q, qd, u)?,
                };
                node_f.push(f);
                jacs.push(jac);
            } else {
                node_f.push(aba_forward_dynamics(&p.vkc.chain, q, qd, u)?);
            }
        }
        let mut c = vec![0.0; self.n_eq];
        for k in 0..self.intervals {
            let s = t * h / 2.0;
            for i in 0..n {
                c[2 * n * k + i] = z[self.q_off(k + 1) + i] - z[self.q_off(k) + i]
                    - s * (z[self.qd_off(k) + i] + z[self.qd_off(k + 1) + i]);
                c[2 * n * k + n + i] = z[self.qd_off(k + 1) + i] - z[self.qd_off(k) + i]
                    - s * (node_f[k][i] + node_f[k + 1][i]);
            }
        }
        let base = 2 * n * self.intervals;
        for i in 0..n {
            c[base + i] = z[self.q_off(self.intervals) + i] - p.q_goal[i];
            c[base + n + i] = z[self.qd_off(self.intervals) + i] - p.qd_goal[i];
        }
        Ok(Eval {
            cost: self.cost(z),
            c,
            node_f,
            node_jac,
        })
    }

    /// Product Jᵀy of the constraint Jacobian with a multiplier vector,
    /// assembled from the per-node dynamics Jacobians in `ev`.
    pub(crate) fn jac_tvec(&self, z: &[f64], ev: &Eval, y: &[f64]) -> Vec<f64> {
        let n = self.n;
        let t = z[self.t_idx()];
        let h = 1.0 / self.intervals as f64;
        let jacs = ev.node_jac.as_ref().expect("jac_tvec needs node Jacobians");
        let mut out = vec![0.0; self.dim];
        for k in 0..self.intervals {
            let s = t * h / 2.0;
            for i in 0..n {
                let y_q = y[2 * n * k + i];
                out[self.q_off(k + 1) + i] += y_q;
                out[self.q_off(k) + i] -= y_q;
                out[self.qd_off(k) + i] -= s * y_q;
                out[self.qd_off(k + 1) + i] -= s * y_q;
                out[self.t_idx()] -= (h / 2.0)
                    * (z[self.qd_off(k) + i] + z[self.qd_off(k + 1) + i])
                    * y_q;

                let y_qd = y[2 * n * k + n + i];
                out[self.qd_off(k + 1) + i] += y_qd;
                out[self.qd_off(k) + i] -= y_qd;
                out[self.t_idx()] -= (h / 2.0) * (ev.node_f[k][i] + ev.node_f[k + 1][i]) * y_qd;
                // Chain rule through both flanking dynamics evaluations.
                for (node, jac) in [(k, &jacs[k]), (k + 1, &jacs[k + 1])] {
                    let off = self.q_off(node);
                    for col in 0..3 * n {
                        out[off + col] -= s * jac[(i, col)] * y_qd;
                    }
                }
            }
        }
        let base = 2 * n * self.intervals;
        for i in 0..n {
            out[self.q_off(self.intervals) + i] += y[base + i];
            out[self.qd_off(self.intervals) + i] += y[base + n + i];
        }
        out
    }

    /// Gauss-Newton Hessian of the augmented-Lagrangian merit: the exact
    /// running-cost Hessian plus mu times the sum of constraint-row outer
    /// products. Second derivatives of the dynamics are dropped, so the
    /// matrix is positive semidefinite by construction.
    pub(crate) fn merit_hessian(&self, z: &[f64], ev: &Eval, mu: f64) -> DMatrix<f64> {
        let n = self.n;
        let p = &self.problem;
        let t = z[self.t_idx()];
        let h = 1.0 / self.intervals as f64;
        let jacs = ev
            .node_jac
            .as_ref()
            .expect("merit_hessian needs node Jacobians");
        let mut hm = DMatrix::zeros(self.dim, self.dim);
        let ti = self.t_idx();
        for k in 0..=self.intervals {
            let w = if k == 0 || k == self.intervals { 0.5 } else { 1.0 };
            for i in 0..n {
                let a = self.qd_off(k) + i;
                let b = self.u_off(k) + i;
                hm[(a, a)] += 2.0 * t * h * w * p.weights.w_qd[i];
                hm[(b, b)] += 2.0 * t * h * w * p.weights.w_u[i];
                let ca = 2.0 * h * w * p.weights.w_qd[i] * z[a];
                let cb = 2.0 * h * w * p.weights.w_u[i] * z[b];
                hm[(a, ti)] += ca;
                hm[(ti, a)] += ca;
                hm[(b, ti)] += cb;
                hm[(ti, b)] += cb;
            }
        }
        let rank_one = |hm: &mut DMatrix<f64>, entries: &[(usize, f64)]| {
            for &(a, va) in entries {
                for &(b, vb) in entries {
                    hm[(a, b)] += mu * va * vb;
                }
            }
        };
        let mut entries: Vec<(usize, f64)> = Vec::with_capacity(6 * n + 2);
        for k in 0..self.intervals {
            let s = t * h / 2.0;
            for i in 0..n {
                // Position defect row.
                entries.clear();
                entries.push((self.q_off(k + 1) + i, 1.0));
                entries.push((self.q_off(k) + i, -1.0));
                entries.push((self.qd_off(k) + i, -s));
                entries.push((self.qd_off(k + 1) + i, -s));
                entries.push((
                    ti,
                    -(h / 2.0) * (z[self.qd_off(k) + i] + z[self.qd_off(k + 1) + i]),
                ));
                rank_one(&mut hm, &entries);
                // Velocity defect row: direct terms and both dynamics nodes.
                entries.clear();
                for i2 in 0..n {
                    let delta = if i2 == i { 1.0 } else { 0.0 };
                    entries.push((self.qd_off(k) + i2, -delta - s * jacs[k][(i, n + i2)]));
                    entries.push((
                        self.qd_off(k + 1) + i2,
                        delta - s * jacs[k + 1][(i, n + i2)],
                    ));
                    entries.push((self.q_off(k) + i2, -s * jacs[k][(i, i2)]));
                    entries.push((self.q_off(k + 1) + i2, -s * jacs[k + 1][(i, i2)]));
                    entries.push((self.u_off(k) + i2, -s * jacs[k][(i, 2 * n + i2)]));
                    entries.push((self.u_off(k + 1) + i2, -s * jacs[k + 1][(i, 2 * n + i2)]));
                }
                entries.push((
                    ti,
                    -(h / 2.0) * (ev.node_f[k][i] + ev.node_f[k + 1][i]),
                ));
                rank_one(&mut hm, &entries);
            }
        }
        // Terminal identity rows contribute mu on the last node's state.
        for i in 0..n {
            let a = self.q_off(self.intervals) + i;
            let b = self.qd_off(self.intervals) + i;
            hm[(a, a)] += mu;
            hm[(b, b)] += mu;
        }
        hm
    }

    /// Split a decision vector into node times, states, and controls.
    pub fn unpack(&self, z: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<Vec<f64>>, f64) {
        let n = self.n;
        let t = z[self.t_idx()];
        let h = t / self.intervals as f64;
        let times = (0..=self.intervals).map(|k| k as f64 * h).collect();
        let grab = |off: fn(&Transcription, usize) -> usize| -> Vec<Vec<f64>> {
            (0..=self.intervals)
                .map(|k| z[off(self, k)..off(self, k) + n].to_vec())
                .collect()
        };
        (
            times,
            grab(Transcription::q_off),
            grab(Transcription::qd_off),
            grab(Transcription::u_off),
            t,
        )
    }
}
