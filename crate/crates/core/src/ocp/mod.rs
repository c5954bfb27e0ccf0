//! Minimum-effort trajectory planning on virtual kinematic chains: contact
//! goals are turned into terminal joint states, then a free-final-time
//! collocation problem is solved with an augmented-Lagrangian method.

mod nlp;
mod transcription;

pub use transcription::{GradMode, Transcription};

use nalgebra::{DMatrix, DVector, Vector3};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::dynamics::{forward_kinematics, geometric_jacobian, DynError};
use crate::goalinfer::GoalSpec;
use crate::vkc::Vkc;

#[derive(Debug, Clone, Error)]
pub enum OcpError {
    #[error(transparent)]
    Dyn(#[from] DynError),
    #[error("IK did not converge: position residual {pos_residual:.3e} m, angle residual {ang_residual:.3e} rad")]
    IkDiverged {
        pos_residual: f64,
        ang_residual: f64,
        q_best: Vec<f64>,
    },
    #[error("tip Jacobian cannot realize the velocity: residual {residual:.3e} m/s")]
    SingularJacobian { residual: f64 },
    #[error("{what}: expected {want}, got {got}")]
    BadDimension {
        what: &'static str,
        want: usize,
        got: usize,
    },
    #[error("bad problem: {0}")]
    BadProblem(String),
}

/// Damped-least-squares IK settings.
#[derive(Debug, Clone)]
pub struct IkConfig {
    /// Position tolerance, m.
    pub pos_tol: f64,
    /// Orientation-angle tolerance, rad.
    pub ang_tol: f64,
    pub max_iters: usize,
    /// Initial Levenberg damping.
    pub damping: f64,
    /// Seed for deterministic restarts after stalls.
    pub seed: u64,
}

impl Default for IkConfig {
    fn default() -> Self {
        Self {
            pos_tol: 1e-4,
            ang_tol: 1e-3,
            max_iters: 500,
            damping: 0.1,
            seed: 0,
        }
    }
}

/// Angle in [0, π] between two directions.
pub fn angle_between(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    let na = a.norm();
    let nb = b.norm();
    if na <= 1e-15 || nb <= 1e-15 {
        return 0.0;
    }
    (a.dot(b) / (na * nb)).clamp(-1.0, 1.0).acos()
}

/// Relative weight of the orientation row against the position rows in the
/// stacked IK residual.
const ANG_ROW_SCALE: f64 = 0.5;
/// Stall window (iterations without measurable progress) before a restart.
const STALL_WINDOW: usize = 30;
/// Scale of the local perturbation used on alternate restarts, rad.
const KICK_SCALE: f64 = 0.5;

/// Solve for a configuration whose functional-basis position hits `p_g` and
/// whose surface normal makes angle `d_tool` with `v_tool`. The orientation
/// constraint enters through its cosine, which stays smooth at zero angle.
pub fn solve_goal_ik(
    vkc: &Vkc,
    goal: &GoalSpec,
    q_init: &[f64],
    cfg: &IkConfig,
) -> Result<Vec<f64>, OcpError> {
    let chain = &vkc.chain;
    let n = chain.nq();
    if q_init.len() != n {
        return Err(OcpError::BadDimension {
            what: "q_init",
            want: n,
            got: q_init.len(),
        });
    }
    let p_g = Vector3::new(goal.p_g[0], goal.p_g[1], goal.p_g[2]);
    let v_tool = Vector3::new(goal.v_tool[0], goal.v_tool[1], goal.v_tool[2]);
    let angle_goal = match goal.d_tool {
        Some(d) if v_tool.norm() > 1e-12 => Some((d, v_tool / v_tool.norm())),
        _ => None,
    };
    let limits = chain.dof_limits();
    let clamp_q = |q: &mut [f64]| {
        for (qi, (lim, _)) in q.iter_mut().zip(&limits) {
            *qi = qi.clamp(lim.q.0, lim.q.1);
        }
    };

    let mut q = q_init.to_vec();
    clamp_q(&mut q);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut damping = cfg.damping;
    let mut best_q = q.clone();
    let mut best_metric = f64::INFINITY;
    let mut best_pos = f64::INFINITY;
    let mut best_ang = f64::INFINITY;
    // Progress within the current basin; reset on every restart so a fresh
    // attempt is judged on its own descent, not against the global best.
    let mut attempt_best = f64::INFINITY;
    let mut stall = 0usize;
    let mut rejects = 0usize;
    let mut restarts = 0usize;

    let residuals = |q: &[f64]| -> Result<(DVector<f64>, f64, f64), OcpError> {
        let fk = forward_kinematics(chain, q)?;
        let p = fk.tip.position;
        let r_pos = p_g - p;
        match &angle_goal {
            Some((d, v_hat)) => {
                let f_z = vkc.functional_normal(q)?;
                let u = f_z.normalize().dot(v_hat).clamp(-1.0, 1.0);
                let theta = u.acos();
                let mut r = DVector::zeros(4);
                r[0] = r_pos[0];
                r[1] = r_pos[1];
                r[2] = r_pos[2];
                r[3] = ANG_ROW_SCALE * (d.cos() - u);
                Ok((r, r_pos.norm(), (theta - d).abs()))
            }
            None => Ok((
                DVector::from_column_slice(&[r_pos[0], r_pos[1], r_pos[2]]),
                r_pos.norm(),
                0.0,
            )),
        }
    };

    let trace = std::env::var("OCP_TRACE").is_ok();
    let mut nu = 2.0;
    for it in 0..cfg.max_iters {
        let (r, err_pos, err_ang) = residuals(&q)?;
        let metric = r.norm_squared();
        if trace {
            eprintln!("ik {it}: pos {err_pos:.3e} ang {err_ang:.3e} metric {metric:.3e} damping {damping:.2e} stall {stall} q {q:?}");
        }
        if metric < best_metric {
            best_metric = metric;
            best_q = q.clone();
            best_pos = err_pos;
            best_ang = err_ang;
        }
        // Meaningful progress shrinks the attempt's residual by at least a
        // relative notch; asymptoting counts as a stall.
        if metric < attempt_best * (1.0 - 1e-2) {
            attempt_best = metric;
            stall = 0;
        } else {
            stall += 1;
        }
        if err_pos <= cfg.pos_tol && err_ang <= cfg.ang_tol {
            return Ok(q);
        }
        // A run of rejected trials means a stationary point of the residual
        // norm; waiting out the stall window would be wasted work.
        if stall >= STALL_WINDOW || rejects >= 5 {
            restarts += 1;
            if restarts % 2 == 1 {
                // Kick: perturb the best configuration seen so far, hunting
                // for an adjacent basin.
                for (qi, bi) in q.iter_mut().zip(&best_q) {
                    *qi = bi + rng.random_range(-KICK_SCALE..KICK_SCALE);
                }
            } else {
                // Full restart from a random in-limits configuration.
                for (qi, (lim, _)) in q.iter_mut().zip(&limits) {
                    let (lo, hi) = lim.q;
                    *qi = if lo.is_finite() && hi.is_finite() {
                        rng.random_range(lo..=hi)
                    } else {
                        rng.random_range(-std::f64::consts::PI..std::f64::consts::PI)
                    };
                }
            }
            clamp_q(&mut q);
            damping = cfg.damping;
            nu = 2.0;
            attempt_best = f64::INFINITY;
            stall = 0;
            rejects = 0;
            continue;
        }

        let jac6 = geometric_jacobian(chain, &q, &chain.tip)?;
        let m = r.len();
        let mut jac = DMatrix::zeros(m, n);
        for col in 0..n {
            for row in 0..3 {
                jac[(row, col)] = jac6[(row, col)];
            }
        }
        if let Some((_, v_hat)) = &angle_goal {
            // d(f_z·v̂)/dq_j = (ω_j × f_z)·v̂ = ω_j·(f_z × v̂). Like the
            // position rows, the row differentiates the CURRENT value, to
            // pair with a target-minus-current residual.
            let f_z = vkc.functional_normal(&q)?.normalize();
            let w = f_z.cross(v_hat);
            for col in 0..n {
                let omega = Vector3::new(jac6[(3, col)], jac6[(4, col)], jac6[(5, col)]);
                jac[(3, col)] = ANG_ROW_SCALE * omega.dot(&w);
            }
        }
        // Damped step Δq = Jᵀ (J Jᵀ + λ² I)⁻¹ r, with λ adapted by the gain
        // ratio (achieved vs. model-predicted decrease); one trial per
        // iteration keeps narrow curved valleys cheap to follow.
        let jjt = &jac * jac.transpose();
        let lhs = &jjt + DMatrix::identity(m, m) * (damping * damping);
        let Some(y) = lhs.lu().solve(&r) else {
            damping = (damping * nu).min(1e6);
            nu *= 2.0;
            rejects += 1;
            continue;
        };
        let dq = jac.transpose() * &y;
        let mut q_try = q.clone();
        for i in 0..n {
            q_try[i] += dq[i];
        }
        clamp_q(&mut q_try);
        let (r_try, _, _) = residuals(&q_try)?;
        let actual = metric - r_try.norm_squared();
        // J Δq = J Jᵀ y = r − λ² y, so the linear model's decrease needs no
        // extra products.
        let jdq = &r - &y * (damping * damping);
        let predicted = metric - (&r - &jdq).norm_squared();
        if actual > 0.0 {
            q = q_try;
            let rho = actual / predicted.max(1e-300);
            let shrink = (1.0 - (2.0 * rho - 1.0).powi(3)).max(1.0 / 3.0);
            damping = (damping * shrink).max(1e-4);
            nu = 2.0;
            rejects = 0;
        } else {
            damping = (damping * nu).min(1e6);
            nu *= 2.0;
            rejects += 1;
        }
    }
    // Report the best configuration's residuals, not the last one visited.
    Err(OcpError::IkDiverged {
        pos_residual: best_pos,
        ang_residual: best_ang,
        q_best: best_q,
    })
}

/// Joint velocities realizing a tool-tip linear velocity at `q_g`, by SVD
/// pseudoinverse of the linear Jacobian block. Errors when the requested
/// velocity is outside the Jacobian's range.
pub fn goal_joint_velocity(
    vkc: &Vkc,
    q_g: &[f64],
    v_tool: &[f64; 3],
) -> Result<Vec<f64>, OcpError> {
    let chain = &vkc.chain;
    let n = chain.nq();
    let jac6 = geometric_jacobian(chain, q_g, &chain.tip)?;
    let jac = jac6.rows(0, 3).into_owned();
    let v = Vector3::new(v_tool[0], v_tool[1], v_tool[2]);
    let svd = jac.clone().svd(true, true);
    let sigma_max = svd.singular_values.iter().copied().fold(0.0f64, f64::max);
    let eps = (1e-12 * sigma_max).max(1e-300);
    let qd = svd
        .solve(&DVector::from_column_slice(v.as_slice()), eps)
        .map_err(|_| OcpError::SingularJacobian { residual: v.norm() })?;
    let residual = (&jac * &qd - v).norm();
    if residual > 1e-9 {
        return Err(OcpError::SingularJacobian { residual });
    }
    Ok((0..n).map(|i| qd[i]).collect())
}

/// Default running-cost weights, shared by every planner so costs compare.
pub const DEFAULT_W_QD: f64 = 0.1;
pub const DEFAULT_W_U: f64 = 1.0;

/// Diagonal running-cost weights.
#[derive(Debug, Clone)]
pub struct OcpWeights {
    pub w_qd: Vec<f64>,
    pub w_u: Vec<f64>,
}

/// A transcribable minimum-effort problem: reach (q_goal, qd_goal) from the
/// start state within box bounds, trading effort and motion against time.
#[derive(Debug, Clone)]
pub struct OcProblem {
    pub vkc: Vkc,
    pub q_init: Vec<f64>,
    pub qd_init: Vec<f64>,
    pub q_goal: Vec<f64>,
    pub qd_goal: Vec<f64>,
    pub weights: OcpWeights,
    pub q_lb: Vec<f64>,
    pub q_ub: Vec<f64>,
    pub qd_lb: Vec<f64>,
    pub qd_ub: Vec<f64>,
    pub u_lb: Vec<f64>,
    pub u_ub: Vec<f64>,
    /// Collocation intervals N (N+1 nodes).
    pub intervals: usize,
    /// Horizon bounds (T_min, T_max), s.
    pub t_bounds: (f64, f64),
}

impl OcProblem {
    /// Defaults: weights W_q̇ = 0.1, W_u = 1, bounds from the chain's joint
    /// limits (unactuated controls pinned to zero), N = 40, T ∈ [0.2, 5] s.
    pub fn new(
        vkc: Vkc,
        q_init: Vec<f64>,
        qd_init: Vec<f64>,
        q_goal: Vec<f64>,
        qd_goal: Vec<f64>,
    ) -> Result<OcProblem, OcpError> {
        let n = vkc.nq();
        for (what, v) in [
            ("q_init", &q_init),
            ("qd_init", &qd_init),
            ("q_goal", &q_goal),
            ("qd_goal", &qd_goal),
        ] {
            if v.len() != n {
                return Err(OcpError::BadDimension {
                    what,
                    want: n,
                    got: v.len(),
                });
            }
        }
        vkc.chain.check_q(&q_init)?;
        let limits = vkc.chain.dof_limits();
        let mut q_lb = Vec::with_capacity(n);
        let mut q_ub = Vec::with_capacity(n);
        let mut qd_lb = Vec::with_capacity(n);
        let mut qd_ub = Vec::with_capacity(n);
        let mut u_lb = Vec::with_capacity(n);
        let mut u_ub = Vec::with_capacity(n);
        for (lim, actuated) in &limits {
            q_lb.push(lim.q.0);
            q_ub.push(lim.q.1);
            qd_lb.push(-lim.qd);
            qd_ub.push(lim.qd);
            if *actuated {
                u_lb.push(-lim.tau);
                u_ub.push(lim.tau);
            } else {
                u_lb.push(0.0);
                u_ub.push(0.0);
            }
        }
        Ok(OcProblem {
            vkc,
            q_init,
            qd_init,
            q_goal,
            qd_goal,
            weights: OcpWeights {
                w_qd: vec![DEFAULT_W_QD; n],
                w_u: vec![DEFAULT_W_U; n],
            },
            q_lb,
            q_ub,
            qd_lb,
            qd_ub,
            u_lb,
            u_ub,
            intervals: 40,
            t_bounds: (0.2, 5.0),
        })
    }

    pub fn transcribe(self) -> Transcription {
        Transcription::new(self)
    }
}

/// Solver stopping rules.
#[derive(Debug, Clone)]
pub struct SolveTolerances {
    /// Max equality-constraint violation for convergence.
    pub feasibility: f64,
    /// Relative cost change between outer iterations for convergence.
    pub cost_rel: f64,
    pub max_outer: usize,
    pub max_inner: usize,
}

impl Default for SolveTolerances {
    fn default() -> Self {
        Self {
            feasibility: 1e-5,
            cost_rel: 1e-7,
            max_outer: 40,
            max_inner: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostBreakdown {
    pub velocity: f64,
    pub effort: f64,
    pub time: f64,
    pub total: f64,
}

#[derive(Debug, Clone)]
pub struct Feasibility {
    pub max_defect: f64,
    pub terminal_q_residual: f64,
    pub terminal_qd_residual: f64,
    pub max_bound_violation: f64,
    pub converged: bool,
    pub outer_iterations: usize,
    pub used_fd_gradients: bool,
}

/// A solved (or best-effort) trajectory with its audit trail.
#[derive(Debug, Clone)]
pub struct TrajectorySolution {
    pub horizon: f64,
    pub times: Vec<f64>,
    pub q: Vec<Vec<f64>>,
    pub qd: Vec<Vec<f64>>,
    pub u: Vec<Vec<f64>>,
    pub cost: CostBreakdown,
    pub feasibility: Feasibility,
    pub valid: bool,
}

/// Trapezoidal cost audit over node arrays; the same quadrature `solve`
/// reports, so recomputation matches to machine precision.
pub fn quadrature_costs(
    qd: &[Vec<f64>],
    u: &[Vec<f64>],
    horizon: f64,
    w_qd: &[f64],
    w_u: &[f64],
) -> CostBreakdown {
    let intervals = qd.len() - 1;
    let h = 1.0 / intervals as f64;
    let mut velocity = 0.0;
    let mut effort = 0.0;
    for k in 0..=intervals {
        let w = if k == 0 || k == intervals { 0.5 } else { 1.0 };
        for i in 0..qd[k].len() {
            velocity += w * w_qd[i] * qd[k][i] * qd[k][i];
            effort += w * w_u[i] * u[k][i] * u[k][i];
        }
    }
    let velocity = horizon * h * velocity;
    let effort = horizon * h * effort;
    CostBreakdown {
        velocity,
        effort,
        time: horizon,
        total: velocity + effort + horizon,
    }
}

/// Recompute a solution's cost under (possibly different) weights.
pub fn trajectory_costs(sol: &TrajectorySolution, w_qd: &[f64], w_u: &[f64]) -> CostBreakdown {
    quadrature_costs(&sol.qd, &sol.u, sol.horizon, w_qd, w_u)
}

/// Solve the transcribed problem. The result is always returned; `valid`
/// records whether it satisfies the constraints to tolerance. `seed` is
/// recorded for reproducibility but the solver itself is deterministic.
pub fn solve(
    t: &Transcription,
    _seed: u64,
    tol: &SolveTolerances,
) -> Result<TrajectorySolution, OcpError> {
    let out = nlp::solve_al(t, tol)?;
    let (times, q, qd, u, horizon) = t.unpack(&out.z);
    let p = t.problem();
    let cost = quadrature_costs(&qd, &u, horizon, &p.weights.w_qd, &p.weights.w_u);
    let c = t.constraints(&out.z)?;
    let n = p.vkc.nq();
    let n_defect = 2 * n * p.intervals;
    let max_defect = c[..n_defect].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let terminal_q_residual = c[n_defect..n_defect + n]
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let terminal_qd_residual = c[n_defect + n..]
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let (lb, ub) = t.bounds();
    let max_bound_violation = out
        .z
        .iter()
        .enumerate()
        .map(|(i, v)| (lb[i] - v).max(v - ub[i]).max(0.0))
        .fold(0.0f64, f64::max);
    let feasibility = Feasibility {
        max_defect,
        terminal_q_residual,
        terminal_qd_residual,
        max_bound_violation,
        converged: out.converged,
        outer_iterations: out.outer_iterations,
        used_fd_gradients: out.grad_mode == GradMode::FiniteDiff,
    };
    let valid = out.converged
        && max_defect <= tol.feasibility
        && terminal_q_residual <= tol.feasibility
        && terminal_qd_residual <= tol.feasibility
        && max_bound_violation <= 1e-8;
    Ok(TrajectorySolution {
        horizon,
        times,
        q,
        qd,
        u,
        cost,
        feasibility,
        valid,
    })
}

#[cfg(test)]
mod tests;
