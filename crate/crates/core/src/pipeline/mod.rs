//! End-to-end orchestration: enumerate and rank grasp/contact strategies,
//! plan by mimicking a demonstrated path, plan the gravity-aligned kinematic
//! baseline, and score executions in the effect simulator.

use std::sync::mpsc;

use nalgebra::Vector3;
use thiserror::Error;

use crate::dynamics::{
    forward_kinematics, geometric_jacobian, inverse_dynamics, DynError, KinematicChain,
};
use crate::effectsim::{
    build_body, classify_effect, simulate, EffectClass, PropertyLog, Scenario, SimError,
    ToolProfile, ToolState,
};
use crate::goalinfer::{GoalAssembly, GoalSpec};
use crate::ocp::{
    quadrature_costs, solve, solve_goal_ik, goal_joint_velocity, IkConfig, OcProblem, OcpError,
    SolveTolerances, TrajectorySolution, CostBreakdown, Feasibility, DEFAULT_W_QD, DEFAULT_W_U,
};
use crate::vkc::{construct_vkc, ToolDescriptor, VirtualJoint, Vkc, VkcError};

pub mod demos;
pub mod samples;

/// Nominal functional-basis descent speed of the kinematic baseline, m/s.
pub const BASELINE_SPEED: f64 = 0.1;
/// Straight-line approach distance of the kinematic baseline, m.
pub const BASELINE_APPROACH: f64 = 0.05;
/// Per-seed body parameter randomness applied during execution scoring.
pub const EVAL_JITTER: f64 = 0.10;

#[derive(Debug, Clone, Error)]
pub enum PipelineError {
    #[error("no valid strategy among {} basis pairs; first diagnostic: {}",
        attempts.len(),
        attempts.first().map(|s| s.diagnostics.as_str()).unwrap_or("no pairs"))]
    NoValidStrategy { attempts: Vec<Strategy> },
    #[error("bad task: {0}")]
    BadTask(String),
    #[error("bad demonstration: {0}")]
    BadDemo(String),
    #[error(transparent)]
    Vkc(#[from] VkcError),
    #[error(transparent)]
    Ocp(#[from] OcpError),
    #[error(transparent)]
    Dyn(#[from] DynError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// One grasp/contact choice with its planned motion.
#[derive(Debug, Clone)]
pub struct Strategy {
    pub affordance: String,
    pub functional: String,
    /// Planned motion; absent when planning failed before a trajectory
    /// existed (chain construction or goal IK).
    pub solution: Option<TrajectorySolution>,
    /// Chain the solution is expressed in; used to recover world paths.
    pub vkc: Option<Vkc>,
    pub valid: bool,
    /// Residual diagnostics; empty for valid strategies.
    pub diagnostics: String,
}

impl Strategy {
    pub fn cost(&self) -> Option<&CostBreakdown> {
        self.solution.as_ref().map(|s| &s.cost)
    }

    /// Sort key: finite total cost for valid strategies, +inf otherwise.
    pub fn total_cost(&self) -> f64 {
        if self.valid {
            self.cost().map(|c| c.total).unwrap_or(f64::INFINITY)
        } else {
            f64::INFINITY
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskKind {
    Crack,
    Cut,
}

/// What the execution should do to the body.
#[derive(Debug, Clone, Copy)]
pub enum DesiredEffect {
    /// Target fragment count.
    Pieces(f64),
    /// Land inside the scenario's cracked classification band.
    CrackedBand,
}

#[derive(Debug, Clone)]
pub struct TaskDefinition {
    pub kind: TaskKind,
    pub desired: DesiredEffect,
    /// Contact position of the functional basis, world frame, m.
    pub p_g: [f64; 3],
    pub scenario: Scenario,
    /// Which Action-level properties the goal must carry.
    pub assembly: GoalAssembly,
    /// Capsule axis direction in the functional-basis frame.
    pub capsule_axis_local: [f64; 3],
    /// Capsule center offset from the basis origin, basis frame, m.
    pub capsule_center_local: [f64; 3],
}

impl TaskDefinition {
    /// Strike task: land the fragment count in the cracked band.
    pub fn crack(scenario: Scenario, p_g: [f64; 3]) -> TaskDefinition {
        let r = scenario.shape.radius;
        TaskDefinition {
            kind: TaskKind::Crack,
            desired: DesiredEffect::CrackedBand,
            p_g,
            scenario,
            assembly: GoalAssembly::crack_default(),
            // Face basis sits mid-face; the capsule center is one contact
            // radius behind the surface.
            capsule_axis_local: [1.0, 0.0, 0.0],
            capsule_center_local: [0.0, 0.0, r],
        }
    }

    /// Cut task: split the body in two at mid-body.
    pub fn cut(scenario: Scenario, p_g: [f64; 3]) -> TaskDefinition {
        let (hl, r) = (scenario.shape.half_length, scenario.shape.radius);
        TaskDefinition {
            kind: TaskKind::Cut,
            desired: DesiredEffect::Pieces(2.0),
            p_g,
            scenario,
            assembly: GoalAssembly::cut_default(),
            // Edge basis sits on the cutting edge; the blade extends from
            // there toward the spine.
            capsule_axis_local: [0.0, 0.0, 1.0],
            capsule_center_local: [0.0, 0.0, hl + r],
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.kind == TaskKind::Cut && self.assembly.orientation_symbol.is_none() {
            return Err(PipelineError::BadTask(
                "cut tasks must constrain tool orientation".into(),
            ));
        }
        Ok(())
    }

    /// Numeric effect target handed to goal inference.
    pub fn target_effect(&self) -> f64 {
        match self.desired {
            DesiredEffect::Pieces(n) => n,
            DesiredEffect::CrackedBand => {
                let (lo, hi) = self.scenario.thresholds;
                (lo + hi) as f64 / 2.0
            }
        }
    }
}

/// Pair seed depends on the labels, not the enumeration order, so subset and
/// superset runs plan identical pairs identically.
fn pair_seed(seed: u64, affordance: &str, functional: &str) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for b in affordance.bytes().chain([0]).chain(functional.bytes()) {
        h = (h ^ b as u64).wrapping_mul(0x0100_0000_01b3);
    }
    seed ^ h
}

/// Plan one basis pair end to end; failures fold into the validity flag.
fn plan_pair(
    robot: &KinematicChain,
    tool: &ToolDescriptor,
    affordance: &str,
    functional: &str,
    goal: &GoalSpec,
    seed: u64,
) -> Result<Strategy, PipelineError> {
    let invalid = |vkc: Option<Vkc>, diagnostics: String| Strategy {
        affordance: affordance.to_string(),
        functional: functional.to_string(),
        solution: None,
        vkc,
        valid: false,
        diagnostics,
    };

    let vkc = match construct_vkc(robot, tool, affordance, functional, &VirtualJoint::Fixed) {
        Ok(v) => v,
        Err(e) => return Ok(invalid(None, format!("chain construction failed: {e}"))),
    };
    let q_init = vkc.chain.neutral_q();
    let qd_init = vec![0.0; vkc.nq()];
    let cfg = IkConfig { seed, ..IkConfig::default() };
    let q_goal = match solve_goal_ik(&vkc, goal, &q_init, &cfg) {
        Ok(q) => q,
        Err(e) => return Ok(invalid(Some(vkc), format!("goal IK failed: {e}"))),
    };
    let qd_goal = match goal_joint_velocity(&vkc, &q_goal, &goal.v_tool) {
        Ok(qd) => qd,
        Err(e) => return Ok(invalid(Some(vkc), format!("goal velocity mapping failed: {e}"))),
    };
    for (i, (lim, _)) in vkc.chain.dof_limits().iter().enumerate() {
        if qd_goal[i].abs() > lim.qd {
            return Ok(invalid(
                Some(vkc.clone()),
                format!(
                    "goal joint velocity {:.3} rad/s exceeds limit {:.3} at `{}`",
                    qd_goal[i],
                    lim.qd,
                    vkc.chain.joint_name(i)
                ),
            ));
        }
    }

    let problem = OcProblem::new(vkc.clone(), q_init, qd_init, q_goal, qd_goal)?;
    let transcription = problem.transcribe();
    let sol = solve(&transcription, seed, &SolveTolerances::default())?;
    let diagnostics = if sol.valid {
        String::new()
    } else {
        let f = &sol.feasibility;
        format!(
            "solver residuals: defect {:.3e}, terminal q {:.3e}, terminal qd {:.3e}",
            f.max_defect, f.terminal_q_residual, f.terminal_qd_residual
        )
    };
    Ok(Strategy {
        affordance: affordance.to_string(),
        functional: functional.to_string(),
        valid: sol.valid,
        solution: Some(sol),
        vkc: Some(vkc),
        diagnostics,
    })
}

/// Plan every candidate (affordance, functional) pair and order them by
/// total cost, ties broken by labels, invalid strategies last. When the tool
/// offers more than `n_samples` pairs, a seeded subset is drawn without
/// replacement.
pub fn rank_strategies(
    robot: &KinematicChain,
    tool: &ToolDescriptor,
    task: &TaskDefinition,
    goal: &GoalSpec,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<Strategy>, PipelineError> {
    task.validate()?;
    tool.validate()?;
    if task.assembly.orientation_symbol.is_some() && goal.d_tool.is_none() {
        return Err(PipelineError::BadTask(
            "task requires an orientation but the goal carries none".into(),
        ));
    }
    let mut pairs = tool.valid_pairs();
    if pairs.is_empty() {
        return Err(PipelineError::NoValidStrategy { attempts: Vec::new() });
    }
    if pairs.len() > n_samples {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        for i in 0..n_samples {
            let j = rng.random_range(i..pairs.len());
            pairs.swap(i, j);
        }
        pairs.truncate(n_samples);
    }

    let mut strategies = run_indexed(pairs.len(), |i| {
        let (a, f) = &pairs[i];
        plan_pair(robot, tool, a, f, goal, pair_seed(seed, a, f))
    })?;

    strategies.sort_by(|x, y| {
        x.total_cost()
            .partial_cmp(&y.total_cost())
            .unwrap()
            .then_with(|| x.affordance.cmp(&y.affordance))
            .then_with(|| x.functional.cmp(&y.functional))
    });
    if !strategies.iter().any(|s| s.valid) {
        return Err(PipelineError::NoValidStrategy { attempts: strategies });
    }
    Ok(strategies)
}

/// Run `job(0..n)` across threads, preserving input order; the lowest-index
/// error wins so failures are deterministic too.
fn run_indexed<T, F>(n: usize, job: F) -> Result<Vec<T>, PipelineError>
where
    T: Send,
    F: Fn(usize) -> Result<T, PipelineError> + Sync,
{
    let workers = std::thread::available_parallelism().map(|p| p.get()).unwrap_or(1).min(n.max(1));
    let (tx, rx) = mpsc::channel::<(usize, Result<T, PipelineError>)>();
    std::thread::scope(|scope| {
        for w in 0..workers {
            let tx = tx.clone();
            let job = &job;
            scope.spawn(move || {
                let mut i = w;
                while i < n {
                    if tx.send((i, job(i))).is_err() {
                        return;
                    }
                    i += workers;
                }
            });
        }
    });
    drop(tx);
    let mut slots: Vec<Option<Result<T, PipelineError>>> = (0..n).map(|_| None).collect();
    for (i, r) in rx {
        slots[i] = Some(r);
    }
    let mut out = Vec::with_capacity(n);
    for slot in slots {
        out.push(slot.expect("worker finished every index")?);
    }
    Ok(out)
}

/// A demonstrated functional-basis path to imitate.
#[derive(Debug, Clone)]
pub struct DemoPath {
    pub name: String,
    pub affordance: String,
    pub functional: String,
    /// Uniformly spaced timestamps, s.
    pub times: Vec<f64>,
    /// World positions of the functional basis, m.
    pub points: Vec<[f64; 3]>,
}

impl DemoPath {
    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.times.len() < 3 || self.points.len() != self.times.len() {
            return Err(PipelineError::BadDemo(format!(
                "`{}` needs >= 3 aligned waypoints, got {} times / {} points",
                self.name,
                self.times.len(),
                self.points.len()
            )));
        }
        let dt = self.times[1] - self.times[0];
        if dt <= 0.0 {
            return Err(PipelineError::BadDemo(format!("`{}` timestamps must increase", self.name)));
        }
        for w in self.times.windows(2) {
            if ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.max(1.0) {
                return Err(PipelineError::BadDemo(format!(
                    "`{}` requires uniform timestamps for quadrature",
                    self.name
                )));
            }
        }
        Ok(())
    }
}

/// Differentiate a uniformly sampled path: central stencils inside, one-sided
/// first derivatives at the ends, copied curvature at the ends.
fn differentiate(q: &[Vec<f64>], dt: f64) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let n = q.len();
    let dof = q[0].len();
    let mut qd = vec![vec![0.0; dof]; n];
    let mut qdd = vec![vec![0.0; dof]; n];
    for i in 0..dof {
        for k in 0..n {
            qd[k][i] = if k == 0 {
                (q[1][i] - q[0][i]) / dt
            } else if k == n - 1 {
                (q[n - 1][i] - q[n - 2][i]) / dt
            } else {
                (q[k + 1][i] - q[k - 1][i]) / (2.0 * dt)
            };
        }
        for k in 1..n - 1 {
            qdd[k][i] = (q[k + 1][i] - 2.0 * q[k][i] + q[k - 1][i]) / (dt * dt);
        }
        qdd[0][i] = qdd[1][i];
        qdd[n - 1][i] = qdd[n - 2][i];
    }
    (qd, qdd)
}

/// Max trapezoidal closure error of (q, q̇) over the node path.
fn kinematic_defect(q: &[Vec<f64>], qd: &[Vec<f64>], dt: f64) -> f64 {
    let mut worst = 0.0f64;
    for k in 0..q.len() - 1 {
        for i in 0..q[k].len() {
            let defect = q[k + 1][i] - q[k][i] - 0.5 * dt * (qd[k][i] + qd[k + 1][i]);
            worst = worst.max(defect.abs());
        }
    }
    worst
}

/// Wrap a waypoint-tracked joint path as a strategy with audited costs.
fn tracked_strategy(
    vkc: Vkc,
    affordance: &str,
    functional: &str,
    times: &[f64],
    q: Vec<Vec<f64>>,
    ik_diag: Option<String>,
) -> Strategy {
    let dt = times[1] - times[0];
    let horizon = times[times.len() - 1] - times[0];
    let (qd, qdd) = differentiate(&q, dt);
    let u: Vec<Vec<f64>> = (0..q.len())
        .map(|k| inverse_dynamics(&vkc.chain, &q[k], &qd[k], &qdd[k]))
        .collect();

    let mut diagnostics = ik_diag.unwrap_or_default();
    let limits = vkc.chain.dof_limits();
    'scan: for k in 0..q.len() {
        for (i, (lim, actuated)) in limits.iter().enumerate() {
            if qd[k][i].abs() > lim.qd + 1e-9 {
                diagnostics = format!(
                    "joint velocity limit exceeded at `{}`: {:.3} > {:.3} rad/s (t={:.3})",
                    vkc.chain.joint_name(i),
                    qd[k][i].abs(),
                    lim.qd,
                    times[k]
                );
                break 'scan;
            }
            let tau_cap = if *actuated { lim.tau } else { 0.0 };
            if u[k][i].abs() > tau_cap + 1e-9 {
                diagnostics = format!(
                    "torque limit exceeded at `{}`: {:.3} > {:.3} N*m (t={:.3})",
                    vkc.chain.joint_name(i),
                    u[k][i].abs(),
                    tau_cap,
                    times[k]
                );
                break 'scan;
            }
        }
    }

    let n = vkc.nq();
    let cost = quadrature_costs(&qd, &u, horizon, &vec![DEFAULT_W_QD; n], &vec![DEFAULT_W_U; n]);
    let valid = diagnostics.is_empty();
    let max_defect = kinematic_defect(&q, &qd, dt);
    let shifted: Vec<f64> = times.iter().map(|t| t - times[0]).collect();
    Strategy {
        affordance: affordance.to_string(),
        functional: functional.to_string(),
        solution: Some(TrajectorySolution {
            horizon,
            times: shifted,
            q,
            qd,
            u,
            cost,
            feasibility: Feasibility {
                max_defect,
                terminal_q_residual: 0.0,
                terminal_qd_residual: 0.0,
                max_bound_violation: 0.0,
                converged: valid,
                outer_iterations: 0,
                used_fd_gradients: false,
            },
            valid,
        }),
        vkc: Some(vkc),
        valid,
        diagnostics,
    }
}

/// Imitate a demonstrated tool path: track each waypoint with damped
/// least-squares IK on the demo's basis pair and audit the resulting joint
/// path with inverse-dynamics torques. Infeasibility lands in the validity
/// flag, never an error.
pub fn mimic_plan(
    robot: &KinematicChain,
    tool: &ToolDescriptor,
    demo: &DemoPath,
) -> Result<Strategy, PipelineError> {
    demo.validate()?;
    let vkc = construct_vkc(robot, tool, &demo.affordance, &demo.functional, &VirtualJoint::Fixed)?;
    let mut q = Vec::with_capacity(demo.times.len());
    let mut q_prev = vkc.chain.neutral_q();
    for (k, point) in demo.points.iter().enumerate() {
        let goal = GoalSpec { v_tool: [0.0; 3], d_tool: None, p_g: *point };
        let cfg = IkConfig { seed: k as u64, ..IkConfig::default() };
        match solve_goal_ik(&vkc, &goal, &q_prev, &cfg) {
            Ok(qk) => {
                q_prev = qk.clone();
                q.push(qk);
            }
            Err(e) => {
                return Ok(Strategy {
                    affordance: demo.affordance.clone(),
                    functional: demo.functional.clone(),
                    solution: None,
                    vkc: Some(vkc),
                    valid: false,
                    diagnostics: format!("waypoint {k} unreachable: {e}"),
                });
            }
        }
    }
    Ok(tracked_strategy(vkc, &demo.affordance, &demo.functional, &demo.times, q, None))
}

/// Effect-blind baseline: descend straight onto `p_g` at a fixed nominal
/// speed with the functional surface normal held along gravity.
pub fn baseline_plan(
    robot: &KinematicChain,
    tool: &ToolDescriptor,
    affordance: &str,
    functional: &str,
    p_g: [f64; 3],
) -> Result<Strategy, PipelineError> {
    let vkc = construct_vkc(robot, tool, affordance, functional, &VirtualJoint::Fixed)?;
    let intervals = 40usize;
    let horizon = BASELINE_APPROACH / BASELINE_SPEED;
    let dt = horizon / intervals as f64;
    let times: Vec<f64> = (0..=intervals).map(|k| k as f64 * dt).collect();

    let mut q = Vec::with_capacity(intervals + 1);
    let mut q_prev = vkc.chain.neutral_q();
    for k in 0..=intervals {
        let z_off = BASELINE_APPROACH - BASELINE_SPEED * times[k];
        let point = [p_g[0], p_g[1], p_g[2] + z_off];
        // Unit v_tool fixes only the alignment direction; the commanded
        // speed lives in the waypoint spacing.
        let goal = GoalSpec { v_tool: [0.0, 0.0, -1.0], d_tool: Some(0.0), p_g: point };
        let cfg = IkConfig { pos_tol: 1e-7, seed: k as u64, ..IkConfig::default() };
        match solve_goal_ik(&vkc, &goal, &q_prev, &cfg) {
            Ok(qk) => {
                q_prev = qk.clone();
                q.push(qk);
            }
            Err(e) => {
                return Ok(Strategy {
                    affordance: affordance.to_string(),
                    functional: functional.to_string(),
                    solution: None,
                    vkc: Some(vkc),
                    valid: false,
                    diagnostics: format!("descent waypoint {k} unreachable: {e}"),
                });
            }
        }
    }
    Ok(tracked_strategy(vkc, affordance, functional, &times, q, None))
}

/// World-frame functional-basis motion over a solution's nodes.
#[derive(Debug, Clone)]
pub struct FunctionalPath {
    pub times: Vec<f64>,
    pub points: Vec<[f64; 3]>,
    pub normals: Vec<[f64; 3]>,
    /// Capsule axis angle in the world x-z plane, rad.
    pub angles: Vec<f64>,
}

/// Recover the functional basis world path from a strategy's joint path.
pub fn functional_path(
    vkc: &Vkc,
    sol: &TrajectorySolution,
    axis_local: [f64; 3],
) -> Result<FunctionalPath, PipelineError> {
    let axis = Vector3::new(axis_local[0], axis_local[1], axis_local[2]);
    let n_local = vkc.functional_normal_local();
    let n_local = Vector3::new(n_local[0], n_local[1], n_local[2]);
    let mut points = Vec::with_capacity(sol.q.len());
    let mut normals = Vec::with_capacity(sol.q.len());
    let mut angles = Vec::with_capacity(sol.q.len());
    for q in &sol.q {
        let fk = forward_kinematics(&vkc.chain, q)?;
        let p = fk.tip.position;
        let n = fk.tip.rotation * n_local;
        let a = fk.tip.rotation * axis;
        points.push([p.x, p.y, p.z]);
        normals.push([n.x, n.y, n.z]);
        angles.push(a.z.atan2(a.x));
    }
    Ok(FunctionalPath { times: sol.times.clone(), points, normals, angles })
}

/// Execute a planned strategy in the effect simulator and score it.
///
/// The body's stiffness and strain limit are jittered 10% per seed. Success:
/// crack tasks must classify as cracked; cut tasks must end in exactly two
/// fragments with every broken spring inside a mid-body band of half-width
/// 15% of the diameter.
pub fn evaluate_execution(
    strategy: &Strategy,
    task: &TaskDefinition,
    seed: u64,
) -> Result<(PropertyLog, EffectClass, bool), PipelineError> {
    assert!(strategy.valid, "evaluate_execution requires a valid strategy");
    let sol = strategy.solution.as_ref().expect("valid strategy carries a solution");
    let vkc = strategy.vkc.as_ref().expect("valid strategy carries its chain");
    let sc = &task.scenario;

    let path = functional_path(vkc, sol, task.capsule_axis_local)?;
    let center_off = Vector3::new(
        task.capsule_center_local[0],
        task.capsule_center_local[1],
        task.capsule_center_local[2],
    );
    let mut states = Vec::with_capacity(path.points.len() + 2);
    for k in 0..path.points.len() {
        let fk = forward_kinematics(&vkc.chain, &sol.q[k])?;
        let c = fk.tip.position + fk.tip.rotation * center_off;
        states.push(ToolState { t: path.times[k], pos: [c.x, c.z], angle: path.angles[k] });
    }

    // Carry the terminal velocity through the body, then hold for settling,
    // mirroring the demonstration kinematics.
    let q_last = &sol.q[sol.q.len() - 1];
    let qd_last = &sol.qd[sol.qd.len() - 1];
    let jac = geometric_jacobian(&vkc.chain, q_last, &vkc.chain.tip)?;
    let qd_v = nalgebra::DVector::from_column_slice(qd_last);
    let v3 = jac.rows(0, 3) * &qd_v;
    let v2 = [v3[0], v3[2]];
    let speed = (v2[0] * v2[0] + v2[1] * v2[1]).sqrt();
    let t_end = *path.times.last().unwrap();
    let last = *states.last().unwrap();
    let mut t_follow = 0.0;
    if speed > 1e-9 {
        let follow = sc.follow_through + speed * sc.follow_time;
        if follow > 0.0 {
            t_follow = follow / speed;
            states.push(ToolState {
                t: t_end + t_follow,
                pos: [
                    last.pos[0] + v2[0] / speed * follow,
                    last.pos[1] + v2[1] / speed * follow,
                ],
                angle: last.angle,
            });
        }
    }
    let total = t_end + t_follow + sc.aftermath;
    let hold = *states.last().unwrap();
    states.push(ToolState { t: total, ..hold });
    let profile = ToolProfile { shape: sc.shape, states };

    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut spec = sc.body.clone();
    spec.youngs *= 1.0 + rng.random_range(-EVAL_JITTER..EVAL_JITTER);
    spec.fracture_strain *= 1.0 + rng.random_range(-EVAL_JITTER..EVAL_JITTER);
    let mut body = build_body(&spec, seed);
    let rest_pos: Vec<[f64; 2]> = body.particles.iter().map(|p| p.pos).collect();

    let steps = (total / sc.dt).ceil().max(1.0);
    let duration = steps * sc.dt;
    let log = simulate(&mut body, &profile, duration, sc.dt)?;

    let pieces = log.final_fragments();
    let class = classify_effect(pieces, sc.thresholds);
    let success = match task.kind {
        TaskKind::Crack => class == EffectClass::Cracked,
        TaskKind::Cut => {
            let band = 0.15 * 2.0 * sc.body.radius;
            let center_x = sc.body.center[0];
            pieces == 2
                && body.springs.iter().filter(|s| s.broken).all(|s| {
                    let mid = 0.5 * (rest_pos[s.a][0] + rest_pos[s.b][0]);
                    (mid - center_x).abs() <= band
                })
        }
    };
    Ok((log, class, success))
}

/// Score a strategy over many seeds concurrently; results keep seed order.
pub fn evaluate_batch(
    strategy: &Strategy,
    task: &TaskDefinition,
    seeds: &[u64],
) -> Result<Vec<(EffectClass, bool)>, PipelineError> {
    run_indexed(seeds.len(), |i| {
        evaluate_execution(strategy, task, seeds[i]).map(|(_, class, ok)| (class, ok))
    })
}

#[cfg(test)]
mod tests;
