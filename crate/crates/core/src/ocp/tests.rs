use super::*;
use crate::dynamics::{
    aba_forward_dynamics, inverse_dynamics, samples, FrameRef, Joint, JointKind, JointLimits,
    KinematicChain, Link, IDENTITY3,
};
use approx::assert_relative_eq;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Unit point mass on a frictionless rail along x, no gravity: q̈ = u.
fn double_integrator() -> Vkc {
    let cart = Link {
        name: "cart".into(),
        parent: None,
        joint: Joint {
            kind: JointKind::Prismatic,
            axis: [1.0, 0.0, 0.0],
            origin_rot: IDENTITY3,
            origin_trans: [0.0, 0.0, 0.0],
            limits: JointLimits {
                q: (-10.0, 10.0),
                qd: 50.0,
                tau: 1e3,
            },
            actuated: true,
        },
        mass: 1.0,
        com: [0.0, 0.0, 0.0],
        inertia_com: [[0.0; 3]; 3],
    };
    let tip = FrameRef {
        link: 0,
        rotation: IDENTITY3,
        translation: [0.0, 0.0, 0.0],
    };
    let chain = KinematicChain::new("cart", [0.0, 0.0, 0.0], vec![cart], tip).unwrap();
    Vkc::from_chain(chain, [0.0, 0.0, 1.0])
}

fn pendulum_vkc() -> Vkc {
    Vkc::from_chain(samples::pendulum(1.0, 1.0), [0.0, 0.0, 1.0])
}

#[test]
fn transcription_dimension_matches_layout() {
    let arm = samples::planar_arm_xz(&[0.4, 0.35, 0.3], &[1.2, 1.0, 0.6]);
    let vkc = Vkc::from_chain(arm, [0.0, 0.0, 1.0]);
    let n = vkc.nq();
    let mut p = OcProblem::new(
        vkc,
        vec![0.0; n],
        vec![0.0; n],
        vec![0.1; n],
        vec![0.0; n],
    )
    .unwrap();
    p.intervals = 10;
    let t = p.transcribe();
    assert_eq!(t.dim(), 100);
    assert_eq!(t.n_eq(), 2 * 3 * 10 + 6);
}

#[test]
fn equilibrium_trajectory_has_zero_defects() {
    // Pendulum held at a non-trivial angle by gravity-compensation torque:
    // defects vanish to rounding.
    let vkc = pendulum_vkc();
    let hold = 0.3;
    let tau = inverse_dynamics(&vkc.chain, &[hold], &[0.0], &[0.0]);
    let mut p = OcProblem::new(vkc, vec![hold], vec![0.0], vec![hold], vec![0.0]).unwrap();
    p.intervals = 7;
    let t = p.transcribe();
    let mut z = vec![0.0; t.dim()];
    for k in 0..=7 {
        z[k * 3] = hold;
        z[k * 3 + 2] = tau[0];
    }
    z[t.dim() - 1] = 1.3;
    let c = t.constraints(&z).unwrap();
    assert!(c.iter().all(|v| v.abs() <= 1e-12), "defects {c:?}");

    // Force-free cart at rest: defects are exactly zero.
    let cart = double_integrator();
    let mut p = OcProblem::new(cart, vec![0.4], vec![0.0], vec![0.4], vec![0.0]).unwrap();
    p.intervals = 5;
    let t = p.transcribe();
    let mut z = vec![0.0; t.dim()];
    for k in 0..=5 {
        z[k * 3] = 0.4;
    }
    z[t.dim() - 1] = 2.0;
    let c = t.constraints(&z).unwrap();
    assert!(c.iter().all(|v| *v == 0.0), "defects {c:?}");
}

#[test]
fn defects_match_independent_recomputation() {
    let vkc = pendulum_vkc();
    let mut p = OcProblem::new(vkc, vec![0.2], vec![0.0], vec![1.0], vec![0.0]).unwrap();
    p.intervals = 6;
    let t = p.transcribe();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut z: Vec<f64> = (0..t.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let horizon = 1.7;
    z[t.dim() - 1] = horizon;
    let c = t.constraints(&z).unwrap();

    let chain = &t.problem().vkc.chain;
    let h = horizon / 6.0;
    for k in 0..6 {
        let (q0, qd0, u0) = (z[3 * k], z[3 * k + 1], z[3 * k + 2]);
        let (q1, qd1, u1) = (z[3 * (k + 1)], z[3 * (k + 1) + 1], z[3 * (k + 1) + 2]);
        let f0 = aba_forward_dynamics(chain, &[q0], &[qd0], &[u0]).unwrap()[0];
        let f1 = aba_forward_dynamics(chain, &[q1], &[qd1], &[u1]).unwrap()[0];
        assert_relative_eq!(c[2 * k], q1 - q0 - (h / 2.0) * (qd0 + qd1), epsilon = 1e-12);
        assert_relative_eq!(c[2 * k + 1], qd1 - qd0 - (h / 2.0) * (f0 + f1), epsilon = 1e-12);
    }
    assert_relative_eq!(c[12], z[18] - 1.0, epsilon = 1e-15);
    assert_relative_eq!(c[13], z[19], epsilon = 1e-15);
}

#[test]
fn analytic_derivatives_match_finite_differences() {
    let vkc = pendulum_vkc();
    let mut p = OcProblem::new(vkc, vec![0.2], vec![0.0], vec![1.0], vec![0.0]).unwrap();
    p.intervals = 5;
    let t = p.transcribe();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..5 {
        let mut z: Vec<f64> = (0..t.dim()).map(|_| rng.random_range(-0.8..0.8)).collect();
        z[t.dim() - 1] = rng.random_range(0.5..2.0);
        let dir: Vec<f64> = (0..t.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..t.n_eq()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let h = 1e-6;
        let mut zp = z.clone();
        let mut zm = z.clone();
        for i in 0..z.len() {
            zp[i] += h * dir[i];
            zm[i] -= h * dir[i];
        }

        let fd_cost = (t.cost(&zp) - t.cost(&zm)) / (2.0 * h);
        let an_cost: f64 = t.cost_grad(&z).iter().zip(&dir).map(|(g, d)| g * d).sum();
        assert!(
            (fd_cost - an_cost).abs() <= 1e-4 * fd_cost.abs().max(1.0),
            "cost: fd {fd_cost} analytic {an_cost}"
        );

        let cp = t.constraints(&zp).unwrap();
        let cm = t.constraints(&zm).unwrap();
        let fd_c: f64 = cp
            .iter()
            .zip(&cm)
            .zip(&y)
            .map(|((a, b), yi)| yi * (a - b) / (2.0 * h))
            .sum();
        let ev = t.eval(&z, true).unwrap();
        let jt = t.jac_tvec(&z, &ev, &y);
        let an_c: f64 = jt.iter().zip(&dir).map(|(g, d)| g * d).sum();
        assert!(
            (fd_c - an_c).abs() <= 1e-4 * fd_c.abs().max(1.0),
            "constraints: fd {fd_c} analytic {an_c}"
        );
    }
}

#[test]
fn double_integrator_rest_to_rest_matches_analytic_cost() {
    let vkc = double_integrator();
    let mut p = OcProblem::new(vkc, vec![0.0], vec![0.0], vec![1.0], vec![0.0]).unwrap();
    p.weights.w_qd = vec![0.0];
    p.weights.w_u = vec![1.0];
    p.t_bounds = (1.0, 1.0);
    p.intervals = 40;
    let t = p.transcribe();
    let sol = solve(&t, 0, &SolveTolerances::default()).unwrap();
    assert!(sol.valid, "feasibility: {:?}", sol.feasibility);
    // Continuous-time optimum: u(t) = 6 - 12t, ∫u² = 12.
    assert!(
        (sol.cost.effort - 12.0).abs() <= 0.02 * 12.0,
        "effort {} vs 12 ± 2%",
        sol.cost.effort
    );
    assert_relative_eq!(sol.horizon, 1.0, epsilon = 1e-12);
    // Control starts near +6, ends near -6.
    assert!((sol.u[0][0] - 6.0).abs() < 0.8, "u0 {}", sol.u[0][0]);
    assert!((sol.u[40][0] + 6.0).abs() < 0.8, "uN {}", sol.u[40][0]);
}

#[test]
fn already_satisfied_goal_shrinks_horizon_to_lower_bound() {
    let vkc = double_integrator();
    let mut p = OcProblem::new(vkc, vec![0.3], vec![0.0], vec![0.3], vec![0.0]).unwrap();
    p.intervals = 20;
    let t = p.transcribe();
    let sol = solve(&t, 0, &SolveTolerances::default()).unwrap();
    assert!(sol.valid, "feasibility: {:?}", sol.feasibility);
    assert!(sol.horizon <= 0.2 + 1e-6, "horizon {}", sol.horizon);
    assert!(sol.cost.effort <= 1e-8, "effort {}", sol.cost.effort);
    let drift = sol
        .q
        .iter()
        .map(|q| (q[0] - 0.3).abs())
        .fold(0.0f64, f64::max);
    assert!(drift <= 1e-6, "drift {drift}");
}

#[test]
fn unreachable_terminal_velocity_is_marked_invalid() {
    let vkc = double_integrator();
    let mut p = OcProblem::new(vkc, vec![0.0], vec![0.0], vec![0.0], vec![30.0]).unwrap();
    // Max Δq̇ = ∫u dt ≤ 1·T_max = 1, far short of 30.
    p.u_lb = vec![-1.0];
    p.u_ub = vec![1.0];
    p.t_bounds = (0.2, 1.0);
    p.intervals = 15;
    let t = p.transcribe();
    let sol = solve(&t, 0, &SolveTolerances::default()).unwrap();
    assert!(!sol.valid);
    assert!(
        sol.feasibility.terminal_qd_residual > 1.0,
        "terminal q̇ residual {}",
        sol.feasibility.terminal_qd_residual
    );
}

#[test]
fn solver_is_deterministic() {
    let vkc = pendulum_vkc();
    let hang = -std::f64::consts::FRAC_PI_2;
    let mut p = OcProblem::new(vkc, vec![hang], vec![0.0], vec![0.5], vec![0.0]).unwrap();
    p.intervals = 15;
    let t = p.transcribe();
    let a = solve(&t, 7, &SolveTolerances::default()).unwrap();
    let b = solve(&t, 7, &SolveTolerances::default()).unwrap();
    assert_eq!(a.horizon.to_bits(), b.horizon.to_bits());
    for (qa, qb) in a.q.iter().zip(&b.q) {
        assert_eq!(qa[0].to_bits(), qb[0].to_bits());
    }
    for (ua, ub) in a.u.iter().zip(&b.u) {
        assert_eq!(ua[0].to_bits(), ub[0].to_bits());
    }
    assert!(a.valid);
}

#[test]
fn swing_up_respects_torque_bound_and_reaches_goal() {
    // Peak gravity torque on the way up is m·g·l = 9.81 N·m; a 9 N·m budget
    // rules out a quasi-static lift, so the bound must go active.
    let mut chain = samples::pendulum(1.0, 1.0);
    for link in &mut chain.links {
        if link.joint.kind == JointKind::Revolute {
            link.joint.limits.tau = 9.0;
        }
    }
    let vkc = Vkc::from_chain(chain, [0.0, 0.0, 1.0]);
    let hang = -std::f64::consts::FRAC_PI_2;
    let mut p = OcProblem::new(vkc, vec![hang], vec![0.0], vec![0.3], vec![0.0]).unwrap();
    p.intervals = 25;
    let t = p.transcribe();
    let sol = solve(&t, 0, &SolveTolerances::default()).unwrap();
    assert!(sol.valid, "feasibility: {:?}", sol.feasibility);
    let u_max = sol
        .u
        .iter()
        .map(|u| u[0].abs())
        .fold(0.0f64, f64::max);
    assert!(u_max <= 9.0 + 1e-8, "u_max {u_max}");
    assert_relative_eq!(sol.q.last().unwrap()[0], 0.3, epsilon = 1e-4);
}

#[test]
fn ik_at_a_satisfied_goal_returns_immediately() {
    let arm = samples::planar_arm_xz(&[0.4, 0.35, 0.3], &[1.2, 1.0, 0.6]);
    let vkc = Vkc::from_chain(arm, [0.0, 0.0, 1.0]);
    let q0 = vec![0.3, -0.4, 0.2];
    let fk = forward_kinematics(&vkc.chain, &q0).unwrap();
    let f_z = vkc.functional_normal(&q0).unwrap();
    let v_tool = Vector3::new(0.0, 0.0, -1.0);
    let goal = GoalSpec {
        v_tool: [0.0, 0.0, -1.0],
        d_tool: Some(angle_between(&f_z, &v_tool)),
        p_g: [fk.tip.position[0], fk.tip.position[1], fk.tip.position[2]],
    };
    let q = solve_goal_ik(&vkc, &goal, &q0, &IkConfig::default()).unwrap();
    assert_eq!(q, q0);
}

#[test]
fn ik_reaches_a_pose_built_from_another_configuration() {
    let arm = samples::planar_arm_xz(&[0.4, 0.35, 0.3], &[1.2, 1.0, 0.6]);
    let vkc = Vkc::from_chain(arm, [0.0, 0.0, 1.0]);
    let q_target = vec![0.5, -0.7, 0.9];
    let fk = forward_kinematics(&vkc.chain, &q_target).unwrap();
    let f_z = vkc.functional_normal(&q_target).unwrap();
    let v_tool = Vector3::new(0.2, 0.0, -1.0).normalize();
    let goal = GoalSpec {
        v_tool: [v_tool[0], v_tool[1], v_tool[2]],
        d_tool: Some(angle_between(&f_z, &v_tool)),
        p_g: [fk.tip.position[0], fk.tip.position[1], fk.tip.position[2]],
    };
    let q0 = vec![0.0, 0.1, -0.1];
    let q = solve_goal_ik(&vkc, &goal, &q0, &IkConfig::default()).unwrap();

    let fk_sol = forward_kinematics(&vkc.chain, &q).unwrap();
    let pos_err = (fk_sol.tip.position - fk.tip.position).norm();
    assert!(pos_err <= 1e-4, "position residual {pos_err}");
    let f_sol = vkc.functional_normal(&q).unwrap();
    let ang_err = (angle_between(&f_sol, &v_tool) - goal.d_tool.unwrap()).abs();
    assert!(ang_err <= 1e-3, "angle residual {ang_err}");
}

#[test]
fn ik_reports_best_residual_on_unreachable_target() {
    let arm = samples::planar_arm_xz(&[0.4, 0.35, 0.3], &[1.2, 1.0, 0.6]);
    let vkc = Vkc::from_chain(arm, [0.0, 0.0, 1.0]);
    let goal = GoalSpec {
        v_tool: [0.0, 0.0, -1.0],
        d_tool: None,
        p_g: [5.0, 0.0, 0.0],
    };
    let cfg = IkConfig {
        max_iters: 120,
        ..IkConfig::default()
    };
    let err = solve_goal_ik(&vkc, &goal, &[0.0, 0.0, 0.0], &cfg).unwrap_err();
    match err {
        OcpError::IkDiverged {
            pos_residual,
            q_best,
            ..
        } => {
            // Reach is 1.05 m; the best residual is the remaining gap.
            assert!(pos_residual >= 3.0, "residual {pos_residual}");
            assert_eq!(q_best.len(), 3);
        }
        other => panic!("expected IkDiverged, got {other:?}"),
    }
}

#[test]
fn joint_velocity_uses_pseudoinverse_on_singular_jacobian() {
    let chain = samples::two_link_planar(1.0, 1.0, 1.0, 1.0);
    let vkc = Vkc::from_chain(chain, [0.0, 0.0, 1.0]);
    // Stretched arm: x-row of the linear Jacobian is zero.
    let qd = goal_joint_velocity(&vkc, &[0.0, 0.0], &[0.0, 1.0, 0.0]).unwrap();
    assert_relative_eq!(qd[0], 0.4, epsilon = 1e-9);
    assert_relative_eq!(qd[1], 0.2, epsilon = 1e-9);

    let zero = goal_joint_velocity(&vkc, &[0.0, 0.0], &[0.0, 0.0, 0.0]).unwrap();
    assert!(zero.iter().all(|v| v.abs() <= 1e-12));

    let err = goal_joint_velocity(&vkc, &[0.0, 0.0], &[1.0, 0.0, 0.0]).unwrap_err();
    match err {
        OcpError::SingularJacobian { residual } => {
            assert!((residual - 1.0).abs() <= 1e-9, "residual {residual}");
        }
        other => panic!("expected SingularJacobian, got {other:?}"),
    }
}

#[test]
fn cost_audit_matches_solver_and_scales_with_weights() {
    let zero_motion = quadrature_costs(
        &vec![vec![0.0]; 11],
        &vec![vec![0.0]; 11],
        2.0,
        &[0.1],
        &[1.0],
    );
    assert_eq!(zero_motion.velocity, 0.0);
    assert_eq!(zero_motion.effort, 0.0);
    assert_eq!(zero_motion.total, 2.0);

    let vkc = pendulum_vkc();
    let hang = -std::f64::consts::FRAC_PI_2;
    let mut p = OcProblem::new(vkc, vec![hang], vec![0.0], vec![0.2], vec![0.0]).unwrap();
    p.intervals = 12;
    let t = p.transcribe();
    let sol = solve(&t, 0, &SolveTolerances::default()).unwrap();
    let audit = trajectory_costs(&sol, &[0.1], &[1.0]);
    assert!((audit.total - sol.cost.total).abs() <= 1e-12);
    let doubled = trajectory_costs(&sol, &[0.1], &[2.0]);
    assert_relative_eq!(doubled.effort, 2.0 * audit.effort, epsilon = 1e-12);
}

