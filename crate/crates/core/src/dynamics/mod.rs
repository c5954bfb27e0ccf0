//! Serial-chain kinematics and dynamics: forward kinematics, geometric
//! Jacobians, articulated-body forward dynamics, and the inverse-dynamics /
//! mass-matrix oracles used to cross-check it.
//!
//! Chains are trees of links connected by revolute, prismatic, or fixed
//! joints. Joint positions are unbounded reals; limits are data that callers
//! (IK, the trajectory optimizer) enforce as constraints, with only a loose
//! sanity check here. All operations are pure.

mod algorithms;
pub mod real;
pub mod samples;
pub mod spatial;

use nalgebra::{DMatrix, Matrix3, Vector3};
use thiserror::Error;

use real::Dual;
use spatial::{M3, V3};

/// Loose tolerance on the FK/Jacobian joint-limit precondition; trajectory
/// constraints are enforced far tighter by the optimizer itself.
const LIMIT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Error)]
pub enum DynError {
    #[error("joint `{joint}` position {q} outside limits [{lo}, {hi}]")]
    OutOfLimits { joint: String, q: f64, lo: f64, hi: f64 },
    #[error("articulated inertia singular at joint `{joint}`")]
    SingularInertia { joint: String },
    #[error("expected {want} joint values, got {got}")]
    BadDimension { want: usize, got: usize },
    #[error("invalid chain model: {0}")]
    Model(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JointKind {
    Revolute,
    Prismatic,
    Fixed,
}

#[derive(Debug, Clone, Copy)]
pub struct JointLimits {
    /// Position bounds (rad or m).
    pub q: (f64, f64),
    /// Symmetric velocity bound (>0, may be infinite).
    pub qd: f64,
    /// Symmetric effort bound (>0, may be infinite).
    pub tau: f64,
}

impl Default for JointLimits {
    fn default() -> Self {
        Self {
            q: (f64::NEG_INFINITY, f64::INFINITY),
            qd: f64::INFINITY,
            tau: f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Joint {
    pub kind: JointKind,
    /// Unit axis in the joint frame; ignored for fixed joints.
    pub axis: [f64; 3],
    /// Fixed child-frame pose in the parent frame (applied before the joint motion).
    pub origin_rot: [[f64; 3]; 3],
    pub origin_trans: [f64; 3],
    pub limits: JointLimits,
    /// Unactuated joints move freely but receive zero torque from the planner.
    pub actuated: bool,
}

impl Joint {
    pub fn fixed(origin_rot: [[f64; 3]; 3], origin_trans: [f64; 3]) -> Self {
        Self {
            kind: JointKind::Fixed,
            axis: [0.0, 0.0, 1.0],
            origin_rot,
            origin_trans,
            limits: JointLimits::default(),
            actuated: false,
        }
    }

    pub fn revolute(axis: [f64; 3], origin_trans: [f64; 3]) -> Self {
        Self {
            kind: JointKind::Revolute,
            axis,
            origin_rot: IDENTITY3,
            origin_trans,
            limits: JointLimits::default(),
            actuated: true,
        }
    }
}

pub const IDENTITY3: [[f64; 3]; 3] = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

#[derive(Debug, Clone)]
pub struct Link {
    pub name: String,
    /// Parent link index; `None` attaches to the world frame.
    pub parent: Option<usize>,
    pub joint: Joint,
    pub mass: f64,
    /// Center of mass in the link frame.
    pub com: [f64; 3],
    /// Rotational inertia about the COM, link frame, symmetric PSD.
    pub inertia_com: [[f64; 3]; 3],
}

/// A frame rigidly attached to a link.
#[derive(Debug, Clone)]
pub struct FrameRef {
    pub link: usize,
    pub rotation: [[f64; 3]; 3],
    pub translation: [f64; 3],
}

impl FrameRef {
    pub fn link_origin(link: usize) -> Self {
        Self { link, rotation: IDENTITY3, translation: [0.0; 3] }
    }
}

#[derive(Debug, Clone)]
pub struct KinematicChain {
    pub name: String,
    /// Gravitational acceleration in world coordinates, m/s².
    pub gravity: [f64; 3],
    pub links: Vec<Link>,
    /// Designated tip (end-effector or functional) frame.
    pub tip: FrameRef,
    /// Per-link degree-of-freedom index; `None` for fixed joints.
    dof_index: Vec<Option<usize>>,
    nq: usize,
}

impl KinematicChain {
    pub fn new(
        name: impl Into<String>,
        gravity: [f64; 3],
        mut links: Vec<Link>,
        tip: FrameRef,
    ) -> Result<Self, DynError> {
        let bad = |msg: String| Err(DynError::Model(msg));
        if links.is_empty() {
            return bad("chain has no links".into());
        }
        if tip.link >= links.len() {
            return bad(format!("tip frame references missing link {}", tip.link));
        }
        if gravity.iter().any(|g| !g.is_finite()) {
            return bad("gravity must be finite".into());
        }
        let mut dof_index = Vec::with_capacity(links.len());
        let mut nq = 0;
        let mut actuated = 0;
        for (i, link) in links.iter_mut().enumerate() {
            if let Some(p) = link.parent {
                if p >= i {
                    return bad(format!("link `{}` parent {} not earlier in order", link.name, p));
                }
            }
            if !(link.mass >= 0.0) {
                return bad(format!("link `{}` mass {} negative", link.name, link.mass));
            }
            for r in 0..3 {
                for c in 0..3 {
                    let d = link.inertia_com[r][c] - link.inertia_com[c][r];
                    if d.abs() > 1e-9 {
                        return bad(format!("link `{}` inertia not symmetric", link.name));
                    }
                }
            }
            let eig = Matrix3::from_fn(|r, c| link.inertia_com[r][c])
                .symmetric_eigen()
                .eigenvalues;
            if eig.iter().any(|&e| e < -1e-9) {
                return bad(format!("link `{}` inertia not positive semidefinite", link.name));
            }
            match link.joint.kind {
                JointKind::Fixed => dof_index.push(None),
                _ => {
                    let n = (link.joint.axis[0].powi(2)
                        + link.joint.axis[1].powi(2)
                        + link.joint.axis[2].powi(2))
                    .sqrt();
                    if (n - 1.0).abs() > 1e-6 {
                        return bad(format!("link `{}` joint axis not unit length", link.name));
                    }
                    for a in link.joint.axis.iter_mut() {
                        *a /= n;
                    }
                    let (lo, hi) = link.joint.limits.q;
                    if !(lo <= hi) {
                        return bad(format!("link `{}` limits out of order", link.name));
                    }
                    dof_index.push(Some(nq));
                    nq += 1;
                    if link.joint.actuated {
                        actuated += 1;
                    }
                }
            }
        }
        if nq == 0 {
            return bad("chain has no moving joints".into());
        }
        if actuated == 0 {
            return bad("chain has no actuated joints".into());
        }
        Ok(Self { name: name.into(), gravity, links, tip, dof_index, nq })
    }

    /// Number of moving (revolute or prismatic) joints.
    pub fn nq(&self) -> usize {
        self.nq
    }

    pub fn dof_of_link(&self, link: usize) -> Option<usize> {
        self.dof_index[link]
    }

    /// Link index carrying each degree of freedom, in dof order.
    pub fn dof_links(&self) -> Vec<usize> {
        let mut v = vec![0; self.nq];
        for (i, d) in self.dof_index.iter().enumerate() {
            if let Some(d) = d {
                v[*d] = i;
            }
        }
        v
    }

    /// Per-dof (position bounds, velocity bound, effort bound, actuated).
    pub fn dof_limits(&self) -> Vec<(JointLimits, bool)> {
        self.dof_links()
            .iter()
            .map(|&i| (self.links[i].joint.limits, self.links[i].joint.actuated))
            .collect()
    }

    pub fn joint_name(&self, dof: usize) -> &str {
        &self.links[self.dof_links()[dof]].name
    }

    /// Validate a joint configuration against dimensions and position limits.
    pub fn check_q(&self, q: &[f64]) -> Result<(), DynError> {
        self.check_len(q)?;
        for (i, link) in self.links.iter().enumerate() {
            if let Some(d) = self.dof_index[i] {
                let (lo, hi) = link.joint.limits.q;
                if q[d] < lo - LIMIT_TOL || q[d] > hi + LIMIT_TOL {
                    return Err(DynError::OutOfLimits {
                        joint: link.name.clone(),
                        q: q[d],
                        lo,
                        hi,
                    });
                }
            }
        }
        Ok(())
    }

    fn check_len(&self, v: &[f64]) -> Result<(), DynError> {
        if v.len() != self.nq {
            return Err(DynError::BadDimension { want: self.nq, got: v.len() });
        }
        Ok(())
    }

    /// Midpoint of each joint's position range (0 where unbounded).
    pub fn neutral_q(&self) -> Vec<f64> {
        self.dof_limits()
            .iter()
            .map(|(l, _)| {
                let (lo, hi) = l.q;
                if lo.is_finite() && hi.is_finite() {
                    0.5 * (lo + hi)
                } else {
                    0.0
                }
            })
            .collect()
    }
}

/// World pose of a frame.
#[derive(Debug, Clone, Copy)]
pub struct Pose {
    pub rotation: Matrix3<f64>,
    pub position: Vector3<f64>,
}

impl Pose {
    pub fn identity() -> Self {
        Self { rotation: Matrix3::identity(), position: Vector3::zeros() }
    }

    /// Pose of a child frame given its fixed offset in this frame.
    pub fn compose(&self, rot: &Matrix3<f64>, trans: &Vector3<f64>) -> Pose {
        Pose {
            rotation: self.rotation * rot,
            position: self.position + self.rotation * trans,
        }
    }

    pub fn point(&self, local: &Vector3<f64>) -> Vector3<f64> {
        self.position + self.rotation * local
    }
}

#[derive(Debug, Clone)]
pub struct FkResult {
    /// World pose of every link frame, in link order.
    pub links: Vec<Pose>,
    /// World pose of the chain's designated tip frame.
    pub tip: Pose,
}

fn mat3(m: &[[f64; 3]; 3]) -> Matrix3<f64> {
    Matrix3::from_fn(|r, c| m[r][c])
}

fn vec3(v: &[f64; 3]) -> Vector3<f64> {
    Vector3::new(v[0], v[1], v[2])
}

fn rotation_about(axis: &[f64; 3], angle: f64) -> Matrix3<f64> {
    let m = M3::<f64>::rotation(V3(*axis), angle);
    Matrix3::from_fn(|r, c| m.0[r][c])
}

fn link_pose_in_parent(link: &Link, q: f64) -> (Matrix3<f64>, Vector3<f64>) {
    let r_o = mat3(&link.joint.origin_rot);
    let t_o = vec3(&link.joint.origin_trans);
    match link.joint.kind {
        JointKind::Revolute => (r_o * rotation_about(&link.joint.axis, q), t_o),
        JointKind::Prismatic => (r_o, t_o + r_o * (vec3(&link.joint.axis) * q)),
        JointKind::Fixed => (r_o, t_o),
    }
}

fn link_poses(chain: &KinematicChain, q: &[f64]) -> Vec<Pose> {
    let mut poses: Vec<Pose> = Vec::with_capacity(chain.links.len());
    for (i, link) in chain.links.iter().enumerate() {
        let qi = chain.dof_index[i].map_or(0.0, |d| q[d]);
        let (rot, trans) = link_pose_in_parent(link, qi);
        let parent = link.parent.map_or(Pose::identity(), |p| poses[p]);
        poses.push(parent.compose(&rot, &trans));
    }
    poses
}

pub fn frame_pose(poses: &[Pose], frame: &FrameRef) -> Pose {
    poses[frame.link].compose(&mat3(&frame.rotation), &vec3(&frame.translation))
}

/// World pose of every link frame and of the tip frame.
pub fn forward_kinematics(chain: &KinematicChain, q: &[f64]) -> Result<FkResult, DynError> {
    chain.check_q(q)?;
    let links = link_poses(chain, q);
    let tip = frame_pose(&links, &chain.tip);
    Ok(FkResult { links, tip })
}

/// 6×DoF geometric Jacobian of `frame`, world coordinates, linear rows 0-2
/// then angular rows 3-5.
pub fn geometric_jacobian(
    chain: &KinematicChain,
    q: &[f64],
    frame: &FrameRef,
) -> Result<DMatrix<f64>, DynError> {
    chain.check_q(q)?;
    let poses = link_poses(chain, q);
    let target = frame_pose(&poses, frame);

    // Only joints on the root path of the frame's link move it.
    let mut on_path = vec![false; chain.links.len()];
    let mut cur = Some(frame.link);
    while let Some(i) = cur {
        on_path[i] = true;
        cur = chain.links[i].parent;
    }

    let mut jac = DMatrix::zeros(6, chain.nq);
    for (i, link) in chain.links.iter().enumerate() {
        let (Some(d), true) = (chain.dof_index[i], on_path[i]) else {
            continue;
        };
        // The joint axis is invariant under the joint's own motion, so the
        // link's world rotation maps it to world coordinates directly.
        let axis_w = poses[i].rotation * vec3(&link.joint.axis);
        match link.joint.kind {
            JointKind::Revolute => {
                let arm = target.position - poses[i].position;
                let lin = axis_w.cross(&arm);
                for r in 0..3 {
                    jac[(r, d)] = lin[r];
                    jac[(r + 3, d)] = axis_w[r];
                }
            }
            JointKind::Prismatic => {
                for r in 0..3 {
                    jac[(r, d)] = axis_w[r];
                }
            }
            JointKind::Fixed => unreachable!(),
        }
    }
    Ok(jac)
}

/// Forward dynamics q̈ via the articulated-body recursion.
pub fn aba_forward_dynamics(
    chain: &KinematicChain,
    q: &[f64],
    qd: &[f64],
    tau: &[f64],
) -> Result<Vec<f64>, DynError> {
    chain.check_len(q)?;
    chain.check_len(qd)?;
    chain.check_len(tau)?;
    algorithms::aba(chain, q, qd, tau)
}

/// Inverse dynamics: torques realizing q̈ at (q, q̇), gravity included.
pub fn inverse_dynamics(chain: &KinematicChain, q: &[f64], qd: &[f64], qdd: &[f64]) -> Vec<f64> {
    algorithms::rnea(chain, q, qd, qdd, chain.gravity)
}

/// Joint-space mass matrix, built one column at a time from inverse dynamics
/// with unit accelerations, zero velocity, and gravity switched off.
pub fn mass_matrix(chain: &KinematicChain, q: &[f64]) -> DMatrix<f64> {
    let n = chain.nq;
    let zero = vec![0.0; n];
    let mut m = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut qdd = vec![0.0; n];
        qdd[j] = 1.0;
        let col = algorithms::rnea(chain, q, &zero, &qdd, [0.0; 3]);
        for i in 0..n {
            m[(i, j)] = col[i];
        }
    }
    m
}

#[derive(Debug, Clone, Copy)]
pub struct MechanicalEnergy {
    pub kinetic: f64,
    pub potential: f64,
}

impl MechanicalEnergy {
    pub fn total(&self) -> f64 {
        self.kinetic + self.potential
    }
}

/// Kinetic plus gravitational potential energy (potential zero at world origin).
pub fn energy(chain: &KinematicChain, q: &[f64], qd: &[f64]) -> MechanicalEnergy {
    let kinetic = algorithms::kinetic_energy(chain, q, qd);
    let poses = link_poses(chain, q);
    let g = vec3(&chain.gravity);
    let mut potential = 0.0;
    for (link, pose) in chain.links.iter().zip(&poses) {
        let com_w = pose.point(&vec3(&link.com));
        potential -= link.mass * g.dot(&com_w);
    }
    MechanicalEnergy { kinetic, potential }
}

/// One fixed-torque RK4 step of the chain state.
pub fn integrate_rk4(
    chain: &KinematicChain,
    q: &[f64],
    qd: &[f64],
    tau: &[f64],
    dt: f64,
) -> Result<(Vec<f64>, Vec<f64>), DynError> {
    let n = chain.nq;
    let deriv = |q: &[f64], qd: &[f64]| -> Result<(Vec<f64>, Vec<f64>), DynError> {
        Ok((qd.to_vec(), algorithms::aba(chain, q, qd, tau)?))
    };
    let shift = |q: &[f64], dq: &[f64], s: f64| -> Vec<f64> {
        q.iter().zip(dq).map(|(a, b)| a + s * b).collect()
    };
    let (k1q, k1v) = deriv(q, qd)?;
    let (k2q, k2v) = deriv(&shift(q, &k1q, dt / 2.0), &shift(qd, &k1v, dt / 2.0))?;
    let (k3q, k3v) = deriv(&shift(q, &k2q, dt / 2.0), &shift(qd, &k2v, dt / 2.0))?;
    let (k4q, k4v) = deriv(&shift(q, &k3q, dt), &shift(qd, &k3v, dt))?;
    let mut q1 = vec![0.0; n];
    let mut qd1 = vec![0.0; n];
    for i in 0..n {
        q1[i] = q[i] + dt / 6.0 * (k1q[i] + 2.0 * k2q[i] + 2.0 * k3q[i] + k4q[i]);
        qd1[i] = qd[i] + dt / 6.0 * (k1v[i] + 2.0 * k2v[i] + 2.0 * k3v[i] + k4v[i]);
    }
    Ok((q1, qd1))
}

/// q̈ and its Jacobian ∂q̈/∂(q, q̇, τ) (n × 3n), via dual numbers seeded one
/// input at a time through the articulated-body recursion.
pub fn dynamics_jacobian(
    chain: &KinematicChain,
    q: &[f64],
    qd: &[f64],
    tau: &[f64],
) -> Result<(Vec<f64>, DMatrix<f64>), DynError> {
    let n = chain.nq;
    let value = algorithms::aba::<f64>(chain, q, qd, tau)?;
    let mut jac = DMatrix::zeros(n, 3 * n);
    let mut dq: Vec<Dual> = q.iter().map(|&v| Dual::constant(v)).collect();
    let mut dqd: Vec<Dual> = qd.iter().map(|&v| Dual::constant(v)).collect();
    let mut dtau: Vec<Dual> = tau.iter().map(|&v| Dual::constant(v)).collect();
    for k in 0..3 * n {
        let (slot, idx) = (k / n, k % n);
        let cell: &mut Dual = match slot {
            0 => &mut dq[idx],
            1 => &mut dqd[idx],
            _ => &mut dtau[idx],
        };
        cell.du = 1.0;
        let out = algorithms::aba::<Dual>(chain, &dq, &dqd, &dtau)?;
        for i in 0..n {
            jac[(i, k)] = out[i].du;
        }
        let cell: &mut Dual = match slot {
            0 => &mut dq[idx],
            1 => &mut dqd[idx],
            _ => &mut dtau[idx],
        };
        cell.du = 0.0;
    }
    Ok((value, jac))
}

/// Finite-difference fallback for `dynamics_jacobian`, central differences.
pub fn dynamics_jacobian_fd(
    chain: &KinematicChain,
    q: &[f64],
    qd: &[f64],
    tau: &[f64],
) -> Result<(Vec<f64>, DMatrix<f64>), DynError> {
    let n = chain.nq;
    let value = algorithms::aba::<f64>(chain, q, qd, tau)?;
    let mut jac = DMatrix::zeros(n, 3 * n);
    let mut xq = q.to_vec();
    let mut xqd = qd.to_vec();
    let mut xtau = tau.to_vec();
    for k in 0..3 * n {
        let (slot, idx) = (k / n, k % n);
        let base = match slot {
            0 => xq[idx],
            1 => xqd[idx],
            _ => xtau[idx],
        };
        let h = 1e-6 * base.abs().max(1.0);
        let mut eval = |v: f64| -> Result<Vec<f64>, DynError> {
            match slot {
                0 => xq[idx] = v,
                1 => xqd[idx] = v,
                _ => xtau[idx] = v,
            }
            algorithms::aba::<f64>(chain, &xq, &xqd, &xtau)
        };
        let plus = eval(base + h)?;
        let minus = eval(base - h)?;
        eval(base)?;
        for i in 0..n {
            jac[(i, k)] = (plus[i] - minus[i]) / (2.0 * h);
        }
    }
    Ok((value, jac))
}

#[cfg(test)]
mod tests {
    use super::samples;
    use super::*;
    use approx::assert_relative_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn fk_two_link_straight_and_bent() {
        let chain = samples::two_link_planar(1.0, 1.0, 1.0, 1.0);
        let fk = forward_kinematics(&chain, &[0.0, 0.0]).unwrap();
        assert_relative_eq!(fk.tip.position, Vector3::new(2.0, 0.0, 0.0), epsilon = 1e-14);
        let fk = forward_kinematics(&chain, &[std::f64::consts::FRAC_PI_2, 0.0]).unwrap();
        assert_relative_eq!(fk.tip.position, Vector3::new(0.0, 2.0, 0.0), epsilon = 1e-12);
    }

    #[test]
    fn fk_matches_independent_composition() {
        // Independent oracle: compose per-link transforms with nalgebra's
        // Rotation3 instead of the internal Rodrigues path.
        let mut rng = StdRng::seed_from_u64(7);
        let chain = samples::random_chain(&mut rng, 5);
        let q: Vec<f64> = (0..chain.nq()).map(|_| rng.random_range(-1.5..1.5)).collect();
        let fk = forward_kinematics(&chain, &q).unwrap();

        let mut poses: Vec<(Matrix3<f64>, Vector3<f64>)> = Vec::new();
        for (i, link) in chain.links.iter().enumerate() {
            let (pr, pp) = link
                .parent
                .map_or((Matrix3::identity(), Vector3::zeros()), |p| poses[p]);
            let r_o = mat3(&link.joint.origin_rot);
            let t_o = vec3(&link.joint.origin_trans);
            let axis = nalgebra::Unit::new_normalize(vec3(&link.joint.axis));
            let (rot, trans) = match link.joint.kind {
                JointKind::Revolute => {
                    let qi = q[chain.dof_of_link(i).unwrap()];
                    (r_o * *nalgebra::Rotation3::from_axis_angle(&axis, qi).matrix(), t_o)
                }
                JointKind::Prismatic => {
                    let qi = q[chain.dof_of_link(i).unwrap()];
                    (r_o, t_o + r_o * (*axis * qi))
                }
                JointKind::Fixed => (r_o, t_o),
            };
            poses.push((pr * rot, pp + pr * trans));
        }
        for (got, want) in fk.links.iter().zip(&poses) {
            assert_relative_eq!(got.rotation, want.0, epsilon = 1e-12);
            assert_relative_eq!(got.position, want.1, epsilon = 1e-12);
        }
    }

    #[test]
    fn fk_rejects_out_of_limit_q() {
        let mut chain = samples::two_link_planar(1.0, 1.0, 1.0, 1.0);
        chain.links[0].joint.limits.q = (-1.0, 1.0);
        assert!(matches!(
            forward_kinematics(&chain, &[2.0, 0.0]),
            Err(DynError::OutOfLimits { .. })
        ));
    }

    #[test]
    fn jacobian_two_link_example() {
        let chain = samples::two_link_planar(1.0, 1.0, 1.0, 1.0);
        let j = geometric_jacobian(&chain, &[0.0, 0.0], &chain.tip.clone()).unwrap();
        // Linear block x-row then y-row: [[0, 0], [2, 1]].
        assert_relative_eq!(j[(0, 0)], 0.0, epsilon = 1e-14);
        assert_relative_eq!(j[(0, 1)], 0.0, epsilon = 1e-14);
        assert_relative_eq!(j[(1, 0)], 2.0, epsilon = 1e-14);
        assert_relative_eq!(j[(1, 1)], 1.0, epsilon = 1e-14);
        // Revolute about +z: angular rows are the axis.
        assert_relative_eq!(j[(5, 0)], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let mut rng = StdRng::seed_from_u64(11);
        for trial in 0..5 {
            let chain = samples::random_chain(&mut rng, 2 + trial % 4);
            let q: Vec<f64> = (0..chain.nq()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let frame = chain.tip.clone();
            let j = geometric_jacobian(&chain, &q, &frame).unwrap();
            let h = 1e-6;
            for d in 0..chain.nq() {
                let mut qp = q.clone();
                let mut qm = q.clone();
                qp[d] += h;
                qm[d] -= h;
                let fp = forward_kinematics(&chain, &qp).unwrap().tip;
                let fm = forward_kinematics(&chain, &qm).unwrap().tip;
                let f0 = forward_kinematics(&chain, &q).unwrap().tip;
                let dlin = (fp.position - fm.position) / (2.0 * h);
                // Ṙ = ω̂ R, so ω̂ ≈ ΔR/(2h) · Rᵀ.
                let what = (fp.rotation - fm.rotation) / (2.0 * h) * f0.rotation.transpose();
                let dang = Vector3::new(what[(2, 1)], what[(0, 2)], what[(1, 0)]);
                for r in 0..3 {
                    assert!((j[(r, d)] - dlin[r]).abs() <= 1e-6, "lin row {r} dof {d}");
                    assert!((j[(r + 3, d)] - dang[r]).abs() <= 1e-6, "ang row {r} dof {d}");
                }
            }
        }
    }

    #[test]
    fn prismatic_column_has_zero_angular_part() {
        let mut rng = StdRng::seed_from_u64(3);
        let chain = samples::random_chain(&mut rng, 4);
        let q: Vec<f64> = vec![0.3; chain.nq()];
        let j = geometric_jacobian(&chain, &q, &chain.tip.clone()).unwrap();
        for (i, link) in chain.links.iter().enumerate() {
            if link.joint.kind == JointKind::Prismatic {
                let d = chain.dof_of_link(i).unwrap();
                for r in 3..6 {
                    assert_eq!(j[(r, d)], 0.0);
                }
            }
        }
    }

    #[test]
    fn pendulum_equilibrium_and_horizontal() {
        let chain = samples::pendulum(1.0, 1.0);
        // Hanging straight down is an equilibrium.
        let qdd = aba_forward_dynamics(&chain, &[-std::f64::consts::FRAC_PI_2], &[0.0], &[0.0])
            .unwrap();
        assert!(qdd[0].abs() < 1e-12);
        // Horizontal: q̈ = -(g/l)·cos θ = -9.81.
        let qdd = aba_forward_dynamics(&chain, &[0.0], &[0.0], &[0.0]).unwrap();
        assert_relative_eq!(qdd[0], -9.81, epsilon = 1e-12);
        // Lagrangian oracle at an arbitrary angle.
        let th = 0.37;
        let qdd = aba_forward_dynamics(&chain, &[th], &[0.0], &[0.0]).unwrap();
        assert_relative_eq!(qdd[0], -9.81 * th.cos(), epsilon = 1e-12);
    }

    #[test]
    fn aba_rnea_round_trip() {
        let mut rng = StdRng::seed_from_u64(21);
        for trial in 0..20 {
            let chain = samples::random_chain(&mut rng, 1 + trial % 6);
            let n = chain.nq();
            let q: Vec<f64> = (0..n).map(|_| rng.random_range(-1.5..1.5)).collect();
            let qd: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let tau: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
            let qdd = aba_forward_dynamics(&chain, &q, &qd, &tau).unwrap();
            let tau_back = inverse_dynamics(&chain, &q, &qd, &qdd);
            for i in 0..n {
                assert!(
                    (tau[i] - tau_back[i]).abs() < 1e-9,
                    "trial {trial} joint {i}: {} vs {}",
                    tau[i],
                    tau_back[i]
                );
            }
        }
    }

    #[test]
    fn aba_matches_mass_matrix_solve() {
        let mut rng = StdRng::seed_from_u64(5);
        for trial in 0..10 {
            let chain = samples::random_chain(&mut rng, 3);
            let n = chain.nq();
            let q: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let qd: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let tau: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
            let qdd = aba_forward_dynamics(&chain, &q, &qd, &tau).unwrap();
            // Bias = C q̇ + g = inverse dynamics at zero acceleration.
            let bias = inverse_dynamics(&chain, &q, &qd, &vec![0.0; n]);
            let m = mass_matrix(&chain, &q);
            let rhs =
                nalgebra::DVector::from_iterator(n, tau.iter().zip(&bias).map(|(t, b)| t - b));
            let sol = m.lu().solve(&rhs).unwrap();
            for i in 0..n {
                assert!((qdd[i] - sol[i]).abs() < 1e-8, "trial {trial} joint {i}");
            }
        }
    }

    #[test]
    fn mass_matrix_two_link_closed_form() {
        // Point masses at the link tips: standard two-link formula with
        // lc = l and zero rotor inertia.
        let (l1, l2, m1, m2) = (1.0, 0.8, 1.3, 0.7);
        let chain = samples::two_link_planar(l1, l2, m1, m2);
        for q2 in [0.0, 0.4, -1.1] {
            let m = mass_matrix(&chain, &[0.3, q2]);
            let c2 = q2.cos();
            let m11 = m1 * l1 * l1 + m2 * (l1 * l1 + l2 * l2 + 2.0 * l1 * l2 * c2);
            let m12 = m2 * (l2 * l2 + l1 * l2 * c2);
            let m22 = m2 * l2 * l2;
            assert_relative_eq!(m[(0, 0)], m11, epsilon = 1e-12);
            assert_relative_eq!(m[(0, 1)], m12, epsilon = 1e-12);
            assert_relative_eq!(m[(1, 0)], m12, epsilon = 1e-12);
            assert_relative_eq!(m[(1, 1)], m22, epsilon = 1e-12);
        }
        // Single point-mass pendulum: M = [m l²].
        let p = samples::pendulum(1.0, 1.0);
        let m = mass_matrix(&p, &[0.2]);
        assert_relative_eq!(m[(0, 0)], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn mass_matrix_symmetric_positive_definite() {
        let mut rng = StdRng::seed_from_u64(13);
        for _ in 0..10 {
            let chain = samples::random_chain(&mut rng, 5);
            let q: Vec<f64> =
                (0..chain.nq()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let m = mass_matrix(&chain, &q);
            let sym_err = (&m - m.transpose()).abs().max();
            assert!(sym_err <= 1e-10, "symmetry error {sym_err}");
            let eig = m.clone().symmetric_eigen().eigenvalues;
            assert!(eig.iter().all(|&e| e > 0.0), "eigenvalues {eig:?}");
        }
    }

    #[test]
    fn static_torques_match_planar_gravity_formula() {
        let (l1, l2, m1, m2) = (1.0, 0.8, 1.3, 0.7);
        let g = 9.81;
        let chain = samples::two_link_planar(l1, l2, m1, m2);
        let (q1, q2) = (0.5, -0.3);
        let tau = inverse_dynamics(&chain, &[q1, q2], &[0.0, 0.0], &[0.0, 0.0]);
        let t2 = g * m2 * l2 * (q1 + q2).cos();
        let t1 = g * ((m1 + m2) * l1 * q1.cos()) + t2;
        assert_relative_eq!(tau[0], t1, epsilon = 1e-10);
        assert_relative_eq!(tau[1], t2, epsilon = 1e-10);
        // No gravity, no motion: zero torques.
        let mut chain0 = chain.clone();
        chain0.gravity = [0.0; 3];
        let tau0 = inverse_dynamics(&chain0, &[q1, q2], &[0.0, 0.0], &[0.0, 0.0]);
        assert!(tau0.iter().all(|t| t.abs() < 1e-14));
    }

    #[test]
    fn kinetic_energy_matches_quadratic_form() {
        let mut rng = StdRng::seed_from_u64(17);
        let chain = samples::random_chain(&mut rng, 4);
        let n = chain.nq();
        let q: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let qd: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let e = energy(&chain, &q, &qd);
        let m = mass_matrix(&chain, &q);
        let v = nalgebra::DVector::from_vec(qd.clone());
        let ke = 0.5 * (v.transpose() * &m * &v)[(0, 0)];
        assert_relative_eq!(e.kinetic, ke, epsilon = 1e-10);
    }

    #[test]
    fn unforced_rk4_conserves_energy() {
        let chain = samples::two_link_planar(1.0, 0.8, 1.3, 0.7);
        let mut q = vec![0.4, -0.2];
        let mut qd = vec![1.0, -0.5];
        let tau = vec![0.0, 0.0];
        let e0 = energy(&chain, &q, &qd).total();
        let dt = 1e-3;
        for _ in 0..1000 {
            let (q1, qd1) = integrate_rk4(&chain, &q, &qd, &tau, dt).unwrap();
            q = q1;
            qd = qd1;
        }
        let e1 = energy(&chain, &q, &qd).total();
        assert!(
            ((e1 - e0) / e0).abs() <= 1e-3,
            "energy drift {} -> {}",
            e0,
            e1
        );
    }

    #[test]
    fn fixed_tail_link_leaves_fk_unchanged() {
        let chain = samples::two_link_planar(1.0, 1.0, 1.0, 1.0);
        let q = [0.7, -0.4];
        let base = forward_kinematics(&chain, &q).unwrap();

        let mut links = chain.links.clone();
        let tail_parent = chain.tip.link;
        links.push(Link {
            name: "tip_fixture".into(),
            parent: Some(tail_parent),
            joint: Joint::fixed(IDENTITY3, chain.tip.translation),
            mass: 0.0,
            com: [0.0; 3],
            inertia_com: [[0.0; 3]; 3],
        });
        let n = links.len();
        let extended =
            KinematicChain::new("extended", chain.gravity, links, FrameRef::link_origin(n - 1))
                .unwrap();
        let fk = forward_kinematics(&extended, &q).unwrap();
        assert_eq!(fk.tip.position, base.tip.position);
        assert_eq!(fk.tip.rotation, base.tip.rotation);
    }

    #[test]
    fn dual_dynamics_jacobian_matches_finite_differences() {
        let mut rng = StdRng::seed_from_u64(29);
        for _ in 0..5 {
            let chain = samples::random_chain(&mut rng, 4);
            let n = chain.nq();
            let q: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let qd: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let tau: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
            let (val_ad, jac_ad) = dynamics_jacobian(&chain, &q, &qd, &tau).unwrap();
            let (val_fd, jac_fd) = dynamics_jacobian_fd(&chain, &q, &qd, &tau).unwrap();
            for i in 0..n {
                assert_relative_eq!(val_ad[i], val_fd[i], epsilon = 1e-12);
                for k in 0..3 * n {
                    let scale = jac_ad[(i, k)].abs().max(1.0);
                    assert!(
                        (jac_ad[(i, k)] - jac_fd[(i, k)]).abs() <= 1e-5 * scale,
                        "({i},{k}): ad {} fd {}",
                        jac_ad[(i, k)],
                        jac_fd[(i, k)]
                    );
                }
            }
        }
    }

    #[test]
    fn rejects_malformed_models() {
        let mk = |f: &dyn Fn(&mut Link)| {
            let mut link = Link {
                name: "l".into(),
                parent: None,
                joint: Joint::revolute([0.0, 0.0, 1.0], [0.0; 3]),
                mass: 1.0,
                com: [0.1, 0.0, 0.0],
                inertia_com: [[0.0; 3]; 3],
            };
            f(&mut link);
            KinematicChain::new("bad", [0.0, 0.0, -9.81], vec![link], FrameRef::link_origin(0))
        };
        assert!(mk(&|l| l.mass = -1.0).is_err());
        assert!(mk(&|l| l.joint.axis = [0.0; 3]).is_err());
        assert!(mk(&|l| l.joint.limits.q = (1.0, -1.0)).is_err());
        assert!(mk(&|l| l.inertia_com[0][1] = 0.5).is_err());
        assert!(mk(&|_| {}).is_ok());
    }
}
