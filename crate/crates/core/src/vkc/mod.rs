//! Tool descriptors and virtual kinematic chains.
//!
//! A tool is a rigid body (optionally with underactuated internal joints)
//! carrying a list of candidate bases: frames on its surface tagged with the
//! roles they can play. An affordance basis is where the gripper holds the
//! tool; a functional basis is where the tool touches the world. Fixing a
//! basis pair welds the tool onto the robot tip through a virtual joint,
//! yielding one combined chain whose tip is the functional basis.

pub mod samples;

use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::dynamics::{
    self, DynError, FrameRef, Joint, JointKind, JointLimits, KinematicChain, Link,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoleMask {
    pub affordance: bool,
    pub functional: bool,
}

impl RoleMask {
    pub const AFFORDANCE: RoleMask = RoleMask { affordance: true, functional: false };
    pub const FUNCTIONAL: RoleMask = RoleMask { affordance: false, functional: true };
    pub const BOTH: RoleMask = RoleMask { affordance: true, functional: true };
}

/// A candidate grasp or contact frame on the tool surface.
#[derive(Debug, Clone)]
pub struct Basis {
    pub label: String,
    /// Which tool body the basis sits on: 0 = root, k = k-th internal link.
    pub link: usize,
    /// Basis frame pose in its body's frame.
    pub rotation: [[f64; 3]; 3],
    pub translation: [f64; 3],
    /// Outward unit surface normal, expressed in the basis frame.
    pub normal: [f64; 3],
    pub roles: RoleMask,
}

#[derive(Debug, Clone)]
pub struct ToolDescriptor {
    pub name: String,
    pub mass: f64,
    /// COM and rotational inertia of the root body, tool-root frame.
    pub com: [f64; 3],
    pub inertia_com: [[f64; 3]; 3],
    pub bases: Vec<Basis>,
    /// Underactuated internal joints; `parent: None` hangs off the tool root.
    pub internal_joints: Vec<Link>,
}

impl ToolDescriptor {
    pub fn basis(&self, label: &str) -> Result<&Basis, VkcError> {
        self.bases
            .iter()
            .find(|b| b.label == label)
            .ok_or_else(|| VkcError::UnknownBasis(label.to_string()))
    }

    /// All ordered (affordance, functional) pairs of distinct bases, in
    /// declaration order.
    pub fn valid_pairs(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for a in &self.bases {
            if !a.roles.affordance {
                continue;
            }
            for f in &self.bases {
                if f.roles.functional && f.label != a.label {
                    out.push((a.label.clone(), f.label.clone()));
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<(), VkcError> {
        if !self.bases.iter().any(|b| b.roles.affordance) {
            return Err(VkcError::NoValidPair(self.name.clone()));
        }
        if !self.bases.iter().any(|b| b.roles.functional) {
            return Err(VkcError::NoValidPair(self.name.clone()));
        }
        for b in &self.bases {
            let n = vec3(&b.normal).norm();
            if (n - 1.0).abs() > 1e-9 {
                return Err(VkcError::BadNormal(b.label.clone()));
            }
            if b.link > self.internal_joints.len() {
                return Err(VkcError::UnknownBasis(format!(
                    "{} references missing tool link {}",
                    b.label, b.link
                )));
            }
        }
        Ok(())
    }
}

/// How the tool hangs on the gripper.
#[derive(Debug, Clone)]
pub enum VirtualJoint {
    /// Rigid grasp, no extra state.
    Fixed,
    /// Unactuated hinge about `axis` (gripper frame).
    Hinge { axis: [f64; 3], limits: JointLimits },
}

#[derive(Debug, Clone, Error)]
pub enum VkcError {
    #[error("tool `{0}` has no valid (affordance, functional) basis pair")]
    NoValidPair(String),
    #[error("basis `{label}` cannot serve as {needed}")]
    IncompatibleRoles { label: String, needed: &'static str },
    #[error("unknown basis `{0}`")]
    UnknownBasis(String),
    #[error("basis `{0}` normal is not unit length")]
    BadNormal(String),
    #[error(transparent)]
    Chain(#[from] DynError),
}

/// Robot + virtual joint + tool, planned as one chain.
#[derive(Debug, Clone)]
pub struct Vkc {
    pub chain: KinematicChain,
    pub affordance: String,
    pub functional: String,
    /// Degrees of freedom contributed by the robot (first in dof order).
    pub robot_nq: usize,
    /// Degrees of freedom of the virtual joint (0 or 1).
    pub virtual_nq: usize,
    /// Degrees of freedom of tool internal joints.
    pub tool_nq: usize,
    normal_local: [f64; 3],
}

impl Vkc {
    /// Wrap a bare chain as a tool-free VKC whose functional frame is the
    /// chain tip, with the given tip-frame surface normal.
    pub fn from_chain(chain: KinematicChain, normal_local: [f64; 3]) -> Vkc {
        let robot_nq = chain.nq();
        Vkc {
            chain,
            affordance: String::new(),
            functional: String::new(),
            robot_nq,
            virtual_nq: 0,
            tool_nq: 0,
            normal_local,
        }
    }

    pub fn nq(&self) -> usize {
        self.chain.nq()
    }

    /// Functional-basis surface normal in the tip frame.
    pub fn functional_normal_local(&self) -> [f64; 3] {
        self.normal_local
    }

    /// World-frame surface normal of the functional basis at configuration q.
    pub fn functional_normal(&self, q: &[f64]) -> Result<Vector3<f64>, DynError> {
        let fk = dynamics::forward_kinematics(&self.chain, q)?;
        Ok(fk.tip.rotation * vec3(&self.normal_local))
    }
}

fn vec3(v: &[f64; 3]) -> Vector3<f64> {
    Vector3::new(v[0], v[1], v[2])
}

fn mat3(m: &[[f64; 3]; 3]) -> Matrix3<f64> {
    Matrix3::from_fn(|r, c| m[r][c])
}

fn to_rows(m: &Matrix3<f64>) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for r in 0..3 {
        for c in 0..3 {
            out[r][c] = m[(r, c)];
        }
    }
    out
}

/// Minimal rotation carrying unit vector `a` onto unit vector `b`; for
/// anti-parallel inputs, a half-turn about an arbitrary perpendicular.
pub fn rotation_between(a: &Vector3<f64>, b: &Vector3<f64>) -> Matrix3<f64> {
    let k = a.cross(b);
    let c = a.dot(b);
    let s2 = k.norm_squared();
    if s2 < 1e-24 {
        if c > 0.0 {
            return Matrix3::identity();
        }
        // Pick any axis perpendicular to a.
        let helper = if a.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
        let axis = a.cross(&helper).normalize();
        let kx = skew(&axis);
        return Matrix3::identity() + 2.0 * kx * kx;
    }
    let kx = skew(&k);
    Matrix3::identity() + kx + kx * kx * ((1.0 - c) / s2)
}

fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Draw one ordered (affordance, functional) basis pair uniformly over the
/// tool's valid pairs; deterministic in the seed.
pub fn sample_bases(tool: &ToolDescriptor, seed: u64) -> Result<(String, String), VkcError> {
    tool.validate()?;
    let pairs = tool.valid_pairs();
    if pairs.is_empty() {
        return Err(VkcError::NoValidPair(tool.name.clone()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let idx = rng.random_range(0..pairs.len());
    Ok(pairs[idx].clone())
}

/// Weld `tool` onto `robot`'s tip through `virtual_joint`, grasped at basis
/// `affordance`, with basis `functional` becoming the new tip frame.
///
/// The grasp poses the tool so the affordance frame sits at the gripper
/// origin with its surface normal anti-parallel to the gripper z-axis (the
/// approach direction), using the minimal such rotation.
pub fn construct_vkc(
    robot: &KinematicChain,
    tool: &ToolDescriptor,
    affordance: &str,
    functional: &str,
    virtual_joint: &VirtualJoint,
) -> Result<Vkc, VkcError> {
    tool.validate()?;
    let ba = tool.basis(affordance)?;
    let bf = tool.basis(functional)?;
    if !ba.roles.affordance {
        return Err(VkcError::IncompatibleRoles { label: ba.label.clone(), needed: "affordance" });
    }
    if !bf.roles.functional {
        return Err(VkcError::IncompatibleRoles { label: bf.label.clone(), needed: "functional" });
    }
    if ba.label == bf.label {
        return Err(VkcError::IncompatibleRoles {
            label: ba.label.clone(),
            needed: "two distinct bases",
        });
    }
    if ba.link != 0 {
        return Err(VkcError::IncompatibleRoles {
            label: ba.label.clone(),
            needed: "a grasp on the tool root body",
        });
    }

    // Tool-root pose in the gripper frame: align, then undo the basis offset.
    let n_a = mat3(&ba.rotation) * vec3(&ba.normal);
    let r_align = rotation_between(&n_a, &Vector3::new(0.0, 0.0, -1.0));
    let r_basis = mat3(&ba.rotation);
    let t_basis = vec3(&ba.translation);
    // (R_align, 0) ∘ (R_basis, t_basis)⁻¹.
    let r_root = r_align * r_basis.transpose();
    let t_root = -(r_root * t_basis);

    // Gripper frame in the last-robot-link frame.
    let r_tip = mat3(&robot.tip.rotation);
    let t_tip = vec3(&robot.tip.translation);
    let origin_rot = r_tip * r_root;
    let origin_trans = t_tip + r_tip * t_root;

    let mut links = robot.links.clone();
    let tool_root_parent = robot.tip.link;
    let (joint, virtual_nq) = match virtual_joint {
        VirtualJoint::Fixed => (
            Joint::fixed(to_rows(&origin_rot), [origin_trans.x, origin_trans.y, origin_trans.z]),
            0,
        ),
        VirtualJoint::Hinge { axis, limits } => (
            Joint {
                kind: JointKind::Revolute,
                axis: *axis,
                origin_rot: to_rows(&origin_rot),
                origin_trans: [origin_trans.x, origin_trans.y, origin_trans.z],
                limits: *limits,
                actuated: false,
            },
            1,
        ),
    };
    let tool_root_idx = links.len();
    links.push(Link {
        name: format!("tool:{}", tool.name),
        parent: Some(tool_root_parent),
        joint,
        mass: tool.mass,
        com: tool.com,
        inertia_com: tool.inertia_com,
    });

    let mut tool_link_idx = vec![tool_root_idx];
    let mut tool_nq = 0;
    for internal in &tool.internal_joints {
        let mut link = internal.clone();
        link.name = format!("tool:{}:{}", tool.name, internal.name);
        link.parent = Some(match internal.parent {
            None => tool_root_idx,
            Some(k) => tool_link_idx[k + 1],
        });
        if link.joint.kind != JointKind::Fixed {
            link.joint.actuated = false;
            tool_nq += 1;
        }
        tool_link_idx.push(links.len());
        links.push(link);
    }

    let tip = FrameRef {
        link: tool_link_idx[bf.link],
        rotation: bf.rotation,
        translation: bf.translation,
    };
    let chain = KinematicChain::new(
        format!("{}+{}", robot.name, tool.name),
        robot.gravity,
        links,
        tip,
    )?;
    Ok(Vkc {
        chain,
        affordance: ba.label.clone(),
        functional: bf.label.clone(),
        robot_nq: robot.nq(),
        virtual_nq,
        tool_nq,
        normal_local: bf.normal,
    })
}
