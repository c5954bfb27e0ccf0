//! Shared desk-scale fixtures: a 3-link planar arm, two hand tools, and the
//! crack/cut task definitions wiring them to simulator scenarios.

use crate::dynamics::{samples::planar_arm_xz, KinematicChain, IDENTITY3};
use crate::effectsim::samples::{carrot_cut, walnut_crack};
use crate::vkc::{Basis, RoleMask, ToolDescriptor};

use super::TaskDefinition;

/// 3-link arm working in the x-z plane, 0.75 m reach.
pub fn desk_arm() -> KinematicChain {
    planar_arm_xz(&[0.3, 0.25, 0.2], &[2.0, 1.5, 1.0])
}

fn basis(label: &str, translation: [f64; 3], normal: [f64; 3], roles: RoleMask) -> Basis {
    Basis {
        label: label.to_string(),
        link: 0,
        rotation: IDENTITY3,
        translation,
        normal,
        roles,
    }
}

/// Claw hammer: two grasp points on the handle, striking face and side face
/// on the head. Four (affordance, functional) pairs.
pub fn hammer() -> ToolDescriptor {
    ToolDescriptor {
        name: "hammer".to_string(),
        mass: 0.6,
        com: [0.2, 0.0, 0.0],
        inertia_com: [[0.001, 0.0, 0.0], [0.0, 0.004, 0.0], [0.0, 0.0, 0.004]],
        bases: vec![
            basis("grip_mid", [0.08, 0.0, 0.0], [0.0, 0.0, 1.0], RoleMask::AFFORDANCE),
            basis("grip_end", [0.02, 0.0, 0.0], [0.0, 0.0, 1.0], RoleMask::AFFORDANCE),
            basis("face_down", [0.25, 0.0, -0.035], [0.0, 0.0, -1.0], RoleMask::FUNCTIONAL),
            basis("face_side", [0.285, 0.0, 0.0], [1.0, 0.0, 0.0], RoleMask::FUNCTIONAL),
        ],
        internal_joints: Vec::new(),
    }
}

/// Kitchen knife: one grasp, one cutting edge. A single valid pair.
pub fn knife() -> ToolDescriptor {
    ToolDescriptor {
        name: "knife".to_string(),
        mass: 0.15,
        com: [0.09, 0.0, -0.02],
        inertia_com: [[2e-4, 0.0, 0.0], [0.0, 5e-4, 0.0], [0.0, 0.0, 5e-4]],
        bases: vec![
            basis("grip", [0.03, 0.0, 0.0], [0.0, 0.0, 1.0], RoleMask::AFFORDANCE),
            basis("edge", [0.12, 0.0, -0.05], [0.0, 0.0, -1.0], RoleMask::FUNCTIONAL),
        ],
        internal_joints: Vec::new(),
    }
}

/// Walnut placed in the arm's workspace; contact point on top of the shell.
pub fn crack_task() -> TaskDefinition {
    let mut sc = walnut_crack();
    sc.body.center[0] = 0.45;
    sc.strike_x = 0.45;
    let top = sc.body.center[1] + sc.body.radius;
    TaskDefinition::crack(sc, [0.45, 0.0, top])
}

/// Carrot placed in the arm's workspace; contact point on top, mid-length.
pub fn cut_task() -> TaskDefinition {
    let mut sc = carrot_cut();
    sc.body.center[0] = 0.40;
    sc.strike_x = 0.40;
    let top = sc.body.center[1] + sc.body.radius;
    TaskDefinition::cut(sc, [0.40, 0.0, top])
}
