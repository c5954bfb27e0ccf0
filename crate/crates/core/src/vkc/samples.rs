//! Hand-authored tool descriptors used by tests and the built-in demo.
//! The on-disk corpus under data/tools mirrors these.

use super::{Basis, RoleMask, ToolDescriptor};
use crate::dynamics::IDENTITY3;

/// Claw-hammer stand-in: handle along +x, head at the far end, striking face
/// pointing -z so a level handle strikes downward.
pub fn hammer() -> ToolDescriptor {
    ToolDescriptor {
        name: "hammer".into(),
        mass: 0.6,
        com: [0.2, 0.0, 0.0],
        inertia_com: [
            [0.0004, 0.0, 0.0],
            [0.0, 0.0045, 0.0],
            [0.0, 0.0, 0.0045],
        ],
        bases: vec![
            Basis {
                label: "handle".into(),
                link: 0,
                rotation: IDENTITY3,
                translation: [0.06, 0.0, 0.0],
                normal: [0.0, 0.0, 1.0],
                roles: RoleMask::AFFORDANCE,
            },
            Basis {
                label: "neck".into(),
                link: 0,
                rotation: IDENTITY3,
                translation: [0.2, 0.0, 0.0],
                normal: [0.0, 0.0, 1.0],
                roles: RoleMask::AFFORDANCE,
            },
            Basis {
                label: "head_top".into(),
                link: 0,
                rotation: IDENTITY3,
                translation: [0.25, 0.0, -0.035],
                normal: [0.0, 0.0, -1.0],
                roles: RoleMask::FUNCTIONAL,
            },
            Basis {
                label: "head_side".into(),
                link: 0,
                rotation: IDENTITY3,
                translation: [0.28, 0.0, 0.01],
                normal: [1.0, 0.0, 0.0],
                roles: RoleMask::FUNCTIONAL,
            },
        ],
        internal_joints: vec![],
    }
}

/// Kitchen-knife stand-in: blade along +x, cutting edge facing -z.
pub fn knife() -> ToolDescriptor {
    ToolDescriptor {
        name: "knife".into(),
        mass: 0.15,
        com: [0.12, 0.0, 0.0],
        inertia_com: [
            [0.00002, 0.0, 0.0],
            [0.0, 0.0008, 0.0],
            [0.0, 0.0, 0.0008],
        ],
        bases: vec![
            Basis {
                label: "handle".into(),
                link: 0,
                rotation: IDENTITY3,
                translation: [0.05, 0.0, 0.0],
                normal: [0.0, 0.0, 1.0],
                roles: RoleMask::AFFORDANCE,
            },
            Basis {
                label: "edge".into(),
                link: 0,
                rotation: IDENTITY3,
                translation: [0.17, 0.0, -0.012],
                normal: [0.0, 0.0, -1.0],
                roles: RoleMask::FUNCTIONAL,
            },
            Basis {
                label: "spine".into(),
                link: 0,
                rotation: IDENTITY3,
                translation: [0.17, 0.0, 0.012],
                normal: [0.0, 0.0, 1.0],
                roles: RoleMask::FUNCTIONAL,
            },
        ],
        internal_joints: vec![],
    }
}
