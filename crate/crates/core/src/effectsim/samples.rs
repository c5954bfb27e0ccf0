//! Shipped effect scenarios. The material constants are surrogate values
//! tuned so every effect class is reachable inside the sampled speed range;
//! they are configuration, not measured properties.

use super::{LatticeSpec, Scenario, ToolShape};

/// Center height that puts the disc's bottom lattice row exactly on the
/// ground, so the body starts at rest instead of falling onto it.
fn resting_height(radius: f64, spacing: f64) -> f64 {
    let row = spacing * 3f64.sqrt() / 2.0;
    (radius / row).floor() * row
}

/// Walnut-cracking strike: a hammer face descending onto a stiff shell disc
/// resting on the ground.
pub fn walnut_crack() -> Scenario {
    Scenario {
        body: LatticeSpec {
            center: [0.0, resting_height(0.03, 0.006)],
            radius: 0.03,
            spacing: 0.006,
            youngs: 5e4,
            fracture_strain: 0.028,
            thickness: 0.01,
            density: 800.0,
            damping_ratio: 0.12,
            ground_z: 0.0,
            gravity: super::GRAVITY,
        },
        shape: ToolShape { half_length: 0.02, radius: 0.004 },
        rest_angle: 0.0,
        strike_x: 0.0,
        speed_range: (0.1, 3.0),
        tilt_range: (-0.3, 0.3),
        approach: 0.002,
        follow_through: 0.0,
        follow_time: 0.005,
        aftermath: 0.03,
        dt: 2e-5,
        jitter: 0.10,
        thresholds: (2, 6),
    }
}

/// Carrot-cutting stroke: a knife blade standing on end, descending through
/// a softer disc; tilting the blade widens the contact and spoils the cut.
pub fn carrot_cut() -> Scenario {
    Scenario {
        body: LatticeSpec {
            center: [0.0, resting_height(0.012, 0.003)],
            radius: 0.012,
            spacing: 0.003,
            youngs: 2e4,
            fracture_strain: 0.09,
            thickness: 0.02,
            density: 1000.0,
            damping_ratio: 0.10,
            ground_z: 0.0,
            gravity: super::GRAVITY,
        },
        shape: ToolShape { half_length: 0.025, radius: 0.0012 },
        rest_angle: std::f64::consts::FRAC_PI_2,
        strike_x: 0.0,
        speed_range: (0.05, 0.6),
        tilt_range: (-0.8, 0.8),
        approach: 0.002,
        follow_through: 0.03,
        follow_time: 0.0,
        aftermath: 0.35,
        dt: 2e-5,
        jitter: 0.10,
        thresholds: (2, 6),
    }
}
