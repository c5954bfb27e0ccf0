//! Shipped synthetic demonstrations: human-style tool-tip swings standing in
//! for motion capture. Both end at the strike point moving straight down.

use super::DemoPath;

/// Circular-arc swing ending at `p_g` with downward velocity. The arc center
/// sits at `p_g + [side * radius, 0, 0]`; the sweep angle closes
/// quadratically in time, so the tip accelerates through the swing and
/// arrives at speed `2 * radius * sweep / duration`.
fn arc_swing(
    name: &str,
    p_g: [f64; 3],
    radius: f64,
    sweep: f64,
    duration: f64,
    side: f64,
) -> DemoPath {
    let n = 40usize;
    let mut times = Vec::with_capacity(n + 1);
    let mut points = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let t = duration * k as f64 / n as f64;
        let s = 1.0 - t / duration;
        let phi = sweep * s * s;
        // phi = 0 is the impact pose; the radius vector there is horizontal,
        // so the tip velocity is vertical.
        points.push([
            p_g[0] + side * radius * (1.0 - phi.cos()),
            p_g[1],
            p_g[2] + radius * phi.sin(),
        ]);
        times.push(t);
    }
    DemoPath {
        name: name.to_string(),
        affordance: "grip_mid".to_string(),
        functional: "face_down".to_string(),
        times,
        points,
    }
}

/// High wind-up from behind the strike axis, arriving at about 1.0 m/s.
pub fn overhead_swing(p_g: [f64; 3]) -> DemoPath {
    arc_swing("overhead_swing", p_g, 0.25, 1.4, 0.7, -1.0)
}

/// Flatter approach from the far side, arriving at about 0.72 m/s.
pub fn side_swing(p_g: [f64; 3]) -> DemoPath {
    arc_swing("side_swing", p_g, 0.18, 1.2, 0.6, 1.0)
}
