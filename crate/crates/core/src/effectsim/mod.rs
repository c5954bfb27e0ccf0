//! Desk-scale effect simulator: a deformable disc in the world x-z plane,
//! struck or cut by a rigid kinematic tool, with strain-threshold fracture.
//!
//! The disc is a triangular lattice of point masses joined by springs and
//! dashpots; the tool is a capsule (a segment with a contact radius) driven
//! along a prescribed pose trajectory and coupled to the body by one-sided
//! penalty forces. A spring whose tensile strain exceeds the fracture limit
//! breaks permanently, so fragment count never decreases. Every step logs
//! the property schema the learning pipeline consumes: contact force and
//! area, strain, energies, tool motion, and fragment count.

pub mod samples;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::sregress::{Level, SregressError, VariableColumn, VariableTable};

/// Downward (-z) gravity, m/s^2.
pub const GRAVITY: f64 = 9.81;

/// Penalty contact stiffness as a multiple of the spring stiffness.
const CONTACT_STIFFNESS_RATIO: f64 = 100.0;

/// Lattice-site jitter as a fraction of the spacing; breaks the perfect
/// symmetry that would make crack paths degenerate.
const POSITION_JITTER: f64 = 0.02;

/// Any particle exceeding this speed aborts the run as unstable.
const SPEED_LIMIT: f64 = 1e3;

#[derive(Debug, Clone, Error)]
pub enum SimError {
    #[error("time step {0:.3e} s outside (0, 1e-3]")]
    BadTimeStep(f64),
    #[error("duration {duration:.6e} s is not a whole number of {dt:.3e} s steps")]
    BadDuration { duration: f64, dt: f64 },
    #[error(
        "particle {particle} reached {speed:.3e} m/s at t = {time:.6} s; \
         integration unstable (reduce dt or stiffness)"
    )]
    Instability { particle: usize, speed: f64, time: f64 },
    #[error("tool profile invalid: {0}")]
    BadTool(String),
    #[error(transparent)]
    Table(#[from] SregressError),
}

#[derive(Debug, Clone, Copy)]
pub struct Particle {
    /// Position in the x-z plane, m.
    pub pos: [f64; 2],
    /// Velocity, m/s.
    pub vel: [f64; 2],
    pub mass: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct Spring {
    pub a: usize,
    pub b: usize,
    /// Rest length, m; always > 0.
    pub rest: f64,
    /// Stiffness, N/m.
    pub stiffness: f64,
    /// Broken springs exert no force and never heal.
    pub broken: bool,
}

/// Lattice build parameters. Stiffness and mass derive from continuum-like
/// inputs: each spring gets k = (sqrt(3)/2) * youngs * thickness (the
/// triangular-lattice equivalence), each particle the mass of one hexagonal
/// cell of the sheet.
#[derive(Debug, Clone)]
pub struct LatticeSpec {
    /// Disc center in the x-z plane, m.
    pub center: [f64; 2],
    pub radius: f64,
    pub spacing: f64,
    /// Young's-modulus-like stiffness scalar, Pa.
    pub youngs: f64,
    /// Tensile strain beyond which a spring breaks.
    pub fracture_strain: f64,
    /// Out-of-plane thickness, m; scales stiffness and mass.
    pub thickness: f64,
    /// Material density, kg/m^3.
    pub density: f64,
    /// Spring dashpots as a fraction of critical damping.
    pub damping_ratio: f64,
    /// Ground plane height, m; particles below it are pushed back up.
    pub ground_z: f64,
    /// Gravity magnitude, m/s^2 (-z direction).
    pub gravity: f64,
}

#[derive(Debug, Clone)]
pub struct DeformableBody {
    pub particles: Vec<Particle>,
    pub springs: Vec<Spring>,
    /// Tensile strain beyond which a spring breaks.
    pub fracture_strain: f64,
    /// Dashpot coefficient shared by all springs and ground contact, N*s/m.
    pub dashpot: f64,
    /// Penalty stiffness for tool and ground contact, N/m.
    pub contact_stiffness: f64,
    pub ground_z: f64,
    pub gravity: f64,
    /// Lattice spacing, m; one contacting particle counts this much extent.
    pub spacing: f64,
}

/// Triangular-lattice disc. Sites are jittered by a small seeded offset and
/// springs take the jittered distance as rest length, so the built body is
/// exactly at rest.
pub fn build_body(spec: &LatticeSpec, seed: u64) -> DeformableBody {
    assert!(spec.spacing > 0.0, "spacing must be positive");
    assert!(spec.radius >= spec.spacing, "radius must cover one spacing");
    assert!(spec.fracture_strain > 0.0, "fracture strain must be positive");
    assert!(
        spec.youngs > 0.0 && spec.thickness > 0.0 && spec.density > 0.0,
        "material parameters must be positive"
    );

    let a = spec.spacing;
    let half_rt3 = 3.0f64.sqrt() / 2.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Axial sweep of the triangular lattice, kept when inside the disc.
    let extent = (spec.radius / a).ceil() as i64 + 1;
    let mut index = std::collections::BTreeMap::new();
    let mut sites = Vec::new();
    for j in -extent..=extent {
        for i in -(2 * extent)..=(2 * extent) {
            let x = a * (i as f64 + 0.5 * j as f64);
            let z = a * half_rt3 * j as f64;
            if (x * x + z * z).sqrt() <= spec.radius + 1e-12 {
                index.insert((i, j), sites.len());
                sites.push([spec.center[0] + x, spec.center[1] + z]);
            }
        }
    }

    let mass = spec.density * spec.thickness * half_rt3 * a * a;
    let particles: Vec<Particle> = sites
        .iter()
        .map(|p| {
            let jx = rng.random_range(-POSITION_JITTER..POSITION_JITTER) * a;
            let jz = rng.random_range(-POSITION_JITTER..POSITION_JITTER) * a;
            Particle { pos: [p[0] + jx, p[1] + jz], vel: [0.0; 2], mass }
        })
        .collect();

    let stiffness = half_rt3 * spec.youngs * spec.thickness;
    let mut springs = Vec::new();
    // Each undirected lattice edge exactly once.
    for (&(i, j), &u) in &index {
        for (di, dj) in [(1i64, 0i64), (0, 1), (-1, 1)] {
            if let Some(&v) = index.get(&(i + di, j + dj)) {
                let d = sub(particles[v].pos, particles[u].pos);
                springs.push(Spring { a: u, b: v, rest: norm(d), stiffness, broken: false });
            }
        }
    }

    let dashpot = spec.damping_ratio * 2.0 * (stiffness * mass).sqrt();
    DeformableBody {
        particles,
        springs,
        fracture_strain: spec.fracture_strain,
        dashpot,
        contact_stiffness: CONTACT_STIFFNESS_RATIO * stiffness,
        ground_z: spec.ground_z,
        gravity: spec.gravity,
        spacing: a,
    }
}

/// Rigid tool cross-section: a segment of the given half-length with a
/// contact radius around it. A hammer face is a long segment, a knife blade
/// a thin one standing on end.
#[derive(Debug, Clone, Copy)]
pub struct ToolShape {
    pub half_length: f64,
    pub radius: f64,
}

/// One sampled tool pose: segment-center position and axis angle from +x.
#[derive(Debug, Clone, Copy)]
pub struct ToolState {
    pub t: f64,
    pub pos: [f64; 2],
    pub angle: f64,
}

/// Tool pose trajectory, linearly interpolated between samples and held
/// fixed outside their time range.
#[derive(Debug, Clone)]
pub struct ToolProfile {
    pub shape: ToolShape,
    pub states: Vec<ToolState>,
}

/// Interpolated pose and velocity at one instant.
#[derive(Debug, Clone, Copy)]
pub struct ToolSample {
    pub pos: [f64; 2],
    pub angle: f64,
    pub vel: [f64; 2],
    pub spin: f64,
}

impl ToolProfile {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.shape.radius > 0.0) || self.shape.half_length < 0.0 {
            return Err(SimError::BadTool("degenerate shape".into()));
        }
        if self.states.is_empty() {
            return Err(SimError::BadTool("empty pose trajectory".into()));
        }
        for w in self.states.windows(2) {
            if !(w[1].t > w[0].t) {
                return Err(SimError::BadTool(format!(
                    "pose times not strictly increasing at t = {}",
                    w[0].t
                )));
            }
        }
        Ok(())
    }

    /// Pose and velocity at time `t`; clamped to the end poses with zero
    /// velocity outside the sampled range.
    pub fn sample(&self, t: f64) -> ToolSample {
        let states = &self.states;
        let first = states[0];
        let last = states[states.len() - 1];
        if t <= first.t || states.len() == 1 {
            return ToolSample { pos: first.pos, angle: first.angle, vel: [0.0; 2], spin: 0.0 };
        }
        if t >= last.t {
            return ToolSample { pos: last.pos, angle: last.angle, vel: [0.0; 2], spin: 0.0 };
        }
        let hi = states.partition_point(|s| s.t <= t).min(states.len() - 1);
        let (s0, s1) = (states[hi - 1], states[hi]);
        let h = s1.t - s0.t;
        let w = (t - s0.t) / h;
        ToolSample {
            pos: [
                s0.pos[0] + w * (s1.pos[0] - s0.pos[0]),
                s0.pos[1] + w * (s1.pos[1] - s0.pos[1]),
            ],
            angle: s0.angle + w * (s1.angle - s0.angle),
            vel: [(s1.pos[0] - s0.pos[0]) / h, (s1.pos[1] - s0.pos[1]) / h],
            spin: (s1.angle - s0.angle) / h,
        }
    }
}

/// Per-step log record. Contact fields describe the tool only; the ground
/// reaction appears in `external_force` together with gravity and tool.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    /// State time after the step, s.
    pub time: f64,
    /// Magnitude of the net tool contact force on the body, N.
    pub contact_force: f64,
    /// Contacting extent: touched particles times lattice spacing, m.
    pub contact_area: f64,
    /// Peak tensile strain over unbroken springs.
    pub max_strain: f64,
    pub elastic_energy: f64,
    pub kinetic_energy: f64,
    pub tool_speed: f64,
    pub tool_angle: f64,
    pub fragments: usize,
    /// Net external (gravity + tool + ground) force this step, N.
    pub external_force: [f64; 2],
}

/// One record per step, in time order.
#[derive(Debug, Clone, Default)]
pub struct PropertyLog {
    pub records: Vec<StepRecord>,
}

impl PropertyLog {
    pub fn peak_contact_force(&self) -> f64 {
        self.records.iter().fold(0.0, |m, r| m.max(r.contact_force))
    }

    pub fn peak_contact_area(&self) -> f64 {
        self.records.iter().fold(0.0, |m, r| m.max(r.contact_area))
    }

    pub fn max_strain(&self) -> f64 {
        self.records.iter().fold(0.0, |m, r| m.max(r.max_strain))
    }

    pub fn peak_elastic_energy(&self) -> f64 {
        self.records.iter().fold(0.0, |m, r| m.max(r.elastic_energy))
    }

    pub fn peak_kinetic_energy(&self) -> f64 {
        self.records.iter().fold(0.0, |m, r| m.max(r.kinetic_energy))
    }

    pub fn final_fragments(&self) -> usize {
        self.records.last().map_or(1, |r| r.fragments)
    }
}

/// Advance the body by one symplectic-Euler step against the tool pose at
/// time `t`, then apply the fracture rule at the new state.
pub fn step(
    body: &mut DeformableBody,
    tool: &ToolProfile,
    t: f64,
    dt: f64,
) -> Result<StepRecord, SimError> {
    if !(dt > 0.0 && dt <= 1e-3) {
        return Err(SimError::BadTimeStep(dt));
    }
    let n = body.particles.len();
    let mut force = vec![[0.0f64; 2]; n];
    let mut external = [0.0f64; 2];

    for (i, p) in body.particles.iter().enumerate() {
        let g = -p.mass * body.gravity;
        force[i][1] += g;
        external[1] += g;
    }

    for s in &body.springs {
        if s.broken {
            continue;
        }
        let (pa, pb) = (body.particles[s.a], body.particles[s.b]);
        let d = sub(pb.pos, pa.pos);
        let len = norm(d);
        let u = [d[0] / len, d[1] / len];
        let rel = (pb.vel[0] - pa.vel[0]) * u[0] + (pb.vel[1] - pa.vel[1]) * u[1];
        let m = s.stiffness * (len - s.rest) + body.dashpot * rel;
        force[s.a][0] += m * u[0];
        force[s.a][1] += m * u[1];
        force[s.b][0] -= m * u[0];
        force[s.b][1] -= m * u[1];
    }

    let pose = tool.sample(t);
    let axis = [pose.angle.cos(), pose.angle.sin()];
    let mut tool_force = [0.0f64; 2];
    let mut touched = 0usize;
    for (i, p) in body.particles.iter().enumerate() {
        let w = sub(p.pos, pose.pos);
        let along = (w[0] * axis[0] + w[1] * axis[1])
            .clamp(-tool.shape.half_length, tool.shape.half_length);
        let closest = [pose.pos[0] + along * axis[0], pose.pos[1] + along * axis[1]];
        let d = sub(p.pos, closest);
        let dist = norm(d);
        if dist >= tool.shape.radius {
            continue;
        }
        // Push out radially; a particle exactly on the axis goes downward.
        let u = if dist > 1e-12 { [d[0] / dist, d[1] / dist] } else { [0.0, -1.0] };
        let m = body.contact_stiffness * (tool.shape.radius - dist);
        force[i][0] += m * u[0];
        force[i][1] += m * u[1];
        tool_force[0] += m * u[0];
        tool_force[1] += m * u[1];
        touched += 1;
    }
    external[0] += tool_force[0];
    external[1] += tool_force[1];

    for (i, p) in body.particles.iter().enumerate() {
        let pen = body.ground_z - p.pos[1];
        if pen <= 0.0 {
            continue;
        }
        // One-sided normal penalty with a dashpot active on approach only.
        let m = (body.contact_stiffness * pen - body.dashpot * p.vel[1].min(0.0)).max(0.0);
        force[i][1] += m;
        external[1] += m;
    }

    for (i, p) in body.particles.iter_mut().enumerate() {
        p.vel[0] += dt * force[i][0] / p.mass;
        p.vel[1] += dt * force[i][1] / p.mass;
        let speed = norm(p.vel);
        if speed > SPEED_LIMIT {
            return Err(SimError::Instability { particle: i, speed, time: t });
        }
        p.pos[0] += dt * p.vel[0];
        p.pos[1] += dt * p.vel[1];
    }

    let mut max_strain = 0.0f64;
    let mut elastic = 0.0f64;
    for s in &mut body.springs {
        if s.broken {
            continue;
        }
        let d = sub(body.particles[s.b].pos, body.particles[s.a].pos);
        let strain = (norm(d) - s.rest) / s.rest;
        if strain > body.fracture_strain {
            s.broken = true;
            continue;
        }
        max_strain = max_strain.max(strain);
        elastic += 0.5 * s.stiffness * (norm(d) - s.rest).powi(2);
    }
    let kinetic = body
        .particles
        .iter()
        .map(|p| 0.5 * p.mass * (p.vel[0] * p.vel[0] + p.vel[1] * p.vel[1]))
        .sum();

    Ok(StepRecord {
        time: t + dt,
        contact_force: norm(tool_force),
        contact_area: touched as f64 * body.spacing,
        max_strain,
        elastic_energy: elastic,
        kinetic_energy: kinetic,
        tool_speed: norm(pose.vel),
        tool_angle: pose.angle,
        fragments: count_fragments(body),
        external_force: external,
    })
}

/// Step the body through `duration` and collect the full log.
pub fn simulate(
    body: &mut DeformableBody,
    tool: &ToolProfile,
    duration: f64,
    dt: f64,
) -> Result<PropertyLog, SimError> {
    if !(dt > 0.0 && dt <= 1e-3) {
        return Err(SimError::BadTimeStep(dt));
    }
    let steps = (duration / dt).round();
    if steps < 1.0 || (steps * dt - duration).abs() > 1e-9 * duration.max(1.0) {
        return Err(SimError::BadDuration { duration, dt });
    }
    tool.validate()?;
    let mut log = PropertyLog::default();
    for k in 0..steps as usize {
        log.records.push(step(body, tool, k as f64 * dt, dt)?);
    }
    Ok(log)
}

/// Connected components of the unbroken-spring graph.
pub fn count_fragments(body: &DeformableBody) -> usize {
    let mut parent: Vec<usize> = (0..body.particles.len()).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    let mut count = body.particles.len();
    for s in &body.springs {
        if s.broken {
            continue;
        }
        let (ra, rb) = (find(&mut parent, s.a), find(&mut parent, s.b));
        if ra != rb {
            parent[ra] = rb;
            count -= 1;
        }
    }
    count
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EffectClass {
    Uncracked,
    Cracked,
    Smashed,
}

impl std::fmt::Display for EffectClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EffectClass::Uncracked => write!(f, "uncracked"),
            EffectClass::Cracked => write!(f, "cracked"),
            EffectClass::Smashed => write!(f, "smashed"),
        }
    }
}

/// Band classification of a fragment count: below `lo` pieces the body is
/// uncracked, above `hi` smashed.
pub fn classify_effect(pieces: usize, thresholds: (usize, usize)) -> EffectClass {
    let (lo, hi) = thresholds;
    assert!(lo >= 2 && hi >= lo, "thresholds must satisfy 2 <= lo <= hi");
    if pieces < lo {
        EffectClass::Uncracked
    } else if pieces <= hi {
        EffectClass::Cracked
    } else {
        EffectClass::Smashed
    }
}

/// A demonstration-generation plan: the nominal body, the tool, and the
/// ranges the synthetic strikes sweep over.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub body: LatticeSpec,
    pub shape: ToolShape,
    /// Tool axis angle in its canonical striking pose, rad from +x.
    pub rest_angle: f64,
    /// Horizontal position of the strike, m.
    pub strike_x: f64,
    /// Impact-speed sampling range, m/s.
    pub speed_range: (f64, f64),
    /// Signed tilt from the rest angle, rad.
    pub tilt_range: (f64, f64),
    /// Height above first contact where each strike starts, m.
    pub approach: f64,
    /// Travel past first contact at full speed, m.
    pub follow_through: f64,
    /// Extra follow time at full speed, s; deep strikes stay fast ones.
    pub follow_time: f64,
    /// Simulated time after impact, s.
    pub aftermath: f64,
    pub dt: f64,
    /// Relative body-parameter randomness applied per trial.
    pub jitter: f64,
    /// classify_effect bands for this scenario's task.
    pub thresholds: (usize, usize),
}

/// Vertical strike trajectory: the tool accelerates uniformly from rest so
/// its lowest point crosses `top_z` at exactly `speed`, continues through
/// `follow` at that speed, then holds. Poses are sampled every `dt`.
pub fn strike_profile(
    shape: ToolShape,
    x: f64,
    top_z: f64,
    angle: f64,
    speed: f64,
    approach: f64,
    follow: f64,
    duration: f64,
    dt: f64,
) -> ToolProfile {
    let contact_z = top_z + shape.radius + shape.half_length * angle.sin().abs();
    let steps = (duration / dt).round() as usize;
    let mut states = Vec::with_capacity(steps + 1);
    if speed <= 1e-9 {
        for k in 0..=steps {
            states.push(ToolState {
                t: k as f64 * dt,
                pos: [x, contact_z + approach],
                angle,
            });
        }
        return ToolProfile { shape, states };
    }
    let t_impact = 2.0 * approach / speed;
    let accel = speed * speed / (2.0 * approach);
    let t_stop = t_impact + follow / speed;
    for k in 0..=steps {
        let t = k as f64 * dt;
        let z = if t <= t_impact {
            contact_z + approach - 0.5 * accel * t * t
        } else if t <= t_stop {
            contact_z - speed * (t - t_impact)
        } else {
            contact_z - follow
        };
        states.push(ToolState { t, pos: [x, z], angle });
    }
    ToolProfile { shape, states }
}

/// Time at which a strike built by [`strike_profile`] first touches the body.
pub fn strike_impact_time(speed: f64, approach: f64) -> f64 {
    if speed <= 1e-9 {
        0.0
    } else {
        2.0 * approach / speed
    }
}

/// Run `n_trials` seeded synthetic strikes and tabulate the at-impact Action
/// features, the per-run Simulation features, and the final Effect.
///
/// Trial randomness: impact speed and tilt over the scenario ranges, and a
/// relative jitter on stiffness and fracture strain. Action derivatives come
/// from central finite differences over the tool pose trajectory; `theta` is
/// the tilt from the rest angle, whose magnitude the planner treats as the
/// contact-normal angle.
pub fn generate_demonstrations(
    scenario: &Scenario,
    n_trials: usize,
    seed: u64,
) -> Result<VariableTable, SimError> {
    assert!(n_trials >= 1, "need at least one trial");
    let mut action = vec![Vec::with_capacity(n_trials); 9];
    let mut sim = vec![Vec::with_capacity(n_trials); 5];
    let mut pieces = Vec::with_capacity(n_trials);

    for trial in 0..n_trials {
        let trial_seed = seed.wrapping_add((trial as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed);
        let speed = sample_range(&mut rng, scenario.speed_range);
        let tilt = sample_range(&mut rng, scenario.tilt_range);
        let j = scenario.jitter;
        let mut spec = scenario.body.clone();
        if j > 0.0 {
            spec.youngs *= 1.0 + rng.random_range(-j..j);
            spec.fracture_strain *= 1.0 + rng.random_range(-j..j);
        }
        let mut body = build_body(&spec, trial_seed);

        let top_z = spec.center[1] + spec.radius;
        let angle = scenario.rest_angle + tilt;
        let t_impact = strike_impact_time(speed, scenario.approach);
        let duration = ((t_impact + scenario.aftermath) / scenario.dt).ceil() * scenario.dt;
        let profile = strike_profile(
            scenario.shape,
            scenario.strike_x,
            top_z,
            angle,
            speed,
            scenario.approach,
            scenario.follow_through + speed * scenario.follow_time,
            duration,
            scenario.dt,
        );
        let log = simulate(&mut body, &profile, duration, scenario.dt)?;

        let idx = ((t_impact / scenario.dt).round() as usize)
            .clamp(1, profile.states.len().saturating_sub(2));
        let (s0, s1, s2) = (
            &profile.states[idx - 1],
            &profile.states[idx],
            &profile.states[idx + 1],
        );
        let dt = scenario.dt;
        action[0].push(s1.pos[0]);
        action[1].push(s1.pos[1]);
        action[2].push(tilt);
        action[3].push((s2.pos[0] - s0.pos[0]) / (2.0 * dt));
        action[4].push((s2.pos[1] - s0.pos[1]) / (2.0 * dt));
        action[5].push((s2.angle - s0.angle) / (2.0 * dt));
        action[6].push((s2.pos[0] - 2.0 * s1.pos[0] + s0.pos[0]) / (dt * dt));
        action[7].push((s2.pos[1] - 2.0 * s1.pos[1] + s0.pos[1]) / (dt * dt));
        action[8].push((s2.angle - 2.0 * s1.angle + s0.angle) / (dt * dt));

        sim[0].push(log.peak_contact_force());
        sim[1].push(log.max_strain());
        sim[2].push(log.peak_elastic_energy());
        sim[3].push(log.peak_kinetic_energy());
        sim[4].push(log.peak_contact_area());
        pieces.push(count_fragments(&body) as f64);
    }

    let [p_x, p_z, theta, v_x, v_z, omega, a_x, a_z, alpha]: [Vec<f64>; 9] =
        action.try_into().expect("nine action columns");
    let [force, strain, elastic, kinetic, area]: [Vec<f64>; 5] =
        sim.try_into().expect("five simulation columns");
    let columns = vec![
        VariableColumn::new("p_x", Level::Action, None, "m", p_x),
        VariableColumn::new("p_z", Level::Action, None, "m", p_z),
        VariableColumn::new("theta", Level::Action, None, "rad", theta),
        VariableColumn::new("v_x", Level::Action, Some("p_x"), "m/s", v_x),
        VariableColumn::new("v_z", Level::Action, Some("p_z"), "m/s", v_z),
        VariableColumn::new("omega", Level::Action, Some("theta"), "rad/s", omega),
        VariableColumn::new("a_x", Level::Action, Some("v_x"), "m/s^2", a_x),
        VariableColumn::new("a_z", Level::Action, Some("v_z"), "m/s^2", a_z),
        VariableColumn::new("alpha", Level::Action, Some("omega"), "rad/s^2", alpha),
        VariableColumn::new("contact_force", Level::Simulation, None, "N", force),
        VariableColumn::new("max_strain", Level::Simulation, None, "1", strain),
        VariableColumn::new("elastic_energy", Level::Simulation, None, "J", elastic),
        VariableColumn::new("kinetic_energy", Level::Simulation, None, "J", kinetic),
        VariableColumn::new("contact_area", Level::Simulation, None, "m", area),
        VariableColumn::new("pieces", Level::Effect, None, "count", pieces),
    ];
    Ok(VariableTable::new(columns)?)
}

fn sample_range(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

fn norm(v: [f64; 2]) -> f64 {
    (v[0] * v[0] + v[1] * v[1]).sqrt()
}
