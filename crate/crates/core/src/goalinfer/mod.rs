//! Goal inference: Gaussian-mixture joint models over (effect, property)
//! pairs, conditional sampling, and the walk from a desired effect back to
//! Action-level goal values.

mod gmm;

pub use gmm::{
    condition, fit_gmm, fit_gmm_traced, sample, sample_with, select_k_bic, Component, GmmError,
    MixtureModel, COV_FLOOR,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use thiserror::Error;

use crate::sregress::{Level, PhysicalRelationGraph};

/// Action-level contact goal: how the functional basis should be moving (and
/// optionally oriented) when it reaches the contact point.
#[derive(Debug, Clone, PartialEq)]
pub struct GoalSpec {
    /// Tool-tip velocity at contact, m/s, world frame.
    pub v_tool: [f64; 3],
    /// Angle between the functional-basis surface normal and v_tool, rad, in
    /// [0, π]. `None` when the task does not constrain orientation.
    pub d_tool: Option<f64>,
    /// Contact position, m, world frame.
    pub p_g: [f64; 3],
}

/// Bounds applied when assembling a GoalSpec from sampled values.
#[derive(Debug, Clone)]
pub struct GoalBounds {
    pub max_speed: f64,
    pub workspace_min: [f64; 3],
    pub workspace_max: [f64; 3],
}

impl Default for GoalBounds {
    fn default() -> Self {
        Self {
            max_speed: 4.0,
            workspace_min: [-2.0, -2.0, -2.0],
            workspace_max: [2.0, 2.0, 2.0],
        }
    }
}

impl GoalSpec {
    /// Clamp into the stated invariants: speed cap, angle range, workspace box.
    pub fn clamped(mut self, bounds: &GoalBounds) -> GoalSpec {
        let speed = (self.v_tool[0].powi(2) + self.v_tool[1].powi(2) + self.v_tool[2].powi(2))
            .sqrt();
        if speed > bounds.max_speed {
            let s = bounds.max_speed / speed;
            for v in &mut self.v_tool {
                *v *= s;
            }
        }
        if let Some(d) = self.d_tool {
            self.d_tool = Some(d.clamp(0.0, std::f64::consts::PI));
        }
        for i in 0..3 {
            self.p_g[i] = self.p_g[i].clamp(bounds.workspace_min[i], bounds.workspace_max[i]);
        }
        self
    }
}

/// How sampled Action-level symbols map onto GoalSpec fields, plus the task
/// defaults for whatever is not sampled.
///
/// The effect simulator works in the world x-z plane, so its `v_x`/`v_z`
/// symbols address those velocity components directly; `theta` is the signed
/// tool tilt whose magnitude becomes the normal-to-velocity angle.
#[derive(Debug, Clone)]
pub struct GoalAssembly {
    /// Symbol providing each velocity component, if any.
    pub velocity_symbols: [Option<String>; 3],
    /// Symbol providing the orientation angle, if any.
    pub orientation_symbol: Option<String>,
    /// Defaults for fields with no sampled symbol.
    pub default_velocity: [f64; 3],
    pub default_orientation: Option<f64>,
    pub bounds: GoalBounds,
}

impl GoalAssembly {
    /// Strike goal: sampled vertical impact speed, tool face square to it.
    pub fn crack_default() -> Self {
        Self {
            velocity_symbols: [None, None, Some("v_z".into())],
            orientation_symbol: None,
            default_velocity: [0.0, 0.0, -1.0],
            default_orientation: Some(0.0),
            bounds: GoalBounds::default(),
        }
    }

    /// Cut goal: sampled descent speed and blade tilt.
    pub fn cut_default() -> Self {
        Self {
            velocity_symbols: [None, None, Some("v_z".into())],
            orientation_symbol: Some("theta".into()),
            default_velocity: [0.0, 0.0, -0.25],
            default_orientation: None,
            bounds: GoalBounds::default(),
        }
    }
}

#[derive(Debug, Clone, Error)]
pub enum InferError {
    #[error("no Action-level node reaches `{0}` in the relation graph")]
    NoActionPath(String),
    #[error("no joint model fitted for edge `{0}` -> `{1}`")]
    MissingModel(String, String),
    #[error(transparent)]
    Gmm(#[from] GmmError),
}

/// Joint models keyed by (source symbol, target symbol) PRG edge.
pub type EdgeModels = BTreeMap<(String, String), MixtureModel>;

/// Walk the relation graph from the Effect node back to Action-level symbols,
/// conditioning each edge's joint model on the current value and sampling the
/// upstream property; assemble the sampled values into a GoalSpec.
///
/// With `map_mode` the sampling step is replaced by the heaviest component's
/// conditional mean, for reproducible planning.
pub fn infer_goal(
    prg: &PhysicalRelationGraph,
    models: &EdgeModels,
    desired_effect: f64,
    p_g: [f64; 3],
    assembly: &GoalAssembly,
    seed: u64,
    map_mode: bool,
) -> Result<GoalSpec, InferError> {
    let effect = prg
        .nodes()
        .iter()
        .find(|n| n.level == Level::Effect)
        .ok_or_else(|| InferError::NoActionPath("<no effect node>".into()))?
        .symbol
        .clone();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sampled: BTreeMap<String, f64> = BTreeMap::new();
    // Breadth-first from the effect, following edges target -> source.
    let mut frontier = vec![(effect.clone(), desired_effect)];
    let mut reached_action = false;
    while let Some((symbol, value)) = frontier.pop() {
        for edge in prg.edges_into(&symbol) {
            let model = models
                .get(&(edge.source.clone(), edge.target.clone()))
                .ok_or_else(|| {
                    InferError::MissingModel(edge.source.clone(), edge.target.clone())
                })?;
            // Joint model dimension 0 is the upstream (source) property,
            // dimension 1 the downstream (target); condition on the target.
            let conditional = condition(model, &[1], &[value])?;
            let drawn = if map_mode {
                conditional.map_point()[0]
            } else {
                sample_with(&conditional, &mut rng)[0]
            };
            let level = prg.level_of(&edge.source).expect("edge source is a node");
            if level == Level::Action {
                reached_action = true;
            }
            sampled.insert(edge.source.clone(), drawn);
            frontier.push((edge.source.clone(), drawn));
        }
    }
    if !reached_action {
        return Err(InferError::NoActionPath(effect));
    }

    let mut v_tool = assembly.default_velocity;
    for i in 0..3 {
        if let Some(sym) = &assembly.velocity_symbols[i] {
            if let Some(v) = sampled.get(sym) {
                v_tool[i] = *v;
            }
        }
    }
    let d_tool = match &assembly.orientation_symbol {
        Some(sym) => sampled.get(sym).map(|v| v.abs()).or(assembly.default_orientation),
        None => assembly.default_orientation,
    };
    Ok(GoalSpec { v_tool, d_tool, p_g }.clamped(&assembly.bounds))
}
