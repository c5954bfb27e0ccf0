//! Learning which physical properties make a tool-use succeed, and planning
//! minimum-effort robot trajectories that realize those properties.
//!
//! The crate splits into three layers:
//!
//! * data: a particle-based effect simulator ([`effectsim`]) produces logged
//!   demonstrations of a tool acting on a deformable body;
//! * learning: iterative-deepening symbolic regression ([`sregress`]) distills
//!   the logs into a graph of physical relations, and mixture models
//!   ([`goalinfer`]) invert that graph from a desired effect to concrete tool
//!   velocities and orientations;
//! * planning: rigid-body dynamics ([`dynamics`]), virtual kinematic chains
//!   ([`vkc`]), and a free-final-time optimal control solver ([`ocp`]) turn
//!   those tool-level goals into joint trajectories, and [`pipeline`] ties the
//!   stages together and scores candidate strategies.
//!
//! File formats and the run manifest live in [`io`]; the `tooluse` binary is a
//! thin CLI over [`pipeline`].

pub mod dynamics;
pub mod effectsim;
pub mod expr;
pub mod goalinfer;
pub mod ocp;
pub mod pipeline;
pub mod sregress;
pub mod vkc;
