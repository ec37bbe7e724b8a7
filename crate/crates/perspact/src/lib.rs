//! Household director-task benchmark.
//!
//! Two agents share a small partially observable household: a stationary
//! Director that knows which object must be retrieved, and a Matcher that
//! must find and take it using movement, container opening, and
//! clarification questions. The crate provides the symbolic world engine,
//! seven scenario families of graded perspective-taking difficulty, an
//! epistemic planner that computes expert baseline plans, scripted and
//! model-backed matcher policies, and a trial harness that aggregates the
//! benchmark metrics.

pub mod agents;
pub mod gateway;
pub mod harness;
pub mod ids;
pub mod pddl;
pub mod planner;
pub mod scenario;
pub mod world;

mod util;

pub use ids::{AgentId, ContainerId, LocationId, ObjectId};
