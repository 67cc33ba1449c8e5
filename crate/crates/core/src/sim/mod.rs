//! Deterministic discrete-world simulator.

mod episode;
pub(crate) mod scenario;
mod unit;
mod variants;
mod world;

pub use episode::{
    replay_assignment, run_episode, run_episode_with, AppliedEvent, EpisodeOptions, EpisodeResult,
    TraceEntry,
};
pub use scenario::{load_scenario, ActionSchema, Domain, Effect, Event, Scenario, ScenarioError};
pub use unit::{unit_test_nodes, CaseOutcome, NodeCase, UnitError, UnitReport};
pub use variants::schedule_variants;
pub use world::{InProgress, SimRuntime, WorldState};
