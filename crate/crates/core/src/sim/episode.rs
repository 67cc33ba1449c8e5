use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::scenario::Scenario;
use super::world::{SimRuntime, WorldState};
use crate::bt::{tick_with, BehaviorTree, BtNode, NodeStatus, OpenPolicy, TickError, TickObserver};
use crate::expr::Value;
use crate::library::{NodeLibrary, NodeType};

/// One leaf execution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub tick: u32,
    pub leaf: String,
    pub binding: String,
    pub status: NodeStatus,
    /// Digest of the world right after the leaf ran.
    pub digest: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<BTreeMap<String, Value>>,
}

/// An exogenous write applied at the start of a tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppliedEvent {
    pub tick: u32,
    pub variable: String,
    pub value: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub success: bool,
    pub ticks_used: u32,
    pub final_goal_fraction: f64,
    pub trace: Vec<TraceEntry>,
    pub events: Vec<AppliedEvent>,
    pub final_state: WorldState,
}

impl EpisodeResult {
    /// `(tick, leaf, status, digest)` for every leaf execution.
    pub fn leaf_signature(&self) -> Vec<(u32, &str, NodeStatus, &str)> {
        self.trace.iter().map(|e| (e.tick, e.leaf.as_str(), e.status, e.digest.as_str())).collect()
    }

    pub fn trace_jsonl(&self) -> String {
        self.trace.iter().map(|e| serde_json::to_string(e).expect("trace serializes") + "\n").collect()
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct EpisodeOptions {
    /// Store full assignments in the trace, not just digests.
    pub record_states: bool,
    pub open: OpenPolicy,
}

struct Recorder<'a> {
    tick: u32,
    trace: &'a mut Vec<TraceEntry>,
    record_states: bool,
}

impl TickObserver<WorldState> for Recorder<'_> {
    fn leaf(&mut self, node: &BtNode, status: NodeStatus, world: &WorldState) {
        self.trace.push(TraceEntry {
            tick: self.tick,
            leaf: node.name.clone(),
            binding: node.kind.binding().unwrap_or_default().to_string(),
            status,
            digest: world.digest(),
            state: self.record_states.then(|| world.assignment.clone()),
        });
    }
}

pub fn run_episode(
    tree: &BehaviorTree,
    scenario: &Scenario,
    library: &NodeLibrary,
    seed: u64,
) -> Result<EpisodeResult, TickError> {
    run_episode_with(tree, scenario, library, seed, EpisodeOptions::default())
}

/// Runs until the goal holds after a tick or `max_ticks` is reached.
///
/// Events scheduled for tick `t` are applied before the tree is ticked at `t`.
/// Events with probability below 1 fire according to a generator seeded by `seed`.
pub fn run_episode_with(
    tree: &BehaviorTree,
    scenario: &Scenario,
    library: &NodeLibrary,
    seed: u64,
    options: EpisodeOptions,
) -> Result<EpisodeResult, TickError> {
    let runtime = SimRuntime::new(scenario);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fires: Vec<bool> = scenario
        .events
        .iter()
        .map(|e| e.probability >= 1.0 || rng.gen_bool(e.probability.max(0.0)))
        .collect();

    let mut world = WorldState::initial(scenario);
    let mut trace = Vec::new();
    let mut applied = Vec::new();
    let mut success = false;
    let mut ticks_used = scenario.max_ticks;
    for t in 1..=scenario.max_ticks {
        for (event, _) in scenario.events.iter().zip(&fires).filter(|(e, f)| **f && e.tick == t) {
            world.assignment.insert(event.var.clone(), event.value.clone());
            applied.push(AppliedEvent { tick: t, variable: event.var.clone(), value: event.value.clone() });
        }
        world.tick_index = t;
        let mut rec = Recorder { tick: t, trace: &mut trace, record_states: options.record_states };
        let (_, next) = tick_with(tree, &world, library, &runtime, options.open, &mut rec)?;
        world = next;
        if scenario.goal_holds(&world.assignment) {
            success = true;
            ticks_used = t;
            break;
        }
    }
    Ok(EpisodeResult {
        success,
        ticks_used,
        final_goal_fraction: scenario.goal_fraction(&world.assignment),
        trace,
        events: applied,
        final_state: world,
    })
}

/// Rebuilds the final assignment from the initial state, the applied events and
/// the successful action executions recorded in the trace.
pub fn replay_assignment(
    result: &EpisodeResult,
    scenario: &Scenario,
    library: &NodeLibrary,
) -> BTreeMap<String, Value> {
    let runtime = SimRuntime::new(scenario);
    let mut world = WorldState::initial(scenario);
    let mut events = result.events.iter().peekable();
    let mut entries = result.trace.iter().peekable();
    for t in 1..=result.ticks_used {
        while let Some(e) = events.next_if(|e| e.tick == t) {
            world.assignment.insert(e.variable.clone(), e.value.clone());
        }
        while let Some(entry) = entries.next_if(|e| e.tick == t) {
            if entry.status != NodeStatus::Success {
                continue;
            }
            let schema = library
                .get(&entry.binding)
                .filter(|d| d.node_type == NodeType::Action)
                .and_then(|d| scenario.actions.get(&d.binding));
            if let Some(schema) = schema {
                runtime.apply_effects(&schema.effects, &mut world);
            }
        }
    }
    world.assignment
}
