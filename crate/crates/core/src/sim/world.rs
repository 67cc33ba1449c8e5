use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::scenario::{Effect, Scenario};
use crate::bt::{LeafRuntime, NodeStatus, TickError};
use crate::expr::{Lookup, Value};
use crate::library::NodeDefinition;

/// A multi-tick action that has started but not finished.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InProgress {
    pub action: String,
    pub remaining: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WorldState {
    pub assignment: BTreeMap<String, Value>,
    pub tick_index: u32,
    pub in_progress: Option<InProgress>,
}

impl WorldState {
    pub fn initial(scenario: &Scenario) -> Self {
        WorldState { assignment: scenario.init.clone(), tick_index: 0, in_progress: None }
    }

    /// Short hex digest of the assignment and any in-flight action.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for (k, v) in &self.assignment {
            h.update(k.as_bytes());
            h.update(b"=");
            h.update(v.to_string().as_bytes());
            h.update(b";");
        }
        if let Some(p) = &self.in_progress {
            h.update(format!("@{}:{}", p.action, p.remaining).as_bytes());
        }
        h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

impl Lookup for WorldState {
    fn value_of(&self, var: &str) -> Option<&Value> {
        self.assignment.get(var)
    }
}

/// Executes library leaves against a scenario's conditions and action schemas.
pub struct SimRuntime<'a> {
    pub scenario: &'a Scenario,
}

impl<'a> SimRuntime<'a> {
    pub fn new(scenario: &'a Scenario) -> Self {
        SimRuntime { scenario }
    }

    pub fn apply_effects(&self, effects: &[Effect], world: &mut WorldState) {
        for effect in effects {
            let var = effect.var();
            if let Some(current) = world.assignment.get(var) {
                let next = self.scenario.effect_value(effect, current);
                world.assignment.insert(var.to_string(), next);
            }
        }
    }
}

impl LeafRuntime for SimRuntime<'_> {
    type World = WorldState;

    fn check(&self, def: &NodeDefinition, world: &WorldState) -> Result<bool, TickError> {
        let pred = self.scenario.conditions.get(&def.binding).ok_or_else(|| TickError::UnknownPrimitive {
            binding: def.name.clone(),
            primitive: def.binding.clone(),
        })?;
        pred.eval(world).map_err(TickError::UnknownVariable)
    }

    fn act(&self, def: &NodeDefinition, world: &mut WorldState) -> Result<NodeStatus, TickError> {
        let schema = self.scenario.actions.get(&def.binding).ok_or_else(|| TickError::UnknownPrimitive {
            binding: def.name.clone(),
            primitive: def.binding.clone(),
        })?;
        if !schema.precondition.eval(world).map_err(TickError::UnknownVariable)? {
            return Ok(NodeStatus::Failure);
        }
        let continuing = matches!(&world.in_progress, Some(p) if p.action == def.binding);
        if continuing {
            let p = world.in_progress.as_mut().expect("checked above");
            p.remaining -= 1;
            if p.remaining > 0 {
                return Ok(NodeStatus::Running);
            }
            world.in_progress = None;
        } else if schema.duration > 1 {
            world.in_progress = Some(InProgress { action: def.binding.clone(), remaining: schema.duration - 1 });
            return Ok(NodeStatus::Running);
        }
        self.apply_effects(&schema.effects, world);
        Ok(NodeStatus::Success)
    }
}
