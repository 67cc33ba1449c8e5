//! Node-level unit tests: each leaf is executed in isolation against a case world.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::scenario::Scenario;
use super::world::{SimRuntime, WorldState};
use crate::bt::{LeafRuntime, NodeStatus, TickError};
use crate::expr::Value;
use crate::library::{NodeLibrary, NodeType};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeCase {
    pub node: String,
    /// Overrides applied on top of the scenario's initial assignment.
    pub world: BTreeMap<String, Value>,
    pub expected_status: NodeStatus,
    /// Expected assignment after execution; `None` means unchanged.
    #[serde(default)]
    pub expected: Option<BTreeMap<String, Value>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseOutcome {
    pub node: String,
    pub passed: bool,
    pub expected_status: NodeStatus,
    pub actual_status: NodeStatus,
    pub expected_assignment: BTreeMap<String, Value>,
    pub actual_assignment: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnitReport {
    pub passed: usize,
    pub failed: usize,
    pub cases: Vec<CaseOutcome>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum UnitError {
    #[error("case {index}: unknown node '{node}'")]
    UnknownNode { index: usize, node: String },
    #[error("case {index}: {source}")]
    Tick {
        index: usize,
        #[source]
        source: TickError,
    },
}

pub fn unit_test_nodes(
    library: &NodeLibrary,
    scenario: &Scenario,
    cases: &[NodeCase],
) -> Result<UnitReport, UnitError> {
    let runtime = SimRuntime::new(scenario);
    let mut outcomes = Vec::with_capacity(cases.len());
    for (index, case) in cases.iter().enumerate() {
        let def = library
            .get(&case.node)
            .ok_or_else(|| UnitError::UnknownNode { index, node: case.node.clone() })?;
        let mut world = WorldState::initial(scenario);
        world.assignment.extend(case.world.iter().map(|(k, v)| (k.clone(), v.clone())));
        let before = world.assignment.clone();
        let status = match def.node_type {
            NodeType::Condition => match runtime.check(def, &world) {
                Ok(true) => NodeStatus::Success,
                Ok(false) => NodeStatus::Failure,
                Err(source) => return Err(UnitError::Tick { index, source }),
            },
            NodeType::Action => runtime.act(def, &mut world).map_err(|source| UnitError::Tick { index, source })?,
        };
        let expected_assignment = match &case.expected {
            None => before,
            Some(overrides) => {
                let mut e = before;
                e.extend(overrides.iter().map(|(k, v)| (k.clone(), v.clone())));
                e
            }
        };
        let passed = status == case.expected_status && world.assignment == expected_assignment;
        outcomes.push(CaseOutcome {
            node: case.node.clone(),
            passed,
            expected_status: case.expected_status,
            actual_status: status,
            expected_assignment,
            actual_assignment: world.assignment,
        });
    }
    let passed = outcomes.iter().filter(|o| o.passed).count();
    Ok(UnitReport { passed, failed: outcomes.len() - passed, cases: outcomes })
}
