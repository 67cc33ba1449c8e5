use thiserror::Error;

use super::candidate::ExpansionCandidate;
use crate::bt::{BehaviorTree, NodeKind};
use crate::expr::Literal;
use crate::library::NodeLibrary;
use crate::sim::Scenario;

/// A goal expression plus free-text description.
#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    pub goal: Vec<Literal>,
    pub description: String,
}

impl Task {
    pub fn from_scenario(scenario: &Scenario) -> Self {
        Task { goal: scenario.goal.clone(), description: scenario.description.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExpandError {
    #[error("no candidates: {0}")]
    NoCandidates(String),
    #[error("'{0}' is not an open node")]
    UnknownTarget(String),
    #[error("remote endpoint unavailable: {0}")]
    RemoteUnavailable(String),
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("every candidate was filtered out")]
    EmptyAfterFiltering,
}

/// Everything a policy sees when asked to expand one open node.
#[derive(Debug, Clone, Copy)]
pub struct ExpandRequest<'a> {
    pub tree: &'a BehaviorTree,
    pub target: &'a str,
    pub task: &'a Task,
    pub scenario: &'a Scenario,
    pub library: &'a NodeLibrary,
    /// Goal literals left unmet by rejected children of this state.
    pub feedback: &'a [Literal],
    pub k: usize,
}

impl ExpandRequest<'_> {
    /// Retrieval text: task description, target subgoal, feedback terms.
    pub fn query(&self) -> String {
        let mut parts = vec![self.task.description.clone()];
        if let Some(NodeKind::Open(sub)) = self.tree.root().find(self.target).map(|n| &n.kind) {
            parts.push(sub.description.clone());
            parts.push(sub.expression());
        }
        parts.extend(self.feedback.iter().map(Literal::to_string));
        parts.join(" ")
    }
}

/// Produces candidate expansions for an open node, best first.
pub trait ExpansionPolicy {
    fn expand(&self, req: &ExpandRequest<'_>) -> Result<Vec<ExpansionCandidate>, ExpandError>;

    /// Human-readable record of every candidate discarded so far.
    fn drops(&self) -> Vec<String> {
        Vec::new()
    }
}
