//! Memoryless, synchronous tick semantics.

use thiserror::Error;

use super::node::{BehaviorTree, BtNode, NodeKind, NodeStatus};
use crate::library::{NodeDefinition, NodeLibrary, NodeType};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TickError {
    #[error("leaf '{instance}' is bound to '{binding}', which is not in the library")]
    UnboundLeaf { instance: String, binding: String },
    #[error("leaf '{instance}' is a {expected} but '{binding}' is a {found}")]
    KindMismatch { instance: String, binding: String, expected: NodeType, found: NodeType },
    #[error("'{primitive}' (bound by '{binding}') is not a primitive of the scenario")]
    UnknownPrimitive { binding: String, primitive: String },
    #[error("predicate references unknown variable '{0}'")]
    UnknownVariable(String),
    #[error("open node '{0}' cannot be ticked")]
    OpenNode(String),
}

/// Executes leaves against a world.
pub trait LeafRuntime {
    type World: Clone;

    /// Evaluates a condition; must not mutate anything.
    fn check(&self, def: &NodeDefinition, world: &Self::World) -> Result<bool, TickError>;

    /// Runs one tick of an action, mutating `world` only on success or progress.
    fn act(&self, def: &NodeDefinition, world: &mut Self::World) -> Result<NodeStatus, TickError>;
}

/// Receives every leaf execution in tick order.
pub trait TickObserver<W> {
    fn leaf(&mut self, node: &BtNode, status: NodeStatus, world: &W);
}

impl<W> TickObserver<W> for () {
    fn leaf(&mut self, _: &BtNode, _: NodeStatus, _: &W) {}
}

/// What to do on reaching an `Open` placeholder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OpenPolicy {
    #[default]
    Reject,
    /// Treat as a leaf that always fails (used for stub rollouts).
    Fail,
}

/// One tick from the root; returns the root status and the resulting world.
pub fn tick<R: LeafRuntime>(
    tree: &BehaviorTree,
    world: &R::World,
    library: &NodeLibrary,
    runtime: &R,
) -> Result<(NodeStatus, R::World), TickError> {
    tick_with(tree, world, library, runtime, OpenPolicy::Reject, &mut ())
}

pub fn tick_with<R: LeafRuntime, O: TickObserver<R::World>>(
    tree: &BehaviorTree,
    world: &R::World,
    library: &NodeLibrary,
    runtime: &R,
    open: OpenPolicy,
    observer: &mut O,
) -> Result<(NodeStatus, R::World), TickError> {
    let mut next = world.clone();
    let mut ctx = Ctx { library, runtime, open, observer };
    let status = ctx.node(tree.root(), &mut next)?;
    Ok((status, next))
}

struct Ctx<'a, R: LeafRuntime, O> {
    library: &'a NodeLibrary,
    runtime: &'a R,
    open: OpenPolicy,
    observer: &'a mut O,
}

impl<R: LeafRuntime, O: TickObserver<R::World>> Ctx<'_, R, O> {
    fn node(&mut self, node: &BtNode, world: &mut R::World) -> Result<NodeStatus, TickError> {
        match &node.kind {
            NodeKind::Sequence => {
                for child in &node.children {
                    match self.node(child, world)? {
                        NodeStatus::Success => {}
                        other => return Ok(other),
                    }
                }
                Ok(NodeStatus::Success)
            }
            NodeKind::Fallback => {
                for child in &node.children {
                    match self.node(child, world)? {
                        NodeStatus::Failure => {}
                        other => return Ok(other),
                    }
                }
                Ok(NodeStatus::Failure)
            }
            NodeKind::Parallel { threshold } => {
                let (mut ok, mut failed) = (0usize, 0usize);
                for child in &node.children {
                    match self.node(child, world)? {
                        NodeStatus::Success => ok += 1,
                        NodeStatus::Failure => failed += 1,
                        NodeStatus::Running => {}
                    }
                }
                let tolerated = node.children.len().saturating_sub(*threshold);
                Ok(if ok >= *threshold {
                    NodeStatus::Success
                } else if failed > tolerated {
                    NodeStatus::Failure
                } else {
                    NodeStatus::Running
                })
            }
            NodeKind::Condition { binding } => {
                let def = self.resolve(node, binding, NodeType::Condition)?;
                let status = if self.runtime.check(def, world)? {
                    NodeStatus::Success
                } else {
                    NodeStatus::Failure
                };
                self.observer.leaf(node, status, world);
                Ok(status)
            }
            NodeKind::Action { binding } => {
                let def = self.resolve(node, binding, NodeType::Action)?;
                let status = self.runtime.act(def, world)?;
                self.observer.leaf(node, status, world);
                Ok(status)
            }
            NodeKind::Open(_) => match self.open {
                OpenPolicy::Reject => Err(TickError::OpenNode(node.name.clone())),
                OpenPolicy::Fail => Ok(NodeStatus::Failure),
            },
        }
    }

    fn resolve(
        &self,
        node: &BtNode,
        binding: &str,
        expected: NodeType,
    ) -> Result<&NodeDefinition, TickError> {
        let def = self.library.get(binding).ok_or_else(|| TickError::UnboundLeaf {
            instance: node.name.clone(),
            binding: binding.to_string(),
        })?;
        if def.node_type != expected {
            return Err(TickError::KindMismatch {
                instance: node.name.clone(),
                binding: binding.to_string(),
                expected,
                found: def.node_type,
            });
        }
        Ok(def)
    }
}
