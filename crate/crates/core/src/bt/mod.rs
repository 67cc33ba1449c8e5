//! Behavior-tree data model, tick semantics and structural validation.

mod node;
mod tick;
mod validate;

pub use node::{
    uav_patrol_tree, BehaviorTree, BtNode, NodeKind, NodeStatus, PreOrder, Subgoal, SubgoalMode,
};
pub use tick::{tick, tick_with, LeafRuntime, OpenPolicy, TickError, TickObserver};
pub use validate::{validate_structure, Finding, FindingKind, ValidationReport};
