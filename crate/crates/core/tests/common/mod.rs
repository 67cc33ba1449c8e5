//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use btgen::bt::{BehaviorTree, BtNode, LeafRuntime, NodeKind, NodeStatus, Subgoal, SubgoalMode, TickError};
use btgen::expr::{CmpOp, Literal, Value};
use btgen::library::{NodeDefinition, NodeLibrary, NodeType};
use rand::seq::SliceRandom;
use rand::Rng;

/// Three actions with fixed outcomes, bound as `succeed`, `fail`, `run`.
pub fn stub_library() -> NodeLibrary {
    let def = |name: &str| NodeDefinition {
        node_type: NodeType::Action,
        name: name.into(),
        description: String::new(),
        implementation: String::new(),
        binding: name.into(),
    };
    NodeLibrary::new(["succeed", "fail", "run"].map(def)).unwrap()
}

pub struct StubRuntime;

impl LeafRuntime for StubRuntime {
    type World = ();

    fn check(&self, _: &NodeDefinition, _: &()) -> Result<bool, TickError> {
        Ok(false)
    }

    fn act(&self, def: &NodeDefinition, _: &mut ()) -> Result<NodeStatus, TickError> {
        Ok(match def.binding.as_str() {
            "succeed" => NodeStatus::Success,
            "fail" => NodeStatus::Failure,
            _ => NodeStatus::Running,
        })
    }
}

pub fn stub_binding(status: NodeStatus) -> &'static str {
    match status {
        NodeStatus::Success => "succeed",
        NodeStatus::Failure => "fail",
        NodeStatus::Running => "run",
    }
}

/// Independent reference tick: returns the root status and appends every
/// executed leaf's instance name to `visited`.
pub fn reference_tick(node: &BtNode, visited: &mut Vec<String>) -> NodeStatus {
    match &node.kind {
        NodeKind::Action { binding } | NodeKind::Condition { binding } => {
            visited.push(node.name.clone());
            match binding.as_str() {
                "succeed" => NodeStatus::Success,
                "fail" => NodeStatus::Failure,
                _ => NodeStatus::Running,
            }
        }
        NodeKind::Sequence => {
            for c in &node.children {
                let s = reference_tick(c, visited);
                if s != NodeStatus::Success {
                    return s;
                }
            }
            NodeStatus::Success
        }
        NodeKind::Fallback => {
            for c in &node.children {
                let s = reference_tick(c, visited);
                if s != NodeStatus::Failure {
                    return s;
                }
            }
            NodeStatus::Failure
        }
        NodeKind::Parallel { threshold } => {
            let statuses: Vec<NodeStatus> = node.children.iter().map(|c| reference_tick(c, visited)).collect();
            let succeeded = statuses.iter().filter(|s| **s == NodeStatus::Success).count();
            let failed = statuses.iter().filter(|s| **s == NodeStatus::Failure).count();
            // success is out of reach once more than n - M children failed
            if succeeded >= *threshold {
                NodeStatus::Success
            } else if statuses.len() - failed < *threshold {
                NodeStatus::Failure
            } else {
                NodeStatus::Running
            }
        }
        NodeKind::Open(_) => panic!("reference evaluator has no open nodes"),
    }
}

fn random_name(rng: &mut impl Rng, i: usize) -> String {
    const PIECES: [&str; 8] = ["move", "check-target", "a&b", "quote\"d", "lt<gt>", "tab\there", "ünï", "x y"];
    format!("{}_{i}", PIECES.choose(rng).unwrap())
}

fn random_literal(rng: &mut impl Rng) -> Literal {
    let var = ["position", "door", "has_key", "battery"].choose(rng).unwrap().to_string();
    match rng.gen_range(0..3) {
        0 => Literal::eq(var, Value::Bool(rng.gen())),
        1 => {
            let op = [CmpOp::Eq, CmpOp::Ne, CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge].choose(rng).copied().unwrap();
            Literal::new(var, op, Value::Int(rng.gen_range(-5..50)))
        }
        _ => Literal::new(var, CmpOp::Ne, Value::Sym(["open", "closed", "k_2"].choose(rng).unwrap().to_string())),
    }
}

/// A random tree with at most `max_nodes` nodes and depth at most `max_depth`,
/// using every node kind, awkward names, and explicit bindings.
pub fn random_tree(rng: &mut impl Rng, max_depth: usize, max_nodes: usize) -> BehaviorTree {
    let mut counter = 0;
    let mut budget = max_nodes;
    BehaviorTree::new(random_node(rng, max_depth, &mut budget, &mut counter))
}

fn random_node(rng: &mut impl Rng, depth_left: usize, budget: &mut usize, counter: &mut usize) -> BtNode {
    *budget -= 1;
    *counter += 1;
    let name = random_name(rng, *counter);
    let control = depth_left > 1 && *budget > 0 && rng.gen_bool(0.45);
    if !control {
        return match rng.gen_range(0..3) {
            0 => BtNode::new(name, NodeKind::Condition { binding: random_name(rng, 0) }, vec![]),
            1 => BtNode::new(name.clone(), NodeKind::Action { binding: name }, vec![]),
            _ => {
                let literals = (0..rng.gen_range(0..3)).map(|_| random_literal(rng)).collect();
                let mode = if rng.gen() { SubgoalMode::Achieve } else { SubgoalMode::Ensure };
                BtNode::open(name, Subgoal { literals, description: random_name(rng, 0), mode })
            }
        };
    }
    let n = rng.gen_range(1..=4);
    let mut children = Vec::new();
    while children.len() < n && *budget > 0 {
        children.push(random_node(rng, depth_left - 1, budget, counter));
    }
    match rng.gen_range(0..3) {
        0 => BtNode::sequence(name, children),
        1 => BtNode::fallback(name, children),
        _ => {
            let m = rng.gen_range(1..=children.len());
            BtNode::parallel(name, m, children)
        }
    }
}
