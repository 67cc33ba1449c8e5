use std::fmt;

use crate::expr::{format_conjunction, Literal};

/// Result of ticking a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum NodeStatus {
    Success,
    Failure,
    Running,
}

impl fmt::Display for NodeStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NodeStatus::Success => "Success",
            NodeStatus::Failure => "Failure",
            NodeStatus::Running => "Running",
        })
    }
}

/// How an open subgoal is meant to be realized.
///
/// `Achieve` subtrees only need to make progress toward their literals.
/// `Ensure` subtrees must report `Success` whenever the literals already
/// hold, so they can sit in front of an action inside a `Sequence`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum SubgoalMode {
    #[default]
    Achieve,
    Ensure,
}

impl SubgoalMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SubgoalMode::Achieve => "achieve",
            SubgoalMode::Ensure => "ensure",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "achieve" => Some(SubgoalMode::Achieve),
            "ensure" => Some(SubgoalMode::Ensure),
            _ => None,
        }
    }
}

/// An unexpanded piece of a partial tree.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Subgoal {
    pub literals: Vec<Literal>,
    pub description: String,
    pub mode: SubgoalMode,
}

impl Subgoal {
    pub fn achieve(literals: Vec<Literal>, description: impl Into<String>) -> Self {
        Subgoal { literals, description: description.into(), mode: SubgoalMode::Achieve }
    }

    pub fn ensure(literals: Vec<Literal>, description: impl Into<String>) -> Self {
        Subgoal { literals, description: description.into(), mode: SubgoalMode::Ensure }
    }

    pub fn expression(&self) -> String {
        format_conjunction(&self.literals)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Fallback,
    Sequence,
    Parallel { threshold: usize },
    Condition { binding: String },
    Action { binding: String },
    Open(Subgoal),
}

impl NodeKind {
    pub fn is_control(&self) -> bool {
        matches!(self, NodeKind::Fallback | NodeKind::Sequence | NodeKind::Parallel { .. })
    }

    pub fn element_name(&self) -> &'static str {
        match self {
            NodeKind::Fallback => "Fallback",
            NodeKind::Sequence => "Sequence",
            NodeKind::Parallel { .. } => "Parallel",
            NodeKind::Condition { .. } => "Condition",
            NodeKind::Action { .. } => "Action",
            NodeKind::Open(_) => "Open",
        }
    }

    pub fn binding(&self) -> Option<&str> {
        match self {
            NodeKind::Condition { binding } | NodeKind::Action { binding } => Some(binding),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BtNode {
    pub name: String,
    pub kind: NodeKind,
    pub children: Vec<BtNode>,
}

impl BtNode {
    pub fn new(name: impl Into<String>, kind: NodeKind, children: Vec<BtNode>) -> Self {
        BtNode { name: name.into(), kind, children }
    }

    pub fn fallback(name: impl Into<String>, children: Vec<BtNode>) -> Self {
        Self::new(name, NodeKind::Fallback, children)
    }

    pub fn sequence(name: impl Into<String>, children: Vec<BtNode>) -> Self {
        Self::new(name, NodeKind::Sequence, children)
    }

    pub fn parallel(name: impl Into<String>, threshold: usize, children: Vec<BtNode>) -> Self {
        Self::new(name, NodeKind::Parallel { threshold }, children)
    }

    /// Condition leaf whose instance name doubles as its binding.
    pub fn condition(binding: impl Into<String>) -> Self {
        let binding = binding.into();
        Self::new(binding.clone(), NodeKind::Condition { binding }, Vec::new())
    }

    /// Action leaf whose instance name doubles as its binding.
    pub fn action(binding: impl Into<String>) -> Self {
        let binding = binding.into();
        Self::new(binding.clone(), NodeKind::Action { binding }, Vec::new())
    }

    pub fn open(name: impl Into<String>, subgoal: Subgoal) -> Self {
        Self::new(name, NodeKind::Open(subgoal), Vec::new())
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty() && !self.kind.is_control()
    }

    /// Pre-order traversal.
    pub fn iter(&self) -> PreOrder<'_> {
        PreOrder { stack: vec![self] }
    }

    pub fn count(&self) -> usize {
        1 + self.children.iter().map(BtNode::count).sum::<usize>()
    }

    /// Nodes on the longest root-to-leaf path (a lone leaf has depth 1).
    pub fn depth(&self) -> usize {
        1 + self.children.iter().map(BtNode::depth).max().unwrap_or(0)
    }

    pub fn find(&self, name: &str) -> Option<&BtNode> {
        self.iter().find(|n| n.name == name)
    }

    /// Replaces the first node named `name` (pre-order); returns whether it was found.
    pub fn replace(&mut self, name: &str, replacement: BtNode) -> bool {
        if self.name == name {
            *self = replacement;
            return true;
        }
        let mut slot = Some(replacement);
        self.replace_inner(name, &mut slot)
    }

    fn replace_inner(&mut self, name: &str, slot: &mut Option<BtNode>) -> bool {
        for child in &mut self.children {
            if child.name == name {
                *child = slot.take().expect("replacement consumed once");
                return true;
            }
            if child.replace_inner(name, slot) {
                return true;
            }
        }
        false
    }
}

pub struct PreOrder<'a> {
    stack: Vec<&'a BtNode>,
}

impl<'a> Iterator for PreOrder<'a> {
    type Item = &'a BtNode;

    fn next(&mut self) -> Option<Self::Item> {
        let node = self.stack.pop()?;
        self.stack.extend(node.children.iter().rev());
        Some(node)
    }
}

/// A behavior tree with cached size and depth.
#[derive(Debug, Clone)]
pub struct BehaviorTree {
    root: BtNode,
    node_count: usize,
    depth: usize,
}

impl BehaviorTree {
    pub fn new(root: BtNode) -> Self {
        let node_count = root.count();
        let depth = root.depth();
        BehaviorTree { root, node_count, depth }
    }

    pub fn root(&self) -> &BtNode {
        &self.root
    }

    pub fn into_root(self) -> BtNode {
        self.root
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn iter(&self) -> PreOrder<'_> {
        self.root.iter()
    }

    /// Instance names of the `Open` nodes, leftmost first.
    pub fn open_nodes(&self) -> Vec<String> {
        self.iter()
            .filter(|n| matches!(n.kind, NodeKind::Open(_)))
            .map(|n| n.name.clone())
            .collect()
    }

    pub fn has_open_nodes(&self) -> bool {
        self.iter().any(|n| matches!(n.kind, NodeKind::Open(_)))
    }

    /// Nodes that are not `Open` placeholders.
    pub fn realized_count(&self) -> usize {
        self.iter().filter(|n| !matches!(n.kind, NodeKind::Open(_))).count()
    }

    /// Leaf bindings in pre-order, deduplicated.
    pub fn bindings(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for b in self.iter().filter_map(|n| n.kind.binding()) {
            if !out.contains(&b) {
                out.push(b);
            }
        }
        out
    }

    /// Returns a copy with the node `name` replaced.
    pub fn with_replaced(&self, name: &str, replacement: BtNode) -> Option<BehaviorTree> {
        let mut root = self.root.clone();
        root.replace(name, replacement).then(|| BehaviorTree::new(root))
    }
}

impl PartialEq for BehaviorTree {
    fn eq(&self, other: &Self) -> bool {
        self.root == other.root
    }
}

impl Eq for BehaviorTree {}

impl From<BtNode> for BehaviorTree {
    fn from(root: BtNode) -> Self {
        BehaviorTree::new(root)
    }
}

/// The UAV patrol tree: `Fallback[Sequence[check-target_detected, warn-target], move-to_next-pos]`.
pub fn uav_patrol_tree() -> BehaviorTree {
    BehaviorTree::new(BtNode::fallback(
        "fallback_node",
        vec![
            BtNode::sequence(
                "sequence_node",
                vec![BtNode::condition("check-target_detected"), BtNode::action("warn-target")],
            ),
            BtNode::action("move-to_next-pos"),
        ],
    ))
}
