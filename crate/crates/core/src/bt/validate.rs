use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use super::node::{BehaviorTree, BtNode, NodeKind};
use crate::library::{NodeLibrary, NodeType};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FindingKind {
    EmptyControlNode,
    LeafWithChildren,
    BadThreshold,
    DuplicateInstanceName,
    UnresolvedBinding,
    KindMismatch,
}

impl FindingKind {
    pub fn label(self) -> &'static str {
        match self {
            FindingKind::EmptyControlNode => "empty control node",
            FindingKind::LeafWithChildren => "leaf with children",
            FindingKind::BadThreshold => "parallel threshold out of range",
            FindingKind::DuplicateInstanceName => "duplicate instance name",
            FindingKind::UnresolvedBinding => "unresolved binding",
            FindingKind::KindMismatch => "leaf kind does not match its definition",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Finding {
    pub kind: FindingKind,
    pub node: String,
    pub detail: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at '{}'", self.kind.label(), self.node)?;
        if !self.detail.is_empty() {
            write!(f, ": {}", self.detail)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub findings: Vec<Finding>,
    /// Open placeholders still present; a finalized tree has none.
    pub open_nodes: Vec<String>,
}

impl ValidationReport {
    /// No structural findings, ignoring open placeholders.
    pub fn structurally_sound(&self) -> bool {
        self.findings.is_empty()
    }
}

/// Structural check: node invariants, binding resolution and leftover open nodes.
pub fn validate_structure(tree: &BehaviorTree, library: &NodeLibrary) -> ValidationReport {
    let mut findings = Vec::new();
    let mut seen = BTreeSet::new();
    let mut open_nodes = Vec::new();
    for node in tree.iter() {
        if !seen.insert(node.name.as_str()) {
            findings.push(finding(FindingKind::DuplicateInstanceName, node, String::new()));
        }
        check_node(node, library, &mut findings);
        if matches!(node.kind, NodeKind::Open(_)) {
            open_nodes.push(node.name.clone());
        }
    }
    ValidationReport { ok: findings.is_empty() && open_nodes.is_empty(), findings, open_nodes }
}

fn finding(kind: FindingKind, node: &BtNode, detail: String) -> Finding {
    Finding { kind, node: node.name.clone(), detail }
}

fn check_node(node: &BtNode, library: &NodeLibrary, out: &mut Vec<Finding>) {
    let n = node.children.len();
    match &node.kind {
        NodeKind::Fallback | NodeKind::Sequence | NodeKind::Parallel { .. } if n == 0 => {
            out.push(finding(FindingKind::EmptyControlNode, node, node.kind.element_name().into()));
        }
        _ => {}
    }
    if let NodeKind::Parallel { threshold } = node.kind {
        if threshold == 0 || (n > 0 && threshold > n) {
            out.push(finding(
                FindingKind::BadThreshold,
                node,
                format!("threshold {threshold} with {n} children"),
            ));
        }
    }
    if !node.kind.is_control() && n > 0 {
        out.push(finding(FindingKind::LeafWithChildren, node, format!("{n} children")));
    }
    let expected = match node.kind {
        NodeKind::Condition { .. } => NodeType::Condition,
        NodeKind::Action { .. } => NodeType::Action,
        _ => return,
    };
    let binding = node.kind.binding().unwrap_or_default();
    match library.get(binding) {
        None => out.push(finding(FindingKind::UnresolvedBinding, node, binding.to_string())),
        Some(def) if def.node_type != expected => out.push(finding(
            FindingKind::KindMismatch,
            node,
            format!("'{binding}' is a {}", def.node_type),
        )),
        Some(_) => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bt::{uav_patrol_tree, Subgoal};
    use crate::library::{load_library, tests::uav_library_json};

    fn lib() -> NodeLibrary {
        load_library(uav_library_json()).unwrap()
    }

    #[test]
    fn table_tree_is_clean() {
        let r = validate_structure(&uav_patrol_tree(), &lib());
        assert!(r.ok, "{:?}", r.findings);
        assert!(r.findings.is_empty());
    }

    #[test]
    fn empty_sequence_reported() {
        let t = BehaviorTree::new(BtNode::sequence("s", vec![]));
        let r = validate_structure(&t, &lib());
        assert!(!r.ok);
        assert_eq!(r.findings[0].kind.label(), "empty control node");
    }

    #[test]
    fn unresolved_binding_reported() {
        let t = BehaviorTree::new(BtNode::fallback(
            "f",
            vec![BtNode::action("fly-to-moon"), BtNode::action("warn-target")],
        ));
        let r = validate_structure(&t, &lib());
        assert!(!r.ok);
        assert_eq!(r.findings.len(), 1);
        assert_eq!(r.findings[0].kind.label(), "unresolved binding");
    }

    #[test]
    fn every_violation_is_listed() {
        let mut leaf = BtNode::action("warn-target");
        leaf.children.push(BtNode::action("move-to_next-pos"));
        let t = BehaviorTree::new(BtNode::parallel(
            "p",
            5,
            vec![leaf, BtNode::action("check-target_detected"), BtNode::condition("warn-target")],
        ));
        let kinds: Vec<_> = validate_structure(&t, &lib()).findings.iter().map(|f| f.kind).collect();
        assert_eq!(
            kinds,
            [
                FindingKind::BadThreshold,
                FindingKind::LeafWithChildren,
                FindingKind::KindMismatch,
                FindingKind::DuplicateInstanceName,
                FindingKind::KindMismatch,
            ]
        );
    }

    #[test]
    fn open_nodes_do_not_count_as_findings() {
        let t = BehaviorTree::new(BtNode::sequence(
            "s",
            vec![BtNode::open("o", Subgoal::achieve(vec![], "")), BtNode::action("warn-target")],
        ));
        let r = validate_structure(&t, &lib());
        assert!(r.structurally_sound());
        assert!(!r.ok);
        assert_eq!(r.open_nodes, ["o"]);
    }
}
