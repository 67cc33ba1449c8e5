//! Expansion candidates and their application to partial trees.

use std::collections::BTreeSet;
use std::fmt;

use serde_json::{json, Value as Json};
use thiserror::Error;

use crate::bt::{BehaviorTree, BtNode, NodeKind, Subgoal, SubgoalMode};
use crate::expr::parse_conjunction;
use crate::library::{NodeLibrary, NodeType, OpKind, OperatorDef};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ControlKind {
    Sequence,
    Fallback,
    Parallel { threshold: usize },
}

impl ControlKind {
    fn element(self) -> &'static str {
        match self {
            ControlKind::Sequence => "Sequence",
            ControlKind::Fallback => "Fallback",
            ControlKind::Parallel { .. } => "Parallel",
        }
    }
}

/// A node template inside a decomposition.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ChildSpec {
    /// A leaf bound to a library definition.
    Leaf(String),
    Open(Subgoal),
    Control { kind: ControlKind, children: Vec<ChildSpec> },
}

impl ChildSpec {
    fn definitions<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            ChildSpec::Leaf(name) => out.push(name),
            ChildSpec::Open(_) => {}
            ChildSpec::Control { children, .. } => children.iter().for_each(|c| c.definitions(out)),
        }
    }

    fn realized(&self) -> usize {
        match self {
            ChildSpec::Leaf(_) => 1,
            ChildSpec::Open(_) => 0,
            ChildSpec::Control { children, .. } => 1 + children.iter().map(ChildSpec::realized).sum::<usize>(),
        }
    }
}

impl fmt::Display for ChildSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChildSpec::Leaf(name) => f.write_str(name),
            ChildSpec::Open(sub) => write!(f, "{}({})", sub.mode.as_str(), sub.expression()),
            ChildSpec::Control { kind, children } => {
                write!(f, "{}", kind.element())?;
                if let ControlKind::Parallel { threshold } = kind {
                    write!(f, "/{threshold}")?;
                }
                f.write_str("[")?;
                for (i, c) in children.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{c}")?;
                }
                f.write_str("]")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Payload {
    /// `BindLeaf`: the definition to bind.
    Bind(String),
    /// Decompositions: ordered children (threshold only for `ParDecompose`).
    Children { children: Vec<ChildSpec>, threshold: Option<usize> },
    /// `GuardPattern`: a condition and the subgoal it guards.
    Guard { condition: String, handler: Subgoal },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ExpansionCandidate {
    pub target: String,
    pub operator: OpKind,
    pub payload: Payload,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CandidateError {
    #[error("target '{0}' is not an open node of the state")]
    UnknownTarget(String),
    #[error("'{0}' is not in the node library")]
    UnknownDefinition(String),
    #[error("'{name}' is a {found}, expected a {expected}")]
    WrongNodeType { name: String, expected: NodeType, found: NodeType },
    #[error("{operator} does not admit {arity} children")]
    Arity { operator: OpKind, arity: usize },
    #[error("payload does not fit operator {0}")]
    PayloadMismatch(OpKind),
    #[error("parallel threshold {threshold} invalid for {children} children")]
    Threshold { threshold: usize, children: usize },
    #[error("schema: {0}")]
    Schema(String),
}

impl ExpansionCandidate {
    pub fn bind(target: impl Into<String>, definition: impl Into<String>) -> Self {
        ExpansionCandidate { target: target.into(), operator: OpKind::BindLeaf, payload: Payload::Bind(definition.into()) }
    }

    pub fn decompose(target: impl Into<String>, operator: OpKind, children: Vec<ChildSpec>) -> Self {
        let threshold = (operator == OpKind::ParDecompose).then_some(children.len());
        ExpansionCandidate { target: target.into(), operator, payload: Payload::Children { children, threshold } }
    }

    pub fn guard(target: impl Into<String>, condition: impl Into<String>, handler: Subgoal) -> Self {
        ExpansionCandidate {
            target: target.into(),
            operator: OpKind::GuardPattern,
            payload: Payload::Guard { condition: condition.into(), handler },
        }
    }

    /// Library definitions the candidate would bind, in order.
    pub fn definitions(&self) -> Vec<&str> {
        let mut out = Vec::new();
        match &self.payload {
            Payload::Bind(name) => out.push(name.as_str()),
            Payload::Children { children, .. } => children.iter().for_each(|c| c.definitions(&mut out)),
            Payload::Guard { condition, .. } => out.push(condition.as_str()),
        }
        out
    }

    /// Stable human-readable form, also used to break selection ties.
    pub fn describe(&self) -> String {
        let body = match &self.payload {
            Payload::Bind(name) => name.clone(),
            Payload::Children { children, threshold } => {
                let parts: Vec<String> = children.iter().map(ChildSpec::to_string).collect();
                match threshold {
                    Some(m) => format!("{m}/[{}]", parts.join(", ")),
                    None => format!("[{}]", parts.join(", ")),
                }
            }
            Payload::Guard { condition, handler } => {
                format!("{condition} -> {}({})", handler.mode.as_str(), handler.expression())
            }
        };
        format!("{} {}: {}", self.operator, self.target, body)
    }

    /// Checks operator/payload agreement, arity bounds, and that every
    /// referenced definition exists with the right node type.
    pub fn check(&self, library: &NodeLibrary) -> Result<(), CandidateError> {
        let op = operator_def(library, self.operator);
        match (&self.payload, self.operator) {
            (Payload::Bind(name), OpKind::BindLeaf) => {
                library.get(name).ok_or_else(|| CandidateError::UnknownDefinition(name.clone()))?;
            }
            (Payload::Guard { condition, .. }, OpKind::GuardPattern) => {
                expect_type(library, condition, NodeType::Condition)?;
            }
            (Payload::Children { children, threshold }, kind)
                if matches!(kind, OpKind::SeqDecompose | OpKind::FbDecompose | OpKind::ParDecompose) =>
            {
                if !op.admits(children.len()) {
                    return Err(CandidateError::Arity { operator: kind, arity: children.len() });
                }
                match (kind, threshold) {
                    (OpKind::ParDecompose, Some(m)) if (1..=children.len()).contains(m) => {}
                    (OpKind::ParDecompose, m) => {
                        return Err(CandidateError::Threshold { threshold: m.unwrap_or(0), children: children.len() })
                    }
                    (_, None) => {}
                    (_, Some(_)) => return Err(CandidateError::PayloadMismatch(kind)),
                }
                children.iter().try_for_each(|c| check_child(c, library))?;
            }
            _ => return Err(CandidateError::PayloadMismatch(self.operator)),
        }
        self.definitions()
            .into_iter()
            .find(|d| !library.contains(d))
            .map_or(Ok(()), |d| Err(CandidateError::UnknownDefinition(d.to_string())))
    }

    /// Realized (non-open) nodes the candidate adds.
    pub fn realized_nodes(&self) -> usize {
        match &self.payload {
            Payload::Bind(_) => 1,
            Payload::Guard { .. } => 2,
            Payload::Children { children, .. } => children.iter().map(ChildSpec::realized).sum(),
        }
    }
}

fn operator_def(library: &NodeLibrary, kind: OpKind) -> OperatorDef {
    library
        .operators()
        .iter()
        .copied()
        .find(|o| o.kind == kind)
        .expect("built-in catalog covers every operator")
}

fn expect_type(library: &NodeLibrary, name: &str, expected: NodeType) -> Result<(), CandidateError> {
    let def = library.get(name).ok_or_else(|| CandidateError::UnknownDefinition(name.to_string()))?;
    if def.node_type != expected {
        return Err(CandidateError::WrongNodeType { name: name.to_string(), expected, found: def.node_type });
    }
    Ok(())
}

fn check_child(child: &ChildSpec, library: &NodeLibrary) -> Result<(), CandidateError> {
    match child {
        ChildSpec::Leaf(name) => {
            library.get(name).ok_or_else(|| CandidateError::UnknownDefinition(name.clone()))?;
            Ok(())
        }
        ChildSpec::Open(_) => Ok(()),
        ChildSpec::Control { kind, children } => {
            if children.is_empty() {
                return Err(CandidateError::Schema(format!("empty {} template", kind.element())));
            }
            if let ControlKind::Parallel { threshold } = kind {
                if !(1..=children.len()).contains(threshold) {
                    return Err(CandidateError::Threshold { threshold: *threshold, children: children.len() });
                }
            }
            children.iter().try_for_each(|c| check_child(c, library))
        }
    }
}

/// Allocates instance names that are unique within one tree.
struct Namer {
    taken: BTreeSet<String>,
}

impl Namer {
    fn new(tree: &BehaviorTree) -> Self {
        Namer { taken: tree.iter().map(|n| n.name.clone()).collect() }
    }

    fn fresh(&mut self, base: &str) -> String {
        let mut name = base.to_string();
        let mut i = 2;
        while self.taken.contains(&name) {
            name = format!("{base}_{i}");
            i += 1;
        }
        self.taken.insert(name.clone());
        name
    }

    fn open(&mut self) -> String {
        let mut i = 1;
        loop {
            let name = format!("open_{i}");
            if self.taken.insert(name.clone()) {
                return name;
            }
            i += 1;
        }
    }

    fn leaf(&mut self, library: &NodeLibrary, def: &str) -> BtNode {
        let name = self.fresh(def);
        let binding = def.to_string();
        let kind = match library.get(def).map(|d| d.node_type) {
            Some(NodeType::Condition) => NodeKind::Condition { binding },
            _ => NodeKind::Action { binding },
        };
        BtNode::new(name, kind, Vec::new())
    }

    fn control(&mut self, kind: ControlKind, children: Vec<BtNode>) -> BtNode {
        match kind {
            ControlKind::Sequence => BtNode::sequence(self.fresh("sequence_node"), children),
            ControlKind::Fallback => BtNode::fallback(self.fresh("fallback_node"), children),
            ControlKind::Parallel { threshold } => BtNode::parallel(self.fresh("parallel_node"), threshold, children),
        }
    }

    fn child(&mut self, library: &NodeLibrary, spec: &ChildSpec) -> BtNode {
        match spec {
            ChildSpec::Leaf(def) => self.leaf(library, def),
            ChildSpec::Open(sub) => BtNode::open(self.open(), sub.clone()),
            ChildSpec::Control { kind, children } => {
                let built = children.iter().map(|c| self.child(library, c)).collect();
                self.control(*kind, built)
            }
        }
    }
}

/// Applies `candidate` to `tree`, returning the expanded tree.
///
/// A sequence (fallback) decomposition of an open node whose parent is
/// already a sequence (fallback) is spliced into the parent, as long as it
/// adds at least one realized node.
pub fn apply_candidate(
    tree: &BehaviorTree,
    candidate: &ExpansionCandidate,
    library: &NodeLibrary,
) -> Result<BehaviorTree, CandidateError> {
    candidate.check(library)?;
    let target = tree
        .root()
        .find(&candidate.target)
        .filter(|n| matches!(n.kind, NodeKind::Open(_)))
        .ok_or_else(|| CandidateError::UnknownTarget(candidate.target.clone()))?;
    let _ = target;
    let mut namer = Namer::new(tree);
    namer.taken.remove(&candidate.target);
    let replacement = match &candidate.payload {
        Payload::Bind(def) => vec![namer.leaf(library, def)],
        Payload::Guard { condition, handler } => {
            let cond = namer.leaf(library, condition);
            let open = BtNode::open(namer.open(), handler.clone());
            vec![namer.control(ControlKind::Sequence, vec![cond, open])]
        }
        Payload::Children { children, threshold } => {
            let built: Vec<BtNode> = children.iter().map(|c| namer.child(library, c)).collect();
            let splice_into = match candidate.operator {
                OpKind::SeqDecompose => Some(NodeKind::Sequence),
                OpKind::FbDecompose => Some(NodeKind::Fallback),
                _ => None,
            };
            let parent_kind = parent_of(tree.root(), &candidate.target).map(|p| p.kind.clone());
            if splice_into.is_some() && splice_into == parent_kind && candidate.realized_nodes() > 0 {
                built
            } else {
                let kind = match candidate.operator {
                    OpKind::SeqDecompose => ControlKind::Sequence,
                    OpKind::FbDecompose => ControlKind::Fallback,
                    _ => ControlKind::Parallel { threshold: threshold.unwrap_or(built.len()) },
                };
                vec![namer.control(kind, built)]
            }
        }
    };
    let mut root = tree.root().clone();
    if root.name == candidate.target {
        let mut nodes = replacement;
        debug_assert_eq!(nodes.len(), 1);
        root = nodes.remove(0);
    } else {
        splice(&mut root, &candidate.target, replacement);
    }
    Ok(BehaviorTree::new(root))
}

fn parent_of<'a>(node: &'a BtNode, name: &str) -> Option<&'a BtNode> {
    node.iter().find(|n| n.children.iter().any(|c| c.name == name))
}

fn splice(node: &mut BtNode, name: &str, replacement: Vec<BtNode>) -> bool {
    if let Some(i) = node.children.iter().position(|c| c.name == name) {
        node.children.splice(i..=i, replacement);
        return true;
    }
    let mut replacement = Some(replacement);
    for child in &mut node.children {
        if let Some(r) = replacement.take() {
            if splice(child, name, r.clone()) {
                return true;
            }
            replacement = Some(r);
        }
    }
    false
}

// ---- wire form ----

fn subgoal_json(sub: &Subgoal) -> Json {
    json!({"subgoal": sub.expression(), "mode": sub.mode.as_str(), "description": sub.description})
}

fn child_json(c: &ChildSpec) -> Json {
    match c {
        ChildSpec::Leaf(name) => json!({"node": name}),
        ChildSpec::Open(sub) => subgoal_json(sub),
        ChildSpec::Control { kind, children } => {
            let mut v = json!({"control": kind.element(), "children": children.iter().map(child_json).collect::<Vec<_>>()});
            if let ControlKind::Parallel { threshold } = kind {
                v["threshold"] = json!(threshold);
            }
            v
        }
    }
}

impl ExpansionCandidate {
    pub fn to_json(&self) -> Json {
        let payload = match &self.payload {
            Payload::Bind(name) => json!({"node": name}),
            Payload::Children { children, threshold } => {
                let mut v = json!({"children": children.iter().map(child_json).collect::<Vec<_>>()});
                if let Some(m) = threshold {
                    v["threshold"] = json!(m);
                }
                v
            }
            Payload::Guard { condition, handler } => json!({"condition": condition, "handler": subgoal_json(handler)}),
        };
        json!({"operator": self.operator.as_str(), "target": self.target, "payload": payload})
    }

    pub fn from_json(v: &Json) -> Result<Self, CandidateError> {
        let schema = |m: &str| CandidateError::Schema(m.to_string());
        let obj = v.as_object().ok_or_else(|| schema("candidate must be an object"))?;
        let operator: OpKind = obj
            .get("operator")
            .and_then(Json::as_str)
            .ok_or_else(|| schema("missing 'operator'"))?
            .parse()
            .map_err(|e: String| CandidateError::Schema(e))?;
        let target = obj.get("target").and_then(Json::as_str).ok_or_else(|| schema("missing 'target'"))?;
        let payload = obj.get("payload").and_then(Json::as_object).ok_or_else(|| schema("missing 'payload'"))?;
        let payload = match operator {
            OpKind::BindLeaf => Payload::Bind(
                payload.get("node").and_then(Json::as_str).ok_or_else(|| schema("BindLeaf needs 'node'"))?.to_string(),
            ),
            OpKind::GuardPattern => Payload::Guard {
                condition: payload
                    .get("condition")
                    .and_then(Json::as_str)
                    .ok_or_else(|| schema("GuardPattern needs 'condition'"))?
                    .to_string(),
                handler: subgoal_from_json(payload.get("handler").ok_or_else(|| schema("GuardPattern needs 'handler'"))?)?,
            },
            _ => {
                let children = payload
                    .get("children")
                    .and_then(Json::as_array)
                    .ok_or_else(|| schema("decomposition needs 'children'"))?
                    .iter()
                    .map(child_from_json)
                    .collect::<Result<Vec<_>, _>>()?;
                let threshold = match payload.get("threshold") {
                    None if operator == OpKind::ParDecompose => Some(children.len()),
                    None => None,
                    Some(t) => Some(t.as_u64().ok_or_else(|| schema("'threshold' must be an integer"))? as usize),
                };
                Payload::Children { children, threshold }
            }
        };
        Ok(ExpansionCandidate { target: target.to_string(), operator, payload })
    }
}

fn subgoal_from_json(v: &Json) -> Result<Subgoal, CandidateError> {
    let schema = |m: String| CandidateError::Schema(m);
    let expr = v.get("subgoal").and_then(Json::as_str).ok_or_else(|| schema("subgoal needs 'subgoal'".into()))?;
    let literals = parse_conjunction(expr).map_err(|e| schema(format!("subgoal '{expr}': {e}")))?;
    let mode = match v.get("mode").and_then(Json::as_str) {
        None => SubgoalMode::Achieve,
        Some(m) => SubgoalMode::parse(m).ok_or_else(|| schema(format!("unknown mode '{m}'")))?,
    };
    let description = v.get("description").and_then(Json::as_str).unwrap_or_default().to_string();
    Ok(Subgoal { literals, description, mode })
}

fn child_from_json(v: &Json) -> Result<ChildSpec, CandidateError> {
    if let Some(name) = v.get("node").and_then(Json::as_str) {
        return Ok(ChildSpec::Leaf(name.to_string()));
    }
    if v.get("subgoal").is_some() {
        return subgoal_from_json(v).map(ChildSpec::Open);
    }
    let control = v
        .get("control")
        .and_then(Json::as_str)
        .ok_or_else(|| CandidateError::Schema("child needs 'node', 'subgoal' or 'control'".into()))?;
    let children = v
        .get("children")
        .and_then(Json::as_array)
        .ok_or_else(|| CandidateError::Schema("control child needs 'children'".into()))?
        .iter()
        .map(child_from_json)
        .collect::<Result<Vec<_>, _>>()?;
    let kind = match control {
        "Sequence" => ControlKind::Sequence,
        "Fallback" => ControlKind::Fallback,
        "Parallel" => ControlKind::Parallel {
            threshold: v.get("threshold").and_then(Json::as_u64).map_or(children.len(), |t| t as usize),
        },
        other => return Err(CandidateError::Schema(format!("unknown control '{other}'"))),
    };
    Ok(ChildSpec::Control { kind, children })
}
