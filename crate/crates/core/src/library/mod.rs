//! Node library (leaf catalog), operator catalog, and lexical retrieval.

mod ops;
mod retrieve;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use ops::{builtin_operators, OpKind, OperatorDef, MAX_DECOMPOSITION};
pub use retrieve::{jaccard, retrieve, tokenize, Retrieved};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeType {
    Condition,
    Action,
}

impl fmt::Display for NodeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NodeType::Condition => "condition",
            NodeType::Action => "action",
        })
    }
}

/// One entry of the node library.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeDefinition {
    #[serde(rename = "type")]
    pub node_type: NodeType,
    pub name: String,
    pub description: String,
    pub implementation: String,
    /// Scenario primitive (condition predicate or action schema) executed by this node.
    pub binding: String,
}

impl NodeDefinition {
    /// Name plus description, the text retrieval scores against.
    pub fn search_text(&self) -> String {
        format!("{} {}", self.name, self.description)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LibraryError {
    #[error("duplicate node name '{0}'")]
    DuplicateName(String),
    #[error("node '{name}': unknown node type '{found}' (expected condition or action)")]
    UnknownNodeType { name: String, found: String },
    #[error("schema violation: {0}")]
    SchemaViolation(String),
}

/// Leaf definitions indexed by name, plus the operator catalog.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeLibrary {
    definitions: BTreeMap<String, NodeDefinition>,
    operators: Vec<OperatorDef>,
}

impl Default for NodeLibrary {
    fn default() -> Self {
        NodeLibrary { definitions: BTreeMap::new(), operators: builtin_operators() }
    }
}

impl NodeLibrary {
    pub fn new(defs: impl IntoIterator<Item = NodeDefinition>) -> Result<Self, LibraryError> {
        let mut definitions = BTreeMap::new();
        for def in defs {
            if definitions.contains_key(&def.name) {
                return Err(LibraryError::DuplicateName(def.name));
            }
            definitions.insert(def.name.clone(), def);
        }
        Ok(NodeLibrary { definitions, operators: builtin_operators() })
    }

    pub fn get(&self, name: &str) -> Option<&NodeDefinition> {
        self.definitions.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.definitions.contains_key(name)
    }

    /// Definitions in lexicographic name order.
    pub fn iter(&self) -> impl Iterator<Item = &NodeDefinition> {
        self.definitions.values()
    }

    pub fn conditions(&self) -> impl Iterator<Item = &NodeDefinition> {
        self.iter().filter(|d| d.node_type == NodeType::Condition)
    }

    pub fn actions(&self) -> impl Iterator<Item = &NodeDefinition> {
        self.iter().filter(|d| d.node_type == NodeType::Action)
    }

    pub fn len(&self) -> usize {
        self.definitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.definitions.is_empty()
    }

    pub fn operators(&self) -> &[OperatorDef] {
        &self.operators
    }

    pub fn to_json(&self) -> String {
        let doc = serde_json::json!({ "nodes": self.iter().collect::<Vec<_>>() });
        let mut s = serde_json::to_string_pretty(&doc).expect("library serializes");
        s.push('\n');
        s
    }
}

/// Loads a library document: `{"nodes": [{type, name, description, implementation, binding}]}`.
pub fn load_library(text: &str) -> Result<NodeLibrary, LibraryError> {
    let schema = |m: String| LibraryError::SchemaViolation(m);
    let doc: serde_json::Value =
        serde_json::from_str(text).map_err(|e| schema(format!("invalid JSON: {e}")))?;
    let nodes = doc
        .as_object()
        .ok_or_else(|| schema("top level must be an object".into()))?
        .get("nodes")
        .ok_or_else(|| schema("missing key 'nodes'".into()))?
        .as_array()
        .ok_or_else(|| schema("'nodes' must be a list".into()))?;

    let mut defs = Vec::with_capacity(nodes.len());
    for (i, entry) in nodes.iter().enumerate() {
        let obj = entry.as_object().ok_or_else(|| schema(format!("nodes[{i}] must be an object")))?;
        let field = |key: &str| -> Result<String, LibraryError> {
            obj.get(key)
                .ok_or_else(|| schema(format!("nodes[{i}]: missing key '{key}'")))?
                .as_str()
                .map(str::to_string)
                .ok_or_else(|| schema(format!("nodes[{i}]: '{key}' must be a string")))
        };
        let name = field("name")?;
        if name.is_empty() {
            return Err(schema(format!("nodes[{i}]: empty name")));
        }
        let raw_type = field("type")?;
        let node_type = match raw_type.as_str() {
            "condition" => NodeType::Condition,
            "action" => NodeType::Action,
            _ => return Err(LibraryError::UnknownNodeType { name, found: raw_type }),
        };
        defs.push(NodeDefinition {
            node_type,
            description: field("description")?,
            implementation: field("implementation")?,
            binding: field("binding")?,
            name,
        });
    }
    NodeLibrary::new(defs)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn uav_library_json() -> &'static str {
        r#"{"nodes": [
            {"type": "condition", "name": "check-target_detected",
             "description": "Report whether a suspicious target has been spotted.",
             "implementation": "...", "binding": "target_detected"},
            {"type": "action", "name": "warn-target", "description": "Warn the target.",
             "implementation": "...", "binding": "warn"},
            {"type": "action", "name": "move-to_next-pos",
             "description": "Advance to the following waypoint on the route.",
             "implementation": "...", "binding": "advance"}
        ]}"#
    }

    #[test]
    fn loads_uav_library() {
        let lib = load_library(uav_library_json()).unwrap();
        assert_eq!(lib.len(), 3);
        let types: Vec<_> = lib.iter().map(|d| (d.name.as_str(), d.node_type)).collect();
        // lexicographic order
        assert_eq!(
            types,
            [
                ("check-target_detected", NodeType::Condition),
                ("move-to_next-pos", NodeType::Action),
                ("warn-target", NodeType::Action),
            ]
        );
        assert_eq!(lib.operators().len(), 5);
    }

    #[test]
    fn duplicate_names_rejected() {
        let doc = r#"{"nodes": [
            {"type": "action", "name": "warn-target", "description": "", "implementation": "", "binding": "w"},
            {"type": "action", "name": "warn-target", "description": "", "implementation": "", "binding": "w"}
        ]}"#;
        assert_eq!(load_library(doc), Err(LibraryError::DuplicateName("warn-target".into())));
    }

    #[test]
    fn empty_library_is_valid() {
        let lib = load_library(r#"{"nodes": []}"#).unwrap();
        assert!(lib.is_empty());
    }

    #[test]
    fn schema_errors() {
        assert!(matches!(load_library("[]"), Err(LibraryError::SchemaViolation(_))));
        assert!(matches!(load_library("{}"), Err(LibraryError::SchemaViolation(_))));
        assert!(matches!(
            load_library(r#"{"nodes": [{"type": "action", "name": "x"}]}"#),
            Err(LibraryError::SchemaViolation(_))
        ));
        assert!(matches!(
            load_library(
                r#"{"nodes": [{"type": "decorator", "name": "x", "description": "", "implementation": "", "binding": ""}]}"#
            ),
            Err(LibraryError::UnknownNodeType { .. })
        ));
    }

    #[test]
    fn json_round_trip() {
        let lib = load_library(uav_library_json()).unwrap();
        assert_eq!(load_library(&lib.to_json()).unwrap(), lib);
    }
}
