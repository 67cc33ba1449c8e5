//! Five-field dataset records, stored as JSON Lines.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::xml::{parse_bt_xml, XmlError};
use crate::bt::{validate_structure, FindingKind};
use crate::library::NodeLibrary;

const KEYS: [&str; 5] = ["name", "description", "xml", "nodes", "implementations"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeMeta {
    pub name: String,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeImpl {
    pub name: String,
    pub implementation: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub name: String,
    pub description: String,
    pub xml: String,
    pub nodes: Vec<NodeMeta>,
    pub implementations: Vec<NodeImpl>,
}

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("schema violation: {0}")]
    SchemaViolation(String),
    #[error("cross-reference violation: {0}")]
    CrossRefViolation(String),
    #[error("xml field: {0}")]
    Xml(#[from] XmlError),
}

#[derive(Debug, Error)]
#[error("line {line}: {error}")]
pub struct RecordsError {
    pub line: usize,
    #[source]
    pub error: RecordError,
}

/// Parses one record and enforces the binding cross-references.
pub fn read_record(text: &str) -> Result<DatasetRecord, RecordError> {
    let value: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| RecordError::SchemaViolation(format!("invalid JSON: {e}")))?;
    let obj = value
        .as_object()
        .ok_or_else(|| RecordError::SchemaViolation("record must be a JSON object".into()))?;
    for key in KEYS {
        if !obj.contains_key(key) {
            return Err(RecordError::SchemaViolation(format!("missing key '{key}'")));
        }
    }
    if let Some(extra) = obj.keys().find(|k| !KEYS.contains(&k.as_str())) {
        return Err(RecordError::SchemaViolation(format!("unexpected key '{extra}'")));
    }
    let record: DatasetRecord =
        serde_json::from_value(value).map_err(|e| RecordError::SchemaViolation(e.to_string()))?;
    check_record(&record)?;
    Ok(record)
}

/// Validates the xml field and that every leaf binding has exactly one
/// metadata entry and one implementation entry.
pub fn check_record(record: &DatasetRecord) -> Result<(), RecordError> {
    let tree = parse_bt_xml(&record.xml)?;
    let report = validate_structure(&tree, &NodeLibrary::default());
    if let Some(f) = report
        .findings
        .iter()
        .find(|f| !matches!(f.kind, FindingKind::UnresolvedBinding | FindingKind::KindMismatch))
    {
        return Err(RecordError::SchemaViolation(format!("xml is not a valid tree: {f}")));
    }
    if let Some(open) = report.open_nodes.first() {
        return Err(RecordError::SchemaViolation(format!("xml contains open node '{open}'")));
    }
    for binding in tree.bindings() {
        let metas = record.nodes.iter().filter(|m| m.name == binding).count();
        let impls = record.implementations.iter().filter(|m| m.name == binding).count();
        if metas != 1 || impls != 1 {
            return Err(RecordError::CrossRefViolation(format!(
                "binding '{binding}' has {metas} metadata and {impls} implementation entries (expected 1 each)"
            )));
        }
    }
    Ok(())
}

/// Single-line JSON, without a trailing newline.
pub fn write_record(record: &DatasetRecord) -> String {
    serde_json::to_string(record).expect("record serializes")
}

/// Reads a JSON Lines corpus; blank lines are skipped.
pub fn read_records(text: &str) -> Result<Vec<DatasetRecord>, RecordsError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| read_record(l).map_err(|error| RecordsError { line: i + 1, error }))
        .collect()
}

pub fn write_records<'a>(records: impl IntoIterator<Item = &'a DatasetRecord>) -> String {
    records.into_iter().map(|r| write_record(r) + "\n").collect()
}
