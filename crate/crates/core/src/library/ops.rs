use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Operators that turn an open node into a concrete subtree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OpKind {
    SeqDecompose,
    FbDecompose,
    ParDecompose,
    /// `Sequence[Condition, subtree]`.
    GuardPattern,
    BindLeaf,
}

impl OpKind {
    pub const ALL: [OpKind; 5] = [
        OpKind::SeqDecompose,
        OpKind::FbDecompose,
        OpKind::ParDecompose,
        OpKind::GuardPattern,
        OpKind::BindLeaf,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            OpKind::SeqDecompose => "SeqDecompose",
            OpKind::FbDecompose => "FbDecompose",
            OpKind::ParDecompose => "ParDecompose",
            OpKind::GuardPattern => "GuardPattern",
            OpKind::BindLeaf => "BindLeaf",
        }
    }
}

impl fmt::Display for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OpKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        OpKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown operator '{s}'"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperatorDef {
    pub kind: OpKind,
    pub min_children: usize,
    pub max_children: usize,
}

impl OperatorDef {
    pub fn admits(&self, arity: usize) -> bool {
        (self.min_children..=self.max_children).contains(&arity)
    }
}

/// Widest decomposition the built-in operators will produce.
pub const MAX_DECOMPOSITION: usize = 8;

pub fn builtin_operators() -> Vec<OperatorDef> {
    OpKind::ALL
        .into_iter()
        .map(|kind| {
            let (min_children, max_children) = match kind {
                OpKind::BindLeaf => (1, 1),
                OpKind::GuardPattern => (2, 2),
                _ => (1, MAX_DECOMPOSITION),
            };
            OperatorDef { kind, min_children, max_children }
        })
        .collect()
}
