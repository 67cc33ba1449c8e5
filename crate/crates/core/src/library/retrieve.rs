use std::collections::BTreeSet;

use super::{NodeDefinition, NodeLibrary};

/// Lowercased tokens split on every non-alphanumeric character.
pub fn tokenize(text: &str) -> BTreeSet<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Jaccard overlap of two token sets; two empty sets score 0.
pub fn jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 0.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct Retrieved<'a> {
    pub definition: &'a NodeDefinition,
    pub score: f64,
}

/// Top-`k` definitions by lexical overlap with `query`.
///
/// Ties break by name, so the result does not depend on insertion order.
pub fn retrieve<'a>(query: &str, k: usize, library: &'a NodeLibrary) -> Vec<Retrieved<'a>> {
    let q = tokenize(query);
    let mut scored: Vec<Retrieved<'a>> = library
        .iter()
        .map(|d| Retrieved { definition: d, score: jaccard(&q, &tokenize(&d.search_text())) })
        .collect();
    scored.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.definition.name.cmp(&b.definition.name))
    });
    scored.truncate(k.max(1));
    scored
}
