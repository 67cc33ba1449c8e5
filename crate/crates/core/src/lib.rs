//! Behavior-tree synthesis toolkit.
//!
//! Trees are grown from a task goal by a search over partial trees whose
//! open placeholders are expanded with operators drawn from a node library,
//! then checked in a deterministic world simulator before being accepted.
//!
//! * [`bt`]: tree model, tick semantics, structural validation
//! * [`format`]: the XML dialect and dataset records
//! * [`library`]: node definitions, operators, retrieval
//! * [`sim`]: scenarios, episodes, node unit tests
//! * [`synth`]: the search engine and its expansion policies
//! * [`metrics`]: pass@k, perplexity, accuracy, sensitivity, batch evaluation

pub mod bt;
pub mod cli;
pub mod expr;
pub mod format;
pub mod library;
pub mod metrics;
pub mod fixtures;
pub mod sim;
pub mod synth;
