use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Which expansion policy drives the search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum PolicyKind {
    /// Greedy depth-first regression, first accepted terminal wins.
    #[default]
    #[serde(rename = "oracle")]
    Oracle,
    /// UCT search over regression candidates.
    #[serde(rename = "mcts-oracle")]
    MctsOracle,
    /// UCT search over candidates from a remote endpoint.
    #[serde(rename = "remote")]
    Remote,
}

impl PolicyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PolicyKind::Oracle => "oracle",
            PolicyKind::MctsOracle => "mcts-oracle",
            PolicyKind::Remote => "remote",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PolicyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "oracle" => Ok(PolicyKind::Oracle),
            "mcts-oracle" => Ok(PolicyKind::MctsOracle),
            "remote" => Ok(PolicyKind::Remote),
            _ => Err(format!("unknown policy '{s}' (expected oracle, mcts-oracle or remote)")),
        }
    }
}

/// Validation levels beyond the always-on structural check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Levels {
    /// One episode with open nodes failing.
    pub stub_simulation: bool,
    /// Several episodes over schedule variants, terminal states only.
    pub full_simulation: bool,
}

impl Default for Levels {
    fn default() -> Self {
        Levels { stub_simulation: true, full_simulation: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    /// Maximum number of applied expansions.
    pub budget: usize,
    pub c_uct: f64,
    pub max_depth: usize,
    pub max_nodes: usize,
    /// Episodes per full-simulation check.
    pub rollout_episodes: usize,
    pub levels: Levels,
    pub seed: u64,
    pub policy: PolicyKind,
    /// Candidates kept per expansion, and definitions retrieved for remote requests.
    pub k: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            budget: 10_000,
            c_uct: std::f64::consts::SQRT_2,
            max_depth: 8,
            max_nodes: 64,
            rollout_episodes: 5,
            levels: Levels::default(),
            seed: 0,
            policy: PolicyKind::Oracle,
            k: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid search config: {0}")]
pub struct ConfigError(pub String);

impl SearchConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = [
            ("budget", self.budget),
            ("max_depth", self.max_depth),
            ("max_nodes", self.max_nodes),
            ("rollout_episodes", self.rollout_episodes),
            ("k", self.k),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(ConfigError(format!("{name} must be at least 1")));
        }
        if !(self.c_uct.is_finite() && self.c_uct >= 0.0) {
            return Err(ConfigError("c_uct must be a finite non-negative number".into()));
        }
        if self.levels.full_simulation && !self.levels.stub_simulation {
            return Err(ConfigError("full_simulation requires stub_simulation".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let c = SearchConfig::default();
        c.validate().unwrap();
        assert_eq!((c.budget, c.max_depth, c.max_nodes, c.rollout_episodes), (10_000, 8, 64, 5));
        assert!((c.c_uct - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn partial_json_fills_defaults() {
        let c: SearchConfig = serde_json::from_str(r#"{"budget": 5, "policy": "mcts-oracle"}"#).unwrap();
        assert_eq!(c.budget, 5);
        assert_eq!(c.policy, PolicyKind::MctsOracle);
        assert_eq!(c.max_nodes, 64);
    }

    #[test]
    fn bounds_checked() {
        let c = SearchConfig { budget: 0, ..Default::default() };
        assert!(c.validate().is_err());
        let c = SearchConfig { c_uct: f64::NAN, ..Default::default() };
        assert!(c.validate().is_err());
        assert_eq!("remote".parse::<PolicyKind>(), Ok(PolicyKind::Remote));
        assert!("greedy".parse::<PolicyKind>().is_err());
    }
}
