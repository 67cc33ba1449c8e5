use serde::Serialize;

use super::config::SearchConfig;
use crate::bt::{validate_structure, BehaviorTree, OpenPolicy};
use crate::expr::Literal;
use crate::library::NodeLibrary;
use crate::sim::{run_episode_with, schedule_variants, EpisodeOptions, EpisodeResult, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Level {
    #[serde(rename = "structural")]
    Structural = 1,
    #[serde(rename = "stub-simulation")]
    StubSimulation = 2,
    #[serde(rename = "full-simulation")]
    FullSimulation = 3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Accept,
    Reject,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Feedback {
    pub verdict: Verdict,
    /// The last level that ran; the deciding one on rejection.
    pub level: Level,
    pub reward: f64,
    pub failing_trace: Option<EpisodeResult>,
    pub unmet_goals: Vec<Literal>,
    pub detail: String,
}

impl Feedback {
    pub fn accepted(&self) -> bool {
        self.verdict == Verdict::Accept
    }

    fn reject(level: Level, detail: String) -> Self {
        Feedback { verdict: Verdict::Reject, level, reward: 0.0, failing_trace: None, unmet_goals: Vec::new(), detail }
    }
}

/// Multi-level check of a (possibly partial) tree.
///
/// Structural problems and size bounds reject at level 1. Level 2 runs one
/// episode with open nodes failing and rewards the goal fraction reached.
/// Terminal trees then run `rollout_episodes` episodes over schedule
/// variants and are accepted only with a mean reward of exactly 1.
pub fn validate_state(
    tree: &BehaviorTree,
    scenario: &Scenario,
    library: &NodeLibrary,
    config: &SearchConfig,
) -> Feedback {
    let report = validate_structure(tree, library);
    if let Some(f) = report.findings.first() {
        return Feedback::reject(Level::Structural, f.to_string());
    }
    if tree.depth() > config.max_depth {
        return Feedback::reject(Level::Structural, format!("depth {} exceeds {}", tree.depth(), config.max_depth));
    }
    if tree.node_count() > config.max_nodes {
        return Feedback::reject(
            Level::Structural,
            format!("{} nodes exceed {}", tree.node_count(), config.max_nodes),
        );
    }
    let terminal = !tree.has_open_nodes();
    if !config.levels.stub_simulation {
        let reward = if terminal { 1.0 } else { 0.0 };
        return Feedback {
            verdict: Verdict::Accept,
            level: Level::Structural,
            reward,
            failing_trace: None,
            unmet_goals: Vec::new(),
            detail: String::new(),
        };
    }

    let options = EpisodeOptions { record_states: false, open: OpenPolicy::Fail };
    let stub = match run_episode_with(tree, scenario, library, config.seed, options) {
        Ok(r) => r,
        Err(e) => return Feedback::reject(Level::StubSimulation, e.to_string()),
    };
    let unmet = scenario.unmet_goals(&stub.final_state.assignment);
    if !terminal || !config.levels.full_simulation {
        let reward = stub.final_goal_fraction;
        let accept = !terminal || stub.success;
        return Feedback {
            verdict: if accept { Verdict::Accept } else { Verdict::Reject },
            level: Level::StubSimulation,
            reward,
            failing_trace: (!stub.success).then_some(stub),
            unmet_goals: unmet,
            detail: String::new(),
        };
    }

    let mut total = 0.0;
    let mut failing: Option<EpisodeResult> = None;
    for (i, variant) in schedule_variants(scenario, config.seed, config.rollout_episodes).iter().enumerate() {
        let result = match run_episode_with(tree, variant, library, config.seed.wrapping_add(i as u64), options) {
            Ok(r) => r,
            Err(e) => return Feedback::reject(Level::FullSimulation, e.to_string()),
        };
        total += if result.success { 1.0 } else { result.final_goal_fraction };
        if !result.success && failing.is_none() {
            failing = Some(result);
        }
    }
    let reward = total / config.rollout_episodes as f64;
    let unmet_goals = failing.as_ref().map_or_else(Vec::new, |f| scenario.unmet_goals(&f.final_state.assignment));
    Feedback {
        verdict: if reward == 1.0 { Verdict::Accept } else { Verdict::Reject },
        level: Level::FullSimulation,
        reward,
        detail: failing.as_ref().map_or_else(String::new, |_| format!("mean reward {reward:.4} below 1")),
        failing_trace: failing,
        unmet_goals,
    }
}
