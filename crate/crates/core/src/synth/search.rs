use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use super::candidate::{apply_candidate, ExpansionCandidate};
use super::config::{PolicyKind, SearchConfig};
use super::oracle::OraclePolicy;
use super::policy::{ExpandError, ExpandRequest, ExpansionPolicy, Task};
use super::validate::{validate_state, Feedback, Level};
use crate::bt::{BehaviorTree, BtNode, Subgoal};
use crate::expr::Literal;
use crate::library::NodeLibrary;
use crate::sim::Scenario;

pub type StateId = usize;

/// One node of the search: a partial tree plus its search statistics.
#[derive(Debug, Clone)]
pub struct SynthState {
    pub tree: BehaviorTree,
    /// Open nodes of `tree`, leftmost first.
    pub frontier: Vec<String>,
    pub visits: u32,
    pub reward_sum: f64,
    pub parent: Option<StateId>,
    pub generated_by: Option<ExpansionCandidate>,
    pub depth: usize,
    pub pruned: bool,
    /// Every candidate of the last expansion call has been tried.
    pub fully_expanded: bool,
    pub children: Vec<StateId>,
    /// Unmet goal literals reported by rejected or partial children.
    pub feedback_terms: Vec<Literal>,
    /// Structural validation outcome, once validated.
    pub passed_structural: Option<bool>,
    pub accepted: bool,
    pub last_reward: f64,
    tried: BTreeSet<String>,
}

impl SynthState {
    fn new(tree: BehaviorTree, parent: Option<StateId>, generated_by: Option<ExpansionCandidate>, depth: usize) -> Self {
        SynthState {
            frontier: tree.open_nodes(),
            tree,
            visits: 0,
            reward_sum: 0.0,
            parent,
            generated_by,
            depth,
            pruned: false,
            fully_expanded: false,
            children: Vec::new(),
            feedback_terms: Vec::new(),
            passed_structural: None,
            accepted: false,
            last_reward: 0.0,
            tried: BTreeSet::new(),
        }
    }

    pub fn is_terminal(&self) -> bool {
        self.frontier.is_empty()
    }

    /// Description of the generating candidate; empty for the root.
    pub fn label(&self) -> String {
        self.generated_by.as_ref().map(ExpansionCandidate::describe).unwrap_or_default()
    }
}

/// The initial state: a single open root carrying the task.
pub fn f_init(task: &Task) -> SynthState {
    let root = BtNode::open("open_1", Subgoal::achieve(task.goal.clone(), task.description.clone()));
    SynthState::new(BehaviorTree::new(root), None, None, 0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("search exhausted: every state is terminal or pruned")]
pub struct Exhausted;

/// Arena of search states; index 0 is the root.
#[derive(Debug, Clone)]
pub struct SearchTree {
    pub states: Vec<SynthState>,
}

pub const ROOT: StateId = 0;

impl SearchTree {
    pub fn new(root: SynthState) -> Self {
        SearchTree { states: vec![root] }
    }

    pub fn get(&self, id: StateId) -> &SynthState {
        &self.states[id]
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Adds `state` as a child of its parent.
    pub fn push(&mut self, state: SynthState) -> StateId {
        let id = self.states.len();
        if let Some(p) = state.parent {
            self.states[p].children.push(id);
        }
        self.states.push(state);
        id
    }

    pub fn ancestors(&self, id: StateId) -> Vec<StateId> {
        let mut out = Vec::new();
        let mut cur = self.states[id].parent;
        while let Some(p) = cur {
            out.push(p);
            cur = self.states[p].parent;
        }
        out
    }

    /// `W/N + c·sqrt(ln N_parent / N)`; unvisited states score infinity.
    pub fn uct(&self, id: StateId, c: f64) -> f64 {
        let s = &self.states[id];
        if s.visits == 0 {
            return f64::INFINITY;
        }
        let parent_n = s.parent.map_or(s.visits, |p| self.states[p].visits).max(1);
        let n = f64::from(s.visits);
        s.reward_sum / n + c * ((f64::from(parent_n)).ln() / n).sqrt()
    }

    /// Descends by UCT to a state that still has untried expansions and
    /// returns it with its leftmost open node.
    ///
    /// Interior states whose children are all pruned get pruned on the way,
    /// so repeated calls make progress.
    pub fn select(&mut self, c: f64) -> Result<(StateId, String), Exhausted> {
        'restart: loop {
            let mut cur = ROOT;
            loop {
                let s = &self.states[cur];
                if s.pruned {
                    return Err(Exhausted);
                }
                if !s.fully_expanded && !s.is_terminal() {
                    return Ok((cur, s.frontier[0].clone()));
                }
                let live: Vec<StateId> = s
                    .children
                    .iter()
                    .copied()
                    .filter(|&ch| !self.states[ch].pruned && !self.states[ch].is_terminal())
                    .collect();
                let best = live.into_iter().max_by(|&a, &b| {
                    self.uct(a, c)
                        .total_cmp(&self.uct(b, c))
                        // lexicographically smaller label wins a tie
                        .then_with(|| self.states[b].label().cmp(&self.states[a].label()))
                });
                match best {
                    Some(next) => cur = next,
                    None => {
                        self.states[cur].pruned = true;
                        continue 'restart;
                    }
                }
            }
        }
    }

    /// Backpropagates `feedback` from `id` to the root.
    ///
    /// Every state on the chain gains one visit; accepted feedback also adds
    /// its reward. Rejected states are pruned. Unmet goals are handed to the
    /// parent so later expansions of it retrieve with them.
    pub fn refine(&mut self, id: StateId, feedback: &Feedback) {
        let reward = if feedback.accepted() { feedback.reward } else { 0.0 };
        let mut chain = vec![id];
        chain.extend(self.ancestors(id));
        for s in chain {
            self.states[s].visits += 1;
            self.states[s].reward_sum += reward;
        }
        let state = &mut self.states[id];
        state.last_reward = feedback.reward;
        state.passed_structural = Some(!(feedback.level == Level::Structural && !feedback.accepted()));
        if feedback.accepted() {
            state.accepted = true;
        } else {
            state.pruned = true;
        }
        if let Some(p) = state.parent {
            let terms = &mut self.states[p].feedback_terms;
            for lit in &feedback.unmet_goals {
                if !terms.contains(lit) {
                    terms.push(lit.clone());
                }
            }
        }
    }
}

/// Receives every step of a run, for instrumentation.
pub trait SearchObserver {
    fn expanded(&mut self, _search: &SearchTree, _parent: StateId, _child: StateId) {}
    fn validated(&mut self, _search: &SearchTree, _state: StateId, _feedback: &Feedback) {}
}

impl SearchObserver for () {}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Rejections {
    pub structural: usize,
    pub stub_simulation: usize,
    pub full_simulation: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthesisReport {
    pub scenario: String,
    pub solved: bool,
    pub expansions: usize,
    pub states: usize,
    pub best_reward: f64,
    pub rejections: Rejections,
    pub final_nodes: usize,
    pub final_depth: usize,
    pub dropped_candidates: Vec<String>,
    pub config: SearchConfig,
}

impl SynthesisReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("unsolvable: {0}")]
    Unsolvable(String),
    #[error("budget of {} expansions exhausted (best reward {:.4})", .report.config.budget, .report.best_reward)]
    BudgetExhausted { best: Box<BehaviorTree>, report: Box<SynthesisReport> },
    #[error("the node library is empty")]
    EmptyLibrary,
    #[error(transparent)]
    Config(#[from] super::config::ConfigError),
    #[error("remote policy: {0}")]
    Remote(ExpandError),
}

/// Result of a run, including the full search arena.
#[derive(Debug)]
pub struct Outcome {
    pub tree: BehaviorTree,
    pub report: SynthesisReport,
    pub search: SearchTree,
}

/// Synthesizes a tree with the policy named in `config`.
///
/// `oracle` and `mcts-oracle` use the built-in regression policy. For
/// `remote`, use [`synthesize_with`] and pass a [`super::RemotePolicy`].
pub fn synthesize(
    task: &Task,
    scenario: &Scenario,
    library: &NodeLibrary,
    config: &SearchConfig,
) -> Result<(BehaviorTree, SynthesisReport), SynthError> {
    if config.policy == PolicyKind::Remote {
        let policy = super::remote::RemotePolicy::from_env().map_err(SynthError::Remote)?;
        return synthesize_with(task, scenario, library, config, &policy, &mut ()).map(|o| (o.tree, o.report));
    }
    synthesize_with(task, scenario, library, config, &OraclePolicy, &mut ()).map(|o| (o.tree, o.report))
}

/// Synthesizes with an explicit policy and observer.
///
/// `config.policy == oracle` runs a greedy depth-first search; any other
/// value runs UCT search.
pub fn synthesize_with(
    task: &Task,
    scenario: &Scenario,
    library: &NodeLibrary,
    config: &SearchConfig,
    policy: &dyn ExpansionPolicy,
    observer: &mut dyn SearchObserver,
) -> Result<Outcome, SynthError> {
    config.validate()?;
    if library.is_empty() {
        return Err(SynthError::EmptyLibrary);
    }
    let mut run = Run {
        task,
        scenario,
        library,
        config,
        policy,
        observer,
        search: SearchTree::new(f_init(task)),
        expansions: 0,
        rejections: Rejections::default(),
    };

    if scenario.goal_holds(&scenario.init) {
        let check = task_goal_check(task, scenario, library)
            .ok_or_else(|| SynthError::Unsolvable("goal holds initially but no condition checks it".into()))?;
        let tree = BehaviorTree::new(BtNode::condition(check));
        return Ok(run.finish(tree, true, 1.0));
    }

    let found = if config.policy == PolicyKind::Oracle { run.greedy(ROOT)? } else { run.mcts()? };
    match found {
        Some(id) => {
            let tree = run.search.get(id).tree.clone();
            let reward = run.search.get(id).last_reward;
            Ok(run.finish(tree, true, reward))
        }
        None if run.expansions >= config.budget => {
            let best = run.best_state();
            let tree = run.search.get(best).tree.clone();
            let reward = run.search.get(best).last_reward;
            let outcome = run.finish(tree, false, reward);
            Err(SynthError::BudgetExhausted { best: Box::new(outcome.tree), report: Box::new(outcome.report) })
        }
        None => Err(SynthError::Unsolvable("every expansion was rejected".into())),
    }
}

fn task_goal_check(task: &Task, scenario: &Scenario, library: &NodeLibrary) -> Option<String> {
    library
        .conditions()
        .find(|d| {
            scenario.conditions.get(&d.binding).and_then(|p| p.as_conjunction()).is_some_and(|c| {
                c.iter().all(|l| task.goal.contains(l)) && task.goal.iter().all(|l| c.contains(l))
            })
        })
        .map(|d| d.name.clone())
}

struct Run<'a> {
    task: &'a Task,
    scenario: &'a Scenario,
    library: &'a NodeLibrary,
    config: &'a SearchConfig,
    policy: &'a dyn ExpansionPolicy,
    observer: &'a mut dyn SearchObserver,
    search: SearchTree,
    expansions: usize,
    rejections: Rejections,
}

enum Step {
    Child(StateId),
    /// The policy had nothing (more) to offer for this state.
    Done,
}

impl Run<'_> {
    fn candidates(&self, id: StateId, target: &str) -> Result<Vec<ExpansionCandidate>, ExpandError> {
        let s = self.search.get(id);
        let req = ExpandRequest {
            tree: &s.tree,
            target,
            task: self.task,
            scenario: self.scenario,
            library: self.library,
            feedback: &s.feedback_terms,
            k: self.config.k,
        };
        self.policy.expand(&req)
    }

    /// A failed expansion of the root ends the run; elsewhere it prunes.
    fn expansion_failed(&mut self, id: StateId, err: ExpandError) -> Result<(), SynthError> {
        log::debug!("expansion of state {id} failed: {err}");
        if id == ROOT && self.search.get(ROOT).children.is_empty() {
            return Err(match err {
                ExpandError::NoCandidates(m) => SynthError::Unsolvable(m),
                ExpandError::UnknownTarget(t) => SynthError::Unsolvable(format!("no open node '{t}'")),
                other => SynthError::Remote(other),
            });
        }
        self.search.states[id].pruned = true;
        Ok(())
    }

    fn apply(&mut self, id: StateId, candidate: ExpansionCandidate) -> Step {
        let parent = self.search.get(id);
        let tree = match apply_candidate(&parent.tree, &candidate, self.library) {
            Ok(t) => t,
            Err(e) => {
                log::warn!("candidate '{}' could not be applied: {e}", candidate.describe());
                return Step::Done;
            }
        };
        let depth = parent.depth + 1;
        let child = self.search.push(SynthState::new(tree, Some(id), Some(candidate), depth));
        self.expansions += 1;
        self.observer.expanded(&self.search, id, child);
        let feedback = validate_state(&self.search.get(child).tree, self.scenario, self.library, self.config);
        if !feedback.accepted() {
            match feedback.level {
                Level::Structural => self.rejections.structural += 1,
                Level::StubSimulation => self.rejections.stub_simulation += 1,
                Level::FullSimulation => self.rejections.full_simulation += 1,
            }
        }
        self.search.refine(child, &feedback);
        self.observer.validated(&self.search, child, &feedback);
        Step::Child(child)
    }

    fn solved(&self, id: StateId) -> bool {
        let s = self.search.get(id);
        s.accepted && s.is_terminal()
    }

    /// Depth-first: try candidates in rank order, recurse into accepted
    /// children, return the first accepted terminal state.
    fn greedy(&mut self, id: StateId) -> Result<Option<StateId>, SynthError> {
        let target = self.search.get(id).frontier[0].clone();
        let candidates = match self.candidates(id, &target) {
            Ok(c) => c,
            Err(e) => {
                self.expansion_failed(id, e)?;
                return Ok(None);
            }
        };
        for candidate in candidates {
            if self.expansions >= self.config.budget {
                return Ok(None);
            }
            let Step::Child(child) = self.apply(id, candidate) else { continue };
            if self.solved(child) {
                return Ok(Some(child));
            }
            if self.search.get(child).accepted && !self.search.get(child).is_terminal() {
                if let Some(done) = self.greedy(child)? {
                    return Ok(Some(done));
                }
            }
        }
        self.search.states[id].fully_expanded = true;
        Ok(None)
    }

    /// UCT search: each iteration applies one untried candidate of the
    /// selected state.
    fn mcts(&mut self) -> Result<Option<StateId>, SynthError> {
        while self.expansions < self.config.budget {
            let Ok((id, target)) = self.search.select(self.config.c_uct) else {
                return Ok(None);
            };
            let candidates = match self.candidates(id, &target) {
                Ok(c) => c,
                Err(e) => {
                    self.expansion_failed(id, e)?;
                    continue;
                }
            };
            let tried = &self.search.states[id].tried;
            let mut untried = candidates.into_iter().filter(|c| !tried.contains(&c.describe()));
            let Some(next) = untried.next() else {
                self.search.states[id].fully_expanded = true;
                continue;
            };
            if untried.next().is_none() {
                self.search.states[id].fully_expanded = true;
            }
            self.search.states[id].tried.insert(next.describe());
            if let Step::Child(child) = self.apply(id, next) {
                if self.solved(child) {
                    return Ok(Some(child));
                }
            }
        }
        Ok(None)
    }

    fn best_state(&self) -> StateId {
        let mut best = ROOT;
        for (id, s) in self.search.states.iter().enumerate() {
            if s.accepted && s.last_reward > self.search.get(best).last_reward {
                best = id;
            }
        }
        best
    }

    fn finish(self, tree: BehaviorTree, solved: bool, reward: f64) -> Outcome {
        let report = SynthesisReport {
            scenario: self.scenario.name.clone(),
            solved,
            expansions: self.expansions,
            states: self.search.len(),
            best_reward: reward,
            rejections: self.rejections,
            final_nodes: tree.node_count(),
            final_depth: tree.depth(),
            dropped_candidates: self.policy.drops(),
            config: self.config.clone(),
        };
        Outcome { tree, report, search: self.search }
    }
}
