//! Deterministic expansion policy based on goal regression.

use std::collections::BTreeMap;

use super::candidate::{ChildSpec, ControlKind, ExpansionCandidate};
use super::policy::{ExpandError, ExpandRequest, ExpansionPolicy};
use crate::bt::{BehaviorTree, BtNode, NodeKind, Subgoal, SubgoalMode};
use crate::expr::{format_conjunction, Literal, Value};
use crate::library::{retrieve, NodeDefinition, NodeLibrary, NodeType, OpKind, MAX_DECOMPOSITION};
use crate::sim::{ActionSchema, Effect, Scenario};

/// Most orderings tried when a subgoal splits into a sequence.
const MAX_PERMUTATIONS: usize = 6;

/// The regression policy as an [`ExpansionPolicy`].
#[derive(Debug, Clone, Copy, Default)]
pub struct OraclePolicy;

impl ExpansionPolicy for OraclePolicy {
    fn expand(&self, req: &ExpandRequest<'_>) -> Result<Vec<ExpansionCandidate>, ExpandError> {
        oracle_expand(req.tree, req.target, req.scenario, req.library, req.k, &req.query())
    }
}

/// Regression candidates for the open node `target`, best first, at most `k`.
///
/// `query` is the retrieval text used for ranking (task description,
/// subgoal, and any feedback terms).
pub fn oracle_expand(
    tree: &BehaviorTree,
    target: &str,
    scenario: &Scenario,
    library: &NodeLibrary,
    k: usize,
    query: &str,
) -> Result<Vec<ExpansionCandidate>, ExpandError> {
    let node = tree.root().find(target).ok_or_else(|| ExpandError::UnknownTarget(target.to_string()))?;
    let NodeKind::Open(subgoal) = &node.kind else {
        return Err(ExpandError::UnknownTarget(target.to_string()));
    };
    if let Some(l) = subgoal.literals.iter().find(|l| !scenario.variables.contains_key(&l.var)) {
        return Err(ExpandError::NoCandidates(format!("'{}' is not a scenario variable", l.var)));
    }
    let reg = Regression { scenario, library, target, context: Context::for_target(tree, target, scenario, library) };
    let mut candidates = match subgoal.mode {
        SubgoalMode::Achieve => reg.achieve(&subgoal.literals),
        SubgoalMode::Ensure => reg.ensure(&subgoal.literals),
    };
    if candidates.is_empty() {
        return Err(ExpandError::NoCandidates(format!(
            "nothing in the library relates to '{}'",
            subgoal.expression()
        )));
    }
    let scores: BTreeMap<&str, f64> =
        retrieve(query, library.len(), library).into_iter().map(|r| (r.definition.name.as_str(), r.score)).collect();
    let score = |c: &ExpansionCandidate| {
        c.definitions().iter().map(|d| scores.get(d).copied().unwrap_or(0.0)).fold(0.0, f64::max)
    };
    candidates.sort_by(|a, b| score(b).total_cmp(&score(a)));
    let mut seen = std::collections::BTreeSet::new();
    candidates.retain(|c| seen.insert(c.describe()));
    candidates.truncate(k.max(1));
    Ok(candidates)
}

/// Literals known to hold at the target: the initial state, overridden by
/// conditions that sit to the left of the target inside enclosing sequences.
struct Context<'a> {
    init: &'a BTreeMap<String, Value>,
    assumed: Vec<Literal>,
}

impl<'a> Context<'a> {
    fn for_target(tree: &BehaviorTree, target: &str, scenario: &'a Scenario, library: &NodeLibrary) -> Self {
        let mut assumed = Vec::new();
        let mut path = Vec::new();
        path_to(tree.root(), target, &mut path);
        for pair in path.windows(2) {
            let (parent, child) = (pair[0], pair[1]);
            if parent.kind != NodeKind::Sequence {
                continue;
            }
            for sibling in parent.children.iter().take_while(|c| c.name != child.name) {
                if let NodeKind::Condition { binding } = &sibling.kind {
                    if let Some(lits) = condition_literals(scenario, library, binding) {
                        assumed.extend(lits);
                    }
                }
            }
        }
        Context { init: &scenario.init, assumed }
    }

    fn holds(&self, lit: &Literal) -> bool {
        if self.assumed.contains(lit) {
            return true;
        }
        let pinned = self.assumed.iter().find(|a| a.var == lit.var && a.op == crate::expr::CmpOp::Eq);
        match pinned {
            Some(a) => lit.holds_for(&a.value),
            None => self.init.get(&lit.var).is_some_and(|v| lit.holds_for(v)),
        }
    }

    fn value(&self, var: &str) -> Option<&Value> {
        self.assumed
            .iter()
            .find(|a| a.var == var && a.op == crate::expr::CmpOp::Eq)
            .map(|a| &a.value)
            .or_else(|| self.init.get(var))
    }
}

fn path_to<'t>(node: &'t BtNode, target: &str, path: &mut Vec<&'t BtNode>) -> bool {
    path.push(node);
    if node.name == target || node.children.iter().any(|c| path_to(c, target, path)) {
        return true;
    }
    path.pop();
    false
}

fn condition_literals(scenario: &Scenario, library: &NodeLibrary, def: &str) -> Option<Vec<Literal>> {
    let def = library.get(def).filter(|d| d.node_type == NodeType::Condition)?;
    scenario.conditions.get(&def.binding)?.as_conjunction()
}

fn same_literals(a: &[Literal], b: &[Literal]) -> bool {
    a.iter().all(|l| b.contains(l)) && b.iter().all(|l| a.contains(l))
}

struct Regression<'a> {
    scenario: &'a Scenario,
    library: &'a NodeLibrary,
    target: &'a str,
    context: Context<'a>,
}

/// How one achieving action is wired in: bound directly, or preceded by
/// an `Ensure` subgoal for its unmet preconditions.
struct Achiever<'a> {
    def: &'a NodeDefinition,
    unmet: Vec<Literal>,
    /// Preconditions that fail in the initial state, ignoring assumptions.
    trigger: Vec<Literal>,
}

impl Achiever<'_> {
    fn template(&self) -> ChildSpec {
        if self.unmet.is_empty() {
            ChildSpec::Leaf(self.def.name.clone())
        } else {
            ChildSpec::Control {
                kind: ControlKind::Sequence,
                children: vec![ChildSpec::Open(ensure(self.unmet.clone())), ChildSpec::Leaf(self.def.name.clone())],
            }
        }
    }
}

fn achieve(literals: Vec<Literal>) -> Subgoal {
    let text = format_conjunction(&literals);
    Subgoal::achieve(literals, text)
}

fn ensure(literals: Vec<Literal>) -> Subgoal {
    let text = format_conjunction(&literals);
    Subgoal::ensure(literals, text)
}

impl<'a> Regression<'a> {
    /// Whether some scripted event can make `lit` false.
    fn toggled(&self, lit: &Literal) -> bool {
        self.scenario.events.iter().any(|e| e.var == lit.var && !lit.holds_for(&e.value))
    }

    fn conditions_for(&self, lits: &[Literal]) -> Vec<&'a NodeDefinition> {
        self.library
            .conditions()
            .filter(|d| {
                self.scenario
                    .conditions
                    .get(&d.binding)
                    .and_then(|p| p.as_conjunction())
                    .is_some_and(|c| !c.is_empty() && same_literals(&c, lits))
            })
            .collect()
    }

    fn establishes(&self, effect: &Effect, lit: &Literal) -> bool {
        if effect.var() != lit.var {
            return false;
        }
        match effect {
            Effect::Set { value, .. } => lit.holds_for(value),
            Effect::Increment { by, .. } => match (self.context.value(&lit.var), &lit.value) {
                (Some(Value::Int(cur)), Value::Int(target)) => {
                    crate::sim::scenario::moves_toward(lit.op, *target, *cur, *by)
                }
                _ => false,
            },
        }
    }

    fn achievers(&self, lit: &Literal) -> Vec<Achiever<'a>> {
        let mut out = Vec::new();
        for def in self.library.actions() {
            let Some(schema) = self.scenario.actions.get(&def.binding) else { continue };
            if !schema.effects.iter().any(|e| self.establishes(e, lit)) {
                continue;
            }
            if let Some((unmet, trigger)) = self.preconditions(schema) {
                if !unmet.contains(lit) {
                    out.push(Achiever { def, unmet, trigger });
                }
            }
        }
        out
    }

    /// Unmet preconditions in context and in the bare initial state;
    /// `None` when a failing precondition is not a conjunction.
    fn preconditions(&self, schema: &ActionSchema) -> Option<(Vec<Literal>, Vec<Literal>)> {
        let Some(lits) = schema.precondition.as_conjunction() else {
            let holds = schema.precondition.eval(self.context.init).unwrap_or(false);
            return holds.then(|| (Vec::new(), Vec::new()));
        };
        let unmet = lits.iter().filter(|l| !self.context.holds(l)).cloned().collect();
        let trigger = lits
            .iter()
            .filter(|l| !self.context.init.get(&l.var).is_some_and(|v| l.holds_for(v)))
            .cloned()
            .collect();
        Some((unmet, trigger))
    }

    fn achieve(&self, literals: &[Literal]) -> Vec<ExpansionCandidate> {
        let pending: Vec<Literal> =
            literals.iter().filter(|l| !self.context.holds(l) || self.toggled(l)).cloned().collect();
        match pending.len() {
            0 => self.vacuous(literals),
            1 => self.achieve_one(&pending[0]),
            _ => {
                let (guarded, unmet): (Vec<Literal>, Vec<Literal>) =
                    pending.into_iter().partition(|l| self.context.holds(l) && self.toggled(l));
                if guarded.is_empty() {
                    return self.split(&unmet);
                }
                let mut children: Vec<ChildSpec> =
                    guarded.into_iter().map(|l| ChildSpec::Open(achieve(vec![l]))).collect();
                if !unmet.is_empty() {
                    children.push(ChildSpec::Open(achieve(unmet)));
                }
                vec![ExpansionCandidate::decompose(self.target, OpKind::FbDecompose, children)]
            }
        }
    }

    /// Every literal already holds: bind a condition that checks them.
    fn vacuous(&self, literals: &[Literal]) -> Vec<ExpansionCandidate> {
        self.conditions_for(literals).into_iter().map(|d| ExpansionCandidate::bind(self.target, &d.name)).collect()
    }

    fn achieve_one(&self, lit: &Literal) -> Vec<ExpansionCandidate> {
        if self.context.holds(lit) && !self.toggled(lit) {
            return self.vacuous(std::slice::from_ref(lit));
        }
        let achievers = self.achievers(lit);
        if self.toggled(lit) {
            let guards = self.guards(lit, &achievers);
            if !guards.is_empty() {
                return guards;
            }
        }
        let mut out: Vec<ExpansionCandidate> = achievers
            .iter()
            .map(|a| match a.template() {
                ChildSpec::Leaf(name) => ExpansionCandidate::bind(self.target, name),
                ChildSpec::Control { children, .. } => {
                    ExpansionCandidate::decompose(self.target, OpKind::SeqDecompose, children)
                }
                ChildSpec::Open(_) => unreachable!("templates are never bare open nodes"),
            })
            .collect();
        if (2..=MAX_DECOMPOSITION).contains(&achievers.len()) {
            let children = achievers.iter().map(Achiever::template).collect();
            out.push(ExpansionCandidate::decompose(self.target, OpKind::FbDecompose, children));
        }
        out
    }

    /// `Sequence[Condition(trigger), handler]` for an achiever whose
    /// precondition fails initially and is observed by a library condition.
    fn guards(&self, lit: &Literal, achievers: &[Achiever<'_>]) -> Vec<ExpansionCandidate> {
        let mut out = Vec::new();
        for a in achievers {
            if a.trigger.is_empty() || a.trigger.iter().all(|t| self.context.assumed.contains(t)) {
                continue;
            }
            for cond in self.conditions_for(&a.trigger) {
                let handler = Subgoal::achieve(vec![lit.clone()], format!("{} when {}", lit, format_conjunction(&a.trigger)));
                out.push(ExpansionCandidate::guard(self.target, &cond.name, handler));
            }
        }
        out
    }

    fn ensure(&self, literals: &[Literal]) -> Vec<ExpansionCandidate> {
        let pending: Vec<Literal> = literals.iter().filter(|l| !self.context.holds(l)).cloned().collect();
        match pending.len() {
            0 => self.vacuous(literals),
            1 => self.ensure_one(&pending[0]),
            _ => self.split(&pending),
        }
    }

    fn ensure_one(&self, lit: &Literal) -> Vec<ExpansionCandidate> {
        let achievable = !self.achievers(lit).is_empty();
        let conds = self.conditions_for(std::slice::from_ref(lit));
        if conds.is_empty() {
            return if achievable { self.achieve_one(lit) } else { Vec::new() };
        }
        conds
            .into_iter()
            .map(|c| {
                if achievable {
                    ExpansionCandidate::decompose(
                        self.target,
                        OpKind::FbDecompose,
                        vec![ChildSpec::Leaf(c.name.clone()), ChildSpec::Open(achieve(vec![lit.clone()]))],
                    )
                } else {
                    ExpansionCandidate::bind(self.target, &c.name)
                }
            })
            .collect()
    }

    /// A child that succeeds once `lit` holds and otherwise works toward it.
    fn ensure_child(&self, lit: &Literal) -> Option<ChildSpec> {
        let achievable = !self.achievers(lit).is_empty();
        let cond = self.conditions_for(std::slice::from_ref(lit)).into_iter().next();
        match (cond, achievable) {
            (Some(c), true) => Some(ChildSpec::Control {
                kind: ControlKind::Fallback,
                children: vec![ChildSpec::Leaf(c.name.clone()), ChildSpec::Open(achieve(vec![lit.clone()]))],
            }),
            (Some(c), false) => Some(ChildSpec::Leaf(c.name.clone())),
            (None, true) => Some(ChildSpec::Open(achieve(vec![lit.clone()]))),
            (None, false) => None,
        }
    }

    /// Several literals: sequences in a few orders, plus an all-of parallel.
    fn split(&self, lits: &[Literal]) -> Vec<ExpansionCandidate> {
        if lits.len() > MAX_DECOMPOSITION {
            return Vec::new();
        }
        let Some(children) = lits.iter().map(|l| self.ensure_child(l)).collect::<Option<Vec<_>>>() else {
            return Vec::new();
        };
        let mut out: Vec<ExpansionCandidate> = permutations(children.len(), MAX_PERMUTATIONS)
            .into_iter()
            .map(|order| {
                let ordered = order.iter().map(|&i| children[i].clone()).collect();
                ExpansionCandidate::decompose(self.target, OpKind::SeqDecompose, ordered)
            })
            .collect();
        out.push(ExpansionCandidate::decompose(self.target, OpKind::ParDecompose, children));
        out
    }
}

/// The first `limit` permutations of `0..n` in lexicographic order.
fn permutations(n: usize, limit: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..n).collect();
    loop {
        out.push(cur.clone());
        if out.len() >= limit {
            return out;
        }
        // next lexicographic permutation
        let Some(i) = (0..n.saturating_sub(1)).rev().find(|&i| cur[i] < cur[i + 1]) else {
            return out;
        };
        let j = (i + 1..n).rev().find(|&j| cur[j] > cur[i]).expect("a larger element exists");
        cur.swap(i, j);
        cur[i + 1..].reverse();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::candidate::Payload;
    use crate::fixtures::fixture;

    fn root(subgoal: Subgoal) -> BehaviorTree {
        BehaviorTree::new(BtNode::open("open_1", subgoal))
    }

    #[test]
    fn permutation_order() {
        assert_eq!(permutations(3, 10), [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]]);
        assert_eq!(permutations(3, 2).len(), 2);
        assert_eq!(permutations(1, 6), [[0]]);
    }

    #[test]
    fn position_goal_binds_the_advance_action() {
        let (s, lib) = fixture("uav_patrol");
        let t = root(achieve(vec![Literal::eq("position", Value::Int(4))]));
        let c = oracle_expand(&t, "open_1", &s, &lib, 8, "position = 4").unwrap();
        assert_eq!(c, [ExpansionCandidate::bind("open_1", "move-to_next-pos")]);
    }

    #[test]
    fn patrol_goal_splits_guard_from_route() {
        let (s, lib) = fixture("uav_patrol");
        let t = root(achieve(s.goal.clone()));
        let c = oracle_expand(&t, "open_1", &s, &lib, 8, "").unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].operator, OpKind::FbDecompose);
        assert_eq!(
            c[0].describe(),
            "FbDecompose open_1: [achieve(threat_cleared = true), achieve(position = 4)]"
        );
    }

    #[test]
    fn toggled_literal_gets_a_guard_and_the_handler_binds() {
        let (s, lib) = fixture("uav_patrol");
        let lit = Literal::eq("threat_cleared", Value::Bool(true));
        let t = root(achieve(vec![lit.clone()]));
        let c = oracle_expand(&t, "open_1", &s, &lib, 8, "").unwrap();
        assert_eq!(c.len(), 1);
        assert!(matches!(&c[0].payload, Payload::Guard { condition, .. } if condition == "check-target_detected"));
        // under the guard, the trigger is assumed and the handler binds directly
        let guarded = BehaviorTree::new(BtNode::sequence(
            "s",
            vec![BtNode::condition("check-target_detected"), BtNode::open("open_2", achieve(vec![lit]))],
        ));
        let c = oracle_expand(&guarded, "open_2", &s, &lib, 8, "").unwrap();
        assert_eq!(c, [ExpansionCandidate::bind("open_2", "warn-target")]);
    }

    #[test]
    fn unmet_precondition_becomes_ensure_subgoal() {
        let (s, lib) = fixture("recharge_dock");
        let t = root(achieve(s.goal.clone()));
        let c = oracle_expand(&t, "open_1", &s, &lib, 8, "").unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].describe(), "SeqDecompose open_1: [ensure(at_dock = true), charge-battery]");
        let t = root(ensure(vec![Literal::eq("at_dock", Value::Bool(true))]));
        let c = oracle_expand(&t, "open_1", &s, &lib, 8, "").unwrap();
        assert_eq!(c[0].describe(), "FbDecompose open_1: [is-docked, achieve(at_dock = true)]");
    }

    #[test]
    fn two_achievers_add_a_fallback() {
        let (s, lib) = fixture("door_open");
        let t = root(achieve(s.goal.clone()));
        let c = oracle_expand(&t, "open_1", &s, &lib, 8, &s.description).unwrap();
        let ops: Vec<OpKind> = c.iter().map(|c| c.operator).collect();
        assert_eq!(ops.iter().filter(|o| **o == OpKind::SeqDecompose).count(), 2);
        assert!(ops.contains(&OpKind::FbDecompose));
        assert!(oracle_expand(&t, "open_1", &s, &lib, 1, "").unwrap().len() == 1);
    }

    #[test]
    fn satisfied_subgoal_binds_its_condition() {
        let (s, lib) = fixture("door_open");
        let t = root(achieve(vec![Literal::eq("door", Value::Sym("locked".into()))]));
        // no condition observes a locked door
        assert!(matches!(oracle_expand(&t, "open_1", &s, &lib, 8, ""), Err(ExpandError::NoCandidates(_))));
        let (s, lib) = fixture("area_survey");
        let t = root(achieve(vec![Literal::eq("surveyed_north", Value::Bool(false))]));
        assert!(matches!(oracle_expand(&t, "open_1", &s, &lib, 8, ""), Err(ExpandError::NoCandidates(_))));
        let t = root(achieve(vec![Literal::eq("camera_on", Value::Bool(true))]));
        let c = oracle_expand(&t, "open_1", &s, &lib, 8, "").unwrap();
        assert_eq!(c, [ExpansionCandidate::bind("open_1", "power-camera")]);
    }

    #[test]
    fn unaffected_literal_has_no_candidates() {
        let (mut s, lib) = fixture("uav_patrol");
        s.init.insert("target_warned".into(), Value::Bool(false));
        let t = root(achieve(vec![Literal::eq("target_warned", Value::Bool(false))]));
        // holds, but no condition observes it
        assert!(oracle_expand(&t, "open_1", &s, &lib, 8, "").is_err());
        let t = root(achieve(vec![Literal::eq("ghost", Value::Bool(true))]));
        assert!(matches!(oracle_expand(&t, "open_1", &s, &lib, 8, ""), Err(ExpandError::NoCandidates(_))));
    }

    #[test]
    fn multi_literal_goal_offers_orders_and_parallel() {
        let (s, lib) = fixture("area_survey");
        let t = root(achieve(s.goal.clone()));
        let c = oracle_expand(&t, "open_1", &s, &lib, 8, "").unwrap();
        assert_eq!(c.iter().filter(|c| c.operator == OpKind::SeqDecompose).count(), 6);
        assert_eq!(c.iter().filter(|c| c.operator == OpKind::ParDecompose).count(), 1);
    }
}
