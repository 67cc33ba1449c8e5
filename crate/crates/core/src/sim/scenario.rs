use std::collections::BTreeMap;

use serde_json::Value as Json;
use thiserror::Error;

use crate::expr::{parse_literal, parse_predicate, CmpOp, Literal, Predicate, Value};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScenarioError {
    #[error("schema violation: {0}")]
    SchemaViolation(String),
    #[error("domain violation: {0}")]
    DomainViolation(String),
    #[error("unknown variable '{var}' in {context}")]
    UnknownVariable { var: String, context: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Domain {
    Bool,
    Int { min: i64, max: i64 },
    Enum(Vec<String>),
}

impl Domain {
    pub fn contains(&self, v: &Value) -> bool {
        match (self, v) {
            (Domain::Bool, Value::Bool(_)) => true,
            (Domain::Int { min, max }, Value::Int(i)) => (*min..=*max).contains(i),
            (Domain::Enum(vals), Value::Sym(s)) => vals.contains(s),
            _ => false,
        }
    }

    /// Every value of the domain, in order.
    pub fn values(&self) -> Vec<Value> {
        match self {
            Domain::Bool => vec![Value::Bool(false), Value::Bool(true)],
            Domain::Int { min, max } => (*min..=*max).map(Value::Int).collect(),
            Domain::Enum(vals) => vals.iter().cloned().map(Value::Sym).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Effect {
    Set { var: String, value: Value },
    /// Adds `by` and clamps to the variable's range.
    Increment { var: String, by: i64 },
}

impl Effect {
    pub fn var(&self) -> &str {
        match self {
            Effect::Set { var, .. } | Effect::Increment { var, .. } => var,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionSchema {
    pub precondition: Predicate,
    pub effects: Vec<Effect>,
    pub duration: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub tick: u32,
    pub var: String,
    pub value: Value,
    /// Chance that the event fires in a given episode; 1 for scripted events.
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    pub variables: BTreeMap<String, Domain>,
    pub init: BTreeMap<String, Value>,
    pub goal: Vec<Literal>,
    pub conditions: BTreeMap<String, Predicate>,
    pub actions: BTreeMap<String, ActionSchema>,
    pub events: Vec<Event>,
    pub max_ticks: u32,
}

impl Scenario {
    pub fn goal_fraction(&self, assignment: &BTreeMap<String, Value>) -> f64 {
        if self.goal.is_empty() {
            return 1.0;
        }
        let met = self.goal.iter().filter(|l| l.eval(assignment).unwrap_or(false)).count();
        met as f64 / self.goal.len() as f64
    }

    pub fn goal_holds(&self, assignment: &BTreeMap<String, Value>) -> bool {
        self.goal.iter().all(|l| l.eval(assignment).unwrap_or(false))
    }

    pub fn unmet_goals(&self, assignment: &BTreeMap<String, Value>) -> Vec<Literal> {
        self.goal.iter().filter(|l| !l.eval(assignment).unwrap_or(false)).cloned().collect()
    }

    /// New value of `effect.var` after applying the effect to `current`.
    pub fn effect_value(&self, effect: &Effect, current: &Value) -> Value {
        match effect {
            Effect::Set { value, .. } => value.clone(),
            Effect::Increment { var, by } => match (self.variables.get(var), current) {
                (Some(Domain::Int { min, max }), Value::Int(i)) => {
                    Value::Int(i.saturating_add(*by).clamp(*min, *max))
                }
                _ => current.clone(),
            },
        }
    }

    /// Serializes back to the scenario document format.
    pub fn to_json(&self) -> String {
        let vars: serde_json::Map<String, Json> = self
            .variables
            .iter()
            .map(|(k, d)| {
                let v = match d {
                    Domain::Bool => serde_json::json!({"type": "bool"}),
                    Domain::Int { min, max } => serde_json::json!({"type": "int", "min": min, "max": max}),
                    Domain::Enum(vals) => serde_json::json!({"type": "enum", "values": vals}),
                };
                (k.clone(), v)
            })
            .collect();
        let actions: serde_json::Map<String, Json> = self
            .actions
            .iter()
            .map(|(k, a)| {
                let effects: Vec<Json> = a
                    .effects
                    .iter()
                    .map(|e| match e {
                        Effect::Set { var, value } => serde_json::json!({"set": var, "value": value}),
                        Effect::Increment { var, by } => serde_json::json!({"increment": var, "by": by}),
                    })
                    .collect();
                let v = serde_json::json!({
                    "precondition": a.precondition.to_string(),
                    "effects": effects,
                    "duration": a.duration,
                });
                (k.clone(), v)
            })
            .collect();
        let events: Vec<Json> = self
            .events
            .iter()
            .map(|e| {
                let mut v = serde_json::json!({"tick": e.tick, "variable": e.var, "value": e.value});
                if e.probability < 1.0 {
                    v["probability"] = serde_json::json!(e.probability);
                }
                v
            })
            .collect();
        let doc = serde_json::json!({
            "name": self.name,
            "description": self.description,
            "variables": vars,
            "init": self.init,
            "goal": self.goal.iter().map(Literal::to_string).collect::<Vec<_>>(),
            "conditions": self.conditions.iter().map(|(k, p)| (k.clone(), Json::String(p.to_string()))).collect::<serde_json::Map<_, _>>(),
            "actions": actions,
            "events": events,
            "max_ticks": self.max_ticks,
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("scenario serializes");
        s.push('\n');
        s
    }
}

fn schema(msg: impl Into<String>) -> ScenarioError {
    ScenarioError::SchemaViolation(msg.into())
}

fn json_value(v: &Json, ctx: &str) -> Result<Value, ScenarioError> {
    match v {
        Json::Bool(b) => Ok(Value::Bool(*b)),
        Json::Number(n) => n
            .as_i64()
            .map(Value::Int)
            .ok_or_else(|| schema(format!("{ctx}: {n} is not an integer"))),
        Json::String(s) => Ok(Value::Sym(s.clone())),
        other => Err(schema(format!("{ctx}: unsupported value {other}"))),
    }
}

fn object<'a>(v: &'a Json, ctx: &str) -> Result<&'a serde_json::Map<String, Json>, ScenarioError> {
    v.as_object().ok_or_else(|| schema(format!("{ctx} must be an object")))
}

fn array<'a>(v: &'a Json, ctx: &str) -> Result<&'a Vec<Json>, ScenarioError> {
    v.as_array().ok_or_else(|| schema(format!("{ctx} must be a list")))
}

fn string<'a>(v: &'a Json, ctx: &str) -> Result<&'a str, ScenarioError> {
    v.as_str().ok_or_else(|| schema(format!("{ctx} must be a string")))
}

struct Checker<'a> {
    variables: &'a BTreeMap<String, Domain>,
}

impl Checker<'_> {
    fn domain(&self, var: &str, ctx: &str) -> Result<&Domain, ScenarioError> {
        self.variables
            .get(var)
            .ok_or_else(|| ScenarioError::UnknownVariable { var: var.to_string(), context: ctx.to_string() })
    }

    fn literal(&self, lit: &Literal, ctx: &str) -> Result<(), ScenarioError> {
        let domain = self.domain(&lit.var, ctx)?;
        if lit.op.is_ordering() && !matches!(domain, Domain::Int { .. }) {
            return Err(schema(format!("{ctx}: '{lit}' orders a non-integer variable")));
        }
        let kind_ok = matches!(
            (domain, &lit.value),
            (Domain::Bool, Value::Bool(_)) | (Domain::Int { .. }, Value::Int(_)) | (Domain::Enum(_), Value::Sym(_))
        );
        if !kind_ok || (!lit.op.is_ordering() && !domain.contains(&lit.value)) {
            return Err(ScenarioError::DomainViolation(format!(
                "{ctx}: '{lit}' compares against a value outside the domain of '{}'",
                lit.var
            )));
        }
        Ok(())
    }

    fn predicate(&self, p: &Predicate, ctx: &str) -> Result<(), ScenarioError> {
        p.literals().into_iter().try_for_each(|l| self.literal(l, ctx))
    }

    fn value(&self, var: &str, v: &Value, ctx: &str) -> Result<(), ScenarioError> {
        if !self.domain(var, ctx)?.contains(v) {
            return Err(ScenarioError::DomainViolation(format!("{ctx}: {v} is outside the domain of '{var}'")));
        }
        Ok(())
    }
}

fn parse_pred(text: &str, ctx: &str) -> Result<Predicate, ScenarioError> {
    parse_predicate(text).map_err(|e| schema(format!("{ctx}: {e}")))
}

/// Loads and checks a scenario document.
pub fn load_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let doc: Json = serde_json::from_str(text).map_err(|e| schema(format!("invalid JSON: {e}")))?;
    let top = object(&doc, "scenario")?;
    const KEYS: [&str; 7] = ["variables", "init", "goal", "conditions", "actions", "events", "max_ticks"];
    for key in KEYS {
        if !top.contains_key(key) {
            return Err(schema(format!("missing key '{key}'")));
        }
    }
    if let Some(k) = top.keys().find(|k| !KEYS.contains(&k.as_str()) && *k != "name" && *k != "description") {
        return Err(schema(format!("unexpected key '{k}'")));
    }
    let name = top.get("name").map(|v| string(v, "name")).transpose()?.unwrap_or("").to_string();
    let description =
        top.get("description").map(|v| string(v, "description")).transpose()?.unwrap_or("").to_string();

    let mut variables = BTreeMap::new();
    for (var, spec) in object(&top["variables"], "variables")? {
        let ctx = format!("variables.{var}");
        let spec = object(spec, &ctx)?;
        let ty = spec.get("type").map(|t| string(t, &ctx)).transpose()?.unwrap_or("");
        let domain = match ty {
            "bool" => Domain::Bool,
            "int" => {
                let bound = |k: &str| {
                    spec.get(k)
                        .and_then(Json::as_i64)
                        .ok_or_else(|| schema(format!("{ctx}: integer variables need '{k}'")))
                };
                let (min, max) = (bound("min")?, bound("max")?);
                if min > max {
                    return Err(schema(format!("{ctx}: min {min} > max {max}")));
                }
                Domain::Int { min, max }
            }
            "enum" => {
                let vals = array(spec.get("values").unwrap_or(&Json::Null), &format!("{ctx}.values"))?
                    .iter()
                    .map(|v| string(v, &ctx).map(str::to_string))
                    .collect::<Result<Vec<_>, _>>()?;
                if vals.is_empty() {
                    return Err(schema(format!("{ctx}: empty enumeration")));
                }
                Domain::Enum(vals)
            }
            other => return Err(schema(format!("{ctx}: unknown type '{other}'"))),
        };
        variables.insert(var.clone(), domain);
    }
    let check = Checker { variables: &variables };

    let mut init = BTreeMap::new();
    for (var, v) in object(&top["init"], "init")? {
        let ctx = format!("init.{var}");
        let value = json_value(v, &ctx)?;
        check.value(var, &value, &ctx)?;
        init.insert(var.clone(), value);
    }
    if let Some(missing) = variables.keys().find(|v| !init.contains_key(*v)) {
        return Err(ScenarioError::DomainViolation(format!("init does not assign '{missing}'")));
    }

    let goal = array(&top["goal"], "goal")?
        .iter()
        .enumerate()
        .map(|(i, g)| {
            let ctx = format!("goal[{i}]");
            let lit = parse_literal(string(g, &ctx)?).map_err(|e| schema(format!("{ctx}: {e}")))?;
            check.literal(&lit, &ctx)?;
            Ok(lit)
        })
        .collect::<Result<Vec<_>, ScenarioError>>()?;

    let mut conditions = BTreeMap::new();
    for (name, p) in object(&top["conditions"], "conditions")? {
        let ctx = format!("conditions.{name}");
        let pred = parse_pred(string(p, &ctx)?, &ctx)?;
        check.predicate(&pred, &ctx)?;
        conditions.insert(name.clone(), pred);
    }

    let mut actions = BTreeMap::new();
    for (name, a) in object(&top["actions"], "actions")? {
        let ctx = format!("actions.{name}");
        let a = object(a, &ctx)?;
        let precondition = match a.get("precondition") {
            Some(p) => parse_pred(string(p, &ctx)?, &ctx)?,
            None => Predicate::True,
        };
        check.predicate(&precondition, &ctx)?;
        let duration = match a.get("duration") {
            None => 1,
            Some(d) => d
                .as_u64()
                .filter(|d| (1..=u32::MAX as u64).contains(d))
                .ok_or_else(|| schema(format!("{ctx}: duration must be a positive integer")))? as u32,
        };
        let mut effects = Vec::new();
        for (i, e) in array(a.get("effects").unwrap_or(&Json::Null), &format!("{ctx}.effects"))?.iter().enumerate() {
            let ectx = format!("{ctx}.effects[{i}]");
            let e = object(e, &ectx)?;
            let effect = if let Some(var) = e.get("set") {
                let var = string(var, &ectx)?.to_string();
                let value = json_value(e.get("value").ok_or_else(|| schema(format!("{ectx}: missing 'value'")))?, &ectx)?;
                check.value(&var, &value, &ectx)?;
                Effect::Set { var, value }
            } else if let Some(var) = e.get("increment") {
                let var = string(var, &ectx)?.to_string();
                if !matches!(check.domain(&var, &ectx)?, Domain::Int { .. }) {
                    return Err(ScenarioError::DomainViolation(format!("{ectx}: '{var}' is not an integer")));
                }
                let by = match e.get("by") {
                    None => 1,
                    Some(b) => b.as_i64().ok_or_else(|| schema(format!("{ectx}: 'by' must be an integer")))?,
                };
                Effect::Increment { var, by }
            } else {
                return Err(schema(format!("{ectx}: expected 'set' or 'increment'")));
            };
            effects.push(effect);
        }
        actions.insert(name.clone(), ActionSchema { precondition, effects, duration });
    }

    let max_ticks = top["max_ticks"]
        .as_u64()
        .filter(|&m| (1..=u32::MAX as u64).contains(&m))
        .ok_or_else(|| schema("max_ticks must be a positive integer"))? as u32;

    let mut events = Vec::new();
    for (i, e) in array(&top["events"], "events")?.iter().enumerate() {
        let ctx = format!("events[{i}]");
        let e = object(e, &ctx)?;
        let tick = e
            .get("tick")
            .and_then(Json::as_u64)
            .ok_or_else(|| schema(format!("{ctx}: missing integer 'tick'")))?;
        if tick < 1 || tick > max_ticks as u64 {
            return Err(schema(format!("{ctx}: tick {tick} outside 1..={max_ticks}")));
        }
        let var = string(e.get("variable").unwrap_or(&Json::Null), &format!("{ctx}.variable"))?.to_string();
        let value = json_value(e.get("value").ok_or_else(|| schema(format!("{ctx}: missing 'value'")))?, &ctx)?;
        check.value(&var, &value, &ctx)?;
        let probability = match e.get("probability") {
            None => 1.0,
            Some(p) => p
                .as_f64()
                .filter(|p| (0.0..=1.0).contains(p))
                .ok_or_else(|| schema(format!("{ctx}: probability must be in [0, 1]")))?,
        };
        events.push(Event { tick: tick as u32, var, value, probability });
    }

    Ok(Scenario { name, description, variables, init, goal, conditions, actions, events, max_ticks })
}

/// True when `op` compares integers by order (helper for regression code).
pub(crate) fn moves_toward(op: CmpOp, target: i64, current: i64, by: i64) -> bool {
    match op {
        CmpOp::Eq => (current < target && by > 0) || (current > target && by < 0),
        CmpOp::Ne => by != 0,
        CmpOp::Lt | CmpOp::Le => by < 0,
        CmpOp::Gt | CmpOp::Ge => by > 0,
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn patrol_json() -> String {
        r#"{
          "name": "uav_patrol",
          "description": "Patrol the route and warn any suspicious target.",
          "variables": {
            "position": {"type": "int", "min": 0, "max": 4},
            "target_detected": {"type": "bool"},
            "target_warned": {"type": "bool"},
            "threat_cleared": {"type": "bool"}
          },
          "init": {"position": 0, "target_detected": false, "target_warned": false, "threat_cleared": true},
          "goal": ["position = 4", "threat_cleared = true"],
          "conditions": {"target_detected": "target_detected = true"},
          "actions": {
            "advance": {"precondition": "true", "effects": [{"increment": "position", "by": 1}]},
            "warn": {"precondition": "target_detected = true",
                     "effects": [{"set": "target_warned", "value": true},
                                 {"set": "threat_cleared", "value": true},
                                 {"set": "target_detected", "value": false}]}
          },
          "events": [
            {"tick": 3, "variable": "target_detected", "value": true},
            {"tick": 3, "variable": "threat_cleared", "value": false}
          ],
          "max_ticks": 20
        }"#
        .to_string()
    }

    fn edit(f: impl FnOnce(&mut Json)) -> String {
        let mut v: Json = serde_json::from_str(&patrol_json()).unwrap();
        f(&mut v);
        v.to_string()
    }

    #[test]
    fn loads_patrol() {
        let s = load_scenario(&patrol_json()).unwrap();
        assert!(s.variables.len() >= 3);
        assert_eq!(s.goal.len(), 2);
        assert_eq!(s.actions["advance"].duration, 1);
        assert_eq!(s.events.len(), 2);
        assert_eq!(load_scenario(&s.to_json()).unwrap(), s);
    }

    #[test]
    fn event_at_tick_zero_is_a_schema_violation() {
        let doc = edit(|v| v["events"][0]["tick"] = 0.into());
        assert!(matches!(load_scenario(&doc), Err(ScenarioError::SchemaViolation(_))));
        let doc = edit(|v| v["events"][0]["tick"] = 21.into());
        assert!(matches!(load_scenario(&doc), Err(ScenarioError::SchemaViolation(_))));
    }

    #[test]
    fn enum_effect_outside_domain() {
        let doc = edit(|v| {
            v["variables"]["mode"] = serde_json::json!({"type": "enum", "values": ["patrol", "hover"]});
            v["init"]["mode"] = "patrol".into();
            v["actions"]["advance"]["effects"] = serde_json::json!([{"set": "mode", "value": "dive"}]);
        });
        assert!(matches!(load_scenario(&doc), Err(ScenarioError::DomainViolation(_))));
    }

    #[test]
    fn init_domain_and_coverage() {
        let doc = edit(|v| v["init"]["position"] = 9.into());
        assert!(matches!(load_scenario(&doc), Err(ScenarioError::DomainViolation(_))));
        let doc = edit(|v| {
            v["init"].as_object_mut().unwrap().remove("target_warned");
        });
        assert!(matches!(load_scenario(&doc), Err(ScenarioError::DomainViolation(_))));
    }

    #[test]
    fn unknown_variables() {
        let doc = edit(|v| v["goal"][0] = "altitude = 3".into());
        assert!(matches!(load_scenario(&doc), Err(ScenarioError::UnknownVariable { .. })));
        let doc = edit(|v| v["conditions"]["x"] = "ghost = true".into());
        assert!(matches!(load_scenario(&doc), Err(ScenarioError::UnknownVariable { .. })));
    }

    #[test]
    fn schema_errors() {
        assert!(matches!(load_scenario("{}"), Err(ScenarioError::SchemaViolation(_))));
        let doc = edit(|v| v["max_ticks"] = 0.into());
        assert!(matches!(load_scenario(&doc), Err(ScenarioError::SchemaViolation(_))));
        let doc = edit(|v| v["actions"]["warn"]["duration"] = 0.into());
        assert!(matches!(load_scenario(&doc), Err(ScenarioError::SchemaViolation(_))));
        let doc = edit(|v| v["conditions"]["x"] = "target_detected < true".into());
        assert!(matches!(load_scenario(&doc), Err(ScenarioError::SchemaViolation(_))));
        let doc = edit(|v| v["surprise"] = 1.into());
        assert!(matches!(load_scenario(&doc), Err(ScenarioError::SchemaViolation(_))));
    }

    #[test]
    fn increments_clamp() {
        let s = load_scenario(&patrol_json()).unwrap();
        let e = Effect::Increment { var: "position".into(), by: 3 };
        assert_eq!(s.effect_value(&e, &Value::Int(3)), Value::Int(4));
        let e = Effect::Increment { var: "position".into(), by: -9 };
        assert_eq!(s.effect_value(&e, &Value::Int(3)), Value::Int(0));
    }
}
