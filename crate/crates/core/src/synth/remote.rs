//! Expansion through a remote endpoint, plus an in-process mock of it.
//!
//! Request and response are UTF-8 JSON. The request carries the task, the
//! partial tree as XML, the target and its subgoal, the retrieved leaf
//! definitions, the operator catalog, a role-tagged prompt, and feedback
//! terms. The response is `{"candidates": [{operator, target, payload}]}`.

use std::cell::RefCell;
use std::path::Path;
use std::sync::Mutex;
use std::time::Duration;

use serde_json::{json, Value as Json};
use thiserror::Error;

use super::candidate::ExpansionCandidate;
use super::oracle::oracle_expand;
use super::policy::{ExpandError, ExpandRequest, ExpansionPolicy};
use crate::bt::NodeKind;
use crate::expr::parse_literal;
use crate::format::{parse_bt_xml, serialize_bt_xml};
use crate::library::{retrieve, NodeLibrary};
use crate::sim::Scenario;

/// Environment variable holding the endpoint URL.
pub const REMOTE_URL_ENV: &str = "BTGEN_REMOTE_URL";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransportError {
    #[error("unreachable: {0}")]
    Unavailable(String),
    #[error("request failed: {0}")]
    Failed(String),
}

/// Sends one request body and returns the response body.
pub trait Transport {
    fn exchange(&self, body: &str) -> Result<String, TransportError>;
}

/// JSON over HTTP POST to a single endpoint.
pub struct HttpTransport {
    url: String,
    agent: ureq::Agent,
}

impl HttpTransport {
    pub fn new(url: impl Into<String>, timeout: Duration) -> Self {
        HttpTransport { url: url.into(), agent: ureq::AgentBuilder::new().timeout(timeout).build() }
    }
}

impl Transport for HttpTransport {
    fn exchange(&self, body: &str) -> Result<String, TransportError> {
        let response = self
            .agent
            .post(&self.url)
            .set("Content-Type", "application/json")
            .send_string(body)
            .map_err(|e| match e {
                ureq::Error::Transport(t) => TransportError::Unavailable(t.to_string()),
                ureq::Error::Status(code, _) => TransportError::Failed(format!("HTTP {code}")),
            })?;
        response.into_string().map_err(|e| TransportError::Failed(e.to_string()))
    }
}

type Handler = Box<dyn Fn(&str) -> Result<String, TransportError> + Send + Sync>;

/// In-process endpoint with the same contract as the HTTP one.
pub struct MockTransport {
    handler: Handler,
}

impl MockTransport {
    pub fn from_fn(f: impl Fn(&str) -> Result<String, TransportError> + Send + Sync + 'static) -> Self {
        MockTransport { handler: Box::new(f) }
    }

    /// Answers with a single `BindLeaf` of the first retrieved definition.
    pub fn echo_first() -> Self {
        Self::from_fn(|body| {
            let req: Json = serde_json::from_str(body).map_err(|e| TransportError::Failed(e.to_string()))?;
            let first = req["retrieved_nodes"][0]["name"].as_str().unwrap_or_default();
            let candidate = ExpansionCandidate::bind(req["target"].as_str().unwrap_or_default(), first);
            Ok(json!({"candidates": [candidate.to_json()]}).to_string())
        })
    }

    /// Answers with exactly the regression candidates for the request.
    pub fn oracle(scenario: Scenario, library: NodeLibrary, k: usize) -> Self {
        Self::from_fn(move |body| {
            let req: Json = serde_json::from_str(body).map_err(|e| TransportError::Failed(e.to_string()))?;
            let tree = parse_bt_xml(req["tree_xml"].as_str().unwrap_or_default())
                .map_err(|e| TransportError::Failed(e.to_string()))?;
            let target = req["target"].as_str().unwrap_or_default();
            let query = wire_query(&req);
            let candidates = oracle_expand(&tree, target, &scenario, &library, k, &query).unwrap_or_default();
            Ok(json!({"candidates": candidates.iter().map(ExpansionCandidate::to_json).collect::<Vec<_>>()})
                .to_string())
        })
    }

    /// Replies with `responses` in order, then repeats the last one.
    pub fn scripted(responses: Vec<String>) -> Self {
        let queue = Mutex::new((responses, 0usize));
        Self::from_fn(move |_| {
            let mut q = queue.lock().expect("mock lock");
            let (items, i) = &mut *q;
            let reply = items.get(*i).or(items.last()).cloned().unwrap_or_default();
            *i += 1;
            Ok(reply)
        })
    }
}

impl Transport for MockTransport {
    fn exchange(&self, body: &str) -> Result<String, TransportError> {
        (self.handler)(body)
    }
}

/// A named prompt template.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoleProfile {
    pub name: String,
    pub template: String,
}

impl RoleProfile {
    pub fn planner() -> Self {
        RoleProfile { name: "planner".into(), template: include_str!("../../prompts/planner.txt").into() }
    }

    pub fn validator() -> Self {
        RoleProfile { name: "validator".into(), template: include_str!("../../prompts/validator.txt").into() }
    }

    /// Loads `<dir>/<name>.txt`.
    pub fn load(dir: &Path, name: &str) -> std::io::Result<Self> {
        let template = std::fs::read_to_string(dir.join(format!("{name}.txt")))?;
        Ok(RoleProfile { name: name.into(), template })
    }

    /// Substitutes `{{key}}` placeholders.
    pub fn render(&self, fields: &[(&str, String)]) -> String {
        fields.iter().fold(self.template.clone(), |acc, (k, v)| acc.replace(&format!("{{{{{k}}}}}"), v))
    }
}

/// Expansion policy backed by a [`Transport`].
///
/// Requests use the planner role, or the validator role once feedback from
/// failed children is available. Each exchange is retried once. Candidates
/// that fail the schema, target another node, or name definitions outside
/// the library are dropped and logged.
pub struct RemotePolicy {
    transport: Box<dyn Transport>,
    planner: RoleProfile,
    validator: RoleProfile,
    drops: RefCell<Vec<String>>,
}

impl RemotePolicy {
    pub fn new(transport: impl Transport + 'static) -> Self {
        RemotePolicy {
            transport: Box::new(transport),
            planner: RoleProfile::planner(),
            validator: RoleProfile::validator(),
            drops: RefCell::new(Vec::new()),
        }
    }

    /// HTTP transport to the URL in [`REMOTE_URL_ENV`].
    pub fn from_env() -> Result<Self, ExpandError> {
        let url = std::env::var(REMOTE_URL_ENV)
            .map_err(|_| ExpandError::RemoteUnavailable(format!("{REMOTE_URL_ENV} is not set")))?;
        Ok(Self::new(HttpTransport::new(url, Duration::from_secs(30))))
    }

    pub fn with_profiles(mut self, planner: RoleProfile, validator: RoleProfile) -> Self {
        self.planner = planner;
        self.validator = validator;
        self
    }

    fn drop_candidate(&self, what: String) {
        log::warn!("dropped remote candidate: {what}");
        self.drops.borrow_mut().push(what);
    }
}

/// Builds the wire request for one expansion.
pub fn build_request(req: &ExpandRequest<'_>, role: &RoleProfile) -> Json {
    let subgoal = match req.tree.root().find(req.target).map(|n| &n.kind) {
        Some(NodeKind::Open(s)) => Some(s),
        _ => None,
    };
    let retrieved: Vec<Json> = retrieve(&req.query(), req.k, req.library)
        .iter()
        .map(|r| {
            json!({
                "name": r.definition.name,
                "type": r.definition.node_type.to_string(),
                "description": r.definition.description,
                "score": r.score,
            })
        })
        .collect();
    let operators: Vec<Json> = req
        .library
        .operators()
        .iter()
        .map(|o| json!({"kind": o.kind.as_str(), "min_children": o.min_children, "max_children": o.max_children}))
        .collect();
    let tree_xml = serialize_bt_xml(req.tree);
    let feedback: Vec<String> = req.feedback.iter().map(ToString::to_string).collect();
    let prompt = role.render(&[
        ("task", req.task.description.clone()),
        ("target", req.target.to_string()),
        ("mode", subgoal.map(|s| s.mode.as_str()).unwrap_or_default().to_string()),
        ("subgoal", subgoal.map(|s| s.expression()).unwrap_or_default()),
        ("tree", tree_xml.clone()),
        (
            "retrieved",
            retrieved.iter().map(|r| format!("- {} ({}): {}", r["name"], r["type"], r["description"])).collect::<Vec<_>>().join("\n"),
        ),
        ("operators", operators.iter().map(Json::to_string).collect::<Vec<_>>().join("\n")),
        ("feedback", feedback.join(", ")),
    ]);
    json!({
        "task": {"description": req.task.description, "goal": crate::expr::format_conjunction(&req.task.goal)},
        "tree_xml": tree_xml,
        "target": req.target,
        "subgoal": subgoal.map(|s| json!({"expression": s.expression(), "mode": s.mode.as_str(), "description": s.description})),
        "retrieved_nodes": retrieved,
        "operators": operators,
        "role": {"name": role.name, "prompt": prompt},
        "feedback": feedback,
    })
}

/// Sends the request (one retry) and filters the reply.
pub fn remote_expand(
    policy: &RemotePolicy,
    req: &ExpandRequest<'_>,
) -> Result<Vec<ExpansionCandidate>, ExpandError> {
    let role = if req.feedback.is_empty() { &policy.planner } else { &policy.validator };
    let body = build_request(req, role).to_string();
    let mut last_error = None;
    for attempt in 0..2 {
        let reply = match policy.transport.exchange(&body) {
            Ok(r) => r,
            Err(e) => {
                log::warn!("remote exchange attempt {} failed: {e}", attempt + 1);
                last_error = Some(match e {
                    TransportError::Unavailable(m) => ExpandError::RemoteUnavailable(m),
                    TransportError::Failed(m) => ExpandError::MalformedResponse(m),
                });
                continue;
            }
        };
        match parse_response(&reply) {
            Ok(raw) => return filter(policy, req, raw),
            Err(m) => {
                log::warn!("remote reply attempt {} malformed: {m}", attempt + 1);
                last_error = Some(ExpandError::MalformedResponse(m));
            }
        }
    }
    Err(last_error.expect("two attempts were made"))
}

fn parse_response(reply: &str) -> Result<Vec<Json>, String> {
    let v: Json = serde_json::from_str(reply).map_err(|e| format!("invalid JSON: {e}"))?;
    v.get("candidates")
        .and_then(Json::as_array)
        .cloned()
        .ok_or_else(|| "missing 'candidates' list".to_string())
}

fn filter(policy: &RemotePolicy, req: &ExpandRequest<'_>, raw: Vec<Json>) -> Result<Vec<ExpansionCandidate>, ExpandError> {
    let mut out = Vec::new();
    for item in raw {
        let candidate = match ExpansionCandidate::from_json(&item) {
            Ok(c) => c,
            Err(e) => {
                policy.drop_candidate(format!("{item}: {e}"));
                continue;
            }
        };
        if candidate.target != req.target {
            policy.drop_candidate(format!("{}: targets '{}', asked for '{}'", candidate.describe(), candidate.target, req.target));
            continue;
        }
        if let Err(e) = candidate.check(req.library) {
            policy.drop_candidate(format!("{}: {e}", candidate.describe()));
            continue;
        }
        out.push(candidate);
    }
    if out.is_empty() {
        return Err(ExpandError::EmptyAfterFiltering);
    }
    Ok(out)
}

impl ExpansionPolicy for RemotePolicy {
    fn expand(&self, req: &ExpandRequest<'_>) -> Result<Vec<ExpansionCandidate>, ExpandError> {
        remote_expand(self, req)
    }

    fn drops(&self) -> Vec<String> {
        self.drops.borrow().clone()
    }
}

/// The retrieval query an in-process policy would use, rebuilt from a wire
/// request (see [`ExpandRequest::query`]).
pub fn wire_query(request: &Json) -> String {
    let mut parts = vec![request["task"]["description"].as_str().unwrap_or_default().to_string()];
    if request["subgoal"].is_object() {
        parts.push(request["subgoal"]["description"].as_str().unwrap_or_default().to_string());
        parts.push(request["subgoal"]["expression"].as_str().unwrap_or_default().to_string());
    }
    parts.extend(request_feedback(request).iter().map(ToString::to_string));
    parts.join(" ")
}

/// Parses the feedback terms of a wire request.
pub fn request_feedback(request: &Json) -> Vec<crate::expr::Literal> {
    request["feedback"]
        .as_array()
        .map(|a| a.iter().filter_map(|v| v.as_str().and_then(|s| parse_literal(s).ok())).collect())
        .unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bt::{BehaviorTree, BtNode, Subgoal};
    use crate::fixtures::fixture;
    use crate::library::OpKind;
    use crate::synth::policy::Task;

    fn with_request<T>(f: impl FnOnce(&ExpandRequest<'_>) -> T) -> T {
        let (s, lib) = fixture("uav_patrol");
        let task = Task::from_scenario(&s);
        let tree = BehaviorTree::new(BtNode::open("open_1", Subgoal::achieve(s.goal.clone(), "warn the suspicious target")));
        let req = ExpandRequest { tree: &tree, target: "open_1", task: &task, scenario: &s, library: &lib, feedback: &[], k: 3 };
        f(&req)
    }

    #[test]
    fn request_has_the_wire_keys() {
        with_request(|req| {
            let v = build_request(req, &RoleProfile::planner());
            let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
            assert_eq!(
                keys,
                ["task", "tree_xml", "target", "subgoal", "retrieved_nodes", "operators", "role", "feedback"]
            );
            assert_eq!(v["retrieved_nodes"].as_array().unwrap().len(), 3);
            assert_eq!(v["operators"].as_array().unwrap().len(), 5);
            assert_eq!(v["role"]["name"], "planner");
            assert!(v["role"]["prompt"].as_str().unwrap().contains("open_1"));
            assert!(!v["role"]["prompt"].as_str().unwrap().contains("{{"));
        });
    }

    #[test]
    fn echo_mock_binds_the_first_retrieved_definition() {
        with_request(|req| {
            let policy = RemotePolicy::new(MockTransport::echo_first());
            let c = remote_expand(&policy, req).unwrap();
            assert_eq!(c.len(), 1);
            assert_eq!(c[0].operator, OpKind::BindLeaf);
            assert_eq!(c, remote_expand(&policy, req).unwrap());
        });
    }

    #[test]
    fn out_of_library_definitions_are_dropped() {
        with_request(|req| {
            let teleport = ExpansionCandidate::bind("open_1", "teleport").to_json();
            let reply = json!({"candidates": [teleport]}).to_string();
            let policy = RemotePolicy::new(MockTransport::scripted(vec![reply]));
            assert_eq!(remote_expand(&policy, req), Err(ExpandError::EmptyAfterFiltering));
            assert_eq!(policy.drops().len(), 1);
            assert!(policy.drops()[0].contains("teleport"));
        });
    }

    #[test]
    fn three_child_sequence_round_trips() {
        with_request(|req| {
            let reply = json!({"candidates": [{
                "operator": "SeqDecompose", "target": "open_1",
                "payload": {"children": [
                    {"subgoal": "target_detected = true", "mode": "ensure", "description": "spot"},
                    {"subgoal": "threat_cleared = true", "description": "warn"},
                    {"subgoal": "position = 4", "description": "fly"}
                ]}
            }]})
            .to_string();
            let policy = RemotePolicy::new(MockTransport::scripted(vec![reply]));
            let c = remote_expand(&policy, req).unwrap();
            assert_eq!(c.len(), 1);
            let t = crate::synth::apply_candidate(req.tree, &c[0], req.library).unwrap();
            assert_eq!(t.root().kind, NodeKind::Sequence);
            assert_eq!(t.root().children.len(), 3);
        });
    }

    #[test]
    fn malformed_reply_is_retried_once() {
        with_request(|req| {
            let good = json!({"candidates": [ExpansionCandidate::bind("open_1", "warn-target").to_json()]}).to_string();
            let policy = RemotePolicy::new(MockTransport::scripted(vec!["not json".into(), good]));
            assert_eq!(remote_expand(&policy, req).unwrap().len(), 1);
            let policy = RemotePolicy::new(MockTransport::scripted(vec!["{}".into()]));
            assert!(matches!(remote_expand(&policy, req), Err(ExpandError::MalformedResponse(_))));
        });
    }

    #[test]
    fn unreachable_endpoint() {
        with_request(|req| {
            let policy = RemotePolicy::new(MockTransport::from_fn(|_| Err(TransportError::Unavailable("down".into()))));
            assert!(matches!(remote_expand(&policy, req), Err(ExpandError::RemoteUnavailable(_))));
            // nothing listens on port 9 of localhost
            let http = RemotePolicy::new(HttpTransport::new("http://127.0.0.1:9/", Duration::from_millis(200)));
            assert!(matches!(remote_expand(&http, req), Err(ExpandError::RemoteUnavailable(_))));
        });
    }

    #[test]
    fn validator_role_when_feedback_exists() {
        let (s, lib) = fixture("uav_patrol");
        let task = Task::from_scenario(&s);
        let tree = BehaviorTree::new(BtNode::open("open_1", Subgoal::achieve(s.goal.clone(), "")));
        let fb = vec![s.goal[1].clone()];
        let req = ExpandRequest { tree: &tree, target: "open_1", task: &task, scenario: &s, library: &lib, feedback: &fb, k: 3 };
        let seen = std::sync::Arc::new(Mutex::new(String::new()));
        let sink = seen.clone();
        let policy = RemotePolicy::new(MockTransport::from_fn(move |body| {
            *sink.lock().unwrap() = body.to_string();
            Ok(json!({"candidates": [ExpansionCandidate::bind("open_1", "warn-target").to_json()]}).to_string())
        }));
        remote_expand(&policy, &req).unwrap();
        let sent: Json = serde_json::from_str(&seen.lock().unwrap()).unwrap();
        assert_eq!(sent["role"]["name"], "validator");
        assert_eq!(request_feedback(&sent), fb);
    }
}
