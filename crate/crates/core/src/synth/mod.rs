//! Search over partial trees: expansion policies, multi-level validation,
//! and UCT or greedy search.

mod candidate;
mod config;
mod oracle;
mod policy;
mod remote;
mod search;
mod validate;

pub use candidate::{apply_candidate, CandidateError, ChildSpec, ControlKind, ExpansionCandidate, Payload};
pub use config::{ConfigError, Levels, PolicyKind, SearchConfig};
pub use oracle::{oracle_expand, OraclePolicy};
pub use policy::{ExpandError, ExpandRequest, ExpansionPolicy, Task};
pub use remote::{
    build_request, remote_expand, request_feedback, wire_query, HttpTransport, MockTransport, RemotePolicy,
    RoleProfile, Transport, TransportError, REMOTE_URL_ENV,
};
pub use search::{
    f_init, synthesize, synthesize_with, Exhausted, Outcome, Rejections, SearchObserver, SearchTree, StateId,
    SynthError, SynthState, SynthesisReport, ROOT,
};
pub use validate::{validate_state, Feedback, Level, Verdict};
