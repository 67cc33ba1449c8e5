//! Drives the remote expansion policy through an in-process endpoint that
//! mixes an unknown leaf into every reply. The bad candidate is dropped.
//!
//! cargo run --example remote_mock

use btgen::fixtures::fixture;
use btgen::format::serialize_bt_xml;
use btgen::synth::{
    synthesize_with, ExpansionCandidate, ExpansionPolicy, MockTransport, PolicyKind, RemotePolicy, SearchConfig,
    Task, Transport, TransportError,
};

fn main() {
    env_logger::Builder::new().filter_level(log::LevelFilter::Warn).init();
    let (scenario, library) = fixture("uav_patrol");
    let oracle = MockTransport::oracle(scenario.clone(), library.clone(), 8);
    let endpoint = MockTransport::from_fn(move |body| {
        let mut reply: serde_json::Value =
            serde_json::from_str(&oracle.exchange(body)?).map_err(|e| TransportError::Failed(e.to_string()))?;
        let request: serde_json::Value = serde_json::from_str(body).map_err(|e| TransportError::Failed(e.to_string()))?;
        println!("request for {} ({} retrieved nodes)", request["target"], request["retrieved_nodes"].as_array().map_or(0, Vec::len));
        let bogus = ExpansionCandidate::bind(request["target"].as_str().unwrap_or_default(), "self-destruct");
        reply["candidates"].as_array_mut().unwrap().push(bogus.to_json());
        Ok(reply.to_string())
    });

    let policy = RemotePolicy::new(endpoint);
    let config = SearchConfig { policy: PolicyKind::MctsOracle, ..SearchConfig::default() };
    let out = synthesize_with(&Task::from_scenario(&scenario), &scenario, &library, &config, &policy, &mut ()).unwrap();
    println!("\n{}", serialize_bt_xml(&out.tree));
    println!("{} candidates dropped:", policy.drops().len());
    for d in policy.drops() {
        println!("  {d}");
    }
}
