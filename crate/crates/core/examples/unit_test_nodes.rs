//! Checks library leaves in isolation against expected statuses and effects.
//!
//! cargo run --example unit_test_nodes

use std::collections::BTreeMap;

use btgen::bt::NodeStatus;
use btgen::expr::Value;
use btgen::fixtures::fixture;
use btgen::sim::{unit_test_nodes, NodeCase};

fn main() {
    let (scenario, library) = fixture("uav_patrol");
    let world = |pairs: &[(&str, Value)]| pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect::<BTreeMap<_, _>>();
    let cases = vec![
        NodeCase {
            node: "check-target_detected".into(),
            world: world(&[("target_detected", Value::Bool(true))]),
            expected_status: NodeStatus::Success,
            expected: None,
        },
        NodeCase {
            node: "move-to_next-pos".into(),
            world: world(&[("position", Value::Int(2))]),
            expected_status: NodeStatus::Success,
            expected: Some(world(&[
                ("position", Value::Int(3)),
                ("target_detected", Value::Bool(false)),
                ("target_warned", Value::Bool(false)),
                ("threat_cleared", Value::Bool(true)),
            ])),
        },
        // no target to warn, so this expectation is wrong on purpose
        NodeCase {
            node: "warn-target".into(),
            world: BTreeMap::new(),
            expected_status: NodeStatus::Success,
            expected: None,
        },
    ];
    let report = unit_test_nodes(&library, &scenario, &cases).unwrap();
    for c in &report.cases {
        println!("{:<24} {} (expected {}, got {})", c.node, if c.passed { "ok" } else { "FAILED" }, c.expected_status, c.actual_status);
    }
    println!("{} passed, {} failed", report.passed, report.failed);
}
