//! Synthesizes a tree for a bundled scenario with both built-in searches.
//!
//! cargo run --example synthesize -- door_open

use btgen::fixtures::{fixture, BUNDLED};
use btgen::format::serialize_bt_xml;
use btgen::synth::{synthesize, PolicyKind, SearchConfig, Task};

fn main() {
    let name = std::env::args().nth(1).unwrap_or_else(|| "uav_patrol".into());
    if !BUNDLED.contains(&name.as_str()) {
        eprintln!("unknown scenario {name}; pick one of {BUNDLED:?}");
        std::process::exit(2);
    }
    let (scenario, library) = fixture(&name);
    let task = Task::from_scenario(&scenario);
    for policy in [PolicyKind::Oracle, PolicyKind::MctsOracle] {
        let config = SearchConfig { policy, ..SearchConfig::default() };
        match synthesize(&task, &scenario, &library, &config) {
            Ok((tree, report)) => {
                println!(
                    "{policy}: {} expansions, {} states, {} nodes, rejections {:?}",
                    report.expansions, report.states, report.final_nodes, report.rejections
                );
                println!("{}", serialize_bt_xml(&tree));
            }
            Err(e) => println!("{policy}: {e}"),
        }
    }
}
