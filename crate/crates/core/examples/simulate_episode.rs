//! Runs the patrol tree on every schedule variant and replays each trace.
//!
//! cargo run --example simulate_episode [seed]

use btgen::bt::uav_patrol_tree;
use btgen::fixtures::fixture;
use btgen::sim::{replay_assignment, run_episode, schedule_variants};

fn main() {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let (scenario, library) = fixture("uav_patrol");
    let tree = uav_patrol_tree();

    for (i, variant) in schedule_variants(&scenario, seed, 5).iter().enumerate() {
        let run = run_episode(&tree, variant, &library, seed + i as u64).unwrap();
        let events: Vec<String> = run.events.iter().map(|e| format!("t{} {}={}", e.tick, e.variable, e.value)).collect();
        let warned: Vec<u32> = run.trace.iter().filter(|e| e.leaf == "warn-target").map(|e| e.tick).collect();
        let replayed = replay_assignment(&run, variant, &library) == run.final_state.assignment;
        println!(
            "variant {i}: success={} ticks={} events=[{}] warned at {:?} replay_ok={replayed}",
            run.success,
            run.ticks_used,
            events.join(", "),
            warned
        );
    }

    let run = run_episode(&tree, &scenario, &library, seed).unwrap();
    print!("\ntrace of the declared schedule:\n{}", run.trace_jsonl());
}
