//! Ticks the UAV patrol tree by hand, one tick at a time, printing each leaf.
//!
//! cargo run --example tick_patrol

use btgen::bt::{tick_with, uav_patrol_tree, BtNode, NodeStatus, OpenPolicy, TickObserver};
use btgen::expr::Value;
use btgen::fixtures::fixture;
use btgen::sim::{SimRuntime, WorldState};

struct Print;

impl TickObserver<WorldState> for Print {
    fn leaf(&mut self, node: &BtNode, status: NodeStatus, world: &WorldState) {
        println!("    {:<24} {status:<8} position={}", node.name, world.assignment["position"]);
    }
}

fn main() {
    let (scenario, library) = fixture("uav_patrol");
    let tree = uav_patrol_tree();
    let runtime = SimRuntime::new(&scenario);
    let mut world = WorldState::initial(&scenario);

    for t in 1..=6 {
        if t == 3 {
            println!("  a suspicious target appears");
            world.assignment.insert("target_detected".into(), Value::Bool(true));
        }
        println!("tick {t}");
        let (status, next) = tick_with(&tree, &world, &library, &runtime, OpenPolicy::Reject, &mut Print).unwrap();
        world = next;
        println!("  root -> {status}");
    }
}
