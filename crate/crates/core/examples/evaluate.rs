//! pass@k for the built-in synthesizer and for a generator that always
//! returns a single action, over every bundled scenario.
//!
//! cargo run --example evaluate

use btgen::bt::{BehaviorTree, BtNode};
use btgen::fixtures::{fixture, BUNDLED};
use btgen::library::NodeLibrary;
use btgen::metrics::{evaluate_generator, pass_at_k, perplexity, Synthesizer};
use btgen::sim::Scenario;
use btgen::synth::{SearchConfig, Task};

fn first_action(_: &Task, _: &Scenario, library: &NodeLibrary, _: &SearchConfig) -> Result<BehaviorTree, String> {
    let def = library.actions().next().ok_or("no actions")?;
    Ok(BehaviorTree::new(BtNode::action(def.name.clone())))
}

fn main() {
    println!("pass@k(n=10, c=3): {:?}", (1..=5).map(|k| pass_at_k(10, 3, k).unwrap()).collect::<Vec<_>>());
    println!("perplexity([0.5, 0.25]) = {:.6}\n", perplexity(&[0.5, 0.25]).unwrap());

    let problems: Vec<_> = BUNDLED.iter().map(|n| fixture(n)).collect();
    let config = SearchConfig::default();
    let naive = first_action;
    for (label, generator) in [("synthesizer", &Synthesizer as &dyn btgen::metrics::TreeGenerator), ("first action", &naive)] {
        let report = evaluate_generator(generator, &problems, 4, &[1, 4], &config).unwrap();
        println!("{label}\n{}", report.table());
    }
}
