//! Builds dataset records for the bundled scenarios and checks each one.
//!
//! cargo run --example build_dataset

use btgen::cli::make_record;
use btgen::fixtures::{fixture, BUNDLED};
use btgen::format::{read_records, write_records};
use btgen::synth::{synthesize, SearchConfig, Task};

fn main() {
    let mut records = Vec::new();
    for name in BUNDLED {
        let (scenario, library) = fixture(name);
        let (tree, _) = synthesize(&Task::from_scenario(&scenario), &scenario, &library, &SearchConfig::default())
            .expect("bundled scenarios are solvable");
        records.push(make_record(&scenario, &library, &tree));
    }
    let corpus = write_records(&records);
    assert_eq!(read_records(&corpus).unwrap(), records);
    for r in &records {
        println!("{:<14} {:>2} leaves  {}", r.name, r.nodes.len(), r.description);
    }
    println!("\nfirst record:\n{}", corpus.lines().next().unwrap_or_default());
}
