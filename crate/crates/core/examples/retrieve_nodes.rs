//! Ranks library definitions against a free-text query.
//!
//! cargo run --example retrieve_nodes -- pick_place "grasp the object"

use btgen::fixtures::fixture;
use btgen::library::retrieve;

fn main() {
    let mut args = std::env::args().skip(1);
    let bundle = args.next().unwrap_or_else(|| "uav_patrol".into());
    let query = args.next().unwrap_or_else(|| "warn the suspicious target".into());
    let (_, library) = fixture(&bundle);
    println!("query: {query:?} against {} definitions of {bundle}", library.len());
    for hit in retrieve(&query, 5, &library) {
        println!("  {:.3}  {:<9} {}", hit.score, hit.definition.node_type, hit.definition.name);
    }
}
