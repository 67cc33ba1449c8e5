//! Parses hand-written tree XML, prints the canonical form, and parses it back.
//!
//! cargo run --example xml_roundtrip [file.xml]

use btgen::fixtures::PATROL_TABLE_XML;
use btgen::format::{parse_bt_xml, serialize_bt_xml};

fn main() {
    let text = match std::env::args().nth(1) {
        Some(path) => std::fs::read_to_string(path).expect("readable file"),
        None => PATROL_TABLE_XML.to_string(),
    };
    let tree = match parse_bt_xml(&text) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("parse error: {e}");
            std::process::exit(2);
        }
    };
    println!("{} nodes, depth {}", tree.node_count(), tree.depth());
    for node in tree.iter() {
        println!("  {:<10} {}", node.kind.element_name(), node.name);
    }
    let canonical = serialize_bt_xml(&tree);
    println!("\n{canonical}");
    assert_eq!(parse_bt_xml(&canonical).unwrap(), tree);
}
