//! The five bundled desk-scale scenarios and their node libraries.

use crate::library::{load_library, NodeLibrary};
use crate::sim::{load_scenario, Scenario};

/// Bundled scenario names, in lexicographic order.
pub const BUNDLED: [&str; 5] = ["area_survey", "door_open", "pick_place", "recharge_dock", "uav_patrol"];

macro_rules! bundle {
    ($($name:literal),*) => {
        fn texts(name: &str) -> Option<(&'static str, &'static str)> {
            match name {
                $($name => Some((
                    include_str!(concat!("../fixtures/", $name, ".scenario.json")),
                    include_str!(concat!("../fixtures/", $name, ".library.json")),
                )),)*
                _ => None,
            }
        }
    };
}

bundle!("area_survey", "door_open", "pick_place", "recharge_dock", "uav_patrol");

/// Raw `(scenario, library)` JSON documents of a bundled scenario.
pub fn documents(name: &str) -> Option<(&'static str, &'static str)> {
    texts(name)
}

/// Loads a bundled scenario and its library.
///
/// # Panics
/// If `name` is not one of [`BUNDLED`].
pub fn fixture(name: &str) -> (Scenario, NodeLibrary) {
    let (s, l) = texts(name).unwrap_or_else(|| panic!("no bundled scenario named '{name}'"));
    (
        load_scenario(s).expect("bundled scenario loads"),
        load_library(l).expect("bundled library loads"),
    )
}

/// The reference patrol tree exactly as typeset in the dataset table, with
/// single quotes and spaces around `=`.
pub const PATROL_TABLE_XML: &str = "<Fallback instance_name = 'fallback_node'>
  <Sequence instance_name = 'sequence_node'>
    <Condition instance_name = 'check-target_detected'/>
    <Action instance_name = 'warn-target' />
  </Sequence>
  <Action instance_name = 'move-to_next-pos'/>
</Fallback>
";
