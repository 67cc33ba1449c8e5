use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::scenario::Scenario;

/// Event-schedule variants of `scenario`.
///
/// Variant 0 is the declared schedule and variant 1 drops every event.
/// Further variants move each group of same-tick events to a tick drawn
/// from `1..=max(1, max_ticks / 2)`, keeping the group together.
pub fn schedule_variants(scenario: &Scenario, seed: u64, count: usize) -> Vec<Scenario> {
    let mut out = Vec::with_capacity(count);
    if count == 0 {
        return out;
    }
    out.push(scenario.clone());
    if out.len() < count {
        let mut quiet = scenario.clone();
        quiet.events.clear();
        out.push(quiet);
    }
    let mut group_ticks: Vec<u32> = scenario.events.iter().map(|e| e.tick).collect();
    group_ticks.sort_unstable();
    group_ticks.dedup();
    let horizon = (scenario.max_ticks / 2).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while out.len() < count {
        let moved: Vec<(u32, u32)> = group_ticks.iter().map(|&t| (t, rng.gen_range(1..=horizon))).collect();
        let mut v = scenario.clone();
        for e in &mut v.events {
            e.tick = moved.iter().find(|(from, _)| *from == e.tick).map_or(e.tick, |(_, to)| *to);
        }
        v.events.sort_by_key(|e| e.tick);
        out.push(v);
    }
    out
}
