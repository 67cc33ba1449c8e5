use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use btgen::format::{parse_bt_xml, read_records};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn fx(name: &str) -> PathBuf {
    fixtures().join(name)
}

fn btgen(args: &[&str], paths: &[(&str, &Path)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_btgen"));
    cmd.args(args);
    for (flag, path) in paths {
        cmd.arg(flag).arg(path);
    }
    cmd.output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn synth_writes_tree_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("patrol.xml");
    let o = btgen(
        &["synth"],
        &[("--scenario", &fx("uav_patrol.scenario.json")), ("--library", &fx("uav_patrol.library.json")), ("--out", &out)],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let tree = parse_bt_xml(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(tree, btgen::bt::uav_patrol_tree());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("patrol.report.json")).unwrap()).unwrap();
    assert_eq!(report["solved"], true);
    assert_eq!(report["best_reward"], 1.0);
}

#[test]
fn simulate_writes_a_trace_that_reaches_the_goal() {
    let dir = tempfile::tempdir().unwrap();
    let result = dir.path().join("episode.json");
    let trace = dir.path().join("trace.jsonl");
    let o = btgen(
        &["simulate", "--seed", "3", "--dump-states"],
        &[
            ("--tree", &fx("patrol_table.xml")),
            ("--scenario", &fx("uav_patrol.scenario.json")),
            ("--library", &fx("uav_patrol.library.json")),
            ("--out", &result),
            ("--trace", &trace),
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let episode: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&result).unwrap()).unwrap();
    assert_eq!(episode["success"], true);
    assert_eq!(episode["ticks_used"], 5);
    let lines: Vec<serde_json::Value> = std::fs::read_to_string(&trace)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 10);
    assert!(lines.iter().all(|l| l["state"].is_object()));
    assert_eq!(lines[5]["leaf"], "warn-target");
}

#[test]
fn validate_accepts_the_patrol_tree_and_rejects_an_empty_sequence() {
    let lib = fx("uav_patrol.library.json");
    let ok = btgen(&["validate"], &[("--tree", &fx("patrol_table.xml")), ("--library", &lib)]);
    assert!(ok.status.success(), "{}", stderr(&ok));

    let bad = btgen(&["validate"], &[("--tree", &fx("broken.xml")), ("--library", &lib)]);
    assert_eq!(bad.status.code(), Some(1));
    let all = format!("{}{}", String::from_utf8_lossy(&bad.stdout), stderr(&bad));
    assert!(all.contains("empty_sequence"), "{all}");
}

#[test]
fn validate_with_a_scenario_runs_the_simulation_levels() {
    let dir = tempfile::tempdir().unwrap();
    let move_only = dir.path().join("move.xml");
    std::fs::write(&move_only, "<Action instance_name=\"move-to_next-pos\"/>").unwrap();
    let o = btgen(
        &["validate"],
        &[
            ("--tree", &move_only),
            ("--library", &fx("uav_patrol.library.json")),
            ("--scenario", &fx("uav_patrol.scenario.json")),
        ],
    );
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

#[test]
fn malformed_inputs_exit_with_code_two_and_a_position() {
    let dir = tempfile::tempdir().unwrap();
    let junk = dir.path().join("junk.xml");
    std::fs::write(&junk, "<Fallback>\n  <Sequence>\n</Fallback>").unwrap();
    let o = btgen(&["validate"], &[("--tree", &junk), ("--library", &fx("uav_patrol.library.json"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("junk.xml:"), "{}", stderr(&o));

    let missing = btgen(&["validate"], &[("--tree", &dir.path().join("nope.xml")), ("--library", &junk)]);
    assert_eq!(missing.status.code(), Some(2));

    let unknown = btgen(&["frobnicate"], &[]);
    assert_eq!(unknown.status.code(), Some(2));

    let bad_flag = btgen(&["synth", "--policy", "psychic"], &[]);
    assert_eq!(bad_flag.status.code(), Some(2));
}

#[test]
fn dataset_builds_one_valid_record_per_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("data.jsonl");
    let o = btgen(&["dataset"], &[("--scenarios", &fixtures()), ("--out", &out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let records = read_records(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let names: Vec<&str> = records.iter().map(|r| r.name.as_str()).collect();
    assert_eq!(names, btgen::fixtures::BUNDLED);
    for r in &records {
        let tree = parse_bt_xml(&r.xml).unwrap();
        assert!(!tree.has_open_nodes());
        assert_eq!(r.nodes.len(), r.implementations.len());
    }
}

#[test]
fn eval_reports_pass_at_k_for_each_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("metrics.json");
    let o = btgen(
        &["eval", "--n", "3", "--k-values", "1,3", "--policy", "mcts-oracle"],
        &[("--scenarios", &fixtures()), ("--out", &out)],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let problems = report["problems"].as_array().unwrap();
    assert_eq!(problems.len(), 5);
    for p in problems {
        assert_eq!(p["c"], 3, "{p}");
        assert_eq!(p["pass_at_k"][1]["k"], 3);
        assert_eq!(p["pass_at_k"][1]["value"], 1.0);
    }
    assert_eq!(report["sensitivity"], 0.0);
}

#[test]
fn eval_rejects_k_above_n() {
    let o = btgen(&["eval", "--n", "2", "--k-values", "5"], &[("--scenarios", &fixtures())]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn config_file_values_yield_to_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("search.json");
    std::fs::write(&cfg, r#"{"budget": 1, "policy": "mcts-oracle"}"#).unwrap();
    let scenario = fx("door_open.scenario.json");
    let library = fx("door_open.library.json");
    let out = dir.path().join("t.xml");

    let starved = btgen(
        &["synth"],
        &[("--scenario", &scenario), ("--library", &library), ("--config", &cfg), ("--out", &out)],
    );
    assert_eq!(starved.status.code(), Some(1), "{}", stderr(&starved));

    let o = btgen(
        &["synth", "--budget", "10000"],
        &[("--scenario", &scenario), ("--library", &library), ("--config", &cfg), ("--out", &out)],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("t.report.json")).unwrap()).unwrap();
    assert_eq!(report["config"]["policy"], "mcts-oracle");
    assert_eq!(report["config"]["budget"], 10000);
}
