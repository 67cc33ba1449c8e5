use btgen::bt::validate_structure;
use btgen::expr::{Literal, Value};
use btgen::fixtures::{fixture, BUNDLED};
use btgen::format::serialize_bt_xml;
use btgen::library::NodeLibrary;
use btgen::metrics::sample_correct;
use btgen::synth::{
    synthesize, synthesize_with, ExpansionPolicy, Levels, MockTransport, OraclePolicy, PolicyKind, RemotePolicy, SearchConfig,
    SynthError, Task, TransportError,
};

fn mcts() -> SearchConfig {
    SearchConfig { policy: PolicyKind::MctsOracle, ..SearchConfig::default() }
}

#[test]
fn remote_mock_of_the_oracle_matches_the_builtin_policy() {
    for name in BUNDLED {
        let (scenario, library) = fixture(name);
        let task = Task::from_scenario(&scenario);
        for config in [SearchConfig::default(), mcts()] {
            let local = synthesize_with(&task, &scenario, &library, &config, &OraclePolicy, &mut ()).unwrap();
            let remote_policy = RemotePolicy::new(MockTransport::oracle(scenario.clone(), library.clone(), config.k));
            let remote = synthesize_with(&task, &scenario, &library, &config, &remote_policy, &mut ()).unwrap();
            assert_eq!(serialize_bt_xml(&remote.tree), serialize_bt_xml(&local.tree), "{name} / {}", config.policy);
            assert_eq!(remote.report.expansions, local.report.expansions, "{name} / {}", config.policy);
            assert!(remote_policy.drops().is_empty());
        }
    }
}

#[test]
fn seeds_change_nothing_for_the_greedy_search() {
    let (scenario, library) = fixture("pick_place");
    let task = Task::from_scenario(&scenario);
    let trees: Vec<String> = (0..4)
        .map(|seed| {
            let config = SearchConfig { seed, ..SearchConfig::default() };
            serialize_bt_xml(&synthesize(&task, &scenario, &library, &config).unwrap().0)
        })
        .collect();
    assert!(trees.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn structural_only_search_still_returns_a_sound_terminal_tree() {
    for name in BUNDLED {
        let (scenario, library) = fixture(name);
        let config = SearchConfig {
            levels: Levels { stub_simulation: false, full_simulation: false },
            ..SearchConfig::default()
        };
        let (tree, report) = synthesize(&Task::from_scenario(&scenario), &scenario, &library, &config).unwrap();
        assert!(!tree.has_open_nodes(), "{name}");
        assert!(validate_structure(&tree, &library).ok, "{name}");
        assert_eq!(report.rejections.full_simulation, 0);
        assert_eq!(report.rejections.stub_simulation, 0);
    }
}

#[test]
fn stub_only_search_is_checked_afterwards_by_full_simulation() {
    let (scenario, library) = fixture("uav_patrol");
    let config = SearchConfig {
        levels: Levels { stub_simulation: true, full_simulation: false },
        ..SearchConfig::default()
    };
    let (tree, _) = synthesize(&Task::from_scenario(&scenario), &scenario, &library, &config).unwrap();
    // whatever comes out is judged with every level enabled
    let verdict = sample_correct(&tree, &scenario, &library, &SearchConfig::default());
    assert_eq!(verdict, btgen::sim::run_episode(&tree, &scenario, &library, 0).unwrap().success);
}

#[test]
fn results_are_independent_of_library_order() {
    let (scenario, library) = fixture("recharge_dock");
    let reversed = NodeLibrary::new(library.iter().cloned().collect::<Vec<_>>().into_iter().rev()).unwrap();
    let task = Task::from_scenario(&scenario);
    let a = synthesize(&task, &scenario, &library, &SearchConfig::default()).unwrap();
    let b = synthesize(&task, &scenario, &reversed, &SearchConfig::default()).unwrap();
    assert!(sample_correct(&a.0, &scenario, &library, &SearchConfig::default()));
    assert!(sample_correct(&b.0, &scenario, &reversed, &SearchConfig::default()));
}

#[test]
fn bad_config_is_rejected_before_searching() {
    let (scenario, library) = fixture("uav_patrol");
    let task = Task::from_scenario(&scenario);
    for config in [
        SearchConfig { budget: 0, ..SearchConfig::default() },
        SearchConfig { c_uct: -1.0, ..SearchConfig::default() },
        SearchConfig { levels: Levels { stub_simulation: false, full_simulation: true }, ..SearchConfig::default() },
    ] {
        assert!(matches!(synthesize(&task, &scenario, &library, &config), Err(SynthError::Config(_))));
    }
}

#[test]
fn empty_library_is_an_error() {
    let (scenario, _) = fixture("uav_patrol");
    let empty = NodeLibrary::new(Vec::new()).unwrap();
    let r = synthesize(&Task::from_scenario(&scenario), &scenario, &empty, &SearchConfig::default());
    assert!(matches!(r, Err(SynthError::EmptyLibrary)));
}

#[test]
fn unreachable_goal_is_unsolvable_under_both_searches() {
    let (scenario, library) = fixture("uav_patrol");
    let task = Task {
        goal: vec![Literal::eq("target_warned", Value::Bool(false)), Literal::eq("position", Value::Int(4))],
        ..Task::from_scenario(&scenario)
    };
    for config in [SearchConfig::default(), mcts()] {
        match synthesize(&task, &scenario, &library, &config) {
            Err(SynthError::Unsolvable(_)) | Err(SynthError::BudgetExhausted { .. }) => {}
            other => panic!("expected failure, got {:?}", other.map(|o| serialize_bt_xml(&o.0))),
        }
    }
}

#[test]
fn dead_remote_fails_the_run_with_a_remote_error() {
    let (scenario, library) = fixture("door_open");
    let policy = RemotePolicy::new(MockTransport::from_fn(|_| Err(TransportError::Unavailable("down".into()))));
    let r = synthesize_with(&Task::from_scenario(&scenario), &scenario, &library, &mcts(), &policy, &mut ());
    assert!(matches!(r, Err(SynthError::Remote(_))), "{r:?}");
}

#[test]
fn small_budget_reports_the_best_partial_tree() {
    let (scenario, library) = fixture("door_open");
    let config = SearchConfig { budget: 1, ..mcts() };
    match synthesize(&Task::from_scenario(&scenario), &scenario, &library, &config) {
        Err(SynthError::BudgetExhausted { best, report }) => {
            assert_eq!(report.expansions, 1);
            assert!(!report.solved);
            assert!(best.node_count() >= 1);
        }
        other => panic!("expected budget exhaustion, got {other:?}"),
    }
}
