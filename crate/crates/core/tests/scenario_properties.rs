//! Document round-trip, edit algebra and the invalid-document corpus.

use proptest::prelude::*;
use scenaug::corpus::{reference_scenario, synthetic_corpus};
use scenaug::geometry::Point;
use scenaug::scenario::{
    apply_modification, load_scenario, save_scenario, Action, AgentState, AgentType, ModificationDict,
    ModificationResult, Scenario, ScenarioError,
};
use std::collections::BTreeMap;

fn mm(v: i64) -> f64 {
    v as f64 / 1000.0
}

fn agent_strategy(id: String) -> impl Strategy<Value = AgentState> {
    (
        prop::sample::select(vec![AgentType::Vehicle, AgentType::Pedestrian, AgentType::TrafficCone, AgentType::Barrier]),
        -100_000i64..100_000,
        -100_000i64..100_000,
        -3141i64..=3141,
        (100i64..5_000, 100i64..12_000, 0i64..20_000),
        any::<bool>(),
    )
        .prop_map(move |(t, x, y, h, (w, l, v), on_lane)| AgentState {
            id: id.clone(),
            agent_type: t,
            center: Point::new(mm(x), mm(y)),
            heading: mm(h),
            width: mm(w),
            length: mm(l),
            velocity: mm(v),
            lane_id: on_lane.then(|| "Lane1".to_string()),
        })
}

fn scenario_strategy() -> impl Strategy<Value = Scenario> {
    (0usize..6).prop_flat_map(|n| {
        (0..n)
            .map(|i| agent_strategy(format!("Agent{}", i + 2)))
            .collect::<Vec<_>>()
            .prop_map(|agents| {
                let mut s = reference_scenario();
                s.agents.extend(agents);
                s
            })
    })
}

fn edit(action: Action, agent: &AgentState) -> ModificationResult {
    ModificationResult {
        modification_dicts: vec![ModificationDict {
            action,
            modified_agent: agent.id.clone(),
            rationale: String::new(),
            extra: BTreeMap::new(),
        }],
        modified_vectors: if action == Action::Remove { vec![] } else { vec![agent.clone()] },
        ..Default::default()
    }
}

proptest! {
    #[test]
    fn documents_round_trip(s in scenario_strategy()) {
        let bytes = save_scenario(&s);
        prop_assert_eq!(load_scenario(&bytes).unwrap(), s);
    }

    #[test]
    fn add_then_remove_restores(s in scenario_strategy(), extra in agent_strategy("Agent99".into())) {
        let added = apply_modification(&s, &edit(Action::Add, &extra)).unwrap();
        prop_assert_eq!(added.agents.len(), s.agents.len() + 1);
        let removed = apply_modification(&added, &edit(Action::Remove, &extra)).unwrap();
        prop_assert_eq!(&removed, &s);
        prop_assert!(apply_modification(&removed, &edit(Action::Remove, &extra)).is_err());
    }
}

#[test]
fn corpus_round_trips() {
    for item in synthetic_corpus() {
        for s in [&item.scenario, &item.expected] {
            assert_eq!(&load_scenario(&save_scenario(s)).unwrap(), s, "{}", s.scenario_id);
        }
    }
}

/// Each case mutates the reference document's text so it violates exactly
/// one rule.
fn invalid_documents() -> Vec<(&'static str, String)> {
    let base = String::from_utf8(save_scenario(&synthetic_corpus().remove(2).scenario)).unwrap();
    let swap = |from: &str, to: &str| {
        assert!(base.contains(from), "fixture lacks {from:?}");
        base.replacen(from, to, 1)
    };
    vec![
        ("not json", "scenario".to_string()),
        ("truncated", base[..base.len() / 2].to_string()),
        ("unknown top-level key", swap("\"scenario_type\"", "\"extra\": 1, \"scenario_type\"")),
        ("unknown scenario type", swap("\"CONSTRUCTION_ZONE\"", "\"MOON_LANDING\"")),
        ("no ego", swap("\"EGO_VEHICLE\"", "\"VEHICLE\"")),
        ("two egos", swap("[\"VEHICLE\"", "[\"EGO_VEHICLE\"")),
        ("duplicate agent id", swap("\"id\": \"Agent2\"", "\"id\": \"Agent1\"")),
        ("unknown agent lane", swap("\"Lane2\"]}", "\"Lane9\"]}")),
        ("negative width", swap(", 1.900, 4.600,", ", -1.900, 4.600,")),
        ("negative velocity", swap(", 8.000, \"Lane2\"", ", -8.000, \"Lane2\"")),
        ("non-numeric heading", swap(", 3.142, 1.900", ", \"west\", 1.900")),
        ("short agent vector", swap(", 1.900, 4.600, 8.000,", ", 1.900,")),
        ("zero lane width", swap("\"width\": 3.500", "\"width\": 0.000")),
        ("single-point polyline", swap("[[-10.000, 0.000], [80.000, 0.000]]", "[[-10.000, 0.000]]")),
        ("connector to unknown lane", swap("\"to_lane\": \"Lane3\"", "\"to_lane\": \"Lane7\"")),
        ("self-loop connector", swap("\"to_lane\": \"Lane3\"", "\"to_lane\": \"Lane1\"")),
        ("unknown area kind", swap("\"DRIVABLE\"", "\"LAVA\"")),
        (
            "self-intersecting area",
            swap("[[-15.000, -1.750], [160.000, -1.750], [160.000, 5.250], [-15.000, 5.250]]", "[[-15.000, -1.750], [160.000, 5.250], [160.000, -1.750], [-15.000, 5.250]]"),
        ),
        ("empty scenario id", swap("\"construction_zone_02\"", "\"\"")),
    ]
}

#[test]
fn invalid_documents_are_rejected() {
    let cases = invalid_documents();
    assert!(cases.len() >= 10);
    for (name, doc) in cases {
        let err = load_scenario(doc.as_bytes()).expect_err(name);
        assert!(
            matches!(err, ScenarioError::Schema(_) | ScenarioError::Integrity(_) | ScenarioError::Validation(_)),
            "{name}: {err:?}"
        );
    }
}
