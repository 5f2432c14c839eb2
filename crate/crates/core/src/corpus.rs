//! Built-in fixtures: a single-lane reference scene and a 50-scene
//! synthetic corpus with scripted modifier responses, usable offline.

use crate::geometry::{ControlQuad, Point};
use crate::scenario::{
    agent_vector_json, apply_modification, save_scenario, AgentState, AgentType, Area, AreaKind, Lane,
    LaneConnector, LaneGeometry, RelativeDirection, Scenario, ScenarioType, TrafficLightState, TurnType,
};
use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::Write;
use std::path::Path;

pub const REFERENCE_SCENARIO_ID: &str = "single-lane-east";

pub const REFERENCE_INSTRUCTION: &str =
    "Add a parked car on the ego lane roughly 21.4 m ahead, shifted towards the left lane edge.";

/// Modifier reply for the reference scene: one ADD of `Agent2` at
/// (21.4, 2.6).
pub const REFERENCE_RESPONSE: &str = "Insights:\nOne eastbound lane; the ego sits at the origin.\n\
Summary:\nPlace a stationary car ahead of the ego, left of the centre line.\n\
Modification Dict:\n{\"Action\": \"add\", \"Modified_Agent\": \"Agent2\", \"Rationale\": \"parked car ahead\"}\n\
Modification Calculations:\nStep 1: lane anchor at 21.4 m is (21.4, 0.0).\nStep 2: shift 2.6 m to the left.\n\
Modified Vectors:\n{\"Agent2\": [\"VEHICLE\", 21.4, 2.6, 0.0, 2.0, 4.8, 0.0, \"Lane1\"]}\n";

fn ego(velocity: f64) -> AgentState {
    AgentState {
        id: "Agent1".into(),
        agent_type: AgentType::EgoVehicle,
        center: Point::new(0.0, 0.0),
        heading: 0.0,
        width: 2.297,
        length: 5.176,
        velocity,
        lane_id: Some("Lane1".into()),
    }
}

/// One eastbound 100 m lane sampled every 5 m, ego at the origin.
pub fn reference_scenario() -> Scenario {
    Scenario {
        scenario_id: REFERENCE_SCENARIO_ID.into(),
        scenario_type: ScenarioType::ParkedVehicleNudge,
        agents: vec![ego(0.0)],
        lanes: vec![Lane {
            id: "Lane1".into(),
            travel_direction: "Eastwards".into(),
            relative_direction_to_ego: RelativeDirection::Same,
            width: 3.5,
            speed_limit: 13.889,
            geometry: LaneGeometry::Polyline((0..=20).map(|i| Point::new(5.0 * f64::from(i), 0.0)).collect()),
        }],
        connectors: vec![],
        areas: vec![],
    }
}

/// A fixture with its instruction, scripted modifier reply and the
/// expected result of applying that reply.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusItem {
    pub scenario: Scenario,
    pub instruction: String,
    pub response: String,
    pub expected: Scenario,
}

pub const CORPUS_CATEGORIES: [ScenarioType; 5] = [
    ScenarioType::ConstructionZone,
    ScenarioType::AccidentSite,
    ScenarioType::Jaywalker,
    ScenarioType::ParkedVehicleNudge,
    ScenarioType::OvertakeOncoming,
];

pub const CORPUS_SIZE: usize = 50;

fn rect(id: &str, kind: AreaKind, x0: f64, y0: f64, x1: f64, y1: f64) -> Area {
    Area {
        id: id.into(),
        kind,
        boundary: vec![Point::new(x0, y0), Point::new(x1, y0), Point::new(x1, y1), Point::new(x0, y1)],
    }
}

fn lane(id: &str, dir: &str, rel: RelativeDirection, geometry: LaneGeometry) -> Lane {
    Lane {
        id: id.into(),
        travel_direction: dir.into(),
        relative_direction_to_ego: rel,
        width: 3.5,
        speed_limit: 13.889,
        geometry,
    }
}

fn straight(from: Point, to: Point) -> LaneGeometry {
    LaneGeometry::Polyline(vec![from, to])
}

/// Two-lane road (eastbound ego lane at y = 0, westbound at y = 3.5) in one
/// of three layouts, with a walkway south of the road.
fn base(category: ScenarioType, index: usize) -> Scenario {
    let slug = category.as_str().to_ascii_lowercase();
    let mut lanes = Vec::new();
    let mut connectors = Vec::new();
    match index % 3 {
        0 => lanes.push(lane(
            "Lane1",
            "Eastwards",
            RelativeDirection::Same,
            straight(Point::new(-10.0, 0.0), Point::new(150.0, 0.0)),
        )),
        1 => lanes.push(lane(
            "Lane1",
            "Eastwards",
            RelativeDirection::Same,
            LaneGeometry::Bezier(
                ControlQuad::new(
                    Point::new(-10.0, 0.0),
                    Point::new(40.0, 0.0),
                    Point::new(100.0, 0.0),
                    Point::new(150.0, 0.0),
                )
                .expect("non-degenerate quad"),
            ),
        )),
        _ => {
            lanes.push(lane(
                "Lane1",
                "Eastwards",
                RelativeDirection::Same,
                straight(Point::new(-10.0, 0.0), Point::new(80.0, 0.0)),
            ));
            lanes.push(lane(
                "Lane3",
                "Eastwards",
                RelativeDirection::Same,
                straight(Point::new(95.0, 0.0), Point::new(150.0, 0.0)),
            ));
            connectors.push(LaneConnector {
                id: "Connector1".into(),
                from_lane: "Lane1".into(),
                to_lane: "Lane3".into(),
                traffic_light_state: if index % 2 == 0 { TrafficLightState::Green } else { TrafficLightState::Unknown },
                turn_type: TurnType::Straight,
                speed_limit: 11.111,
                geometry: straight(Point::new(80.0, 0.0), Point::new(95.0, 0.0)),
            });
        }
    }
    lanes.push(lane(
        "Lane2",
        "Westwards",
        RelativeDirection::Opposite,
        straight(Point::new(150.0, 3.5), Point::new(-10.0, 3.5)),
    ));
    let mut areas = vec![
        rect("Area1", AreaKind::Drivable, -15.0, -1.75, 160.0, 5.25),
        rect("Area2", AreaKind::Walkway, -15.0, -4.75, 160.0, -1.75),
    ];
    if index % 4 == 3 {
        areas.push(rect("Area3", AreaKind::Carpark, 20.0, -14.75, 60.0, -4.75));
    }
    let oncoming = AgentState {
        id: "Agent2".into(),
        agent_type: AgentType::Vehicle,
        center: Point::new(90.0 + index as f64, 3.5),
        heading: PI,
        width: 1.9,
        length: 4.6,
        velocity: 8.0,
        lane_id: Some("Lane2".into()),
    };
    Scenario {
        scenario_id: format!("{slug}_{index:02}"),
        scenario_type: category,
        agents: vec![ego(5.0 + 2.5 * (index % 3) as f64), oncoming],
        lanes,
        connectors,
        areas,
    }
}

fn placed(id: &str, t: AgentType, x: f64, y: f64, heading: f64, v: f64, lane: Option<&str>) -> AgentState {
    let (width, length) = match t {
        AgentType::TrafficCone => (0.4, 0.4),
        AgentType::Pedestrian => (0.6, 0.6),
        AgentType::Barrier => (0.6, 2.0),
        _ => (1.9, 4.7),
    };
    AgentState {
        id: id.into(),
        agent_type: t,
        center: Point::new(x, y),
        heading,
        width,
        length,
        velocity: v,
        lane_id: lane.map(String::from),
    }
}

struct Edit {
    action: &'static str,
    agent: AgentState,
    why: &'static str,
}

fn render_response(insight: &str, summary: &str, edits: &[Edit]) -> String {
    let mut out = format!("Insights:\n{insight}\nSummary:\n{summary}\nModification Dict:\n");
    for e in edits {
        let _ = writeln!(
            out,
            "{{\"Action\": \"{}\", \"Modified_Agent\": \"{}\", \"Rationale\": \"{}\"}}",
            e.action, e.agent.id, e.why
        );
    }
    out.push_str("Modification Calculations:\n");
    for (i, e) in edits.iter().enumerate() {
        let _ = writeln!(out, "Step {}: {} at x={:.1}, y={:.1}.", i + 1, e.agent.id, e.agent.center.x, e.agent.center.y);
    }
    out.push_str("Modified Vectors:\n");
    for e in edits {
        let _ = writeln!(out, "{{\"{}\": {}}}", e.agent.id, agent_vector_json(&e.agent));
    }
    out
}

/// Category-specific edit for fixture `index`; `d` is the distance ahead.
fn edits_for(category: ScenarioType, index: usize, s: &Scenario) -> (String, String, String, Vec<Edit>) {
    let d = 24.0 + 1.5 * index as f64;
    match category {
        ScenarioType::ConstructionZone => (
            format!("Close the right part of the ego lane with three traffic cones starting about {d:.1} m ahead."),
            "Construction taper on the ego lane.".into(),
            "Cones form a diagonal line into the lane.".into(),
            (0..3)
                .map(|k| Edit {
                    action: "add",
                    agent: placed(
                        &format!("Agent{}", 3 + k),
                        AgentType::TrafficCone,
                        d + 4.0 * k as f64,
                        -1.2 + 0.6 * k as f64,
                        0.0,
                        0.0,
                        Some("Lane1"),
                    ),
                    why: "taper cone",
                })
                .collect(),
        ),
        ScenarioType::AccidentSite => (
            format!("Two cars collided and stopped on the ego lane about {d:.1} m ahead."),
            "Accident blocking the ego lane.".into(),
            "Two stationary vehicles at odd angles.".into(),
            vec![
                Edit {
                    action: "add",
                    agent: placed("Agent3", AgentType::Vehicle, d, -0.6, 0.35, 0.0, Some("Lane1")),
                    why: "first crashed car",
                },
                Edit {
                    action: "add",
                    agent: placed("Agent4", AgentType::Vehicle, d + 6.5, 0.2, -0.5, 0.0, Some("Lane1")),
                    why: "second crashed car",
                },
            ],
        ),
        ScenarioType::Jaywalker => (
            format!("A pedestrian starts crossing the road from the right sidewalk about {d:.1} m ahead."),
            "Jaywalking pedestrian.".into(),
            "Pedestrian heading north across the lanes.".into(),
            vec![Edit {
                action: "add",
                agent: placed("Agent3", AgentType::Pedestrian, d, -3.0, FRAC_PI_2, 1.4, None),
                why: "crossing pedestrian",
            }],
        ),
        ScenarioType::ParkedVehicleNudge => {
            let mut edits = vec![Edit {
                action: "add",
                agent: placed("Agent3", AgentType::Vehicle, d, -0.9, 0.0, 0.0, Some("Lane1")),
                why: "parked car at the kerb",
            }];
            if index % 2 == 1 {
                edits.push(Edit {
                    action: "add",
                    agent: placed("Agent4", AgentType::Barrier, d - 4.0, -1.2, 0.0, 0.0, Some("Lane1")),
                    why: "warning barrier",
                });
            }
            (
                format!("A car is parked on the right side of the ego lane about {d:.1} m ahead."),
                "Parked vehicle narrows the lane.".into(),
                "Vehicle hugs the right lane edge.".into(),
                edits,
            )
        }
        _ => {
            let mut oncoming = s.agent("Agent2").expect("base has Agent2").clone();
            oncoming.center = Point::new(d + 60.0, 3.5);
            oncoming.velocity = 10.0;
            (
                format!("A slow car drives ahead of the ego about {d:.1} m away while oncoming traffic approaches."),
                "Slow leader plus oncoming car.".into(),
                "Overtaking needs the oncoming lane.".into(),
                vec![
                    Edit {
                        action: "add",
                        agent: placed("Agent3", AgentType::Vehicle, d, 0.0, 0.0, 3.0, Some("Lane1")),
                        why: "slow leader",
                    },
                    Edit {
                        action: "modify",
                        agent: oncoming,
                        why: "bring oncoming car closer",
                    },
                ],
            )
        }
    }
}

/// Fifty fixtures, ten per category, in a fixed order.
pub fn synthetic_corpus() -> Vec<CorpusItem> {
    let mut out = Vec::with_capacity(CORPUS_SIZE);
    for category in CORPUS_CATEGORIES {
        for index in 0..CORPUS_SIZE / CORPUS_CATEGORIES.len() {
            let scenario = base(category, index);
            let (instruction, summary, insight, edits) = edits_for(category, index, &scenario);
            let response = render_response(&insight, &summary, &edits);
            let parsed = crate::prompt::parse_sma_response(&response).expect("corpus replies parse");
            let expected = apply_modification(&scenario, &parsed).expect("corpus replies apply");
            out.push(CorpusItem {
                scenario,
                instruction,
                response,
                expected,
            });
        }
    }
    out
}

/// Batch manifest for a corpus written by [`write_corpus`].
pub const BATCH_MANIFEST: &str = "batch.toml";

/// Writes `scenarios/<id>.json`, `expected/<id>.json`, keyed scripts under
/// `scripts/<id>/001.txt` and a batch manifest.
pub fn write_corpus(dir: &Path, items: &[CorpusItem]) -> std::io::Result<()> {
    for sub in ["scenarios", "expected", "scripts"] {
        std::fs::create_dir_all(dir.join(sub))?;
    }
    let mut manifest = String::from("strategy = \"OTM\"\nbackend = \"scripted:scripts\"\noutput_dir = \"out\"\n");
    for item in items {
        let id = &item.scenario.scenario_id;
        std::fs::write(dir.join("scenarios").join(format!("{id}.json")), save_scenario(&item.scenario))?;
        std::fs::write(dir.join("expected").join(format!("{id}.json")), save_scenario(&item.expected))?;
        let script_dir = dir.join("scripts").join(id);
        std::fs::create_dir_all(&script_dir)?;
        std::fs::write(script_dir.join("001.txt"), &item.response)?;
        let _ = write!(
            manifest,
            "\n[[items]]\nscenario = \"scenarios/{id}.json\"\ninstruction = {}\n",
            toml_string(&item.instruction)
        );
    }
    std::fs::write(dir.join(BATCH_MANIFEST), manifest)
}

fn toml_string(s: &str) -> String {
    toml::Value::String(s.to_string()).to_string()
}
