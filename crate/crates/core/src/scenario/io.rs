//! On-disk scenario document (UTF-8 JSON, fixed key order, three-decimal
//! floats).

use super::vector::{agent_from_vector, agent_vector_json, fmt3};
use super::{
    Area, AreaKind, Lane, LaneConnector, LaneGeometry, RelativeDirection, Scenario, ScenarioError,
    ScenarioType, TrafficLightState, TurnType,
};
use crate::geometry::{ControlQuad, Point};
use serde::Deserialize;
use serde_json::Value;
use std::fmt::Write;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    scenario_id: String,
    scenario_type: ScenarioType,
    agents: Vec<RawAgent>,
    lanes: Vec<RawLane>,
    lane_connectors: Vec<RawConnector>,
    areas: Vec<RawArea>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAgent {
    id: String,
    vector: Vec<Value>,
}

#[derive(Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
enum RawGeometry {
    Polyline(Vec<[f64; 2]>),
    Bezier([[f64; 2]; 4]),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLane {
    id: String,
    travel_direction: String,
    relative_direction_to_ego: RelativeDirection,
    width: f64,
    speed_limit: f64,
    geometry: RawGeometry,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConnector {
    id: String,
    from_lane: String,
    to_lane: String,
    traffic_light_state: TrafficLightState,
    turn_type: TurnType,
    speed_limit: f64,
    geometry: RawGeometry,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawArea {
    id: String,
    kind: AreaKind,
    boundary: Vec<[f64; 2]>,
}

fn point(p: [f64; 2]) -> Point {
    Point::new(p[0], p[1])
}

impl RawGeometry {
    fn into_geometry(self) -> LaneGeometry {
        match self {
            RawGeometry::Polyline(pts) => LaneGeometry::Polyline(pts.into_iter().map(point).collect()),
            RawGeometry::Bezier(c) => LaneGeometry::Bezier(ControlQuad {
                p0: point(c[0]),
                p1: point(c[1]),
                p2: point(c[2]),
                p3: point(c[3]),
            }),
        }
    }
}

/// Parses and validates a scenario document.
pub fn load_scenario(bytes: &[u8]) -> Result<Scenario, ScenarioError> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| ScenarioError::Schema(format!("document is not UTF-8: {e}")))?;
    let raw: RawScenario =
        serde_json::from_str(text).map_err(|e| ScenarioError::Schema(e.to_string()))?;
    let agents = raw
        .agents
        .into_iter()
        .map(|a| agent_from_vector(&a.id, &a.vector).map_err(|e| ScenarioError::Schema(e.to_string())))
        .collect::<Result<Vec<_>, _>>()?;
    let scenario = Scenario {
        scenario_id: raw.scenario_id,
        scenario_type: raw.scenario_type,
        agents,
        lanes: raw
            .lanes
            .into_iter()
            .map(|l| Lane {
                id: l.id,
                travel_direction: l.travel_direction,
                relative_direction_to_ego: l.relative_direction_to_ego,
                width: l.width,
                speed_limit: l.speed_limit,
                geometry: l.geometry.into_geometry(),
            })
            .collect(),
        connectors: raw
            .lane_connectors
            .into_iter()
            .map(|c| LaneConnector {
                id: c.id,
                from_lane: c.from_lane,
                to_lane: c.to_lane,
                traffic_light_state: c.traffic_light_state,
                turn_type: c.turn_type,
                speed_limit: c.speed_limit,
                geometry: c.geometry.into_geometry(),
            })
            .collect(),
        areas: raw
            .areas
            .into_iter()
            .map(|a| Area {
                id: a.id,
                kind: a.kind,
                boundary: a.boundary.into_iter().map(point).collect(),
            })
            .collect(),
    };
    scenario.validate()?;
    Ok(scenario)
}

fn json_str(s: &str) -> String {
    serde_json::to_string(s).expect("string serializes")
}

fn points_json(points: &[Point]) -> String {
    let inner: Vec<String> = points
        .iter()
        .map(|p| format!("[{}, {}]", fmt3(p.x), fmt3(p.y)))
        .collect();
    format!("[{}]", inner.join(", "))
}

fn geometry_json(g: &LaneGeometry) -> String {
    match g {
        LaneGeometry::Polyline(p) => format!("{{\"polyline\": {}}}", points_json(p)),
        LaneGeometry::Bezier(q) => format!("{{\"bezier\": {}}}", points_json(&q.points())),
    }
}

fn write_list(out: &mut String, key: &str, items: &[String], last: bool) {
    if items.is_empty() {
        let _ = writeln!(out, "  \"{key}\": []{}", if last { "" } else { "," });
        return;
    }
    let _ = writeln!(out, "  \"{key}\": [");
    for (i, item) in items.iter().enumerate() {
        let sep = if i + 1 == items.len() { "" } else { "," };
        let _ = writeln!(out, "    {item}{sep}");
    }
    let _ = writeln!(out, "  ]{}", if last { "" } else { "," });
}

/// Deterministic serialization; `load_scenario(&save_scenario(s))`
/// reproduces any scenario whose values sit on the millimetre grid.
pub fn save_scenario(s: &Scenario) -> Vec<u8> {
    let mut out = String::new();
    out.push_str("{\n");
    let _ = writeln!(out, "  \"scenario_id\": {},", json_str(&s.scenario_id));
    let _ = writeln!(out, "  \"scenario_type\": \"{}\",", s.scenario_type);
    let agents: Vec<String> = s
        .agents
        .iter()
        .map(|a| format!("{{\"id\": {}, \"vector\": {}}}", json_str(&a.id), agent_vector_json(a)))
        .collect();
    write_list(&mut out, "agents", &agents, false);
    let lanes: Vec<String> = s
        .lanes
        .iter()
        .map(|l| {
            format!(
                "{{\"id\": {}, \"travel_direction\": {}, \"relative_direction_to_ego\": \"{}\", \"width\": {}, \"speed_limit\": {}, \"geometry\": {}}}",
                json_str(&l.id),
                json_str(&l.travel_direction),
                l.relative_direction_to_ego,
                fmt3(l.width),
                fmt3(l.speed_limit),
                geometry_json(&l.geometry)
            )
        })
        .collect();
    write_list(&mut out, "lanes", &lanes, false);
    let connectors: Vec<String> = s
        .connectors
        .iter()
        .map(|c| {
            format!(
                "{{\"id\": {}, \"from_lane\": {}, \"to_lane\": {}, \"traffic_light_state\": \"{}\", \"turn_type\": \"{}\", \"speed_limit\": {}, \"geometry\": {}}}",
                json_str(&c.id),
                json_str(&c.from_lane),
                json_str(&c.to_lane),
                c.traffic_light_state,
                c.turn_type,
                fmt3(c.speed_limit),
                geometry_json(&c.geometry)
            )
        })
        .collect();
    write_list(&mut out, "lane_connectors", &connectors, false);
    let areas: Vec<String> = s
        .areas
        .iter()
        .map(|a| {
            format!(
                "{{\"id\": {}, \"kind\": \"{}\", \"boundary\": {}}}",
                json_str(&a.id),
                a.kind,
                points_json(&a.boundary)
            )
        })
        .collect();
    write_list(&mut out, "areas", &areas, true);
    out.push_str("}\n");
    out.into_bytes()
}
