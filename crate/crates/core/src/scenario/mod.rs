//! Scenario representation: agents, lanes, lane connectors and areas in an
//! ego-centric metric frame (x east, y north, metres, headings in radians
//! counter-clockwise from east).

mod io;
mod modify;
mod vector;

pub use io::{load_scenario, save_scenario};
pub use modify::{apply_modification, Action, ModificationDict, ModificationResult};
pub use vector::{agent_from_vector, agent_vector_json, fmt3, VectorError, AGENT_VECTOR_FIELDS};

use crate::geometry::{
    fit_bezier, polygon_is_simple, resample_polyline, ArcLengthTable, BezierFit,
    ControlQuad, GeometryError, Point, Polyline,
};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("integrity error: {0}")]
    Integrity(String),
    #[error("validation error: {0}")]
    Validation(String),
}

macro_rules! label_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $label:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub enum $name {
            $(#[serde(rename = $label)] $variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $label),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = String;

            /// Case-insensitive; accepts spaces or dashes for underscores.
            fn from_str(s: &str) -> Result<Self, String> {
                let norm = s.trim().to_ascii_uppercase().replace([' ', '-'], "_");
                match norm.as_str() {
                    $($label => Ok($name::$variant),)+
                    _ => Err(format!("unknown {} {s:?}", stringify!($name))),
                }
            }
        }
    };
}

label_enum!(AgentType {
    EgoVehicle => "EGO_VEHICLE",
    Vehicle => "VEHICLE",
    Pedestrian => "PEDESTRIAN",
    Bicycle => "BICYCLE",
    TrafficCone => "TRAFFIC_CONE",
    Barrier => "BARRIER",
    GenericObject => "GENERIC_OBJECT",
});

impl AgentType {
    /// Types expected to align with the lane they occupy.
    pub fn follows_lanes(self) -> bool {
        matches!(
            self,
            AgentType::EgoVehicle | AgentType::Vehicle | AgentType::Bicycle
        )
    }
}

label_enum!(RelativeDirection {
    Same => "SAME",
    Opposite => "OPPOSITE",
    Crossing => "CROSSING",
});

label_enum!(TrafficLightState {
    Red => "RED",
    Yellow => "YELLOW",
    Green => "GREEN",
    Unknown => "UNKNOWN",
});

label_enum!(TurnType {
    Left => "LEFT",
    Right => "RIGHT",
    Straight => "STRAIGHT",
});

label_enum!(AreaKind {
    Drivable => "DRIVABLE",
    Walkway => "WALKWAY",
    Carpark => "CARPARK",
    Other => "OTHER",
});

label_enum!(ScenarioType {
    ConstructionZone => "CONSTRUCTION_ZONE",
    AccidentSite => "ACCIDENT_SITE",
    Jaywalker => "JAYWALKER",
    ParkedVehicleNudge => "PARKED_VEHICLE_NUDGE",
    OvertakeOncoming => "OVERTAKE_ONCOMING",
    Other => "OTHER",
});

/// Initial state of a traffic participant or static object.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub id: String,
    pub agent_type: AgentType,
    pub center: Point,
    pub heading: f64,
    pub width: f64,
    pub length: f64,
    pub velocity: f64,
    pub lane_id: Option<String>,
}

impl AgentState {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |what: &str| Err(ScenarioError::Validation(format!("agent {}: {what}", self.id)));
        if self.id.is_empty() {
            return Err(ScenarioError::Validation("agent with empty id".into()));
        }
        if !self.center.is_finite() {
            return bad("non-finite center");
        }
        if !(self.width > 0.0 && self.width.is_finite()) {
            return bad("width must be positive");
        }
        if !(self.length > 0.0 && self.length.is_finite()) {
            return bad("length must be positive");
        }
        if !(self.velocity >= 0.0 && self.velocity.is_finite()) {
            return bad("velocity must be non-negative");
        }
        if !(self.heading > -PI && self.heading <= PI) {
            return bad("heading outside (-pi, pi]");
        }
        Ok(())
    }

    /// Footprint corners in world coordinates.
    pub fn corners(&self) -> [Point; 4] {
        crate::geometry::oriented_box_corners(self.center, self.heading, self.length, self.width)
    }
}

/// Lane centerline in one of the two interchangeable representations.
#[derive(Debug, Clone, PartialEq)]
pub enum LaneGeometry {
    Polyline(Vec<Point>),
    Bezier(ControlQuad),
}

impl LaneGeometry {
    pub fn validate(&self) -> Result<(), GeometryError> {
        match self {
            LaneGeometry::Polyline(points) => Polyline::new(points.clone()).map(|_| ()),
            LaneGeometry::Bezier(q) => {
                q.validate()?;
                if ArcLengthTable::new(q).total() > 0.0 {
                    Ok(())
                } else {
                    Err(GeometryError::Degenerate("zero arc length".into()))
                }
            }
        }
    }

    pub fn start(&self) -> Point {
        match self {
            LaneGeometry::Polyline(p) => p[0],
            LaneGeometry::Bezier(q) => q.p0,
        }
    }

    pub fn end(&self) -> Point {
        match self {
            LaneGeometry::Polyline(p) => *p.last().expect("validated polyline"),
            LaneGeometry::Bezier(q) => q.p3,
        }
    }

    pub fn length(&self) -> f64 {
        match self {
            LaneGeometry::Polyline(p) => crate::geometry::polyline_length(p),
            LaneGeometry::Bezier(q) => ArcLengthTable::new(q).total(),
        }
    }

    /// Single-cubic representation; polylines are least-squares fitted.
    pub fn to_quad(&self) -> Result<BezierFit, GeometryError> {
        match self {
            LaneGeometry::Bezier(q) => Ok(BezierFit {
                quad: *q,
                max_deviation: 0.0,
            }),
            LaneGeometry::Polyline(points) => {
                if points.len() >= 4 {
                    fit_bezier(points)
                } else {
                    let len = crate::geometry::polyline_length(points);
                    let dense = resample_polyline(points, len / 6.0)?;
                    fit_bezier(&dense)
                }
            }
        }
    }

    /// Centerline points at `spacing` metres of arc length, final point exact.
    pub fn sample(&self, spacing: f64) -> Result<Vec<Point>, GeometryError> {
        match self {
            LaneGeometry::Polyline(points) => resample_polyline(points, spacing),
            LaneGeometry::Bezier(q) => {
                let table = ArcLengthTable::new(q);
                let total = table.total();
                let mut out = Vec::new();
                let mut k = 0usize;
                while (k as f64) * spacing < total - 1e-9 {
                    out.push(q.eval(table.parameter_at(k as f64 * spacing)));
                    k += 1;
                }
                out.push(q.p3);
                Ok(out)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lane {
    pub id: String,
    /// Cardinal label such as "Eastwards".
    pub travel_direction: String,
    pub relative_direction_to_ego: RelativeDirection,
    pub width: f64,
    pub speed_limit: f64,
    pub geometry: LaneGeometry,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LaneConnector {
    pub id: String,
    pub from_lane: String,
    pub to_lane: String,
    pub traffic_light_state: TrafficLightState,
    pub turn_type: TurnType,
    pub speed_limit: f64,
    pub geometry: LaneGeometry,
}

/// Map polygon; the ring is implicitly closed.
#[derive(Debug, Clone, PartialEq)]
pub struct Area {
    pub id: String,
    pub kind: AreaKind,
    pub boundary: Vec<Point>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub scenario_id: String,
    pub scenario_type: ScenarioType,
    pub agents: Vec<AgentState>,
    pub lanes: Vec<Lane>,
    pub connectors: Vec<LaneConnector>,
    pub areas: Vec<Area>,
}

fn check_unique<'a>(kind: &str, ids: impl Iterator<Item = &'a str>) -> Result<(), ScenarioError> {
    let mut seen = HashSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(ScenarioError::Integrity(format!("duplicate {kind} id {id:?}")));
        }
    }
    Ok(())
}

impl Scenario {
    pub fn ego(&self) -> Option<&AgentState> {
        self.agents
            .iter()
            .find(|a| a.agent_type == AgentType::EgoVehicle)
    }

    pub fn agent(&self, id: &str) -> Option<&AgentState> {
        self.agents.iter().find(|a| a.id == id)
    }

    pub fn lane(&self, id: &str) -> Option<&Lane> {
        self.lanes.iter().find(|l| l.id == id)
    }

    pub fn connector(&self, id: &str) -> Option<&LaneConnector> {
        self.connectors.iter().find(|c| c.id == id)
    }

    /// Geometry of a lane or connector by id.
    pub fn centerline(&self, id: &str) -> Option<&LaneGeometry> {
        self.lane(id)
            .map(|l| &l.geometry)
            .or_else(|| self.connector(id).map(|c| &c.geometry))
    }

    /// Checks every type invariant and cross-reference.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.scenario_id.is_empty() {
            return Err(ScenarioError::Validation("empty scenario_id".into()));
        }
        check_unique("agent", self.agents.iter().map(|a| a.id.as_str()))?;
        check_unique("lane", self.lanes.iter().map(|l| l.id.as_str()))?;
        check_unique("lane connector", self.connectors.iter().map(|c| c.id.as_str()))?;
        check_unique("area", self.areas.iter().map(|a| a.id.as_str()))?;

        let egos = self
            .agents
            .iter()
            .filter(|a| a.agent_type == AgentType::EgoVehicle)
            .count();
        if egos != 1 {
            return Err(ScenarioError::Integrity(format!(
                "expected exactly one EGO_VEHICLE, found {egos}"
            )));
        }

        for agent in &self.agents {
            agent.validate()?;
            if let Some(lane) = &agent.lane_id {
                if self.centerline(lane).is_none() {
                    return Err(ScenarioError::Integrity(format!(
                        "agent {} references unknown lane {lane:?}",
                        agent.id
                    )));
                }
            }
        }

        for lane in &self.lanes {
            if !(lane.width > 0.0) || !(lane.speed_limit > 0.0) {
                return Err(ScenarioError::Validation(format!(
                    "lane {}: width and speed limit must be positive",
                    lane.id
                )));
            }
            lane.geometry
                .validate()
                .map_err(|e| ScenarioError::Validation(format!("lane {}: {e}", lane.id)))?;
        }

        for c in &self.connectors {
            if c.from_lane == c.to_lane {
                return Err(ScenarioError::Integrity(format!(
                    "connector {} joins lane {} to itself",
                    c.id, c.from_lane
                )));
            }
            for end in [&c.from_lane, &c.to_lane] {
                if self.lane(end).is_none() {
                    return Err(ScenarioError::Integrity(format!(
                        "connector {} references unknown lane {end:?}",
                        c.id
                    )));
                }
            }
            if !(c.speed_limit > 0.0) {
                return Err(ScenarioError::Validation(format!(
                    "connector {}: speed limit must be positive",
                    c.id
                )));
            }
            c.geometry
                .validate()
                .map_err(|e| ScenarioError::Validation(format!("connector {}: {e}", c.id)))?;
        }

        for area in &self.areas {
            if !polygon_is_simple(&area.boundary) {
                return Err(ScenarioError::Validation(format!(
                    "area {}: boundary is not a simple open ring",
                    area.id
                )));
            }
        }
        Ok(())
    }
}

/// Maps headings that rounding pushed just past ±π back onto π.
pub(crate) fn snap_heading(h: f64) -> f64 {
    const ROUNDING: f64 = 5e-4;
    if (h > PI && h <= PI + ROUNDING) || (h >= -PI - ROUNDING && h <= -PI) {
        PI
    } else {
        h
    }
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;

    pub fn ego() -> AgentState {
        AgentState {
            id: "Agent1".into(),
            agent_type: AgentType::EgoVehicle,
            center: Point::new(0.0, 0.0),
            heading: 0.0,
            width: 2.297,
            length: 5.176,
            velocity: 0.0,
            lane_id: Some("Lane1".into()),
        }
    }

    pub fn minimal() -> Scenario {
        Scenario {
            scenario_id: "minimal".into(),
            scenario_type: ScenarioType::Other,
            agents: vec![ego()],
            lanes: vec![Lane {
                id: "Lane1".into(),
                travel_direction: "Eastwards".into(),
                relative_direction_to_ego: RelativeDirection::Same,
                width: 3.5,
                speed_limit: 13.889,
                geometry: LaneGeometry::Polyline(vec![Point::new(0.0, 0.0), Point::new(30.0, 0.0)]),
            }],
            connectors: vec![],
            areas: vec![],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::test_support::*;
    use super::*;

    #[test]
    fn minimal_scenario_validates() {
        minimal().validate().unwrap();
    }

    #[test]
    fn enum_labels_parse_loosely() {
        assert_eq!("vehicle".parse::<AgentType>().unwrap(), AgentType::Vehicle);
        assert_eq!("Ego Vehicle".parse::<AgentType>().unwrap(), AgentType::EgoVehicle);
        assert!("TRUCK".parse::<AgentType>().is_err());
    }

    #[test]
    fn missing_ego_and_dangling_lane() {
        let mut s = minimal();
        s.agents[0].agent_type = AgentType::Vehicle;
        assert!(matches!(s.validate(), Err(ScenarioError::Integrity(_))));
        let mut s = minimal();
        s.agents[0].lane_id = Some("LaneX".into());
        assert!(matches!(s.validate(), Err(ScenarioError::Integrity(_))));
    }

    #[test]
    fn bezier_sampling_hits_spacing() {
        let q = ControlQuad::line(Point::new(0.0, 0.0), Point::new(12.0, 0.0)).unwrap();
        let pts = LaneGeometry::Bezier(q).sample(5.0).unwrap();
        let xs: Vec<f64> = pts.iter().map(|p| p.x).collect();
        assert_eq!(xs.len(), 4);
        for (x, want) in xs.iter().zip([0.0, 5.0, 10.0, 12.0]) {
            assert!((x - want).abs() < 1e-9);
        }
    }

    #[test]
    fn heading_snap_near_pi() {
        assert_eq!(snap_heading(3.142), PI);
        assert_eq!(snap_heading(-3.1416), PI);
        assert_eq!(snap_heading(1.0), 1.0);
        assert_eq!(snap_heading(3.141), 3.141);
        assert_eq!(snap_heading(4.0), 4.0);
    }
}
