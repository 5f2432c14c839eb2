use super::Pose;
use crate::geometry::{GeometryError, Point, Polyline};
use crate::scenario::{Scenario, TurnType};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RouteError {
    #[error("scenario has no ego vehicle")]
    NoEgo,
    #[error("no lane available for the ego route")]
    NoLane,
    #[error("route entries {0:?} and {1:?} are not connected")]
    Disconnected(String, String),
    #[error("unknown lane or connector {0:?}")]
    UnknownId(String),
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error("route geometry: {0}")]
    Geometry(#[from] GeometryError),
}

const SAMPLE_SPACING_M: f64 = 1.0;
const MAX_ENTRIES: usize = 32;

/// Ego reference path: lane and connector ids from the start lane onwards
/// and the concatenated centerline. The path extrapolates linearly past its
/// last point.
#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub ids: Vec<String>,
    pub path: Polyline,
    pub speed_limit: f64,
}

impl Route {
    /// Starts on the ego's lane (or the nearest lane when unset) and follows
    /// connectors, preferring straight ones and then the smallest id, until
    /// a lane repeats or no connector leaves the current lane.
    pub fn from_scenario(s: &Scenario) -> Result<Self, RouteError> {
        let ego = s.ego().ok_or(RouteError::NoEgo)?;
        let start = match ego.lane_id.as_deref().and_then(|id| s.lane(id)) {
            Some(lane) => lane,
            None => nearest_lane(s, ego.center)?,
        };
        let mut ids = vec![start.id.clone()];
        let mut current = start.id.as_str();
        while ids.len() + 2 <= MAX_ENTRIES {
            let next = s
                .connectors
                .iter()
                .filter(|c| c.from_lane == current)
                .min_by_key(|c| (c.turn_type != TurnType::Straight, c.id.as_str()));
            let Some(c) = next else { break };
            if ids.contains(&c.to_lane) {
                break;
            }
            ids.push(c.id.clone());
            ids.push(c.to_lane.clone());
            current = c.to_lane.as_str();
        }
        Self::from_ids(s, ids, start.speed_limit)
    }

    pub fn from_ids(s: &Scenario, ids: Vec<String>, speed_limit: f64) -> Result<Self, RouteError> {
        if ids.is_empty() {
            return Err(RouteError::NoLane);
        }
        validate_chain(s, &ids)?;
        let mut points: Vec<Point> = Vec::new();
        for id in &ids {
            let geometry = s.centerline(id).ok_or_else(|| RouteError::UnknownId(id.clone()))?;
            for p in geometry.sample(SAMPLE_SPACING_M)? {
                if points.last().is_none_or(|q| q.distance(p) > 1e-3) {
                    points.push(p);
                }
            }
        }
        Ok(Self {
            ids,
            path: Polyline::new(points)?,
            speed_limit,
        })
    }

    /// Pose at arc position `s` and lateral offset `d` (left positive).
    pub fn pose(&self, s: f64, d: f64, heading_offset: f64) -> Pose {
        let h = self.path.heading_at(s);
        let p = self.path.point_at(s) + Point::from_heading(h).perp() * d;
        Pose {
            x: p.x,
            y: p.y,
            heading: crate::geometry::normalize_angle(h + heading_offset),
        }
    }
}

fn nearest_lane(s: &Scenario, p: Point) -> Result<&crate::scenario::Lane, RouteError> {
    let mut best: Option<(f64, &crate::scenario::Lane)> = None;
    for lane in &s.lanes {
        let Ok(line) = lane.geometry.sample(SAMPLE_SPACING_M).and_then(Polyline::new) else {
            continue;
        };
        let (along, _) = line.project(p);
        let d = line.point_at(along.clamp(0.0, line.length())).distance(p);
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, lane));
        }
    }
    best.map(|(_, l)| l).ok_or(RouteError::NoLane)
}

/// Lanes and connectors must alternate, each connector joining its
/// neighbours in order.
fn validate_chain(s: &Scenario, ids: &[String]) -> Result<(), RouteError> {
    for w in ids.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let linked = match (s.connector(a), s.connector(b)) {
            (None, Some(c)) => c.from_lane == *a,
            (Some(c), None) => c.to_lane == *b,
            _ => false,
        };
        if !linked {
            return Err(RouteError::Disconnected(a.clone(), b.clone()));
        }
    }
    for id in ids {
        if s.centerline(id).is_none() {
            return Err(RouteError::UnknownId(id.clone()));
        }
    }
    Ok(())
}
