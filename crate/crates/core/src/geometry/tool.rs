use super::bezier::{anchor_from_table, ArcLengthTable};
use super::{GeometryError, Point};
use crate::scenario::Scenario;
use serde::{Deserialize, Serialize};

/// A point on a lane centerline with its tangent heading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaneAnchor {
    pub position: Point,
    pub heading: f64,
    pub arc_length_from_start: f64,
    /// Set when the requested distance fell inside the grace zone past an
    /// end of the curve and was clamped onto it.
    #[serde(default)]
    pub clamped: bool,
}

/// The function exposed to the modifier agent: the anchor `distance_m`
/// along the centerline of a lane or lane connector.
///
/// Polyline lanes are fitted to a single cubic on demand.
pub fn lane_point_tool(
    scenario: &Scenario,
    lane_or_connector_id: &str,
    distance_m: f64,
) -> Result<LaneAnchor, GeometryError> {
    let geometry = scenario
        .lanes
        .iter()
        .find(|l| l.id == lane_or_connector_id)
        .map(|l| &l.geometry)
        .or_else(|| {
            scenario
                .connectors
                .iter()
                .find(|c| c.id == lane_or_connector_id)
                .map(|c| &c.geometry)
        })
        .ok_or_else(|| GeometryError::UnknownId(lane_or_connector_id.to_string()))?;
    let fit = geometry.to_quad()?;
    if fit.max_deviation > 0.05 {
        log::debug!(
            "{lane_or_connector_id}: polyline fitted with max deviation {:.3} m",
            fit.max_deviation
        );
    }
    let anchor = anchor_from_table(&ArcLengthTable::new(&fit.quad), distance_m)?;
    if anchor.clamped {
        log::warn!(
            "{lane_or_connector_id}: distance {distance_m:.3} m clamped to {:.3} m",
            anchor.arc_length_from_start
        );
    }
    Ok(anchor)
}

/// Displaces the anchor perpendicular to its heading; positive is left of
/// the direction of travel.
pub fn offset_point(anchor: &LaneAnchor, lateral_offset: f64) -> Point {
    anchor.position + Point::from_heading(anchor.heading).perp() * lateral_offset
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn anchor(x: f64, y: f64, heading: f64) -> LaneAnchor {
        LaneAnchor {
            position: Point::new(x, y),
            heading,
            arc_length_from_start: 0.0,
            clamped: false,
        }
    }

    #[test]
    fn offsets_are_left_positive() {
        let p = offset_point(&anchor(21.4, 0.0, 0.0), 1.0);
        assert_eq!(p, Point::new(21.4, 1.0));
        assert_eq!(offset_point(&anchor(3.0, 4.0, 0.7), 0.0), Point::new(3.0, 4.0));
        let q = offset_point(&anchor(0.0, 0.0, FRAC_PI_2), 2.0);
        assert!((q.x + 2.0).abs() < 1e-12 && q.y.abs() < 1e-12);
    }
}
