use super::hungarian::hungarian;
use crate::geometry::{angle_difference, convex_intersection_area, point_in_polygon, polygon_area, Point, Polyline};
use crate::scenario::{AgentState, AgentType, AreaKind, Scenario};
use serde::{Deserialize, Serialize};

/// Cost of pairing an agent with a padding slot.
pub const PADDING_COST_M: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub generated: String,
    pub reference: String,
    pub distance_m: f64,
}

/// `mean_m`/`max_m` are `None` when nothing was matched.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisplacementReport {
    pub pairs: Vec<MatchedPair>,
    pub mean_m: Option<f64>,
    pub max_m: Option<f64>,
    pub unmatched_generated: usize,
    pub unmatched_reference: usize,
}

fn non_ego(agents: &[AgentState]) -> Vec<&AgentState> {
    agents.iter().filter(|a| a.agent_type != AgentType::EgoVehicle).collect()
}

/// Hungarian matching on centre distances; the ego is ignored on both sides.
pub fn displacement_error(generated: &[AgentState], reference: &[AgentState]) -> DisplacementReport {
    let g = non_ego(generated);
    let r = non_ego(reference);
    let size = g.len().max(r.len());
    if g.is_empty() || r.is_empty() {
        return DisplacementReport {
            pairs: Vec::new(),
            mean_m: None,
            max_m: None,
            unmatched_generated: g.len(),
            unmatched_reference: r.len(),
        };
    }
    let cost: Vec<Vec<f64>> = (0..size)
        .map(|i| {
            (0..size)
                .map(|j| match (g.get(i), r.get(j)) {
                    (Some(a), Some(b)) => a.center.distance(b.center),
                    _ => PADDING_COST_M,
                })
                .collect()
        })
        .collect();
    let assignment = hungarian(&cost).expect("square non-empty finite matrix");
    let pairs: Vec<MatchedPair> = assignment
        .pairs
        .into_iter()
        .filter(|&(i, j)| i < g.len() && j < r.len())
        .map(|(i, j)| MatchedPair {
            generated: g[i].id.clone(),
            reference: r[j].id.clone(),
            distance_m: cost[i][j],
        })
        .collect();
    let k = pairs.len();
    let sum: f64 = pairs.iter().map(|p| p.distance_m).sum();
    DisplacementReport {
        mean_m: (k > 0).then(|| sum / k as f64),
        max_m: pairs.iter().map(|p| p.distance_m).reduce(f64::max),
        unmatched_generated: g.len() - k,
        unmatched_reference: r.len() - k,
        pairs,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ErrorCategory {
    Position,
    Heading,
    Logic,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorLabel {
    pub agent_id: String,
    pub category: ErrorCategory,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorThresholds {
    pub position_m: f64,
    pub heading_rad: f64,
    /// Fraction of the smaller footprint.
    pub overlap_fraction: f64,
}

impl Default for ErrorThresholds {
    fn default() -> Self {
        Self {
            position_m: 5.0,
            heading_rad: 30f64.to_radians(),
            overlap_fraction: 0.2,
        }
    }
}

/// Heading of the lane or connector centerline closest to `p`.
fn nearest_lane_heading(s: &Scenario, p: Point) -> Option<f64> {
    let geoms = s
        .lanes
        .iter()
        .map(|l| &l.geometry)
        .chain(s.connectors.iter().map(|c| &c.geometry));
    let mut best: Option<(f64, f64)> = None;
    for g in geoms {
        let Some(line) = g.sample(1.0).ok().and_then(|pts| Polyline::new(pts).ok()) else {
            continue;
        };
        let (along, _) = line.project(p);
        let along = along.clamp(0.0, line.length());
        let d = line.point_at(along).distance(p);
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, line.heading_at(along)));
        }
    }
    best.map(|(_, h)| h)
}

fn on_drivable(s: &Scenario, p: Point) -> bool {
    s.areas
        .iter()
        .filter(|a| a.kind == AreaKind::Drivable)
        .any(|a| point_in_polygon(p, &a.boundary))
}

/// Heuristic per-agent error label. `s` is the generated scenario; every
/// generated non-ego agent receives exactly one label.
///
/// The drivable-area test applies to lane-following agents and only when
/// the scenario defines drivable areas; agents without a reference match
/// are labelled `LOGIC`.
pub fn classify_errors(
    generated: &[AgentState],
    reference: &[AgentState],
    s: &Scenario,
    t: &ErrorThresholds,
) -> Vec<ErrorLabel> {
    let report = displacement_error(generated, reference);
    let has_drivable = s.areas.iter().any(|a| a.kind == AreaKind::Drivable);
    let mut others: Vec<&AgentState> = s.agents.iter().collect();
    for a in generated {
        if !others.iter().any(|o| o.id == a.id) {
            others.push(a);
        }
    }
    non_ego(generated)
        .into_iter()
        .map(|a| {
            let label = |category, detail: String| ErrorLabel {
                agent_id: a.id.clone(),
                category,
                detail,
            };
            let Some(pair) = report.pairs.iter().find(|p| p.generated == a.id) else {
                return label(ErrorCategory::Logic, "no matching reference agent".into());
            };
            if pair.distance_m > t.position_m {
                return label(
                    ErrorCategory::Position,
                    format!("{:.2} m from {}", pair.distance_m, pair.reference),
                );
            }
            let lane_bound = a.agent_type.follows_lanes();
            if lane_bound && has_drivable && !on_drivable(s, a.center) {
                return label(ErrorCategory::Position, "centre outside every drivable area".into());
            }
            if lane_bound {
                if let Some(h) = nearest_lane_heading(s, a.center) {
                    let diff = angle_difference(a.heading, h).abs();
                    if diff > t.heading_rad {
                        return label(
                            ErrorCategory::Heading,
                            format!("{:.1} deg off the lane direction", diff.to_degrees()),
                        );
                    }
                }
            }
            let mine = a.corners();
            let my_area = polygon_area(&mine).abs();
            for o in others.iter().filter(|o| o.id != a.id) {
                let theirs = o.corners();
                let smaller = my_area.min(polygon_area(&theirs).abs());
                let inter = convex_intersection_area(&mine, &theirs);
                if smaller > 0.0 && inter > t.overlap_fraction * smaller {
                    return label(
                        ErrorCategory::Logic,
                        format!("overlaps {} by {:.0}%", o.id, 100.0 * inter / smaller),
                    );
                }
            }
            label(ErrorCategory::None, String::new())
        })
        .collect()
}
