//! Simplified closed-loop simulation: constant-velocity traffic, an
//! IDM-proposal planner and a weighted driving score.

mod closed_loop;
mod idm;
mod planner;
mod route;
mod score;

pub use closed_loop::{run_closed_loop, simulate_many, trace_csv, PlanRecord, SimEvent, SimEventKind, SimStep, SimTrace, TraceAgent};
pub use idm::{free_road_distance, IdmParams};
pub use planner::{generate_proposals, select_proposal, Proposal, TrajectoryPoint};
pub use route::{Route, RouteError};
pub use score::{driving_score, DrivingScore, ScoreConfig};

use serde::{Deserialize, Serialize};

/// Pose in the scenario frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub idm: IdmParams,
    pub dt_s: f64,
    pub horizon_s: f64,
    pub replan_s: f64,
    pub duration_s: f64,
    /// Fractions of the route speed limit used as IDM desired speeds.
    pub speed_fractions: Vec<f64>,
    pub lateral_offsets_m: Vec<f64>,
    /// Lane-change length is `max(v · lateral_blend_s, min_blend_m)`.
    pub lateral_blend_s: f64,
    pub min_blend_m: f64,
    /// Extra half-width added to the ego footprint when looking for leaders.
    pub lateral_margin_m: f64,
    pub score: ScoreConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            idm: IdmParams::default(),
            dt_s: 0.1,
            horizon_s: 8.0,
            replan_s: 1.0,
            duration_s: 15.0,
            speed_fractions: vec![0.2, 0.4, 0.6, 0.8, 1.0],
            lateral_offsets_m: (-4..=4).map(f64::from).collect(),
            lateral_blend_s: 3.0,
            min_blend_m: 10.0,
            lateral_margin_m: 0.25,
            score: ScoreConfig::default(),
        }
    }
}

pub const MAX_LATERAL_OFFSET_M: f64 = 4.0;

fn whole_steps(span: f64, dt: f64, what: &str) -> Result<usize, String> {
    let n = span / dt;
    if !(n >= 1.0) || (n - n.round()).abs() > 1e-9 {
        return Err(format!("{what} {span} s is not a positive multiple of dt {dt} s"));
    }
    Ok(n.round() as usize)
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.dt_s > 0.0) {
            return Err("dt must be positive".into());
        }
        self.horizon_steps()?;
        self.replan_steps()?;
        self.total_steps()?;
        if self.horizon_s < self.replan_s {
            return Err("horizon shorter than the replanning period".into());
        }
        if self.speed_fractions.is_empty() || self.lateral_offsets_m.is_empty() {
            return Err("proposal grid is empty".into());
        }
        if self.speed_fractions.iter().any(|f| !(*f > 0.0 && *f <= 1.0)) {
            return Err("speed fractions must lie in (0, 1]".into());
        }
        if self
            .lateral_offsets_m
            .iter()
            .any(|o| !(o.abs() <= MAX_LATERAL_OFFSET_M))
        {
            return Err(format!("lateral offsets must lie within ±{MAX_LATERAL_OFFSET_M} m"));
        }
        if !(self.min_blend_m > 0.0) || !(self.lateral_blend_s >= 0.0) || !(self.lateral_margin_m >= 0.0) {
            return Err("lateral blend parameters must be positive".into());
        }
        self.idm.validate()?;
        self.score.validate()
    }

    pub(crate) fn horizon_steps(&self) -> Result<usize, String> {
        whole_steps(self.horizon_s, self.dt_s, "horizon")
    }

    pub(crate) fn replan_steps(&self) -> Result<usize, String> {
        whole_steps(self.replan_s, self.dt_s, "replanning period")
    }

    pub(crate) fn total_steps(&self) -> Result<usize, String> {
        whole_steps(self.duration_s, self.dt_s, "duration")
    }
}
