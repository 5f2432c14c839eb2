use super::closed_loop::SimTrace;
use super::idm::free_road_end;
use super::route::Route;
use super::SimConfig;
use crate::geometry::{boxes_overlap, oriented_box_corners, Point};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoreConfig {
    pub ttc_threshold_s: f64,
    pub max_accel: f64,
    pub max_jerk: f64,
    pub weight_ttc: f64,
    pub weight_progress: f64,
    pub weight_comfort: f64,
    /// TTC is not evaluated while the ego is slower than this.
    pub stationary_speed: f64,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        Self {
            ttc_threshold_s: 0.95,
            max_accel: 2.4,
            max_jerk: 4.13,
            weight_ttc: 5.0,
            weight_progress: 5.0,
            weight_comfort: 2.0,
            stationary_speed: 0.05,
        }
    }
}

impl ScoreConfig {
    pub fn validate(&self) -> Result<(), String> {
        let weights = [self.weight_ttc, self.weight_progress, self.weight_comfort];
        if weights.iter().any(|w| !(*w >= 0.0)) || !(weights.iter().sum::<f64>() > 0.0) {
            return Err("score weights must be non-negative with a positive sum".into());
        }
        if !(self.ttc_threshold_s > 0.0) || !(self.max_accel > 0.0) || !(self.max_jerk > 0.0) {
            return Err("score thresholds must be positive".into());
        }
        Ok(())
    }
}

/// `collision || offroad` implies `score == 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DrivingScore {
    pub ttc_pass: bool,
    pub progress_ratio: f64,
    pub comfort_pass: bool,
    pub collision: bool,
    pub offroad: bool,
    pub score: f64,
}

/// Whether constant-velocity extrapolation of every participant stays
/// collision-free for times below the threshold.
fn ttc_pass(trace: &SimTrace, cfg: &ScoreConfig) -> bool {
    let probe = 0.5 * trace.dt_s;
    let probes = (cfg.ttc_threshold_s / probe).ceil() as usize;
    trace
        .steps
        .iter()
        .filter(|st| st.velocity >= cfg.stationary_speed)
        .all(|st| {
            (0..probes).map(|j| j as f64 * probe).filter(|tau| *tau < cfg.ttc_threshold_s).all(|tau| {
                let ego_c = Point::new(st.ego.x, st.ego.y) + Point::from_heading(st.ego.heading) * (st.velocity * tau);
                let ego = oriented_box_corners(ego_c, st.ego.heading, trace.ego_length, trace.ego_width);
                trace.agents.iter().zip(&st.agents).all(|(a, pose)| {
                    let c = Point::new(pose.x, pose.y) + Point::from_heading(pose.heading) * (a.velocity * tau);
                    !boxes_overlap(&ego, &oriented_box_corners(c, pose.heading, a.length, a.width))
                })
            })
        })
}

/// Jerk is taken between consecutive steps, so the first step has none.
fn comfort_pass(trace: &SimTrace, cfg: &ScoreConfig) -> bool {
    let accel_ok = trace.steps.iter().all(|st| st.accel.abs() <= cfg.max_accel);
    let jerk_ok = trace
        .steps
        .windows(2)
        .all(|w| ((w[1].accel - w[0].accel) / trace.dt_s).abs() <= cfg.max_jerk);
    accel_ok && jerk_ok
}

/// Weighted mean of TTC, progress and comfort, zeroed by any collision or
/// drivable-area exit. Progress is measured against an open-road IDM
/// rollout at the route speed limit from the same initial state.
pub fn driving_score(trace: &SimTrace, route: &Route, cfg: &SimConfig) -> DrivingScore {
    let sc = &cfg.score;
    let steps = trace.steps.len();
    let attainable = free_road_end(&cfg.idm, trace.start_s, trace.initial_speed, route.speed_limit, trace.dt_s, steps)
        - trace.start_s;
    let travelled = trace.steps.last().map_or(0.0, |st| st.progress_m).max(0.0);
    let progress_ratio = if attainable > 0.0 { (travelled / attainable).min(1.0) } else { 1.0 };
    let ttc = ttc_pass(trace, sc);
    let comfort = comfort_pass(trace, sc);
    let collision = trace.collided();
    let offroad = trace.went_offroad();
    let indicator = |b: bool| if b { 1.0 } else { 0.0 };
    let weighted = (sc.weight_ttc * indicator(ttc) + sc.weight_progress * progress_ratio + sc.weight_comfort * indicator(comfort))
        / (sc.weight_ttc + sc.weight_progress + sc.weight_comfort);
    let penalty = indicator(!collision) * indicator(!offroad);
    DrivingScore {
        ttc_pass: ttc,
        progress_ratio,
        comfort_pass: comfort,
        collision,
        offroad,
        score: weighted * penalty,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::AgentType;
    use crate::sim::closed_loop::run_closed_loop;
    use crate::sim::fixtures::{agent, road};

    fn score_of(s: &crate::scenario::Scenario) -> (SimTrace, DrivingScore) {
        let cfg = SimConfig::default();
        let trace = run_closed_loop(s, &cfg).unwrap();
        let route = Route::from_scenario(s).unwrap();
        let score = driving_score(&trace, &route, &cfg);
        (trace, score)
    }

    #[test]
    fn empty_road_is_perfect() {
        for v in [0.0, 4.0, 10.0] {
            let (_, sc) = score_of(&road(v));
            assert_eq!(sc.score, 1.0, "v0 = {v}: {sc:?}");
        }
    }

    #[test]
    fn blocked_standstill_scores_seven_twelfths() {
        let mut s = road(0.0);
        s.agents.push(agent("Agent2", AgentType::Barrier, 4.5, 0.0, 0.0, 0.0));
        let (_, sc) = score_of(&s);
        assert!(sc.ttc_pass && sc.comfort_pass && !sc.collision);
        assert!(sc.progress_ratio < 1e-3);
        assert!((sc.score - 7.0 / 12.0).abs() < 1e-9, "{sc:?}");
    }

    #[test]
    fn collision_zeroes_score() {
        let mut s = road(8.0);
        s.agents.push(agent("Agent2", AgentType::Vehicle, 40.0, 0.0, std::f64::consts::PI, 10.0));
        // left and right escapes are blocked by parked vehicles
        for (i, y) in [-3.0, -2.0, 2.0, 3.0, -4.0, 4.0, 1.5, -1.5].iter().enumerate() {
            s.agents.push(agent(&format!("P{i}"), AgentType::Barrier, 8.0, *y, 0.0, 0.0));
        }
        let (trace, sc) = score_of(&s);
        assert!(trace.collided());
        assert!(sc.collision);
        assert_eq!(sc.score, 0.0);
    }
}
