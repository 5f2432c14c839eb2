use super::idm::advance;
use super::planner::{plan_from, select_in, EgoState, World};
use super::route::{Route, RouteError};
use super::score::{driving_score, DrivingScore};
use super::{Pose, SimConfig};
use crate::geometry::boxes_overlap;
use crate::scenario::{AgentType, Scenario};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt::Write;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceAgent {
    pub id: String,
    pub agent_type: AgentType,
    pub length: f64,
    pub width: f64,
    pub velocity: f64,
}

/// State after one simulation step; `agents` follows `SimTrace::agents`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimStep {
    pub t: f64,
    pub ego: Pose,
    pub velocity: f64,
    /// Acceleration applied during the step that ended at `t`.
    pub accel: f64,
    /// Route distance travelled since the start.
    pub progress_m: f64,
    pub lateral_m: f64,
    pub agents: Vec<Pose>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum SimEventKind {
    Collision,
    Offroad,
}

/// Logged at the first step of each contact or drivable-area exit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimEvent {
    pub t: f64,
    pub kind: SimEventKind,
    pub agent_id: Option<String>,
}

/// Outcome of one replanning cycle; the selection is `None` when the ego
/// had to brake.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanRecord {
    pub t: f64,
    pub speed_fraction: Option<f64>,
    pub lateral_offset_m: Option<f64>,
}

/// `steps.len() == duration_s / dt_s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimTrace {
    pub scenario_id: String,
    pub dt_s: f64,
    pub duration_s: f64,
    pub route: Vec<String>,
    pub speed_limit: f64,
    pub ego_length: f64,
    pub ego_width: f64,
    pub initial_speed: f64,
    pub start_s: f64,
    pub agents: Vec<TraceAgent>,
    pub steps: Vec<SimStep>,
    pub events: Vec<SimEvent>,
    pub plans: Vec<PlanRecord>,
}

impl SimTrace {
    pub fn collided(&self) -> bool {
        self.events.iter().any(|e| e.kind == SimEventKind::Collision)
    }

    pub fn went_offroad(&self) -> bool {
        self.events.iter().any(|e| e.kind == SimEventKind::Offroad)
    }
}

/// Replans on a fixed period and follows the selected trajectory in
/// between; with no feasible proposal the ego brakes at `b` in place.
/// Always runs the full duration.
pub fn run_closed_loop(s: &Scenario, cfg: &SimConfig) -> Result<SimTrace, RouteError> {
    cfg.validate().map_err(RouteError::Config)?;
    let route = Route::from_scenario(s)?;
    let world = World::new(s, &route)?;
    let ego = s.ego().ok_or(RouteError::NoEgo)?;
    let total = cfg.total_steps().map_err(RouteError::Config)?;
    let replan = cfg.replan_steps().map_err(RouteError::Config)?;
    let dt = cfg.dt_s;

    let (s0, d0) = route.path.project(ego.center);
    let mut state = EgoState { s: s0, d: d0, v: ego.velocity };
    let mut active: Option<(super::Proposal, usize)> = None;
    let mut plans = Vec::new();
    let mut steps = Vec::with_capacity(total);
    let mut events = Vec::new();
    let mut touching: BTreeSet<String> = BTreeSet::new();
    let mut was_offroad = false;

    for k in 0..total {
        let t = k as f64 * dt;
        if k % replan == 0 {
            let proposals = plan_from(&route, &world, state, t, cfg)?;
            active = select_in(&proposals, &world, cfg).map(|i| (proposals[i].clone(), k));
            plans.push(PlanRecord {
                t,
                speed_fraction: active.as_ref().map(|(p, _)| p.speed_fraction),
                lateral_offset_m: active.as_ref().map(|(p, _)| p.lateral_offset),
            });
        }
        let (accel, heading_offset) = match &active {
            Some((p, k0)) => {
                let here = &p.trajectory[k - k0];
                let next = &p.trajectory[k - k0 + 1];
                state = EgoState { s: next.s, d: next.d, v: next.v };
                let h = next.pose.heading - route.path.heading_at(next.s);
                (here.a, h)
            }
            None => {
                let a = if state.v > 0.0 { -cfg.idm.b } else { 0.0 };
                let (s_next, v_next) = advance(state.s, state.v, a, dt);
                state = EgoState { s: s_next, d: state.d, v: v_next };
                (a, 0.0)
            }
        };
        let t_next = (k + 1) as f64 * dt;
        let pose = route.pose(state.s, state.d, heading_offset);

        let ego_corners = world.ego_corners(&pose);
        let now_touching: BTreeSet<String> = world
            .obstacles
            .iter()
            .filter(|o| boxes_overlap(&ego_corners, &o.corners_at(t_next)))
            .map(|o| o.id.clone())
            .collect();
        for id in now_touching.difference(&touching) {
            events.push(SimEvent {
                t: t_next,
                kind: SimEventKind::Collision,
                agent_id: Some(id.clone()),
            });
        }
        touching = now_touching;
        let offroad = world.drivable.offroad(state.s, &ego_corners);
        if offroad && !was_offroad {
            events.push(SimEvent {
                t: t_next,
                kind: SimEventKind::Offroad,
                agent_id: None,
            });
        }
        was_offroad = offroad;

        steps.push(SimStep {
            t: t_next,
            ego: pose,
            velocity: state.v,
            accel,
            progress_m: state.s - s0,
            lateral_m: state.d,
            agents: world
                .obstacles
                .iter()
                .map(|o| {
                    let p = o.center_at(t_next);
                    Pose { x: p.x, y: p.y, heading: o.heading }
                })
                .collect(),
        });
    }

    Ok(SimTrace {
        scenario_id: s.scenario_id.clone(),
        dt_s: dt,
        duration_s: cfg.duration_s,
        route: route.ids.clone(),
        speed_limit: route.speed_limit,
        ego_length: ego.length,
        ego_width: ego.width,
        initial_speed: ego.velocity,
        start_s: s0,
        agents: s
            .agents
            .iter()
            .filter(|a| a.agent_type != AgentType::EgoVehicle)
            .map(|a| TraceAgent {
                id: a.id.clone(),
                agent_type: a.agent_type,
                length: a.length,
                width: a.width,
                velocity: a.velocity,
            })
            .collect(),
        steps,
        events,
        plans,
    })
}

/// Simulates and scores each scenario independently, in parallel; output
/// order matches input order.
pub fn simulate_many(
    scenarios: &[Scenario],
    cfg: &SimConfig,
) -> Vec<Result<(SimTrace, DrivingScore), RouteError>> {
    scenarios
        .par_iter()
        .map(|s| {
            let trace = run_closed_loop(s, cfg)?;
            let route = Route::from_scenario(s)?;
            let score = driving_score(&trace, &route, cfg);
            Ok((trace, score))
        })
        .collect()
}

/// Ego time series as CSV, one row per step.
pub fn trace_csv(trace: &SimTrace) -> String {
    let mut out = String::from("t,x,y,heading,velocity,accel,progress_m,lateral_m,events\n");
    for step in &trace.steps {
        let events: Vec<String> = trace
            .events
            .iter()
            .filter(|e| (e.t - step.t).abs() < 1e-9)
            .map(|e| match (&e.kind, &e.agent_id) {
                (SimEventKind::Collision, Some(id)) => format!("COLLISION:{id}"),
                (kind, _) => serde_json::to_value(kind).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
            })
            .collect();
        let _ = writeln!(
            out,
            "{:.1},{:.3},{:.3},{:.4},{:.3},{:.3},{:.3},{:.3},{}",
            step.t,
            step.ego.x,
            step.ego.y,
            step.ego.heading,
            step.velocity,
            step.accel,
            step.progress_m,
            step.lateral_m,
            events.join(";")
        );
    }
    out
}
