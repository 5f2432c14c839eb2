use super::idm::advance;
use super::route::{Route, RouteError};
use super::{Pose, SimConfig};
use crate::geometry::{boxes_overlap, oriented_box_corners, point_in_polygon, Point};
use crate::scenario::{AgentType, AreaKind, Scenario};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub t: f64,
    /// Arc position along the route.
    pub s: f64,
    /// Lateral offset from the route, left positive.
    pub d: f64,
    pub v: f64,
    /// Acceleration applied from this point to the next.
    pub a: f64,
    pub pose: Pose,
}

/// One IDM rollout; `trajectory` holds `horizon / dt + 1` points starting at
/// the planning state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Proposal {
    pub speed_fraction: f64,
    pub lateral_offset: f64,
    pub trajectory: Vec<TrajectoryPoint>,
}

impl Proposal {
    pub fn progress(&self) -> f64 {
        match (self.trajectory.first(), self.trajectory.last()) {
            (Some(a), Some(b)) => b.s - a.s,
            _ => 0.0,
        }
    }
}

/// A non-ego agent moving at constant velocity along its heading.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Obstacle {
    pub id: String,
    pub center: Point,
    pub heading: f64,
    pub velocity: f64,
    pub length: f64,
    pub width: f64,
}

impl Obstacle {
    pub fn center_at(&self, t: f64) -> Point {
        self.center + Point::from_heading(self.heading) * (self.velocity * t)
    }

    pub fn corners_at(&self, t: f64) -> [Point; 4] {
        oriented_box_corners(self.center_at(t), self.heading, self.length, self.width)
    }

    pub fn radius(&self) -> f64 {
        0.5 * self.length.hypot(self.width)
    }
}

/// Drivable polygons. With none defined nothing is offroad; beyond the end
/// of the route the map is treated as unknown and nothing is offroad either.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct DrivableMap {
    polygons: Vec<Vec<Point>>,
    mapped_until_s: f64,
}

impl DrivableMap {
    pub fn new(s: &Scenario, route: &Route) -> Self {
        let polygons = s
            .areas
            .iter()
            .filter(|a| a.kind == AreaKind::Drivable)
            .map(|a| a.boundary.clone())
            .collect();
        Self {
            polygons,
            mapped_until_s: route.path.length(),
        }
    }

    /// `s` is the ego's arc position on the route.
    pub fn offroad(&self, s: f64, corners: &[Point; 4]) -> bool {
        !self.polygons.is_empty()
            && s <= self.mapped_until_s
            && corners
                .iter()
                .any(|c| !self.polygons.iter().any(|poly| point_in_polygon(*c, poly)))
    }
}

/// Static description of everything the planner reacts to.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct World {
    pub obstacles: Vec<Obstacle>,
    pub drivable: DrivableMap,
    pub ego_length: f64,
    pub ego_width: f64,
}

impl World {
    pub fn new(s: &Scenario, route: &Route) -> Result<Self, RouteError> {
        let ego = s.ego().ok_or(RouteError::NoEgo)?;
        let obstacles = s
            .agents
            .iter()
            .filter(|a| a.agent_type != AgentType::EgoVehicle)
            .map(|a| Obstacle {
                id: a.id.clone(),
                center: a.center,
                heading: a.heading,
                velocity: a.velocity,
                length: a.length,
                width: a.width,
            })
            .collect();
        Ok(Self {
            obstacles,
            drivable: DrivableMap::new(s, route),
            ego_length: ego.length,
            ego_width: ego.width,
        })
    }

    pub fn ego_corners(&self, pose: &Pose) -> [Point; 4] {
        oriented_box_corners(Point::new(pose.x, pose.y), pose.heading, self.ego_length, self.ego_width)
    }

    /// Id of the first obstacle overlapping the ego at time `t`.
    pub fn collision_at(&self, pose: &Pose, t: f64) -> Option<&str> {
        let ego = self.ego_corners(pose);
        let reach = 0.5 * self.ego_length.hypot(self.ego_width);
        let c = Point::new(pose.x, pose.y);
        self.obstacles
            .iter()
            .find(|o| o.center_at(t).distance(c) <= reach + o.radius() && boxes_overlap(&ego, &o.corners_at(t)))
            .map(|o| o.id.as_str())
    }
}

/// Planner state in route coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct EgoState {
    pub s: f64,
    pub d: f64,
    pub v: f64,
}

/// Obstacle footprint in route coordinates at one time step.
#[derive(Debug, Clone, Copy)]
struct Projected {
    s_lo: f64,
    s_hi: f64,
    d_lo: f64,
    d_hi: f64,
    v_along: f64,
}

fn project_obstacles(route: &Route, world: &World, t: f64) -> Vec<Projected> {
    world
        .obstacles
        .iter()
        .map(|o| {
            let mut p = Projected {
                s_lo: f64::INFINITY,
                s_hi: f64::NEG_INFINITY,
                d_lo: f64::INFINITY,
                d_hi: f64::NEG_INFINITY,
                v_along: 0.0,
            };
            for c in o.corners_at(t) {
                let (s, d) = route.path.project(c);
                p.s_lo = p.s_lo.min(s);
                p.s_hi = p.s_hi.max(s);
                p.d_lo = p.d_lo.min(d);
                p.d_hi = p.d_hi.max(d);
            }
            let (s_mid, _) = route.path.project(o.center_at(t));
            p.v_along = o.velocity * (o.heading - route.path.heading_at(s_mid)).cos();
            p
        })
        .collect()
}

/// Quintic smoothstep and its derivative on [0, 1].
fn smoothstep(x: f64) -> (f64, f64) {
    let x = x.clamp(0.0, 1.0);
    let f = x * x * x * (10.0 + x * (-15.0 + 6.0 * x));
    let df = 30.0 * x * x * (1.0 - x) * (1.0 - x);
    (f, df)
}

fn rollout(
    route: &Route,
    world: &World,
    tracks: &[Vec<Projected>],
    start: EgoState,
    t0: f64,
    fraction: f64,
    offset: f64,
    cfg: &SimConfig,
) -> Proposal {
    let v_desired = fraction * route.speed_limit;
    let blend = (start.v * cfg.lateral_blend_s).max(cfg.min_blend_m);
    let half_band = 0.5 * world.ego_width + cfg.lateral_margin_m;
    let (band_lo, band_hi) = (offset - half_band, offset + half_band);
    let (mut s, mut v) = (start.s, start.v);
    let mut trajectory = Vec::with_capacity(tracks.len());
    for (k, track) in tracks.iter().enumerate() {
        let t = t0 + k as f64 * cfg.dt_s;
        let (f, df) = smoothstep((s - start.s) / blend);
        let d = start.d + (offset - start.d) * f;
        let slope = (offset - start.d) * df / blend;
        let front = s + 0.5 * world.ego_length;
        let leader = track
            .iter()
            .filter(|o| o.d_hi > band_lo && o.d_lo < band_hi && o.s_hi > s)
            .map(|o| (o.s_lo - front, v - o.v_along))
            .min_by(|a, b| a.0.total_cmp(&b.0));
        let a = cfg.idm.accel(v, v_desired, leader);
        trajectory.push(TrajectoryPoint {
            t,
            s,
            d,
            v,
            a,
            pose: route.pose(s, d, slope.atan()),
        });
        if k + 1 < tracks.len() {
            (s, v) = advance(s, v, a, cfg.dt_s);
        }
    }
    Proposal {
        speed_fraction: fraction,
        lateral_offset: offset,
        trajectory,
    }
}

/// Full proposal grid from `start` at time `t0`, speed-fraction major.
pub(crate) fn plan_from(
    route: &Route,
    world: &World,
    start: EgoState,
    t0: f64,
    cfg: &SimConfig,
) -> Result<Vec<Proposal>, RouteError> {
    let steps = cfg.horizon_steps().map_err(RouteError::Config)?;
    let tracks: Vec<Vec<Projected>> = (0..=steps)
        .map(|k| project_obstacles(route, world, t0 + k as f64 * cfg.dt_s))
        .collect();
    let mut out = Vec::with_capacity(cfg.speed_fractions.len() * cfg.lateral_offsets_m.len());
    for &fraction in &cfg.speed_fractions {
        for &offset in &cfg.lateral_offsets_m {
            out.push(rollout(route, world, &tracks, start, t0, fraction, offset, cfg));
        }
    }
    Ok(out)
}

/// IDM proposals from the scenario's initial ego state.
pub fn generate_proposals(s: &Scenario, route: &Route, cfg: &SimConfig) -> Result<Vec<Proposal>, RouteError> {
    cfg.validate().map_err(RouteError::Config)?;
    let ego = s.ego().ok_or(RouteError::NoEgo)?;
    let world = World::new(s, route)?;
    let (s0, d0) = route.path.project(ego.center);
    plan_from(route, &world, EgoState { s: s0, d: d0, v: ego.velocity }, 0.0, cfg)
}

#[derive(Debug, Clone, Copy)]
struct Assessment {
    progress: f64,
    comfort_margin: f64,
}

fn assess(p: &Proposal, world: &World, cfg: &SimConfig) -> Option<Assessment> {
    for q in &p.trajectory {
        if world.collision_at(&q.pose, q.t).is_some() || world.drivable.offroad(q.s, &world.ego_corners(&q.pose)) {
            return None;
        }
    }
    let max_accel = p.trajectory.iter().map(|q| q.a.abs()).fold(0.0, f64::max);
    let max_jerk = p
        .trajectory
        .windows(2)
        .map(|w| ((w[1].a - w[0].a) / cfg.dt_s).abs())
        .fold(0.0, f64::max);
    Some(Assessment {
        progress: p.progress(),
        comfort_margin: (cfg.score.max_accel - max_accel).min(cfg.score.max_jerk - max_jerk),
    })
}

/// Progress within this tolerance counts as a tie.
const PROGRESS_TIE_M: f64 = 1e-6;

/// Preference order: more progress, smaller |offset|, larger comfort
/// margin, higher speed fraction, then left before right.
fn better(a: (&Proposal, Assessment), b: (&Proposal, Assessment)) -> bool {
    let (pa, xa) = a;
    let (pb, xb) = b;
    if (xa.progress - xb.progress).abs() > PROGRESS_TIE_M {
        return xa.progress > xb.progress;
    }
    let order = pb
        .lateral_offset
        .abs()
        .total_cmp(&pa.lateral_offset.abs())
        .then(xa.comfort_margin.total_cmp(&xb.comfort_margin))
        .then(pa.speed_fraction.total_cmp(&pb.speed_fraction))
        .then(pa.lateral_offset.total_cmp(&pb.lateral_offset));
    order == Ordering::Greater
}

pub(crate) fn select_in(proposals: &[Proposal], world: &World, cfg: &SimConfig) -> Option<usize> {
    let mut best: Option<(usize, Assessment)> = None;
    for (i, p) in proposals.iter().enumerate() {
        let Some(x) = assess(p, world, cfg) else { continue };
        if best.is_none_or(|(j, y)| better((p, x), (&proposals[j], y))) {
            best = Some((i, x));
        }
    }
    best.map(|(i, _)| i)
}

/// Best collision-free, on-road proposal, or `None` when every proposal
/// collides with a constant-velocity agent or leaves the drivable area.
pub fn select_proposal(proposals: &[Proposal], s: &Scenario, route: &Route, cfg: &SimConfig) -> Option<Proposal> {
    let world = World::new(s, route).ok()?;
    select_in(proposals, &world, cfg).map(|i| proposals[i].clone())
}
