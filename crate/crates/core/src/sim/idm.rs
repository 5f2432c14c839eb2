use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdmParams {
    pub a_max: f64,
    /// Comfortable deceleration, also the braking rate when no plan exists.
    pub b: f64,
    pub delta: f64,
    pub headway_s: f64,
    pub s_min: f64,
    /// Physical braking limit; IDM output is clamped to `[-max_decel, a_max]`.
    pub max_decel: f64,
}

impl Default for IdmParams {
    fn default() -> Self {
        Self {
            a_max: 1.5,
            b: 2.0,
            delta: 4.0,
            headway_s: 1.5,
            s_min: 2.0,
            max_decel: 8.0,
        }
    }
}

impl IdmParams {
    pub fn validate(&self) -> Result<(), String> {
        let all_positive = [self.a_max, self.b, self.delta, self.max_decel]
            .iter()
            .all(|x| *x > 0.0 && x.is_finite());
        if !all_positive || !(self.headway_s >= 0.0) || !(self.s_min >= 0.0) {
            return Err("IDM parameters must be positive and finite".into());
        }
        Ok(())
    }

    /// Acceleration at speed `v` towards desired speed `v0 > 0`. `leader` is
    /// `(gap, approach rate)`; `None` means an open road. The dynamic part of
    /// the desired gap is floored at zero so a receding leader never brakes.
    pub fn accel(&self, v: f64, v0: f64, leader: Option<(f64, f64)>) -> f64 {
        let free = 1.0 - (v / v0).powf(self.delta);
        let interaction = match leader {
            None => 0.0,
            Some((gap, _)) if gap <= 0.0 => return -self.max_decel,
            Some((gap, dv)) => {
                let dynamic = v * self.headway_s + v * dv / (2.0 * (self.a_max * self.b).sqrt());
                let s_star = self.s_min + dynamic.max(0.0);
                (s_star / gap).powi(2)
            }
        };
        (self.a_max * (free - interaction)).clamp(-self.max_decel, self.a_max)
    }
}

/// Constant-acceleration update over `dt` that stops at zero speed instead
/// of reversing. Returns the new (distance, speed).
pub(crate) fn advance(s: f64, v: f64, a: f64, dt: f64) -> (f64, f64) {
    let v_next = v + a * dt;
    if v_next < 0.0 {
        let t_stop = if a < 0.0 { -v / a } else { 0.0 };
        (s + v * t_stop + 0.5 * a * t_stop * t_stop, 0.0)
    } else {
        (s + v * dt + 0.5 * a * dt * dt, v_next)
    }
}

/// Arc position after `steps` open-road IDM steps from `(s0, v)`.
pub(crate) fn free_road_end(p: &IdmParams, s0: f64, v: f64, v0: f64, dt: f64, steps: usize) -> f64 {
    let (mut s, mut v) = (s0, v);
    for _ in 0..steps {
        (s, v) = advance(s, v, p.accel(v, v0, None), dt);
    }
    s
}

/// Distance covered by `steps` open-road IDM steps from speed `v`.
pub fn free_road_distance(p: &IdmParams, v: f64, v0: f64, dt: f64, steps: usize) -> f64 {
    free_road_end(p, 0.0, v, v0, dt, steps)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equilibrium_and_limits() {
        let p = IdmParams::default();
        assert_eq!(p.accel(0.0, 10.0, None), 1.5);
        assert_eq!(p.accel(10.0, 10.0, None), 0.0);
        assert_eq!(p.accel(5.0, 10.0, Some((-1.0, 0.0))), -8.0);
        assert_eq!(p.accel(0.0, 10.0, Some((2.0, 0.0))), 0.0);
        assert!(p.accel(10.0, 10.0, Some((5.0, 10.0))) == -8.0);
    }

    #[test]
    fn receding_leader_never_brakes_harder_than_free_road() {
        let p = IdmParams::default();
        let far = p.accel(10.0, 15.0, Some((50.0, -30.0)));
        assert!(far <= p.accel(10.0, 15.0, None));
        assert!(far > 0.0);
    }

    #[test]
    fn advance_stops_without_reversing() {
        let (s, v) = advance(0.0, 1.0, -8.0, 0.5);
        assert_eq!(v, 0.0);
        assert!((s - 1.0 / 16.0).abs() < 1e-12);
    }
}
