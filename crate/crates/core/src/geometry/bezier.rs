use super::{normalize_angle, GeometryError, Point, ARC_LENGTH_GRACE_M};
use crate::geometry::LaneAnchor;
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

/// Four control points of a cubic Bézier curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlQuad {
    pub p0: Point,
    pub p1: Point,
    pub p2: Point,
    pub p3: Point,
}

impl ControlQuad {
    pub fn new(p0: Point, p1: Point, p2: Point, p3: Point) -> Result<Self, GeometryError> {
        let quad = Self { p0, p1, p2, p3 };
        quad.validate()?;
        Ok(quad)
    }

    /// Straight segment with control points at thirds.
    pub fn line(from: Point, to: Point) -> Result<Self, GeometryError> {
        Self::new(from, from.lerp(to, 1.0 / 3.0), from.lerp(to, 2.0 / 3.0), to)
    }

    pub fn points(&self) -> [Point; 4] {
        [self.p0, self.p1, self.p2, self.p3]
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if !self.points().iter().all(|p| p.is_finite()) {
            return Err(GeometryError::Degenerate("non-finite control point".into()));
        }
        if self.points().iter().all(|p| *p == self.p0) {
            return Err(GeometryError::Degenerate(
                "all four control points coincide".into(),
            ));
        }
        Ok(())
    }

    /// Length of the control polygon, an upper bound on the arc length.
    pub fn hull_length(&self) -> f64 {
        self.p0.distance(self.p1) + self.p1.distance(self.p2) + self.p2.distance(self.p3)
    }

    /// Unit direction when the curve traverses the chord `p0 → p3` without
    /// turning back, i.e. the inner points lie on it in order. Anchors on
    /// such curves are computed along the chord, which is exact.
    pub(crate) fn straight_direction(&self) -> Option<Point> {
        let chord = self.p3 - self.p0;
        let len = chord.norm();
        if len == 0.0 {
            return None;
        }
        let dir = chord * (1.0 / len);
        let along = |p: Point| (p - self.p0).dot(dir);
        let off = |p: Point| (p - self.p0).cross(dir).abs();
        let (a1, a2) = (along(self.p1), along(self.p2));
        let tol = 1e-12 * len;
        (off(self.p1) <= tol && off(self.p2) <= tol && 0.0 <= a1 && a1 <= a2 && a2 <= len).then_some(dir)
    }

    pub(crate) fn eval(&self, t: f64) -> Point {
        let u = 1.0 - t;
        let b0 = u * u * u;
        let b1 = 3.0 * u * u * t;
        let b2 = 3.0 * u * t * t;
        let b3 = t * t * t;
        Point::new(
            b0 * self.p0.x + b1 * self.p1.x + b2 * self.p2.x + b3 * self.p3.x,
            b0 * self.p0.y + b1 * self.p1.y + b2 * self.p2.y + b3 * self.p3.y,
        )
    }

    pub(crate) fn derivative(&self, t: f64) -> Point {
        let u = 1.0 - t;
        let d0 = self.p1 - self.p0;
        let d1 = self.p2 - self.p1;
        let d2 = self.p3 - self.p2;
        (d0 * (u * u) + d1 * (2.0 * u * t) + d2 * (t * t)) * 3.0
    }

    pub(crate) fn second_derivative(&self, t: f64) -> Point {
        let a = self.p2 - self.p1 * 2.0 + self.p0;
        let b = self.p3 - self.p2 * 2.0 + self.p1;
        (a * (1.0 - t) + b * t) * 6.0
    }
}

fn check_unit(t: f64) -> Result<(), GeometryError> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(GeometryError::Domain(t))
    }
}

/// Position on the curve at parameter `t` (Bernstein form).
pub fn bezier_point(c: &ControlQuad, t: f64) -> Result<Point, GeometryError> {
    check_unit(t)?;
    Ok(c.eval(t))
}

pub fn bezier_derivative(c: &ControlQuad, t: f64) -> Result<Point, GeometryError> {
    check_unit(t)?;
    Ok(c.derivative(t))
}

/// Tangent direction at `t`, normalized to (−π, π].
///
/// Where the derivative vanishes (coincident neighbouring control points,
/// cusps) the parameter is nudged by 1e-6 toward the interior.
pub fn bezier_heading(c: &ControlQuad, t: f64) -> Result<f64, GeometryError> {
    check_unit(t)?;
    let eps = 1e-12 * c.hull_length().max(1e-300);
    let mut d = c.derivative(t);
    if d.norm() <= eps {
        let step = if t < 0.5 { 1e-6 } else { -1e-6 };
        d = c.derivative(t + step);
    }
    if d.norm() <= eps * 1e-12 || d.norm() == 0.0 {
        return Err(GeometryError::Degenerate(format!(
            "curve derivative vanishes around t = {t}"
        )));
    }
    Ok(normalize_angle(d.y.atan2(d.x)))
}

/// 16-point Gauss–Legendre nodes and weights on [−1, 1].
fn gauss_legendre_16() -> &'static [(f64, f64); 16] {
    static NODES: OnceLock<[(f64, f64); 16]> = OnceLock::new();
    NODES.get_or_init(|| {
        const N: usize = 16;
        let mut out = [(0.0, 0.0); N];
        for (i, slot) in out.iter_mut().enumerate() {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (N as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=N {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                dp = N as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            *slot = (x, 2.0 / ((1.0 - x * x) * dp * dp));
        }
        out
    })
}

fn speed_integral(c: &ControlQuad, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    gauss_legendre_16()
        .iter()
        .map(|&(x, w)| w * c.derivative(mid + half * x).norm())
        .sum::<f64>()
        * half
}

/// Cumulative arc-length table over adaptively refined parameter intervals,
/// each integrated with 16-point Gauss–Legendre quadrature.
#[derive(Debug, Clone)]
pub struct ArcLengthTable {
    quad: ControlQuad,
    breaks: Vec<f64>,
    cumulative: Vec<f64>,
}

const INITIAL_SEGMENTS: usize = 8;
const MAX_DEPTH: u32 = 40;

impl ArcLengthTable {
    pub fn new(quad: &ControlQuad) -> Self {
        let tol = 1e-13 * quad.hull_length().max(1e-12);
        let mut breaks = vec![0.0];
        let mut cumulative = vec![0.0];
        for i in 0..INITIAL_SEGMENTS {
            let a = i as f64 / INITIAL_SEGMENTS as f64;
            let b = (i + 1) as f64 / INITIAL_SEGMENTS as f64;
            let whole = speed_integral(quad, a, b);
            refine(quad, a, b, whole, tol, 0, &mut breaks, &mut cumulative);
        }
        *breaks.last_mut().expect("non-empty") = 1.0;
        Self {
            quad: *quad,
            breaks,
            cumulative,
        }
    }

    pub fn total(&self) -> f64 {
        *self.cumulative.last().expect("non-empty")
    }

    /// Arc length from the start of the curve up to parameter `t`.
    pub fn length_at(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, 1.0);
        let idx = match self.breaks.binary_search_by(|b| b.total_cmp(&t)) {
            Ok(i) => return self.cumulative[i],
            Err(i) => i - 1,
        };
        self.cumulative[idx] + speed_integral(&self.quad, self.breaks[idx], t)
    }

    /// Parameter whose arc length from the start equals `s`, by bisection
    /// inside the bracketing table interval.
    pub fn parameter_at(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        if s >= self.total() {
            return 1.0;
        }
        let idx = match self.cumulative.binary_search_by(|c| c.total_cmp(&s)) {
            Ok(i) => return self.breaks[i],
            Err(i) => i - 1,
        };
        let (mut lo, mut hi) = (self.breaks[idx], self.breaks[idx + 1]);
        let base = self.cumulative[idx];
        let start = lo;
        let target_tol = 1e-11 * self.total().max(1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let err = base + speed_integral(&self.quad, start, mid) - s;
            if err.abs() <= target_tol {
                return mid;
            }
            if err < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

#[allow(clippy::too_many_arguments)]
fn refine(
    quad: &ControlQuad,
    a: f64,
    b: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    breaks: &mut Vec<f64>,
    cumulative: &mut Vec<f64>,
) {
    let m = 0.5 * (a + b);
    let left = speed_integral(quad, a, m);
    let right = speed_integral(quad, m, b);
    if depth >= MAX_DEPTH || (left + right - whole).abs() <= tol {
        let last = *cumulative.last().expect("non-empty");
        breaks.push(b);
        cumulative.push(last + left + right);
    } else {
        refine(quad, a, m, left, tol, depth + 1, breaks, cumulative);
        refine(quad, m, b, right, tol, depth + 1, breaks, cumulative);
    }
}

/// Total arc length of the curve.
pub fn arc_length(c: &ControlQuad) -> f64 {
    ArcLengthTable::new(c).total()
}

/// Anchor at arc distance `s` from the curve start.
///
/// Distances up to 0.5 m beyond either end are clamped and flagged;
/// anything further is a [`GeometryError::Range`].
pub fn point_at_arc_length(c: &ControlQuad, s: f64) -> Result<LaneAnchor, GeometryError> {
    let table = ArcLengthTable::new(c);
    anchor_from_table(&table, s)
}

pub(crate) fn anchor_from_table(table: &ArcLengthTable, s: f64) -> Result<LaneAnchor, GeometryError> {
    let length = table.total();
    if !s.is_finite() || s < -ARC_LENGTH_GRACE_M || s > length + ARC_LENGTH_GRACE_M {
        return Err(GeometryError::Range {
            distance: s,
            length,
        });
    }
    let clamped = s < 0.0 || s > length;
    let s = s.clamp(0.0, length);
    if let Some(dir) = table.quad.straight_direction() {
        return Ok(LaneAnchor {
            position: table.quad.p0 + dir * s.min(table.quad.p0.distance(table.quad.p3)),
            heading: normalize_angle(dir.y.atan2(dir.x)),
            arc_length_from_start: s,
            clamped,
        });
    }
    let t = table.parameter_at(s);
    let position = table.quad.eval(t);
    let heading = bezier_heading(&table.quad, t)?;
    Ok(LaneAnchor {
        position,
        heading,
        arc_length_from_start: s,
        clamped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn quad(pts: [(f64, f64); 4]) -> ControlQuad {
        ControlQuad::new(
            Point::new(pts[0].0, pts[0].1),
            Point::new(pts[1].0, pts[1].1),
            Point::new(pts[2].0, pts[2].1),
            Point::new(pts[3].0, pts[3].1),
        )
        .unwrap()
    }

    #[test]
    fn gauss_legendre_integrates_degree_31_exactly() {
        let sum: f64 = gauss_legendre_16().iter().map(|&(x, w)| w * x.powi(30)).sum();
        assert!((sum - 2.0 / 31.0).abs() < 1e-14);
        let wsum: f64 = gauss_legendre_16().iter().map(|&(_, w)| w).sum();
        assert!((wsum - 2.0).abs() < 1e-14);
    }

    #[test]
    fn endpoints_and_linear_precision() {
        let c = quad([(0.0, 0.0), (10.0, 0.0), (20.0, 0.0), (30.0, 0.0)]);
        assert_eq!(bezier_point(&c, 0.0).unwrap(), c.p0);
        assert_eq!(bezier_point(&c, 1.0).unwrap(), c.p3);
        assert_eq!(bezier_point(&c, 0.5).unwrap(), Point::new(15.0, 0.0));
    }

    #[test]
    fn arch_midpoint_matches_de_casteljau() {
        // de Casteljau at 1/2: (0,5),(5,10),(10,5) -> (2.5,7.5),(7.5,7.5) -> (5,7.5)
        let c = quad([(0.0, 0.0), (0.0, 10.0), (10.0, 10.0), (10.0, 0.0)]);
        let p = bezier_point(&c, 0.5).unwrap();
        assert!((p.x - 5.0).abs() < 1e-12 && (p.y - 7.5).abs() < 1e-12);
    }

    #[test]
    fn parameter_outside_unit_interval_is_domain_error() {
        let c = quad([(0.0, 0.0), (10.0, 0.0), (20.0, 0.0), (30.0, 0.0)]);
        assert_eq!(bezier_point(&c, 1.5), Err(GeometryError::Domain(1.5)));
        assert!(bezier_heading(&c, -0.1).is_err());
    }

    #[test]
    fn headings_of_axis_aligned_curves() {
        let east = quad([(0.0, 0.0), (10.0, 0.0), (20.0, 0.0), (30.0, 0.0)]);
        for t in [0.0, 0.3, 1.0] {
            assert_eq!(bezier_heading(&east, t).unwrap(), 0.0);
        }
        let north = quad([(0.0, 0.0), (0.0, 10.0), (0.0, 20.0), (0.0, 30.0)]);
        assert!((bezier_heading(&north, 0.5).unwrap() - FRAC_PI_2).abs() < 1e-12);
        let arch = quad([(0.0, 0.0), (0.0, 10.0), (10.0, 10.0), (10.0, 0.0)]);
        assert!(bezier_heading(&arch, 0.5).unwrap().abs() < 1e-12);
    }

    #[test]
    fn heading_steps_off_vanishing_derivative() {
        let c = quad([(0.0, 0.0), (0.0, 0.0), (30.0, 0.0), (30.0, 0.0)]);
        assert_eq!(bezier_heading(&c, 0.0).unwrap(), 0.0);
        assert_eq!(bezier_heading(&c, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn coincident_control_points_rejected() {
        let p = Point::new(1.0, 1.0);
        assert!(matches!(
            ControlQuad::new(p, p, p, p),
            Err(GeometryError::Degenerate(_))
        ));
    }

    #[test]
    fn straight_lengths() {
        let c = quad([(0.0, 0.0), (10.0, 0.0), (20.0, 0.0), (30.0, 0.0)]);
        assert!((arc_length(&c) - 30.0).abs() < 1e-9);
        let d = quad([(0.0, 0.0), (0.0, 0.0), (30.0, 0.0), (30.0, 0.0)]);
        assert!((arc_length(&d) - 30.0).abs() < 1e-9);
    }

    #[test]
    fn anchor_on_straight_lane() {
        let c = quad([(0.0, 0.0), (10.0, 0.0), (20.0, 0.0), (30.0, 0.0)]);
        let a = point_at_arc_length(&c, 21.4).unwrap();
        assert!((a.position.x - 21.4).abs() < 1e-9);
        assert_eq!(a.position.y, 0.0);
        assert_eq!(a.heading, 0.0);
        assert!(!a.clamped);
        let start = point_at_arc_length(&c, 0.0).unwrap();
        assert_eq!(start.position, c.p0);
    }

    #[test]
    fn grace_clamping_and_range_errors() {
        let c = quad([(0.0, 0.0), (10.0, 0.0), (20.0, 0.0), (30.0, 0.0)]);
        let a = point_at_arc_length(&c, 30.4).unwrap();
        assert!(a.clamped);
        assert_eq!(a.position, c.p3);
        let b = point_at_arc_length(&c, -0.3).unwrap();
        assert!(b.clamped && b.arc_length_from_start == 0.0);
        assert!(matches!(
            point_at_arc_length(&c, 31.0),
            Err(GeometryError::Range { .. })
        ));
        assert!(point_at_arc_length(&c, f64::NAN).is_err());
    }
}
