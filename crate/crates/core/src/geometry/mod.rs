//! Lane geometry kernel.
//!
//! Cubic Bézier evaluation with arc-length parameterization, polyline
//! resampling and least-squares Bézier fitting, plus the planar shape
//! helpers (oriented boxes, polygons) shared by the renderer, the error
//! taxonomy and the simulator.

mod bezier;
mod polyline;
mod shapes;
mod tool;

pub use bezier::{
    arc_length, bezier_derivative, bezier_heading, bezier_point, point_at_arc_length,
    ArcLengthTable, ControlQuad,
};
pub use polyline::{fit_bezier, polyline_length, resample_polyline, BezierFit, Polyline};
pub use shapes::{
    convex_intersection_area, oriented_box_corners, point_in_polygon, polygon_area,
    polygon_is_simple, boxes_overlap,
};
pub use tool::{lane_point_tool, offset_point, LaneAnchor};

use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use std::ops::{Add, Mul, Neg, Sub};
use thiserror::Error;

/// Grace distance beyond either end of a curve inside which an arc-length
/// query is clamped instead of rejected.
pub const ARC_LENGTH_GRACE_M: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("curve parameter t = {0} outside [0, 1]")]
    Domain(f64),
    #[error("degenerate geometry: {0}")]
    Degenerate(String),
    #[error("arc distance {distance:.3} m outside curve of length {length:.3} m")]
    Range { distance: f64, length: f64 },
    #[error("unknown lane or lane connector id {0:?}")]
    UnknownId(String),
}

/// A point (or vector) in the ego-centric metric frame: x east, y north.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn distance(self, other: Point) -> f64 {
        (self - other).norm()
    }

    /// Unit vector pointing along `heading`.
    pub fn from_heading(heading: f64) -> Self {
        Self::new(heading.cos(), heading.sin())
    }

    /// Rotated by +90 degrees (left of the direction of travel).
    pub fn perp(self) -> Self {
        Self::new(-self.y, self.x)
    }

    pub fn lerp(self, other: Point, f: f64) -> Self {
        self + (other - self) * f
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, rhs: f64) -> Point {
        Point::new(self.x * rhs, self.y * rhs)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

/// Wraps an angle into (−π, π]. Angles already in range are returned
/// bit-for-bit.
pub fn normalize_angle(angle: f64) -> f64 {
    if angle > -PI && angle <= PI {
        return angle;
    }
    let r = angle.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Smallest absolute difference between two headings, in [0, π].
pub fn angle_difference(a: f64, b: f64) -> f64 {
    normalize_angle(a - b).abs()
}
