use super::{normalize_angle, ControlQuad, GeometryError, Point};

/// Total length of a point sequence.
pub fn polyline_length(points: &[Point]) -> f64 {
    points.windows(2).map(|w| w[0].distance(w[1])).sum()
}

/// Polyline with cached cumulative arc length and Frenet-style queries.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    points: Vec<Point>,
    cumulative: Vec<f64>,
}

impl Polyline {
    pub fn new(points: Vec<Point>) -> Result<Self, GeometryError> {
        if points.len() < 2 {
            return Err(GeometryError::Degenerate(format!(
                "polyline needs at least 2 points, got {}",
                points.len()
            )));
        }
        let mut cumulative = Vec::with_capacity(points.len());
        cumulative.push(0.0);
        for w in points.windows(2) {
            let d = w[0].distance(w[1]);
            if !(d > 0.0) {
                return Err(GeometryError::Degenerate(
                    "polyline has a zero-length segment".into(),
                ));
            }
            cumulative.push(cumulative.last().unwrap() + d);
        }
        Ok(Self { points, cumulative })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn length(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    fn segment_for(&self, s: f64) -> usize {
        match self.cumulative.binary_search_by(|c| c.total_cmp(&s)) {
            Ok(i) => i.min(self.points.len() - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(self.points.len() - 2),
        }
    }

    /// Point at arc distance `s`; extrapolates linearly past either end.
    pub fn point_at(&self, s: f64) -> Point {
        let i = self.segment_for(s);
        let (a, b) = (self.points[i], self.points[i + 1]);
        let seg = self.cumulative[i + 1] - self.cumulative[i];
        a + (b - a) * ((s - self.cumulative[i]) / seg)
    }

    pub fn heading_at(&self, s: f64) -> f64 {
        let i = self.segment_for(s);
        let d = self.points[i + 1] - self.points[i];
        normalize_angle(d.y.atan2(d.x))
    }

    /// Projects `p` onto the polyline, returning (arc distance, signed
    /// lateral offset, left positive). Beyond the ends the first/last
    /// segment is extended.
    pub fn project(&self, p: Point) -> (f64, f64) {
        let last = self.points.len() - 2;
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for i in 0..=last {
            let (a, b) = (self.points[i], self.points[i + 1]);
            let ab = b - a;
            let seg = ab.norm();
            let mut f = (p - a).dot(ab) / (seg * seg);
            if i > 0 {
                f = f.max(0.0);
            }
            if i < last {
                f = f.min(1.0);
            }
            let foot = a + ab * f;
            let dist = p.distance(foot);
            if dist < best.0 {
                let lateral = ab.cross(p - a) / seg;
                best = (dist, self.cumulative[i] + f * seg, lateral);
            }
        }
        (best.1, best.2)
    }
}

/// Resamples a polyline at equal arc-length `spacing`, keeping the exact
/// final point. Samples that land on an input vertex reproduce it exactly.
pub fn resample_polyline(points: &[Point], spacing: f64) -> Result<Vec<Point>, GeometryError> {
    if !(spacing > 0.0) {
        return Err(GeometryError::Degenerate(format!(
            "non-positive resampling spacing {spacing}"
        )));
    }
    let line = Polyline::new(points.to_vec())?;
    let total = line.length();
    const SNAP: f64 = 1e-9;
    let mut out = Vec::new();
    let mut k = 0usize;
    loop {
        let d = k as f64 * spacing;
        if d >= total - SNAP {
            break;
        }
        let i = line.segment_for(d);
        let p = if (d - line.cumulative[i]).abs() <= SNAP {
            line.points[i]
        } else if (line.cumulative[i + 1] - d).abs() <= SNAP {
            line.points[i + 1]
        } else {
            line.point_at(d)
        };
        out.push(p);
        k += 1;
    }
    out.push(*points.last().unwrap());
    Ok(out)
}

/// Least-squares cubic fit together with its worst-case deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BezierFit {
    pub quad: ControlQuad,
    /// Largest distance from an input point to the fitted curve.
    pub max_deviation: f64,
}

const FIT_ITERATIONS: usize = 400;

/// Fits a cubic Bézier to `points` with both endpoints pinned.
///
/// From each of three initial parameterisations (chord-length, uniform,
/// centripetal) alternates the linear least-squares solve for the two inner
/// control points with Newton re-projection of every sample onto the
/// current curve; the fit with the smallest deviation wins, earlier starts
/// winning ties.
pub fn fit_bezier(points: &[Point]) -> Result<BezierFit, GeometryError> {
    if points.len() < 4 {
        return Err(GeometryError::Degenerate(format!(
            "fit needs at least 4 points, got {}",
            points.len()
        )));
    }
    let total = polyline_length(points);
    if !(total > 0.0) {
        return Err(GeometryError::Degenerate("zero-length point sequence".into()));
    }
    let n = points.len() - 1;
    let starts = [
        cumulative_params(points, |d| d),
        (0..=n).map(|i| i as f64 / n as f64).collect(),
        cumulative_params(points, f64::sqrt),
    ];
    let mut best: Option<BezierFit> = None;
    for params in starts {
        let fit = refine_fit(points, params, total);
        if best.as_ref().is_none_or(|b| fit.max_deviation < b.max_deviation) {
            best = Some(fit);
        }
        if best.as_ref().is_some_and(|b| b.max_deviation < 1e-12 * total.max(1.0)) {
            break;
        }
    }
    let fit = best.expect("at least one start");
    fit.quad.validate()?;
    Ok(fit)
}

/// Normalised cumulative sums of `weight(segment length)`; falls back to
/// uniform spacing when every weight is zero.
fn cumulative_params(points: &[Point], weight: impl Fn(f64) -> f64) -> Vec<f64> {
    let mut ts = vec![0.0];
    let mut acc = 0.0;
    for w in points.windows(2) {
        acc += weight(w[0].distance(w[1]));
        ts.push(acc);
    }
    if acc > 0.0 {
        ts.iter_mut().for_each(|t| *t /= acc);
    } else {
        let n = ts.len() - 1;
        ts.iter_mut().enumerate().for_each(|(i, t)| *t = i as f64 / n as f64);
    }
    ts
}

fn refine_fit(points: &[Point], mut params: Vec<f64>, total: f64) -> BezierFit {
    let first = points[0];
    let last = *points.last().expect("non-empty");
    let mut quad = solve_inner(points, &params, first, last);
    let mut error = max_residual(&quad, points, &params);
    for _ in 0..FIT_ITERATIONS {
        if error < 1e-12 * total.max(1.0) {
            break;
        }
        for (t, p) in params.iter_mut().zip(points).skip(1).take(points.len() - 2) {
            *t = newton_project(&quad, *p, *t);
        }
        let next = solve_inner(points, &params, first, last);
        let next_error = max_residual(&next, points, &params);
        quad = next;
        let stalled = (error - next_error).abs() < 1e-15 * total.max(1.0);
        error = next_error;
        if stalled {
            break;
        }
    }
    let max_deviation = points
        .iter()
        .zip(&params)
        .map(|(p, t)| closest_distance(&quad, *p, *t))
        .fold(0.0, f64::max);
    BezierFit { quad, max_deviation }
}

fn solve_inner(points: &[Point], params: &[f64], p0: Point, p3: Point) -> ControlQuad {
    let (mut a11, mut a12, mut a22) = (0.0, 0.0, 0.0);
    let (mut r1, mut r2) = (Point::default(), Point::default());
    for (q, &t) in points.iter().zip(params) {
        let u = 1.0 - t;
        let b0 = u * u * u;
        let b1 = 3.0 * u * u * t;
        let b2 = 3.0 * u * t * t;
        let b3 = t * t * t;
        let rest = *q - p0 * b0 - p3 * b3;
        a11 += b1 * b1;
        a12 += b1 * b2;
        a22 += b2 * b2;
        r1 = r1 + rest * b1;
        r2 = r2 + rest * b2;
    }
    let det = a11 * a22 - a12 * a12;
    if det.abs() <= 1e-12 * (a11 * a22).max(1e-300) {
        return ControlQuad {
            p0,
            p1: p0.lerp(p3, 1.0 / 3.0),
            p2: p0.lerp(p3, 2.0 / 3.0),
            p3,
        };
    }
    let p1 = (r1 * a22 - r2 * a12) * (1.0 / det);
    let p2 = (r2 * a11 - r1 * a12) * (1.0 / det);
    ControlQuad { p0, p1, p2, p3 }
}

fn max_residual(quad: &ControlQuad, points: &[Point], params: &[f64]) -> f64 {
    points
        .iter()
        .zip(params)
        .map(|(p, &t)| quad.eval(t).distance(*p))
        .fold(0.0, f64::max)
}

fn newton_project(quad: &ControlQuad, p: Point, mut t: f64) -> f64 {
    for _ in 0..8 {
        let diff = quad.eval(t) - p;
        let d1 = quad.derivative(t);
        let d2 = quad.second_derivative(t);
        let num = diff.dot(d1);
        let den = d1.dot(d1) + diff.dot(d2);
        if den.abs() < 1e-300 {
            break;
        }
        let next = (t - num / den).clamp(0.0, 1.0);
        if (next - t).abs() < 1e-15 {
            t = next;
            break;
        }
        t = next;
    }
    t
}

fn closest_distance(quad: &ControlQuad, p: Point, guess: f64) -> f64 {
    let t = newton_project(quad, p, guess);
    quad.eval(t)
        .distance(p)
        .min(quad.p0.distance(p))
        .min(quad.p3.distance(p))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(v: &[(f64, f64)]) -> Vec<Point> {
        v.iter().map(|&(x, y)| Point::new(x, y)).collect()
    }

    #[test]
    fn straight_segment_resampled_at_five() {
        let out = resample_polyline(&pts(&[(0.0, 0.0), (12.0, 0.0)]), 5.0).unwrap();
        assert_eq!(out, pts(&[(0.0, 0.0), (5.0, 0.0), (10.0, 0.0), (12.0, 0.0)]));
    }

    #[test]
    fn resampling_is_a_fixpoint_on_five_meter_input() {
        let input = pts(&[(0.0, 0.0), (5.0, 0.0), (10.0, 0.0), (15.0, 0.0)]);
        assert_eq!(resample_polyline(&input, 5.0).unwrap(), input);
    }

    #[test]
    fn l_shape_keeps_corner() {
        let out = resample_polyline(&pts(&[(0.0, 0.0), (10.0, 0.0), (10.0, 10.0)]), 5.0).unwrap();
        assert_eq!(
            out,
            pts(&[(0.0, 0.0), (5.0, 0.0), (10.0, 0.0), (10.0, 5.0), (10.0, 10.0)])
        );
    }

    #[test]
    fn zero_length_input_is_degenerate() {
        assert!(resample_polyline(&pts(&[(1.0, 1.0), (1.0, 1.0)]), 5.0).is_err());
        assert!(resample_polyline(&pts(&[(1.0, 1.0)]), 5.0).is_err());
    }

    #[test]
    fn fit_needs_four_points() {
        assert!(matches!(
            fit_bezier(&pts(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)])),
            Err(GeometryError::Degenerate(_))
        ));
    }

    #[test]
    fn collinear_fit_has_zero_deviation() {
        let input: Vec<Point> = (0..=8).map(|i| Point::new(i as f64 * 5.0, 2.0)).collect();
        let fit = fit_bezier(&input).unwrap();
        assert!(fit.max_deviation < 1e-9);
        for p in fit.quad.points() {
            assert!((p.y - 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn projection_signs_left_positive() {
        let line = Polyline::new(pts(&[(0.0, 0.0), (10.0, 0.0), (20.0, 0.0)])).unwrap();
        let (s, d) = line.project(Point::new(12.0, 1.5));
        assert!((s - 12.0).abs() < 1e-12 && (d - 1.5).abs() < 1e-12);
        let (s, d) = line.project(Point::new(25.0, -2.0));
        assert!((s - 25.0).abs() < 1e-12 && (d + 2.0).abs() < 1e-12);
        assert_eq!(line.point_at(-5.0), Point::new(-5.0, 0.0));
    }
}
