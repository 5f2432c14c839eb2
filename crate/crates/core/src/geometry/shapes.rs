use super::Point;

/// Corners of a heading-aligned box, counter-clockwise starting rear-right.
pub fn oriented_box_corners(center: Point, heading: f64, length: f64, width: f64) -> [Point; 4] {
    let fwd = Point::from_heading(heading) * (0.5 * length);
    let left = Point::from_heading(heading).perp() * (0.5 * width);
    [
        center - fwd - left,
        center + fwd - left,
        center + fwd + left,
        center - fwd + left,
    ]
}

/// Separating-axis test for two convex quadrilaterals. Boxes that only
/// touch along an edge do not count as overlapping.
pub fn boxes_overlap(a: &[Point; 4], b: &[Point; 4]) -> bool {
    for poly in [a, b] {
        for i in 0..4 {
            let edge = poly[(i + 1) % 4] - poly[i];
            let axis = edge.perp();
            let (amin, amax) = project(a, axis);
            let (bmin, bmax) = project(b, axis);
            if amax <= bmin || bmax <= amin {
                return false;
            }
        }
    }
    true
}

fn project(poly: &[Point; 4], axis: Point) -> (f64, f64) {
    poly.iter()
        .map(|p| p.dot(axis))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        })
}

fn signed_area(poly: &[Point]) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| poly[i].cross(poly[(i + 1) % n]))
        .sum::<f64>()
        * 0.5
}

/// Absolute shoelace area.
pub fn polygon_area(poly: &[Point]) -> f64 {
    signed_area(poly).abs()
}

/// Even-odd ray cast; points exactly on an edge may go either way.
pub fn point_in_polygon(p: Point, poly: &[Point]) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

fn orientation(a: Point, b: Point, c: Point) -> f64 {
    (b - a).cross(c - a)
}

fn on_segment(a: Point, b: Point, p: Point) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let o1 = orientation(a, b, c);
    let o2 = orientation(a, b, d);
    let o3 = orientation(c, d, a);
    let o4 = orientation(c, d, b);
    if ((o1 > 0.0 && o2 < 0.0) || (o1 < 0.0 && o2 > 0.0))
        && ((o3 > 0.0 && o4 < 0.0) || (o3 < 0.0 && o4 > 0.0))
    {
        return true;
    }
    (o1 == 0.0 && on_segment(a, b, c))
        || (o2 == 0.0 && on_segment(a, b, d))
        || (o3 == 0.0 && on_segment(c, d, a))
        || (o4 == 0.0 && on_segment(c, d, b))
}

/// True when the implicitly closed ring has ≥ 3 distinct vertices, no
/// repeated consecutive vertex, non-zero area and no crossing edges.
pub fn polygon_is_simple(poly: &[Point]) -> bool {
    let n = poly.len();
    if n < 3 || !poly.iter().all(|p| p.is_finite()) {
        return false;
    }
    if (0..n).any(|i| poly[i] == poly[(i + 1) % n]) {
        return false;
    }
    if signed_area(poly) == 0.0 {
        return false;
    }
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        for j in (i + 1)..n {
            // adjacent edges share a vertex by construction
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            let (c, d) = (poly[j], poly[(j + 1) % n]);
            if segments_intersect(a, b, c, d) {
                return false;
            }
        }
    }
    true
}

fn ccw(poly: &[Point]) -> Vec<Point> {
    let mut v = poly.to_vec();
    if signed_area(&v) < 0.0 {
        v.reverse();
    }
    v
}

/// Intersection area of two convex polygons (Sutherland–Hodgman).
pub fn convex_intersection_area(a: &[Point], b: &[Point]) -> f64 {
    let clip = ccw(b);
    let mut output = ccw(a);
    for i in 0..clip.len() {
        if output.is_empty() {
            return 0.0;
        }
        let (c0, c1) = (clip[i], clip[(i + 1) % clip.len()]);
        let inside = |p: Point| orientation(c0, c1, p) >= 0.0;
        let input = std::mem::take(&mut output);
        for j in 0..input.len() {
            let cur = input[j];
            let prev = input[(j + input.len() - 1) % input.len()];
            let intersect = || {
                let d1 = orientation(c0, c1, prev);
                let d2 = orientation(c0, c1, cur);
                prev + (cur - prev) * (d1 / (d1 - d2))
            };
            match (inside(prev), inside(cur)) {
                (true, true) => output.push(cur),
                (true, false) => output.push(intersect()),
                (false, true) => {
                    output.push(intersect());
                    output.push(cur);
                }
                (false, false) => {}
            }
        }
    }
    if output.len() < 3 {
        0.0
    } else {
        polygon_area(&output)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn box_corners_follow_heading() {
        let c = oriented_box_corners(Point::new(0.0, 0.0), FRAC_PI_2, 4.0, 2.0);
        let ys: Vec<f64> = c.iter().map(|p| p.y).collect();
        assert!((ys.iter().cloned().fold(f64::MIN, f64::max) - 2.0).abs() < 1e-12);
        assert!((polygon_area(&c) - 8.0).abs() < 1e-12);
    }

    #[test]
    fn sat_overlap_and_touching() {
        let a = oriented_box_corners(Point::new(0.0, 0.0), 0.0, 4.0, 2.0);
        let b = oriented_box_corners(Point::new(3.0, 0.0), 0.3, 4.0, 2.0);
        let c = oriented_box_corners(Point::new(4.0, 0.0), 0.0, 4.0, 2.0);
        assert!(boxes_overlap(&a, &b));
        assert!(!boxes_overlap(&a, &c));
    }

    #[test]
    fn intersection_areas() {
        let a = oriented_box_corners(Point::new(0.0, 0.0), 0.0, 4.0, 2.0);
        assert!((convex_intersection_area(&a, &a) - 8.0).abs() < 1e-9);
        let b = oriented_box_corners(Point::new(2.0, 0.0), 0.0, 4.0, 2.0);
        assert!((convex_intersection_area(&a, &b) - 4.0).abs() < 1e-9);
        let far = oriented_box_corners(Point::new(20.0, 0.0), 0.0, 4.0, 2.0);
        assert_eq!(convex_intersection_area(&a, &far), 0.0);
    }

    #[test]
    fn simplicity_checks() {
        let square = [
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ];
        assert!(polygon_is_simple(&square));
        let bowtie = [
            Point::new(0.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(1.0, 0.0),
            Point::new(0.0, 1.0),
        ];
        assert!(!polygon_is_simple(&bowtie));
        let closed = [square[0], square[1], square[2], square[3], square[0]];
        assert!(!polygon_is_simple(&closed));
        assert!(point_in_polygon(Point::new(0.5, 0.5), &square));
        assert!(!point_in_polygon(Point::new(1.5, 0.5), &square));
    }
}
