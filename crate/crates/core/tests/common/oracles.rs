//! Independent reference computations shared by the oracle suites and the
//! acceptance runner.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use scenaug::eval::EloEntry;
use scenaug::geometry::{ControlQuad, Point};

pub fn random_quad(rng: &mut ChaCha8Rng) -> ControlQuad {
    loop {
        let mut p = || Point::new(rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0));
        if let Ok(q) = ControlQuad::new(p(), p(), p(), p()) {
            if q.points()[0].distance(q.points()[3]) > 1.0 {
                return q;
            }
        }
    }
}

/// Direct evaluation of the cubic and its derivative from the control
/// points, independent of the library's own evaluation.
pub fn eval(q: &ControlQuad, t: f64) -> Point {
    let [p0, p1, p2, p3] = q.points();
    let u = 1.0 - t;
    let (a, b, c, d) = (u * u * u, 3.0 * u * u * t, 3.0 * u * t * t, t * t * t);
    Point::new(a * p0.x + b * p1.x + c * p2.x + d * p3.x, a * p0.y + b * p1.y + c * p2.y + d * p3.y)
}

pub fn speed(q: &ControlQuad, t: f64) -> f64 {
    let [p0, p1, p2, p3] = q.points();
    let u = 1.0 - t;
    let dx = 3.0 * u * u * (p1.x - p0.x) + 6.0 * u * t * (p2.x - p1.x) + 3.0 * t * t * (p3.x - p2.x);
    let dy = 3.0 * u * u * (p1.y - p0.y) + 6.0 * u * t * (p2.y - p1.y) + 3.0 * t * t * (p3.y - p2.y);
    dx.hypot(dy)
}

fn simpson(q: &ControlQuad, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (speed(q, lm), speed(q, rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if depth > 50 || (left + right - whole).abs() <= 15.0 * tol {
        return left + right + (left + right - whole) / 15.0;
    }
    simpson(q, a, m, fa, flm, fm, left, tol / 2.0, depth + 1) + simpson(q, m, b, fm, frm, fb, right, tol / 2.0, depth + 1)
}

pub fn simpson_length(q: &ControlQuad) -> f64 {
    let (fa, fm, fb) = (speed(q, 0.0), speed(q, 0.5), speed(q, 1.0));
    simpson(q, 0.0, 1.0, fa, fm, fb, (fa + 4.0 * fm + fb) / 6.0, 1e-10, 0)
}

/// Dense chord table: `(cumulative length, point)` at 200 001 samples.
pub fn dense_table(q: &ControlQuad) -> Vec<(f64, Point)> {
    const N: usize = 200_000;
    let mut out = Vec::with_capacity(N + 1);
    let mut prev = eval(q, 0.0);
    let mut acc = 0.0;
    out.push((0.0, prev));
    for i in 1..=N {
        let p = eval(q, i as f64 / N as f64);
        acc += prev.distance(p);
        out.push((acc, p));
        prev = p;
    }
    out
}

pub fn table_point(table: &[(f64, Point)], s: f64) -> Point {
    let i = table.partition_point(|(c, _)| *c < s).clamp(1, table.len() - 1);
    let ((c0, p0), (c1, p1)) = (table[i - 1], table[i]);
    let f = if c1 > c0 { (s - c0) / (c1 - c0) } else { 0.0 };
    p0.lerp(p1, f)
}

/// Every injection of the smaller side into the larger one, in
/// lexicographic order of the row-to-column sequence.
pub fn injections(n: usize, m: usize) -> Vec<Vec<usize>> {
    fn rec(row: usize, n: usize, m: usize, used: &mut Vec<bool>, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if row == n {
            out.push(cur.clone());
            return;
        }
        for j in 0..m {
            if !used[j] {
                used[j] = true;
                cur.push(j);
                rec(row + 1, n, m, used, cur, out);
                cur.pop();
                used[j] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(0, n, m, &mut vec![false; m], &mut Vec::new(), &mut out);
    out
}

/// Minimum over all injections with rows ≤ columns (transposing if needed).
pub fn brute_force(cost: &[Vec<f64>]) -> f64 {
    let (n, m) = (cost.len(), cost[0].len());
    if n <= m {
        injections(n, m)
            .iter()
            .map(|cols| cols.iter().enumerate().map(|(i, &j)| cost[i][j]).sum::<f64>())
            .fold(f64::INFINITY, f64::min)
    } else {
        let t: Vec<Vec<f64>> = (0..m).map(|j| (0..n).map(|i| cost[i][j]).collect()).collect();
        brute_force(&t)
    }
}

pub fn random_matrix(rng: &mut ChaCha8Rng, n: usize, m: usize, integer: bool) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            (0..m)
                .map(|_| if integer { f64::from(rng.random_range(0..6u8)) } else { rng.random_range(0.0..100.0) })
                .collect()
        })
        .collect()
}

pub fn entry(model: &str, rating: f64, minus: f64, plus: f64) -> EloEntry {
    EloEntry {
        model: model.into(),
        rating,
        ci_low: rating - minus,
        ci_high: rating + plus,
        votes: 0,
        rank: 0,
    }
}

/// Published leaderboard: (rating, minus, plus) per row in table order.
pub fn published_leaderboard() -> Vec<EloEntry> {
    [
        ("interPlan", 1042.0, 9.0, 11.0),
        ("GPT-4o OTM", 1039.0, 9.0, 11.0),
        ("Gemini-1.5-Flash vQA", 1025.0, 12.0, 13.0),
        ("Llama3.1-70B tQA", 1011.0, 16.0, 15.0),
        ("Gemini-1.5-Flash tQA", 1003.0, 15.0, 15.0),
        ("Gemini-1.5-Flash FC", 998.0, 10.0, 9.0),
        ("Llama3.1-70B FC", 984.0, 8.0, 10.0),
        ("Gemini-1.5-Flash OTM", 953.0, 12.0, 12.0),
        ("Llama3.1-70B OTM", 941.0, 13.0, 11.0),
    ]
    .into_iter()
    .map(|(m, r, lo, hi)| entry(m, r, lo, hi))
    .collect()
}

pub const PUBLISHED_RANKS: [usize; 9] = [1, 1, 1, 3, 3, 4, 5, 8, 8];
