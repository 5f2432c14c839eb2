use super::EvalError;

/// Row-to-column pairs of a minimum-cost matching and its total cost.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub pairs: Vec<(usize, usize)>,
    pub cost: f64,
}

/// Minimum-cost matching of size `min(n, m)`.
///
/// Among optimal matchings the lexicographically smallest column sequence
/// (by row order) is returned.
pub fn hungarian(cost: &[Vec<f64>]) -> Result<Assignment, EvalError> {
    let n = cost.len();
    let m = cost.first().map_or(0, Vec::len);
    if n == 0 || m == 0 {
        return Err(EvalError::Shape("empty cost matrix".into()));
    }
    if cost.iter().any(|r| r.len() != m) {
        return Err(EvalError::Shape("ragged cost matrix".into()));
    }
    if cost.iter().flatten().any(|c| !c.is_finite() || *c < 0.0) {
        return Err(EvalError::InvalidInput("costs must be finite and non-negative".into()));
    }
    let size = n.max(m);
    // Dummy rows/columns cost nothing, so they never influence the choice.
    let sq: Vec<Vec<f64>> = (0..size)
        .map(|i| (0..size).map(|j| if i < n && j < m { cost[i][j] } else { 0.0 }).collect())
        .collect();
    let (u, v) = potentials(&sq);
    let scale = sq.iter().flatten().fold(1.0f64, |a, &c| a.max(c));
    let tol = 1e-10 * scale;
    let tight: Vec<Vec<bool>> = (0..size)
        .map(|i| (0..size).map(|j| sq[i][j] - u[i] - v[j] <= tol).collect())
        .collect();
    let cols = lexicographic_perfect_matching(&tight).expect("optimal duals admit a tight perfect matching");
    let pairs: Vec<(usize, usize)> = cols
        .iter()
        .enumerate()
        .filter(|&(i, &j)| i < n && j < m)
        .map(|(i, &j)| (i, j))
        .collect();
    let total = pairs.iter().map(|&(i, j)| cost[i][j]).sum();
    Ok(Assignment { pairs, cost: total })
}

/// Shortest-augmenting-path solver; returns optimal row and column duals.
fn potentials(a: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let n = a.len();
    let inf = f64::INFINITY;
    // 1-based arrays with a virtual column 0.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = a[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    (u[1..].to_vec(), v[1..].to_vec())
}

/// Greedy row-by-row choice of the smallest admissible column that still
/// leaves a perfect matching on the remaining rows.
fn lexicographic_perfect_matching(adj: &[Vec<bool>]) -> Option<Vec<usize>> {
    let n = adj.len();
    let mut fixed: Vec<usize> = Vec::with_capacity(n);
    let mut col_used = vec![false; n];
    for i in 0..n {
        let mut chosen = None;
        for j in 0..n {
            if !adj[i][j] || col_used[j] {
                continue;
            }
            col_used[j] = true;
            if has_perfect_matching(adj, i + 1, &col_used) {
                chosen = Some(j);
                break;
            }
            col_used[j] = false;
        }
        fixed.push(chosen?);
    }
    Some(fixed)
}

/// Kuhn's augmenting paths on rows `from..n` over unused columns.
fn has_perfect_matching(adj: &[Vec<bool>], from: usize, col_used: &[bool]) -> bool {
    let n = adj.len();
    let mut match_col: Vec<Option<usize>> = vec![None; n];
    fn augment(
        row: usize,
        adj: &[Vec<bool>],
        col_used: &[bool],
        seen: &mut [bool],
        match_col: &mut [Option<usize>],
    ) -> bool {
        for j in 0..adj.len() {
            if adj[row][j] && !col_used[j] && !seen[j] {
                seen[j] = true;
                if match_col[j].is_none_or(|r| augment(r, adj, col_used, seen, match_col)) {
                    match_col[j] = Some(row);
                    return true;
                }
            }
        }
        false
    }
    (from..n).all(|row| {
        let mut seen = vec![false; n];
        augment(row, adj, col_used, &mut seen, &mut match_col)
    })
}
