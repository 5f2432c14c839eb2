use super::EvalError;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum VoteOutcome {
    AWins,
    BWins,
    Tie,
}

impl VoteOutcome {
    /// Actual score of model A.
    pub fn score_a(self) -> f64 {
        match self {
            VoteOutcome::AWins => 1.0,
            VoteOutcome::BWins => 0.0,
            VoteOutcome::Tie => 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoteRecord {
    pub matchup_id: String,
    pub model_a: String,
    pub model_b: String,
    pub scenario_id: String,
    pub outcome: VoteOutcome,
    pub rater_id: String,
    /// Milliseconds since the Unix epoch.
    pub timestamp: u64,
}

/// One NDJSON line, newline included.
pub fn vote_log_line(v: &VoteRecord) -> String {
    serde_json::to_string(v).expect("vote serializes") + "\n"
}

pub fn read_vote_log(text: &str) -> Result<Vec<VoteRecord>, EvalError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let v: VoteRecord = serde_json::from_str(line).map_err(|e| EvalError::VoteLog {
            line: i + 1,
            reason: e.to_string(),
        })?;
        if v.model_a == v.model_b {
            return Err(EvalError::VoteLog {
                line: i + 1,
                reason: "model_a equals model_b".into(),
            });
        }
        out.push(v);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EloConfig {
    pub k: f64,
    pub initial: f64,
}

impl Default for EloConfig {
    fn default() -> Self {
        Self {
            k: 32.0,
            initial: 1000.0,
        }
    }
}

/// Win expectation of a player rated `ra` against one rated `rb`.
pub fn expected_score(ra: f64, rb: f64) -> f64 {
    1.0 / (1.0 + 10f64.powf((rb - ra) / 400.0))
}

/// Updates are rounded to multiples of 2⁻³⁰ points. Ratings then stay on
/// that grid, additions are exact, and the rating total is conserved
/// bit-for-bit.
const QUANTUM: f64 = 1.0 / (1u64 << 30) as f64;

fn quantize(x: f64) -> f64 {
    (x / QUANTUM).round() * QUANTUM
}

/// Online Elo over the votes in a seed-determined order.
pub fn compute_elo(votes: &[VoteRecord], cfg: &EloConfig, seed: u64) -> BTreeMap<String, f64> {
    let mut ratings: BTreeMap<String, f64> = BTreeMap::new();
    for v in votes {
        ratings.entry(v.model_a.clone()).or_insert(cfg.initial);
        ratings.entry(v.model_b.clone()).or_insert(cfg.initial);
    }
    let mut order: Vec<usize> = (0..votes.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    for i in order {
        let v = &votes[i];
        let ra = ratings[&v.model_a];
        let rb = ratings[&v.model_b];
        let delta = quantize(cfg.k * (v.outcome.score_a() - expected_score(ra, rb)));
        *ratings.get_mut(&v.model_a).expect("seeded") += delta;
        *ratings.get_mut(&v.model_b).expect("seeded") -= delta;
    }
    ratings
}

/// Percentiles of a model's bootstrap rating distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapInterval {
    pub low: f64,
    pub median: f64,
    pub high: f64,
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// 2.5th/50th/97.5th percentiles over `rounds` resamples. Round `r` draws
/// from stream `r` of the generator seeded with `seed`, so rounds are
/// independent of each other and of how they are scheduled across threads.
pub fn bootstrap_ci(
    votes: &[VoteRecord],
    cfg: &EloConfig,
    rounds: usize,
    seed: u64,
) -> Result<BTreeMap<String, BootstrapInterval>, EvalError> {
    if rounds < 100 {
        return Err(EvalError::InvalidInput(format!("bootstrap needs >= 100 rounds, got {rounds}")));
    }
    let models: BTreeSet<&str> = votes
        .iter()
        .flat_map(|v| [v.model_a.as_str(), v.model_b.as_str()])
        .collect();
    if votes.is_empty() {
        return Ok(BTreeMap::new());
    }
    let samples: Vec<BTreeMap<String, f64>> = (0..rounds)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            let resample: Vec<VoteRecord> = (0..votes.len())
                .map(|_| votes[rng.random_range(0..votes.len())].clone())
                .collect();
            compute_elo(&resample, cfg, rng.random())
        })
        .collect();
    Ok(models
        .into_iter()
        .map(|m| {
            let mut xs: Vec<f64> = samples.iter().map(|s| s.get(m).copied().unwrap_or(cfg.initial)).collect();
            xs.sort_by(f64::total_cmp);
            let ci = BootstrapInterval {
                low: percentile(&xs, 0.025),
                median: percentile(&xs, 0.5),
                high: percentile(&xs, 0.975),
            };
            (m.to_string(), ci)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EloEntry {
    pub model: String,
    pub rating: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub votes: usize,
    pub rank: usize,
}

/// Rank = 1 + number of other models whose lower bound exceeds this
/// model's upper bound. Order is preserved.
pub fn compute_rank(entries: &[EloEntry]) -> Vec<EloEntry> {
    entries
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let better = entries
                .iter()
                .enumerate()
                .filter(|&(j, o)| j != i && o.ci_low > e.ci_high)
                .count();
            EloEntry {
                rank: 1 + better,
                ..e.clone()
            }
        })
        .collect()
}

/// Leaderboard sorted by rating, highest first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EloTable {
    pub entries: Vec<EloEntry>,
}

impl EloTable {
    /// Point ratings from one ordering pass; intervals are the bootstrap
    /// percentile offsets around the bootstrap median, re-centred on the
    /// point rating so that every interval covers its estimate. Models
    /// without votes keep the initial rating with a zero-width interval.
    pub fn build(
        votes: &[VoteRecord],
        models: &[String],
        cfg: &EloConfig,
        rounds: usize,
        seed: u64,
    ) -> Result<Self, EvalError> {
        let ratings = compute_elo(votes, cfg, seed);
        let cis = bootstrap_ci(votes, cfg, rounds, seed)?;
        let mut names: BTreeSet<String> = models.iter().cloned().collect();
        names.extend(ratings.keys().cloned());
        let mut entries: Vec<EloEntry> = names
            .into_iter()
            .map(|m| {
                let rating = ratings.get(&m).copied().unwrap_or(cfg.initial);
                let (lo, hi) = match cis.get(&m) {
                    Some(ci) => (rating - (ci.median - ci.low), rating + (ci.high - ci.median)),
                    None => (rating, rating),
                };
                let count = votes.iter().filter(|v| v.model_a == m || v.model_b == m).count();
                EloEntry {
                    model: m,
                    rating,
                    ci_low: lo,
                    ci_high: hi,
                    votes: count,
                    rank: 0,
                }
            })
            .collect();
        entries.sort_by(|a, b| b.rating.total_cmp(&a.rating).then_with(|| a.model.cmp(&b.model)));
        Ok(Self {
            entries: compute_rank(&entries),
        })
    }

    pub fn to_text(&self) -> String {
        let width = self.entries.iter().map(|e| e.model.len()).max().unwrap_or(5).max(5);
        let mut out = format!("{:<4}  {:<width$}  {:>7}  {:>17}  {:>6}\n", "Rank", "Model", "Elo", "95% CI", "Votes");
        for e in &self.entries {
            let _ = writeln!(
                out,
                "{:<4}  {:<width$}  {:>7.1}  [{:>7.1}, {:>7.1}]  {:>6}",
                e.rank, e.model, e.rating, e.ci_low, e.ci_high, e.votes
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn vote(a: &str, b: &str, outcome: VoteOutcome) -> VoteRecord {
        VoteRecord {
            matchup_id: String::new(),
            model_a: a.into(),
            model_b: b.into(),
            scenario_id: "s".into(),
            outcome,
            rater_id: "r".into(),
            timestamp: 0,
        }
    }

    #[test]
    fn expected_score_at_hundred_points() {
        assert!((expected_score(1100.0, 1000.0) - 0.6401).abs() < 5e-4);
    }

    #[test]
    fn single_win_moves_sixteen() {
        let r = compute_elo(&[vote("A", "B", VoteOutcome::AWins)], &EloConfig::default(), 1);
        assert_eq!(r["A"], 1016.0);
        assert_eq!(r["B"], 984.0);
    }

    #[test]
    fn ties_keep_equal_ratings() {
        let votes = vec![vote("A", "B", VoteOutcome::Tie); 20];
        let r = compute_elo(&votes, &EloConfig::default(), 7);
        assert_eq!((r["A"], r["B"]), (1000.0, 1000.0));
    }

    #[test]
    fn rank_rule() {
        let e = |m: &str, lo: f64, hi: f64| EloEntry {
            model: m.into(),
            rating: (lo + hi) / 2.0,
            ci_low: lo,
            ci_high: hi,
            votes: 0,
            rank: 0,
        };
        let ranked = compute_rank(&[e("a", 10.0, 20.0), e("b", 0.0, 5.0)]);
        assert_eq!((ranked[0].rank, ranked[1].rank), (1, 2));
        let same = compute_rank(&[e("a", 0.0, 1.0), e("b", 0.0, 1.0)]);
        assert!(same.iter().all(|x| x.rank == 1));
    }

    #[test]
    fn log_round_trip() {
        let v = vote("A", "B", VoteOutcome::BWins);
        let text = vote_log_line(&v) + "\n" + &vote_log_line(&v);
        assert_eq!(read_vote_log(&text).unwrap(), vec![v.clone(), v]);
        assert!(matches!(read_vote_log("{bad"), Err(EvalError::VoteLog { line: 1, .. })));
        assert!(vote_log_line(&vote("A", "B", VoteOutcome::AWins)).contains("\"A_WINS\""));
    }

    #[test]
    fn table_for_empty_log() {
        let t = EloTable::build(&[], &["m1".into(), "m2".into()], &EloConfig::default(), 100, 0).unwrap();
        assert!(t.entries.iter().all(|e| e.rating == 1000.0 && e.rank == 1 && e.votes == 0));
        assert!(t.to_text().starts_with("Rank"));
    }
}
