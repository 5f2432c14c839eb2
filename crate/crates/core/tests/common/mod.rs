//! Fixtures shared by several integration-test targets.
#![allow(dead_code)]

pub mod oracles;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scenaug::eval::{VoteOutcome, VoteRecord};

pub fn vote(i: usize, a: &str, b: &str, outcome: VoteOutcome) -> VoteRecord {
    VoteRecord {
        matchup_id: format!("m{i:05}"),
        model_a: a.into(),
        model_b: b.into(),
        scenario_id: format!("s{}", i % 50),
        outcome,
        rater_id: format!("r{}", i % 9),
        timestamp: i as u64,
    }
}

pub const DOMINANT_MODELS: [&str; 3] = ["strong", "middle", "weak"];

/// 600 votes, 200 per pair. `strong` wins 85 % of its games (drawn from a
/// fixed seed); `middle` and `weak` alternate wins against each other.
pub fn dominant_votes() -> Vec<VoteRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let pairs = [("strong", "middle", 0.85), ("strong", "weak", 0.85), ("middle", "weak", 0.5)];
    let mut out = Vec::new();
    for round in 0..200 {
        for (a, b, p) in pairs {
            let i = out.len();
            let a_wins = if p == 0.5 { round % 2 == 0 } else { rng.random_bool(p) };
            let outcome = if a_wins { VoteOutcome::AWins } else { VoteOutcome::BWins };
            out.push(vote(i, a, b, outcome));
        }
    }
    out
}

/// Ranks on [`dominant_votes`]: the two even models overlap each other.
pub const DOMINANT_RANKS: [(&str, usize); 3] = [("strong", 1), ("middle", 2), ("weak", 2)];
