//! Builds an Elo leaderboard with bootstrap intervals from a synthetic vote
//! log in which one model is clearly preferred.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scenaug::eval::{EloConfig, EloTable, VoteOutcome, VoteRecord};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let models = ["baseline", "otm", "fc", "tqa"];
    // probability that the first model of a pair wins
    let strength = [0.3, 0.45, 0.55, 0.7];
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut votes = Vec::new();
    for i in 0..800 {
        let a = rng.random_range(0..models.len());
        let b = (a + rng.random_range(1..models.len())) % models.len();
        let p = 0.5 + strength[a] - strength[b];
        let outcome = match rng.random::<f64>() {
            x if x < 0.1 => VoteOutcome::Tie,
            x if x < 0.1 + 0.9 * p => VoteOutcome::AWins,
            _ => VoteOutcome::BWins,
        };
        votes.push(VoteRecord {
            matchup_id: format!("m{i}"),
            model_a: models[a].into(),
            model_b: models[b].into(),
            scenario_id: format!("s{}", i % 40),
            outcome,
            rater_id: format!("r{}", i % 5),
            timestamp: i as u64,
        });
    }
    let names: Vec<String> = models.iter().map(|m| m.to_string()).collect();
    let table = EloTable::build(&votes, &names, &EloConfig::default(), 1000, 7)?;
    print!("{}", table.to_text());
    Ok(())
}
