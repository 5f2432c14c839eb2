//! Closed-loop simulation of every augmented corpus scene; prints the
//! per-scene driving score and the mean.

use scenaug::corpus::synthetic_corpus;
use scenaug::sim::{simulate_many, SimConfig};

fn main() {
    let scenes: Vec<_> = synthetic_corpus().into_iter().map(|c| c.expected).collect();
    let cfg = SimConfig::default();
    let results = simulate_many(&scenes, &cfg);
    let mut total = 0.0;
    for (s, r) in scenes.iter().zip(&results) {
        match r {
            Ok((trace, score)) => {
                total += score.score;
                println!(
                    "{:<28} score {:.3}  progress {:.2}  events {}",
                    s.scenario_id,
                    score.score,
                    score.progress_ratio,
                    trace.events.len()
                );
            }
            Err(e) => println!("{:<28} error: {e}", s.scenario_id),
        }
    }
    println!("mean {:.3}", total / scenes.len() as f64);
}
