//! Starts the preference arena on an ephemeral port with three synthetic
//! models, casts a few votes over HTTP and prints the leaderboard.
//!
//! Pass `--serve` to keep the server running afterwards.

use scenaug::arena::{router, serve, ArenaOptions, ArenaState, MatchupPayload, ModelEntry};
use scenaug::eval::EloEntry;
use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

fn models() -> Vec<ModelEntry> {
    ["alpha", "beta", "gamma"]
        .iter()
        .enumerate()
        .map(|(m, name)| ModelEntry {
            name: name.to_string(),
            renders: (0..4).map(|s| (format!("scene_{s}"), format!("render {m}/{s}").into_bytes())).collect(),
        })
        .collect()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let options = ArenaOptions { seed: 3, bootstrap_rounds: 200, ..ArenaOptions::default() };
    let state = ArenaState::new(models(), BTreeMap::new(), options)?;
    let app = router(Arc::new(Mutex::new(state)), None);
    let rt = tokio::runtime::Runtime::new()?;
    let listener = rt.block_on(tokio::net::TcpListener::bind("127.0.0.1:0"))?;
    let base = format!("http://{}", listener.local_addr()?);
    let server = rt.spawn(serve(listener, app));
    println!("arena at {base}");

    // a rater who always prefers the image with the lower model index
    let client = reqwest::blocking::Client::new();
    let index = |bytes: &[u8]| String::from_utf8_lossy(bytes).chars().nth(7).unwrap_or('9');
    for i in 0..15 {
        let m: MatchupPayload = client.get(format!("{base}/api/matchup?rater=demo{}", i % 2)).send()?.json()?;
        let left = client.get(format!("{base}{}", m.left_image_url)).send()?.bytes()?;
        let right = client.get(format!("{base}{}", m.right_image_url)).send()?.bytes()?;
        let outcome = if index(&left) < index(&right) { "LEFT" } else { "RIGHT" };
        client
            .post(format!("{base}/api/vote"))
            .json(&serde_json::json!({"matchup_id": m.matchup_id, "outcome": outcome, "rater": format!("demo{}", i % 2)}))
            .send()?
            .error_for_status()?;
    }
    let board: Vec<EloEntry> = client.get(format!("{base}/api/leaderboard")).send()?.json()?;
    for e in &board {
        println!("{} {:<6} {:7.1} [{:7.1}, {:7.1}] {} votes", e.rank, e.model, e.rating, e.ci_low, e.ci_high, e.votes);
    }
    if std::env::args().any(|a| a == "--serve") {
        rt.block_on(server)??;
    }
    Ok(())
}
