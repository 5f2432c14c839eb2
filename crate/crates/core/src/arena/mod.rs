//! Blinded pairwise-comparison arena: match-up scheduling, vote recording
//! with an append-only log, and the live leaderboard.

mod http;

pub use http::{router, serve, SharedArena};

use crate::eval::{read_vote_log, vote_log_line, EloConfig, EloTable, EvalError, VoteOutcome, VoteRecord};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ArenaError {
    #[error("no eligible match-up")]
    NoContent,
    #[error("unknown match-up {0:?}")]
    UnknownMatchup(String),
    #[error("match-up {0:?} already has a vote")]
    DuplicateVote(String),
    #[error("arena configuration: {0}")]
    Config(String),
    #[error("vote log: {0}")]
    Log(#[from] EvalError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// A competing model and its rendered outputs, keyed by scenario id.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelEntry {
    pub name: String,
    pub renders: BTreeMap<String, Vec<u8>>,
}

impl ModelEntry {
    /// Reads every `<scenario_id>.png` in `dir`.
    pub fn from_dir(name: &str, dir: &Path) -> Result<Self, ArenaError> {
        let mut renders = BTreeMap::new();
        for entry in std::fs::read_dir(dir)? {
            let path = entry?.path();
            if path.extension().is_some_and(|e| e == "png") {
                if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                    renders.insert(stem.to_string(), std::fs::read(&path)?);
                }
            }
        }
        Ok(Self {
            name: name.to_string(),
            renders,
        })
    }
}

/// Side chosen by a rater.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Preference {
    Left,
    Right,
    Tie,
}

/// What a rater sees. Never carries model identities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchupPayload {
    pub matchup_id: String,
    pub scenario_id: String,
    pub left_image_url: String,
    pub right_image_url: String,
    pub instruction_text: String,
}

#[derive(Debug, Clone, PartialEq)]
struct Pending {
    rater: String,
    scenario_id: String,
    left: usize,
    right: usize,
}

/// Manifest file layout (TOML). Relative paths resolve against the
/// manifest's directory.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArenaManifest {
    pub vote_log: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_rounds")]
    pub bootstrap_rounds: usize,
    #[serde(default)]
    pub static_dir: Option<PathBuf>,
    pub models: Vec<ManifestModel>,
    #[serde(default)]
    pub instructions: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestModel {
    pub name: String,
    pub renders: PathBuf,
}

fn default_rounds() -> usize {
    1000
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArenaOptions {
    pub seed: u64,
    pub elo: EloConfig,
    pub bootstrap_rounds: usize,
}

impl Default for ArenaOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            elo: EloConfig::default(),
            bootstrap_rounds: 1000,
        }
    }
}

/// Unordered model pair, lower registration index first.
type Pair = (usize, usize);

/// Server-side arena state. Invariant: every vote in `votes` resolves a
/// match-up that was served earlier, and each match-up at most once.
pub struct ArenaState {
    models: Vec<ModelEntry>,
    instructions: BTreeMap<String, String>,
    options: ArenaOptions,
    rng: ChaCha8Rng,
    pending: HashMap<String, Pending>,
    resolved: HashSet<String>,
    images: HashMap<String, (usize, String)>,
    votes: Vec<VoteRecord>,
    /// (rater, pair, scenario) → recorded votes.
    tally: HashMap<(String, Pair, String), usize>,
    log: Option<File>,
    clock: fn() -> u64,
}

fn system_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

impl ArenaState {
    /// In-memory arena without persistence.
    pub fn new(
        models: Vec<ModelEntry>,
        instructions: BTreeMap<String, String>,
        options: ArenaOptions,
    ) -> Result<Self, ArenaError> {
        let mut names = HashSet::new();
        for m in &models {
            if m.name.is_empty() || !names.insert(m.name.as_str()) {
                return Err(ArenaError::Config(format!("duplicate or empty model name {:?}", m.name)));
            }
        }
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(options.seed),
            models,
            instructions,
            options,
            pending: HashMap::new(),
            resolved: HashSet::new(),
            images: HashMap::new(),
            votes: Vec::new(),
            tally: HashMap::new(),
            log: None,
            clock: system_ms,
        })
    }

    /// Replays the NDJSON log at `path` (if present) and appends new votes
    /// to it.
    pub fn with_log(mut self, path: &Path) -> Result<Self, ArenaError> {
        if path.exists() {
            let text = std::fs::read_to_string(path)?;
            for v in read_vote_log(&text)? {
                self.absorb(v);
            }
        }
        self.log = Some(OpenOptions::new().create(true).append(true).open(path)?);
        Ok(self)
    }

    /// Restarts the scheduling stream and bootstrap seed.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        self.options.seed = seed;
        self
    }

    pub fn with_clock(mut self, clock: fn() -> u64) -> Self {
        self.clock = clock;
        self
    }

    /// Loads a manifest and the render directories and log it references.
    pub fn from_manifest(path: &Path) -> Result<(Self, ArenaManifest), ArenaError> {
        let text = std::fs::read_to_string(path)?;
        let mut manifest: ArenaManifest =
            toml::from_str(&text).map_err(|e| ArenaError::Config(e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
        let models = manifest
            .models
            .iter()
            .map(|m| ModelEntry::from_dir(&m.name, &resolve(&m.renders)))
            .collect::<Result<Vec<_>, _>>()?;
        manifest.vote_log = resolve(&manifest.vote_log);
        manifest.static_dir = manifest.static_dir.as_deref().map(resolve);
        let options = ArenaOptions {
            seed: manifest.seed,
            elo: EloConfig::default(),
            bootstrap_rounds: manifest.bootstrap_rounds,
        };
        let state = Self::new(models, manifest.instructions.clone(), options)?.with_log(&manifest.vote_log)?;
        Ok((state, manifest))
    }

    pub fn model_names(&self) -> Vec<String> {
        self.models.iter().map(|m| m.name.clone()).collect()
    }

    pub fn votes(&self) -> &[VoteRecord] {
        &self.votes
    }

    fn index_of(&self, name: &str) -> Option<usize> {
        self.models.iter().position(|m| m.name == name)
    }

    fn absorb(&mut self, v: VoteRecord) {
        if let (Some(a), Some(b)) = (self.index_of(&v.model_a), self.index_of(&v.model_b)) {
            let key = (v.rater_id.clone(), (a.min(b), a.max(b)), v.scenario_id.clone());
            *self.tally.entry(key).or_default() += 1;
        }
        self.resolved.insert(v.matchup_id.clone());
        self.votes.push(v);
    }

    fn opaque_id(&mut self) -> String {
        let bits: u128 = self.rng.random();
        format!("{bits:032x}")
    }

    /// Candidate (pair, scenario) combinations: both models rendered it.
    fn candidates(&self) -> Vec<(Pair, String)> {
        let mut out = Vec::new();
        for i in 0..self.models.len() {
            for j in i + 1..self.models.len() {
                for sid in self.models[i].renders.keys() {
                    if self.models[j].renders.contains_key(sid) {
                        out.push(((i, j), sid.clone()));
                    }
                }
            }
        }
        out
    }

    /// Uniform draw among the combinations this rater has voted on least,
    /// then a fair coin for the sides.
    pub fn next_matchup(&mut self, rater: &str) -> Result<MatchupPayload, ArenaError> {
        let candidates = self.candidates();
        let count = |c: &(Pair, String)| {
            self.tally
                .get(&(rater.to_string(), c.0, c.1.clone()))
                .copied()
                .unwrap_or(0)
        };
        let least = candidates.iter().map(count).min().ok_or(ArenaError::NoContent)?;
        let pool: Vec<&(Pair, String)> = candidates.iter().filter(|c| count(c) == least).collect();
        let ((i, j), scenario_id) = (*pool.choose(&mut self.rng).expect("non-empty pool")).clone();
        let (left, right) = if self.rng.random::<bool>() { (j, i) } else { (i, j) };
        let matchup_id = self.opaque_id();
        let left_image = self.opaque_id();
        let right_image = self.opaque_id();
        self.images.insert(left_image.clone(), (left, scenario_id.clone()));
        self.images.insert(right_image.clone(), (right, scenario_id.clone()));
        self.pending.insert(
            matchup_id.clone(),
            Pending {
                rater: rater.to_string(),
                scenario_id: scenario_id.clone(),
                left,
                right,
            },
        );
        Ok(MatchupPayload {
            matchup_id,
            instruction_text: self.instructions.get(&scenario_id).cloned().unwrap_or_default(),
            scenario_id,
            left_image_url: format!("/images/{left_image}.png"),
            right_image_url: format!("/images/{right_image}.png"),
        })
    }

    /// Resolves the hidden sides into a vote on the registration-ordered
    /// pair and appends it to the log before acknowledging.
    pub fn record_vote(&mut self, matchup_id: &str, choice: Preference, rater: &str) -> Result<VoteRecord, ArenaError> {
        if self.resolved.contains(matchup_id) {
            return Err(ArenaError::DuplicateVote(matchup_id.to_string()));
        }
        let p = match self.pending.get(matchup_id) {
            Some(p) if p.rater == rater => p.clone(),
            _ => return Err(ArenaError::UnknownMatchup(matchup_id.to_string())),
        };
        let (a, b) = (p.left.min(p.right), p.left.max(p.right));
        let outcome = match choice {
            Preference::Tie => VoteOutcome::Tie,
            Preference::Left if p.left == a => VoteOutcome::AWins,
            Preference::Right if p.right == a => VoteOutcome::AWins,
            _ => VoteOutcome::BWins,
        };
        let vote = VoteRecord {
            matchup_id: matchup_id.to_string(),
            model_a: self.models[a].name.clone(),
            model_b: self.models[b].name.clone(),
            scenario_id: p.scenario_id,
            outcome,
            rater_id: rater.to_string(),
            timestamp: (self.clock)(),
        };
        if let Some(log) = self.log.as_mut() {
            log.write_all(vote_log_line(&vote).as_bytes())?;
            log.flush()?;
        }
        self.pending.remove(matchup_id);
        self.absorb(vote.clone());
        Ok(vote)
    }

    /// PNG bytes behind an opaque image id.
    pub fn image(&self, id: &str) -> Option<&[u8]> {
        let (model, scenario) = self.images.get(id)?;
        self.models[*model].renders.get(scenario).map(Vec::as_slice)
    }

    /// Consistent copy of what the leaderboard needs.
    pub fn snapshot(&self) -> (Vec<VoteRecord>, Vec<String>, ArenaOptions) {
        (self.votes.clone(), self.model_names(), self.options.clone())
    }

    pub fn leaderboard(&self) -> Result<EloTable, ArenaError> {
        let (votes, models, opts) = self.snapshot();
        leaderboard_from(&votes, &models, &opts)
    }
}

pub fn leaderboard_from(votes: &[VoteRecord], models: &[String], opts: &ArenaOptions) -> Result<EloTable, ArenaError> {
    Ok(EloTable::build(votes, models, &opts.elo, opts.bootstrap_rounds, opts.seed)?)
}


#[cfg(test)]
mod tests {
    use super::test_support::*;
    use super::*;

    fn arena(names: &[&str], scenarios: usize, seed: u64) -> ArenaState {
        ArenaState::new(models(names, scenarios), BTreeMap::new(), options(seed)).unwrap()
    }

    #[test]
    fn payload_is_blind() {
        let mut a = arena(&["alpha-model", "beta-model"], 1, 3);
        let m = a.next_matchup("r1").unwrap();
        assert_ne!(m.left_image_url, m.right_image_url);
        let body = serde_json::to_string(&m).unwrap();
        assert!(!body.contains("alpha") && !body.contains("beta"));
    }

    #[test]
    fn single_model_has_no_content() {
        let mut a = arena(&["only"], 3, 0);
        assert!(matches!(a.next_matchup("r"), Err(ArenaError::NoContent)));
    }

    fn left_count(seed: u64, servings: usize) -> usize {
        let mut a = arena(&["A", "B"], 1, seed);
        (0..servings)
            .filter(|_| {
                let m = a.next_matchup("r").unwrap();
                let id = m.left_image_url.trim_start_matches("/images/").trim_end_matches(".png");
                a.images[id].0 == 0
            })
            .count()
    }

    #[test]
    fn sides_are_balanced() {
        let left_a = left_count(7, 10_000);
        assert!((4900..=5100).contains(&left_a), "{left_a}");
        // pooled over many seeds the split is within 0.3% of even
        let pooled: usize = (100..120).map(|s| left_count(s, 10_000)).sum();
        assert!((99_400..=100_600).contains(&pooled), "{pooled}");
    }

    #[test]
    fn votes_map_through_hidden_sides() {
        let mut a = arena(&["A", "B"], 1, 1);
        for _ in 0..20 {
            let m = a.next_matchup("r").unwrap();
            let left = a.pending[&m.matchup_id].left;
            let v = a.record_vote(&m.matchup_id, Preference::Left, "r").unwrap();
            let expected = if left == 0 { VoteOutcome::AWins } else { VoteOutcome::BWins };
            assert_eq!(v.outcome, expected);
            assert_eq!((v.model_a.as_str(), v.model_b.as_str()), ("A", "B"));
            assert!(matches!(
                a.record_vote(&m.matchup_id, Preference::Tie, "r"),
                Err(ArenaError::DuplicateVote(_))
            ));
        }
        let m = a.next_matchup("r").unwrap();
        assert_eq!(a.record_vote(&m.matchup_id, Preference::Tie, "r").unwrap().outcome, VoteOutcome::Tie);
        assert!(matches!(a.record_vote("nope", Preference::Tie, "r"), Err(ArenaError::UnknownMatchup(_))));
    }

    #[test]
    fn other_raters_cannot_vote_on_a_matchup() {
        let mut a = arena(&["A", "B"], 1, 1);
        let m = a.next_matchup("r1").unwrap();
        assert!(matches!(
            a.record_vote(&m.matchup_id, Preference::Left, "r2"),
            Err(ArenaError::UnknownMatchup(_))
        ));
    }

    #[test]
    fn least_voted_pairs_come_first() {
        let mut a = arena(&["A", "B", "C"], 2, 9);
        let mut seen = HashSet::new();
        for _ in 0..6 {
            let m = a.next_matchup("r").unwrap();
            let p = &a.pending[&m.matchup_id];
            seen.insert(((p.left.min(p.right), p.left.max(p.right)), p.scenario_id.clone()));
            a.record_vote(&m.matchup_id, Preference::Tie, "r").unwrap();
        }
        assert_eq!(seen.len(), 6);
    }

    #[test]
    fn empty_leaderboard() {
        let a = arena(&["A", "B", "C"], 1, 0);
        let t = a.leaderboard().unwrap();
        assert!(t.entries.iter().all(|e| e.rank == 1 && e.votes == 0 && e.rating == 1000.0));
    }
}
