//! Command-line front end. `run` parses arguments, dispatches to the
//! library and maps every failure class to a fixed exit code.
//!
//! | code | meaning |
//! |------|---------|
//! | 0  | success, or `ACCEPTED` |
//! | 1  | pipeline `FAILED` |
//! | 2  | pipeline `MAX_ITERATIONS` |
//! | 64 | usage error |
//! | 65 | malformed input data |
//! | 74 | file-system or network I/O error |

use crate::arena::{router, serve, ArenaState};
use crate::eval::{displacement_error, read_vote_log, DisplacementReport, EloConfig, EloTable};
use crate::llm::{load_scripted, BackendConfig, ChatBackend, HttpBackend};
use crate::orchestrator::{run_batch, run_pipeline, transcript_json, BatchItem, PipelineConfig, PipelineOutcome, PipelineStatus};
use crate::prompt::Strategy;
use crate::render::{rasterize, render_bev, RenderStyle, MAX_PIXELS, MIN_PIXELS};
use crate::scenario::{load_scenario, save_scenario, Scenario};
use crate::sim::{simulate_many, trace_csv, SimConfig};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_MAX_ITERATIONS: i32 = 2;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_DATA: i32 = 65;
pub const EXIT_IO: i32 = 74;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Io(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
            CliError::Io(_) => EXIT_IO,
        }
    }

    fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "scenaug", version, about = "Language-driven traffic scenario augmentation and evaluation")]
struct Cli {
    /// Seed for every randomised step (bootstrap, arena scheduling);
    /// defaults to 0, or to the arena manifest's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Apply a natural-language edit to one scenario.
    Modify(ModifyArgs),
    /// Draw a scenario as SVG and optionally PNG.
    Render(RenderArgs),
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Closed-loop driving scores for every scenario in a directory.
    Simulate(SimulateArgs),
    #[command(subcommand)]
    Arena(ArenaCommand),
    /// Run a manifest of edits concurrently.
    Batch(BatchArgs),
}

#[derive(Debug, Args)]
struct BackendArgs {
    /// `scripted:<dir>` or the path of a backend TOML file.
    #[arg(long)]
    backend: String,
    /// Reviewer backend; defaults to `--backend`.
    #[arg(long)]
    qa_backend: Option<String>,
    /// Vision backend; defaults to `--backend`.
    #[arg(long)]
    vlm_backend: Option<String>,
    #[arg(long)]
    max_qa_iters: Option<usize>,
}

#[derive(Debug, Args)]
struct ModifyArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, conflicts_with = "instruction_file", required_unless_present = "instruction_file")]
    instruction: Option<String>,
    #[arg(long)]
    instruction_file: Option<PathBuf>,
    #[arg(long, default_value = "OTM")]
    strategy: Strategy,
    #[command(flatten)]
    backend: BackendArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct RenderArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Comma-separated ids drawn in the highlight colour.
    #[arg(long, value_delimiter = ',')]
    modified: Vec<String>,
    /// Also write a square PNG with this many pixels per side.
    #[arg(long)]
    png: Option<u32>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Subcommand)]
enum EvalCommand {
    /// Mean displacement between generated and reference scenarios.
    Displacement {
        #[arg(long)]
        generated: PathBuf,
        #[arg(long)]
        reference: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Elo leaderboard from a vote log.
    Elo {
        #[arg(long)]
        votes: PathBuf,
        /// Comma-separated model list; defaults to models seen in the log.
        #[arg(long, value_delimiter = ',')]
        models: Vec<String>,
        #[arg(long, default_value_t = 1000)]
        rounds: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    scenarios: PathBuf,
    /// Simulator settings as TOML.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum ArenaCommand {
    /// Serve the arena API for a models manifest.
    Serve {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
    },
}

#[derive(Debug, Args)]
struct BatchArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, default_value_t = 1)]
    parallelism: usize,
    /// Overrides the manifest's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Batch input. Relative paths resolve against the manifest's directory.
#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub strategy: Strategy,
    pub backend: String,
    #[serde(default)]
    pub qa_backend: Option<String>,
    #[serde(default)]
    pub vlm_backend: Option<String>,
    #[serde(default)]
    pub max_qa_iterations: Option<usize>,
    pub output_dir: PathBuf,
    pub items: Vec<RunItem>,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunItem {
    pub scenario: PathBuf,
    pub instruction: String,
}

impl RunManifest {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut m: RunManifest = toml::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        m.output_dir = resolve(base, &m.output_dir);
        for item in &mut m.items {
            item.scenario = resolve(base, &item.scenario);
        }
        m.backend = resolve_backend(base, &m.backend);
        m.qa_backend = m.qa_backend.map(|b| resolve_backend(base, &b));
        m.vlm_backend = m.vlm_backend.map(|b| resolve_backend(base, &b));
        m.validate()?;
        Ok(m)
    }

    /// Every scenario path exists and the list is non-empty.
    pub fn validate(&self) -> CliResult<()> {
        if self.items.is_empty() {
            return Err(CliError::Data("manifest has no items".into()));
        }
        for item in &self.items {
            if !item.scenario.is_file() {
                return Err(CliError::io(&item.scenario, "no such file"));
            }
        }
        Ok(())
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn resolve_backend(base: &Path, spec: &str) -> String {
    match spec.strip_prefix("scripted:") {
        Some(dir) => format!("scripted:{}", resolve(base, Path::new(dir)).display()),
        None => resolve(base, Path::new(spec)).display().to_string(),
    }
}

/// `scripted:<dir>` replays files; anything else is a backend TOML whose
/// API key comes from the environment variable it names.
pub fn load_backend(spec: &str) -> CliResult<Arc<dyn ChatBackend>> {
    if let Some(dir) = spec.strip_prefix("scripted:") {
        let dir = Path::new(dir);
        if !dir.is_dir() {
            return Err(CliError::io(dir, "script directory not found"));
        }
        return load_scripted(dir).map_err(|e| CliError::io(dir, e));
    }
    let path = Path::new(spec);
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let cfg: BackendConfig = toml::from_str(&text).map_err(|e| CliError::Data(format!("{spec}: {e}")))?;
    let backend = HttpBackend::new(cfg).map_err(|e| CliError::Data(format!("{spec}: {e}")))?;
    Ok(Arc::new(backend))
}

fn pipeline_config(
    strategy: Strategy,
    backend: &str,
    qa: Option<&str>,
    vlm: Option<&str>,
    max_qa: Option<usize>,
) -> CliResult<PipelineConfig> {
    let sma = load_backend(backend)?;
    let mut cfg = PipelineConfig::new(strategy, sma.clone());
    if let Some(q) = qa {
        cfg = cfg.with_qa(load_backend(q)?);
    }
    if strategy == Strategy::Vqa {
        cfg = cfg.with_vlm(match vlm {
            Some(v) => load_backend(v)?,
            None => sma,
        });
    }
    if let Some(n) = max_qa {
        cfg.max_qa_iterations = n;
    }
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(cfg)
}

fn read_scenario(path: &Path) -> CliResult<Scenario> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    load_scenario(&bytes).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

/// `*.json` files of a directory, sorted by name.
fn json_files(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| CliError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "json"))
        .collect();
    out.sort();
    Ok(out)
}

fn status_code(status: PipelineStatus) -> i32 {
    match status {
        PipelineStatus::Accepted => EXIT_OK,
        PipelineStatus::MaxIterations => EXIT_MAX_ITERATIONS,
        PipelineStatus::Failed => EXIT_FAILED,
    }
}

/// Writes `<id>.modified.json` (when present) and `<id>.transcript.json`.
fn write_outcome(out: &Path, o: &PipelineOutcome) -> CliResult<()> {
    if let Some(s) = &o.modified_scenario {
        write_file(&out.join(format!("{}.modified.json", o.scenario_id)), save_scenario(s))?;
    }
    write_file(&out.join(format!("{}.transcript.json", o.scenario_id)), transcript_json(o))
}

fn modify(args: ModifyArgs, stdout: &mut dyn Write) -> CliResult<i32> {
    let s = read_scenario(&args.scenario)?;
    let instruction = match (args.instruction, &args.instruction_file) {
        (Some(text), _) => text,
        (None, Some(p)) => std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?,
        (None, None) => return Err(CliError::Usage("an instruction is required".into())),
    };
    let b = &args.backend;
    let cfg = pipeline_config(
        args.strategy,
        &b.backend,
        b.qa_backend.as_deref(),
        b.vlm_backend.as_deref(),
        b.max_qa_iters,
    )?;
    let outcome = run_pipeline(&s, &instruction, &cfg).map_err(|e| CliError::Data(e.to_string()))?;
    write_outcome(&args.out, &outcome)?;
    let _ = writeln!(stdout, "{} {} iterations={}", outcome.scenario_id, outcome.status, outcome.iterations());
    if let Some(f) = &outcome.failure {
        let _ = writeln!(stdout, "failure: {f}");
    }
    Ok(status_code(outcome.status))
}

fn render(args: RenderArgs, stdout: &mut dyn Write) -> CliResult<i32> {
    if let Some(px) = args.png {
        if !(MIN_PIXELS..=MAX_PIXELS).contains(&px) {
            return Err(CliError::Usage(format!("--png must be within {MIN_PIXELS}..={MAX_PIXELS}")));
        }
    }
    let s = read_scenario(&args.scenario)?;
    let ids: BTreeSet<String> = args.modified.into_iter().filter(|m| !m.is_empty()).collect();
    if let Some(unknown) = ids.iter().find(|id| s.agent(id).is_none()) {
        return Err(CliError::Data(format!("--modified names unknown agent {unknown:?}")));
    }
    let rendered = render_bev(&s, &ids, &RenderStyle::default());
    let svg_path = args.out.join(format!("{}.svg", s.scenario_id));
    write_file(&svg_path, &rendered.svg)?;
    let _ = writeln!(stdout, "{}", svg_path.display());
    if let Some(px) = args.png {
        let png = rasterize(&rendered.svg, px).map_err(|e| CliError::Data(e.to_string()))?;
        let png_path = args.out.join(format!("{}.png", s.scenario_id));
        write_file(&png_path, png)?;
        let _ = writeln!(stdout, "{}", png_path.display());
    }
    if rendered.clipped_agents > 0 {
        let _ = writeln!(stdout, "clipped agents: {}", rendered.clipped_agents);
    }
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
struct DisplacementSummary {
    scenarios: Vec<(String, DisplacementReport)>,
    /// Ids present in only one of the two directories.
    missing_generated: Vec<String>,
    missing_reference: Vec<String>,
    /// Mean of the per-scenario means, over scenarios with any match.
    aggregate_mean_m: Option<f64>,
}

/// Scenario documents of a directory; run transcripts written next to
/// modified scenarios are skipped.
fn load_dir(dir: &Path) -> CliResult<Vec<Scenario>> {
    json_files(dir)?
        .iter()
        .filter(|p| !p.to_string_lossy().ends_with(".transcript.json"))
        .map(|p| read_scenario(p))
        .collect()
}

fn eval_displacement(generated: &Path, reference: &Path, out: Option<&Path>, stdout: &mut dyn Write) -> CliResult<i32> {
    let gen = load_dir(generated)?;
    let refs = load_dir(reference)?;
    let ids = |v: &[Scenario]| v.iter().map(|s| s.scenario_id.clone()).collect::<BTreeSet<_>>();
    let (gen_ids, ref_ids) = (ids(&gen), ids(&refs));
    let mut scenarios = Vec::new();
    for g in &gen {
        if let Some(r) = refs.iter().find(|r| r.scenario_id == g.scenario_id) {
            scenarios.push((g.scenario_id.clone(), displacement_error(&g.agents, &r.agents)));
        }
    }
    if scenarios.is_empty() {
        return Err(CliError::Data("no scenario id is present in both directories".into()));
    }
    let means: Vec<f64> = scenarios.iter().filter_map(|(_, r)| r.mean_m).collect();
    let summary = DisplacementSummary {
        aggregate_mean_m: (!means.is_empty()).then(|| means.iter().sum::<f64>() / means.len() as f64),
        missing_generated: ref_ids.difference(&gen_ids).cloned().collect(),
        missing_reference: gen_ids.difference(&ref_ids).cloned().collect(),
        scenarios,
    };
    let mut text = String::from("scenario_id,mean_m,max_m,unmatched_generated,unmatched_reference\n");
    for (id, r) in &summary.scenarios {
        let opt = |v: Option<f64>| v.map_or(String::new(), |v| format!("{v:.3}"));
        let _ = writeln!(text, "{id},{},{},{},{}", opt(r.mean_m), opt(r.max_m), r.unmatched_generated, r.unmatched_reference);
    }
    let agg = summary.aggregate_mean_m.map_or("n/a".into(), |m| format!("{m:.3}"));
    let _ = writeln!(text, "aggregate_mean_m,{agg}");
    let _ = stdout.write_all(text.as_bytes());
    if let Some(out) = out {
        write_file(&out.join("displacement.csv"), &text)?;
        let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
        write_file(&out.join("displacement.json"), json + "\n")?;
    }
    Ok(EXIT_OK)
}

fn eval_elo(votes: &Path, models: Vec<String>, rounds: usize, seed: u64, out: Option<&Path>, stdout: &mut dyn Write) -> CliResult<i32> {
    let text = std::fs::read_to_string(votes).map_err(|e| CliError::io(votes, e))?;
    let log = read_vote_log(&text).map_err(|e| CliError::Data(format!("{}: {e}", votes.display())))?;
    let models = if models.is_empty() {
        let mut seen = Vec::new();
        for v in &log {
            for m in [&v.model_a, &v.model_b] {
                if !seen.contains(m) {
                    seen.push(m.clone());
                }
            }
        }
        seen
    } else {
        models
    };
    let table = EloTable::build(&log, &models, &EloConfig::default(), rounds, seed).map_err(|e| CliError::Data(e.to_string()))?;
    let text = table.to_text();
    let _ = stdout.write_all(text.as_bytes());
    if let Some(out) = out {
        write_file(&out.join("leaderboard.txt"), &text)?;
        let json = serde_json::to_string_pretty(&table.entries).expect("entries serialize");
        write_file(&out.join("leaderboard.json"), json + "\n")?;
    }
    Ok(EXIT_OK)
}

fn simulate(args: SimulateArgs, stdout: &mut dyn Write) -> CliResult<i32> {
    let cfg = match &args.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
            toml::from_str::<SimConfig>(&text).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?
        }
        None => SimConfig::default(),
    };
    cfg.validate().map_err(CliError::Data)?;
    let scenarios = load_dir(&args.scenarios)?;
    if scenarios.is_empty() {
        return Err(CliError::Data(format!("{} holds no scenarios", args.scenarios.display())));
    }
    let results = simulate_many(&scenarios, &cfg);
    let mut csv = String::from("scenario_id,ttc_pass,progress_ratio,comfort_pass,collision,offroad,score\n");
    let mut scores = Vec::new();
    for (s, r) in scenarios.iter().zip(&results) {
        match r {
            Ok((trace, sc)) => {
                let _ = writeln!(
                    csv,
                    "{},{},{:.4},{},{},{},{:.4}",
                    s.scenario_id, sc.ttc_pass, sc.progress_ratio, sc.comfort_pass, sc.collision, sc.offroad, sc.score
                );
                scores.push(sc.score);
                if let Some(out) = &args.out {
                    write_file(&out.join("traces").join(format!("{}.csv", s.scenario_id)), trace_csv(trace))?;
                }
            }
            Err(e) => return Err(CliError::Data(format!("{}: {e}", s.scenario_id))),
        }
    }
    let mean = scores.iter().sum::<f64>() / scores.len() as f64;
    let _ = writeln!(csv, "mean,,,,,,{mean:.4}");
    let _ = stdout.write_all(csv.as_bytes());
    if let Some(out) = &args.out {
        write_file(&out.join("scores.csv"), &csv)?;
    }
    Ok(EXIT_OK)
}

fn arena_serve(manifest: &Path, host: &str, port: u16, seed: Option<u64>, stdout: &mut dyn Write) -> CliResult<i32> {
    let (state, m) = ArenaState::from_manifest(manifest).map_err(|e| match e {
        crate::arena::ArenaError::Io(io) => CliError::io(manifest, io),
        other => CliError::Data(other.to_string()),
    })?;
    let state = match seed {
        Some(seed) => state.with_seed(seed),
        None => state,
    };
    let app = router(Arc::new(Mutex::new(state)), m.static_dir.as_deref());
    let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::Io(e.to_string()))?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind((host, port))
            .await
            .map_err(|e| CliError::Io(format!("{host}:{port}: {e}")))?;
        let addr = listener.local_addr().map_err(|e| CliError::Io(e.to_string()))?;
        let _ = writeln!(stdout, "arena listening on http://{addr}");
        let _ = stdout.flush();
        serve(listener, app).await.map_err(|e| CliError::Io(e.to_string()))
    })?;
    Ok(EXIT_OK)
}

/// Exit code: 1 if any item failed, else 2 if any hit the iteration cap,
/// else 0.
fn batch(args: BatchArgs, stdout: &mut dyn Write) -> CliResult<i32> {
    if args.parallelism == 0 {
        return Err(CliError::Usage("--parallelism must be at least 1".into()));
    }
    let m = RunManifest::load(&args.manifest)?;
    let cfg = pipeline_config(
        m.strategy,
        &m.backend,
        m.qa_backend.as_deref(),
        m.vlm_backend.as_deref(),
        m.max_qa_iterations,
    )?;
    let items = m
        .items
        .iter()
        .map(|i| {
            Ok(BatchItem {
                scenario: read_scenario(&i.scenario)?,
                instructions: i.instruction.clone(),
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let out = args.out.unwrap_or(m.output_dir);
    let outcomes = run_batch(&items, &cfg, args.parallelism);
    let mut summary = String::from("scenario_id,status,iterations,sma_calls\n");
    for o in &outcomes {
        write_outcome(&out, o)?;
        let _ = writeln!(summary, "{},{},{},{}", o.scenario_id, o.status, o.iterations(), o.sma_calls);
    }
    write_file(&out.join("batch_summary.csv"), &summary)?;
    let count = |st| outcomes.iter().filter(|o| o.status == st).count();
    let (ok, capped, failed) = (
        count(PipelineStatus::Accepted),
        count(PipelineStatus::MaxIterations),
        count(PipelineStatus::Failed),
    );
    let _ = writeln!(stdout, "accepted={ok} max_iterations={capped} failed={failed}");
    Ok(if failed > 0 {
        EXIT_FAILED
    } else if capped > 0 {
        EXIT_MAX_ITERATIONS
    } else {
        EXIT_OK
    })
}

/// Entry point; returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let help = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let rendered = e.render().to_string();
            if help {
                let _ = stdout.write_all(rendered.as_bytes());
                return EXIT_OK;
            }
            let _ = stderr.write_all(rendered.as_bytes());
            return EXIT_USAGE;
        }
    };
    let seed = cli.seed;
    let result = match cli.command {
        Command::Modify(a) => modify(a, stdout),
        Command::Render(a) => render(a, stdout),
        Command::Eval(EvalCommand::Displacement { generated, reference, out }) => {
            eval_displacement(&generated, &reference, out.as_deref(), stdout)
        }
        Command::Eval(EvalCommand::Elo { votes, models, rounds, out }) => {
            eval_elo(&votes, models, rounds, seed.unwrap_or(0), out.as_deref(), stdout)
        }
        Command::Simulate(a) => simulate(a, stdout),
        Command::Arena(ArenaCommand::Serve { manifest, port, host }) => arena_serve(&manifest, &host, port, seed, stdout),
        Command::Batch(a) => batch(a, stdout),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "{e}");
            e.code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{reference_scenario, REFERENCE_INSTRUCTION, REFERENCE_RESPONSE};

    fn call(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(std::iter::once("scenaug").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn usage_errors() {
        assert_eq!(call(&[]).0, EXIT_USAGE);
        assert_eq!(call(&["frobnicate"]).0, EXIT_USAGE);
        assert_eq!(call(&["render", "--out", "x"]).0, EXIT_USAGE);
        assert_eq!(call(&["--help"]).0, EXIT_OK);
    }

    #[test]
    fn modify_reference_scene() {
        let dir = tempfile::tempdir().unwrap();
        let scen = dir.path().join("scene.json");
        std::fs::write(&scen, save_scenario(&reference_scenario())).unwrap();
        let scripts = dir.path().join("scripts");
        std::fs::create_dir(&scripts).unwrap();
        std::fs::write(scripts.join("001.txt"), REFERENCE_RESPONSE).unwrap();
        let out = dir.path().join("out");
        let (code, stdout, stderr) = call(&[
            "modify",
            "--scenario",
            scen.to_str().unwrap(),
            "--instruction",
            REFERENCE_INSTRUCTION,
            "--backend",
            &format!("scripted:{}", scripts.display()),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, EXIT_OK, "{stdout}{stderr}");
        let bytes = std::fs::read(out.join("single-lane-east.modified.json")).unwrap();
        let s = load_scenario(&bytes).unwrap();
        let a2 = s.agent("Agent2").unwrap();
        assert_eq!((a2.center.x, a2.center.y), (21.4, 2.6));
        assert!(out.join("single-lane-east.transcript.json").is_file());
    }

    #[test]
    fn missing_and_malformed_inputs() {
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("nope.json");
        let (code, ..) = call(&["render", "--scenario", missing.to_str().unwrap(), "--out", "x"]);
        assert_eq!(code, EXIT_IO);
        let bad = dir.path().join("bad.json");
        std::fs::write(&bad, "{\"scenario_id\": 3}").unwrap();
        let (code, ..) = call(&["render", "--scenario", bad.to_str().unwrap(), "--out", "x"]);
        assert_eq!(code, EXIT_DATA);
    }
}
