mod common;

use common::{dominant_votes, DOMINANT_RANKS};
use scenaug::corpus::{reference_scenario, synthetic_corpus, write_corpus, BATCH_MANIFEST, REFERENCE_RESPONSE};
use scenaug::eval::{vote_log_line, EloEntry};
use scenaug::scenario::{load_scenario, save_scenario};
use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_scenaug"))
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = bin().args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(run(&["--help"]).0, 0);
    assert_eq!(run(&["--version"]).0, 0);
    assert_eq!(run(&[]).0, 64);
    assert_eq!(run(&["frobnicate"]).0, 64);
    assert_eq!(run(&["render", "--scenario", "x.json", "--png", "5", "--out", "o"]).0, 64);
    assert_eq!(run(&["eval", "elo", "--votes", "v", "--rounds", "lots"]).0, 64);
}

#[test]
fn error_classes_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.json");
    let (code, _, err) = run(&["render", "--scenario", p(&missing), "--out", p(dir.path())]);
    assert_eq!(code, 74, "{err}");
    assert!(err.contains("missing.json"));

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"scenario_id\": 3}").unwrap();
    assert_eq!(run(&["render", "--scenario", p(&bad), "--out", p(dir.path())]).0, 65);

    let votes = dir.path().join("votes.ndjson");
    std::fs::write(&votes, "{not a vote}\n").unwrap();
    assert_eq!(run(&["eval", "elo", "--votes", p(&votes)]).0, 65);

    let empty = dir.path().join("empty");
    std::fs::create_dir(&empty).unwrap();
    assert_eq!(run(&["simulate", "--scenarios", p(&empty)]).0, 65);
}

#[test]
fn batch_then_displacement_against_expected_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synthetic_corpus();
    write_corpus(dir.path(), &corpus).unwrap();
    let (code, stdout, stderr) = run(&["batch", "--manifest", p(&dir.path().join(BATCH_MANIFEST)), "--parallelism", "4"]);
    assert_eq!(code, 0, "{stderr}");
    assert!(stdout.contains("accepted=50 max_iterations=0 failed=0"), "{stdout}");

    let out = dir.path().join("out");
    let summary = std::fs::read_to_string(out.join("batch_summary.csv")).unwrap();
    assert_eq!(summary.lines().filter(|l| l.contains(",ACCEPTED,")).count(), 50);
    for item in &corpus {
        let id = &item.scenario.scenario_id;
        let got = load_scenario(&std::fs::read(out.join(format!("{id}.modified.json"))).unwrap()).unwrap();
        assert_eq!(got, item.expected, "{id}");
    }

    let report = dir.path().join("report");
    let expected = dir.path().join("expected");
    let (code, stdout, stderr) = run(&["eval", "displacement", "--generated", p(&out), "--reference", p(&expected), "--out", p(&report)]);
    assert_eq!(code, 0, "{stderr}");
    assert!(stdout.trim_end().ends_with("aggregate_mean_m,0.000"), "{stdout}");
    assert_eq!(std::fs::read_to_string(report.join("displacement.csv")).unwrap(), stdout);

    let scenarios = dir.path().join("scenarios");
    let (code, stdout, _) = run(&["eval", "displacement", "--generated", p(&scenarios), "--reference", p(&expected)]);
    assert_eq!(code, 0);
    let agg: f64 = stdout.lines().last().unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!(agg > 0.0, "unmodified scenes lack the added agents");
}

#[test]
fn batch_exit_code_reflects_failures() {
    let dir = tempfile::tempdir().unwrap();
    let mut corpus = synthetic_corpus();
    corpus.truncate(3);
    corpus[1].response = "no sections here".into();
    write_corpus(dir.path(), &corpus).unwrap();
    let (code, stdout, _) = run(&["batch", "--manifest", p(&dir.path().join(BATCH_MANIFEST))]);
    assert_eq!(code, 1);
    assert!(stdout.contains("accepted=2 max_iterations=0 failed=1"), "{stdout}");
}

#[test]
fn elo_command_matches_library_ranks_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let votes = dir.path().join("votes.ndjson");
    let log: String = dominant_votes().iter().map(vote_log_line).collect();
    std::fs::write(&votes, log).unwrap();
    let out = dir.path().join("board");
    let args = ["--seed", "7", "eval", "elo", "--votes", p(&votes), "--rounds", "300", "--out", p(&out)];
    let (code, first, stderr) = run(&args);
    assert_eq!(code, 0, "{stderr}");
    assert_eq!(run(&args).1, first);
    assert!(first.starts_with("Rank"));

    let entries: Vec<EloEntry> =
        serde_json::from_str(&std::fs::read_to_string(out.join("leaderboard.json")).unwrap()).unwrap();
    for (model, rank) in DOMINANT_RANKS {
        let e = entries.iter().find(|e| e.model == model).unwrap();
        assert_eq!(e.rank, rank, "{model}");
        assert_eq!(e.votes, 400);
    }
}

#[test]
fn modify_render_and_simulate_reference_scene() {
    let dir = tempfile::tempdir().unwrap();
    let scene = dir.path().join("scene.json");
    std::fs::write(&scene, save_scenario(&reference_scenario())).unwrap();
    let scripts = dir.path().join("scripts");
    std::fs::create_dir(&scripts).unwrap();
    std::fs::write(scripts.join("001.txt"), REFERENCE_RESPONSE).unwrap();
    let out = dir.path().join("out");
    let backend = format!("scripted:{}", p(&scripts));
    let (code, stdout, stderr) = run(&[
        "modify", "--scenario", p(&scene), "--instruction", "Add a parked car", "--backend", &backend, "--out", p(&out),
    ]);
    assert_eq!(code, 0, "{stderr}");
    assert!(stdout.contains("ACCEPTED"));
    let modified = out.join("single-lane-east.modified.json");

    let args = ["render", "--scenario", p(&modified), "--modified", "Agent2", "--png", "128", "--out", p(&out)];
    assert_eq!(run(&args).0, 0);
    let svg = std::fs::read(out.join("single-lane-east.svg")).unwrap();
    assert!(String::from_utf8_lossy(&svg).contains("class=\"agent modified\" data-id=\"Agent2\""));
    assert_eq!(run(&args).0, 0);
    assert_eq!(std::fs::read(out.join("single-lane-east.svg")).unwrap(), svg);
    assert!(std::fs::read(out.join("single-lane-east.png")).unwrap().starts_with(b"\x89PNG"));

    let scenes = dir.path().join("scenes");
    std::fs::create_dir(&scenes).unwrap();
    std::fs::copy(&modified, scenes.join("a.json")).unwrap();
    let sim_out = dir.path().join("sim");
    let (code, stdout, stderr) = run(&["simulate", "--scenarios", p(&scenes), "--out", p(&sim_out)]);
    assert_eq!(code, 0, "{stderr}");
    assert!(stdout.lines().last().unwrap().starts_with("mean,"));
    assert!(sim_out.join("traces").join("single-lane-east.csv").is_file());
}
