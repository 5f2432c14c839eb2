use super::*;
use crate::llm::{ScriptedBackend, ScriptedResponse};
use crate::prompt::QA_CATEGORIES;
use crate::scenario::test_support::minimal;

const ADD_AGENT2: &str = "Insights:\nOne lane.\nSummary:\nAdd a parked car.\nModification Dict:\n\
{\"Action\": \"add\", \"Modified_Agent\": \"Agent2\"}\nModification Calculations:\nStep 1: 21.4 m.\n\
Modified Vectors:\n{\"Agent2\": [\"VEHICLE\", 21.4, 2.6, 0.0, 2.0, 4.8, 0.0, \"Lane1\"]}\n";

fn scripted<R: Into<ScriptedResponse>>(r: Vec<R>) -> Arc<dyn ChatBackend> {
    Arc::new(ScriptedBackend::new(r))
}

#[test]
fn one_shot_accepts_first_parse() {
    let cfg = PipelineConfig::new(Strategy::Otm, scripted(vec![ADD_AGENT2]));
    let o = run_pipeline(&minimal(), "add a parked car", &cfg).unwrap();
    assert_eq!(o.status, PipelineStatus::Accepted);
    assert_eq!(o.iterations(), 1);
    let a2 = o.modified_scenario.as_ref().unwrap().agent("Agent2").unwrap();
    assert_eq!((a2.center.x, a2.center.y), (21.4, 2.6));
    assert_eq!(o.transcript.len(), 2);
}

#[test]
fn text_qa_regenerates_until_pass() {
    let qa = scripted(vec![
        "Compliance: 4\nRealism: 3\nLogical Consistency: 4\nFeedback: too close to the lane edge",
        "Compliance: 5\nRealism: 4\nLogical Consistency: 4",
    ]);
    let cfg = PipelineConfig::new(Strategy::Tqa, scripted(vec![ADD_AGENT2, ADD_AGENT2])).with_qa(qa);
    let o = run_pipeline(&minimal(), "add a parked car", &cfg).unwrap();
    assert_eq!(o.status, PipelineStatus::Accepted);
    assert_eq!(o.iterations(), 2);
    assert_eq!(o.qa_history.len(), 2);
    let feedback = &o.result.as_ref().unwrap().transcript[2].1;
    assert!(feedback.contains("Realism"), "{feedback}");
    assert!(feedback.contains("too close"));
}

#[test]
fn text_qa_stops_at_cap() {
    let fail = "Compliance: 2\nRealism: 2\nLogical Consistency: 2\nFeedback: wrong place";
    let mut cfg = PipelineConfig::new(Strategy::Tqa, scripted(vec![ADD_AGENT2; 3])).with_qa(scripted(vec![fail; 3]));
    cfg.max_qa_iterations = 2;
    let o = run_pipeline(&minimal(), "add a parked car", &cfg).unwrap();
    assert_eq!(o.status, PipelineStatus::MaxIterations);
    assert_eq!(o.iterations(), 3);
    assert!(o.result.is_some());
    for m in o.result.unwrap().transcript.iter().filter(|(r, c)| *r == Role::User && c.contains("rejected")) {
        for cat in QA_CATEGORIES {
            assert!(m.1.contains(cat));
        }
    }
}

#[test]
fn function_calling_injects_result() {
    let sma = scripted(vec!["Step 1.\nCALL lane_point(\"Lane1\", 21.4)\n", ADD_AGENT2]);
    let cfg = PipelineConfig::new(Strategy::Fc, sma.clone());
    let o = run_pipeline(&minimal(), "add a parked car", &cfg).unwrap();
    assert_eq!(o.status, PipelineStatus::Accepted);
    assert_eq!(o.tool_calls.len(), 1);
    assert_eq!(o.tool_calls[0].result, "RESULT lane_point: x=21.400, y=0.000, heading=0.0000");
    assert_eq!(o.iterations(), 1);
    assert_eq!(o.sma_calls, 2);
    let second_request = &sma.call_log()[1].request;
    assert_eq!(second_request.last().unwrap().content, o.tool_calls[0].result);
}

#[test]
fn tool_budget_is_enforced() {
    let call = "CALL lane_point(\"Lane1\", 5)";
    let mut cfg = PipelineConfig::new(Strategy::Fc, scripted(vec![call; 3]));
    cfg.max_tool_calls = 2;
    let o = run_pipeline(&minimal(), "x", &cfg).unwrap();
    assert_eq!(o.status, PipelineStatus::Failed);
    assert_eq!(o.failure, Some(PipelineError::ToolBudgetExceeded(2)));
}

#[test]
fn one_format_retry_then_fail() {
    let cfg = PipelineConfig::new(Strategy::Otm, scripted(vec!["garbage", ADD_AGENT2]));
    let o = run_pipeline(&minimal(), "add", &cfg).unwrap();
    assert_eq!(o.status, PipelineStatus::Accepted);
    assert_eq!(o.sma_calls, 2);
    assert!(o.transcript[2].content.starts_with("Your output did not follow the format"));

    let cfg = PipelineConfig::new(Strategy::Otm, scripted(vec!["garbage", "still garbage"]));
    let o = run_pipeline(&minimal(), "add", &cfg).unwrap();
    assert_eq!(o.status, PipelineStatus::Failed);
    assert!(matches!(o.failure, Some(PipelineError::ParseFailure { .. })));
}

#[test]
fn integrity_errors_use_the_retry() {
    let dup = ADD_AGENT2.replace("Agent2", "Agent1");
    let cfg = PipelineConfig::new(Strategy::Otm, scripted(vec![dup.as_str(), ADD_AGENT2]));
    let o = run_pipeline(&minimal(), "add", &cfg).unwrap();
    assert_eq!(o.status, PipelineStatus::Accepted);
}

#[test]
fn exhausted_script_fails_run() {
    let cfg = PipelineConfig::new(Strategy::Otm, scripted(Vec::<&str>::new()));
    let o = run_pipeline(&minimal(), "add", &cfg).unwrap();
    assert_eq!(o.status, PipelineStatus::Failed);
    assert_eq!(o.failure, Some(PipelineError::Backend(LlmError::ScriptExhausted(0))));
}

#[test]
fn visual_qa_round_trip() {
    let qa = scripted(vec![
        "1. Is the blue vehicle ahead of the red one?\n2. Is it left of the lane centre?",
        "Feedback: matches the request\nPASS",
    ]);
    let vlm = scripted(vec!["1. Yes\n2. Yes"]);
    let cfg = PipelineConfig::new(Strategy::Vqa, scripted(vec![ADD_AGENT2]))
        .with_qa(qa)
        .with_vlm(vlm.clone());
    let o = run_pipeline(&minimal(), "add a parked car", &cfg).unwrap();
    assert_eq!(o.status, PipelineStatus::Accepted, "{:?}", o.failure);
    assert!(vlm.call_log()[0].request[0].image_bytes.unwrap() > 0);
    match &o.qa_history[0] {
        QaRecord::Visual { questions, answers, verdict } => {
            assert_eq!(questions.len(), 2);
            assert_eq!(answers, &vec!["Yes".to_string(), "Yes".into()]);
            assert!(verdict.pass);
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn vqa_requires_vlm() {
    let cfg = PipelineConfig::new(Strategy::Vqa, scripted(vec![ADD_AGENT2]));
    assert!(matches!(run_pipeline(&minimal(), "x", &cfg), Err(PipelineError::Config(_))));
}

#[test]
fn transcript_replays_to_same_outcome() {
    let qa = scripted(vec![
        "Compliance: 3\nRealism: 3\nLogical Consistency: 3\nFeedback: redo",
        "Compliance: 5\nRealism: 5\nLogical Consistency: 5",
    ]);
    let cfg = PipelineConfig::new(Strategy::Tqa, scripted(vec!["bad", ADD_AGENT2, ADD_AGENT2])).with_qa(qa);
    let first = run_pipeline(&minimal(), "add", &cfg).unwrap();
    let from_outcome = replay_scripts(&first);
    let from_file = ReplayScripts::from_json(&transcript_json(&first)).unwrap();
    assert_eq!(from_outcome, from_file);
    let again = run_pipeline(&minimal(), "add", &from_file.into_config(Strategy::Tqa)).unwrap();
    assert_eq!(first, again);
}

#[test]
fn batch_isolates_failures_and_keeps_order() {
    let mut items = Vec::new();
    for i in 0..3 {
        let mut s = minimal();
        s.scenario_id = format!("S{i}");
        items.push(BatchItem {
            scenario: s,
            instructions: "add".into(),
        });
    }
    let routes = |skip: usize| {
        let mut m = std::collections::BTreeMap::new();
        for i in 0..3 {
            let script = if i == skip { vec![] } else { vec![ADD_AGENT2] };
            m.insert(format!("Scenario ID: S{i}\n"), ScriptedBackend::new(script));
        }
        Arc::new(crate::llm::ScriptRouter::new(m)) as Arc<dyn ChatBackend>
    };
    let serial = run_batch(&items, &PipelineConfig::new(Strategy::Otm, routes(1)), 1);
    let parallel = run_batch(&items, &PipelineConfig::new(Strategy::Otm, routes(1)), 3);
    assert_eq!(serial, parallel);
    let statuses: Vec<_> = serial.iter().map(|o| o.status).collect();
    assert_eq!(
        statuses,
        vec![PipelineStatus::Accepted, PipelineStatus::Failed, PipelineStatus::Accepted]
    );
    assert_eq!(serial[2].scenario_id, "S2");
}
