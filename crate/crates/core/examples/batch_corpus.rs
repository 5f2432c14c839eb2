//! Runs the scripted 50-scene corpus through the text-QA strategy on four
//! threads. Each scene's reviewer approves on the first pass.

use scenaug::corpus::synthetic_corpus;
use scenaug::llm::{ScriptRouter, ScriptedBackend};
use scenaug::orchestrator::{run_batch, BatchItem, PipelineConfig, PipelineStatus};
use scenaug::prompt::Strategy;
use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

const APPROVE: &str = "Compliance: 5\nRealism: 5\nLogical Consistency: 4\nFeedback: fine";

fn main() {
    let corpus = synthetic_corpus();
    let sma: BTreeMap<_, _> = corpus
        .iter()
        .map(|c| (c.scenario.scenario_id.clone(), ScriptedBackend::new(vec![c.response.clone()])))
        .collect();
    let qa: BTreeMap<_, _> = corpus
        .iter()
        .map(|c| (c.scenario.scenario_id.clone(), ScriptedBackend::new(vec![APPROVE])))
        .collect();
    let cfg = PipelineConfig::new(Strategy::Tqa, Arc::new(ScriptRouter::new(sma))).with_qa(Arc::new(ScriptRouter::new(qa)));
    let items: Vec<BatchItem> = corpus
        .iter()
        .map(|c| BatchItem { scenario: c.scenario.clone(), instructions: c.instruction.clone() })
        .collect();

    let start = Instant::now();
    let outcomes = run_batch(&items, &cfg, 4);
    let accepted = outcomes.iter().filter(|o| o.status == PipelineStatus::Accepted).count();
    for o in outcomes.iter().filter(|o| o.status != PipelineStatus::Accepted) {
        println!("{}: {} {:?}", o.scenario_id, o.status, o.failure);
    }
    println!("{accepted}/{} accepted in {:?}", outcomes.len(), start.elapsed());
}
