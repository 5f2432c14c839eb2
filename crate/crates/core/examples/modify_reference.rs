//! One-shot modification of the reference scene with a scripted backend.
//!
//! Run: `cargo run --example modify_reference`

use scenaug::corpus::{reference_scenario, REFERENCE_INSTRUCTION, REFERENCE_RESPONSE};
use scenaug::llm::ScriptedBackend;
use scenaug::orchestrator::{run_pipeline, PipelineConfig};
use scenaug::prompt::Strategy;
use scenaug::scenario::agent_vector_json;
use std::sync::Arc;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let backend = Arc::new(ScriptedBackend::new(vec![REFERENCE_RESPONSE]));
    let cfg = PipelineConfig::new(Strategy::Otm, backend);
    let outcome = run_pipeline(&reference_scenario(), REFERENCE_INSTRUCTION, &cfg)?;
    println!("status: {} after {} generation(s)", outcome.status, outcome.iterations());
    if let Some(s) = &outcome.modified_scenario {
        for a in &s.agents {
            println!("{}: {}", a.id, agent_vector_json(a));
        }
    }
    Ok(())
}
