use super::{AgentRole, PipelineConfig, PipelineOutcome, TranscriptEntry};
use crate::llm::{Role, ScriptedBackend};
use crate::prompt::Strategy;
use crate::scenario::agent_vector_json;
use serde_json::{json, Value};
use std::sync::Arc;

/// Structured transcript of a run: messages in order, tool calls, QA
/// records and timings.
pub fn transcript_json(o: &PipelineOutcome) -> String {
    let vectors: Vec<Value> = o
        .result
        .iter()
        .flat_map(|r| r.modified_vectors.iter())
        .map(|a| {
            json!({
                "id": a.id,
                "vector": serde_json::from_str::<Value>(&agent_vector_json(a)).unwrap_or(Value::Null),
            })
        })
        .collect();
    let doc = json!({
        "scenario_id": o.scenario_id,
        "strategy": o.strategy.as_str(),
        "status": o.status.to_string(),
        "iterations": o.iterations(),
        "sma_calls": o.sma_calls,
        "elapsed_ms": o.elapsed_ms,
        "failure": o.failure.as_ref().map(|e| e.to_string()),
        "messages": o.transcript,
        "tool_calls": o.tool_calls,
        "qa_history": o.qa_history,
        "modified_vectors": vectors,
    });
    serde_json::to_string_pretty(&doc).expect("transcript serializes") + "\n"
}

/// Assistant replies of a recorded run, per agent, in call order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReplayScripts {
    pub sma: Vec<String>,
    pub qa: Vec<String>,
    pub vlm: Vec<String>,
}

impl ReplayScripts {
    fn from_entries<'a>(entries: impl Iterator<Item = &'a TranscriptEntry>) -> Self {
        let mut out = Self::default();
        for e in entries.filter(|e| e.role == Role::Assistant) {
            let slot = match e.agent {
                AgentRole::Sma => &mut out.sma,
                AgentRole::Qa => &mut out.qa,
                AgentRole::Vlm => &mut out.vlm,
            };
            slot.push(e.content.clone());
        }
        out
    }

    /// Reads the `messages` array of a file written by [`transcript_json`].
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        #[derive(serde::Deserialize)]
        struct Doc {
            messages: Vec<TranscriptEntry>,
        }
        let doc: Doc = serde_json::from_str(text)?;
        Ok(Self::from_entries(doc.messages.iter()))
    }

    /// Pipeline configuration whose backends replay these scripts.
    pub fn into_config(self, strategy: Strategy) -> PipelineConfig {
        let mut cfg = PipelineConfig::new(strategy, Arc::new(ScriptedBackend::new(self.sma)))
            .with_qa(Arc::new(ScriptedBackend::new(self.qa)));
        if strategy == Strategy::Vqa {
            cfg = cfg.with_vlm(Arc::new(ScriptedBackend::new(self.vlm)));
        }
        cfg
    }
}

pub fn replay_scripts(o: &PipelineOutcome) -> ReplayScripts {
    ReplayScripts::from_entries(o.transcript.iter())
}
