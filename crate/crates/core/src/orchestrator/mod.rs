//! Modifier / quality-assurance agent loops for the four prompting
//! strategies, plus concurrent batch execution.

mod batch;
mod transcript;

pub use batch::{run_batch, BatchItem};
pub use transcript::{replay_scripts, transcript_json, ReplayScripts};

use crate::geometry::lane_point_tool;
use crate::llm::{chat, ChatBackend, ChatMessage, ImageAttachment, LlmError, Role};
use crate::prompt::{
    encode_sma_prompt, encode_tqa_prompt, encode_vqa_prompt, feedback_message, format_tool_result, parse_numbered,
    parse_qa_rating, parse_sma_response, parse_tool_call, parse_verdict, PromptConfig, PromptError, QaRating,
    Strategy, Verdict, VqaContext, VqaStage, FORMAT_RETRY_MESSAGE,
};
use crate::render::{rasterize, render_bev, RenderError, RenderStyle};
use crate::scenario::{agent_vector_json, apply_modification, ModificationResult, Scenario, ScenarioError};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;
use std::time::Instant;
use thiserror::Error;

/// Category named in feedback after a failed visual review.
pub const VISUAL_QA_CATEGORY: &str = "Visual Verification";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineError {
    #[error("invalid pipeline config: {0}")]
    Config(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("unparseable {agent} output after a format retry: {source}")]
    ParseFailure { agent: AgentRole, source: PromptError },
    #[error("modification rejected after a format retry: {0}")]
    Modification(ScenarioError),
    #[error(transparent)]
    Backend(#[from] LlmError),
    #[error("tool budget of {0} calls exceeded")]
    ToolBudgetExceeded(usize),
    #[error(transparent)]
    Render(#[from] RenderError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentRole {
    Sma,
    Qa,
    Vlm,
}

impl fmt::Display for AgentRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AgentRole::Sma => "sma",
            AgentRole::Qa => "qa",
            AgentRole::Vlm => "vlm",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PipelineStatus {
    Accepted,
    MaxIterations,
    Failed,
}

impl fmt::Display for PipelineStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PipelineStatus::Accepted => "ACCEPTED",
            PipelineStatus::MaxIterations => "MAX_ITERATIONS",
            PipelineStatus::Failed => "FAILED",
        })
    }
}

#[derive(Clone)]
pub struct PipelineConfig {
    pub strategy: Strategy,
    /// Maximum number of feedback-driven regenerations.
    pub max_qa_iterations: usize,
    /// Maximum number of tool calls per run.
    pub max_tool_calls: usize,
    pub sma_backend: Arc<dyn ChatBackend>,
    /// Text reviewer and visual-QA engineer.
    pub qa_backend: Arc<dyn ChatBackend>,
    pub vlm_backend: Option<Arc<dyn ChatBackend>>,
    pub common_problems: Vec<String>,
    pub render_style: RenderStyle,
    pub raster_pixels: u32,
}

impl PipelineConfig {
    /// Defaults, with the modifier backend also serving as reviewer.
    pub fn new(strategy: Strategy, sma_backend: Arc<dyn ChatBackend>) -> Self {
        Self {
            strategy,
            max_qa_iterations: 3,
            max_tool_calls: 8,
            qa_backend: sma_backend.clone(),
            sma_backend,
            vlm_backend: None,
            common_problems: crate::prompt::default_common_problems(),
            render_style: RenderStyle::default(),
            raster_pixels: 512,
        }
    }

    pub fn with_qa(mut self, qa: Arc<dyn ChatBackend>) -> Self {
        self.qa_backend = qa;
        self
    }

    pub fn with_vlm(mut self, vlm: Arc<dyn ChatBackend>) -> Self {
        self.vlm_backend = Some(vlm);
        self
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.max_qa_iterations < 1 {
            return Err(PipelineError::Config("max_qa_iterations must be at least 1".into()));
        }
        if self.strategy == Strategy::Fc && self.max_tool_calls < 1 {
            return Err(PipelineError::Config("FC needs max_tool_calls >= 1".into()));
        }
        if self.strategy == Strategy::Vqa && self.vlm_backend.is_none() {
            return Err(PipelineError::Config("VQA needs a vlm backend".into()));
        }
        Ok(())
    }
}

/// One QA round: a text rating or a visual verdict with its questions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum QaRecord {
    Rating(QaRating),
    Visual {
        questions: Vec<String>,
        answers: Vec<String>,
        verdict: Verdict,
    },
}

impl QaRecord {
    pub fn pass(&self) -> bool {
        match self {
            QaRecord::Rating(r) => r.pass(),
            QaRecord::Visual { verdict, .. } => verdict.pass,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub agent: AgentRole,
    pub role: Role,
    pub content: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_bytes: Option<usize>,
    pub elapsed_ms: u64,
}

impl PartialEq for TranscriptEntry {
    fn eq(&self, o: &Self) -> bool {
        (self.agent, self.role, &self.content, self.image_bytes) == (o.agent, o.role, &o.content, o.image_bytes)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolCallRecord {
    pub lane_id: String,
    pub distance_m: f64,
    pub result: String,
}

/// Result of one pipeline run. Equality ignores wall-clock timings.
#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub scenario_id: String,
    pub strategy: Strategy,
    pub status: PipelineStatus,
    /// Last parsed modifier result; absent only when no generation parsed.
    pub result: Option<ModificationResult>,
    pub modified_scenario: Option<Scenario>,
    pub qa_history: Vec<QaRecord>,
    pub tool_calls: Vec<ToolCallRecord>,
    /// Modifier calls, including tool turns and format retries.
    pub sma_calls: usize,
    pub transcript: Vec<TranscriptEntry>,
    pub failure: Option<PipelineError>,
    pub elapsed_ms: u64,
}

impl PartialEq for PipelineOutcome {
    fn eq(&self, o: &Self) -> bool {
        self.scenario_id == o.scenario_id
            && self.strategy == o.strategy
            && self.status == o.status
            && self.result == o.result
            && self.modified_scenario == o.modified_scenario
            && self.qa_history == o.qa_history
            && self.tool_calls == o.tool_calls
            && self.sma_calls == o.sma_calls
            && self.transcript == o.transcript
            && self.failure == o.failure
    }
}

impl PipelineOutcome {
    pub fn failed(scenario_id: &str, strategy: Strategy, err: PipelineError) -> Self {
        Self {
            scenario_id: scenario_id.to_string(),
            strategy,
            status: PipelineStatus::Failed,
            result: None,
            modified_scenario: None,
            qa_history: Vec::new(),
            tool_calls: Vec::new(),
            sma_calls: 0,
            transcript: Vec::new(),
            failure: Some(err),
            elapsed_ms: 0,
        }
    }

    pub fn iterations(&self) -> usize {
        self.result.as_ref().map_or(0, |r| r.iterations)
    }
}

struct Run<'a> {
    s: &'a Scenario,
    instructions: &'a str,
    cfg: &'a PipelineConfig,
    sma_msgs: Vec<ChatMessage>,
    transcript: Vec<TranscriptEntry>,
    tool_calls: Vec<ToolCallRecord>,
    qa_history: Vec<QaRecord>,
    sma_calls: usize,
    generations: usize,
    last: Option<(ModificationResult, Scenario)>,
}

impl<'a> Run<'a> {
    fn call(&mut self, agent: AgentRole, msgs: &[ChatMessage]) -> Result<String, PipelineError> {
        let backend: &dyn ChatBackend = match agent {
            AgentRole::Sma => self.cfg.sma_backend.as_ref(),
            AgentRole::Qa => self.cfg.qa_backend.as_ref(),
            AgentRole::Vlm => self
                .cfg
                .vlm_backend
                .as_deref()
                .ok_or_else(|| PipelineError::Config("no vlm backend".into()))?,
        };
        let last = msgs.last().expect("non-empty conversation");
        self.transcript.push(TranscriptEntry {
            agent,
            role: last.role,
            content: last.content.clone(),
            image_bytes: last.image.as_ref().map(|i| i.bytes.len()),
            elapsed_ms: 0,
        });
        let start = Instant::now();
        let reply = chat(backend, msgs)?;
        self.transcript.push(TranscriptEntry {
            agent,
            role: Role::Assistant,
            content: reply.clone(),
            image_bytes: None,
            elapsed_ms: start.elapsed().as_millis() as u64,
        });
        Ok(reply)
    }

    /// One modifier generation: tool turns, then a parsed, applicable
    /// result. A single format retry covers parse and integrity failures.
    fn generate(&mut self) -> Result<(), PipelineError> {
        self.generations += 1;
        let mut retried = false;
        loop {
            let msgs = self.sma_msgs.clone();
            let reply = self.call(AgentRole::Sma, &msgs)?;
            self.sma_calls += 1;
            self.sma_msgs.push(ChatMessage::assistant(reply.clone()));

            let failure = if self.cfg.strategy == Strategy::Fc {
                match parse_tool_call(&reply) {
                    Ok(Some(call)) => {
                        if self.tool_calls.len() >= self.cfg.max_tool_calls {
                            return Err(PipelineError::ToolBudgetExceeded(self.cfg.max_tool_calls));
                        }
                        let line = format_tool_result(&lane_point_tool(self.s, &call.lane_id, call.distance_m));
                        self.tool_calls.push(ToolCallRecord {
                            lane_id: call.lane_id,
                            distance_m: call.distance_m,
                            result: line.clone(),
                        });
                        self.sma_msgs.push(ChatMessage::user(line));
                        continue;
                    }
                    Ok(None) => None,
                    Err(e) => Some(PipelineError::ParseFailure {
                        agent: AgentRole::Sma,
                        source: e,
                    }),
                }
            } else {
                None
            };
            let failure = match failure {
                Some(f) => f,
                None => match parse_sma_response(&reply) {
                    Err(e) => PipelineError::ParseFailure {
                        agent: AgentRole::Sma,
                        source: e,
                    },
                    Ok(mut result) => match apply_modification(self.s, &result) {
                        Ok(modified) => {
                            result.iterations = self.generations;
                            result.transcript = self.sma_msgs.iter().map(|m| (m.role, m.content.clone())).collect();
                            self.last = Some((result, modified));
                            return Ok(());
                        }
                        Err(e) => PipelineError::Modification(e),
                    },
                },
            };
            if retried {
                return Err(failure);
            }
            retried = true;
            log::warn!("{}: modifier output rejected ({failure}); retrying once", self.s.scenario_id);
            self.sma_msgs
                .push(ChatMessage::user(format!("{FORMAT_RETRY_MESSAGE}\nProblem: {failure}")));
        }
    }

    /// Asks `agent` and parses the reply, with one format retry.
    fn ask_parsed<T>(
        &mut self,
        agent: AgentRole,
        mut msgs: Vec<ChatMessage>,
        parse: impl Fn(&str) -> Result<T, PromptError>,
    ) -> Result<T, PipelineError> {
        let reply = self.call(agent, &msgs)?;
        match parse(&reply) {
            Ok(v) => Ok(v),
            Err(e) => {
                msgs.push(ChatMessage::assistant(reply));
                msgs.push(ChatMessage::user(format!("{FORMAT_RETRY_MESSAGE}\nProblem: {e}")));
                let again = self.call(agent, &msgs)?;
                parse(&again).map_err(|source| PipelineError::ParseFailure { agent, source })
            }
        }
    }

    fn text_review(&mut self) -> Result<(bool, String), PipelineError> {
        let (result, _) = self.last.as_ref().expect("generated");
        let prompt = encode_tqa_prompt(self.s, self.instructions, result, &self.cfg.common_problems);
        let rating = self.ask_parsed(AgentRole::Qa, vec![ChatMessage::user(prompt)], parse_qa_rating)?;
        let pass = rating.pass();
        let msg = feedback_message(&rating.failing_categories(), rating.feedback.as_deref().unwrap_or(""));
        self.qa_history.push(QaRecord::Rating(rating));
        Ok((pass, msg))
    }

    fn visual_review(&mut self) -> Result<(bool, String), PipelineError> {
        let (s, instructions) = (self.s, self.instructions);
        let (result, modified) = self.last.as_ref().expect("generated");
        let ids: BTreeSet<String> = result.touched_ids().into_iter().collect();
        let vectors: String = result
            .modified_vectors
            .iter()
            .map(|a| format!("{{\"{}\": {}}}\n", a.id, agent_vector_json(a)))
            .collect();
        let svg = render_bev(modified, &ids, &self.cfg.render_style).svg;
        let png = rasterize(&svg, self.cfg.raster_pixels)?;

        let ctx = VqaContext {
            scenario_id: &s.scenario_id,
            instructions,
            modified_vectors: &vectors,
            ..Default::default()
        };
        let q_prompt = encode_vqa_prompt(VqaStage::EngineerQuestions, &ctx).map_err(|e| PipelineError::Input(e.to_string()))?;
        let questions = self.ask_parsed(AgentRole::Qa, vec![ChatMessage::user(q_prompt)], |t| {
            let q = parse_numbered(t);
            if q.is_empty() {
                Err(PromptError::StageInput("no numbered questions".into()))
            } else {
                Ok(q)
            }
        })?;

        let a_ctx = VqaContext {
            questions: &questions,
            has_image: true,
            ..ctx.clone()
        };
        let a_prompt = encode_vqa_prompt(VqaStage::VlmAnswer, &a_ctx).map_err(|e| PipelineError::Input(e.to_string()))?;
        let reply = self.call(
            AgentRole::Vlm,
            &[ChatMessage::user_with_image(a_prompt, ImageAttachment::png(png))],
        )?;
        let mut answers = parse_numbered(&reply);
        if answers.is_empty() {
            answers = vec![reply.trim().to_string()];
        }

        let v_ctx = VqaContext {
            questions: &questions,
            answers: &answers,
            ..ctx
        };
        let v_prompt = encode_vqa_prompt(VqaStage::EngineerVerdict, &v_ctx).map_err(|e| PipelineError::Input(e.to_string()))?;
        let verdict = self.ask_parsed(AgentRole::Qa, vec![ChatMessage::user(v_prompt)], parse_verdict)?;
        let pass = verdict.pass;
        let msg = feedback_message(&[VISUAL_QA_CATEGORY], &verdict.feedback);
        self.qa_history.push(QaRecord::Visual {
            questions,
            answers,
            verdict,
        });
        Ok((pass, msg))
    }

    fn drive(&mut self) -> Result<PipelineStatus, PipelineError> {
        loop {
            self.generate()?;
            let (pass, feedback) = match self.cfg.strategy {
                Strategy::Otm | Strategy::Fc => return Ok(PipelineStatus::Accepted),
                Strategy::Tqa => self.text_review()?,
                Strategy::Vqa => self.visual_review()?,
            };
            if pass {
                return Ok(PipelineStatus::Accepted);
            }
            if self.generations > self.cfg.max_qa_iterations {
                log::warn!(
                    "{}: QA still failing after {} regenerations; keeping the last candidate",
                    self.s.scenario_id,
                    self.cfg.max_qa_iterations
                );
                return Ok(PipelineStatus::MaxIterations);
            }
            self.sma_msgs.push(ChatMessage::user(feedback));
        }
    }
}

/// Runs one scenario through the configured strategy. Configuration and
/// input problems are errors; failures during the run yield a `FAILED`
/// outcome that keeps the transcript.
pub fn run_pipeline(s: &Scenario, instructions: &str, cfg: &PipelineConfig) -> Result<PipelineOutcome, PipelineError> {
    cfg.validate()?;
    if instructions.trim().is_empty() {
        return Err(PipelineError::Input("empty instructions".into()));
    }
    s.validate().map_err(|e| PipelineError::Input(e.to_string()))?;
    let start = Instant::now();
    let prompt = encode_sma_prompt(s, instructions, &PromptConfig::for_strategy(cfg.strategy));
    let mut run = Run {
        s,
        instructions,
        cfg,
        sma_msgs: vec![ChatMessage::user(prompt)],
        transcript: Vec::new(),
        tool_calls: Vec::new(),
        qa_history: Vec::new(),
        sma_calls: 0,
        generations: 0,
        last: None,
    };
    let (status, failure) = match run.drive() {
        Ok(st) => (st, None),
        Err(e) => {
            log::error!("{}: pipeline failed: {e}", s.scenario_id);
            (PipelineStatus::Failed, Some(e))
        }
    };
    let (result, modified) = match run.last {
        Some((r, m)) => (Some(r), Some(m)),
        None => (None, None),
    };
    Ok(PipelineOutcome {
        scenario_id: s.scenario_id.clone(),
        strategy: cfg.strategy,
        status,
        result,
        modified_scenario: modified,
        qa_history: run.qa_history,
        tool_calls: run.tool_calls,
        sma_calls: run.sma_calls,
        transcript: run.transcript,
        failure,
        elapsed_ms: start.elapsed().as_millis() as u64,
    })
}

#[cfg(test)]
mod tests;
