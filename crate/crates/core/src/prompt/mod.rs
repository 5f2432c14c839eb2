//! Text protocol between the pipeline and its language-model agents.

mod qa;
mod sma;
mod tool;
mod vqa;

pub use qa::{
    default_common_problems, encode_tqa_prompt, feedback_message, parse_qa_rating, QaRating,
    DEFAULT_COMMON_PROBLEMS, QA_CATEGORIES,
};
pub use sma::{encode_input_vectors, encode_sma_prompt, parse_sma_response, parse_vector_lines, FORMAT_RETRY_MESSAGE};
pub use tool::{format_tool_result, parse_tool_call, parse_tool_result, ToolCallRequest, TOOL_NAME};
pub use vqa::{encode_vqa_prompt, parse_numbered, parse_verdict, Verdict, VqaContext, VqaStage};

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PromptError {
    #[error("missing section {0:?}")]
    MissingSection(String),
    #[error("vector parse error: {0}")]
    VectorParse(String),
    #[error("modification dict parse error: {0}")]
    DictParse(String),
    #[error("tool argument error: {0}")]
    ToolArg(String),
    #[error("rating parse error: {0}")]
    RatingParse(String),
    #[error("stage input error: {0}")]
    StageInput(String),
    #[error("verdict parse error: {0}")]
    VerdictParse(String),
    #[error("invalid prompt config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum LaneFormat {
    Polyline,
    Bezier,
}

/// Prompting strategy: one-shot, function calling, text QA, visual QA.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Strategy {
    Otm,
    Fc,
    Tqa,
    Vqa,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [Strategy::Otm, Strategy::Fc, Strategy::Tqa, Strategy::Vqa];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Otm => "OTM",
            Strategy::Fc => "FC",
            Strategy::Tqa => "TQA",
            Strategy::Vqa => "VQA",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Strategy::ALL
            .into_iter()
            .find(|v| v.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown strategy {s:?} (expected OTM, FC, TQA or VQA)"))
    }
}

/// Invariant: FC uses Bézier lanes with tool instructions, every other
/// strategy uses 5 m polylines without them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptConfig {
    pub lane_format: LaneFormat,
    pub strategy: Strategy,
    pub include_tool_instructions: bool,
}

impl PromptConfig {
    pub fn for_strategy(strategy: Strategy) -> Self {
        let lane_format = if strategy == Strategy::Fc {
            LaneFormat::Bezier
        } else {
            LaneFormat::Polyline
        };
        Self {
            lane_format,
            strategy,
            include_tool_instructions: lane_format == LaneFormat::Bezier,
        }
    }

    pub fn validate(&self) -> Result<(), PromptError> {
        if *self != Self::for_strategy(self.strategy) {
            return Err(PromptError::Config(format!(
                "{} requires {:?} lanes with tool instructions {}",
                self.strategy,
                Self::for_strategy(self.strategy).lane_format,
                if self.strategy == Strategy::Fc { "on" } else { "off" }
            )));
        }
        Ok(())
    }
}

/// Polyline sample spacing in prompts.
pub const POLYLINE_SPACING_M: f64 = 5.0;
