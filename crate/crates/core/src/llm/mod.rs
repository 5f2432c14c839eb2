//! Chat backends: an HTTP client for chat-completion endpoints and a
//! deterministic scripted backend used for offline runs and tests.

mod http;
mod scripted;

pub use http::{BackendConfig, HttpBackend};
pub use scripted::{load_scripted, ScriptRouter, ScriptedBackend, ScriptedResponse};

use serde::{Deserialize, Serialize};
use std::time::Duration;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
    Tool,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::System => "system",
            Role::User => "user",
            Role::Assistant => "assistant",
            Role::Tool => "tool",
        }
    }
}

/// Raster attachment, sent inline with the message.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageAttachment {
    pub bytes: Vec<u8>,
    pub media_type: String,
}

impl ImageAttachment {
    pub fn png(bytes: Vec<u8>) -> Self {
        Self {
            bytes,
            media_type: "image/png".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
    pub image: Option<ImageAttachment>,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self {
            role: Role::System,
            content: content.into(),
            image: None,
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: Role::User,
            content: content.into(),
            image: None,
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self {
            role: Role::Assistant,
            content: content.into(),
            image: None,
        }
    }

    pub fn user_with_image(content: impl Into<String>, image: ImageAttachment) -> Self {
        Self {
            role: Role::User,
            content: content.into(),
            image: Some(image),
        }
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        if self.image.is_some() && self.role != Role::User {
            return Err(LlmError::InvalidRequest(format!(
                "image attached to a {} message",
                self.role.as_str()
            )));
        }
        if self.content.trim().is_empty() && self.image.is_none() {
            return Err(LlmError::InvalidRequest("empty message content".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LlmError {
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("backend error: {0}")]
    Backend(String),
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("scripted backend exhausted after {0} responses")]
    ScriptExhausted(usize),
    #[error("scripted response {index} expects {expected:?} in the prompt")]
    PredicateMismatch { index: usize, expected: String },
    #[error("no script matches the prompt")]
    NoRoute,
}

/// Message as recorded in a call log (images reduced to their size).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoggedMessage {
    pub role: Role,
    pub content: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_bytes: Option<usize>,
}

impl From<&ChatMessage> for LoggedMessage {
    fn from(m: &ChatMessage) -> Self {
        Self {
            role: m.role,
            content: m.content.clone(),
            image_bytes: m.image.as_ref().map(|i| i.bytes.len()),
        }
    }
}

/// One chat call, successful or not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CallRecord {
    pub request: Vec<LoggedMessage>,
    pub response: Result<String, String>,
    pub elapsed_ms: u64,
}

impl CallRecord {
    pub(crate) fn new(messages: &[ChatMessage], response: &Result<String, LlmError>, elapsed: Duration) -> Self {
        Self {
            request: messages.iter().map(LoggedMessage::from).collect(),
            response: response.clone().map_err(|e| e.to_string()),
            elapsed_ms: elapsed.as_millis() as u64,
        }
    }
}

/// A chat model endpoint. Implementations are shareable across threads and
/// append exactly one [`CallRecord`] per call.
pub trait ChatBackend: Send + Sync {
    fn complete(&self, messages: &[ChatMessage]) -> Result<String, LlmError>;

    fn call_log(&self) -> Vec<CallRecord>;
}

/// Validates the conversation shape, then asks the backend for the next
/// assistant turn.
pub fn chat(backend: &dyn ChatBackend, messages: &[ChatMessage]) -> Result<String, LlmError> {
    match messages.first() {
        None => return Err(LlmError::InvalidRequest("no messages".into())),
        Some(m) if !matches!(m.role, Role::System | Role::User) => {
            return Err(LlmError::InvalidRequest(
                "conversation must start with a system or user message".into(),
            ))
        }
        _ => {}
    }
    for m in messages {
        m.validate()?;
    }
    backend.complete(messages)
}
