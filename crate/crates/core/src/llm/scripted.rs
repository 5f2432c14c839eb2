use super::{CallRecord, ChatBackend, ChatMessage, LlmError};
use std::collections::BTreeMap;
use std::path::Path;
use std::sync::{Arc, Mutex};
use std::time::Instant;

/// Canned reply, optionally gated on a substring of the incoming prompt.
#[derive(Debug, Clone, PartialEq)]
pub struct ScriptedResponse {
    pub predicate: Option<String>,
    pub text: String,
}

impl From<&str> for ScriptedResponse {
    fn from(text: &str) -> Self {
        Self {
            predicate: None,
            text: text.to_string(),
        }
    }
}

impl From<String> for ScriptedResponse {
    fn from(text: String) -> Self {
        Self {
            predicate: None,
            text,
        }
    }
}

impl ScriptedResponse {
    pub fn expecting(predicate: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            predicate: Some(predicate.into()),
            text: text.into(),
        }
    }
}

#[derive(Default)]
struct ScriptState {
    cursor: usize,
    log: Vec<CallRecord>,
}

/// Replays responses in order; running past the end is an error.
pub struct ScriptedBackend {
    responses: Vec<ScriptedResponse>,
    state: Mutex<ScriptState>,
}

const EXPECT_PREFIX: &str = "@expect ";

fn prompt_text(messages: &[ChatMessage]) -> String {
    messages
        .iter()
        .map(|m| m.content.as_str())
        .collect::<Vec<_>>()
        .join("\n")
}

impl ScriptedBackend {
    pub fn new<R: Into<ScriptedResponse>>(responses: Vec<R>) -> Self {
        Self {
            responses: responses.into_iter().map(Into::into).collect(),
            state: Mutex::new(ScriptState::default()),
        }
    }

    /// Loads `NNN*.txt` files in numeric order. A first line of the form
    /// `@expect <text>` becomes the response's prompt predicate.
    pub fn from_dir(dir: &Path) -> std::io::Result<Self> {
        let mut files: Vec<(u64, std::path::PathBuf)> = Vec::new();
        for entry in std::fs::read_dir(dir)? {
            let path = entry?.path();
            if !path.is_file() || path.extension().is_none_or(|e| e != "txt") {
                continue;
            }
            let name = path.file_name().unwrap_or_default().to_string_lossy();
            let digits: String = name.chars().take_while(|c| c.is_ascii_digit()).collect();
            if let Ok(n) = digits.parse::<u64>() {
                files.push((n, path));
            }
        }
        files.sort();
        let mut responses = Vec::with_capacity(files.len());
        for (_, path) in files {
            let text = std::fs::read_to_string(&path)?;
            responses.push(parse_script_file(&text));
        }
        Ok(Self::new(responses))
    }

    pub fn remaining(&self) -> usize {
        let state = self.state.lock().expect("script state poisoned");
        self.responses.len().saturating_sub(state.cursor)
    }
}

fn parse_script_file(text: &str) -> ScriptedResponse {
    match text.split_once('\n') {
        Some((first, rest)) if first.starts_with(EXPECT_PREFIX) => ScriptedResponse {
            predicate: Some(first[EXPECT_PREFIX.len()..].trim_end_matches('\r').to_string()),
            text: rest.to_string(),
        },
        _ => ScriptedResponse {
            predicate: None,
            text: text.to_string(),
        },
    }
}

impl ChatBackend for ScriptedBackend {
    fn complete(&self, messages: &[ChatMessage]) -> Result<String, LlmError> {
        let start = Instant::now();
        let mut state = self.state.lock().expect("script state poisoned");
        let result = match self.responses.get(state.cursor) {
            None => Err(LlmError::ScriptExhausted(self.responses.len())),
            Some(r) => match &r.predicate {
                Some(p) if !prompt_text(messages).contains(p.as_str()) => {
                    Err(LlmError::PredicateMismatch {
                        index: state.cursor,
                        expected: p.clone(),
                    })
                }
                _ => Ok(r.text.clone()),
            },
        };
        if result.is_ok() {
            state.cursor += 1;
        }
        state.log.push(CallRecord::new(messages, &result, start.elapsed()));
        result
    }

    fn call_log(&self) -> Vec<CallRecord> {
        self.state.lock().expect("script state poisoned").log.clone()
    }
}

/// Dispatches each call to the script whose key occurs in the prompt
/// (longest key wins), so concurrent pipelines keyed by scenario id stay
/// deterministic.
pub struct ScriptRouter {
    routes: BTreeMap<String, ScriptedBackend>,
    log: Mutex<Vec<CallRecord>>,
}

impl ScriptRouter {
    pub fn new(routes: BTreeMap<String, ScriptedBackend>) -> Self {
        Self {
            routes,
            log: Mutex::new(Vec::new()),
        }
    }

    /// One sub-directory of numbered files per key.
    pub fn from_dir(dir: &Path) -> std::io::Result<Self> {
        let mut routes = BTreeMap::new();
        for entry in std::fs::read_dir(dir)? {
            let path = entry?.path();
            if path.is_dir() {
                let key = path.file_name().unwrap_or_default().to_string_lossy().to_string();
                routes.insert(key, ScriptedBackend::from_dir(&path)?);
            }
        }
        Ok(Self::new(routes))
    }

    fn route(&self, prompt: &str) -> Option<&ScriptedBackend> {
        self.routes
            .iter()
            .filter(|(k, _)| prompt.contains(k.as_str()))
            .max_by_key(|(k, _)| k.len())
            .map(|(_, v)| v)
    }
}

impl ChatBackend for ScriptRouter {
    fn complete(&self, messages: &[ChatMessage]) -> Result<String, LlmError> {
        let start = Instant::now();
        let result = match self.route(&prompt_text(messages)) {
            Some(script) => script.complete(messages),
            None => Err(LlmError::NoRoute),
        };
        self.log
            .lock()
            .expect("router log poisoned")
            .push(CallRecord::new(messages, &result, start.elapsed()));
        result
    }

    fn call_log(&self) -> Vec<CallRecord> {
        self.log.lock().expect("router log poisoned").clone()
    }
}

/// Loads a directory as a plain script (numbered files) or, when it only
/// holds sub-directories, as a keyed [`ScriptRouter`].
pub fn load_scripted(dir: &Path) -> std::io::Result<Arc<dyn ChatBackend>> {
    let plain = ScriptedBackend::from_dir(dir)?;
    if plain.responses.is_empty() {
        let router = ScriptRouter::from_dir(dir)?;
        if !router.routes.is_empty() {
            return Ok(Arc::new(router));
        }
    }
    Ok(Arc::new(plain))
}
