use super::{CallRecord, ChatBackend, ChatMessage, LlmError};
use base64::Engine;
use serde::Deserialize;
use serde_json::{json, Value};
use std::sync::Mutex;
use std::time::{Duration, Instant};

fn default_timeout() -> f64 {
    60.0
}
fn default_retries() -> u32 {
    3
}
fn default_backoff() -> f64 {
    1.0
}
fn default_key_env() -> String {
    "OPENAI_API_KEY".into()
}

/// Endpoint settings for a chat-completion server.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendConfig {
    pub base_url: String,
    pub model_name: String,
    #[serde(default = "default_key_env")]
    pub api_key_env: String,
    #[serde(default = "default_timeout")]
    pub timeout_s: f64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default)]
    pub temperature: f64,
    /// First retry delay; each further retry doubles it.
    #[serde(default = "default_backoff")]
    pub backoff_base_s: f64,
}

impl BackendConfig {
    pub fn new(base_url: impl Into<String>, model_name: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            model_name: model_name.into(),
            api_key_env: default_key_env(),
            timeout_s: default_timeout(),
            max_retries: default_retries(),
            temperature: 0.0,
            backoff_base_s: default_backoff(),
        }
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        if !(self.timeout_s > 0.0 && self.timeout_s.is_finite()) {
            return Err(LlmError::InvalidRequest("timeout_s must be positive".into()));
        }
        if !(self.backoff_base_s >= 0.0 && self.backoff_base_s.is_finite()) {
            return Err(LlmError::InvalidRequest("backoff_base_s must be non-negative".into()));
        }
        if self.base_url.trim().is_empty() || self.model_name.trim().is_empty() {
            return Err(LlmError::InvalidRequest("base_url and model_name are required".into()));
        }
        Ok(())
    }
}

/// Client for the common `/chat/completions` wire format.
pub struct HttpBackend {
    cfg: BackendConfig,
    client: reqwest::blocking::Client,
    log: Mutex<Vec<CallRecord>>,
}

enum Attempt {
    Done(Result<String, LlmError>),
    Retry(String),
}

impl HttpBackend {
    pub fn new(cfg: BackendConfig) -> Result<Self, LlmError> {
        cfg.validate()?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs_f64(cfg.timeout_s))
            .build()
            .map_err(|e| LlmError::Backend(e.to_string()))?;
        Ok(Self {
            cfg,
            client,
            log: Mutex::new(Vec::new()),
        })
    }

    pub fn config(&self) -> &BackendConfig {
        &self.cfg
    }

    fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.cfg.base_url.trim_end_matches('/'))
    }

    fn body(&self, messages: &[ChatMessage]) -> Value {
        let msgs: Vec<Value> = messages
            .iter()
            .map(|m| match &m.image {
                None => json!({"role": m.role.as_str(), "content": m.content}),
                Some(img) => {
                    let data = base64::engine::general_purpose::STANDARD.encode(&img.bytes);
                    json!({
                        "role": m.role.as_str(),
                        "content": [
                            {"type": "text", "text": m.content},
                            {"type": "image_url",
                             "image_url": {"url": format!("data:{};base64,{data}", img.media_type)}}
                        ]
                    })
                }
            })
            .collect();
        json!({
            "model": self.cfg.model_name,
            "temperature": self.cfg.temperature,
            "messages": msgs,
        })
    }

    fn attempt(&self, body: &Value) -> Attempt {
        let mut req = self.client.post(self.endpoint()).json(body);
        if let Ok(key) = std::env::var(&self.cfg.api_key_env) {
            if !key.is_empty() {
                req = req.bearer_auth(key);
            }
        }
        let resp = match req.send() {
            Ok(r) => r,
            Err(e) if e.is_timeout() || e.is_connect() || e.is_request() => return Attempt::Retry(e.to_string()),
            Err(e) => return Attempt::Done(Err(LlmError::Backend(e.to_string()))),
        };
        let status = resp.status();
        let text = resp.text().unwrap_or_default();
        if status.is_success() {
            return Attempt::Done(extract_content(&text));
        }
        let code = status.as_u16();
        if code == 429 || status.is_server_error() {
            Attempt::Retry(format!("HTTP {code}"))
        } else if code == 401 || code == 403 {
            Attempt::Done(Err(LlmError::Auth(format!("HTTP {code}: {}", truncate(&text)))))
        } else {
            Attempt::Done(Err(LlmError::Backend(format!("HTTP {code}: {}", truncate(&text)))))
        }
    }

    fn send(&self, messages: &[ChatMessage]) -> Result<String, LlmError> {
        let body = self.body(messages);
        let mut delay = self.cfg.backoff_base_s;
        let mut last = String::new();
        for attempt in 0..=self.cfg.max_retries {
            if attempt > 0 {
                log::warn!("chat retry {attempt}/{} after {last}", self.cfg.max_retries);
                std::thread::sleep(Duration::from_secs_f64(delay));
                delay *= 2.0;
            }
            match self.attempt(&body) {
                Attempt::Done(r) => return r,
                Attempt::Retry(why) => last = why,
            }
        }
        Err(LlmError::Backend(format!(
            "gave up after {} retries: {last}",
            self.cfg.max_retries
        )))
    }
}

fn truncate(s: &str) -> &str {
    match s.char_indices().nth(200) {
        Some((i, _)) => &s[..i],
        None => s,
    }
}

/// Pulls the assistant text out of a completion body. Native tool calls to
/// `lane_point` are rewritten into the inline `CALL` line form.
fn extract_content(body: &str) -> Result<String, LlmError> {
    let v: Value = serde_json::from_str(body).map_err(|e| LlmError::Backend(format!("malformed completion: {e}")))?;
    let msg = v
        .pointer("/choices/0/message")
        .ok_or_else(|| LlmError::Backend("completion without choices[0].message".into()))?;
    let mut text = msg.get("content").and_then(Value::as_str).unwrap_or_default().to_string();
    if let Some(calls) = msg.get("tool_calls").and_then(Value::as_array) {
        for call in calls {
            let Some(f) = call.get("function") else { continue };
            if f.get("name").and_then(Value::as_str) != Some("lane_point") {
                continue;
            }
            let args: Value = f
                .get("arguments")
                .and_then(Value::as_str)
                .and_then(|a| serde_json::from_str(a).ok())
                .unwrap_or(Value::Null);
            let id = args.get("lane_id").and_then(Value::as_str);
            let dist = args.get("distance_m").and_then(Value::as_f64);
            if let (Some(id), Some(dist)) = (id, dist) {
                if !text.is_empty() && !text.ends_with('\n') {
                    text.push('\n');
                }
                text.push_str(&format!("CALL lane_point({}, {dist})\n", serde_json::to_string(id).unwrap_or_default()));
            }
        }
    }
    if text.trim().is_empty() {
        return Err(LlmError::Backend("completion has no content".into()));
    }
    Ok(text)
}

impl ChatBackend for HttpBackend {
    fn complete(&self, messages: &[ChatMessage]) -> Result<String, LlmError> {
        let start = Instant::now();
        let result = self.send(messages);
        self.log
            .lock()
            .expect("http log poisoned")
            .push(CallRecord::new(messages, &result, start.elapsed()));
        result
    }

    fn call_log(&self) -> Vec<CallRecord> {
        self.log.lock().expect("http log poisoned").clone()
    }
}
