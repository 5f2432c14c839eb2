use super::PromptError;
use crate::geometry::{GeometryError, LaneAnchor};
use crate::scenario::fmt3;
use regex::Regex;
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

pub const TOOL_NAME: &str = "lane_point";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolCallRequest {
    pub name: String,
    pub lane_id: String,
    pub distance_m: f64,
}

fn call_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?m)^[ \t`*]*CALL lane_point\((.*)\)[ \t`*]*$").expect("valid call regex"))
}

fn args_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r#"^\s*"([^"\\]*)"\s*,\s*(.*?)\s*$"#).expect("valid args regex"))
}

fn decimal_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^[0-9]+(\.[0-9]+)?$").expect("valid decimal regex"))
}

/// First `CALL lane_point("<id>", <distance>)` line in `text`, if any.
pub fn parse_tool_call(text: &str) -> Result<Option<ToolCallRequest>, PromptError> {
    let Some(cap) = call_re().captures(text) else {
        return Ok(None);
    };
    let args = &cap[1];
    let parts = args_re()
        .captures(args)
        .ok_or_else(|| PromptError::ToolArg(format!("expected (\"<id>\", <distance>), got ({args})")))?;
    let id = parts[1].to_string();
    if id.trim().is_empty() {
        return Err(PromptError::ToolArg("empty lane id".into()));
    }
    let raw = &parts[2];
    if !decimal_re().is_match(raw) {
        return Err(PromptError::ToolArg(format!("distance {raw} is not a non-negative decimal")));
    }
    let distance_m: f64 = raw
        .parse()
        .map_err(|_| PromptError::ToolArg(format!("distance {raw} is not a number")))?;
    Ok(Some(ToolCallRequest {
        name: TOOL_NAME.to_string(),
        lane_id: id,
        distance_m,
    }))
}

fn error_code(e: &GeometryError) -> &'static str {
    match e {
        GeometryError::UnknownId(_) => "UNKNOWN_ID",
        GeometryError::Range { .. } => "OUT_OF_RANGE",
        GeometryError::Domain(_) => "DOMAIN",
        GeometryError::Degenerate(_) => "DEGENERATE",
    }
}

/// The reply line injected after a tool call.
pub fn format_tool_result(result: &Result<LaneAnchor, GeometryError>) -> String {
    match result {
        Ok(a) => format!(
            "RESULT lane_point: x={}, y={}, heading={:.4}",
            fmt3(a.position.x),
            fmt3(a.position.y),
            if a.heading.abs() < 5e-5 { 0.0 } else { a.heading }
        ),
        Err(e) => format!("RESULT lane_point: ERROR {}", error_code(e)),
    }
}

/// Inverse of [`format_tool_result`]: `Ok((x, y, heading))` or the error code.
pub fn parse_tool_result(line: &str) -> Option<Result<(f64, f64, f64), String>> {
    static RE: OnceLock<Regex> = OnceLock::new();
    let re = RE.get_or_init(|| {
        Regex::new(r"RESULT lane_point: (?:x=(-?[0-9.]+), y=(-?[0-9.]+), heading=(-?[0-9.]+)|ERROR (\w+))")
            .expect("valid result regex")
    });
    let cap = re.captures(line)?;
    if let Some(code) = cap.get(4) {
        return Some(Err(code.as_str().to_string()));
    }
    let num = |i: usize| cap[i].parse::<f64>().ok();
    Some(Ok((num(1)?, num(2)?, num(3)?)))
}
