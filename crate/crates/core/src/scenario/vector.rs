use super::{snap_heading, AgentState, AgentType};
use crate::geometry::{normalize_angle, Point};
use serde_json::Value;
use thiserror::Error;

/// Field order of an agent vector.
pub const AGENT_VECTOR_FIELDS: [&str; 8] = [
    "agent_type",
    "x",
    "y",
    "heading",
    "width",
    "length",
    "velocity",
    "lane_id",
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VectorError {
    #[error("agent {id}: expected {} vector fields, got {found}; missing {}", AGENT_VECTOR_FIELDS.len(), missing.join(", "))]
    Arity {
        id: String,
        found: usize,
        missing: Vec<&'static str>,
    },
    #[error("agent {id}: field {field}: {reason}")]
    Field {
        id: String,
        field: &'static str,
        reason: String,
    },
}

/// Fixed three-decimal formatting without a negative zero.
pub fn fmt3(v: f64) -> String {
    let s = format!("{v:.3}");
    if s == "-0.000" {
        "0.000".to_string()
    } else {
        s
    }
}

/// Serializes the vector part of an agent: `["TYPE", x, y, heading, width,
/// length, velocity, "lane"|null]`.
pub fn agent_vector_json(agent: &AgentState) -> String {
    let lane = match &agent.lane_id {
        Some(l) => serde_json::to_string(l).expect("string serializes"),
        None => "null".to_string(),
    };
    format!(
        "[\"{}\", {}, {}, {}, {}, {}, {}, {}]",
        agent.agent_type,
        fmt3(agent.center.x),
        fmt3(agent.center.y),
        fmt3(agent.heading),
        fmt3(agent.width),
        fmt3(agent.length),
        fmt3(agent.velocity),
        lane
    )
}

/// Parses an agent vector; headings are wrapped into (−π, π].
pub fn agent_from_vector(id: &str, values: &[Value]) -> Result<AgentState, VectorError> {
    if values.len() != AGENT_VECTOR_FIELDS.len() {
        let missing = if values.len() < AGENT_VECTOR_FIELDS.len() {
            AGENT_VECTOR_FIELDS[values.len()..].to_vec()
        } else {
            Vec::new()
        };
        return Err(VectorError::Arity {
            id: id.to_string(),
            found: values.len(),
            missing,
        });
    }
    let field_err = |field: &'static str, reason: String| VectorError::Field {
        id: id.to_string(),
        field,
        reason,
    };
    let agent_type = match &values[0] {
        Value::String(s) => s.parse::<AgentType>().map_err(|e| field_err("agent_type", e))?,
        other => return Err(field_err("agent_type", format!("expected string, got {other}"))),
    };
    let num = |i: usize| -> Result<f64, VectorError> {
        let field = AGENT_VECTOR_FIELDS[i];
        match &values[i] {
            Value::Number(n) => n
                .as_f64()
                .filter(|v| v.is_finite())
                .ok_or_else(|| field_err(field, format!("not a finite number: {n}"))),
            other => Err(field_err(field, format!("expected number, got {other}"))),
        }
    };
    let lane_id = match &values[7] {
        Value::Null => None,
        Value::String(s) if s.trim().is_empty() => None,
        Value::String(s) => Some(s.clone()),
        other => return Err(field_err("lane_id", format!("expected string or null, got {other}"))),
    };
    Ok(AgentState {
        id: id.to_string(),
        agent_type,
        center: Point::new(num(1)?, num(2)?),
        heading: normalize_angle(snap_heading(num(3)?)),
        width: num(4)?,
        length: num(5)?,
        velocity: num(6)?,
        lane_id,
    })
}
