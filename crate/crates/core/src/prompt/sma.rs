use super::{LaneFormat, PromptConfig, PromptError, POLYLINE_SPACING_M};
use crate::geometry::Point;
use crate::scenario::{
    agent_from_vector, agent_vector_json, fmt3, Action, AgentState, LaneGeometry, ModificationDict,
    ModificationResult, Scenario,
};
use regex::Regex;
use serde_json::Value;
use std::collections::BTreeMap;
use std::fmt::Write;
use std::sync::OnceLock;

/// Corrective turn sent after an unparseable modifier reply.
pub const FORMAT_RETRY_MESSAGE: &str = "Your output did not follow the format. Reply again with all five sections \
(Insights, Summary, Modification Dict, Modification Calculations, Modified Vectors); \
write every modification dict and every vector as a JSON object on its own line.";

const PREAMBLE: &str = "You edit traffic scenarios that are written as fixed-format vectors. \
Apply the user's natural-language instructions and return the changed agents in the output format below.";

const INPUT_FORMAT: &str = "\
Agent vectors {\"<agent id>\": [agent_type, x, y, heading, width, length, velocity, lane_id]}
  agent_type is one of EGO_VEHICLE, VEHICLE, PEDESTRIAN, BICYCLE, TRAFFIC_CONE, BARRIER, GENERIC_OBJECT; lane_id may be null.
Lane vectors {\"<lane id>\": [lane_number, travel_direction, relative_direction_to_ego, width, speed_limit, coordinates]}
Lane connector vectors {\"<connector id>\": [from_lane, to_lane, traffic_light_state, turn_type, speed_limit, coordinates]}
Area vectors {\"<area id>\": [kind, boundary_points]}
Units: metres, radians and metres per second. The frame is centred on the ego vehicle at the start, x points east, y points north; heading 0 is east and grows counter-clockwise; a positive lateral offset is to the left of the travel direction.";

const INSTRUCTION_FORMAT: &str = "natural language. The instructions name the agents to add, remove or modify and describe positions relative to the ego vehicle or other agents.";

const OUTPUT_FORMAT: &str = "\
Insights: reason step by step about the scene layout and the agents involved.
Summary: restate the requested change in one or two sentences.
Modification Dict: one JSON object per line, {\"Action\": \"add\" | \"remove\" | \"modify\", \"Modified_Agent\": \"<agent id>\", \"Rationale\": \"<why>\"}.
Modification Calculations: the numbered calculation steps that produce each new vector.
Modified Vectors: one JSON object per line, {\"<agent id>\": [agent_type, x, y, heading, width, length, velocity, lane_id]}, for every added or modified agent.";

const LANE_COORDS_POLYLINE: &str = "Lane coordinates are centerline points sampled every 5 m from the lane start.";
const LANE_COORDS_BEZIER: &str = "Lane coordinates are the four control points of a cubic Bezier centerline.";

const TOOL_BLOCK: &str = "\
Tool use:
To look up a point on a lane or lane connector centerline, write one line of exactly this form and stop:
CALL lane_point(\"<lane or connector id>\", <distance in metres along the centerline from its start>)
The answer arrives in the next message as
RESULT lane_point: x=<x>, y=<y>, heading=<heading>
or as RESULT lane_point: ERROR <code>. Use the returned coordinates in your calculations.
Write the final answer, with all five sections, without any CALL line.";

fn coords_json(points: &[Point]) -> String {
    let inner: Vec<String> = points
        .iter()
        .map(|p| format!("[{}, {}]", fmt3(p.x), fmt3(p.y)))
        .collect();
    format!("[{}]", inner.join(", "))
}

fn geometry_coords(g: &LaneGeometry, format: LaneFormat) -> String {
    let points = match format {
        LaneFormat::Polyline => g.sample(POLYLINE_SPACING_M),
        LaneFormat::Bezier => g.to_quad().map(|f| f.quad.points().to_vec()),
    };
    // Validated scenarios always resample; fall back to the raw vertices.
    let points = points.unwrap_or_else(|_| match g {
        LaneGeometry::Polyline(p) => p.clone(),
        LaneGeometry::Bezier(q) => q.points().to_vec(),
    });
    coords_json(&points)
}

fn quote(s: &str) -> String {
    serde_json::to_string(s).expect("string serializes")
}

/// The `Input:` block: agent vectors first, then lanes, connectors and areas.
pub fn encode_input_vectors(s: &Scenario, format: LaneFormat) -> String {
    let mut out = String::new();
    for a in &s.agents {
        let _ = writeln!(out, "{{{}: {}}}", quote(&a.id), agent_vector_json(a));
    }
    for (i, l) in s.lanes.iter().enumerate() {
        let _ = writeln!(
            out,
            "{{{}: [{}, {}, \"{}\", {}, {}, {}]}}",
            quote(&l.id),
            i + 1,
            quote(&l.travel_direction),
            l.relative_direction_to_ego,
            fmt3(l.width),
            fmt3(l.speed_limit),
            geometry_coords(&l.geometry, format)
        );
    }
    for c in &s.connectors {
        let _ = writeln!(
            out,
            "{{{}: [{}, {}, \"{}\", \"{}\", {}, {}]}}",
            quote(&c.id),
            quote(&c.from_lane),
            quote(&c.to_lane),
            c.traffic_light_state,
            c.turn_type,
            fmt3(c.speed_limit),
            geometry_coords(&c.geometry, format)
        );
    }
    for a in &s.areas {
        let _ = writeln!(out, "{{{}: [\"{}\", {}]}}", quote(&a.id), a.kind, coords_json(&a.boundary));
    }
    out
}

/// Modifier prompt. Deterministic in its inputs.
pub fn encode_sma_prompt(s: &Scenario, instructions: &str, cfg: &PromptConfig) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{PREAMBLE}\n");
    let _ = writeln!(out, "Input format:\n{INPUT_FORMAT}");
    let _ = writeln!(
        out,
        "{}\n",
        match cfg.lane_format {
            LaneFormat::Polyline => LANE_COORDS_POLYLINE,
            LaneFormat::Bezier => LANE_COORDS_BEZIER,
        }
    );
    let _ = writeln!(out, "Instruction format: {INSTRUCTION_FORMAT}\n");
    let _ = writeln!(out, "Output format:\n{OUTPUT_FORMAT}\n");
    if cfg.include_tool_instructions {
        let _ = writeln!(out, "{TOOL_BLOCK}\n");
    }
    let _ = writeln!(out, "Scenario ID: {}\n", s.scenario_id);
    let _ = writeln!(out, "Input:\n{}", encode_input_vectors(s, cfg.lane_format));
    let _ = writeln!(out, "User Instructions:\n{}\n", instructions.trim());
    out.push_str("Output:\n");
    out
}

const SECTIONS: [&str; 5] = [
    "Insights",
    "Summary",
    "Modification Dict",
    "Modification Calculations",
    "Modified Vectors",
];

fn header_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(
            r"(?im)^[ \t>#*_]*(insights|summary|modification[ _]dict(?:ionary|s)?|modification[ _]calculations?|modified[ _]vectors?)[ \t*_]*:[ \t*_]*",
        )
        .expect("valid header regex")
    })
}

fn canonical_section(raw: &str) -> usize {
    let l = raw.to_ascii_lowercase().replace('_', " ");
    if l.starts_with("insights") {
        0
    } else if l.starts_with("summary") {
        1
    } else if l.starts_with("modification dict") {
        2
    } else if l.starts_with("modification calc") {
        3
    } else {
        4
    }
}

/// Byte ranges of the top-level `{...}` objects in `text`, honouring JSON
/// string quoting. Unbalanced tails are ignored.
pub(crate) fn json_objects(text: &str) -> Vec<&str> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut start = 0usize;
    let mut in_str = false;
    let mut escaped = false;
    for (i, &b) in bytes.iter().enumerate() {
        if in_str {
            match b {
                _ if escaped => escaped = false,
                b'\\' => escaped = true,
                b'"' => in_str = false,
                _ => {}
            }
            continue;
        }
        match b {
            b'"' if depth > 0 => in_str = true,
            b'{' => {
                if depth == 0 {
                    start = i;
                }
                depth += 1;
            }
            b'}' if depth > 0 => {
                depth -= 1;
                if depth == 0 {
                    out.push(&text[start..=i]);
                }
            }
            _ => {}
        }
    }
    out
}

fn value_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn key_norm(k: &str) -> String {
    k.to_ascii_lowercase().replace([' ', '-'], "_")
}

fn parse_dict(obj: &str) -> Result<ModificationDict, PromptError> {
    let map: serde_json::Map<String, Value> =
        serde_json::from_str(obj).map_err(|e| PromptError::DictParse(format!("{e} in {obj}")))?;
    let mut action = None;
    let mut agent = None;
    let mut rationale = String::new();
    let mut extra = BTreeMap::new();
    for (k, v) in &map {
        match key_norm(k).as_str() {
            "action" => {
                action = Some(
                    value_text(v)
                        .parse::<Action>()
                        .map_err(PromptError::DictParse)?,
                )
            }
            "modified_agent" | "agent" | "agent_id" => agent = Some(value_text(v)),
            "rationale" | "reason" => rationale = value_text(v),
            _ => {
                extra.insert(k.clone(), value_text(v));
            }
        }
    }
    let action = action.ok_or_else(|| PromptError::DictParse(format!("no Action key in {obj}")))?;
    let modified_agent = agent
        .filter(|a| !a.trim().is_empty())
        .ok_or_else(|| PromptError::DictParse(format!("no Modified_Agent key in {obj}")))?;
    Ok(ModificationDict {
        action,
        modified_agent,
        rationale,
        extra,
    })
}

/// Agent vectors written as `{"<id>": [...]}` objects anywhere in `text`.
pub fn parse_vector_lines(text: &str) -> Result<Vec<AgentState>, PromptError> {
    let mut out = Vec::new();
    for obj in json_objects(text) {
        let map: serde_json::Map<String, Value> =
            serde_json::from_str(obj).map_err(|e| PromptError::VectorParse(format!("{e} in {obj}")))?;
        for (id, v) in map {
            let arr = v
                .as_array()
                .ok_or_else(|| PromptError::VectorParse(format!("agent {id}: vector is not a list")))?;
            out.push(agent_from_vector(&id, arr).map_err(|e| PromptError::VectorParse(e.to_string()))?);
        }
    }
    Ok(out)
}

/// Splits a modifier reply into its sections and parses the structured
/// parts. The transcript and iteration count are left for the caller.
pub fn parse_sma_response(text: &str) -> Result<ModificationResult, PromptError> {
    let mut sections: [Option<String>; 5] = Default::default();
    let heads: Vec<_> = header_re().captures_iter(text).collect();
    for (i, cap) in heads.iter().enumerate() {
        let whole = cap.get(0).expect("match");
        let end = heads.get(i + 1).map_or(text.len(), |n| n.get(0).expect("match").start());
        let idx = canonical_section(&cap[1]);
        let body = text[whole.end()..end].trim().to_string();
        // A repeated header keeps the later (usually corrected) content.
        sections[idx] = Some(body);
    }
    let vectors = sections[4]
        .take()
        .ok_or_else(|| PromptError::MissingSection(SECTIONS[4].to_string()))?;
    let dicts = match &sections[2] {
        Some(body) => json_objects(body)
            .into_iter()
            .map(parse_dict)
            .collect::<Result<Vec<_>, _>>()?,
        None => Vec::new(),
    };
    let clean = |s: Option<String>| s.map(|t| t.trim_matches('`').trim().to_string()).unwrap_or_default();
    Ok(ModificationResult {
        insights: clean(sections[0].take()),
        summary: clean(sections[1].take()),
        modification_dicts: dicts,
        calculations: clean(sections[3].take()),
        modified_vectors: parse_vector_lines(&vectors)?,
        transcript: Vec::new(),
        iterations: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prompt::Strategy;
    use crate::scenario::test_support::minimal;
    use crate::scenario::AgentType;

    const FIG2_RESPONSE: &str = "**Insights:**\nSingle eastward lane with the ego at the origin.\n\
**Summary:**\nAdd a parked vehicle ahead, offset to the left.\n\
**Modification Dict:**\n{\"Action\": \"add\", \"Modified_Agent\": \"Agent2\", \"Rationale\": \"parked ahead\", \"Lane\": \"Lane1\"}\n\
**Modification Calculations:**\nStep 1: 21.4 m ahead.\nStep 2: offset 2.6 m.\n\
**Modified Vectors:**\n```json\n{\"Agent2\": [\"VEHICLE\", 21.4, 2.6, 0.0, 2.0, 4.8, 0.0, \"Lane1\"]}\n```\n";

    #[test]
    fn parses_reference_response() {
        let r = parse_sma_response(FIG2_RESPONSE).unwrap();
        assert_eq!(r.modification_dicts.len(), 1);
        assert_eq!(r.modification_dicts[0].action, Action::Add);
        assert_eq!(r.modification_dicts[0].modified_agent, "Agent2");
        assert_eq!(r.modification_dicts[0].extra.get("Lane").map(String::as_str), Some("Lane1"));
        let v = &r.modified_vectors[0];
        assert_eq!((v.agent_type, v.center.x, v.center.y), (AgentType::Vehicle, 21.4, 2.6));
        assert!(r.calculations.starts_with("Step 1"));
    }

    #[test]
    fn missing_vectors_section() {
        let text = FIG2_RESPONSE.split("**Modified Vectors:**").next().unwrap();
        assert_eq!(
            parse_sma_response(text),
            Err(PromptError::MissingSection("Modified Vectors".into()))
        );
    }

    #[test]
    fn short_vector_names_missing_fields() {
        let text = "Modified Vectors:\n{\"Agent2\": [\"VEHICLE\", 21.4, 2.6, 0.0, 2.0]}";
        match parse_sma_response(text) {
            Err(PromptError::VectorParse(msg)) => {
                assert!(msg.contains("length") && msg.contains("velocity") && msg.contains("lane_id"), "{msg}")
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn headers_are_case_and_markup_insensitive() {
        let text = "## MODIFICATION DICT:\n{\"action\": \"remove\", \"modified_agent\": \"Agent3\"}\n__modified vectors__:\n";
        let r = parse_sma_response(text).unwrap();
        assert_eq!(r.modification_dicts[0].action, Action::Remove);
        assert!(r.modified_vectors.is_empty());
    }

    #[test]
    fn bad_dict_is_dict_error() {
        let text = "Modification Dict:\n{\"Modified_Agent\": \"Agent2\"}\nModified Vectors:\n";
        assert!(matches!(parse_sma_response(text), Err(PromptError::DictParse(_))));
    }

    #[test]
    fn encoding_is_deterministic_and_contains_ego() {
        let s = minimal();
        let cfg = PromptConfig::for_strategy(Strategy::Otm);
        let a = encode_sma_prompt(&s, "add a car", &cfg);
        assert_eq!(a, encode_sma_prompt(&s, "add a car", &cfg));
        assert!(a.contains("{\"Agent1\": [\"EGO_VEHICLE\","));
        assert!(a.contains("{\"Lane1\": [1, \"Eastwards\","));
        assert!(!a.contains("CALL lane_point("));
        let fc = encode_sma_prompt(&s, "add a car", &PromptConfig::for_strategy(Strategy::Fc));
        assert!(fc.contains("CALL lane_point("));
        assert!(fc.contains("[[0.000, 0.000], [10.000, 0.000], [20.000, 0.000], [30.000, 0.000]]"));
    }

    #[test]
    fn input_vectors_parse_back() {
        let s = minimal();
        let text = encode_input_vectors(&s, LaneFormat::Polyline);
        let agent_lines: String = text.lines().take(s.agents.len()).collect::<Vec<_>>().join("\n");
        assert_eq!(parse_vector_lines(&agent_lines).unwrap(), s.agents);
    }

    #[test]
    fn object_scanner_respects_strings() {
        let objs = json_objects("x {\"a\": \"}{\"} y {\"b\": {\"c\": 1}} {unterminated");
        assert_eq!(objs, vec!["{\"a\": \"}{\"}", "{\"b\": {\"c\": 1}}"]);
    }
}
