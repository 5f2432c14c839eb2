use super::sma::encode_input_vectors;
use super::{LaneFormat, PromptError};
use crate::scenario::{agent_vector_json, ModificationResult, Scenario};
use regex::Regex;
use serde::{Deserialize, Serialize};
use std::fmt::Write;
use std::sync::OnceLock;

/// Shipped list of typical modifier mistakes, one per line.
pub const DEFAULT_COMMON_PROBLEMS: &str = include_str!("common_problems.txt");

pub fn default_common_problems() -> Vec<String> {
    DEFAULT_COMMON_PROBLEMS
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(String::from)
        .collect()
}

pub const QA_CATEGORIES: [&str; 3] = ["Compliance", "Realism", "Logical Consistency"];

/// Three 1–5 scores. Passing means a mean of at least 4, i.e. a sum of at
/// least 12; a failing rating always carries feedback.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaRating {
    pub compliance: u8,
    pub realism: u8,
    pub logical_consistency: u8,
    pub feedback: Option<String>,
}

impl QaRating {
    pub fn scores(&self) -> [u8; 3] {
        [self.compliance, self.realism, self.logical_consistency]
    }

    pub fn sum(&self) -> u32 {
        self.scores().iter().map(|&s| s as u32).sum()
    }

    pub fn mean(&self) -> f64 {
        self.sum() as f64 / 3.0
    }

    pub fn pass(&self) -> bool {
        self.sum() >= 12
    }

    /// Categories scored below 4, the ones a failing mean is blamed on.
    pub fn failing_categories(&self) -> Vec<&'static str> {
        QA_CATEGORIES
            .iter()
            .zip(self.scores())
            .filter(|(_, s)| *s < 4)
            .map(|(c, _)| *c)
            .collect()
    }
}

fn score_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?i)\b(compliance|realism|logical[ _-]consistency)\b[^:\n]{0,40}:[ \t*_]*(-?[0-9]+(?:[.,][0-9]+)?)")
            .expect("valid score regex")
    })
}

fn feedback_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?im)^[ \t>#*_-]*feedback[ \t*_]*:[ \t*_]*").expect("valid feedback regex"))
}

/// Reads the last labelled score of each category and the trailing
/// `Feedback:` section.
pub fn parse_qa_rating(text: &str) -> Result<QaRating, PromptError> {
    let mut scores: [Option<u8>; 3] = [None; 3];
    for cap in score_re().captures_iter(text) {
        let cat = cap[1].to_ascii_lowercase();
        let idx = if cat.starts_with("compliance") {
            0
        } else if cat.starts_with("realism") {
            1
        } else {
            2
        };
        let raw = &cap[2];
        let value: i64 = raw
            .parse()
            .map_err(|_| PromptError::RatingParse(format!("{}: score {raw} is not an integer", QA_CATEGORIES[idx])))?;
        if !(1..=5).contains(&value) {
            return Err(PromptError::RatingParse(format!(
                "{}: score {value} outside 1..5",
                QA_CATEGORIES[idx]
            )));
        }
        scores[idx] = Some(value as u8);
    }
    let mut got = [0u8; 3];
    for (i, s) in scores.iter().enumerate() {
        got[i] = s.ok_or_else(|| PromptError::RatingParse(format!("missing {} score", QA_CATEGORIES[i])))?;
    }
    let feedback = feedback_re()
        .find_iter(text)
        .last()
        .map(|m| text[m.end()..].trim().to_string())
        .filter(|f| !f.is_empty());
    let rating = QaRating {
        compliance: got[0],
        realism: got[1],
        logical_consistency: got[2],
        feedback,
    };
    if !rating.pass() && rating.feedback.is_none() {
        return Err(PromptError::RatingParse("failing rating without a Feedback section".into()));
    }
    Ok(rating)
}

/// Turn appended to the modifier conversation after a failed review.
pub fn feedback_message(failing: &[&str], feedback: &str) -> String {
    format!(
        "A quality review rejected your output.\nFailing categories: {}\nFeedback: {}\n\
Regenerate the complete output in the required format, fixing these problems.",
        failing.join(", "),
        feedback.trim()
    )
}

const QA_PREAMBLE: &str = "You review edits of traffic scenarios written as fixed-format vectors. \
Check whether the modified agents implement the user's instructions correctly and plausibly.";

/// Text-QA prompt. The common-problems block is omitted when the list is
/// empty.
pub fn encode_tqa_prompt(
    s: &Scenario,
    instructions: &str,
    result: &ModificationResult,
    common_problems: &[String],
) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{QA_PREAMBLE}\n");
    let _ = writeln!(out, "Scenario ID: {}\n", s.scenario_id);
    let _ = writeln!(
        out,
        "Original scenario (agents: [agent_type, x, y, heading, width, length, velocity, lane_id]; \
lanes: [lane_number, travel_direction, relative_direction_to_ego, width, speed_limit, centerline points every 5 m]):"
    );
    let _ = writeln!(out, "{}", encode_input_vectors(s, LaneFormat::Polyline));
    let _ = writeln!(out, "User Instructions:\n{}\n", instructions.trim());
    out.push_str("Modification Dict:\n");
    for d in &result.modification_dicts {
        let _ = writeln!(out, "{} {} ({})", d.action, d.modified_agent, d.rationale.trim());
    }
    out.push_str("\nModified Vectors:\n");
    for a in &result.modified_vectors {
        let _ = writeln!(out, "{{{}: {}}}", serde_json::to_string(&a.id).expect("string"), agent_vector_json(a));
    }
    out.push('\n');
    if !common_problems.is_empty() {
        out.push_str("Common problems:\n");
        for p in common_problems {
            let _ = writeln!(out, "- {p}");
        }
        out.push('\n');
    }
    out.push_str(
        "Task:\n\
1. Summarize the requested change.\n\
2. Plan the verification questions needed to check it.\n\
3. Answer each question from the vectors above.\n\
4. Rate the edit from 1 to 5 (integers only) in each category, one per line:\n\
Compliance: <1-5>\n\
Realism: <1-5>\n\
Logical Consistency: <1-5>\n\
Feedback: <what must change; required when any score is below 4>\n",
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::test_support::minimal;

    #[test]
    fn boundary_mean_passes() {
        let r = parse_qa_rating("Compliance: 5 / Realism: 4 / Logical Consistency: 3").unwrap();
        assert_eq!(r.mean(), 4.0);
        assert!(r.pass());
        assert_eq!(r.failing_categories(), vec!["Logical Consistency"]);
    }

    #[test]
    fn failing_rating_needs_feedback() {
        let err = parse_qa_rating("Compliance: 4\nRealism: 3\nLogical Consistency: 4");
        assert!(matches!(err, Err(PromptError::RatingParse(_))));
        let r = parse_qa_rating("**Compliance**: 4\nRealism: 3\nLogical-Consistency: 4\nFeedback: move it").unwrap();
        assert!((r.mean() - 11.0 / 3.0).abs() < 1e-12);
        assert!(!r.pass());
        assert_eq!(r.feedback.as_deref(), Some("move it"));
    }

    #[test]
    fn rejects_bad_scores() {
        assert!(parse_qa_rating("Compliance: 5\nRealism: 7\nLogical Consistency: 5").is_err());
        assert!(parse_qa_rating("Compliance: 4.5\nRealism: 4\nLogical Consistency: 5").is_err());
        assert!(parse_qa_rating("Compliance: 5\nRealism: 5").is_err());
    }

    #[test]
    fn last_score_wins() {
        let r = parse_qa_rating(
            "Realism: 2 was my first thought.\nCompliance: 5\nRealism: 5\nLogical Consistency with the map: 4",
        )
        .unwrap();
        assert_eq!(r.scores(), [5, 5, 4]);
    }

    #[test]
    fn tqa_prompt_lists_problems() {
        let s = minimal();
        let problems = default_common_problems();
        assert_eq!(problems.len(), 8);
        let r = ModificationResult::default();
        let p = encode_tqa_prompt(&s, "add a car", &r, &problems);
        for line in DEFAULT_COMMON_PROBLEMS.lines() {
            assert!(p.contains(line));
        }
        assert_eq!(p, encode_tqa_prompt(&s, "add a car", &r, &problems));
        let bare = encode_tqa_prompt(&s, "add a car", &r, &[]);
        assert!(!bare.contains("Common problems"));
    }
}
