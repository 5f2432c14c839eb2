use super::PromptError;
use regex::Regex;
use serde::{Deserialize, Serialize};
use std::fmt::Write;
use std::sync::OnceLock;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum VqaStage {
    EngineerQuestions,
    VlmAnswer,
    EngineerVerdict,
}

/// Inputs shared by the three visual-QA stages; each stage checks the
/// subset it needs.
#[derive(Debug, Clone, Default)]
pub struct VqaContext<'a> {
    pub scenario_id: &'a str,
    pub instructions: &'a str,
    /// Modified agent vectors, one per line.
    pub modified_vectors: &'a str,
    pub questions: &'a [String],
    pub answers: &'a [String],
    pub has_image: bool,
}

fn numbered(out: &mut String, items: &[String]) {
    for (i, q) in items.iter().enumerate() {
        let _ = writeln!(out, "{}. {}", i + 1, q.trim());
    }
}

pub fn encode_vqa_prompt(stage: VqaStage, ctx: &VqaContext<'_>) -> Result<String, PromptError> {
    let need = |ok: bool, what: &str| {
        if ok {
            Ok(())
        } else {
            Err(PromptError::StageInput(format!("{stage:?} needs {what}")))
        }
    };
    let mut out = String::new();
    match stage {
        VqaStage::EngineerQuestions => {
            need(!ctx.instructions.trim().is_empty(), "instruction text")?;
            let _ = writeln!(
                out,
                "You are a traffic engineer checking an edited driving scenario. A vision model will look at a \
top-down image of the result: red is the ego vehicle, blue are the edited agents, dark gray are other agents, \
gray is drivable area, olive are walkways, and grid lines are 5 m apart.\n"
            );
            let _ = writeln!(out, "Scenario ID: {}\n", ctx.scenario_id);
            let _ = writeln!(out, "User Instructions:\n{}\n", ctx.instructions.trim());
            if !ctx.modified_vectors.trim().is_empty() {
                let _ = writeln!(out, "Modified Vectors:\n{}\n", ctx.modified_vectors.trim());
            }
            out.push_str(
                "Write short questions about the image whose answers reveal whether the edit is correct: \
placement, distance, heading, lane, overlaps and drivable area. Do not answer them; list numbered questions",
            );
        }
        VqaStage::VlmAnswer => {
            need(!ctx.questions.is_empty(), "at least one question")?;
            need(ctx.has_image, "an attached image")?;
            let _ = writeln!(
                out,
                "The attached image is a top-down view of a driving scenario. Red is the ego vehicle, blue are \
edited agents, dark gray are other agents, gray is drivable area, olive are walkways, grid lines are 5 m apart, \
north is up.\n"
            );
            let _ = writeln!(out, "Scenario ID: {}\n", ctx.scenario_id);
            out.push_str("Answer each question from the image, using the same numbering:\n");
            numbered(&mut out, ctx.questions);
        }
        VqaStage::EngineerVerdict => {
            need(!ctx.questions.is_empty(), "the questions")?;
            need(!ctx.answers.is_empty(), "the answers")?;
            let _ = writeln!(
                out,
                "You are a traffic engineer deciding whether an edited driving scenario implements the user's \
instructions. A vision model answered your questions about a top-down image of the result.\n"
            );
            let _ = writeln!(out, "Scenario ID: {}\n", ctx.scenario_id);
            let _ = writeln!(out, "User Instructions:\n{}\n", ctx.instructions.trim());
            out.push_str("Questions:\n");
            numbered(&mut out, ctx.questions);
            out.push_str("\nAnswers:\n");
            numbered(&mut out, ctx.answers);
            out.push_str(
                "\nExplain what must change after \"Feedback:\" if the edit is wrong. \
End with a final line that holds a single verdict token, PASS or FAIL.\n",
            );
        }
    }
    Ok(out)
}

/// Items of a numbered list (`1. text` or `1) text`).
pub fn parse_numbered(text: &str) -> Vec<String> {
    static RE: OnceLock<Regex> = OnceLock::new();
    let re = RE.get_or_init(|| Regex::new(r"(?m)^[ \t*>-]*\d+[.)][ \t]+(.+?)[ \t]*$").expect("valid list regex"));
    re.captures_iter(text).map(|c| c[1].to_string()).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub pass: bool,
    pub feedback: String,
}

/// Verdict from the final non-empty line, case-insensitively.
pub fn parse_verdict(text: &str) -> Result<Verdict, PromptError> {
    let last = text
        .lines()
        .rev()
        .find(|l| !l.trim().is_empty())
        .ok_or_else(|| PromptError::VerdictParse("empty reply".into()))?;
    let tokens: Vec<String> = last
        .split(|c: char| !c.is_ascii_alphabetic())
        .map(str::to_ascii_uppercase)
        .filter(|t| t == "PASS" || t == "FAIL")
        .collect();
    let pass = match (tokens.iter().any(|t| t == "PASS"), tokens.iter().any(|t| t == "FAIL")) {
        (true, false) => true,
        (false, true) => false,
        _ => {
            return Err(PromptError::VerdictParse(format!(
                "final line {:?} must hold exactly one of PASS or FAIL",
                last.trim()
            )))
        }
    };
    static FB: OnceLock<Regex> = OnceLock::new();
    let fb = FB.get_or_init(|| Regex::new(r"(?im)^[ \t>#*_-]*feedback[ \t*_]*:").expect("valid feedback regex"));
    let body = &text[..text.rfind(last).unwrap_or(text.len())];
    let feedback = match fb.find_iter(body).last() {
        Some(m) => body[m.end()..].trim().to_string(),
        None => body.trim().to_string(),
    };
    Ok(Verdict { pass, feedback })
}
