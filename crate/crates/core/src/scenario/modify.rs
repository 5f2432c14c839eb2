use super::{AgentState, Scenario, ScenarioError};
use crate::llm::Role;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Action {
    Add,
    Remove,
    Modify,
}

impl FromStr for Action {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "add" => Ok(Action::Add),
            "remove" | "delete" => Ok(Action::Remove),
            "modify" | "update" => Ok(Action::Modify),
            other => Err(format!("unknown action {other:?}")),
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Action::Add => "ADD",
            Action::Remove => "REMOVE",
            Action::Modify => "MODIFY",
        })
    }
}

/// One structured edit emitted by the modifier agent. Keys beyond the
/// action, target and rationale are kept verbatim in `extra`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModificationDict {
    pub action: Action,
    pub modified_agent: String,
    pub rationale: String,
    pub extra: BTreeMap<String, String>,
}

/// Parsed modifier output plus the conversation that produced it.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModificationResult {
    pub insights: String,
    pub summary: String,
    pub modification_dicts: Vec<ModificationDict>,
    pub calculations: String,
    pub modified_vectors: Vec<AgentState>,
    pub transcript: Vec<(Role, String)>,
    /// Number of modifier generations that led to this result.
    pub iterations: usize,
}

impl ModificationResult {
    pub fn vector(&self, id: &str) -> Option<&AgentState> {
        self.modified_vectors.iter().find(|a| a.id == id)
    }

    /// Ids of agents added or modified.
    pub fn touched_ids(&self) -> Vec<String> {
        self.modification_dicts
            .iter()
            .filter(|d| d.action != Action::Remove)
            .map(|d| d.modified_agent.clone())
            .collect()
    }
}

/// Applies the modification dicts in order. Every vector must be claimed by
/// an ADD or MODIFY dict.
pub fn apply_modification(s: &Scenario, m: &ModificationResult) -> Result<Scenario, ScenarioError> {
    for v in &m.modified_vectors {
        let claimed = m
            .modification_dicts
            .iter()
            .any(|d| d.modified_agent == v.id && d.action != Action::Remove);
        if !claimed {
            return Err(ScenarioError::Integrity(format!(
                "modified vector {} has no ADD/MODIFY dict",
                v.id
            )));
        }
    }

    let mut out = s.clone();
    for dict in &m.modification_dicts {
        let target = dict.modified_agent.as_str();
        let existing = out.agents.iter().position(|a| a.id == target);
        let vector = || {
            m.vector(target).ok_or_else(|| {
                ScenarioError::Integrity(format!("{} of {target} without a modified vector", dict.action))
            })
        };
        match (dict.action, existing) {
            (Action::Add, Some(_)) => {
                return Err(ScenarioError::Integrity(format!("ADD of existing agent {target}")))
            }
            (Action::Add, None) => {
                let v = vector()?;
                v.validate()?;
                out.agents.push(v.clone());
            }
            (Action::Remove | Action::Modify, None) => {
                return Err(ScenarioError::Integrity(format!(
                    "{} of unknown agent {target}",
                    dict.action
                )))
            }
            (Action::Remove, Some(i)) => {
                out.agents.remove(i);
            }
            (Action::Modify, Some(i)) => {
                let v = vector()?;
                v.validate()?;
                out.agents[i] = v.clone();
            }
        }
    }
    out.validate()?;
    Ok(out)
}
