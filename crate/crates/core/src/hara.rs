//! Hazards, safety goals and HARA coverage checks.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::AnalysisError;
use crate::finding::{sort_findings, Finding};
use crate::primitives::Asil;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hazard {
    pub id: String,
    pub description: String,
    #[serde(default)]
    pub operational_situation: String,
    /// `None` when the HARA has not rated the hazard yet.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub asil: Option<Asil>,
    /// Item this hazard belongs to; must name the model's item.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub item: Option<String>,
    /// Back-references to the safety goals addressing this hazard.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub safety_goals: Vec<String>,
}

impl Hazard {
    pub fn new(id: &str, asil: Option<Asil>) -> Self {
        Hazard {
            id: id.into(),
            description: format!("hazard {id}"),
            operational_situation: String::new(),
            asil,
            item: None,
            safety_goals: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SafetyGoal {
    pub id: String,
    pub statement: String,
    pub asil: Asil,
    pub covers: Vec<String>,
}

impl SafetyGoal {
    pub fn new(id: &str, asil: Asil, covers: &[&str]) -> Self {
        SafetyGoal {
            id: id.into(),
            statement: format!("goal {id}"),
            asil,
            covers: covers.iter().map(|s| s.to_string()).collect(),
        }
    }
}

/// Highest level under `QM < A < B < C < D`.
pub fn max_asil<I: IntoIterator<Item = Asil>>(levels: I) -> Result<Asil, AnalysisError> {
    levels.into_iter().max().ok_or(AnalysisError::EmptyInput)
}

/// HARA coverage and goal-strength rules.
///
/// `item` is the id of the item under analysis, when one is declared.
pub fn check_hara(item: Option<&str>, hazards: &[Hazard], goals: &[SafetyGoal]) -> Vec<Finding> {
    let mut findings = Vec::new();
    if let (Some(item), true) = (item, hazards.is_empty()) {
        findings.push(Finding::new("HARA-NO-HAZARD", item, "item has no hazards; HARA not performed"));
    }

    let by_id: BTreeMap<&str, &Hazard> = hazards.iter().map(|h| (h.id.as_str(), h)).collect();

    for hazard in hazards {
        let Some(asil) = hazard.asil else { continue };
        if asil.is_safety_rated() && !goals.iter().any(|g| g.covers.iter().any(|c| c == &hazard.id)) {
            findings.push(Finding::new(
                "HARA-UNCOVERED",
                hazard.id.clone(),
                format!("{asil} hazard is covered by no safety goal"),
            ));
        }
    }

    for goal in goals {
        let covered: Vec<&Hazard> = goal.covers.iter().filter_map(|c| by_id.get(c.as_str()).copied()).collect();
        if let Ok(required) = max_asil(covered.iter().filter_map(|h| h.asil)) {
            if goal.asil < required {
                findings.push(Finding::new(
                    "HARA-WEAK-GOAL",
                    goal.id.clone(),
                    format!("goal is {} but covers a {required} hazard", goal.asil),
                ));
            }
        }
        if !covered.is_empty() && covered.iter().all(|h| h.asil == Some(Asil::QM)) {
            findings.push(Finding::new("HARA-QM-COVERED", goal.id.clone(), "goal covers only QM hazards"));
        }
    }

    sort_findings(&mut findings);
    findings
}
