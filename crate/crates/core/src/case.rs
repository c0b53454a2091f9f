//! Safety-case tree and credibility rollup.
//!
//! Weakest link within an argument leg, best leg across alternatives:
//!
//! ```text
//! evidence = min(confidence, coverage)
//! argument = min(acceptance_criteria_reasonableness, suitability, premises, evidence)
//! claim    = max(supporting arguments), 0 when unsupported
//! ```

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::AnalysisError;
use crate::finding::{sort_findings, Finding};
use crate::primitives::UnitInterval;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Claim {
    pub id: String,
    #[serde(default)]
    pub text: String,
    #[serde(default)]
    pub supported_by: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Argument {
    pub id: String,
    #[serde(default)]
    pub text: String,
    pub acceptance_criteria_reasonableness: UnitInterval,
    pub suitability: UnitInterval,
    #[serde(default)]
    pub premises: Vec<String>,
    #[serde(default)]
    pub evidence: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub id: String,
    #[serde(default)]
    pub text: String,
    pub confidence: UnitInterval,
    pub coverage: UnitInterval,
    /// Model entities (tests, work products, ...) this evidence rests on.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub artifacts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SafetyCase {
    pub root: String,
    #[serde(default)]
    pub claims: Vec<Claim>,
    #[serde(default)]
    pub arguments: Vec<Argument>,
    #[serde(default)]
    pub evidence: Vec<Evidence>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CaseNodeKind {
    Claim,
    Argument,
    Evidence,
}

/// The score that limits a node's credibility.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Factor {
    pub node: String,
    /// `confidence`, `coverage`, `acceptance_criteria_reasonableness`,
    /// `suitability` or `unsupported`.
    pub score: &'static str,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeCredibility {
    pub kind: CaseNodeKind,
    pub credibility: UnitInterval,
    pub limited_by: Factor,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CcaAssessment {
    pub root: String,
    pub root_credibility: UnitInterval,
    pub nodes: BTreeMap<String, NodeCredibility>,
}

struct Rollup<'a> {
    claims: BTreeMap<&'a str, &'a Claim>,
    arguments: BTreeMap<&'a str, &'a Argument>,
    evidence: BTreeMap<&'a str, &'a Evidence>,
    done: BTreeMap<&'a str, NodeCredibility>,
    active: BTreeSet<&'a str>,
}

impl<'a> Rollup<'a> {
    fn evidence(&mut self, id: &'a str) -> NodeCredibility {
        if let Some(n) = self.done.get(id) {
            return n.clone();
        }
        let Some(ev) = self.evidence.get(id) else {
            return missing(id, CaseNodeKind::Evidence);
        };
        let (score, value) = if ev.confidence <= ev.coverage {
            ("confidence", ev.confidence)
        } else {
            ("coverage", ev.coverage)
        };
        let node = NodeCredibility {
            kind: CaseNodeKind::Evidence,
            credibility: value,
            limited_by: Factor { node: id.to_string(), score, value: value.get() },
        };
        self.done.insert(id, node.clone());
        node
    }

    fn argument(&mut self, id: &'a str) -> Result<NodeCredibility, AnalysisError> {
        if let Some(n) = self.done.get(id) {
            return Ok(n.clone());
        }
        let Some(arg) = self.arguments.get(id).copied() else {
            return Ok(missing(id, CaseNodeKind::Argument));
        };
        if !self.active.insert(id) {
            return Err(AnalysisError::CyclicCase(id.to_string()));
        }
        let own = |score, value: UnitInterval| Factor { node: id.to_string(), score, value: value.get() };
        let mut best = (arg.acceptance_criteria_reasonableness, own("acceptance_criteria_reasonableness", arg.acceptance_criteria_reasonableness));
        let mut consider = |cred: UnitInterval, factor: Factor| {
            if cred < best.0 {
                best = (cred, factor);
            }
        };
        consider(arg.suitability, own("suitability", arg.suitability));

        let premises: BTreeSet<&str> = arg.premises.iter().map(String::as_str).collect();
        for p in premises {
            let n = self.claim(p)?;
            consider(n.credibility, n.limited_by);
        }
        let evidence: BTreeSet<&str> = arg.evidence.iter().map(String::as_str).collect();
        for e in evidence {
            let n = self.evidence(e);
            consider(n.credibility, n.limited_by);
        }
        self.active.remove(id);
        let node = NodeCredibility { kind: CaseNodeKind::Argument, credibility: best.0, limited_by: best.1 };
        self.done.insert(id, node.clone());
        Ok(node)
    }

    fn claim(&mut self, id: &'a str) -> Result<NodeCredibility, AnalysisError> {
        if let Some(n) = self.done.get(id) {
            return Ok(n.clone());
        }
        let Some(claim) = self.claims.get(id).copied() else {
            return Ok(missing(id, CaseNodeKind::Claim));
        };
        if !self.active.insert(id) {
            return Err(AnalysisError::CyclicCase(id.to_string()));
        }
        let legs: BTreeSet<&str> = claim.supported_by.iter().map(String::as_str).collect();
        let mut best: Option<NodeCredibility> = None;
        for leg in legs {
            let n = self.argument(leg)?;
            if best.as_ref().is_none_or(|b| n.credibility > b.credibility) {
                best = Some(n);
            }
        }
        self.active.remove(id);
        let node = match best {
            Some(b) => NodeCredibility { kind: CaseNodeKind::Claim, ..b },
            None => NodeCredibility {
                kind: CaseNodeKind::Claim,
                credibility: UnitInterval::ZERO,
                limited_by: Factor { node: id.to_string(), score: "unsupported", value: 0.0 },
            },
        };
        self.done.insert(id, node.clone());
        Ok(node)
    }
}

fn missing(id: &str, kind: CaseNodeKind) -> NodeCredibility {
    NodeCredibility {
        kind,
        credibility: UnitInterval::ZERO,
        limited_by: Factor { node: id.to_string(), score: "missing", value: 0.0 },
    }
}

/// Credibility of every node and of the root claim.
pub fn assess_cca(case: &SafetyCase) -> Result<CcaAssessment, AnalysisError> {
    let mut rollup = Rollup {
        claims: case.claims.iter().map(|c| (c.id.as_str(), c)).collect(),
        arguments: case.arguments.iter().map(|a| (a.id.as_str(), a)).collect(),
        evidence: case.evidence.iter().map(|e| (e.id.as_str(), e)).collect(),
        done: BTreeMap::new(),
        active: BTreeSet::new(),
    };
    if !rollup.claims.contains_key(case.root.as_str()) {
        return Err(AnalysisError::MissingRoot(case.root.clone()));
    }
    let root = rollup.claim(&case.root)?;
    for c in &case.claims {
        rollup.claim(&c.id)?;
    }
    for a in &case.arguments {
        rollup.argument(&a.id)?;
    }
    for e in &case.evidence {
        rollup.evidence(&e.id);
    }
    let nodes = rollup.done.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
    Ok(CcaAssessment { root: case.root.clone(), root_credibility: root.credibility, nodes })
}

/// Unsupported claims, and nodes whose credibility is below `threshold`
/// together with the score that limits them.
pub fn gaps_from_assessment(case: &SafetyCase, assessment: &CcaAssessment, threshold: UnitInterval) -> Vec<Finding> {
    let mut findings = Vec::new();
    let unsupported: BTreeSet<&str> =
        case.claims.iter().filter(|c| c.supported_by.is_empty()).map(|c| c.id.as_str()).collect();
    for id in &unsupported {
        findings.push(Finding::new("CCA-UNSUPPORTED", *id, "claim is supported by no argument"));
    }
    for (id, node) in &assessment.nodes {
        if unsupported.contains(id.as_str()) || node.credibility >= threshold {
            continue;
        }
        let f = &node.limited_by;
        findings.push(Finding::new(
            "CCA-WEAK",
            id.clone(),
            format!(
                "credibility {} < {}; limited by {} {} = {}",
                node.credibility, threshold, f.node, f.score, f.value
            ),
        ));
    }
    sort_findings(&mut findings);
    findings
}

pub fn find_case_gaps(case: &SafetyCase, threshold: UnitInterval) -> Result<Vec<Finding>, AnalysisError> {
    let assessment = assess_cca(case)?;
    Ok(gaps_from_assessment(case, &assessment, threshold))
}
