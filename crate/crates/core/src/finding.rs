//! Findings and the rule catalog.
//!
//! Every finding carries a rule id from [`CATALOG`]; the rule fixes the
//! severity, except `SOTIF-SUPRA-UNIT` which is promoted to error in strict
//! mode.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Info,
    Warning,
    Error,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Info => "info",
            Severity::Warning => "warning",
            Severity::Error => "error",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Finding {
    pub rule_id: String,
    pub severity: Severity,
    pub subject: String,
    pub message: String,
}

impl Finding {
    /// Builds a finding with the catalog severity of `rule`.
    ///
    /// Panics on a rule id missing from the catalog; rule ids are compile-time
    /// constants, so that is a programming error.
    pub fn new(rule: &str, subject: impl Into<String>, message: impl Into<String>) -> Self {
        let entry = rule_entry(rule).unwrap_or_else(|| panic!("rule {rule} is not in the catalog"));
        Finding {
            rule_id: entry.id.to_string(),
            severity: entry.severity,
            subject: subject.into(),
            message: message.into(),
        }
    }

    pub fn with_severity(mut self, severity: Severity) -> Self {
        self.severity = severity;
        self
    }
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:<7} {:<16} {}: {}", self.severity, self.rule_id, self.subject, self.message)
    }
}

/// Sorts by `(rule_id, subject)`, then the remaining fields, and drops exact duplicates.
pub fn sort_findings(findings: &mut Vec<Finding>) {
    findings.sort_by(|a, b| {
        (&a.rule_id, &a.subject, &a.message, a.severity)
            .cmp(&(&b.rule_id, &b.subject, &b.message, b.severity))
    });
    findings.dedup();
}

pub fn count_by_severity(findings: &[Finding], severity: Severity) -> usize {
    findings.iter().filter(|f| f.severity == severity).count()
}

#[derive(Debug, Clone, Copy)]
pub struct RuleEntry {
    pub id: &'static str,
    pub severity: Severity,
    pub summary: &'static str,
}

const fn rule(id: &'static str, severity: Severity, summary: &'static str) -> RuleEntry {
    RuleEntry { id, severity, summary }
}

use Severity::{Error as E, Info as I, Warning as W};

pub const CATALOG: &[RuleEntry] = &[
    rule("MODEL-UNKNOWN-KEY", W, "input key not part of the model schema (error under --strict)"),
    rule("HAZ-NO-ASIL", W, "hazard declared without an ASIL"),
    rule("MODEL-NSR-GOAL", W, "FMEDA row marked not safety-related but tied to a safety goal"),
    rule("MODEL-GOAL-BACKREF", W, "hazard lists a safety goal that does not cover it"),
    rule("MODEL-CASE-EXTRA-ROOT", W, "claim that is neither the case root nor a premise of any argument"),
    rule("MODEL-ARG-EMPTY", W, "argument with neither premises nor evidence"),
    rule("SM-NONDET", E, "two transitions share (from_state, event)"),
    rule("SM-UNREACH", E, "state not reachable from the initial state"),
    rule("SM-DEAD", W, "non-initial state with no outgoing transition"),
    rule("SM-UNUSED-EVT", I, "declared event used by no transition"),
    rule("SIG-NO-UNIT", W, "interface signal without a unit"),
    rule("SIG-NO-RANGE", W, "interface signal without value bounds"),
    rule("SIG-BAD-RANGE", E, "interface signal with range_min > range_max"),
    rule("HARA-UNCOVERED", E, "hazard rated ASIL A or higher covered by no safety goal"),
    rule("HARA-WEAK-GOAL", E, "safety goal rated below the highest ASIL it covers"),
    rule("HARA-QM-COVERED", I, "safety goal covering only QM hazards"),
    rule("HARA-NO-HAZARD", W, "item present but no hazards declared"),
    rule("SOTIF-SUPRA-UNIT", W, "additive harm-model intermediate exceeds 1 (error under --strict)"),
    rule("TR-GOAL-NOREQ", E, "safety goal without a deriving functional requirement"),
    rule("TR-FREQ-NOTREQ", E, "ASIL-rated functional requirement without a deriving technical requirement"),
    rule("TR-TREQ-NOALLOC", E, "technical requirement allocated to no element"),
    rule("TR-REQ-NOTEST", E, "ASIL-rated requirement verified by no test"),
    rule("TR-ASIL-DROP", E, "derives edge whose child ASIL is below the parent ASIL"),
    rule("TR-EDGE-KIND", E, "relation used between node kinds it does not connect"),
    rule("TR-ORPHAN", W, "trace node with no edges"),
    rule("TR-CYCLE", E, "cycle in the derives relation"),
    rule("CCA-UNSUPPORTED", E, "claim supported by no argument"),
    rule("CCA-WEAK", W, "node credibility below the threshold"),
    rule("CCA-STRUCTURE", E, "safety case cannot be assessed (cycle or missing root)"),
];

pub fn rule_entry(id: &str) -> Option<&'static RuleEntry> {
    CATALOG.iter().find(|r| r.id == id)
}
