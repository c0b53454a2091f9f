//! Item definition, interface signals, flat state machines and the item
//! rigor score.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::finding::{Finding, Severity};
use crate::primitives::UnitInterval;

/// Names of the requirement-checklist entries a..f.
pub const REQUIREMENT_CRITERIA: [&str; 6] = [
    "requirement.a_legal_and_standards",
    "requirement.b_vehicle_behaviour_and_modes",
    "requirement.c_quality_performance_availability",
    "requirement.d_constraints_and_dependencies",
    "requirement.e_behavioural_shortfalls_and_failure_modes",
    "requirement.f_actuator_capabilities",
];

/// Names of the boundary-checklist entries a..f.
pub const BOUNDARY_CRITERIA: [&str; 6] = [
    "boundary.a_elements_of_item",
    "boundary.b_effects_on_vehicle",
    "boundary.c_functionality_required_by_others",
    "boundary.d_functionality_required_from_others",
    "boundary.e_allocation_of_functions",
    "boundary.f_operational_scenarios",
];

pub const ARTIFACT_CRITERIA: [&str; 4] = [
    "artifact.state_transition_diagrams",
    "artifact.state_transition_tables",
    "artifact.sequence_diagrams",
    "artifact.use_case_diagrams",
];

pub const SIGNAL_CRITERION: &str = "signals.units_and_ranges";

pub const CRITERIA_COUNT: usize = 17;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemDefinition {
    /// Entity id; defaults to `name` when absent from the input.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub requirement_checklist: [bool; 6],
    #[serde(default)]
    pub boundary_checklist: [bool; 6],
    /// state_transition_diagrams, state_transition_tables, sequence_diagrams, use_case_diagrams
    #[serde(default)]
    pub artifacts_present: [bool; 4],
    #[serde(default)]
    pub interfaces: Vec<InterfaceSignal>,
}

impl ItemDefinition {
    pub fn new(name: impl Into<String>) -> Self {
        ItemDefinition {
            id: None,
            name: name.into(),
            description: String::new(),
            requirement_checklist: [false; 6],
            boundary_checklist: [false; 6],
            artifacts_present: [false; 4],
            interfaces: Vec::new(),
        }
    }

    pub fn entity_id(&self) -> &str {
        self.id.as_deref().unwrap_or(&self.name)
    }

    /// Finding subject for one of this item's signals.
    pub fn signal_subject(&self, signal: &str) -> String {
        format!("{}/{}", self.entity_id(), signal)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    In,
    Out,
    Inout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterfaceSignal {
    pub name: String,
    pub direction: Direction,
    #[serde(default)]
    pub semantic_type: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range_max: Option<f64>,
}

impl InterfaceSignal {
    fn has_unit(&self) -> bool {
        self.unit.as_deref().is_some_and(|u| !u.trim().is_empty())
    }

    fn has_full_range(&self) -> bool {
        matches!((self.range_min, self.range_max), (Some(lo), Some(hi)) if lo <= hi)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Transition {
    pub from: String,
    pub event: String,
    pub to: String,
}

impl Transition {
    pub fn new(from: &str, event: &str, to: &str) -> Self {
        Transition { from: from.into(), event: event.into(), to: to.into() }
    }
}

/// A flat finite state machine. Hierarchical diagrams are flattened before
/// they are declared here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateMachine {
    pub name: String,
    pub states: Vec<String>,
    pub initial: String,
    #[serde(default)]
    pub events: Vec<String>,
    #[serde(default)]
    pub transitions: Vec<Transition>,
}

impl StateMachine {
    pub fn subject(&self, member: &str) -> String {
        format!("{}/{}", self.name, member)
    }

    /// States reachable from `initial`, breadth first.
    pub fn reachable_states(&self) -> BTreeSet<&str> {
        let mut successors: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for t in &self.transitions {
            successors.entry(t.from.as_str()).or_default().push(t.to.as_str());
        }
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::new();
        if self.states.iter().any(|s| s == &self.initial) {
            seen.insert(self.initial.as_str());
            queue.push_back(self.initial.as_str());
        }
        while let Some(state) = queue.pop_front() {
            for &next in successors.get(state).into_iter().flatten() {
                if seen.insert(next) {
                    queue.push_back(next);
                }
            }
        }
        seen
    }
}

/// Determinism, reachability, dead-state and unused-event checks.
pub fn validate_state_machine(sm: &StateMachine) -> Vec<Finding> {
    let mut findings = Vec::new();

    let mut by_key: BTreeMap<(&str, &str), Vec<&str>> = BTreeMap::new();
    for t in &sm.transitions {
        by_key.entry((t.from.as_str(), t.event.as_str())).or_default().push(t.to.as_str());
    }
    for ((from, event), targets) in &by_key {
        if targets.len() > 1 {
            findings.push(Finding::new(
                "SM-NONDET",
                sm.subject(from),
                format!("event '{event}' has {} transitions: -> {}", targets.len(), targets.join(", ")),
            ));
        }
    }

    let reachable = sm.reachable_states();
    for state in &sm.states {
        if !reachable.contains(state.as_str()) {
            findings.push(Finding::new(
                "SM-UNREACH",
                sm.subject(state),
                format!("state '{state}' is not reachable from initial state '{}'", sm.initial),
            ));
        }
    }

    let sources: BTreeSet<&str> = sm.transitions.iter().map(|t| t.from.as_str()).collect();
    for state in &sm.states {
        if state != &sm.initial && !sources.contains(state.as_str()) {
            findings.push(Finding::new(
                "SM-DEAD",
                sm.subject(state),
                format!("state '{state}' has no outgoing transition"),
            ));
        }
    }

    let used: BTreeSet<&str> = sm.transitions.iter().map(|t| t.event.as_str()).collect();
    for event in &sm.events {
        if !used.contains(event.as_str()) {
            findings.push(Finding::new(
                "SM-UNUSED-EVT",
                sm.subject(event),
                format!("event '{event}' triggers no transition"),
            ));
        }
    }

    crate::finding::sort_findings(&mut findings);
    findings
}

/// Unit and value-range completeness of the item's interface signals.
pub fn check_signals(item: &ItemDefinition) -> Vec<Finding> {
    let mut findings = Vec::new();
    for sig in &item.interfaces {
        let subject = item.signal_subject(&sig.name);
        if !sig.has_unit() {
            findings.push(Finding::new("SIG-NO-UNIT", subject.clone(), format!("signal '{}' has no unit", sig.name)));
        }
        match (sig.range_min, sig.range_max) {
            (None, None) => findings.push(Finding::new(
                "SIG-NO-RANGE",
                subject,
                format!("signal '{}' declares no value range", sig.name),
            )),
            (Some(lo), Some(hi)) if lo > hi => findings.push(Finding::new(
                "SIG-BAD-RANGE",
                subject,
                format!("signal '{}' range_min {lo} exceeds range_max {hi}", sig.name),
            )),
            _ => {}
        }
    }
    crate::finding::sort_findings(&mut findings);
    findings
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RigorScore {
    pub score: UnitInterval,
    pub satisfied: usize,
    pub total: usize,
    /// Unsatisfied criteria, in catalog order.
    pub missing: Vec<String>,
}

/// Fraction of the 17 equally weighted item-definition criteria that hold.
///
/// The state-transition-diagram flag only counts when at least one machine
/// is supplied and none of the supplied machines has an error finding. The
/// signal criterion needs at least one signal, and every signal needs a unit
/// and both bounds.
pub fn score_item_rigor(item: &ItemDefinition, machines: &[StateMachine]) -> RigorScore {
    let machines_clean = !machines.is_empty()
        && machines
            .iter()
            .all(|m| validate_state_machine(m).iter().all(|f| f.severity != Severity::Error));
    let signals_complete =
        !item.interfaces.is_empty() && item.interfaces.iter().all(|s| s.has_unit() && s.has_full_range());

    let mut artifacts = item.artifacts_present;
    artifacts[0] = artifacts[0] && machines_clean;

    let checks = REQUIREMENT_CRITERIA
        .iter()
        .zip(item.requirement_checklist)
        .chain(BOUNDARY_CRITERIA.iter().zip(item.boundary_checklist))
        .chain(ARTIFACT_CRITERIA.iter().zip(artifacts))
        .chain(std::iter::once((&SIGNAL_CRITERION, signals_complete)));

    let mut satisfied = 0;
    let mut missing = Vec::new();
    for (name, ok) in checks {
        if ok {
            satisfied += 1;
        } else {
            missing.push(name.to_string());
        }
    }
    let score = UnitInterval::new(satisfied as f64 / CRITERIA_COUNT as f64).expect("ratio in [0,1]");
    RigorScore { score, satisfied, total: CRITERIA_COUNT, missing }
}
