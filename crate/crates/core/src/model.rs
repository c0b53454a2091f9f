//! The safety-model aggregate and its loader.
//!
//! A model file is one UTF-8 JSON document with the top-level keys `item`,
//! `state_machines`, `hazards`, `safety_goals`, `fmeda`, `sotif`, `targets`,
//! `trace` and `safety_case`. All of them are optional. Ids are unique across
//! the whole model; a trace node may reuse the id of the item, a hazard or a
//! safety goal when it has the matching kind, in which case it stands for
//! that entity.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::case::SafetyCase;
use crate::error::LoadError;
use crate::finding::{sort_findings, Finding, Severity};
use crate::hara::{Hazard, SafetyGoal};
use crate::hw::FmedaRow;
use crate::item::{ItemDefinition, StateMachine};
use crate::sotif::{SotifLeaves, Symbol, ValidationTarget};
use crate::trace::{NodeKind, TraceGraph};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SafetyModel {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub item: Option<ItemDefinition>,
    #[serde(default)]
    pub state_machines: Vec<StateMachine>,
    #[serde(default)]
    pub hazards: Vec<Hazard>,
    #[serde(default)]
    pub safety_goals: Vec<SafetyGoal>,
    #[serde(default)]
    pub fmeda: Vec<FmedaRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sotif: Option<SotifLeaves>,
    #[serde(default)]
    pub targets: Vec<ValidationTarget>,
    #[serde(default)]
    pub trace: TraceGraph,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub safety_case: Option<SafetyCase>,
}

impl SafetyModel {
    /// A model holding only an item.
    pub fn with_item(item: ItemDefinition) -> Self {
        SafetyModel { item: Some(item), ..SafetyModel::empty() }
    }

    pub fn empty() -> Self {
        SafetyModel {
            item: None,
            state_machines: Vec::new(),
            hazards: Vec::new(),
            safety_goals: Vec::new(),
            fmeda: Vec::new(),
            sotif: None,
            targets: Vec::new(),
            trace: TraceGraph::default(),
            safety_case: None,
        }
    }

    /// Item name, or `"unnamed"` for a model without an item.
    pub fn name(&self) -> &str {
        self.item.as_ref().map_or("unnamed", |i| i.name.as_str())
    }

    pub fn item_id(&self) -> Option<&str> {
        self.item.as_ref().map(ItemDefinition::entity_id)
    }

    pub fn hazard(&self, id: &str) -> Option<&Hazard> {
        self.hazards.iter().find(|h| h.id == id)
    }

    pub fn safety_goal(&self, id: &str) -> Option<&SafetyGoal> {
        self.safety_goals.iter().find(|g| g.id == id)
    }

    /// Every entity id declared in the model.
    pub fn entity_ids(&self) -> BTreeSet<&str> {
        let mut ids: BTreeSet<&str> = self.item_id().into_iter().collect();
        ids.extend(self.state_machines.iter().map(|m| m.name.as_str()));
        ids.extend(self.hazards.iter().map(|h| h.id.as_str()));
        ids.extend(self.safety_goals.iter().map(|g| g.id.as_str()));
        ids.extend(self.fmeda.iter().map(|r| r.id.as_str()));
        ids.extend(self.trace.nodes.iter().map(|n| n.id.as_str()));
        if let Some(case) = &self.safety_case {
            ids.extend(case.claims.iter().map(|c| c.id.as_str()));
            ids.extend(case.arguments.iter().map(|a| a.id.as_str()));
            ids.extend(case.evidence.iter().map(|e| e.id.as_str()));
        }
        ids
    }

    /// Whether a finding subject names something in this model: an entity
    /// id, `machine/state`, `machine/event`, `item/signal` or `sotif/<symbol>`.
    pub fn resolves_subject(&self, subject: &str) -> bool {
        if self.entity_ids().contains(subject) {
            return true;
        }
        let Some((scope, member)) = subject.split_once('/') else {
            return false;
        };
        if scope == "sotif" {
            return self.sotif.is_some();
        }
        if let Some(item) = &self.item {
            if scope == item.entity_id() && item.interfaces.iter().any(|s| s.name == member) {
                return true;
            }
        }
        self.state_machines
            .iter()
            .filter(|m| m.name == scope)
            .any(|m| m.states.iter().chain(&m.events).any(|x| x == member))
    }

    /// Serializes back to the model-file schema.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    /// Reject unknown keys instead of warning about them.
    pub strict: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedModel {
    pub model: SafetyModel,
    /// Non-fatal loader findings (unknown keys in lenient mode).
    pub warnings: Vec<Finding>,
}

/// Lenient load; unknown-key warnings are discarded.
pub fn load_model(source_text: &str) -> Result<SafetyModel, LoadError> {
    load_model_with(source_text, LoadOptions::default()).map(|l| l.model)
}

pub fn load_model_with(source_text: &str, options: LoadOptions) -> Result<LoadedModel, LoadError> {
    let mut unknown = Vec::new();
    let mut de = serde_json::Deserializer::from_str(source_text);
    let model: SafetyModel =
        serde_ignored::deserialize(&mut de, |path| unknown.push(path.to_string())).map_err(json_error)?;
    de.end().map_err(json_error)?;

    if options.strict {
        if let Some(path) = unknown.first() {
            return Err(LoadError::schema(path.clone(), "unknown key (rejected in strict mode)"));
        }
    }
    check_structure(&model)?;

    let mut warnings: Vec<Finding> = unknown
        .into_iter()
        .map(|path| Finding::new("MODEL-UNKNOWN-KEY", path.clone(), format!("key '{path}' is not part of the schema")))
        .collect();
    sort_findings(&mut warnings);
    Ok(LoadedModel { model, warnings })
}

fn json_error(err: serde_json::Error) -> LoadError {
    use serde_json::error::Category;
    let (line, column) = (err.line(), err.column());
    match err.classify() {
        Category::Data => LoadError::schema(format!("line {line}, column {column}"), strip_position(&err)),
        Category::Syntax | Category::Eof | Category::Io => {
            LoadError::Parse { line, column, message: strip_position(&err) }
        }
    }
}

fn strip_position(err: &serde_json::Error) -> String {
    let text = err.to_string();
    match text.rfind(" at line ") {
        Some(i) => text[..i].to_string(),
        None => text,
    }
}

fn unique<'a>(seen: &mut BTreeSet<&'a str>, id: &'a str) -> Result<(), LoadError> {
    if seen.insert(id) {
        Ok(())
    } else {
        Err(LoadError::reference(id, "duplicate id"))
    }
}

fn require(known: &BTreeSet<&str>, id: &str, what: &str) -> Result<(), LoadError> {
    if known.contains(id) {
        Ok(())
    } else {
        Err(LoadError::reference(id, format!("{what} does not resolve")))
    }
}

/// Invariants the deserializer cannot express: nonempty names, bounds
/// order, id uniqueness and reference resolution.
fn check_structure(model: &SafetyModel) -> Result<(), LoadError> {
    let item_id = model.item_id();
    if model.item.as_ref().is_some_and(|i| i.name.trim().is_empty()) {
        return Err(LoadError::schema("item.name", "item name must be nonempty"));
    }
    let mut signals = BTreeSet::new();
    for sig in model.item.iter().flat_map(|i| &i.interfaces) {
        if !signals.insert(sig.name.as_str()) {
            return Err(LoadError::reference(sig.name.clone(), "duplicate signal name"));
        }
        for bound in [sig.range_min, sig.range_max].into_iter().flatten() {
            if !bound.is_finite() {
                return Err(LoadError::schema(format!("item.interfaces.{}", sig.name), "bound must be finite"));
            }
        }
        if let (Some(lo), Some(hi)) = (sig.range_min, sig.range_max) {
            if lo > hi {
                return Err(LoadError::schema(
                    format!("item.interfaces.{}", sig.name),
                    format!("range_min {lo} exceeds range_max {hi}"),
                ));
            }
        }
    }

    // model-wide uniqueness
    let mut seen: BTreeSet<&str> = BTreeSet::new();
    if let Some(id) = item_id {
        unique(&mut seen, id)?;
    }
    for m in &model.state_machines {
        unique(&mut seen, &m.name)?;
    }
    for h in &model.hazards {
        unique(&mut seen, &h.id)?;
    }
    for g in &model.safety_goals {
        unique(&mut seen, &g.id)?;
    }
    for r in &model.fmeda {
        unique(&mut seen, &r.id)?;
    }
    let projections: BTreeMap<&str, NodeKind> = item_id.map(|id| (id, NodeKind::Item)).into_iter()
        .chain(model.hazards.iter().map(|h| (h.id.as_str(), NodeKind::Hazard)))
        .chain(model.safety_goals.iter().map(|g| (g.id.as_str(), NodeKind::SafetyGoal)))
        .collect();
    let mut trace_ids = BTreeSet::new();
    for node in &model.trace.nodes {
        if !trace_ids.insert(node.id.as_str()) {
            return Err(LoadError::reference(node.id.clone(), "duplicate id"));
        }
        match projections.get(node.id.as_str()) {
            Some(kind) if *kind == node.kind => {}
            Some(kind) => {
                return Err(LoadError::reference(
                    node.id.clone(),
                    format!("trace node of kind {} reuses the id of a {kind}", node.kind),
                ))
            }
            None => unique(&mut seen, &node.id)?,
        }
    }
    if let Some(case) = &model.safety_case {
        for id in case
            .claims
            .iter()
            .map(|c| &c.id)
            .chain(case.arguments.iter().map(|a| &a.id))
            .chain(case.evidence.iter().map(|e| &e.id))
        {
            unique(&mut seen, id)?;
        }
    }

    for m in &model.state_machines {
        if m.states.is_empty() {
            return Err(LoadError::schema(format!("state_machines.{}", m.name), "machine has no states"));
        }
        let states: BTreeSet<&str> = m.states.iter().map(String::as_str).collect();
        if states.len() != m.states.len() {
            return Err(LoadError::schema(format!("state_machines.{}", m.name), "duplicate state"));
        }
        let events: BTreeSet<&str> = m.events.iter().map(String::as_str).collect();
        if events.len() != m.events.len() {
            return Err(LoadError::schema(format!("state_machines.{}", m.name), "duplicate event"));
        }
        require(&states, &m.initial, "initial state")?;
        for t in &m.transitions {
            require(&states, &t.from, "transition source state")?;
            require(&states, &t.to, "transition target state")?;
            require(&events, &t.event, "transition event")?;
        }
    }

    let hazard_ids: BTreeSet<&str> = model.hazards.iter().map(|h| h.id.as_str()).collect();
    let goal_ids: BTreeSet<&str> = model.safety_goals.iter().map(|g| g.id.as_str()).collect();
    for h in &model.hazards {
        if h.description.trim().is_empty() {
            return Err(LoadError::schema(format!("hazards.{}", h.id), "description must be nonempty"));
        }
        if let Some(it) = &h.item {
            if Some(it.as_str()) != item_id {
                return Err(LoadError::reference(it.clone(), format!("hazard {} names an unknown item", h.id)));
            }
        }
        for g in &h.safety_goals {
            require(&goal_ids, g, &format!("safety goal referenced by hazard {}", h.id))?;
        }
    }
    for g in &model.safety_goals {
        if g.covers.is_empty() {
            return Err(LoadError::schema(format!("safety_goals.{}", g.id), "goal must cover at least one hazard"));
        }
        for h in &g.covers {
            require(&hazard_ids, h, &format!("hazard covered by goal {}", g.id))?;
        }
    }
    for r in &model.fmeda {
        if r.dc_latent.is_some() && !r.can_be_latent {
            return Err(LoadError::schema(format!("fmeda.{}", r.id), "dc_latent given but can_be_latent is false"));
        }
        if let Some(g) = &r.safety_goal {
            require(&goal_ids, g, &format!("safety goal of FMEDA row {}", r.id))?;
        }
    }
    for t in &model.targets {
        if !(t.threshold.is_finite() && t.threshold >= 0.0) {
            return Err(LoadError::schema(format!("targets.{}", t.name), "threshold must be finite and >= 0"));
        }
        t.symbol
            .parse::<Symbol>()
            .map_err(|e| LoadError::schema(format!("targets.{}", t.name), e.to_string()))?;
    }
    for e in &model.trace.edges {
        require(&trace_ids, &e.from, "trace edge source")?;
        require(&trace_ids, &e.to, "trace edge target")?;
    }
    if let Some(case) = &model.safety_case {
        let claims: BTreeSet<&str> = case.claims.iter().map(|c| c.id.as_str()).collect();
        let args: BTreeSet<&str> = case.arguments.iter().map(|a| a.id.as_str()).collect();
        let evidence: BTreeSet<&str> = case.evidence.iter().map(|e| e.id.as_str()).collect();
        require(&claims, &case.root, "safety case root claim")?;
        for c in &case.claims {
            for a in &c.supported_by {
                require(&args, a, &format!("argument supporting {}", c.id))?;
            }
        }
        for a in &case.arguments {
            for p in &a.premises {
                require(&claims, p, &format!("premise of {}", a.id))?;
            }
            for e in &a.evidence {
                require(&evidence, e, &format!("evidence of {}", a.id))?;
            }
        }
        let all = model.entity_ids();
        for e in &case.evidence {
            for art in &e.artifacts {
                require(&all, art, &format!("artifact of evidence {}", e.id))?;
            }
        }
    }
    Ok(())
}

/// Semantic findings that do not prevent loading, sorted by `(rule_id, subject)`.
pub fn validate_model(model: &SafetyModel) -> Vec<Finding> {
    let mut findings = Vec::new();
    for h in &model.hazards {
        if h.asil.is_none() {
            findings.push(Finding::new("HAZ-NO-ASIL", h.id.clone(), "hazard has no ASIL"));
        }
        for g in &h.safety_goals {
            if model.safety_goal(g).is_some_and(|goal| !goal.covers.contains(&h.id)) {
                findings.push(Finding::new(
                    "MODEL-GOAL-BACKREF",
                    h.id.clone(),
                    format!("hazard lists goal {g}, which does not cover it"),
                ));
            }
        }
    }
    for r in &model.fmeda {
        if !r.safety_related {
            if let Some(g) = &r.safety_goal {
                findings.push(Finding::new(
                    "MODEL-NSR-GOAL",
                    r.id.clone(),
                    format!("row is not safety-related but is tied to safety goal {g}"),
                ));
            }
        }
    }
    if let Some(case) = &model.safety_case {
        let premises: BTreeSet<&str> = case.arguments.iter().flat_map(|a| a.premises.iter().map(String::as_str)).collect();
        for c in &case.claims {
            if c.id != case.root && !premises.contains(c.id.as_str()) {
                findings.push(Finding::new(
                    "MODEL-CASE-EXTRA-ROOT",
                    c.id.clone(),
                    "claim is neither the root nor a premise; the case has more than one root",
                ));
            }
        }
        for a in &case.arguments {
            if a.premises.is_empty() && a.evidence.is_empty() {
                findings.push(Finding::new("MODEL-ARG-EMPTY", a.id.clone(), "argument has no premises and no evidence"));
            }
        }
    }
    sort_findings(&mut findings);
    findings
}

pub fn has_errors(findings: &[Finding]) -> bool {
    findings.iter().any(|f| f.severity == Severity::Error)
}
