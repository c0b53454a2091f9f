//! Analysis registry.
//!
//! Each analysis is a named [`Analysis`] that turns the loaded model into one
//! report [`Section`]. The registry keeps registration order, which is also
//! the section order of the full report.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::case::{assess_cca, gaps_from_assessment, CcaAssessment};
use crate::finding::{sort_findings, Finding, Severity};
use crate::hara::{check_hara, max_asil};
use crate::hw::{
    check_frc, check_metric_targets, classify_fmeda_row, compute_hw_metrics, FrcVerdict, HwMetricsResult,
    MetricVerdict, RowPartition, Verdict,
};
use crate::item::{check_signals, score_item_rigor, validate_state_machine, RigorScore};
use crate::model::{validate_model, SafetyModel};
use crate::primitives::{Asil, UnitInterval};
use crate::sotif::{
    check_sotif_targets, compute_harm_reporting, exact_union_harm, monte_carlo_harm, sensitivity, Gradient,
    McEstimate, SotifLeaves, SotifResult, TargetVerdict,
};
use crate::trace::{check_traceability, detect_cycles, trace_matrix, NodeKind};

pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_MC_SAMPLES: u64 = 100_000;
pub const DEFAULT_CCA_THRESHOLD: f64 = 0.8;

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub strict: bool,
    pub seed: u64,
    pub mc_samples: u64,
    pub cca_threshold: UnitInterval,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            strict: false,
            seed: DEFAULT_SEED,
            mc_samples: DEFAULT_MC_SAMPLES,
            cca_threshold: UnitInterval::new(DEFAULT_CCA_THRESHOLD).expect("in range"),
        }
    }
}

/// Everything an analysis may read besides the model itself.
#[derive(Debug, Clone, Default)]
pub struct RunContext {
    pub options: RunOptions,
    /// Loader findings (unknown keys) to surface in the validation section.
    pub load_warnings: Vec<Finding>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MachineFindings {
    pub machine: String,
    pub findings: Vec<Finding>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowReport {
    pub id: String,
    #[serde(flatten)]
    pub partition: RowPartition,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NotApplicable {
    pub row_id: String,
    pub reason: String,
}

/// Typed payload of a report section.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum SectionData {
    Validation {},
    Rigor {
        rigor: Option<RigorScore>,
    },
    StateMachines {
        machines: Vec<MachineFindings>,
    },
    Hara {
        hazards: usize,
        safety_goals: usize,
    },
    HwMetrics {
        target_asil: Option<Asil>,
        rows: Vec<RowReport>,
        metrics: Option<HwMetricsResult>,
        verdicts: Vec<MetricVerdict>,
    },
    Frc {
        verdicts: Vec<FrcVerdict>,
        not_applicable: Vec<NotApplicable>,
    },
    Sotif {
        leaves: Option<SotifLeaves>,
        result: Option<SotifResult>,
        targets: Vec<TargetVerdict>,
        sensitivity: Option<Gradient>,
        exact_union: Option<f64>,
        monte_carlo: Option<McEstimate>,
    },
    Trace {
        hazard_to_test: BTreeMap<String, Vec<String>>,
    },
    Cca {
        threshold: UnitInterval,
        assessment: Option<CcaAssessment>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Section {
    pub key: &'static str,
    pub title: &'static str,
    pub findings: Vec<Finding>,
    /// Names of quantitative targets that were not met.
    pub failed_targets: Vec<String>,
    pub data: SectionData,
}

impl Section {
    fn new(analysis: &dyn Analysis, mut findings: Vec<Finding>, failed_targets: Vec<String>, data: SectionData) -> Self {
        sort_findings(&mut findings);
        Section { key: analysis.key(), title: analysis.title(), findings, failed_targets, data }
    }

    pub fn has_errors(&self) -> bool {
        self.findings.iter().any(|f| f.severity == Severity::Error) || !self.failed_targets.is_empty()
    }

    pub fn has_warnings(&self) -> bool {
        self.findings.iter().any(|f| f.severity == Severity::Warning)
    }
}

pub trait Analysis: Send + Sync {
    /// Registry key, also the section key in reports.
    fn key(&self) -> &'static str;
    fn title(&self) -> &'static str;
    fn run(&self, model: &SafetyModel, ctx: &RunContext) -> Section;
}

pub struct ValidationAnalysis;
pub struct RigorAnalysis;
pub struct StateMachineAnalysis;
pub struct HaraAnalysis;
pub struct HwMetricsAnalysis;
pub struct FrcAnalysis;
pub struct SotifAnalysis;
pub struct TraceAnalysis;
pub struct CcaAnalysis;

impl Analysis for ValidationAnalysis {
    fn key(&self) -> &'static str {
        "validation"
    }
    fn title(&self) -> &'static str {
        "Model validation"
    }
    fn run(&self, model: &SafetyModel, ctx: &RunContext) -> Section {
        let mut findings = ctx.load_warnings.clone();
        if ctx.options.strict {
            for f in &mut findings {
                if f.rule_id == "MODEL-UNKNOWN-KEY" {
                    f.severity = Severity::Error;
                }
            }
        }
        findings.extend(validate_model(model));
        Section::new(self, findings, vec![], SectionData::Validation {})
    }
}

impl Analysis for RigorAnalysis {
    fn key(&self) -> &'static str {
        "rigor"
    }
    fn title(&self) -> &'static str {
        "Item definition rigor"
    }
    fn run(&self, model: &SafetyModel, _ctx: &RunContext) -> Section {
        let Some(item) = &model.item else {
            return Section::new(self, vec![], vec![], SectionData::Rigor { rigor: None });
        };
        let rigor = score_item_rigor(item, &model.state_machines);
        Section::new(self, check_signals(item), vec![], SectionData::Rigor { rigor: Some(rigor) })
    }
}

impl Analysis for StateMachineAnalysis {
    fn key(&self) -> &'static str {
        "state_machines"
    }
    fn title(&self) -> &'static str {
        "State machines"
    }
    fn run(&self, model: &SafetyModel, _ctx: &RunContext) -> Section {
        let machines: Vec<MachineFindings> = model
            .state_machines
            .iter()
            .map(|m| MachineFindings { machine: m.name.clone(), findings: validate_state_machine(m) })
            .collect();
        let findings = machines.iter().flat_map(|m| m.findings.iter().cloned()).collect();
        Section::new(self, findings, vec![], SectionData::StateMachines { machines })
    }
}

impl Analysis for HaraAnalysis {
    fn key(&self) -> &'static str {
        "hara"
    }
    fn title(&self) -> &'static str {
        "Hazard analysis and risk assessment"
    }
    fn run(&self, model: &SafetyModel, _ctx: &RunContext) -> Section {
        let findings = check_hara(model.item_id(), &model.hazards, &model.safety_goals);
        let data = SectionData::Hara { hazards: model.hazards.len(), safety_goals: model.safety_goals.len() };
        Section::new(self, findings, vec![], data)
    }
}

fn highest_goal_asil(model: &SafetyModel) -> Option<Asil> {
    max_asil(model.safety_goals.iter().map(|g| g.asil)).ok()
}

impl Analysis for HwMetricsAnalysis {
    fn key(&self) -> &'static str {
        "hw_metrics"
    }
    fn title(&self) -> &'static str {
        "Hardware metrics"
    }
    fn run(&self, model: &SafetyModel, _ctx: &RunContext) -> Section {
        let rows = model
            .fmeda
            .iter()
            .map(|r| RowReport { id: r.id.clone(), partition: classify_fmeda_row(r) })
            .collect();
        let target_asil = highest_goal_asil(model);
        let metrics = compute_hw_metrics(&model.fmeda).ok();
        let verdicts: Vec<MetricVerdict> = metrics
            .as_ref()
            .map(|m| check_metric_targets(m, target_asil.unwrap_or(Asil::QM)).to_vec())
            .unwrap_or_default();
        let failed = verdicts
            .iter()
            .filter(|v| v.verdict == Verdict::Fail)
            .map(|v| format!("{} {} {}", v.metric, v.comparator.unwrap_or(""), v.target.unwrap_or(f64::NAN)))
            .collect();
        Section::new(self, vec![], failed, SectionData::HwMetrics { target_asil, rows, metrics, verdicts })
    }
}

impl Analysis for FrcAnalysis {
    fn key(&self) -> &'static str {
        "frc"
    }
    fn title(&self) -> &'static str {
        "Failure rate classes"
    }
    fn run(&self, model: &SafetyModel, _ctx: &RunContext) -> Section {
        let fallback = highest_goal_asil(model);
        let mut verdicts = Vec::new();
        let mut not_applicable = Vec::new();
        for row in model.fmeda.iter().filter(|r| r.safety_related && r.can_violate_goal_directly) {
            let goal_asil = row.safety_goal.as_deref().and_then(|g| model.safety_goal(g)).map(|g| g.asil).or(fallback);
            let Some(goal_asil) = goal_asil else {
                not_applicable.push(NotApplicable { row_id: row.id.clone(), reason: "no safety goal".into() });
                continue;
            };
            match check_frc(row, goal_asil) {
                Ok(v) => verdicts.push(v),
                Err(e) => not_applicable.push(NotApplicable { row_id: row.id.clone(), reason: e.to_string() }),
            }
        }
        let failed = verdicts
            .iter()
            .filter(|v| !v.passes)
            .map(|v| format!("{} FRC {}", v.row_id, v.required_class))
            .collect();
        Section::new(self, vec![], failed, SectionData::Frc { verdicts, not_applicable })
    }
}

impl Analysis for SotifAnalysis {
    fn key(&self) -> &'static str {
        "sotif"
    }
    fn title(&self) -> &'static str {
        "SOTIF harm model"
    }
    fn run(&self, model: &SafetyModel, ctx: &RunContext) -> Section {
        let empty = SectionData::Sotif {
            leaves: model.sotif,
            result: None,
            targets: vec![],
            sensitivity: None,
            exact_union: None,
            monte_carlo: None,
        };
        let Some(leaves) = model.sotif else {
            return Section::new(self, vec![], vec![], empty);
        };
        let (result, findings) = compute_harm_reporting(&leaves, ctx.options.strict);
        let Some(result) = result else {
            return Section::new(self, findings, vec![], empty);
        };
        let targets = check_sotif_targets(&leaves, &result, &model.targets)
            .expect("target symbols are checked when the model is loaded");
        let failed = targets.iter().filter(|t| !t.passes).map(|t| t.name.clone()).collect();
        let monte_carlo = monte_carlo_harm(&leaves, ctx.options.mc_samples, ctx.options.seed).ok();
        let data = SectionData::Sotif {
            leaves: Some(leaves),
            result: Some(result),
            targets,
            sensitivity: Some(sensitivity(&leaves)),
            exact_union: Some(exact_union_harm(&leaves)),
            monte_carlo,
        };
        Section::new(self, findings, failed, data)
    }
}

impl Analysis for TraceAnalysis {
    fn key(&self) -> &'static str {
        "trace"
    }
    fn title(&self) -> &'static str {
        "Traceability"
    }
    fn run(&self, model: &SafetyModel, _ctx: &RunContext) -> Section {
        let mut findings = check_traceability(&model.trace);
        findings.extend(detect_cycles(&model.trace));
        let hazard_to_test = trace_matrix(&model.trace, NodeKind::Hazard, NodeKind::Test)
            .into_iter()
            .map(|(k, v)| (k, v.into_iter().collect()))
            .collect();
        Section::new(self, findings, vec![], SectionData::Trace { hazard_to_test })
    }
}

impl Analysis for CcaAnalysis {
    fn key(&self) -> &'static str {
        "cca"
    }
    fn title(&self) -> &'static str {
        "Safety case credibility"
    }
    fn run(&self, model: &SafetyModel, ctx: &RunContext) -> Section {
        let threshold = ctx.options.cca_threshold;
        let Some(case) = &model.safety_case else {
            return Section::new(self, vec![], vec![], SectionData::Cca { threshold, assessment: None });
        };
        match assess_cca(case) {
            Ok(assessment) => {
                let findings = gaps_from_assessment(case, &assessment, threshold);
                Section::new(self, findings, vec![], SectionData::Cca { threshold, assessment: Some(assessment) })
            }
            Err(e) => Section::new(
                self,
                vec![Finding::new("CCA-STRUCTURE", case.root.clone(), e.to_string())],
                vec![],
                SectionData::Cca { threshold, assessment: None },
            ),
        }
    }
}

/// Analyses keyed by name, in report order.
pub struct Registry {
    entries: Vec<Box<dyn Analysis>>,
}

impl Registry {
    pub fn empty() -> Self {
        Registry { entries: Vec::new() }
    }

    pub fn builtin() -> Self {
        let mut r = Registry::empty();
        r.register(Box::new(ValidationAnalysis));
        r.register(Box::new(RigorAnalysis));
        r.register(Box::new(StateMachineAnalysis));
        r.register(Box::new(HaraAnalysis));
        r.register(Box::new(HwMetricsAnalysis));
        r.register(Box::new(FrcAnalysis));
        r.register(Box::new(SotifAnalysis));
        r.register(Box::new(TraceAnalysis));
        r.register(Box::new(CcaAnalysis));
        r
    }

    /// Adds an analysis, replacing any previous one with the same key in place.
    pub fn register(&mut self, analysis: Box<dyn Analysis>) {
        match self.entries.iter().position(|a| a.key() == analysis.key()) {
            Some(i) => self.entries[i] = analysis,
            None => self.entries.push(analysis),
        }
    }

    pub fn get(&self, key: &str) -> Option<&dyn Analysis> {
        self.entries.iter().find(|a| a.key() == key).map(|a| a.as_ref())
    }

    pub fn keys(&self) -> Vec<&'static str> {
        self.entries.iter().map(|a| a.key()).collect()
    }

    /// Runs the named analyses concurrently; sections come back in registry
    /// order regardless of the order of `keys`. Unknown keys are returned as
    /// the error.
    pub fn run(&self, keys: &[&str], model: &SafetyModel, ctx: &RunContext) -> Result<Vec<Section>, String> {
        if let Some(unknown) = keys.iter().find(|k| self.get(k).is_none()) {
            return Err(unknown.to_string());
        }
        let selected: Vec<&dyn Analysis> =
            self.entries.iter().filter(|a| keys.contains(&a.key())).map(|a| a.as_ref()).collect();
        Ok(selected.par_iter().map(|a| a.run(model, ctx)).collect())
    }

    pub fn run_all(&self, model: &SafetyModel, ctx: &RunContext) -> Vec<Section> {
        self.run(&self.keys(), model, ctx).expect("own keys resolve")
    }
}

impl Default for Registry {
    fn default() -> Self {
        Registry::builtin()
    }
}
