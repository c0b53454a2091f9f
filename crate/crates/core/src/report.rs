//! Report assembly and the text and JSON emitters.

use std::fmt::Write as _;

use serde::Serialize;

use crate::analysis::{Section, SectionData};
use crate::finding::{count_by_severity, Finding, Severity};
use crate::hw::Verdict;

pub const SCHEMA_VERSION: &str = "fusa-report/1";
pub const TOOL_VERSION: &str = concat!("fusa ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OverallVerdict {
    Pass,
    PassWithWarnings,
    Fail,
}

impl OverallVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            OverallVerdict::Pass => "pass",
            OverallVerdict::PassWithWarnings => "pass_with_warnings",
            OverallVerdict::Fail => "fail",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub schema_version: &'static str,
    pub tool_version: &'static str,
    pub model_name: String,
    pub seed: u64,
    pub overall_verdict: OverallVerdict,
    pub sections: Vec<Section>,
}

impl AnalysisReport {
    pub fn new(model_name: impl Into<String>, seed: u64, sections: Vec<Section>) -> Self {
        let overall_verdict = if sections.iter().any(Section::has_errors) {
            OverallVerdict::Fail
        } else if sections.iter().any(Section::has_warnings) {
            OverallVerdict::PassWithWarnings
        } else {
            OverallVerdict::Pass
        };
        AnalysisReport {
            schema_version: SCHEMA_VERSION,
            tool_version: TOOL_VERSION,
            model_name: model_name.into(),
            seed,
            overall_verdict,
            sections,
        }
    }

    pub fn section(&self, key: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.key == key)
    }

    pub fn findings(&self) -> impl Iterator<Item = &Finding> {
        self.sections.iter().flat_map(|s| s.findings.iter())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let all: Vec<Finding> = self.findings().cloned().collect();
        let _ = writeln!(out, "Safety analysis report: {}", self.model_name);
        let _ = writeln!(out, "tool: {}  schema: {}  seed: {}", self.tool_version, self.schema_version, self.seed);
        let _ = writeln!(
            out,
            "verdict: {}  ({} errors, {} warnings, {} info)",
            self.overall_verdict.as_str(),
            count_by_severity(&all, Severity::Error),
            count_by_severity(&all, Severity::Warning),
            count_by_severity(&all, Severity::Info),
        );
        for section in &self.sections {
            out.push('\n');
            render_section(&mut out, section);
        }
        out
    }
}

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map_or_else(|| "-".to_string(), |v| v.to_string())
}

fn render_section(out: &mut String, s: &Section) {
    let _ = writeln!(out, "== {} [{}] ==", s.title, s.key);
    match &s.data {
        SectionData::Validation {} => {}
        SectionData::Rigor { rigor: None } => {
            let _ = writeln!(out, "no item");
        }
        SectionData::Rigor { rigor: Some(rigor) } => {
            let _ = writeln!(out, "rigor score: {} ({}/{})", rigor.score, rigor.satisfied, rigor.total);
            for m in &rigor.missing {
                let _ = writeln!(out, "  missing: {m}");
            }
        }
        SectionData::StateMachines { machines } => {
            for m in machines {
                let _ = writeln!(out, "machine {}: {} findings", m.machine, m.findings.len());
            }
        }
        SectionData::Hara { hazards, safety_goals } => {
            let _ = writeln!(out, "hazards: {hazards}  safety goals: {safety_goals}");
        }
        SectionData::HwMetrics { target_asil, rows, metrics, verdicts } => {
            let _ = writeln!(out, "target ASIL: {}", opt(*target_asil));
            for r in rows {
                let p = &r.partition;
                let _ = writeln!(
                    out,
                    "  {}: spf {} rf {} mpf_latent {} mpf_detected {} safe {}",
                    r.id, p.lambda_spf, p.lambda_rf, p.lambda_mpf_latent, p.lambda_mpf_detected, p.lambda_safe
                );
            }
            match metrics {
                Some(m) => {
                    let _ = writeln!(out, "SPFM {}  LFM {}  PMHF {}", m.spfm, m.lfm, m.pmhf);
                }
                None => {
                    let _ = writeln!(out, "no FMEDA rows");
                }
            }
            for v in verdicts {
                let target = match (v.comparator, v.target) {
                    (Some(c), Some(t)) => format!("{c} {t:?}"),
                    _ => "none".to_string(),
                };
                let _ = writeln!(out, "  {} = {:?} target {} -> {}", v.metric, v.value, target, v.verdict);
            }
        }
        SectionData::Frc { verdicts, not_applicable } => {
            for v in verdicts {
                let _ = writeln!(
                    out,
                    "  {}: {} DC {} FRC {} target {} observed {} -> {}{}",
                    v.row_id,
                    v.goal_asil,
                    serde_json::to_value(v.dc_band).ok().and_then(|x| x.as_str().map(String::from)).unwrap_or_default(),
                    v.required_class,
                    v.class_target,
                    v.observed_residual,
                    Verdict::from_bool(v.passes),
                    if v.dedicated_measures_required { " (dedicated measures required)" } else { "" }
                );
            }
            for n in not_applicable {
                let _ = writeln!(out, "  {}: not applicable ({})", n.row_id, n.reason);
            }
        }
        SectionData::Sotif { leaves, result, targets, sensitivity, exact_union, monte_carlo } => {
            if leaves.is_none() {
                let _ = writeln!(out, "no SOTIF leaves");
            }
            if let Some(r) = result {
                let _ = writeln!(out, "p_fi = {:?}  p_ub = {:?}  p_h = {:?}", r.p_fi, r.p_ub, r.p_h);
            }
            if let Some(u) = exact_union {
                let _ = writeln!(out, "exact union p_h = {u:?}");
            }
            for t in targets {
                let _ = writeln!(
                    out,
                    "  target {}: {} = {:?} {} {:?} -> {}",
                    t.name,
                    t.symbol,
                    t.value,
                    t.comparator.symbol(),
                    t.threshold,
                    Verdict::from_bool(t.passes)
                );
            }
            if let Some(g) = sensitivity {
                for (sym, d) in g.iter() {
                    let _ = writeln!(out, "  dp_h/d{sym} = {d:?}");
                }
            }
            if let Some(mc) = monte_carlo {
                let _ = writeln!(
                    out,
                    "monte carlo: {} hits / {} samples (seed {}) -> {:?} +/- {:?}",
                    mc.hits, mc.samples, mc.seed, mc.estimate, mc.std_error
                );
            }
        }
        SectionData::Trace { hazard_to_test } => {
            for (h, tests) in hazard_to_test {
                let list = if tests.is_empty() { "-".to_string() } else { tests.join(", ") };
                let _ = writeln!(out, "  {h} -> {list}");
            }
        }
        SectionData::Cca { threshold, assessment } => match assessment {
            Some(a) => {
                let _ = writeln!(out, "root {} credibility {} (threshold {})", a.root, a.root_credibility, threshold);
                for (id, n) in &a.nodes {
                    let _ = writeln!(
                        out,
                        "  {id}: {} (limited by {} {} = {:?})",
                        n.credibility, n.limited_by.node, n.limited_by.score, n.limited_by.value
                    );
                }
            }
            None => {
                let _ = writeln!(out, "no assessment");
            }
        },
    }
    for t in &s.failed_targets {
        let _ = writeln!(out, "FAILED TARGET: {t}");
    }
    if s.findings.is_empty() {
        let _ = writeln!(out, "findings: none");
    } else {
        let _ = writeln!(out, "findings:");
        for f in &s.findings {
            let _ = writeln!(out, "  {f}");
        }
    }
}
