//! Hardware architectural metrics (SPFM, LFM), PMHF and failure-rate
//! classes from FMEDA rows.
//!
//! Partition of one safety-related row with rate `λ`:
//!
//! ```text
//! direct violation, no mechanism   spf = λ
//! direct violation, coverage dc    rf  = λ(1 - dc), pool = λ - rf
//! no direct violation              pool = λ
//! pool, can be latent              mpf_latent = pool(1 - dc_latent), mpf_detected = pool·dc_latent
//! pool, cannot be latent           safe = pool
//! ```
//!
//! PMHF is first order: single-point plus residual rates. Dual-point
//! residual contributions are not included.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::AnalysisError;
use crate::primitives::{compensated_sum, Asil, FailureRate, UnitInterval};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FmedaRow {
    pub id: String,
    pub component_id: String,
    pub failure_mode: String,
    pub lambda_total: FailureRate,
    pub safety_related: bool,
    #[serde(default)]
    pub can_violate_goal_directly: bool,
    /// Present iff a safety mechanism covers the direct violation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dc_residual: Option<UnitInterval>,
    #[serde(default)]
    pub can_be_latent: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dc_latent: Option<UnitInterval>,
    /// Safety goal the failure mode threatens.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub safety_goal: Option<String>,
}

impl FmedaRow {
    /// Safety-related row with no mechanisms and no latent path.
    pub fn new(id: &str, lambda_total: FailureRate) -> Self {
        FmedaRow {
            id: id.into(),
            component_id: id.into(),
            failure_mode: "unspecified".into(),
            lambda_total,
            safety_related: true,
            can_violate_goal_directly: false,
            dc_residual: None,
            can_be_latent: false,
            dc_latent: None,
            safety_goal: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct RowPartition {
    pub lambda_spf: FailureRate,
    pub lambda_rf: FailureRate,
    pub lambda_mpf_latent: FailureRate,
    pub lambda_mpf_detected: FailureRate,
    pub lambda_safe: FailureRate,
}

impl RowPartition {
    pub fn total(&self) -> f64 {
        compensated_sum([
            self.lambda_spf.as_per_hour(),
            self.lambda_rf.as_per_hour(),
            self.lambda_mpf_latent.as_per_hour(),
            self.lambda_mpf_detected.as_per_hour(),
            self.lambda_safe.as_per_hour(),
        ])
    }
}

/// Splits a row's rate into the five FMEDA classes.
///
/// The arithmetic runs in FIT, the unit FMEDA rows are normally written in,
/// and the residual is taken as `λ - λ·dc`; that keeps decimal inputs such
/// as 100 FIT at 99 % coverage exact.
pub fn classify_fmeda_row(row: &FmedaRow) -> RowPartition {
    let lambda = row.lambda_total.as_fit();
    let rate = FailureRate::from_fit_unchecked;
    let mut part = RowPartition::default();
    if !row.safety_related {
        part.lambda_safe = row.lambda_total;
        return part;
    }

    let pool = if row.can_violate_goal_directly {
        match row.dc_residual {
            None => {
                part.lambda_spf = row.lambda_total;
                0.0
            }
            Some(dc) => {
                let residual = (lambda - lambda * dc.get()).max(0.0);
                part.lambda_rf = rate(residual);
                (lambda - residual).max(0.0)
            }
        }
    } else {
        lambda
    };

    if row.can_be_latent {
        let dc_latent = row.dc_latent.map_or(0.0, UnitInterval::get);
        part.lambda_mpf_latent = rate(pool * (1.0 - dc_latent));
        part.lambda_mpf_detected = rate(pool * dc_latent);
    } else {
        part.lambda_safe = rate(pool);
    }
    part
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HwMetricsResult {
    pub spfm: UnitInterval,
    pub lfm: UnitInterval,
    pub pmhf: FailureRate,
    pub lambda_sr_total: FailureRate,
    pub lambda_spf_total: FailureRate,
    pub lambda_rf_total: FailureRate,
    pub lambda_mpf_latent_total: FailureRate,
}

fn ratio_metric(numerator: f64, denominator: f64) -> UnitInterval {
    if denominator > 0.0 {
        UnitInterval::new((1.0 - numerator / denominator).clamp(0.0, 1.0)).expect("clamped")
    } else {
        UnitInterval::ONE
    }
}

/// SPFM, LFM and PMHF over the safety-related rates of `rows`.
///
/// Zero denominators yield a metric of 1.
pub fn compute_hw_metrics(rows: &[FmedaRow]) -> Result<HwMetricsResult, AnalysisError> {
    if rows.is_empty() {
        return Err(AnalysisError::EmptyInput);
    }
    let parts: Vec<RowPartition> = rows.iter().map(classify_fmeda_row).collect();
    let sum = |f: fn(&RowPartition) -> f64| compensated_sum(parts.iter().map(f));

    let sr = compensated_sum(rows.iter().filter(|r| r.safety_related).map(|r| r.lambda_total.as_per_hour()));
    let spf = sum(|p| p.lambda_spf.as_per_hour());
    let rf = sum(|p| p.lambda_rf.as_per_hour());
    let latent = sum(|p| p.lambda_mpf_latent.as_per_hour());
    let dangerous = compensated_sum(
        parts.iter().flat_map(|p| [p.lambda_spf.as_per_hour(), p.lambda_rf.as_per_hour()]),
    );
    let remaining = compensated_sum([sr, -spf, -rf]).max(0.0);

    let rate = FailureRate::from_per_hour_unchecked;
    Ok(HwMetricsResult {
        spfm: ratio_metric(dangerous, sr),
        lfm: ratio_metric(latent, remaining),
        pmhf: rate(dangerous),
        lambda_sr_total: rate(sr),
        lambda_spf_total: rate(spf),
        lambda_rf_total: rate(rf),
        lambda_mpf_latent_total: rate(latent),
    })
}

/// Target row of the hardware-metric table for one ASIL.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricTargets {
    pub asil: Asil,
    pub spfm_min: f64,
    pub lfm_min: f64,
    /// PMHF must be strictly below this rate (per hour).
    pub pmhf_below: f64,
}

pub const METRIC_TARGETS: [MetricTargets; 3] = [
    MetricTargets { asil: Asil::B, spfm_min: 0.90, lfm_min: 0.60, pmhf_below: 1e-7 },
    MetricTargets { asil: Asil::C, spfm_min: 0.97, lfm_min: 0.80, pmhf_below: 1e-7 },
    MetricTargets { asil: Asil::D, spfm_min: 0.99, lfm_min: 0.90, pmhf_below: 1e-8 },
];

pub fn metric_targets(asil: Asil) -> Option<MetricTargets> {
    METRIC_TARGETS.iter().copied().find(|t| t.asil == asil)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    NoTarget,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::NoTarget => "no target",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Spfm,
    Lfm,
    Pmhf,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Spfm => "SPFM",
            Metric::Lfm => "LFM",
            Metric::Pmhf => "PMHF",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricVerdict {
    pub metric: Metric,
    pub value: f64,
    /// `">="` or `"<"`; absent when the ASIL has no target.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub comparator: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<f64>,
    pub verdict: Verdict,
}

/// Verdicts in the order SPFM, LFM, PMHF. `>=` is inclusive, PMHF `<` is strict.
pub fn check_metric_targets(result: &HwMetricsResult, asil: Asil) -> [MetricVerdict; 3] {
    let spfm = result.spfm.get();
    let lfm = result.lfm.get();
    let pmhf = result.pmhf.as_per_hour();
    match metric_targets(asil) {
        None => [(Metric::Spfm, spfm), (Metric::Lfm, lfm), (Metric::Pmhf, pmhf)].map(|(metric, value)| {
            MetricVerdict { metric, value, comparator: None, target: None, verdict: Verdict::NoTarget }
        }),
        Some(t) => [
            MetricVerdict {
                metric: Metric::Spfm,
                value: spfm,
                comparator: Some(">="),
                target: Some(t.spfm_min),
                verdict: Verdict::from_bool(spfm >= t.spfm_min),
            },
            MetricVerdict {
                metric: Metric::Lfm,
                value: lfm,
                comparator: Some(">="),
                target: Some(t.lfm_min),
                verdict: Verdict::from_bool(lfm >= t.lfm_min),
            },
            MetricVerdict {
                metric: Metric::Pmhf,
                value: pmhf,
                comparator: Some("<"),
                target: Some(t.pmhf_below),
                verdict: Verdict::from_bool(pmhf < t.pmhf_below),
            },
        ],
    }
}

/// Largest class index whose target is a finite normal double.
pub const MAX_FRC: i64 = 300;

/// Failure-rate-class target: class 1 is one hundredth of the ASIL D PMHF
/// target (1e-10/h); class i is `10^(i-1)` times class 1.
///
/// Built from a decimal exponent so every rung is the correctly rounded
/// power of ten.
pub fn frc_target(class_index: i64) -> Result<FailureRate, AnalysisError> {
    if !(1..=MAX_FRC).contains(&class_index) {
        return Err(AnalysisError::InvalidClass(class_index));
    }
    let exponent = class_index - 11;
    let value: f64 = format!("1e{exponent}").parse().expect("decimal literal");
    Ok(FailureRate::from_per_hour_unchecked(value))
}

/// Diagnostic-coverage band of a residual-fault mechanism.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DcBand {
    #[serde(rename = ">=99.9%")]
    AtLeast999,
    #[serde(rename = ">=99%")]
    AtLeast99,
    #[serde(rename = ">=90%")]
    AtLeast90,
    #[serde(rename = "<90%")]
    Below90,
}

impl DcBand {
    pub fn of(dc_residual: Option<UnitInterval>) -> Self {
        match dc_residual.map(UnitInterval::get) {
            Some(dc) if dc >= 0.999 => DcBand::AtLeast999,
            Some(dc) if dc >= 0.99 => DcBand::AtLeast99,
            Some(dc) if dc >= 0.90 => DcBand::AtLeast90,
            _ => DcBand::Below90,
        }
    }

    fn column(self) -> usize {
        self as usize
    }
}

/// (class, dedicated measures) per DC band column, for ASIL D, C, B.
const FRC_TABLE: [(Asil, [(i64, bool); 4]); 3] = [
    (Asil::D, [(4, false), (3, false), (2, false), (1, true)]),
    (Asil::C, [(5, false), (4, false), (3, false), (2, true)]),
    (Asil::B, [(5, false), (4, false), (3, false), (2, false)]),
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrcVerdict {
    pub row_id: String,
    pub goal_asil: Asil,
    pub dc_band: DcBand,
    pub required_class: i64,
    pub class_target: FailureRate,
    pub observed_residual: FailureRate,
    pub passes: bool,
    pub dedicated_measures_required: bool,
}

/// Failure-rate-class check of a row that can directly violate a goal.
///
/// The row's total rate is compared with the class target: strictly below
/// for class 1, at most the target for classes 2 and up.
pub fn check_frc(row: &FmedaRow, goal_asil: Asil) -> Result<FrcVerdict, AnalysisError> {
    if !(row.safety_related && row.can_violate_goal_directly) {
        return Err(AnalysisError::NotApplicable(format!(
            "row '{}' cannot directly violate a safety goal",
            row.id
        )));
    }
    let Some((_, cells)) = FRC_TABLE.iter().find(|(a, _)| *a == goal_asil) else {
        return Err(AnalysisError::NotApplicable(format!("no failure rate class for {goal_asil}")));
    };
    let band = DcBand::of(row.dc_residual);
    let (required_class, dedicated) = cells[band.column()];
    let target = frc_target(required_class)?;
    let observed = row.lambda_total.as_per_hour();
    let passes = if required_class == 1 {
        observed < target.as_per_hour()
    } else {
        observed <= target.as_per_hour()
    };
    Ok(FrcVerdict {
        row_id: row.id.clone(),
        goal_asil,
        dc_band: band,
        required_class,
        class_target: target,
        observed_residual: row.lambda_total,
        passes,
        dedicated_measures_required: dedicated,
    })
}
