//! SOTIF harm model: analytic harm probability, validation targets,
//! sensitivities and a seeded Monte-Carlo event simulation.
//!
//! ```text
//! p_fi = p_is + p_pl
//! p_ub = p_tc (p_fi + p_sm)
//! p_h  = (p_fs + p_ub) p_scs p_ip + p_ode
//! ```
//!
//! All leaves are dimensionless probabilities per exposure hour, so rate
//! targets such as `p_pl <= 1e-8 /h` compare directly against them.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::AnalysisError;
use crate::finding::{Finding, Severity};
use crate::primitives::UnitInterval;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SotifLeaves {
    pub p_fs: UnitInterval,
    pub p_tc: UnitInterval,
    pub p_is: UnitInterval,
    pub p_pl: UnitInterval,
    pub p_sm: UnitInterval,
    pub p_scs: UnitInterval,
    pub p_ip: UnitInterval,
    pub p_ode: UnitInterval,
}

impl SotifLeaves {
    /// Leaves in [`Symbol::LEAVES`] order.
    pub fn to_array(&self) -> [f64; 8] {
        [
            self.p_fs.get(),
            self.p_tc.get(),
            self.p_is.get(),
            self.p_pl.get(),
            self.p_sm.get(),
            self.p_scs.get(),
            self.p_ip.get(),
            self.p_ode.get(),
        ]
    }

    pub fn from_array(values: [f64; 8]) -> Result<Self, crate::error::ValueError> {
        let [p_fs, p_tc, p_is, p_pl, p_sm, p_scs, p_ip, p_ode] = values.map(UnitInterval::new);
        Ok(SotifLeaves {
            p_fs: p_fs?,
            p_tc: p_tc?,
            p_is: p_is?,
            p_pl: p_pl?,
            p_sm: p_sm?,
            p_scs: p_scs?,
            p_ip: p_ip?,
            p_ode: p_ode?,
        })
    }

    pub fn leaf(&self, symbol: Symbol) -> Option<f64> {
        Symbol::LEAVES.iter().position(|s| *s == symbol).map(|i| self.to_array()[i])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Symbol {
    PFs,
    PTc,
    PIs,
    PPl,
    PSm,
    PScs,
    PIp,
    POde,
    PFi,
    PUb,
    PH,
}

impl Symbol {
    pub const LEAVES: [Symbol; 8] = [
        Symbol::PFs,
        Symbol::PTc,
        Symbol::PIs,
        Symbol::PPl,
        Symbol::PSm,
        Symbol::PScs,
        Symbol::PIp,
        Symbol::POde,
    ];

    pub const ALL: [Symbol; 11] = [
        Symbol::PFs,
        Symbol::PTc,
        Symbol::PIs,
        Symbol::PPl,
        Symbol::PSm,
        Symbol::PScs,
        Symbol::PIp,
        Symbol::POde,
        Symbol::PFi,
        Symbol::PUb,
        Symbol::PH,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Symbol::PFs => "p_fs",
            Symbol::PTc => "p_tc",
            Symbol::PIs => "p_is",
            Symbol::PPl => "p_pl",
            Symbol::PSm => "p_sm",
            Symbol::PScs => "p_scs",
            Symbol::PIp => "p_ip",
            Symbol::POde => "p_ode",
            Symbol::PFi => "p_fi",
            Symbol::PUb => "p_ub",
            Symbol::PH => "p_h",
        }
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Symbol {
    type Err = AnalysisError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Symbol::ALL
            .into_iter()
            .find(|sym| sym.name() == s)
            .ok_or_else(|| AnalysisError::UnknownSymbol(s.to_string()))
    }
}

impl Serialize for Symbol {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SotifResult {
    pub p_fi: f64,
    pub p_ub: f64,
    pub p_h: f64,
}

impl SotifResult {
    pub fn derived(&self, symbol: Symbol) -> Option<f64> {
        match symbol {
            Symbol::PFi => Some(self.p_fi),
            Symbol::PUb => Some(self.p_ub),
            Symbol::PH => Some(self.p_h),
            _ => None,
        }
    }
}

/// Harm probability from the leaves.
///
/// Intermediates above 1 (the additive form is a rare-event approximation)
/// give a `SOTIF-SUPRA-UNIT` warning, or `StrictModelViolation` in strict
/// mode. Values are never clamped.
pub fn compute_harm(leaves: &SotifLeaves, strict: bool) -> Result<(SotifResult, Vec<Finding>), AnalysisError> {
    let p_fi = leaves.p_is.get() + leaves.p_pl.get();
    let fi_or_misuse = p_fi + leaves.p_sm.get();
    let p_ub = leaves.p_tc.get() * fi_or_misuse;
    let malfunction_or_ub = leaves.p_fs.get() + p_ub;
    let p_h = malfunction_or_ub * leaves.p_scs.get() * leaves.p_ip.get() + leaves.p_ode.get();

    let mut findings = Vec::new();
    for (symbol, value) in [
        ("p_fi", p_fi),
        ("p_fi+p_sm", fi_or_misuse),
        ("p_fs+p_ub", malfunction_or_ub),
        ("p_h", p_h),
    ] {
        if value > 1.0 {
            if strict {
                return Err(AnalysisError::StrictModelViolation { symbol, value });
            }
            findings.push(Finding::new(
                "SOTIF-SUPRA-UNIT",
                format!("sotif/{symbol}"),
                format!("{symbol} = {value} exceeds 1; the additive model is outside its rare-event range"),
            ));
        }
    }
    Ok((SotifResult { p_fi, p_ub, p_h }, findings))
}

/// Same as [`compute_harm`] but records the strict violation as an error
/// finding instead of failing.
pub fn compute_harm_reporting(leaves: &SotifLeaves, strict: bool) -> (Option<SotifResult>, Vec<Finding>) {
    match compute_harm(leaves, strict) {
        Ok((result, findings)) => (Some(result), findings),
        Err(AnalysisError::StrictModelViolation { symbol, value }) => (
            None,
            vec![Finding::new(
                "SOTIF-SUPRA-UNIT",
                format!("sotif/{symbol}"),
                format!("{symbol} = {value} exceeds 1; analysis aborted in strict mode"),
            )
            .with_severity(Severity::Error)],
        ),
        Err(other) => unreachable!("compute_harm only fails in strict mode: {other}"),
    }
}

/// Exact probability of the harm event under independent leaf events:
/// `((FS or (TC and (IS or PL or SM))) and SCS and IP) or ODE`.
pub fn exact_union_harm(leaves: &SotifLeaves) -> f64 {
    let [fs, tc, is, pl, sm, scs, ip, ode] = leaves.to_array();
    let any_insufficiency = 1.0 - (1.0 - is) * (1.0 - pl) * (1.0 - sm);
    let precondition = 1.0 - (1.0 - fs) * (1.0 - tc * any_insufficiency);
    1.0 - (1.0 - ode) * (1.0 - precondition * scs * ip)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Comparator {
    Le,
    Lt,
    Ge,
    Gt,
}

impl Comparator {
    pub fn holds(self, value: f64, threshold: f64) -> bool {
        match self {
            Comparator::Le => value <= threshold,
            Comparator::Lt => value < threshold,
            Comparator::Ge => value >= threshold,
            Comparator::Gt => value > threshold,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Comparator::Le => "<=",
            Comparator::Lt => "<",
            Comparator::Ge => ">=",
            Comparator::Gt => ">",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationTarget {
    pub name: String,
    pub symbol: String,
    pub threshold: f64,
    pub comparator: Comparator,
}

/// Name of the built-in performance-limitation target.
pub const DEFAULT_PL_TARGET: &str = "PL-GAMAB";
pub const DEFAULT_PL_THRESHOLD: f64 = 1e-8;

pub fn default_pl_target() -> ValidationTarget {
    ValidationTarget {
        name: DEFAULT_PL_TARGET.into(),
        symbol: Symbol::PPl.name().into(),
        threshold: DEFAULT_PL_THRESHOLD,
        comparator: Comparator::Le,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TargetVerdict {
    pub name: String,
    pub symbol: Symbol,
    pub comparator: Comparator,
    pub threshold: f64,
    pub value: f64,
    pub passes: bool,
}

/// One verdict per declared target, plus the built-in `PL-GAMAB`
/// (`p_pl <= 1e-8`) when no declared target constrains `p_pl`.
pub fn check_sotif_targets(
    leaves: &SotifLeaves,
    result: &SotifResult,
    targets: &[ValidationTarget],
) -> Result<Vec<TargetVerdict>, AnalysisError> {
    let mut effective: Vec<ValidationTarget> = targets.to_vec();
    if !targets.iter().any(|t| t.symbol == Symbol::PPl.name()) {
        effective.push(default_pl_target());
    }
    effective
        .into_iter()
        .map(|t| {
            let symbol: Symbol = t.symbol.parse()?;
            let value = leaves.leaf(symbol).or_else(|| result.derived(symbol)).expect("every symbol resolves");
            Ok(TargetVerdict {
                passes: t.comparator.holds(value, t.threshold),
                name: t.name,
                symbol,
                comparator: t.comparator,
                threshold: t.threshold,
                value,
            })
        })
        .collect()
}

/// Partial derivatives of `p_h` with respect to each leaf.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gradient {
    values: [f64; 8],
}

impl Gradient {
    pub fn get(&self, leaf: Symbol) -> Option<f64> {
        Symbol::LEAVES.iter().position(|s| *s == leaf).map(|i| self.values[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (Symbol, f64)> + '_ {
        Symbol::LEAVES.into_iter().zip(self.values)
    }
}

impl Serialize for Gradient {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(8))?;
        for (sym, v) in self.iter() {
            map.serialize_entry(sym.name(), &v)?;
        }
        map.end()
    }
}

pub fn sensitivity(leaves: &SotifLeaves) -> Gradient {
    let [fs, tc, is, pl, sm, scs, ip, _ode] = leaves.to_array();
    let exposure = scs * ip;
    let p_ub = tc * ((is + pl) + sm);
    let upstream = fs + p_ub;
    let d_insufficiency = tc * exposure;
    Gradient {
        values: [
            exposure,
            ((is + pl) + sm) * exposure,
            d_insufficiency,
            d_insufficiency,
            d_insufficiency,
            upstream * ip,
            upstream * scs,
            1.0,
        ],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub samples: u64,
    pub seed: u64,
    pub hits: u64,
    pub estimate: f64,
    pub std_error: f64,
}

/// Trials per independently seeded block. Block `b` draws from ChaCha8
/// stream `b` of the seed, so the result does not depend on how blocks are
/// scheduled across threads.
pub const MC_BLOCK: u64 = 1 << 16;

fn simulate_block(leaves: &[f64; 8], seed: u64, block: u64, trials: u64) -> u64 {
    let [fs, tc, is, pl, sm, scs, ip, ode] = *leaves;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    let mut hits = 0;
    for _ in 0..trials {
        let mut draw = [0.0f64; 8];
        for d in &mut draw {
            *d = rng.random::<f64>();
        }
        let event = |i: usize, p: f64| draw[i] < p;
        let insufficiency = event(2, is) || event(3, pl) || event(4, sm);
        let precondition = event(0, fs) || (event(1, tc) && insufficiency);
        let harm = (precondition && event(5, scs) && event(6, ip)) || event(7, ode);
        hits += u64::from(harm);
    }
    hits
}

/// Fraction of simulated trials ending in harm, with its binomial standard error.
pub fn monte_carlo_harm(leaves: &SotifLeaves, samples: u64, seed: u64) -> Result<McEstimate, AnalysisError> {
    if samples == 0 {
        return Err(AnalysisError::EmptyInput);
    }
    let probs = leaves.to_array();
    let blocks = samples.div_ceil(MC_BLOCK);
    let hits: u64 = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let trials = MC_BLOCK.min(samples - b * MC_BLOCK);
            simulate_block(&probs, seed, b, trials)
        })
        .sum();
    let n = samples as f64;
    let estimate = hits as f64 / n;
    Ok(McEstimate { samples, seed, hits, estimate, std_error: (estimate * (1.0 - estimate) / n).sqrt() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn worked() -> SotifLeaves {
        SotifLeaves::from_array([1e-7, 1e-3, 1e-4, 1e-5, 1e-6, 1e-2, 1e-1, 1e-9]).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn zero_leaves() {
        let (r, f) = compute_harm(&SotifLeaves::default(), false).unwrap();
        assert_eq!((r.p_fi, r.p_ub, r.p_h), (0.0, 0.0, 0.0));
        assert!(f.is_empty());
    }

    #[test]
    fn only_odd_exit() {
        let leaves = SotifLeaves { p_ode: UnitInterval::new(2e-7).unwrap(), ..Default::default() };
        assert_eq!(compute_harm(&leaves, false).unwrap().0.p_h, 2e-7);
    }

    #[test]
    fn worked_example() {
        let (r, _) = compute_harm(&worked(), false).unwrap();
        assert!(rel(r.p_fi, 1.1e-4) < 1e-12);
        assert!(rel(r.p_ub, 1.11e-7) < 1e-12);
        assert!(rel(r.p_h, 1.211e-9) < 1e-12);
    }

    #[test]
    fn supra_unit_warns_or_aborts() {
        let leaves = SotifLeaves::from_array([0.0, 1.0, 0.7, 0.6, 0.0, 1.0, 1.0, 0.0]).unwrap();
        let (r, f) = compute_harm(&leaves, false).unwrap();
        assert!(r.p_fi > 1.0);
        assert!(f.iter().all(|f| f.rule_id == "SOTIF-SUPRA-UNIT" && f.severity == Severity::Warning));
        assert_eq!(f.len(), 4);
        assert!(matches!(compute_harm(&leaves, true), Err(AnalysisError::StrictModelViolation { symbol: "p_fi", .. })));
        let (none, f) = compute_harm_reporting(&leaves, true);
        assert!(none.is_none());
        assert_eq!(f[0].severity, Severity::Error);
    }

    #[test]
    fn default_target_inclusive() {
        let at = SotifLeaves { p_pl: UnitInterval::new(1e-8).unwrap(), ..Default::default() };
        let (r, _) = compute_harm(&at, false).unwrap();
        let v = check_sotif_targets(&at, &r, &[]).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].name, DEFAULT_PL_TARGET);
        assert!(v[0].passes);
        let over = SotifLeaves { p_pl: UnitInterval::new(2e-8).unwrap(), ..Default::default() };
        assert!(!check_sotif_targets(&over, &r, &[]).unwrap()[0].passes);
    }

    #[test]
    fn custom_target_on_derived_symbol() {
        let leaves = worked();
        let (r, _) = compute_harm(&leaves, false).unwrap();
        let t = ValidationTarget { name: "H".into(), symbol: "p_h".into(), threshold: 1e-8, comparator: Comparator::Lt };
        let v = check_sotif_targets(&leaves, &r, &[t]).unwrap();
        assert_eq!(v.len(), 2);
        assert!(v[0].passes);
        assert_eq!(v[0].value, r.p_h);
        assert_eq!(v[1].name, DEFAULT_PL_TARGET);
        assert!(!v[1].passes);
    }

    #[test]
    fn explicit_pl_target_replaces_default() {
        let leaves = worked();
        let (r, _) = compute_harm(&leaves, false).unwrap();
        let t = ValidationTarget { name: "PL".into(), symbol: "p_pl".into(), threshold: 1e-4, comparator: Comparator::Le };
        let v = check_sotif_targets(&leaves, &r, &[t]).unwrap();
        assert_eq!(v.len(), 1);
        assert!(v[0].passes);
    }

    #[test]
    fn unknown_symbol() {
        let t = ValidationTarget { name: "X".into(), symbol: "p_xyz".into(), threshold: 0.0, comparator: Comparator::Le };
        let (r, _) = compute_harm(&worked(), false).unwrap();
        assert_eq!(check_sotif_targets(&worked(), &r, &[t]), Err(AnalysisError::UnknownSymbol("p_xyz".into())));
    }

    #[test]
    fn gradient_trivia() {
        assert_eq!(sensitivity(&worked()).get(Symbol::POde), Some(1.0));
        let g = sensitivity(&SotifLeaves::default());
        for (sym, v) in g.iter() {
            assert_eq!(v, if sym == Symbol::POde { 1.0 } else { 0.0 }, "{sym}");
        }
        assert_eq!(g.get(Symbol::PH), None);
    }

    #[test]
    fn gradient_matches_central_differences_on_worked_example() {
        let leaves = worked();
        let g = sensitivity(&leaves);
        let h = 1e-7;
        for (i, sym) in Symbol::LEAVES.into_iter().enumerate() {
            let mut hi = leaves.to_array();
            let mut lo = leaves.to_array();
            hi[i] += h;
            lo[i] -= h;
            let ph = |a: [f64; 8]| {
                let [fs, tc, is, pl, sm, scs, ip, ode] = a;
                (fs + tc * (is + pl + sm)) * scs * ip + ode
            };
            let fd = (ph(hi) - ph(lo)) / (2.0 * h);
            let an = g.get(sym).unwrap();
            assert!((fd - an).abs() <= 1e-6 * an.abs().max(1e-300), "{sym}: {fd} vs {an}");
        }
    }

    #[test]
    fn mc_trivial_cases() {
        assert_eq!(monte_carlo_harm(&SotifLeaves::default(), 1000, 7).unwrap().estimate, 0.0);
        let always = SotifLeaves { p_ode: UnitInterval::ONE, ..Default::default() };
        let e = monte_carlo_harm(&always, 1000, 7).unwrap();
        assert_eq!((e.estimate, e.std_error), (1.0, 0.0));
        assert_eq!(monte_carlo_harm(&always, 0, 7), Err(AnalysisError::EmptyInput));
    }

    #[test]
    fn mc_is_independent_of_thread_count() {
        let leaves = SotifLeaves::from_array([0.05; 8]).unwrap();
        let samples = 3 * MC_BLOCK + 17;
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| monte_carlo_harm(&leaves, samples, 42).unwrap())
        };
        assert_eq!(run(1), run(4));
        assert_ne!(run(1).hits, monte_carlo_harm(&leaves, samples, 43).unwrap().hits);
    }
}
