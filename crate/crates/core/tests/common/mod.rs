//! Oracles, generators and property checks shared by the integration suites
//! and the acceptance runner. The oracles are written independently of the
//! library: brute-force enumeration or transitive closure instead of the
//! library's algorithms.
#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use fusa_core::case::{assess_cca, Argument, Claim, Evidence, SafetyCase};
use fusa_core::hw::{classify_fmeda_row, compute_hw_metrics, FmedaRow};
use fusa_core::item::{score_item_rigor, validate_state_machine, InterfaceSignal, ItemDefinition, StateMachine, Transition};
use fusa_core::sotif::{compute_harm, SotifLeaves};
use fusa_core::trace::{check_traceability, detect_cycles, trace_matrix, NodeKind, Relation, TraceEdge, TraceGraph, TraceNode};
use fusa_core::{Asil, FailureRate, Finding, UnitInterval};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

pub fn bundled_model_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/bundled_example.model.json")
}

pub fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

pub fn rel_err(got: f64, want: f64) -> f64 {
    if want == 0.0 {
        got.abs()
    } else {
        ((got - want) / want).abs()
    }
}

pub fn leaves(v: [f64; 8]) -> SotifLeaves {
    SotifLeaves::from_array(v).expect("leaves in [0,1]")
}

pub fn harm(v: [f64; 8]) -> f64 {
    compute_harm(&leaves(v), false).expect("non-strict never fails").0.p_h
}

// ---- SOTIF oracles ----

/// Additive-OR harm model written out by plain substitution.
pub fn harm_by_substitution(v: [f64; 8]) -> f64 {
    let [p_fs, p_tc, p_is, p_pl, p_sm, p_scs, p_ip, p_ode] = v;
    let p_fi = p_is + p_pl;
    let p_ub = p_tc * (p_fi + p_sm);
    (p_fs + p_ub) * p_scs * p_ip + p_ode
}

/// Exact harm probability by enumerating all 256 leaf outcomes.
pub fn exact_union_by_enumeration(v: [f64; 8]) -> f64 {
    let mut total = 0.0;
    for mask in 0u32..256 {
        let on = |i: usize| mask & (1 << i) != 0;
        let mut p = 1.0;
        for (i, &q) in v.iter().enumerate() {
            p *= if on(i) { q } else { 1.0 - q };
        }
        let harm = ((on(0) || (on(1) && (on(2) || on(3) || on(4)))) && on(5) && on(6)) || on(7);
        if harm {
            total += p;
        }
    }
    total
}

/// Second-order rare-event bound: sum of products over distinct leaf pairs.
pub fn pairwise_bound(v: [f64; 8]) -> f64 {
    let mut s = 0.0;
    for i in 0..8 {
        for j in i + 1..8 {
            s += v[i] * v[j];
        }
    }
    s
}

pub fn leaf_vector(max: f64) -> impl Strategy<Value = [f64; 8]> {
    prop::array::uniform8(0.0..=max)
}

pub fn check_harm_monotone(v: [f64; 8], leaf: usize, bump: f64) -> Result<(), TestCaseError> {
    let mut w = v;
    w[leaf] = (w[leaf] + bump).min(1.0);
    let before = harm(v);
    let after = harm(w);
    prop_assert!(after >= before, "leaf {leaf}: {before} -> {after}");
    Ok(())
}

/// Central difference of `p_h` in one leaf. `p_h` is affine in each leaf, so
/// the difference centred on `x + h` is the exact slope at `x` as well, and
/// both probes stay inside `[0, 1]` for `x <= 1 - 2h`.
pub fn finite_difference(v: [f64; 8], leaf: usize, h: f64) -> f64 {
    let centre = v[leaf] + h;
    let mut lo = v;
    let mut hi = v;
    lo[leaf] = centre - h;
    hi[leaf] = centre + h;
    (harm(hi) - harm(lo)) / (2.0 * h)
}

// ---- FMEDA ----

pub fn fmeda_row(id: usize) -> impl Strategy<Value = FmedaRow> {
    (
        1e-3f64..1e4,
        any::<bool>(),
        any::<bool>(),
        prop::option::of(0.0f64..=1.0),
        any::<bool>(),
        prop::option::of(0.0f64..=1.0),
    )
        .prop_map(move |(fit, sr, direct, dc, latent, dcl)| {
            let mut row = FmedaRow::new(&format!("R{id}"), FailureRate::fit(fit).unwrap());
            row.safety_related = sr;
            row.can_violate_goal_directly = direct;
            row.dc_residual = dc.map(|x| UnitInterval::new(x).unwrap());
            row.can_be_latent = latent;
            row.dc_latent = if latent { dcl.map(|x| UnitInterval::new(x).unwrap()) } else { None };
            row
        })
}

pub fn fmeda_rows() -> impl Strategy<Value = Vec<FmedaRow>> {
    (1usize..8).prop_flat_map(|n| (0..n).map(fmeda_row).collect::<Vec<_>>())
}

pub fn check_partition_conservation(row: &FmedaRow) -> Result<(), TestCaseError> {
    let p = classify_fmeda_row(row);
    let lambda = row.lambda_total.as_per_hour();
    let parts = [p.lambda_spf, p.lambda_rf, p.lambda_mpf_latent, p.lambda_mpf_detected, p.lambda_safe];
    prop_assert!(parts.iter().all(|r| r.as_per_hour() >= 0.0));
    prop_assert!(rel_err(p.total(), lambda) <= 1e-12, "{} vs {}", p.total(), lambda);
    Ok(())
}

pub fn check_spfm_monotone(rows: &[FmedaRow], pick: usize, raise: f64) -> Result<(), TestCaseError> {
    let mut raised = rows.to_vec();
    let row = &mut raised[pick % rows.len()];
    let dc = row.dc_residual.map_or(0.0, UnitInterval::get);
    row.dc_residual = Some(UnitInterval::new(dc + (1.0 - dc) * raise).unwrap());
    let before = compute_hw_metrics(rows).unwrap().spfm.get();
    let after = compute_hw_metrics(&raised).unwrap().spfm.get();
    prop_assert!(after >= before, "SPFM {before} -> {after}");
    Ok(())
}

pub fn check_lfm_monotone(rows: &[FmedaRow], pick: usize, raise: f64) -> Result<(), TestCaseError> {
    let mut raised = rows.to_vec();
    let row = &mut raised[pick % rows.len()];
    let dc = row.dc_latent.map_or(0.0, UnitInterval::get);
    if row.can_be_latent {
        row.dc_latent = Some(UnitInterval::new(dc + (1.0 - dc) * raise).unwrap());
    }
    let before = compute_hw_metrics(rows).unwrap().lfm.get();
    let after = compute_hw_metrics(&raised).unwrap().lfm.get();
    prop_assert!(after >= before, "LFM {before} -> {after}");
    Ok(())
}

// ---- item rigor ----

fn signal() -> impl Strategy<Value = InterfaceSignal> {
    (any::<bool>(), prop::option::of(-10.0f64..0.0), prop::option::of(0.0f64..10.0)).prop_map(|(unit, lo, hi)| {
        InterfaceSignal {
            name: String::new(),
            direction: fusa_core::item::Direction::In,
            semantic_type: String::new(),
            unit: unit.then(|| "m".to_string()),
            range_min: lo,
            range_max: hi,
        }
    })
}

pub fn item() -> impl Strategy<Value = ItemDefinition> {
    (
        prop::array::uniform6(any::<bool>()),
        prop::array::uniform6(any::<bool>()),
        prop::array::uniform4(any::<bool>()),
        prop::collection::vec(signal(), 0..4),
    )
        .prop_map(|(req, bnd, art, mut sigs)| {
            for (i, s) in sigs.iter_mut().enumerate() {
                s.name = format!("s{i}");
            }
            let mut item = ItemDefinition::new("ITEM");
            item.requirement_checklist = req;
            item.boundary_checklist = bnd;
            item.artifacts_present = art;
            item.interfaces = sigs;
            item
        })
}

/// Flips one unsatisfied criterion towards satisfied: a checklist flag, or a
/// missing unit or bound on a signal.
pub fn improve_item(item: &ItemDefinition, pick: usize) -> ItemDefinition {
    let mut out = item.clone();
    let slots = 16 + 3 * out.interfaces.len();
    match pick % slots {
        i @ 0..6 => out.requirement_checklist[i] = true,
        i @ 6..12 => out.boundary_checklist[i - 6] = true,
        i @ 12..16 => out.artifacts_present[i - 12] = true,
        i => {
            let s = &mut out.interfaces[(i - 16) / 3];
            match (i - 16) % 3 {
                0 => s.unit = Some("m".into()),
                1 => s.range_min = Some(s.range_min.unwrap_or(-1.0)),
                _ => s.range_max = Some(s.range_max.unwrap_or(1.0)),
            }
        }
    }
    out
}

pub fn check_rigor_monotone(item: &ItemDefinition, machines: &[StateMachine], pick: usize) -> Result<(), TestCaseError> {
    let before = score_item_rigor(item, machines).score.get();
    let after = score_item_rigor(&improve_item(item, pick), machines).score.get();
    prop_assert!(after >= before, "rigor {before} -> {after}");
    Ok(())
}

// ---- state machines ----

pub fn state_machine() -> impl Strategy<Value = StateMachine> {
    (1usize..=6, 1usize..=4).prop_flat_map(|(n, e)| {
        prop::collection::vec((0..n, 0..e, 0..n), 0..=12).prop_map(move |ts| StateMachine {
            name: "M".into(),
            states: (0..n).map(|i| format!("S{i}")).collect(),
            initial: "S0".into(),
            events: (0..e).map(|i| format!("e{i}")).collect(),
            transitions: ts
                .into_iter()
                .map(|(a, ev, b)| Transition::new(&format!("S{a}"), &format!("e{ev}"), &format!("S{b}")))
                .collect(),
        })
    })
}

fn closure(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<bool>> {
    let mut r = vec![vec![false; n]; n];
    for &(a, b) in edges {
        r[a][b] = true;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if r[i][k] && r[k][j] {
                    r[i][j] = true;
                }
            }
        }
    }
    r
}

fn keys(findings: &[Finding]) -> BTreeSet<(String, String)> {
    findings.iter().map(|f| (f.rule_id.clone(), f.subject.clone())).collect()
}

/// State-machine findings by Warshall closure and pairwise enumeration.
pub fn state_machine_oracle(sm: &StateMachine) -> BTreeSet<(String, String)> {
    let idx = |s: &str| sm.states.iter().position(|x| x == s).unwrap();
    let n = sm.states.len();
    let mut out = BTreeSet::new();
    let subject = |m: &str| format!("{}/{}", sm.name, m);
    for (i, a) in sm.transitions.iter().enumerate() {
        for b in &sm.transitions[i + 1..] {
            if a.from == b.from && a.event == b.event {
                out.insert(("SM-NONDET".to_string(), subject(&a.from)));
            }
        }
    }
    let edges: Vec<(usize, usize)> = sm.transitions.iter().map(|t| (idx(&t.from), idx(&t.to))).collect();
    let reach = closure(n, &edges);
    let init = idx(&sm.initial);
    for (i, s) in sm.states.iter().enumerate() {
        if i != init && !reach[init][i] {
            out.insert(("SM-UNREACH".to_string(), subject(s)));
        }
        if i != init && !sm.transitions.iter().any(|t| &t.from == s) {
            out.insert(("SM-DEAD".to_string(), subject(s)));
        }
    }
    for e in &sm.events {
        if !sm.transitions.iter().any(|t| &t.event == e) {
            out.insert(("SM-UNUSED-EVT".to_string(), subject(e)));
        }
    }
    out
}

pub fn check_state_machine_oracle(sm: &StateMachine) -> Result<(), TestCaseError> {
    prop_assert_eq!(keys(&validate_state_machine(sm)), state_machine_oracle(sm));
    Ok(())
}

// ---- traceability ----

const KINDS: [NodeKind; 7] = [
    NodeKind::Hazard,
    NodeKind::SafetyGoal,
    NodeKind::FunctionalReq,
    NodeKind::TechnicalReq,
    NodeKind::HwElement,
    NodeKind::SwElement,
    NodeKind::Test,
];

/// The canonical relation table, spelled out.
const CANONICAL: [(NodeKind, Relation, NodeKind); 7] = [
    (NodeKind::SafetyGoal, Relation::Covers, NodeKind::Hazard),
    (NodeKind::FunctionalReq, Relation::Derives, NodeKind::SafetyGoal),
    (NodeKind::TechnicalReq, Relation::Derives, NodeKind::FunctionalReq),
    (NodeKind::HwElement, Relation::Allocates, NodeKind::TechnicalReq),
    (NodeKind::SwElement, Relation::Allocates, NodeKind::TechnicalReq),
    (NodeKind::Test, Relation::Verifies, NodeKind::FunctionalReq),
    (NodeKind::Test, Relation::Verifies, NodeKind::TechnicalReq),
];

const RELATIONS: [Relation; 4] = [Relation::Derives, Relation::Allocates, Relation::Verifies, Relation::Covers];

fn canonical(from: NodeKind, rel: Relation, to: NodeKind) -> bool {
    CANONICAL.contains(&(from, rel, to))
}

pub fn trace_graph() -> impl Strategy<Value = TraceGraph> {
    let node = (0..KINDS.len(), prop::option::of(prop::sample::select(Asil::ALL.to_vec())));
    prop::collection::vec(node, 1..=7).prop_flat_map(|nodes| {
        let n = nodes.len();
        let edge = (0..n, 0..n, 0..RELATIONS.len(), prop::bool::weighted(0.75));
        prop::collection::vec(edge, 0..=12).prop_map(move |edges| {
            let nodes: Vec<TraceNode> = nodes
                .iter()
                .enumerate()
                .map(|(i, &(k, asil))| TraceNode::new(&format!("N{i}"), KINDS[k], asil))
                .collect();
            let edges = edges
                .into_iter()
                .map(|(a, b, r, prefer_canonical)| {
                    let (ka, kb) = (nodes[a].kind, nodes[b].kind);
                    let rel = RELATIONS
                        .iter()
                        .copied()
                        .find(|&rel| prefer_canonical && canonical(ka, rel, kb))
                        .unwrap_or(RELATIONS[r]);
                    TraceEdge::new(&nodes[a].id, rel, &nodes[b].id)
                })
                .collect();
            TraceGraph { nodes, edges }
        })
    })
}

/// Traceability findings by direct enumeration of the edge list.
pub fn trace_oracle(g: &TraceGraph) -> BTreeSet<(String, String)> {
    let kind = |id: &str| g.nodes.iter().find(|n| n.id == id).unwrap().kind;
    let asil = |id: &str| g.nodes.iter().find(|n| n.id == id).unwrap().asil;
    let has_in = |id: &str, rel: Relation, from: &[NodeKind]| {
        g.edges.iter().any(|e| e.to == id && e.relation == rel && from.contains(&kind(&e.from)) && canonical(kind(&e.from), rel, kind(id)))
    };
    let rated = |id: &str| matches!(asil(id), Some(a) if a != Asil::QM);
    let mut out = BTreeSet::new();
    let mut add = |rule: &str, s: &str| {
        out.insert((rule.to_string(), s.to_string()));
    };
    for n in &g.nodes {
        let id = n.id.as_str();
        match n.kind {
            NodeKind::SafetyGoal if !has_in(id, Relation::Derives, &[NodeKind::FunctionalReq]) => add("TR-GOAL-NOREQ", id),
            NodeKind::FunctionalReq if rated(id) && !has_in(id, Relation::Derives, &[NodeKind::TechnicalReq]) => {
                add("TR-FREQ-NOTREQ", id)
            }
            NodeKind::TechnicalReq if !has_in(id, Relation::Allocates, &[NodeKind::HwElement, NodeKind::SwElement]) => {
                add("TR-TREQ-NOALLOC", id)
            }
            _ => {}
        }
        if matches!(n.kind, NodeKind::FunctionalReq | NodeKind::TechnicalReq)
            && rated(id)
            && !has_in(id, Relation::Verifies, &[NodeKind::Test])
        {
            add("TR-REQ-NOTEST", id);
        }
        if !g.edges.iter().any(|e| e.from == id || e.to == id) {
            add("TR-ORPHAN", id);
        }
    }
    for e in &g.edges {
        if !canonical(kind(&e.from), e.relation, kind(&e.to)) {
            add("TR-EDGE-KIND", &e.from);
        }
        if e.relation == Relation::Derives {
            if let Some(parent) = asil(&e.to) {
                if asil(&e.from).unwrap_or(Asil::QM) < parent {
                    add("TR-ASIL-DROP", &e.from);
                }
            }
        }
    }
    // cycles: mutually reachable groups over derives edges
    let n = g.nodes.len();
    let idx = |id: &str| g.nodes.iter().position(|x| x.id == id).unwrap();
    let derives: Vec<(usize, usize)> =
        g.edges.iter().filter(|e| e.relation == Relation::Derives).map(|e| (idx(&e.from), idx(&e.to))).collect();
    let reach = closure(n, &derives);
    for (i, row) in reach.iter().enumerate() {
        if row[i] {
            let smallest = (0..n).filter(|&j| reach[i][j] && reach[j][i]).map(|j| g.nodes[j].id.clone()).min().unwrap();
            add("TR-CYCLE", &smallest);
        }
    }
    out
}

pub fn check_trace_oracle(g: &TraceGraph) -> Result<(), TestCaseError> {
    let mut got = keys(&check_traceability(g));
    got.extend(keys(&detect_cycles(g)));
    prop_assert_eq!(got, trace_oracle(g));

    // hazard -> test matrix by closure over canonical edges
    let n = g.nodes.len();
    let idx = |id: &str| g.nodes.iter().position(|x| x.id == id).unwrap();
    let up_edges: Vec<(usize, usize)> = g
        .edges
        .iter()
        .filter(|e| canonical(g.nodes[idx(&e.from)].kind, e.relation, g.nodes[idx(&e.to)].kind))
        .map(|e| (idx(&e.from), idx(&e.to)))
        .collect();
    let up = closure(n, &up_edges);
    let matrix = trace_matrix(g, NodeKind::Hazard, NodeKind::Test);
    for (i, node) in g.nodes.iter().enumerate().filter(|(_, x)| x.kind == NodeKind::Hazard) {
        let want: BTreeSet<String> = (0..n)
            .filter(|&j| g.nodes[j].kind == NodeKind::Test && (up[i][j] || up[j][i]))
            .map(|j| g.nodes[j].id.clone())
            .collect();
        prop_assert_eq!(&matrix[&node.id], &want);
    }
    Ok(())
}

// ---- safety case ----

/// Acyclic case: claim `Ci` is supported by arguments whose premises are
/// claims with larger index.
pub fn safety_case() -> impl Strategy<Value = SafetyCase> {
    let unit = || 0.0f64..=1.0;
    let arg = (0usize..3, unit(), unit(), prop::collection::btree_set(0usize..3, 0..3), prop::collection::btree_set(0usize..4, 0..3));
    (prop::collection::vec(arg, 1..6), prop::collection::vec((unit(), unit()), 4)).prop_map(|(args, ev)| {
        let mut claims: Vec<Claim> =
            (0..3).map(|i| Claim { id: format!("C{i}"), text: String::new(), supported_by: vec![] }).collect();
        let mut arguments = Vec::new();
        for (k, (target, acr, suit, premises, evidence)) in args.into_iter().enumerate() {
            let id = format!("A{k}");
            claims[target].supported_by.push(id.clone());
            arguments.push(Argument {
                id,
                text: String::new(),
                acceptance_criteria_reasonableness: UnitInterval::new(acr).unwrap(),
                suitability: UnitInterval::new(suit).unwrap(),
                premises: premises.into_iter().filter(|&p| p > target).map(|p| format!("C{p}")).collect(),
                evidence: evidence.into_iter().map(|e| format!("E{e}")).collect(),
            });
        }
        let evidence = ev
            .into_iter()
            .enumerate()
            .map(|(i, (c, v))| Evidence {
                id: format!("E{i}"),
                text: String::new(),
                confidence: UnitInterval::new(c).unwrap(),
                coverage: UnitInterval::new(v).unwrap(),
                artifacts: vec![],
            })
            .collect();
        SafetyCase { root: "C0".into(), claims, arguments, evidence }
    })
}

/// Raises one score of the case (argument or evidence) by `frac` of its headroom.
pub fn raise_case_score(case: &SafetyCase, pick: usize, frac: f64) -> SafetyCase {
    let mut out = case.clone();
    let raise = |u: &mut UnitInterval| *u = UnitInterval::new(u.get() + (1.0 - u.get()) * frac).unwrap();
    let slots = 2 * out.arguments.len() + 2 * out.evidence.len();
    let i = pick % slots;
    if i < 2 * out.arguments.len() {
        let a = &mut out.arguments[i / 2];
        raise(if i.is_multiple_of(2) { &mut a.acceptance_criteria_reasonableness } else { &mut a.suitability });
    } else {
        let e = &mut out.evidence[(i - 2 * out.arguments.len()) / 2];
        raise(if i.is_multiple_of(2) { &mut e.confidence } else { &mut e.coverage });
    }
    out
}

pub fn check_cca_monotone(case: &SafetyCase, pick: usize, frac: f64) -> Result<(), TestCaseError> {
    let before = assess_cca(case).unwrap();
    let after = assess_cca(&raise_case_score(case, pick, frac)).unwrap();
    for (id, node) in &before.nodes {
        prop_assert!(after.nodes[id].credibility >= node.credibility, "{id}");
    }
    Ok(())
}
