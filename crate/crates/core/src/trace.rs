//! Typed traceability graph: completeness rules, ASIL inheritance,
//! reachability matrix and derives-cycle detection.
//!
//! Canonical relations, always pointing from the downstream artifact to the
//! upstream one:
//!
//! ```text
//! covers     safety_goal              -> hazard
//! derives    functional_req           -> safety_goal
//! derives    technical_req            -> functional_req
//! allocates  hw_element | sw_element  -> technical_req
//! verifies   test                     -> functional_req | technical_req
//! ```

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::{Deserialize, Serialize};

use crate::finding::{sort_findings, Finding};
use crate::primitives::Asil;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Item,
    Hazard,
    SafetyGoal,
    FunctionalReq,
    TechnicalReq,
    HwElement,
    SwElement,
    Test,
    WorkProduct,
}

impl NodeKind {
    pub const ALL: [NodeKind; 9] = [
        NodeKind::Item,
        NodeKind::Hazard,
        NodeKind::SafetyGoal,
        NodeKind::FunctionalReq,
        NodeKind::TechnicalReq,
        NodeKind::HwElement,
        NodeKind::SwElement,
        NodeKind::Test,
        NodeKind::WorkProduct,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NodeKind::Item => "item",
            NodeKind::Hazard => "hazard",
            NodeKind::SafetyGoal => "safety_goal",
            NodeKind::FunctionalReq => "functional_req",
            NodeKind::TechnicalReq => "technical_req",
            NodeKind::HwElement => "hw_element",
            NodeKind::SwElement => "sw_element",
            NodeKind::Test => "test",
            NodeKind::WorkProduct => "work_product",
        }
    }

    fn is_requirement(self) -> bool {
        matches!(self, NodeKind::FunctionalReq | NodeKind::TechnicalReq)
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Derives,
    Allocates,
    Verifies,
    Covers,
}

impl Relation {
    pub fn name(self) -> &'static str {
        match self {
            Relation::Derives => "derives",
            Relation::Allocates => "allocates",
            Relation::Verifies => "verifies",
            Relation::Covers => "covers",
        }
    }

    /// Whether `from -[self]-> to` is one of the canonical relations.
    pub fn connects(self, from: NodeKind, to: NodeKind) -> bool {
        use NodeKind::*;
        match self {
            Relation::Covers => from == SafetyGoal && to == Hazard,
            Relation::Derives => matches!((from, to), (FunctionalReq, SafetyGoal) | (TechnicalReq, FunctionalReq)),
            Relation::Allocates => matches!(from, HwElement | SwElement) && to == TechnicalReq,
            Relation::Verifies => from == Test && to.is_requirement(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceNode {
    pub id: String,
    pub kind: NodeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub asil: Option<Asil>,
    #[serde(default)]
    pub title: String,
}

impl TraceNode {
    pub fn new(id: &str, kind: NodeKind, asil: Option<Asil>) -> Self {
        TraceNode { id: id.into(), kind, asil, title: String::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEdge {
    pub from: String,
    pub to: String,
    pub relation: Relation,
}

impl TraceEdge {
    pub fn new(from: &str, relation: Relation, to: &str) -> Self {
        TraceEdge { from: from.into(), to: to.into(), relation }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TraceGraph {
    #[serde(default)]
    pub nodes: Vec<TraceNode>,
    #[serde(default)]
    pub edges: Vec<TraceEdge>,
}

impl TraceGraph {
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty() && self.edges.is_empty()
    }

    fn index(&self) -> BTreeMap<&str, &TraceNode> {
        self.nodes.iter().map(|n| (n.id.as_str(), n)).collect()
    }

    /// Edges whose endpoints resolve and whose kinds match the relation.
    fn canonical_edges<'a>(&'a self, index: &BTreeMap<&str, &'a TraceNode>) -> Vec<(&'a TraceNode, Relation, &'a TraceNode)> {
        self.edges
            .iter()
            .filter_map(|e| {
                let from = index.get(e.from.as_str())?;
                let to = index.get(e.to.as_str())?;
                e.relation.connects(from.kind, to.kind).then_some((*from, e.relation, *to))
            })
            .collect()
    }
}

/// Completeness and consistency rules over the graph.
///
/// Only kind-compatible edges satisfy the completeness rules. A derives
/// child without an ASIL counts as QM against a rated parent.
pub fn check_traceability(graph: &TraceGraph) -> Vec<Finding> {
    let index = graph.index();
    let canonical = graph.canonical_edges(&index);
    let mut findings = Vec::new();

    let mut incoming: BTreeSet<(&str, Relation, NodeKind)> = BTreeSet::new();
    for (from, relation, to) in &canonical {
        incoming.insert((to.id.as_str(), *relation, from.kind));
    }
    let has_incoming = |id: &str, relation: Relation, kinds: &[NodeKind]| {
        kinds.iter().any(|k| incoming.contains(&(id, relation, *k)))
    };
    let rated = |n: &TraceNode| n.asil.is_some_and(Asil::is_safety_rated);

    for node in &graph.nodes {
        let id = node.id.as_str();
        match node.kind {
            NodeKind::SafetyGoal if !has_incoming(id, Relation::Derives, &[NodeKind::FunctionalReq]) => {
                findings.push(Finding::new("TR-GOAL-NOREQ", id, "no functional requirement derives from this goal"));
            }
            NodeKind::FunctionalReq
                if rated(node) && !has_incoming(id, Relation::Derives, &[NodeKind::TechnicalReq]) =>
            {
                findings.push(Finding::new(
                    "TR-FREQ-NOTREQ",
                    id,
                    "no technical requirement derives from this functional requirement",
                ));
            }
            _ => {}
        }
        if node.kind == NodeKind::TechnicalReq
            && !has_incoming(id, Relation::Allocates, &[NodeKind::HwElement, NodeKind::SwElement])
        {
            findings.push(Finding::new("TR-TREQ-NOALLOC", id, "technical requirement is allocated to no element"));
        }
        if node.kind.is_requirement() && rated(node) && !has_incoming(id, Relation::Verifies, &[NodeKind::Test]) {
            findings.push(Finding::new("TR-REQ-NOTEST", id, "requirement is verified by no test"));
        }
    }

    let mut touched: BTreeSet<&str> = BTreeSet::new();
    for edge in &graph.edges {
        touched.insert(edge.from.as_str());
        touched.insert(edge.to.as_str());
        let (Some(from), Some(to)) = (index.get(edge.from.as_str()), index.get(edge.to.as_str())) else {
            continue;
        };
        if !edge.relation.connects(from.kind, to.kind) {
            findings.push(Finding::new(
                "TR-EDGE-KIND",
                edge.from.clone(),
                format!(
                    "{} ({}) -{}-> {} ({}) is not a valid relation",
                    from.id,
                    from.kind,
                    edge.relation.name(),
                    to.id,
                    to.kind
                ),
            ));
        }
        if edge.relation == Relation::Derives {
            if let Some(parent) = to.asil {
                let child = from.asil.unwrap_or(Asil::QM);
                if child < parent {
                    findings.push(Finding::new(
                        "TR-ASIL-DROP",
                        edge.from.clone(),
                        format!("{} ({child}) derives from {} ({parent})", from.id, to.id),
                    ));
                }
            }
        }
    }
    for node in &graph.nodes {
        if !touched.contains(node.id.as_str()) {
            findings.push(Finding::new("TR-ORPHAN", node.id.clone(), format!("{} has no trace links", node.kind)));
        }
    }

    sort_findings(&mut findings);
    findings
}

fn bfs<'a>(start: &'a str, adjacency: &BTreeMap<&'a str, Vec<&'a str>>) -> BTreeSet<&'a str> {
    let mut seen = BTreeSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(n) = queue.pop_front() {
        for &next in adjacency.get(n).into_iter().flatten() {
            if seen.insert(next) {
                queue.push_back(next);
            }
        }
    }
    seen
}

/// For every node of `from_kind`, the `to_kind` nodes reachable along
/// canonical edges followed consistently upstream or consistently
/// downstream. A node always reaches itself.
pub fn trace_matrix(graph: &TraceGraph, from_kind: NodeKind, to_kind: NodeKind) -> BTreeMap<String, BTreeSet<String>> {
    let index = graph.index();
    let mut upstream: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    let mut downstream: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (from, _, to) in graph.canonical_edges(&index) {
        upstream.entry(from.id.as_str()).or_default().push(to.id.as_str());
        downstream.entry(to.id.as_str()).or_default().push(from.id.as_str());
    }

    graph
        .nodes
        .iter()
        .filter(|n| n.kind == from_kind)
        .map(|n| {
            let reached = bfs(&n.id, &upstream)
                .into_iter()
                .chain(bfs(&n.id, &downstream))
                .filter(|id| index[id].kind == to_kind)
                .map(str::to_string)
                .collect();
            (n.id.clone(), reached)
        })
        .collect()
}

/// One `TR-CYCLE` per strongly connected component of the derives
/// subgraph with two or more members, or with a self-loop.
pub fn detect_cycles(graph: &TraceGraph) -> Vec<Finding> {
    let mut g: DiGraph<&str, ()> = DiGraph::new();
    let mut ids = BTreeMap::new();
    for node in &graph.nodes {
        ids.entry(node.id.as_str()).or_insert_with(|| g.add_node(node.id.as_str()));
    }
    let mut self_loops = BTreeSet::new();
    for edge in graph.edges.iter().filter(|e| e.relation == Relation::Derives) {
        let (Some(&a), Some(&b)) = (ids.get(edge.from.as_str()), ids.get(edge.to.as_str())) else {
            continue;
        };
        if a == b {
            self_loops.insert(edge.from.as_str());
        }
        g.add_edge(a, b, ());
    }

    let mut findings = Vec::new();
    for component in tarjan_scc(&g) {
        let mut members: Vec<&str> = component.iter().map(|&ix| g[ix]).collect();
        members.sort_unstable();
        if members.len() >= 2 || self_loops.contains(members[0]) {
            findings.push(Finding::new(
                "TR-CYCLE",
                members[0],
                format!("derives cycle among {{{}}}", members.join(", ")),
            ));
        }
    }
    sort_findings(&mut findings);
    findings
}
