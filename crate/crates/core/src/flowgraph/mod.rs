//! Flow Graph Notation: per-function control-flow graphs whose nodes carry
//! program-wide ids, so interprocedural traces can be written as one
//! dash-separated id sequence.

mod build;
mod dot;
mod nodemap;
pub(crate) mod omit;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::frontend::{ProgramAst, StmtId};

pub use build::build_flow_graph;
pub use dot::to_dot;
pub use nodemap::NodeMap;
pub use omit::{OmitError, OmitTarget};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeKind {
    Entry,
    Exit,
    Statement,
    Predicate,
    CallSuspension,
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NodeKind::Entry => "entry",
            NodeKind::Exit => "exit",
            NodeKind::Statement => "statement",
            NodeKind::Predicate => "predicate",
            NodeKind::CallSuspension => "call-suspension",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeLabel {
    True,
    False,
    Seq,
}

impl EdgeLabel {
    pub fn branch(taken: bool) -> Self {
        if taken {
            EdgeLabel::True
        } else {
            EdgeLabel::False
        }
    }
}

impl fmt::Display for EdgeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EdgeLabel::True => "true",
            EdgeLabel::False => "false",
            EdgeLabel::Seq => "seq",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowNode {
    pub id: NodeId,
    pub kind: NodeKind,
    /// Build-order key (`entry`, `pred0`, `call1`, ...), stable across numberings.
    pub key: String,
    pub stmts: Vec<StmtId>,
    pub label: String,
    pub owner: String,
    pub callee: Option<String>,
    /// For call-suspension nodes: the statement and the call's position in
    /// that statement's evaluation order.
    #[serde(skip)]
    pub call: Option<(StmtId, usize)>,
    pub is_return: bool,
    /// Left empty by omitting the function it used to call.
    pub hollow: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct FlowEdge {
    pub from: NodeId,
    pub to: NodeId,
    pub label: EdgeLabel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowGraph {
    pub owner: String,
    pub nodes: Vec<FlowNode>,
    pub edges: Vec<FlowEdge>,
    pub entry: NodeId,
    pub exit: NodeId,
    pub call_sites: Vec<(NodeId, String)>,
    index: HashMap<NodeId, usize>,
    stmt_owner: HashMap<StmtId, NodeId>,
    call_nodes: HashMap<(StmtId, usize), NodeId>,
    markers: HashMap<(StmtId, bool), NodeId>,
}

impl FlowGraph {
    pub(crate) fn assemble(owner: String, nodes: Vec<FlowNode>, edges: Vec<FlowEdge>, entry: NodeId, exit: NodeId) -> Self {
        let mut g = FlowGraph {
            owner,
            nodes,
            edges,
            entry,
            exit,
            call_sites: Vec::new(),
            index: HashMap::new(),
            stmt_owner: HashMap::new(),
            call_nodes: HashMap::new(),
            markers: HashMap::new(),
        };
        g.reindex();
        g
    }

    fn reindex(&mut self) {
        self.index = self.nodes.iter().enumerate().map(|(i, n)| (n.id, i)).collect();
        self.stmt_owner.clear();
        self.call_nodes.clear();
        self.markers.clear();
        for n in &self.nodes {
            for &s in &n.stmts {
                self.stmt_owner.insert(s, n.id);
            }
            if let Some(call) = n.call {
                self.call_nodes.insert(call, n.id);
            }
        }
        for e in &self.edges {
            if e.label == EdgeLabel::Seq {
                continue;
            }
            let target = &self.nodes[self.index[&e.to]];
            if target.kind == NodeKind::Statement && target.stmts.is_empty() && !target.hollow {
                let pred = &self.nodes[self.index[&e.from]];
                self.markers.insert((pred.stmts[0], e.label == EdgeLabel::True), e.to);
            }
        }
        let mut sites: Vec<(NodeId, String)> =
            self.nodes.iter().filter_map(|n| n.callee.clone().map(|c| (n.id, c))).collect();
        sites.sort();
        self.call_sites = sites;
    }

    pub fn node(&self, id: NodeId) -> Option<&FlowNode> {
        self.index.get(&id).map(|&i| &self.nodes[i])
    }

    /// Node that owns a statement (the predicate for an `if`).
    pub fn stmt_node(&self, stmt: StmtId) -> Option<NodeId> {
        self.stmt_owner.get(&stmt).copied()
    }

    pub fn call_node(&self, stmt: StmtId, k: usize) -> Option<NodeId> {
        self.call_nodes.get(&(stmt, k)).copied()
    }

    /// Begin marker of the `then` (true) or `else` (false) branch of an `if`.
    pub fn branch_marker(&self, if_stmt: StmtId, branch: bool) -> Option<NodeId> {
        self.markers.get(&(if_stmt, branch)).copied()
    }

    pub fn successors(&self, id: NodeId) -> impl Iterator<Item = &FlowEdge> {
        self.edges.iter().filter(move |e| e.from == id)
    }

    pub fn predecessors(&self, id: NodeId) -> impl Iterator<Item = &FlowEdge> {
        self.edges.iter().filter(move |e| e.to == id)
    }

    /// Target of the outgoing edge with the given label.
    pub fn successor(&self, id: NodeId, label: EdgeLabel) -> Option<NodeId> {
        self.successors(id).find(|e| e.label == label).map(|e| e.to)
    }

    pub fn has_edge(&self, from: NodeId, to: NodeId) -> bool {
        self.edges.iter().any(|e| e.from == from && e.to == to)
    }

    pub fn predicates(&self) -> impl Iterator<Item = &FlowNode> {
        self.nodes.iter().filter(|n| n.kind == NodeKind::Predicate)
    }

    pub fn node_ids(&self) -> Vec<NodeId> {
        let mut ids: Vec<NodeId> = self.nodes.iter().map(|n| n.id).collect();
        ids.sort();
        ids
    }

    fn renumber(&self, map: &HashMap<NodeId, NodeId>) -> FlowGraph {
        let nodes = self.nodes.iter().map(|n| FlowNode { id: map[&n.id], ..n.clone() }).collect();
        let edges = self.edges.iter().map(|e| FlowEdge { from: map[&e.from], to: map[&e.to], label: e.label }).collect();
        FlowGraph::assemble(self.owner.clone(), nodes, edges, map[&self.entry], map[&self.exit])
    }

    /// Depth-first preorder from entry, true branches first.
    fn preorder(&self) -> Vec<NodeId> {
        let mut seen = HashSet::new();
        let mut order = Vec::new();
        let mut stack = vec![self.entry];
        while let Some(id) = stack.pop() {
            if !seen.insert(id) {
                continue;
            }
            order.push(id);
            let mut next: Vec<&FlowEdge> = self.successors(id).collect();
            next.sort_by_key(|e| e.label);
            for e in next.into_iter().rev() {
                stack.push(e.to);
            }
        }
        order
    }
}

/// `E - N + 2`; for structured MiniLang graphs equal to predicates + 1.
pub fn cyclomatic_complexity(graph: &FlowGraph) -> u32 {
    (graph.edges.len() as i64 - graph.nodes.len() as i64 + 2) as u32
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NodeMapError {
    #[error("node map line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("node map names unknown function `{0}`")]
    UnknownFunction(String),
    #[error("node map names unknown node `{function}.{key}`")]
    UnknownNode { function: String, key: String },
    #[error("node map does not number `{function}.{key}`")]
    Incomplete { function: String, key: String },
    #[error("node map assigns id {0} more than once")]
    NotInjective(u32),
    #[error("node map ids must be positive")]
    ZeroId,
}

/// Flow graphs for every function of a program, numbered program-wide.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowProgram {
    graphs: Vec<FlowGraph>,
    owners: BTreeMap<NodeId, usize>,
}

impl FlowProgram {
    fn new(graphs: Vec<FlowGraph>) -> Self {
        let mut owners = BTreeMap::new();
        for (i, g) in graphs.iter().enumerate() {
            for n in &g.nodes {
                owners.insert(n.id, i);
            }
        }
        FlowProgram { graphs, owners }
    }

    pub fn graphs(&self) -> &[FlowGraph] {
        &self.graphs
    }

    pub fn graph(&self, function: &str) -> Option<&FlowGraph> {
        self.graphs.iter().find(|g| g.owner == function)
    }

    pub fn node(&self, id: NodeId) -> Option<&FlowNode> {
        self.owner_graph(id).and_then(|g| g.node(id))
    }

    pub fn owner_graph(&self, id: NodeId) -> Option<&FlowGraph> {
        self.owners.get(&id).map(|&i| &self.graphs[i])
    }

    pub(crate) fn graphs_mut(&mut self) -> &mut Vec<FlowGraph> {
        &mut self.graphs
    }

    pub(crate) fn refresh(&mut self) {
        for g in &mut self.graphs {
            g.reindex();
        }
        *self = FlowProgram::new(std::mem::take(&mut self.graphs));
    }
}

/// Builds and numbers the graphs of every function.
///
/// Without an override, functions are numbered in source order and each
/// function's nodes in depth-first preorder from entry, true branch first.
/// With an override, every function the map mentions takes its ids from
/// the map; the remaining functions continue after the largest mapped id.
pub fn number_nodes(program: &ProgramAst, override_map: Option<&NodeMap>) -> Result<FlowProgram, NodeMapError> {
    let local: Vec<FlowGraph> = program.functions.iter().map(build_flow_graph).collect();
    let mut next = 1u32;
    let mut used = HashSet::new();
    let mut assigned: Vec<Option<HashMap<NodeId, NodeId>>> = vec![None; local.len()];

    if let Some(map) = override_map {
        for function in map.functions() {
            if !local.iter().any(|g| g.owner == function) {
                return Err(NodeMapError::UnknownFunction(function.to_string()));
            }
        }
        for (i, g) in local.iter().enumerate() {
            let Some(entries) = map.entries_for(&g.owner) else { continue };
            for key in entries.keys() {
                if !g.nodes.iter().any(|n| &n.key == key) {
                    return Err(NodeMapError::UnknownNode { function: g.owner.clone(), key: key.clone() });
                }
            }
            let mut m = HashMap::new();
            for n in &g.nodes {
                let id = *entries
                    .get(&n.key)
                    .ok_or_else(|| NodeMapError::Incomplete { function: g.owner.clone(), key: n.key.clone() })?;
                if id == 0 {
                    return Err(NodeMapError::ZeroId);
                }
                if !used.insert(id) {
                    return Err(NodeMapError::NotInjective(id));
                }
                m.insert(n.id, NodeId(id));
            }
            next = next.max(m.values().map(|v| v.0 + 1).max().unwrap_or(1));
            assigned[i] = Some(m);
        }
    }

    let graphs = local
        .iter()
        .zip(assigned)
        .map(|(g, m)| {
            let m = m.unwrap_or_else(|| {
                g.preorder()
                    .into_iter()
                    .map(|id| {
                        let global = NodeId(next);
                        next += 1;
                        (id, global)
                    })
                    .collect()
            });
            g.renumber(&m)
        })
        .collect();
    Ok(FlowProgram::new(graphs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{canonical_example, parse_source};

    fn fig1() -> FlowProgram {
        let map = NodeMap::parse(include_str!("../../../../corpus/fig1.nodemap")).unwrap();
        number_nodes(&canonical_example(), Some(&map)).unwrap()
    }

    fn ids(g: &FlowGraph) -> Vec<u32> {
        g.node_ids().iter().map(|n| n.0).collect()
    }

    #[test]
    fn factorial_graph_shape() {
        let p = canonical_example();
        let g = build_flow_graph(p.function("Factorial").unwrap());
        let kinds: Vec<NodeKind> = g.nodes.iter().map(|n| n.kind).collect();
        use NodeKind::*;
        assert_eq!(kinds, [Entry, Predicate, Statement, Statement, CallSuspension, Exit]);
        assert_eq!(g.nodes.len(), 6);
        assert_eq!(g.edges.len(), 6);
        assert_eq!(g.predicates().count(), 1);
        assert_eq!(g.call_sites.len(), 1);
    }

    #[test]
    fn main_graph_has_no_predicates() {
        let p = canonical_example();
        let g = build_flow_graph(p.function("main").unwrap());
        assert_eq!(g.nodes.len(), 6);
        assert_eq!(g.predicates().count(), 0);
        assert_eq!(cyclomatic_complexity(&g), 1);
    }

    #[test]
    fn empty_body() {
        let p = parse_source("void main(){}").unwrap();
        let g = build_flow_graph(&p.functions[0]);
        assert_eq!((g.nodes.len(), g.edges.len()), (2, 1));
        assert_eq!(g.edges[0], FlowEdge { from: g.entry, to: g.exit, label: EdgeLabel::Seq });
    }

    #[test]
    fn fig1_numbering_from_node_map() {
        let fp = fig1();
        assert_eq!(ids(fp.graph("main").unwrap()), (1..=6).collect::<Vec<_>>());
        assert_eq!(ids(fp.graph("Factorial").unwrap()), (7..=12).collect::<Vec<_>>());
        assert_eq!(ids(fp.graph("SumofFact").unwrap()), (13..=19).collect::<Vec<_>>());

        let f = fp.graph("Factorial").unwrap();
        assert_eq!(f.successor(NodeId(8), EdgeLabel::True), Some(NodeId(10)));
        assert_eq!(f.successor(NodeId(8), EdgeLabel::False), Some(NodeId(9)));
        assert_eq!(f.call_sites, [(NodeId(11), "Factorial".to_string())]);
        assert!(f.node(NodeId(11)).unwrap().is_return);

        let s = fp.graph("SumofFact").unwrap();
        let edges: HashSet<(u32, u32)> = s.edges.iter().map(|e| (e.from.0, e.to.0)).collect();
        let expected: HashSet<(u32, u32)> = [(13, 14), (14, 15), (14, 16), (15, 17), (17, 19), (19, 18), (16, 18)].into();
        assert_eq!(edges, expected);
        let m = fp.graph("main").unwrap();
        assert_eq!(m.call_sites, [(NodeId(4), "Factorial".to_string()), (NodeId(5), "SumofFact".to_string())]);
    }

    #[test]
    fn cyclomatic_complexity_of_fig1() {
        let fp = fig1();
        for (name, expected) in [("main", 1), ("Factorial", 2), ("SumofFact", 2)] {
            let g = fp.graph(name).unwrap();
            assert_eq!(cyclomatic_complexity(g), expected, "{name}");
            assert_eq!(g.predicates().count() as u32 + 1, expected);
        }
    }

    #[test]
    fn default_numbering_is_contiguous_preorder() {
        let p = parse_source("int f(int n){ if (n < 1) { return 1; } return n * f(n - 1); }").unwrap();
        let fp = number_nodes(&p, None).unwrap();
        let g = &fp.graphs()[0];
        assert_eq!(ids(g), [1, 2, 3, 4, 5]);
        assert_eq!(g.entry, NodeId(1));
        // true branch (return 1) numbered before the join
        let ret = g.nodes.iter().find(|n| n.label == "return 1").unwrap();
        assert_eq!(ret.id, NodeId(3));
        assert_eq!(number_nodes(&p, None).unwrap(), fp);
    }

    #[test]
    fn default_numbering_spans_functions_in_source_order() {
        let fp = number_nodes(&canonical_example(), None).unwrap();
        assert_eq!(ids(fp.graph("Factorial").unwrap()), (1..=6).collect::<Vec<_>>());
        assert_eq!(ids(fp.graph("SumofFact").unwrap()), (7..=13).collect::<Vec<_>>());
        assert_eq!(ids(fp.graph("main").unwrap()), (14..=19).collect::<Vec<_>>());
    }

    #[test]
    fn node_map_errors() {
        let p = canonical_example();
        let full = include_str!("../../../../corpus/fig1.nodemap");
        let missing: String = full.lines().filter(|l| !l.starts_with("Factorial.call0")).map(|l| format!("{l}\n")).collect();
        let err = number_nodes(&p, Some(&NodeMap::parse(&missing).unwrap())).unwrap_err();
        assert_eq!(err, NodeMapError::Incomplete { function: "Factorial".into(), key: "call0".into() });

        let dup = full.replace("main.exit = 6", "main.exit = 7");
        assert_eq!(number_nodes(&p, Some(&NodeMap::parse(&dup).unwrap())).unwrap_err(), NodeMapError::NotInjective(7));

        let unknown = format!("{full}main.call9 = 40\n");
        assert!(matches!(
            number_nodes(&p, Some(&NodeMap::parse(&unknown).unwrap())),
            Err(NodeMapError::UnknownNode { .. })
        ));
        let ghost = "ghost.entry = 1\n";
        assert!(matches!(
            number_nodes(&p, Some(&NodeMap::parse(ghost).unwrap())),
            Err(NodeMapError::UnknownFunction(_))
        ));
    }

    #[test]
    fn partial_override_continues_after_mapped_ids() {
        let p = canonical_example();
        let only_main: String = include_str!("../../../../corpus/fig1.nodemap")
            .lines()
            .filter(|l| l.starts_with("main."))
            .map(|l| format!("{l}\n"))
            .collect();
        let fp = number_nodes(&p, Some(&NodeMap::parse(&only_main).unwrap())).unwrap();
        assert_eq!(ids(fp.graph("main").unwrap()), (1..=6).collect::<Vec<_>>());
        assert_eq!(ids(fp.graph("Factorial").unwrap()), (7..=12).collect::<Vec<_>>());
    }

    #[test]
    fn statements_coalesce_until_io_call_or_branch() {
        let p = parse_source(
            "int g(int v){ return v; } void main(){ int a = 1; int b = 2; a = a + b; print(a); b = g(a); a = 3; }",
        )
        .unwrap();
        let g = build_flow_graph(p.function("main").unwrap());
        let labels: Vec<&str> = g.nodes.iter().map(|n| n.label.as_str()).collect();
        assert_eq!(labels, ["entry", "int a = 1; int b = 2; a = a + b", "print(a)", "b = g(a)", "a = 3", "exit"]);
    }

    #[test]
    fn multiple_calls_chain_in_evaluation_order() {
        let p = parse_source("int fib(int n){ if (n < 2) { return n; } return fib(n - 1) + fib(n - 2); }").unwrap();
        let g = build_flow_graph(&p.functions[0]);
        let calls: Vec<&FlowNode> = g.nodes.iter().filter(|n| n.kind == NodeKind::CallSuspension).collect();
        assert_eq!(calls.len(), 2);
        assert_eq!(calls[0].label, "fib(n - 1)");
        assert!(calls[0].stmts.is_empty());
        assert_eq!(calls[1].label, "return fib(n - 1) + fib(n - 2)");
        assert!(g.has_edge(calls[0].id, calls[1].id));
        assert_eq!(cyclomatic_complexity(&g), 2);
    }

    #[test]
    fn branch_markers_only_before_calls() {
        let fp = fig1();
        let f = fp.graph("Factorial").unwrap();
        let pred = f.node(NodeId(8)).unwrap().stmts[0];
        assert_eq!(f.branch_marker(pred, false), Some(NodeId(9)));
        assert_eq!(f.branch_marker(pred, true), None);
        let s = fp.graph("SumofFact").unwrap();
        let pred = s.node(NodeId(14)).unwrap().stmts[0];
        assert_eq!(s.branch_marker(pred, true), Some(NodeId(15)));
    }
}
