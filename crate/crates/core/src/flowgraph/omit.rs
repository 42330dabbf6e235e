use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::frontend::{ProgramAst, Stmt, StmtId, StmtKind};

use super::{FlowEdge, FlowGraph, FlowProgram, NodeId, NodeKind};

/// An element removed from a program before analysis: a whole function
/// (its call statements are hollowed out, keeping their node ids) or a
/// single statement or call-suspension node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OmitTarget {
    Function(String),
    Node(NodeId),
}

impl FromStr for OmitTarget {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.trim().parse::<u32>() {
            Ok(id) => OmitTarget::Node(NodeId(id)),
            Err(_) => OmitTarget::Function(s.trim().to_string()),
        })
    }
}

impl fmt::Display for OmitTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OmitTarget::Function(name) => f.write_str(name),
            OmitTarget::Node(id) => write!(f, "{id}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OmitError {
    #[error("cannot omit `{0}`: no such function")]
    UnknownFunction(String),
    #[error("cannot omit the entry function `{0}`")]
    EntryFunction(String),
    #[error("cannot omit `{function}`: it is called from the condition at node {node}")]
    CalledFromPredicate { function: String, node: NodeId },
    #[error("cannot omit node {0}: no such node")]
    UnknownNode(NodeId),
    #[error("cannot omit node {0}: only non-return statement and call-suspension nodes can be removed")]
    NotRemovable(NodeId),
}

pub(crate) fn omit(ast: &mut ProgramAst, flow: &mut FlowProgram, target: &OmitTarget) -> Result<(), OmitError> {
    match target {
        OmitTarget::Function(name) => omit_function(ast, flow, name),
        OmitTarget::Node(id) => omit_node(ast, flow, *id),
    }
}

fn omit_function(ast: &mut ProgramAst, flow: &mut FlowProgram, name: &str) -> Result<(), OmitError> {
    if ast.function(name).is_none() {
        return Err(OmitError::UnknownFunction(name.to_string()));
    }
    if ast.entry == name {
        return Err(OmitError::EntryFunction(name.to_string()));
    }

    // Check every caller before touching anything.
    for func in ast.functions.iter().filter(|f| f.name != name) {
        let graph = flow.graph(&func.name).expect("graph per function");
        let mut bad = None;
        func.walk(&mut |s| {
            if matches!(s.kind, StmtKind::If { .. }) && s.calls_function(name) && bad.is_none() {
                bad = graph.stmt_node(s.id);
            }
        });
        if let Some(node) = bad {
            return Err(OmitError::CalledFromPredicate { function: name.to_string(), node });
        }
    }

    ast.functions.retain(|f| f.name != name);
    flow.graphs_mut().retain(|g| g.owner != name);

    for func in &mut ast.functions {
        let graph = flow.graphs_mut().iter_mut().find(|g| g.owner == func.name).expect("graph per function");
        let mut hollowed = Vec::new();
        for_each_stmt_mut(&mut func.body, &mut |s| {
            if s.calls_function(name) {
                s.kind = StmtKind::Omitted { returns: s.is_return() };
                hollowed.push(s.id);
            }
        });
        for stmt in hollowed {
            hollow_out(graph, stmt);
        }
    }
    flow.refresh();
    Ok(())
}

/// Collapses a statement's call chain into its final node, which stays in
/// place as an empty statement node.
fn hollow_out(graph: &mut FlowGraph, stmt: StmtId) {
    let chain: Vec<NodeId> = graph.nodes.iter().filter(|n| n.call.is_some_and(|(s, _)| s == stmt)).map(|n| n.id).collect();
    let Some((&keep, rest)) = chain.split_last() else { return };
    for &id in rest {
        bypass(graph, id);
    }
    let n = graph.nodes.iter_mut().find(|n| n.id == keep).expect("chain node");
    n.kind = NodeKind::Statement;
    n.callee = None;
    n.call = None;
    n.hollow = true;
    n.label = "omitted".to_string();
    n.stmts = vec![stmt];
}

/// Removes a node with a single successor, redirecting its incoming edges.
fn bypass(graph: &mut FlowGraph, id: NodeId) {
    let succ = graph.successors(id).next().expect("successor").to;
    let edges = std::mem::take(&mut graph.edges);
    graph.edges = edges
        .into_iter()
        .filter(|e| e.from != id)
        .map(|e| if e.to == id { FlowEdge { to: succ, ..e } } else { e })
        .collect();
    graph.nodes.retain(|n| n.id != id);
}

fn omit_node(ast: &mut ProgramAst, flow: &mut FlowProgram, id: NodeId) -> Result<(), OmitError> {
    let graph = flow.owner_graph(id).ok_or(OmitError::UnknownNode(id))?;
    let node = graph.node(id).expect("owned node");
    let removable = match node.kind {
        NodeKind::Statement => !node.stmts.is_empty() && !node.is_return,
        NodeKind::CallSuspension => {
            let (stmt, _) = node.call.expect("call node");
            let chain = graph.nodes.iter().filter(|n| n.call.is_some_and(|(s, _)| s == stmt)).count();
            chain == 1 && !node.is_return && graph.stmt_node(stmt) == Some(id)
        }
        _ => false,
    };
    if !removable {
        return Err(OmitError::NotRemovable(id));
    }

    let owner = graph.owner.clone();
    let stmts: HashSet<StmtId> = node.stmts.iter().copied().collect();
    let func = ast.function_mut(&owner).expect("function of graph");
    remove_stmts(&mut func.body, &stmts);
    let graph = flow.graphs_mut().iter_mut().find(|g| g.owner == owner).expect("graph");
    bypass(graph, id);
    flow.refresh();
    Ok(())
}

fn for_each_stmt_mut(block: &mut [Stmt], visit: &mut impl FnMut(&mut Stmt)) {
    for s in block {
        visit(s);
        if let StmtKind::If { then_block, else_block, .. } = &mut s.kind {
            for_each_stmt_mut(then_block, visit);
            if let Some(b) = else_block {
                for_each_stmt_mut(b, visit);
            }
        }
    }
}

fn remove_stmts(block: &mut Vec<Stmt>, ids: &HashSet<StmtId>) {
    block.retain(|s| !ids.contains(&s.id));
    for s in block {
        if let StmtKind::If { then_block, else_block, .. } = &mut s.kind {
            remove_stmts(then_block, ids);
            if let Some(b) = else_block {
                remove_stmts(b, ids);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::{cyclomatic_complexity, number_nodes, NodeMap};
    use super::*;
    use crate::frontend::{canonical_example, parse_source};

    fn fig1() -> (ProgramAst, FlowProgram) {
        let ast = canonical_example();
        let map = NodeMap::parse(include_str!("../../../../corpus/fig1.nodemap")).unwrap();
        let flow = number_nodes(&ast, Some(&map)).unwrap();
        (ast, flow)
    }

    #[test]
    fn parse_target() {
        assert_eq!("4".parse::<OmitTarget>().unwrap(), OmitTarget::Node(NodeId(4)));
        assert_eq!("SumofFact".parse::<OmitTarget>().unwrap(), OmitTarget::Function("SumofFact".into()));
    }

    #[test]
    fn omitting_a_function_hollows_its_call_sites() {
        let (mut ast, mut flow) = fig1();
        omit(&mut ast, &mut flow, &OmitTarget::Function("SumofFact".into())).unwrap();
        assert!(ast.function("SumofFact").is_none());
        assert!(flow.graph("SumofFact").is_none());
        let main = flow.graph("main").unwrap();
        assert_eq!(main.node_ids().len(), 6);
        let five = main.node(NodeId(5)).unwrap();
        assert!(five.hollow);
        assert_eq!(five.kind, NodeKind::Statement);
        assert_eq!(main.call_sites, [(NodeId(4), "Factorial".to_string())]);
        let last = ast.function("main").unwrap().body.last().unwrap();
        assert_eq!(last.kind, StmtKind::Omitted { returns: false });
        assert_eq!(main.stmt_node(last.id), Some(NodeId(5)));
    }

    #[test]
    fn omitting_a_node_keeps_other_ids() {
        let (mut ast, mut flow) = fig1();
        omit(&mut ast, &mut flow, &OmitTarget::Node(NodeId(4))).unwrap();
        let main = flow.graph("main").unwrap();
        assert_eq!(main.node_ids(), [NodeId(1), NodeId(2), NodeId(3), NodeId(5), NodeId(6)]);
        assert!(main.has_edge(NodeId(3), NodeId(5)));
        assert_eq!(ast.function("main").unwrap().body.len(), 3);
        assert_eq!(cyclomatic_complexity(main), 1);
    }

    #[test]
    fn refuses_structural_nodes() {
        let (mut ast, mut flow) = fig1();
        for id in [1, 6, 8, 9, 10, 11, 16] {
            assert_eq!(omit(&mut ast, &mut flow, &OmitTarget::Node(NodeId(id))), Err(OmitError::NotRemovable(NodeId(id))));
        }
        assert_eq!(omit(&mut ast, &mut flow, &OmitTarget::Node(NodeId(99))), Err(OmitError::UnknownNode(NodeId(99))));
        assert!(matches!(
            omit(&mut ast, &mut flow, &OmitTarget::Function("main".into())),
            Err(OmitError::EntryFunction(_))
        ));
        assert!(matches!(
            omit(&mut ast, &mut flow, &OmitTarget::Function("nope".into())),
            Err(OmitError::UnknownFunction(_))
        ));
    }

    #[test]
    fn refuses_functions_called_in_conditions() {
        let mut ast = parse_source("int g(){ return 1; } void main(){ if (g() > 0) { print(1); } }").unwrap();
        let mut flow = number_nodes(&ast, None).unwrap();
        assert!(matches!(
            omit(&mut ast, &mut flow, &OmitTarget::Function("g".into())),
            Err(OmitError::CalledFromPredicate { .. })
        ));
    }

    #[test]
    fn hollowing_a_multi_call_statement_keeps_one_node() {
        let mut ast = parse_source("int g(int v){ return v; } int h(int v){ return v; } void main(){ print(g(1) + h(2)); }").unwrap();
        let mut flow = number_nodes(&ast, None).unwrap();
        omit(&mut ast, &mut flow, &OmitTarget::Function("h".into())).unwrap();
        let main = flow.graph("main").unwrap();
        assert_eq!(main.nodes.len(), 3);
        assert!(main.call_sites.is_empty());
        assert_eq!(cyclomatic_complexity(main), 1);
    }
}
