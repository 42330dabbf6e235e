use std::collections::HashMap;

use crate::frontend::{FuncDef, Stmt, StmtKind};

use super::{EdgeLabel, FlowEdge, FlowGraph, FlowNode, NodeId, NodeKind};

/// Builds the flow graph of one function. Ids are local (1-based, build
/// order) until [`super::number_nodes`] assigns global ones.
///
/// Node formation rules:
/// - entry and exit are statement-free;
/// - consecutive call-free, I/O-free, non-return statements share one node;
/// - `read`/`print` statements and `return` statements get their own node;
/// - every user call is its own call-suspension node, in evaluation order,
///   and the statement belongs to its last call node;
/// - each `if` is one predicate node; a branch whose first node would be a
///   call-suspension node starts with an empty begin marker.
pub fn build_flow_graph(func: &FuncDef) -> FlowGraph {
    let mut b = Builder::new(&func.name);
    let entry = b.node(NodeKind::Entry, "entry".into(), "entry".into());
    let open = b.block(&func.body, vec![(entry, EdgeLabel::Seq)]);
    let exit = b.node(NodeKind::Exit, "exit".into(), "exit".into());
    for (from, label) in open.into_iter().chain(std::mem::take(&mut b.returns)) {
        b.edge(from, exit, label);
    }
    b.finish(entry, exit)
}

type Open = Vec<(NodeId, EdgeLabel)>;

struct Builder {
    owner: String,
    nodes: Vec<FlowNode>,
    edges: Vec<FlowEdge>,
    returns: Open,
    counters: HashMap<&'static str, u32>,
}

impl Builder {
    fn new(owner: &str) -> Self {
        Builder { owner: owner.to_string(), nodes: Vec::new(), edges: Vec::new(), returns: Vec::new(), counters: HashMap::new() }
    }

    fn next_key(&mut self, prefix: &'static str) -> String {
        let n = self.counters.entry(prefix).or_default();
        let key = format!("{prefix}{n}");
        *n += 1;
        key
    }

    fn node(&mut self, kind: NodeKind, key: String, label: String) -> NodeId {
        let id = NodeId(self.nodes.len() as u32 + 1);
        self.nodes.push(FlowNode {
            id,
            kind,
            key,
            stmts: Vec::new(),
            label,
            owner: self.owner.clone(),
            callee: None,
            call: None,
            is_return: false,
            hollow: false,
        });
        id
    }

    fn get(&mut self, id: NodeId) -> &mut FlowNode {
        &mut self.nodes[id.0 as usize - 1]
    }

    fn edge(&mut self, from: NodeId, to: NodeId, label: EdgeLabel) {
        self.edges.push(FlowEdge { from, to, label });
    }

    fn connect(&mut self, open: Open, to: NodeId) {
        for (from, label) in open {
            self.edge(from, to, label);
        }
    }

    /// Emits the call-suspension chain for the user calls evaluated by `stmt`.
    /// Returns the open end after the chain and the last call node.
    fn call_chain(&mut self, stmt: &Stmt, mut open: Open) -> (Open, Option<NodeId>) {
        let mut calls = Vec::new();
        for e in stmt.exprs() {
            e.calls(&mut |callee, expr| calls.push((callee.to_string(), expr.to_string())));
        }
        let mut last = None;
        for (k, (callee, text)) in calls.into_iter().enumerate() {
            let key = self.next_key("call");
            let id = self.node(NodeKind::CallSuspension, key, text);
            let n = self.get(id);
            n.callee = Some(callee);
            n.call = Some((stmt.id, k));
            self.connect(open, id);
            open = vec![(id, EdgeLabel::Seq)];
            last = Some(id);
        }
        (open, last)
    }

    fn block(&mut self, stmts: &[Stmt], mut open: Open) -> Open {
        // node currently absorbing straight-line statements
        let mut run: Option<NodeId> = None;
        for stmt in stmts {
            let straight = stmt.call_count() == 0
                && !stmt.reads_input()
                && matches!(stmt.kind, StmtKind::Decl { .. } | StmtKind::Assign { .. } | StmtKind::Expr(_));
            if straight {
                if let Some(id) = run {
                    let n = self.get(id);
                    n.stmts.push(stmt.id);
                    n.label = format!("{}; {}", n.label, summary(stmt));
                } else {
                    let key = self.next_key("stmt");
                    let id = self.node(NodeKind::Statement, key, summary(stmt));
                    self.get(id).stmts.push(stmt.id);
                    self.connect(std::mem::take(&mut open), id);
                    open = vec![(id, EdgeLabel::Seq)];
                    run = Some(id);
                }
                continue;
            }
            run = None;

            if let StmtKind::If { then_block, else_block, .. } = &stmt.kind {
                let (chain_open, _) = self.call_chain(stmt, std::mem::take(&mut open));
                let key = self.next_key("pred");
                let index = &key[4..];
                let (then_key, else_key) = (format!("then{index}"), format!("else{index}"));
                let pred = self.node(NodeKind::Predicate, key, summary(stmt));
                self.get(pred).stmts.push(stmt.id);
                self.connect(chain_open, pred);

                let mut joined = self.branch(then_block, pred, EdgeLabel::True, then_key, "then-begin");
                match else_block {
                    Some(b) => joined.extend(self.branch(b, pred, EdgeLabel::False, else_key, "else-begin")),
                    None => joined.push((pred, EdgeLabel::False)),
                }
                open = joined;
                continue;
            }

            let (chain_open, last_call) = self.call_chain(stmt, std::mem::take(&mut open));
            let owner = match last_call {
                Some(id) => id,
                None => {
                    let key = self.next_key("stmt");
                    let id = self.node(NodeKind::Statement, key, summary(stmt));
                    self.connect(chain_open, id);
                    id
                }
            };
            let n = self.get(owner);
            n.stmts.push(stmt.id);
            if last_call.is_some() {
                n.label = summary(stmt);
            }
            if stmt.is_return() {
                n.is_return = true;
                self.returns.push((owner, EdgeLabel::Seq));
            } else {
                open = vec![(owner, EdgeLabel::Seq)];
            }
        }
        open
    }

    fn branch(&mut self, block: &[Stmt], pred: NodeId, label: EdgeLabel, marker_key: String, marker_label: &str) -> Open {
        let starts_with_call = block.first().is_some_and(|s| s.call_count() > 0);
        let open = if starts_with_call {
            let marker = self.node(NodeKind::Statement, marker_key, marker_label.to_string());
            self.edge(pred, marker, label);
            vec![(marker, EdgeLabel::Seq)]
        } else {
            vec![(pred, label)]
        };
        self.block(block, open)
    }

    fn finish(self, entry: NodeId, exit: NodeId) -> FlowGraph {
        FlowGraph::assemble(self.owner, self.nodes, self.edges, entry, exit)
    }
}

/// One-line rendering of a statement for node labels.
pub(crate) fn summary(stmt: &Stmt) -> String {
    match &stmt.kind {
        StmtKind::Decl { name, init: None } => format!("int {name}"),
        StmtKind::Decl { name, init: Some(e) } => format!("int {name} = {e}"),
        StmtKind::Assign { name, value } => format!("{name} = {value}"),
        StmtKind::If { cond, .. } => cond.to_string(),
        StmtKind::Return(None) => "return".to_string(),
        StmtKind::Return(Some(e)) => format!("return {e}"),
        StmtKind::Print(e) => format!("print({e})"),
        StmtKind::Expr(e) => e.to_string(),
        StmtKind::Omitted { .. } => "omitted".to_string(),
    }
}
