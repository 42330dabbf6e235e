//! Tracing tree-walk interpreter. Every run records the flow-graph nodes it
//! visits in the full convention: a call shows its suspension node, the
//! callee's steps, then the suspension node again on resume.

use std::collections::HashMap;

use serde::Serialize;
use thiserror::Error;

use crate::flowgraph::{FlowGraph, NodeId};
use crate::frontend::{BinOp, Expr, ExprKind, FuncDef, Stmt, StmtId, StmtKind};
use crate::model::ProgramModel;
use crate::trace::{Activation, Branch, Step, TraceView};

pub const DEFAULT_STEP_LIMIT: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecConfig {
    /// Consumed by the entry function's parameters, then by `read()`.
    pub inputs: Vec<i64>,
    pub step_limit: usize,
}

impl ExecConfig {
    pub fn new(inputs: Vec<i64>) -> Self {
        ExecConfig { inputs, step_limit: DEFAULT_STEP_LIMIT }
    }
}

impl Default for ExecConfig {
    fn default() -> Self {
        ExecConfig::new(Vec::new())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ExecutionTrace {
    pub steps: Vec<Step>,
    pub activations: Vec<Activation>,
    pub branches: Vec<Branch>,
    pub outputs: Vec<i64>,
    pub result: Option<i64>,
    pub step_count: usize,
}

impl TraceView for ExecutionTrace {
    fn steps(&self) -> &[Step] {
        &self.steps
    }
    fn activations(&self) -> &[Activation] {
        &self.activations
    }
    fn branches(&self) -> &[Branch] {
        &self.branches
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuntimeError {
    #[error("step limit of {0} exceeded (missing base case?)")]
    StepLimitExceeded(usize),
    #[error("division by zero at node {0}")]
    DivideByZero(NodeId),
    #[error("arithmetic overflow at node {0}")]
    ArithmeticOverflow(NodeId),
    #[error("read() at node {0} has no input left")]
    InputExhausted(NodeId),
    #[error("`{function}` takes {expected} argument(s), got {found}")]
    Arity { function: String, expected: usize, found: usize },
    #[error("no function named `{0}`")]
    UnknownFunction(String),
}

/// Runs the entry function. Its parameters take the first inputs.
pub fn run_program(model: &ProgramModel, config: &ExecConfig) -> Result<ExecutionTrace, RuntimeError> {
    run_from(model, model.entry(), config)
}

/// [`run_program`] starting from another function.
pub fn run_from(model: &ProgramModel, entry: &str, config: &ExecConfig) -> Result<ExecutionTrace, RuntimeError> {
    let entry = model.function(entry).ok_or_else(|| RuntimeError::UnknownFunction(entry.to_string()))?;
    let k = entry.params.len().min(config.inputs.len());
    if k < entry.params.len() {
        return Err(RuntimeError::InputExhausted(model.graph(&entry.name).expect("graph").entry));
    }
    let mut m = Machine::new(model, &config.inputs[k..], config.step_limit);
    let result = m.invoke(&entry.name, config.inputs[..k].to_vec(), None)?;
    m.trace.result = result;
    m.trace.step_count = m.trace.steps.len();
    Ok(m.trace)
}

/// Runs one function with fresh globals.
pub fn call_function(
    model: &ProgramModel,
    name: &str,
    args: &[i64],
    config: &ExecConfig,
) -> Result<(Option<i64>, ExecutionTrace), RuntimeError> {
    let mut m = Machine::new(model, &config.inputs, config.step_limit);
    let result = m.invoke(name, args.to_vec(), None)?;
    m.trace.result = result;
    m.trace.step_count = m.trace.steps.len();
    Ok((result, m.trace))
}

struct Machine<'a> {
    model: &'a ProgramModel,
    inputs: &'a [i64],
    next_input: usize,
    globals: HashMap<String, i64>,
    limit: usize,
    trace: ExecutionTrace,
}

struct Frame<'a> {
    act: usize,
    graph: &'a FlowGraph,
    scopes: Vec<HashMap<String, i64>>,
    last: i64,
    stmt: StmtId,
    /// Node owning the statement being executed, for error reports.
    node: NodeId,
    calls_made: usize,
}

enum Flow {
    Normal,
    Return(Option<i64>),
}

impl<'a> Machine<'a> {
    fn new(model: &'a ProgramModel, inputs: &'a [i64], limit: usize) -> Self {
        let globals = model.ast().globals.iter().map(|g| (g.name.clone(), g.init)).collect();
        Machine { model, inputs, next_input: 0, globals, limit, trace: ExecutionTrace::default() }
    }

    fn emit(&mut self, node: NodeId, activation: usize) -> Result<(), RuntimeError> {
        if self.trace.steps.len() >= self.limit {
            return Err(RuntimeError::StepLimitExceeded(self.limit));
        }
        self.trace.steps.push(Step { node, activation });
        Ok(())
    }

    fn invoke(&mut self, name: &str, args: Vec<i64>, caller: Option<(usize, NodeId)>) -> Result<Option<i64>, RuntimeError> {
        stacker::maybe_grow(64 * 1024, 2 * 1024 * 1024, || self.invoke_inner(name, args, caller))
    }

    fn invoke_inner(&mut self, name: &str, args: Vec<i64>, caller: Option<(usize, NodeId)>) -> Result<Option<i64>, RuntimeError> {
        let model = self.model;
        let func: &FuncDef = model.function(name).ok_or_else(|| RuntimeError::UnknownFunction(name.to_string()))?;
        if func.params.len() != args.len() {
            return Err(RuntimeError::Arity { function: name.to_string(), expected: func.params.len(), found: args.len() });
        }
        let graph = model.graph(name).expect("graph per function");
        let act = self.trace.activations.len();
        self.trace.activations.push(Activation {
            function: name.to_string(),
            parent: caller.map(|c| c.0),
            call_site: caller.map(|c| c.1),
        });
        self.emit(graph.entry, act)?;
        let params = func.params.iter().cloned().zip(args).collect();
        let mut frame = Frame { act, graph, scopes: vec![params], last: 0, stmt: StmtId(0), node: graph.entry, calls_made: 0 };
        let result = match self.block(&mut frame, &func.body)? {
            Flow::Return(v) => v,
            Flow::Normal => func.returns_value.then_some(frame.last),
        };
        self.emit(graph.exit, act)?;
        Ok(result)
    }

    fn block(&mut self, frame: &mut Frame<'a>, stmts: &'a [Stmt]) -> Result<Flow, RuntimeError> {
        frame.scopes.push(HashMap::new());
        let mut flow = Flow::Normal;
        for stmt in stmts {
            flow = self.stmt(frame, stmt)?;
            if matches!(flow, Flow::Return(_)) {
                break;
            }
        }
        frame.scopes.pop();
        Ok(flow)
    }

    fn stmt(&mut self, frame: &mut Frame<'a>, stmt: &'a Stmt) -> Result<Flow, RuntimeError> {
        let node = frame.graph.stmt_node(stmt.id).expect("every statement has a node");
        frame.stmt = stmt.id;
        frame.node = node;
        frame.calls_made = 0;
        let owner = frame.graph.node(node).expect("node");
        let first_of_node = owner.stmts.first() == Some(&stmt.id);
        if stmt.call_count() == 0 && first_of_node && !matches!(stmt.kind, StmtKind::If { .. }) {
            self.emit(node, frame.act)?;
        }
        match &stmt.kind {
            StmtKind::Decl { name, init } => {
                let v = match init {
                    Some(e) => {
                        let v = self.eval(frame, e)?;
                        frame.last = v;
                        v
                    }
                    None => 0,
                };
                frame.scopes.last_mut().expect("scope").insert(name.clone(), v);
            }
            StmtKind::Assign { name, value } => {
                let v = self.eval(frame, value)?;
                frame.last = v;
                self.assign(frame, name, v);
            }
            StmtKind::Print(e) => {
                let v = self.eval(frame, e)?;
                frame.last = v;
                self.trace.outputs.push(v);
            }
            StmtKind::Expr(e) => {
                frame.last = self.eval(frame, e)?;
            }
            StmtKind::Return(e) => {
                let v = match e {
                    Some(e) => Some(self.eval(frame, e)?),
                    None => None,
                };
                return Ok(Flow::Return(v));
            }
            StmtKind::Omitted { returns } => {
                if *returns {
                    let func = self.model.function(&frame.graph.owner).expect("function");
                    return Ok(Flow::Return(func.returns_value.then_some(0)));
                }
            }
            StmtKind::If { cond, then_block, else_block } => {
                let taken = self.eval(frame, cond)? != 0;
                self.emit(node, frame.act)?;
                self.trace.branches.push(Branch { predicate: node, taken, activation: frame.act });
                if let Some(marker) = frame.graph.branch_marker(stmt.id, taken) {
                    self.emit(marker, frame.act)?;
                }
                return match (taken, else_block) {
                    (true, _) => self.block(frame, then_block),
                    (false, Some(b)) => self.block(frame, b),
                    (false, None) => Ok(Flow::Normal),
                };
            }
        }
        Ok(Flow::Normal)
    }

    fn lookup(&self, frame: &Frame, name: &str) -> i64 {
        frame
            .scopes
            .iter()
            .rev()
            .find_map(|s| s.get(name))
            .or_else(|| self.globals.get(name))
            .copied()
            .expect("names are resolved by the frontend")
    }

    fn assign(&mut self, frame: &mut Frame, name: &str, v: i64) {
        if let Some(slot) = frame.scopes.iter_mut().rev().find_map(|s| s.get_mut(name)) {
            *slot = v;
        } else {
            self.globals.insert(name.to_string(), v);
        }
    }

    fn eval(&mut self, frame: &mut Frame<'a>, expr: &'a Expr) -> Result<i64, RuntimeError> {
        let overflow = RuntimeError::ArithmeticOverflow(frame.node);
        match &expr.kind {
            ExprKind::Int(v) => Ok(*v),
            ExprKind::Var(name) => Ok(self.lookup(frame, name)),
            ExprKind::Read => {
                let v = self.inputs.get(self.next_input).copied().ok_or(RuntimeError::InputExhausted(frame.node))?;
                self.next_input += 1;
                Ok(v)
            }
            ExprKind::Neg(e) => self.eval(frame, e)?.checked_neg().ok_or(overflow),
            ExprKind::Binary { op, lhs, rhs } => {
                let a = self.eval(frame, lhs)?;
                let b = self.eval(frame, rhs)?;
                apply(*op, a, b).map_err(|e| match e {
                    ArithError::DivideByZero => RuntimeError::DivideByZero(frame.node),
                    ArithError::Overflow => overflow,
                })
            }
            ExprKind::Call { callee, args } => {
                let mut values = Vec::with_capacity(args.len());
                for a in args {
                    values.push(self.eval(frame, a)?);
                }
                let site = frame.graph.call_node(frame.stmt, frame.calls_made).expect("call node for every call");
                frame.calls_made += 1;
                self.emit(site, frame.act)?;
                let v = self.invoke(callee, values, Some((frame.act, site)))?;
                self.emit(site, frame.act)?;
                Ok(v.unwrap_or(0))
            }
        }
    }
}

pub(crate) enum ArithError {
    DivideByZero,
    Overflow,
}

/// Checked integer semantics; comparisons yield 1 or 0, division truncates.
pub(crate) fn apply(op: BinOp, a: i64, b: i64) -> Result<i64, ArithError> {
    let checked = match op {
        BinOp::Add => a.checked_add(b),
        BinOp::Sub => a.checked_sub(b),
        BinOp::Mul => a.checked_mul(b),
        BinOp::Div => {
            if b == 0 {
                return Err(ArithError::DivideByZero);
            }
            a.checked_div(b)
        }
        BinOp::Lt => Some(i64::from(a < b)),
        BinOp::Le => Some(i64::from(a <= b)),
        BinOp::Gt => Some(i64::from(a > b)),
        BinOp::Ge => Some(i64::from(a >= b)),
        BinOp::Eq => Some(i64::from(a == b)),
        BinOp::Ne => Some(i64::from(a != b)),
    };
    checked.ok_or(ArithError::Overflow)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flowgraph::{NodeMap, OmitTarget};
    use crate::frontend::{canonical_example, parse_source};

    fn fig1() -> ProgramModel {
        let map = NodeMap::parse(include_str!("../../../corpus/fig1.nodemap")).unwrap();
        ProgramModel::new(canonical_example(), Some(&map)).unwrap()
    }

    fn model(src: &str) -> ProgramModel {
        ProgramModel::new(parse_source(src).unwrap(), None).unwrap()
    }

    fn run(m: &ProgramModel, inputs: &[i64]) -> Result<ExecutionTrace, RuntimeError> {
        run_program(m, &ExecConfig::new(inputs.to_vec()))
    }

    #[test]
    fn fig1_outputs() {
        assert_eq!(run(&fig1(), &[4]).unwrap().outputs, [24, 33]);
        assert_eq!(run(&fig1(), &[0]).unwrap().outputs, [1, 0]);
        assert_eq!(run(&fig1(), &[0]).unwrap().result, None);
    }

    #[test]
    fn function_calls() {
        let m = fig1();
        let call = |name: &str, n: i64| call_function(&m, name, &[n], &ExecConfig::default()).unwrap().0;
        assert_eq!(call("Factorial", 4), Some(24));
        assert_eq!(call("Factorial", 1), Some(1));
        assert_eq!(call("SumofFact", 1), Some(1));
        assert_eq!(call("SumofFact", 3), Some(9));
        assert_eq!(
            call_function(&m, "Factorial", &[1, 2], &ExecConfig::default()).unwrap_err(),
            RuntimeError::Arity { function: "Factorial".into(), expected: 1, found: 2 }
        );
    }

    #[test]
    fn full_traces() {
        let mut m = fig1();
        m.omit(&OmitTarget::Function("SumofFact".into())).unwrap();
        assert_eq!(run(&m, &[0]).unwrap().full_string(), "1-2-3-4-7-8-10-12-4-5-6");
        assert_eq!(run(&m, &[1]).unwrap().full_string(), "1-2-3-4-7-8-9-11-7-8-10-12-11-12-4-5-6");

        let mut m = fig1();
        m.omit(&OmitTarget::Node(NodeId(4))).unwrap();
        let t = run(&m, &[1]).unwrap();
        assert_eq!(
            t.full_string(),
            "1-2-3-5-13-14-15-17-7-8-9-11-7-8-10-12-11-12-17-19-13-14-16-18-19-18-5-6"
        );
        assert_eq!(t.outputs, [1]);
        assert_eq!(t.activations.len(), 5);
        assert_eq!(t.activations[4].call_site, Some(NodeId(19)));
        assert!(t.is_resume(16));
        assert!(!t.is_resume(7));
    }

    #[test]
    fn runtime_errors() {
        let loopy = model("int loopy(int n){ return loopy(n); } void main(){ print(loopy(read())); }");
        assert_eq!(run(&loopy, &[1]).unwrap_err(), RuntimeError::StepLimitExceeded(DEFAULT_STEP_LIMIT));
        assert!(matches!(run(&fig1(), &[]), Err(RuntimeError::InputExhausted(NodeId(3)))));
        assert!(matches!(run(&fig1(), &[21]), Err(RuntimeError::ArithmeticOverflow(NodeId(11)))));
        let div = model("void main(){ int x = read(); print(10 / x); }");
        assert!(matches!(run(&div, &[0]), Err(RuntimeError::DivideByZero(_))));
        assert_eq!(run(&div, &[-3]).unwrap().outputs, [-3]);
    }

    #[test]
    fn implicit_return_and_shadowing() {
        let m = model(
            "int g = 5; int f(int n){ if (n > 0) { g = g + n; } } \
             int h(){ int g = 1; g = g + 1; return g; } \
             void main(){ print(f(read())); print(g); print(h()); print(g); }",
        );
        assert_eq!(run(&m, &[3]).unwrap().outputs, [8, 8, 2, 8]);
        assert_eq!(run(&m, &[0]).unwrap().outputs, [0, 5, 2, 5]);
    }

    #[test]
    fn entry_parameters_take_inputs_first() {
        let mut m = model("int f(int a, int b){ return a - b + read(); }");
        m.set_entry("f").unwrap();
        let t = run(&m, &[10, 3, 100]).unwrap();
        assert_eq!(t.result, Some(107));
    }
}
