//! Test conditions and data per enumerated path, suite coverage, and the
//! defect-exposure warnings for under-tested recursive modules.

mod condition;
mod coverage;
mod reference;
mod symbolic;

use serde::Serialize;

use crate::flowgraph::NodeId;
use crate::frontend::{ExprKind, StmtKind};
use crate::interp::{run_from, ExecConfig};
use crate::model::ProgramModel;
use crate::paths::{PathSet, PathTrace};
use crate::recursion::{Aspect, RecursionAnalysis};
use crate::trace::TraceView;

pub use condition::{find_test_data, search_order, simplify, Atom, CmpOp, Condition, ConditionKind, Infeasible};
pub use coverage::{coverage, defect_exposure, CoverageError, CoverageReport, DefectExposure, FunctionCoverage, SiteCoverage, WarningCode};
pub use reference::{compare_reference, Reference, ReferenceEntry, ReferenceError, ReferenceNote};

pub const DEFAULT_RANGE: i64 = 16;

/// Most input combinations an empirical search will try.
pub const SEARCH_CAP: usize = 200_000;

/// Condition of a complete trace over the entry inputs. Symbolic when every
/// decision reduces to a one-input comparison; otherwise the inputs in
/// range whose execution reproduces the trace.
pub fn path_condition(trace: &PathTrace, model: &ProgramModel, range: i64) -> Condition {
    let decisions: Vec<bool> = trace.branches.iter().map(|b| b.taken).collect();
    let mut replayed = symbolic::replay(model, &trace.entry, &decisions, false);
    symbolic::name_atoms(&mut replayed);
    let slots = replayed.slots.clone();
    if replayed.impossible() {
        return Condition::infeasible(slots);
    }
    match replayed.atoms() {
        Some(atoms) if !replayed.opaque() => Condition::symbolic(slots, &atoms),
        _ => empirical(trace, model, slots, range),
    }
}

/// Every input vector in the search box whose full trace equals `trace`.
pub fn empirical(trace: &PathTrace, model: &ProgramModel, slots: Vec<String>, range: i64) -> Condition {
    let k = slots.len();
    let mut radius = range.max(0);
    while radius > 0 && (2 * radius as u128 + 1).saturating_pow(k as u32) > SEARCH_CAP as u128 {
        radius -= 1;
    }
    let values: Vec<i64> = search_order(radius).collect();
    let mut witnesses = Vec::new();
    let mut index = vec![0usize; k];
    loop {
        let inputs: Vec<i64> = index.iter().map(|&i| values[i]).collect();
        if reproduces(model, trace, &inputs) {
            witnesses.push(inputs);
        }
        // odometer over the search order
        let mut d = 0;
        while d < k {
            index[d] += 1;
            if index[d] < values.len() {
                break;
            }
            index[d] = 0;
            d += 1;
        }
        if d == k {
            break;
        }
    }
    witnesses.sort_by_key(|w| w.iter().map(|&v| (v.abs(), v < 0)).collect::<Vec<_>>());
    if witnesses.is_empty() {
        return Condition::infeasible(slots);
    }
    Condition { kind: ConditionKind::Empirical, slots, constraint: Vec::new(), witnesses }
}

/// Whether running the program on `inputs` yields exactly `trace`.
pub fn reproduces(model: &ProgramModel, trace: &PathTrace, inputs: &[i64]) -> bool {
    run_from(model, &trace.entry, &ExecConfig::new(inputs.to_vec())).is_ok_and(|t| t.steps == trace.steps)
}

/// Pruner for [`crate::paths::enumerate_paths_pruned`]: drops prefixes whose
/// decisions are already contradictory as interval conditions.
pub fn feasible_prefix(model: &ProgramModel) -> impl FnMut(&PathTrace) -> bool + '_ {
    move |t: &PathTrace| {
        let decisions: Vec<bool> = t.branches.iter().map(|b| b.taken).collect();
        let replayed = symbolic::replay(model, &t.entry, &decisions, true);
        if replayed.impossible() {
            return false;
        }
        let atoms: Vec<Atom> = replayed
            .decisions
            .iter()
            .filter_map(|d| match d {
                symbolic::Decision::Atom(a) => Some(a.clone()),
                _ => None,
            })
            .collect();
        simplify(&atoms).is_some()
    }
}

/// The predicate of a recursion decision in the deciding function's own
/// parameter names, e.g. `n ≥ 1` for the false branch of `n < 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FamilyCondition {
    pub function: String,
    pub predicate: NodeId,
    pub branch: bool,
    pub text: String,
    #[serde(skip)]
    pub atom: Option<Atom>,
}

pub fn family_condition(model: &ProgramModel, predicate: NodeId, branch: bool) -> Option<FamilyCondition> {
    let node = model.node(predicate)?;
    let func = model.function(&node.owner)?;
    let stmt = func.stmt(*node.stmts.first()?)?;
    let StmtKind::If { cond, .. } = &stmt.kind else { return None };
    let atom = match &cond.kind {
        ExprKind::Binary { op, lhs, rhs } => match (&lhs.kind, &rhs.kind, CmpOp::parse(op.symbol())) {
            (ExprKind::Var(v), ExprKind::Int(c), Some(cmp)) => Some((v.clone(), cmp, *c)),
            (ExprKind::Int(c), ExprKind::Var(v), Some(cmp)) => Some((v.clone(), cmp.mirror(), *c)),
            _ => None,
        },
        _ => None,
    }
    .map(|(var, op, value)| {
        let slot = func.params.iter().position(|p| *p == var).unwrap_or(0);
        let atom = Atom { slot, var, op, value };
        if branch {
            atom
        } else {
            atom.negate()
        }
    });
    let text = match &atom {
        Some(a) => a.to_string(),
        None if branch => cond.to_string(),
        None => format!("!({cond})"),
    };
    Some(FamilyCondition { function: node.owner.clone(), predicate, branch, text, atom })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TestCase {
    /// Index of the trace in its path set.
    pub path: usize,
    pub condition: Condition,
    pub condition_text: String,
    /// First recursion decision of the path, stated for the whole family of
    /// paths that share it.
    pub family_condition: Option<FamilyCondition>,
    pub data: Vec<i64>,
    pub expected_outputs: Vec<i64>,
    pub aspects: Vec<Aspect>,
}

/// One test case per complete trace. Data is validated by execution; a
/// mismatch falls back to an empirical search, then to infeasible.
pub fn derive_test_cases(model: &ProgramModel, analysis: &RecursionAnalysis, set: &PathSet, range: i64) -> Vec<TestCase> {
    set.traces
        .iter()
        .enumerate()
        .map(|(i, trace)| {
            let mut condition = path_condition(trace, model, range);
            let mut data = find_test_data(&condition, range).ok();
            if condition.kind == ConditionKind::Symbolic && !data.as_ref().is_some_and(|d| reproduces(model, trace, d)) {
                condition = empirical(trace, model, condition.slots.clone(), range);
                data = find_test_data(&condition, range).ok();
            }
            let data = data.unwrap_or_default();
            let expected_outputs = if condition.is_feasible() { outputs(model, trace, &data) } else { Vec::new() };
            TestCase {
                path: i,
                condition_text: condition.to_string(),
                condition,
                family_condition: first_recursion_decision(trace, analysis)
                    .and_then(|(p, b)| family_condition(model, p, b)),
                data,
                expected_outputs,
                aspects: exercised_aspects(trace, analysis),
            }
        })
        .collect()
}

fn outputs(model: &ProgramModel, trace: &PathTrace, data: &[i64]) -> Vec<i64> {
    run_from(model, &trace.entry, &ExecConfig::new(data.to_vec())).map(|t| t.outputs).unwrap_or_default()
}

fn first_recursion_decision(trace: &impl TraceView, analysis: &RecursionAnalysis) -> Option<(NodeId, bool)> {
    trace
        .branches()
        .iter()
        .find(|b| analysis.is_recursion_decision(&trace.activations()[b.activation].function, b.predicate))
        .map(|b| (b.predicate, b.taken))
}

/// Aspect tags of the call sites the trace passes through.
pub fn exercised_aspects(trace: &impl TraceView, analysis: &RecursionAnalysis) -> Vec<Aspect> {
    let mut tags: Vec<Aspect> = trace
        .activations()
        .iter()
        .filter_map(|a| a.call_site.and_then(|s| analysis.aspects.at(s)).map(|e| e.aspect))
        .collect();
    tags.sort();
    tags.dedup();
    tags
}
