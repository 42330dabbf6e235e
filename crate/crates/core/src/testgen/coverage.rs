use std::collections::BTreeSet;
use std::fmt;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::flowgraph::NodeId;
use crate::interp::{run_program, ExecConfig, RuntimeError};
use crate::model::ProgramModel;
use crate::recursion::{Aspect, BranchRef, RecursionAnalysis};
use crate::trace::TraceView;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct FunctionCoverage {
    pub function: String,
    pub covered: Vec<NodeId>,
    pub uncovered: Vec<NodeId>,
    pub covered_edges: Vec<(NodeId, NodeId)>,
    pub total_edges: usize,
    pub branches_taken: Vec<BranchRef>,
    pub node_ratio: f64,
    pub edge_ratio: f64,
}

impl FunctionCoverage {
    pub fn total_nodes(&self) -> usize {
        self.covered.len() + self.uncovered.len()
    }
}

/// How the activations started at one call site ended up.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SiteCoverage {
    pub site: NodeId,
    pub activations: usize,
    /// Of those, activations that themselves took a base-case branch.
    pub base_activations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CaseRun {
    pub inputs: Vec<i64>,
    pub outputs: Vec<i64>,
    pub trace: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CoverageReport {
    pub functions: Vec<FunctionCoverage>,
    pub sites: Vec<SiteCoverage>,
    pub runs: Vec<CaseRun>,
    pub warnings: Vec<DefectExposure>,
}

impl CoverageReport {
    pub fn function(&self, name: &str) -> Option<&FunctionCoverage> {
        self.functions.iter().find(|f| f.function == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("test case {case} (inputs {inputs:?}): {error}")]
pub struct CoverageError {
    pub case: usize,
    pub inputs: Vec<i64>,
    pub error: RuntimeError,
}

/// Runs every input vector of the suite and unions what it visits.
pub fn coverage(model: &ProgramModel, analysis: &RecursionAnalysis, suite: &[Vec<i64>]) -> Result<CoverageReport, CoverageError> {
    let mut nodes = BTreeSet::new();
    let mut edges = BTreeSet::new();
    let mut branches = BTreeSet::new();
    let mut sites: Vec<SiteCoverage> = model
        .graphs()
        .iter()
        .flat_map(|g| g.call_sites.iter().map(|(site, _)| SiteCoverage { site: *site, activations: 0, base_activations: 0 }))
        .collect();
    sites.sort_by_key(|s| s.site);
    let mut runs = Vec::new();

    for (case, inputs) in suite.iter().enumerate() {
        let trace = run_program(model, &ExecConfig::new(inputs.clone()))
            .map_err(|error| CoverageError { case, inputs: inputs.clone(), error })?;
        nodes.extend(trace.steps.iter().map(|s| s.node));
        edges.extend(trace.intra_edges());
        branches.extend(trace.branches.iter().map(|b| BranchRef { predicate: b.predicate, branch: b.taken }));
        for site in &mut sites {
            for act in trace.activations_at(site.site) {
                site.activations += 1;
                let function = &trace.activations[act].function;
                if trace.branches_of(act).iter().any(|b| analysis.is_base_case(function, b.predicate, b.taken)) {
                    site.base_activations += 1;
                }
            }
        }
        runs.push(CaseRun { inputs: inputs.clone(), outputs: trace.outputs.clone(), trace: trace.full_string() });
    }

    let functions = model
        .graphs()
        .iter()
        .map(|g| {
            let ids = g.node_ids();
            let (covered, uncovered): (Vec<NodeId>, Vec<NodeId>) = ids.iter().partition(|n| nodes.contains(*n));
            let covered_edges: Vec<(NodeId, NodeId)> =
                edges.iter().filter(|(a, b)| g.node(*a).is_some() && g.node(*b).is_some()).copied().collect();
            let branches_taken = branches.iter().filter(|b| g.node(b.predicate).is_some()).copied().collect();
            FunctionCoverage {
                function: g.owner.clone(),
                node_ratio: ratio(covered.len(), ids.len()),
                edge_ratio: ratio(covered_edges.len(), g.edges.len()),
                covered,
                uncovered,
                covered_edges,
                total_edges: g.edges.len(),
                branches_taken,
            }
        })
        .collect();

    let mut report = CoverageReport { functions, sites, runs, warnings: Vec::new() };
    report.warnings = defect_exposure(&report, analysis);
    Ok(report)
}

fn ratio(part: usize, whole: usize) -> f64 {
    if whole == 0 {
        0.0
    } else {
        part as f64 / whole as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum WarningCode {
    W1,
    W2,
    W3,
    W4,
    W5,
}

impl fmt::Display for WarningCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WarningCode::W1 => "W1-recursive-module-unexecuted",
            WarningCode::W2 => "W2-base-case-unexecuted",
            WarningCode::W3 => "W3-recursive-branch-unexecuted",
            WarningCode::W4 => "W4-aspect2-transitive-base",
            WarningCode::W5 => "W5-nesting-level-high",
        })
    }
}

impl Serialize for WarningCode {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DefectExposure {
    pub code: WarningCode,
    /// A function name, or `caller->callee@site` for call sites.
    pub subject: String,
    pub message: String,
}

impl fmt::Display for DefectExposure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [{}] {}", self.code, self.subject, self.message)
    }
}

/// Structural and coverage-driven warnings. A function with W1 gets no W2,
/// W3 or W4 of its own.
pub fn defect_exposure(report: &CoverageReport, analysis: &RecursionAnalysis) -> Vec<DefectExposure> {
    let mut out = Vec::new();
    let unexecuted = |f: &str| report.function(f).is_some_and(|c| c.covered.is_empty());
    for info in analysis.functions().filter(|i| i.recursive) {
        let f = &info.function;
        let Some(cov) = report.function(f) else { continue };
        if cov.covered.is_empty() {
            out.push(DefectExposure {
                code: WarningCode::W1,
                subject: f.clone(),
                message: format!("recursive module `{f}` is never executed by the suite"),
            });
            continue;
        }
        for b in info.base_cases.iter().filter(|b| !cov.branches_taken.contains(b)) {
            out.push(DefectExposure {
                code: WarningCode::W2,
                subject: f.clone(),
                message: format!("base case {b} of `{f}` is never taken"),
            });
        }
        for b in info.recursive_branches.iter().filter(|b| !cov.branches_taken.contains(b)) {
            out.push(DefectExposure {
                code: WarningCode::W3,
                subject: f.clone(),
                message: format!("recursive branch {b} of `{f}` is never taken"),
            });
        }
    }
    for e in analysis.aspects.entries.iter().filter(|e| e.aspect == Aspect::Aspect2) {
        if unexecuted(&e.callee) {
            continue;
        }
        let site = report.sites.iter().find(|s| s.site == e.call_site);
        if site.is_none_or(|s| s.base_activations == 0) {
            let runs = site.map_or(0, |s| s.activations);
            out.push(DefectExposure {
                code: WarningCode::W4,
                subject: format!("{}->{}@{}", e.caller, e.callee, e.call_site),
                message: format!(
                    "`{}` reaches the base case of `{}` only through deeper self-calls ({runs} direct activation(s), none ending in a base case)",
                    e.caller, e.callee
                ),
            });
        }
    }
    for info in analysis.functions() {
        let level = analysis.nesting_level(&info.function);
        if level >= 2 {
            out.push(DefectExposure {
                code: WarningCode::W5,
                subject: info.function.clone(),
                message: format!("recursion nesting level {level}: recursive modules call other recursive modules"),
            });
        }
    }
    out
}
