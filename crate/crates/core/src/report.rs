//! The full analysis of one program: graphs, recursion, paths, test cases
//! and the coverage they reach, as one serialisable value.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::flowgraph::{cyclomatic_complexity, NodeId, NodeKind};
use crate::model::ProgramModel;
use crate::paths::{basis_paths, enumerate_paths_pruned, render_trace, EnumOptions, PathError, RenderMode};
use crate::recursion::{AspectEntry, BranchRef, RecursionAnalysis, RecursionClass};
use crate::testgen::{
    compare_reference, coverage, derive_test_cases, feasible_prefix, CoverageError, CoverageReport, DefectExposure, Reference,
    ReferenceNote, TestCase, DEFAULT_RANGE,
};
use crate::trace::join;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportOptions {
    pub paths: EnumOptions,
    pub range: i64,
    /// Render mode of the `rendered` field of each path.
    pub render: RenderMode,
    /// Cut provably infeasible prefixes during enumeration.
    pub prune: bool,
    /// Inputs to measure coverage with; the derived test data when absent.
    pub suite: Option<Vec<Vec<i64>>>,
    pub reference: Option<Reference>,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            paths: EnumOptions::default(),
            range: DEFAULT_RANGE,
            render: RenderMode::Full,
            prune: false,
            suite: None,
            reference: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error(transparent)]
    Paths(#[from] PathError),
    #[error(transparent)]
    Coverage(#[from] CoverageError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AnalysisReport {
    pub program: ProgramSummary,
    pub graphs: Vec<GraphStats>,
    pub recursion: RecursionSection,
    pub paths: PathSection,
    pub tests: Vec<TestCase>,
    pub reference: Vec<ReferenceNote>,
    pub coverage: CoverageSection,
    pub warnings: Vec<DefectExposure>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ProgramSummary {
    pub entry: String,
    pub functions: Vec<String>,
    pub globals: Vec<String>,
    pub omitted: Vec<String>,
    pub nodes: usize,
    pub edges: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct GraphStats {
    pub function: String,
    pub entry: NodeId,
    pub exit: NodeId,
    pub nodes: Vec<NodeSummary>,
    pub edges: usize,
    pub predicates: usize,
    pub cyclomatic_complexity: u32,
    pub basis_paths: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct NodeSummary {
    pub id: NodeId,
    pub kind: NodeKind,
    pub label: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub callee: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RecursionSection {
    pub classes: BTreeMap<String, RecursionClass>,
    pub functions: Vec<FunctionRecursion>,
    pub aspects: Vec<AspectEntry>,
    pub nesting_levels: BTreeMap<String, u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct FunctionRecursion {
    pub function: String,
    pub class: RecursionClass,
    pub base_cases: Vec<BranchRef>,
    pub recursive_branches: Vec<BranchRef>,
    pub call_sites: Vec<NodeId>,
    pub non_terminating_risk: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PathSection {
    pub entry: String,
    pub depth: usize,
    pub truncated: bool,
    pub pruned: usize,
    pub render: RenderMode,
    pub traces: Vec<PathEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PathEntry {
    pub index: usize,
    pub feasible: bool,
    pub full: String,
    pub paper: String,
    /// In the requested render mode.
    pub rendered: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CoverageSection {
    /// Whether the suite was supplied or taken from the derived test data.
    pub suite_source: SuiteSource,
    /// Its warnings live in [`AnalysisReport::warnings`].
    #[serde(flatten)]
    pub report: CoverageReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SuiteSource {
    Derived,
    Supplied,
}

pub fn analyze(model: &ProgramModel, options: &ReportOptions) -> Result<AnalysisReport, ReportError> {
    let analysis = RecursionAnalysis::new(model.flow());
    let entry = model.entry().to_string();

    let set = if options.prune {
        enumerate_paths_pruned(model, &entry, options.paths, &mut feasible_prefix(model))?
    } else {
        enumerate_paths_pruned(model, &entry, options.paths, &mut |_| true)?
    };
    let tests = derive_test_cases(model, &analysis, &set, options.range);
    let traces = set
        .traces
        .iter()
        .zip(&tests)
        .enumerate()
        .map(|(index, (t, case))| {
            let full = render_trace(t, RenderMode::Full, model, &analysis);
            let paper = render_trace(t, RenderMode::Paper, model, &analysis);
            let rendered = if options.render == RenderMode::Paper { paper.clone() } else { full.clone() };
            PathEntry { index, feasible: case.condition.is_feasible(), full, paper, rendered }
        })
        .collect();

    let (suite_source, suite) = match &options.suite {
        Some(s) => (SuiteSource::Supplied, s.clone()),
        None => (SuiteSource::Derived, tests.iter().filter(|c| c.condition.is_feasible()).map(|c| c.data.clone()).collect()),
    };
    let mut cov = coverage(model, &analysis, &suite)?;
    let warnings = std::mem::take(&mut cov.warnings);

    let reference = options
        .reference
        .as_ref()
        .map(|r| compare_reference(model, r, options.range))
        .unwrap_or_default();

    Ok(AnalysisReport {
        program: summary(model),
        graphs: graph_stats(model),
        recursion: recursion_section(&analysis),
        paths: PathSection {
            entry,
            depth: set.depth,
            truncated: set.truncated,
            pruned: set.pruned,
            render: options.render,
            traces,
        },
        tests,
        reference,
        coverage: CoverageSection { suite_source, report: cov },
        warnings,
    })
}

fn summary(model: &ProgramModel) -> ProgramSummary {
    let ast = model.ast();
    ProgramSummary {
        entry: model.entry().to_string(),
        functions: ast.functions.iter().map(|f| f.name.clone()).collect(),
        globals: ast.globals.iter().map(|g| g.name.clone()).collect(),
        omitted: model.omitted().iter().map(|o| o.to_string()).collect(),
        nodes: model.graphs().iter().map(|g| g.nodes.len()).sum(),
        edges: model.graphs().iter().map(|g| g.edges.len()).sum(),
    }
}

pub fn graph_stats(model: &ProgramModel) -> Vec<GraphStats> {
    model
        .graphs()
        .iter()
        .map(|g| {
            let mut nodes: Vec<NodeSummary> = g
                .nodes
                .iter()
                .map(|n| NodeSummary { id: n.id, kind: n.kind, label: n.label.clone(), callee: n.callee.clone() })
                .collect();
            nodes.sort_by_key(|n| n.id);
            GraphStats {
                function: g.owner.clone(),
                entry: g.entry,
                exit: g.exit,
                nodes,
                edges: g.edges.len(),
                predicates: g.predicates().count(),
                cyclomatic_complexity: cyclomatic_complexity(g),
                basis_paths: basis_paths(g).iter().map(|p| join(p.iter().copied())).collect(),
            }
        })
        .collect()
}

pub fn recursion_section(analysis: &RecursionAnalysis) -> RecursionSection {
    RecursionSection {
        classes: analysis.infos.iter().map(|(f, i)| (f.clone(), i.class.clone())).collect(),
        functions: analysis
            .functions()
            .map(|i| FunctionRecursion {
                function: i.function.clone(),
                class: i.class.clone(),
                base_cases: i.base_cases.clone(),
                recursive_branches: i.recursive_branches.clone(),
                call_sites: i.recursive_call_sites.clone(),
                non_terminating_risk: i.non_terminating_risk,
            })
            .collect(),
        aspects: analysis.aspects.entries.clone(),
        nesting_levels: analysis.aspects.nesting_levels.clone(),
    }
}

impl AnalysisReport {
    /// Every node id the report mentions outside the graph section.
    pub fn referenced_nodes(&self) -> Vec<NodeId> {
        let mut ids: Vec<NodeId> = Vec::new();
        let parse = |s: &str| s.split('-').filter_map(|p| p.parse().ok()).map(NodeId).collect::<Vec<_>>();
        for t in &self.paths.traces {
            ids.extend(parse(&t.full));
            ids.extend(parse(&t.paper));
        }
        for f in &self.recursion.functions {
            ids.extend(f.base_cases.iter().chain(&f.recursive_branches).map(|b| b.predicate));
            ids.extend(&f.call_sites);
        }
        ids.extend(self.recursion.aspects.iter().map(|a| a.call_site));
        for c in &self.coverage.report.functions {
            ids.extend(c.covered.iter().chain(&c.uncovered));
        }
        ids.extend(self.coverage.report.sites.iter().map(|s| s.site));
        ids.extend(self.reference.iter().map(|r| r.predicate));
        ids.sort();
        ids.dedup();
        ids
    }
}
