//! Bounded interprocedural path enumeration over the numbered flow graphs,
//! intraprocedural basis paths, and dash-separated rendering.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::flowgraph::{EdgeLabel, FlowGraph, NodeId, NodeKind};
use crate::model::ProgramModel;
use crate::recursion::{Aspect, RecursionAnalysis};
use crate::trace::{join, Activation, Branch, Step, TraceView};

pub const DEFAULT_DEPTH: usize = 2;
pub const DEFAULT_MAX_PATHS: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PathTrace {
    pub steps: Vec<Step>,
    pub activations: Vec<Activation>,
    pub entry: String,
    pub branches: Vec<Branch>,
}

impl TraceView for PathTrace {
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

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PathSet {
    pub traces: Vec<PathTrace>,
    pub depth: usize,
    /// Some prefix hit the depth bound or the path limit.
    pub truncated: bool,
    /// Prefixes cut by the pruner.
    pub pruned: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumOptions {
    /// Activations of one function allowed in a single call chain.
    pub depth: usize,
    /// Complete plus depth-truncated traces to visit before stopping.
    pub max_paths: usize,
}

impl Default for EnumOptions {
    fn default() -> Self {
        EnumOptions { depth: DEFAULT_DEPTH, max_paths: DEFAULT_MAX_PATHS }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PathError {
    #[error("path limit of {0} reached before any complete trace was found")]
    Limit(usize),
    #[error("no function named `{0}`")]
    UnknownEntry(String),
    #[error("depth bound must be at least 1")]
    ZeroDepth,
}

pub fn enumerate_paths(model: &ProgramModel, entry: &str, options: EnumOptions) -> Result<PathSet, PathError> {
    enumerate_paths_pruned(model, entry, options, &mut |_| true)
}

/// Like [`enumerate_paths`], but after every branch decision `keep` sees the
/// partial trace; returning false drops that prefix and everything below it.
pub fn enumerate_paths_pruned(
    model: &ProgramModel,
    entry: &str,
    options: EnumOptions,
    keep: &mut dyn FnMut(&PathTrace) -> bool,
) -> Result<PathSet, PathError> {
    if options.depth == 0 {
        return Err(PathError::ZeroDepth);
    }
    let graph = model.graph(entry).ok_or_else(|| PathError::UnknownEntry(entry.to_string()))?;
    let root = Partial {
        trace: PathTrace {
            steps: Vec::new(),
            activations: vec![Activation { function: entry.to_string(), parent: None, call_site: None }],
            entry: entry.to_string(),
            branches: Vec::new(),
        },
        stack: vec![Cursor { act: 0, node: graph.entry }],
    };

    let first = base_first(model);
    let mut set = PathSet { traces: Vec::new(), depth: options.depth, truncated: false, pruned: 0 };
    let mut leaves = 0;
    let mut work = vec![(root, false)];
    while let Some((mut partial, decided)) = work.pop() {
        if leaves >= options.max_paths {
            set.truncated = true;
            break;
        }
        if decided && !keep(&partial.trace) {
            set.pruned += 1;
            continue;
        }
        match partial.run(model, options.depth, &first, &mut work) {
            Leaf::Complete => {
                leaves += 1;
                set.traces.push(partial.trace);
            }
            Leaf::Truncated => {
                leaves += 1;
                set.truncated = true;
            }
            Leaf::Forked => {}
        }
    }
    if set.traces.is_empty() && leaves >= options.max_paths {
        return Err(PathError::Limit(options.max_paths));
    }
    Ok(set)
}

/// Branch to explore first per predicate: the base case at a recursion
/// decision, so traces come out with the fewest unfoldings first. Other
/// predicates go true first.
fn base_first(model: &ProgramModel) -> HashMap<NodeId, bool> {
    let analysis = RecursionAnalysis::new(model.flow());
    let mut first = HashMap::new();
    for info in analysis.functions() {
        for b in &info.base_cases {
            let both = info.base_cases.iter().any(|o| o.predicate == b.predicate && o.branch != b.branch);
            if !both {
                first.insert(b.predicate, b.branch);
            }
        }
    }
    first
}

#[derive(Debug, Clone)]
struct Cursor {
    act: usize,
    node: NodeId,
}

#[derive(Debug, Clone)]
struct Partial {
    trace: PathTrace,
    stack: Vec<Cursor>,
}

enum Leaf {
    Complete,
    Truncated,
    /// Both alternatives of a predicate were queued.
    Forked,
}

impl Partial {
    fn graph<'m>(&self, model: &'m ProgramModel, act: usize) -> &'m FlowGraph {
        model.graph(&self.trace.activations[act].function).expect("graph per function")
    }

    fn step(&mut self, node: NodeId, activation: usize) {
        self.trace.steps.push(Step { node, activation });
    }

    /// Walks forward until the trace ends or reaches a predicate, where both
    /// alternatives are queued; the one explored first goes on top.
    fn run(&mut self, model: &ProgramModel, depth: usize, first: &HashMap<NodeId, bool>, work: &mut Vec<(Partial, bool)>) -> Leaf {
        loop {
            let Cursor { act, node } = self.stack.last().expect("live frame").clone();
            let graph = self.graph(model, act);
            self.step(node, act);
            let n = graph.node(node).expect("node of graph");
            match n.kind {
                NodeKind::CallSuspension => {
                    let callee = n.callee.clone().expect("call node names its callee");
                    let active = self.stack.iter().filter(|c| self.trace.activations[c.act].function == callee).count();
                    if active >= depth {
                        return Leaf::Truncated;
                    }
                    let child = self.trace.activations.len();
                    self.trace.activations.push(Activation { function: callee.clone(), parent: Some(act), call_site: Some(node) });
                    let entry = model.graph(&callee).expect("callee graph").entry;
                    self.stack.push(Cursor { act: child, node: entry });
                }
                NodeKind::Exit => {
                    self.stack.pop();
                    let Some(&Cursor { act: caller, node: site }) = self.stack.last() else { return Leaf::Complete };
                    let next = self.graph(model, caller).successor(site, EdgeLabel::Seq).expect("call node successor");
                    self.stack.last_mut().expect("caller frame").node = next;
                    self.step(site, caller);
                }
                NodeKind::Predicate => {
                    let lead = first.get(&node).copied().unwrap_or(true);
                    let mut other = self.clone();
                    other.decide(graph, node, act, !lead);
                    work.push((other, true));
                    let mut this = self.clone();
                    this.decide(graph, node, act, lead);
                    work.push((this, true));
                    return Leaf::Forked;
                }
                _ => {
                    let next = graph.successor(node, EdgeLabel::Seq).expect("non-exit node has a successor");
                    self.stack.last_mut().expect("live frame").node = next;
                }
            }
        }
    }

    fn decide(&mut self, graph: &FlowGraph, pred: NodeId, act: usize, taken: bool) {
        self.trace.branches.push(Branch { predicate: pred, taken, activation: act });
        self.stack.last_mut().expect("live frame").node =
            graph.successor(pred, EdgeLabel::branch(taken)).expect("predicate has both branches");
    }
}

/// Basis paths by the baseline method: the first path takes every true
/// branch; each later path flips one not-yet-flipped decision of an earlier
/// path and takes true branches afterwards. Calls are opaque.
pub fn basis_paths(graph: &FlowGraph) -> Vec<Vec<NodeId>> {
    let mut paths = vec![walk(graph, &[], graph.entry)];
    let mut flipped = std::collections::HashSet::new();
    let mut i = 0;
    while i < paths.len() {
        let path = paths[i].clone();
        for (k, &id) in path.iter().enumerate() {
            if graph.node(id).is_some_and(|n| n.kind == NodeKind::Predicate) && flipped.insert(id) {
                let took_true = graph.successor(id, EdgeLabel::True) == path.get(k + 1).copied();
                let target = graph.successor(id, EdgeLabel::branch(!took_true)).expect("predicate has both branches");
                paths.push(walk(graph, &path[..=k], target));
            }
        }
        i += 1;
    }
    paths
}

fn walk(graph: &FlowGraph, prefix: &[NodeId], from: NodeId) -> Vec<NodeId> {
    let mut path = prefix.to_vec();
    let mut at = from;
    loop {
        path.push(at);
        if at == graph.exit {
            return path;
        }
        at = graph
            .successor(at, EdgeLabel::True)
            .or_else(|| graph.successor(at, EdgeLabel::Seq))
            .expect("every non-exit node has a successor");
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RenderMode {
    #[default]
    Full,
    Paper,
}

impl FromStr for RenderMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" => Ok(RenderMode::Full),
            "paper" => Ok(RenderMode::Paper),
            other => Err(format!("unknown render mode `{other}` (expected full or paper)")),
        }
    }
}

impl fmt::Display for RenderMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RenderMode::Full => "full",
            RenderMode::Paper => "paper",
        })
    }
}

/// Dash-separated node ids.
///
/// Full mode lists every step. Paper mode is the compact form:
/// - a suspension node reappears on resume only if it holds a `return`;
/// - a recursive function's exit shows only for activations that took a
///   base-case branch, and no exit shows right after a hollow node;
/// - a call from a recursive function into a different recursive module
///   shows the callee only up to its first suspension node.
pub fn render_trace(trace: &impl TraceView, mode: RenderMode, model: &ProgramModel, analysis: &RecursionAnalysis) -> String {
    if mode == RenderMode::Full {
        return trace.full_string();
    }
    let acts = trace.activations();
    let steps = trace.steps();
    let clipped: Vec<bool> = acts
        .iter()
        .map(|a| a.call_site.and_then(|s| analysis.aspects.at(s)).is_some_and(|e| e.aspect == Aspect::Aspect2))
        .collect();
    // hidden: inside a clipped callee; cut: clipped callee past its first suspension
    let mut hidden = vec![false; acts.len()];
    let mut cut = vec![false; acts.len()];
    let mut started = vec![false; acts.len()];
    let mut out = Vec::new();
    for (i, step) in steps.iter().enumerate() {
        let a = step.activation;
        if !started[a] {
            started[a] = true;
            hidden[a] = acts[a].parent.is_some_and(|p| hidden[p] || cut[p]);
        }
        if hidden[a] || cut[a] {
            continue;
        }
        let node = model.node(step.node).expect("trace node exists");
        if trace.is_resume(i) {
            if node.is_return {
                out.push(step.node);
            }
            continue;
        }
        if node.kind == NodeKind::Exit {
            let function = &acts[a].function;
            let base = trace.branches_of(a).iter().any(|b| analysis.is_base_case(function, b.predicate, b.taken));
            let after_hollow = i > 0 && model.node(steps[i - 1].node).is_some_and(|n| n.hollow);
            if (analysis.is_recursive(function) && !base) || after_hollow {
                continue;
            }
        }
        out.push(step.node);
        if clipped[a] && node.kind == NodeKind::CallSuspension {
            cut[a] = true;
        }
    }
    join(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flowgraph::{cyclomatic_complexity, NodeMap, OmitTarget};
    use crate::frontend::{canonical_example, parse_source};

    fn fig1(omit: Option<OmitTarget>) -> (ProgramModel, RecursionAnalysis) {
        let map = NodeMap::parse(include_str!("../../../corpus/fig1.nodemap")).unwrap();
        let mut m = ProgramModel::new(canonical_example(), Some(&map)).unwrap();
        if let Some(t) = omit {
            m.omit(&t).unwrap();
        }
        let a = RecursionAnalysis::new(m.flow());
        (m, a)
    }

    fn rendered(m: &ProgramModel, a: &RecursionAnalysis, mode: RenderMode) -> Vec<String> {
        let set = enumerate_paths(m, "main", EnumOptions::default()).unwrap();
        set.traces.iter().map(|t| render_trace(t, mode, m, a)).collect()
    }

    fn ids(v: &[u32]) -> Vec<NodeId> {
        v.iter().map(|&i| NodeId(i)).collect()
    }

    #[test]
    fn aspect_one_study() {
        let (m, a) = fig1(Some(OmitTarget::Function("SumofFact".into())));
        let set = enumerate_paths(&m, "main", EnumOptions::default()).unwrap();
        assert_eq!(set.traces.len(), 2);
        assert!(set.truncated);
        assert_eq!(rendered(&m, &a, RenderMode::Paper), ["1-2-3-4-7-8-10-12-5", "1-2-3-4-7-8-9-11-7-8-10-12-11-5"]);
        assert_eq!(
            rendered(&m, &a, RenderMode::Full),
            ["1-2-3-4-7-8-10-12-4-5-6", "1-2-3-4-7-8-9-11-7-8-10-12-11-12-4-5-6"]
        );
    }

    #[test]
    fn aspect_two_study() {
        let (m, a) = fig1(Some(OmitTarget::Node(NodeId(4))));
        let paper = rendered(&m, &a, RenderMode::Paper);
        // base cases first; the middle trace has no satisfying input
        assert_eq!(
            paper,
            [
                "1-2-3-5-13-14-16-18-6",
                "1-2-3-5-13-14-15-17-7-8-10-12-19-13-14-16-18-6",
                "1-2-3-5-13-14-15-17-7-8-9-11-19-13-14-16-18-6",
            ]
        );
    }

    #[test]
    fn depth_one_has_no_nested_repeats() {
        let (m, _) = fig1(None);
        let set = enumerate_paths(&m, "main", EnumOptions { depth: 1, max_paths: 256 }).unwrap();
        assert!(!set.traces.is_empty());
        for t in &set.traces {
            for (i, act) in t.activations.iter().enumerate() {
                let mut p = act.parent;
                while let Some(q) = p {
                    assert_ne!(t.activations[q].function, act.function, "activation {i} repeats an ancestor");
                    p = t.activations[q].parent;
                }
            }
        }
    }

    #[test]
    fn limit_and_errors() {
        let loopy = ProgramModel::new(parse_source("int loopy(int n){ return loopy(n); }").unwrap(), None).unwrap();
        let set = enumerate_paths(&loopy, "loopy", EnumOptions::default()).unwrap();
        assert!(set.traces.is_empty() && set.truncated);
        assert_eq!(enumerate_paths(&loopy, "loopy", EnumOptions { depth: 2, max_paths: 1 }), Err(PathError::Limit(1)));
        let (m, _) = fig1(None);
        let one = enumerate_paths(&m, "main", EnumOptions { depth: 2, max_paths: 1 }).unwrap();
        assert_eq!((one.traces.len(), one.truncated), (1, true));
        assert_eq!(enumerate_paths(&m, "nope", EnumOptions::default()), Err(PathError::UnknownEntry("nope".into())));
        assert_eq!(enumerate_paths(&m, "main", EnumOptions { depth: 0, max_paths: 1 }), Err(PathError::ZeroDepth));
    }

    #[test]
    fn pruning_drops_rejected_prefixes() {
        let (m, _) = fig1(Some(OmitTarget::Node(NodeId(4))));
        let all = enumerate_paths(&m, "main", EnumOptions::default()).unwrap();
        let mut keep = |t: &PathTrace| t.branches.first().is_none_or(|b| !b.taken);
        let some = enumerate_paths_pruned(&m, "main", EnumOptions::default(), &mut keep).unwrap();
        assert_eq!(some.traces.len(), 1);
        assert_eq!(some.traces[0], all.traces[0]);
        assert_eq!(some.pruned, 1);
    }

    #[test]
    fn basis_paths_of_fig1() {
        let (m, _) = fig1(None);
        assert_eq!(basis_paths(m.graph("Factorial").unwrap()), [ids(&[7, 8, 10, 12]), ids(&[7, 8, 9, 11, 12])]);
        assert_eq!(basis_paths(m.graph("main").unwrap()), [ids(&[1, 2, 3, 4, 5, 6])]);
        assert_eq!(basis_paths(m.graph("SumofFact").unwrap()), [ids(&[13, 14, 15, 17, 19, 18]), ids(&[13, 14, 16, 18])]);
    }

    #[test]
    fn basis_count_matches_complexity_with_nesting() {
        let src = "int f(int a){ if (a < 0) { if (a < -5) { return 1; } print(a); } else { if (a > 5) { print(2); } } return 0; }";
        let m = ProgramModel::new(parse_source(src).unwrap(), None).unwrap();
        let g = m.graph("f").unwrap();
        assert_eq!(basis_paths(g).len() as u32, cyclomatic_complexity(g));
        assert_eq!(cyclomatic_complexity(g), 4);
    }

    #[test]
    fn render_mode_parsing() {
        assert_eq!("paper".parse::<RenderMode>(), Ok(RenderMode::Paper));
        assert!("fancy".parse::<RenderMode>().is_err());
    }
}
