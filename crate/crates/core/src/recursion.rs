//! Call-graph analysis of recursive modules: which functions recurse and
//! how (linear, binary, n-ary, mutual), which predicate branches end the
//! recursion, how each call to a recursive module is situated, and how
//! deeply recursive modules nest inside one another.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::fmt;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::flowgraph::{EdgeLabel, FlowGraph, FlowProgram, NodeId};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CallEdge {
    pub caller: String,
    pub callee: String,
    pub site: NodeId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CallGraph {
    pub functions: Vec<String>,
    pub edges: Vec<CallEdge>,
}

/// One edge per call-suspension node; `read` and `print` are not functions
/// and never appear.
pub fn build_call_graph(flow: &FlowProgram) -> CallGraph {
    let functions = flow.graphs().iter().map(|g| g.owner.clone()).collect();
    let edges = flow
        .graphs()
        .iter()
        .flat_map(|g| {
            g.call_sites.iter().map(|(site, callee)| CallEdge { caller: g.owner.clone(), callee: callee.clone(), site: *site })
        })
        .collect();
    CallGraph { functions, edges }
}

impl CallGraph {
    fn index(&self) -> HashMap<&str, usize> {
        self.functions.iter().enumerate().map(|(i, f)| (f.as_str(), i)).collect()
    }

    /// Strongly connected components (Tarjan), as a component number per function.
    fn components(&self) -> Vec<usize> {
        let index = self.index();
        let n = self.functions.len();
        let mut adj = vec![Vec::new(); n];
        for e in &self.edges {
            if let (Some(&a), Some(&b)) = (index.get(e.caller.as_str()), index.get(e.callee.as_str())) {
                adj[a].push(b);
            }
        }
        let mut t = Tarjan { adj: &adj, index: vec![None; n], low: vec![0; n], on_stack: vec![false; n], stack: Vec::new(), next: 0, comp: vec![usize::MAX; n], comps: 0 };
        for v in 0..n {
            if t.index[v].is_none() {
                t.visit(v);
            }
        }
        t.comp
    }
}

struct Tarjan<'a> {
    adj: &'a [Vec<usize>],
    index: Vec<Option<usize>>,
    low: Vec<usize>,
    on_stack: Vec<bool>,
    stack: Vec<usize>,
    next: usize,
    comp: Vec<usize>,
    comps: usize,
}

impl Tarjan<'_> {
    fn visit(&mut self, v: usize) {
        self.index[v] = Some(self.next);
        self.low[v] = self.next;
        self.next += 1;
        self.stack.push(v);
        self.on_stack[v] = true;
        for &w in &self.adj[v] {
            match self.index[w] {
                None => {
                    self.visit(w);
                    self.low[v] = self.low[v].min(self.low[w]);
                }
                Some(iw) if self.on_stack[w] => self.low[v] = self.low[v].min(iw),
                Some(_) => {}
            }
        }
        if Some(self.low[v]) == self.index[v] {
            loop {
                let w = self.stack.pop().expect("tarjan stack");
                self.on_stack[w] = false;
                self.comp[w] = self.comps;
                if w == v {
                    break;
                }
            }
            self.comps += 1;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RecursionClass {
    None,
    Linear,
    Binary,
    NAry(usize),
    /// Members of the call-graph cycle, in source order.
    Mutual(Vec<String>),
}

impl fmt::Display for RecursionClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RecursionClass::None => f.write_str("none"),
            RecursionClass::Linear => f.write_str("linear"),
            RecursionClass::Binary => f.write_str("binary"),
            RecursionClass::NAry(k) => write!(f, "n-ary({k})"),
            RecursionClass::Mutual(_) => f.write_str("mutual"),
        }
    }
}

impl Serialize for RecursionClass {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct BranchRef {
    pub predicate: NodeId,
    pub branch: bool,
}

impl fmt::Display for BranchRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.predicate, EdgeLabel::branch(self.branch))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RecursionInfo {
    pub function: String,
    pub recursive: bool,
    pub class: RecursionClass,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cycle: Option<Vec<String>>,
    /// Call sites whose callee lies on the same call-graph cycle.
    pub recursive_call_sites: Vec<NodeId>,
    pub base_cases: Vec<BranchRef>,
    /// Branches leading to a recursive call site.
    pub recursive_branches: Vec<BranchRef>,
    pub non_terminating_risk: bool,
}

/// Classifies every function of the call graph. Base cases are left empty;
/// [`find_base_cases`] fills them in per function.
pub fn classify_recursion(graph: &CallGraph) -> BTreeMap<String, RecursionInfo> {
    let comp = graph.components();
    let index = graph.index();
    let mut members: HashMap<usize, Vec<String>> = HashMap::new();
    for (i, f) in graph.functions.iter().enumerate() {
        members.entry(comp[i]).or_default().push(f.clone());
    }

    graph
        .functions
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let sites: Vec<NodeId> = graph
                .edges
                .iter()
                .filter(|e| &e.caller == f && index.get(e.callee.as_str()).is_some_and(|&j| comp[j] == comp[i]))
                .map(|e| e.site)
                .collect();
            let cycle = &members[&comp[i]];
            let class = if cycle.len() >= 2 {
                RecursionClass::Mutual(cycle.clone())
            } else {
                match sites.len() {
                    0 => RecursionClass::None,
                    1 => RecursionClass::Linear,
                    2 => RecursionClass::Binary,
                    k => RecursionClass::NAry(k),
                }
            };
            let recursive = class != RecursionClass::None;
            let info = RecursionInfo {
                function: f.clone(),
                recursive,
                cycle: matches!(class, RecursionClass::Mutual(_)).then(|| cycle.clone()),
                class,
                recursive_call_sites: sites,
                base_cases: Vec::new(),
                recursive_branches: Vec::new(),
                non_terminating_risk: false,
            };
            (f.clone(), info)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RecursionError {
    #[error("`{0}` is not recursive")]
    NotRecursive(String),
}

/// Predicate branches that end the recursion: the part of the function
/// only reachable through the branch contains no recursive call site, and
/// some path from the branch reaches exit without one.
pub fn find_base_cases(graph: &FlowGraph, info: &RecursionInfo) -> Result<Vec<BranchRef>, RecursionError> {
    if !info.recursive {
        return Err(RecursionError::NotRecursive(info.function.clone()));
    }
    let recursive: HashSet<NodeId> = info.recursive_call_sites.iter().copied().collect();
    let mut out = Vec::new();
    for (b, target, region) in branch_regions(graph) {
        if region.iter().any(|n| recursive.contains(n)) {
            continue;
        }
        if reachable(graph, target, None, &recursive).contains(&graph.exit) {
            out.push(b);
        }
    }
    out.sort();
    Ok(out)
}

/// Branches whose guarded region holds a recursive call site.
pub fn find_recursive_branches(graph: &FlowGraph, info: &RecursionInfo) -> Vec<BranchRef> {
    let recursive: HashSet<NodeId> = info.recursive_call_sites.iter().copied().collect();
    let mut out: Vec<BranchRef> = branch_regions(graph)
        .into_iter()
        .filter(|(_, _, region)| region.iter().any(|n| recursive.contains(n)))
        .map(|(b, _, _)| b)
        .collect();
    out.sort();
    out
}

/// Every predicate branch with its target and the nodes reachable from the
/// target that become unreachable from entry without the branch edge.
fn branch_regions(graph: &FlowGraph) -> Vec<(BranchRef, NodeId, HashSet<NodeId>)> {
    let mut out = Vec::new();
    for pred in graph.predicates() {
        for branch in [true, false] {
            let label = EdgeLabel::branch(branch);
            let Some(target) = graph.successor(pred.id, label) else { continue };
            let outside = reachable(graph, graph.entry, Some((pred.id, label)), &HashSet::new());
            let mut region: HashSet<NodeId> =
                reachable(graph, target, None, &HashSet::new()).into_iter().filter(|n| !outside.contains(n)).collect();
            region.insert(target);
            out.push((BranchRef { predicate: pred.id, branch }, target, region));
        }
    }
    out
}

/// Nodes reachable from `start`, optionally ignoring one labeled edge and
/// never entering `blocked` nodes.
fn reachable(graph: &FlowGraph, start: NodeId, skip: Option<(NodeId, EdgeLabel)>, blocked: &HashSet<NodeId>) -> HashSet<NodeId> {
    let mut seen = HashSet::new();
    if blocked.contains(&start) {
        return seen;
    }
    let mut queue = VecDeque::from([start]);
    seen.insert(start);
    while let Some(n) = queue.pop_front() {
        for e in graph.successors(n) {
            if skip == Some((e.from, e.label)) || blocked.contains(&e.to) {
                continue;
            }
            if seen.insert(e.to) {
                queue.push_back(e.to);
            }
        }
    }
    seen
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Aspect {
    /// Recursive callee, non-recursive caller.
    Aspect1,
    /// Recursive callee and recursive caller on different cycles.
    Aspect2,
    SelfCall,
    /// Caller and callee on the same cycle of two or more functions.
    Mutual,
}

impl fmt::Display for Aspect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Aspect::Aspect1 => "aspect-1",
            Aspect::Aspect2 => "aspect-2",
            Aspect::SelfCall => "self",
            Aspect::Mutual => "mutual",
        })
    }
}

impl Serialize for Aspect {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AspectEntry {
    pub call_site: NodeId,
    pub caller: String,
    pub callee: String,
    pub aspect: Aspect,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AspectReport {
    pub entries: Vec<AspectEntry>,
    pub nesting_levels: BTreeMap<String, u32>,
}

impl AspectReport {
    pub fn at(&self, site: NodeId) -> Option<&AspectEntry> {
        self.entries.iter().find(|e| e.call_site == site)
    }
}

/// Tags every call to a recursive module and computes nesting levels on
/// the call graph's condensation: a recursive function sits one level above
/// the deepest recursive module reachable from it outside its own cycle.
pub fn detect_aspects(graph: &CallGraph, infos: &BTreeMap<String, RecursionInfo>) -> AspectReport {
    let comp = graph.components();
    let index = graph.index();
    let comp_of = |f: &str| index.get(f).map(|&i| comp[i]);
    let is_recursive = |f: &str| infos.get(f).is_some_and(|i| i.recursive);

    let mut entries: Vec<AspectEntry> = graph
        .edges
        .iter()
        .filter(|e| is_recursive(&e.callee))
        .map(|e| {
            let aspect = if e.caller == e.callee {
                Aspect::SelfCall
            } else if comp_of(&e.caller) == comp_of(&e.callee) {
                Aspect::Mutual
            } else if is_recursive(&e.caller) {
                Aspect::Aspect2
            } else {
                Aspect::Aspect1
            };
            AspectEntry { call_site: e.site, caller: e.caller.clone(), callee: e.callee.clone(), aspect }
        })
        .collect();
    entries.sort_by_key(|e| e.call_site);

    // condensation successors and recursive-ness per component
    let comps = comp.iter().copied().max().map_or(0, |m| m + 1);
    let mut succ: Vec<HashSet<usize>> = vec![HashSet::new(); comps];
    let mut recursive_comp = vec![false; comps];
    for f in &graph.functions {
        if is_recursive(f) {
            recursive_comp[comp_of(f).expect("own component")] = true;
        }
    }
    for e in &graph.edges {
        if let (Some(a), Some(b)) = (comp_of(&e.caller), comp_of(&e.callee)) {
            if a != b {
                succ[a].insert(b);
            }
        }
    }
    let mut memo: Vec<Option<u32>> = vec![None; comps];
    fn depth(c: usize, succ: &[HashSet<usize>], rec: &[bool], memo: &mut Vec<Option<u32>>) -> u32 {
        if let Some(d) = memo[c] {
            return d;
        }
        let below = succ[c].iter().map(|&d| depth(d, succ, rec, memo)).max().unwrap_or(0);
        let d = below + u32::from(rec[c]);
        memo[c] = Some(d);
        d
    }
    let nesting_levels = graph
        .functions
        .iter()
        .map(|f| {
            let level =
                if is_recursive(f) { depth(comp_of(f).expect("own component"), &succ, &recursive_comp, &mut memo) } else { 0 };
            (f.clone(), level)
        })
        .collect();
    AspectReport { entries, nesting_levels }
}

/// Call graph, per-function classification with base cases, and aspects.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RecursionAnalysis {
    pub call_graph: CallGraph,
    pub infos: BTreeMap<String, RecursionInfo>,
    pub aspects: AspectReport,
}

impl RecursionAnalysis {
    pub fn new(flow: &FlowProgram) -> Self {
        let call_graph = build_call_graph(flow);
        let mut infos = classify_recursion(&call_graph);
        for info in infos.values_mut() {
            if info.recursive {
                let graph = flow.graph(&info.function).expect("graph per function");
                info.base_cases = find_base_cases(graph, info).expect("recursive");
                info.recursive_branches = find_recursive_branches(graph, info);
                info.non_terminating_risk = info.base_cases.is_empty();
            }
        }
        let aspects = detect_aspects(&call_graph, &infos);
        RecursionAnalysis { call_graph, infos, aspects }
    }

    pub fn info(&self, function: &str) -> Option<&RecursionInfo> {
        self.infos.get(function)
    }

    pub fn is_recursive(&self, function: &str) -> bool {
        self.info(function).is_some_and(|i| i.recursive)
    }

    pub fn is_base_case(&self, function: &str, predicate: NodeId, branch: bool) -> bool {
        self.info(function).is_some_and(|i| i.base_cases.contains(&BranchRef { predicate, branch }))
    }

    /// Whether the predicate decides between a base case and recursion.
    pub fn is_recursion_decision(&self, function: &str, predicate: NodeId) -> bool {
        self.info(function).is_some_and(|i| i.base_cases.iter().any(|b| b.predicate == predicate))
    }

    pub fn nesting_level(&self, function: &str) -> u32 {
        self.aspects.nesting_levels.get(function).copied().unwrap_or(0)
    }

    /// In source order.
    pub fn functions(&self) -> impl Iterator<Item = &RecursionInfo> {
        self.call_graph.functions.iter().filter_map(|f| self.infos.get(f))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flowgraph::{number_nodes, NodeMap};
    use crate::frontend::{canonical_example, parse_source};

    fn fig1() -> FlowProgram {
        let map = NodeMap::parse(include_str!("../../../corpus/fig1.nodemap")).unwrap();
        number_nodes(&canonical_example(), Some(&map)).unwrap()
    }

    fn analysis(src: &str) -> RecursionAnalysis {
        RecursionAnalysis::new(&number_nodes(&parse_source(src).unwrap(), None).unwrap())
    }

    fn edge(caller: &str, callee: &str, site: u32) -> CallEdge {
        CallEdge { caller: caller.into(), callee: callee.into(), site: NodeId(site) }
    }

    #[test]
    fn fig1_call_graph() {
        let cg = build_call_graph(&fig1());
        let mut edges = cg.edges.clone();
        edges.sort_by_key(|e| e.site);
        assert_eq!(
            edges,
            [
                edge("main", "Factorial", 4),
                edge("main", "SumofFact", 5),
                edge("Factorial", "Factorial", 11),
                edge("SumofFact", "Factorial", 17),
                edge("SumofFact", "SumofFact", 19),
            ]
        );
    }

    #[test]
    fn no_calls_no_edges() {
        let cg = build_call_graph(&number_nodes(&parse_source("void main(){ print(read()); }").unwrap(), None).unwrap());
        assert!(cg.edges.is_empty());
    }

    #[test]
    fn fig1_classification_and_base_cases() {
        let a = RecursionAnalysis::new(&fig1());
        let f = a.info("Factorial").unwrap();
        assert_eq!(f.class, RecursionClass::Linear);
        assert_eq!(f.recursive_call_sites, [NodeId(11)]);
        assert_eq!(f.base_cases, [BranchRef { predicate: NodeId(8), branch: true }]);
        let s = a.info("SumofFact").unwrap();
        assert_eq!(s.class, RecursionClass::Linear);
        assert_eq!(s.recursive_call_sites, [NodeId(19)]);
        assert_eq!(s.base_cases, [BranchRef { predicate: NodeId(14), branch: false }]);
        assert_eq!(a.info("main").unwrap().class, RecursionClass::None);
        assert!(!a.info("main").unwrap().recursive);
    }

    #[test]
    fn fig1_aspects_and_levels() {
        let a = RecursionAnalysis::new(&fig1());
        let tags: Vec<(u32, Aspect)> = a.aspects.entries.iter().map(|e| (e.call_site.0, e.aspect)).collect();
        assert_eq!(
            tags,
            [(4, Aspect::Aspect1), (5, Aspect::Aspect1), (11, Aspect::SelfCall), (17, Aspect::Aspect2), (19, Aspect::SelfCall)]
        );
        assert_eq!(a.nesting_level("Factorial"), 1);
        assert_eq!(a.nesting_level("SumofFact"), 2);
        assert_eq!(a.nesting_level("main"), 0);
    }

    #[test]
    fn binary_nary_and_mutual() {
        let fib = analysis("int fib(int n){ if (n < 2) { return n; } return fib(n - 1) + fib(n - 2); }");
        assert_eq!(fib.info("fib").unwrap().class, RecursionClass::Binary);
        let split = analysis("int s(int n){ if (n < 1) { return 1; } return s(n - 1) + s(n - 2) + s(n - 3); }");
        assert_eq!(split.info("s").unwrap().class, RecursionClass::NAry(3));
        assert_eq!(split.info("s").unwrap().class.to_string(), "n-ary(3)");

        let eo = analysis(
            "int even(int n){ if (n <= 0) { return 1; } return odd(n - 1); } \
             int odd(int n){ if (n <= 0) { return 0; } return even(n - 1); }",
        );
        let cycle = vec!["even".to_string(), "odd".to_string()];
        for f in ["even", "odd"] {
            let info = eo.info(f).unwrap();
            assert_eq!(info.class, RecursionClass::Mutual(cycle.clone()));
            assert_eq!(info.base_cases.len(), 1);
        }
        assert!(eo.aspects.entries.iter().all(|e| e.aspect == Aspect::Mutual));
        assert_eq!(eo.nesting_level("even"), 1);
    }

    #[test]
    fn mutual_and_self_recursive() {
        let a = analysis(
            "int a(int n){ if (n <= 0) { return 0; } return a(n - 1) + b(n - 1); } \
             int b(int n){ if (n <= 0) { return 0; } return a(n - 1); }",
        );
        let info = a.info("a").unwrap();
        assert!(matches!(info.class, RecursionClass::Mutual(_)));
        assert_eq!(info.recursive_call_sites.len(), 2);
    }

    #[test]
    fn missing_base_case_is_flagged() {
        let a = analysis("int loopy(int n){ return loopy(n); }");
        let info = a.info("loopy").unwrap();
        assert!(info.base_cases.is_empty());
        assert!(info.non_terminating_risk);
    }

    #[test]
    fn base_case_through_join() {
        let a = analysis("int f(int n){ int r = 0; if (n < 1) { r = 1; } else { r = f(n - 1); } print(r); return r; }");
        let info = a.info("f").unwrap();
        assert_eq!(info.base_cases.len(), 1);
        assert!(info.base_cases[0].branch);
        let none = analysis("int f(int n){ int r = 0; if (n < 1) { r = 1; } return f(n - 1); }");
        assert!(none.info("f").unwrap().base_cases.is_empty());
    }

    #[test]
    fn not_recursive_error() {
        let fp = fig1();
        let cg = build_call_graph(&fp);
        let infos = classify_recursion(&cg);
        assert_eq!(
            find_base_cases(fp.graph("main").unwrap(), &infos["main"]),
            Err(RecursionError::NotRecursive("main".into()))
        );
    }

    #[test]
    fn only_non_recursive_calls() {
        let a = analysis("int g(int v){ return v; } void main(){ print(g(1)); }");
        assert!(a.aspects.entries.is_empty());
        assert!(a.aspects.nesting_levels.values().all(|&l| l == 0));
    }

    #[test]
    fn nesting_through_non_recursive_helper() {
        let a = analysis(
            "int f(int n){ if (n < 1) { return 0; } return f(n - 1); } \
             int h(int n){ return f(n); } \
             int g(int n){ if (n < 1) { return 0; } return h(n) + g(n - 1); }",
        );
        assert_eq!(a.nesting_level("g"), 2);
        assert_eq!(a.nesting_level("h"), 0);
        assert_eq!(a.aspects.at(a.graph_site("h", "f")).unwrap().aspect, Aspect::Aspect1);
    }

    impl RecursionAnalysis {
        fn graph_site(&self, caller: &str, callee: &str) -> NodeId {
            self.call_graph.edges.iter().find(|e| e.caller == caller && e.callee == callee).unwrap().site
        }
    }
}
