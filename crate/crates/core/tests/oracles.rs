use std::collections::{BTreeSet, HashSet};

use recpath_core::flowgraph::{EdgeLabel, FlowGraph, NodeId, NodeKind};
use recpath_core::frontend::parse_source;
use recpath_core::model::ProgramModel;
use recpath_core::recursion::{Aspect, BranchRef, RecursionAnalysis, RecursionClass};

const CORPUS: [(&str, &str); 9] = [
    ("fig1", include_str!("../../../corpus/fig1.mini")),
    ("factorial", include_str!("../../../corpus/factorial.mini")),
    ("fibonacci", include_str!("../../../corpus/fibonacci.mini")),
    ("evenodd", include_str!("../../../corpus/evenodd.mini")),
    ("splitter", include_str!("../../../corpus/splitter.mini")),
    ("loopy", include_str!("../../../corpus/loopy.mini")),
    ("noncall", include_str!("../../../corpus/noncall.mini")),
    ("straight", include_str!("../../../corpus/straight.mini")),
    (
        "guarded",
        "int h(int n) { if (n > 5) { if (n > 9) { return 0; } return h(n - 1); } print(n); return h(n + 1); }\nvoid main() { print(h(read())); }",
    ),
];

fn load(src: &str) -> ProgramModel {
    ProgramModel::new(parse_source(src).unwrap(), None).unwrap()
}

fn reachable(g: &FlowGraph, from: NodeId, skip: Option<(NodeId, NodeId)>, avoid: &HashSet<NodeId>) -> HashSet<NodeId> {
    let mut seen = HashSet::new();
    let mut stack = vec![from];
    while let Some(n) = stack.pop() {
        if avoid.contains(&n) || !seen.insert(n) {
            continue;
        }
        for e in g.edges.iter().filter(|e| e.from == n && Some((e.from, e.to)) != skip) {
            stack.push(e.to);
        }
    }
    seen
}

/// Base cases by direct enumeration: the branch target is not itself a
/// recursive site, and the target can reach exit without any recursive site.
/// Additionally the region only that branch leads to must be free of them.
fn brute_force_base_cases(g: &FlowGraph, sites: &[NodeId]) -> BTreeSet<BranchRef> {
    let sites: HashSet<NodeId> = sites.iter().copied().collect();
    let mut out = BTreeSet::new();
    for p in g.nodes.iter().filter(|n| n.kind == NodeKind::Predicate) {
        for branch in [true, false] {
            let label = if branch { EdgeLabel::True } else { EdgeLabel::False };
            let target = g.edges.iter().find(|e| e.from == p.id && e.label == label).unwrap().to;
            if sites.contains(&target) {
                continue;
            }
            let from_target = reachable(g, target, None, &HashSet::new());
            let without = reachable(g, g.entry, Some((p.id, target)), &HashSet::new());
            let region_clean = from_target.iter().filter(|n| !without.contains(n)).all(|n| !sites.contains(n));
            let clean_exit = reachable(g, target, None, &sites).contains(&g.exit);
            if region_clean && clean_exit {
                out.insert(BranchRef { predicate: p.id, branch });
            }
        }
    }
    out
}

#[test]
fn base_cases_match_brute_force() {
    for (name, src) in CORPUS {
        let m = load(src);
        let analysis = RecursionAnalysis::new(m.flow());
        for info in analysis.functions().filter(|i| i.recursive) {
            let g = m.graph(&info.function).unwrap();
            let expected = brute_force_base_cases(g, &info.recursive_call_sites);
            let found: BTreeSet<BranchRef> = info.base_cases.iter().copied().collect();
            assert_eq!(found, expected, "{name}: {}", info.function);
            assert_eq!(info.non_terminating_risk, found.is_empty(), "{name}: {}", info.function);
        }
    }
}

#[test]
fn loopy_has_no_base_case_and_guarded_has_one() {
    let loopy = RecursionAnalysis::new(load(CORPUS[5].1).flow());
    assert!(loopy.info("loopy").unwrap().non_terminating_risk);
    let guarded = RecursionAnalysis::new(load(CORPUS[8].1).flow());
    let h = guarded.info("h").unwrap();
    assert_eq!(h.base_cases.len(), 1);
    assert!(h.base_cases[0].branch);
    assert_eq!(h.class, RecursionClass::Binary);
}

#[test]
fn recursion_invariants_over_the_corpus() {
    for (name, src) in CORPUS {
        let m = load(src);
        let a = RecursionAnalysis::new(m.flow());
        for e in &a.aspects.entries {
            if e.aspect == Aspect::Aspect2 {
                assert!(a.nesting_level(&e.caller) >= 2, "{name}: aspect-2 at {} below level 2", e.call_site);
            }
            assert!(a.is_recursive(&e.callee), "{name}: aspect tag on a call to non-recursive `{}`", e.callee);
        }
        for info in a.functions() {
            assert_eq!(info.recursive, info.class != RecursionClass::None, "{name}: {}", info.function);
            if let RecursionClass::Mutual(cycle) = &info.class {
                for other in cycle {
                    assert!(matches!(a.info(other).unwrap().class, RecursionClass::Mutual(_)), "{name}: {other}");
                }
            }
        }
    }
}
