use std::fmt::Write;

use super::{EdgeLabel, FlowGraph, NodeKind};

const HEADER: &str = "// flow graph notation: one cluster per function, dashed edges are calls\n";

/// Renders numbered graphs as a Graphviz digraph.
pub fn to_dot(graphs: &[FlowGraph]) -> String {
    let mut out = String::from(HEADER);
    if graphs.is_empty() {
        out.push_str("digraph fgn {}\n");
        return out;
    }
    out.push_str("digraph fgn {\n    node [shape=circle];\n");
    for g in graphs {
        let _ = writeln!(out, "    subgraph \"cluster_{}\" {{", g.owner);
        let _ = writeln!(out, "        label=\"{}\";", escape(&g.owner));
        for n in &g.nodes {
            let shape = match n.kind {
                NodeKind::Predicate => ", shape=diamond",
                NodeKind::CallSuspension => ", shape=doublecircle",
                _ => "",
            };
            let _ = writeln!(out, "        n{} [label=\"{}\\n{}\", tooltip=\"{}\"{shape}];", n.id, n.id, n.kind, escape(&n.label));
        }
        for e in &g.edges {
            match e.label {
                EdgeLabel::Seq => {
                    let _ = writeln!(out, "        n{} -> n{};", e.from, e.to);
                }
                label => {
                    let _ = writeln!(out, "        n{} -> n{} [label=\"{label}\"];", e.from, e.to);
                }
            }
        }
        out.push_str("    }\n");
    }
    for g in graphs {
        for (site, callee) in &g.call_sites {
            if let Some(target) = graphs.iter().find(|c| &c.owner == callee) {
                let _ = writeln!(out, "    n{site} -> n{} [style=dashed];", target.entry);
            }
        }
    }
    out.push_str("}\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

#[cfg(test)]
mod tests {
    use super::super::{number_nodes, NodeMap};
    use super::*;
    use crate::frontend::canonical_example;

    fn fig1_graphs() -> Vec<FlowGraph> {
        let map = NodeMap::parse(include_str!("../../../../corpus/fig1.nodemap")).unwrap();
        number_nodes(&canonical_example(), Some(&map)).unwrap().graphs().to_vec()
    }

    #[test]
    fn empty_list() {
        let dot = to_dot(&[]);
        assert!(dot.starts_with("//"));
        assert!(dot.ends_with("digraph fgn {}\n"));
    }

    #[test]
    fn factorial_has_one_labeled_pair() {
        let graphs = fig1_graphs();
        let f: Vec<FlowGraph> = graphs.into_iter().filter(|g| g.owner == "Factorial").collect();
        let dot = to_dot(&f);
        assert_eq!(dot.matches("[label=\"true\"]").count(), 1);
        assert_eq!(dot.matches("[label=\"false\"]").count(), 1);
        assert!(dot.contains("n8 -> n10 [label=\"true\"];"));
        assert!(dot.contains("n11 -> n7 [style=dashed];"));
    }

    #[test]
    fn whole_program_clusters_and_call_edges() {
        let dot = to_dot(&fig1_graphs());
        assert_eq!(dot.matches("subgraph \"cluster_").count(), 3);
        let dashed: Vec<&str> = dot.lines().filter(|l| l.contains("style=dashed")).collect();
        assert_eq!(dashed.len(), 5);
        let from = |ids: &[u32]| dashed.iter().filter(|l| ids.iter().any(|i| l.trim().starts_with(&format!("n{i} ")))).count();
        assert_eq!(from(&[13, 14, 15, 16, 17, 18, 19]), 2);
        assert_eq!(from(&[1, 2, 3, 4, 5, 6]), 2);
        assert!(dot.contains("n17 -> n7 [style=dashed];"));
        assert!(dot.contains("n19 -> n13 [style=dashed];"));
        assert!(dot.contains("n8 [label=\"8\\npredicate\""));
    }
}
