//! Interprocedural traces shared by the interpreter and the path
//! enumerator: node visits tagged with the activation they belong to.

use serde::Serialize;

use crate::flowgraph::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Step {
    pub node: NodeId,
    pub activation: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Activation {
    pub function: String,
    pub parent: Option<usize>,
    pub call_site: Option<NodeId>,
}

/// A predicate decision: the node and the branch taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Branch {
    pub predicate: NodeId,
    pub taken: bool,
    #[serde(skip)]
    pub activation: usize,
}

/// Common view over enumerated and executed traces.
pub trait TraceView {
    fn steps(&self) -> &[Step];
    fn activations(&self) -> &[Activation];
    fn branches(&self) -> &[Branch];

    /// Whether step `i` resumes a call node after the callee returned.
    fn is_resume(&self, i: usize) -> bool {
        i > 0 && {
            let prev = self.steps()[i - 1].activation;
            self.activations()[prev].parent == Some(self.steps()[i].activation)
        }
    }

    fn node_ids(&self) -> Vec<u32> {
        self.steps().iter().map(|s| s.node.0).collect()
    }

    /// Dash-separated node ids of every step.
    fn full_string(&self) -> String {
        join(self.steps().iter().map(|s| s.node))
    }

    /// Branch decisions taken inside one activation, in order.
    fn branches_of(&self, activation: usize) -> Vec<Branch> {
        self.branches().iter().filter(|b| b.activation == activation).copied().collect()
    }

    /// Activations created directly at the given call site.
    fn activations_at(&self, site: NodeId) -> Vec<usize> {
        (0..self.activations().len()).filter(|&a| self.activations()[a].call_site == Some(site)).collect()
    }

    /// Ordered (from, to) node pairs executed within single activations,
    /// leaving out the call/resume pair of a suspension node.
    fn intra_edges(&self) -> Vec<(NodeId, NodeId)> {
        let mut last: Vec<Option<NodeId>> = vec![None; self.activations().len()];
        let mut out = Vec::new();
        for s in self.steps() {
            if let Some(prev) = last[s.activation] {
                if prev != s.node {
                    out.push((prev, s.node));
                }
            }
            last[s.activation] = Some(s.node);
        }
        out
    }
}

pub fn join(ids: impl IntoIterator<Item = NodeId>) -> String {
    ids.into_iter().map(|n| n.to_string()).collect::<Vec<_>>().join("-")
}
