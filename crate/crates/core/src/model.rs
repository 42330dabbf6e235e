use thiserror::Error;

use crate::flowgraph::{number_nodes, FlowGraph, FlowNode, FlowProgram, NodeId, NodeMap, NodeMapError, OmitError, OmitTarget};
use crate::frontend::{FuncDef, ProgramAst};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error(transparent)]
    NodeMap(#[from] NodeMapError),
    #[error(transparent)]
    Omit(#[from] OmitError),
    #[error("no function named `{0}`")]
    UnknownEntry(String),
}

/// A program together with its numbered flow graphs. Omissions edit both
/// sides in step, so statement ids and node ids always agree.
#[derive(Debug, Clone, PartialEq)]
pub struct ProgramModel {
    ast: ProgramAst,
    flow: FlowProgram,
    omitted: Vec<OmitTarget>,
}

impl ProgramModel {
    pub fn new(ast: ProgramAst, node_map: Option<&NodeMap>) -> Result<Self, ModelError> {
        let flow = number_nodes(&ast, node_map)?;
        Ok(ProgramModel { ast, flow, omitted: Vec::new() })
    }

    pub fn set_entry(&mut self, name: &str) -> Result<(), ModelError> {
        if self.ast.function(name).is_none() {
            return Err(ModelError::UnknownEntry(name.to_string()));
        }
        self.ast.entry = name.to_string();
        Ok(())
    }

    pub fn omit(&mut self, target: &OmitTarget) -> Result<(), ModelError> {
        crate::flowgraph::omit::omit(&mut self.ast, &mut self.flow, target)?;
        self.omitted.push(target.clone());
        Ok(())
    }

    pub fn ast(&self) -> &ProgramAst {
        &self.ast
    }

    pub fn flow(&self) -> &FlowProgram {
        &self.flow
    }

    pub fn omitted(&self) -> &[OmitTarget] {
        &self.omitted
    }

    pub fn entry(&self) -> &str {
        &self.ast.entry
    }

    pub fn function(&self, name: &str) -> Option<&FuncDef> {
        self.ast.function(name)
    }

    pub fn graph(&self, name: &str) -> Option<&FlowGraph> {
        self.flow.graph(name)
    }

    pub fn graphs(&self) -> &[FlowGraph] {
        self.flow.graphs()
    }

    pub fn node(&self, id: NodeId) -> Option<&FlowNode> {
        self.flow.node(id)
    }
}
