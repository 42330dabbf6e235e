pub mod flowgraph;
pub mod frontend;
pub mod interp;
pub mod model;
pub mod recursion;
pub mod trace;
pub mod paths;
pub mod testgen;
pub mod report;
