//! Solvers for terminal-constrained graph problems (linear arrangement,
//! bisection, partial multicut, min-cut arrangement, oblivious routing)
//! that embed the graph into random trees, solve on the tree, and lift
//! the solution back, plus exact brute-force oracles for ratio measurement.

#![forbid(unsafe_code)]

pub mod embed;
pub mod graph;
pub mod lift;
pub mod oracle;
pub mod routing;
pub mod treesolve;
pub mod util;

pub use graph::{DemandPair, DemandPairs, TerminalSet, VertexId, WeightedGraph};
pub use lift::{Arrangement, Bipartition, EdgeCutSet, PipelineParams, PipelineReport, Problem, Solution};
