//! Cardinality-constrained mean-variance portfolio optimization: problem
//! model, benchmark file formats, frontier quality metrics, five
//! metaheuristic solvers, an exact solver for small instances, and a greedy
//! loop that asks a language model for solver programs and scores them.

pub mod agent;
pub mod dataio;
pub mod frontier;
pub mod heuristics;
pub mod model;
pub mod oracle;
pub mod report;
pub mod synthetic;
