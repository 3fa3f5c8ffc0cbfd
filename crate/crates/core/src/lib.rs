//! Large rainbow matchings in properly edge-coloured multigraphs.
//!
//! A greedy maximal matching is grown by locating structural obstructions
//! (reachable colours appearing where they should not) and resolving each
//! with a chain of bounded, constraint-respecting switches. An exact
//! branch-and-bound oracle provides ground truth on small instances.

pub mod instances;
pub mod matching;
pub mod multigraph;
pub mod oracle;
pub mod reachability;
pub mod switching;

pub use instances::{cyclic_square, generate_random, latin_to_graph, LatinSquare, RandomParams, Seed};
pub use matching::{closeness, external_edges, greedy, verify, Closeness, RainbowMatching};
pub use multigraph::{
    Colour, ColouredMultigraph, Edge, EdgeId, InstanceParams, ValidationIssue, ValidationReport,
    Vertex,
};
pub use oracle::{max_partial_transversal, max_rainbow_matching, Limits, OracleResult};
pub use reachability::{analyse, find_violations, Analysis, Violation, ViolationKind};
pub use switching::{augment, solve, SolveOptions, SolveReport, SolveStatus, SwitchOptions, Switcher};
