//! Fault-injection vulnerability analysis for FIC programs.
//!
//! Programs are instrumented so that every faultable expression `e` becomes
//! `e ^ fault_i`. Static analyses then narrow the set of fault sites that
//! symbolic execution has to consider: dependency slicing, interval proofs,
//! and occurrence-count heuristics.

pub mod absint;
pub mod corpus;
pub mod depgraph;
pub mod frontend;
pub mod instrument;
pub mod memory;
pub mod pipeline;
pub mod select;
pub mod semantics;
pub mod symex;

pub use frontend::{parse, pretty_print, AssertId, FrontendError, Program, SourceUnit};
pub use instrument::{FaultModel, Registry, SiteId};

