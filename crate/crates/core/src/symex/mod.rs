//! Dynamic symbolic execution over fault variables.

pub mod bitblast;
pub mod engine;
pub mod report;
pub mod solver;
pub mod term;

pub use engine::{
    explore, explore_with, replay, AttackPath, Budget, EarlyTrace, ExploreOptions, ExploreResult, ExploreStats,
    FaultEvent, Search, Signature, SymexError,
};
pub use report::ReportTable;
