//! Shared setup for the benchmarks: instrumented corpus programs.

use faultline_core::corpus::{self, CorpusProgram};
use faultline_core::instrument::instrument;
use faultline_core::Registry;

pub fn registry(c: &CorpusProgram) -> Registry {
    instrument(&c.parse(), c.model)
}

/// Every corpus program with its registry, the fixed bootloader included.
pub fn corpus_registries() -> Vec<(&'static str, Registry)> {
    corpus::variants().iter().map(|c| (c.name, registry(c))).collect()
}
