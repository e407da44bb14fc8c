//! Benchmark programs bundled with the library.

use std::collections::BTreeMap;

use crate::frontend::{parse, Program, SourceUnit};
use crate::instrument::FaultModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CorpusProgram {
    pub name: &'static str,
    pub file: &'static str,
    pub source: &'static str,
    pub entry: &'static str,
    pub flags: &'static [&'static str],
    /// Fault model the program is analyzed under by default.
    pub model: FaultModel,
    /// Inputs of the occurrence-counting harness.
    pub harness: &'static [(&'static str, i64)],
}

impl CorpusProgram {
    pub fn unit(&self) -> SourceUnit {
        SourceUnit::new(self.file, self.source, self.entry).with_flags(self.flags)
    }

    pub fn parse(&self) -> Program {
        parse(&self.unit()).unwrap_or_else(|e| panic!("{}: {e}", self.file))
    }

    pub fn harness_inputs(&self) -> BTreeMap<String, i64> {
        self.harness.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    pub fn with_fixes(mut self) -> CorpusProgram {
        self.flags = &["FIXES"];
        self.name = "bootloader_model_fixes";
        self
    }
}

pub const PRINT_MESSAGE: CorpusProgram = CorpusProgram {
    name: "print_message",
    file: "print_message.fic",
    source: include_str!("../corpus/print_message.fic"),
    entry: "print_message",
    flags: &[],
    model: FaultModel::Both,
    harness: &[("msg_size", 255)],
};

pub const UNFEASIBLE: CorpusProgram = CorpusProgram {
    name: "unfeasible",
    file: "unfeasible.fic",
    source: include_str!("../corpus/unfeasible.fic"),
    entry: "analysis_main",
    flags: &[],
    model: FaultModel::Both,
    harness: &[],
};

pub const PROJECTION: CorpusProgram = CorpusProgram {
    name: "projection",
    file: "projection.fic",
    source: include_str!("../corpus/projection.fic"),
    entry: "main",
    flags: &[],
    model: FaultModel::Both,
    harness: &[],
};

pub const VERIFYPIN_BASIC: CorpusProgram = CorpusProgram {
    name: "verifypin_basic",
    file: "verifypin_basic.fic",
    source: include_str!("../corpus/verifypin_basic.fic"),
    entry: "main",
    flags: &[],
    model: FaultModel::Both,
    harness: &[],
};

pub const VERIFYPIN_COUNTER: CorpusProgram = CorpusProgram {
    name: "verifypin_counter",
    file: "verifypin_counter.fic",
    source: include_str!("../corpus/verifypin_counter.fic"),
    entry: "main",
    flags: &[],
    model: FaultModel::Both,
    harness: &[],
};

pub const BOOTLOADER: CorpusProgram = CorpusProgram {
    name: "bootloader_model",
    file: "bootloader_model.fic",
    source: include_str!("../corpus/bootloader_model.fic"),
    entry: "main",
    flags: &[],
    model: FaultModel::TestInversion,
    harness: &[],
};

/// The six corpus programs.
pub fn all() -> Vec<CorpusProgram> {
    vec![PRINT_MESSAGE, UNFEASIBLE, PROJECTION, VERIFYPIN_BASIC, VERIFYPIN_COUNTER, BOOTLOADER]
}

/// Every program plus the bootloader built with its fixes.
pub fn variants() -> Vec<CorpusProgram> {
    let mut v = all();
    v.push(BOOTLOADER.with_fixes());
    v
}

pub fn get(name: &str) -> Option<CorpusProgram> {
    variants().into_iter().find(|c| c.name == name || c.file == name)
}
