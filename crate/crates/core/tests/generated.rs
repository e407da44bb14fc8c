mod common;

use common::progen::generate;
use faultline_core::frontend::{parse, print_program, same_structure, SourceUnit};

#[test]
fn generated_programs_parse_and_round_trip() {
    for seed in 0..2000 {
        let g = generate(seed);
        let p = parse(&SourceUnit::new("gen.fic", g.source.clone(), "main"))
            .unwrap_or_else(|e| panic!("seed {seed}: {e}\n{}", g.source));
        let text = print_program(&p);
        let q = parse(&SourceUnit::new("gen.fic", text.clone(), "main"))
            .unwrap_or_else(|e| panic!("seed {seed}: reparse: {e}\n{text}"));
        assert!(same_structure(&p, &q), "seed {seed}\n{}\n---\n{text}", g.source);
    }
}

