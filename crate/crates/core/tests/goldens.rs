//! Report tables of the corpus under the default pipeline, compared with the
//! committed copies. Run with `FAULTLINE_BLESS=1` to rewrite them.

use std::path::PathBuf;

use faultline_core::corpus;
use faultline_core::instrument::instrument;
use faultline_core::pipeline::{run_pipeline, PipelineConfig};
use faultline_core::symex::Budget;

fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/goldens").join(format!("{name}.json"))
}

#[test]
fn corpus_tables_match_goldens() {
    let bless = std::env::var_os("FAULTLINE_BLESS").is_some();
    for c in corpus::all() {
        let r = instrument(&c.parse(), c.model);
        let rep = run_pipeline(&r, c.name, &PipelineConfig::default(), Budget::default()).unwrap();
        assert!(rep.complete, "{}", c.name);
        let text = serde_json::to_string_pretty(&rep.table).unwrap() + "\n";
        let path = golden_path(c.name);
        if bless {
            std::fs::create_dir_all(path.parent().unwrap()).unwrap();
            std::fs::write(&path, &text).unwrap();
            continue;
        }
        let want = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(text, want, "{} differs from its golden", c.name);
    }
}
