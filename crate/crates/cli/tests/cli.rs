use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn faultline(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_faultline")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn instrument_marks_the_mask() {
    let dir = TempDir::new().unwrap();
    let reg = dir.path().join("sites.json");
    let o = faultline(&["instrument", "corpus:print_message", "--registry", path(&reg)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("^ fault_4"), "{text}");
    let sites: Value = serde_json::from_str(&fs::read_to_string(&reg).unwrap()).unwrap();
    assert_eq!(sites.as_array().unwrap().len(), 6);
    assert_eq!(sites[4]["kind"], "Data");
}

#[test]
fn instrument_without_faultable_expressions() {
    let dir = TempDir::new().unwrap();
    let src = write(&dir, "empty.fic", "void main() { }\n");
    let reg = dir.path().join("sites.json");
    let o = faultline(&["instrument", &src, "--registry", path(&reg)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(!stdout(&o).contains("fault_"));
    assert_eq!(fs::read_to_string(&reg).unwrap().trim(), "[]");
}

#[test]
fn test_inversion_only_faults_conditions() {
    let dir = TempDir::new().unwrap();
    let reg = dir.path().join("sites.json");
    let o = faultline(&["instrument", "corpus:print_message", "--model", "test-inversion", "--registry", path(&reg)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let sites: Value = serde_json::from_str(&fs::read_to_string(&reg).unwrap()).unwrap();
    let sites = sites.as_array().unwrap();
    assert!(!sites.is_empty());
    assert!(sites.iter().all(|s| s["kind"] == "Condition"));
}

#[test]
fn select_writes_strategies() {
    let o = faultline(&["select", "corpus:print_message", "--deps", "--brute-force"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("- fault_4"), "{text}");
    assert_eq!(text.matches("- fault_").count(), 1);

    let o = faultline(&["select", "corpus:print_message", "--deps"]);
    let text = stdout(&o);
    for s in ["fault_0", "fault_1", "fault_2", "fault_3", "fault_4"] {
        assert!(text.contains(&format!("- {s}\n")), "{text}");
    }
    assert!(!text.contains("fault_5"));
}

#[test]
fn select_warns_without_assertions() {
    let dir = TempDir::new().unwrap();
    let src = write(&dir, "plain.fic", "u8 g;\nvoid main() { g = g + 1; __print(g); }\n");
    let o = faultline(&["select", &src, "--deps"]);
    assert!(o.status.success());
    assert!(stderr(&o).contains("warning: no assertion"), "{}", stderr(&o));
    assert!(stdout(&o).contains("sites: []"), "{}", stdout(&o));
}

#[test]
fn attack_through_a_strategy_file() {
    let dir = TempDir::new().unwrap();
    let strategy = dir.path().join("s.yaml");
    let o = faultline(&["select", "corpus:print_message", "--deps", "--brute-force", "-o", path(&strategy)]);
    assert!(o.status.success());
    let json = dir.path().join("r.json");
    let o = faultline(&["attack", "corpus:print_message", "--strategy", path(&strategy), "--json", path(&json)]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    let text = stdout(&o);
    let row = text.lines().find(|l| l.trim_start().starts_with("fault_4")).expect("row of fault_4");
    assert_eq!(row.split_whitespace().collect::<Vec<_>>(), ["fault_4", "0", "1"]);
    let rep: Value = serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(rep["version"], "1.0");
    assert_eq!(rep["attacks"].as_array().unwrap().len(), 1);
}

#[test]
fn safe_program_exits_zero() {
    let dir = TempDir::new().unwrap();
    let src = write(&dir, "safe.fic", "void main() { u8 x = 1;\n//@ assert x == 1;\n}\n");
    let o = faultline(&["attack", &src, "--max-faults", "0"]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
}

#[test]
fn doubled_tests_need_two_faults() {
    let one = faultline(&["attack", "corpus:bootloader_model", "-D", "FIXES", "--max-faults", "1"]);
    assert_eq!(one.status.code(), Some(0), "{}{}", stdout(&one), stderr(&one));
    let two = faultline(&["attack", "corpus:bootloader_model", "-D", "FIXES", "--max-faults", "2", "--deps"]);
    assert_eq!(two.status.code(), Some(1), "{}{}", stdout(&two), stderr(&two));
    let plain = faultline(&["attack", "corpus:bootloader_model", "--max-faults", "1"]);
    assert_eq!(plain.status.code(), Some(1));
}

#[test]
fn report_compares_and_checks_versions() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    assert_eq!(faultline(&["attack", "corpus:verifypin_basic", "--deps", "--json", path(&a)]).status.code(), Some(1));
    assert_eq!(
        faultline(&["attack", "corpus:verifypin_basic", "--deps", "--prove", "--json", path(&b)]).status.code(),
        Some(1)
    );
    let o = faultline(&["report", path(&a), path(&b)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 4);

    let old = fs::read_to_string(&a).unwrap().replace("\"version\": \"1.0\"", "\"version\": \"0.3\"");
    let c = write(&dir, "old.json", &old);
    let o = faultline(&["report", path(&a), &c]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("schema version"), "{}", stderr(&o));
}

#[test]
fn bad_input_is_an_error() {
    let o = faultline(&["attack", "corpus:nope"]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(faultline(&["attack", "--no-such-flag"]).status.code(), Some(3));
    assert_eq!(faultline(&["--help"]).status.code(), Some(0));
    let dir = TempDir::new().unwrap();
    let s = write(&dir, "s.yaml", "version: '1.0'\nmodel: data\nmax_faults: 1\nsites: [fault_99]\n");
    let o = faultline(&["attack", "corpus:print_message", "--strategy", &s]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("fault_99"));
}
