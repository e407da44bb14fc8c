use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use faultline_core::corpus;
use faultline_core::frontend::{build_all, print_program};
use faultline_core::instrument::instrument;
use faultline_core::pipeline::{self, AttackOptions, PipelineConfig, RunReport, StrategyFile};
use faultline_core::symex::{Budget, Search};
use faultline_core::{parse, FaultModel, Registry, SourceUnit};

/// Find fault-injection attacks in FIC programs.
#[derive(Parser)]
#[command(name = "faultline", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the program with a fault variable on every faultable expression.
    Instrument {
        #[command(flatten)]
        src: Source,
        /// Write the instrumented program here instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Write the site registry (JSON) here.
        #[arg(long)]
        registry: Option<PathBuf>,
    },
    /// Select fault sites and emit a strategy file.
    Select {
        #[command(flatten)]
        src: Source,
        #[command(flatten)]
        steps: Steps,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Search for attack paths.
    Attack {
        #[command(flatten)]
        src: Source,
        /// Strategy file; without one the selection steps below run first.
        #[arg(long)]
        strategy: Option<PathBuf>,
        #[command(flatten)]
        steps: Steps,
        /// Wall-clock limit of the exploration, in seconds.
        #[arg(long)]
        timeout: Option<f64>,
        #[arg(long)]
        max_paths: Option<u64>,
        #[arg(long, default_value = "dfs")]
        search: String,
        /// Write the JSON report here.
        #[arg(long)]
        json: Option<PathBuf>,
        /// Write unfinished traces as JSON lines here.
        #[arg(long)]
        early_traces: Option<PathBuf>,
    },
    /// Compare JSON reports side by side.
    Report {
        #[arg(required = true)]
        reports: Vec<PathBuf>,
    },
}

#[derive(Args)]
struct Source {
    /// A .fic file, or `corpus:<name>` for a bundled program.
    source: String,
    /// Entry function (default `main`, or the corpus program's).
    #[arg(long)]
    entry: Option<String>,
    /// Fault model: data, test-inversion or both.
    #[arg(long)]
    model: Option<String>,
    /// Enable `#ifdef` flags.
    #[arg(short = 'D', long = "define")]
    flags: Vec<String>,
}

#[derive(Args)]
struct Steps {
    #[arg(long)]
    deps: bool,
    #[arg(long)]
    prove: bool,
    #[arg(long)]
    brute_force: bool,
    #[arg(long)]
    occ_limit: Option<u64>,
    #[arg(long)]
    grow: bool,
    #[arg(long)]
    shrink: bool,
    #[arg(long, default_value_t = 1)]
    max_faults: u32,
    /// Seconds per symbolic run while growing or shrinking.
    #[arg(long, default_value_t = 10.0)]
    run_budget: f64,
    /// Occurrence-counting input, `name=value`.
    #[arg(long = "input")]
    inputs: Vec<String>,
}

impl Steps {
    fn any(&self) -> bool {
        self.deps || self.prove || self.brute_force || self.occ_limit.is_some() || self.grow || self.shrink
    }

    fn config(&self, harness: BTreeMap<String, i64>) -> Result<PipelineConfig> {
        let mut h = harness;
        for kv in &self.inputs {
            let (k, v) = kv.split_once('=').ok_or_else(|| anyhow!("--input expects name=value, got `{kv}`"))?;
            h.insert(k.to_string(), parse_int(v)?);
        }
        Ok(PipelineConfig {
            deps: self.deps,
            prove: self.prove,
            brute_force: self.brute_force,
            occ_limit: self.occ_limit,
            grow: self.grow,
            shrink: self.shrink,
            max_faults: self.max_faults,
            run_budget: Duration::from_secs_f64(self.run_budget),
            harness: h,
            ..PipelineConfig::default()
        })
    }
}

fn parse_int(s: &str) -> Result<i64> {
    let t = s.trim();
    let v = match t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        Some(h) => i64::from_str_radix(h, 16),
        None => t.parse(),
    };
    v.with_context(|| format!("bad integer `{s}`"))
}

struct Loaded {
    name: String,
    registry: Registry,
    harness: BTreeMap<String, i64>,
}

fn load(src: &Source) -> Result<Loaded> {
    let (unit, name, model, harness) = match src.source.strip_prefix("corpus:") {
        Some(n) => {
            let c = corpus::get(n).ok_or_else(|| anyhow!("no corpus program `{n}`"))?;
            (c.unit(), c.name.to_string(), c.model, c.harness_inputs())
        }
        None => {
            let text = fs::read_to_string(&src.source).with_context(|| format!("reading {}", src.source))?;
            let name = PathBuf::from(&src.source).file_stem().map_or(src.source.clone(), |s| s.to_string_lossy().into_owned());
            (SourceUnit::new(&src.source, text, "main"), name, FaultModel::Both, BTreeMap::new())
        }
    };
    let mut unit = unit;
    if let Some(e) = &src.entry {
        unit.entry = e.clone();
    }
    if !src.flags.is_empty() {
        unit = unit.with_flags(&src.flags.iter().map(String::as_str).collect::<Vec<_>>());
    }
    let model = match &src.model {
        Some(m) => m.parse::<FaultModel>().map_err(|e| anyhow!(e))?,
        None => model,
    };
    let p = parse(&unit).map_err(|e| anyhow!("{e}"))?;
    Ok(Loaded { name, registry: instrument(&p, model), harness })
}

fn write_or_print(path: &Option<PathBuf>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.cmd {
        Cmd::Instrument { src, output, registry } => {
            let l = load(&src)?;
            write_or_print(&output, &print_program(&l.registry.program))?;
            if let Some(path) = registry {
                let text = serde_json::to_string_pretty(&l.registry.sites)?;
                fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
            }
            Ok(0)
        }
        Cmd::Select { src, steps, output } => {
            let l = load(&src)?;
            let cfg = steps.config(l.harness.clone())?;
            let cfgs = build_all(&l.registry.program);
            let run = pipeline::run_selection(&l.registry, &cfgs, &cfg)?;
            if run.selection.target_assertions.is_empty() {
                eprintln!("warning: no assertion to protect; the strategy is empty");
            }
            for s in &run.steps {
                eprintln!("{:<12} {:>4} -> {:<4} {} ms", s.step, s.sites_before, s.sites_after, s.millis);
            }
            let sf = StrategyFile::from_selection(&l.registry, &run.selection, cfg.max_faults);
            write_or_print(&output, &sf.emit())?;
            Ok(0)
        }
        Cmd::Attack { src, strategy, steps, timeout, max_paths, search, json, early_traces } => {
            let l = load(&src)?;
            let search = match search.as_str() {
                "dfs" => Search::Dfs,
                "bfs" => Search::Bfs,
                s => bail!("unknown search order `{s}`"),
            };
            let budget = Budget { timeout: timeout.map(Duration::from_secs_f64), max_paths, ..Budget::default() };
            let report = match strategy {
                Some(path) => {
                    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
                    let sf = StrategyFile::parse(&text)?;
                    let cfg = sf.resolve(&l.registry)?;
                    let max_faults = if steps.max_faults != 1 { steps.max_faults } else { sf.max_faults };
                    let mut rep = pipeline::attack(&l.registry, &l.name, &cfg, &AttackOptions { max_faults, budget, search })?;
                    rep.config = path.file_name().map_or("strategy".into(), |n| n.to_string_lossy().into_owned());
                    rep
                }
                None => {
                    let mut cfg = steps.config(l.harness.clone())?;
                    if !steps.any() {
                        cfg = PipelineConfig { harness: cfg.harness, ..PipelineConfig::sound(steps.max_faults) };
                    }
                    pipeline::run_pipeline(&l.registry, &l.name, &cfg, budget)?
                }
            };
            print!("{}", report.render());
            if let Some(path) = json {
                fs::write(&path, report.to_json() + "\n").with_context(|| format!("writing {}", path.display()))?;
            }
            if let Some(path) = early_traces {
                fs::write(&path, report.early_jsonl()).with_context(|| format!("writing {}", path.display()))?;
            }
            Ok(report.exit_code() as u8)
        }
        Cmd::Report { reports } => {
            let mut all = Vec::new();
            for p in &reports {
                let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                all.push(RunReport::from_json(&text).with_context(|| p.display().to_string())?);
            }
            print!("{}", pipeline::compare_reports(&all)?);
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    // clap exits with 2 on usage errors, which means "incomplete" here
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(3);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}
