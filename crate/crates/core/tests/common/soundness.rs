#![allow(dead_code)]

//! Containment of concrete runs, faulted or not, in the interval analysis.

use faultline_core::absint::{
    analyze, run_observed, AbsEnv, AbsResult, AnalysisOptions, AssertStatus, FaultInjection, FaultValue, Interval,
    RunOptions, Termination,
};
use faultline_core::frontend::{build_all, parse, Cfg, Point, SourceUnit};
use faultline_core::instrument::{instrument, FaultConfig, FaultModel, Registry};
use faultline_core::memory::{Obj, Store};
use faultline_core::SiteId;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use super::progen::generate;

fn contained(c: &Obj<i64>, a: &Obj<Interval>) -> bool {
    match (c, a) {
        (Obj::Scalar(_, v), Obj::Scalar(_, i)) => i.contains(*v),
        (Obj::Array(_, vs), Obj::Array(_, is)) => vs.iter().zip(is).all(|(v, i)| i.contains(*v)),
        (Obj::Record(cs), Obj::Record(as_)) => cs.iter().zip(as_).all(|(c, a)| contained(c, a)),
        _ => true,
    }
}

fn env_contains(env: &AbsEnv, st: &Store<i64>) -> bool {
    let (globals, slots) = st.view();
    globals.iter().zip(&env.globals).all(|(c, a)| contained(c, a))
        && slots.iter().zip(&env.slots).all(|(c, a)| contained(c, a))
}

/// Run once and report the first way in which `abs` fails to cover it.
fn check_run(
    r: &Registry,
    cfgs: &[Cfg],
    abs: &AbsResult,
    inputs: &std::collections::BTreeMap<String, i64>,
    faults: &[FaultInjection],
) -> Result<(), String> {
    let opts = RunOptions { step_limit: 200_000, record_blocks: true, record_sites: false };
    let mut errs: Vec<String> = Vec::new();
    let trace = {
        let mut obs = |pt: Point, st: &Store<i64>| {
            if errs.len() > 3 {
                return;
            }
            match abs.state_before.get(&pt) {
                None => errs.push(format!("{pt:?} reached but never recorded")),
                Some(env) if !env_contains(env, st) => {
                    errs.push(format!("{pt:?}: concrete {:?} outside {:?}", st.view(), env))
                }
                _ => {}
            }
        };
        run_observed(&r.program, cfgs, inputs, faults, &opts, Some(&mut obs))
    };
    if let Some(e) = errs.first() {
        return Err(e.clone());
    }
    if let Termination::AssertionViolation(id) = trace.termination {
        if abs.status(id) == AssertStatus::Proven {
            return Err(format!("{id} violated but proven"));
        }
    }
    for (f, b) in &trace.blocks {
        if abs.is_dead(*f, *b) {
            return Err(format!("block {b:?} of function {f} visited but dead"));
        }
    }
    Ok(())
}

pub fn check(seed: u64) -> Result<(), String> {
    let g = generate(seed);
    let p = parse(&SourceUnit::new("gen.fic", g.source.clone(), "main")).map_err(|e| e.to_string())?;
    let r = instrument(&p, FaultModel::Both);
    let cfgs = build_all(&r.program);
    let opts = AnalysisOptions::default();
    let nominal = analyze(&r.program, &cfgs, &FaultConfig::none(), &opts);
    let faulted = analyze(&r.program, &cfgs, &FaultConfig::all_symbolic(&r), &opts);
    if nominal.timed_out || faulted.timed_out {
        return Ok(());
    }
    let mut rng = StdRng::seed_from_u64(seed ^ 0x5eed);
    for inputs in g.input_space() {
        check_run(&r, &cfgs, &nominal, &inputs, &[]).map_err(|e| format!("nominal {inputs:?}: {e}"))?;
        check_run(&r, &cfgs, &faulted, &inputs, &[]).map_err(|e| format!("no fault {inputs:?}: {e}"))?;
        if r.sites.is_empty() {
            continue;
        }
        for _ in 0..4 {
            let site = SiteId(rng.gen_range(0..r.sites.len() as u32));
            let ty = r.site(site).ty;
            let value = match rng.gen_range(0..4) {
                0 => FaultValue::Const(1),
                1 => FaultValue::Const(ty.all_ones()),
                2 => FaultValue::Const(ty.min()),
                _ => FaultValue::Flip,
            };
            let f = FaultInjection { site, occurrence: rng.gen_range(1..4), value };
            check_run(&r, &cfgs, &faulted, &inputs, &[f]).map_err(|e| format!("{f:?} {inputs:?}: {e}"))?;
        }
    }
    Ok(())
}
