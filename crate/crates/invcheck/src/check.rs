//! Checking many invariants on worker threads, one store per invariant.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use invcheck_core::frontend::ProgramAst;
use invcheck_core::inference::Formula;
use invcheck_core::refute::{check_invariant, CheckConfig, CheckError, CheckReport};

pub struct Checked {
    pub result: Result<CheckReport, CheckError>,
    pub millis: u64,
}

/// Checks one invariant; `timeout` starts counting when the check starts.
pub fn check_timed(ast: &ProgramAst, f: &Formula, cfg: &CheckConfig, timeout: Option<Duration>) -> Checked {
    let start = Instant::now();
    let mut cfg = cfg.clone();
    if let Some(t) = timeout {
        let end = start + t;
        cfg.deadline = Some(Arc::new(move || Instant::now() >= end));
    }
    let result = check_invariant(ast, f, &cfg);
    Checked {
        result,
        millis: start.elapsed().as_millis() as u64,
    }
}

/// Results are in the order of `fs` whatever order the workers finish in.
pub fn check_parallel(
    ast: &ProgramAst,
    fs: &[Formula],
    cfg: &CheckConfig,
    timeout: Option<Duration>,
    jobs: usize,
) -> Vec<Checked> {
    let slots: Vec<Mutex<Option<Checked>>> = fs.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..jobs.clamp(1, fs.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(f) = fs.get(i) else { break };
                let c = check_timed(ast, f, cfg, timeout);
                *slots[i].lock().expect("no worker panics while holding a slot") = Some(c);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().expect("slot lock").expect("every slot filled"))
        .collect()
}
