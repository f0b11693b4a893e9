//! In-process execution of fuzz targets under edge instrumentation.
//!
//! Targets are plain functions behind the [`FuzzTarget`] trait rather than
//! external binaries. Each run fills a fresh [`CoverageMap`] through a
//! [`Tracer`] handed to the target, and reports an [`Outcome`]. Crashes are
//! explicit: targets return a bug id instead of dying, so a crash never takes
//! the fuzzer down with it.

mod goat;

pub use goat::GoatTarget;

use crate::{Error, Result};
use std::any::Any;
use std::panic::{self, AssertUnwindSafe};
use std::sync::{Arc, OnceLock};
use std::time::{Duration, Instant};

/// Number of edge counters in a coverage map. Fixed for a whole campaign.
pub const MAP_SIZE: usize = 1 << 16;

/// Bug id reported when a target panics instead of returning a bug id.
pub const PANIC_BUG_ID: u32 = u32::MAX;

/// Folds a (previous location, current location) pair into an edge id.
#[inline(always)]
pub fn edge_index(prev_loc: u32, cur_loc: u32) -> u32 {
    ((prev_loc >> 1) ^ cur_loc) & (MAP_SIZE as u32 - 1)
}

/// Per-execution edge hit counters. Counters saturate at 255.
///
/// The map keeps a side list of touched edges so that resetting and scanning
/// cost O(edges hit) instead of O(65536) per execution.
#[derive(Clone)]
pub struct CoverageMap {
    hits: Box<[u8; MAP_SIZE]>,
    touched: Vec<u16>,
}

impl CoverageMap {
    pub fn new() -> Self {
        Self {
            hits: vec![0u8; MAP_SIZE].into_boxed_slice().try_into().unwrap(),
            touched: Vec::with_capacity(1024),
        }
    }

    #[inline(always)]
    pub fn bump(&mut self, edge: u32) {
        let i = (edge as usize) & (MAP_SIZE - 1);
        let c = &mut self.hits[i];
        if *c == 0 {
            self.touched.push(i as u16);
        }
        *c = c.saturating_add(1);
    }

    pub fn reset(&mut self) {
        for &e in &self.touched {
            self.hits[e as usize] = 0;
        }
        self.touched.clear();
    }

    #[inline]
    pub fn hit_count(&self, edge: u32) -> u8 {
        self.hits[(edge as usize) & (MAP_SIZE - 1)]
    }

    pub fn hits(&self) -> &[u8; MAP_SIZE] {
        &self.hits
    }

    /// Edge ids with a nonzero counter, ascending.
    pub fn edge_set(&self) -> Vec<u32> {
        let mut edges: Vec<u32> = self.touched.iter().map(|&e| e as u32).collect();
        edges.sort_unstable();
        edges
    }

    /// Unordered view of the touched edges, for hot-path scans.
    pub fn touched(&self) -> &[u16] {
        &self.touched
    }

    pub fn count_nonzero(&self) -> usize {
        self.touched.len()
    }
}

impl Default for CoverageMap {
    fn default() -> Self {
        Self::new()
    }
}

impl PartialEq for CoverageMap {
    fn eq(&self, other: &Self) -> bool {
        self.hits[..] == other.hits[..]
    }
}

impl Eq for CoverageMap {}

impl std::fmt::Debug for CoverageMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut edges: Vec<(u32, u8)> = self
            .touched
            .iter()
            .map(|&e| (e as u32, self.hits[e as usize]))
            .collect();
        edges.sort_unstable();
        f.debug_struct("CoverageMap").field("edges", &edges).finish()
    }
}

/// What a single execution produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    Crash(u32),
    Timeout,
}

impl Outcome {
    pub fn is_crash(&self) -> bool {
        matches!(self, Outcome::Crash(_))
    }
}

/// Coverage plus outcome plus wall time for one run.
#[derive(Debug)]
pub struct ExecutionResult {
    pub coverage: CoverageMap,
    pub outcome: Outcome,
    pub exec_micros: u64,
}

/// What a target reports back to the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunOutcome {
    Ok,
    /// Target hit a seeded bug. Ids are target-defined and >= 1.
    Bug(u32),
}

/// Trace sink handed to targets; every instrumentation point calls [`Tracer::trace`].
pub trait Tracer {
    fn trace(&mut self, location: u32);
}

/// A deliberately vulnerable in-process program.
///
/// `run` must be deterministic in the input bytes, and every manifest entry's
/// trigger must reproduce its bug id.
pub trait FuzzTarget: Send + Sync {
    fn name(&self) -> &str;

    fn run(&self, input: &[u8], tracer: &mut dyn Tracer) -> RunOutcome;

    /// Ground truth for the seeded bugs: (bug id, description, trigger input).
    fn bug_manifest(&self) -> Vec<BugInfo>;

    /// Inputs a campaign starts from when the user supplies none.
    fn initial_corpus(&self) -> Vec<Vec<u8>>;
}

#[derive(Debug, Clone)]
pub struct BugInfo {
    pub bug_id: u32,
    pub description: &'static str,
    pub trigger: Vec<u8>,
}

/// Looks up a built-in target by name.
pub fn target_by_name(name: &str) -> Result<Arc<dyn FuzzTarget>> {
    match name {
        "goat" => Ok(Arc::new(GoatTarget::new())),
        other => Err(Error::UnknownTarget(other.to_string())),
    }
}

/// Payload carried by the unwind that aborts a run over its time budget.
struct TimeoutSignal;

/// The sink wired into targets: folds locations into edges, enforces the
/// cooperative timeout.
struct EdgeSink<'a> {
    map: &'a mut CoverageMap,
    prev_loc: u32,
    traces: u32,
    deadline: Instant,
}

impl Tracer for EdgeSink<'_> {
    #[inline]
    fn trace(&mut self, location: u32) {
        self.map.bump(edge_index(self.prev_loc, location));
        self.prev_loc = location;
        self.traces = self.traces.wrapping_add(1);
        // Deadline checks are amortized; a spinning target still traces, so
        // it cannot dodge the check.
        if self.traces & 0x3ff == 0 && Instant::now() >= self.deadline {
            panic::panic_any(TimeoutSignal);
        }
    }
}

/// Installs a panic hook that stays quiet for timeout unwinds. Target panics
/// and ordinary test panics still reach the previous hook.
fn silence_timeout_panics() {
    static HOOK: OnceLock<()> = OnceLock::new();
    HOOK.get_or_init(|| {
        let previous = panic::take_hook();
        panic::set_hook(Box::new(move |info| {
            if info.payload().downcast_ref::<TimeoutSignal>().is_none() {
                previous(info);
            }
        }));
    });
}

/// Runs targets and produces [`ExecutionResult`]s. Each executor owns its
/// coverage buffer; instances never share mutable state.
pub struct Executor {
    target: Arc<dyn FuzzTarget>,
    map: CoverageMap,
    timeout: Duration,
}

impl Executor {
    pub fn new(target: Arc<dyn FuzzTarget>, timeout: Duration) -> Self {
        assert!(!timeout.is_zero(), "timeout must be > 0");
        silence_timeout_panics();
        Self {
            target,
            map: CoverageMap::new(),
            timeout,
        }
    }

    pub fn target(&self) -> &Arc<dyn FuzzTarget> {
        &self.target
    }

    /// Executes one input. The coverage stays in the executor's buffer and is
    /// readable through [`Executor::last_coverage`] until the next run; this
    /// keeps the hot loop free of per-execution map copies.
    pub fn run(&mut self, input: &[u8]) -> (Outcome, u64) {
        self.map.reset();
        let start = Instant::now();
        let mut sink = EdgeSink {
            map: &mut self.map,
            prev_loc: 0,
            traces: 0,
            deadline: start + self.timeout,
        };
        // Entry edge: every run traces at least one location.
        sink.trace(0);

        let target = &self.target;
        let result = panic::catch_unwind(AssertUnwindSafe(|| target.run(input, &mut sink)));

        let exec_micros = start.elapsed().as_micros().max(1) as u64;
        let outcome = match result {
            Ok(RunOutcome::Ok) => Outcome::Ok,
            Ok(RunOutcome::Bug(id)) => Outcome::Crash(id),
            Err(payload) => classify_panic(payload),
        };
        (outcome, exec_micros)
    }

    pub fn last_coverage(&self) -> &CoverageMap {
        &self.map
    }

    /// Executes one input and returns an owned result.
    pub fn execute(&mut self, input: &[u8]) -> ExecutionResult {
        let (outcome, exec_micros) = self.run(input);
        ExecutionResult {
            coverage: self.map.clone(),
            outcome,
            exec_micros,
        }
    }
}

fn classify_panic(payload: Box<dyn Any + Send>) -> Outcome {
    if payload.downcast_ref::<TimeoutSignal>().is_some() {
        Outcome::Timeout
    } else {
        Outcome::Crash(PANIC_BUG_ID)
    }
}

#[cfg(test)]
mod tests;
