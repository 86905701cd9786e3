//! The sequential swapping algorithm.
//!
//! Start from independent uniform permutations; while some bad-event is
//! true, pick one and run the swap subroutine on each permutation it
//! involves, over that permutation's domain points of the event.

use std::collections::BTreeMap;
use std::io::{self, Write};

use serde::Serialize;

use crate::criteria::WeightMap;
use crate::error::{Error, Result};
use crate::events::{
    is_true, prob_omega, BadEvent, DependencyMode, EventId, EventSet, Selection, ViolationOracle,
};
use crate::perm::{random_permutation, swap, swap_with_mates, Permutation};
use crate::rng::Rng;

#[derive(Clone, Debug)]
pub struct EngineConfig {
    pub selection: Selection,
    /// Resampling cap; must be at least 1.
    pub max_resamplings: u64,
    pub seed: u64,
    pub record_log: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            selection: Selection::FirstTrue,
            max_resamplings: 10_000_000,
            seed: 0,
            record_log: false,
        }
    }
}

impl EngineConfig {
    pub fn with_seed(seed: u64) -> Self {
        EngineConfig {
            seed,
            ..EngineConfig::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.max_resamplings == 0 {
            return Err(Error::Constraint(
                "max_resamplings must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// One resampling: the event and, aligned with its triples, the mates drawn.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LogEntry {
    /// 1-based resampling time.
    pub t: usize,
    pub event: BadEvent,
    pub mates: Vec<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ExecutionLog {
    entries: Vec<LogEntry>,
}

impl ExecutionLog {
    pub fn new() -> Self {
        ExecutionLog::default()
    }

    pub fn push(&mut self, event: BadEvent, mates: Vec<usize>) {
        let t = self.entries.len() + 1;
        self.entries.push(LogEntry { t, event, mates });
    }

    pub fn entries(&self) -> &[LogEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// One line per entry: `t event_id k x y mate ...`, indices 1-based.
    pub fn write_dump<W: Write>(&self, mut out: W) -> io::Result<()> {
        for e in &self.entries {
            write!(out, "{} {}", e.t, e.event.id())?;
            for (tr, m) in e.event.triples().iter().zip(&e.mates) {
                write!(out, " {} {} {} {}", tr.k + 1, tr.x + 1, tr.y + 1, m + 1)?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Success,
    IterationLimit,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct RunStats {
    pub resamplings: u64,
    pub per_class: BTreeMap<String, u64>,
    #[serde(skip)]
    pub per_event: BTreeMap<EventId, u64>,
    /// Number of resamplings that swapped each permutation.
    pub per_perm: Vec<u64>,
}

impl RunStats {
    pub(crate) fn new(perms: usize) -> Self {
        RunStats {
            per_perm: vec![0; perms],
            ..RunStats::default()
        }
    }

    pub(crate) fn record(&mut self, class: &str, event: &BadEvent) {
        self.resamplings += 1;
        *self.per_class.entry(class.to_string()).or_insert(0) += 1;
        *self.per_event.entry(event.id()).or_insert(0) += 1;
        for (k, _) in event.counts_by_perm() {
            self.per_perm[k] += 1;
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub status: Status,
    pub perms: Vec<Permutation>,
    pub log: Option<ExecutionLog>,
    pub stats: RunStats,
}

impl RunOutcome {
    pub fn is_success(&self) -> bool {
        self.status == Status::Success
    }
}

/// Runs the algorithm from fresh uniform permutations drawn with
/// `config.seed`.
pub fn run<O: ViolationOracle + ?Sized>(
    oracle: &mut O,
    config: &EngineConfig,
) -> Result<RunOutcome> {
    let mut rng = Rng::new(config.seed);
    let perms = draw_initial(oracle.sizes(), &mut rng);
    run_from(oracle, perms, config, &mut rng)
}

/// The starting permutations `run` uses for a seed.
pub fn initial_permutations(sizes: &[usize], seed: u64) -> Vec<Permutation> {
    draw_initial(sizes, &mut Rng::new(seed))
}

fn draw_initial(sizes: &[usize], rng: &mut Rng) -> Vec<Permutation> {
    sizes.iter().map(|&n| random_permutation(n, rng)).collect()
}

/// Runs the algorithm from the given permutations.
pub fn run_from<O: ViolationOracle + ?Sized>(
    oracle: &mut O,
    mut perms: Vec<Permutation>,
    config: &EngineConfig,
    rng: &mut Rng,
) -> Result<RunOutcome> {
    config.validate()?;
    check_sizes(oracle.sizes(), &perms)?;
    oracle.reset(&perms);
    let mut stats = RunStats::new(perms.len());
    let mut log = config.record_log.then(ExecutionLog::new);
    let mut touched = Vec::new();

    loop {
        let Some(event) = oracle.select(&perms, &config.selection, rng) else {
            return Ok(RunOutcome {
                status: Status::Success,
                perms,
                log,
                stats,
            });
        };
        if stats.resamplings >= config.max_resamplings {
            return Ok(RunOutcome {
                status: Status::IterationLimit,
                perms,
                log,
                stats,
            });
        }
        debug_assert!(is_true(&event, &perms), "oracle selected a false event");
        let mut all_mates = Vec::with_capacity(event.len());
        for (k, xs) in event.sources_by_perm() {
            let mates = swap(&mut perms[k], &xs, rng)?;
            touched.clear();
            touched.extend_from_slice(&xs);
            touched.extend_from_slice(&mates);
            oracle.after_swap(&perms, k, &touched);
            all_mates.extend(mates);
        }
        stats.record(oracle.class_of(&event), &event);
        if let Some(log) = log.as_mut() {
            log.push(event, all_mates);
        }
    }
}

pub(crate) fn check_sizes(sizes: &[usize], perms: &[Permutation]) -> Result<()> {
    if sizes.len() != perms.len() {
        return Err(Error::SizeMismatch {
            expected: sizes.len(),
            found: perms.len(),
        });
    }
    for (&n, p) in sizes.iter().zip(perms) {
        if p.len() != n {
            return Err(Error::SizeMismatch {
                expected: n,
                found: p.len(),
            });
        }
    }
    Ok(())
}

/// Re-executes a log through the sequential loop with the recorded mates.
///
/// Each logged event must be true when its turn comes (so the sequential
/// algorithm could have chosen it) and each mate must be one the swap
/// subroutine could have drawn. Returns the final permutations.
pub fn replay<O: ViolationOracle + ?Sized>(
    oracle: &mut O,
    mut perms: Vec<Permutation>,
    entries: &[LogEntry],
) -> Result<Vec<Permutation>> {
    check_sizes(oracle.sizes(), &perms)?;
    oracle.reset(&perms);
    let mut touched = Vec::new();
    for entry in entries {
        if !oracle.true_set().contains(entry.event.id()) {
            return Err(Error::Constraint(format!(
                "logged event {} at time {} is not true during replay",
                entry.event.id(),
                entry.t
            )));
        }
        let mut offset = 0;
        for (k, xs) in entry.event.sources_by_perm() {
            let mates = entry
                .mates
                .get(offset..offset + xs.len())
                .ok_or(Error::SizeMismatch {
                    expected: entry.event.len(),
                    found: entry.mates.len(),
                })?;
            offset += xs.len();
            swap_with_mates(&mut perms[k], &xs, mates)?;
            touched.clear();
            touched.extend_from_slice(&xs);
            touched.extend_from_slice(mates);
            oracle.after_swap(&perms, k, &touched);
        }
    }
    Ok(perms)
}

/// Upper bound on the probability that a conjunction holds in the output:
/// `P(E) ∏_{B' ~ E} (1 + μ(B'))`.
pub fn mt_bound(
    conjunction: &BadEvent,
    mu: &WeightMap,
    events: &EventSet,
    mode: DependencyMode,
) -> Result<f64> {
    let p = prob_omega(conjunction, events.sizes())?.value;
    let mut bound = p;
    for nb in events.neighborhood(conjunction, mode) {
        bound *= 1.0 + mu.get(nb.id()).ok_or(Error::MissingWeight(nb.id()))?;
    }
    Ok(bound)
}
