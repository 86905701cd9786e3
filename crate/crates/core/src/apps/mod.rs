//! Application solvers: instance types, violation detectors, criterion
//! pre-checks and the shared harness that runs either the sequential or
//! the parallel algorithm.

pub mod block;
pub mod conjugate;
pub mod generate;
pub mod hypergraph;
pub mod latin;
pub mod matrix;
pub mod s_transversal;
pub mod strong;
pub mod validate;

mod pairs;

use serde::Serialize;

use crate::engine::{run, EngineConfig, ExecutionLog, RunStats, Status};
use crate::error::{Error, Result};
use crate::events::{DependencyMode, Selection, ViolationOracle};
use crate::parallel::{run_parallel, ParallelConfig, ParallelStats};
use crate::perm::Permutation;

pub use block::BlockGraph;
pub use hypergraph::Hypergraph;
pub use matrix::ColorMatrix;

#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub seed: u64,
    pub max_resamplings: u64,
    pub selection: Selection,
    /// Use the parallel algorithm instead of the sequential loop.
    pub parallel: bool,
    pub max_rounds: u64,
    /// Run even when the sufficient condition fails.
    pub force: bool,
    pub record_log: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            seed: 0,
            max_resamplings: 10_000_000,
            selection: Selection::FirstTrue,
            parallel: false,
            max_rounds: 100_000,
            force: false,
            record_log: false,
        }
    }
}

impl SolverConfig {
    pub fn with_seed(seed: u64) -> Self {
        SolverConfig {
            seed,
            ..SolverConfig::default()
        }
    }

    pub fn forced(mut self) -> Self {
        self.force = true;
        self
    }
}

/// Outcome of a solver's sufficient-condition pre-check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriterionCheck {
    pub name: &'static str,
    pub satisfied: bool,
    pub detail: String,
}

impl CriterionCheck {
    /// Errors unless the check passed or `force` is set.
    pub fn gate(&self, force: bool) -> Result<()> {
        if self.satisfied || force {
            Ok(())
        } else {
            Err(Error::CriterionFailed(format!(
                "{}: {}",
                self.name, self.detail
            )))
        }
    }
}

/// Raw result of running an oracle to completion or to its cap.
#[derive(Clone, Debug)]
pub struct Execution {
    pub status: Status,
    pub perms: Vec<Permutation>,
    pub stats: RunStats,
    pub parallel: Option<ParallelStats>,
    pub log: Option<ExecutionLog>,
}

impl Execution {
    pub fn is_success(&self) -> bool {
        self.status == Status::Success
    }
}

/// A solver's answer: the pre-check, the run, and the decoded solution
/// (present exactly on success).
#[derive(Clone, Debug)]
pub struct Solved<T> {
    pub criterion: CriterionCheck,
    pub execution: Execution,
    pub solution: Option<T>,
}

impl<T> Solved<T> {
    pub fn is_success(&self) -> bool {
        self.execution.is_success()
    }
}

/// Runs the configured algorithm on an oracle.
pub fn execute<O: ViolationOracle + ?Sized>(
    oracle: &mut O,
    cfg: &SolverConfig,
) -> Result<Execution> {
    if cfg.parallel {
        let pcfg = ParallelConfig {
            mode: DependencyMode::Standard,
            max_rounds: cfg.max_rounds,
            seed: cfg.seed,
            record_log: cfg.record_log,
        };
        let out = run_parallel(oracle, &pcfg)?;
        Ok(Execution {
            status: out.status,
            perms: out.perms,
            stats: out.run_stats,
            parallel: Some(out.stats),
            log: out.log,
        })
    } else {
        let ecfg = EngineConfig {
            selection: cfg.selection.clone(),
            max_resamplings: cfg.max_resamplings,
            seed: cfg.seed,
            record_log: cfg.record_log,
        };
        let out = run(oracle, &ecfg)?;
        Ok(Execution {
            status: out.status,
            perms: out.perms,
            stats: out.stats,
            parallel: None,
            log: out.log,
        })
    }
}

pub(crate) fn finish<T>(
    criterion: CriterionCheck,
    execution: Execution,
    decode: impl FnOnce(&Execution) -> T,
) -> Solved<T> {
    let solution = execution.is_success().then(|| decode(&execution));
    Solved {
        criterion,
        execution,
        solution,
    }
}
