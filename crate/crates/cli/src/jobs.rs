//! Instance loading and per-seed runners for every solver subcommand.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use perm_lll::apps::generate::matrix_with_multiplicity;
use perm_lll::apps::strong::{self, TransversalOptions};
use perm_lll::apps::validate::{
    is_conjugate_latin, is_edge_disjoint_packing, is_independent_transversal, is_latin_transversal,
    is_strong_coloring, max_color_count,
};
use perm_lll::apps::{
    conjugate, hypergraph, latin, s_transversal, BlockGraph, ColorMatrix, CriterionCheck,
    Execution, Hypergraph, SolverConfig,
};
use perm_lll::criteria::{check_asymmetric, least_fixed_point};
use perm_lll::engine::{run, EngineConfig, ExecutionLog, Status};
use perm_lll::error::{Error, Result};
use perm_lll::events::{is_true, DependencyMode, EventSet, ExplicitOracle, Selection};
use perm_lll::io::parse_event_list;
use perm_lll::parallel::{run_parallel, ParallelConfig};
use perm_lll::perm::Permutation;
use perm_lll::rng::Rng;
use serde_json::{json, Value};

use crate::report::{Resamplings, SeedOutcome};

/// Flags shared by every solver subcommand, already validated.
#[derive(Clone, Debug)]
pub struct RunSettings {
    pub max_resamples: u64,
    pub selection: Selection,
    pub parallel: bool,
    pub deps: DependencyMode,
    pub log: Option<PathBuf>,
}

impl RunSettings {
    fn solver(&self, seed: u64) -> SolverConfig {
        SolverConfig {
            seed,
            max_resamplings: self.max_resamples,
            selection: self.selection.clone(),
            parallel: self.parallel,
            record_log: self.log.is_some(),
            // the CLI applies the criterion gate itself
            force: true,
            ..SolverConfig::default()
        }
    }
}

#[derive(Clone, Debug)]
pub enum Problem {
    Latin,
    STransversal {
        s: usize,
    },
    Rainbow {
        tau: Option<PathBuf>,
        cycle_length: Option<usize>,
    },
    StrongColor {
        iterative: bool,
        max_retries: u64,
    },
    IndependentTransversal {
        require: Option<usize>,
        max_retries: u64,
    },
    Pack {
        h2: Option<PathBuf>,
        n: Option<usize>,
    },
    Events,
    Bench {
        n: usize,
        delta: Option<usize>,
        instance_seed: u64,
    },
}

pub type Runner = Box<dyn Fn(u64) -> Result<SeedOutcome> + Sync>;

pub struct Job {
    pub criterion: CriterionCheck,
    pub runner: Runner,
}

fn open(path: Option<&Path>) -> Result<File> {
    let path = path.ok_or_else(|| Error::InvalidInput("--input is required".into()))?;
    File::open(path).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

fn one_based(p: &Permutation) -> Value {
    json!(p.to_one_based())
}

fn plus_one(v: &[usize]) -> Value {
    json!(v.iter().map(|x| x + 1).collect::<Vec<_>>())
}

fn write_log(path: &Option<PathBuf>, log: Option<&ExecutionLog>) -> Result<()> {
    if let (Some(path), Some(log)) = (path, log) {
        let file = File::create(path)
            .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
        log.write_dump(BufWriter::new(file))
            .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn outcome(exec: &Execution, result: Value, valid: bool) -> SeedOutcome {
    SeedOutcome {
        status: exec.status,
        resamplings: Resamplings {
            total: exec.stats.resamplings,
            per_class: exec.stats.per_class.clone(),
        },
        result,
        valid,
        parallel: exec.parallel.clone(),
    }
}

fn latin_job(m: ColorMatrix, settings: RunSettings) -> Job {
    let criterion = latin::criterion(&m);
    let runner = move |seed| {
        let out = latin::solve(&m, &settings.solver(seed))?;
        write_log(&settings.log, out.execution.log.as_ref())?;
        let (result, valid) = match &out.solution {
            Some(p) => (
                json!({ "permutation": one_based(p) }),
                is_latin_transversal(&m, p),
            ),
            None => (Value::Null, false),
        };
        Ok(outcome(&out.execution, result, valid))
    };
    Job {
        criterion,
        runner: Box::new(runner),
    }
}

/// τ made of `n / len` disjoint cycles `(0 1 … len-1)(len …)…`.
fn cycles_of_length(n: usize, len: usize) -> Result<Permutation> {
    if len == 0 || !n.is_multiple_of(len) {
        return Err(Error::InvalidInput(format!(
            "cycle length {len} does not divide n = {n}"
        )));
    }
    let forward = (0..n)
        .map(|x| {
            if x % len == len - 1 {
                x + 1 - len
            } else {
                x + 1
            }
        })
        .collect();
    Permutation::from_forward(forward)
}

fn read_permutation(path: &Path) -> Result<Permutation> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
    let values = text
        .split_whitespace()
        .map(|t| {
            t.parse::<usize>().map_err(|_| {
                Error::InvalidInput(format!("{}: not an integer: {t:?}", path.display()))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Permutation::from_one_based(&values)
}

fn events_criterion(set: &EventSet, mode: DependencyMode) -> Result<CriterionCheck> {
    let check = match least_fixed_point(set, mode, 100_000)? {
        Some(mu) => {
            let report = check_asymmetric(set, &mu, mode)?;
            CriterionCheck {
                name: "asymmetric",
                satisfied: report.satisfied,
                detail: format!(
                    "{} events; boundary weights total {:.6}",
                    set.len(),
                    mu.total()
                ),
            }
        }
        None => CriterionCheck {
            name: "asymmetric",
            satisfied: false,
            detail: format!("{} events; no weighting satisfies the criterion", set.len()),
        },
    };
    Ok(check)
}

pub fn build(problem: &Problem, input: Option<&Path>, settings: RunSettings) -> Result<Job> {
    match problem {
        Problem::Latin => Ok(latin_job(ColorMatrix::from_csv(open(input)?)?, settings)),
        Problem::Bench {
            n,
            delta,
            instance_seed,
        } => {
            let delta = delta.unwrap_or(27 * n / 256).max(1);
            let m = matrix_with_multiplicity(*n, delta, &mut Rng::new(*instance_seed));
            Ok(latin_job(m, settings))
        }
        Problem::STransversal { s } => {
            let s = *s;
            let m = ColorMatrix::from_csv(open(input)?)?;
            s_transversal::STransversalOracle::new(&m, s)?;
            let criterion = s_transversal::criterion(&m, s);
            let runner = move |seed| {
                let out = s_transversal::solve(&m, s, &settings.solver(seed))?;
                write_log(&settings.log, out.execution.log.as_ref())?;
                let (result, valid) = match &out.solution {
                    Some(p) => {
                        let count = max_color_count(&m, p);
                        (
                            json!({ "permutation": one_based(p), "max_color_count": count }),
                            count <= s,
                        )
                    }
                    None => (Value::Null, false),
                };
                Ok(outcome(&out.execution, result, valid))
            };
            Ok(Job {
                criterion,
                runner: Box::new(runner),
            })
        }
        Problem::Rainbow { tau, cycle_length } => {
            let m = ColorMatrix::from_csv(open(input)?)?;
            let tau = match (tau, cycle_length) {
                (Some(_), Some(_)) => {
                    return Err(Error::InvalidInput(
                        "give either --tau or --cycle-length, not both".into(),
                    ))
                }
                (Some(path), None) => read_permutation(path)?,
                (None, len) => cycles_of_length(m.n(), len.unwrap_or(m.n()))?,
            };
            if tau.len() != m.n() {
                return Err(Error::SizeMismatch {
                    expected: m.n(),
                    found: tau.len(),
                });
            }
            conjugate::validate_tau(&tau)?;
            let criterion = conjugate::criterion(&m);
            let runner = move |seed| {
                let out = conjugate::solve(&m, &tau, &settings.solver(seed))?;
                write_log(&settings.log, out.execution.log.as_ref())?;
                let (result, valid) = match &out.solution {
                    Some(s) => (
                        json!({ "permutation": one_based(&s.pi), "sigma": one_based(&s.sigma) }),
                        is_conjugate_latin(&m, &tau, &s.pi),
                    ),
                    None => (Value::Null, false),
                };
                Ok(outcome(&out.execution, result, valid))
            };
            Ok(Job {
                criterion,
                runner: Box::new(runner),
            })
        }
        Problem::StrongColor {
            iterative,
            max_retries,
        } => {
            let g = BlockGraph::parse(BufReader::new(open(input)?))?;
            if *iterative {
                if settings.log.is_some() {
                    return Err(Error::InvalidInput(
                        "--log is not available with --iterative".into(),
                    ));
                }
                let max_retries = *max_retries;
                let criterion = strong::iterative_criterion(&g);
                let runner = move |seed| {
                    let out =
                        strong::strong_color_iterative(&g, &settings.solver(seed), max_retries)?;
                    let (result, valid) = match &out.coloring {
                        Some(c) => (
                            json!({ "coloring": plus_one(c), "phases": out.phases }),
                            is_strong_coloring(&g, c),
                        ),
                        None => (Value::Null, false),
                    };
                    Ok(SeedOutcome {
                        status: out.status,
                        resamplings: Resamplings {
                            total: out.resamplings,
                            per_class: [("edge".to_string(), out.resamplings)].into(),
                        },
                        result,
                        valid,
                        parallel: None,
                    })
                };
                return Ok(Job {
                    criterion,
                    runner: Box::new(runner),
                });
            }
            let criterion = strong::criterion(&g);
            let runner = move |seed| {
                let out = strong::solve(&g, &settings.solver(seed))?;
                write_log(&settings.log, out.execution.log.as_ref())?;
                let (result, valid) = match &out.solution {
                    Some(c) => (
                        json!({ "coloring": plus_one(c) }),
                        is_strong_coloring(&g, c),
                    ),
                    None => (Value::Null, false),
                };
                Ok(outcome(&out.execution, result, valid))
            };
            Ok(Job {
                criterion,
                runner: Box::new(runner),
            })
        }
        Problem::IndependentTransversal {
            require,
            max_retries,
        } => {
            let g = BlockGraph::parse(BufReader::new(open(input)?))?;
            if settings.log.is_some() {
                return Err(Error::InvalidInput(
                    "--log is not available for independent-transversal".into(),
                ));
            }
            let require = match require {
                Some(0) => return Err(Error::InvalidInput("--require is 1-based".into())),
                Some(v) if *v > g.n() => {
                    return Err(Error::OutOfRange {
                        index: *v,
                        size: g.n(),
                    })
                }
                other => other.map(|v| v - 1),
            };
            let criterion = strong::transversal_criterion(&g, None);
            let opts = TransversalOptions {
                allowed: None,
                require,
                max_retries: *max_retries,
            };
            let runner = move |seed| {
                let out = strong::independent_transversal(&g, &opts, &settings.solver(seed))?;
                let (result, valid) = match &out.selected {
                    Some(sel) => (
                        json!({ "vertices": plus_one(sel), "attempts": out.attempts }),
                        is_independent_transversal(&g, sel)
                            && require.is_none_or(|v| sel.contains(&v)),
                    ),
                    None => (Value::Null, false),
                };
                Ok(SeedOutcome {
                    status: out.status,
                    resamplings: Resamplings {
                        total: out.resamplings,
                        per_class: [("edge".to_string(), out.resamplings)].into(),
                    },
                    result,
                    valid,
                    parallel: None,
                })
            };
            Ok(Job {
                criterion,
                runner: Box::new(runner),
            })
        }
        Problem::Pack { h2, n } => {
            let h1 = Hypergraph::parse(BufReader::new(open(input)?))?;
            let h2 = match h2 {
                Some(path) => Hypergraph::parse(BufReader::new(open(Some(path))?))?,
                None => h1.clone(),
            };
            let n = n.unwrap_or_else(|| hypergraph::minimal_n(&h1, &h2));
            hypergraph::PackingOracle::new(&h1, &h2, n)?;
            let criterion = hypergraph::criterion(&h1, &h2, n);
            let runner = move |seed| {
                let out = hypergraph::solve(&h1, &h2, n, &settings.solver(seed))?;
                write_log(&settings.log, out.execution.log.as_ref())?;
                let (result, valid) = match &out.solution {
                    Some(p) => (
                        json!({ "n": n, "phi1": plus_one(&p.phi1), "phi2": plus_one(&p.phi2) }),
                        is_edge_disjoint_packing(&h1, &h2, p),
                    ),
                    None => (Value::Null, false),
                };
                Ok(outcome(&out.execution, result, valid))
            };
            Ok(Job {
                criterion,
                runner: Box::new(runner),
            })
        }
        Problem::Events => {
            let set = parse_event_list(BufReader::new(open(input)?))?;
            let criterion = events_criterion(&set, settings.deps)?;
            let runner = move |seed| {
                let mut oracle = ExplicitOracle::new(set.clone());
                let exec = if settings.parallel {
                    let cfg = ParallelConfig {
                        mode: settings.deps,
                        seed,
                        record_log: settings.log.is_some(),
                        ..ParallelConfig::default()
                    };
                    let out = run_parallel(&mut oracle, &cfg)?;
                    Execution {
                        status: out.status,
                        perms: out.perms,
                        stats: out.run_stats,
                        parallel: Some(out.stats),
                        log: out.log,
                    }
                } else {
                    let cfg = EngineConfig {
                        selection: settings.selection.clone(),
                        max_resamplings: settings.max_resamples,
                        seed,
                        record_log: settings.log.is_some(),
                    };
                    let out = run(&mut oracle, &cfg)?;
                    Execution {
                        status: out.status,
                        perms: out.perms,
                        stats: out.stats,
                        parallel: None,
                        log: out.log,
                    }
                };
                write_log(&settings.log, exec.log.as_ref())?;
                let (result, valid) = if exec.status == Status::Success {
                    let perms: Vec<Value> = exec.perms.iter().map(one_based).collect();
                    let clean = set.events().iter().all(|e| !is_true(e, &exec.perms));
                    (json!({ "permutations": perms }), clean)
                } else {
                    (Value::Null, false)
                };
                Ok(outcome(&exec, result, valid))
            };
            Ok(Job {
                criterion,
                runner: Box::new(runner),
            })
        }
    }
}
