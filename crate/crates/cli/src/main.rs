mod jobs;
mod report;

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use perm_lll::events::{DependencyMode, Selection};
use perm_lll::verify::{run_check, CHECKS};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use jobs::{Problem, RunSettings};
use report::{Aggregate, BatchReport, ReportStatus, RunReport, SCHEMA};

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Solver(#[from] perm_lll::error::Error),
    #[error("{0}")]
    Usage(String),
}

#[derive(Parser)]
#[command(
    name = "perm-lll",
    version,
    about = "Local lemma solvers for random permutations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Select {
    First,
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    Seq,
    Par,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Deps {
    Standard,
    Lopsided,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Args, Clone, Debug)]
struct Common {
    /// Instance file (CSV matrix, block graph, hypergraph or event list).
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Run seeds `seed, seed+1, …, seed+runs-1` and add an aggregate.
    #[arg(long, default_value_t = 1)]
    runs: u64,
    #[arg(long, default_value_t = 10_000_000)]
    max_resamples: u64,
    #[arg(long, value_enum, default_value_t = Select::First)]
    select: Select,
    #[arg(long, value_enum, default_value_t = Mode::Seq)]
    mode: Mode,
    /// Dependency relation for generic event lists.
    #[arg(long, value_enum, default_value_t = Deps::Standard)]
    deps: Deps,
    /// Run even when the sufficient condition fails.
    #[arg(long)]
    force: bool,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the resampling log here (single runs only).
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ProblemKind {
    Latin,
    STransversal,
    Rainbow,
    StrongColor,
    StrongColorIterative,
    IndependentTransversal,
    Pack,
    Events,
}

#[derive(Subcommand)]
enum Command {
    /// Latin transversal of a CSV color matrix.
    Latin {
        #[command(flatten)]
        common: Common,
    },
    /// Transversal using every color at most `s` times.
    STransversal {
        #[arg(long)]
        s: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Latin transversal with a prescribed cycle type.
    Rainbow {
        /// File with τ as 1-based values.
        #[arg(long)]
        tau: Option<PathBuf>,
        /// τ made of disjoint cycles of this length (default n: one full cycle).
        #[arg(long)]
        cycle_length: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Strong coloring of a block graph.
    StrongColor {
        /// Grow the coloring through independent transversals instead.
        #[arg(long)]
        iterative: bool,
        #[arg(long, default_value_t = 10_000)]
        max_retries: u64,
        #[command(flatten)]
        common: Common,
    },
    /// One vertex per block, no two adjacent.
    IndependentTransversal {
        /// 1-based vertex that must be selected.
        #[arg(long)]
        require: Option<usize>,
        #[arg(long, default_value_t = 10_000)]
        max_retries: u64,
        #[command(flatten)]
        common: Common,
    },
    /// Edge-disjoint packing of two r-uniform hypergraphs.
    Pack {
        /// Second hypergraph (defaults to a copy of the first).
        #[arg(long)]
        h2: Option<PathBuf>,
        /// Ground set size (defaults to the smallest passing the criterion).
        #[arg(long)]
        n: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Generic event-list instance.
    Solve {
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate a problem's sufficient condition without solving.
    Criterion {
        #[arg(long, value_enum)]
        problem: ProblemKind,
        #[arg(long)]
        s: Option<usize>,
        #[arg(long)]
        h2: Option<PathBuf>,
        #[arg(long)]
        n: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Run exact and Monte Carlo verification checks.
    Verify {
        /// Check name, repeatable; `all` runs every check.
        #[arg(long = "check", default_value = "all")]
        checks: Vec<String>,
        /// Runs per Monte Carlo check.
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Time the solver on generated Latin instances.
    Bench {
        #[arg(long, default_value_t = 256)]
        n: usize,
        /// Color multiplicity (default ⌊27n/256⌋).
        #[arg(long)]
        delta: Option<usize>,
        #[arg(long, default_value_t = 0)]
        instance_seed: u64,
        #[command(flatten)]
        common: Common,
    },
}

fn settings(c: &Common) -> RunSettings {
    RunSettings {
        max_resamples: c.max_resamples,
        selection: match c.select {
            Select::First => Selection::FirstTrue,
            Select::Random => Selection::UniformRandom,
        },
        parallel: c.mode == Mode::Par,
        deps: match c.deps {
            Deps::Standard => DependencyMode::Standard,
            Deps::Lopsided => DependencyMode::Lopsided,
        },
        log: c.log.clone(),
    }
}

fn emit<T: Serialize>(value: &T, text: impl FnOnce() -> String, format: Format) {
    let mut out = std::io::stdout().lock();
    let _ = match format {
        Format::Json => writeln!(
            out,
            "{}",
            serde_json::to_string_pretty(value).expect("reports serialize")
        ),
        Format::Text => writeln!(out, "{}", text()),
    };
}

fn invalid(command: &str, err: &CliError, format: Format) -> i32 {
    let report = RunReport::invalid(command, err.to_string());
    emit(&report, || report.text(), format);
    ReportStatus::InvalidInput.exit_code()
}

fn solve(command: &str, problem: Problem, common: &Common, always_batch: bool) -> i32 {
    if common.runs == 0 {
        return invalid(
            command,
            &CliError::Usage("--runs must be at least 1".into()),
            common.format,
        );
    }
    if common.log.is_some() && common.runs > 1 {
        return invalid(
            command,
            &CliError::Usage("--log needs a single run".into()),
            common.format,
        );
    }
    let job = match jobs::build(&problem, common.input.as_deref(), settings(common)) {
        Ok(job) => job,
        Err(e) => return invalid(command, &e.into(), common.format),
    };
    if !job.criterion.satisfied && !common.force {
        let report = RunReport::criterion_failed(command, job.criterion);
        emit(&report, || report.text(), common.format);
        return ReportStatus::CriterionFailed.exit_code();
    }
    let seeds: Vec<u64> = (0..common.runs)
        .map(|i| common.seed.wrapping_add(i))
        .collect();
    let results: Vec<Result<RunReport, CliError>> = seeds
        .par_iter()
        .map(|&seed| {
            let start = Instant::now();
            let out = (job.runner)(seed)?;
            let ms = start.elapsed().as_secs_f64() * 1e3;
            Ok(RunReport::from_outcome(
                command,
                seed,
                &job.criterion,
                out,
                ms,
            ))
        })
        .collect();
    let reports = match results.into_iter().collect::<Result<Vec<_>, _>>() {
        Ok(r) => r,
        Err(e) => return invalid(command, &e, common.format),
    };
    let code = if reports.iter().all(|r| r.status == ReportStatus::Success) {
        0
    } else {
        ReportStatus::IterationLimit.exit_code()
    };
    if reports.len() == 1 && !always_batch {
        let r = &reports[0];
        emit(r, || r.text(), common.format);
    } else {
        let batch = BatchReport {
            schema: SCHEMA,
            command: command.to_string(),
            aggregate: Aggregate::of(&reports),
            reports,
        };
        emit(
            &batch,
            || {
                let mut lines: Vec<String> = batch.reports.iter().map(RunReport::text).collect();
                lines.push(batch.aggregate.text());
                lines.join("\n")
            },
            common.format,
        );
    }
    code
}

#[derive(Serialize)]
struct CriterionOutput {
    schema: u32,
    command: &'static str,
    criterion: perm_lll::apps::CriterionCheck,
}

fn criterion(problem: Problem, common: &Common) -> i32 {
    let job = match jobs::build(&problem, common.input.as_deref(), settings(common)) {
        Ok(job) => job,
        Err(e) => return invalid("criterion", &e.into(), common.format),
    };
    let out = CriterionOutput {
        schema: SCHEMA,
        command: "criterion",
        criterion: job.criterion,
    };
    let c = &out.criterion;
    let verdict = if c.satisfied { "holds" } else { "fails" };
    emit(
        &out,
        || format!("criterion {} {verdict}: {}", c.name, c.detail),
        common.format,
    );
    if c.satisfied {
        0
    } else {
        ReportStatus::CriterionFailed.exit_code()
    }
}

fn verify(checks: &[String], trials: u64, format: Format) -> i32 {
    let names: Vec<&str> = if checks.iter().any(|c| c == "all") {
        CHECKS.to_vec()
    } else {
        checks.iter().map(String::as_str).collect()
    };
    let mut verdicts = serde_json::Map::new();
    let mut lines = Vec::new();
    let mut all_passed = true;
    for name in names {
        match run_check(name, trials) {
            Ok(outcome) => {
                all_passed &= outcome.passed;
                let verdict = if outcome.passed { "pass" } else { "fail" };
                lines.push(format!("{name}: {verdict} ({})", outcome.detail));
                verdicts.insert(name.to_string(), verdict.into());
            }
            Err(e) => return invalid("verify", &e.into(), format),
        }
    }
    emit(&verdicts, || lines.join("\n"), format);
    if all_passed {
        0
    } else {
        ReportStatus::CriterionFailed.exit_code()
    }
}

fn dispatch(command: Command) -> i32 {
    match command {
        Command::Latin { common } => solve("latin", Problem::Latin, &common, false),
        Command::STransversal { s, common } => {
            solve("s-transversal", Problem::STransversal { s }, &common, false)
        }
        Command::Rainbow {
            tau,
            cycle_length,
            common,
        } => solve(
            "rainbow",
            Problem::Rainbow { tau, cycle_length },
            &common,
            false,
        ),
        Command::StrongColor {
            iterative,
            max_retries,
            common,
        } => solve(
            "strong-color",
            Problem::StrongColor {
                iterative,
                max_retries,
            },
            &common,
            false,
        ),
        Command::IndependentTransversal {
            require,
            max_retries,
            common,
        } => solve(
            "independent-transversal",
            Problem::IndependentTransversal {
                require,
                max_retries,
            },
            &common,
            false,
        ),
        Command::Pack { h2, n, common } => solve("pack", Problem::Pack { h2, n }, &common, false),
        Command::Solve { common } => solve("solve", Problem::Events, &common, false),
        Command::Criterion {
            problem,
            s,
            h2,
            n,
            common,
        } => {
            let problem = match problem {
                ProblemKind::Latin => Problem::Latin,
                ProblemKind::STransversal => match s {
                    Some(s) => Problem::STransversal { s },
                    None => {
                        return invalid(
                            "criterion",
                            &CliError::Usage("--s is required for s-transversal".into()),
                            common.format,
                        )
                    }
                },
                ProblemKind::Rainbow => Problem::Rainbow {
                    tau: None,
                    cycle_length: None,
                },
                ProblemKind::StrongColor => Problem::StrongColor {
                    iterative: false,
                    max_retries: 0,
                },
                ProblemKind::StrongColorIterative => Problem::StrongColor {
                    iterative: true,
                    max_retries: 0,
                },
                ProblemKind::IndependentTransversal => Problem::IndependentTransversal {
                    require: None,
                    max_retries: 0,
                },
                ProblemKind::Pack => Problem::Pack { h2, n },
                ProblemKind::Events => Problem::Events,
            };
            criterion(problem, &common)
        }
        Command::Verify {
            checks,
            trials,
            format,
        } => verify(&checks, trials, format),
        Command::Bench {
            n,
            delta,
            instance_seed,
            common,
        } => solve(
            "bench",
            Problem::Bench {
                n,
                delta,
                instance_seed,
            },
            &common,
            true,
        ),
    }
}

fn threads() -> Result<usize, CliError> {
    match std::env::var("PERM_LLL_THREADS") {
        Err(_) => Ok(1),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(t) if t >= 1 => Ok(t),
            _ => Err(CliError::Usage(format!(
                "PERM_LLL_THREADS must be a positive integer, got {v:?}"
            ))),
        },
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // help and version are not errors; usage mistakes are invalid input
            std::process::exit(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let code = match threads() {
        Ok(t) => match rayon::ThreadPoolBuilder::new().num_threads(t).build() {
            Ok(pool) => pool.install(|| dispatch(cli.command)),
            Err(e) => {
                eprintln!("error: {e}");
                1
            }
        },
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    };
    std::process::exit(code);
}
