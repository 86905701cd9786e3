use std::collections::BTreeMap;

use perm_lll::apps::CriterionCheck;
use perm_lll::engine::Status;
use perm_lll::parallel::ParallelStats;
use serde::Serialize;
use serde_json::Value;

pub const SCHEMA: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportStatus {
    Success,
    IterationLimit,
    InvalidInput,
    CriterionFailed,
}

impl From<Status> for ReportStatus {
    fn from(s: Status) -> Self {
        match s {
            Status::Success => ReportStatus::Success,
            Status::IterationLimit => ReportStatus::IterationLimit,
        }
    }
}

impl ReportStatus {
    pub fn label(self) -> &'static str {
        match self {
            ReportStatus::Success => "success",
            ReportStatus::IterationLimit => "iteration-limit",
            ReportStatus::InvalidInput => "invalid-input",
            ReportStatus::CriterionFailed => "criterion-failed",
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            ReportStatus::Success => 0,
            ReportStatus::InvalidInput => 1,
            ReportStatus::IterationLimit => 2,
            ReportStatus::CriterionFailed => 3,
        }
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Resamplings {
    pub total: u64,
    pub per_class: BTreeMap<String, u64>,
}

/// What one seeded run produced, before timing is attached.
#[derive(Clone, Debug)]
pub struct SeedOutcome {
    pub status: Status,
    pub resamplings: Resamplings,
    /// 1-based payload; only read on success.
    pub result: Value,
    pub valid: bool,
    pub parallel: Option<ParallelStats>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub schema: u32,
    pub command: String,
    pub status: ReportStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resamplings: Option<Resamplings>,
    pub result: Option<Value>,
    /// Independent validator verdict on `result`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub valid: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub criterion: Option<CriterionCheck>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parallel: Option<ParallelStats>,
    pub elapsed_ms: f64,
}

impl RunReport {
    pub fn from_outcome(
        command: &str,
        seed: u64,
        criterion: &CriterionCheck,
        out: SeedOutcome,
        elapsed_ms: f64,
    ) -> Self {
        let success = out.status == Status::Success;
        RunReport {
            schema: SCHEMA,
            command: command.to_string(),
            status: out.status.into(),
            seed: Some(seed),
            error: None,
            resamplings: Some(out.resamplings),
            result: success.then_some(out.result),
            valid: success.then_some(out.valid),
            criterion: Some(criterion.clone()),
            parallel: out.parallel,
            elapsed_ms,
        }
    }

    pub fn invalid(command: &str, error: String) -> Self {
        RunReport {
            schema: SCHEMA,
            command: command.to_string(),
            status: ReportStatus::InvalidInput,
            seed: None,
            error: Some(error),
            resamplings: None,
            result: None,
            valid: None,
            criterion: None,
            parallel: None,
            elapsed_ms: 0.0,
        }
    }

    pub fn criterion_failed(command: &str, criterion: CriterionCheck) -> Self {
        RunReport {
            schema: SCHEMA,
            command: command.to_string(),
            status: ReportStatus::CriterionFailed,
            seed: None,
            error: Some("sufficient condition fails; rerun with --force to run anyway".into()),
            resamplings: None,
            result: None,
            valid: None,
            criterion: Some(criterion),
            parallel: None,
            elapsed_ms: 0.0,
        }
    }

    pub fn text(&self) -> String {
        let mut s = format!("{}: {}", self.command, self.status.label());
        if let Some(seed) = self.seed {
            s.push_str(&format!(" (seed {seed})"));
        }
        if let Some(r) = &self.resamplings {
            s.push_str(&format!(", {} resamplings", r.total));
        }
        if let Some(p) = &self.parallel {
            s.push_str(&format!(", {} rounds", p.rounds));
        }
        if let Some(c) = &self.criterion {
            let verdict = if c.satisfied { "holds" } else { "fails" };
            s.push_str(&format!("\n  criterion {} {verdict}: {}", c.name, c.detail));
        }
        if let Some(e) = &self.error {
            s.push_str(&format!("\n  error: {e}"));
        }
        if let Some(r) = &self.result {
            s.push_str(&format!("\n  result: {r}"));
        }
        if let Some(v) = self.valid {
            s.push_str(&format!("\n  validated: {v}"));
        }
        s.push_str(&format!("\n  elapsed: {:.1} ms", self.elapsed_ms));
        s
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub mean: f64,
    pub p50: u64,
    pub p90: u64,
    pub p99: u64,
    pub max: u64,
}

impl Summary {
    fn of(mut values: Vec<u64>) -> Self {
        values.sort_unstable();
        let pick = |q: f64| {
            if values.is_empty() {
                0
            } else {
                // nearest-rank percentile
                let rank = (q * values.len() as f64).ceil().max(1.0) as usize;
                values[rank.min(values.len()) - 1]
            }
        };
        let mean = if values.is_empty() {
            0.0
        } else {
            values.iter().sum::<u64>() as f64 / values.len() as f64
        };
        Summary {
            mean,
            p50: pick(0.5),
            p90: pick(0.9),
            p99: pick(0.99),
            max: values.last().copied().unwrap_or(0),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Aggregate {
    pub runs: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub resamplings: Summary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rounds: Option<Summary>,
    pub elapsed_ms: f64,
}

impl Aggregate {
    pub fn of(reports: &[RunReport]) -> Self {
        let successes = reports
            .iter()
            .filter(|r| r.status == ReportStatus::Success)
            .count();
        let resamplings = reports
            .iter()
            .map(|r| r.resamplings.as_ref().map_or(0, |x| x.total))
            .collect();
        let rounds: Vec<u64> = reports
            .iter()
            .filter_map(|r| r.parallel.as_ref().map(|p| p.rounds))
            .collect();
        Aggregate {
            runs: reports.len(),
            successes,
            success_rate: if reports.is_empty() {
                0.0
            } else {
                successes as f64 / reports.len() as f64
            },
            resamplings: Summary::of(resamplings),
            rounds: (!rounds.is_empty()).then(|| Summary::of(rounds)),
            elapsed_ms: reports.iter().map(|r| r.elapsed_ms).sum(),
        }
    }

    pub fn text(&self) -> String {
        let mut s = format!(
            "{}/{} succeeded ({:.1}%); resamplings mean {:.2}, p50 {}, p90 {}, p99 {}, max {}",
            self.successes,
            self.runs,
            100.0 * self.success_rate,
            self.resamplings.mean,
            self.resamplings.p50,
            self.resamplings.p90,
            self.resamplings.p99,
            self.resamplings.max
        );
        if let Some(r) = &self.rounds {
            s.push_str(&format!("; rounds mean {:.2}, max {}", r.mean, r.max));
        }
        s
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BatchReport {
    pub schema: u32,
    pub command: String,
    pub reports: Vec<RunReport>,
    pub aggregate: Aggregate,
}
