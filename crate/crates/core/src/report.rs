//! The packing report and its JSON / text forms.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::Vertex;
use crate::pipeline::PackingConfig;
use crate::regular::PairShortfall;

pub const SCHEMA_VERSION: u32 = 1;

/// Top-level keys of the JSON report, in emission order.
pub const REPORT_FIELDS: [&str; 12] = [
    "schema_version",
    "n",
    "p",
    "seed",
    "config",
    "delta",
    "k_target",
    "outcome",
    "cycles",
    "stages",
    "timing_ms",
    "notes",
];

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("malformed report: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported schema version {0}")]
    Schema(u32),
    #[error("unknown outcome {0:?}")]
    Outcome(String),
}

/// `full`, `partial(r)` or `failed`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Outcome {
    Full,
    Partial(usize),
    Failed,
}

impl Outcome {
    /// Process exit code: 0 full, 2 partial, 3 failed.
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Full => 0,
            Outcome::Partial(_) => 2,
            Outcome::Failed => 3,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Full => write!(f, "full"),
            Outcome::Partial(r) => write!(f, "partial({r})"),
            Outcome::Failed => write!(f, "failed"),
        }
    }
}

impl FromStr for Outcome {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" => Ok(Outcome::Full),
            "failed" => Ok(Outcome::Failed),
            _ => s
                .strip_prefix("partial(")
                .and_then(|r| r.strip_suffix(')'))
                .and_then(|r| r.parse().ok())
                .map(Outcome::Partial)
                .ok_or_else(|| ReportError::Outcome(s.to_string())),
        }
    }
}

impl From<Outcome> for String {
    fn from(o: Outcome) -> String {
        o.to_string()
    }
}

impl TryFrom<String> for Outcome {
    type Error = ReportError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitStats {
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
    pub p4: f64,
    pub s_size: usize,
    /// The two-round split was infeasible and `p1 = 0.9p` was used.
    pub single_round: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorStats {
    /// Pairs whose factor degree fell below target; level 1 is the top pair.
    pub shortfalls: Vec<PairShortfall>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathStats {
    /// Paths per slot before merging.
    pub counts: Vec<usize>,
    pub cycles_closed: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MergeStats {
    pub layers_spent: Vec<u32>,
    /// Usable boosters summed over the rounds of each slot.
    pub booster_counts: Vec<usize>,
    pub retries: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stages {
    pub split: SplitStats,
    pub factors: FactorStats,
    pub paths: PathStats,
    pub merge: MergeStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PackingReport {
    pub schema_version: u32,
    pub n: usize,
    pub p: f64,
    pub seed: u64,
    pub config: PackingConfig,
    pub delta: usize,
    pub k_target: usize,
    pub outcome: Outcome,
    pub cycles: Vec<Vec<Vertex>>,
    pub stages: Stages,
    pub timing_ms: u64,
    /// Stage errors and contract violations, in order of occurrence.
    pub notes: Vec<String>,
}

impl PackingReport {
    pub fn empty(n: usize, p: f64, config: PackingConfig) -> Self {
        PackingReport {
            schema_version: SCHEMA_VERSION,
            n,
            p,
            seed: config.seed,
            config,
            delta: 0,
            k_target: 0,
            outcome: Outcome::Full,
            cycles: Vec::new(),
            stages: Stages::default(),
            timing_ms: 0,
            notes: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Text,
}

pub fn report_serialize(report: &PackingReport, format: ReportFormat) -> Vec<u8> {
    match format {
        ReportFormat::Json => {
            let mut out = serde_json::to_vec_pretty(report).expect("report serializes");
            out.push(b'\n');
            out
        }
        ReportFormat::Text => text(report).into_bytes(),
    }
}

fn text(r: &PackingReport) -> String {
    let mut s = String::new();
    let line = |s: &mut String, k: &str, v: String| s.push_str(&format!("{k:<16}{v}\n"));
    line(&mut s, "n", r.n.to_string());
    line(&mut s, "p", r.p.to_string());
    line(&mut s, "seed", r.seed.to_string());
    line(&mut s, "delta", r.delta.to_string());
    line(&mut s, "k_target", r.k_target.to_string());
    line(&mut s, "outcome", r.outcome.to_string());
    line(&mut s, "cycles", r.cycles.len().to_string());
    line(&mut s, "|S|", r.stages.split.s_size.to_string());
    line(&mut s, "paths", format!("{:?}", r.stages.paths.counts));
    line(
        &mut s,
        "cycles_closed",
        format!("{:?}", r.stages.paths.cycles_closed),
    );
    line(
        &mut s,
        "layers_spent",
        format!("{:?}", r.stages.merge.layers_spent),
    );
    line(
        &mut s,
        "shortfalls",
        r.stages.factors.shortfalls.len().to_string(),
    );
    line(&mut s, "timing_ms", r.timing_ms.to_string());
    for note in &r.notes {
        line(&mut s, "note", note.clone());
    }
    s
}

pub fn parse_report(bytes: &[u8]) -> Result<PackingReport, ReportError> {
    let r: PackingReport = serde_json::from_slice(bytes)?;
    if r.schema_version != SCHEMA_VERSION {
        return Err(ReportError::Schema(r.schema_version));
    }
    Ok(r)
}
