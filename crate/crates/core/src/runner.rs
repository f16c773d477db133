//! End-to-end verification run: load, propagate, check, report.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{Executor, StopSignal};
use crate::network::Network;
use crate::reach::{self, LayerStats, ReachOptions, Splitting};
use crate::verify::{check_property, denormalize_reach, PropertySpec, Status, DEFAULT_CHECK_TOL};
use crate::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Apnm,
    Epnm,
    Papnm,
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Algorithm::Apnm => "apnm",
            Algorithm::Epnm => "epnm",
            Algorithm::Papnm => "papnm",
        })
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub network_path: PathBuf,
    pub property_path: PathBuf,
    pub algorithm: Algorithm,
    pub merge_size: usize,
    pub workers: usize,
    pub timeout: Duration,
    pub tol: Tolerances,
    pub splitting: Splitting,
    pub report_path: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(network_path: impl Into<PathBuf>, property_path: impl Into<PathBuf>) -> Self {
        Self {
            network_path: network_path.into(),
            property_path: property_path.into(),
            algorithm: Algorithm::Epnm,
            merge_size: 2,
            workers: 1,
            timeout: Duration::from_secs(86_400),
            tol: Tolerances::default(),
            splitting: Splitting::default(),
            report_path: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.merge_size == 0 {
            return Err(Error::invalid("RunConfig", "merge size must be at least 1"));
        }
        if self.workers == 0 {
            return Err(Error::invalid("RunConfig", "workers must be at least 1"));
        }
        if self.timeout.is_zero() {
            return Err(Error::invalid("RunConfig", "timeout must be positive"));
        }
        self.tol.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportStatus {
    Holds,
    Violated,
    Unknown,
    Timeout,
    Error,
}

impl std::fmt::Display for ReportStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ReportStatus::Holds => "holds",
            ReportStatus::Violated => "violated",
            ReportStatus::Unknown => "unknown",
            ReportStatus::Timeout => "timeout",
            ReportStatus::Error => "error",
        })
    }
}

impl From<Status> for ReportStatus {
    fn from(s: Status) -> Self {
        match s {
            Status::Holds => ReportStatus::Holds,
            Status::Violated => ReportStatus::Violated,
            Status::Unknown => ReportStatus::Unknown,
            Status::Timeout => ReportStatus::Timeout,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub status: ReportStatus,
    pub algorithm: Algorithm,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub merge_size: Option<usize>,
    pub duration_seconds: f64,
    pub workers: usize,
    pub layers: Vec<LayerStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_sets: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Report {
    pub fn exit_code(&self) -> i32 {
        match self.status {
            ReportStatus::Holds => 0,
            ReportStatus::Violated => 1,
            ReportStatus::Unknown => 2,
            ReportStatus::Timeout => 3,
            ReportStatus::Error => 4,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn summary(&self) -> String {
        let mut s = format!("status: {}\nalgorithm: {}", self.status, self.algorithm);
        if let Some(d) = self.merge_size {
            s += &format!(" (d = {d})");
        }
        s += &format!("\nduration: {:.3} s on {} worker(s)\n", self.duration_seconds, self.workers);
        for l in &self.layers {
            s += &format!(
                "layer {:>3}: {:>9} vertices in, {:>7} sets in, {:>7} sets out\n",
                l.layer, l.vertices_in, l.sets_in, l.sets_out
            );
        }
        if let Some(w) = &self.witness {
            s += &format!("witness: {w:?}\n");
        }
        if let Some(e) = &self.error {
            s += &format!("error: {e}\n");
        }
        s
    }
}

/// Runs the configured pipeline. Never fails: errors become a report with
/// status `error`. The report is also written to `report_path` if given.
pub fn run(cfg: &RunConfig) -> Report {
    let start = Instant::now();
    let stop = StopSignal::with_timeout(cfg.timeout);
    let mut report = Report {
        status: ReportStatus::Error,
        algorithm: cfg.algorithm,
        merge_size: (cfg.algorithm == Algorithm::Papnm).then_some(cfg.merge_size),
        duration_seconds: 0.0,
        workers: cfg.workers,
        layers: Vec::new(),
        output_sets: None,
        witness: None,
        error: None,
    };
    match execute(cfg, stop) {
        Ok((status, witness, layers, sets)) => {
            report.status = status.into();
            report.witness = witness;
            report.layers = layers;
            report.output_sets = Some(sets);
        }
        Err(Error::Cancelled { completed }) => {
            report.status = ReportStatus::Timeout;
            report.layers = completed;
        }
        Err(e) => {
            report.error = Some(format!("{}: {e}", e.module()));
        }
    }
    report.duration_seconds = start.elapsed().as_secs_f64();
    if let Some(path) = &cfg.report_path {
        if let Err(e) = std::fs::write(path, report.to_json()) {
            report.status = ReportStatus::Error;
            report.error = Some(format!("io: {}: {e}", path.display()));
        }
    }
    report
}

type Outcome = (Status, Option<Vec<f64>>, Vec<LayerStats>, usize);

fn execute(cfg: &RunConfig, stop: StopSignal) -> Result<Outcome> {
    cfg.validate()?;
    let net = Network::load(&cfg.network_path)?;
    let spec = PropertySpec::load(&cfg.property_path)?;
    if spec.output_dim() != net.output_dim() {
        return Err(Error::DimensionMismatch {
            op: "run",
            expected: net.output_dim(),
            found: spec.output_dim(),
        });
    }
    let v0 = spec.normalized_input_vertices(&net)?;
    let opts = ReachOptions {
        tol: cfg.tol,
        splitting: cfg.splitting,
        exec: Executor::with_workers(cfg.workers)?,
        stop,
        ..Default::default()
    };
    let (reach, exact) = match cfg.algorithm {
        Algorithm::Apnm => (reach::apnm(&v0, &net, &opts)?, false),
        Algorithm::Epnm => (reach::epnm(&v0, &net, &opts)?, true),
        Algorithm::Papnm => (
            reach::papnm(&v0, &net, cfg.merge_size, &opts)?,
            cfg.merge_size == 1,
        ),
    };
    let sets = reach.polytopes.len();
    let out = denormalize_reach(&reach, &net);
    let verdict = check_property(&out, &spec, exact, DEFAULT_CHECK_TOL)?;
    Ok((verdict.status, verdict.witness, reach.stats, sets))
}
