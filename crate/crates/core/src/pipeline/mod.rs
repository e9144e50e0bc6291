//! Staged, resumable runs over one output directory.
//!
//! ```text
//! <out>/
//!   run.toml                          resolved configuration
//!   shapes/{train,test}.txt           gen-shapes
//!   sim/<split>/<id>/s<j>-b<i>.npy    simulate: one loudness grid per task
//!   sim/<split>/<id>/s<j>-b<i>.json   simulate: task digest, file digest
//!   targets/<split>/<id>.npy          rasterize
//!   datasets/<split>/full/            pack
//!   datasets/<split>/<tag>/           expand, one per degradation spec
//!   logs/                             per-task log lines and stage summaries
//! ```
//!
//! Every stage is a deterministic function of the resolved configuration, so
//! two complete runs produce the same bytes whatever the worker count and
//! however often they were interrupted and resumed. Only `logs/` differs.

mod config;
mod stages;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use config::{DatasetConfig, RunConfig, ShapesConfig, Stage};
pub use stages::{
    evaluate, expand, gen_shapes, object_grid, pack, rasterize, simulate, task_key, TaskFailure,
};

use crate::shapes::Split;
use crate::{Error, Result};

pub const RUN_CONFIG_FILE: &str = "run.toml";

/// One invocation: which stages to run, where, and with how many workers.
#[derive(Debug, Clone)]
pub struct RunPlan {
    pub config_path: Option<PathBuf>,
    pub config: RunConfig,
    pub stages: Vec<Stage>,
    pub out: PathBuf,
    pub workers: usize,
    pub resume: bool,
    /// Split scored by `evaluate`.
    pub evaluate_split: Split,
    /// Root holding `<tag>/predictions/`; defaults to the split's dataset directory.
    pub predictions: Option<PathBuf>,
}

impl RunPlan {
    pub fn new(config: RunConfig, out: impl Into<PathBuf>, stages: Vec<Stage>) -> Self {
        RunPlan {
            config_path: None,
            config,
            stages,
            out: out.into(),
            workers: 1,
            resume: false,
            evaluate_split: Split::Test,
            predictions: None,
        }
    }

    /// Stages must be non-empty, in pipeline order and contiguous; stages
    /// before the first one listed are expected to have run already.
    pub fn validate(&self) -> Result<()> {
        if self.workers == 0 {
            return Err(Error::Contract("worker count must be at least 1".into()));
        }
        let Some(first) = self.stages.first() else {
            return Err(Error::Contract("no stages to run".into()));
        };
        let start = Stage::ALL.iter().position(|s| s == first).expect("every stage is listed");
        if Stage::ALL.get(start..start + self.stages.len()) != Some(self.stages.as_slice()) {
            return Err(Error::Contract(format!(
                "stages {:?} are not a contiguous run of {:?}",
                self.stages.iter().map(|s| s.name()).collect::<Vec<_>>(),
                Stage::ALL.iter().map(|s| s.name()).collect::<Vec<_>>()
            )));
        }
        self.config.validate()
    }

    pub fn shapes_path(&self, split: Split) -> PathBuf {
        self.out.join("shapes").join(format!("{}.txt", split.tag()))
    }

    pub fn sim_dir(&self, split: Split) -> PathBuf {
        self.out.join("sim").join(split.tag())
    }

    pub fn targets_dir(&self, split: Split) -> PathBuf {
        self.out.join("targets").join(split.tag())
    }

    pub fn datasets_dir(&self, split: Split) -> PathBuf {
        self.out.join("datasets").join(split.tag())
    }

    /// The undegraded dataset of `split`.
    pub fn full_dataset_dir(&self, split: Split) -> PathBuf {
        self.datasets_dir(split).join("full")
    }

    pub fn logs_dir(&self) -> PathBuf {
        self.out.join("logs")
    }

    pub fn predictions_root(&self) -> PathBuf {
        self.predictions.clone().unwrap_or_else(|| self.datasets_dir(self.evaluate_split))
    }
}

/// Result of one stage. Failures are recorded, not raised, so the remaining
/// work still runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub stage: Stage,
    pub completed: usize,
    pub skipped: usize,
    pub failures: Vec<TaskFailure>,
    pub notes: Vec<String>,
}

impl StageReport {
    pub(crate) fn new(stage: Stage) -> Self {
        StageReport {
            stage,
            completed: 0,
            skipped: 0,
            failures: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn is_complete(&self) -> bool {
        self.failures.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub stages: Vec<StageReport>,
}

impl RunSummary {
    pub fn is_complete(&self) -> bool {
        self.stages.iter().all(StageReport::is_complete)
    }
}

fn write_run_config(plan: &RunPlan) -> Result<()> {
    let path = plan.out.join(RUN_CONFIG_FILE);
    let text = plan.config.to_toml_string();
    if let Ok(existing) = std::fs::read_to_string(&path) {
        if existing != text && plan.resume {
            return Err(Error::Contract(format!(
                "{} was written by a different configuration; resume needs the same one",
                path.display()
            )));
        }
    }
    crate::fsutil::write_atomic(&path, text.as_bytes())
}

/// Runs the plan's stages in order. A stage with failures does not stop the
/// ones after it; the summary is also written to `logs/summary.json`.
pub fn run(plan: &RunPlan) -> Result<RunSummary> {
    plan.validate()?;
    write_run_config(plan)?;
    let mut reports = Vec::with_capacity(plan.stages.len());
    for &stage in &plan.stages {
        log::info!("stage {stage} starting");
        let report = match stage {
            Stage::GenShapes => gen_shapes(plan)?,
            Stage::Simulate => simulate(plan)?,
            Stage::Rasterize => rasterize(plan)?,
            Stage::Pack => pack(plan)?,
            Stage::Expand => expand(plan)?,
            Stage::Evaluate => evaluate(plan)?,
        };
        log::info!(
            "stage {stage} done: {} completed, {} skipped, {} failed",
            report.completed,
            report.skipped,
            report.failures.len()
        );
        reports.push(report);
    }
    let summary = RunSummary { stages: reports };
    let mut json = serde_json::to_string_pretty(&summary).map_err(|e| Error::format("summary", e.to_string()))?;
    json.push('\n');
    crate::fsutil::write_atomic(&plan.logs_dir().join("summary.json"), json.as_bytes())?;
    Ok(summary)
}

pub(crate) fn require(path: &Path, stage: Stage) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Error::MissingInput {
            stage: stage.name(),
            path: path.to_path_buf(),
        })
    }
}
