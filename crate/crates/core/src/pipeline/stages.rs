use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{require, RunPlan, Stage, StageReport};
use crate::dataset::{assemble, expand_matrix, read_manifest, write_dataset, DatasetMeta, DatasetRecord, DegradationSpec, Layout};
use crate::fsutil::write_atomic;
use crate::imed::{build_report, SpecEvaluation};
use crate::loudness::{compute_grid_traced, LoudnessGrid};
use crate::npy;
use crate::raster::{rasterize as rasterize_polygon, OccupancyGrid};
use crate::scene::SceneConfig;
use crate::shapes::{generate_split, read_shapes, shapes_to_string, write_shapes, ShapeRecord, Split};
use crate::{Error, Result};

const SPLITS: [Split; 2] = [Split::Training, Split::Test];

/// A unit of work that did not finish.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskFailure {
    pub split: Split,
    pub object: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source_index: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub band: Option<usize>,
    pub error: String,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn gen_shapes(plan: &RunPlan) -> Result<StageReport> {
    let cfg = &plan.config;
    let square = cfg.scene.inaccessible_square();
    let threshold = cfg.overlap_threshold();
    let train = generate_split(&cfg.training_spec(), &square, None, threshold)?;
    let test = generate_split(&cfg.test_spec(), &square, Some(&train), threshold)?;
    write_shapes(&plan.shapes_path(Split::Training), &train)?;
    write_shapes(&plan.shapes_path(Split::Test), &test)?;
    let mut report = StageReport::new(Stage::GenShapes);
    report.completed = train.len() + test.len();
    Ok(report)
}

fn load_shapes(plan: &RunPlan, split: Split) -> Result<Vec<ShapeRecord>> {
    let path = plan.shapes_path(split);
    require(&path, Stage::GenShapes)?;
    read_shapes(&path)
}

/// Content digest of one simulation task: scene, object geometry and channel.
/// A stored grid is reused on resume only when its recorded key matches.
pub fn task_key(scene: &SceneConfig, object: &ShapeRecord, source_index: usize, band: usize) -> String {
    let mut h = Sha256::new();
    h.update(b"scatterforge-task/1\n");
    h.update(scene.to_toml_string().as_bytes());
    h.update(shapes_to_string(std::slice::from_ref(object)).as_bytes());
    h.update(format!("source {source_index} band {band}\n").as_bytes());
    hex::encode(h.finalize())
}

#[derive(Debug, Serialize, Deserialize)]
struct TaskStamp {
    task_key: String,
    sha256: String,
}

struct Task<'a> {
    split: Split,
    object: &'a ShapeRecord,
    source_index: usize,
    band: usize,
}

fn grid_path(plan: &RunPlan, split: Split, object: &str, source_index: usize, band: usize) -> PathBuf {
    plan.sim_dir(split).join(object).join(format!("s{source_index}-b{band}.npy"))
}

/// The stored grid bytes, if they exist and carry the expected task key.
fn stored_grid(npy_path: &Path, key: &str) -> Option<Vec<u8>> {
    let stamp: TaskStamp = serde_json::from_slice(&fs::read(npy_path.with_extension("json")).ok()?).ok()?;
    let bytes = fs::read(npy_path).ok()?;
    (stamp.task_key == key && stamp.sha256 == sha256_hex(&bytes)).then_some(bytes)
}

enum TaskStatus {
    Done { condition: Option<f64> },
    Skipped,
    Failed(String),
}

fn run_task(plan: &RunPlan, task: &Task<'_>) -> Result<TaskStatus> {
    let scene = &plan.config.scene;
    let path = grid_path(plan, task.split, &task.object.id, task.source_index, task.band);
    let key = task_key(scene, task.object, task.source_index, task.band);
    if plan.resume && stored_grid(&path, &key).is_some() {
        return Ok(TaskStatus::Skipped);
    }
    let (grid, condition) = match compute_grid_traced(scene, Some(task.object), task.source_index, task.band) {
        Ok(g) => g,
        Err(e) => return Ok(TaskStatus::Failed(e.to_string())),
    };
    let bytes = npy::encode_f32(&[grid.dim, grid.dim], &grid.values)?;
    write_atomic(&path, &bytes)?;
    let stamp = TaskStamp {
        task_key: key,
        sha256: sha256_hex(&bytes),
    };
    let json = serde_json::to_vec(&stamp).map_err(|e| Error::format("task stamp", e.to_string()))?;
    write_atomic(&path.with_extension("json"), &json)?;
    Ok(TaskStatus::Done { condition })
}

#[derive(Serialize)]
struct TaskLogLine<'a> {
    split: &'a str,
    object: &'a str,
    source: usize,
    band: usize,
    status: &'a str,
    wall_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    condition: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<&'a str>,
}

/// Computes every (object, source, band) loudness grid of both splits on a
/// pool of `plan.workers` threads. Each task writes its own file, so the
/// worker count and completion order never reach the bytes on disk.
pub fn simulate(plan: &RunPlan) -> Result<StageReport> {
    let scene = &plan.config.scene;
    let shapes: Vec<(Split, Vec<ShapeRecord>)> =
        SPLITS.iter().map(|&s| Ok((s, load_shapes(plan, s)?))).collect::<Result<_>>()?;
    let mut tasks = Vec::new();
    for (split, records) in &shapes {
        for object in records {
            for source_index in 0..scene.n_sources {
                for band in 0..scene.n_bands {
                    tasks.push(Task {
                        split: *split,
                        object,
                        source_index,
                        band,
                    });
                }
            }
        }
    }
    // Highest bands have the largest meshes; start them first so the pool
    // does not finish on a long tail.
    tasks.sort_by_key(|t| std::cmp::Reverse(t.band));

    let log_path = plan.logs_dir().join("simulate.jsonl");
    fs::create_dir_all(plan.logs_dir()).map_err(|e| Error::io(plan.logs_dir(), e))?;
    let log = Mutex::new(
        OpenOptions::new()
            .create(true)
            .append(true)
            .open(&log_path)
            .map_err(|e| Error::io(&log_path, e))?,
    );
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.workers)
        .build()
        .map_err(|e| Error::Contract(format!("cannot start {} workers: {e}", plan.workers)))?;
    let total = tasks.len();
    let finished = Mutex::new(0usize);

    let results: Vec<Result<TaskStatus>> = pool.install(|| {
        tasks
            .par_iter()
            .with_max_len(1)
            .map(|task| {
                let start = Instant::now();
                let status = run_task(plan, task);
                let wall_ms = start.elapsed().as_secs_f64() * 1e3;
                let (label, condition, error) = match &status {
                    Ok(TaskStatus::Done { condition }) => ("done", *condition, None),
                    Ok(TaskStatus::Skipped) => ("skipped", None, None),
                    Ok(TaskStatus::Failed(e)) => ("failed", None, Some(e.clone())),
                    Err(e) => ("failed", None, Some(e.to_string())),
                };
                let line = TaskLogLine {
                    split: task.split.tag(),
                    object: &task.object.id,
                    source: task.source_index,
                    band: task.band,
                    status: label,
                    wall_ms,
                    condition,
                    error: error.as_deref(),
                };
                let mut text = serde_json::to_string(&line).expect("log line serializes");
                text.push('\n');
                // A lost log line is not worth failing the task over.
                let _ = log.lock().expect("log lock").write_all(text.as_bytes());
                let mut n = finished.lock().expect("progress lock");
                *n += 1;
                log::info!(
                    "[{}/{total}] {} s{} b{} {label} in {:.0} ms",
                    *n,
                    task.object.id,
                    task.source_index,
                    task.band,
                    wall_ms
                );
                status
            })
            .collect()
    });

    let mut report = StageReport::new(Stage::Simulate);
    for (task, status) in tasks.iter().zip(results) {
        match status? {
            TaskStatus::Done { .. } => report.completed += 1,
            TaskStatus::Skipped => report.skipped += 1,
            TaskStatus::Failed(error) => report.failures.push(TaskFailure {
                split: task.split,
                object: task.object.id.clone(),
                source_index: Some(task.source_index),
                band: Some(task.band),
                error,
            }),
        }
    }
    report.failures.sort_by(|a, b| {
        (a.split.tag(), &a.object, a.source_index, a.band).cmp(&(b.split.tag(), &b.object, b.source_index, b.band))
    });
    Ok(report)
}

pub fn rasterize(plan: &RunPlan) -> Result<StageReport> {
    let scene = &plan.config.scene;
    let side = scene.inaccessible_dim();
    let mut report = StageReport::new(Stage::Rasterize);
    for split in SPLITS {
        for rec in load_shapes(plan, split)? {
            let grid = rasterize_polygon(&rec.polygon, &rec.id, scene)?;
            npy::write_u8(&plan.targets_dir(split).join(format!("{}.npy", rec.id)), &[side, side], &grid.bits)?;
            report.completed += 1;
        }
    }
    Ok(report)
}

fn load_grid(plan: &RunPlan, split: Split, object: &ShapeRecord, source_index: usize, band: usize) -> std::result::Result<LoudnessGrid, String> {
    let scene = &plan.config.scene;
    let path = grid_path(plan, split, &object.id, source_index, band);
    let key = task_key(scene, object, source_index, band);
    let bytes = stored_grid(&path, &key).ok_or_else(|| {
        if path.exists() {
            format!("{} does not match this configuration; rerun simulate", path.display())
        } else {
            format!("{} was not simulated", path.display())
        }
    })?;
    let arr = npy::decode(&bytes).map_err(|e| e.to_string())?;
    let dim = scene.grid_dim();
    if arr.shape != [dim, dim] {
        return Err(format!("{} has shape {:?}, expected [{dim}, {dim}]", path.display(), arr.shape));
    }
    let values = arr.into_f32().map_err(|e| e.to_string())?;
    let known = (0..dim * dim).map(|k| !scene.is_inaccessible(k / dim, k % dim)).collect();
    Ok(LoudnessGrid {
        dim,
        values,
        known,
        band,
        source_index,
        config_digest: scene.digest(),
    })
}

/// Builds the undegraded dataset of each split. Objects with any missing or
/// stale channel are left out and listed as failures.
pub fn pack(plan: &RunPlan) -> Result<StageReport> {
    let scene = &plan.config.scene;
    let side = scene.inaccessible_dim();
    let mut report = StageReport::new(Stage::Pack);
    for split in SPLITS {
        let shapes = load_shapes(plan, split)?;
        if !shapes.is_empty() {
            require(&plan.sim_dir(split), Stage::Simulate)?;
            require(&plan.targets_dir(split), Stage::Rasterize)?;
        }
        let mut records = Vec::with_capacity(shapes.len());
        for shape in shapes {
            let mut grids = Vec::with_capacity(scene.n_sources * scene.n_bands);
            let mut missing = Vec::new();
            for source_index in 0..scene.n_sources {
                for band in 0..scene.n_bands {
                    match load_grid(plan, split, &shape, source_index, band) {
                        Ok(g) => grids.push(g),
                        Err(e) => missing.push(e),
                    }
                }
            }
            if !missing.is_empty() {
                report.failures.push(TaskFailure {
                    split,
                    object: shape.id.clone(),
                    source_index: None,
                    band: None,
                    error: format!("{} of {} channels unusable: {}", missing.len(), scene.n_sources * scene.n_bands, missing[0]),
                });
                continue;
            }
            let input = assemble(&grids, scene, &shape.id)?;
            let target_path = plan.targets_dir(split).join(format!("{}.npy", shape.id));
            require(&target_path, Stage::Rasterize)?;
            let arr = npy::read(&target_path)?;
            if arr.shape != [side, side] {
                return Err(Error::format("target", format!("{} has shape {:?}", target_path.display(), arr.shape)));
            }
            let target = OccupancyGrid {
                dim: side,
                bits: arr.into_u8()?,
                object_id: shape.id.clone(),
            };
            records.push(DatasetRecord { shape, input, target });
        }
        let meta = DatasetMeta {
            scene: scene.clone(),
            split: Some(match split {
                Split::Training => plan.config.training_spec(),
                Split::Test => plan.config.test_spec(),
            }),
            degradation: None,
            layout: Layout::FullFrame,
            parent_digest: None,
        };
        report.completed += records.len();
        write_dataset(&plan.full_dataset_dir(split), &meta, &records)?;
    }
    Ok(report)
}

/// Derives the 24 degraded datasets of each split.
pub fn expand(plan: &RunPlan) -> Result<StageReport> {
    let mut report = StageReport::new(Stage::Expand);
    for split in SPLITS {
        let full = plan.full_dataset_dir(split);
        require(&full, Stage::Pack)?;
        let derived = expand_matrix(&full, &plan.datasets_dir(split), plan.config.dataset.layout)?;
        report.completed += derived.len();
    }
    Ok(report)
}

struct LoadedSpec {
    spec: DegradationSpec,
    side: usize,
    digest: String,
    /// `(id, prediction, target)`.
    pairs: Vec<(String, Vec<u8>, Vec<u8>)>,
}

/// Scores `<root>/<tag>/predictions/<id>.pred.npy` against the targets of the
/// matching degraded dataset and writes `report.json` and `report.txt` to the
/// predictions root. Specs without a predictions directory are left out of
/// the report; records without a prediction are listed as failures.
pub fn evaluate(plan: &RunPlan) -> Result<StageReport> {
    let split = plan.evaluate_split;
    let datasets = plan.datasets_dir(split);
    let root = plan.predictions_root();
    require(&root, Stage::Expand)?;
    let mut report = StageReport::new(Stage::Evaluate);
    let mut loaded: Vec<LoadedSpec> = Vec::new();
    let mut config_digest = None;
    for spec in DegradationSpec::all() {
        let tag = spec.tag();
        let pred_dir = root.join(&tag).join("predictions");
        if !pred_dir.is_dir() {
            continue;
        }
        let data_dir = datasets.join(&tag);
        require(&data_dir, Stage::Expand)?;
        let manifest = read_manifest(&data_dir)?;
        config_digest.get_or_insert_with(|| manifest.config_digest.clone());
        let side = manifest.target_shape[0];
        let mut pairs = Vec::with_capacity(manifest.records.len());
        for entry in &manifest.records {
            let pred_path = pred_dir.join(format!("{}.pred.npy", entry.id));
            if !pred_path.exists() {
                report.failures.push(TaskFailure {
                    split,
                    object: entry.id.clone(),
                    source_index: None,
                    band: None,
                    error: format!("no prediction for {tag} at {}", pred_path.display()),
                });
                continue;
            }
            let pred = npy::read(&pred_path)?;
            if pred.shape != manifest.target_shape {
                return Err(Error::format(
                    "prediction",
                    format!("{} has shape {:?}, expected {:?}", pred_path.display(), pred.shape, manifest.target_shape),
                ));
            }
            let pred = pred.to_binary().map_err(|e| Error::format("prediction", format!("{}: {e}", pred_path.display())))?;
            let target = npy::read(&data_dir.join(&entry.target))?.into_u8()?;
            pairs.push((entry.id.clone(), pred, target));
        }
        report.completed += pairs.len();
        loaded.push(LoadedSpec {
            spec,
            side,
            digest: manifest.payload_digest,
            pairs,
        });
    }
    if loaded.is_empty() {
        report.notes.push(format!("no <tag>/predictions directories under {}", root.display()));
    }
    let evaluations: Vec<SpecEvaluation<'_>> = loaded
        .iter()
        .map(|l| SpecEvaluation {
            spec: l.spec,
            side: l.side,
            pairs: l.pairs.iter().map(|(id, p, t)| (id.as_str(), p.as_slice(), t.as_slice())).collect(),
            dataset_digest: Some(l.digest.clone()),
        })
        .collect();
    let scores = build_report(&evaluations, &plan.config.imed, config_digest)?;
    scores.write(&root)?;
    Ok(report)
}

/// One loudness grid of a generated object: the stored one when it matches
/// the configuration, otherwise computed on the spot.
pub fn object_grid(plan: &RunPlan, split: Split, object_id: &str, source_index: usize, band: usize) -> Result<LoudnessGrid> {
    let shapes = load_shapes(plan, split)?;
    let object = shapes
        .iter()
        .find(|r| r.id == object_id)
        .ok_or_else(|| Error::Contract(format!("no object `{object_id}` in the {} split", split.tag())))?;
    match load_grid(plan, split, object, source_index, band) {
        Ok(g) => Ok(g),
        Err(_) => crate::loudness::compute_grid(&plan.config.scene, Some(object), source_index, band),
    }
}
