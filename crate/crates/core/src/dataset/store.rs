//! On-disk datasets.
//!
//! ```text
//! <dataset>/
//!   manifest.json              format version, config, channel order, digests
//!   shapes.txt                 the objects, in record order
//!   records/<id>.input.npy     float32 [channels, height, width]
//!   records/<id>.target.npy    uint8   [side, side]
//! ```
//!
//! Unknown loudness is stored as [`UNKNOWN`]; the mask is recovered from it.
//! A dataset is first written to a `.partial` sibling and renamed into place
//! only when complete, so a failed write never leaves a half-valid dataset.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::degradation::DegradationSpec;
use super::image::{canonical_order, compact, degrade, Channel, ChannelImage};
use crate::fsutil::write_atomic;
use crate::loudness::{FLOOR_DB, UNKNOWN};
use crate::npy;
use crate::raster::OccupancyGrid;
use crate::scene::SceneConfig;
use crate::shapes::{read_shapes, shapes_to_string, ShapeRecord, ShapeSetSpec};
use crate::{Error, Result};

pub const FORMAT_VERSION: &str = "scatterforge-dataset/1";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const SHAPES_FILE: &str = "shapes.txt";
pub const RECORDS_DIR: &str = "records";

/// How degraded inputs are stored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Layout {
    /// Full frame, dropped pixels hold the unknown value.
    #[default]
    FullFrame,
    /// Only the retained lattice (`ceil(side / ssf)` per side).
    Compact,
}

/// What a dataset holds, apart from its records.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetMeta {
    pub scene: SceneConfig,
    pub split: Option<ShapeSetSpec>,
    /// `None` for the undegraded parent.
    pub degradation: Option<DegradationSpec>,
    pub layout: Layout,
    pub parent_digest: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordEntry {
    pub id: String,
    pub input: String,
    pub target: String,
    pub input_sha256: String,
    pub target_sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: String,
    pub producer: String,
    pub config_digest: String,
    pub scene: SceneConfig,
    pub split: Option<ShapeSetSpec>,
    pub degradation: Option<DegradationSpec>,
    pub layout: Layout,
    pub parent_digest: Option<String>,
    pub channel_order: Vec<Channel>,
    pub input_shape: [usize; 3],
    pub input_dtype: String,
    pub target_shape: [usize; 2],
    pub target_dtype: String,
    pub unknown_value: f32,
    pub loudness_floor_db: f64,
    pub record_count: usize,
    pub records: Vec<RecordEntry>,
    /// SHA-256 over `id input_sha256 target_sha256` lines, in record order.
    pub payload_digest: String,
}

/// One object: its geometry, its loudness channels and its occupancy target.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRecord {
    pub shape: ShapeRecord,
    pub input: ChannelImage,
    pub target: OccupancyGrid,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn payload_digest(entries: &[RecordEntry]) -> String {
    let mut h = Sha256::new();
    for e in entries {
        h.update(format!("{} {} {}\n", e.id, e.input_sha256, e.target_sha256).as_bytes());
    }
    hex::encode(h.finalize())
}

impl DatasetMeta {
    fn channel_order(&self) -> Vec<Channel> {
        match &self.degradation {
            None => canonical_order(self.scene.n_sources, self.scene.n_bands),
            Some(spec) => spec
                .sources()
                .into_iter()
                .flat_map(|source| spec.bands().iter().map(move |&band| Channel { source, band }))
                .collect(),
        }
    }

    fn input_side(&self) -> usize {
        let dim = self.scene.grid_dim();
        match (self.layout, &self.degradation) {
            (Layout::Compact, Some(spec)) => dim.div_ceil(spec.ssf),
            _ => dim,
        }
    }
}

/// Writes `records` as a dataset at `dir`, replacing any previous one.
pub fn write_dataset(dir: &Path, meta: &DatasetMeta, records: &[DatasetRecord]) -> Result<DatasetManifest> {
    meta.scene.validate()?;
    let order = meta.channel_order();
    let side = meta.input_side();
    let target_side = meta.scene.inaccessible_dim();
    for rec in records {
        if rec.input.channel_order != order || rec.input.height != side || rec.input.width != side {
            return Err(Error::Contract(format!(
                "record {} has shape {:?} / {} channels; the dataset expects [{}, {side}, {side}]",
                rec.shape.id,
                rec.input.shape(),
                rec.input.channels(),
                order.len()
            )));
        }
        if rec.target.dim != target_side {
            return Err(Error::Contract(format!(
                "record {} target is {}×{}, expected {target_side}×{target_side}",
                rec.shape.id, rec.target.dim, rec.target.dim
            )));
        }
    }
    let name = dir
        .file_name()
        .ok_or_else(|| Error::Contract(format!("{} is not a directory name", dir.display())))?;
    let staging = dir.with_file_name(format!("{}.partial", name.to_string_lossy()));
    if staging.exists() {
        fs::remove_dir_all(&staging).map_err(|e| Error::io(&staging, e))?;
    }
    let rec_dir = staging.join(RECORDS_DIR);
    fs::create_dir_all(&rec_dir).map_err(|e| Error::io(&rec_dir, e))?;

    let mut entries = Vec::with_capacity(records.len());
    for rec in records {
        let id = &rec.shape.id;
        let input = npy::encode_f32(&rec.input.shape(), &rec.input.planes)?;
        let target = npy::encode_u8(&[target_side, target_side], &rec.target.bits)?;
        let input_rel = format!("{RECORDS_DIR}/{id}.input.npy");
        let target_rel = format!("{RECORDS_DIR}/{id}.target.npy");
        write_atomic(&staging.join(&input_rel), &input)?;
        write_atomic(&staging.join(&target_rel), &target)?;
        entries.push(RecordEntry {
            id: id.clone(),
            input: input_rel,
            target: target_rel,
            input_sha256: sha256_hex(&input),
            target_sha256: sha256_hex(&target),
        });
    }
    let shapes: Vec<ShapeRecord> = records.iter().map(|r| r.shape.clone()).collect();
    write_atomic(&staging.join(SHAPES_FILE), shapes_to_string(&shapes).as_bytes())?;

    let manifest = DatasetManifest {
        format_version: FORMAT_VERSION.to_string(),
        producer: format!("scatterforge {}", env!("CARGO_PKG_VERSION")),
        config_digest: meta.scene.digest(),
        scene: meta.scene.clone(),
        split: meta.split.clone(),
        degradation: meta.degradation,
        layout: meta.layout,
        parent_digest: meta.parent_digest.clone(),
        channel_order: order.clone(),
        input_shape: [order.len(), side, side],
        input_dtype: "<f4".into(),
        target_shape: [target_side, target_side],
        target_dtype: "|u1".into(),
        unknown_value: UNKNOWN,
        loudness_floor_db: FLOOR_DB,
        record_count: entries.len(),
        payload_digest: payload_digest(&entries),
        records: entries,
    };
    let mut json = serde_json::to_string_pretty(&manifest).map_err(|e| Error::format("manifest", e.to_string()))?;
    json.push('\n');
    write_atomic(&staging.join(MANIFEST_FILE), json.as_bytes())?;

    if dir.exists() {
        fs::remove_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::rename(&staging, dir).map_err(|e| Error::io(dir, e))?;
    Ok(manifest)
}

pub fn read_manifest(dir: &Path) -> Result<DatasetManifest> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: DatasetManifest =
        serde_json::from_str(&text).map_err(|e| Error::format("manifest", format!("{}: {e}", path.display())))?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(Error::format(
            "manifest",
            format!("unsupported format version `{}` (expected `{FORMAT_VERSION}`)", manifest.format_version),
        ));
    }
    if manifest.record_count != manifest.records.len() {
        return Err(Error::format("manifest", "record_count disagrees with the record list"));
    }
    Ok(manifest)
}

fn read_verified(dir: &Path, rel: &str, want: &str) -> Result<Vec<u8>> {
    let path = dir.join(rel);
    let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
    let got = sha256_hex(&bytes);
    if got != want {
        return Err(Error::format("dataset", format!("{} has digest {got}, manifest says {want}", path.display())));
    }
    Ok(bytes)
}

/// Checks every record file and the payload digest without decoding.
pub fn verify_dataset(dir: &Path) -> Result<DatasetManifest> {
    let manifest = read_manifest(dir)?;
    for e in &manifest.records {
        read_verified(dir, &e.input, &e.input_sha256)?;
        read_verified(dir, &e.target, &e.target_sha256)?;
    }
    if payload_digest(&manifest.records) != manifest.payload_digest {
        return Err(Error::format("manifest", "payload digest does not match the record digests"));
    }
    Ok(manifest)
}

/// Loads and verifies a whole dataset.
pub fn read_dataset(dir: &Path) -> Result<(DatasetManifest, Vec<DatasetRecord>)> {
    let manifest = verify_dataset(dir)?;
    let shapes = read_shapes(&dir.join(SHAPES_FILE))?;
    if shapes.len() != manifest.records.len() {
        return Err(Error::format("dataset", "shapes.txt and the manifest list different objects"));
    }
    let [_, h, w] = manifest.input_shape;
    let [ts, _] = manifest.target_shape;
    let mut records = Vec::with_capacity(shapes.len());
    for (entry, shape) in manifest.records.iter().zip(shapes) {
        if entry.id != shape.id {
            return Err(Error::format("dataset", format!("record {} is paired with shape {}", entry.id, shape.id)));
        }
        let input = npy::decode(&read_verified(dir, &entry.input, &entry.input_sha256)?)?;
        if input.shape != manifest.input_shape {
            return Err(Error::format("dataset", format!("{} has shape {:?}", entry.input, input.shape)));
        }
        let target = npy::decode(&read_verified(dir, &entry.target, &entry.target_sha256)?)?;
        if target.shape != manifest.target_shape {
            return Err(Error::format("dataset", format!("{} has shape {:?}", entry.target, target.shape)));
        }
        let input = ChannelImage::from_planes(entry.id.clone(), manifest.channel_order.clone(), h, w, input.into_f32()?)?;
        let target = OccupancyGrid {
            dim: ts,
            bits: target.into_u8()?,
            object_id: entry.id.clone(),
        };
        records.push(DatasetRecord { shape, input, target });
    }
    Ok((manifest, records))
}

/// Derives every degraded dataset from the parent at `parent`, writing each
/// to `out_root/<tag>` in results-table order.
pub fn expand_matrix(parent: &Path, out_root: &Path, layout: Layout) -> Result<Vec<(DegradationSpec, PathBuf, DatasetManifest)>> {
    let (manifest, records) = read_dataset(parent)?;
    if manifest.degradation.is_some() {
        return Err(Error::Contract(format!("{} is already a degraded dataset", parent.display())));
    }
    let mut out = Vec::with_capacity(24);
    for spec in DegradationSpec::all() {
        let derived = records
            .iter()
            .map(|r| {
                let mut input = degrade(&r.input, &spec)?;
                if layout == Layout::Compact {
                    input = compact(&input, spec.ssf)?;
                }
                Ok(DatasetRecord {
                    shape: r.shape.clone(),
                    input,
                    target: r.target.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let meta = DatasetMeta {
            scene: manifest.scene.clone(),
            split: manifest.split.clone(),
            degradation: Some(spec),
            layout,
            parent_digest: Some(manifest.payload_digest.clone()),
        };
        let dir = out_root.join(spec.tag());
        let m = write_dataset(&dir, &meta, &derived)?;
        out.push((spec, dir, m));
    }
    Ok(out)
}
