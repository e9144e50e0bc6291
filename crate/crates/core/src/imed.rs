//! IMage Euclidean Distance between binary occupancy images, and the
//! results-table report built from it.
//!
//! `IMED²(a, b) = Σ_uv G_uv (a_u − b_u)(a_v − b_v)` with the Gaussian pixel
//! coupling `G_uv = exp(−|P_u − P_v|² / 2σ²) / (2πσ²)`. The kernel factors
//! over rows and columns, so `G d` is a 1-D convolution along each axis and
//! `IMED² = ⟨d, G d⟩`. Scores are divided by the distance between the
//! all-ones and all-zeros images of the same size: every entry of `G` is
//! positive, so `⟨d, G d⟩` over `d ∈ {−1, 0, 1}^n` peaks at `d = ±1`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::DegradationSpec;
use crate::fsutil::write_atomic;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// Divide by `imed(all-ones, all-zeros)`, the largest distance between
    /// two binary images of that size.
    #[default]
    OnesVsZeros,
    /// Raw distance.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ImedConfig {
    /// Width of the pixel-coupling Gaussian, in pixels.
    pub sigma: f64,
    pub normalization: Normalization,
}

impl Default for ImedConfig {
    fn default() -> Self {
        ImedConfig { sigma: 1.0, normalization: Normalization::OnesVsZeros }
    }
}

impl ImedConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::Contract(format!("sigma must be positive, got {}", self.sigma)));
        }
        Ok(())
    }
}

/// `exp(−t²/2σ²)` for `t = 0 … n−1`.
fn kernel_1d(n: usize, sigma: f64) -> Vec<f64> {
    (0..n).map(|t| (-((t * t) as f64) / (2.0 * sigma * sigma)).exp()).collect()
}

fn check_dims(a_len: usize, b_len: usize, height: usize, width: usize) -> Result<()> {
    if a_len != height * width || b_len != height * width {
        return Err(Error::Contract(format!(
            "images of {a_len} and {b_len} pixels do not both match {height}×{width}"
        )));
    }
    Ok(())
}

/// IMED between two row-major images of equal size.
pub fn imed(a: &[f64], b: &[f64], height: usize, width: usize, cfg: &ImedConfig) -> Result<f64> {
    cfg.validate()?;
    check_dims(a.len(), b.len(), height, width)?;
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let kr = kernel_1d(height, cfg.sigma);
    let kc = kernel_1d(width, cfg.sigma);
    // Along rows, then along columns; full (untruncated) kernels.
    let mut tmp = vec![0.0; height * width];
    for r in 0..height {
        let row = &d[r * width..(r + 1) * width];
        for c in 0..width {
            tmp[r * width + c] = row.iter().enumerate().map(|(c2, &v)| kc[c.abs_diff(c2)] * v).sum();
        }
    }
    let mut quad = 0.0;
    for r in 0..height {
        for c in 0..width {
            let g: f64 = (0..height).map(|r2| kr[r.abs_diff(r2)] * tmp[r2 * width + c]).sum();
            quad += d[r * width + c] * g;
        }
    }
    let quad = quad / (2.0 * PI * cfg.sigma * cfg.sigma);
    // Rounding can leave a tiny negative for nearly equal images.
    Ok(quad.max(0.0).sqrt())
}

fn as_f64(bits: &[u8]) -> Vec<f64> {
    bits.iter().map(|&b| f64::from(b)).collect()
}

/// IMED of `pred` vs `truth` on square binary images, divided by the IMED of
/// all-ones vs all-zeros unless normalization is switched off.
pub fn normalized_imed(pred: &[u8], truth: &[u8], side: usize, cfg: &ImedConfig) -> Result<f64> {
    check_dims(pred.len(), truth.len(), side, side)?;
    if side == 0 {
        return Ok(0.0);
    }
    let raw = imed(&as_f64(pred), &as_f64(truth), side, side, cfg)?;
    if cfg.normalization == Normalization::None {
        return Ok(raw);
    }
    let ones = vec![1.0; side * side];
    let zeros = vec![0.0; side * side];
    let max = imed(&ones, &zeros, side, side, cfg)?;
    Ok((raw / max).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordScore {
    pub id: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecScores {
    pub spec: DegradationSpec,
    pub mean: f64,
    pub record_count: usize,
    pub records: Vec<RecordScore>,
    pub dataset_digest: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub imed: ImedConfig,
    pub normalizer: String,
    pub config_digest: Option<String>,
    /// Keyed by spec tag.
    pub specs: BTreeMap<String, SpecScores>,
}

impl EvaluationReport {
    pub fn mean_for(&self, spec: &DegradationSpec) -> Option<f64> {
        self.specs.get(&spec.tag()).map(|s| s.mean)
    }

    /// Aligned text table: one row per sampling factor (8, 4, 2, 1), columns
    /// 4 and 8 sources × low/high/full. Missing cells print as `-`.
    pub fn table(&self) -> String {
        let all = DegradationSpec::all();
        let mut s = String::new();
        writeln!(s, "Mean normalized IMED (sigma = {} px)", self.imed.sigma).unwrap();
        writeln!(s).unwrap();
        writeln!(s, "{:>5} |{:^27} |{:^27}", "", "4 sources", "8 sources").unwrap();
        writeln!(
            s,
            "{:>5} | {:>8} {:>8} {:>8} | {:>8} {:>8} {:>8}",
            "SSF", "Low", "High", "Full", "Low", "High", "Full"
        )
        .unwrap();
        writeln!(s, "{}", "-".repeat(63)).unwrap();
        for row in all.chunks(6) {
            write!(s, "{:>5} |", row[0].ssf).unwrap();
            for (k, spec) in row.iter().enumerate() {
                if k == 3 {
                    write!(s, " |").unwrap();
                }
                match self.mean_for(spec) {
                    Some(m) => write!(s, " {m:>8.4}").unwrap(),
                    None => write!(s, " {:>8}", "-").unwrap(),
                }
            }
            writeln!(s).unwrap();
        }
        s
    }

    /// Writes `report.json` and `report.txt` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let mut json = serde_json::to_string_pretty(self).map_err(|e| Error::format("report", e.to_string()))?;
        json.push('\n');
        write_atomic(&dir.join("report.json"), json.as_bytes())?;
        write_atomic(&dir.join("report.txt"), self.table().as_bytes())
    }
}

/// Predictions and targets for one spec, paired by record id.
pub struct SpecEvaluation<'a> {
    pub spec: DegradationSpec,
    pub side: usize,
    /// `(id, prediction, target)`.
    pub pairs: Vec<(&'a str, &'a [u8], &'a [u8])>,
    pub dataset_digest: Option<String>,
}

/// Scores every provided spec; specs that are not provided are simply
/// absent from the report.
pub fn build_report(evaluations: &[SpecEvaluation<'_>], cfg: &ImedConfig, config_digest: Option<String>) -> Result<EvaluationReport> {
    cfg.validate()?;
    let mut specs = BTreeMap::new();
    for ev in evaluations {
        let records = ev
            .pairs
            .par_iter()
            .map(|&(id, pred, truth)| {
                Ok(RecordScore {
                    id: id.to_string(),
                    score: normalized_imed(pred, truth, ev.side, cfg)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mean = if records.is_empty() {
            0.0
        } else {
            records.iter().map(|r| r.score).sum::<f64>() / records.len() as f64
        };
        specs.insert(
            ev.spec.tag(),
            SpecScores {
                spec: ev.spec,
                mean,
                record_count: records.len(),
                records,
                dataset_digest: ev.dataset_digest.clone(),
            },
        );
    }
    Ok(EvaluationReport {
        imed: *cfg,
        normalizer: match cfg.normalization {
            Normalization::OnesVsZeros => "imed(all-ones, all-zeros) at the same image size and sigma".into(),
            Normalization::None => "none".into(),
        },
        config_digest,
        specs,
    })
}
