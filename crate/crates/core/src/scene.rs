//! Physical and discretization constants shared by every stage.
//!
//! The simulation region is a square centered on the origin. It is split into
//! square cells whose centers carry the loudness samples; the central square
//! (the inaccessible region) holds the object and is where the occupancy
//! target lives. Cells are indexed row-major from the minimum corner, with
//! `y` increasing with the row index.
//!
//! Configurations are read from TOML files with one key per field of
//! [`SceneConfig`]; every key is required and unknown keys are rejected:
//!
//! ```toml
//! region_side = 5.08
//! cell_size = 0.04
//! inaccessible_side = 1.0
//! source_radius = 5.0
//! n_sources = 8
//! n_bands = 4
//! base_frequency = 125.0
//! sound_speed = 343.0
//! freq_samples_per_band = 8
//! elements_per_wavelength = 8
//! ```

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::geometry::{Point, Square};
use crate::{Error, Result};

/// Relative slack when checking that a side length is a whole number of cells.
const INTEGRAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    /// Side of the full simulation square, m.
    pub region_side: f64,
    /// Edge of one grid cell, m.
    pub cell_size: f64,
    /// Side of the central inaccessible square, m.
    pub inaccessible_side: f64,
    /// Distance of every source from the region center, m.
    pub source_radius: f64,
    pub n_sources: usize,
    pub n_bands: usize,
    /// Octave anchor: band `i` starts at `base_frequency · 2^(i+1)` Hz.
    pub base_frequency: f64,
    /// m/s.
    pub sound_speed: f64,
    /// Trapezoid nodes per band for the band-energy integral.
    pub freq_samples_per_band: usize,
    /// Boundary mesh density at the upper edge of the band being solved.
    pub elements_per_wavelength: usize,
}

/// Named configuration presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// 127×127 grid at 4 cm, 25×25 targets; runs on a laptop.
    Desk,
    /// 512×512 grid at 1 cm, 100×100 targets.
    Paper,
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Profile::Desk),
            "paper" => Ok(Profile::Paper),
            other => Err(Error::Contract(format!(
                "unknown profile `{other}` (expected `desk` or `paper`)"
            ))),
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Profile::Desk => "desk",
            Profile::Paper => "paper",
        })
    }
}

/// Whether loudness can be observed at a grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Access {
    Accessible,
    Inaccessible,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub row: usize,
    pub col: usize,
    pub center: Point,
    pub access: Access,
}

impl SceneConfig {
    pub fn profile(profile: Profile) -> Self {
        match profile {
            Profile::Desk => SceneConfig::desk(),
            Profile::Paper => SceneConfig::paper(),
        }
    }

    /// Desk-scale defaults. The region is 5.08 m rather than 5.12 m so the
    /// 25-cell inaccessible square sits on whole cells of the 127-cell grid.
    pub fn desk() -> Self {
        SceneConfig {
            region_side: 5.08,
            cell_size: 0.04,
            ..SceneConfig::paper()
        }
    }

    pub fn paper() -> Self {
        SceneConfig {
            region_side: 5.12,
            cell_size: 0.01,
            inaccessible_side: 1.0,
            source_radius: 5.0,
            n_sources: 8,
            n_bands: 4,
            base_frequency: 125.0,
            sound_speed: 343.0,
            freq_samples_per_band: 8,
            elements_per_wavelength: 8,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: SceneConfig =
            toml::from_str(text).map_err(|e| Error::format("scene config", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("SceneConfig serializes to TOML")
    }

    /// Hex SHA-256 of the canonical TOML form; identifies the config in manifests.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml_string().as_bytes()))
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("region_side", self.region_side),
            ("cell_size", self.cell_size),
            ("inaccessible_side", self.inaccessible_side),
            ("source_radius", self.source_radius),
            ("base_frequency", self.base_frequency),
            ("sound_speed", self.sound_speed),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Contract(format!("{name} must be positive, got {v}")));
            }
        }
        let n = whole_cells(self.region_side, self.cell_size)
            .ok_or_else(|| Error::Contract("region_side is not a whole number of cells".into()))?;
        let m = whole_cells(self.inaccessible_side, self.cell_size).ok_or_else(|| {
            Error::Contract("inaccessible_side is not a whole number of cells".into())
        })?;
        if m >= n {
            return Err(Error::Contract(
                "inaccessible square must be smaller than the region".into(),
            ));
        }
        if (n - m) % 2 != 0 {
            return Err(Error::Contract(format!(
                "a {m}-cell inaccessible square cannot be centered on a {n}-cell grid"
            )));
        }
        if self.n_sources < 1 || self.n_bands < 1 {
            return Err(Error::Contract("need at least one source and one band".into()));
        }
        if self.freq_samples_per_band < 2 {
            return Err(Error::Contract("freq_samples_per_band must be >= 2".into()));
        }
        if self.elements_per_wavelength < 4 {
            return Err(Error::Contract("elements_per_wavelength must be >= 4".into()));
        }
        Ok(())
    }

    /// Cells along one side of the full grid.
    pub fn grid_dim(&self) -> usize {
        whole_cells(self.region_side, self.cell_size).expect("validated config")
    }

    /// Cells along one side of the inaccessible square (the target image side).
    pub fn inaccessible_dim(&self) -> usize {
        whole_cells(self.inaccessible_side, self.cell_size).expect("validated config")
    }

    /// Index of the first inaccessible row/column.
    pub fn inaccessible_offset(&self) -> usize {
        (self.grid_dim() - self.inaccessible_dim()) / 2
    }

    pub fn region(&self) -> Square {
        Square::centered(self.region_side)
    }

    pub fn inaccessible_square(&self) -> Square {
        Square::centered(self.inaccessible_side)
    }

    pub fn cell_center(&self, row: usize, col: usize) -> Point {
        let h = 0.5 * self.region_side;
        Point::new(
            -h + (col as f64 + 0.5) * self.cell_size,
            -h + (row as f64 + 0.5) * self.cell_size,
        )
    }

    pub fn is_inaccessible(&self, row: usize, col: usize) -> bool {
        let lo = self.inaccessible_offset();
        let hi = lo + self.inaccessible_dim();
        (lo..hi).contains(&row) && (lo..hi).contains(&col)
    }

    /// Position of source `j`, at angle `2πj / n_sources` on the source circle.
    pub fn source_position(&self, j: usize) -> Result<Point> {
        if j >= self.n_sources {
            return Err(Error::Contract(format!(
                "source index {j} out of range (n_sources = {})",
                self.n_sources
            )));
        }
        let theta = j as f64 * 2.0 * PI / self.n_sources as f64;
        Ok(snap_tiny(Point::from_polar(self.source_radius, theta), self.source_radius))
    }

    /// Angular band edges `[ω_i, ω_{i+1})` in rad/s.
    pub fn band_edges(&self, i: usize) -> Result<(f64, f64)> {
        if i >= self.n_bands {
            return Err(Error::Contract(format!(
                "band index {i} out of range (n_bands = {})",
                self.n_bands
            )));
        }
        let lo = 2.0 * PI * self.base_frequency * 2f64.powi(i as i32 + 1);
        Ok((lo, 2.0 * lo))
    }

    pub fn wavenumber(&self, omega: f64) -> f64 {
        omega / self.sound_speed
    }

    /// Every cell center, row-major from the minimum corner.
    pub fn grid_points(&self) -> Vec<GridPoint> {
        let n = self.grid_dim();
        let mut out = Vec::with_capacity(n * n);
        for row in 0..n {
            for col in 0..n {
                out.push(GridPoint {
                    row,
                    col,
                    center: self.cell_center(row, col),
                    access: if self.is_inaccessible(row, col) {
                        Access::Inaccessible
                    } else {
                        Access::Accessible
                    },
                });
            }
        }
        out
    }
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig::desk()
    }
}

fn whole_cells(side: f64, cell: f64) -> Option<usize> {
    let ratio = side / cell;
    let rounded = ratio.round();
    if rounded >= 1.0 && (ratio - rounded).abs() <= INTEGRAL_TOL * rounded.max(1.0) {
        Some(rounded as usize)
    } else {
        None
    }
}

/// cos(π/2) is not exactly zero in floating point; clear such residue.
fn snap_tiny(p: Point, scale: f64) -> Point {
    let eps = 1e-14 * scale;
    Point::new(
        if p.x.abs() < eps { 0.0 } else { p.x },
        if p.y.abs() < eps { 0.0 } else { p.y },
    )
}
