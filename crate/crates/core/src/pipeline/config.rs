use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::Layout;
use crate::imed::ImedConfig;
use crate::scene::{Profile, SceneConfig};
use crate::shapes::{ShapeSetSpec, CATEGORIES};
use crate::{Error, Result};

/// Pipeline stages in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    GenShapes,
    Simulate,
    Rasterize,
    Pack,
    Expand,
    Evaluate,
}

impl Stage {
    pub const ALL: [Stage; 6] = [
        Stage::GenShapes,
        Stage::Simulate,
        Stage::Rasterize,
        Stage::Pack,
        Stage::Expand,
        Stage::Evaluate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::GenShapes => "gen-shapes",
            Stage::Simulate => "simulate",
            Stage::Rasterize => "rasterize",
            Stage::Pack => "pack",
            Stage::Expand => "expand",
            Stage::Evaluate => "evaluate",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::Contract(format!("unknown stage `{s}`")))
    }
}

/// Object populations for the two splits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShapesConfig {
    pub train_per_category: usize,
    pub test_per_category: usize,
    pub train_seed: u64,
    pub test_seed: u64,
    pub categories: Vec<usize>,
    /// Test shapes closer than this (mean vertex distance, m) to any training
    /// shape are redrawn. Defaults to the cell size.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub overlap_threshold: Option<f64>,
}

fn default_categories() -> Vec<usize> {
    CATEGORIES.to_vec()
}

impl Default for ShapesConfig {
    fn default() -> Self {
        ShapesConfig {
            train_per_category: 40,
            test_per_category: 10,
            train_seed: 1,
            test_seed: 2,
            categories: default_categories(),
            overlap_threshold: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetConfig {
    pub layout: Layout,
}

/// Everything a run depends on. Loaded from TOML:
///
/// ```toml
/// profile = "desk"          # base for any [scene] key left out
///
/// [scene]
/// elements_per_wavelength = 10
///
/// [shapes]
/// train_per_category = 40
/// test_per_category = 10
/// train_seed = 1
/// test_seed = 2
/// categories = [3, 4, 5, 6, 7]
///
/// [imed]
/// sigma = 1.0
///
/// [dataset]
/// layout = "full-frame"
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub scene: SceneConfig,
    pub shapes: ShapesConfig,
    pub imed: ImedConfig,
    pub dataset: DatasetConfig,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRunConfig {
    profile: Option<Profile>,
    scene: Option<toml::Table>,
    shapes: Option<ShapesConfig>,
    imed: Option<ImedConfig>,
    dataset: Option<DatasetConfig>,
}

impl RunConfig {
    pub fn for_profile(profile: Profile) -> Self {
        RunConfig {
            scene: SceneConfig::profile(profile),
            shapes: ShapesConfig::default(),
            imed: ImedConfig::default(),
            dataset: DatasetConfig::default(),
        }
    }

    /// Parses a run config. `profile` is the base when the file names none.
    pub fn from_toml_str(text: &str, profile: Profile) -> Result<Self> {
        let raw: RawRunConfig = toml::from_str(text).map_err(|e| Error::format("run config", e.to_string()))?;
        let base = SceneConfig::profile(raw.profile.unwrap_or(profile));
        let scene = match raw.scene {
            None => base,
            Some(overrides) => {
                let mut table: toml::Table =
                    toml::from_str(&base.to_toml_string()).expect("scene config round-trips through TOML");
                table.extend(overrides);
                SceneConfig::from_toml_str(&toml::to_string(&table).expect("TOML table serializes"))?
            }
        };
        let cfg = RunConfig {
            scene,
            shapes: raw.shapes.unwrap_or_default(),
            imed: raw.imed.unwrap_or_default(),
            dataset: raw.dataset.unwrap_or_default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("run config serializes to TOML")
    }

    pub fn validate(&self) -> Result<()> {
        self.scene.validate()?;
        let square = self.scene.inaccessible_square();
        self.training_spec().validate(&square)?;
        self.test_spec().validate(&square)?;
        self.imed.validate()?;
        if let Some(t) = self.shapes.overlap_threshold {
            if !(t.is_finite() && t >= 0.0) {
                return Err(Error::Contract(format!("overlap threshold must be non-negative, got {t}")));
            }
        }
        Ok(())
    }

    pub fn training_spec(&self) -> ShapeSetSpec {
        ShapeSetSpec {
            categories: self.shapes.categories.clone(),
            ..ShapeSetSpec::training(self.scene.inaccessible_side, self.shapes.train_per_category, self.shapes.train_seed)
        }
    }

    pub fn test_spec(&self) -> ShapeSetSpec {
        ShapeSetSpec {
            categories: self.shapes.categories.clone(),
            ..ShapeSetSpec::test(self.shapes.test_per_category, self.shapes.test_seed)
        }
    }

    pub fn overlap_threshold(&self) -> f64 {
        self.shapes.overlap_threshold.unwrap_or(self.scene.cell_size)
    }

    /// Sets both split seeds from one base seed.
    pub fn reseed(&mut self, seed: u64) {
        self.shapes.train_seed = seed;
        self.shapes.test_seed = seed.wrapping_add(1);
    }
}
