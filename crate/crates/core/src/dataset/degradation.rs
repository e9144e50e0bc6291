use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Which octave bands a degraded input keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BandGroup {
    /// Bands 0 and 1.
    Low,
    /// Bands 2 and 3.
    High,
    /// All four bands.
    Full,
}

impl BandGroup {
    pub const ALL: [BandGroup; 3] = [BandGroup::Low, BandGroup::High, BandGroup::Full];

    pub fn bands(self) -> &'static [usize] {
        match self {
            BandGroup::Low => &[0, 1],
            BandGroup::High => &[2, 3],
            BandGroup::Full => &[0, 1, 2, 3],
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            BandGroup::Low => "low",
            BandGroup::High => "high",
            BandGroup::Full => "full",
        }
    }
}

impl fmt::Display for BandGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

pub const SOURCE_COUNTS: [usize; 2] = [4, 8];
pub const SAMPLING_FACTORS: [usize; 4] = [1, 2, 4, 8];

/// One cell of the degradation matrix: bands kept, sources kept, and the
/// spatial sampling factor (keep every `ssf`-th row and column).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DegradationSpec {
    pub band_group: BandGroup,
    pub source_count: usize,
    pub ssf: usize,
}

impl DegradationSpec {
    pub fn new(band_group: BandGroup, source_count: usize, ssf: usize) -> Result<Self> {
        let spec = DegradationSpec {
            band_group,
            source_count,
            ssf,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// No degradation at all.
    pub fn identity() -> Self {
        DegradationSpec {
            band_group: BandGroup::Full,
            source_count: 8,
            ssf: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !SOURCE_COUNTS.contains(&self.source_count) {
            return Err(Error::Contract(format!(
                "source count must be 4 or 8, got {}",
                self.source_count
            )));
        }
        if !SAMPLING_FACTORS.contains(&self.ssf) {
            return Err(Error::Contract(format!(
                "spatial sampling factor must be 1, 2, 4 or 8, got {}",
                self.ssf
            )));
        }
        Ok(())
    }

    /// The 24 specs, ordered like the results table: sampling factor 8, 4,
    /// 2, 1 by rows; within a row 4 sources then 8, each low/high/full.
    pub fn all() -> Vec<DegradationSpec> {
        let mut out = Vec::with_capacity(24);
        for &ssf in SAMPLING_FACTORS.iter().rev() {
            for &source_count in &SOURCE_COUNTS {
                for band_group in BandGroup::ALL {
                    out.push(DegradationSpec {
                        band_group,
                        source_count,
                        ssf,
                    });
                }
            }
        }
        out
    }

    /// Source indices kept: every other one of eight when four are used.
    pub fn sources(&self) -> Vec<usize> {
        let stride = 8 / self.source_count;
        (0..8).step_by(stride).collect()
    }

    pub fn bands(&self) -> &'static [usize] {
        self.band_group.bands()
    }

    pub fn channel_count(&self) -> usize {
        self.sources().len() * self.bands().len()
    }

    /// Directory-friendly name such as `low-s8-ssf2`.
    pub fn tag(&self) -> String {
        format!("{}-s{}-ssf{}", self.band_group, self.source_count, self.ssf)
    }
}

impl fmt::Display for DegradationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tag())
    }
}

impl FromStr for DegradationSpec {
    type Err = Error;

    /// Parses the [`DegradationSpec::tag`] form.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Contract(format!("`{s}` is not a degradation tag like `low-s8-ssf2`"));
        let mut parts = s.split('-');
        let group = match parts.next() {
            Some("low") => BandGroup::Low,
            Some("high") => BandGroup::High,
            Some("full") => BandGroup::Full,
            _ => return Err(bad()),
        };
        let sources = parts.next().and_then(|p| p.strip_prefix('s')).and_then(|n| n.parse().ok()).ok_or_else(bad)?;
        let ssf = parts.next().and_then(|p| p.strip_prefix("ssf")).and_then(|n| n.parse().ok()).ok_or_else(bad)?;
        if parts.next().is_some() {
            return Err(bad());
        }
        DegradationSpec::new(group, sources, ssf)
    }
}
