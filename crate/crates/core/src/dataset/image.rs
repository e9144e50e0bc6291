use serde::{Deserialize, Serialize};

use super::degradation::DegradationSpec;
use crate::loudness::{LoudnessGrid, UNKNOWN};
use crate::scene::SceneConfig;
use crate::{Error, Result};

/// One input channel: a (source, band) pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Channel {
    pub source: usize,
    pub band: usize,
}

/// Source-major, band-minor order: channel `c = j·n_bands + i`.
pub fn canonical_order(n_sources: usize, n_bands: usize) -> Vec<Channel> {
    (0..n_sources)
        .flat_map(|source| (0..n_bands).map(move |band| Channel { source, band }))
        .collect()
}

/// Stacked loudness planes for one object. Pixel `(r, c)` of channel `k`
/// is `planes[(k·height + r)·width + c]`; `known` is shared by all channels.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelImage {
    pub object_id: String,
    pub height: usize,
    pub width: usize,
    pub channel_order: Vec<Channel>,
    pub planes: Vec<f32>,
    pub known: Vec<bool>,
}

impl ChannelImage {
    pub fn channels(&self) -> usize {
        self.channel_order.len()
    }

    pub fn plane(&self, k: usize) -> &[f32] {
        let n = self.height * self.width;
        &self.planes[k * n..(k + 1) * n]
    }

    pub fn channel_index(&self, ch: Channel) -> Option<usize> {
        self.channel_order.iter().position(|&c| c == ch)
    }

    pub fn shape(&self) -> [usize; 3] {
        [self.channels(), self.height, self.width]
    }

    /// Rebuilds an image from stored planes, taking the mask from the
    /// sentinel in the first channel.
    pub fn from_planes(object_id: String, channel_order: Vec<Channel>, height: usize, width: usize, planes: Vec<f32>) -> Result<Self> {
        if planes.len() != channel_order.len() * height * width {
            return Err(Error::Contract(format!(
                "{} values do not fill {} channels of {height}×{width}",
                planes.len(),
                channel_order.len()
            )));
        }
        let known = if channel_order.is_empty() {
            vec![true; height * width]
        } else {
            planes[..height * width].iter().map(|&v| v != UNKNOWN).collect()
        };
        Ok(ChannelImage {
            object_id,
            height,
            width,
            channel_order,
            planes,
            known,
        })
    }
}

/// Stacks every (source, band) grid of one object in canonical order.
pub fn assemble(grids: &[LoudnessGrid], cfg: &SceneConfig, object_id: &str) -> Result<ChannelImage> {
    let order = canonical_order(cfg.n_sources, cfg.n_bands);
    let dim = cfg.grid_dim();
    let mut planes = Vec::with_capacity(order.len() * dim * dim);
    let mut known: Option<Vec<bool>> = None;
    for ch in &order {
        let grid = grids
            .iter()
            .find(|g| g.source_index == ch.source && g.band == ch.band)
            .ok_or(Error::MissingChannel {
                source_index: ch.source,
                band: ch.band,
            })?;
        if grid.dim != dim {
            return Err(Error::Contract(format!(
                "grid for (source {}, band {}) is {}×{} but the scene is {dim}×{dim}",
                ch.source, ch.band, grid.dim, grid.dim
            )));
        }
        match &known {
            None => known = Some(grid.known.clone()),
            Some(k) if *k != grid.known => {
                return Err(Error::Contract(format!(
                    "mask of (source {}, band {}) differs from the other channels",
                    ch.source, ch.band
                )))
            }
            Some(_) => {}
        }
        planes.extend_from_slice(&grid.values);
    }
    Ok(ChannelImage {
        object_id: object_id.to_string(),
        height: dim,
        width: dim,
        channel_order: order,
        planes,
        known: known.unwrap_or_else(|| vec![true; dim * dim]),
    })
}

/// Keeps the spec's channels and every `ssf`-th row and column; everything
/// else becomes unknown. The frame size is unchanged.
pub fn degrade(img: &ChannelImage, spec: &DegradationSpec) -> Result<ChannelImage> {
    spec.validate()?;
    let mut indices = Vec::new();
    for source in spec.sources() {
        for &band in spec.bands() {
            let ch = Channel { source, band };
            let k = img.channel_index(ch).ok_or_else(|| {
                Error::Contract(format!(
                    "spec {spec} needs channel (source {source}, band {band}), absent from the input"
                ))
            })?;
            indices.push(k);
        }
    }
    let (h, w, ssf) = (img.height, img.width, spec.ssf);
    let known: Vec<bool> = (0..h * w)
        .map(|p| img.known[p] && (p / w) % ssf == 0 && (p % w) % ssf == 0)
        .collect();
    let mut planes = Vec::with_capacity(indices.len() * h * w);
    for &k in &indices {
        planes.extend(img.plane(k).iter().zip(&known).map(|(&v, &keep)| if keep { v } else { UNKNOWN }));
    }
    Ok(ChannelImage {
        object_id: img.object_id.clone(),
        height: h,
        width: w,
        channel_order: indices.iter().map(|&k| img.channel_order[k]).collect(),
        planes,
        known,
    })
}

/// Crops a degraded image to its retained lattice (rows and columns that
/// are multiples of `ssf`).
pub fn compact(img: &ChannelImage, ssf: usize) -> Result<ChannelImage> {
    if ssf == 0 {
        return Err(Error::Contract("sampling factor must be positive".into()));
    }
    let (h, w) = (img.height.div_ceil(ssf), img.width.div_ceil(ssf));
    let pick = |plane: &[f32]| -> Vec<f32> {
        (0..h).flat_map(|r| (0..w).map(move |c| (r, c))).map(|(r, c)| plane[r * ssf * img.width + c * ssf]).collect()
    };
    let mut planes = Vec::with_capacity(img.channels() * h * w);
    for k in 0..img.channels() {
        planes.extend(pick(img.plane(k)));
    }
    let known = (0..h)
        .flat_map(|r| (0..w).map(move |c| (r, c)))
        .map(|(r, c)| img.known[r * ssf * img.width + c * ssf])
        .collect();
    Ok(ChannelImage {
        object_id: img.object_id.clone(),
        height: h,
        width: w,
        channel_order: img.channel_order.clone(),
        planes,
        known,
    })
}
