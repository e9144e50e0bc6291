//! Acoustic scattering datasets for shape reconstruction.
//!
//! A rigid convex object in a square region is lit by line sources on a ring.
//! [`bem`] solves the 2-D exterior Helmholtz problem, [`loudness`] turns the
//! fields into per-band loudness images, [`raster`] draws the object's
//! occupancy target, [`dataset`] packs and degrades the pairs, [`imed`] scores
//! predictions and [`pipeline`] runs it all as resumable stages.
//!
//! The guide in `book/` covers each piece with examples.

pub mod dataset;
pub mod error;
mod fsutil;
pub mod geometry;
pub mod imed;
pub mod loudness;
pub mod npy;
pub mod pipeline;
pub mod bem;
pub mod quadrature;
pub mod raster;
pub mod scene;
pub mod shapes;
pub mod special;

pub use error::{Error, Result};
pub use geometry::Point;
pub use scene::{Access, GridPoint, Profile, SceneConfig};
pub use shapes::{ConvexPolygon, ShapeRecord, ShapeSetSpec, Split};

/// The guide in `book/`, compiled so its snippets run as doctests.
#[cfg(doctest)]
pub mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/scene.md")]
    pub mod scene {}
    #[doc = include_str!("../../../book/src/shapes.md")]
    pub mod shapes {}
    #[doc = include_str!("../../../book/src/scattering.md")]
    pub mod scattering {}
    #[doc = include_str!("../../../book/src/loudness.md")]
    pub mod loudness {}
    #[doc = include_str!("../../../book/src/raster.md")]
    pub mod raster {}
    #[doc = include_str!("../../../book/src/datasets.md")]
    pub mod datasets {}
    #[doc = include_str!("../../../book/src/imed.md")]
    pub mod imed {}
    #[doc = include_str!("../../../book/src/pipeline.md")]
    pub mod pipeline {}
    #[doc = include_str!("../../../book/src/accuracy.md")]
    pub mod accuracy {}
}
