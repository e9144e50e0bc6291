//! Training pairs: stacked loudness channels as input, occupancy as target,
//! the 24-way degradation matrix, and the on-disk dataset format.

mod degradation;
mod image;
mod store;

pub use degradation::{BandGroup, DegradationSpec, SAMPLING_FACTORS, SOURCE_COUNTS};
pub use image::{assemble, canonical_order, compact, degrade, Channel, ChannelImage};
pub use store::{
    expand_matrix, read_dataset, read_manifest, verify_dataset, write_dataset, DatasetManifest, DatasetMeta,
    DatasetRecord, Layout, RecordEntry, FORMAT_VERSION, MANIFEST_FILE, RECORDS_DIR, SHAPES_FILE,
};
