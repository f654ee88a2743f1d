//! Color bias measurement between an original image dataset and a
//! recolorized counterpart.
//!
//! The library quantifies how an automatic recolorization shifts colors,
//! at three granularities:
//!
//! - **global**: per-channel value-frequency distributions over all pixels,
//!   and their difference between the colorized and original populations;
//! - **local**: per-cell channel shifts on a size-normalized 64x64 grid,
//!   per-category breakdowns, mean CIELAB cell distance, distance to the
//!   reference-average ("mud") image, and HSV saturation shift;
//! - **regional**: shift scores inside composition-rule regions (rule of
//!   thirds, golden-ratio grid, center), with top-n outlier extraction and
//!   review-candidate selection.
//!
//! [`pipeline::run`] wires everything behind a manifest-driven batch run that
//! writes a machine-readable report plus heatmap renderings.

pub mod color;
pub mod dataset;
pub mod global;
pub mod grid;
pub mod local;
pub mod oracle;
pub mod pipeline;
pub mod regional;
pub mod report;
pub mod synth;

pub use color::{lab_distance, luma_grayscale, rgb_to_hsv, rgb_to_lab, Hsv, Lab, Rgb8};
pub use dataset::{load_manifest, load_pair, Category, ImagePair, Manifest, Raster};
pub use grid::{aggregate_to_cells, CellGrid, ColorGrid, ScalarGrid, DEFAULT_GRID_SIZE};
