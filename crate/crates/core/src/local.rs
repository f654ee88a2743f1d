//! Local color bias on the size-normalized cell grid: per-cell channel
//! shifts averaged over the dataset (optionally per category), mean CIELAB
//! cell distance, and the distance-to-mud baseline.
//!
//! Channel functions (Lab, S) are applied to each cell's *mean RGB*, not
//! averaged per pixel after conversion; the cells are formed first, then
//! measured. Dataset-level means use compensated summation in manifest
//! order, so repeated runs are bit-identical.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::color::{lab_distance, rgb_to_lab_f64, Channel};
use crate::dataset::{Category, ImagePair, Raster};
use crate::grid::{aggregate_to_cells, ColorGrid, ScalarGrid};

/// Kahan compensated accumulator. Addition order is fixed by the caller
/// (manifest order), which makes dataset means reproducible bit for bit.
#[derive(Debug, Clone, Copy, Default)]
pub struct Kahan {
    sum: f64,
    compensation: f64,
}

impl Kahan {
    pub fn add(&mut self, x: f64) {
        let y = x - self.compensation;
        let t = self.sum + y;
        self.compensation = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LocalError {
    #[error("empty {0} stream")]
    EmptyStream(&'static str),
    #[error("grid size mismatch: {0} vs {1}")]
    GridSizeMismatch(usize, usize),
}

/// Mean per-cell shift (colorized minus original) of one channel over a set
/// of pairs. `sample_count == 0` flags an empty selection (all-zero grid).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftGrid {
    pub channel: Channel,
    pub category: Option<Category>,
    pub sample_count: u64,
    pub grid: ScalarGrid,
}

/// Per-cell mean color of a reference dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MudImage {
    pub source_count: u64,
    pub grid: ColorGrid,
}

/// Per-cell channel difference between the colorized and original cell
/// means of a single pair.
pub fn cell_shift_from_grids(original: &ColorGrid, colorized: &ColorGrid, channel: Channel) -> ScalarGrid {
    assert_eq!(original.size(), colorized.size());
    let cells = original
        .cells()
        .iter()
        .zip(colorized.cells())
        .map(|(o, c)| channel.extract(*c) - channel.extract(*o))
        .collect();
    ScalarGrid::from_cells(original.size(), cells)
}

/// Per-cell channel shift of one pair at the given grid size.
pub fn cell_shift(pair: &ImagePair, channel: Channel, grid_size: usize) -> ScalarGrid {
    let original = aggregate_to_cells(&pair.original, grid_size);
    let colorized = aggregate_to_cells(&pair.colorized, grid_size);
    cell_shift_from_grids(&original, &colorized, channel)
}

/// Per-cell CIELAB distance between the two sides of a pair (the shift
/// magnitude grid used by the regional metrics and outlier ranking).
pub fn cell_lab_distance_grid(original: &ColorGrid, colorized: &ColorGrid) -> ScalarGrid {
    assert_eq!(original.size(), colorized.size());
    let cells = original
        .cells()
        .iter()
        .zip(colorized.cells())
        .map(|(o, c)| lab_distance(rgb_to_lab_f64(*o), rgb_to_lab_f64(*c)))
        .collect();
    ScalarGrid::from_cells(original.size(), cells)
}

/// Streaming mean of per-cell scalar grids in insertion order.
#[derive(Debug, Clone)]
pub struct GridMean {
    size: usize,
    cells: Vec<Kahan>,
    count: u64,
}

impl GridMean {
    pub fn new(size: usize) -> Self {
        Self { size, cells: vec![Kahan::default(); size * size], count: 0 }
    }

    pub fn add(&mut self, grid: &ScalarGrid) {
        assert_eq!(grid.size(), self.size);
        for (acc, &v) in self.cells.iter_mut().zip(grid.cells()) {
            acc.add(v);
        }
        self.count += 1;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// Mean grid; all-zero when nothing was added.
    pub fn finish(&self) -> ScalarGrid {
        if self.count == 0 {
            return ScalarGrid::zeros(self.size);
        }
        let n = self.count as f64;
        ScalarGrid::from_cells(self.size, self.cells.iter().map(|k| k.value() / n).collect())
    }
}

/// Streaming mean of per-cell colors in insertion order.
#[derive(Debug, Clone)]
pub struct ColorGridMean {
    size: usize,
    cells: Vec<[Kahan; 3]>,
    count: u64,
}

impl ColorGridMean {
    pub fn new(size: usize) -> Self {
        Self { size, cells: vec![[Kahan::default(); 3]; size * size], count: 0 }
    }

    pub fn add(&mut self, grid: &ColorGrid) {
        assert_eq!(grid.size(), self.size);
        for (acc, cell) in self.cells.iter_mut().zip(grid.cells()) {
            for c in 0..3 {
                acc[c].add(cell[c]);
            }
        }
        self.count += 1;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn finish(&self) -> Option<ColorGrid> {
        if self.count == 0 {
            return None;
        }
        let n = self.count as f64;
        let cells = self
            .cells
            .iter()
            .map(|k| [k[0].value() / n, k[1].value() / n, k[2].value() / n])
            .collect();
        Some(ColorGrid::from_cells(self.size, cells))
    }
}

fn matches_filter(pair: &ImagePair, filter: Option<Category>) -> bool {
    filter.is_none_or(|f| pair.category == f)
}

/// Arithmetic mean of per-pair cell shifts for one channel, optionally
/// restricted to a category. An empty selection yields an all-zero grid
/// flagged by `sample_count == 0`.
pub fn mean_shift_grid<'a>(
    pairs: impl IntoIterator<Item = &'a ImagePair>,
    channel: Channel,
    category_filter: Option<Category>,
    grid_size: usize,
) -> ShiftGrid {
    let mut mean = GridMean::new(grid_size);
    for pair in pairs {
        if matches_filter(pair, category_filter) {
            mean.add(&cell_shift(pair, channel, grid_size));
        }
    }
    ShiftGrid {
        channel,
        category: category_filter,
        sample_count: mean.count(),
        grid: mean.finish(),
    }
}

/// Mean over pairs of the per-pair mean CIELAB cell distance.
pub fn mean_cell_lab_distance<'a>(
    pairs: impl IntoIterator<Item = &'a ImagePair>,
    category_filter: Option<Category>,
    grid_size: usize,
) -> Result<f64, LocalError> {
    let mut acc = Kahan::default();
    let mut count = 0u64;
    for pair in pairs {
        if !matches_filter(pair, category_filter) {
            continue;
        }
        let original = aggregate_to_cells(&pair.original, grid_size);
        let colorized = aggregate_to_cells(&pair.colorized, grid_size);
        acc.add(pair_mean_lab_distance(&original, &colorized));
        count += 1;
    }
    if count == 0 {
        return Err(LocalError::EmptyStream("pair"));
    }
    Ok(acc.value() / count as f64)
}

/// Mean over all cells of the CIELAB distance between the two grids.
pub fn pair_mean_lab_distance(original: &ColorGrid, colorized: &ColorGrid) -> f64 {
    let grid = cell_lab_distance_grid(original, colorized);
    let mut acc = Kahan::default();
    for &v in grid.cells() {
        acc.add(v);
    }
    acc.value() / grid.cells().len() as f64
}

/// Per-cell mean color over a reference raster stream: the baseline the
/// distance-to-mud measurement compares against.
pub fn compute_mud<'a>(
    reference: impl IntoIterator<Item = &'a Raster>,
    grid_size: usize,
) -> Result<MudImage, LocalError> {
    let mut mean = ColorGridMean::new(grid_size);
    for raster in reference {
        mean.add(&aggregate_to_cells(raster, grid_size));
    }
    let count = mean.count();
    match mean.finish() {
        Some(grid) => Ok(MudImage { source_count: count, grid }),
        None => Err(LocalError::EmptyStream("reference")),
    }
}

/// Per-cell CIELAB mud-distance change of a single pair:
/// d(colorized cell, mud cell) - d(original cell, mud cell).
/// Negative means the colorized side moved toward the mud color.
pub fn mud_delta_from_grids(original: &ColorGrid, colorized: &ColorGrid, mud: &MudImage) -> ScalarGrid {
    assert_eq!(original.size(), mud.grid.size());
    let cells = original
        .cells()
        .iter()
        .zip(colorized.cells())
        .zip(mud.grid.cells())
        .map(|((o, c), m)| {
            let mud_lab = rgb_to_lab_f64(*m);
            lab_distance(rgb_to_lab_f64(*c), mud_lab) - lab_distance(rgb_to_lab_f64(*o), mud_lab)
        })
        .collect();
    ScalarGrid::from_cells(original.size(), cells)
}

/// Mean over pairs of the per-cell mud-distance change.
pub fn mud_distance_delta<'a>(
    pairs: impl IntoIterator<Item = &'a ImagePair>,
    mud: &MudImage,
) -> Result<ScalarGrid, LocalError> {
    let grid_size = mud.grid.size();
    let mut mean = GridMean::new(grid_size);
    for pair in pairs {
        let original = aggregate_to_cells(&pair.original, grid_size);
        let colorized = aggregate_to_cells(&pair.colorized, grid_size);
        mean.add(&mud_delta_from_grids(&original, &colorized, mud));
    }
    if mean.count() == 0 {
        return Err(LocalError::EmptyStream("pair"));
    }
    Ok(mean.finish())
}
