//! Size-normalized cell grids.
//!
//! Every raster, regardless of resolution and aspect ratio, is reduced to a
//! `grid_size` x `grid_size` array of cells, each holding the area-weighted
//! mean color of its raster region. The resampling is an exact box filter:
//! boundaries are handled with fractional pixel areas computed in integer
//! arithmetic (a pixel spans `grid_size` units per axis, a cell spans
//! `width` resp. `height` units), so cell sums are exact and the result is
//! bit-reproducible regardless of evaluation order.

use serde::{Deserialize, Serialize};

use crate::dataset::Raster;

/// Default grid edge length; the per-cell metrics operate on 64x64 grids.
pub const DEFAULT_GRID_SIZE: usize = 64;

/// Square grid of per-cell values, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellGrid<T> {
    size: usize,
    cells: Vec<T>,
}

/// Grid of mean colors (r, g, b as reals in [0, 255]).
pub type ColorGrid = CellGrid<[f64; 3]>;
/// Grid of per-cell scalar statistics.
pub type ScalarGrid = CellGrid<f64>;

impl<T: Clone> CellGrid<T> {
    pub fn filled(size: usize, value: T) -> Self {
        assert!(size >= 2, "grid size must be at least 2");
        Self { size, cells: vec![value; size * size] }
    }
}

impl<T> CellGrid<T> {
    pub fn from_cells(size: usize, cells: Vec<T>) -> Self {
        assert_eq!(cells.len(), size * size, "cell count must be size^2");
        Self { size, cells }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Cell at row `i`, column `j`.
    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.cells[i * self.size + j]
    }

    pub fn get_mut(&mut self, i: usize, j: usize) -> &mut T {
        &mut self.cells[i * self.size + j]
    }

    pub fn cells(&self) -> &[T] {
        &self.cells
    }

    pub fn cells_mut(&mut self) -> &mut [T] {
        &mut self.cells
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> CellGrid<U> {
        CellGrid { size: self.size, cells: self.cells.iter().map(f).collect() }
    }
}

impl ScalarGrid {
    pub fn zeros(size: usize) -> Self {
        Self::filled(size, 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.cells.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Distribute the interval [lo, hi) over consecutive cells of width `cell_w`
/// (all in integer units), calling `f(cell_index, overlap)` for each overlap.
fn for_each_overlap(lo: usize, hi: usize, cell_w: usize, n_cells: usize, mut f: impl FnMut(usize, u64)) {
    let mut j = lo / cell_w;
    while j < n_cells {
        let cell_lo = j * cell_w;
        if cell_lo >= hi {
            break;
        }
        let cell_hi = cell_lo + cell_w;
        let ov = hi.min(cell_hi) - lo.max(cell_lo);
        f(j, ov as u64);
        j += 1;
    }
}

/// Exact box resample of a raster into a `grid_size` x `grid_size` grid of
/// mean colors. Cell (i, j) averages the raster region
/// [j*W/g, (j+1)*W/g) x [i*H/g, (i+1)*H/g) with fractional pixel areas.
pub fn aggregate_to_cells(raster: &Raster, grid_size: usize) -> ColorGrid {
    let (w, h, g) = (raster.width, raster.height, grid_size);
    assert!(w >= 1 && h >= 1, "raster must be nonempty");
    assert!(g >= 2, "grid size must be at least 2");

    // Integer unit scheme per axis: one pixel = g units, one cell = axis-length
    // units. Overlaps are exact integers and each cell's total weight is w*h.
    let mut sums = vec![[0u64; 3]; g * g];
    let mut row_sums = vec![[0u64; 3]; g];
    for y in 0..h {
        for s in row_sums.iter_mut() {
            *s = [0; 3];
        }
        let row = &raster.pixels[y * w..(y + 1) * w];
        for (x, p) in row.iter().enumerate() {
            let ch = [p.r as u64, p.g as u64, p.b as u64];
            for_each_overlap(x * g, (x + 1) * g, w, g, |j, ov| {
                let s = &mut row_sums[j];
                s[0] += ov * ch[0];
                s[1] += ov * ch[1];
                s[2] += ov * ch[2];
            });
        }
        for_each_overlap(y * g, (y + 1) * g, h, g, |i, ov| {
            for j in 0..g {
                let s = &mut sums[i * g + j];
                s[0] += ov * row_sums[j][0];
                s[1] += ov * row_sums[j][1];
                s[2] += ov * row_sums[j][2];
            }
        });
    }

    let denom = (w as u64 * h as u64) as f64;
    let cells = sums
        .into_iter()
        .map(|s| [s[0] as f64 / denom, s[1] as f64 / denom, s[2] as f64 / denom])
        .collect();
    ColorGrid::from_cells(g, cells)
}
