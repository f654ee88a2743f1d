//! Regional color bias: composition-rule masks over the cell grid, absolute
//! and relative per-pair region scores, top-n outlier extraction, and the
//! review-candidate selection.
//!
//! Mask geometry: a split of the axis in proportions p1:p2:p3 puts its
//! boundaries at round(size*p1/sum) and round(size*(p1+p2)/sum). The rule of
//! thirds (1:1:1) on a 64 grid gives boundaries 21 and 43; the golden grid
//! (1:0.618:1) gives 24 and 40. "Dots" are the four boundary intersections
//! dilated to square patches of round(0.09*size) cells per side (6 at 64).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{CellGrid, ScalarGrid};

/// Composition-rule region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskKind {
    Center,
    ThirdsTop,
    ThirdsBottom,
    ThirdsLeft,
    ThirdsRight,
    ThirdsHcenter,
    ThirdsVcenter,
    ThirdsIntersections,
    GoldenBandH,
    GoldenBandV,
    GoldenDots,
}

impl MaskKind {
    pub const ALL: [MaskKind; 11] = [
        MaskKind::Center,
        MaskKind::ThirdsTop,
        MaskKind::ThirdsBottom,
        MaskKind::ThirdsLeft,
        MaskKind::ThirdsRight,
        MaskKind::ThirdsHcenter,
        MaskKind::ThirdsVcenter,
        MaskKind::ThirdsIntersections,
        MaskKind::GoldenBandH,
        MaskKind::GoldenBandV,
        MaskKind::GoldenDots,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MaskKind::Center => "center",
            MaskKind::ThirdsTop => "thirds_top",
            MaskKind::ThirdsBottom => "thirds_bottom",
            MaskKind::ThirdsLeft => "thirds_left",
            MaskKind::ThirdsRight => "thirds_right",
            MaskKind::ThirdsHcenter => "thirds_hcenter",
            MaskKind::ThirdsVcenter => "thirds_vcenter",
            MaskKind::ThirdsIntersections => "thirds_intersections",
            MaskKind::GoldenBandH => "golden_band_h",
            MaskKind::GoldenBandV => "golden_band_v",
            MaskKind::GoldenDots => "golden_dots",
        }
    }
}

impl std::fmt::Display for MaskKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for MaskKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MaskKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown region mask kind: {s:?}"))
    }
}

/// Boolean cell mask for one composition region.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionMask {
    pub kind: MaskKind,
    pub mask: CellGrid<bool>,
    pub cell_count: usize,
}

/// Axis boundaries for proportions p1:p2:p3.
fn split_boundaries(size: usize, p1: f64, p2: f64, p3: f64) -> (usize, usize) {
    let sum = p1 + p2 + p3;
    let b1 = (size as f64 * p1 / sum).round() as usize;
    let b2 = (size as f64 * (p1 + p2) / sum).round() as usize;
    (b1, b2)
}

fn thirds_boundaries(size: usize) -> (usize, usize) {
    split_boundaries(size, 1.0, 1.0, 1.0)
}

fn golden_boundaries(size: usize) -> (usize, usize) {
    split_boundaries(size, 1.0, 0.618, 1.0)
}

/// Side length of a "dot" patch: about 9% of the axis, at least one cell.
fn dot_side(size: usize) -> usize {
    ((size as f64 * 0.09).round() as usize).max(1)
}

/// Square patch of `side` cells centered on the grid line at `boundary`.
fn dot_range(boundary: usize, side: usize, size: usize) -> std::ops::Range<usize> {
    let start = boundary.saturating_sub(side / 2);
    let end = (boundary + side - side / 2).min(size);
    start..end
}

/// Build the deterministic mask for a composition rule on a `size` grid.
pub fn make_mask(kind: MaskKind, size: usize) -> RegionMask {
    assert!(size >= 2, "grid size must be at least 2");
    let (t1, t2) = thirds_boundaries(size);
    let (g1, g2) = golden_boundaries(size);
    let mut mask = CellGrid::filled(size, false);

    let set_rows = |rows: std::ops::Range<usize>, cols: std::ops::Range<usize>, m: &mut CellGrid<bool>| {
        for i in rows {
            for j in cols.clone() {
                *m.get_mut(i, j) = true;
            }
        }
    };

    match kind {
        MaskKind::ThirdsTop => set_rows(0..t1, 0..size, &mut mask),
        MaskKind::ThirdsHcenter => set_rows(t1..t2, 0..size, &mut mask),
        MaskKind::ThirdsBottom => set_rows(t2..size, 0..size, &mut mask),
        MaskKind::ThirdsLeft => set_rows(0..size, 0..t1, &mut mask),
        MaskKind::ThirdsVcenter => set_rows(0..size, t1..t2, &mut mask),
        MaskKind::ThirdsRight => set_rows(0..size, t2..size, &mut mask),
        MaskKind::Center => set_rows(t1..t2, t1..t2, &mut mask),
        MaskKind::GoldenBandH => set_rows(g1..g2, 0..size, &mut mask),
        MaskKind::GoldenBandV => set_rows(0..size, g1..g2, &mut mask),
        MaskKind::ThirdsIntersections => {
            let side = dot_side(size);
            for by in [t1, t2] {
                for bx in [t1, t2] {
                    set_rows(dot_range(by, side, size), dot_range(bx, side, size), &mut mask);
                }
            }
        }
        MaskKind::GoldenDots => {
            let side = dot_side(size);
            for by in [g1, g2] {
                for bx in [g1, g2] {
                    set_rows(dot_range(by, side, size), dot_range(bx, side, size), &mut mask);
                }
            }
        }
    }

    let cell_count = mask.cells().iter().filter(|&&b| b).count();
    debug_assert!(cell_count >= 1 && cell_count < size * size);
    RegionMask { kind, mask, cell_count }
}

/// All eleven masks for one grid size, in canonical order.
pub fn all_masks(size: usize) -> Vec<RegionMask> {
    MaskKind::ALL.into_iter().map(|k| make_mask(k, size)).collect()
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RegionalError {
    #[error("mask {0} selects no cells")]
    EmptyMask(MaskKind),
    #[error("mask {0} has an empty complement; relative score is undefined")]
    EmptyComplement(MaskKind),
    #[error("grid size mismatch: shift grid {0}, mask {1}")]
    GridSizeMismatch(usize, usize),
}

/// Region score of one pair for one mask. `absolute` is the mean in-region
/// shift magnitude; `relative` subtracts the mean over the rest of the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionalScore {
    pub pair_id: usize,
    pub mask_kind: MaskKind,
    pub absolute: f64,
    pub relative: f64,
}

/// Score one pair's per-cell shift-magnitude grid against a mask.
///
/// Means are computed incrementally (Welford), so a uniform grid yields a
/// relative score of exactly zero.
pub fn regional_scores(
    pair_id: usize,
    shift_magnitudes: &ScalarGrid,
    mask: &RegionMask,
) -> Result<RegionalScore, RegionalError> {
    if shift_magnitudes.size() != mask.mask.size() {
        return Err(RegionalError::GridSizeMismatch(shift_magnitudes.size(), mask.mask.size()));
    }
    let total = mask.mask.size() * mask.mask.size();
    if mask.cell_count == 0 {
        return Err(RegionalError::EmptyMask(mask.kind));
    }
    if mask.cell_count == total {
        return Err(RegionalError::EmptyComplement(mask.kind));
    }

    let mut mean_in = 0.0f64;
    let mut n_in = 0u64;
    let mut mean_out = 0.0f64;
    let mut n_out = 0u64;
    for (&v, &inside) in shift_magnitudes.cells().iter().zip(mask.mask.cells()) {
        if inside {
            n_in += 1;
            mean_in += (v - mean_in) / n_in as f64;
        } else {
            n_out += 1;
            mean_out += (v - mean_out) / n_out as f64;
        }
    }
    Ok(RegionalScore {
        pair_id,
        mask_kind: mask.kind,
        absolute: mean_in,
        relative: mean_in - mean_out,
    })
}

/// Ranking key for top-n extraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankBy {
    Absolute,
    Relative,
}

/// Top `n` scores in descending order of the chosen field; ties go to the
/// earlier manifest entry.
pub fn top_n(scores: &[RegionalScore], n: usize, by: RankBy) -> Vec<RegionalScore> {
    let key = |s: &RegionalScore| match by {
        RankBy::Absolute => s.absolute,
        RankBy::Relative => s.relative,
    };
    let mut ranked: Vec<&RegionalScore> = scores.iter().collect();
    ranked.sort_by(|a, b| {
        key(b)
            .partial_cmp(&key(a))
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.pair_id.cmp(&b.pair_id))
    });
    ranked.into_iter().take(n).cloned().collect()
}

/// Per-pair shift statistics feeding the candidate selection: mean and
/// population standard deviation of the per-cell shift magnitudes, and the
/// maximum relative regional score over all mask kinds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairShiftStats {
    pub pair_id: usize,
    pub mean: f64,
    pub stddev: f64,
    pub max_relative: f64,
}

/// Compute a pair's candidate statistics from its shift-magnitude grid.
pub fn shift_stats(
    pair_id: usize,
    shift_magnitudes: &ScalarGrid,
    masks: &[RegionMask],
) -> Result<PairShiftStats, RegionalError> {
    let mut mean = 0.0f64;
    let mut m2 = 0.0f64;
    let mut n = 0u64;
    for &v in shift_magnitudes.cells() {
        n += 1;
        let d = v - mean;
        mean += d / n as f64;
        m2 += d * (v - mean);
    }
    let stddev = (m2 / n as f64).sqrt();

    let mut max_relative = f64::NEG_INFINITY;
    for mask in masks {
        let score = regional_scores(pair_id, shift_magnitudes, mask)?;
        max_relative = max_relative.max(score.relative);
    }
    Ok(PairShiftStats { pair_id, mean, stddev, max_relative })
}

/// Select up to `n` review candidates: the union of the three rankings (by
/// mean, by standard deviation, by max relative score), interleaved rank by
/// rank, de-duplicated by pair id, truncated to `n`. Ties within a ranking
/// go to the earlier manifest entry.
pub fn select_candidates_from_stats(stats: &[PairShiftStats], n: usize) -> Vec<usize> {
    let rank = |key: fn(&PairShiftStats) -> f64| -> Vec<usize> {
        let mut order: Vec<&PairShiftStats> = stats.iter().collect();
        order.sort_by(|a, b| {
            key(b)
                .partial_cmp(&key(a))
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.pair_id.cmp(&b.pair_id))
        });
        order.into_iter().map(|s| s.pair_id).collect()
    };
    let by_mean = rank(|s| s.mean);
    let by_stddev = rank(|s| s.stddev);
    let by_relative = rank(|s| s.max_relative);

    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    'outer: for r in 0..stats.len() {
        for list in [&by_mean, &by_stddev, &by_relative] {
            let id = list[r];
            if seen.insert(id) {
                out.push(id);
                if out.len() == n {
                    break 'outer;
                }
            }
        }
    }
    out
}

/// Candidate selection straight from a pair stream (default n = 400): ranks
/// every pair by its CIELAB cell-shift statistics and the maximum relative
/// region score over all mask kinds, then merges the rankings.
pub fn select_study_candidates<'a>(
    pairs: impl IntoIterator<Item = &'a crate::dataset::ImagePair>,
    n: usize,
    grid_size: usize,
) -> Result<Vec<usize>, RegionalError> {
    let masks = all_masks(grid_size);
    let mut stats = Vec::new();
    for (pair_id, pair) in pairs.into_iter().enumerate() {
        let original = crate::grid::aggregate_to_cells(&pair.original, grid_size);
        let colorized = crate::grid::aggregate_to_cells(&pair.colorized, grid_size);
        let magnitudes = crate::local::cell_lab_distance_grid(&original, &colorized);
        stats.push(shift_stats(pair_id, &magnitudes, &masks)?);
    }
    Ok(select_candidates_from_stats(&stats, n))
}
