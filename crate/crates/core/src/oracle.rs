//! Naive single-threaded reference metrics.
//!
//! Everything in this module recomputes the pipeline's statistics from first
//! principles with plain per-pixel loops and f64 arithmetic. It deliberately
//! shares no computation with the main pipeline beyond the color conversions
//! (and the mask-kind vocabulary): the cell averages use floating-point
//! boundary geometry instead of the integer-unit scheme, the histograms have
//! their own binning code, and means are plain sum-then-divide. Agreement
//! between this path and the pipeline is what the planted-bias tests and the
//! acceptance suite check, to 1e-6 per statistic.

use crate::color::{lab_distance, rgb_to_lab, rgb_to_lab_f64, Channel, Rgb8};
use crate::dataset::Raster;
use crate::regional::MaskKind;

/// All metrics of one corpus, recomputed naively.
#[derive(Debug, Clone)]
pub struct OracleMetrics {
    /// Normalized frequency delta per histogram channel.
    pub global_delta: Vec<(Channel, Vec<f64>)>,
    /// Dataset-mean per-cell shift per channel, row-major.
    pub mean_shift: Vec<(Channel, Vec<f64>)>,
    /// Dataset mean of the per-pair mean CIELAB cell distance.
    pub mean_lab_distance: f64,
    /// Reference mud cells when a reference set was given.
    pub mud: Option<Vec<[f64; 3]>>,
    /// Dataset-mean per-cell mud-distance change.
    pub mud_delta: Option<Vec<f64>>,
    /// Per pair, per mask kind: (absolute, relative) region score.
    pub regional_scores: Vec<Vec<(MaskKind, f64, f64)>>,
    /// Per pair: (mean, population stddev, max relative score) of the
    /// CIELAB shift magnitudes.
    pub pair_stats: Vec<(f64, f64, f64)>,
}

/// Cell indices [lo, hi) overlapped by the pixel interval [p0, p1) on an
/// axis with cells of width `cell_extent`.
fn overlapped_cells(p0: f64, p1: f64, cell_extent: f64, g: usize) -> (usize, usize) {
    let lo = ((p0 / cell_extent) as usize).min(g - 1);
    let hi = ((p1 / cell_extent).ceil() as usize).clamp(lo + 1, g);
    (lo, hi)
}

/// Per-cell mean colors by direct geometric overlap in f64.
pub fn cell_means(raster: &Raster, grid_size: usize) -> Vec<[f64; 3]> {
    let g = grid_size;
    let (w, h) = (raster.width, raster.height);
    let cell_w = w as f64 / g as f64;
    let cell_h = h as f64 / g as f64;
    let mut acc = vec![[0.0f64; 4]; g * g];
    for y in 0..h {
        let (y0, y1) = (y as f64, y as f64 + 1.0);
        let (i_lo, i_hi) = overlapped_cells(y0, y1, cell_h, g);
        for x in 0..w {
            let p = raster.pixels[y * w + x];
            let (x0, x1) = (x as f64, x as f64 + 1.0);
            let (j_lo, j_hi) = overlapped_cells(x0, x1, cell_w, g);
            for i in i_lo..i_hi {
                let oy = (y1.min((i + 1) as f64 * cell_h) - y0.max(i as f64 * cell_h)).max(0.0);
                if oy <= 0.0 {
                    continue;
                }
                for j in j_lo..j_hi {
                    let ox =
                        (x1.min((j + 1) as f64 * cell_w) - x0.max(j as f64 * cell_w)).max(0.0);
                    if ox <= 0.0 {
                        continue;
                    }
                    let a = ox * oy;
                    let cell = &mut acc[i * g + j];
                    cell[0] += a * p.r as f64;
                    cell[1] += a * p.g as f64;
                    cell[2] += a * p.b as f64;
                    cell[3] += a;
                }
            }
        }
    }
    acc.into_iter().map(|c| [c[0] / c[3], c[1] / c[3], c[2] / c[3]]).collect()
}

fn histogram_bins(channel: Channel) -> usize {
    match channel {
        Channel::LStar => 101,
        _ => 256,
    }
}

fn histogram_index(channel: Channel, p: Rgb8) -> usize {
    match channel {
        Channel::R => p.r as usize,
        Channel::G => p.g as usize,
        Channel::B => p.b as usize,
        Channel::LStar => rgb_to_lab(p).l_star.round().clamp(0.0, 100.0) as usize,
        Channel::AStar => (rgb_to_lab(p).a_star.floor() + 128.0).clamp(0.0, 255.0) as usize,
        Channel::BStar => (rgb_to_lab(p).b_star.floor() + 128.0).clamp(0.0, 255.0) as usize,
        Channel::Saturation => unreachable!("not a histogram channel"),
    }
}

/// Normalized-frequency delta for one channel over two raster sets.
pub fn histogram_delta(originals: &[Raster], colorized: &[Raster], channel: Channel) -> Vec<f64> {
    let bins = histogram_bins(channel);
    let count_side = |side: &[Raster]| -> (Vec<f64>, f64) {
        let mut counts = vec![0.0f64; bins];
        let mut total = 0.0f64;
        for raster in side {
            for &p in &raster.pixels {
                counts[histogram_index(channel, p)] += 1.0;
                total += 1.0;
            }
        }
        (counts, total)
    };
    let (oc, ot) = count_side(originals);
    let (cc, ct) = count_side(colorized);
    oc.iter().zip(&cc).map(|(&o, &c)| c / ct - o / ot).collect()
}

/// Dataset-mean per-cell channel shift by plain summation.
pub fn mean_shift(
    originals: &[Raster],
    colorized: &[Raster],
    channel: Channel,
    grid_size: usize,
) -> Vec<f64> {
    let n = originals.len() as f64;
    let mut sums = vec![0.0f64; grid_size * grid_size];
    for (o, c) in originals.iter().zip(colorized) {
        let oc = cell_means(o, grid_size);
        let cc = cell_means(c, grid_size);
        for (k, (a, b)) in oc.iter().zip(&cc).enumerate() {
            sums[k] += channel.extract(*b) - channel.extract(*a);
        }
    }
    sums.iter().map(|s| s / n).collect()
}

/// Per-cell CIELAB distances between the two sides of one pair.
pub fn lab_distance_cells(original: &Raster, colorized: &Raster, grid_size: usize) -> Vec<f64> {
    let oc = cell_means(original, grid_size);
    let cc = cell_means(colorized, grid_size);
    oc.iter()
        .zip(&cc)
        .map(|(a, b)| lab_distance(rgb_to_lab_f64(*a), rgb_to_lab_f64(*b)))
        .collect()
}

/// Dataset mean of per-pair mean CIELAB cell distances.
pub fn mean_lab_distance(originals: &[Raster], colorized: &[Raster], grid_size: usize) -> f64 {
    let mut total = 0.0f64;
    for (o, c) in originals.iter().zip(colorized) {
        let cells = lab_distance_cells(o, c, grid_size);
        total += cells.iter().sum::<f64>() / cells.len() as f64;
    }
    total / originals.len() as f64
}

/// Per-cell mean color of the reference set.
pub fn mud(reference: &[Raster], grid_size: usize) -> Vec<[f64; 3]> {
    let n = reference.len() as f64;
    let mut sums = vec![[0.0f64; 3]; grid_size * grid_size];
    for raster in reference {
        for (k, cell) in cell_means(raster, grid_size).into_iter().enumerate() {
            for ch in 0..3 {
                sums[k][ch] += cell[ch];
            }
        }
    }
    sums.into_iter().map(|s| [s[0] / n, s[1] / n, s[2] / n]).collect()
}

/// Dataset-mean per-cell change of CIELAB distance to the mud color.
pub fn mud_delta(
    originals: &[Raster],
    colorized: &[Raster],
    mud_cells: &[[f64; 3]],
    grid_size: usize,
) -> Vec<f64> {
    let n = originals.len() as f64;
    let mut sums = vec![0.0f64; grid_size * grid_size];
    for (o, c) in originals.iter().zip(colorized) {
        let oc = cell_means(o, grid_size);
        let cc = cell_means(c, grid_size);
        for k in 0..sums.len() {
            let m = rgb_to_lab_f64(mud_cells[k]);
            sums[k] += lab_distance(rgb_to_lab_f64(cc[k]), m)
                - lab_distance(rgb_to_lab_f64(oc[k]), m);
        }
    }
    sums.iter().map(|s| s / n).collect()
}

/// Closed-form mask membership, written straight from the boundary formulas
/// (independent of the mask construction in the regional module).
pub fn in_mask(kind: MaskKind, i: usize, j: usize, size: usize) -> bool {
    let bound = |p: f64| (size as f64 * p).round() as usize;
    let (t1, t2) = (bound(1.0 / 3.0), bound(2.0 / 3.0));
    let (g1, g2) = (bound(1.0 / 2.618), bound(1.618 / 2.618));
    let dot = (size as f64 * 0.09).round().max(1.0) as usize;
    let in_dot = |c: usize, b: usize| c + dot / 2 >= b && c + dot / 2 < b + dot;
    match kind {
        MaskKind::Center => (t1..t2).contains(&i) && (t1..t2).contains(&j),
        MaskKind::ThirdsTop => i < t1,
        MaskKind::ThirdsHcenter => (t1..t2).contains(&i),
        MaskKind::ThirdsBottom => i >= t2,
        MaskKind::ThirdsLeft => j < t1,
        MaskKind::ThirdsVcenter => (t1..t2).contains(&j),
        MaskKind::ThirdsRight => j >= t2,
        MaskKind::GoldenBandH => (g1..g2).contains(&i),
        MaskKind::GoldenBandV => (g1..g2).contains(&j),
        MaskKind::ThirdsIntersections => {
            (in_dot(i, t1) || in_dot(i, t2)) && (in_dot(j, t1) || in_dot(j, t2))
        }
        MaskKind::GoldenDots => {
            (in_dot(i, g1) || in_dot(i, g2)) && (in_dot(j, g1) || in_dot(j, g2))
        }
    }
}

/// (absolute, relative) region score of one magnitude grid by plain sums.
pub fn regional_score(magnitudes: &[f64], kind: MaskKind, size: usize) -> (f64, f64) {
    let (mut sum_in, mut n_in) = (0.0f64, 0u64);
    let (mut sum_out, mut n_out) = (0.0f64, 0u64);
    for i in 0..size {
        for j in 0..size {
            let v = magnitudes[i * size + j];
            if in_mask(kind, i, j, size) {
                sum_in += v;
                n_in += 1;
            } else {
                sum_out += v;
                n_out += 1;
            }
        }
    }
    let mean_in = sum_in / n_in as f64;
    let mean_out = sum_out / n_out as f64;
    (mean_in, mean_in - mean_out)
}

/// Candidate statistics of one pair: (mean, population stddev, max relative).
pub fn pair_stats(magnitudes: &[f64], size: usize) -> (f64, f64, f64) {
    let n = magnitudes.len() as f64;
    let mean = magnitudes.iter().sum::<f64>() / n;
    let var = magnitudes.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let max_rel = MaskKind::ALL
        .into_iter()
        .map(|k| regional_score(magnitudes, k, size).1)
        .fold(f64::NEG_INFINITY, f64::max);
    (mean, var.sqrt(), max_rel)
}

/// All six histograms of one side in a single per-pixel pass.
fn histograms_one_pass(side: &[Raster]) -> (Vec<Vec<f64>>, f64) {
    let mut counts: Vec<Vec<f64>> = Channel::HISTOGRAM
        .iter()
        .map(|&ch| vec![0.0f64; histogram_bins(ch)])
        .collect();
    let mut total = 0.0f64;
    for raster in side {
        for &p in &raster.pixels {
            counts[0][p.r as usize] += 1.0;
            counts[1][p.g as usize] += 1.0;
            counts[2][p.b as usize] += 1.0;
            let lab = rgb_to_lab(p);
            counts[3][lab.l_star.round().clamp(0.0, 100.0) as usize] += 1.0;
            counts[4][(lab.a_star.floor() + 128.0).clamp(0.0, 255.0) as usize] += 1.0;
            counts[5][(lab.b_star.floor() + 128.0).clamp(0.0, 255.0) as usize] += 1.0;
            total += 1.0;
        }
    }
    (counts, total)
}

/// Recompute every metric of an aligned corpus. Cell means are computed once
/// per raster and reused, but all statistics remain plain naive sums.
pub fn oracle_metrics(
    originals: &[Raster],
    colorized: &[Raster],
    mud_reference: Option<&[Raster]>,
    grid_size: usize,
) -> OracleMetrics {
    assert_eq!(originals.len(), colorized.len(), "sets must be aligned");
    let g = grid_size;
    let n = originals.len() as f64;

    let (orig_counts, orig_total) = histograms_one_pass(originals);
    let (col_counts, col_total) = histograms_one_pass(colorized);
    let global_delta = Channel::HISTOGRAM
        .into_iter()
        .zip(orig_counts.iter().zip(&col_counts))
        .map(|(ch, (oc, cc))| {
            let delta = oc
                .iter()
                .zip(cc)
                .map(|(&o, &c)| c / col_total - o / orig_total)
                .collect();
            (ch, delta)
        })
        .collect();

    let o_cells: Vec<Vec<[f64; 3]>> = originals.iter().map(|r| cell_means(r, g)).collect();
    let c_cells: Vec<Vec<[f64; 3]>> = colorized.iter().map(|r| cell_means(r, g)).collect();

    let mean_shift_grids = Channel::SHIFT
        .into_iter()
        .map(|ch| {
            let mut sums = vec![0.0f64; g * g];
            for (oc, cc) in o_cells.iter().zip(&c_cells) {
                for (k, (a, b)) in oc.iter().zip(cc).enumerate() {
                    sums[k] += ch.extract(*b) - ch.extract(*a);
                }
            }
            (ch, sums.iter().map(|s| s / n).collect::<Vec<f64>>())
        })
        .collect();

    let magnitudes_all: Vec<Vec<f64>> = o_cells
        .iter()
        .zip(&c_cells)
        .map(|(oc, cc)| {
            oc.iter()
                .zip(cc)
                .map(|(a, b)| lab_distance(rgb_to_lab_f64(*a), rgb_to_lab_f64(*b)))
                .collect()
        })
        .collect();

    let mean_lab_distance = magnitudes_all
        .iter()
        .map(|m| m.iter().sum::<f64>() / m.len() as f64)
        .sum::<f64>()
        / n;

    let mud_cells = mud_reference.map(|r| mud(r, g));
    let mud_delta_cells = mud_cells.as_ref().map(|m| {
        let mut sums = vec![0.0f64; g * g];
        for (oc, cc) in o_cells.iter().zip(&c_cells) {
            for k in 0..sums.len() {
                let lab_m = rgb_to_lab_f64(m[k]);
                sums[k] += lab_distance(rgb_to_lab_f64(cc[k]), lab_m)
                    - lab_distance(rgb_to_lab_f64(oc[k]), lab_m);
            }
        }
        sums.iter().map(|s| s / n).collect::<Vec<f64>>()
    });

    let mut regional_scores_all = Vec::with_capacity(originals.len());
    let mut stats = Vec::with_capacity(originals.len());
    for magnitudes in &magnitudes_all {
        regional_scores_all.push(
            MaskKind::ALL
                .into_iter()
                .map(|k| {
                    let (a, r) = regional_score(magnitudes, k, g);
                    (k, a, r)
                })
                .collect(),
        );
        stats.push(pair_stats(magnitudes, g));
    }

    OracleMetrics {
        global_delta,
        mean_shift: mean_shift_grids,
        mean_lab_distance,
        mud: mud_cells,
        mud_delta: mud_delta_cells,
        regional_scores: regional_scores_all,
        pair_stats: stats,
    }
}
