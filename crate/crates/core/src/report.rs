//! Report emission: one machine-readable JSON document per run, PNG heatmaps
//! with a diverging palette, delta plots, the mud image, and CSV/plain-text
//! side outputs.
//!
//! Everything written here is deterministic: stable key order, no timestamps,
//! and serde_json's shortest-round-trip float encoding, so re-running the
//! same analysis produces byte-identical files and parsing a report yields a
//! value equal to the one emitted.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::color::Rgb8;
use crate::dataset::Category;
use crate::global::ChannelDelta;
use crate::grid::ScalarGrid;
use crate::local::{MudImage, ShiftGrid};
use crate::regional::{MaskKind, RegionalScore};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("cannot write {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("serialization failed: {0}")]
    Serialize(#[from] serde_json::Error),
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), ReportError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|source| ReportError::Io {
            path: parent.to_path_buf(),
            source,
        })?;
    }
    fs::write(path, bytes).map_err(|source| ReportError::Io { path: path.to_path_buf(), source })
}

/// Run parameters recorded in the report. Thread count is deliberately not
/// part of this: reports must be byte-identical across thread counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportParameters {
    pub grid_size: usize,
    pub rgb_bins: usize,
    pub l_star_bins: usize,
    pub ab_bins: usize,
    pub golden_middle_fraction: f64,
    pub dot_side_fraction: f64,
    pub top_n: usize,
    pub candidate_count: usize,
    pub analyses: Vec<String>,
    pub category_filter: Option<Vec<Category>>,
    pub skip_non_rgb: bool,
}

/// Per-pair load failure recorded in the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkipRecord {
    pub index: usize,
    pub original: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct PairSummary {
    pub manifest_entries: u64,
    pub processed: u64,
    pub skipped: u64,
    pub skips: Vec<SkipRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryDistance {
    pub category: Category,
    pub mean_lab_distance: f64,
    pub sample_count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MudReport {
    pub mud: MudImage,
    /// Dataset-mean per-cell change of CIELAB distance to mud
    /// (negative = colorization moved toward the mud color).
    pub delta: ScalarGrid,
}

/// One ranked entry of a top-n list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopEntry {
    pub pair_id: usize,
    pub original: String,
    pub colorized: String,
    pub mask_kind: MaskKind,
    pub absolute: f64,
    pub relative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskTopList {
    pub mask_kind: MaskKind,
    pub entries: Vec<TopEntry>,
}

/// Review candidate: the spec'd top-entry fields (best relative region)
/// plus the shift statistics that ranked it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub pair_id: usize,
    pub original: String,
    pub colorized: String,
    pub mask_kind: MaskKind,
    pub absolute: f64,
    pub relative: f64,
    pub mean_shift: f64,
    pub stddev_shift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct RegionalReport {
    pub scores: Vec<RegionalScore>,
    pub top_absolute: Vec<MaskTopList>,
    pub top_relative: Vec<MaskTopList>,
    pub candidates: Vec<CandidateRecord>,
}

/// The full result of one analysis run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub tool_version: String,
    /// sha256 of the manifest file bytes.
    pub manifest_digest: String,
    pub parameters: ReportParameters,
    pub pairs: PairSummary,
    pub global: Vec<ChannelDelta>,
    pub local: Vec<ShiftGrid>,
    pub per_category: Vec<CategoryDistance>,
    pub mud: Option<MudReport>,
    pub regional: Option<RegionalReport>,
}

/// Serialize a report as a single stable JSON document.
pub fn emit_json(report: &RunReport, path: &Path) -> Result<(), ReportError> {
    let mut bytes = serde_json::to_vec_pretty(report)?;
    bytes.push(b'\n');
    write_bytes(path, &bytes)
}

pub fn read_json(path: &Path) -> Result<RunReport, ReportError> {
    let bytes = fs::read(path).map_err(|source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(serde_json::from_slice(&bytes)?)
}

/// Diverging palette for signed heatmaps, centered at zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DivergingPalette {
    /// Negative values blue, positive red.
    BlueWhiteRed,
    /// Inverted variant (used for b*, where negative means toward blue).
    RedWhiteBlue,
}

const HEAT_BLUE: [f64; 3] = [59.0, 76.0, 192.0];
const HEAT_RED: [f64; 3] = [180.0, 4.0, 38.0];

fn heat_color(t: f64, palette: DivergingPalette) -> Rgb8 {
    let (neg, pos) = match palette {
        DivergingPalette::BlueWhiteRed => (HEAT_BLUE, HEAT_RED),
        DivergingPalette::RedWhiteBlue => (HEAT_RED, HEAT_BLUE),
    };
    let endpoint = if t < 0.0 { neg } else { pos };
    let a = t.abs().min(1.0);
    let mix = |e: f64| (255.0 + a * (e - 255.0)).round() as u8;
    Rgb8::new(mix(endpoint[0]), mix(endpoint[1]), mix(endpoint[2]))
}

/// Render a scalar grid with a diverging palette. The color scale is
/// symmetric about zero with bound `scale` (default: max |cell|); an
/// all-zero grid renders uniformly white.
pub fn render_heatmap(
    grid: &ScalarGrid,
    palette: DivergingPalette,
    scale: Option<f64>,
    upscale: usize,
) -> image::RgbImage {
    let bound = scale.unwrap_or_else(|| grid.max_abs());
    let size = grid.size();
    let up = upscale.max(1) as u32;
    image::RgbImage::from_fn(size as u32 * up, size as u32 * up, |x, y| {
        let v = *grid.get((y / up) as usize, (x / up) as usize);
        let t = if bound > 0.0 { v / bound } else { 0.0 };
        let c = heat_color(t, palette);
        image::Rgb([c.r, c.g, c.b])
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapSidecar {
    pub palette: DivergingPalette,
    pub scale_min: f64,
    pub scale_max: f64,
    pub grid_size: usize,
    pub upscale: usize,
}

/// Write a heatmap PNG plus a JSON sidecar recording the color scale.
pub fn emit_heatmap(
    grid: &ScalarGrid,
    palette: DivergingPalette,
    path: &Path,
    scale: Option<f64>,
    upscale: usize,
) -> Result<(), ReportError> {
    let bound = scale.unwrap_or_else(|| grid.max_abs());
    let img = render_heatmap(grid, palette, Some(bound), upscale);
    save_png(&img, path)?;
    let sidecar = HeatmapSidecar {
        palette,
        scale_min: -bound,
        scale_max: bound,
        grid_size: grid.size(),
        upscale: upscale.max(1),
    };
    let mut bytes = serde_json::to_vec_pretty(&sidecar)?;
    bytes.push(b'\n');
    write_bytes(&path.with_extension("json"), &bytes)
}

fn save_png(img: &image::RgbImage, path: &Path) -> Result<(), ReportError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|source| ReportError::Io {
            path: parent.to_path_buf(),
            source,
        })?;
    }
    img.save(path).map_err(|e| ReportError::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(e.to_string()),
    })
}

/// Write the mud image as an RGB PNG (cells rounded for display) plus a JSON
/// sidecar holding the exact real-valued cells.
pub fn emit_mud(mud: &MudImage, path: &Path, upscale: usize) -> Result<(), ReportError> {
    let size = mud.grid.size() as u32;
    let up = upscale.max(1) as u32;
    let img = image::RgbImage::from_fn(size * up, size * up, |x, y| {
        let c = mud.grid.get((y / up) as usize, (x / up) as usize);
        image::Rgb([
            c[0].round().clamp(0.0, 255.0) as u8,
            c[1].round().clamp(0.0, 255.0) as u8,
            c[2].round().clamp(0.0, 255.0) as u8,
        ])
    });
    save_png(&img, path)?;
    let mut bytes = serde_json::to_vec_pretty(mud)?;
    bytes.push(b'\n');
    write_bytes(&path.with_extension("json"), &bytes)
}

const PLOT_HEIGHT: u32 = 220;
const PLOT_MARGIN: u32 = 8;
const PLOT_BAR_WIDTH: u32 = 3;
const PLOT_BACKGROUND: image::Rgb<u8> = image::Rgb([255, 255, 255]);
const PLOT_AXIS: image::Rgb<u8> = image::Rgb([160, 160, 160]);
const PLOT_BAR: image::Rgb<u8> = image::Rgb([40, 70, 160]);

/// Render a channel delta as a bar plot around a drawn zero axis. The y
/// scale is symmetric about zero.
pub fn render_delta_plot(delta: &ChannelDelta) -> image::RgbImage {
    let bins = delta.delta.len() as u32;
    let width = bins * PLOT_BAR_WIDTH + 2 * PLOT_MARGIN;
    let height = PLOT_HEIGHT + 2 * PLOT_MARGIN;
    let mut img = image::RgbImage::from_pixel(width, height, PLOT_BACKGROUND);

    let bound = delta.delta.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mid = PLOT_MARGIN + PLOT_HEIGHT / 2;
    let half = (PLOT_HEIGHT / 2) as f64 - 1.0;

    // zero axis
    for x in 0..width {
        img.put_pixel(x, mid, PLOT_AXIS);
    }

    for (i, &v) in delta.delta.iter().enumerate() {
        let t = if bound > 0.0 { v / bound } else { 0.0 };
        let extent = (t.abs() * half).round() as u32;
        let x0 = PLOT_MARGIN + i as u32 * PLOT_BAR_WIDTH;
        for dx in 0..PLOT_BAR_WIDTH {
            for dy in 1..=extent {
                let y = if v >= 0.0 { mid - dy } else { mid + dy };
                img.put_pixel(x0 + dx, y, PLOT_BAR);
            }
        }
    }
    img
}

/// Write the delta plot PNG for one channel.
pub fn emit_delta_plot(delta: &ChannelDelta, path: &Path) -> Result<(), ReportError> {
    save_png(&render_delta_plot(delta), path)
}

/// CSV export of the per-category distance table.
pub fn write_category_csv(rows: &[CategoryDistance], path: &Path) -> Result<(), ReportError> {
    let mut out = String::from("category,mean_lab_distance,sample_count\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{}\n",
            row.category, row.mean_lab_distance, row.sample_count
        ));
    }
    write_bytes(path, out.as_bytes())
}

/// Plain-text listing of ranked entries for manual review.
pub fn write_top_list_text(lists: &[MaskTopList], path: &Path) -> Result<(), ReportError> {
    let mut out = String::new();
    for list in lists {
        out.push_str(&format!("# {}\n", list.mask_kind));
        for (rank, e) in list.entries.iter().enumerate() {
            out.push_str(&format!(
                "{:>3}. pair {:>6}  abs {:>10.4}  rel {:>10.4}  {} -> {}\n",
                rank + 1,
                e.pair_id,
                e.absolute,
                e.relative,
                e.original,
                e.colorized
            ));
        }
        out.push('\n');
    }
    write_bytes(path, out.as_bytes())
}

/// Plain-text candidate listing for manual review.
pub fn write_candidates_text(candidates: &[CandidateRecord], path: &Path) -> Result<(), ReportError> {
    let mut out = String::new();
    for (rank, c) in candidates.iter().enumerate() {
        out.push_str(&format!(
            "{:>4}. pair {:>6}  mean {:>9.4}  stddev {:>9.4}  best rel {:>9.4} ({})  {} -> {}\n",
            rank + 1,
            c.pair_id,
            c.mean_shift,
            c.stddev_shift,
            c.relative,
            c.mask_kind,
            c.original,
            c.colorized
        ));
    }
    write_bytes(path, out.as_bytes())
}

/// Convenience wrapper keeping stdout machine-readable: one summary line.
pub fn write_summary_line(out: &mut impl Write, report: &RunReport) -> std::io::Result<()> {
    writeln!(
        out,
        "report processed={} skipped={} analyses={}",
        report.pairs.processed,
        report.pairs.skipped,
        report.parameters.analyses.join("+")
    )
}
