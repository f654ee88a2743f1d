//! Manifest-driven dataset ingestion.
//!
//! The analysis pipeline never walks directories; it consumes an explicit
//! manifest (CSV with header `original,colorized,category`, or a JSON array
//! of objects with the same fields) whose relative paths are resolved against
//! the manifest's own directory. Entry order is significant: it defines the
//! deterministic aggregation order of every metric.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use image::DynamicImage;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::color::{luma_grayscale, Rgb8};

/// The ten dataset categories plus the catch-all for anything unrecognized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Urban,
    HomeOrHotel,
    NatureLandscape,
    Unclassified,
    Workplace,
    SportsAndLeisure,
    Cultural,
    ShoppingAndDining,
    Transportation,
    Industrial,
    Other,
}

impl Category {
    pub const ALL: [Category; 11] = [
        Category::Urban,
        Category::HomeOrHotel,
        Category::NatureLandscape,
        Category::Unclassified,
        Category::Workplace,
        Category::SportsAndLeisure,
        Category::Cultural,
        Category::ShoppingAndDining,
        Category::Transportation,
        Category::Industrial,
        Category::Other,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Category::Urban => "urban",
            Category::HomeOrHotel => "home_or_hotel",
            Category::NatureLandscape => "nature_landscape",
            Category::Unclassified => "unclassified",
            Category::Workplace => "workplace",
            Category::SportsAndLeisure => "sports_and_leisure",
            Category::Cultural => "cultural",
            Category::ShoppingAndDining => "shopping_and_dining",
            Category::Transportation => "transportation",
            Category::Industrial => "industrial",
            Category::Other => "other",
        }
    }

    /// Parse a category tag. Matching is case-insensitive and treats spaces
    /// and hyphens as underscores; anything unrecognized yields `None` (the
    /// caller maps it to `Other` and records a warning).
    pub fn parse(raw: &str) -> Option<Category> {
        let norm: String = raw
            .trim()
            .chars()
            .map(|c| match c {
                ' ' | '-' => '_',
                c => c.to_ascii_lowercase(),
            })
            .collect();
        Category::ALL.into_iter().find(|c| c.name() == norm)
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Decoded 8-bit RGB image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<Rgb8>,
}

impl Raster {
    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }
}

/// One manifest row. `colorized` may be absent for grayscale-export runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Path as written in the manifest.
    pub original: String,
    pub colorized: Option<String>,
    pub category: Category,
    /// Resolved absolute/relative-to-cwd paths.
    #[serde(skip)]
    pub original_path: PathBuf,
    #[serde(skip)]
    pub colorized_path: Option<PathBuf>,
}

#[derive(Debug, Clone, Default)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
    /// Warning records from loading (unknown categories etc).
    pub warnings: Vec<String>,
}

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("cannot read manifest {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("manifest row {row}: {message}")]
    MalformedRow { row: usize, message: String },
    #[error("malformed manifest: {0}")]
    Malformed(String),
    #[error("duplicate original path in manifest: {0}")]
    DuplicateOriginal(String),
}

#[derive(Debug, Error)]
pub enum PairError {
    #[error("cannot decode {path}: {message}")]
    Decode { path: PathBuf, message: String },
    #[error("missing colorized path for {0}")]
    MissingColorized(String),
    #[error(
        "dimension mismatch: original {original_path} is {ow}x{oh}, colorized {colorized_path} is {cw}x{ch}"
    )]
    DimensionMismatch {
        original_path: PathBuf,
        colorized_path: PathBuf,
        ow: usize,
        oh: usize,
        cw: usize,
        ch: usize,
    },
}

/// Original/colorized pair decoded to equal-sized rasters.
#[derive(Debug, Clone)]
pub struct ImagePair {
    pub original: Raster,
    pub colorized: Raster,
    pub category: Category,
    /// True when either side was converted from a non-RGB source format.
    pub converted_from_non_rgb: bool,
}

#[derive(Debug, Deserialize)]
struct JsonRow {
    original: String,
    #[serde(default)]
    colorized: Option<String>,
    category: String,
}

fn resolve(base: &Path, raw: &str) -> PathBuf {
    let p = Path::new(raw);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Load and validate a manifest. CSV unless the extension is `.json`.
/// Unknown categories map to [`Category::Other`] with a warning record;
/// duplicate original paths are an error.
pub fn load_manifest(path: &Path) -> Result<Manifest, ManifestError> {
    let base = path.parent().unwrap_or(Path::new(".")).to_path_buf();
    let is_json = path
        .extension()
        .map(|e| e.eq_ignore_ascii_case("json"))
        .unwrap_or(false);

    let rows: Vec<(usize, JsonRow)> = if is_json {
        let text = fs::read_to_string(path).map_err(|source| ManifestError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let rows: Vec<JsonRow> = serde_json::from_str(&text)
            .map_err(|e| ManifestError::Malformed(format!("{path:?}: {e}")))?;
        rows.into_iter().enumerate().map(|(i, r)| (i + 1, r)).collect()
    } else {
        let file = fs::File::open(path).map_err(|source| ManifestError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(file);
        {
            let headers = reader
                .headers()
                .map_err(|e| ManifestError::Malformed(e.to_string()))?;
            let names: Vec<&str> = headers.iter().collect();
            if names != ["original", "colorized", "category"] {
                return Err(ManifestError::Malformed(format!(
                    "expected header original,colorized,category, found {}",
                    names.join(",")
                )));
            }
        }
        let mut rows = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let row = i + 2; // header is row 1
            let record = record.map_err(|e| ManifestError::MalformedRow {
                row,
                message: e.to_string(),
            })?;
            if record.len() != 3 {
                return Err(ManifestError::MalformedRow {
                    row,
                    message: format!("expected 3 fields, found {}", record.len()),
                });
            }
            let colorized = record[1].trim();
            rows.push((
                row,
                JsonRow {
                    original: record[0].to_string(),
                    colorized: (!colorized.is_empty()).then(|| colorized.to_string()),
                    category: record[2].to_string(),
                },
            ));
        }
        rows
    };

    let mut manifest = Manifest::default();
    let mut seen: HashSet<PathBuf> = HashSet::new();
    for (row, r) in rows {
        if r.original.trim().is_empty() {
            return Err(ManifestError::MalformedRow {
                row,
                message: "empty original path".into(),
            });
        }
        let original_path = resolve(&base, &r.original);
        if !seen.insert(original_path.clone()) {
            return Err(ManifestError::DuplicateOriginal(r.original));
        }
        let category = match Category::parse(&r.category) {
            Some(c) => c,
            None => {
                manifest.warnings.push(format!(
                    "row {row}: unknown category {:?} for {}, using \"other\"",
                    r.category, r.original
                ));
                Category::Other
            }
        };
        let colorized_path = r.colorized.as_deref().map(|c| resolve(&base, c));
        manifest.entries.push(ManifestEntry {
            original: r.original,
            colorized: r.colorized,
            category,
            original_path,
            colorized_path,
        });
    }
    Ok(manifest)
}

/// Decode an image file to an 8-bit RGB raster. Non-RGB sources (grayscale,
/// palette, alpha) are converted; 16-bit channels are reduced with
/// round-to-nearest (v -> round(v / 257)). Returns whether a conversion from
/// a non-8-bit-RGB representation happened.
pub fn decode_raster(path: &Path) -> Result<(Raster, bool), PairError> {
    let img = image::open(path).map_err(|e| PairError::Decode {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let converted = !matches!(img, DynamicImage::ImageRgb8(_));
    let rgb = match img {
        DynamicImage::ImageRgb8(buf) => buf,
        DynamicImage::ImageRgb16(buf) => {
            let (w, h) = (buf.width(), buf.height());
            let data: Vec<u8> = buf.into_raw().into_iter().map(scale_16_to_8).collect();
            image::RgbImage::from_raw(w, h, data).expect("converted buffer size")
        }
        DynamicImage::ImageRgba16(buf) => {
            let (w, h) = (buf.width(), buf.height());
            let mut data = Vec::with_capacity((w * h * 3) as usize);
            for px in buf.pixels() {
                data.extend([scale_16_to_8(px.0[0]), scale_16_to_8(px.0[1]), scale_16_to_8(px.0[2])]);
            }
            image::RgbImage::from_raw(w, h, data).expect("converted buffer size")
        }
        DynamicImage::ImageLuma16(buf) => {
            let (w, h) = (buf.width(), buf.height());
            let mut data = Vec::with_capacity((w * h * 3) as usize);
            for px in buf.pixels() {
                let v = scale_16_to_8(px.0[0]);
                data.extend([v, v, v]);
            }
            image::RgbImage::from_raw(w, h, data).expect("converted buffer size")
        }
        DynamicImage::ImageLumaA16(buf) => {
            let (w, h) = (buf.width(), buf.height());
            let mut data = Vec::with_capacity((w * h * 3) as usize);
            for px in buf.pixels() {
                let v = scale_16_to_8(px.0[0]);
                data.extend([v, v, v]);
            }
            image::RgbImage::from_raw(w, h, data).expect("converted buffer size")
        }
        other => other.to_rgb8(),
    };
    let (width, height) = (rgb.width() as usize, rgb.height() as usize);
    let pixels = rgb
        .pixels()
        .map(|p| Rgb8::new(p.0[0], p.0[1], p.0[2]))
        .collect();
    Ok((Raster { width, height, pixels }, converted))
}

/// 16-bit -> 8-bit with round-to-nearest. 65535 = 255 * 257, so this is
/// exactly round(v * 255 / 65535).
fn scale_16_to_8(v: u16) -> u8 {
    ((v as u32 + 128) / 257) as u8
}

/// Save a raster as an RGB PNG.
pub fn save_raster(raster: &Raster, path: &Path) -> Result<(), PairError> {
    let data: Vec<u8> = raster.pixels.iter().flat_map(|p| [p.r, p.g, p.b]).collect();
    image::RgbImage::from_raw(raster.width as u32, raster.height as u32, data)
        .expect("buffer size")
        .save(path)
        .map_err(|e| PairError::Decode { path: path.to_path_buf(), message: e.to_string() })
}

/// Decode both sides of a manifest entry and require equal dimensions.
pub fn load_pair(entry: &ManifestEntry) -> Result<ImagePair, PairError> {
    let colorized_path = entry
        .colorized_path
        .as_ref()
        .ok_or_else(|| PairError::MissingColorized(entry.original.clone()))?;
    let (original, conv_o) = decode_raster(&entry.original_path)?;
    let (colorized, conv_c) = decode_raster(colorized_path)?;
    if original.width != colorized.width || original.height != colorized.height {
        return Err(PairError::DimensionMismatch {
            original_path: entry.original_path.clone(),
            colorized_path: colorized_path.clone(),
            ow: original.width,
            oh: original.height,
            cw: colorized.width,
            ch: colorized.height,
        });
    }
    Ok(ImagePair {
        original,
        colorized,
        category: entry.category,
        converted_from_non_rgb: conv_o || conv_c,
    })
}

#[derive(Debug, Error)]
pub enum ExportError {
    #[error(transparent)]
    Pair(#[from] PairError),
    #[error("cannot write {path}: {message}")]
    Write { path: PathBuf, message: String },
}

/// Apply the ITU-R 601-2 luma transform to every original in the manifest and
/// write the results as PNGs into `out_dir`, named `{index:06}_{stem}.png`.
/// With `replicate_channels` the output is a three-channel image with the
/// luma value in every channel; otherwise single-channel grayscale.
pub fn export_grayscale(
    manifest: &Manifest,
    out_dir: &Path,
    replicate_channels: bool,
) -> Result<usize, ExportError> {
    fs::create_dir_all(out_dir).map_err(|e| ExportError::Write {
        path: out_dir.to_path_buf(),
        message: e.to_string(),
    })?;
    let mut written = 0usize;
    for (index, entry) in manifest.entries.iter().enumerate() {
        let (raster, _) = decode_raster(&entry.original_path)?;
        let stem = entry
            .original_path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "image".into());
        let out_path = out_dir.join(format!("{index:06}_{stem}.png"));
        let luma: Vec<u8> = raster.pixels.iter().map(|&p| luma_grayscale(p)).collect();
        let (w, h) = (raster.width as u32, raster.height as u32);
        let result = if replicate_channels {
            let data: Vec<u8> = luma.iter().flat_map(|&v| [v, v, v]).collect();
            image::RgbImage::from_raw(w, h, data)
                .expect("buffer size")
                .save(&out_path)
        } else {
            image::GrayImage::from_raw(w, h, luma)
                .expect("buffer size")
                .save(&out_path)
        };
        result.map_err(|e| ExportError::Write {
            path: out_path.clone(),
            message: e.to_string(),
        })?;
        written += 1;
    }
    Ok(written)
}
