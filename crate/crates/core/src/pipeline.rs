//! Batch orchestration: manifest in, report plus renderings out.
//!
//! Per-pair work (decode, cell aggregation, histograms) runs on a worker
//! pool in fixed-size chunks; all dataset-level reduction happens on one
//! thread in manifest order. Results are therefore byte-identical for any
//! thread count.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::color::Channel;
use crate::dataset::{load_manifest, load_pair, Category, Manifest, ManifestEntry, ManifestError};
use crate::global::{histogram_delta, HistogramSet};
use crate::grid::{aggregate_to_cells, ColorGrid};
use crate::local::{
    cell_lab_distance_grid, cell_shift_from_grids, ColorGridMean, GridMean, Kahan, MudImage,
    ShiftGrid,
};
use crate::regional::{
    all_masks, regional_scores, select_candidates_from_stats, shift_stats, top_n, MaskKind,
    PairShiftStats, RankBy, RegionMask, RegionalScore,
};
use crate::report::{
    emit_delta_plot, emit_heatmap, emit_json, emit_mud, write_candidates_text, write_category_csv,
    write_top_list_text, CandidateRecord, CategoryDistance, DivergingPalette, MaskTopList,
    MudReport, PairSummary, RegionalReport, ReportError, ReportParameters, RunReport, SkipRecord,
    TopEntry,
};

/// Pairs processed per scheduling chunk (also the progress interval).
const CHUNK_SIZE: usize = 64;

/// Upscale factor for emitted heatmap and mud PNGs.
const HEATMAP_UPSCALE: usize = 4;

/// Which analyses a run executes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AnalysisSet {
    pub global: bool,
    pub local: bool,
    pub mud: bool,
    pub regional: bool,
}

impl AnalysisSet {
    pub fn all() -> Self {
        Self { global: true, local: true, mud: true, regional: true }
    }

    pub fn any(&self) -> bool {
        self.global || self.local || self.mud || self.regional
    }

    pub fn names(&self) -> Vec<String> {
        let mut names = Vec::new();
        if self.global {
            names.push("global".to_string());
        }
        if self.local {
            names.push("local".to_string());
        }
        if self.mud {
            names.push("mud".to_string());
        }
        if self.regional {
            names.push("regional".to_string());
        }
        names
    }
}

/// Full configuration of an analysis run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub manifest: PathBuf,
    pub out_dir: PathBuf,
    pub analyses: AnalysisSet,
    /// Reference manifest for the mud image; the analysis manifest's
    /// originals are used when absent.
    pub mud_reference: Option<PathBuf>,
    /// Restrict the analysis to these categories.
    pub categories: Option<Vec<Category>>,
    /// Skip pairs whose source files were converted from a non-RGB
    /// representation instead of analyzing the converted pixels.
    pub skip_non_rgb: bool,
    pub grid_size: usize,
    pub top_n: usize,
    pub candidate_count: usize,
    /// Worker threads; 0 picks the scheduler default.
    pub threads: usize,
}

impl RunConfig {
    pub fn new(manifest: impl Into<PathBuf>, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            manifest: manifest.into(),
            out_dir: out_dir.into(),
            analyses: AnalysisSet::all(),
            mud_reference: None,
            categories: None,
            skip_non_rgb: false,
            grid_size: crate::grid::DEFAULT_GRID_SIZE,
            top_n: 5,
            candidate_count: 400,
            threads: 0,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.grid_size < 2 {
            return Err(format!("grid size must be at least 2, got {}", self.grid_size));
        }
        if self.top_n < 1 {
            return Err("top-n must be at least 1".into());
        }
        if self.candidate_count < 1 {
            return Err("candidate count must be at least 1".into());
        }
        if !self.analyses.any() {
            return Err("no analyses enabled".into());
        }
        Ok(())
    }

    fn category_enabled(&self, category: Category) -> bool {
        self.categories.as_ref().is_none_or(|list| list.contains(&category))
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error("cannot build worker pool: {0}")]
    ThreadPool(String),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Result of a run: the report that was written, plus the skip count the
/// caller turns into an exit status.
#[derive(Debug)]
pub struct RunOutcome {
    pub report: RunReport,
    pub report_path: PathBuf,
}

fn file_digest(path: &Path) -> Result<String, PipelineError> {
    let bytes = std::fs::read(path)
        .map_err(|source| PipelineError::Io { path: path.to_path_buf(), source })?;
    Ok(format!("sha256:{:x}", Sha256::digest(&bytes)))
}

fn build_pool(threads: usize) -> Result<rayon::ThreadPool, PipelineError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| PipelineError::ThreadPool(e.to_string()))
}

/// Compute the mud image from the originals of the manifest at `path`.
/// Decode failures are skipped with a note on stderr; `Ok(None)` means
/// nothing could be decoded.
pub fn mud_from_manifest_path(
    path: &Path,
    grid_size: usize,
    threads: usize,
) -> Result<Option<MudImage>, PipelineError> {
    let manifest = load_manifest(path)?;
    let pool = build_pool(threads)?;
    Ok(mud_from_manifest(&pool, &manifest, grid_size))
}

/// Decode the originals of a manifest and average their cell grids.
/// Decode failures are skipped with a note on stderr; returns `None` when
/// nothing could be decoded.
fn mud_from_manifest(
    pool: &rayon::ThreadPool,
    manifest: &Manifest,
    grid_size: usize,
) -> Option<MudImage> {
    let mut mean = ColorGridMean::new(grid_size);
    for chunk in manifest.entries.chunks(CHUNK_SIZE) {
        let grids: Vec<Result<ColorGrid, String>> = pool.install(|| {
            chunk
                .par_iter()
                .map(|entry| {
                    crate::dataset::decode_raster(&entry.original_path)
                        .map(|(raster, _)| aggregate_to_cells(&raster, grid_size))
                        .map_err(|e| e.to_string())
                })
                .collect()
        });
        for (entry, grid) in chunk.iter().zip(grids) {
            match grid {
                Ok(g) => mean.add(&g),
                Err(reason) => eprintln!("mud reference: skipping {}: {reason}", entry.original),
            }
        }
    }
    let source_count = mean.count();
    mean.finish().map(|grid| MudImage { source_count, grid })
}

struct PairData {
    histograms: Option<(HistogramSet, HistogramSet)>,
    cells: Option<(ColorGrid, ColorGrid)>,
}

struct PairWork {
    index: usize,
    category: Category,
    outcome: Result<PairData, String>,
}

fn process_entry(index: usize, entry: &ManifestEntry, config: &RunConfig, need_cells: bool) -> PairWork {
    let pair = match load_pair(entry) {
        Ok(pair) => pair,
        Err(e) => {
            return PairWork { index, category: entry.category, outcome: Err(e.to_string()) };
        }
    };
    if config.skip_non_rgb && pair.converted_from_non_rgb {
        return PairWork {
            index,
            category: entry.category,
            outcome: Err("non-RGB source excluded by --skip-non-rgb".into()),
        };
    }
    let histograms = config.analyses.global.then(|| {
        let mut orig = HistogramSet::default();
        orig.add_raster(&pair.original);
        let mut col = HistogramSet::default();
        col.add_raster(&pair.colorized);
        (orig, col)
    });
    let cells = need_cells.then(|| {
        (
            aggregate_to_cells(&pair.original, config.grid_size),
            aggregate_to_cells(&pair.colorized, config.grid_size),
        )
    });
    PairWork {
        index,
        category: pair.category,
        outcome: Ok(PairData { histograms, cells }),
    }
}

#[derive(Default)]
struct DistanceMean {
    sum: Kahan,
    count: u64,
}

impl DistanceMean {
    fn add(&mut self, v: f64) {
        self.sum.add(v);
        self.count += 1;
    }

    fn mean(&self) -> Option<f64> {
        (self.count > 0).then(|| self.sum.value() / self.count as f64)
    }
}

struct Reducer<'a> {
    config: &'a RunConfig,
    manifest: &'a Manifest,
    masks: Vec<RegionMask>,
    mud: Option<&'a MudImage>,
    hist_original: HistogramSet,
    hist_colorized: HistogramSet,
    shift_overall: Vec<GridMean>,
    shift_by_category: BTreeMap<Category, Vec<GridMean>>,
    distance_overall: DistanceMean,
    distance_by_category: BTreeMap<Category, DistanceMean>,
    mud_delta: GridMean,
    scores: Vec<RegionalScore>,
    stats: Vec<PairShiftStats>,
    processed: u64,
    skips: Vec<SkipRecord>,
}

impl<'a> Reducer<'a> {
    fn new(config: &'a RunConfig, manifest: &'a Manifest, mud: Option<&'a MudImage>) -> Self {
        let g = config.grid_size;
        Self {
            config,
            manifest,
            masks: all_masks(g),
            mud,
            hist_original: HistogramSet::default(),
            hist_colorized: HistogramSet::default(),
            shift_overall: Channel::SHIFT.iter().map(|_| GridMean::new(g)).collect(),
            shift_by_category: BTreeMap::new(),
            distance_overall: DistanceMean::default(),
            distance_by_category: BTreeMap::new(),
            mud_delta: GridMean::new(g),
            scores: Vec::new(),
            stats: Vec::new(),
            processed: 0,
            skips: Vec::new(),
        }
    }

    fn consume(&mut self, work: PairWork) {
        let data = match work.outcome {
            Ok(data) => data,
            Err(reason) => {
                self.skips.push(SkipRecord {
                    index: work.index,
                    original: self.manifest.entries[work.index].original.clone(),
                    reason,
                });
                return;
            }
        };
        self.processed += 1;

        if let Some((orig, col)) = &data.histograms {
            self.hist_original.merge(orig);
            self.hist_colorized.merge(col);
        }

        let Some((orig_cells, col_cells)) = &data.cells else {
            return;
        };
        let g = self.config.grid_size;

        if self.config.analyses.local {
            let by_cat = self
                .shift_by_category
                .entry(work.category)
                .or_insert_with(|| Channel::SHIFT.iter().map(|_| GridMean::new(g)).collect());
            for ((channel, overall), per_cat) in
                Channel::SHIFT.iter().zip(&mut self.shift_overall).zip(by_cat)
            {
                let shift = cell_shift_from_grids(orig_cells, col_cells, *channel);
                overall.add(&shift);
                per_cat.add(&shift);
            }
        }

        if self.config.analyses.local || self.config.analyses.regional {
            let magnitudes = cell_lab_distance_grid(orig_cells, col_cells);
            if self.config.analyses.local {
                let mut mean = Kahan::default();
                for &v in magnitudes.cells() {
                    mean.add(v);
                }
                let pair_mean = mean.value() / magnitudes.cells().len() as f64;
                self.distance_overall.add(pair_mean);
                self.distance_by_category.entry(work.category).or_default().add(pair_mean);
            }
            if self.config.analyses.regional {
                for mask in &self.masks {
                    self.scores.push(
                        regional_scores(work.index, &magnitudes, mask)
                            .expect("composition masks are proper"),
                    );
                }
                self.stats.push(
                    shift_stats(work.index, &magnitudes, &self.masks)
                        .expect("composition masks are proper"),
                );
            }
        }

        if self.config.analyses.mud {
            if let Some(mud) = self.mud {
                self.mud_delta.add(&crate::local::mud_delta_from_grids(orig_cells, col_cells, mud));
            }
        }
    }

    fn into_report(self, manifest_digest: String) -> RunReport {
        let config = self.config;

        let global = if config.analyses.global && self.hist_original.histograms[0].total > 0 {
            Channel::HISTOGRAM
                .iter()
                .map(|&ch| {
                    histogram_delta(self.hist_original.channel(ch), self.hist_colorized.channel(ch))
                        .expect("both sides counted the same pairs")
                })
                .collect()
        } else {
            Vec::new()
        };

        let mut local = Vec::new();
        if config.analyses.local && self.processed > 0 {
            for (channel, acc) in Channel::SHIFT.iter().zip(&self.shift_overall) {
                local.push(ShiftGrid {
                    channel: *channel,
                    category: None,
                    sample_count: acc.count(),
                    grid: acc.finish(),
                });
            }
            for (category, accs) in &self.shift_by_category {
                for (channel, acc) in Channel::SHIFT.iter().zip(accs) {
                    local.push(ShiftGrid {
                        channel: *channel,
                        category: Some(*category),
                        sample_count: acc.count(),
                        grid: acc.finish(),
                    });
                }
            }
        }

        let per_category: Vec<CategoryDistance> = self
            .distance_by_category
            .iter()
            .map(|(category, acc)| CategoryDistance {
                category: *category,
                mean_lab_distance: acc.mean().unwrap_or(0.0),
                sample_count: acc.count,
            })
            .collect();

        let mud = self.mud.map(|mud| MudReport { mud: mud.clone(), delta: self.mud_delta.finish() });

        let regional = config.analyses.regional.then(|| {
            let entry_of = |score: &RegionalScore| {
                let entry = &self.manifest.entries[score.pair_id];
                TopEntry {
                    pair_id: score.pair_id,
                    original: entry.original.clone(),
                    colorized: entry.colorized.clone().unwrap_or_default(),
                    mask_kind: score.mask_kind,
                    absolute: score.absolute,
                    relative: score.relative,
                }
            };
            let top_lists = |by: RankBy| -> Vec<MaskTopList> {
                MaskKind::ALL
                    .iter()
                    .map(|&kind| {
                        let of_kind: Vec<RegionalScore> = self
                            .scores
                            .iter()
                            .filter(|s| s.mask_kind == kind)
                            .cloned()
                            .collect();
                        MaskTopList {
                            mask_kind: kind,
                            entries: top_n(&of_kind, config.top_n, by).iter().map(entry_of).collect(),
                        }
                    })
                    .collect()
            };

            let candidate_ids = select_candidates_from_stats(&self.stats, config.candidate_count);
            let stat_of: BTreeMap<usize, &PairShiftStats> =
                self.stats.iter().map(|s| (s.pair_id, s)).collect();
            let candidates = candidate_ids
                .iter()
                .map(|&pair_id| {
                    let best = self
                        .scores
                        .iter()
                        .filter(|s| s.pair_id == pair_id)
                        .max_by(|a, b| a.relative.total_cmp(&b.relative))
                        .expect("every processed pair has scores");
                    let stats = stat_of[&pair_id];
                    let entry = &self.manifest.entries[pair_id];
                    CandidateRecord {
                        pair_id,
                        original: entry.original.clone(),
                        colorized: entry.colorized.clone().unwrap_or_default(),
                        mask_kind: best.mask_kind,
                        absolute: best.absolute,
                        relative: best.relative,
                        mean_shift: stats.mean,
                        stddev_shift: stats.stddev,
                    }
                })
                .collect();

            RegionalReport {
                scores: self.scores.clone(),
                top_absolute: top_lists(RankBy::Absolute),
                top_relative: top_lists(RankBy::Relative),
                candidates,
            }
        });

        RunReport {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            manifest_digest,
            parameters: ReportParameters {
                grid_size: config.grid_size,
                rgb_bins: 256,
                l_star_bins: 101,
                ab_bins: 256,
                golden_middle_fraction: 0.618,
                dot_side_fraction: 0.09,
                top_n: config.top_n,
                candidate_count: config.candidate_count,
                analyses: config.analyses.names(),
                category_filter: config.categories.clone(),
                skip_non_rgb: config.skip_non_rgb,
            },
            pairs: PairSummary {
                manifest_entries: self.manifest.entries.len() as u64,
                processed: self.processed,
                skipped: self.skips.len() as u64,
                skips: self.skips,
            },
            global,
            local,
            per_category,
            mud,
            regional,
        }
    }
}

/// Execute a configured run: analyze the manifest, write `report.json` and
/// all renderings under the output directory, and return the report.
pub fn run(config: &RunConfig) -> Result<RunOutcome, PipelineError> {
    config.validate().map_err(PipelineError::Config)?;
    let manifest = load_manifest(&config.manifest)?;
    for warning in &manifest.warnings {
        eprintln!("manifest: {warning}");
    }
    let digest = file_digest(&config.manifest)?;
    let pool = build_pool(config.threads)?;

    let mud_image = if config.analyses.mud {
        let reference = match &config.mud_reference {
            Some(path) if path != &config.manifest => load_manifest(path)?,
            _ => manifest.clone(),
        };
        let mud = mud_from_manifest(&pool, &reference, config.grid_size);
        if mud.is_none() {
            eprintln!("mud: reference stream is empty, skipping the mud analysis");
        }
        mud
    } else {
        None
    };

    let need_cells =
        config.analyses.local || config.analyses.mud || config.analyses.regional;
    let selected: Vec<(usize, &ManifestEntry)> = manifest
        .entries
        .iter()
        .enumerate()
        .filter(|(_, e)| config.category_enabled(e.category))
        .collect();

    let mut reducer = Reducer::new(config, &manifest, mud_image.as_ref());
    let total = selected.len();
    let mut done = 0usize;
    for chunk in selected.chunks(CHUNK_SIZE) {
        let results: Vec<PairWork> = pool.install(|| {
            chunk
                .par_iter()
                .map(|(index, entry)| process_entry(*index, entry, config, need_cells))
                .collect()
        });
        done += results.len();
        for work in results {
            reducer.consume(work);
        }
        eprintln!(
            "processed {done}/{total} pairs ({} skipped)",
            reducer.skips.len()
        );
    }

    let report = reducer.into_report(digest);
    let report_path = write_outputs(&report, &config.out_dir)?;
    Ok(RunOutcome { report, report_path })
}

/// Write `report.json` plus every rendering derived from a report. Also used
/// to re-render outputs from a previously saved report.
pub fn write_outputs(report: &RunReport, out_dir: &Path) -> Result<PathBuf, ReportError> {
    let report_path = out_dir.join("report.json");
    emit_json(report, &report_path)?;

    for delta in &report.global {
        emit_delta_plot(delta, &out_dir.join(format!("plots/delta_{}.png", delta.channel)))?;
    }

    for shift in &report.local {
        let palette = match shift.channel {
            Channel::BStar => DivergingPalette::RedWhiteBlue,
            _ => DivergingPalette::BlueWhiteRed,
        };
        match shift.category {
            // per-category heatmaps are emitted for b* only (the channel
            // whose spatial breakdown varies most); all grids are in the JSON
            Some(category) if shift.channel == Channel::BStar => {
                emit_heatmap(
                    &shift.grid,
                    palette,
                    &out_dir.join(format!("heatmaps/shift_{}_{category}.png", shift.channel)),
                    None,
                    HEATMAP_UPSCALE,
                )?;
            }
            Some(_) => {}
            None => {
                emit_heatmap(
                    &shift.grid,
                    palette,
                    &out_dir.join(format!("heatmaps/shift_{}.png", shift.channel)),
                    None,
                    HEATMAP_UPSCALE,
                )?;
            }
        }
    }

    if !report.per_category.is_empty() {
        write_category_csv(&report.per_category, &out_dir.join("per_category.csv"))?;
    }

    if let Some(mud) = &report.mud {
        emit_mud(&mud.mud, &out_dir.join("mud.png"), HEATMAP_UPSCALE)?;
        emit_heatmap(
            &mud.delta,
            DivergingPalette::BlueWhiteRed,
            &out_dir.join("heatmaps/mud_delta.png"),
            None,
            HEATMAP_UPSCALE,
        )?;
    }

    if let Some(regional) = &report.regional {
        let dir = out_dir.join("regional");
        let as_json = |lists: &[MaskTopList]| serde_json::to_vec_pretty(lists);
        std::fs::create_dir_all(&dir).map_err(|source| ReportError::Io {
            path: dir.clone(),
            source,
        })?;
        std::fs::write(dir.join("top_absolute.json"), as_json(&regional.top_absolute)?)
            .map_err(|source| ReportError::Io { path: dir.join("top_absolute.json"), source })?;
        std::fs::write(dir.join("top_relative.json"), as_json(&regional.top_relative)?)
            .map_err(|source| ReportError::Io { path: dir.join("top_relative.json"), source })?;
        std::fs::write(
            dir.join("candidates.json"),
            serde_json::to_vec_pretty(&regional.candidates)?,
        )
        .map_err(|source| ReportError::Io { path: dir.join("candidates.json"), source })?;
        write_top_list_text(&regional.top_absolute, &dir.join("top_absolute.txt"))?;
        write_top_list_text(&regional.top_relative, &dir.join("top_relative.txt"))?;
        write_candidates_text(&regional.candidates, &dir.join("candidates.txt"))?;
    }

    Ok(report_path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_corpus, write_corpus, CorpusOptions, SyntheticTransform};
    use tempfile::TempDir;

    fn identity_corpus_dir(count: usize, seed: u64) -> (TempDir, PathBuf) {
        let dir = TempDir::new().unwrap();
        let corpus = generate_corpus(&CorpusOptions {
            count,
            seed,
            min_dim: 32,
            max_dim: 96,
            ..Default::default()
        });
        let manifest = write_corpus(&corpus, &SyntheticTransform::Identity, dir.path()).unwrap();
        (dir, manifest)
    }

    #[test]
    fn identity_run_reports_all_zero_metrics() {
        let (dir, manifest) = identity_corpus_dir(6, 3);
        let mut config = RunConfig::new(&manifest, dir.path().join("out"));
        config.threads = 2;
        let outcome = run(&config).unwrap();
        let report = outcome.report;

        assert_eq!(report.pairs.processed, 6);
        assert_eq!(report.pairs.skipped, 0);
        assert_eq!(report.global.len(), 6);
        for delta in &report.global {
            assert!(delta.delta.iter().all(|&v| v == 0.0), "{}", delta.channel);
        }
        for shift in &report.local {
            assert!(shift.grid.cells().iter().all(|&v| v == 0.0), "{}", shift.channel);
        }
        let mud = report.mud.as_ref().unwrap();
        assert!(mud.delta.cells().iter().all(|&v| v == 0.0));
        let regional = report.regional.as_ref().unwrap();
        for score in &regional.scores {
            assert_eq!((score.absolute, score.relative), (0.0, 0.0));
        }
        // identical scores: candidates fall back to manifest order
        let ids: Vec<usize> = regional.candidates.iter().map(|c| c.pair_id).collect();
        assert_eq!(ids, vec![0, 1, 2, 3, 4, 5]);

        assert!(outcome.report_path.exists());
        assert!(dir.path().join("out/heatmaps/shift_b_star.png").exists());
        assert!(dir.path().join("out/plots/delta_R.png").exists());
        assert!(dir.path().join("out/mud.png").exists());
        assert!(dir.path().join("out/regional/candidates.json").exists());
        assert!(dir.path().join("out/per_category.csv").exists());
    }

    #[test]
    fn thread_count_does_not_change_the_report_bytes() {
        let (dir, manifest) = identity_corpus_dir(5, 11);
        let mut c1 = RunConfig::new(&manifest, dir.path().join("out1"));
        c1.threads = 1;
        let mut c4 = RunConfig::new(&manifest, dir.path().join("out4"));
        c4.threads = 4;
        let o1 = run(&c1).unwrap();
        let o4 = run(&c4).unwrap();
        let b1 = std::fs::read(o1.report_path).unwrap();
        let b4 = std::fs::read(o4.report_path).unwrap();
        assert_eq!(b1, b4);
    }

    #[test]
    fn missing_files_are_skipped_and_counted() {
        let (dir, manifest) = identity_corpus_dir(3, 2);
        // append a row pointing at nothing
        let mut text = std::fs::read_to_string(&manifest).unwrap();
        text.push_str("missing.png,also_missing.png,urban\n");
        std::fs::write(&manifest, text).unwrap();

        let mut config = RunConfig::new(&manifest, dir.path().join("out"));
        config.analyses = AnalysisSet { global: true, ..Default::default() };
        let outcome = run(&config).unwrap();
        assert_eq!(outcome.report.pairs.processed, 3);
        assert_eq!(outcome.report.pairs.skipped, 1);
        assert_eq!(outcome.report.pairs.skips[0].index, 3);
        assert!(outcome.report.pairs.skips[0].reason.contains("missing.png"));
    }

    #[test]
    fn zero_entry_manifest_yields_empty_metric_arrays() {
        let dir = TempDir::new().unwrap();
        std::fs::write(dir.path().join("m.csv"), "original,colorized,category\n").unwrap();
        let config = RunConfig::new(dir.path().join("m.csv"), dir.path().join("out"));
        let outcome = run(&config).unwrap();
        assert_eq!(outcome.report.pairs.manifest_entries, 0);
        assert_eq!(outcome.report.pairs.processed, 0);
        assert!(outcome.report.global.is_empty());
        assert!(outcome.report.local.is_empty());
        assert!(outcome.report.per_category.is_empty());
        assert!(outcome.report.mud.is_none(), "no reference images, no mud section");
        assert!(outcome.report.regional.as_ref().unwrap().scores.is_empty());
        assert!(outcome.report_path.exists());
    }

    #[test]
    fn invalid_config_is_rejected() {
        let config = RunConfig {
            analyses: AnalysisSet::default(),
            ..RunConfig::new("m.csv", "out")
        };
        assert!(matches!(run(&config), Err(PipelineError::Config(_))));

        let config = RunConfig { grid_size: 1, ..RunConfig::new("m.csv", "out") };
        assert!(matches!(run(&config), Err(PipelineError::Config(_))));
    }

    #[test]
    fn non_rgb_sources_are_excluded_only_on_request() {
        let dir = TempDir::new().unwrap();
        let gray = image::GrayImage::from_fn(16, 16, |x, _| image::Luma([(x * 9) as u8]));
        gray.save(dir.path().join("g.png")).unwrap();
        gray.save(dir.path().join("g_col.png")).unwrap();
        std::fs::write(
            dir.path().join("m.csv"),
            "original,colorized,category\ng.png,g_col.png,urban\n",
        )
        .unwrap();

        let mut config = RunConfig::new(dir.path().join("m.csv"), dir.path().join("out_a"));
        config.analyses = AnalysisSet { global: true, ..Default::default() };
        let outcome = run(&config).unwrap();
        assert_eq!(outcome.report.pairs.processed, 1, "converted pair analyzed by default");
        assert!(outcome.report.global.iter().all(|d| d.delta.iter().all(|&v| v == 0.0)));

        config.out_dir = dir.path().join("out_b");
        config.skip_non_rgb = true;
        let outcome = run(&config).unwrap();
        assert_eq!(outcome.report.pairs.processed, 0);
        assert_eq!(outcome.report.pairs.skipped, 1);
        assert!(outcome.report.pairs.skips[0].reason.contains("non-RGB"));
    }

    #[test]
    fn category_filter_restricts_processing() {
        let (dir, manifest) = identity_corpus_dir(6, 9);
        let mut config = RunConfig::new(&manifest, dir.path().join("out"));
        config.analyses = AnalysisSet { local: true, ..Default::default() };
        config.categories = Some(vec![Category::Urban]);
        let outcome = run(&config).unwrap();
        // corpus categories cycle urban, nature, workplace, cultural, industrial
        assert_eq!(outcome.report.pairs.processed, 2);
        assert!(outcome
            .report
            .per_category
            .iter()
            .all(|c| c.category == Category::Urban));
    }
}
