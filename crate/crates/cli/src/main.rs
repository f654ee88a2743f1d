//! Command-line entry point for the color bias toolkit.
//!
//! Standard output carries machine-readable summary lines only; progress and
//! diagnostics go to standard error. Exit codes: 0 success, 1 partial
//! success (some pairs failed to load; results for the rest were written),
//! 2 unusable configuration or manifest, 3 I/O failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use colorbias::dataset::{export_grayscale, load_manifest, Category};
use colorbias::pipeline::{self, AnalysisSet, PipelineError, RunConfig};
use colorbias::report;
use colorbias::synth::{self, CorpusOptions, SyntheticTransform};

#[derive(Parser)]
#[command(
    name = "colorbias",
    version,
    about = "Measures global, local, and regional color bias between an image dataset and a recolorized counterpart"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the enabled analyses over a manifest of original/colorized pairs
    Analyze(AnalyzeArgs),
    /// Export grayscale versions of the originals for feeding a colorizer
    Grayscale(GrayscaleArgs),
    /// Compute the reference-average (mud) image from a manifest's originals
    Mud(MudArgs),
    /// Regional analysis only: region scores, top-n lists, candidates
    Regional(RegionalArgs),
    /// Generate a synthetic test corpus with a known injected bias
    Synth(SynthArgs),
    /// Re-render plots and heatmaps from an existing report.json
    Report(ReportArgs),
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Manifest of original,colorized,category rows (CSV, or JSON by extension)
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Output directory for report.json and renderings
    #[arg(long)]
    out: Option<PathBuf>,
    /// Enable all analyses (default when no analysis flag is given)
    #[arg(long)]
    all: bool,
    #[arg(long)]
    global: bool,
    #[arg(long)]
    local: bool,
    #[arg(long)]
    mud: bool,
    #[arg(long)]
    regional: bool,
    /// Reference manifest for the mud image (defaults to the analysis manifest)
    #[arg(long)]
    mud_ref: Option<PathBuf>,
    /// Comma-separated category filter
    #[arg(long, value_delimiter = ',')]
    categories: Option<Vec<String>>,
    /// Skip pairs whose sources were converted from a non-RGB format
    #[arg(long)]
    skip_non_rgb: bool,
    #[arg(long)]
    grid_size: Option<usize>,
    #[arg(long)]
    top_n: Option<usize>,
    /// Number of review candidates to select
    #[arg(long)]
    candidates: Option<usize>,
    /// Worker threads (default: COLORBIAS_THREADS or all cores)
    #[arg(long)]
    threads: Option<usize>,
    /// JSON config file mirroring these options (flags take precedence)
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct GrayscaleArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Write three identical channels instead of single-channel grayscale
    #[arg(long)]
    replicate_channels: bool,
}

#[derive(Args)]
struct MudArgs {
    /// Manifest whose originals form the reference set
    #[arg(long)]
    reference: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 64)]
    grid_size: usize,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct RegionalArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_delimiter = ',')]
    categories: Option<Vec<String>>,
    #[arg(long)]
    grid_size: Option<usize>,
    #[arg(long)]
    top_n: Option<usize>,
    #[arg(long)]
    candidates: Option<usize>,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct SynthArgs {
    /// Directory for originals/, colorized/, and manifest.csv
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 20)]
    count: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 64)]
    min_dim: usize,
    #[arg(long, default_value_t = 512)]
    max_dim: usize,
    /// Extra 128x128 images carrying one near-clamp blue pixel per cell
    #[arg(long, default_value_t = 0)]
    clamp_coverage: usize,
    /// identity | channel-offset:<R|G|B>:<amount> | saturation-scale:<f> | mud-blend:<alpha>
    #[arg(long, default_value = "identity")]
    transform: String,
}

#[derive(Args)]
struct ReportArgs {
    /// Previously written report.json
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

/// Optional JSON config file; every field mirrors an analyze flag.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    manifest: Option<PathBuf>,
    out: Option<PathBuf>,
    analyses: Option<Vec<String>>,
    mud_reference: Option<PathBuf>,
    categories: Option<Vec<String>>,
    skip_non_rgb: Option<bool>,
    grid_size: Option<usize>,
    top_n: Option<usize>,
    candidates: Option<usize>,
    threads: Option<usize>,
}

struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        let code = match &e {
            PipelineError::Config(_) | PipelineError::Manifest(_) => 2,
            PipelineError::ThreadPool(_) | PipelineError::Report(_) | PipelineError::Io { .. } => 3,
        };
        CliError::new(code, e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn dispatch(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Analyze(args) => analyze(args),
        Command::Grayscale(args) => grayscale(args),
        Command::Mud(args) => mud(args),
        Command::Regional(args) => regional(args),
        Command::Synth(args) => synth_corpus(args),
        Command::Report(args) => rerender(args),
    }
}

fn env_default_threads() -> usize {
    std::env::var("COLORBIAS_THREADS")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(0)
}

fn parse_categories(raw: &[String]) -> Result<Vec<Category>, CliError> {
    raw.iter()
        .map(|s| {
            Category::parse(s).ok_or_else(|| CliError::new(2, format!("unknown category {s:?}")))
        })
        .collect()
}

fn analyses_from_names(names: &[String]) -> Result<AnalysisSet, CliError> {
    let mut set = AnalysisSet::default();
    for name in names {
        match name.as_str() {
            "all" => set = AnalysisSet::all(),
            "global" => set.global = true,
            "local" => set.local = true,
            "mud" => set.mud = true,
            "regional" => set.regional = true,
            other => return Err(CliError::new(2, format!("unknown analysis {other:?}"))),
        }
    }
    Ok(set)
}

/// Merge precedence: command-line flags, then the config file, then defaults.
fn build_run_config(args: AnalyzeArgs) -> Result<RunConfig, CliError> {
    let file: FileConfig = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::new(2, format!("cannot read config {path:?}: {e}")))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::new(2, format!("malformed config {path:?}: {e}")))?
        }
        None => FileConfig::default(),
    };

    let manifest = args
        .manifest
        .or(file.manifest)
        .ok_or_else(|| CliError::new(2, "no manifest given (flag --manifest or config)"))?;
    let out = args
        .out
        .or(file.out)
        .ok_or_else(|| CliError::new(2, "no output directory given (flag --out or config)"))?;

    let flag_analyses = AnalysisSet {
        global: args.global,
        local: args.local,
        mud: args.mud,
        regional: args.regional,
    };
    let analyses = if args.all {
        AnalysisSet::all()
    } else if flag_analyses.any() {
        flag_analyses
    } else if let Some(names) = &file.analyses {
        analyses_from_names(names)?
    } else {
        AnalysisSet::all()
    };

    let categories = match args.categories.as_deref().or(file.categories.as_deref()) {
        Some(raw) => Some(parse_categories(raw)?),
        None => None,
    };

    Ok(RunConfig {
        manifest,
        out_dir: out,
        analyses,
        mud_reference: args.mud_ref.or(file.mud_reference),
        categories,
        skip_non_rgb: args.skip_non_rgb || file.skip_non_rgb.unwrap_or(false),
        grid_size: args.grid_size.or(file.grid_size).unwrap_or(64),
        top_n: args.top_n.or(file.top_n).unwrap_or(5),
        candidate_count: args.candidates.or(file.candidates).unwrap_or(400),
        threads: args.threads.or(file.threads).unwrap_or_else(env_default_threads),
    })
}

fn run_pipeline(config: RunConfig) -> Result<u8, CliError> {
    let outcome = pipeline::run(&config)?;
    report::write_summary_line(&mut std::io::stdout(), &outcome.report)
        .map_err(|e| CliError::new(3, e.to_string()))?;
    if outcome.report.pairs.skipped > 0 {
        eprintln!(
            "{} of {} pairs failed to load; partial results written to {}",
            outcome.report.pairs.skipped,
            outcome.report.pairs.manifest_entries,
            config.out_dir.display()
        );
        for skip in &outcome.report.pairs.skips {
            eprintln!("  pair {}: {}", skip.index, skip.reason);
        }
        return Ok(1);
    }
    Ok(0)
}

fn analyze(args: AnalyzeArgs) -> Result<u8, CliError> {
    run_pipeline(build_run_config(args)?)
}

fn regional(args: RegionalArgs) -> Result<u8, CliError> {
    let categories = match &args.categories {
        Some(raw) => Some(parse_categories(raw)?),
        None => None,
    };
    let config = RunConfig {
        manifest: args.manifest,
        out_dir: args.out,
        analyses: AnalysisSet { regional: true, ..Default::default() },
        mud_reference: None,
        categories,
        skip_non_rgb: false,
        grid_size: args.grid_size.unwrap_or(64),
        top_n: args.top_n.unwrap_or(5),
        candidate_count: args.candidates.unwrap_or(400),
        threads: args.threads.unwrap_or_else(env_default_threads),
    };
    run_pipeline(config)
}

fn grayscale(args: GrayscaleArgs) -> Result<u8, CliError> {
    let manifest = load_manifest(&args.manifest).map_err(|e| CliError::new(2, e.to_string()))?;
    for warning in &manifest.warnings {
        eprintln!("manifest: {warning}");
    }
    let written = export_grayscale(&manifest, &args.out, args.replicate_channels)
        .map_err(|e| CliError::new(3, e.to_string()))?;
    println!("grayscale written={written} out={}", args.out.display());
    Ok(0)
}

fn mud(args: MudArgs) -> Result<u8, CliError> {
    let threads = args.threads.unwrap_or_else(env_default_threads);
    let mud = pipeline::mud_from_manifest_path(&args.reference, args.grid_size, threads)?
        .ok_or_else(|| CliError::new(2, "reference manifest yielded no decodable images"))?;
    std::fs::create_dir_all(&args.out).map_err(|e| CliError::new(3, e.to_string()))?;
    let path = args.out.join("mud.png");
    report::emit_mud(&mud, &path, 4).map_err(|e| CliError::new(3, e.to_string()))?;
    println!(
        "mud sources={} out={} sidecar={}",
        mud.source_count,
        path.display(),
        path.with_extension("json").display()
    );
    Ok(0)
}

fn parse_transform(spec: &str, corpus: &[(colorbias::Raster, Category)]) -> Result<SyntheticTransform, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = |msg: String| CliError::new(2, msg);
    match parts.as_slice() {
        ["identity"] => Ok(SyntheticTransform::Identity),
        ["channel-offset", channel, amount] => {
            let channel = match *channel {
                "R" | "r" => colorbias::color::Channel::R,
                "G" | "g" => colorbias::color::Channel::G,
                "B" | "b" => colorbias::color::Channel::B,
                other => return Err(bad(format!("channel-offset needs R, G, or B, got {other:?}"))),
            };
            let amount: i16 = amount
                .parse()
                .map_err(|e| bad(format!("bad offset amount {amount:?}: {e}")))?;
            SyntheticTransform::channel_offset(channel, amount).map_err(|e| bad(e.to_string()))
        }
        ["saturation-scale", factor] => {
            let factor: f64 = factor
                .parse()
                .map_err(|e| bad(format!("bad saturation factor {factor:?}: {e}")))?;
            SyntheticTransform::saturation_scale(factor).map_err(|e| bad(e.to_string()))
        }
        ["mud-blend", alpha] => {
            let alpha: f64 = alpha
                .parse()
                .map_err(|e| bad(format!("bad blend alpha {alpha:?}: {e}")))?;
            let mud = colorbias::local::compute_mud(corpus.iter().map(|(r, _)| r), 64)
                .map_err(|e| bad(e.to_string()))?;
            SyntheticTransform::mud_blend(alpha, mud).map_err(|e| bad(e.to_string()))
        }
        _ => Err(bad(format!(
            "unknown transform {spec:?} (identity | channel-offset:B:10 | saturation-scale:0.5 | mud-blend:0.5)"
        ))),
    }
}

fn synth_corpus(args: SynthArgs) -> Result<u8, CliError> {
    let corpus = synth::generate_corpus(&CorpusOptions {
        count: args.count,
        seed: args.seed,
        min_dim: args.min_dim,
        max_dim: args.max_dim,
        value_headroom: true,
        clamp_coverage_images: args.clamp_coverage,
    });
    let transform = parse_transform(&args.transform, &corpus)?;
    let manifest = synth::write_corpus(&corpus, &transform, &args.out)
        .map_err(|e| CliError::new(3, e.to_string()))?;
    println!("synth images={} manifest={}", corpus.len(), manifest.display());
    Ok(0)
}

fn rerender(args: ReportArgs) -> Result<u8, CliError> {
    let report = report::read_json(&args.input).map_err(|e| CliError::new(2, e.to_string()))?;
    let path = pipeline::write_outputs(&report, &args.out)
        .map_err(|e| CliError::new(3, e.to_string()))?;
    println!("report rendered out={} report={}", args.out.display(), path.display());
    Ok(0)
}
