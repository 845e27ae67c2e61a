//! Command-line interface.
//!
//! Exit codes: 0 success, 2 unreadable, malformed or invalid input,
//! 3 embedding dimension mismatch, 4 no data to report.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::json;

use crate::io::{
    self, graph_to_canonical_json, matching_to_dot, read_annotations, read_embeddings, read_graph,
    read_manifest, read_raster, read_relation_table, IoError, ManifestEntry,
};
use crate::matching::{sess_with, MatchError, ScoreOptions};
use crate::metrics::{self, MetricError, PatchEmbeddingSet};
use crate::model::{format_metric, HyperParams, Raster, RelationTable, SceneGraph};
use crate::providers::{EmbeddingProvider, ProviderError};
use crate::tuning::{random_search, AnnotatedDataset, SearchSpace, TuningError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_DIMENSION: i32 = 3;
pub const EXIT_NO_DATA: i32 = 4;

/// Environment variable naming a default relation table file.
pub const RELATION_TABLE_ENV: &str = "SESS_RELATION_TABLE";

#[derive(Debug, Parser)]
#[command(name = "sess", version, about = "Semantic image similarity by scene-graph matching")]
pub struct Cli {
    /// Reject unknown fields in JSON inputs.
    #[arg(long, global = true)]
    pub strict: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score one reference/candidate graph pair and print the report as JSON.
    Score(ScoreArgs),
    /// Score every line of a manifest into a CSV table.
    Batch(BatchArgs),
    /// Aggregate one metric over a manifest by condition value.
    Curve(CurveArgs),
    /// Random search for hyperparameters against human annotations.
    Tune(TuneArgs),
    /// Check input files, optionally printing their canonical form.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ScoringArgs {
    /// Hyperparameters as JSON; missing fields take the defaults. The output
    /// of `tune` is accepted as well.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Relation similarity table (defaults to $SESS_RELATION_TABLE).
    #[arg(long)]
    pub relations: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long = "ref")]
    pub reference: PathBuf,
    #[arg(long)]
    pub cand: PathBuf,
    #[command(flatten)]
    pub scoring: ScoringArgs,
    /// Write the final node matching as a Graphviz file.
    #[arg(long)]
    pub explain: Option<PathBuf>,
    /// Reference raster, for pixel importance and the pixel baselines.
    #[arg(long, requires = "cand_image")]
    pub ref_image: Option<PathBuf>,
    #[arg(long, requires = "ref_image")]
    pub cand_image: Option<PathBuf>,
    /// Patch embeddings of the reference image, for ViTScore.
    #[arg(long, requires = "cand_patches")]
    pub ref_patches: Option<PathBuf>,
    #[arg(long, requires = "ref_patches")]
    pub cand_patches: Option<PathBuf>,
    /// Include the similarity matrix after every sweep.
    #[arg(long)]
    pub snapshots: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Metric {
    Sess,
    Mse,
    Psnr,
    Ssim,
    Msssim,
    Clip,
    Vit,
}

impl Metric {
    fn name(self) -> &'static str {
        match self {
            Metric::Sess => "sess",
            Metric::Mse => "mse",
            Metric::Psnr => "psnr",
            Metric::Ssim => "ssim",
            Metric::Msssim => "msssim",
            Metric::Clip => "clip",
            Metric::Vit => "vit",
        }
    }

    fn uses_images(self) -> bool {
        matches!(self, Metric::Mse | Metric::Psnr | Metric::Ssim | Metric::Msssim)
    }
}

#[derive(Debug, Args)]
pub struct BatchArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "sess")]
    pub metrics: Vec<Metric>,
    #[command(flatten)]
    pub scoring: ScoringArgs,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, default_value = "sess")]
    pub metric: Metric,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub scoring: ScoringArgs,
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    /// Annotation dataset (JSON lines); graph paths are relative to it.
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write every trial as CSV.
    #[arg(long)]
    pub history: Option<PathBuf>,
    #[arg(long)]
    pub relations: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FileKind {
    Graph,
    Relations,
    Manifest,
    Annotations,
    Params,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(required = true)]
    pub files: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "graph")]
    pub kind: FileKind,
    /// Print the canonical serialization of each graph to stdout.
    #[arg(long)]
    pub canonical: bool,
}

/// A command failure: exit code plus message for stderr.
#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        Self::input(e.to_string())
    }
}

fn provider_code(e: &ProviderError) -> i32 {
    match e {
        ProviderError::DimensionMismatch { .. } => EXIT_DIMENSION,
        ProviderError::ZeroVector => EXIT_INPUT,
    }
}

fn match_code(e: &MatchError) -> i32 {
    match e {
        MatchError::DimensionMismatch { .. } => EXIT_DIMENSION,
        MatchError::Provider(p) => provider_code(p),
        _ => EXIT_INPUT,
    }
}

fn metric_code(e: &MetricError) -> i32 {
    match e {
        MetricError::DimensionMismatch(..) => EXIT_DIMENSION,
        MetricError::Provider(p) => provider_code(p),
        _ => EXIT_INPUT,
    }
}

impl From<MatchError> for Failure {
    fn from(e: MatchError) -> Self {
        Self {
            code: match_code(&e),
            message: e.to_string(),
        }
    }
}

impl From<MetricError> for Failure {
    fn from(e: MetricError) -> Self {
        Self {
            code: metric_code(&e),
            message: e.to_string(),
        }
    }
}

impl From<TuningError> for Failure {
    fn from(e: TuningError) -> Self {
        let code = match &e {
            TuningError::InsufficientPairs(_) => EXIT_NO_DATA,
            TuningError::Scoring { source, .. } => match_code(source),
            _ => EXIT_INPUT,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), Failure> {
    std::fs::write(path, contents).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

/// Parses a hyperparameter document: either the parameters themselves or an
/// object carrying them under `"params"`.
pub fn load_params(path: &Path) -> Result<HyperParams, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    let mut value: serde_json::Value = serde_json::from_str(&text).map_err(|e| {
        Failure::from(IoError::Json {
            path: path.to_path_buf(),
            offset: crate::io::byte_offset(&text, e.line(), e.column()),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    })?;
    if let Some(inner) = value.get_mut("params") {
        value = inner.take();
    }
    serde_json::from_value(value).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn load_relations(explicit: Option<&Path>, strict: bool) -> Result<RelationTable, Failure> {
    let env = std::env::var_os(RELATION_TABLE_ENV).filter(|v| !v.is_empty()).map(PathBuf::from);
    match explicit.map(Path::to_path_buf).or(env) {
        Some(path) => Ok(read_relation_table(&path, strict)?),
        None => Ok(RelationTable::empty()),
    }
}

struct Scorer {
    params: HyperParams,
    provider: EmbeddingProvider,
    strict: bool,
}

impl Scorer {
    fn new(args: &ScoringArgs, strict: bool) -> Result<Self, Failure> {
        let params = match &args.params {
            Some(p) => load_params(p)?,
            None => HyperParams::default(),
        };
        Ok(Self {
            params,
            provider: EmbeddingProvider::new(load_relations(args.relations.as_deref(), strict)?),
            strict,
        })
    }
}

fn load_patches(path: &Path) -> Result<PatchEmbeddingSet, Failure> {
    let vectors = read_embeddings(path)?;
    PatchEmbeddingSet::new(vectors).map_err(|e| Failure {
        code: metric_code(&e),
        message: format!("{}: {e}", path.display()),
    })
}

fn pixel_baselines(a: &Raster, b: &Raster, out: &mut BTreeMap<String, f64>, warn: &mut Vec<String>) -> Result<(), Failure> {
    let mse = metrics::mse(a, b)?;
    out.insert("mse".into(), mse);
    out.insert("psnr".into(), metrics::psnr_from_mse(mse));
    for (name, f) in [("ssim", metrics::ssim as fn(&Raster, &Raster) -> _), ("msssim", metrics::ms_ssim)] {
        match f(a, b) {
            Ok(v) => {
                out.insert(name.into(), v);
            }
            Err(e @ MetricError::TooSmall { .. }) => warn.push(format!("{name} skipped: {e}")),
            Err(e) => return Err(e.into()),
        }
    }
    Ok(())
}

fn cmd_score(args: &ScoreArgs, strict: bool, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), Failure> {
    let scorer = Scorer::new(&args.scoring, strict)?;
    let g1 = read_graph(&args.reference, strict)?;
    let g2 = read_graph(&args.cand, strict)?;
    let images = match (&args.ref_image, &args.cand_image) {
        (Some(a), Some(b)) => Some((read_raster(a)?, read_raster(b)?)),
        _ => None,
    };
    let opts = ScoreOptions {
        image1: images.as_ref().map(|(a, _)| a),
        image2: images.as_ref().map(|(_, b)| b),
        keep_snapshots: args.snapshots,
    };
    let mut report = sess_with(&g1, &g2, &scorer.provider, &scorer.params, opts)?;

    let mut baselines = BTreeMap::new();
    let mut warnings = Vec::new();
    baselines.insert("clip".to_string(), metrics::clip_metric(&g1.image_embedding, &g2.image_embedding)?);
    if let Some((a, b)) = &images {
        pixel_baselines(a, b, &mut baselines, &mut warnings)?;
    }
    if let (Some(a), Some(b)) = (&args.ref_patches, &args.cand_patches) {
        baselines.insert("vit".into(), metrics::vit_score(&load_patches(a)?, &load_patches(b)?)?);
    }
    report.baselines = Some(baselines);
    for w in warnings {
        let _ = writeln!(stderr, "warning: {w}");
    }
    if let Some(path) = &args.explain {
        write_file(path, matching_to_dot(&g1, &g2, &report.matching).as_bytes())?;
    }
    let text = serde_json::to_string_pretty(&report).expect("reports serialize");
    writeln!(stdout, "{text}").map_err(|e| Failure::input(format!("stdout: {e}")))
}

/// Result of one manifest line.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RowOutcome {
    pub values: Vec<Option<f64>>,
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
}

fn eval_row(entry: &ManifestEntry, metrics: &[Metric], scorer: &Scorer) -> RowOutcome {
    let mut out = RowOutcome::default();
    let needs_graphs = metrics.iter().any(|m| matches!(m, Metric::Sess | Metric::Clip));
    let needs_images = metrics.iter().any(|m| m.uses_images() || *m == Metric::Sess);
    let needs_patches = metrics.contains(&Metric::Vit);

    let graphs: Option<(SceneGraph, SceneGraph)> = needs_graphs
        .then(|| {
            let load = |p: &Path| read_graph(p, scorer.strict).map_err(|e| e.to_string());
            match (load(&entry.ref_graph), load(&entry.cand_graph)) {
                (Ok(a), Ok(b)) => Some((a, b)),
                (a, b) => {
                    out.errors.extend(a.err().into_iter().chain(b.err()));
                    None
                }
            }
        })
        .flatten();

    // Some(Ok) loaded, Some(Err) listed but unreadable, None not listed.
    let images: Option<Result<(Raster, Raster), ()>> = match (&entry.ref_image, &entry.cand_image) {
        (Some(a), Some(b)) if needs_images => Some(match (read_raster(a), read_raster(b)) {
            (Ok(a), Ok(b)) => Ok((a, b)),
            (a, b) => {
                out.errors.extend(a.err().into_iter().chain(b.err()).map(|e| e.to_string()));
                Err(())
            }
        }),
        _ => None,
    };

    let patches: Option<(PatchEmbeddingSet, PatchEmbeddingSet)> = match (&entry.ref_patches, &entry.cand_patches) {
        (Some(a), Some(b)) if needs_patches => match (load_patches(a), load_patches(b)) {
            (Ok(a), Ok(b)) => Some((a, b)),
            (a, b) => {
                out.errors.extend(a.err().into_iter().chain(b.err()).map(|f| f.message));
                None
            }
        },
        _ => None,
    };

    let mut sess_value = None;
    let mut mse_value = None;
    for &m in metrics {
        let value: Result<Option<f64>, String> = match m {
            Metric::Sess => match (&graphs, &images) {
                (Some(_), Some(Err(()))) | (None, _) => Ok(None),
                (Some((a, b)), imgs) => {
                    if sess_value.is_none() {
                        let pair = imgs.as_ref().and_then(|r| r.as_ref().ok());
                        let opts = ScoreOptions {
                            image1: pair.map(|(x, _)| x),
                            image2: pair.map(|(_, y)| y),
                            keep_snapshots: false,
                        };
                        sess_value = Some(
                            sess_with(a, b, &scorer.provider, &scorer.params, opts)
                                .map(|r| r.sess)
                                .map_err(|e| e.to_string()),
                        );
                    }
                    sess_value.clone().expect("computed above").map(Some)
                }
            },
            Metric::Clip => match &graphs {
                Some((a, b)) => metrics::clip_metric(&a.image_embedding, &b.image_embedding)
                    .map(Some)
                    .map_err(|e| e.to_string()),
                None => Ok(None),
            },
            m if m.uses_images() => match &images {
                Some(Ok((a, b))) => {
                    let mut mse = || {
                        mse_value
                            .get_or_insert_with(|| metrics::mse(a, b).map_err(|e| e.to_string()))
                            .clone()
                    };
                    match m {
                        Metric::Mse => mse().map(Some),
                        Metric::Psnr => mse().map(|v| Some(metrics::psnr_from_mse(v))),
                        Metric::Ssim => metrics::ssim(a, b).map(Some).map_err(|e| e.to_string()),
                        _ => metrics::ms_ssim(a, b).map(Some).map_err(|e| e.to_string()),
                    }
                }
                Some(Err(())) => Ok(None),
                None => {
                    out.warnings.push(format!("{}: no rasters for this line", m.name()));
                    Ok(None)
                }
            },
            _ => match (&patches, &entry.ref_patches, &entry.cand_patches) {
                (Some((a, b)), _, _) => metrics::vit_score(a, b).map(Some).map_err(|e| e.to_string()),
                (None, Some(_), Some(_)) => Ok(None),
                _ => {
                    out.warnings.push("vit: no patch embeddings for this line".into());
                    Ok(None)
                }
            },
        };
        match value {
            Ok(v) => out.values.push(v),
            Err(e) => {
                let msg = format!("{}: {e}", m.name());
                if !out.errors.contains(&msg) {
                    out.errors.push(msg);
                }
                out.values.push(None);
            }
        }
    }
    out
}

fn eval_manifest(entries: &[ManifestEntry], metrics: &[Metric], scorer: &Scorer, stderr: &mut dyn Write) -> Vec<RowOutcome> {
    let rows: Vec<RowOutcome> = entries.par_iter().map(|e| eval_row(e, metrics, scorer)).collect();
    for (entry, row) in entries.iter().zip(&rows) {
        for w in &row.warnings {
            let _ = writeln!(stderr, "warning: line {}: {w}", entry.line);
        }
    }
    rows
}

fn csv_error(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::input(format!("{}: {e}", path.display()))
}

fn cmd_batch(args: &BatchArgs, strict: bool, stderr: &mut dyn Write) -> Result<(), Failure> {
    let scorer = Scorer::new(&args.scoring, strict)?;
    let entries = read_manifest(&args.manifest, strict)?;
    let rows = eval_manifest(&entries, &args.metrics, &scorer, stderr);
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["condition_name", "condition_value"];
    header.extend(args.metrics.iter().map(|m| m.name()));
    header.push("errors");
    w.write_record(&header).map_err(|e| csv_error(&args.out, e))?;
    for (entry, row) in entries.iter().zip(&rows) {
        let mut record = vec![entry.condition.name.clone(), format_metric(entry.condition.value)];
        record.extend(row.values.iter().map(|v| v.map(format_metric).unwrap_or_default()));
        record.push(row.errors.join("; "));
        w.write_record(&record).map_err(|e| csv_error(&args.out, e))?;
    }
    let bytes = w.into_inner().map_err(|e| csv_error(&args.out, e))?;
    write_file(&args.out, &bytes)
}

/// One row of a curve table.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub condition_value: f64,
    pub mean: f64,
    /// Population standard deviation.
    pub stddev: f64,
    pub n: usize,
}

/// Groups finite values by exact condition value, ascending.
pub fn curve_points(samples: &[(f64, f64)]) -> Vec<CurvePoint> {
    let mut sorted: Vec<(f64, f64)> = samples.iter().copied().filter(|(c, v)| c.is_finite() && v.is_finite()).collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    sorted
        .chunk_by(|a, b| a.0 == b.0)
        .map(|group| {
            let n = group.len();
            let mean = group.iter().map(|g| g.1).sum::<f64>() / n as f64;
            let var = group.iter().map(|g| (g.1 - mean).powi(2)).sum::<f64>() / n as f64;
            CurvePoint {
                condition_value: group[0].0,
                mean,
                stddev: var.sqrt(),
                n,
            }
        })
        .collect()
}

fn cmd_curve(args: &CurveArgs, strict: bool, stderr: &mut dyn Write) -> Result<(), Failure> {
    let scorer = Scorer::new(&args.scoring, strict)?;
    let entries = read_manifest(&args.manifest, strict)?;
    let rows = eval_manifest(&entries, &[args.metric], &scorer, stderr);
    let mut samples = Vec::new();
    for (entry, row) in entries.iter().zip(&rows) {
        for e in &row.errors {
            let _ = writeln!(stderr, "warning: line {}: {e}", entry.line);
        }
        match row.values[0] {
            Some(v) if v.is_finite() => samples.push((entry.condition.value, v)),
            Some(v) => {
                let _ = writeln!(stderr, "warning: line {}: skipping non-finite {}", entry.line, format_metric(v));
            }
            None => {}
        }
    }
    let points = curve_points(&samples);
    if points.is_empty() {
        return Err(Failure {
            code: EXIT_NO_DATA,
            message: format!("no data: no usable {} values in {}", args.metric.name(), args.manifest.display()),
        });
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["condition_value", "mean", "stddev", "n"]).map_err(|e| csv_error(&args.out, e))?;
    for p in &points {
        w.write_record([
            format_metric(p.condition_value),
            format_metric(p.mean),
            format_metric(p.stddev),
            p.n.to_string(),
        ])
        .map_err(|e| csv_error(&args.out, e))?;
    }
    let bytes = w.into_inner().map_err(|e| csv_error(&args.out, e))?;
    write_file(&args.out, &bytes)
}

fn cmd_tune(args: &TuneArgs, strict: bool, stderr: &mut dyn Write) -> Result<(), Failure> {
    let relations = load_relations(args.relations.as_deref(), strict)?;
    let provider = EmbeddingProvider::new(relations);
    let records = read_annotations(&args.dataset)?;
    let base = args.dataset.parent().unwrap_or(Path::new(""));
    let dataset = AnnotatedDataset::load(&records, base, |p| read_graph(p, strict))?;
    let total = args.trials;
    let (best, history) = random_search(&SearchSpace::default(), &dataset, &provider, total, args.seed, |i, t| {
        let _ = writeln!(
            stderr,
            "trial {}/{total}: pearson {:.6} mae {:.6}{}",
            i + 1,
            t.pearson,
            t.mae,
            if t.degenerate { " (degenerate)" } else { "" }
        );
    })?;
    let doc = json!({"params": best.params, "result": best});
    let mut text = serde_json::to_string_pretty(&doc).expect("results serialize");
    text.push('\n');
    write_file(&args.out, text.as_bytes())?;
    if let Some(path) = &args.history {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["trial", "alpha", "beta", "gamma", "iterations", "k", "pearson", "mae", "degenerate"])
            .map_err(|e| csv_error(path, e))?;
        for (i, t) in history.iter().enumerate() {
            let p = t.params;
            w.write_record([
                i.to_string(),
                p.alpha.to_string(),
                p.beta.to_string(),
                p.gamma.to_string(),
                p.iterations.to_string(),
                p.k.to_string(),
                t.pearson.to_string(),
                t.mae.to_string(),
                t.degenerate.to_string(),
            ])
            .map_err(|e| csv_error(path, e))?;
        }
        let bytes = w.into_inner().map_err(|e| csv_error(path, e))?;
        write_file(path, &bytes)?;
    }
    let _ = writeln!(stderr, "best: pearson {:.6} mae {:.6}", best.pearson, best.mae);
    Ok(())
}

fn cmd_validate(args: &ValidateArgs, strict: bool, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), Failure> {
    let mut failures = 0;
    for path in &args.files {
        let result: Result<Option<String>, Failure> = match args.kind {
            FileKind::Graph => read_graph(path, strict).map(|g| Some(graph_to_canonical_json(&g))).map_err(Into::into),
            FileKind::Relations => read_relation_table(path, strict)
                .map(|t| Some(io::relation_table_to_json(&t)))
                .map_err(Into::into),
            FileKind::Manifest => read_manifest(path, strict).map(|_| None).map_err(Into::into),
            FileKind::Annotations => read_annotations(path).map(|_| None).map_err(Into::into),
            FileKind::Params => load_params(path).map(|_| None),
        };
        match result {
            Ok(canonical) => {
                if args.canonical {
                    if let Some(text) = canonical {
                        let _ = stdout.write_all(text.as_bytes());
                    }
                } else {
                    let _ = writeln!(stdout, "ok {}", path.display());
                }
            }
            Err(f) => {
                failures += 1;
                let _ = writeln!(stderr, "error: {}", f.message);
            }
        }
    }
    if failures > 0 {
        return Err(Failure::input(format!("{failures} of {} files failed validation", args.files.len())));
    }
    Ok(())
}

/// Runs a parsed command line.
pub fn execute(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), Failure> {
    match &cli.command {
        Command::Score(a) => cmd_score(a, cli.strict, stdout, stderr),
        Command::Batch(a) => cmd_batch(a, cli.strict, stderr),
        Command::Curve(a) => cmd_curve(a, cli.strict, stderr),
        Command::Tune(a) => cmd_tune(a, cli.strict, stderr),
        Command::Validate(a) => cmd_validate(a, cli.strict, stdout, stderr),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code.
pub fn run_from<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() {
                stderr.write_all(rendered.as_bytes())
            } else {
                stdout.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    match execute(&cli, stdout, stderr) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}

pub fn run() -> i32 {
    run_from(std::env::args_os(), &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}
