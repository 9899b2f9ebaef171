//! The `sphergeo` command line.
//!
//! Exit codes: 0 on success, 1 for usage errors, 2 for data errors (files
//! that cannot be read, parsed or validated).

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::augment::{augment_dataset, AugmentConfig};
use crate::bench::{run_bench, DEFAULT_WARMUP};
use crate::dataio::{
    dataset_to_string, load_boxes, load_dataset, load_image, load_predictions, save_image, save_predictions,
    PredictionFile,
};
use crate::error::{Error, Result};
use crate::eval::{evaluate, format_table, EvalConfig, LatBand};
use crate::iou::{iou_matrix, IouMethod, McParams};
use crate::nms::{nms, Detection};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

pub const THREADS_ENV: &str = "SPHERGEO_THREADS";

#[derive(Debug, Parser)]
#[command(name = "sphergeo", version, about = "Field-of-view bounding box geometry on the sphere")]
pub struct Cli {
    /// Worker threads for batch work (falls back to SPHERGEO_THREADS, then all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Pairwise IoU matrix of two box lists as CSV.
    Iou(IouArgs),
    /// Per-image greedy NMS over a prediction file.
    Nms(NmsArgs),
    /// COCO-style AP report.
    Eval(EvalArgs),
    /// Rotate a fraction of the images and their boxes.
    Augment(AugmentArgs),
    /// Time the IoU kernels.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Fov,
    Sph,
    Exact,
    Mc,
}

#[derive(Debug, Args)]
pub struct MethodOpts {
    #[arg(long, value_enum, default_value = "fov")]
    pub method: MethodArg,
    /// Seed of the Monte-Carlo method.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Sample count of the Monte-Carlo method.
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: u64,
}

impl MethodOpts {
    fn method(&self) -> Result<IouMethod> {
        Ok(match self.method {
            MethodArg::Fov => IouMethod::Fov,
            MethodArg::Sph => IouMethod::Sph,
            MethodArg::Exact => IouMethod::Exact,
            MethodArg::Mc => IouMethod::MonteCarlo(McParams::new(self.samples, self.seed)?),
        })
    }
}

#[derive(Debug, Args)]
pub struct IouArgs {
    /// Box list: a JSON array of [lon, lat, fov_h, fov_v] or a dataset file.
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    #[command(flatten)]
    pub method: MethodOpts,
    /// Write the CSV here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct NmsArgs {
    #[arg(long)]
    pub det: PathBuf,
    #[arg(long = "iou-thr", default_value_t = 0.5)]
    pub iou_thr: f64,
    #[command(flatten)]
    pub method: MethodOpts,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_band(s: &str) -> std::result::Result<LatBand, String> {
    let (lo, hi) = s.split_once(':').ok_or_else(|| format!("expected LO:HI, got {s:?}"))?;
    let lo: f64 = lo.trim().parse().map_err(|e| format!("{lo:?}: {e}"))?;
    let hi: f64 = hi.trim().parse().map_err(|e| format!("{hi:?}: {e}"))?;
    LatBand::new(lo, hi).map_err(|e| e.to_string())
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long)]
    pub det: PathBuf,
    #[command(flatten)]
    pub method: MethodOpts,
    /// Absolute-latitude band in degrees, repeatable. Defaults to 50:90.
    #[arg(long = "lat-band", value_parser = parse_band)]
    pub lat_band: Vec<LatBand>,
    /// Report JSON.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    #[arg(long)]
    pub images: PathBuf,
    #[arg(long)]
    pub ann: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    pub fraction: f64,
    /// Pitch is drawn from [-P, P] degrees.
    #[arg(long = "pitch-max", default_value_t = 30.0)]
    pub pitch_max: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_WARMUP)]
    pub warmup: f64,
    #[arg(long, value_enum, default_value = "text")]
    pub format: BenchFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BenchFormat {
    Text,
    Csv,
}

fn thread_count(flag: Option<usize>) -> std::result::Result<Option<usize>, String> {
    if let Some(n) = flag {
        return Ok(Some(n));
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| format!("{THREADS_ENV}={v:?} is not a thread count")),
        _ => Ok(None),
    }
}

/// Parses `args` (program name first) and runs the subcommand.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    let threads = match thread_count(cli.threads) {
        Ok(t) => t,
        Err(msg) => {
            let _ = writeln!(err, "error: {msg}");
            return EXIT_USAGE;
        }
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_USAGE;
        }
    };
    let (mut obuf, mut ebuf) = (Vec::new(), Vec::new());
    let result = pool.install(|| dispatch(&cli.command, &mut obuf, &mut ebuf));
    let _ = out.write_all(&obuf);
    let _ = err.write_all(&ebuf);
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            match e {
                Error::InvalidArgument(_) | Error::InvalidThreshold(_) | Error::TooFewSamples { .. } => EXIT_USAGE,
                _ => EXIT_DATA,
            }
        }
    }
}

fn dispatch(cmd: &Command, out: &mut Vec<u8>, err: &mut Vec<u8>) -> Result<()> {
    match cmd {
        Command::Iou(a) => cmd_iou(a, out),
        Command::Nms(a) => cmd_nms(a, err),
        Command::Eval(a) => cmd_eval(a, out),
        Command::Augment(a) => cmd_augment(a, out),
        Command::Bench(a) => cmd_bench(a, out),
    }
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn emit(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes()).map_err(|e| Error::io("<stdout>", e))
}

pub fn cmd_iou(args: &IouArgs, out: &mut dyn Write) -> Result<()> {
    let method = args.method.method()?;
    let a = load_boxes(&args.a)?;
    let b = load_boxes(&args.b)?;
    let csv = iou_matrix(&a, &b, method).to_csv();
    match &args.out {
        Some(p) => write_file(p, csv.as_bytes()),
        None => emit(out, &csv),
    }
}

pub fn cmd_nms(args: &NmsArgs, err: &mut dyn Write) -> Result<()> {
    let method = args.method.method()?;
    let preds = load_predictions(&args.det)?.predictions;
    let mut by_image: BTreeMap<i64, Vec<Detection>> = BTreeMap::new();
    for p in &preds {
        by_image.entry(p.image_id).or_default().push(*p);
    }
    let mut kept = Vec::with_capacity(preds.len());
    for dets in by_image.values() {
        kept.extend(nms(dets, args.iou_thr, method)?);
    }
    let _ = writeln!(err, "kept {} of {} detections", kept.len(), preds.len());
    save_predictions(&PredictionFile::new(kept), &args.out)
}

pub fn cmd_eval(args: &EvalArgs, out: &mut dyn Write) -> Result<()> {
    let mut cfg = EvalConfig {
        method: args.method.method()?,
        ..EvalConfig::default()
    };
    if !args.lat_band.is_empty() {
        cfg.bands = args.lat_band.clone();
    }
    let gt = load_dataset(&args.gt)?;
    let dets = load_predictions(&args.det)?.predictions;
    let report = evaluate(&gt.to_eval(), &dets, &cfg)?;
    let mut json = serde_json::to_string_pretty(&report).expect("report serializes");
    json.push('\n');
    write_file(&args.out, json.as_bytes())?;
    emit(out, &format_table(&report))
}

pub fn cmd_augment(args: &AugmentArgs, out: &mut dyn Write) -> Result<()> {
    if !(0.0..=90.0).contains(&args.pitch_max) {
        return Err(Error::InvalidArgument(format!("pitch-max {} outside [0, 90]", args.pitch_max)));
    }
    let cfg = AugmentConfig {
        pitch_range: (-args.pitch_max, args.pitch_max),
        fraction: args.fraction,
        seed: args.seed,
        ..AugmentConfig::default()
    };
    cfg.validate()?;
    let input = fs::read_to_string(&args.ann).map_err(|e| Error::io(&args.ann, e))?;
    let ds = crate::dataio::parse_dataset(&args.ann, &input)?;
    let images_dir = args.images.clone();
    let result = augment_dataset(&ds, &cfg, |rec| load_image(images_dir.join(&rec.file_name)))?;

    fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    for rec in &ds.images {
        let src = args.images.join(&rec.file_name);
        let dst = args.out.join(&rec.file_name);
        if let Some(parent) = dst.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        fs::copy(&src, &dst).map_err(|e| Error::io(&src, e))?;
    }
    for aug in &result.images {
        save_image(&aug.image, args.out.join(&aug.record.file_name))?;
    }
    // an untouched dataset is copied verbatim
    let ann_text = if result.images.is_empty() {
        input
    } else {
        dataset_to_string(&result.dataset)
    };
    write_file(&args.out.join("annotations.json"), ann_text.as_bytes())?;
    emit(
        out,
        &format!(
            "images: {} (+{})\nannotations: {}\ndropped boxes: {}\n",
            result.dataset.images.len(),
            result.images.len(),
            result.dataset.annotations.len(),
            result.dropped_boxes
        ),
    )
}

pub fn cmd_bench(args: &BenchArgs, out: &mut dyn Write) -> Result<()> {
    let methods = [IouMethod::Sph, IouMethod::Fov, IouMethod::Exact];
    // single worker regardless of --threads
    let results = run_bench(&methods, args.n, args.seed, args.warmup)?;
    let mean = |name: &str| results.iter().find(|r| r.method == name).map(|r| r.mean_ns).unwrap_or(f64::NAN);
    let mut s = String::new();
    match args.format {
        BenchFormat::Csv => {
            s.push_str("method,n_calls,mean_ns,p50_ns,p95_ns,pairs_per_s\n");
            for r in &results {
                s.push_str(&format!(
                    "{},{},{:.3},{:.3},{:.3},{:.1}\n",
                    r.method,
                    r.n_calls,
                    r.mean_ns,
                    r.p50_ns,
                    r.p95_ns,
                    r.pairs_per_second()
                ));
            }
        }
        BenchFormat::Text => {
            s.push_str(&format!(
                "{:<8}{:>10}{:>14}{:>14}{:>14}{:>16}\n",
                "method", "n_calls", "mean_ns", "p50_ns", "p95_ns", "pairs_per_s"
            ));
            for r in &results {
                s.push_str(&format!(
                    "{:<8}{:>10}{:>14.3}{:>14.3}{:>14.3}{:>16.1}\n",
                    r.method,
                    r.n_calls,
                    r.mean_ns,
                    r.p50_ns,
                    r.p95_ns,
                    r.pairs_per_second()
                ));
            }
        }
    }
    s.push_str(&format!("ratio exact/fov: {:.3}\n", mean("exact") / mean("fov")));
    s.push_str(&format!("ratio fov/sph: {:.3}\n", mean("fov") / mean("sph")));
    emit(out, &s)
}
