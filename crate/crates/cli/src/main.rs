//! `nds`: degrade images, select reference views, evaluate WKS, and build
//! or check paired datasets.
//!
//! Exit status is 0 on success, 1 on bad input or configuration and 2 when
//! a dataset fails verification. `NDS_THREADS` caps the worker count.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;
use nds_core::degrade::{degrade, sample_recipe, DegradationRecipe, RecipeRanges};
use nds_core::image::io::{read_image, write_image};
use nds_core::pipeline::{
    build_dataset, init_global_pool, quality_report, verify_dataset, DatasetConfig, ReportConfig,
};
use nds_core::viewsel::{import_llff, load_poses, save_poses, select_references, BoundingSphere, SelectOptions};
use nds_core::wks::{wks_loss, Reduction, WksParams};
use nds_core::{NdsError, Result};
use serde_json::json;

#[derive(Parser)]
#[command(name = "nds", version, about = "NeRF-style degradation simulator")]
struct Cli {
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Degrade one target (and its references) with a sampled or given recipe.
    Degrade(DegradeArgs),
    /// Pick the reference views with the lowest mutual matching cost.
    SelectViews(SelectArgs),
    /// Weighted top-K similarity loss of a prediction against a real frame.
    WksEval(WksArgs),
    /// Generate a paired dataset from a JSON config.
    BuildDataset(BuildArgs),
    /// Re-run every recipe in a dataset and compare against the stored output.
    VerifyDataset {
        /// Dataset directory holding manifest.jsonl.
        #[arg(long)]
        dir: PathBuf,
    },
    /// Compare image statistics of a simulated corpus with a real one.
    QualityReport(ReportArgs),
    /// Convert an LLFF poses_bounds file (.npy or text) to the JSON pose format.
    ImportLlff {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct DegradeArgs {
    #[arg(long)]
    input: PathBuf,
    /// Two reference views; they receive the shared illumination jetting.
    #[arg(long, num_args = 2, value_names = ["REF1", "REF2"])]
    refs: Vec<PathBuf>,
    /// Recipe seed; ignored when --recipe is given.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Replay an existing recipe instead of sampling one.
    #[arg(long, conflicts_with = "seed")]
    recipe: Option<PathBuf>,
    /// Sampling ranges (JSON); defaults to the built-in ranges.
    #[arg(long, conflicts_with = "recipe")]
    ranges: Option<PathBuf>,
    #[arg(long)]
    recipe_out: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SelectArgs {
    /// Pose file: JSON, or LLFF poses_bounds (.npy / .txt).
    #[arg(long)]
    poses: PathBuf,
    #[arg(long)]
    target: usize,
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, default_value_t = 16)]
    grid: usize,
    /// Bounding sphere `cx,cy,cz,r`; estimated from the rig when omitted.
    #[arg(long, allow_hyphen_values = true)]
    sphere: Option<String>,
    /// Views that may not be chosen (comma separated).
    #[arg(long, value_delimiter = ',')]
    exclude: Vec<usize>,
}

#[derive(Args)]
struct WksArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    gt: PathBuf,
    #[arg(long)]
    real: PathBuf,
    #[arg(long, default_value_t = 7)]
    patch: usize,
    #[arg(long, default_value_t = 4)]
    stride: usize,
    /// Stride for unfolding the real frame; defaults to --stride.
    #[arg(long)]
    candidate_stride: Option<usize>,
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, default_value = "mean")]
    reduction: Reduction,
}

#[derive(Args)]
struct BuildArgs {
    #[arg(long)]
    config: PathBuf,
    /// Override the configured worker count (still capped by NDS_THREADS).
    #[arg(long)]
    threads: Option<usize>,
    /// Replace an existing dataset in the output directory.
    #[arg(long)]
    overwrite: bool,
}

#[derive(Args)]
struct ReportArgs {
    /// Simulated corpus (searched recursively for PNG/PPM files).
    #[arg(long)]
    sim: PathBuf,
    /// Real-artifact corpus.
    #[arg(long)]
    real: PathBuf,
    #[arg(long, default_value_t = 64)]
    bins: usize,
    #[arg(long)]
    max_images: Option<usize>,
    /// Also write the full report here.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn read_ranges(path: &Path) -> Result<RecipeRanges> {
    let text = std::fs::read_to_string(path).map_err(|e| NdsError::Io {
        path: path.into(),
        source: e,
    })?;
    let ranges: RecipeRanges = serde_json::from_str(&text)?;
    ranges.validate()?;
    Ok(ranges)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| NdsError::Io {
        path: path.into(),
        source: e,
    })
}

fn print_json(v: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("values always serialize"));
}

fn run_degrade(a: DegradeArgs) -> Result<()> {
    let recipe = match &a.recipe {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| NdsError::Io {
                path: p.clone(),
                source: e,
            })?;
            DegradationRecipe::from_json(&text)?
        }
        None => {
            let ranges = match &a.ranges {
                Some(p) => read_ranges(p)?,
                None => RecipeRanges::default(),
            };
            sample_recipe(a.seed, &ranges)?
        }
    };
    let target = read_image(&a.input)?;
    let refs = a.refs.iter().map(read_image).collect::<Result<Vec<_>>>()?;
    let out = degrade(&target, &refs, &recipe)?;
    std::fs::create_dir_all(&a.out).map_err(|e| NdsError::Io {
        path: a.out.clone(),
        source: e,
    })?;
    write_image(a.out.join("degraded.png"), &out.degraded)?;
    for (n, r) in out.refs.iter().enumerate() {
        write_image(a.out.join(format!("ref{}.png", n + 1)), r)?;
    }
    if let Some(p) = &a.recipe_out {
        write_text(p, &recipe.to_json())?;
    }
    info!("wrote {}", a.out.display());
    Ok(())
}

fn run_select(a: SelectArgs) -> Result<()> {
    let is_json = a.poses.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let poses = if is_json {
        load_poses(&a.poses)?
    } else {
        import_llff(&a.poses)?
    };
    let opts = SelectOptions {
        grid_n: a.grid,
        sphere: a.sphere.as_deref().map(BoundingSphere::parse).transpose()?,
        ..SelectOptions::default()
    };
    let sel = select_references(&poses, a.target, a.k, &a.exclude, &opts)?;
    print_json(&serde_json::to_value(&sel)?);
    Ok(())
}

fn run_wks(a: WksArgs) -> Result<()> {
    let params = WksParams {
        patch_size: a.patch,
        stride: a.stride,
        candidate_stride: a.candidate_stride.unwrap_or(a.stride),
        k: a.k,
        alpha: a.alpha,
        beta: a.beta,
        reduction: a.reduction,
    };
    let eval = wks_loss(
        &read_image(&a.pred)?,
        &read_image(&a.gt)?,
        &read_image(&a.real)?,
        &params,
    )?;
    print_json(&json!({ "loss": eval.loss, "per_patch_stats": eval.stats() }));
    Ok(())
}

fn run_build(a: BuildArgs) -> Result<()> {
    let mut cfg = DatasetConfig::load(&a.config)?;
    if a.threads.is_some() {
        cfg.threads = a.threads;
    }
    cfg.overwrite |= a.overwrite;
    let report = build_dataset(&cfg)?;
    print_json(&json!({
        "manifest": report.manifest,
        "samples": report.samples,
        "verified": report.verified.len(),
        "threads": report.threads,
        "config_hash": cfg.content_hash(),
    }));
    Ok(())
}

fn run_report(a: ReportArgs) -> Result<()> {
    let cfg = ReportConfig {
        bins: a.bins,
        max_images: a.max_images,
        ..ReportConfig::default()
    };
    let report = quality_report(&a.sim, &a.real, &cfg)?;
    if let Some(p) = &a.out {
        write_text(p, &serde_json::to_string_pretty(&report)?)?;
    }
    print_json(&json!({
        "simulated_images": report.simulated.images,
        "real_images": report.real.images,
        "distances": report.distances,
    }));
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    init_global_pool()?;
    match cli.command {
        Command::Degrade(a) => run_degrade(a),
        Command::SelectViews(a) => run_select(a),
        Command::WksEval(a) => run_wks(a),
        Command::BuildDataset(a) => run_build(a),
        Command::VerifyDataset { dir } => {
            let n = verify_dataset(&dir)?;
            print_json(&json!({ "verified": n, "valid": true }));
            Ok(())
        }
        Command::QualityReport(a) => run_report(a),
        Command::ImportLlff { input, out } => {
            let poses = import_llff(&input)?;
            save_poses(&out, &poses)?;
            info!("converted {} pose(s)", poses.len());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
