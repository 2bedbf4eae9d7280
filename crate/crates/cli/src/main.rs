use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use eed_core::analysis::{analyze, write_outputs, AnalyzeSpec};
use eed_core::diffusion::{dirichlet_energy, Diffuser};
use eed_core::io::{read_image, write_png};
use eed_core::metrics::ClassSet;
use eed_core::pipeline::{run_job_with, DatasetJob, EntryStatus, RunControl, WORKERS_ENV};
use eed_core::{builtin_presets, preset, DiffusionParams, NamedPreset, ParamsOverride};
use eed_service::ServiceConfig;

#[derive(Parser)]
#[command(name = "eed", version, about = "Edge-enhancing diffusion for texture suppression")]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    /// Only print errors.
    #[arg(short, long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Diffuse one image and write each snapshot as PNG.
    Diffuse(DiffuseArgs),
    /// Run a dataset job described by a TOML file.
    Batch(BatchArgs),
    /// Class IoU, segment table and prediction diffs over mask trees.
    Analyze(AnalyzeArgs),
    /// List or print the built-in presets.
    Presets {
        #[command(subcommand)]
        action: PresetAction,
    },
    /// Start the preview service.
    Serve(ServeArgs),
}

/// Parameter selection. Flags mirror preset-file keys and override them.
#[derive(Args)]
struct ParamFlags {
    /// Built-in preset to start from [default: P_strong].
    #[arg(long, conflicts_with = "preset_file")]
    preset: Option<String>,
    /// Preset TOML file to start from.
    #[arg(long)]
    preset_file: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    kappa: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    presmooth_sigma: Option<f64>,
    #[arg(long)]
    presmooth_kernel: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    orient_sigma: Option<f64>,
    #[arg(long)]
    orient_kernel: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    tau: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    /// Comma-separated snapshot steps, e.g. `1024,5792`.
    #[arg(long, value_delimiter = ',')]
    snapshots: Option<Vec<usize>>,
}

impl ParamFlags {
    fn resolve(&self) -> anyhow::Result<NamedPreset> {
        let base = match &self.preset_file {
            Some(path) => NamedPreset {
                name: path.file_stem().map_or("custom".into(), |s| s.to_string_lossy().into_owned()),
                params: DiffusionParams::load(path)?,
            },
            None => preset(self.preset.as_deref().unwrap_or("P_strong"))?,
        };
        let o = ParamsOverride {
            kappa: self.kappa,
            presmooth_sigma: self.presmooth_sigma,
            presmooth_kernel: self.presmooth_kernel,
            orient_sigma: self.orient_sigma,
            orient_kernel: self.orient_kernel,
            tau: self.tau,
            steps: self.steps,
            snapshots: self.snapshots.clone(),
        };
        Ok(NamedPreset {
            params: base.params.apply(&o)?,
            name: base.name,
        })
    }
}

#[derive(Args)]
struct DiffuseArgs {
    image: PathBuf,
    /// Output directory; snapshots are written as `<stem>_t<step>.png`.
    #[arg(short, long)]
    out: PathBuf,
    #[command(flatten)]
    params: ParamFlags,
}

#[derive(Args)]
struct BatchArgs {
    /// Job file with input_root, output_root, preset or preset_file, [params].
    job: PathBuf,
    /// Worker threads; overrides the job file.
    #[arg(long, env = WORKERS_ENV)]
    workers: Option<usize>,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Ground-truth mask tree.
    #[arg(long)]
    gt: PathBuf,
    /// Prediction tree as `name=DIR` (or just DIR); give one or two.
    #[arg(long = "pred", required = true, num_args = 1)]
    preds: Vec<String>,
    /// Image tree used for boundary visibility.
    #[arg(long)]
    images: Option<PathBuf>,
    /// Class-set file (`<id> <name>` per line) [default: 14-class street set].
    #[arg(long)]
    classes: Option<PathBuf>,
    #[arg(long, default_value = "**/*.png")]
    pattern: String,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Toml,
    Json,
}

#[derive(Subcommand)]
enum PresetAction {
    List,
    /// Print a preset; the TOML form is a valid preset file.
    Show {
        name: String,
        #[arg(long, value_enum, default_value = "toml")]
        format: Format,
    },
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1")]
    host: std::net::IpAddr,
    #[arg(long, default_value_t = 8765)]
    port: u16,
    /// Jobs diffusing concurrently.
    #[arg(long, default_value_t = 1)]
    max_running: usize,
    /// Waiting jobs before submissions get 429.
    #[arg(long, default_value_t = 8)]
    queue: usize,
    /// Largest accepted crop edge in pixels.
    #[arg(long, default_value_t = eed_service::DEFAULT_MAX_EDGE)]
    max_edge: usize,
}

fn cmd_diffuse(args: &DiffuseArgs) -> anyhow::Result<ExitCode> {
    let named = args.params.resolve()?;
    let img = read_image(&args.image)?;
    let stem = args.image.file_stem().context("image path has no file name")?.to_string_lossy();
    let diffuser = Diffuser::new(&named.params)?;
    let steps = named.params.steps;
    eprintln!("{}: {}x{}, {} steps of {}", args.image.display(), img.width(), img.height(), steps, named.name);
    println!("step\tdirichlet_energy\tpath");
    println!("input\t{:.6}\t{}", dirichlet_energy(&img), args.image.display());
    let every = (steps / 20).max(1);
    let outcome = diffuser.run_with(&img, |step, _| {
        if step % every == 0 {
            log::info!("step {step}/{steps}");
        }
        std::ops::ControlFlow::Continue(())
    })?;
    for snap in outcome.snapshots {
        let path = args.out.join(format!("{stem}_t{}.png", snap.step));
        write_png(&path, &snap.image)?;
        println!("{}\t{:.6}\t{}", snap.step, dirichlet_energy(&snap.image), path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_batch(args: &BatchArgs) -> anyhow::Result<ExitCode> {
    let mut job = DatasetJob::load(&args.job)?;
    if let Some(w) = args.workers {
        job.workers = w;
    }
    eprintln!(
        "{} -> {} ({}, {} workers)",
        job.input_root.display(),
        job.output_root.display(),
        job.preset.name,
        job.workers
    );
    let mut finished = 0;
    let report = run_job_with(&job, &RunControl::default(), |e| {
        finished += 1;
        match e.status {
            EntryStatus::Failed => eprintln!("[{finished}] FAILED {}: {}", e.relative_path, e.error.as_deref().unwrap_or("")),
            _ => eprintln!("[{finished}] {} ({} ms)", e.relative_path, e.wall_time_ms),
        }
    })?;
    eprintln!(
        "processed {}, skipped {}, failed {}",
        report.processed, report.skipped, report.failed
    );
    Ok(if report.failed > 0 { ExitCode::FAILURE } else { ExitCode::SUCCESS })
}

fn cmd_analyze(args: &AnalyzeArgs) -> anyhow::Result<ExitCode> {
    if args.preds.len() > 2 {
        bail!("at most two --pred trees are supported");
    }
    let preds = args
        .preds
        .iter()
        .enumerate()
        .map(|(k, p)| match p.split_once('=') {
            Some((name, dir)) => (name.to_string(), PathBuf::from(dir)),
            None => (format!("pred{}", k + 1), PathBuf::from(p)),
        })
        .collect();
    let classes = match &args.classes {
        Some(path) => ClassSet::load(path)?,
        None => ClassSet::street14(),
    };
    let spec = AnalyzeSpec {
        gt_root: args.gt.clone(),
        preds,
        images: args.images.clone(),
        classes,
        pattern: args.pattern.clone(),
    };
    if spec.preds.len() == 2 && spec.images.is_none() {
        log::warn!("no --images given: skipping the s_IoU-difference scatter table");
    }
    let out = analyze(&spec)?;
    write_outputs(&args.out, &out)?;
    for table in &out.report.class_iou {
        match table.miou {
            Some(m) => eprintln!("mIoU {:.4}", m),
            None => eprintln!("mIoU undefined"),
        }
    }
    eprintln!("{} segments -> {}", out.report.segments.len(), args.out.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_presets(action: &PresetAction) -> anyhow::Result<ExitCode> {
    match action {
        PresetAction::List => {
            for p in builtin_presets() {
                let q = &p.params;
                println!(
                    "{}\tkappa={} sigma={} kernel={} tau={} steps={}",
                    p.name, q.kappa, q.presmooth_sigma, q.presmooth_kernel, q.tau, q.steps
                );
            }
        }
        PresetAction::Show { name, format } => {
            let p = preset(name)?;
            match format {
                Format::Toml => print!("{}", p.params.to_toml_string()),
                Format::Json => println!("{}", serde_json::to_string_pretty(&p)?),
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_serve(args: &ServeArgs) -> anyhow::Result<ExitCode> {
    let config = ServiceConfig {
        max_running: args.max_running.max(1),
        queue_capacity: args.queue,
        max_width: args.max_edge,
        max_height: args.max_edge,
        ..ServiceConfig::default()
    };
    let addr = SocketAddr::new(args.host, args.port);
    eprintln!("serving on http://{addr}");
    tokio::runtime::Runtime::new()?.block_on(eed_service::serve(addr, config))?;
    Ok(ExitCode::SUCCESS)
}

fn init_logging(cli: &Cli) {
    let level = match (cli.quiet, cli.verbose) {
        (true, _) => log::LevelFilter::Error,
        (_, 0) => log::LevelFilter::Warn,
        (_, 1) => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(&cli);
    let result = match &cli.command {
        Command::Diffuse(a) => cmd_diffuse(a),
        Command::Batch(a) => cmd_batch(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Presets { action } => cmd_presets(action),
        Command::Serve(a) => cmd_serve(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
