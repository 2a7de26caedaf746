use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind as ClapErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use cylgpr::autofocus::{entropy_aft, scene_rms_permittivity, ssim_aft, AftResult};
use cylgpr::config::RunConfig;
use cylgpr::dataset::generate_dataset;
use cylgpr::evaluate::evaluate;
use cylgpr::migrate::{contour_from_scan, kirchhoff_migrate, MigrationParams};
use cylgpr::pipeline::{defect_ring, prepare_migration, simulate_scene};
use cylgpr::preprocess::apply_path;
use cylgpr::scene::{sample_scene, BlobShape, GridSpec, Scene};
use cylgpr::store::{
    export_pgm, read_ascan, read_bscan, read_grid, read_json, read_manifest, read_predictions,
    spatial_to_raster, write_ascan, write_bscan, write_grid, write_image, write_json, Grid,
};
use cylgpr::{Error, ErrorKind};

/// Environment variable naming the default output root.
const OUTPUT_ENV: &str = "CYLGPR_OUTPUT";
const FALLBACK_OUTPUT: &str = "cylgpr-out";

mod exit {
    pub const OK: u8 = 0;
    pub const PARTIAL: u8 = 1;
    pub const FORMAT: u8 = 2;
    pub const GEOMETRY: u8 = 3;
    pub const USAGE: u8 = 64;
}

#[derive(Parser)]
#[command(name = "cylgpr", version, about = "Simulate, image and score circumferential GPR scans of layered cylinders")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labelled synthetic dataset.
    Gen(GenArgs),
    /// Simulate one scene and write its raw B-scan and reference trace.
    Simulate(SimulateArgs),
    /// Run one preprocessing path on a raw B-scan.
    Preprocess(PreprocessArgs),
    /// Migrate a surface-referenced B-scan at a fixed permittivity.
    Migrate(MigrateArgs),
    /// Sweep the medium permittivity and report the autofocus choice.
    Autofocus(AutofocusArgs),
    /// Score a predictions file against a dataset manifest.
    Evaluate(EvaluateArgs),
    /// Render a grid file as a PGM image.
    Render(RenderArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// JSON run configuration; omitted fields take defaults.
    #[arg(long, short = 'c')]
    config: Option<PathBuf>,
    #[arg(long)]
    n_traces: Option<usize>,
    /// Yee cell size in metres.
    #[arg(long)]
    spacing: Option<f64>,
    /// Simulated time in seconds.
    #[arg(long)]
    duration: Option<f64>,
    #[arg(long)]
    eps_min: Option<f64>,
    #[arg(long)]
    eps_max: Option<f64>,
    #[arg(long)]
    eps_step: Option<f64>,
}

impl ConfigArgs {
    fn load(&self) -> Result<RunConfig, Error> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(n) = self.n_traces {
            cfg.scan.n_traces = n;
        }
        if let Some(v) = self.spacing {
            cfg.sim.spacing = v;
        }
        if let Some(v) = self.duration {
            cfg.sim.duration = v;
        }
        if let Some(v) = self.eps_min {
            cfg.aft.sweep.eps_min = v;
        }
        if let Some(v) = self.eps_max {
            cfg.aft.sweep.eps_max = v;
        }
        if let Some(v) = self.eps_step {
            cfg.aft.sweep.step = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Flag, then config file, then environment, then a fixed fallback.
fn output_root(flag: Option<&Path>, cfg: &RunConfig) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| cfg.output_dir.clone())
        .or_else(|| std::env::var_os(OUTPUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(FALLBACK_OUTPUT))
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Number of samples.
    #[arg(long, short = 'n', default_value_t = 1)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed0: u64,
    /// Dataset directory.
    #[arg(long, short = 'o')]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, short = 'o')]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Profile {
    Network,
    Migration,
}

#[derive(Args)]
struct PreprocessArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long)]
    raw: PathBuf,
    #[arg(long)]
    reference: PathBuf,
    #[arg(long, value_enum)]
    profile: Profile,
    /// Outline (shape or scene JSON); required for the migration profile.
    #[arg(long)]
    outline: Option<PathBuf>,
    #[arg(long, short = 'o')]
    out: PathBuf,
}

#[derive(Args)]
struct MigrateArgs {
    #[arg(long)]
    bscan: PathBuf,
    /// Relative permittivity of the medium.
    #[arg(long)]
    eps: f64,
    /// Outline (shape or scene JSON).
    #[arg(long)]
    outline: PathBuf,
    #[arg(long, short = 'o')]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum Criterion {
    Ssim,
    Entropy,
    Both,
}

#[derive(Args)]
struct AutofocusArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Surface-referenced B-scan from the migration profile.
    #[arg(long)]
    bscan: PathBuf,
    /// Scene JSON; the SSIM criterion needs its defect outline.
    #[arg(long)]
    scene: PathBuf,
    #[arg(long, value_enum, default_value_t = Criterion::Both)]
    criterion: Criterion,
    /// Report path; stdout when omitted.
    #[arg(long, short = 'o')]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Mask paths inside are relative to this file's directory.
    #[arg(long)]
    predictions: PathBuf,
    /// Report path; stdout when omitted.
    #[arg(long, short = 'o')]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RenderArgs {
    #[arg(long)]
    grid: PathBuf,
    /// Treat the grid as `[ix, iy]` cells and put +y at the top.
    #[arg(long)]
    spatial: bool,
    #[arg(long, short = 'o')]
    out: PathBuf,
}

/// Either a bare outline or a whole scene, whose outer shape is used.
#[derive(Deserialize)]
#[serde(untagged)]
enum OutlineFile {
    Scene(Box<Scene>),
    Shape(BlobShape),
}

fn read_outline(path: &Path) -> Result<BlobShape, Error> {
    let shape = match read_json::<OutlineFile>(path)? {
        OutlineFile::Scene(s) => s.outer_shape,
        OutlineFile::Shape(s) => s,
    };
    shape.validate()?;
    Ok(shape)
}

fn write_report<T: Serialize>(out: Option<&Path>, value: &T) -> Result<(), Error> {
    match out {
        Some(p) => write_json(p, value),
        None => {
            println!("{}", serde_json::to_string_pretty(value).expect("report serializes"));
            Ok(())
        }
    }
}

fn create_dir(path: &Path) -> Result<(), Error> {
    std::fs::create_dir_all(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn cmd_gen(a: &GenArgs) -> Result<u8, Error> {
    let cfg = a.config.load()?;
    let root = output_root(a.out.as_deref(), &cfg);
    let outcome = generate_dataset(&cfg, a.count, a.seed0, &root)?;
    for (seed, err) in &outcome.failures {
        eprintln!("seed {seed}: skipped: {err}");
    }
    println!(
        "{}: {} samples, {} failed",
        outcome.manifest_path.display(),
        outcome.manifest.samples.len(),
        outcome.failures.len()
    );
    Ok(if outcome.succeeded() { exit::OK } else { exit::PARTIAL })
}

fn cmd_simulate(a: &SimulateArgs) -> Result<u8, Error> {
    let cfg = a.config.load()?;
    let dir = output_root(a.out.as_deref(), &cfg);
    create_dir(&dir)?;
    let scene = sample_scene(a.seed, &cfg.scene)?;
    let sim = simulate_scene(&scene, &cfg.sim, &cfg.scan)?;
    write_json(dir.join("scene.json"), &scene)?;
    write_bscan(dir.join("raw_bscan.f32g"), &sim.raw, None)?;
    write_ascan(dir.join("reference_ascan.f32g"), &sim.reference)?;
    println!("{}", dir.display());
    Ok(exit::OK)
}

fn cmd_preprocess(a: &PreprocessArgs) -> Result<u8, Error> {
    let cfg = a.config.load()?;
    let raw = read_bscan(&a.raw)?;
    let reference = read_ascan(&a.reference)?;
    let name = cfg.preprocess.name.as_str();
    match a.profile {
        Profile::Network => {
            let p = apply_path(&raw, &reference, &cfg.preprocess.for_network)?;
            match p.image {
                Some(img) => write_grid(&a.out, &Grid::from_array2(&img))?,
                None => write_bscan(&a.out, &p.bscan, Some(name))?,
            }
        }
        Profile::Migration => {
            let outline_path = a
                .outline
                .as_ref()
                .ok_or_else(|| Error::Parameter("the migration profile needs --outline".into()))?;
            let outline = read_outline(outline_path)?;
            let input = prepare_migration(&raw, &reference, &outline, &cfg.preprocess.for_migration)?;
            write_bscan(&a.out, &input.bscan, Some(name))?;
        }
    }
    Ok(exit::OK)
}

fn cmd_migrate(a: &MigrateArgs) -> Result<u8, Error> {
    let b = read_bscan(&a.bscan)?;
    let outline = read_outline(&a.outline)?;
    let contour = contour_from_scan(&b, &outline)?;
    let params = MigrationParams {
        eps_medium: a.eps,
        image_spec: GridSpec::imaging_window(outline.center),
    };
    let image = kirchhoff_migrate(&b, &contour, &params)?;
    write_image(&a.out, &image)?;
    export_pgm(&spatial_to_raster(&image.intensity), a.out.with_extension("pgm"))?;
    Ok(exit::OK)
}

#[derive(Serialize)]
struct AutofocusReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    ssim: Option<AftResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    entropy: Option<AftResult>,
    eps_rms: f64,
}

fn cmd_autofocus(a: &AutofocusArgs) -> Result<u8, Error> {
    let cfg = a.config.load()?;
    let b = read_bscan(&a.bscan)?;
    let scene: Scene = read_json(&a.scene)?;
    scene.validate()?;
    let contour = contour_from_scan(&b, &scene.outer_shape)?;
    let spec = GridSpec::imaging_window(scene.outer_shape.center);
    let ssim = if a.criterion != Criterion::Entropy {
        let ring = defect_ring(&scene, &spec, cfg.aft.ring_thickness_px)?;
        Some(ssim_aft(&b, &contour, &spec, &ring, &cfg.aft.sweep, &cfg.aft.ssim)?)
    } else {
        None
    };
    let entropy = if a.criterion != Criterion::Ssim {
        Some(entropy_aft(&b, &contour, &spec, &cfg.aft.sweep)?)
    } else {
        None
    };
    let report = AutofocusReport {
        ssim,
        entropy,
        eps_rms: scene_rms_permittivity(&scene)?,
    };
    write_report(a.out.as_deref(), &report)?;
    Ok(exit::OK)
}

fn parent_dir(p: &Path) -> &Path {
    p.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."))
}

fn cmd_evaluate(a: &EvaluateArgs) -> Result<u8, Error> {
    let manifest = read_manifest(&a.manifest)?;
    let predictions = read_predictions(&a.predictions)?;
    let report = evaluate(&manifest, parent_dir(&a.manifest), &predictions, parent_dir(&a.predictions))?;
    for id in &report.missing {
        eprintln!("no prediction for {id}");
    }
    for id in &report.unknown {
        eprintln!("prediction for unknown sample {id}");
    }
    write_report(a.out.as_deref(), &report)?;
    Ok(if report.is_complete() { exit::OK } else { exit::PARTIAL })
}

fn cmd_render(a: &RenderArgs) -> Result<u8, Error> {
    let grid = read_grid(&a.grid)?;
    let img = grid.to_array2()?;
    let img = if a.spatial { spatial_to_raster(&img) } else { img };
    export_pgm(&img, &a.out)?;
    Ok(exit::OK)
}

fn exit_code(err: &Error) -> u8 {
    match err.kind() {
        ErrorKind::Format => exit::FORMAT,
        ErrorKind::Geometry => exit::GEOMETRY,
        ErrorKind::Parameter => exit::USAGE,
        ErrorKind::Other => exit::PARTIAL,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            let code = match e.kind() {
                ClapErrorKind::DisplayHelp | ClapErrorKind::DisplayVersion => exit::OK,
                _ => exit::USAGE,
            };
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Preprocess(a) => cmd_preprocess(a),
        Command::Migrate(a) => cmd_migrate(a),
        Command::Autofocus(a) => cmd_autofocus(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Render(a) => cmd_render(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
