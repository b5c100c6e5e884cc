//! `afshar`: run scenarios, sweeps and reports from a config file.
//!
//! Exit codes: 0 success, 2 config or usage error, 3 resolution or
//! wraparound guard, 4 I/O error, 5 no results found.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use afshar_core::scenario::config::{config_hash, MonteCarloSection, CANONICAL_TOML};
use afshar_core::scenario::persist::{
    atomic_write, flux_csv, load_results, read_planes, write_manifest, write_plane, write_result, PlaneImage, RunManifest,
};
use afshar_core::scenario::sweep::{sweep, SweepError, SWEEP_HEADER};
use afshar_core::scenario::RunError;
use afshar_core::{summarize, Config, ScenarioRef, ScenarioRunner};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

const DEFAULT_OUT: &str = "afshar-out";
/// Longest side of the stored grid-plane intensity.
const PLANE_SIDE: usize = 512;

#[derive(Parser)]
#[command(name = "afshar", version, about = "Two-pinhole wire-grid simulator and complementarity toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run scenarios and write their results.
    Simulate(SimulateArgs),
    /// Sweep the covering ratio `a` or the loss fraction `L`.
    Sweep(SweepArgs),
    /// Summarize a results directory and render its grid-plane images.
    Report(ReportArgs),
}

#[derive(Args)]
struct Common {
    /// Config file (TOML). The built-in canonical config when absent.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, env = "AFSHAR_OUT", default_value = DEFAULT_OUT)]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,

    /// Comma-separated scenarios: S1, S2, S3, S4, S5, S4-left, ..., or `all`.
    #[arg(long, default_value = "all")]
    scenario: String,

    /// Monte Carlo base seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,

    /// Monte Carlo duration in seconds; overrides the config.
    #[arg(long, conflicts_with = "no_mc")]
    mc_duration: Option<f64>,

    /// Skip photon counting.
    #[arg(long)]
    no_mc: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,

    /// `a` (covering ratio) or `L` (loss fraction).
    #[arg(long)]
    sweep_param: String,

    #[arg(long, allow_negative_numbers = true)]
    from: f64,

    #[arg(long, allow_negative_numbers = true)]
    to: f64,

    #[arg(long)]
    steps: usize,
}

#[derive(Args)]
struct ReportArgs {
    /// Results directory; falls back to --out.
    results_dir: Option<PathBuf>,

    #[arg(long, env = "AFSHAR_OUT", default_value = DEFAULT_OUT)]
    out: PathBuf,
}

enum Failure {
    Config(String),
    Guard(String),
    Io(String),
    NoResults(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Guard(_) => 3,
            Failure::Io(_) => 4,
            Failure::NoResults(_) => 5,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Guard(m) | Failure::Io(m) | Failure::NoResults(m) => m,
        }
    }
}

impl From<RunError> for Failure {
    fn from(e: RunError) -> Self {
        if e.is_numerical_guard() {
            Failure::Guard(e.to_string())
        } else {
            Failure::Config(e.to_string())
        }
    }
}

fn io(path: &Path) -> impl Fn(std::io::Error) -> Failure + '_ {
    move |e| Failure::Io(format!("{}: {e}", path.display()))
}

struct Loaded {
    config: Config,
    bytes: Vec<u8>,
    path: String,
}

fn load(path: Option<&Path>) -> Result<Loaded, Failure> {
    let (bytes, shown) = match path {
        Some(p) => (fs::read(p).map_err(io(p))?, p.display().to_string()),
        None => (CANONICAL_TOML.as_bytes().to_vec(), "<canonical>".to_string()),
    };
    let text = String::from_utf8(bytes.clone()).map_err(|e| Failure::Config(format!("config {shown}: {e}")))?;
    let config = Config::from_toml_str(&text).map_err(|e| Failure::Config(format!("config {shown}: {e}")))?;
    Ok(Loaded {
        config,
        bytes,
        path: shown,
    })
}

fn runner(loaded: &Loaded) -> Result<ScenarioRunner, Failure> {
    let apparatus = loaded
        .config
        .apparatus()
        .map_err(|e| Failure::Config(format!("config {}: {e}", loaded.path)))?;
    Ok(ScenarioRunner::new(apparatus, config_hash(&loaded.bytes)))
}

/// Manifest first, then the config snapshot.
fn start_output(command: &str, loaded: &Loaded, out: &Path, seed: Option<u64>) -> Result<(), Failure> {
    let manifest = RunManifest {
        command: command.to_string(),
        config_path: loaded.path.clone(),
        output_dir: out.display().to_string(),
        seed,
        timestamp_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: config_hash(&loaded.bytes),
    };
    write_manifest(out, &manifest).map_err(io(out))?;
    atomic_write(&out.join("config.toml"), &loaded.bytes).map_err(io(out))
}

fn simulate(args: SimulateArgs) -> Result<(), Failure> {
    let loaded = load(args.common.config.as_deref())?;
    let runner = runner(&loaded)?;
    let refs = ScenarioRef::parse_list(&args.scenario).map_err(|e| Failure::Config(format!("--scenario: {e}")))?;
    if refs.is_empty() {
        return Err(Failure::Config("--scenario: no scenarios given".into()));
    }
    let mc: Option<MonteCarloSection> = if args.no_mc {
        None
    } else {
        match (&loaded.config.monte_carlo, args.seed, args.mc_duration) {
            (Some(s), _, _) => Some(s.clone()),
            (None, None, None) => {
                eprintln!("note: config has no [monte_carlo] section, photon counting skipped");
                None
            }
            (None, seed, duration) => Some(MonteCarloSection {
                photon_rate: afshar_core::photon::DEFAULT_PHOTON_RATE,
                duration: duration.unwrap_or(30.0),
                seed: seed.unwrap_or(0),
            }),
        }
    };
    let seed = mc.as_ref().map(|m| args.seed.unwrap_or(m.seed));

    let out = &args.common.out;
    start_output("simulate", &loaded, out, seed)?;
    println!("config {} ({})", loaded.path, runner.config_hash());

    let mut results = Vec::new();
    for r in refs {
        let counting = match (&mc, seed) {
            (Some(section), Some(seed)) => Some(runner.counting_config(r, section, seed, args.mc_duration)?),
            _ => None,
        };
        let result = runner.run(r, counting.as_ref())?;
        write_result(out, &result).map_err(io(out))?;
        write_plane(out, &runner.grid_plane_image(r, PLANE_SIDE)?).map_err(io(out))?;
        let f = &result.fluxes;
        println!(
            "{:<9} detector1 {:.6}  detector2 {:.6}  blocked {:.6}  clipped {:.6}",
            result.scenario, f.detector_1, f.detector_2, f.blocked, f.clipped
        );
        for w in &result.warnings {
            eprintln!("warning: {}: {w}", result.scenario);
        }
        results.push(result);
    }
    atomic_write(&out.join("flux.csv"), flux_csv(&results).as_bytes()).map_err(io(out))?;
    println!("results in {}", out.display());
    Ok(())
}

fn run_sweep(args: SweepArgs) -> Result<(), Failure> {
    let loaded = load(args.common.config.as_deref())?;
    let runner = runner(&loaded)?;
    let param = args.sweep_param.parse().map_err(|e| Failure::Config(format!("--sweep-param: {e}")))?;
    let out = &args.common.out;
    start_output("sweep", &loaded, out, None)?;

    let rows = sweep(&runner, param, args.from, args.to, args.steps).map_err(|e| match e {
        SweepError::Invalid { field, reason } => Failure::Config(format!("--{field}: {reason}")),
        SweepError::Run(e) => e.into(),
    })?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SWEEP_HEADER).map_err(|e| Failure::Io(e.to_string()))?;
    for row in &rows {
        w.write_record(row.record()).map_err(|e| Failure::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::Io(e.to_string()))?;
    let path = out.join("sweep.csv");
    atomic_write(&path, &bytes).map_err(io(&path))?;
    println!("{} rows in {}", rows.len(), path.display());
    Ok(())
}

/// Sidecar of an 8-bit grayscale image.
#[derive(Serialize)]
struct ImageSidecar<'a> {
    scenario: &'a str,
    /// Block-summed `|ψ|²` that maps to pixel value 255.
    normalization: f64,
    encoding: &'static str,
    nx: usize,
    ny: usize,
    dx: f64,
    dy: f64,
    plane_z: f64,
}

fn render(dir: &Path, plane: &PlaneImage) -> Result<(), Failure> {
    let normalization = plane.data.iter().cloned().fold(0.0, f64::max);
    let scale = if normalization > 0.0 { 255.0 / normalization } else { 0.0 };
    // Row 0 of the image is the largest y.
    let img = image::GrayImage::from_fn(plane.nx as u32, plane.ny as u32, |i, j| {
        let row = plane.ny - 1 - j as usize;
        image::Luma([(plane.data[row * plane.nx + i as usize] * scale).round() as u8])
    });
    let mut png = Vec::new();
    img.write_to(&mut std::io::Cursor::new(&mut png), image::ImageFormat::Png)
        .map_err(|e| Failure::Io(e.to_string()))?;
    let path = dir.join("images").join(format!("{}.png", plane.scenario));
    atomic_write(&path, &png).map_err(io(&path))?;
    let sidecar = ImageSidecar {
        scenario: &plane.scenario,
        normalization,
        encoding: "pixel = round(255 * value / normalization), top row at largest y",
        nx: plane.nx,
        ny: plane.ny,
        dx: plane.dx,
        dy: plane.dy,
        plane_z: plane.plane_z,
    };
    let json = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
    let path = path.with_extension("json");
    atomic_write(&path, json.as_bytes()).map_err(io(&path))
}

fn report(args: ReportArgs) -> Result<(), Failure> {
    let dir = args.results_dir.unwrap_or(args.out);
    let results = if dir.is_dir() { load_results(&dir).map_err(io(&dir))? } else { Vec::new() };
    if results.is_empty() {
        return Err(Failure::NoResults(format!("no results found in {}", dir.display())));
    }
    let summary = summarize(&results);
    atomic_write(&dir.join("summary.csv"), summary.to_csv().as_bytes()).map_err(io(&dir))?;
    let text = summary.to_text();
    atomic_write(&dir.join("summary.txt"), text.as_bytes()).map_err(io(&dir))?;
    for plane in read_planes(&dir).map_err(io(&dir))? {
        render(&dir, &plane)?;
    }
    print!("{text}");
    if summary.config_hashes.len() > 1 {
        eprintln!("warning: results come from {} different configs", summary.config_hashes.len());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Sweep(a) => run_sweep(a),
        Command::Report(a) => report(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
