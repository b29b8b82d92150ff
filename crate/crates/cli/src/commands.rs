use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::builder::PossibleValuesParser;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use evsim_core::detect::{self, DetectorConfig, Method, RunStats};
use evsim_core::metrics::{self, CurveRow, MetricReport};
use evsim_core::synth::{self, NoiseSpec, SceneKind, SceneSpec};
use evsim_core::{io, render, Error, FeatureFrame};

pub enum CliError {
    /// Bad flags or inconsistent inputs (exit code 2).
    Usage(String),
    /// Everything else (exit code 1).
    Runtime(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        if e.is_usage() {
            CliError::Usage(e.to_string())
        } else {
            CliError::Runtime(e.to_string())
        }
    }
}

type CliResult<T = ()> = std::result::Result<T, CliError>;

#[derive(Debug, Parser, Serialize)]
#[command(name = "evsim", version, about = "Event-camera streams from noisy feature-augmented frames")]
pub struct Cli {
    /// Worker threads; 0 uses every available core.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Generate a clean and a noisy synthetic sequence plus oracle events.
    Synth(SynthArgs),
    /// Run a detector on a frame sequence.
    Detect(DetectArgs),
    /// Compare a detected event CSV against a reference.
    Eval(EvalArgs),
    /// Draw events into one PNG per time bin.
    Render(RenderArgs),
    /// Evaluate detectors over contrast thresholds and noise levels.
    Sweep(SweepArgs),
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse::<Method>().map_err(|e| e.to_string())
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    #[arg(long, value_parser = PossibleValuesParser::new(SceneKind::NAMES))]
    pub scene: String,
    #[arg(long, default_value_t = 240)]
    pub frames: usize,
    #[arg(long, default_value_t = 128)]
    pub width: usize,
    #[arg(long, default_value_t = 128)]
    pub height: usize,
    /// Seconds between frames.
    #[arg(long, default_value_t = 1.0 / 30.0)]
    pub dt: f64,
    #[arg(long, default_value_t = 32)]
    pub spp: u32,
    #[arg(long, default_value_t = 1.0)]
    pub kappa: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.0)]
    pub normal_jitter: f64,
    #[arg(long, default_value_t = 0.0)]
    pub depth_jitter: f64,
    /// Contrast threshold of the oracle events.
    #[arg(long = "c", alias = "contrast", default_value_t = detect::DEFAULT_CONTRAST)]
    pub contrast: f64,
    /// One oracle event per firing instead of floor(|dL| / C).
    #[arg(long)]
    pub single_event: bool,
    /// JSON object overriding the scene's kind-specific parameters.
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct DetectArgs {
    #[arg(long, value_parser = parse_method, default_value = "reduced-wlr")]
    pub method: Method,
    #[arg(long = "c", alias = "contrast", default_value_t = detect::DEFAULT_CONTRAST)]
    pub contrast: f64,
    /// Regression window radius in pixels.
    #[arg(long, default_value_t = evsim_core::wlr::DEFAULT_RADIUS)]
    pub window: usize,
    #[arg(long, default_value_t = evsim_core::wlr::DEFAULT_RIDGE)]
    pub ridge: f64,
    #[arg(long, default_value_t = evsim_core::wlr::DEFAULT_BANDWIDTH)]
    pub bandwidth: f64,
    #[arg(long)]
    pub single_event: bool,
    /// Drop the sub-threshold remainder after a reduced-WLR refit.
    #[arg(long)]
    pub no_carry: bool,
    /// Sequence manifest or the directory holding `manifest.json`.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Event CSV to write; its metadata goes to `<out>.meta.json`.
    #[arg(long)]
    pub out: PathBuf,
    /// Run statistics JSON; defaults to `<out>.stats.json`.
    #[arg(long)]
    pub stats: Option<PathBuf>,
}

impl DetectArgs {
    fn config(&self) -> DetectorConfig {
        DetectorConfig {
            method: self.method,
            contrast: self.contrast,
            radius: self.window,
            ridge: self.ridge,
            bandwidth: self.bandwidth,
            multi_event: !self.single_event,
            carry_residue: !self.no_carry,
        }
    }
}

const DEFAULT_CURVE_TAUS: [f64; 10] = [1e-4, 2e-4, 5e-4, 1e-3, 2e-3, 5e-3, 1e-2, 2e-2, 5e-2, 1e-1];

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    /// Reference event CSV (for example the oracle).
    #[arg(long = "ref")]
    pub reference: PathBuf,
    /// Detected event CSV.
    #[arg(long)]
    pub test: PathBuf,
    #[arg(long, default_value_t = metrics::DEFAULT_TAU)]
    pub tau: f64,
    /// Write precision/recall/F1 over `--taus` to this CSV.
    #[arg(long)]
    pub curve: Option<PathBuf>,
    /// Strictly increasing thresholds for `--curve`.
    #[arg(long, value_delimiter = ',')]
    pub taus: Option<Vec<f64>>,
    /// Report JSON; printed to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct RenderArgs {
    #[arg(long)]
    pub events: PathBuf,
    /// Defaults to the sensor width in the metadata sidecar.
    #[arg(long)]
    pub width: Option<u32>,
    #[arg(long)]
    pub height: Option<u32>,
    /// Bins per second; defaults to the source frame rate.
    #[arg(long)]
    pub fps: Option<f64>,
    /// Output directory for `bin_NNNNN.png`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    /// Output directory of `evsim synth`.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, value_parser = parse_method, value_delimiter = ',', default_value = "esim,wlr-esim,reduced-wlr")]
    pub methods: Vec<Method>,
    #[arg(long = "c", alias = "contrast", value_delimiter = ',', default_value = "0.25,0.5,0.75,1.0")]
    pub contrasts: Vec<f64>,
    /// Re-noise the clean sequence at these levels instead of using `noisy/`.
    #[arg(long, value_delimiter = ',')]
    pub spp: Option<Vec<u32>>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1.0)]
    pub kappa: f64,
    #[arg(long, default_value_t = metrics::DEFAULT_TAU)]
    pub tau: f64,
    #[arg(long, default_value_t = evsim_core::wlr::DEFAULT_RADIUS)]
    pub window: usize,
    /// Results CSV.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct Provenance<'a, T: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'a Command,
    threads: usize,
    resolved: T,
}

fn write_provenance<T: Serialize>(path: &Path, cli: &Cli, resolved: T) -> CliResult {
    let record = Provenance {
        tool: "evsim",
        version: env!("CARGO_PKG_VERSION"),
        command: &cli.command,
        threads: cli.threads,
        resolved,
    };
    Ok(io::write_json(path, &record)?)
}

fn create_dir(dir: &Path) -> CliResult {
    fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))
}

fn write_text(path: &Path, text: &str) -> CliResult {
    fs::write(path, text).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

pub fn run(cli: Cli) -> CliResult {
    if cli.threads == 0 {
        return dispatch(&cli);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
        .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?;
    pool.install(|| dispatch(&cli))
}

fn dispatch(cli: &Cli) -> CliResult {
    match &cli.command {
        Command::Synth(a) => cmd_synth(cli, a),
        Command::Detect(a) => cmd_detect(cli, a),
        Command::Eval(a) => cmd_eval(a),
        Command::Render(a) => cmd_render(a),
        Command::Sweep(a) => cmd_sweep(cli, a),
    }
}

fn scene_spec(a: &SynthArgs) -> CliResult<SceneSpec> {
    let scene = match &a.params {
        None => SceneKind::from_name(&a.scene)?,
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
            let mut value: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            let obj = value
                .as_object_mut()
                .ok_or_else(|| CliError::Usage(format!("{}: expected a JSON object", path.display())))?;
            obj.insert("kind".into(), a.scene.clone().into());
            serde_json::from_value(value).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
        }
    };
    let spec = SceneSpec {
        width: a.width,
        height: a.height,
        frame_count: a.frames,
        dt: a.dt,
        scene,
    };
    spec.validate()?;
    Ok(spec)
}

#[derive(Serialize)]
struct SynthRecord {
    scene: SceneSpec,
    noise: NoiseSpec,
    oracle_contrast: f64,
    oracle_multi_event: bool,
    oracle_events: usize,
}

fn cmd_synth(cli: &Cli, a: &SynthArgs) -> CliResult {
    let spec = scene_spec(a)?;
    let noise = NoiseSpec {
        spp: a.spp,
        kappa: a.kappa,
        seed: a.seed,
        normal_jitter: a.normal_jitter,
        depth_jitter: a.depth_jitter,
    };
    noise.validate()?;
    if !(a.contrast > 0.0) {
        return Err(CliError::Usage(format!("--c must be positive, got {}", a.contrast)));
    }
    let clean = synth::generate_clean(&spec)?;
    let oracle = if clean.len() >= 2 {
        Some(synth::oracle_events(&clean, a.contrast, !a.single_event)?)
    } else {
        None
    };
    let noisy = synth::add_noise(&clean, &noise)?;
    create_dir(&a.out)?;
    io::write_sequence(&a.out.join("clean"), &clean, spec.dt)?;
    io::write_sequence(&a.out.join("noisy"), &noisy, spec.dt)?;
    if let Some(oracle) = &oracle {
        io::write_events(&a.out.join("oracle.csv"), oracle)?;
    }
    let record = SynthRecord {
        scene: spec,
        noise,
        oracle_contrast: a.contrast,
        oracle_multi_event: !a.single_event,
        oracle_events: oracle.as_ref().map_or(0, |o| o.len()),
    };
    io::write_json(&a.out.join("scene.json"), &record)?;
    write_provenance(&a.out.join("provenance.json"), cli, &record)
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    path.with_extension(suffix)
}

#[derive(Serialize)]
struct DetectRecord<'a> {
    config: &'a DetectorConfig,
    frames: usize,
    events: usize,
}

fn cmd_detect(cli: &Cli, a: &DetectArgs) -> CliResult {
    let cfg = a.config();
    cfg.validate()?;
    let (_, frames) = io::read_sequence(&a.input)?;
    let (stream, stats) = detect::detect(&frames, &cfg)?;
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    io::write_events(&a.out, &stream)?;
    let stats_path = a.stats.clone().unwrap_or_else(|| sibling(&a.out, "stats.json"));
    io::write_json(&stats_path, &stats)?;
    let record = DetectRecord {
        config: &cfg,
        frames: frames.len(),
        events: stream.len(),
    };
    write_provenance(&sibling(&a.out, "provenance.json"), cli, &record)
}

fn curve_csv(rows: &[CurveRow]) -> String {
    let mut out = String::from("tau,precision,recall,f1\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{}", r.tau, r.precision, r.recall, r.f1);
    }
    out
}

fn cmd_eval(a: &EvalArgs) -> CliResult {
    let taus = a.taus.clone().unwrap_or_else(|| DEFAULT_CURVE_TAUS.to_vec());
    metrics::validate_taus(&[a.tau])?;
    if a.curve.is_some() || a.taus.is_some() {
        metrics::validate_taus(&taus)?;
    }
    let reference = io::read_events(&a.reference)?;
    let test = io::read_events(&a.test)?;
    metrics::check_compatible(&test.meta, &reference.meta)?;
    let matcher = metrics::Matcher::new(
        &metrics::normalize_events(&test)?,
        &metrics::normalize_events(&reference)?,
    );
    let report: MetricReport = matcher.report(a.tau);
    match &a.out {
        Some(path) => io::write_json(path, &report)?,
        None => println!("{}", serde_json::to_string_pretty(&report).expect("serializable report")),
    }
    if let Some(path) = &a.curve {
        write_text(path, &curve_csv(&matcher.curve(&taus)?))?;
    }
    Ok(())
}

fn cmd_render(a: &RenderArgs) -> CliResult {
    let events = io::read_event_records(&a.events)?;
    let meta_file = io::meta_path(&a.events);
    let meta = if meta_file.exists() {
        Some(io::read_stream_meta(&meta_file)?)
    } else {
        None
    };
    let missing = |flag: &str| CliError::Usage(format!("--{flag} is required when {} is absent", meta_file.display()));
    let width = a.width.or(meta.map(|m| m.width)).ok_or_else(|| missing("width"))?;
    let height = a.height.or(meta.map(|m| m.height)).ok_or_else(|| missing("height"))?;
    let fps = match (a.fps, meta) {
        (Some(f), _) => f,
        (None, Some(m)) if m.dt > 0.0 => 1.0 / m.dt,
        _ => return Err(missing("fps")),
    };
    let bins = meta.map(|m| render::bin_count(m.duration, fps));
    let rasters = render::render_bins(&events, width as usize, height as usize, fps, bins)?;
    create_dir(&a.out)?;
    for (i, r) in rasters.into_iter().enumerate() {
        let path = a.out.join(format!("bin_{i:05}.png"));
        let img = image::RgbImage::from_raw(r.width as u32, r.height as u32, r.rgb).expect("raster size");
        img.save_with_format(&path, image::ImageFormat::Png)
            .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SweepRow {
    spp: u32,
    method: Method,
    contrast: f64,
    events: usize,
    report: MetricReport,
    stats: RunStats,
}

fn cmd_sweep(cli: &Cli, a: &SweepArgs) -> CliResult {
    metrics::validate_taus(&[a.tau])?;
    if a.contrasts.is_empty() || a.methods.is_empty() {
        return Err(CliError::Usage("need at least one method and one contrast".into()));
    }
    let (_, clean) = io::read_sequence(&a.input.join("clean"))?;
    let levels: Vec<(u32, Vec<FeatureFrame>)> = match &a.spp {
        Some(list) => list
            .iter()
            .map(|&spp| {
                let noise = NoiseSpec {
                    kappa: a.kappa,
                    ..NoiseSpec::new(spp, a.seed)
                };
                Ok((spp, synth::add_noise(&clean, &noise)?))
            })
            .collect::<Result<_, Error>>()?,
        None => {
            let (manifest, noisy) = io::read_sequence(&a.input.join("noisy"))?;
            vec![(manifest.spp, noisy)]
        }
    };
    let mut rows = Vec::new();
    let mut csv = String::from("spp,method,contrast,events,precision,recall,f1,chamfer,solves,solve_fraction\n");
    for &contrast in &a.contrasts {
        let oracle = synth::oracle_events(&clean, contrast, true)?;
        let reference = metrics::normalize_events(&oracle)?;
        for (spp, frames) in &levels {
            for &method in &a.methods {
                let cfg = DetectorConfig {
                    contrast,
                    radius: a.window,
                    ..DetectorConfig::with_method(method)
                };
                let (stream, stats) = detect::detect(frames, &cfg)?;
                let report = metrics::Matcher::new(&metrics::normalize_events(&stream)?, &reference).report(a.tau);
                let _ = writeln!(
                    csv,
                    "{spp},{method},{contrast},{},{},{},{},{},{},{}",
                    stream.len(),
                    report.precision,
                    report.recall,
                    report.f1,
                    report.chamfer,
                    stats.solves,
                    stats.solve_fraction
                );
                rows.push(SweepRow {
                    spp: *spp,
                    method,
                    contrast,
                    events: stream.len(),
                    report,
                    stats,
                });
            }
        }
    }
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    write_text(&a.out, &csv)?;
    write_provenance(&sibling(&a.out, "provenance.json"), cli, &rows)
}
