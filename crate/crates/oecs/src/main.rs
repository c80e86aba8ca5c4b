use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use oecs::config::{InputConfig, OutputConfig, RunConfig, Stages};
use oecs::core::field::GridAxis;
use oecs::core::kinematics::FrameChange;
use oecs::core::math::Vec2;
use oecs::geostrophic::{self, GeoConstants};
use oecs::pipeline::{self, PipelineOutput};
use oecs::{grid_io, OecsError, Result};

/// Objective Eulerian coherent structures from velocity snapshots.
#[derive(Parser)]
#[command(name = "oecs", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rate-of-strain eigenvalues, eigenvectors, vorticity and Okubo-Weiss on the scan lattice.
    Strain(RunArgs),
    /// Strain singularities (wedges and trisectors).
    Singularities(RunArgs),
    /// Closed stretch-rate curves around wedge pairs.
    Elliptic(RunArgs),
    /// Objective saddles and their attracting and repelling curves.
    Hyperbolic(RunArgs),
    /// Heteroclinic chains between trisectors and wedges that pass the neutrality test.
    Parabolic(RunArgs),
    /// Elliptic detection followed by advection of each vortex boundary.
    Advect(RunArgs),
    /// Every stage enabled in the config, with a count summary on stdout.
    Report(RunArgs),
    /// Convert an OECS-SSH file to geostrophic velocity in deg/day.
    Geostrophic(GeoArgs),
    /// Resample a field as seen by a rotating and translating observer.
    FrameTransform(FrameArgs),
}

#[derive(Args, Clone, Default)]
struct InputArgs {
    /// TOML run configuration; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named analytic flow, e.g. `cellular` or `perturbed_vortex`.
    #[arg(long, conflicts_with_all = ["grid", "ssh"])]
    flow: Option<String>,
    /// Flow parameters, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    params: Vec<f64>,
    /// Analytic domain `x_min,x_max,y_min,y_max`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    domain: Option<Vec<f64>>,
    /// OECS-GRID velocity file.
    #[arg(long, conflicts_with = "ssh")]
    grid: Option<PathBuf>,
    /// OECS-SSH height file.
    #[arg(long)]
    ssh: Option<PathBuf>,
    /// Analysis time.
    #[arg(long, allow_negative_numbers = true)]
    time: Option<f64>,
}

#[derive(Args, Clone)]
struct RunArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Output directory (default `oecs-out` without a config).
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    /// Scan lattice spacing.
    #[arg(long)]
    scan_step: Option<f64>,
    /// Tensorline step.
    #[arg(long)]
    step: Option<f64>,
    /// Arclength cap for a single curve.
    #[arg(long)]
    max_length: Option<f64>,
    /// Largest separation of a wedge pair.
    #[arg(long)]
    wedge_distance: Option<f64>,
    /// Stretch rates are swept over `[-r, r]`.
    #[arg(long)]
    mu_range: Option<f64>,
    /// Number of stretch-rate values.
    #[arg(long)]
    mu_count: Option<usize>,
    /// Half-length of the Poincaré section.
    #[arg(long)]
    section_half_length: Option<f64>,
    /// Distance at which a separatrix is captured by a wedge.
    #[arg(long)]
    capture_radius: Option<f64>,
    /// Advection horizon.
    #[arg(long)]
    horizon: Option<f64>,
    /// Skip the SVG plot.
    #[arg(long)]
    no_svg: bool,
}

#[derive(Args)]
struct GeoArgs {
    /// OECS-SSH input.
    #[arg(long)]
    ssh: PathBuf,
    /// OECS-GRID output.
    #[arg(long, short)]
    output: PathBuf,
    /// Gravity, m/s² [default: 9.81].
    #[arg(long)]
    g: Option<f64>,
    /// Earth radius, m [default: 6.371e6].
    #[arg(long)]
    radius: Option<f64>,
    /// Earth rotation rate, rad/s [default: 7.2921e-5].
    #[arg(long)]
    omega: Option<f64>,
    /// Latitude band (degrees) around the equator to refuse.
    #[arg(long)]
    equator_cutoff: Option<f64>,
}

#[derive(Args)]
struct FrameArgs {
    #[command(flatten)]
    input: InputArgs,
    /// OECS-GRID output.
    #[arg(long, short)]
    output: PathBuf,
    /// Initial frame angle.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    theta0: f64,
    /// Frame rotation rate.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    rate: f64,
    /// Frame translation velocity `vx,vy`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    velocity: Option<Vec<f64>>,
    /// Output lattice spacing; defaults to the input lattice or 100 cells.
    #[arg(long)]
    step: Option<f64>,
    /// Output region `x_min,x_max,y_min,y_max` in the new frame.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    region: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    t0: f64,
    #[arg(long, default_value_t = 1.0)]
    dt: f64,
    #[arg(long, default_value_t = 1)]
    nt: usize,
}

fn four(v: &[f64]) -> Result<[f64; 4]> {
    match v {
        [a, b, c, d] => Ok([*a, *b, *c, *d]),
        _ => Err(OecsError::Config("expected four comma-separated values x_min,x_max,y_min,y_max".into())),
    }
}

/// Config file (if any) with the input flags applied; not yet validated.
fn base_config(a: &InputArgs, output: Option<PathBuf>) -> Result<RunConfig> {
    let mut cfg = match &a.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| OecsError::Config(format!("cannot read {}: {e}", path.display())))?;
            let mut c = RunConfig::from_toml(&text)?;
            if let Some(base) = path.parent() {
                c.resolve_paths(base);
            }
            c
        }
        None => {
            let input = if let Some(p) = &a.grid {
                InputConfig::Grid { path: p.clone() }
            } else if let Some(p) = &a.ssh {
                InputConfig::Ssh { path: p.clone() }
            } else if let Some(flow) = &a.flow {
                let domain = a.domain.as_deref().ok_or_else(|| OecsError::Config("--flow needs --domain".into()))?;
                InputConfig::Analytic { flow: flow.clone(), params: a.params.clone(), domain: four(domain)? }
            } else {
                return Err(OecsError::Config("give --config, --flow, --grid or --ssh".into()));
            };
            RunConfig {
                input,
                time: 0.0,
                threads: None,
                scan: Default::default(),
                stages: Stages::default(),
                thresholds: Default::default(),
                advect: Default::default(),
                geo: GeoConstants::default(),
                output: OutputConfig { dir: PathBuf::from("oecs-out") },
            }
        }
    };
    if a.config.is_some() {
        if let Some(p) = &a.grid {
            cfg.input = InputConfig::Grid { path: p.clone() };
        } else if let Some(p) = &a.ssh {
            cfg.input = InputConfig::Ssh { path: p.clone() };
        } else if let Some(flow) = &a.flow {
            let domain = match (&a.domain, &cfg.input) {
                (Some(d), _) => four(d)?,
                (None, InputConfig::Analytic { domain, .. }) => *domain,
                _ => return Err(OecsError::Config("--flow needs --domain".into())),
            };
            cfg.input = InputConfig::Analytic { flow: flow.clone(), params: a.params.clone(), domain };
        }
    }
    if let Some(t) = a.time {
        cfg.time = t;
    }
    if let Some(o) = output {
        cfg.output.dir = o;
    }
    Ok(cfg)
}

fn run_config(a: &RunArgs, stages: Option<Stages>) -> Result<RunConfig> {
    let mut cfg = base_config(&a.input, a.output.clone())?;
    if let Some(s) = stages {
        cfg.stages = s;
    }
    let t = &mut cfg.thresholds;
    t.step = a.step.or(t.step);
    t.max_length = a.max_length.or(t.max_length);
    t.wedge_distance = a.wedge_distance.or(t.wedge_distance);
    t.mu_range = a.mu_range.or(t.mu_range);
    t.mu_count = a.mu_count.or(t.mu_count);
    t.section_half_length = a.section_half_length.or(t.section_half_length);
    t.capture_radius = a.capture_radius.or(t.capture_radius);
    cfg.scan.step = a.scan_step.or(cfg.scan.step);
    cfg.threads = a.threads.or(cfg.threads);
    if let Some(h) = a.horizon {
        cfg.advect.horizon = h;
    }
    if a.no_svg {
        cfg.stages.svg = false;
    }
    Ok(cfg)
}

fn only(f: impl FnOnce(&mut Stages)) -> Stages {
    let mut s = Stages::NONE;
    f(&mut s);
    s
}

fn print_run(out: &PipelineOutput) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(&out.manifest.counts)?);
    for n in &out.manifest.notes {
        eprintln!("note: {n}");
    }
    eprintln!("wrote {}", out.dir.join(pipeline::MANIFEST).display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let stages = match &cli.command {
        Command::Strain(_) | Command::Singularities(_) => Some(Stages::NONE),
        Command::Elliptic(_) => Some(only(|s| s.elliptic = true)),
        Command::Hyperbolic(_) => Some(only(|s| s.hyperbolic = true)),
        Command::Parabolic(_) => Some(only(|s| s.parabolic = true)),
        Command::Advect(_) => Some(only(|s| {
            s.elliptic = true;
            s.advect = true;
        })),
        _ => None,
    };
    match cli.command {
        Command::Strain(a)
        | Command::Singularities(a)
        | Command::Elliptic(a)
        | Command::Hyperbolic(a)
        | Command::Parabolic(a)
        | Command::Advect(a)
        | Command::Report(a) => {
            let cfg = run_config(&a, stages)?;
            print_run(&pipeline::run_pipeline(&cfg)?)
        }
        Command::Geostrophic(a) => {
            let d = GeoConstants::default();
            let c = GeoConstants {
                g: a.g.unwrap_or(d.g),
                radius: a.radius.unwrap_or(d.radius),
                omega: a.omega.unwrap_or(d.omega),
                equator_cutoff: a.equator_cutoff.unwrap_or(d.equator_cutoff),
            };
            c.validate()?;
            let ssh = grid_io::read_ssh(&a.ssh)?;
            let field = geostrophic::geostrophic_velocity(&ssh, &c)?;
            let audit = geostrophic::unit_audit(&ssh, &c)?;
            let text = grid_io::format_grid_with_comments(&field, &geostrophic::UNIT_NOTE);
            std::fs::write(&a.output, text).map_err(|e| OecsError::io(&a.output, e))?;
            eprintln!("wrote {} (unit audit relative discrepancy {audit:e})", a.output.display());
            Ok(())
        }
        Command::FrameTransform(a) => {
            let mut cfg = base_config(&a.input, Some(PathBuf::from(".")))?;
            cfg.stages = Stages::NONE;
            cfg.validate()?;
            let field = pipeline::load_field(&cfg)?;
            let v = match a.velocity.as_deref() {
                None => Vec2::ZERO,
                Some([vx, vy]) => Vec2::new(*vx, *vy),
                Some(_) => return Err(OecsError::Config("--velocity takes vx,vy".into())),
            };
            let frame = FrameChange { theta: [a.theta0, a.rate, 0.0], b: [Vec2::ZERO, v, Vec2::ZERO] };
            cfg.scan.step = a.step.or(cfg.scan.step);
            let (x, y) = match &a.region {
                Some(r) => {
                    let r = four(r)?;
                    let step = a.step.unwrap_or((r[1] - r[0]).max(r[3] - r[2]) / 100.0);
                    let ax = |lo, hi| {
                        GridAxis::spanning(lo, hi, step).map_err(|e| OecsError::Config(format!("region: {e}")))
                    };
                    (ax(r[0], r[1])?, ax(r[2], r[3])?)
                }
                None => match &field {
                    pipeline::LoadedField::Gridded(g) if a.step.is_none() => (g.x_axis(), g.y_axis()),
                    _ => {
                        let g = pipeline::scan_grid(&cfg, &field)?;
                        (g.x, g.y)
                    }
                },
            };
            if a.nt == 0 || a.dt.is_nan() || a.dt <= 0.0 {
                return Err(OecsError::Config("need nt >= 1 and dt > 0".into()));
            }
            let out = pipeline::frame_transform_grid(&field, frame, x, y, a.t0, a.dt, a.nt)?;
            grid_io::write_grid(&a.output, &out)?;
            eprintln!("wrote {}", a.output.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
