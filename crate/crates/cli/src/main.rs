//! `hh`: transforms, propagators and verification suites from the command line.
//!
//! Exit codes: 0 success, 2 usage or input error, 3 tolerance breach,
//! 4 refused precondition.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use hh_core::config::{QuadratureMode, RunConfig};
use hh_core::container::{self, Stored};
use hh_core::fields::s_translate;
use hh_core::htransform::{forward, forward_checked, inverse, plancherel_constant, plancherel_ratio, TransformError};
use hh_core::propagators::{schrodinger_phase, wave_at, wave_branches, wave_energy, PropagatorError, TransportDatum};
use hh_core::suites;
use hh_core::window::Localizer;
use hh_core::{GaussianPacket, RadialField, SpaceTimeField, TimeGrid};

#[derive(Debug)]
enum Failure {
    Usage(anyhow::Error),
    Tolerance(anyhow::Error),
    Refused(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Tolerance(_) => 3,
            Failure::Refused(_) => 4,
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Usage(e)
    }
}

type Outcome = Result<(), Failure>;

#[derive(Parser)]
#[command(name = "hh", version, about = "Radial harmonic analysis on the Heisenberg group")]
struct Cli {
    /// JSON run configuration; defaults apply when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Forward or inverse radial transform of an HHFLD file.
    Transform {
        #[arg(long, value_enum)]
        dir: Direction,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Largest Laguerre index; defaults to the config's `l_max`.
        #[arg(long)]
        l_max: Option<usize>,
    },
    /// Evolve data under the Schrödinger or wave flow.
    Propagate(PropagateArgs),
    /// Run a verification suite and print its JSON report.
    Verify {
        suite: String,
        #[arg(long)]
        seed: Option<u64>,
        /// Write the report here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Record wall time per suite (makes reports run-dependent).
        #[arg(long)]
        timings: bool,
    },
    /// Write a default config or a sample field.
    Generate {
        #[command(subcommand)]
        what: Generate,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Direction {
    Fwd,
    Inv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum Eq {
    Schrodinger,
    Wave,
}

#[derive(clap::Args)]
struct PropagateArgs {
    /// JSON run-spec; flags below override its fields.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, value_enum)]
    eq: Option<Eq>,
    /// Use the transport datum on Laguerre line `ell` as `u0`.
    #[arg(long)]
    transport_ell: Option<usize>,
    #[arg(long)]
    u0: Option<PathBuf>,
    /// Initial velocity for the wave flow: a file, or `zero`.
    #[arg(long)]
    u1: Option<String>,
    /// A single output time.
    #[arg(long, conflicts_with = "times")]
    t: Option<f64>,
    /// Comma-separated output times.
    #[arg(long, value_delimiter = ',')]
    times: Option<Vec<f64>>,
    /// Space-time HHFLD output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Generate {
    Config {
        #[arg(long)]
        out: PathBuf,
    },
    /// `e^{-a rho^2} e^{-(s/sigma)^2} e^{i kappa s}` on the config grid.
    Packet {
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        #[arg(long, default_value_t = 4.0)]
        sigma: f64,
        #[arg(long, default_value_t = 0.0)]
        kappa: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// The transport datum on Laguerre line `ell`.
    Transport {
        #[arg(long, default_value_t = 0)]
        ell: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Propagator run description.
#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunSpec {
    equation: Option<Eq>,
    #[serde(default)]
    times: Vec<f64>,
    u0: Option<PathBuf>,
    u1: Option<String>,
    transport_ell: Option<usize>,
    localizer: Option<Localizer>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Ok(v) = std::env::var("HH_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    log::warn!("HH_THREADS ignored: {e}");
                }
            }
            _ => {
                eprintln!("error: HH_THREADS must be a positive integer, got {v:?}");
                return ExitCode::from(2);
            }
        }
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Usage(e) | Failure::Tolerance(e) | Failure::Refused(e)) = &f;
            eprintln!("error: {e:#}");
            ExitCode::from(f.code())
        }
    }
}

fn run(cli: Cli) -> Outcome {
    let cfg = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Transform { dir, input, out, l_max } => transform(&cfg, dir, &input, &out, l_max.unwrap_or(cfg.l_max)),
        Command::Propagate(args) => propagate(&cfg, args),
        Command::Verify {
            suite,
            seed,
            out,
            timings,
        } => verify(cfg, &suite, seed, out.as_deref(), timings),
        Command::Generate { what } => generate(&cfg, what),
    }
}

fn load_config(path: Option<&Path>) -> Result<RunConfig, Failure> {
    let Some(path) = path else {
        return Ok(RunConfig::default());
    };
    let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    RunConfig::from_json(&text)
        .with_context(|| format!("config {}", path.display()))
        .map_err(Failure::Usage)
}

fn read_field(path: &Path) -> Result<Stored, Failure> {
    container::read(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(Failure::Usage)
}

fn write_field(path: &Path, item: &Stored) -> Outcome {
    container::write(path, item).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn transform(cfg: &RunConfig, dir: Direction, input: &Path, out: &Path, l_max: usize) -> Outcome {
    let constant = plancherel_constant;
    match (dir, read_field(input)?) {
        (Direction::Fwd, Stored::Radial(f)) => {
            if cfg.quadrature_mode == QuadratureMode::Closure {
                log::warn!("closure quadrature needs an analytic field; sampled input uses the grid rule");
            }
            let theta = match forward_checked(&f, l_max, cfg.tolerances.plancherel) {
                Ok(t) => t,
                Err(e @ TransformError::Truncation { .. }) => return Err(Failure::Tolerance(e.into())),
                Err(e) => return Err(Failure::Usage(e.into())),
            };
            let ratio = plancherel_ratio(&f, &theta);
            println!("plancherel ratio {ratio:.12} (constant {:.12})", constant(f.grid.d));
            write_field(out, &Stored::Spectral(theta))
        }
        (Direction::Inv, Stored::Spectral(theta)) => {
            let f = inverse(&theta);
            let ratio = plancherel_ratio(&f, &theta);
            println!("plancherel ratio {ratio:.12} (constant {:.12})", constant(f.grid.d));
            write_field(out, &Stored::Radial(f))
        }
        (Direction::Fwd, other) => Err(Failure::Usage(anyhow!(
            "forward needs a radial field, got {:?}",
            other.kind()
        ))),
        (Direction::Inv, other) => Err(Failure::Usage(anyhow!(
            "inverse needs a gridded spectral field, got {:?}",
            other.kind()
        ))),
    }
}

#[derive(Serialize)]
struct PropagateReport {
    equation: Eq,
    d: usize,
    times: Vec<f64>,
    conserved: &'static str,
    max_drift: f64,
    tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    transport: Option<TransportReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    even_split: Option<bool>,
}

#[derive(Serialize)]
struct TransportReport {
    ell: usize,
    velocity: f64,
    shifts: Vec<f64>,
    max_shift_error: f64,
}

fn propagate(cfg: &RunConfig, args: PropagateArgs) -> Outcome {
    let mut spec = match &args.spec {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading run-spec {}", p.display()))?;
            serde_json::from_str::<RunSpec>(&text).with_context(|| format!("run-spec {}", p.display()))?
        }
        None => RunSpec::default(),
    };
    if args.eq.is_some() {
        spec.equation = args.eq;
    }
    if args.transport_ell.is_some() {
        spec.transport_ell = args.transport_ell;
    }
    if args.u0.is_some() {
        spec.u0 = args.u0;
    }
    if args.u1.is_some() {
        spec.u1 = args.u1;
    }
    if let Some(t) = args.t {
        spec.times = vec![t];
    } else if let Some(ts) = args.times {
        spec.times = ts;
    }
    let eq = spec
        .equation
        .ok_or_else(|| anyhow!("no equation given (--eq or run-spec \"equation\")"))?;
    if spec.times.is_empty() {
        spec.times = cfg.times().nodes;
    }
    if spec.times.iter().any(|t| !t.is_finite()) {
        return Err(Failure::Usage(anyhow!("times must be finite")));
    }

    let (u0, datum) = match (&spec.u0, spec.transport_ell) {
        (Some(_), Some(_)) => return Err(Failure::Usage(anyhow!("give either u0 or transport_ell, not both"))),
        (Some(p), None) => match read_field(p)? {
            Stored::Radial(f) => (f, None),
            other => {
                return Err(Failure::Usage(anyhow!(
                    "u0 must be a radial field, got {:?}",
                    other.kind()
                )))
            }
        },
        (None, Some(ell)) => {
            let datum = TransportDatum::new(ell);
            let theta = datum
                .spectrum(&cfg.grid(), cfg.l_max.max(ell))
                .map_err(|e| Failure::Usage(e.into()))?;
            (inverse(&theta), Some(datum))
        }
        (None, None) => return Err(Failure::Usage(anyhow!("no initial data (--u0 or --transport-ell)"))),
    };
    let l_max = cfg.l_max.max(datum.map_or(0, |d| d.ell));
    let mut theta0 = forward(&u0, l_max);
    if let Some(loc) = spec.localizer {
        let d = u0.grid.d;
        theta0.multiply(|ell, l| Complex64::new(loc.weight(hh_core::specfun::eigenvalue(ell as u64, l, d)), 0.0));
    }
    let times = TimeGrid {
        nodes: spec.times.clone(),
    };
    let d = u0.grid.d;

    let (slices, conserved, max_drift, tolerance, even_split) = match eq {
        Eq::Schrodinger => {
            let m0 = theta0.weighted_mass(|_, _| 1.0);
            let mut drift: f64 = 0.0;
            let mut slices = Vec::with_capacity(times.len());
            for &t in &times.nodes {
                let th = schrodinger_phase(&theta0, t);
                drift = drift.max((th.weighted_mass(|_, _| 1.0) / m0 - 1.0).abs());
                slices.push(inverse(&th));
            }
            (slices, "spectral L2 mass", drift, cfg.tolerances.unitarity, None)
        }
        Eq::Wave => {
            let zero_u1 = matches!(spec.u1.as_deref(), None | Some("zero"));
            let theta1 = if zero_u1 {
                hh_core::SpectralField::zeros(theta0.grid.clone(), l_max)
            } else {
                let p = PathBuf::from(spec.u1.as_deref().expect("checked above"));
                match read_field(&p)? {
                    Stored::Radial(f) if f.grid == u0.grid => forward(&f, l_max),
                    Stored::Radial(_) => return Err(Failure::Usage(anyhow!("u1 lives on a different grid than u0"))),
                    other => {
                        return Err(Failure::Usage(anyhow!(
                            "u1 must be a radial field, got {:?}",
                            other.kind()
                        )))
                    }
                }
            };
            let b = match wave_branches(&theta0, &theta1) {
                Ok(b) => b,
                Err(e @ PropagatorError::Refused { .. }) => return Err(Failure::Refused(e.into())),
                Err(e) => return Err(Failure::Usage(e.into())),
            };
            let even = zero_u1
                .then(|| b.plus == b.minus && b.plus.values.iter().zip(&theta0.values).all(|(p, t)| *p == t * 0.5));
            if even == Some(true) {
                log::info!("u1 = 0: gamma_plus = gamma_minus = theta0 / 2");
            }
            let (a0, da0) = wave_at(&b, 0.0);
            let e0 = wave_energy(&a0, &da0);
            let mut drift: f64 = 0.0;
            let mut slices = Vec::with_capacity(times.len());
            for &t in &times.nodes {
                let (u, du) = wave_at(&b, t);
                if e0 > 0.0 {
                    drift = drift.max((wave_energy(&u, &du) / e0 - 1.0).abs());
                }
                slices.push(inverse(&u));
            }
            (slices, "wave energy", drift, cfg.tolerances.energy, even)
        }
    };

    let transport = match (eq, datum) {
        (Eq::Schrodinger, Some(datum)) => {
            let v = datum.velocity(d);
            let err = times
                .nodes
                .iter()
                .zip(&slices)
                .map(|(&t, u)| u.relative_l2_error(&s_translate(&u0, v * t)).unwrap_or(f64::INFINITY))
                .fold(0.0, f64::max);
            Some(TransportReport {
                ell: datum.ell,
                velocity: v,
                shifts: times.nodes.iter().map(|t| v * t).collect(),
                max_shift_error: err,
            })
        }
        _ => None,
    };
    let field = SpaceTimeField::from_slices(times.clone(), slices).map_err(|e| Failure::Usage(e.into()))?;
    if let Some(out) = &args.out {
        write_field(out, &Stored::SpaceTime(field))?;
    }
    let shift_breach = transport.as_ref().map(|t| t.max_shift_error > cfg.tolerances.transport);
    let report = PropagateReport {
        equation: eq,
        d,
        times: times.nodes,
        conserved,
        max_drift,
        tolerance,
        transport,
        even_split,
    };
    println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    if max_drift > tolerance {
        return Err(Failure::Tolerance(anyhow!(
            "{conserved} drifted by {max_drift:e}, tolerance {tolerance:e}"
        )));
    }
    if shift_breach == Some(true) {
        return Err(Failure::Tolerance(anyhow!(
            "transport shift error exceeds {:e}",
            cfg.tolerances.transport
        )));
    }
    Ok(())
}

fn verify(mut cfg: RunConfig, suite: &str, seed: Option<u64>, out: Option<&Path>, timings: bool) -> Outcome {
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let names: Vec<&str> = if suite == "all" {
        suites::SUITES.to_vec()
    } else {
        vec![suite]
    };
    let mut reports = Vec::with_capacity(names.len());
    for name in names {
        let start = Instant::now();
        let mut r = suites::run_suite(name, &cfg).map_err(|e| Failure::Usage(e.into()))?;
        if timings {
            r.wall_time_s = Some(start.elapsed().as_secs_f64());
        }
        eprintln!("{} {name}", if r.pass { "PASS" } else { "FAIL" });
        for c in r.checks.iter().filter(|c| !c.pass) {
            eprintln!("    {}: measured {} against {:?}", c.name, c.measured, c.expected);
        }
        reports.push(r);
    }
    let report = hh_core::VerificationReport::new(cfg, reports);
    let json = report.to_json();
    match out {
        Some(p) => fs::write(p, json + "\n").with_context(|| format!("writing {}", p.display()))?,
        None => println!("{json}"),
    }
    if report.pass {
        Ok(())
    } else {
        let failed: Vec<&str> = report
            .suites
            .iter()
            .filter(|s| !s.pass)
            .map(|s| s.suite.as_str())
            .collect();
        Err(Failure::Tolerance(anyhow!("failed suites: {}", failed.join(", "))))
    }
}

fn generate(cfg: &RunConfig, what: Generate) -> Outcome {
    match what {
        Generate::Config { out } => {
            fs::write(&out, cfg.to_json() + "\n").with_context(|| format!("writing {}", out.display()))?;
            Ok(())
        }
        Generate::Packet { a, sigma, kappa, out } => {
            if !(a > 0.0 && sigma > 0.0) {
                return Err(Failure::Usage(anyhow!("a and sigma must be positive")));
            }
            let f: RadialField = GaussianPacket::new(a, sigma, kappa).field(&cfg.grid());
            write_field(&out, &Stored::Radial(f))
        }
        Generate::Transport { ell, out } => {
            let theta = TransportDatum::new(ell)
                .spectrum(&cfg.grid(), cfg.l_max.max(ell))
                .map_err(|e| Failure::Usage(e.into()))?;
            write_field(&out, &Stored::Radial(inverse(&theta)))
        }
    }
}
