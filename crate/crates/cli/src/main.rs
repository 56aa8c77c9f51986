//! `lodm`: identifiability checks, equivalence curves, simulation and
//! fitting for linearly observation-driven time-series models.
//!
//! Exit codes: 0 success (or identifiable), 1 runtime or domain error,
//! 2 config error, 3 not identifiable / no curve, 4 link not invertible.

mod config;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use config::{Overrides, RunConfig};
use lodm_core::ident::{check_identifiable, Verdict};
use lodm_core::inference::DEFAULT_DISCARD;
use lodm_core::invert::filter_latent;
use lodm_core::models::stationarity_warnings;
use lodm_core::{
    curve_point, fit_mle, non_ident_curve, profile_along_curve, simulate, Error, FitOptions,
    InitPoint, LodmParams, ModelSpec, Trajectory,
};

#[derive(Parser)]
#[command(
    name = "lodm",
    version,
    about = "Identifiability and inference for linearly observation-driven models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long = "burn-in")]
    burn_in: Option<usize>,
    /// Tolerance for the polynomial gcd.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a trajectory; writes `k,y,x` CSV and a `<out>.meta.json` sidecar.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Simulate even when the parameters may not admit a stationary solution.
        #[arg(long)]
        force: bool,
    },
    /// Print the identifiability report; the exit code carries the verdict.
    Check {
        #[command(flatten)]
        common: Common,
    },
    /// Tabulate the curve of equivalent parameters; writes the curve JSON to `<out>.curve.json`.
    Curve {
        #[command(flatten)]
        common: Common,
        /// Curve positions; 11 evenly spaced points across the admissible range by default.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        d: Vec<f64>,
    },
    /// Impulse response `h_0..h_K` as `k,h` CSV.
    Impulse {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 50)]
        horizon: usize,
    },
    /// Latent path recovered from an observation CSV (column `y`).
    Reconstruct {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: PathBuf,
    },
    /// Maximum-likelihood fit started at the configured parameters.
    Fit {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = DEFAULT_DISCARD)]
        discard: usize,
    },
    /// Conditional log-likelihood along the equivalence curve through the configured parameters.
    Profile {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: PathBuf,
        #[arg(
            long,
            value_delimiter = ',',
            allow_hyphen_values = true,
            required = true
        )]
        d: Vec<f64>,
        #[arg(long, default_value_t = DEFAULT_DISCARD)]
        discard: usize,
    },
}

enum Failure {
    Config(String),
    Runtime(anyhow::Error),
    Verdict(u8, String),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NotInvertible => Failure::Verdict(4, e.to_string()),
            Error::NoCurve => Failure::Verdict(3, e.to_string()),
            other => Failure::Runtime(other.into()),
        }
    }
}

type Outcome = Result<u8, Failure>;

fn load(common: &Common) -> Result<(RunConfig, ModelSpec, LodmParams), Failure> {
    let overrides = Overrides {
        seed: common.seed,
        n: common.n,
        burn_in: common.burn_in,
        tol: common.tol,
    };
    let cfg = RunConfig::load(&common.config, &overrides).map_err(Failure::Config)?;
    let (spec, params) = cfg.model().map_err(Failure::Config)?;
    Ok((cfg, spec, params))
}

fn output(out: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn sidecar(out: &Path, suffix: &str) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn write_json<T: serde::Serialize>(value: &T, w: &mut dyn Write) -> anyhow::Result<()> {
    serde_json::to_writer_pretty(&mut *w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn read_observations(path: &Path) -> anyhow::Result<Vec<f64>> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(Trajectory::read_csv(file)
        .with_context(|| format!("cannot read observations from {}", path.display()))?
        .y)
}

fn require_invertible(params: &LodmParams) -> Result<(), Failure> {
    if params.is_invertible() {
        Ok(())
    } else {
        Err(Error::NotInvertible.into())
    }
}

fn cmd_simulate(common: &Common, force: bool) -> Outcome {
    let (cfg, spec, params) = load(common)?;
    let warnings = stationarity_warnings(&spec, &params);
    if !warnings.is_empty() && !force {
        let msg = warnings.join("; ");
        return Err(Failure::Runtime(anyhow::anyhow!(
            "{msg}; pass --force to simulate anyway"
        )));
    }
    let traj = simulate(&spec, &params, cfg.n, cfg.burn_in, cfg.seed, None)?;
    let mut w = output(common.out.as_deref())?;
    traj.write_csv(&mut w)?;
    w.flush()?;
    if let (Some(out), Some(meta)) = (&common.out, &traj.meta) {
        let mut m = output(Some(&sidecar(out, ".meta.json")))?;
        write_json(meta, &mut m)?;
    }
    Ok(0)
}

fn cmd_check(common: &Common) -> Outcome {
    let (cfg, _, params) = load(common)?;
    let report = check_identifiable(&params, cfg.tol)?;
    write_json(&report, &mut output(common.out.as_deref())?)?;
    Ok(match report.verdict {
        Verdict::Identifiable => 0,
        Verdict::NotIdentifiable => 3,
        Verdict::InvertibilityFails => 4,
    })
}

fn cmd_curve(common: &Common, d: &[f64]) -> Outcome {
    let (cfg, spec, params) = load(common)?;
    let curve = non_ident_curve(spec.family, &params, cfg.tol)?;
    let [lo, hi] = curve.d_range;
    let grid: Vec<f64> = if d.is_empty() {
        (0..=10).map(|i| lo + (hi - lo) * i as f64 / 10.0).collect()
    } else {
        d.to_vec()
    };
    if let Some(bad) = grid.iter().find(|&&x| !curve.contains(x)) {
        return Err(Failure::Runtime(anyhow::anyhow!(
            "d = {bad} is outside the admissible range [{lo}, {hi}]"
        )));
    }
    let mut header = vec!["d".to_string(), "omega".to_string()];
    header.extend((1..=spec.p).map(|i| format!("a{i}")));
    header.extend((1..=spec.q).map(|j| format!("b{j}")));
    let mut w = csv::Writer::from_writer(output(common.out.as_deref())?);
    w.write_record(&header).context("writing curve")?;
    for &x in &grid {
        let pt = curve_point(&curve, x)?;
        let mut row = vec![x, pt.omega];
        row.extend(&pt.a);
        row.extend(&pt.b);
        w.serialize(row).context("writing curve")?;
    }
    w.flush()?;
    if let Some(out) = &common.out {
        write_json(&curve, &mut output(Some(&sidecar(out, ".curve.json")))?)?;
    }
    Ok(0)
}

fn cmd_impulse(common: &Common, horizon: usize) -> Outcome {
    let (_, _, params) = load(common)?;
    let h = params.companion()?.impulse_response(horizon);
    let mut w = csv::Writer::from_writer(output(common.out.as_deref())?);
    w.write_record(["k", "h"])
        .context("writing impulse response")?;
    for (k, v) in h.iter().enumerate() {
        w.serialize((k, v)).context("writing impulse response")?;
    }
    w.flush()?;
    Ok(0)
}

fn cmd_reconstruct(common: &Common, input: &Path) -> Outcome {
    let (_, spec, params) = load(common)?;
    require_invertible(&params)?;
    let y = read_observations(input)?;
    let z0 = InitPoint::from_data(spec.family, params.phi, &y)?;
    let x = filter_latent(&spec, &params, &y, &z0.state(spec.p, spec.q))?;
    let traj = Trajectory {
        x: Some(x[..y.len()].to_vec()),
        y,
        meta: None,
    };
    let mut w = output(common.out.as_deref())?;
    traj.write_csv(&mut w)?;
    w.flush()?;
    Ok(0)
}

fn cmd_fit(common: &Common, input: &Path, discard: usize) -> Outcome {
    let (_, spec, params) = load(common)?;
    require_invertible(&params)?;
    let y = read_observations(input)?;
    let opts = FitOptions {
        discard,
        ..FitOptions::default()
    };
    let fit = fit_mle(&spec, &y, &params, &opts)?;
    write_json(&fit, &mut output(common.out.as_deref())?)?;
    Ok(0)
}

fn cmd_profile(common: &Common, input: &Path, d: &[f64], discard: usize) -> Outcome {
    let (cfg, spec, params) = load(common)?;
    let curve = non_ident_curve(spec.family, &params, cfg.tol)?;
    let y = read_observations(input)?;
    let z0 = InitPoint::from_data(spec.family, params.phi, &y)?;
    let prof = profile_along_curve(&spec, &y, &curve, d, &z0, discard)?;
    let mut w = csv::Writer::from_writer(output(common.out.as_deref())?);
    w.write_record(["d", "loglik"]).context("writing profile")?;
    for row in &prof {
        w.serialize(row).context("writing profile")?;
    }
    w.flush()?;
    Ok(0)
}

fn run(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Simulate { common, force } => cmd_simulate(common, *force),
        Command::Check { common } => cmd_check(common),
        Command::Curve { common, d } => cmd_curve(common, d),
        Command::Impulse { common, horizon } => cmd_impulse(common, *horizon),
        Command::Reconstruct { common, input } => cmd_reconstruct(common, input),
        Command::Fit {
            common,
            input,
            discard,
        } => cmd_fit(common, input, *discard),
        Command::Profile {
            common,
            input,
            d,
            discard,
        } => cmd_profile(common, input, d, *discard),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Verdict(code, msg)) => {
            eprintln!("{msg}");
            ExitCode::from(code)
        }
    }
}
