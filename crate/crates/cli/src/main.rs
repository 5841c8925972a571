use anyhow::{bail, Context, Result};
use clap::{ArgGroup, Args, Parser, Subcommand};
use flagmeasure::flagmeasure::MeasureKind;
use flagmeasure::steiner::ThetaRoute;
use std::path::PathBuf;
use std::process::ExitCode;

mod body;
mod run;

use run::{
    config_from_report, execute, Command, CounterexampleRun, MeasureConfig, RunConfig, SteinerConfig, SteinerMode,
    TransformCheckConfig,
};

/// Flag measures of convex polytopes: evaluation, local Steiner formula
/// checks and the rotation counterexample.
///
/// Exit status: 0 success, 1 failure, 2 inconclusive, 3 error.
#[derive(Parser)]
#[command(name = "flagmeasure", version)]
struct Cli {
    /// Random seed.
    #[arg(long, global = true, env = "FLAGMEASURE_SEED", default_value_t = 1)]
    seed: u64,
    /// Worker threads (0 = all cores); results do not depend on it.
    #[arg(long, global = true, env = "FLAGMEASURE_THREADS", default_value_t = 0)]
    threads: usize,
    /// Write the report here instead of standard output.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Atoms, total mass and integrals of a flag measure.
    Measure(MeasureArgs),
    /// Local Steiner fit, parallel-body expansion or additivity check.
    Steiner(SteinerArgs),
    /// Valuation values along the lift polytopes and their rotated copies.
    Counterexample(CounterexampleArgs),
    /// Grassmannian moment calibration and the constant transform values.
    TransformCheck(TransformCheckArgs),
    /// Re-run the configuration stored in a report.
    Rerun { report: PathBuf },
}

#[derive(Args)]
#[command(group(ArgGroup::new("kind").required(true).args(["tau", "theta", "area", "curvature"])))]
struct MeasureArgs {
    /// cube[:d], simplex[:d], box:a,b,.., lift:t[,d] or a vertex file.
    #[arg(long)]
    body: String,
    /// τ_j (needs -j).
    #[arg(long)]
    tau: bool,
    /// Θ^(k)_m (needs -k, -m).
    #[arg(long)]
    theta: bool,
    /// S^(k)_m.
    #[arg(long)]
    area: bool,
    /// C^(k)_m.
    #[arg(long)]
    curvature: bool,
    #[arg(short)]
    j: Option<usize>,
    #[arg(short)]
    k: Option<usize>,
    #[arg(short)]
    m: Option<usize>,
    /// Flag functions to integrate: one, normal-last-squared, upper, first-coordinate.
    #[arg(long, value_delimiter = ',', default_value = "one")]
    function: Vec<String>,
    /// Spatial factor: ball:c..,r, half-cylinder:r or half-space:n..,offset.
    #[arg(long)]
    spatial: Option<String>,
    /// Grassmannian samples for k > 0.
    #[arg(long, default_value_t = 20_000)]
    outer: usize,
    /// Monte Carlo samples per normal cone without an exact rule.
    #[arg(long, default_value_t = 100_000)]
    cone_samples: usize,
    /// Include every atom in the report.
    #[arg(long)]
    atoms: bool,
}

#[derive(Args)]
#[command(group(ArgGroup::new("mode").args(["parallel", "additivity"])))]
struct SteinerArgs {
    #[arg(long)]
    body: String,
    #[arg(short)]
    k: usize,
    #[arg(short)]
    m: Option<usize>,
    /// ε grid for the fit (default 0.5, 1, .. with d − k points).
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<f64>>,
    /// Compare both sides of the parallel-body expansion at this ε.
    #[arg(long)]
    parallel: Option<f64>,
    /// Check additivity against this second body.
    #[arg(long)]
    additivity: Option<String>,
    /// Use the flat-sampling route for additivity.
    #[arg(long)]
    inversion: bool,
    #[arg(long, default_value = "one")]
    function: String,
    #[arg(long)]
    spatial: Option<String>,
    /// Flats per ε.
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, default_value_t = 20_000)]
    outer: usize,
    #[arg(long, default_value_t = 100_000)]
    cone_samples: usize,
    /// Agreement threshold in combined standard errors.
    #[arg(long, default_value_t = 3.0)]
    sigmas: f64,
}

#[derive(Args)]
struct CounterexampleArgs {
    #[arg(long, default_value_t = 3)]
    dim: usize,
    #[arg(short, default_value_t = 1)]
    j: usize,
    /// Decreasing lift steps.
    #[arg(long, value_delimiter = ',', default_value = "1/8,1/16,1/32,1/64")]
    t_grid: Vec<String>,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    /// Rotation angle about the vertical axis.
    #[arg(long, default_value_t = std::f64::consts::FRAC_PI_4)]
    angle: f64,
    #[arg(long, default_value_t = std::f64::consts::PI / 16.0)]
    delta_bump: f64,
    #[arg(long, default_value_t = 1e-6)]
    delta_a: f64,
    #[arg(long, default_value_t = 20_000)]
    directions: usize,
    #[arg(long, default_value_t = 0.1)]
    stabilization: f64,
    /// Use the rotation-invariant control function u_d².
    #[arg(long)]
    invariant_f: bool,
}

#[derive(Args)]
struct TransformCheckArgs {
    #[arg(long, default_value_t = 5)]
    max_dim: usize,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
}

fn measure_kind(a: &MeasureArgs) -> Result<MeasureKind> {
    let km = || -> Result<(usize, usize)> {
        Ok((a.k.context("missing -k")?, a.m.context("missing -m")?))
    };
    Ok(if a.tau {
        MeasureKind::Tau {
            j: a.j.context("--tau needs -j")?,
        }
    } else if a.theta {
        let (k, m) = km()?;
        MeasureKind::Theta { k, m }
    } else if a.area {
        let (k, m) = km()?;
        MeasureKind::Area { k, m }
    } else {
        let (k, m) = km()?;
        MeasureKind::Curvature { k, m }
    })
}

fn steiner_mode(a: &SteinerArgs) -> Result<SteinerMode> {
    if let Some(eps) = a.parallel {
        return Ok(SteinerMode::Parallel {
            eps,
            m: a.m.context("--parallel needs -m")?,
        });
    }
    if let Some(other) = &a.additivity {
        return Ok(SteinerMode::Additivity {
            other: other.clone(),
            m: a.m.context("--additivity needs -m")?,
            route: if a.inversion {
                ThetaRoute::Inversion
            } else {
                ThetaRoute::Polytope
            },
        });
    }
    let grid = match &a.grid {
        Some(g) => g.clone(),
        None => {
            let d = body::parse_body(&a.body)?.ambient_dim();
            if a.k >= d {
                bail!("-k must be below the dimension {d}");
            }
            (1..=d - a.k).map(|i| 0.5 * i as f64).collect()
        }
    };
    Ok(SteinerMode::Fit { grid })
}

fn config(cli: &Cli) -> Result<RunConfig> {
    let command = match &cli.command {
        Cmd::Measure(a) => Command::Measure(MeasureConfig {
            body: a.body.clone(),
            measure: measure_kind(a)?,
            functions: a.function.clone(),
            spatial: a.spatial.clone(),
            outer: a.outer,
            cone_samples: a.cone_samples,
            atoms: a.atoms,
        }),
        Cmd::Steiner(a) => Command::Steiner(SteinerConfig {
            body: a.body.clone(),
            k: a.k,
            function: a.function.clone(),
            spatial: a.spatial.clone(),
            samples: a.samples,
            outer: a.outer,
            cone_samples: a.cone_samples,
            sigmas: a.sigmas,
            mode: steiner_mode(a)?,
        }),
        Cmd::Counterexample(a) => Command::Counterexample(CounterexampleRun {
            d: a.dim,
            j: a.j,
            t_grid: a.t_grid.clone(),
            samples: a.samples,
            angle: a.angle,
            delta_bump: a.delta_bump,
            delta_a: a.delta_a,
            hausdorff_directions: a.directions,
            stabilization: a.stabilization,
            invariant_f: a.invariant_f,
        }),
        Cmd::TransformCheck(a) => Command::TransformCheck(TransformCheckConfig {
            max_dim: a.max_dim,
            samples: a.samples,
        }),
        Cmd::Rerun { report } => {
            let text = std::fs::read_to_string(report).with_context(|| format!("reading {}", report.display()))?;
            return config_from_report(&text);
        }
    };
    Ok(RunConfig {
        seed: cli.seed,
        command,
    })
}

fn main_inner(cli: &Cli) -> Result<i32> {
    flagmeasure::parallel::set_threads(cli.threads);
    let cfg = config(cli)?;
    let outcome = execute(&cfg)?;
    match &cli.output {
        Some(path) => std::fs::write(path, &outcome.report).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{}", outcome.report),
    }
    eprintln!("status: {}", outcome.status);
    Ok(outcome.exit_code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}
