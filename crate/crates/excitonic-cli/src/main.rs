//! Command-line runner for the exciton transport library: steady-state
//! reports, energy optimization, parameter sweeps, and sensitivity tables,
//! written as CSV artifacts with a JSON manifest per invocation.

mod artifact;
mod commands;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use commands::{BathAxis, Ctx, Outcome};
use excitonic::{Config, Method, Objective};

/// Failures split by exit status: bad input exits 2, a run that produced
/// nothing usable exits 1.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
}

#[derive(Parser)]
#[command(
    name = "excitonic",
    version,
    about = "Steady-state exciton transport: simulation, optimization, sweeps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML parameter file; unset fields take the reference values
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Base seed for every stochastic component
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,

    /// Worker threads; a throughput knob that never changes the numbers
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Directory run artifacts are written under
    #[arg(long, global = true, default_value = "runs")]
    out_dir: PathBuf,

    /// Chain length override
    #[arg(long = "N", global = true, value_name = "SITES")]
    n_sites: Option<usize>,

    /// Quantity to maximize or report (default: power, or the config's)
    #[arg(long, global = true, value_enum)]
    objective: Option<ObjectiveArg>,
}

#[derive(Subcommand)]
enum Command {
    /// Stationary populations, power at the resolved load, eigenstate table
    SteadyState,
    /// Ensemble optimization of the interior on-site energies
    Optimize {
        /// Ensemble starts; the first is the clean unperturbed chain
        #[arg(long, default_value_t = 101)]
        ensemble_count: usize,
        /// Search methods, each applied to every start
        #[arg(long, value_enum, value_delimiter = ',', default_values_t = [MethodArg::Sequential])]
        method: Vec<MethodArg>,
    },
    /// Ensemble optimization with a repeating block of energies
    GroupedOptimize {
        #[arg(long, default_value_t = 101)]
        ensemble_count: usize,
        #[arg(long, value_enum, value_delimiter = ',', default_values_t = [MethodArg::Sequential])]
        method: Vec<MethodArg>,
        /// Sites per repeated block
        #[arg(long, default_value_t = 4)]
        n_group: usize,
    },
    /// Grid studies over couplings, bias, bath properties, and losses
    #[command(subcommand)]
    Sweep(SweepCmd),
    /// Normalized objective derivative for every model parameter
    Sensitivity,
    /// Eigenstate table: energies, participation ratios, brightness, amplitudes
    EigenReport,
    /// Transition rates between eigenstates, total and per process
    RatesDump,
    /// One gradient-based run per coupling value from the clean start
    LbfgsDemo {
        /// Coupling grid: start:stop:count, log:start:stop:count, or v1,v2,...
        #[arg(long, default_value = "0.06:0.16:11")]
        j_grid: String,
        /// Also run a fixed-seed ensemble per coupling (0 = single runs only)
        #[arg(long, default_value_t = 0)]
        ensemble_count: usize,
    },
}

#[derive(Subcommand)]
enum SweepCmd {
    /// Inter-site coupling, re-optimized per grid point
    #[command(alias = "J")]
    J {
        #[arg(long)]
        grid: String,
        #[arg(long, default_value_t = 21)]
        ensemble_count: usize,
    },
    /// Ramp step, bath peak retuned and re-optimized per grid point
    #[command(alias = "dE")]
    De {
        #[arg(long)]
        grid: String,
        #[arg(long, default_value_t = 21)]
        ensemble_count: usize,
    },
    /// Bath peak frequency, compared on fixed linear and spiked chains
    Omega0 {
        #[arg(long)]
        grid: String,
        /// Config whose on-site energies define the spiked chain
        #[arg(long)]
        spiked_config: PathBuf,
    },
    /// Bath linewidth, compared on fixed linear and spiked chains
    #[command(alias = "Gamma")]
    Gamma {
        #[arg(long)]
        grid: String,
        #[arg(long)]
        spiked_config: PathBuf,
    },
    /// Bath temperature, with a fresh ensemble per grid point
    #[command(alias = "Tph")]
    Tph {
        #[arg(long)]
        grid: String,
        #[arg(long, default_value_t = 21)]
        ensemble_count: usize,
    },
    /// Radiative x non-radiative loss grid, re-optimized per cell
    LossGrid {
        /// Radiative decay rates
        #[arg(long)]
        em_grid: String,
        /// Non-radiative decay rates
        #[arg(long)]
        nr_grid: String,
        #[arg(long, default_value_t = 20)]
        ensemble_count: usize,
    },
    /// Bias scan at a fixed low bath peak, with and without phonons
    ZeroBias {
        /// Bias grid; must include zero
        #[arg(long, default_value = "0:0.05:11")]
        de_grid: String,
        /// Phonon coupling rates to compare
        #[arg(long, default_value = "0,1.4e-3")]
        gamma_ph: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ObjectiveArg {
    Power,
    Current,
}

impl From<ObjectiveArg> for Objective {
    fn from(o: ObjectiveArg) -> Self {
        match o {
            ObjectiveArg::Power => Objective::Power,
            ObjectiveArg::Current => Objective::Current,
        }
    }
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum MethodArg {
    NelderMead,
    QuasiNewton,
    Sequential,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::NelderMead => Method::NelderMead,
            MethodArg::QuasiNewton => Method::QuasiNewton,
            MethodArg::Sequential => Method::Sequential,
        }
    }
}

fn methods(args: &[MethodArg]) -> Vec<Method> {
    args.iter().map(|&m| m.into()).collect()
}

fn load_config(path: Option<&Path>) -> Result<(Config, Vec<u8>, Option<PathBuf>), CliError> {
    match path {
        None => Ok((Config::default(), Vec::new(), None)),
        Some(p) => {
            let bytes = std::fs::read(p)
                .map_err(|e| CliError::Config(format!("cannot read config '{}': {e}", p.display())))?;
            let text = String::from_utf8(bytes.clone())
                .map_err(|_| CliError::Config(format!("config '{}' is not UTF-8", p.display())))?;
            let config = Config::parse(&text).map_err(|e| CliError::Config(e.to_string()))?;
            Ok((config, bytes, Some(p.to_path_buf())))
        }
    }
}

fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let (config, config_bytes, config_path) = load_config(cli.config.as_deref())?;
    let ctx = Ctx {
        config,
        config_path,
        config_bytes,
        seed: cli.seed,
        out_dir: cli.out_dir.clone(),
        n_override: cli.n_sites,
        objective_override: cli.objective.map(Into::into),
    };
    std::fs::create_dir_all(&ctx.out_dir)
        .map_err(|e| CliError::Runtime(format!("cannot create '{}': {e}", ctx.out_dir.display())))?;

    match &cli.command {
        Command::SteadyState => commands::steady_state(&ctx),
        Command::Optimize {
            ensemble_count,
            method,
        } => commands::optimize(&ctx, *ensemble_count, &methods(method)),
        Command::GroupedOptimize {
            ensemble_count,
            method,
            n_group,
        } => commands::grouped_optimize(&ctx, *ensemble_count, &methods(method), *n_group),
        Command::Sweep(sweep) => match sweep {
            SweepCmd::J {
                grid,
                ensemble_count,
            } => commands::sweep_coupling(&ctx, grid, *ensemble_count),
            SweepCmd::De {
                grid,
                ensemble_count,
            } => commands::sweep_bias(&ctx, grid, *ensemble_count),
            SweepCmd::Omega0 {
                grid,
                spiked_config,
            } => commands::sweep_bath(&ctx, BathAxis::Peak, grid, Some(spiked_config), 0),
            SweepCmd::Gamma {
                grid,
                spiked_config,
            } => commands::sweep_bath(&ctx, BathAxis::Width, grid, Some(spiked_config), 0),
            SweepCmd::Tph {
                grid,
                ensemble_count,
            } => commands::sweep_bath(&ctx, BathAxis::Temperature, grid, None, *ensemble_count),
            SweepCmd::LossGrid {
                em_grid,
                nr_grid,
                ensemble_count,
            } => commands::sweep_losses(&ctx, em_grid, nr_grid, *ensemble_count),
            SweepCmd::ZeroBias { de_grid, gamma_ph } => {
                commands::sweep_zero_bias(&ctx, de_grid, gamma_ph)
            }
        },
        Command::Sensitivity => commands::sensitivity_report(&ctx),
        Command::EigenReport => commands::eigen_report(&ctx),
        Command::RatesDump => commands::rates_dump(&ctx),
        Command::LbfgsDemo {
            j_grid,
            ensemble_count,
        } => commands::lbfgs_demo(&ctx, j_grid, *ensemble_count),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        // ok() because a pool can only be installed once per process
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .ok();
    }
    match run(&cli) {
        Ok(out) => {
            println!(
                "wrote {} ({} of {} runs ok)",
                out.dir.display(),
                out.succeeded,
                out.total
            );
            if out.succeeded == 0 && out.total > 0 {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(CliError::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
