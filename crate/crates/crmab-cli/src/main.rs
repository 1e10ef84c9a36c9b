//! `crmab`: solver, simulator, bound, generator, and packaged
//! experiments for intermittently available two-state bandit arms.
//!
//! Exit codes: `0` success, `1` usage or configuration problems, `2`
//! numerical failures (non-convergence, invalid brackets, budget
//! exhaustion).

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crmab_cli::config::{ConfigFile, RewardModeDto};
use crmab_cli::experiments::{run_experiment, ExperimentOverrides};
use crmab_cli::generate::{
    generate, AvailabilityChoice, GeneratorSpec, RewardStructure, RhoMode,
};
use crmab_cli::output::{
    arm_choice_csv, bound_arms_csv, bound_csv, index_csv, policies_csv, totals_csv,
    trajectory_csv, Manifest, OutDir,
};
use crmab_cli::run::{
    build_pool, compute_bound, required_tables, resolve_threads, simulate_policies,
    whittle_tables,
};

#[derive(Parser)]
#[command(
    name = "crmab",
    version,
    about = "Solver and simulator for intermittently available two-state bandit arms"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute per-arm subsidy-index tables and write them as CSV.
    Index(IndexArgs),
    /// Simulate the configured policies under common random numbers.
    Simulate(SimulateArgs),
    /// Compute the decoupled upper bound on the constrained value.
    Bound(BoundArgs),
    /// Generate a random instance configuration.
    Generate(GenerateArgs),
    /// Run a packaged experiment (1-5) end to end.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct IndexArgs {
    /// Instance configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Override the index-table belief grid resolution.
    #[arg(long)]
    grid: Option<usize>,
    /// Worker threads (default: CRMAB_THREADS, else all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Instance configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Override the simulation seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the replication count.
    #[arg(long)]
    replications: Option<usize>,
    /// Override the value-table belief grid resolution.
    #[arg(long)]
    grid: Option<usize>,
    /// Override what a played arm pays into the objective.
    #[arg(long, value_enum)]
    reward_mode: Option<RewardModeArg>,
    /// Worker threads (default: CRMAB_THREADS, else all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct BoundArgs {
    /// Instance configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Override the value-table belief grid resolution.
    #[arg(long)]
    grid: Option<usize>,
}

#[derive(Args)]
struct GenerateArgs {
    /// Output configuration file (TOML).
    #[arg(long)]
    out: PathBuf,
    /// Number of arms.
    #[arg(long, default_value_t = 100)]
    arms: usize,
    /// Reward structure across arms.
    #[arg(long, value_enum, default_value_t = RewardStructure::Contiguous)]
    structure: RewardStructure,
    /// Availability model drawn for each arm.
    #[arg(long, value_enum, default_value_t = AvailabilityArg::Unconstrained)]
    availability: AvailabilityArg,
    /// Outage length for semi-deterministic availability.
    #[arg(long, default_value_t = 3)]
    outage: u32,
    /// Observation-probability structure.
    #[arg(long, value_enum, default_value_t = RhoMode::Binary)]
    rho: RhoMode,
    /// Arms played per slot.
    #[arg(long, default_value_t = 4)]
    plays_per_slot: usize,
    /// Discount factor.
    #[arg(long, default_value_t = 0.95)]
    beta: f64,
    /// Generator seed (also written as the simulation seed).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Replication count written into the configuration.
    #[arg(long, default_value_t = 1000)]
    replications: usize,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Experiment id, 1 through 5.
    id: u8,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Override the replication count.
    #[arg(long)]
    replications: Option<usize>,
    /// Override the generated-instance count per sub-case.
    #[arg(long)]
    instances: Option<usize>,
    /// Override the number of generated arms per instance.
    #[arg(long)]
    arms: Option<usize>,
    /// Override the value-table belief grid resolution.
    #[arg(long)]
    grid: Option<usize>,
    /// Override the base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: CRMAB_THREADS, else all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RewardModeArg {
    /// Expected reward of the pre-observation belief.
    ExpectedBelief,
    /// Sampled binary observation outcome.
    Realized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AvailabilityArg {
    /// Every arm available in every slot.
    Unconstrained,
    /// Availability transition probabilities drawn uniformly.
    Stochastic,
    /// Fixed-length outages with drawn recovery/persistence.
    SemiDeterministic,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let numerical = err
                .chain()
                .any(|cause| cause.downcast_ref::<crmab_core::Error>().is_some());
            ExitCode::from(if numerical { 2 } else { 1 })
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Index(args) => cmd_index(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Bound(args) => cmd_bound(args),
        Command::Generate(args) => cmd_generate(args),
        Command::Experiment(args) => cmd_experiment(args),
    }
}

fn load(path: &PathBuf) -> Result<(ConfigFile, String)> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let (config, warnings) = ConfigFile::parse(&text)?;
    for warning in warnings {
        eprintln!("note: {warning:?}");
    }
    Ok((config, text))
}

fn cmd_index(args: IndexArgs) -> Result<()> {
    let (mut config, _) = load(&args.config)?;
    if let Some(grid) = args.grid {
        config.index.grid = grid;
    }
    let config_text = config.to_toml();
    let pool = build_pool(resolve_threads(args.threads))?;
    let tables = whittle_tables(&pool, &config)?;
    let mut out = OutDir::create(&args.out)?;
    out.write("config.toml", &config_text)?;
    for (n, table) in tables.iter().enumerate() {
        out.write(&format!("arm_{:02}.csv", n + 1), &index_csv(table))?;
    }
    let manifest = Manifest::new("index".to_string(), &config_text, 0, 0);
    out.finish(manifest)
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let (mut config, _) = load(&args.config)?;
    if let Some(seed) = args.seed {
        config.simulation.seed = seed;
    }
    if let Some(reps) = args.replications {
        config.simulation.replications = reps;
    }
    if let Some(grid) = args.grid {
        config.solver.value_grid = grid;
    }
    if let Some(mode) = args.reward_mode {
        config.instance.reward_mode = match mode {
            RewardModeArg::ExpectedBelief => RewardModeDto::ExpectedBelief,
            RewardModeArg::Realized => RewardModeDto::Realized,
        };
    }
    let config_text = config.to_toml();
    ConfigFile::parse(&config_text)?;
    let pool = build_pool(resolve_threads(args.threads))?;
    let tables = required_tables(&pool, &config)?;
    let results = simulate_policies(&pool, &config, &tables)?;
    let labels: Vec<&str> = results.iter().map(|(k, _)| k.label()).collect();
    let reports: Vec<_> = results.iter().map(|(_, r)| r).collect();
    let mut out = OutDir::create(&args.out)?;
    out.write("config.toml", &config_text)?;
    out.write("totals.csv", &totals_csv(&labels, &reports))?;
    out.write("trajectory.csv", &trajectory_csv(&labels, &reports))?;
    out.write("arm_choice.csv", &arm_choice_csv(&labels, &reports))?;
    out.write("policies.csv", &policies_csv(&labels, &reports))?;
    let manifest = Manifest::new(
        "simulate".to_string(),
        &config_text,
        config.simulation.seed,
        config.simulation.replications,
    );
    out.finish(manifest)
}

fn cmd_bound(args: BoundArgs) -> Result<()> {
    let (mut config, _) = load(&args.config)?;
    if let Some(grid) = args.grid {
        config.solver.value_grid = grid;
    }
    let config_text = config.to_toml();
    ConfigFile::parse(&config_text)?;
    let bound = compute_bound(&config)?;
    let mut out = OutDir::create(&args.out)?;
    out.write("config.toml", &config_text)?;
    out.write("bound.csv", &bound_csv(&bound))?;
    out.write("bound_arms.csv", &bound_arms_csv(&bound))?;
    let manifest = Manifest::new("bound".to_string(), &config_text, 0, 0);
    out.finish(manifest)
}

fn cmd_generate(args: GenerateArgs) -> Result<()> {
    let spec = GeneratorSpec {
        arms: args.arms,
        structure: args.structure,
        availability: match args.availability {
            AvailabilityArg::Unconstrained => AvailabilityChoice::Unconstrained,
            AvailabilityArg::Stochastic => AvailabilityChoice::Stochastic,
            AvailabilityArg::SemiDeterministic => AvailabilityChoice::SemiDeterministic {
                outage: args.outage,
            },
        },
        rho: args.rho,
        plays_per_slot: args.plays_per_slot,
        beta: args.beta,
        seed: args.seed,
        replications: args.replications,
    };
    let config = generate(&spec);
    let text = config.to_toml();
    ConfigFile::parse(&text).context("generated configuration fails validation")?;
    if let Some(parent) = args.out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .with_context(|| format!("cannot create {}", parent.display()))?;
        }
    }
    std::fs::write(&args.out, &text)
        .with_context(|| format!("cannot write {}", args.out.display()))?;
    println!(
        "wrote {} ({} arms, seed {})",
        args.out.display(),
        args.arms,
        args.seed
    );
    Ok(())
}

fn cmd_experiment(args: ExperimentArgs) -> Result<()> {
    let overrides = ExperimentOverrides {
        replications: args.replications,
        instances: args.instances,
        arms: args.arms,
        value_grid: args.grid,
        seed: args.seed,
    };
    let pool = build_pool(resolve_threads(args.threads))?;
    run_experiment(args.id, &args.out, &pool, &overrides)
}
