//! Command-line front end for the collision-channel age model: parameter
//! sweeps to CSV, load optimization, simulation-versus-theory validation,
//! and finite-population simulation. Every output is a pure function of the
//! flags and the seed, so reruns are byte-identical.

mod config;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use aoi_core::collision::truncation_warning;
use aoi_core::{
    asymptotic_individual_age, derive_seed, individual_age, lower_bound, optimize_load,
    simulate_individual_age, simulate_system_age, slotted_age, system_age_closed_form,
    system_age_recursion, system_age_truncated, AoiError, ChannelParams, Horizon,
    InfiniteUserSimConfig, LoadObjective, OnOffSimConfig,
};

use config::{resolve_seed, ConfigFile};

const SCHEMA_VERSION: u32 = 1;

/// Usage errors exit with 2, runtime failures with 1.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl From<AoiError> for CliError {
    fn from(e: AoiError) -> Self {
        match e {
            AoiError::InvalidParams(_)
            | AoiError::InvalidModel(_)
            | AoiError::BracketError { .. } => CliError::Usage(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(format!("I/O error: {e}"))
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "aoi",
    version,
    about = "Age of information on an unslotted collision channel"
)]
struct Cli {
    /// Key=value file supplying defaults for long flags (flags win)
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate age metrics over a (rho, p_c) grid and emit CSV
    Sweep(SweepArgs),
    /// Find the offered load minimizing an age objective, emit JSON
    Optimize(OptimizeArgs),
    /// Simulate the aggregate channel and compare against the closed form
    Validate(ValidateArgs),
    /// Simulate N on/off sources and report per-source individual ages
    SimulateOnoff(OnoffArgs),
}

/// Age metrics a sweep can emit, in output (alphabetical) order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
#[value(rename_all = "snake_case")]
enum Metric {
    /// Large-population individual age (1 + 1/rho) e^rho, load only
    Asymptotic,
    /// Series limit of the system age as the truncation grows
    ClosedForm,
    /// Individual age of one of N homogeneous sources
    Individual,
    /// Lower bound on the system age
    LowerBound,
    /// Per-state recursion evaluated at the configured truncation
    Recursion,
    /// Event-driven simulation estimate of the system age
    Simulated,
    /// Slotted-channel baseline, load only
    Slotted,
    /// Markov-chain solver at the configured truncation
    Truncated,
}

impl Metric {
    fn label(self) -> &'static str {
        match self {
            Metric::Asymptotic => "asymptotic",
            Metric::ClosedForm => "closed_form",
            Metric::Individual => "individual",
            Metric::LowerBound => "lower_bound",
            Metric::Recursion => "recursion",
            Metric::Simulated => "simulated",
            Metric::Slotted => "slotted",
            Metric::Truncated => "truncated",
        }
    }
}

#[derive(clap::Args, Debug)]
struct SweepArgs {
    /// Explicit offered loads (mutually exclusive with --rho-min/max/steps)
    #[arg(long, value_delimiter = ',')]
    rho: Option<Vec<f64>>,

    /// Grid start when generating the load axis
    #[arg(long)]
    rho_min: Option<f64>,

    /// Grid end when generating the load axis
    #[arg(long)]
    rho_max: Option<f64>,

    /// Number of grid points when generating the load axis
    #[arg(long)]
    rho_steps: Option<usize>,

    /// Space the generated load axis logarithmically instead of linearly
    #[arg(long)]
    log_spacing: bool,

    /// Collision-free success probabilities
    #[arg(long, value_delimiter = ',')]
    pc: Option<Vec<f64>>,

    /// Service rate
    #[arg(long)]
    mu: Option<f64>,

    /// Metrics to evaluate at every grid point
    #[arg(long, value_delimiter = ',')]
    metrics: Vec<Metric>,

    /// Truncation level for the truncated and recursion metrics
    #[arg(long)]
    truncation: Option<usize>,

    /// Population size for the individual metric
    #[arg(long)]
    population: Option<usize>,

    /// Arrivals per simulated grid point
    #[arg(long)]
    arrivals: Option<u64>,

    /// Base seed; each grid point derives its own stream
    #[arg(long)]
    seed: Option<u64>,

    /// Output file (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Objective {
    /// Minimize the system age at the configured p_c and mu
    System,
    /// Minimize the large-population individual age
    Asymptotic,
}

#[derive(clap::Args, Debug)]
struct OptimizeArgs {
    /// Which age to minimize
    #[arg(long, value_enum, default_value_t = Objective::System)]
    objective: Objective,

    /// Collision-free success probability for the system objective
    #[arg(long)]
    pc: Option<f64>,

    /// Service rate for the system objective
    #[arg(long)]
    mu: Option<f64>,

    /// Lower end of the load bracket
    #[arg(long, default_value_t = aoi_core::optimize::DEFAULT_BRACKET.0)]
    rho_min: f64,

    /// Upper end of the load bracket
    #[arg(long, default_value_t = aoi_core::optimize::DEFAULT_BRACKET.1)]
    rho_max: f64,
}

#[derive(clap::Args, Debug)]
struct ValidateArgs {
    /// Offered load
    #[arg(long)]
    rho: f64,

    /// Collision-free success probability
    #[arg(long)]
    pc: Option<f64>,

    /// Service rate
    #[arg(long)]
    mu: Option<f64>,

    /// Arrivals to simulate
    #[arg(long)]
    arrivals: Option<u64>,

    /// Simulation seed
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(clap::Args, Debug)]
struct OnoffArgs {
    /// Number of on/off sources
    #[arg(long)]
    population: usize,

    /// Total offered load across the population
    #[arg(long)]
    rho: f64,

    /// Updates each source must start before the run ends
    #[arg(long)]
    updates: Option<u64>,

    /// Service rate (defaults to the population size)
    #[arg(long)]
    mu: Option<f64>,

    /// Simulation seed
    #[arg(long)]
    seed: Option<u64>,

    /// Output file (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(CliError::Usage(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    let config = ConfigFile::load(cli.config.as_deref())?;
    match cli.command {
        Command::Sweep(args) => cmd_sweep(args, &config),
        Command::Optimize(args) => cmd_optimize(args, &config),
        Command::Validate(args) => cmd_validate(args, &config),
        Command::SimulateOnoff(args) => cmd_simulate_onoff(args, &config),
    }
}

/// Writes `text` to the file named by `out`, or to stdout when absent.
fn write_output(out: Option<&PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn load_grid(args: &SweepArgs, config: &ConfigFile) -> Result<Vec<f64>, CliError> {
    let explicit = match &args.rho {
        Some(list) => Some(list.clone()),
        None => config.get_list::<f64>("rho")?,
    };
    let generated = args.rho_min.is_some() || args.rho_max.is_some() || args.rho_steps.is_some();
    match (explicit, generated) {
        (Some(_), true) => Err(CliError::Usage(
            "--rho conflicts with --rho-min/--rho-max/--rho-steps".into(),
        )),
        (Some(list), false) if !list.is_empty() => Ok(list),
        (Some(_), false) => Err(CliError::Usage("load grid is empty".into())),
        (None, true) => {
            let (lo, hi, steps) = match (args.rho_min, args.rho_max, args.rho_steps) {
                (Some(lo), Some(hi), Some(steps)) => (lo, hi, steps),
                _ => {
                    return Err(CliError::Usage(
                        "generated grids need all of --rho-min, --rho-max, --rho-steps".into(),
                    ))
                }
            };
            if steps == 0 || lo.is_nan() || hi.is_nan() || lo <= 0.0 || hi <= lo {
                return Err(CliError::Usage(format!(
                    "grid needs 0 < rho-min < rho-max and at least one step, got ({lo}, {hi}, {steps})"
                )));
            }
            if steps == 1 {
                return Ok(vec![lo]);
            }
            let points = (0..steps)
                .map(|i| {
                    let t = i as f64 / (steps - 1) as f64;
                    if args.log_spacing {
                        (lo.ln() + t * (hi.ln() - lo.ln())).exp()
                    } else {
                        lo + t * (hi - lo)
                    }
                })
                .collect();
            Ok(points)
        }
        (None, false) => Err(CliError::Usage(
            "no load grid: pass --rho or --rho-min/--rho-max/--rho-steps".into(),
        )),
    }
}

fn cmd_sweep(args: SweepArgs, config: &ConfigFile) -> Result<ExitCode, CliError> {
    let rho_grid = load_grid(&args, config)?;
    let pc_list = match args.pc.clone() {
        Some(list) => list,
        None => config.get_list::<f64>("pc")?.unwrap_or_else(|| vec![1.0]),
    };
    if pc_list.is_empty() {
        return Err(CliError::Usage("p_c list is empty".into()));
    }
    let mut metrics = if args.metrics.is_empty() {
        match config.get_list::<String>("metrics")? {
            Some(names) => names
                .iter()
                .map(|name| {
                    Metric::from_str(name, true)
                        .map_err(|e| CliError::Usage(format!("config metric {name:?}: {e}")))
                })
                .collect::<Result<Vec<Metric>, CliError>>()?,
            None => Vec::new(),
        }
    } else {
        args.metrics.clone()
    };
    if metrics.is_empty() {
        return Err(CliError::Usage("metric set is empty".into()));
    }
    metrics.sort();
    metrics.dedup();

    let mu = match args.mu {
        Some(v) => v,
        None => config.get::<f64>("mu")?.unwrap_or(1.0),
    };
    let truncation = match args.truncation {
        Some(v) => v,
        None => config.get::<usize>("truncation")?.unwrap_or(60),
    };
    let population = match args.population {
        Some(v) => v,
        None => config.get::<usize>("population")?.unwrap_or(20),
    };
    let arrivals = match args.arrivals {
        Some(v) => v,
        None => config.get::<u64>("arrivals")?.unwrap_or(100_000),
    };
    let seed = resolve_seed(args.seed, config)?;

    // Validate the whole grid up front so failures are usage errors, and
    // surface range warnings once per offending load.
    for &rho in &rho_grid {
        for &p_c in &pc_list {
            ChannelParams::from_load(rho, mu, p_c)?;
        }
        if let Some(warning) = ChannelParams::from_load(rho, mu, pc_list[0])?.range_warning() {
            eprintln!("warning: {warning}");
        }
    }
    if metrics
        .iter()
        .any(|m| matches!(m, Metric::Recursion | Metric::Truncated))
    {
        if let Some(warning) = truncation_warning(truncation) {
            eprintln!("warning: {warning}");
        }
    }

    let mut grid: Vec<(usize, f64, f64)> = Vec::with_capacity(rho_grid.len() * pc_list.len());
    for &rho in &rho_grid {
        for &p_c in &pc_list {
            grid.push((grid.len(), rho, p_c));
        }
    }

    let mut blocks: Vec<(usize, Result<Vec<String>, CliError>)> = grid
        .par_iter()
        .map(|&(index, rho, p_c)| {
            let rows = evaluate_point(
                rho,
                p_c,
                mu,
                truncation,
                population,
                arrivals,
                derive_seed(seed, index as u64),
                &metrics,
            );
            (index, rows)
        })
        .collect();
    blocks.sort_by_key(|(index, _)| *index);

    let mut csv = format!("# schema_version={SCHEMA_VERSION}\nrho,p_c,metric,value\n");
    for (_, block) in blocks {
        for row in block? {
            csv.push_str(&row);
            csv.push('\n');
        }
    }
    write_output(args.out.as_ref(), &csv)?;
    Ok(ExitCode::SUCCESS)
}

/// All metric rows for one grid point, in the caller's metric order.
#[allow(clippy::too_many_arguments)]
fn evaluate_point(
    rho: f64,
    p_c: f64,
    mu: f64,
    truncation: usize,
    population: usize,
    arrivals: u64,
    seed: u64,
    metrics: &[Metric],
) -> Result<Vec<String>, CliError> {
    let params = ChannelParams::from_load(rho, mu, p_c)?;
    let mut rows = Vec::with_capacity(metrics.len());
    for &metric in metrics {
        let value = match metric {
            Metric::Asymptotic => asymptotic_individual_age(rho)?,
            Metric::ClosedForm => system_age_closed_form(&params)?,
            Metric::Individual => individual_age(&params, population)?,
            Metric::LowerBound => lower_bound(&params)?,
            Metric::Recursion => system_age_recursion(&params, truncation)?.delta,
            Metric::Simulated => {
                let config = InfiniteUserSimConfig::new(params, Horizon::Arrivals(arrivals), seed)?;
                simulate_system_age(&config)?.mean_age
            }
            Metric::Slotted => slotted_age(rho)?,
            Metric::Truncated => system_age_truncated(&params, truncation)?,
        };
        rows.push(format!("{rho},{p_c},{},{value}", metric.label()));
    }
    Ok(rows)
}

#[derive(Serialize)]
struct OptimizeReport {
    schema_version: u32,
    objective: String,
    rho_star: f64,
    value_star: f64,
}

fn cmd_optimize(args: OptimizeArgs, config: &ConfigFile) -> Result<ExitCode, CliError> {
    let pc = match args.pc {
        Some(v) => v,
        None => config.get::<f64>("pc")?.unwrap_or(1.0),
    };
    let mu = match args.mu {
        Some(v) => v,
        None => config.get::<f64>("mu")?.unwrap_or(1.0),
    };
    let objective = match args.objective {
        Objective::System => LoadObjective::SystemAge { p_c: pc, mu },
        Objective::Asymptotic => LoadObjective::AsymptoticIndividual,
    };
    let (rho_star, value_star) = optimize_load(&objective, (args.rho_min, args.rho_max))?;
    let report = OptimizeReport {
        schema_version: SCHEMA_VERSION,
        objective: match args.objective {
            Objective::System => "system".into(),
            Objective::Asymptotic => "asymptotic".into(),
        },
        rho_star,
        value_star,
    };
    println!(
        "{}",
        serde_json::to_string_pretty(&report).expect("report serializes")
    );
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct ValidateReport {
    schema_version: u32,
    rho: f64,
    p_c: f64,
    mu: f64,
    arrivals: u64,
    seed: u64,
    simulated_age: f64,
    predicted_age: f64,
    absolute_error: f64,
    relative_error: f64,
    ci_halfwidth: f64,
    within_three_ci: bool,
    insufficient_samples: bool,
    verdict: String,
}

/// Below this many arrivals the batch-means interval is too noisy to act as
/// an acceptance check.
const MIN_VALIDATION_ARRIVALS: u64 = 10_000;

fn cmd_validate(args: ValidateArgs, config: &ConfigFile) -> Result<ExitCode, CliError> {
    let pc = match args.pc {
        Some(v) => v,
        None => config.get::<f64>("pc")?.unwrap_or(1.0),
    };
    let mu = match args.mu {
        Some(v) => v,
        None => config.get::<f64>("mu")?.unwrap_or(1.0),
    };
    let arrivals = match args.arrivals {
        Some(v) => v,
        None => config.get::<u64>("arrivals")?.unwrap_or(1_000_000),
    };
    let seed = resolve_seed(args.seed, config)?;

    let params = ChannelParams::from_load(args.rho, mu, pc)?;
    if let Some(warning) = params.range_warning() {
        eprintln!("warning: {warning}");
    }
    let predicted = system_age_closed_form(&params)?;
    let sim_config = InfiniteUserSimConfig::new(params, Horizon::Arrivals(arrivals), seed)?;
    let result = simulate_system_age(&sim_config)?;

    let insufficient = arrivals < MIN_VALIDATION_ARRIVALS;
    let absolute_error = result.mean_age - predicted;
    let within = absolute_error.abs() <= 3.0 * result.ci_halfwidth;
    let verdict = if insufficient {
        "insufficient samples"
    } else if within {
        "pass"
    } else {
        "fail"
    };
    let report = ValidateReport {
        schema_version: SCHEMA_VERSION,
        rho: args.rho,
        p_c: pc,
        mu,
        arrivals,
        seed,
        simulated_age: result.mean_age,
        predicted_age: predicted,
        absolute_error,
        relative_error: absolute_error / predicted,
        ci_halfwidth: result.ci_halfwidth,
        within_three_ci: within,
        insufficient_samples: insufficient,
        verdict: verdict.into(),
    };
    println!(
        "{}",
        serde_json::to_string_pretty(&report).expect("report serializes")
    );
    if insufficient {
        Ok(ExitCode::from(2))
    } else if within {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(1))
    }
}

fn cmd_simulate_onoff(args: OnoffArgs, config: &ConfigFile) -> Result<ExitCode, CliError> {
    let updates = match args.updates {
        Some(v) => v,
        None => config.get::<u64>("updates")?.unwrap_or(50_000),
    };
    let mu = match args.mu {
        Some(v) => v,
        None => config.get::<f64>("mu")?.unwrap_or(args.population as f64),
    };
    let seed = resolve_seed(args.seed, config)?;

    if args.population == 0 {
        return Err(CliError::Usage("population must be at least 2".into()));
    }
    let lambda0 = args.rho * mu / args.population as f64;
    let mut sim_config = OnOffSimConfig::new(args.population, lambda0, mu, seed)?;
    sim_config.updates_per_source = updates;
    let result = simulate_individual_age(&sim_config)?;

    let params = ChannelParams::from_load(args.rho, mu, 1.0)?;
    let predicted_individual = individual_age(&params, args.population)?;
    let predicted_asymptotic = asymptotic_individual_age(args.rho)?;

    let mut csv = format!("# schema_version={SCHEMA_VERSION}\nsource_id,time_avg_age\n");
    for (source, age) in result.per_source_ages.iter().enumerate() {
        csv.push_str(&format!("{source},{age}\n"));
    }
    csv.push_str(&format!("mean,{}\n", result.mean_age));
    csv.push_str(&format!("predicted_individual,{predicted_individual}\n"));
    csv.push_str(&format!("predicted_asymptotic,{predicted_asymptotic}\n"));
    write_output(args.out.as_ref(), &csv)?;
    Ok(ExitCode::SUCCESS)
}
