//! Command-line interface: argument parsing, dispatch, output, exit codes.
//!
//! Exit codes: 0 success, 1 usage error (bad flags, malformed config,
//! impossible grids), 2 runtime failure.

use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use cicq_core::analytic;
use cicq_core::engine::{self, RunConfig};
use cicq_core::switch::{BurstConfig, SchedulerKind, SwitchConfig};
use cicq_core::traffic::{build_unstable_scenario, ScenarioVariant};

use crate::config::KeyValueConfig;
use crate::experiments::{
    self, ExperimentKind, ExperimentSpec, RegionSweepParams, SearchParams, TablesParams,
};

const FULL_SCALE_SLOTS: u64 = 100_000_000;

#[derive(Debug, Parser)]
#[command(
    name = "cicq",
    version,
    about = "Cell-level CICQ/iSLIP switch simulator and burst-stability model",
    subcommand_required = true,
    arg_required_else_help = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one switch configuration and print a plain-text report.
    Simulate(SimulateArgs),
    /// Sweep the instability region and emit CSV.
    Region(RegionArgs),
    /// Threshold/burst delay experiments and emit CSV.
    Experiment(ExperimentArgs),
    /// Search the smallest stabilizing burst for one load point.
    MinBurst(MinBurstArgs),
    /// Model vs simulation minimum-burst table as CSV.
    Tables(TablesArgs),
    /// Evaluate the analytic minimum-burst prediction.
    Predict(PredictArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SchedulerArg {
    #[value(name = "rr_rr", alias = "rr-rr")]
    RrRr,
    #[value(name = "ocf_rr", alias = "ocf-rr")]
    OcfRr,
    #[value(name = "lqf_rr", alias = "lqf-rr")]
    LqfRr,
    #[value(name = "islip")]
    Islip,
}

impl From<SchedulerArg> for SchedulerKind {
    fn from(arg: SchedulerArg) -> Self {
        match arg {
            SchedulerArg::RrRr => SchedulerKind::RrRrCicq,
            SchedulerArg::OcfRr => SchedulerKind::OcfRr,
            SchedulerArg::LqfRr => SchedulerKind::LqfRr,
            SchedulerArg::Islip => SchedulerKind::Islip,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum VariantArg {
    Region,
    Saturated,
}

impl From<VariantArg> for ScenarioVariant {
    fn from(arg: VariantArg) -> Self {
        match arg {
            VariantArg::Region => ScenarioVariant::Region,
            VariantArg::Saturated => ScenarioVariant::SaturatedPort2,
        }
    }
}

#[derive(Debug, Args)]
struct OutArg {
    /// Write output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// key=value file with the same keys as the flags below; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Port-1 offered load of the asymmetric scenario.
    #[arg(long)]
    lambda1: Option<f64>,
    /// Fraction of port-1 load going to output 1.
    #[arg(long)]
    f: Option<f64>,
    #[arg(long, value_enum)]
    variant: Option<VariantArg>,
    #[arg(long, value_enum)]
    scheduler: Option<SchedulerArg>,
    #[arg(long)]
    n_ports: Option<usize>,
    #[arg(long)]
    threshold: Option<u64>,
    #[arg(long)]
    burst: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_slots: Option<u64>,
    #[arg(long)]
    queue_cap: Option<usize>,
    #[arg(long)]
    sample_interval: Option<u64>,
    #[arg(long)]
    warmup: Option<u64>,
    /// Run the full reference horizon (1e8 slots).
    #[arg(long, alias = "paper-scale")]
    full_scale: bool,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Debug, Args)]
struct RegionArgs {
    #[arg(long, value_enum, default_value = "rr_rr")]
    scheduler: SchedulerArg,
    /// Named grid; only `default` is defined.
    #[arg(long, default_value = "default")]
    grid: String,
    /// Comma-separated lambda11 values overriding the grid.
    #[arg(long, value_delimiter = ',')]
    lambda11: Vec<f64>,
    /// Comma-separated port-1 loads overriding the grid.
    #[arg(long, value_delimiter = ',')]
    loads: Vec<f64>,
    #[arg(long)]
    threshold: Option<u64>,
    #[arg(long)]
    burst: Option<u64>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    max_slots: Option<u64>,
    #[arg(long, alias = "paper-scale")]
    full_scale: bool,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    /// Experiment layout: 1 (vary lambda11+burst), 2 (vary burst+lambda11),
    /// 3 (vary threshold+burst).
    #[arg(long)]
    kind: u8,
    #[arg(long)]
    lambda1: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    lambda11: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    thresholds: Vec<u64>,
    #[arg(long, value_delimiter = ',')]
    bursts: Vec<u64>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    max_slots: Option<u64>,
    #[arg(long, alias = "paper-scale")]
    full_scale: bool,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Debug, Args)]
struct MinBurstArgs {
    #[arg(long)]
    lambda1: f64,
    #[arg(long)]
    f: f64,
    #[arg(long, default_value_t = 32)]
    threshold: u64,
    #[arg(long, default_value_t = 1)]
    b_lo: u32,
    #[arg(long, default_value_t = 64)]
    b_hi: u32,
    #[arg(long)]
    horizon: Option<u64>,
    #[arg(long, default_value_t = engine::DEFAULT_DRIFT_EPSILON)]
    drift_epsilon: f64,
    /// Comma-separated replication seeds.
    #[arg(long, value_delimiter = ',', default_values_t = [1u64, 2, 3])]
    seeds: Vec<u64>,
    #[arg(long, value_enum, default_value = "saturated")]
    variant: VariantArg,
    #[arg(long, alias = "paper-scale")]
    full_scale: bool,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Debug, Args)]
struct TablesArgs {
    #[arg(long)]
    lambda1: f64,
    #[arg(long, default_value_t = 32)]
    threshold: u64,
    #[arg(long, default_value_t = 64)]
    b_hi: u32,
    #[arg(long)]
    horizon: Option<u64>,
    #[arg(long, value_delimiter = ',', default_values_t = [1u64, 2, 3])]
    seeds: Vec<u64>,
    #[arg(long, value_enum, default_value = "saturated")]
    variant: VariantArg,
    /// Skip the searches and emit only the analytic columns.
    #[arg(long)]
    no_sim: bool,
    #[arg(long, alias = "paper-scale")]
    full_scale: bool,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(long)]
    lambda1: f64,
    #[arg(long)]
    f: f64,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Runtime(String),
}

impl From<experiments::ExperimentError> for CliError {
    fn from(e: experiments::ExperimentError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<crate::config::ConfigFileError> for CliError {
    fn from(e: crate::config::ConfigFileError) -> Self {
        CliError::Usage(e.to_string())
    }
}

/// Parse `argv`, dispatch, and return the process exit status.
pub fn cli_main<I>(argv: I) -> i32
where
    I: IntoIterator,
    I::Item: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };

    let (output, out_path) = match dispatch(cli.command) {
        Ok(pair) => pair,
        Err(CliError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            return 1;
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            return 2;
        }
    };

    match out_path {
        Some(path) => {
            if let Err(e) = std::fs::write(&path, output) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return 2;
            }
        }
        None => print!("{output}"),
    }
    0
}

fn dispatch(command: Command) -> Result<(String, Option<PathBuf>), CliError> {
    match command {
        Command::Simulate(args) => simulate(args),
        Command::Region(args) => region(args),
        Command::Experiment(args) => experiment(args),
        Command::MinBurst(args) => min_burst(args),
        Command::Tables(args) => tables(args),
        Command::Predict(args) => predict(args),
    }
}

fn simulate(args: SimulateArgs) -> Result<(String, Option<PathBuf>), CliError> {
    let file = match &args.config {
        Some(path) => KeyValueConfig::load(path)?,
        None => KeyValueConfig::default(),
    };

    let lambda1 = args.lambda1.or(file.get("lambda1", "number")?);
    let f = args.f.or(file.get("f", "number")?);
    let (Some(lambda1), Some(f)) = (lambda1, f) else {
        return Err(CliError::Usage(
            "simulate needs a traffic scenario: --lambda1 and --f (flags or config file)".into(),
        ));
    };

    let scheduler = match args.scheduler {
        Some(s) => SchedulerKind::from(s),
        None => match file.get_str("scheduler") {
            Some(s) => s.parse().map_err(|e: cicq_core::switch::ConfigError| {
                CliError::Usage(e.to_string())
            })?,
            None => SchedulerKind::RrRrCicq,
        },
    };
    let variant = match args.variant {
        Some(v) => ScenarioVariant::from(v),
        None => match file.get_str("variant") {
            Some("region") => ScenarioVariant::Region,
            Some("saturated") => ScenarioVariant::SaturatedPort2,
            Some(other) => {
                return Err(CliError::Usage(format!(
                    "unknown variant `{other}` (expected region or saturated)"
                )))
            }
            None => ScenarioVariant::Region,
        },
    };

    let n_ports = args.n_ports.or(file.get("n_ports", "integer")?).unwrap_or(2);
    let threshold = args.threshold.or(file.get("threshold", "integer")?);
    let burst = args.burst.or(file.get("burst", "integer")?);

    let mut switch = SwitchConfig::new(n_ports).with_scheduler(scheduler);
    if let Some(b) = burst {
        switch.burst = Some(BurstConfig::new(threshold.unwrap_or(32), b));
    }

    let traffic = build_unstable_scenario(n_ports, lambda1, f, variant)
        .map_err(|e| CliError::Usage(e.to_string()))?;

    let seed = args.seed.or(file.get("seed", "integer")?).unwrap_or(1);
    let mut run = RunConfig::new(switch, traffic, seed);
    if args.full_scale {
        run.max_slots = FULL_SCALE_SLOTS;
    }
    if let Some(slots) = args.max_slots.or(file.get("max_slots", "integer")?) {
        run.max_slots = slots;
    }
    if let Some(cap) = args.queue_cap.or(file.get("queue_cap", "integer")?) {
        run.queue_cap = cap;
    }
    if let Some(interval) = args.sample_interval.or(file.get("sample_interval", "integer")?) {
        run.sample_interval = interval;
    }
    if let Some(warmup) = args.warmup.or(file.get("warmup", "integer")?) {
        run.warmup_slots = warmup;
    }

    let report = experiments::simulate_report(&run)?;
    Ok((report, args.out.out))
}

fn region(args: RegionArgs) -> Result<(String, Option<PathBuf>), CliError> {
    if args.grid != "default" {
        return Err(CliError::Usage(format!(
            "unknown grid `{}` (only `default` is defined; use --lambda11/--loads to customize)",
            args.grid
        )));
    }
    let mut params = RegionSweepParams::new(args.scheduler.into());
    if !args.lambda11.is_empty() {
        params.lambda11_grid = args.lambda11;
    }
    if !args.loads.is_empty() {
        params.load_grid = args.loads;
    }
    if let Some(b) = args.burst {
        params.burst = Some(BurstConfig::new(args.threshold.unwrap_or(32), b));
    }
    params.seed = args.seed;
    if args.full_scale {
        params.horizon = FULL_SCALE_SLOTS;
    }
    if let Some(slots) = args.max_slots {
        params.horizon = slots;
    }
    let rows = run_region_checked(&params)?;
    Ok((experiments::region_csv(&rows), args.out.out))
}

fn run_region_checked(
    params: &RegionSweepParams,
) -> Result<Vec<experiments::RegionRow>, CliError> {
    match experiments::run_region_sweep(params) {
        Ok(rows) => Ok(rows),
        Err(experiments::ExperimentError::EmptyGrid) => {
            Err(CliError::Usage("region grid has no feasible points".into()))
        }
        Err(e) => Err(e.into()),
    }
}

fn experiment(args: ExperimentArgs) -> Result<(String, Option<PathBuf>), CliError> {
    let kind = match args.kind {
        1 => ExperimentKind::VaryLoadAndBurst,
        2 => ExperimentKind::VaryBurstAndLoad,
        3 => ExperimentKind::VaryThresholdAndBurst,
        other => {
            return Err(CliError::Usage(format!(
                "unknown experiment kind {other} (expected 1, 2, or 3)"
            )))
        }
    };
    let mut spec = ExperimentSpec::new(kind);
    if let Some(l1) = args.lambda1 {
        spec.lambda1 = l1;
    }
    if !args.lambda11.is_empty() {
        spec.lambda11_grid = args.lambda11;
    }
    if !args.thresholds.is_empty() {
        spec.threshold_grid = args.thresholds;
    }
    if !args.bursts.is_empty() {
        spec.burst_grid = args.bursts;
    }
    spec.seed = args.seed;
    if args.full_scale {
        spec.horizon = FULL_SCALE_SLOTS;
    }
    if let Some(slots) = args.max_slots {
        spec.horizon = slots;
    }
    let rows = experiments::run_threshold_burst_experiments(&spec)?;
    Ok((experiments::experiment_csv(&rows), args.out.out))
}

fn search_params_from(
    threshold: u64,
    b_lo: u32,
    b_hi: u32,
    horizon: Option<u64>,
    drift_epsilon: f64,
    seeds: Vec<u64>,
    variant: VariantArg,
    full_scale: bool,
) -> Result<SearchParams, CliError> {
    if b_lo > b_hi {
        return Err(CliError::Usage(format!("empty burst bracket [{b_lo}, {b_hi}]")));
    }
    if seeds.is_empty() {
        return Err(CliError::Usage("at least one seed is required".into()));
    }
    let mut params = SearchParams {
        b_lo,
        b_hi,
        drift_epsilon,
        threshold,
        seeds,
        variant: variant.into(),
        ..SearchParams::default()
    };
    if full_scale {
        params.horizon = FULL_SCALE_SLOTS;
    }
    if let Some(slots) = horizon {
        params.horizon = slots;
    }
    Ok(params)
}

fn min_burst(args: MinBurstArgs) -> Result<(String, Option<PathBuf>), CliError> {
    let params = search_params_from(
        args.threshold,
        args.b_lo,
        args.b_hi,
        args.horizon,
        args.drift_epsilon,
        args.seeds,
        args.variant,
        args.full_scale,
    )?;
    let b = experiments::search_min_burst(args.lambda1, args.f, &params)?;
    let out = format!(
        "lambda1={}\nf={}\nthreshold={}\nb_sim={}\n",
        args.lambda1, args.f, params.threshold, b
    );
    Ok((out, args.out.out))
}

fn tables(args: TablesArgs) -> Result<(String, Option<PathBuf>), CliError> {
    let off_reference = (args.lambda1 - 0.98).abs().min((args.lambda1 - 0.99).abs());
    if off_reference > 1e-12 {
        eprintln!(
            "note: lambda1={} is outside the reference set {{0.98, 0.99}}; rows are extrapolation",
            args.lambda1
        );
    }
    let mut params = TablesParams::new(args.lambda1);
    params.search = search_params_from(
        args.threshold,
        1,
        args.b_hi,
        args.horizon,
        engine::DEFAULT_DRIFT_EPSILON,
        args.seeds,
        args.variant,
        args.full_scale,
    )?;
    params.simulate = !args.no_sim;
    let rows = experiments::reproduce_tables(&params)?;
    Ok((experiments::tables_csv(&rows), args.out.out))
}

fn predict(args: PredictArgs) -> Result<(String, Option<PathBuf>), CliError> {
    let p = analytic::predict_min_burst(args.f, args.lambda1)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let out = format!(
        "b1={:.2} b2={:.2} b_hat={:.2} b_min={}\nfull: b1={} b2={} b_hat={} cs2={}\n",
        p.b1, p.b2, p.b_hat, p.b_min, p.b1, p.b2, p.b_hat, p.cs2
    );
    Ok((out, args.out.out))
}
