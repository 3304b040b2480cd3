//! Command-line front end: schedule synthesis, verification, budget sweeps,
//! heatmap export, the swing demo generator and a seeded random-system
//! generator.
//!
//! Exit codes: 0 = success and all applicable bound checks pass,
//! 1 = usage or input error, 2 = a bound check failed (bug indicator).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use gramsched::sparsifier::{trace_to_jsonl, TraceRecord, WeightNormalization};
use gramsched::sweep::{SweepMode, SweepSpec};
use gramsched::verify::fmt_significant;
use gramsched::{
    CandidateVariant, LtiSystem, Schedule, ScheduleOptions, SwingParams, VerificationReport,
};

/// Environment variable selecting the sweep worker-thread count.
const THREADS_ENV: &str = "GRAMSCHED_THREADS";

#[derive(Parser)]
#[command(
    name = "gramsched",
    version,
    about = "Sparse time-varying sensor/actuator schedules with certified Gramian bounds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a schedule for a system and write it with its
    /// verification report
    Schedule(ScheduleArgs),
    /// Re-verify an existing schedule file against a system
    Verify(VerifyArgs),
    /// Sweep (d_s, d_a) grids and write table-style CSVs
    Sweep(SweepArgs),
    /// Export dense squared-scaling matrices from a schedule file
    Heatmap(HeatmapArgs),
    /// Discretize swing-equation parameters into a system file
    Swing(SwingArgs),
    /// Generate a seeded random system file (for tests and demos)
    RandomSystem(RandomSystemArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Joint,
    Separation,
    Sensor,
    Actuator,
}

#[derive(Clone, Copy, ValueEnum)]
enum Variant {
    /// Actuator candidates weighted by Q, sensor candidates whitened by Q
    Proof,
    /// Mirror construction around P
    Listing,
}

impl From<Variant> for CandidateVariant {
    fn from(v: Variant) -> Self {
        match v {
            Variant::Proof => CandidateVariant::Proof,
            Variant::Listing => CandidateVariant::Listing,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum WeightNorm {
    /// Symmetric e^{±eps} bounds (default)
    Proof,
    /// One-sided (1∓sqrt(n/kappa))^2 bounds, for cross-checking
    ReturnLine,
}

impl From<WeightNorm> for WeightNormalization {
    fn from(w: WeightNorm) -> Self {
        match w {
            WeightNorm::Proof => WeightNormalization::Proof,
            WeightNorm::ReturnLine => WeightNormalization::ReturnLine,
        }
    }
}

#[derive(Args)]
struct ScheduleArgs {
    /// System JSON file
    #[arg(long)]
    system: PathBuf,
    /// Horizon (must be at least the state dimension)
    #[arg(long)]
    t: usize,
    /// Average active-sensor budget d_s
    #[arg(long)]
    ds: Option<f64>,
    /// Average active-actuator budget d_a
    #[arg(long)]
    da: Option<f64>,
    #[arg(long, value_enum, default_value = "joint")]
    mode: Mode,
    /// Where the schedule JSON goes
    #[arg(long, default_value = "schedule.json")]
    out_schedule: PathBuf,
    /// Where the verification report JSON goes
    #[arg(long, default_value = "report.json")]
    out_report: PathBuf,
    /// Also write a fair-comparison rescaled copy (sum of squared scalings
    /// = n*d per side) next to the schedule, with suffix .normalized.json
    #[arg(long)]
    normalize: bool,
    #[arg(long, value_enum, default_value = "proof")]
    variant: Variant,
    #[arg(long, value_enum, default_value = "proof")]
    weight_norm: WeightNorm,
    /// Write the sparsifier iteration trace (line-delimited JSON)
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    system: PathBuf,
    #[arg(long)]
    schedule: PathBuf,
    /// Requested sensor budget; enables the sensor-side bound check
    #[arg(long)]
    ds: Option<f64>,
    /// Requested actuator budget; enables the actuator-side bound check
    #[arg(long)]
    da: Option<f64>,
    /// Report destination; stdout when omitted
    #[arg(long)]
    out_report: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    system: PathBuf,
    #[arg(long)]
    t: usize,
    /// Comma-separated d_s values
    #[arg(long, value_delimiter = ',')]
    ds: Vec<f64>,
    /// Comma-separated d_a values
    #[arg(long, value_delimiter = ',')]
    da: Vec<f64>,
    #[arg(long, value_enum, default_value = "joint")]
    mode: Mode,
    #[arg(long, default_value = "sweep-out")]
    out_dir: PathBuf,
    /// Display post-normalization values in the grids (raw bounds still
    /// gate the exit code)
    #[arg(long)]
    normalize: bool,
    #[arg(long, value_enum, default_value = "proof")]
    variant: Variant,
}

#[derive(Args)]
struct HeatmapArgs {
    #[arg(long)]
    schedule: PathBuf,
    /// Output prefix; writes `<prefix>_sensors.csv` and `<prefix>_actuators.csv`
    #[arg(long, default_value = "heatmap")]
    out: PathBuf,
}

#[derive(Args)]
struct SwingArgs {
    /// Swing parameter JSON file (inertia, damping, coupling, dt)
    #[arg(long)]
    params: PathBuf,
    #[arg(long, default_value = "system.json")]
    out: PathBuf,
}

#[derive(Args)]
struct RandomSystemArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    p: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = gramsched::system::DEFAULT_SPECTRAL_RADIUS)]
    spectral_radius: f64,
    #[arg(long, default_value = "system.json")]
    out: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap would exit with its own code 2; the contract reserves 2
            // for bound violations, so usage errors map to 1.
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Schedule(args) => cmd_schedule(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Heatmap(args) => cmd_heatmap(args),
        Command::Swing(args) => cmd_swing(args),
        Command::RandomSystem(args) => cmd_random_system(args),
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .with_context(|| format!("creating {}", parent.display()))?;
        }
    }
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn load_system(path: &Path) -> Result<LtiSystem> {
    LtiSystem::from_json_str(&read(path)?)
        .with_context(|| format!("parsing system file {}", path.display()))
}

fn require_budget(value: Option<f64>, flag: &str, mode: &str) -> Result<f64> {
    value.ok_or_else(|| anyhow::anyhow!("--{flag} is required for mode {mode}"))
}

fn build_schedule(
    sys: &LtiSystem,
    args: &ScheduleArgs,
) -> Result<(Schedule, Option<f64>, Option<f64>, Vec<TraceRecord>)> {
    let options = ScheduleOptions {
        variant: args.variant.into(),
        weight_normalization: args.weight_norm.into(),
    };
    let mut trace_a = Vec::new();
    let mut trace_s = Vec::new();
    let want_trace = args.trace.is_some();
    let (schedule, d_s, d_a) = match args.mode {
        Mode::Joint => {
            let d_s = require_budget(args.ds, "ds", "joint")?;
            let d_a = require_budget(args.da, "da", "joint")?;
            let schedule = gramsched::schedule::joint_schedule_with(
                sys,
                args.t,
                d_s,
                d_a,
                options,
                want_trace.then_some(&mut trace_a),
                want_trace.then_some(&mut trace_s),
            )?;
            (schedule, Some(d_s), Some(d_a))
        }
        Mode::Separation => {
            let d_s = require_budget(args.ds, "ds", "separation")?;
            let d_a = require_budget(args.da, "da", "separation")?;
            let schedule = gramsched::schedule::separation_schedule_with(
                sys,
                args.t,
                d_s,
                d_a,
                options.weight_normalization,
            )?;
            (schedule, Some(d_s), Some(d_a))
        }
        Mode::Sensor => {
            let d_s = require_budget(args.ds, "ds", "sensor")?;
            let schedule = gramsched::schedule::sensor_schedule_with(
                sys,
                args.t,
                d_s,
                options.weight_normalization,
                want_trace.then_some(&mut trace_s),
            )?;
            (schedule, Some(d_s), None)
        }
        Mode::Actuator => {
            let d_a = require_budget(args.da, "da", "actuator")?;
            let schedule = gramsched::schedule::actuator_schedule_with(
                sys,
                args.t,
                d_a,
                options.weight_normalization,
                want_trace.then_some(&mut trace_a),
            )?;
            (schedule, None, Some(d_a))
        }
    };
    let mut trace = trace_a;
    trace.append(&mut trace_s);
    Ok((schedule, d_s, d_a, trace))
}

fn cmd_schedule(args: ScheduleArgs) -> Result<u8> {
    let sys = load_system(&args.system)?;
    let (schedule, d_s, d_a, trace) = build_schedule(&sys, &args)?;
    let report = gramsched::verify_schedule_with(&sys, &schedule, d_s, d_a, &[])?;

    write(&args.out_schedule, &schedule.to_json_string()?)?;
    write(&args.out_report, &report.to_json_string()?)?;
    if let Some(path) = &args.trace {
        write(path, &trace_to_jsonl(&trace))?;
    }
    if args.normalize {
        let rescaled = gramsched::normalize_schedule(&schedule, d_s, d_a, sys.n())?;
        let path = args.out_schedule.with_extension("normalized.json");
        write(&path, &rescaled.to_json_string()?)?;
    }

    println!(
        "{} schedule at t = {}: eps_joint = {}, theory = {}, active pairs = {}/{} (sensors/actuators)",
        provenance_label(&report),
        report.t,
        fmt_significant(report.epsilon_joint),
        report
            .epsilon_theory_joint
            .map_or_else(|| "-".into(), fmt_significant),
        report.active_sensor_pairs,
        report.active_actuator_pairs,
    );
    Ok(if report.pass { 0 } else { 2 })
}

fn provenance_label(report: &VerificationReport) -> &'static str {
    gramsched::verify::provenance_str(report.provenance)
}

fn cmd_verify(args: VerifyArgs) -> Result<u8> {
    let sys = load_system(&args.system)?;
    let schedule = Schedule::from_json_str(&read(&args.schedule)?)
        .with_context(|| format!("parsing schedule file {}", args.schedule.display()))?;
    let report = gramsched::verify_schedule_with(&sys, &schedule, args.ds, args.da, &[])?;
    let json = report.to_json_string()?;
    match &args.out_report {
        Some(path) => write(path, &json)?,
        None => println!("{json}"),
    }
    Ok(if report.pass { 0 } else { 2 })
}

fn cmd_sweep(args: SweepArgs) -> Result<u8> {
    if args.ds.is_empty() || args.da.is_empty() {
        bail!("--ds and --da need at least one value each");
    }
    let sys = load_system(&args.system)?;
    let threads = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .unwrap_or(1);
    let spec = SweepSpec {
        t: args.t,
        d_s_values: args.ds.clone(),
        d_a_values: args.da.clone(),
        mode: match args.mode {
            Mode::Joint => SweepMode::Joint,
            Mode::Separation => SweepMode::Separation,
            Mode::Sensor => SweepMode::Sensor,
            Mode::Actuator => SweepMode::Actuator,
        },
        normalize: args.normalize,
        variant: args.variant.into(),
        threads,
    };
    let outcome = gramsched::run_sweep(&sys, &spec)?;
    write(&args.out_dir.join("epsilon.csv"), &outcome.epsilon_csv())?;
    write(&args.out_dir.join("hankel.csv"), &outcome.hankel_csv())?;
    write(&args.out_dir.join("log_error.csv"), &outcome.log_error_csv())?;
    write(&args.out_dir.join("reports.csv"), &outcome.reports_csv())?;
    let cells = outcome.cells.iter().map(Vec::len).sum::<usize>()
        + outcome.sensor_margin.len()
        + outcome.actuator_margin.len()
        + 1;
    let skips = outcome
        .cells
        .iter()
        .flatten()
        .chain(&outcome.sensor_margin)
        .chain(&outcome.actuator_margin)
        .filter(|c| c.is_skip())
        .count();
    println!(
        "sweep complete: {cells} cells ({skips} skipped), grids in {}",
        args.out_dir.display()
    );
    Ok(if outcome.all_bounds_hold() { 0 } else { 2 })
}

fn cmd_heatmap(args: HeatmapArgs) -> Result<u8> {
    let schedule = Schedule::from_json_str(&read(&args.schedule)?)
        .with_context(|| format!("parsing schedule file {}", args.schedule.display()))?;
    let render = |channels: usize, scale: &dyn Fn(usize, usize) -> f64| -> String {
        let mut out = String::new();
        for i in 0..channels {
            let row: Vec<String> = (0..schedule.horizon())
                .map(|k| {
                    let s = scale(k, i);
                    fmt_significant(s * s)
                })
                .collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    };
    let sensors = render(schedule.outputs(), &|k, i| schedule.sensor_scale(k, i));
    let actuators = render(schedule.inputs(), &|k, i| schedule.actuator_scale(k, i));
    let stem = args.out.as_os_str().to_string_lossy();
    write(Path::new(&format!("{stem}_sensors.csv")), &sensors)?;
    write(Path::new(&format!("{stem}_actuators.csv")), &actuators)?;
    Ok(0)
}

fn cmd_swing(args: SwingArgs) -> Result<u8> {
    let params = SwingParams::from_json_str(&read(&args.params)?)
        .with_context(|| format!("parsing swing parameters {}", args.params.display()))?;
    let sys = gramsched::swing_system(&params)?;
    write(&args.out, &sys.to_json_string()?)?;
    println!(
        "swing system: {} generators -> n = {}, m = {}, p = {}",
        params.generators(),
        sys.n(),
        sys.m(),
        sys.p()
    );
    Ok(0)
}

fn cmd_random_system(args: RandomSystemArgs) -> Result<u8> {
    let sys = gramsched::random_system(args.n, args.m, args.p, args.seed, args.spectral_radius)?;
    write(&args.out, &sys.to_json_string()?)?;
    Ok(0)
}
