//! Command-line front end.
//!
//! Subcommands: `run` (single scenario from a config file), `sweep` (config
//! file plus an axis), `figure <name>` (preset experiments). CSV goes to
//! `--out` or stdout. Exit codes: 0 success, 1 usage/validation error, 2 I/O
//! error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use silm_core::solver::PrecoderKind;

use crate::config::{parse_config, resolve, Overrides};
use crate::csv::write_csv;
use crate::sweep::{figure_preset, run_sweep, Axis, SweepResult, SweepSpec};

#[derive(Parser)]
#[command(name = "silm", version, about = "Leakage-minimizing precoder design experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a single scenario described by a config file
    Run(RunArgs),
    /// Sweep one axis of a scenario described by a config file
    Sweep(SweepArgs),
    /// Run a named preset experiment (fig2..fig6)
    Figure(FigureArgs),
}

#[derive(Args)]
struct CommonOpts {
    /// Trials per axis value
    #[arg(long)]
    trials: Option<u64>,
    /// Master seed; trial t uses stream (seed, t)
    #[arg(long)]
    seed: Option<u64>,
    /// CSV output path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// silm or ilm; ilm forces the leakage weight to zero
    #[arg(long)]
    mode: Option<String>,
    /// Intra-cell precoder: mmse or zf
    #[arg(long)]
    precoder: Option<String>,
    /// Leakage weight w
    #[arg(long)]
    w: Option<f64>,
    /// Iteration cap for the alternating solve
    #[arg(long = "max-iters")]
    max_iters: Option<usize>,
    /// Relative objective-change tolerance
    #[arg(long)]
    tol: Option<f64>,
    /// Worker threads (all cores when omitted); never affects results
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file with `key = value` lines
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    common: CommonOpts,
}

#[derive(Args)]
struct SweepArgs {
    /// Scenario file with `key = value` lines
    #[arg(long)]
    config: PathBuf,
    /// Axis to sweep: rho_db, snr_db, or k
    #[arg(long)]
    axis: String,
    /// Comma-separated axis values
    #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
    values: Vec<f64>,
    /// Comma-separated leakage weight per axis value
    #[arg(long = "w-schedule", value_delimiter = ',', allow_hyphen_values = true)]
    w_schedule: Option<Vec<f64>>,
    #[command(flatten)]
    common: CommonOpts,
}

#[derive(Args)]
struct FigureArgs {
    /// Preset name: fig2, fig3, fig4, fig5, or fig6
    name: String,
    #[command(flatten)]
    common: CommonOpts,
}

enum CliError {
    Invalid(String),
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => 1,
            CliError::Io(_) => 2,
        }
    }
    fn message(&self) -> &str {
        match self {
            CliError::Invalid(m) | CliError::Io(m) => m,
        }
    }
}

fn load_file(path: &PathBuf) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))
}

fn overrides_from(common: &CommonOpts) -> Overrides {
    Overrides {
        mode: common.mode.clone(),
        precoder: common.precoder.clone(),
        w: common.w,
        max_iters: common.max_iters,
        tol: common.tol,
        trials: common.trials,
        seed: common.seed,
    }
}

fn spec_from_config(
    name: &str,
    path: &PathBuf,
    common: &CommonOpts,
    axis: Axis,
    values: Option<Vec<f64>>,
    w_schedule: Option<Vec<f64>>,
) -> Result<(SweepSpec, String), CliError> {
    let text = load_file(path)?;
    let file = parse_config(&text).map_err(CliError::Invalid)?;
    let resolved = resolve(&file, &overrides_from(common)).map_err(CliError::Invalid)?;
    let w_schedule = if resolved.mode == "ilm" { None } else { w_schedule };
    let spec = SweepSpec {
        name: name.to_string(),
        base: resolved.network.clone(),
        solver: resolved.solver.clone(),
        axis,
        values: values.unwrap_or_else(|| vec![resolved.snr_db]),
        trials: resolved.trials,
        master_seed: resolved.seed,
        w_schedule,
    };
    Ok((spec, resolved.mode))
}

fn apply_common_to_preset(spec: &mut SweepSpec, common: &CommonOpts) -> Result<String, CliError> {
    let mut mode = "silm".to_string();
    if let Some(m) = &common.mode {
        match m.as_str() {
            "silm" => {}
            "ilm" => {
                spec.base.leakage_weight = 0.0;
                spec.w_schedule = None;
                mode = "ilm".to_string();
            }
            other => return Err(CliError::Invalid(format!("unknown mode '{other}'"))),
        }
    }
    if let Some(w) = common.w {
        if mode != "ilm" {
            spec.base.leakage_weight = w;
            spec.w_schedule = None;
        }
    }
    if let Some(p) = &common.precoder {
        spec.solver.precoder_kind = match p.as_str() {
            "mmse" => PrecoderKind::Mmse,
            "zf" => PrecoderKind::Zf,
            other => return Err(CliError::Invalid(format!("unknown precoder '{other}'"))),
        };
    }
    if let Some(n) = common.trials {
        spec.trials = n;
    }
    if let Some(s) = common.seed {
        spec.master_seed = s;
    }
    if let Some(m) = common.max_iters {
        spec.solver.max_iters = m;
    }
    if let Some(t) = common.tol {
        spec.solver.rel_tol = t;
    }
    Ok(mode)
}

fn execute(spec: &SweepSpec, threads: Option<usize>) -> Result<SweepResult, CliError> {
    spec.validate().map_err(CliError::Invalid)?;
    let result = match threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Invalid(format!("cannot build thread pool: {e}")))?;
            pool.install(|| run_sweep(spec))
        }
        None => run_sweep(spec),
    };
    result.map_err(CliError::Invalid)
}

fn emit(result: &SweepResult, out_path: &Option<PathBuf>, stdout: &mut dyn Write) -> Result<(), CliError> {
    match out_path {
        Some(path) => {
            let mut file = fs::File::create(path)
                .map_err(|e| CliError::Io(format!("cannot create {}: {e}", path.display())))?;
            write_csv(result, &mut file)
                .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
        }
        None => {
            write_csv(result, stdout).map_err(|e| CliError::Io(format!("cannot write CSV: {e}")))?;
        }
    }
    Ok(())
}

fn dispatch(cli: Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    let (spec, mode, common) = match cli.command {
        Command::Run(args) => {
            let (spec, mode) =
                spec_from_config("run", &args.config, &args.common, Axis::SnrDb, None, None)?;
            (spec, mode, args.common)
        }
        Command::Sweep(args) => {
            let axis = Axis::parse(&args.axis).ok_or_else(|| {
                CliError::Invalid(format!(
                    "unknown axis '{}' (expected rho_db, snr_db, or k)",
                    args.axis
                ))
            })?;
            let (spec, mode) = spec_from_config(
                "sweep",
                &args.config,
                &args.common,
                axis,
                Some(args.values.clone()),
                args.w_schedule.clone(),
            )?;
            (spec, mode, args.common)
        }
        Command::Figure(args) => {
            let mut spec = figure_preset(&args.name).map_err(CliError::Invalid)?;
            let mode = apply_common_to_preset(&mut spec, &args.common)?;
            (spec, mode, args.common)
        }
    };

    let result = execute(&spec, common.threads)?;
    eprintln!(
        "{}: {} axis value(s) x {} trial(s), seed {}, mode {}, v{}",
        result.spec_name,
        result.rows.len(),
        spec.trials,
        result.master_seed,
        mode,
        result.metadata.version
    );
    emit(&result, &common.out, stdout)
}

/// Parse `args` (including the program name) and run. CSV destined for
/// stdout is written to `stdout`, diagnostics go to stderr.
pub fn cli_main_with_output<I, T>(args: I, stdout: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli, stdout) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}

/// Entry point used by the binary.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let mut stdout = std::io::stdout();
    cli_main_with_output(args, &mut stdout)
}
