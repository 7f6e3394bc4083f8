//! `chanprobe`: replay selective channel-load measurement against a full scan.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 configuration error, 3 malformed
//! input file.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chanprobe_core::experiment::{run_selective, sweep, RunRow};
use chanprobe_core::report::{per_round_csv, ConfigEcho, ResultsFile};
use chanprobe_core::trace::{ingest_trace, write_trace};
use chanprobe_core::{
    generate_matrix, Error, GprInput, KernelParams, LoadMatrix, MeasurementTiming, SelectionPolicy,
    SelectiveConfig, TrafficModel,
};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "chanprobe",
    version,
    about = "GPR-guided selective channel-load measurement simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one selective configuration and the full-scan baseline.
    Run(RunArgs),
    /// Run every (K, window, policy) combination.
    Sweep(SweepArgs),
    /// Generate a trace CSV from a traffic config.
    GenTrace(GenTraceArgs),
}

#[derive(Args)]
struct Source {
    /// Number of channels M.
    #[arg(long)]
    channels: Option<u16>,
    /// Rounds to simulate (defaults to 50, or the trace length).
    #[arg(long)]
    rounds: Option<usize>,
    /// Measurement duration T per channel, in milliseconds.
    #[arg(long, default_value_t = 100)]
    duration_ms: u64,
    /// CCA mini-slot length in microseconds.
    #[arg(long, default_value_t = 100)]
    minislot_us: u64,
    /// Overrides the traffic config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Replay a recorded trace CSV instead of simulating.
    #[arg(long, conflicts_with = "traffic")]
    trace: Option<PathBuf>,
    /// Traffic regime config JSON (defaults to the bundled reference config).
    #[arg(long)]
    traffic: Option<PathBuf>,
}

#[derive(Args)]
struct Estimator {
    #[arg(long, default_value_t = chanprobe_core::gpr::DEFAULT_LENGTHSCALE)]
    lengthscale: f64,
    #[arg(long, default_value_t = chanprobe_core::gpr::DEFAULT_JITTER)]
    jitter: f64,
    /// Always switch to the lowest-numbered minimum, even if the current channel ties it.
    #[arg(long)]
    no_stay_on_tie: bool,
    /// Include bootstrap rounds in load, error and switch averages.
    #[arg(long)]
    include_bootstrap: bool,
    /// Feed raw busy fractions to the GP instead of moving averages.
    #[arg(long)]
    raw_gpr_input: bool,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    estimator: Estimator,
    /// Channels measured per round.
    #[arg(long, default_value_t = 7)]
    k: usize,
    /// History and smoothing window length w.
    #[arg(long, default_value_t = 2)]
    window: usize,
    /// weight | variance | benchmark
    #[arg(long, default_value = "weight")]
    policy: String,
    #[arg(long)]
    out: PathBuf,
    /// Optional per-round CSV.
    #[arg(long)]
    per_round: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    estimator: Estimator,
    /// K values: `2..10`, `7` or `2,4,8`.
    #[arg(long, default_value = "2..10")]
    k: String,
    /// Window lengths, same syntax as --k.
    #[arg(long, default_value = "2..4")]
    window: String,
    /// Comma-separated policies, or `all`.
    #[arg(long, default_value = "all")]
    policy: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GenTraceArgs {
    #[arg(long)]
    traffic: Option<PathBuf>,
    #[arg(long)]
    channels: Option<u16>,
    #[arg(long, default_value_t = 50)]
    rounds: usize,
    #[arg(long, default_value_t = 100)]
    duration_ms: u64,
    #[arg(long, default_value_t = 100)]
    minislot_us: u64,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::GenTrace(args) => cmd_gen_trace(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse { .. } | Error::Incomplete { .. } => 3,
        Error::Io { .. } => 1,
        _ => 2,
    }
}

struct Loaded {
    matrix: LoadMatrix,
    timing: MeasurementTiming,
    source: String,
    seed: Option<u64>,
}

fn load_traffic(
    path: Option<&Path>,
    seed: Option<u64>,
    channels: Option<u16>,
) -> Result<(TrafficModel, String), Error> {
    let (mut model, source) = match path {
        Some(p) => (TrafficModel::load(p)?, format!("traffic:{}", p.display())),
        None => (TrafficModel::reference(), "reference".to_owned()),
    };
    if let Some(s) = seed {
        model.seed = s;
    }
    if let Some(m) = channels {
        if m != model.channels {
            return Err(Error::Config(format!(
                "--channels {m} does not match the traffic config's {} channels",
                model.channels
            )));
        }
    }
    Ok((model, source))
}

fn load_source(src: &Source) -> Result<Loaded, Error> {
    let timing = MeasurementTiming::new(src.duration_ms, src.minislot_us)?;
    if let Some(path) = &src.trace {
        let matrix = ingest_trace(path)?;
        if let Some(m) = src.channels {
            if usize::from(m) != matrix.channels() {
                return Err(Error::Config(format!(
                    "--channels {m} does not match the trace's {} channels",
                    matrix.channels()
                )));
            }
        }
        if let Some(r) = src.rounds {
            if r != matrix.rounds() {
                return Err(Error::Config(format!(
                    "--rounds {r} does not match the trace's {} rounds",
                    matrix.rounds()
                )));
            }
        }
        return Ok(Loaded {
            matrix,
            timing,
            source: format!("trace:{}", path.display()),
            seed: None,
        });
    }
    let (model, source) = load_traffic(src.traffic.as_deref(), src.seed, src.channels)?;
    let matrix = generate_matrix(&model, src.rounds.unwrap_or(50), &timing)?;
    Ok(Loaded {
        matrix,
        timing,
        source,
        seed: Some(model.seed),
    })
}

fn base_config(est: &Estimator) -> Result<SelectiveConfig, Error> {
    let mut c = SelectiveConfig::new(1, 1, SelectionPolicy::WeightProduct);
    c.kernel = KernelParams::new(est.lengthscale, est.jitter)?;
    c.stay_on_tie = !est.no_stay_on_tie;
    c.include_bootstrap = est.include_bootstrap;
    c.gpr_input = if est.raw_gpr_input {
        GprInput::Raw
    } else {
        GprInput::Smoothed
    };
    Ok(c)
}

fn echo(loaded: &Loaded, c: &SelectiveConfig) -> ConfigEcho {
    ConfigEcho::new(
        loaded.matrix.channels(),
        loaded.matrix.rounds(),
        &loaded.timing,
        loaded.source.clone(),
        loaded.seed,
        &c.kernel,
        c.stay_on_tie,
        c.include_bootstrap,
        c.gpr_input,
    )
}

fn write_file(path: &Path, contents: &str) -> Result<(), Error> {
    std::fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}

fn cmd_run(args: RunArgs) -> Result<(), Error> {
    let loaded = load_source(&args.source)?;
    let mut config = base_config(&args.estimator)?;
    config.k = args.k;
    config.window = args.window;
    config.policy = args.policy.parse()?;

    let table = sweep(&loaded.matrix, &loaded.timing, &[], &[], &[], &config)?;
    let (records, summary) = run_selective(&loaded.matrix, &loaded.timing, &config)?;
    let row = RunRow::from_run(&loaded.matrix, &config, &records, &summary);
    let results = ResultsFile {
        config: echo(&loaded, &config),
        exhaustive: table.exhaustive,
        runs: vec![row],
    };
    write_file(&args.out, &results.to_json())?;
    if let Some(path) = &args.per_round {
        write_file(path, &per_round_csv(&records))?;
    }
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<(), Error> {
    let loaded = load_source(&args.source)?;
    let config = base_config(&args.estimator)?;
    let ks = parse_range(&args.k, "--k")?;
    let windows = parse_range(&args.window, "--window")?;
    let policies = parse_policies(&args.policy)?;
    let table = sweep(
        &loaded.matrix,
        &loaded.timing,
        &ks,
        &windows,
        &policies,
        &config,
    )?;
    let results = ResultsFile::from_table(echo(&loaded, &config), table);
    write_file(&args.out, &results.to_json())
}

fn cmd_gen_trace(args: GenTraceArgs) -> Result<(), Error> {
    let timing = MeasurementTiming::new(args.duration_ms, args.minislot_us)?;
    let (model, _) = load_traffic(args.traffic.as_deref(), args.seed, args.channels)?;
    let matrix = generate_matrix(&model, args.rounds, &timing)?;
    write_trace(&matrix, &args.out)
}

/// `a..b` (inclusive), a single value, or a comma-separated list.
fn parse_range(text: &str, flag: &str) -> Result<Vec<usize>, Error> {
    let bad = || Error::Config(format!("{flag}: cannot parse {text:?}"));
    let values: Vec<usize> = if let Some((lo, hi)) = text.split_once("..") {
        let lo: usize = lo.trim().parse().map_err(|_| bad())?;
        let hi: usize = hi
            .trim()
            .trim_start_matches('=')
            .parse()
            .map_err(|_| bad())?;
        (lo..=hi).collect()
    } else {
        text.split(',')
            .map(|v| v.trim().parse().map_err(|_| bad()))
            .collect::<Result<_, _>>()?
    };
    if values.is_empty() {
        return Err(Error::Config(format!("{flag}: empty range {text:?}")));
    }
    Ok(values)
}

fn parse_policies(text: &str) -> Result<Vec<SelectionPolicy>, Error> {
    if text == "all" {
        return Ok(SelectionPolicy::ALL.to_vec());
    }
    if text.is_empty() {
        return Ok(Vec::new());
    }
    text.split(',').map(|p| p.trim().parse()).collect()
}
