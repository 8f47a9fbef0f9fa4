//! Experiment harness: parse a run configuration, run the learning
//! dynamics, and emit a CSV of regret curves plus a JSON summary.
//!
//! Exit codes: 0 on success, 2 on configuration errors, 1 on runtime
//! failures (e.g. solver non-convergence).

mod report;

use clap::Parser;
use phidyn::dynamics::{run_dynamics, CheckpointSpec, DynamicsError, DynamicsSetup};
use phidyn::efg::games::load_game_str;
use phidyn::trigger::{AlgorithmKind, DeviationMode};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum AlgArg {
    #[value(name = "lrl-oftrl")]
    LrlOftrl,
    #[value(name = "cfr-rm")]
    CfrRm,
    #[value(name = "cfr-rm+")]
    CfrRmPlus,
}

impl From<AlgArg> for AlgorithmKind {
    fn from(a: AlgArg) -> Self {
        match a {
            AlgArg::LrlOftrl => AlgorithmKind::LrlOftrl,
            AlgArg::CfrRm => AlgorithmKind::CfrRm,
            AlgArg::CfrRmPlus => AlgorithmKind::CfrRmPlus,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum ModeArg {
    Efce,
    Efcce,
}

impl From<ModeArg> for DeviationMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Efce => DeviationMode::Efce,
            ModeArg::Efcce => DeviationMode::Efcce,
        }
    }
}

/// Uncoupled no-regret learning dynamics for extensive-form (coarse)
/// correlated equilibria.
#[derive(Debug, Parser)]
#[command(name = "phidyn", version)]
struct Args {
    /// Game spec, e.g. `micro`, `kuhn:players=3,ranks=3`,
    /// `goofspiel:ranks=3`, `sheriff:v=5,p=1,s=1,mmax=5,bmax=2,rounds=2`.
    #[arg(long)]
    game: String,

    /// Learning algorithm.
    #[arg(long, value_enum, default_value = "lrl-oftrl")]
    alg: AlgArg,

    /// Deviation family (equilibrium notion).
    #[arg(long, value_enum, default_value = "efce")]
    mode: ModeArg,

    /// Number of rounds.
    #[arg(long = "T", value_name = "T")]
    horizon: u64,

    /// Learning rate of the local learners.
    #[arg(long, default_value_t = 1.0)]
    eta: f64,

    /// Learning rate of the mixing learner; defaults to eta / (2 |Sigma_i|)
    /// per player.
    #[arg(long = "eta-delta")]
    eta_delta: Option<f64>,

    /// `pow2` or a comma-separated increasing list of rounds.
    #[arg(long, default_value = "pow2")]
    checkpoints: String,

    /// Output path for the regret-curve CSV.
    #[arg(long = "out-csv", default_value = "regrets.csv")]
    out_csv: PathBuf,

    /// Output path for the JSON summary.
    #[arg(long = "out-json", default_value = "summary.json")]
    out_json: PathBuf,

    /// Recorded in the summary; the dynamics are deterministic.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

enum CliError {
    Config(String),
    Runtime(String),
}

fn parse_checkpoints(text: &str) -> Result<CheckpointSpec, CliError> {
    if text == "pow2" {
        return Ok(CheckpointSpec::PowersOfTwo);
    }
    let list: Result<Vec<u64>, _> = text.split(',').map(|p| p.trim().parse()).collect();
    match list {
        Ok(list) if !list.is_empty() => Ok(CheckpointSpec::Explicit(list)),
        _ => Err(CliError::Config(format!(
            "--checkpoints must be `pow2` or a comma-separated list of rounds, got `{text}`"
        ))),
    }
}

fn run(args: &Args) -> Result<(), CliError> {
    if args.horizon < 1 {
        return Err(CliError::Config("--T must be at least 1".into()));
    }
    if !(args.eta.is_finite() && args.eta > 0.0) {
        return Err(CliError::Config("--eta must be positive".into()));
    }
    if let Some(ed) = args.eta_delta {
        if !(ed.is_finite() && ed > 0.0) {
            return Err(CliError::Config("--eta-delta must be positive".into()));
        }
    }
    let game = load_game_str::<f64>(&args.game)
        .map_err(|e| CliError::Config(format!("--game: {e}")))?;
    let setup = DynamicsSetup {
        algorithm: args.alg.into(),
        mode: args.mode.into(),
        horizon: args.horizon,
        eta: args.eta,
        eta_delta: args.eta_delta,
        seed: args.seed,
        checkpoints: parse_checkpoints(&args.checkpoints)?,
        keep_history: false,
        audit: false,
    };
    let log = run_dynamics(&game, &setup).map_err(|e| match e {
        DynamicsError::Config(msg) => CliError::Config(msg),
        other => CliError::Runtime(other.to_string()),
    })?;
    report::write_csv(&log, &args.out_csv)
        .map_err(|e| CliError::Runtime(format!("writing {}: {e}", args.out_csv.display())))?;
    report::write_summary(&log, &args.game, &args.out_json)
        .map_err(|e| CliError::Runtime(format!("writing {}: {e}", args.out_json.display())))?;
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("configuration error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("runtime error: {msg}");
            ExitCode::from(1)
        }
    }
}
