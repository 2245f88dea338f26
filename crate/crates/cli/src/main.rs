use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fdsec::exec::{with_threads, Execution};
use fdsec::harness::{run_to_dir, ExperimentKind, ExperimentSpec};
use fdsec::scenario::SystemConfig;
use fdsec::sdp::ClarabelBackend;

#[derive(Parser)]
#[command(name = "fdsec", version, about = "Robust secure resource allocation for full-duplex cells")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// DL/UL power trade-off region swept over the weight grid.
    Tradeoff(RunArgs),
    /// Average powers versus the DL SINR target.
    PowerVsDlSinr(RunArgs),
    /// Outage probability versus the DL SINR target.
    OutageVsDlSinr(RunArgs),
    /// Average powers versus the UL SINR target.
    PowerVsUlSinr(RunArgs),
    /// Average secrecy rates versus the DL SINR target.
    SecrecyVsDlSinr(RunArgs),
    /// Average secrecy rates versus the UL SINR target.
    SecrecyVsUlSinr(RunArgs),
    /// Average powers versus the channel estimation error.
    PowerVsKappa(RunArgs),
    /// Print the default configuration as TOML.
    DefaultConfig,
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

impl Switch {
    fn on(self) -> bool {
        matches!(self, Switch::On)
    }
}

#[derive(Args)]
struct RunArgs {
    /// TOML system configuration; defaults to the desk-scale cell.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 50)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.01)]
    lambda_step: f64,
    /// DL weight for the non-trade-off experiments.
    #[arg(long, default_value_t = 0.1)]
    lambda1: f64,
    /// Comma-separated sweep values overriding the defaults.
    #[arg(long, value_delimiter = ',')]
    points: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value = "on")]
    baseline: Switch,
    /// Run the adversarial sampling check on every solved policy.
    #[arg(long, value_enum, default_value = "off")]
    verify: Switch,
    #[arg(long, default_value_t = 10_000)]
    verify_samples: usize,
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Worker threads; defaults to one per core.
    #[arg(long)]
    threads: Option<usize>,
    /// Record solve times (makes the CSV nondeterministic).
    #[arg(long)]
    timing: bool,
    #[arg(long)]
    sequential: bool,
}

fn run(kind: ExperimentKind, args: RunArgs) -> fdsec::Result<()> {
    let config = match &args.config {
        Some(path) => SystemConfig::load(path)?,
        None => SystemConfig::desk_scale(),
    };
    let spec = ExperimentSpec {
        trials: args.trials,
        seed: args.seed,
        lambda_step: args.lambda_step,
        lambda1: args.lambda1,
        points: args.points,
        baseline: args.baseline.on(),
        verify_samples: args.verify.on().then_some(args.verify_samples),
        timing: args.timing,
        exec: if args.sequential {
            Execution::Sequential
        } else {
            Execution::default()
        },
        ..ExperimentSpec::new(kind, config)
    };
    log::info!("running {kind} into {}", args.out.display());
    let summary = with_threads(args.threads, || run_to_dir(&spec, &ClarabelBackend::default(), &args.out))?;
    for point in &summary.points {
        for scheme in &point.schemes {
            let worst = scheme.weights.iter().map(|w| w.outage).fold(0.0, f64::max);
            match point.value {
                Some(v) => log::info!("{}={v} {}: outage {worst}", kind, scheme.scheme.as_str()),
                None => log::info!("{} {}: outage {worst}", kind, scheme.scheme.as_str()),
            }
        }
    }
    log::info!("wrote {}", args.out.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = Cli::parse();
    let (kind, args) = match cli.command {
        Command::Tradeoff(a) => (ExperimentKind::Tradeoff, a),
        Command::PowerVsDlSinr(a) => (ExperimentKind::PowerVsDlSinr, a),
        Command::OutageVsDlSinr(a) => (ExperimentKind::OutageVsDlSinr, a),
        Command::PowerVsUlSinr(a) => (ExperimentKind::PowerVsUlSinr, a),
        Command::SecrecyVsDlSinr(a) => (ExperimentKind::SecrecyVsDlSinr, a),
        Command::SecrecyVsUlSinr(a) => (ExperimentKind::SecrecyVsUlSinr, a),
        Command::PowerVsKappa(a) => (ExperimentKind::PowerVsKappa, a),
        Command::DefaultConfig => {
            print!("{}", SystemConfig::desk_scale().to_toml_string());
            return ExitCode::SUCCESS;
        }
    };
    match run(kind, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            ExitCode::FAILURE
        }
    }
}
