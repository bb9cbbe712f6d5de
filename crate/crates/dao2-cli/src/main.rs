use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use dao2_cli::commands::{
    run_attack, run_bench, run_demo, run_depth, AttackScenario, BenchConfig, DemoArgs, DepthArgs,
    DEFAULT_REPETITIONS, DEFAULT_T,
};
use dao2_cli::output::{bench_table, depth_table};
use dao2_cli::resolve_seed;
use dao2_core::protocol::TransferMode;

/// Threshold DAO-to-DAO transfers: demos, benchmarks, and fault scenarios.
#[derive(Parser)]
#[command(name = "dao2", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, ValueEnum)]
enum ModeArg {
    Anonymous,
    Plain,
}

impl From<ModeArg> for TransferMode {
    fn from(m: ModeArg) -> TransferMode {
        match m {
            ModeArg::Anonymous => TransferMode::Anonymous,
            ModeArg::Plain => TransferMode::Plain,
        }
    }
}

#[derive(Copy, Clone, ValueEnum)]
enum FormatArg {
    Table,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Run one full transfer between two freshly set-up DAOs.
    Demo(DemoCli),
    /// Sweep DAO sizes: per-module timings and communication tables.
    Bench(BenchCli),
    /// Derivation-depth scaling: per-step cost at increasing depths.
    Depth(DepthCli),
    /// Run a scripted fault scenario and report the detection.
    Attack(AttackCli),
}

#[derive(Args)]
struct DemoCli {
    /// Sender DAO size.
    #[arg(long, default_value_t = 3)]
    n1: u32,
    /// Receiver DAO size.
    #[arg(long, default_value_t = 3)]
    n2: u32,
    /// Signing threshold for both DAOs.
    #[arg(long, default_value_t = DEFAULT_T)]
    t: u32,
    #[arg(long, value_enum, default_value_t = ModeArg::Anonymous)]
    mode: ModeArg,
    /// Deterministic seed (falls back to $DAO2_SEED, then 0).
    #[arg(long)]
    seed: Option<u64>,
    /// Write the JSON transcript here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Append canonical ledger records to this file.
    #[arg(long)]
    ledger_file: Option<PathBuf>,
}

#[derive(Args)]
struct BenchCli {
    /// Comma-separated DAO sizes.
    #[arg(long, value_delimiter = ',', default_values_t = vec![3u32, 5, 7, 10, 15, 20])]
    n_values: Vec<u32>,
    #[arg(long, default_value_t = DEFAULT_T)]
    t: u32,
    /// Repetitions per measurement; medians are reported.
    #[arg(long, default_value_t = DEFAULT_REPETITIONS)]
    repetitions: u32,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = FormatArg::Table)]
    format: FormatArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DepthCli {
    /// Total derivation depth to walk.
    #[arg(long, default_value_t = 1000)]
    depth: u64,
    #[arg(long, default_value_t = 7)]
    n: u32,
    #[arg(long, default_value_t = DEFAULT_T)]
    t: u32,
    #[arg(long, default_value_t = DEFAULT_REPETITIONS)]
    repetitions: u32,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = FormatArg::Table)]
    format: FormatArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AttackCli {
    /// One of: bad-dkg-share, bad-dh-opening, bad-one-time-share,
    /// sub-threshold-sign, reused-tag, mismatched-derivation-state, none.
    #[arg(long)]
    scenario: String,
    #[arg(long)]
    seed: Option<u64>,
}

fn emit(text: &str, out: Option<&PathBuf>) -> std::io::Result<()> {
    match out {
        Some(path) => {
            let mut f = std::fs::File::create(path)?;
            f.write_all(text.as_bytes())
        }
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {} ({})", e.name(), e);
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, dao2_core::Error> {
    match cli.command {
        Command::Demo(args) => {
            let demo = DemoArgs {
                n1: args.n1,
                n2: args.n2,
                t: args.t,
                mode: args.mode.into(),
                seed: resolve_seed(args.seed),
                ledger_file: args.ledger_file,
            };
            let output = run_demo(&demo)?;
            for step in &output.steps {
                println!("[demo] {step}");
            }
            let json = serde_json::to_string_pretty(&output).expect("serializable");
            emit(&json, args.out.as_ref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Bench(args) => {
            let config = BenchConfig {
                n_values: args.n_values,
                t: args.t,
                repetitions: args.repetitions,
                seed: resolve_seed(args.seed),
            };
            let report = run_bench(&config)?;
            let text = match args.format {
                FormatArg::Table => bench_table(&report),
                FormatArg::Json => {
                    serde_json::to_string_pretty(&report).expect("serializable")
                }
            };
            emit(&text, args.out.as_ref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Depth(args) => {
            let depth_args = DepthArgs {
                depth: args.depth,
                n: args.n,
                t: args.t,
                repetitions: args.repetitions,
                seed: resolve_seed(args.seed),
            };
            let report = run_depth(&depth_args)?;
            let text = match args.format {
                FormatArg::Table => depth_table(&report),
                FormatArg::Json => {
                    serde_json::to_string_pretty(&report).expect("serializable")
                }
            };
            emit(&text, args.out.as_ref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Attack(args) => {
            let Some(scenario) = AttackScenario::parse(&args.scenario) else {
                eprintln!(
                    "error: unknown scenario {:?}; valid: {}",
                    args.scenario,
                    AttackScenario::names().join(", ")
                );
                return Ok(ExitCode::from(2));
            };
            let output = run_attack(scenario, resolve_seed(args.seed))?;
            println!("[attack] {}: {}", output.scenario, output.outcome);
            Ok(if output.expected {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
    }
}
