//! `rqa`: check rule files, answer queries, generate data sets and run
//! benchmark scenarios.
//!
//! Results go to stdout as TSV; diagnostics go to stderr.
//! Exit codes: 0 ok, 1 usage, 2 parse, 3 safety, 4 data, 5 mapping gap.

mod commands;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use commands::Failure;

#[derive(Debug, Parser)]
#[command(name = "rqa", version, about = "Rule-based query answering over CSV tables")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate a rule file and, optionally, mappings against a catalog.
    Check(CheckArgs),
    /// Answer a conjunctive query.
    Query(QueryArgs),
    /// Write a generated data set (catalog, CSV tables, rules, mappings).
    Gen(GenArgs),
    /// Evaluate a generated scenario and print one counter row per mode.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
struct CheckArgs {
    #[arg(long)]
    rules: PathBuf,
    #[arg(long, requires = "catalog")]
    mappings: Option<PathBuf>,
    #[arg(long)]
    catalog: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct QueryArgs {
    #[arg(long)]
    rules: PathBuf,
    #[arg(long)]
    mappings: PathBuf,
    #[arg(long)]
    catalog: PathBuf,
    #[arg(long, value_enum, default_value_t = ModeArg::Hybrid)]
    mode: ModeArg,
    /// Print the rewritten program to stderr.
    #[arg(long)]
    explain: bool,
    /// Append evaluation counters to the answers.
    #[arg(long)]
    stats: bool,
    /// For example `"Man(?x), hasAge(?x,?a), ?a > 21"`.
    query: String,
}

#[derive(Debug, Args)]
struct ScenarioArgs {
    #[arg(long, value_enum)]
    scenario: ScenarioArg,
    /// chain: edges; multichain: edges per chain; tc-random: nodes;
    /// crimes: copies of the fixture.
    #[arg(long)]
    size: Option<usize>,
    /// multichain: number of chains; tc-random: edges per node.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Modes to run; all three when omitted.
    #[arg(long, value_enum)]
    mode: Vec<ModeArg>,
    /// Query to pose instead of the scenario's default.
    #[arg(long)]
    query: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Forward,
    Magic,
    Hybrid,
}

impl From<ModeArg> for rqa_core::Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Forward => rqa_core::Mode::Forward,
            ModeArg::Magic => rqa_core::Mode::Magic,
            ModeArg::Hybrid => rqa_core::Mode::Hybrid,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ScenarioArg {
    Chain,
    Multichain,
    TcRandom,
    Crimes,
}

impl ScenarioArgs {
    fn scenario(&self) -> rqa_core::corpus::Scenario {
        use rqa_core::corpus::Scenario;
        match self.scenario {
            ScenarioArg::Chain => Scenario::Chain {
                n: self.size.unwrap_or(1000),
            },
            ScenarioArg::Multichain => Scenario::Multichain {
                k: self.k.unwrap_or(10),
                l: self.size.unwrap_or(100),
            },
            ScenarioArg::TcRandom => {
                let nodes = self.size.unwrap_or(500);
                Scenario::TcRandom {
                    nodes,
                    edges: nodes.saturating_mul(self.k.unwrap_or(4)),
                    seed: self.seed,
                }
            }
            ScenarioArg::Crimes => Scenario::Crimes {
                scale: self.size.unwrap_or(1),
            },
        }
    }
}

fn run(cli: Cli) -> Result<String, Failure> {
    match cli.command {
        Command::Check(a) => commands::check(&a.rules, a.mappings.as_deref(), a.catalog.as_deref()),
        Command::Query(a) => commands::query(
            &a.rules,
            &a.mappings,
            &a.catalog,
            &a.query,
            a.mode.into(),
            a.explain,
            a.stats,
        ),
        Command::Gen(a) => commands::gen(&a.scenario.scenario(), &a.out),
        Command::Bench(a) => {
            let modes: Vec<rqa_core::Mode> = if a.mode.is_empty() {
                vec![rqa_core::Mode::Forward, rqa_core::Mode::Magic, rqa_core::Mode::Hybrid]
            } else {
                a.mode.iter().map(|&m| m.into()).collect()
            };
            commands::bench(&a.scenario.scenario(), &modes, a.query.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(out.as_bytes()).and_then(|_| stdout.flush()).is_err() {
                return ExitCode::from(4);
            }
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code())
        }
    }
}
