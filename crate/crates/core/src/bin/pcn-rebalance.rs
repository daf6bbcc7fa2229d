use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pcn_rebalance::cycles::{decompose, parse_cycles, Decomposition};
use pcn_rebalance::execution::{run_execution, setup_cycle_htlcs, AdversarySpec};
use pcn_rebalance::pipeline::{
    cmd_gen, cmd_run, cmd_verify, derive_seed, load_adversary, load_instance, read_file, write_file, PipelineError,
    RunConfig,
};
use pcn_rebalance::solver::Circulation;

#[derive(Parser)]
#[command(name = "pcn-rebalance", version, about = "Optimal rebalancing for payment channel networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random instance as JSON.
    Gen {
        #[arg(long, short)]
        n: usize,
        #[arg(long, short)]
        m: usize,
        #[arg(long, default_value_t = 10)]
        cap_max: u64,
        #[arg(long, default_value_t = 1)]
        weight_max: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write here instead of stdout.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Solve, decompose and execute an instance, writing all artifacts.
    Run {
        input: PathBuf,
        /// Output directory.
        #[arg(long, short, default_value = "out")]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Solve on secret-shared inputs with simulated delegates.
        #[arg(long)]
        mpc: bool,
        /// Number of delegates.
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long)]
        iter_bound: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Re-check a run directory against its instance.
    Verify {
        input: PathBuf,
        run_dir: PathBuf,
    },
    /// Split a circulation file into cycles.
    Decompose {
        input: PathBuf,
        circulation: PathBuf,
        #[arg(long, short)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Execute the cycles of a decomposition file with HTLCs.
    Execute {
        input: PathBuf,
        decomposition: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, short)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// Adversary specification, e.g. {"corrupted": {"B": "withhold_preimage"}}.
    #[arg(long)]
    adversary: Option<PathBuf>,
    /// Write a Graphviz rendering of the decomposition here.
    #[arg(long)]
    dot: Option<PathBuf>,
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<(), PipelineError> {
    match out {
        Some(path) => write_file(path, text),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn adversary(common: &Common) -> Result<AdversarySpec, PipelineError> {
    common.adversary.as_deref().map_or_else(|| Ok(AdversarySpec::honest()), load_adversary)
}

fn execute(cli: Cli) -> Result<ExitCode, PipelineError> {
    match cli.command {
        Command::Gen { n, m, cap_max, weight_max, seed, out } => {
            emit(out.as_ref(), &cmd_gen(n, m, cap_max, weight_max, seed)?)?;
        }
        Command::Run { input, out, seed, mpc, k, iter_bound, common } => {
            let config = RunConfig { seed, mpc, k, iteration_bound: iter_bound, adversary: adversary(&common)? };
            let output = cmd_run(&input, &config, &out, common.dot.as_deref())?;
            let r = &output.report;
            println!(
                "objective {} | {} cycles | {} completed, {} aborted | artifacts in {}",
                r.objective,
                r.cycles,
                r.completed,
                r.aborted,
                out.display()
            );
        }
        Command::Verify { input, run_dir } => {
            let verdict = cmd_verify(&input, &run_dir)?;
            if verdict.ok() {
                println!("ok");
            } else {
                for reason in &verdict.reasons {
                    println!("FAIL: {reason}");
                }
                return Ok(ExitCode::from(3));
            }
        }
        Command::Decompose { input, circulation, out, common } => {
            let instance = load_instance(&input)?;
            let circ = Circulation::from_json(&instance, &read_file(&circulation)?)
                .map_err(|e| PipelineError::Malformed(e.to_string()))?;
            let d = decompose(&circ).map_err(|e| PipelineError::Malformed(e.to_string()))?;
            emit(out.as_ref(), &d.to_json())?;
            if let Some(path) = &common.dot {
                write_file(path, &d.to_dot())?;
            }
        }
        Command::Execute { input, decomposition, seed, out, common } => {
            let instance = load_instance(&input)?;
            let cycles = parse_cycles(&read_file(&decomposition)?).map_err(|e| PipelineError::Malformed(e.to_string()))?;
            let d = Decomposition::from_cycles(&instance, cycles).map_err(|e| PipelineError::Malformed(e.to_string()))?;
            let executions = d
                .cycles
                .iter()
                .enumerate()
                .map(|(i, c)| setup_cycle_htlcs(c, derive_seed(seed, "htlc", i as u64)))
                .collect();
            let outcome =
                run_execution(executions, &adversary(&common)?).map_err(|e| PipelineError::Internal(e.to_string()))?;
            emit(out.as_ref(), &outcome.ledger.to_json(instance.nodes()))?;
            if let Some(path) = &common.dot {
                write_file(path, &d.to_dot())?;
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
