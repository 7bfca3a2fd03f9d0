mod bench;
mod dispatch;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use mpca_core::generate::{generate, GenConfig, LogUniform};
use mpca_core::recognition::{fast_is_1mpca, recognize, recognize_pairwise};
use mpca_core::reduction::{
    build_consecutive, build_unrestricted, decide_sat, parse_dimacs, sat_threshold, ReductionMode,
};
use mpca_core::verify::{run_suite, Suite};
use mpca_core::{read_instance, write_instance, RateModel};

use crate::dispatch::{solve, Algo};

/// Minimum-power channel allocation solvers.
#[derive(Parser)]
#[command(name = "mpca", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance and print the report as JSON.
    Solve {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Algo::Auto)]
        algo: Algo,
        /// Block sizes for `consecutive`, comma separated.
        #[arg(long, value_delimiter = ',')]
        blocks: Option<Vec<usize>>,
    },
    /// Generate a seeded instance with planted channel groups.
    Gen {
        #[arg(long)]
        users: usize,
        #[arg(long)]
        channels: usize,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Gain distribution.
        #[arg(long, default_value = "loguniform:0.01,100")]
        dist: LogUniform,
        #[arg(long, default_value = "loguniform:0.1,4")]
        rate_dist: LogUniform,
        #[arg(long, value_delimiter = ',')]
        group_sizes: Option<Vec<usize>>,
        #[arg(long, value_enum, default_value_t = ModelArg::LogSnr)]
        model: ModelArg,
        /// Scatter group members over the channel range.
        #[arg(long)]
        shuffle: bool,
    },
    /// Recover channel groups.
    Recognize {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        tol: f64,
        /// Use the pairwise reference implementation.
        #[arg(long)]
        reference: bool,
    },
    /// Build the gadget instance of a 3-CNF formula.
    Reduce {
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[arg(long)]
        cnf: PathBuf,
        /// Where to write the instance JSON.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Solve the instance exactly and report SAT/UNSAT.
        #[arg(long)]
        decide: bool,
    },
    /// Run a differential suite; one JSON line per case.
    Verify {
        #[arg(long)]
        suite: Suite,
        #[arg(long, default_value_t = 100)]
        seeds: u64,
    },
    /// Time a solver over a size sweep; CSV to stdout.
    Bench {
        #[arg(long, value_enum)]
        algo: Algo,
        /// `N=a..b` doubles, `N=a..b:s` steps by s; M likewise.
        #[arg(long)]
        sweep: bench::Sweep,
        #[arg(long, default_value_t = 8)]
        users: usize,
        #[arg(long, default_value_t = 64)]
        channels: usize,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of consecutive seeds starting at --seed.
        #[arg(long, default_value_t = 1)]
        seeds: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    LogSnr,
    Linear,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    #[value(alias = "unrestricted")]
    A,
    #[value(alias = "consecutive")]
    B,
}

/// Failure with an explicit exit status.
#[derive(Debug)]
struct Exit(u8, String);

impl std::fmt::Display for Exit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.1)
    }
}

impl std::error::Error for Exit {}

fn read_file(path: &Path) -> anyhow::Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("cannot read {}", path.display()))
}

fn print_json(value: &impl serde::Serialize) -> anyhow::Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Solve {
            input,
            algo,
            blocks,
        } => {
            let instance = read_instance(&read_file(&input)?)?;
            print_json(&solve(&instance, algo, blocks.as_deref())?)
        }
        Command::Gen {
            users,
            channels,
            k,
            seed,
            dist,
            rate_dist,
            group_sizes,
            model,
            shuffle,
        } => {
            let cfg = GenConfig {
                users,
                channels,
                groups: k,
                group_sizes,
                gain_dist: dist,
                rate_dist,
                rate_model: match model {
                    ModelArg::LogSnr => RateModel::LogSnr,
                    ModelArg::Linear => RateModel::Linear,
                },
                shuffle_channels: shuffle,
                seed,
            };
            let mut out = io::stdout().lock();
            out.write_all(&write_instance(&generate(&cfg)?))?;
            writeln!(out)?;
            Ok(())
        }
        Command::Recognize {
            input,
            tol,
            reference,
        } => {
            let instance = read_instance(&read_file(&input)?)?;
            let groups = if reference {
                recognize_pairwise(&instance, tol)?
            } else {
                recognize(&instance, tol)?
            };
            print_json(&json!({
                "k": groups.num_groups(),
                "group_id": groups.group_id(),
                "group_sizes": groups.group_sizes(),
                "uniform_gains": fast_is_1mpca(&instance),
            }))
        }
        Command::Reduce {
            mode,
            cnf,
            out,
            decide,
        } => {
            let formula = parse_dimacs(&read_file(&cnf)?)?;
            if out.is_none() && !decide {
                bail!(Exit(1, "reduce needs --out, --decide or both".into()));
            }
            let (mode, instance, blocks) = match mode {
                ModeArg::A => (
                    ReductionMode::Unrestricted,
                    build_unrestricted(&formula)?.0,
                    None,
                ),
                ModeArg::B => {
                    let (i, _, b) = build_consecutive(&formula)?;
                    (ReductionMode::Consecutive, i, Some(b))
                }
            };
            if let Some(path) = &out {
                fs::write(path, write_instance(&instance))
                    .with_context(|| format!("cannot write {}", path.display()))?;
            }
            let mut summary = json!({
                "mode": mode,
                "vars": formula.num_vars(),
                "clauses": formula.num_clauses(),
                "users": instance.num_users(),
                "channels": instance.num_channels(),
                "threshold": sat_threshold(formula.num_vars(), formula.num_clauses()),
                "blocks": blocks,
            });
            if decide {
                let d = decide_sat(&formula, mode)?;
                summary["satisfiable"] = json!(d.satisfiable);
                summary["result"] = json!(if d.satisfiable { "SAT" } else { "UNSAT" });
                summary["optimum"] = json!(d.optimum);
                summary["optimum_minus_threshold"] = json!(d.optimum - d.threshold);
            }
            print_json(&summary)
        }
        Command::Verify { suite, seeds } => {
            let cases = run_suite(suite, seeds);
            for c in &cases {
                print_json(c)?;
            }
            let failed = cases.iter().filter(|c| !c.passed).count();
            let max_gap = cases.iter().map(|c| c.gap).fold(0.0, f64::max);
            print_json(&json!({
                "suite": suite,
                "cases": cases.len(),
                "failed": failed,
                "max_gap": max_gap,
                "tolerance": suite.tolerance(),
            }))?;
            if failed > 0 {
                bail!(Exit(2, format!("{failed} of {} cases failed", cases.len())));
            }
            Ok(())
        }
        Command::Bench {
            algo,
            sweep,
            users,
            channels,
            k,
            seed,
            seeds,
        } => {
            let plan = bench::Plan {
                algo,
                sweep,
                users,
                channels,
                groups: k,
                seeds: seed..seed.saturating_add(seeds),
            };
            bench::run(&plan, &mut io::stdout().lock())
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if let Some(Exit(code, _)) = err.downcast_ref::<Exit>() {
        return *code;
    }
    match err.downcast_ref::<mpca_core::Error>() {
        Some(e) if !e.is_input_error() => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
