use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

mod run;

/// Model checker for scoped concurrent litmus programs.
#[derive(Parser, Debug)]
#[command(name = "scoped-mc", version, about)]
struct Cli {
    /// Input program (.lit).
    file: Option<PathBuf>,

    /// Hidden: compare the engine's execution set against the brute-force
    /// enumerator and print both plus their symmetric difference.
    #[arg(long, hide = true)]
    oracle_diff: bool,

    /// Loop unroll bound.
    #[arg(long, default_value_t = 2)]
    unroll: u32,

    /// What to do when a race is found.
    #[arg(long, value_enum, default_value_t = OnRace::Stop)]
    on_race: OnRace,

    /// Stop after this many executions.
    #[arg(long)]
    max_execs: Option<u64>,

    /// Bound on repair-and-rerun rounds.
    #[arg(long, default_value_t = 32)]
    max_iter_repair: u32,

    /// Write one DOT file per emitted execution and witness into this
    /// directory.
    #[arg(long)]
    dot: Option<PathBuf>,

    /// Print the statistics block (Executions / Events / #Race / #Fix).
    #[arg(long)]
    stats: bool,

    /// Worker threads for branch exploration.
    #[arg(long, default_value_t = 1)]
    jobs: usize,

    /// Machine-readable JSON summary on stdout.
    #[arg(long)]
    json: bool,

    /// Keep exploring after an assertion verdict is decided.
    #[arg(long)]
    keep_going: bool,

    /// Override the assertion quantifier in the program text.
    #[arg(long, value_enum, default_value_t = AssertMode::Auto)]
    assert_mode: AssertMode,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OnRace {
    Stop,
    Continue,
    Repair,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AssertMode {
    Auto,
    Forall,
    Exists,
}

// Exit codes: 0 clean, 1 assertion violation, 2 race, 3 divergence,
// 4 usage/parse error, 5 limits exceeded.
fn main() -> ExitCode {
    let cli = Cli::parse();
    match run::run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(4)
        }
    }
}
