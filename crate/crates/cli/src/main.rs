use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qagree_cli::commands::{self, BoundsArgs, ClassifyArgs, Output, Source, Suite};

/// Common certainty, agreement and its breakdown for measurement scenarios.
#[derive(Parser)]
#[command(name = "qagree", version)]
struct Cli {
    /// Print machine-readable JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SourceArgs {
    /// Scenario file (JSON).
    file: Option<PathBuf>,
    /// Use a built-in example instead of a file.
    #[arg(long, value_name = "NAME")]
    example: Option<String>,
    /// Angle parameter of example1.
    #[arg(long)]
    theta: Option<f64>,
}

impl SourceArgs {
    fn source(self) -> Source {
        Source {
            file: self.file,
            example: self.example,
            theta: self.theta,
        }
    }
}

#[derive(Args)]
struct Pair {
    /// Alice's probability for E; `p/q` is read exactly.
    #[arg(long, allow_hyphen_values = true)]
    qa: Option<String>,
    /// Bob's probability for E.
    #[arg(long, allow_hyphen_values = true)]
    qb: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the common-certainty recursion and classify the outcome. Without
    /// --qa/--qb every realized pair is classified.
    Classify {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        pair: Pair,
        /// Count probability at least 1 - EPSILON as certainty.
        #[arg(long)]
        epsilon: Option<f64>,
        /// Matching tolerance for the initial assignment layers.
        #[arg(long)]
        tol_q: Option<f64>,
        /// With --epsilon, also match the initial layers within epsilon.
        #[arg(long)]
        relax_initial: bool,
    },
    /// Record both measurement outcomes in a classical register and rerun
    /// the recursion on the recorded state.
    Record {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        pair: Pair,
    },
    /// Check the disagreement bounds: a second state (file or
    /// --depolarize) for the trace-norm bound, or --epsilon for the
    /// relaxed-certainty bound.
    Bounds {
        #[command(flatten)]
        source: SourceArgs,
        /// Scenario file providing the second state.
        other: Option<PathBuf>,
        /// Second state (1 - P) rho + P I / D.
        #[arg(long, value_name = "P")]
        depolarize: Option<f64>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[command(flatten)]
        pair: Pair,
    },
    /// Validate a no-signaling box and test for the 0-1 implication chain,
    /// or check that a signed model realizes a box.
    Box {
        #[command(flatten)]
        source: SourceArgs,
        /// Box file the signed model should realize.
        #[arg(long, value_name = "BOX_FILE")]
        realizes: Option<PathBuf>,
    },
    /// Randomized property runs over seeded scenarios.
    Sweep {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, value_enum, default_value_t = Suite::All)]
        suite: Suite,
    },
    /// List or print the built-in examples.
    Examples {
        #[command(subcommand)]
        action: ExamplesAction,
    },
}

#[derive(Subcommand)]
enum ExamplesAction {
    List,
    /// Print an example as a scenario file.
    Dump {
        name: String,
        #[arg(long)]
        theta: Option<f64>,
    },
}

fn run(command: Command) -> anyhow::Result<Output> {
    match command {
        Command::Classify {
            source,
            pair,
            epsilon,
            tol_q,
            relax_initial,
        } => commands::classify(&ClassifyArgs {
            source: source.source(),
            qa: pair.qa,
            qb: pair.qb,
            epsilon,
            tol_q,
            relax_initial,
        }),
        Command::Record { source, pair } => commands::record(&source.source(), &pair.qa, &pair.qb),
        Command::Bounds {
            source,
            other,
            depolarize,
            epsilon,
            pair,
        } => commands::bounds(&BoundsArgs {
            source: source.source(),
            other,
            depolarize,
            epsilon,
            qa: pair.qa,
            qb: pair.qb,
        }),
        Command::Box { source, realizes } => commands::box_cmd(&source.source(), &realizes),
        Command::Sweep { seed, count, suite } => commands::sweep(seed, count, suite),
        Command::Examples { action } => match action {
            ExamplesAction::List => Ok(commands::examples_list()),
            ExamplesAction::Dump { name, theta } => commands::examples_dump(&name, theta),
        },
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<qagree::Error>() {
        Some(e) if e.is_mathematical() => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let dump = matches!(
        cli.command,
        Command::Examples {
            action: ExamplesAction::Dump { .. }
        }
    );
    match run(cli.command) {
        Ok(out) => {
            if cli.json && !dump {
                let text = serde_json::to_string_pretty(&out.json).expect("values serialize");
                let _ = writeln!(std::io::stdout(), "{text}");
            } else {
                let _ = write!(std::io::stdout(), "{}", out.text);
            }
            if out.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(3)
            }
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
