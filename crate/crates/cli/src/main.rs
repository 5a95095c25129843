//! `decaylife`: lifetimes of postselected two-level unstable systems.
//!
//! Exit codes: 0 ok, 2 usage or invalid input, 3 domain error (for example a
//! postselection that never fires), 4 internal error or failed self-validation.
//! Errors are also written to stderr as one JSON object.

use clap::{Parser, Subcommand};

use decaylife::commands::{self, EnvelopeArgs, FigureArgs, SampleArgs, SweepArgs};
use decaylife::config::CommonArgs;
use decaylife::error::{CliError, EXIT_OK, EXIT_USAGE};

#[derive(Debug, Parser)]
#[command(name = "decaylife", version, about = "Decay-time statistics of postselected two-level unstable systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Lifetimes, weak value and ratio for one configuration.
    Eval(CommonArgs),
    /// Curve files and manifest for figure 1-4.
    Figure(FigureArgs),
    /// R over grids of k, |b_P| and θ.
    Sweep(SweepArgs),
    /// Upper and lower envelope of R over the postselection.
    Envelope(EnvelopeArgs),
    /// Monte Carlo decay times and lifetime estimate.
    Sample(SampleArgs),
    /// Run the built-in property checks.
    Validate(CommonArgs),
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Eval(a) => commands::cmd_eval(&a),
        Command::Figure(a) => commands::cmd_figure(&a).map(|p| log::info!("wrote {}", p.display())),
        Command::Sweep(a) => commands::cmd_sweep(&a),
        Command::Envelope(a) => commands::cmd_envelope(&a),
        Command::Sample(a) => commands::cmd_sample(&a).map(|p| log::info!("wrote {}", p.display())),
        Command::Validate(a) => commands::cmd_validate(&a),
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            if code != EXIT_OK {
                eprintln!("{}", CliError::Usage(e.kind().to_string()).to_json());
            }
            std::process::exit(code);
        }
    };
    if let Err(e) = run(cli) {
        eprintln!("{}", e.to_json());
        std::process::exit(e.exit_code());
    }
}
