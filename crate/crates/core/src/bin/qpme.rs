use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qpme::commands::{describe_outputs, run_command, Command};

#[derive(Parser)]
#[command(name = "qpme", version, about = "Disorder-averaged relaxation protocols by exact diagonalization")]
struct Cli {
    /// Worker threads for the realization sweep.
    #[arg(long, global = true, env = "QPME_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Time evolution of the configured protocols; one CSV per protocol and observable.
    Evolve {
        #[arg(long)]
        config: PathBuf,
        /// Overrides output.directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Half-filling level statistics and ground-state charge census.
    Spectrum {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Eigenstate-overlap histograms of the initial state.
    Overlap {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("qpme: --threads must be at least 1");
            return ExitCode::from(EXIT_CONFIG);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("qpme: cannot start thread pool: {e}");
            return ExitCode::from(EXIT_NUMERICAL);
        }
    }

    let (command, config, out) = match cli.command {
        Sub::Evolve { config, out } => (Command::Evolve, config, out),
        Sub::Spectrum { config, out } => (Command::Spectrum, config, out),
        Sub::Overlap { config, out } => (Command::Overlap, config, out),
    };

    match run_command(command, &config, out.as_deref()) {
        Ok(paths) => {
            eprintln!("qpme: {}", describe_outputs(&paths));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("qpme: {e}");
            if e.is_input_error() {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::from(EXIT_NUMERICAL)
            }
        }
    }
}
