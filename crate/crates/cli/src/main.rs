use std::path::PathBuf;
use std::process::ExitCode;

use chist_cli::app::{self, Overrides, EXIT_ERROR, EXIT_OK, OUT_DIR_ENV};
use chist_cli::{catalog, config};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "chist", version, about = "Consistent-histories scenarios and history sets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one or more configs and write a report per config.
    Run {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
        /// Replace the configured seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Replace the configured consistency tolerance.
        #[arg(long)]
        epsilon: Option<f64>,
        /// Output root; each config writes to `<out>/<file stem>`.
        #[arg(long, env = OUT_DIR_ENV)]
        out: Option<PathBuf>,
        /// Configs run concurrently.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Check configs and print them with defaults filled in.
    Validate {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
    },
    /// Print the scenario catalog as JSON.
    ListScenarios,
}

fn code(c: i32) -> ExitCode {
    ExitCode::from(c as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { configs, seed, epsilon, out, jobs } => {
            let overrides = Overrides { seed, epsilon, out };
            let summaries = match app::run_batch(&configs, &overrides, jobs) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("error: {e}");
                    return code(EXIT_ERROR);
                }
            };
            for s in &summaries {
                match &s.dir {
                    Some(dir) => println!("{}: {} -> {}", s.config.display(), s.message, dir.display()),
                    None => eprintln!("{}: error: {}", s.config.display(), s.message),
                }
            }
            code(app::combined_exit_code(&summaries))
        }
        Command::Validate { configs } => {
            let mut status = EXIT_OK;
            for path in configs {
                match config::parse_config(&path) {
                    Ok(c) => println!("{}", serde_json::to_string_pretty(&c).expect("config serializes")),
                    Err(e) => {
                        eprintln!("{}: {e}", path.display());
                        status = EXIT_ERROR;
                    }
                }
            }
            code(status)
        }
        Command::ListScenarios => {
            println!("{}", serde_json::to_string_pretty(&catalog::catalog()).expect("catalog serializes"));
            code(EXIT_OK)
        }
    }
}
