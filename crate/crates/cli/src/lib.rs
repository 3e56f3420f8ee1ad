//! The `lmtdock` command line: every pipeline stage as a subcommand writing its
//! artifacts and a `run-manifest.json` into one output directory.

pub mod args;
mod commands;
mod error;
mod manifest;

pub use args::{Cli, Command};
pub use commands::{resolve_build_config, resolve_env, StartsFile};
pub use error::{CliError, EXIT_CONFIG, EXIT_FAILURE, EXIT_OK};
pub use manifest::{file_digest, RunManifest, MANIFEST_FILE};

/// Logs to stderr; `verbose` 0 shows warnings, 1 info, 2 and more debug.
pub fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => tracing::Level::WARN,
        1 => tracing::Level::INFO,
        _ => tracing::Level::DEBUG,
    };
    let _ = tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_max_level(level)
        .try_init();
}

/// Runs one parsed command line.
pub fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::Config("--jobs must be at least 1".into()));
        }
        if rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global().is_err() {
            tracing::debug!("worker pool already initialized; --jobs ignored");
        }
    }
    commands::dispatch(&cli.out, cli.command)
}
