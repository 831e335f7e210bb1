//! Command-line driver. Every subcommand writes a comma-separated table and
//! a `.manifest.txt` next to it recording the resolved parameters and their
//! hash. Exit status: 0 success, 1 usage or validation error, 2 budget
//! exceeded, 3 non-convergence.

mod args;
mod commands;
mod expr;
mod settings;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::Parser;
use hsio_core::Error;

use args::{Cli, Command};
use settings::Settings;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{0}")]
    Usage(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(Error::Budget { .. }) => 2,
            CliError::Core(Error::NonConvergence { .. }) => 3,
            _ => 1,
        }
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::KochBuild(_) => "koch-build",
        Command::Lift(_) => "lift",
        Command::Regularity(_) => "regularity",
        Command::Quadform(_) => "quadform",
        Command::L1scan(_) => "l1scan",
        Command::Lemma54(_) => "lemma54",
        Command::Stagewise(_) => "stagewise",
        Command::CantorRowsup(_) => "cantor-rowsup",
        Command::Curvature(_) => "curvature",
        Command::Czcheck(_) => "czcheck",
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let name = command_name(&cli.command);
    let mut s = Settings::load(cli.config.as_deref(), name)?;
    // seed, workers and out are read here so the config may set them too
    s.get("seed", cli.seed, 0u64)?;
    let workers = s.get_opt_untracked::<usize>("workers", cli.workers)?;
    let out = match s.get_opt_untracked::<String>("out", cli.out.map(|p| p.display().to_string()))? {
        Some(p) => PathBuf::from(p),
        None => PathBuf::from(format!("{name}.csv")),
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))?;
    let outcome = pool.install(|| match &cli.command {
        Command::KochBuild(a) => commands::koch_build(&mut s, a),
        Command::Lift(a) => commands::lift(&mut s, a),
        Command::Regularity(a) => commands::regularity(&mut s, a),
        Command::Quadform(a) => commands::quadform(&mut s, a),
        Command::L1scan(a) => commands::l1scan(&mut s, a),
        Command::Lemma54(a) => commands::lemma54(&mut s, a),
        Command::Stagewise(a) => commands::stagewise(&mut s, a),
        Command::CantorRowsup(a) => commands::cantor_rowsup(&mut s, a),
        Command::Curvature(a) => commands::curvature(&mut s, a),
        Command::Czcheck(a) => commands::czcheck(&mut s, a),
    })?;
    s.finish()?;

    let write = |path: &PathBuf, bytes: &[u8]| {
        std::fs::write(path, bytes).map_err(|source| CliError::Io { context: format!("writing {}", path.display()), source })
    };
    write(&out, &outcome.table)?;
    let file_name = out.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
    write(&out.with_extension("manifest.txt"), s.manifest(&file_name, &outcome.summary).as_bytes())?;
    Ok(())
}

/// Parses `argv` (including the program name), runs the command and
/// returns the process exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
