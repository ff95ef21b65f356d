//! Command-line front end: configuration, dispatch, seeding and output.
//!
//! Every subcommand resolves a JSON configuration (file first, then flags),
//! validates it, runs inside a rayon pool of `--workers` threads and writes
//! CSV or JSON. With `--out`, a manifest holding the config hash, seed and
//! timing is written beside the result file.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::ffi::OsString;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::Parser;
use serde_json::{Map, Value};

use args::{Cli, Command, GlobalArgs};
use commands::{
    ContoursConfig, Experiment, LambdaCConfig, PeierlsConfig, PercolateConfig, PropertyCheckConfig, RenewalConfig,
    SimulateConfig, WindowCheckConfig,
};
use error::{Result, EXIT_OK, EXIT_USAGE};
use output::{config_hash, emit, manifest_path, write_manifest, RunManifest};

/// Parses `argv` (program name first), runs the subcommand and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli) -> Result<()> {
    let overrides = cli.command.overrides();
    match &cli.command {
        Command::Simulate(_) => go::<SimulateConfig>(&cli.global, overrides),
        Command::LambdaC(_) => go::<LambdaCConfig>(&cli.global, overrides),
        Command::Renewal(_) => go::<RenewalConfig>(&cli.global, overrides),
        Command::WindowCheck(_) => go::<WindowCheckConfig>(&cli.global, overrides),
        Command::Percolate(_) => go::<PercolateConfig>(&cli.global, overrides),
        Command::PropertyCheck(_) => go::<PropertyCheckConfig>(&cli.global, overrides),
        Command::Contours(_) => go::<ContoursConfig>(&cli.global, overrides),
        Command::Peierls(_) => go::<PeierlsConfig>(&cli.global, overrides),
    }
}

fn go<E: Experiment>(global: &GlobalArgs, mut overrides: Map<String, Value>) -> Result<()> {
    if let Some(seed) = global.seed {
        overrides.insert("seed".into(), seed.into());
    }
    let doc = config::load_document(global.config.as_deref())?;
    let experiment: E = config::resolve(doc, overrides)?;
    experiment.validate()?;
    let workers = match global.workers {
        Some(0) => return Err(error::CliError::config("workers", "must be at least 1")),
        Some(w) => w,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build()?;
    let start = Instant::now();
    let outcome = pool.install(|| experiment.run())?;
    let elapsed = start.elapsed();
    emit(&outcome.table, global.format, global.out.as_deref())?;
    if let Some(out) = &global.out {
        let canonical = serde_json::to_value(&experiment).expect("config serialises");
        let manifest = RunManifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: E::NAME,
            config_hash: config_hash(E::NAME, &canonical),
            config: canonical,
            seed: experiment.seed(),
            workers,
            wall_clock_seconds: elapsed.as_secs_f64(),
            streams: outcome.streams,
        };
        write_manifest(&manifest, &manifest_path(out))?;
    }
    Ok(())
}
