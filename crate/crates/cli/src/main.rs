use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use uc_cli::{run, Command, RunConfig};

/// Numerical checks for unique continuation of Einstein-scalar systems.
#[derive(Debug, Parser)]
#[command(name = "uccheck", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// TOML file with flat sections; defaults apply to anything left out.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory for the CSV tables and summary.json.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    verbose: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "debug" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    let mut cfg = match &cli.config {
        Some(path) => match RunConfig::load(path) {
            Ok(c) => c,
            Err(e) => {
                eprint!("{e}");
                return ExitCode::from(2);
            }
        },
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.run.seed = seed;
    }
    if let Err(e) = cfg.validate(cli.command) {
        eprint!("{e}");
        return ExitCode::from(2);
    }
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("cannot configure {jobs} worker threads: {e}");
            return ExitCode::from(2);
        }
    }
    let out_dir = cli.out.or(cfg.run.out.clone()).unwrap_or_else(|| PathBuf::from("uccheck-out").join(cli.command.name()));
    log::info!("running {} with seed {}", cli.command.name(), cfg.run.seed);
    let result = run(cli.command, &cfg);
    for c in &result.checks {
        let mark = if c.pass { "PASS" } else { "FAIL" };
        println!("{mark} {:<40} value {:>12.4e} tolerance {:.1e}", c.name, c.value, c.tolerance);
    }
    match result.write(&out_dir) {
        Ok(files) => log::info!("wrote {} files to {}", files.len(), out_dir.display()),
        Err(e) => {
            eprintln!("cannot write reports to {}: {e}", out_dir.display());
            return ExitCode::from(2);
        }
    }
    let failed = result.failures();
    println!("{}: {} checks, {failed} failed", cli.command.name(), result.checks.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
