mod config;
mod invariants;
mod output;
mod runner;
mod suites;

use clap::{Parser, Subcommand};
use config::Config;
use runner::Options;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Heat-flow and transport estimators for upper Ricci bounds.
#[derive(Parser, Debug)]
#[command(name = "ricci-lab", version)]
struct Cli {
    /// Cap on discretization and transport support sizes.
    #[arg(long, global = true, value_name = "N")]
    cap_points: Option<usize>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    /// Multiplies every pass/fail tolerance.
    #[arg(long, global = true, value_name = "X", default_value_t = 1.0)]
    tolerance_scale: f64,
    /// Write wall-clock seconds instead of "-" (output is then not reproducible).
    #[arg(long, global = true)]
    timings: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a config file or a built-in suite by name.
    Run {
        config: String,
        /// CSV destination; overrides `output` in the config.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// List the built-in acceptance suites.
    ListSuites,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 || rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            eprintln!("error: invalid thread count {n}");
            return ExitCode::from(2);
        }
    }
    if !(cli.tolerance_scale.is_finite() && cli.tolerance_scale > 0.0) {
        eprintln!("error: --tolerance-scale must be positive");
        return ExitCode::from(2);
    }
    match cli.command {
        Command::ListSuites => {
            print!("{}", suites::listing());
            ExitCode::SUCCESS
        }
        Command::Run { config, output } => {
            let opts = Options { cap_points: cli.cap_points, tolerance_scale: cli.tolerance_scale };
            run(&config, output, &opts, cli.timings)
        }
    }
}

fn run(source: &str, output: Option<PathBuf>, opts: &Options, timings: bool) -> ExitCode {
    let path = Path::new(source);
    let (cfg, stem) = if path.exists() {
        (Config::load(path), path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default())
    } else if let Some(text) = suites::find(source) {
        (Config::parse(text), source.to_string())
    } else {
        eprintln!("error: no config file or built-in suite named `{source}`");
        return ExitCode::from(2);
    };
    let cfg = match cfg {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };
    let rows = match runner::run_all(&cfg.experiment, opts) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };
    let dest = output.or(cfg.output).unwrap_or_else(|| PathBuf::from(format!("{stem}.csv")));
    if let Err(e) = output::write_csv(&dest, &rows, timings) {
        eprintln!("error: cannot write {}: {e}", dest.display());
        return ExitCode::from(2);
    }
    for r in &rows {
        let status = if r.pass { "pass" } else { "FAIL" };
        match &r.error {
            Some(msg) => eprintln!("{status} {} ({msg})", r.id),
            None => eprintln!("{status} {} estimate={}", r.id, runner::fmt(r.estimate)),
        }
    }
    eprintln!("wrote {} rows to {}", rows.len(), dest.display());
    if rows.iter().all(|r| r.pass) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
