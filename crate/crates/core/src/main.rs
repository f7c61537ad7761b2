use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use critkit::config::RunConfig;
use critkit::report::{run, Mode, RunError};

#[derive(Parser)]
#[command(name = "critkit", version, about = "Multigroup slab criticality solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the pipeline described by a configuration file.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "nda", value_parser = parse_mode)]
        mode: Mode,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse()
}

const EXIT_CONFIG: u8 = 2;
const EXIT_SOLVER: u8 = 3;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    if let Ok(v) = std::env::var("CRITKIT_THREADS") {
        let threads = match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => n,
            _ => {
                eprintln!("error: CRITKIT_THREADS must be a positive integer, got `{v}`");
                return ExitCode::from(EXIT_CONFIG);
            }
        };
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: cannot configure thread pool: {e}");
            return ExitCode::from(EXIT_SOLVER);
        }
    }
    let Command::Solve { config, mode, out } = cli.command;
    let cfg = match RunConfig::from_file(&config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    match run(&cfg, mode, &out) {
        Ok(outcomes) => {
            for (i, o) in outcomes.iter().enumerate() {
                match o.k {
                    Some(k) => println!("run {i}: k = {k:.12}"),
                    None => println!("run {i}: its_sweep = {}", o.metrics.its_sweep),
                }
            }
            ExitCode::SUCCESS
        }
        Err(RunError::Solver { source, .. }) => {
            eprintln!("solver failure: {source}");
            ExitCode::from(EXIT_SOLVER)
        }
        Err(RunError::Io(e)) => {
            eprintln!("output error: {e}");
            ExitCode::FAILURE
        }
    }
}
