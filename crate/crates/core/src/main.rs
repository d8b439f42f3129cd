use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use pite_bench::cli::{self, Fault, RunOptions, VerifyOptions, OUTPUT_DIR_ENV};
use pite_bench::Error;

const EXIT_VALIDATION: u8 = 1;
const EXIT_IDENTITY: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(name = "pite", version, about = "Predicted individual treatment effect benchmark")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured simulation grid.
    Run {
        config: PathBuf,
        #[arg(long, env = OUTPUT_DIR_ENV)]
        output_dir: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Check the metric identities numerically.
    Verify {
        #[arg(long, default_value_t = VerifyOptions::default().seed)]
        seed: u64,
        #[arg(long, hide = true, value_enum)]
        inject_fault: Option<FaultArg>,
    },
    /// Derive report tables from a results directory.
    Report {
        #[arg(env = OUTPUT_DIR_ENV, default_value = cli::DEFAULT_OUTPUT_DIR)]
        dir: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FaultArg {
    Prop1Sign,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io { .. } => EXIT_IO,
        _ => EXIT_VALIDATION,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    let result = match args.command {
        Command::Run {
            config,
            output_dir,
            workers,
        } => cli::cmd_run(&config, &RunOptions { output_dir, workers }).map(|dir| {
            println!("results written to {}", dir.display());
            ExitCode::SUCCESS
        }),
        Command::Verify { seed, inject_fault } => {
            let opts = VerifyOptions {
                seed,
                fault: inject_fault.map(|FaultArg::Prop1Sign| Fault::Prop1Sign),
                ..VerifyOptions::default()
            };
            cli::cmd_verify(&opts).map(|checks| {
                for c in &checks {
                    println!(
                        "{} {}: gap {:.3e} (tolerance {:.1e})",
                        if c.passed() { "PASS" } else { "FAIL" },
                        c.name,
                        c.gap,
                        c.tolerance
                    );
                }
                let failed: Vec<&str> = checks.iter().filter(|c| !c.passed()).map(|c| c.name).collect();
                if failed.is_empty() {
                    ExitCode::SUCCESS
                } else {
                    eprintln!("violated: {}", failed.join(", "));
                    ExitCode::from(EXIT_IDENTITY)
                }
            })
        }
        Command::Report { dir } => cli::cmd_report(&dir).map(|failures| {
            println!("{} failure-zone rows; report written to {}", failures.len(), dir.join(cli::REPORT_DIR).display());
            ExitCode::SUCCESS
        }),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::from(exit_code(&e))
    })
}
