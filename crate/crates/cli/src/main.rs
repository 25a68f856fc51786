use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hkq_cli::{report, run_file, RunOptions};

#[derive(Parser)]
#[command(name = "hkq", version, about = "Run hyper-Kähler quotient experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config and write its CSV and JSON summary.
    Run {
        config: PathBuf,
        /// Override the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory; takes precedence over the config and HKQ_OUT_DIR.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Worker threads.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Print a table for a summary written by `run`.
    Report { summary: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, seed, out_dir, jobs } => {
            let opts = RunOptions { seed, out_dir, jobs, env_out_dir: std::env::var_os("HKQ_OUT_DIR").map(PathBuf::from) };
            match run_file(&config, &opts) {
                Ok(out) => {
                    let s = &out.summary;
                    println!(
                        "{} {}: {}/{} samples pass, {} ({:.2} s)",
                        s.experiment, s.check, s.passed, s.samples, s.status, s.seconds
                    );
                    println!("wrote {} and {}", out.csv_path.display(), out.summary_path.display());
                    if out.table.all_pass() {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(1)
                    }
                }
                Err(e) => {
                    eprintln!("hkq: {e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
        Command::Report { summary } => match report::render(&summary) {
            Ok(text) => {
                print!("{text}");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("hkq: cannot read {}: {e}", summary.display());
                ExitCode::from(1)
            }
        },
    }
}
