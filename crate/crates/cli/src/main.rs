use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use infodyn_cli::{list_experiments, run_file, template, CliError, Mode, Overrides};

/// Entropic projections, γ-deviations and their geometry, as reproducible experiments.
#[derive(Debug, Parser)]
#[command(name = "infodyn", version)]
struct Cli {
    /// Print the config template of a canned experiment and exit.
    #[arg(long, value_name = "NAME")]
    template: Option<String>,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an experiment config and write result.json and result.csv.
    Run {
        config: PathBuf,
        /// Output directory (overrides the config's `out`; default ".").
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seed for randomized sweeps (overrides the config).
        #[arg(long)]
        seed: Option<u64>,
        /// Trajectory semantics (overrides the config).
        #[arg(long, value_enum)]
        mode: Option<Mode>,
    },
    /// List the canned experiments.
    List,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match (cli.template, cli.command) {
        (Some(name), _) => template(&name).map(|t| print!("{t}")),
        (None, None | Some(Command::List)) => {
            print!("{}", list_experiments());
            Ok(())
        }
        (None, Some(Command::Run { config, out, seed, mode })) => {
            run_file(&config, &Overrides { out, seed, mode }).map(|(record, dir)| {
                eprintln!(
                    "{}: {} rows written to {} ({:.3} s)",
                    record.experiment,
                    record.rows.len(),
                    dir.display(),
                    record.wall_time_seconds
                );
            })
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report(e),
    }
}

fn report(e: CliError) -> ExitCode {
    eprintln!("infodyn: {e}");
    ExitCode::from(e.exit_code() as u8)
}
