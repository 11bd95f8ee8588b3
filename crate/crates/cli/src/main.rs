//! `phasecal` command-line driver.
//!
//! Exit codes: 0 on success, 2 for configuration errors, 3 for runtime
//! failures (I/O, stage errors, failed self-test checks).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use phasecal::campaign::{
    load_config, load_report, render_report, run_simulation, RunManifest, Scenario, Transport,
};
use phasecal::selftest;

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(
    name = "phasecal",
    version,
    about = "Local vs over-the-air TX phase calibration simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum TransportArg {
    Inproc,
    Udp,
}

#[derive(Subcommand)]
enum Command {
    /// Run a calibration campaign and write trace.csv, report.json and manifest.json.
    Simulate {
        /// Configuration file (TOML).
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory, created if missing.
        #[arg(long)]
        out: PathBuf,
        /// Scenario name; see `phasecal scenarios`.
        #[arg(long, default_value = "default")]
        scenario: String,
        #[arg(long, value_enum, default_value = "inproc")]
        transport: TransportArg,
        /// First UDP port (local controller; OTA uses port + 1). 0 = ephemeral.
        #[arg(long, default_value_t = 0)]
        port: u16,
        /// Override the number of cycles L.
        #[arg(long)]
        cycles: Option<usize>,
        /// Also export KDE grids of every jitter cell.
        #[arg(long)]
        kde: bool,
        /// Do not print the summary table.
        #[arg(long, short)]
        quiet: bool,
    },
    /// Print the summary table of a finished run.
    Report {
        /// Directory holding report.json.
        dir: PathBuf,
    },
    /// Run the built-in oracle checks.
    Selftest,
    /// List the scenario registry.
    Scenarios,
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<phasecal::Error> for Failure {
    fn from(e: phasecal::Error) -> Self {
        if e.is_config_error() {
            Failure::Config(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Simulate {
            config,
            seed,
            out,
            scenario,
            transport,
            port,
            cycles,
            kde,
            quiet,
        } => {
            let scenario: Scenario =
                scenario
                    .parse()
                    .map_err(|e: phasecal::campaign::scenario::UnknownScenario| {
                        Failure::Config(e.to_string())
                    })?;
            let base = load_config(&config).map_err(|e| match e {
                phasecal::Error::Io { .. } => Failure::Config(e.to_string()),
                other => other.into(),
            })?;
            let transport = match transport {
                TransportArg::Inproc => Transport::InProc,
                TransportArg::Udp => Transport::Udp { port },
            };
            let manifest = RunManifest::new(&base, scenario, seed, cycles)?
                .with_transport(transport)
                .with_output(&out, kde);
            let (output, _) = run_simulation(&manifest)?;
            if !quiet {
                print!("{}", render_report(&output.report));
            }
            eprintln!("wrote {}", out.display());
            Ok(())
        }
        Command::Report { dir } => {
            let report = load_report(&dir.join("report.json"))?;
            print!("{}", render_report(&report));
            Ok(())
        }
        Command::Selftest => {
            let results = selftest::run_all();
            for r in &results {
                println!(
                    "{} {:<42} {}",
                    if r.passed { "PASS" } else { "FAIL" },
                    r.name,
                    r.detail
                );
            }
            let failed = results.iter().filter(|r| !r.passed).count();
            println!(
                "{} of {} checks passed",
                results.len() - failed,
                results.len()
            );
            if failed == 0 {
                Ok(())
            } else {
                Err(Failure::Runtime(format!(
                    "{failed} self-test checks failed"
                )))
            }
        }
        Command::Scenarios => {
            for sc in Scenario::ALL {
                println!("{:<15} {}", sc.name(), sc.description());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}
