use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bcred::checks::{property_check_suite, Scope};
use bcred::experiment::{denoise_experiment, run_experiment, Experiment};
use bcred::forward::write_matrix;
use bcred::genmat::MatrixSpec;
use bcred::Error;
use clap::{Parser, Subcommand};

const EXIT_CONFIG: u8 = 2;
const EXIT_VALIDATION: u8 = 3;
const EXIT_CHECKS: u8 = 4;

#[derive(Parser)]
#[command(name = "bcred", version, about = "Block-coordinate RED reconstruction and property checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a config file.
    Run { config: PathBuf },
    /// Run the property-check suite. SCOPE is a comma-separated list of
    /// blocks, forward, denoisers, moreau, solvers, metrics, or `all`.
    Check {
        #[arg(default_value = "all")]
        scope: String,
        /// Also run negative fixtures (reported as expected failures).
        #[arg(long)]
        include_fixtures: bool,
    },
    /// Apply the configured denoiser once to a noisy phantom.
    Denoise { config: PathBuf },
    /// Write a matrix file: radon:<size>:<angles>, gaussian:<m>x<n>:<seed> or
    /// identity:<n>.
    Genmat { spec: String, out: PathBuf },
}

/// Unreadable or unwritable files count as config errors: the config named
/// them.
fn exit_for(err: &Error) -> ExitCode {
    let code = match err {
        Error::Config { .. } | Error::Io { .. } => EXIT_CONFIG,
        _ => EXIT_VALIDATION,
    };
    ExitCode::from(code)
}

fn load(path: &Path) -> Result<Experiment, ExitCode> {
    Experiment::from_file(path).map_err(|e| {
        eprintln!("error: {e}");
        exit_for(&e)
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config } => {
            let exp = match load(&config) {
                Ok(e) => e,
                Err(code) => return code,
            };
            match run_experiment(&exp) {
                Ok(res) => {
                    println!(
                        "final SNR {:.3} dB, normalized residual {:e}, gamma {:e}",
                        res.snr_db,
                        res.run.trace.final_normalized_residual().unwrap_or(f64::NAN),
                        res.run.trace.gamma
                    );
                    if let Some(d) = res.final_distance {
                        println!("relative distance to fixed point {d:e}");
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    exit_for(&e)
                }
            }
        }
        Command::Check {
            scope,
            include_fixtures,
        } => {
            let scopes = match Scope::parse_list(&scope) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_CONFIG);
                }
            };
            let report = property_check_suite(&scopes, include_fixtures);
            print!("{}", report.to_table());
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_CHECKS)
            }
        }
        Command::Denoise { config } => {
            let exp = match load(&config) {
                Ok(e) => e,
                Err(code) => return code,
            };
            match denoise_experiment(&exp) {
                Ok(res) => {
                    println!(
                        "input SNR {:.3} dB, denoised SNR {:.3} dB",
                        res.input_snr_db, res.output_snr_db
                    );
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    exit_for(&e)
                }
            }
        }
        Command::Genmat { spec, out } => {
            let result = MatrixSpec::parse(&spec)
                .and_then(|s| s.generate())
                .and_then(|(m, n, data)| write_matrix(&out, m, n, &data).map(|_| (m, n)));
            match result {
                Ok((m, n)) => {
                    println!("wrote {m}x{n} matrix to {}", out.display());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    exit_for(&e)
                }
            }
        }
    }
}
