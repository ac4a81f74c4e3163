use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use polar_denoise::cli::{self, RunOptions};

#[derive(Parser)]
#[command(name = "polar-denoise", about = "Reverse-diffusion denoising experiments", disable_version_flag = true)]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a spec file.
    Run {
        spec: PathBuf,
        /// Output root; artifacts go to <DIR>/<experiment name>/.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
        /// Overrides the spec's seed.
        #[arg(long, value_name = "N")]
        seed: Option<u64>,
        /// Worker threads. Artifacts do not depend on this.
        #[arg(long, value_name = "K", env = "POLAR_DENOISE_JOBS")]
        jobs: Option<usize>,
    },
    /// Check the Bessel layer against closed forms and an independent quadrature.
    AuditSpecfun {
        #[arg(long, default_value_t = 50)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print the library version.
    Version,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match args.command {
        Command::Version => {
            println!("polar-denoise {}", cli::VERSION);
            ExitCode::SUCCESS
        }
        Command::AuditSpecfun { samples, seed } => match cli::audit_specfun(samples, seed) {
            Ok(rows) => {
                let failed: Vec<_> = rows.iter().filter(|r| !r.pass).collect();
                for r in &failed {
                    eprintln!(
                        "FAIL {} nu={} z={} error={:e} tolerance={:e}",
                        r.check, r.order, r.argument, r.error, r.tolerance
                    );
                }
                let worst = rows.iter().map(|r| r.error / r.reference.abs().max(1.0)).fold(0.0, f64::max);
                println!("{} checks, {} failed, worst relative error {worst:e}", rows.len(), failed.len());
                ExitCode::from(if failed.is_empty() { 0 } else { 2 })
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(2)
            }
        },
        Command::Run { spec, out, seed, jobs } => {
            let opts = RunOptions { out, seed, jobs };
            match cli::run_spec_file(&spec, &opts) {
                Ok(outcome) => {
                    for f in &outcome.failures {
                        eprintln!("check failed: {f}");
                    }
                    println!(
                        "{} ({}): {} files in {}",
                        outcome.name,
                        outcome.kind,
                        outcome.files.len(),
                        outcome.dir.display()
                    );
                    ExitCode::from(outcome.exit_code() as u8)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
    }
}
