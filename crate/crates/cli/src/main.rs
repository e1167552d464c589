use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use vaw2_cli::config::{ConfigOverrides, ExperimentConfig};
use vaw2_cli::emit::write_atomic;
use vaw2_cli::runner::run_experiment;
use vaw2_cli::CliError;
use vaw2_core::data::{generate_ar4, Ar4Config};
use vaw2_core::rff::{build_dictionary, DictionaryConfig};

/// Benchmark harness for two-level online multi-kernel regression.
#[derive(Parser)]
#[command(name = "vaw2", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment grid described by a TOML config file.
    Run {
        /// Path to the experiment config.
        config: PathBuf,
        /// Output directory (also settable via VAW2_OUT_DIR or the config's
        /// `out_dir`; this flag wins).
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[command(flatten)]
        overrides: ConfigOverrides,
    },
    /// Generate the synthetic AR(4) dataset as a CSV file.
    Ar4 {
        /// Number of rounds.
        #[arg(long, default_value_t = 5000)]
        horizon: usize,
        /// Generator seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Noise standard deviation.
        #[arg(long, default_value_t = 1.0)]
        noise_std: f64,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Inspect the kernel dictionary.
    Dictionary {
        /// Print the default grid, one `index,family,bandwidth` line per kernel.
        #[arg(long, default_value_t = true)]
        print: bool,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Run {
            config,
            out_dir,
            overrides,
        } => {
            let mut config = ExperimentConfig::from_path(&config)?;
            overrides.apply(&mut config);
            config.validate()?;
            let out_dir = out_dir
                .or_else(|| std::env::var_os("VAW2_OUT_DIR").map(PathBuf::from))
                .or_else(|| config.out_dir.clone())
                .unwrap_or_else(|| PathBuf::from("out"));
            let outcome = run_experiment(&config, &out_dir)?;
            print!("{}", outcome.table.render());
            println!("outputs written to {}", outcome.out_dir.display());
            if !outcome.failures.is_empty() {
                eprintln!("{} dataset(s) failed", outcome.failures.len());
            }
            Ok(outcome.exit_code())
        }
        Command::Ar4 {
            horizon,
            seed,
            noise_std,
            out,
        } => {
            let dataset = generate_ar4(&Ar4Config {
                horizon,
                seed,
                noise_std,
                ..Ar4Config::default()
            })
            .map_err(|e| CliError::Config(e.to_string()))?;
            let mut text = String::from("x1,x2,x3,x4,y\n");
            for t in 0..dataset.len() {
                let row = dataset.row(t);
                use std::fmt::Write as _;
                writeln!(
                    text,
                    "{},{},{},{},{}",
                    row[0],
                    row[1],
                    row[2],
                    row[3],
                    dataset.label(t)
                )
                .expect("string write");
            }
            write_atomic(&out, &text)?;
            println!("wrote {} rounds to {}", dataset.len(), out.display());
            Ok(0)
        }
        Command::Dictionary { print } => {
            if print {
                let specs = build_dictionary(&DictionaryConfig::default())
                    .map_err(|e| CliError::Internal(e.to_string()))?;
                println!("index,family,bandwidth");
                for (j, spec) in specs.iter().enumerate() {
                    println!("{},{},{}", j, spec.family, spec.bandwidth);
                }
            }
            Ok(0)
        }
    }
}
