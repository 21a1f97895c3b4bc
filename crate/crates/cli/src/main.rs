use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mvac::io::{read_snapshot_file, render_ppm, RenderStyle};
use mvac_cli::analyze::{analyze_directory, AnalyzeToggles};
use mvac_cli::config::RunConfig;
use mvac_cli::runner::{init_from_config, run_from_config, RunError};

/// Numerical laboratory for the matrix-valued Allen-Cahn equation on the
/// periodic torus.
#[derive(Parser)]
#[command(name = "mvac", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Suppress progress output.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the configured initial condition and write it as a snapshot.
    Init {
        /// Path to the JSON run configuration.
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides `output_dir` in the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seed for the random generator (overrides `seed` in the config).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the configured scheme and write snapshots, metrics and a
    /// manifest.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Analyze a directory of snapshots into metrics / interface / velocity
    /// tables.
    Analyze {
        /// Directory containing `*.snap` files.
        #[arg(long)]
        snapshots: PathBuf,
        /// Output directory for the CSV tables (defaults to the snapshot
        /// directory).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Side-phase sampling offset (defaults to max(3h, 3 epsilon)).
        #[arg(long)]
        delta: Option<f64>,
        /// Skip interface extraction.
        #[arg(long)]
        no_interface: bool,
        /// Skip winding-index computation.
        #[arg(long)]
        no_index: bool,
        /// Skip energy computation.
        #[arg(long)]
        no_energy: bool,
    },
    /// Render one snapshot as a PPM raster.
    Render {
        #[arg(long)]
        snapshot: PathBuf,
        /// Output PPM path.
        #[arg(long)]
        out: PathBuf,
        /// Square raster size in pixels.
        #[arg(long, default_value_t = 512)]
        size: usize,
        /// Grid cells per direction glyph (0 disables glyphs).
        #[arg(long, default_value_t = 16)]
        stride: usize,
    },
}

fn emit_error(kind: &str, message: &str, field: Option<&str>) {
    let doc = serde_json::json!({
        "error": message,
        "kind": kind,
        "field": field,
    });
    eprintln!("{doc}");
}

fn load_config(
    path: &PathBuf,
    out: Option<PathBuf>,
    seed: Option<u64>,
) -> Result<RunConfig, mvac_cli::ConfigError> {
    let mut cfg = RunConfig::from_file(path)?;
    if let Some(dir) = out {
        cfg.output_dir = Some(dir);
    }
    if let Some(seed) = seed {
        cfg.seed = Some(seed);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn dispatch(cli: Cli) -> ExitCode {
    match cli.command {
        Command::Init { config, out, seed } => {
            let cfg = match load_config(&config, out, seed) {
                Ok(c) => c,
                Err(e) => {
                    emit_error("config", &e.message, Some(&e.field));
                    return ExitCode::from(2);
                }
            };
            run_result(init_from_config(&cfg, cli.quiet))
        }
        Command::Run { config, out, seed } => {
            let cfg = match load_config(&config, out, seed) {
                Ok(c) => c,
                Err(e) => {
                    emit_error("config", &e.message, Some(&e.field));
                    return ExitCode::from(2);
                }
            };
            run_result(run_from_config(&cfg, cli.quiet))
        }
        Command::Analyze { snapshots, out, delta, no_interface, no_index, no_energy } => {
            let toggles = AnalyzeToggles {
                interface: !no_interface,
                index: !no_index,
                energy: !no_energy,
            };
            let out_dir = out.unwrap_or_else(|| snapshots.clone());
            match analyze_directory(&snapshots, &out_dir, toggles, delta) {
                Ok(()) => {
                    if !cli.quiet {
                        println!("analysis tables written to {}", out_dir.display());
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    emit_error("runtime", &e.to_string(), None);
                    ExitCode::from(1)
                }
            }
        }
        Command::Render { snapshot, out, size, stride } => {
            let result = read_snapshot_file(&snapshot)
                .map_err(|e| e.to_string())
                .and_then(|snap| {
                    render_ppm(&snap.field, &RenderStyle { raster_size: size, arrow_stride: stride })
                        .map_err(|e| e.to_string())
                })
                .and_then(|ppm| std::fs::write(&out, ppm).map_err(|e| e.to_string()));
            match result {
                Ok(()) => {
                    if !cli.quiet {
                        println!("raster written to {}", out.display());
                    }
                    ExitCode::SUCCESS
                }
                Err(message) => {
                    emit_error("runtime", &message, None);
                    ExitCode::from(1)
                }
            }
        }
    }
}

fn run_result(result: Result<mvac_cli::RunOutputs, RunError>) -> ExitCode {
    match result {
        Ok(outputs) => {
            if let Some((max_iters, last_increment)) = outputs.not_converged {
                emit_error(
                    "runtime",
                    &format!(
                        "no convergence within {max_iters} iterations (last increment {last_increment:e})"
                    ),
                    None,
                );
                return ExitCode::from(1);
            }
            ExitCode::SUCCESS
        }
        Err(RunError::Config(e)) => {
            emit_error("config", &e.message, Some(&e.field));
            ExitCode::from(2)
        }
        Err(e) => {
            emit_error("runtime", &e.to_string(), None);
            ExitCode::from(1)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    dispatch(cli)
}
