use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use circle_rds::config::{ConfigError, ExperimentConfig};
use circle_rds::presets::{preset, PRESETS};
use circle_rds::runner::run_with_workers;

/// Seeded experiments on random dynamical systems of the circle.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Override the seed from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    /// Report directory (default: the config's `output.dir`, else `out/<name>`).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a TOML experiment config.
    Run { config: PathBuf },
    /// Run a named preset, or print its config.
    Preset {
        name: String,
        #[arg(long)]
        emit_config: bool,
    },
    /// List the preset names.
    ListPresets,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (config, base_dir) = match &cli.command {
        Command::ListPresets => {
            for (name, description) in PRESETS {
                println!("{name:<18}{description}");
            }
            return ExitCode::SUCCESS;
        }
        Command::Run { config } => match ExperimentConfig::load(config) {
            Ok(c) => (c, config.parent().map(Path::to_path_buf)),
            Err(e) => return config_error(&e),
        },
        Command::Preset { name, emit_config } => match preset(name) {
            Ok(c) if *emit_config => {
                print!("{}", c.to_toml());
                return ExitCode::SUCCESS;
            }
            Ok(c) => (c, None),
            Err(e) => return config_error(&e),
        },
    };
    let mut config = config;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let report = match run_with_workers(&config, base_dir.as_deref(), cli.workers) {
        Ok(r) => r,
        Err(e) => return config_error(&e),
    };
    let dir = report.output_dir(cli.out_dir.as_deref());
    match report.write_to(&dir) {
        Ok(paths) => {
            for p in paths {
                eprintln!("wrote {}", p.display());
            }
        }
        Err(e) => {
            eprintln!("error: cannot write {}: {e}", dir.display());
            return ExitCode::from(2);
        }
    }
    println!("{}", serde_json::json!({ "name": config.name, "status": report.status, "result": report.result }));
    ExitCode::from(report.status.exit_code() as u8)
}

fn config_error(e: &ConfigError) -> ExitCode {
    eprintln!("config error: {e}");
    ExitCode::from(2)
}
