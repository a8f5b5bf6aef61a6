use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use roadcongest::pipeline::{Pipeline, PipelineConfig, Stage};
use roadcongest::Result;

/// Recurrent congestion discovery pipeline.
///
/// Log verbosity follows the ROADCONGEST_LOG environment variable
/// (env_logger syntax, default `info`).
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML configuration file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dotted `key=value` override, e.g. `synth.grid.rows=6`. Repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one stage: synth, ingest, detect, cluster, merge, discover, track, eval or all.
    Run {
        #[arg(value_parser = parse_stage)]
        stage: Stage,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Print the effective configuration as TOML.
    PrintConfig {
        #[command(flatten)]
        config: ConfigArgs,
    },
}

fn parse_stage(s: &str) -> std::result::Result<Stage, String> {
    s.parse().map_err(|e: roadcongest::Error| e.to_string())
}

fn load(args: &ConfigArgs) -> Result<PipelineConfig> {
    PipelineConfig::load(args.config.as_deref(), &args.overrides)
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Run { stage, config } => {
            let pipeline = Pipeline::new(load(&config)?)?;
            for report in pipeline.run(stage)? {
                println!(
                    "{:<9} {} outputs, manifest {} ({})",
                    report.stage,
                    report.outputs.len(),
                    report.manifest.display(),
                    &report.manifest_sha256[..16]
                );
            }
            Ok(())
        }
        Command::PrintConfig { config } => {
            print!("{}", load(&config)?.to_toml());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("ROADCONGEST_LOG", "info")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
