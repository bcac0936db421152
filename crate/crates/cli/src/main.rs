use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use pumpfield_cli::output::OutDir;
use pumpfield_cli::{CliError, Mode, RunConfig};

/// Pumping-field maps, pumped charge and validation runs for the
/// Cooper-pair sluice.
#[derive(Debug, Parser)]
#[command(name = "pumpfield", version)]
struct Args {
    mode: Mode,
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding the config's `output`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads, overriding the config's `threads`.
    #[arg(long)]
    threads: Option<usize>,
}

fn execute(args: &Args) -> Result<(), CliError> {
    let mut config = RunConfig::load(&args.config)?;
    if let Some(out) = &args.out {
        config.output = out.clone();
    }
    if let Some(threads) = args.threads {
        config.threads = threads;
    }
    rayon::ThreadPoolBuilder::new().num_threads(config.threads).build_global()?;
    pumpfield_cli::run(args.mode, &config)
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let record = e.record();
            let text = serde_json::to_string(&record).expect("serializable");
            eprintln!("{text}");
            // best effort: the record also lands next to the outputs
            if let Some(dir) = args.out.clone().or_else(|| RunConfig::load(&args.config).ok().map(|c| c.output)) {
                if let Ok(out) = OutDir::create(&dir) {
                    let _ = out.write_json("error.json", &record);
                }
            }
            ExitCode::from(record.exit_code as u8)
        }
    }
}
