use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use mqcavity_cli::{load_config, run, CliError, Experiment, Overrides};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Switch {
    On,
    Off,
}

/// Multi-cavity two-qubit filter-chain simulations.
#[derive(Debug, Parser)]
#[command(name = "mqcavity", version)]
struct Args {
    /// Experiment to run.
    experiment: Experiment,
    /// Strict JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output path prefix (overrides `output.prefix`).
    #[arg(long)]
    out: Option<String>,
    /// Collapse operators on or off (overrides `losses`).
    #[arg(long)]
    losses: Option<Switch>,
    /// Worker threads for parallel sweeps.
    #[arg(long)]
    threads: Option<usize>,
}

fn main_inner(args: Args) -> Result<(), CliError> {
    if let Some(n) = args.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    }
    let overrides = Overrides {
        experiment: Some(args.experiment),
        out: args.out,
        losses: args.losses.map(|s| matches!(s, Switch::On)),
    };
    let resolved = load_config(&args.config, &overrides)?;
    let (summary, files) = run(&resolved)?;
    for f in &files {
        eprintln!("wrote {}", f.display());
    }
    println!("{summary}");
    Ok(())
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match main_inner(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
