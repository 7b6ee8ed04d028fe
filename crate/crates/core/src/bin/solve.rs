use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use phi_periodic::pipeline::{exit_code, parse_config, run, Mode, Overrides, RunReport};
use phi_periodic::{Result, SolverError};

/// Find and verify periodic solutions of a singular phi-Laplacian equation.
#[derive(Parser, Debug)]
#[command(name = "solve", version)]
struct Cli {
    /// TOML or JSON run configuration. Optional when --preset is given.
    config: Option<PathBuf>,
    /// auto, minimize, mountainpass or conditions-only.
    #[arg(long)]
    mode: Option<String>,
    /// Named nonlinearity; replaces any expression in the configuration.
    #[arg(long)]
    preset: Option<String>,
    /// Output directory for report.json, solution.csv and family.csv.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of grid cells N.
    #[arg(long = "grid-n")]
    grid_n: Option<usize>,
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("SOLVER_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.parse().map_err(|_| {
        SolverError::Config(format!(
            "SOLVER_THREADS = `{raw}` is not a positive integer"
        ))
    })?;
    if n == 0 {
        return Err(SolverError::Config(
            "SOLVER_THREADS must be positive".into(),
        ));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| SolverError::Config(e.to_string()))
}

fn main_inner(cli: Cli) -> Result<RunReport> {
    configure_threads()?;
    let text = match &cli.config {
        Some(path) => std::fs::read_to_string(path)
            .map_err(|e| SolverError::Config(format!("{}: {e}", path.display())))?,
        None if cli.preset.is_some() => String::new(),
        None => {
            return Err(SolverError::Config(
                "a config file or --preset is required".into(),
            ))
        }
    };
    let mut config = parse_config(&text)?;
    let mode = cli.mode.as_deref().map(str::parse::<Mode>).transpose()?;
    config.apply(&Overrides {
        mode,
        preset: cli.preset,
        output_dir: cli.out,
        seed: cli.seed,
        grid_n: cli.grid_n,
    })?;
    run(&config)
}

fn main() -> ExitCode {
    let outcome = main_inner(Cli::parse());
    match &outcome {
        Ok(r) => {
            let branch = r
                .alternative
                .as_ref()
                .map(|a| format!("{:?}", a.branch))
                .unwrap_or_else(|| "-".into());
            println!(
                "status: {:?}  branch: {branch}  output: {}",
                r.status,
                r.config.output_dir.display()
            );
            if let Some(e) = &r.error {
                eprintln!("error: {e}");
            }
        }
        Err(e) => eprintln!("error: {e}"),
    }
    ExitCode::from(exit_code(&outcome) as u8)
}
