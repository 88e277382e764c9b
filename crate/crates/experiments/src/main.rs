use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use enaqt_experiments::{emit_all, list_presets, preset, run_study, Result, Study};

#[derive(Parser)]
#[command(name = "enaqt", version, about = "Excitation transport sweeps over open qubit networks")]
struct Cli {
    /// Worker threads for the sweep (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Relative integrator tolerance applied to every scenario.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario or study JSON document.
    Run {
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a built-in preset.
    Preset {
        name: String,
        #[arg(long)]
        out: PathBuf,
    },
    ListPresets,
}

fn execute(mut study: Study, tol: Option<f64>, out: &Path) -> Result<()> {
    if let Some(tol) = tol {
        for s in &mut study.scenarios {
            s.integrator.rel_tol = tol;
        }
    }
    let start = Instant::now();
    let result = run_study(&study)?;
    let plot = study.plot.clone().or_else(|| study.scenarios.first().and_then(|s| s.plot.clone()));
    for path in emit_all(&result, plot.as_ref(), out)? {
        println!("{}", path.display());
    }
    eprintln!("{}: {} rows in {:.1}s", result.name, result.rows.len(), start.elapsed().as_secs_f64());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = || -> Result<()> {
        match &cli.command {
            Command::ListPresets => {
                for name in list_presets() {
                    println!("{name}");
                }
                Ok(())
            }
            Command::Run { scenario, out } => execute(Study::load(scenario)?, cli.tol, out),
            Command::Preset { name, out } => execute(preset(name)?, cli.tol, out),
        }
    };
    let outcome = match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(run),
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::FAILURE;
            }
        },
        None => run(),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::FAILURE
        }
    }
}
