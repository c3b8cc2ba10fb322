use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use flatlyap_core::harness::{self, catalog, hypergeometric_slots, load_config, EXPERIMENTS, OUTPUT_ROOT_ENV};

#[derive(Parser)]
#[command(name = "flatlyap", version, about = "Lyapunov spectra of flat bundles over hyperbolic surfaces")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// List the bundled presets.
    List,
    /// Parse and check a config without running anything.
    Validate { config: PathBuf },
    /// Run an experiment: spectrum, degree_report, fiber_measure, diagnostics or all.
    #[command(after_help = format!("The output directory is resolved relative to ${OUTPUT_ROOT_ENV} when set."))]
    Run { config: PathBuf, experiment: String },
    /// Re-simulate one trajectory from a run log and compare.
    Replay { runlog: PathBuf, trajectory_id: usize },
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn real_main() -> Result<ExitCode> {
    match Cli::parse().cmd {
        Cmd::List => {
            for p in catalog() {
                let note = if p.needs_parameters { " (needs parameters)" } else { "" };
                println!("{:<20} {:<26} rank {:<6} {}{note}", p.name, p.surface, p.rank, p.description);
            }
            println!();
            println!("hypergeometric_sp4 slots (set representation.case plus alpha/beta):");
            for s in hypergeometric_slots() {
                let state = match (&s.alpha, &s.label) {
                    (Some(_), Some(l)) => format!("filled, {l}"),
                    (Some(_), None) => "filled".into(),
                    (None, _) => "empty".into(),
                };
                println!("  {} {state}", s.name);
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Validate { config } => {
            let loaded = load_config(&config)?;
            let preset = loaded.config.build().context("building the representation")?;
            println!("ok: {}", config.display());
            println!("hash {}", loaded.config.hash());
            println!("preset {} on {}, rank {}", preset.name, preset.surface.name, preset.rep.n);
            for w in &preset.rep.warnings {
                println!("warning: {w}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Run { config, experiment } => {
            if !EXPERIMENTS.contains(&experiment.as_str()) {
                anyhow::bail!("unknown experiment {experiment:?}; known: {}", EXPERIMENTS.join(", "));
            }
            let loaded = load_config(&config)?;
            let record = harness::run(&loaded, &experiment)
                .with_context(|| format!("{experiment} failed; partial outputs in {}", loaded.config.output_dir().display()))?;
            let summary = std::fs::read_to_string(record.dir.join("summary.txt"))?;
            print!("{summary}");
            for (stage, secs) in &record.timings {
                eprintln!("timing {stage}: {secs:.3}s");
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Replay { runlog, trajectory_id } => {
            let out = harness::replay(&runlog, trajectory_id)?;
            println!("{}", serde_json::to_string_pretty(&out)?);
            if out.matches {
                eprintln!("trajectory {trajectory_id} reproduced exactly");
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!("trajectory {trajectory_id} differs from the log");
                Ok(ExitCode::from(1))
            }
        }
    }
}
