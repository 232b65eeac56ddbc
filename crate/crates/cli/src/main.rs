//! flatlab: run verification scenarios for holonomy Jacobi fields and flats.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use flatlab_core::scenario::{self, CheckKind, ScenarioConfig};

#[derive(Parser)]
#[command(name = "flatlab", version, about = "Verification scenarios for Riemannian submersions of compact Lie groups")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and emit a JSON report
    Run {
        /// Scenario file (TOML)
        #[arg(long)]
        config: Option<PathBuf>,

        /// Built-in preset to run instead of a scenario file
        #[arg(long, conflicts_with = "config")]
        preset: Option<String>,

        /// Output directory for report.json and CSV series
        #[arg(long)]
        out: Option<PathBuf>,

        /// Override the scenario seed
        #[arg(long)]
        seed: Option<u64>,

        /// Run only these checks (repeatable): holonomy, flats, boundedness, omega, example-e, all
        #[arg(long = "check")]
        checks: Vec<String>,

        /// Override the horizon for route comparison and orthogonality
        #[arg(long)]
        t_max: Option<f64>,

        /// Suppress the per-check summary
        #[arg(long)]
        quiet: bool,
    },

    /// List built-in biquotient presets
    ListPresets {
        /// Print the catalog as JSON
        #[arg(long)]
        json: bool,
    },

    /// Print the JSON schema of run reports
    ReportSchema,
}

const EXIT_FAIL: u8 = 1;
const EXIT_CONFIG: u8 = 2;

fn build_config(
    config: Option<PathBuf>,
    preset: Option<String>,
    seed: Option<u64>,
    checks: Vec<String>,
    t_max: Option<f64>,
) -> flatlab_core::Result<ScenarioConfig> {
    let mut cfg = match (config, preset) {
        (Some(path), _) => ScenarioConfig::load(&path)?,
        (None, Some(name)) => ScenarioConfig::for_preset(&name),
        (None, None) => {
            return Err(flatlab_core::Error::Config("give --config PATH or --preset NAME".into()));
        }
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if !checks.is_empty() {
        cfg.checks = checks
            .iter()
            .map(|c| CheckKind::parse(c))
            .collect::<flatlab_core::Result<Vec<_>>>()?;
    }
    if let Some(t) = t_max {
        cfg.params.t_max = t;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run_command(
    config: Option<PathBuf>,
    preset: Option<String>,
    out: Option<PathBuf>,
    seed: Option<u64>,
    checks: Vec<String>,
    t_max: Option<f64>,
    quiet: bool,
) -> Result<ExitCode> {
    let cfg = match build_config(config, preset, seed, checks, t_max) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return Ok(ExitCode::from(EXIT_CONFIG));
        }
    };
    let output = match scenario::run(&cfg) {
        Ok(o) => o,
        Err(flatlab_core::Error::Config(msg)) => {
            eprintln!("config error: {msg}");
            return Ok(ExitCode::from(EXIT_CONFIG));
        }
        Err(e) => return Err(e).context("scenario failed"),
    };

    let dir = out.or_else(|| cfg.output.dir.clone());
    match &dir {
        Some(d) => {
            let written = scenario::write_outputs(d, &output, cfg.output.csv)
                .with_context(|| format!("writing outputs to {}", d.display()))?;
            if !quiet {
                for c in &output.report.checks {
                    println!("{} {}", if c.passed { "PASS" } else { "FAIL" }, c.id);
                }
                for w in written {
                    println!("wrote {}", w.display());
                }
            }
        }
        None => {
            if !quiet {
                println!("{}", output.report.to_json()?);
            }
        }
    }
    Ok(if output.report.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAIL)
    })
}

fn list_presets(json: bool) -> Result<()> {
    let entries = scenario::list_presets();
    if json {
        println!("{}", serde_json::to_string_pretty(&entries)?);
        return Ok(());
    }
    for e in entries {
        println!("{}", e.name);
        println!("  group: {}", e.group);
        println!("  {}", e.description);
        println!("  vertical dim {}, horizontal dim {}", e.vertical_dim, e.horizontal_dim);
        for (i, g) in e.spec.generators.iter().enumerate() {
            println!("  generator {i}: p = {:?}, q = {:?}", g.p, g.q);
        }
        for p in &e.properties {
            println!("  - {p}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            preset,
            out,
            seed,
            checks,
            t_max,
            quiet,
        } => run_command(config, preset, out, seed, checks, t_max, quiet),
        Command::ListPresets { json } => list_presets(json).map(|_| ExitCode::SUCCESS),
        Command::ReportSchema => serde_json::to_string_pretty(&scenario::report_schema())
            .map(|s| {
                println!("{s}");
                ExitCode::SUCCESS
            })
            .map_err(Into::into),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_FAIL)
        }
    }
}
