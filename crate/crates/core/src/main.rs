use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use torus_cascade::harness::{
    diagnose_stage, evolve_stage, gen_data_stage, load_run, run_experiment, verify_with, RunConfig, SUITES,
};
use torus_cascade::{Error, Result};

#[derive(Parser)]
#[command(name = "torus-cascade", version, about = "Small-scale creation diagnostics for 2D Euler and gSQG on the torus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` config applied on top of the preset.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Run directory, overrides `io.outdir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides `data.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, default_value = "cascade-default")]
    preset: String,
}

#[derive(Subcommand)]
enum Command {
    /// Generate initial vorticity into the run directory.
    GenData,
    /// Generate data and evolve it, writing snapshots and the run log.
    Evolve,
    /// Recompute pairings and verdicts from stored snapshots.
    Diagnose,
    /// Run property suites; all of them when none is named.
    Verify { suites: Vec<String> },
    /// Full pipeline: data, evolution and diagnostics.
    Report,
}

fn load_config(c: &Common) -> Result<RunConfig> {
    let mut cfg = RunConfig::preset(&c.preset)?;
    if let Some(path) = &c.config {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        cfg = cfg.apply_text(&text)?;
    }
    if let Some(out) = &c.out {
        cfg.outdir = out.clone();
    }
    if let Some(seed) = c.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<bool> {
    let cfg = load_config(&cli.common)?;
    match cli.command {
        Command::GenData => {
            let data = gen_data_stage(&cfg)?;
            if let Some(fit) = data.tail_exponent {
                println!("tail_exponent = {fit}");
            }
            println!("wrote {}", cfg.outdir.display());
            Ok(true)
        }
        Command::Evolve => {
            let data = gen_data_stage(&cfg)?;
            let run = evolve_stage(&cfg, &data)?;
            println!("{} snapshots in {}", run.snapshots.len(), cfg.outdir.display());
            Ok(true)
        }
        Command::Diagnose => {
            let run = load_run(&cfg).map_err(|e| e.in_stage("io"))?;
            let report = diagnose_stage(&cfg, &run)?;
            print!("{}", report.verdicts.to_text());
            Ok(report.verdicts.passed())
        }
        Command::Verify { suites } => {
            let names: Vec<String> = if suites.is_empty() { SUITES.iter().map(|s| s.to_string()).collect() } else { suites };
            let mut ok = true;
            for name in &names {
                let report = verify_with(name, &cfg)?;
                let text = report.to_text();
                print!("{text}");
                if cli.common.out.is_some() {
                    std::fs::create_dir_all(&cfg.outdir)?;
                    std::fs::write(cfg.outdir.join(format!("verify-{name}.txt")), &text)?;
                }
                ok &= report.passed();
            }
            Ok(ok)
        }
        Command::Report => {
            let outcome = run_experiment(&cfg)?;
            print!("{}", outcome.report.verdicts.to_text());
            println!("passed = {}", outcome.passed());
            Ok(outcome.passed())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
