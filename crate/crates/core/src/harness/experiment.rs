//! Pipeline stages writing their artifacts into a run directory.

use super::config::RunConfig;
use super::data::{generate_initial_data, GeneratedData};
use super::io::{read_pcf1, runlog_csv, write_pcf1, RunLogRow};
use crate::cascade::{cascade_report, run_cascade, CascadeReport, CascadeRun, Snapshot};
use crate::error::{Error, Result};
use crate::euler::{invariants_report, FlowMapState, SolverState};
use crate::fourier::{forward, inverse};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub const SNAPSHOT_DIR: &str = "snapshots";

fn stage<T>(name: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| e.in_stage(name))
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn snapshot_paths(dir: &Path, k: usize) -> [PathBuf; 3] {
    ["omega", "disp1", "disp2"].map(|f| dir.join(format!("{f}_{k:04}.pcf1")))
}

/// Writes `omega0.pcf1`, `tail.csv` and `config.txt`.
pub fn gen_data_stage(cfg: &RunConfig) -> Result<GeneratedData> {
    stage("config", cfg.validate())?;
    let out = &cfg.outdir;
    stage("io", std::fs::create_dir_all(out).map_err(Error::from))?;
    let data = stage("gen-data", generate_initial_data(&cfg.data_spec(), cfg.grid()?))?;
    stage("io", write(&out.join("config.txt"), &cfg.to_text()))?;
    stage("io", write_pcf1(&out.join("omega0.pcf1"), &inverse(&data.omega)))?;
    stage("io", write(&out.join("tail.csv"), &data.ctx.reference.to_csv()))?;
    Ok(data)
}

/// Evolves the data, streaming snapshots to `snapshots/` and writing `runlog.csv`.
pub fn evolve_stage(cfg: &RunConfig, data: &GeneratedData) -> Result<CascadeRun> {
    let dir = cfg.outdir.join(SNAPSHOT_DIR);
    if cfg.write_snapshots {
        stage("io", std::fs::create_dir_all(&dir).map_err(Error::from))?;
    }
    let mut index = String::from("k,t\n");
    let mut k = 0;
    let run = stage(
        "evolve",
        run_cascade(&data.omega, &cfg.cascade_settings(), Some(&data.ctx), |s: &Snapshot| {
            if cfg.write_snapshots {
                let [w, d1, d2] = snapshot_paths(&dir, k);
                write_pcf1(&w, &inverse(&s.omega))?;
                write_pcf1(&d1, &s.flow.displacement()[0])?;
                write_pcf1(&d2, &s.flow.displacement()[1])?;
                let _ = writeln!(index, "{k},{}", s.t);
            }
            k += 1;
            Ok(())
        }),
    )?;
    if cfg.write_snapshots {
        stage("io", write(&dir.join("index.csv"), &index))?;
    }
    let rows: Vec<RunLogRow> = run
        .snapshots
        .iter()
        .map(|s| RunLogRow { invariants: s.invariants.clone(), det_drift: s.flow.det_drift() })
        .collect();
    stage("io", write(&cfg.outdir.join("runlog.csv"), &runlog_csv(&rows)))?;
    Ok(run)
}

/// Rebuilds a run from the snapshots of a finished `evolve` stage.
pub fn load_run(cfg: &RunConfig) -> Result<CascadeRun> {
    let dir = cfg.outdir.join(SNAPSHOT_DIR);
    let index = std::fs::read_to_string(dir.join("index.csv"))
        .map_err(|e| Error::Io(format!("{}: {e}", dir.join("index.csv").display())))?;
    let settings = cfg.cascade_settings();
    let omega0 = forward(&read_pcf1(&cfg.outdir.join("omega0.pcf1"))?);
    let start = build_state(cfg, omega0)?;
    let ctx = crate::dyadic::AdaptedNormContext::for_field(start.omega());
    let mut snapshots = Vec::new();
    for line in index.lines().skip(1) {
        let (k, t) = line.split_once(',').ok_or_else(|| Error::Format(format!("bad index line `{line}`")))?;
        let k: usize = k.parse().map_err(|_| Error::Format(format!("bad snapshot index `{k}`")))?;
        let t: f64 = t.parse().map_err(|_| Error::Format(format!("bad snapshot time `{t}`")))?;
        let [w, d1, d2] = snapshot_paths(&dir, k);
        let state = build_state(cfg, forward(&read_pcf1(&w)?))?.at_time(t);
        let flow = FlowMapState::from_displacement([read_pcf1(&d1)?, read_pcf1(&d2)?], t)?;
        snapshots.push(Snapshot {
            t,
            velocity: state.velocity()?,
            invariants: invariants_report(&state, &[], Some(&ctx))?,
            omega: state.omega().clone(),
            flow,
        });
    }
    Ok(CascadeRun { omega0: start.omega().clone(), settings, snapshots })
}

fn build_state(cfg: &RunConfig, omega: crate::fourier::SpectralField) -> Result<SolverState> {
    if cfg.alpha == 2.0 {
        SolverState::euler(omega, cfg.dealias)
    } else {
        SolverState::gsqg(omega, cfg.alpha, cfg.dealias)
    }
}

/// Writes `pairing.csv`, `verdicts.txt`, `lyapunov.csv` and `growth.csv`.
pub fn diagnose_stage(cfg: &RunConfig, run: &CascadeRun) -> Result<CascadeReport> {
    let opts = stage("config", cfg.report_options())?;
    let report = stage("diagnose", cascade_report(run, &opts))?;
    let out = &cfg.outdir;
    stage("io", write(&out.join("pairing.csv"), &report.series.to_csv()))?;
    stage("io", write(&out.join("verdicts.txt"), &report.verdicts.to_text()))?;
    let mut lyap = String::from("t,value\n");
    for (t, v) in &report.lyapunov {
        let _ = writeln!(lyap, "{t},{v}");
    }
    stage("io", write(&out.join("lyapunov.csv"), &lyap))?;
    let g = &report.growth;
    let mut growth = String::from("t,lhs,rhs,ratio\n");
    for k in 0..g.t.len() {
        let _ = writeln!(growth, "{},{},{},{}", g.t[k], g.lhs[k], g.rhs[k], g.ratio[k]);
    }
    stage("io", write(&out.join("growth.csv"), &growth))?;
    Ok(report)
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub data: GeneratedData,
    pub run: CascadeRun,
    pub report: CascadeReport,
}

impl ExperimentOutcome {
    pub fn passed(&self) -> bool {
        self.report.verdicts.passed()
    }
}

/// All stages in sequence; deterministic given the config.
pub fn run_experiment(cfg: &RunConfig) -> Result<ExperimentOutcome> {
    let data = gen_data_stage(cfg)?;
    let run = evolve_stage(cfg, &data)?;
    let report = diagnose_stage(cfg, &run)?;
    Ok(ExperimentOutcome { data, run, report })
}
