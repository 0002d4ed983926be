//! Flat `key = value` run configuration and named presets.

use super::data::{DataKind, DataSpec};
use crate::cascade::{CascadeSettings, ChiCutoff, LyapunovSetup, ReportOptions, TrustLimits};
use crate::error::{Error, Result};
use crate::fourier::{Grid2D, InterpOptions};
use crate::paracalc::AdmissibleCutoff;
use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::path::PathBuf;

pub const PRESETS: [&str; 3] = ["cascade-default", "steady-shear", "quick"];

const KEYS: [&str; 28] = [
    "grid.n",
    "grid.L",
    "solver.dt",
    "solver.t_end",
    "solver.alpha",
    "solver.dealias",
    "solver.flow_every",
    "data.kind",
    "data.s",
    "data.seed",
    "data.amplitude",
    "data.shear",
    "data.band",
    "data.path",
    "para.B",
    "para.b",
    "para.N0",
    "para.n_theta",
    "para.oversample",
    "diag.eps_min_exp",
    "diag.eps_max_exp",
    "diag.chi_inner",
    "diag.chi_outer",
    "diag.delta",
    "diag.max_truncation",
    "io.outdir",
    "io.snapshot_every",
    "io.write_snapshots",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub n: usize,
    pub length: f64,
    pub dt: f64,
    pub t_end: f64,
    pub alpha: f64,
    pub dealias: bool,
    /// Solver steps per flow-map step.
    pub flow_every: usize,
    pub data_kind: String,
    pub s: f64,
    pub seed: u64,
    pub amplitude: f64,
    pub shear: f64,
    pub band: f64,
    pub data_path: Option<PathBuf>,
    pub big_b: f64,
    pub small_b: f64,
    /// `None` selects the smallest admissible offset for `B`.
    pub n0: Option<usize>,
    pub n_theta: usize,
    pub oversample: f64,
    /// Diagnostic scales `eps = 2^-eps_min_exp .. 2^-eps_max_exp`.
    pub eps_min_exp: u32,
    pub eps_max_exp: u32,
    pub chi_inner: f64,
    pub chi_outer: f64,
    pub delta: f64,
    pub max_truncation: f64,
    pub outdir: PathBuf,
    /// Time between recorded snapshots.
    pub snapshot_every: f64,
    pub write_snapshots: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n: 256,
            length: TAU,
            dt: 1e-3,
            t_end: 2.0,
            alpha: 2.0,
            dealias: true,
            flow_every: 10,
            data_kind: "shear_plus_powerlaw".into(),
            s: 2.5,
            seed: 7,
            amplitude: 0.2,
            shear: 1.0,
            band: 8.0,
            data_path: None,
            big_b: 4.0,
            small_b: 1.0,
            n0: None,
            n_theta: 64,
            oversample: 2.0,
            eps_min_exp: 3,
            eps_max_exp: 6,
            chi_inner: 1.0,
            chi_outer: 2.0,
            delta: 0.1,
            max_truncation: 1e-6,
            outdir: PathBuf::from("runs/cascade-default"),
            snapshot_every: 0.05,
            write_snapshots: true,
        }
    }
}

fn bad(key: &str, message: impl Into<String>) -> Error {
    Error::Config { key: key.into(), message: message.into() }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| bad(key, format!("cannot parse `{v}`")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(bad(key, format!("expected true or false, got `{v}`"))),
    }
}

fn check(ok: bool, key: &str, message: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(bad(key, message()))
    }
}

fn multiple_of(total: f64, step: f64) -> Option<usize> {
    let k = (total / step).round();
    (k >= 1.0 && (k * step - total).abs() <= 1e-9 * total.abs().max(step)).then_some(k as usize)
}

impl RunConfig {
    pub fn preset(name: &str) -> Result<Self> {
        let base = Self::default();
        match name {
            "cascade-default" => Ok(base),
            "steady-shear" => Ok(Self {
                n: 128,
                t_end: 1.0,
                amplitude: 0.0,
                eps_min_exp: 3,
                eps_max_exp: 5,
                outdir: PathBuf::from("runs/steady-shear"),
                ..base
            }),
            "quick" => Ok(Self {
                n: 128,
                t_end: 0.5,
                eps_min_exp: 3,
                eps_max_exp: 5,
                outdir: PathBuf::from("runs/quick"),
                ..base
            }),
            other => Err(bad("preset", format!("unknown preset `{other}`, expected one of {}", PRESETS.join(", ")))),
        }
    }

    /// Applies `key = value` lines on top of `self`. `#` starts a comment.
    pub fn apply_text(mut self, text: &str) -> Result<Self> {
        let mut seen = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad(line, format!("line {} is not `key = value`", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(bad(key, "unknown key"));
            }
            if seen.insert(key.to_string(), lineno + 1).is_some() {
                return Err(bad(key, format!("duplicate key on line {}", lineno + 1)));
            }
            self.set(key, value)?;
        }
        Ok(self)
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "grid.n" => self.n = parse_num(key, v)?,
            "grid.L" => self.length = parse_num(key, v)?,
            "solver.dt" => self.dt = parse_num(key, v)?,
            "solver.t_end" => self.t_end = parse_num(key, v)?,
            "solver.alpha" => self.alpha = parse_num(key, v)?,
            "solver.dealias" => self.dealias = parse_bool(key, v)?,
            "solver.flow_every" => self.flow_every = parse_num(key, v)?,
            "data.kind" => self.data_kind = v.to_string(),
            "data.s" => self.s = parse_num(key, v)?,
            "data.seed" => self.seed = parse_num(key, v)?,
            "data.amplitude" => self.amplitude = parse_num(key, v)?,
            "data.shear" => self.shear = parse_num(key, v)?,
            "data.band" => self.band = parse_num(key, v)?,
            "data.path" => self.data_path = Some(PathBuf::from(v)),
            "para.B" => self.big_b = parse_num(key, v)?,
            "para.b" => self.small_b = parse_num(key, v)?,
            "para.N0" => self.n0 = if v == "auto" { None } else { Some(parse_num(key, v)?) },
            "para.n_theta" => self.n_theta = parse_num(key, v)?,
            "para.oversample" => self.oversample = parse_num(key, v)?,
            "diag.eps_min_exp" => self.eps_min_exp = parse_num(key, v)?,
            "diag.eps_max_exp" => self.eps_max_exp = parse_num(key, v)?,
            "diag.chi_inner" => self.chi_inner = parse_num(key, v)?,
            "diag.chi_outer" => self.chi_outer = parse_num(key, v)?,
            "diag.delta" => self.delta = parse_num(key, v)?,
            "diag.max_truncation" => self.max_truncation = parse_num(key, v)?,
            "io.outdir" => self.outdir = PathBuf::from(v),
            "io.snapshot_every" => self.snapshot_every = parse_num(key, v)?,
            "io.write_snapshots" => self.write_snapshots = parse_bool(key, v)?,
            _ => return Err(bad(key, "unknown key")),
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg = Self::default().apply_text(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        check(self.n.is_power_of_two() && self.n >= 16, "grid.n", || format!("{} must be a power of two >= 16", self.n))?;
        check(self.length > 0.0 && self.length.is_finite(), "grid.L", || format!("{} must be positive", self.length))?;
        check(self.dt > 0.0 && self.dt.is_finite(), "solver.dt", || format!("{} must be positive", self.dt))?;
        check(self.t_end > 0.0 && self.t_end.is_finite(), "solver.t_end", || format!("{} must be positive", self.t_end))?;
        check(self.alpha > 1.0 && self.alpha <= 2.0, "solver.alpha", || format!("{} must lie in (1, 2]", self.alpha))?;
        check(self.flow_every >= 2 && self.flow_every.is_multiple_of(2), "solver.flow_every", || {
            format!("{} must be even and at least 2", self.flow_every)
        })?;
        let flow_dt = self.dt * self.flow_every as f64;
        check(multiple_of(self.t_end, flow_dt).is_some(), "solver.t_end", || {
            format!("{} is not a whole number of flow steps of {flow_dt}", self.t_end)
        })?;
        match self.data_kind.as_str() {
            "powerlaw" | "bandlimited" => {
                check(self.amplitude > 0.0 && self.amplitude.is_finite(), "data.amplitude", || {
                    format!("{} must be positive", self.amplitude)
                })?;
            }
            "shear_plus_powerlaw" => {
                check(self.amplitude >= 0.0 && self.amplitude.is_finite(), "data.amplitude", || {
                    format!("{} must be nonnegative", self.amplitude)
                })?;
                check(self.shear.is_finite(), "data.shear", || format!("{} must be finite", self.shear))?;
            }
            "file" => check(self.data_path.is_some(), "data.path", || "required when data.kind = file".into())?,
            other => {
                return Err(bad(
                    "data.kind",
                    format!("`{other}` is not one of powerlaw, shear_plus_powerlaw, bandlimited, file"),
                ))
            }
        }
        if self.data_kind != "file" {
            check(self.s > 1.0 && self.s <= 4.0, "data.s", || format!("{} must lie in (1, 4]", self.s))?;
        }
        if self.data_kind == "bandlimited" {
            let disk = (self.n / 3) as f64;
            check(self.band >= 1.0 && self.band <= disk, "data.band", || format!("{} must lie in [1, {disk}]", self.band))?;
        }
        check(self.big_b > 1.0 && self.big_b.is_finite(), "para.B", || format!("{} must exceed 1", self.big_b))?;
        check(self.small_b > 0.0 && self.small_b.is_finite(), "para.b", || format!("{} must be positive", self.small_b))?;
        if let Some(n0) = self.n0 {
            let min = AdmissibleCutoff::min_offset(self.big_b);
            check(n0 >= min, "para.N0", || format!("{n0} is below {min} required by B = {}", self.big_b))?;
        }
        check([8, 16, 32, 64].contains(&self.n_theta), "para.n_theta", || {
            format!("{} must be one of 8, 16, 32, 64", self.n_theta)
        })?;
        check(self.oversample >= 2.0 && self.oversample <= 8.0, "para.oversample", || {
            format!("{} must lie in [2, 8]", self.oversample)
        })?;
        check(self.eps_min_exp >= 1, "diag.eps_min_exp", || "must be at least 1".into())?;
        check(self.eps_max_exp >= self.eps_min_exp + 2, "diag.eps_max_exp", || {
            format!("{} must be at least diag.eps_min_exp + 2 for three octaves", self.eps_max_exp)
        })?;
        let finest = 2f64.powi(self.eps_max_exp as i32);
        check(finest < (self.n / 3) as f64, "diag.eps_max_exp", || {
            format!("shell 2^{} reaches the dealiasing band n/3 = {}", self.eps_max_exp, self.n / 3)
        })?;
        check(self.chi_inner >= 1.0 && self.chi_inner.is_finite(), "diag.chi_inner", || {
            format!("{} must be at least 1", self.chi_inner)
        })?;
        check(self.chi_outer > self.chi_inner && self.chi_outer.is_finite(), "diag.chi_outer", || {
            format!("{} must exceed diag.chi_inner = {}", self.chi_outer, self.chi_inner)
        })?;
        if let Ok(cutoff) = self.cutoff() {
            // the first paraproduct block starts at radius 2^(N0 - 1)
            let reach = self.chi_outer * 2f64.powi(self.eps_min_exp as i32);
            let first = 2f64.powi(cutoff.n0() as i32 - 1);
            check(reach > first, "diag.eps_min_exp", || {
                format!("cutoff window below radius {reach} misses the paraproduct blocks starting at {first}")
            })?;
        }
        check(self.delta >= 0.0 && self.delta < 1.0, "diag.delta", || format!("{} must lie in [0, 1)", self.delta))?;
        check(self.max_truncation > 0.0, "diag.max_truncation", || format!("{} must be positive", self.max_truncation))?;
        check(!self.outdir.as_os_str().is_empty(), "io.outdir", || "must not be empty".into())?;
        check(multiple_of(self.snapshot_every, flow_dt).is_some(), "io.snapshot_every", || {
            format!("{} is not a whole number of flow steps of {flow_dt}", self.snapshot_every)
        })?;
        check(self.snapshot_every <= 0.1 + 1e-12, "io.snapshot_every", || {
            format!("{} gives fewer than 10 snapshots per unit time", self.snapshot_every)
        })?;
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid2D> {
        Grid2D::new(self.n, self.length)
    }

    pub fn data_spec(&self) -> DataSpec {
        let kind = match self.data_kind.as_str() {
            "shear_plus_powerlaw" => DataKind::ShearPlusPowerLaw { shear: self.shear },
            "bandlimited" => DataKind::BandLimited { band: self.band },
            "file" => DataKind::File(self.data_path.clone().unwrap_or_default()),
            _ => DataKind::PowerLaw,
        };
        DataSpec { kind, s: self.s, seed: self.seed, amplitude: self.amplitude }
    }

    pub fn interp(&self) -> InterpOptions {
        InterpOptions { oversample: self.oversample, ..InterpOptions::default() }
    }

    pub fn cascade_settings(&self) -> CascadeSettings {
        let flow_dt = self.dt * self.flow_every as f64;
        CascadeSettings {
            dt: self.dt,
            t_end: self.t_end,
            flow_every: self.flow_every,
            record_every: multiple_of(self.snapshot_every, flow_dt).unwrap_or(1),
            dealias: self.dealias,
            alpha: self.alpha,
            interp: self.interp(),
        }
    }

    pub fn cutoff(&self) -> Result<AdmissibleCutoff> {
        match self.n0 {
            Some(n0) => AdmissibleCutoff::with_offset(self.big_b, self.small_b, n0),
            None => AdmissibleCutoff::new(self.big_b, self.small_b),
        }
    }

    pub fn eps(&self) -> Vec<f64> {
        (self.eps_min_exp..=self.eps_max_exp).map(|k| (-(k as f64)).exp2()).collect()
    }

    pub fn report_options(&self) -> Result<ReportOptions> {
        let setup = LyapunovSetup {
            chi: ChiCutoff::new(self.chi_inner, self.chi_outer)?,
            cutoff: self.cutoff()?,
            n_theta: self.n_theta,
            alpha: self.alpha,
            max_truncation: self.max_truncation,
            interp: self.interp(),
        };
        Ok(ReportOptions { setup, s: self.s, delta: self.delta, eps: self.eps(), trust: TrustLimits::default() })
    }

    /// Canonical text form; `parse(to_text())` reproduces the config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("grid.n", self.n.to_string());
        put("grid.L", self.length.to_string());
        put("solver.dt", self.dt.to_string());
        put("solver.t_end", self.t_end.to_string());
        put("solver.alpha", self.alpha.to_string());
        put("solver.dealias", self.dealias.to_string());
        put("solver.flow_every", self.flow_every.to_string());
        put("data.kind", self.data_kind.clone());
        put("data.s", self.s.to_string());
        put("data.seed", self.seed.to_string());
        put("data.amplitude", self.amplitude.to_string());
        put("data.shear", self.shear.to_string());
        put("data.band", self.band.to_string());
        if let Some(p) = &self.data_path {
            put("data.path", p.display().to_string());
        }
        put("para.B", self.big_b.to_string());
        put("para.b", self.small_b.to_string());
        put("para.N0", self.n0.map_or("auto".into(), |v| v.to_string()));
        put("para.n_theta", self.n_theta.to_string());
        put("para.oversample", self.oversample.to_string());
        put("diag.eps_min_exp", self.eps_min_exp.to_string());
        put("diag.eps_max_exp", self.eps_max_exp.to_string());
        put("diag.chi_inner", self.chi_inner.to_string());
        put("diag.chi_outer", self.chi_outer.to_string());
        put("diag.delta", self.delta.to_string());
        put("diag.max_truncation", self.max_truncation.to_string());
        put("io.outdir", self.outdir.display().to_string());
        put("io.snapshot_every", self.snapshot_every.to_string());
        put("io.write_snapshots", self.write_snapshots.to_string());
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key_of(e: Error) -> String {
        match e {
            Error::Config { key, .. } => key,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn presets_validate_and_round_trip() {
        for name in PRESETS {
            let cfg = RunConfig::preset(name).unwrap();
            cfg.validate().unwrap();
            assert_eq!(RunConfig::parse(&cfg.to_text()).unwrap(), cfg, "{name}");
        }
        assert_eq!(key_of(RunConfig::preset("nope").unwrap_err()), "preset");
    }

    #[test]
    fn comments_and_overrides() {
        let cfg = RunConfig::parse("# header\ngrid.n = 128   # smaller\n\ndata.seed=11\npara.N0 = 4\ndiag.eps_max_exp = 5\n").unwrap();
        assert_eq!((cfg.n, cfg.seed, cfg.n0), (128, 11, Some(4)));
        assert_eq!(cfg.eps(), vec![0.125, 0.0625, 0.03125]);
        assert_eq!(cfg.cascade_settings().record_every, 5);
    }

    #[test]
    fn errors_name_the_key() {
        let cases = [
            ("grid.n = 100", "grid.n"),
            ("solver.alpha = 2.5", "solver.alpha"),
            ("solver.flow_every = 3", "solver.flow_every"),
            ("solver.t_end = 0.015", "solver.t_end"),
            ("data.kind = smooth", "data.kind"),
            ("data.s = 5", "data.s"),
            ("data.kind = file", "data.path"),
            ("para.B = 1", "para.B"),
            ("para.N0 = 2", "para.N0"),
            ("para.n_theta = 12", "para.n_theta"),
            ("diag.eps_max_exp = 4", "diag.eps_max_exp"),
            ("diag.eps_max_exp = 7", "diag.eps_max_exp"),
            ("para.N0 = 5", "diag.eps_min_exp"),
            ("diag.chi_outer = 0.5", "diag.chi_outer"),
            ("io.snapshot_every = 0.5", "io.snapshot_every"),
            ("io.snapshot_every = 0.015", "io.snapshot_every"),
            ("grid.N = 64", "grid.N"),
            ("data.seed = -1", "data.seed"),
            ("solver.dealias = maybe", "solver.dealias"),
            ("grid.n = 64\ngrid.n = 64", "grid.n"),
        ];
        for (text, key) in cases {
            assert_eq!(key_of(RunConfig::parse(text).unwrap_err()), key, "{text}");
        }
    }
}
