//! Named property suites with a machine-readable pass/fail summary.

use super::config::RunConfig;
use super::data::{generate_initial_data, power_law_field, tail_exponent, PhaseStream};
use crate::cascade::{cascade_report, rate_check, run_cascade, semiclassical_pairing, CascadeReport, ChiCutoff};
use crate::dyadic::{
    adapted_norm, block_weight, dyadic_adapted_norm, lowpass_adapted_norm, bernstein_ratio, AdaptedNormContext,
    DyadicPartition, Exponent,
};
use crate::error::{Error, Result};
use crate::fourier::{biot_savart, forward, inverse, product, Grid2D, PhysicalField, SpectralField};
use crate::paracalc::{
    commutator_check, paracompose, paraproduct, paraproduct_block, remainder, AdmissibleCutoff, DiffeoMap, Multiplier,
    SymbolRep,
};
use std::fmt::Write as _;
use std::time::Instant;

pub const SUITES: [&str; 4] = ["appendix-a", "rates", "norms", "cascade"];

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// Human-readable acceptance condition on `value`.
    pub limit: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub suite: String,
    pub checks: Vec<Check>,
    pub seconds: f64,
    /// Full cascade report, kept by the `cascade` suite.
    pub cascade: Option<CascadeReport>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// One `suite.name = value limit PASS|FAIL detail` line per check and a summary line.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let verdict = if c.passed { "PASS" } else { "FAIL" };
            let _ = write!(s, "{}.{} = {:e} [{}] {verdict}", self.suite, c.name, c.value, c.limit);
            if !c.detail.is_empty() {
                let _ = write!(s, " {}", c.detail);
            }
            s.push('\n');
        }
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        let _ = writeln!(s, "{}.summary = {} checks in {:.1}s {verdict}", self.suite, self.checks.len(), self.seconds);
        s
    }
}

struct Checks(Vec<Check>);

impl Checks {
    fn at_most(&mut self, name: &str, value: f64, limit: f64, detail: String) {
        self.push(name, value, format!("<= {limit:e}"), value <= limit, detail);
    }

    fn within(&mut self, name: &str, value: f64, target: f64, tol: f64, detail: String) {
        self.push(name, value, format!("{target} +- {tol}"), (value - target).abs() <= tol, detail);
    }

    fn push(&mut self, name: &str, value: f64, limit: String, passed: bool, detail: String) {
        // NaN never passes
        let passed = passed && !value.is_nan();
        self.0.push(Check { name: name.into(), value, limit, passed, detail });
    }

    /// Records a failed check when a measurement itself errors.
    fn attempt(&mut self, name: &str, f: impl FnOnce(&mut Checks) -> Result<()>) {
        if let Err(e) = f(self) {
            self.push(name, f64::NAN, "no error".into(), false, e.to_string());
        }
    }
}

/// Runs a named suite against the default configuration.
pub fn verify(suite: &str) -> Result<VerifyReport> {
    verify_with(suite, &RunConfig::default())
}

/// Runs a named suite; only `cascade` reads `cfg`.
pub fn verify_with(suite: &str, cfg: &RunConfig) -> Result<VerifyReport> {
    let start = Instant::now();
    let mut checks = Checks(Vec::new());
    let mut cascade = None;
    match suite {
        "appendix-a" => littlewood_paley(&mut checks, start),
        "rates" => rates(&mut checks),
        "norms" => norms(&mut checks),
        "cascade" => cascade = cascade_suite(&mut checks, cfg),
        other => {
            return Err(Error::InvalidArgument(format!("unknown suite `{other}`; known: {}", SUITES.join(", "))));
        }
    }
    Ok(VerifyReport { suite: suite.into(), checks: checks.0, seconds: start.elapsed().as_secs_f64(), cascade })
}

/// Zero-mean white noise colored by `(1 + |k|)^-decay`, phases from the shared stream.
pub fn random_field(grid: Grid2D, seed: u64, decay: f64) -> SpectralField {
    let mut stream = PhaseStream::new(seed);
    let vals = (0..grid.len()).map(|_| stream.uniform() - 0.5).collect();
    let f = forward(&PhysicalField::new(grid, vals).expect("grid-sized values"));
    let mut f = f.apply_radial(|r| (1.0 + r).powf(-decay));
    f.set_mode(0, 0, num_complex::Complex64::new(0.0, 0.0));
    f
}

fn spread(v: &[f64]) -> f64 {
    let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = v.iter().cloned().fold(f64::INFINITY, f64::min);
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

fn littlewood_paley(c: &mut Checks, start: Instant) {
    let g = Grid2D::periodic(128).expect("valid grid");
    let part = DyadicPartition::new(g);
    let cutoff = AdmissibleCutoff::default();

    let mut worst: f64 = 0.0;
    for i1 in 0..g.n() {
        for i2 in 0..g.n() {
            let r = g.frequency_norm(i1, i2);
            let s: f64 = (0..=part.kmax() as i64).map(|k| block_weight(k, r)).sum();
            worst = worst.max((1.0 - s).abs());
        }
    }
    c.at_most("partition_of_unity", worst, 1e-12, String::new());

    c.attempt("bernstein", |c| {
        // a point mass saturates every exponent pair
        let mut f = SpectralField::from_modes(g, |_, _| num_complex::Complex64::new(1.0, 0.0));
        f.set_mode(0, 0, num_complex::Complex64::new(0.0, 0.0));
        let pairs = [
            ("bernstein_l2_l2", (1, 0), Exponent::Two, Exponent::Two),
            ("bernstein_l2_linf", (0, 1), Exponent::Two, Exponent::Infinity),
            ("bernstein_linf_linf", (1, 1), Exponent::Infinity, Exponent::Infinity),
        ];
        for (name, alpha, p, q) in pairs {
            let ratios = (1..part.kmax())
                .map(|k| bernstein_ratio(&part.block(&f, k)?, k, alpha, p, q))
                .collect::<Result<Vec<_>>>()?;
            c.at_most(name, spread(&ratios), 10.0, format!("max/min over k = 1..{}", part.kmax() - 1));
        }
        Ok(())
    });

    c.attempt("localization", |c| {
        let mut worst: f64 = 0.0;
        for pair in 0..4u64 {
            let f = random_field(g, 100 + pair, 0.0);
            let h = random_field(g, 200 + pair, 0.0);
            for j in 3..=part.kmax() - 2 {
                let t = paraproduct_block(&f, &h, j, &cutoff)?;
                let (lo, hi) = cutoff.annulus(j);
                let (mut outside, mut total) = (0.0, 0.0);
                for i1 in 0..g.n() {
                    for i2 in 0..g.n() {
                        let m = t.coeffs()[i1 * g.n() + i2].norm_sqr();
                        let r = g.frequency_norm(i1, i2);
                        total += m;
                        if r <= lo || r >= hi {
                            outside += m;
                        }
                    }
                }
                if total > 0.0 {
                    worst = worst.max((outside / total).sqrt());
                }
            }
        }
        c.at_most("localization", worst, 1e-13, format!("j = 3..{}", part.kmax() - 2));
        Ok(())
    });

    c.attempt("reconstruction", |c| {
        let mut worst: f64 = 0.0;
        for pair in 0..20u64 {
            let decay = 0.1 * pair as f64;
            let f = random_field(g, 300 + pair, decay);
            let h = random_field(g, 400 + pair, 2.0 - decay);
            let sum = paraproduct(&f, &h, &cutoff)?.add(&paraproduct(&h, &f, &cutoff)?)?.add(&remainder(&f, &h, &cutoff)?)?;
            let full = product(&f, &h)?;
            worst = worst.max(sum.sub(&full)?.l2_norm() / full.l2_norm());
        }
        c.at_most("reconstruction", worst, 1e-12, "20 random pairs".into());
        Ok(())
    });

    c.at_most("runtime_seconds", start.elapsed().as_secs_f64(), 60.0, "n = 128".into());
}

const RATES_S: f64 = 1.5;

fn rates(c: &mut Checks) {
    // N0 = 3 leaves four resolved octaves of eps at n = 512
    let cutoff = AdmissibleCutoff::new(2.0, 1.0).expect("admissible");
    let eps: Vec<f64> = (0..5).map(|j| (-(j as f64)).exp2()).collect();
    c.attempt("rates", |c| {
        let g = Grid2D::periodic(512)?;
        let u = power_law_field(g, RATES_S, 1.0, 7, g.n() as f64 / 3.0);
        let fit = tail_exponent(&u)?;
        c.within("tail_exponent", fit, RATES_S, 0.1, "eps = 2^-2..2^-6".into());

        let one = SymbolRep::constant(g, 1.0);
        let base = rate_check(&one, &u, &u, &eps, &cutoff, 1.0)?;
        c.within("pairing_exponent", base.exponent, 2.0 * RATES_S, 0.2, "a = 1, eps = 1..2^-4".into());
        let decades = (eps[0] / eps[eps.len() - 1]).log10();
        c.push("pairing_decades", decades, ">= 1".into(), decades >= 1.0, String::new());

        let sub = SymbolRep::multiplier(g, Multiplier::Japanese(-1.0), -1.0);
        let lower = rate_check(&sub, &u, &u, &eps, &cutoff, 1.0)?;
        c.within("subprincipal_gain", lower.exponent - base.exponent, 1.0, 0.15, "order -1 part".into());

        let coarse_grid = Grid2D::periodic(256)?;
        let coarse = power_law_field(coarse_grid, RATES_S, 1.0, 7, coarse_grid.n() as f64 / 3.0);
        let coarse_one = SymbolRep::constant(coarse_grid, 1.0);
        for (kappa, name) in [(1.0, "envelope_kappa_1"), (0.5, "envelope_kappa_1/2"), (0.25, "envelope_kappa_1/4")] {
            let fine = rate_check(&one, &u, &u, &eps[..4], &cutoff, kappa)?;
            let rough = rate_check(&coarse_one, &coarse, &coarse, &eps[..4], &cutoff, kappa)?;
            let ratio = fine.sup_envelope / rough.sup_envelope;
            let stable = ratio.max(1.0 / ratio);
            let detail = format!("sup {:.4e} at n = 512, {:.4e} at n = 256", fine.sup_envelope, rough.sup_envelope);
            c.push(name, stable, "n = 256 vs 512 within x2, finite".into(), stable <= 2.0 && fine.sup_envelope.is_finite(), detail);
        }

        let band = u.apply_radial(|r| if r <= 6.0 { 1.0 } else { 0.0 });
        let p = semiclassical_pairing(&one, 0.25, &band, &u, &cutoff)?;
        c.at_most("bandlimited_pairing", p.abs(), 0.0, "|k| <= 6, eps = 1/4".into());
        Ok(())
    });
}

fn norms(c: &mut Checks) {
    c.attempt("norm_equivalence", |c| {
        let g = Grid2D::periodic(256)?;
        let part = DyadicPartition::new(g);
        let reference = power_law_field(g, 1.5, 1.0, 7, g.n() as f64 / 3.0);
        let ctx = AdaptedNormContext::for_field(&reference);
        let (mut dy, mut lo) = (Vec::new(), Vec::new());
        for i in 0..20u64 {
            let s = 1.5 + 0.05 * i as f64;
            let f = power_law_field(g, s, 1.0, 1000 + i, g.n() as f64 / 3.0);
            let a = adapted_norm(&f, &ctx)?;
            dy.push(dyadic_adapted_norm(&part, &f, &ctx)? / a);
            lo.push(lowpass_adapted_norm(&part, &f, &ctx)? / a);
        }
        let bound = |v: &[f64]| v.iter().map(|r| r.max(1.0 / r)).fold(0.0, f64::max);
        c.at_most("dyadic_vs_adapted", bound(&dy), 10.0, format!("spread {:.3}", spread(&dy)));
        c.at_most("lowpass_vs_adapted", bound(&lo), 10.0, format!("spread {:.3}", spread(&lo)));
        Ok(())
    });

    c.attempt("commutator", |c| {
        let g = Grid2D::periodic(256)?;
        let cutoff = AdmissibleCutoff::default();
        let w = power_law_field(g, 1.5, 1.0, 3, g.n() as f64 / 3.0);
        let shear = forward(&PhysicalField::from_fn(g, |_, x2| x2.cos() + 0.3 * (2.0 * x2 + 1.0).cos()));
        let u = biot_savart(&shear)?;
        let chi = ChiCutoff::default();
        let ratios = (cutoff.n0()..=6)
            .map(|j| commutator_check(&u, &w, (-(j as f64)).exp2(), &chi, &cutoff))
            .collect::<Result<Vec<_>>>()?;
        c.at_most("commutator_envelope", spread(&ratios), 10.0, format!("eps = 2^-{}..2^-6", cutoff.n0()));
        Ok(())
    });

    c.attempt("operator_bounds", |c| {
        let mut para = Vec::new();
        let mut comp = Vec::new();
        for n in [128, 256] {
            let g = Grid2D::periodic(n)?;
            let cutoff = AdmissibleCutoff::default();
            let u = power_law_field(g, 1.5, 1.0, 7, n as f64 / 3.0);
            let ctx = AdaptedNormContext::for_field(&u);
            let base = adapted_norm(&u, &ctx)?;
            let a = forward(&PhysicalField::from_fn(g, |x1, x2| 1.0 + 0.5 * x1.cos() * x2.sin()));
            let sup = inverse(&a).max_abs();
            para.push(adapted_norm(&paraproduct(&a, &u, &cutoff)?, &ctx)? / (sup * base));
            let d1 = PhysicalField::from_fn(g, |_, x2| 0.3 * x2.sin());
            let d2 = PhysicalField::from_fn(g, |x1, _| 0.2 * x1.cos());
            let chi = DiffeoMap::new(d1, d2)?;
            comp.push(adapted_norm(&paracompose(&chi, &u)?, &ctx)? / base);
        }
        for (name, v) in [("paraproduct_bound", &para), ("paracompose_bound", &comp)] {
            let detail = format!("constants {:.4} at n = 128, {:.4} at n = 256", v[0], v[1]);
            let stable = spread(v);
            c.push(name, stable, "n = 128 vs 256 within x2, constants <= 10".into(), stable <= 2.0 && v.iter().all(|x| *x <= 10.0), detail);
        }
        Ok(())
    });
}

fn cascade_suite(c: &mut Checks, cfg: &RunConfig) -> Option<CascadeReport> {
    let mut out = None;
    c.attempt("cascade", |c| {
        cfg.validate()?;
        let start = Instant::now();
        let data = generate_initial_data(&cfg.data_spec(), cfg.grid()?)?;
        let run = run_cascade(&data.omega, &cfg.cascade_settings(), Some(&data.ctx), |_| Ok(()))?;
        let evolve = start.elapsed().as_secs_f64();
        let first = &run.snapshots[0].invariants;
        let drift = |f: &dyn Fn(&crate::euler::InvariantsReport) -> f64| {
            let base = f(first);
            run.snapshots.iter().map(|s| (f(&s.invariants) - base).abs() / base).fold(0.0, f64::max)
        };
        let t_end = run.snapshots.last().map_or(0.0, |s| s.t);
        let span = format!("t in [0, {t_end}]");
        c.at_most("energy_drift", drift(&|i| i.energy), 1e-6, span.clone());
        c.at_most("enstrophy_drift", drift(&|i| i.enstrophy), 1e-6, span.clone());
        let det = run.snapshots.iter().map(|s| s.flow.det_drift()).fold(0.0, f64::max);
        c.at_most("det_drift", det, 1e-4, span);
        c.at_most("evolve_seconds", evolve, 300.0, format!("n = {}", cfg.n));

        let report = cascade_report(&run, &cfg.report_options()?)?;
        let v = &report.verdicts;
        let gamma = v.residual_exponent;
        c.push("reference_tail", v.reference_tail as u8 as f64, "= 1".into(), v.reference_tail, String::new());
        c.push(
            "residual_slope",
            v.residual_slope,
            format!(">= {}", gamma - 0.2),
            v.residual_slope_ok,
            format!("gamma = {gamma}"),
        );
        let kappa: Vec<String> = v.kappa.iter().map(|(e, k)| format!("{e}:{k:.4}")).collect();
        c.push("kappa_step", v.kappa_step, "<= 2".into(), v.kappa_stable, format!("kappa {}", kappa.join(" ")));
        c.push("monotone_violations", v.monotone_violations as f64, "= 0".into(), v.monotone_ok, String::new());
        let horizon: Vec<String> = v.trust_horizon.iter().map(|(e, t)| format!("{e}:{t}")).collect();
        c.push("lyapunov_slope", v.lyapunov_slope, "> 0".into(), v.lyapunov_ok, format!("trust {}", horizon.join(" ")));
        c.push("growth_min_ratio", v.growth_min_ratio, "> 0".into(), v.growth_ok, String::new());
        c.push("flow_fd_gap", v.flow_fd_gap, "recorded".into(), v.flow_fd_gap.is_finite(), "relative to dr^2".into());
        c.at_most("total_seconds", start.elapsed().as_secs_f64(), 600.0, String::new());
        out = Some(report);
        Ok(())
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_suite_is_an_error() {
        assert!(verify("nope").is_err());
    }

    #[test]
    fn report_text_is_one_line_per_check() {
        let r = VerifyReport {
            suite: "s".into(),
            checks: vec![
                Check { name: "a".into(), value: 0.5, limit: "<= 1".into(), passed: true, detail: String::new() },
                Check { name: "b".into(), value: f64::NAN, limit: "no error".into(), passed: false, detail: "boom".into() },
            ],
            seconds: 1.0,
            cascade: None,
        };
        let text = r.to_text();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("s.a = 5e-1 [<= 1] PASS"));
        assert!(lines[1].ends_with("FAIL boom"));
        assert!(lines[2].starts_with("s.summary = 2 checks") && lines[2].ends_with("FAIL"));
        assert!(!r.passed());
    }

    #[test]
    fn random_fields_are_real_zero_mean_and_seeded() {
        let g = Grid2D::periodic(32).unwrap();
        let f = random_field(g, 5, 1.0);
        assert!(f.is_real());
        assert_eq!(f.mean().norm(), 0.0);
        assert_eq!(f, random_field(g, 5, 1.0));
        assert_ne!(f, random_field(g, 6, 1.0));
    }
}
