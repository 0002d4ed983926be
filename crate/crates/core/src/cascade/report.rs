//! Pairing time series, residual budgets and verdicts for a cascade run.

use super::lyapunov::{LyapunovFrame, LyapunovSetup};
use super::pairing::fit_slope;
use super::run::CascadeRun;
use crate::dyadic::{adapted_norm_of_components, tail_masses, AdaptedNormContext};
use crate::error::{Error, Result};
use crate::paracalc::MatrixField;
use std::fmt::Write as _;

/// Trust thresholds for a `(t, eps)` sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrustLimits {
    pub near_band: f64,
    pub det_drift: f64,
    /// Largest `sup |DPhi| / eps` as a fraction of `n`.
    pub shell_fraction: f64,
}

impl Default for TrustLimits {
    fn default() -> Self {
        Self { near_band: 1e-6, det_drift: 1e-3, shell_fraction: 1.0 / 3.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportOptions {
    pub setup: LyapunovSetup,
    /// Regularity exponent of the initial data.
    pub s: f64,
    pub delta: f64,
    /// Decreasing dyadic `eps` values.
    pub eps: Vec<f64>,
    pub trust: TrustLimits,
}

impl ReportOptions {
    /// `min(s - 1 - delta, 1)` for Euler, `min(s + alpha - 3 - delta, 1, alpha - 1)` otherwise.
    pub fn residual_exponent(&self) -> f64 {
        let a = self.setup.alpha;
        if a == 2.0 {
            (self.s - 1.0 - self.delta).min(1.0)
        } else {
            (self.s + a - 3.0 - self.delta).min(1.0).min(a - 1.0)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairingRow {
    pub t: f64,
    pub eps: f64,
    pub w: f64,
    pub p: f64,
    pub dwdt_fd: f64,
    /// `dW/dt` from the flow velocity.
    pub dwdt_flow: f64,
    pub bound: f64,
    pub dr_ref: f64,
    pub trusted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairingSeries {
    pub rows: Vec<PairingRow>,
    pub truncation_mass: f64,
    pub interp_residual: f64,
    pub dt: f64,
}

impl PairingSeries {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,eps,W,P,dWdt_fd,bound,dr_ref,trusted,dWdt_flow\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{}",
                r.t,
                r.eps,
                r.w,
                r.p,
                r.dwdt_fd,
                r.bound,
                r.dr_ref,
                u8::from(r.trusted),
                r.dwdt_flow
            );
        }
        s
    }

    fn eps_values(&self) -> Vec<f64> {
        let mut e: Vec<f64> = Vec::new();
        for r in &self.rows {
            if !e.contains(&r.eps) {
                e.push(r.eps);
            }
        }
        e
    }

    fn rows_at(&self, eps: f64) -> Vec<&PairingRow> {
        self.rows.iter().filter(|r| r.eps == eps).collect()
    }
}

/// Second-order derivative of samples on a possibly uneven grid: centered inside,
/// one-sided at the ends.
pub fn time_derivative(t: &[f64], w: &[f64]) -> Result<Vec<f64>> {
    let n = t.len();
    if n < 3 || w.len() != n {
        return Err(Error::InsufficientDynamicRange(format!("{n} time samples, need 3")));
    }
    let three = |x: [f64; 3], y: [f64; 3], at: f64| {
        // derivative of the interpolating parabola
        let l0 = (2.0 * at - x[1] - x[2]) / ((x[0] - x[1]) * (x[0] - x[2]));
        let l1 = (2.0 * at - x[0] - x[2]) / ((x[1] - x[0]) * (x[1] - x[2]));
        let l2 = (2.0 * at - x[0] - x[1]) / ((x[2] - x[0]) * (x[2] - x[1]));
        y[0] * l0 + y[1] * l1 + y[2] * l2
    };
    Ok((0..n)
        .map(|i| {
            let j = i.clamp(1, n - 2);
            three([t[j - 1], t[j], t[j + 1]], [w[j - 1], w[j], w[j + 1]], t[i])
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthRecord {
    pub t: Vec<f64>,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    /// `lhs / rhs`, undefined (NaN) at `t = 0`.
    pub ratio: Vec<f64>,
    pub min_ratio: f64,
}

/// `LHS(t) = ||DPhi_t||_inf ||DPhi_t - Id||_ctx` against `RHS(t) = int_0^t ds / ||DPhi_s||_inf`,
/// the minimum ratio taken over samples with `0 < t <= trusted_until`.
pub fn growth_inequality_check(
    times: &[f64],
    jacobians: &[&MatrixField],
    ctx: &AdaptedNormContext,
    trusted_until: f64,
) -> Result<GrowthRecord> {
    if times.len() != jacobians.len() || times.is_empty() {
        return Err(Error::InvalidArgument("times and jacobians must be nonempty and of equal length".into()));
    }
    let mut lhs = Vec::with_capacity(times.len());
    let mut inv_norm = Vec::with_capacity(times.len());
    for j in jacobians {
        let sup = j.sup_operator_norm();
        let dev = j.minus_identity();
        let refs: Vec<&crate::fourier::SpectralField> = dev.iter().collect();
        lhs.push(sup * adapted_norm_of_components(&refs, ctx)?);
        inv_norm.push(1.0 / sup);
    }
    let mut rhs = vec![0.0; times.len()];
    for k in 1..times.len() {
        rhs[k] = rhs[k - 1] + 0.5 * (times[k] - times[k - 1]) * (inv_norm[k] + inv_norm[k - 1]);
    }
    let ratio: Vec<f64> = lhs.iter().zip(&rhs).map(|(l, r)| if *r > 0.0 { l / r } else { f64::NAN }).collect();
    let min_ratio = times
        .iter()
        .zip(&ratio)
        .filter(|(t, r)| **t > 0.0 && **t <= trusted_until && r.is_finite())
        .map(|(_, r)| *r)
        .fold(f64::INFINITY, f64::min);
    Ok(GrowthRecord { t: times.to_vec(), lhs, rhs, ratio, min_ratio })
}

/// Discrete limsup: `max_eps W(t, eps) / dr(eps)^2` over trusted rows at each sampled `t`.
pub fn lyapunov_value(series: &PairingSeries) -> Result<Vec<(f64, f64)>> {
    if series.eps_values().len() < 3 {
        return Err(Error::InsufficientDynamicRange("need at least 3 eps octaves".into()));
    }
    let mut times: Vec<f64> = Vec::new();
    for r in &series.rows {
        if !times.contains(&r.t) {
            times.push(r.t);
        }
    }
    let mut out = Vec::new();
    for t in times {
        let mut best = f64::NEG_INFINITY;
        for r in series.rows.iter().filter(|r| r.t == t && r.trusted) {
            if !(r.dr_ref > 0.0) {
                return Err(Error::InsufficientDynamicRange(format!("reference tail vanishes at eps = {}", r.eps)));
            }
            best = best.max(r.w / (r.dr_ref * r.dr_ref));
        }
        if best.is_finite() {
            out.push((t, best));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdicts {
    /// At least three sampled scales where the reference tail is above the guard.
    pub reference_tail: bool,
    /// `max |W|, |P|` over all rows relative to `||w0||^2`.
    pub null_series: f64,
    pub residual_exponent: f64,
    /// Slope of `log2 max_t |dW/dt - P| / dr^2` against `log2 eps`.
    pub residual_slope: f64,
    pub residual_slope_ok: bool,
    /// `(eps, kappa)` with `kappa = max_t |dW/dt - P| / (eps^gamma dr^2)`.
    pub kappa: Vec<(f64, f64)>,
    /// Budget constant: the largest `kappa` over the trusted `eps`.
    pub kappa_max: f64,
    /// Largest factor by which `kappa` exceeds its maximum over all coarser `eps`.
    pub kappa_step: f64,
    pub kappa_stable: bool,
    pub monotone_violations: usize,
    pub monotone_ok: bool,
    /// `(eps, last trusted t)`.
    pub trust_horizon: Vec<(f64, f64)>,
    pub lyapunov_slope: f64,
    pub lyapunov_ok: bool,
    pub growth_min_ratio: f64,
    pub growth_ok: bool,
    pub flow_fd_gap: f64,
}

impl Verdicts {
    /// Without a reference tail the budget degenerates: `W` and `P` must vanish.
    pub fn passed(&self) -> bool {
        if !self.reference_tail {
            return self.null_series <= 1e-12 && self.growth_ok;
        }
        self.residual_slope_ok && self.kappa_stable && self.monotone_ok && self.lyapunov_ok && self.growth_ok
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "reference_tail = {}", self.reference_tail);
        let _ = writeln!(s, "null_series = {}", self.null_series);
        let _ = writeln!(s, "residual_exponent = {}", self.residual_exponent);
        let _ = writeln!(s, "residual_slope = {}", self.residual_slope);
        let _ = writeln!(s, "residual_slope_ok = {}", self.residual_slope_ok);
        for (e, k) in &self.kappa {
            let _ = writeln!(s, "kappa[{e}] = {k}");
        }
        let _ = writeln!(s, "kappa_max = {}", self.kappa_max);
        let _ = writeln!(s, "kappa_step = {}", self.kappa_step);
        let _ = writeln!(s, "kappa_stable = {}", self.kappa_stable);
        let _ = writeln!(s, "monotone_violations = {}", self.monotone_violations);
        let _ = writeln!(s, "monotone_ok = {}", self.monotone_ok);
        for (e, t) in &self.trust_horizon {
            let _ = writeln!(s, "trusted_until[{e}] = {t}");
        }
        let _ = writeln!(s, "lyapunov_slope = {}", self.lyapunov_slope);
        let _ = writeln!(s, "lyapunov_ok = {}", self.lyapunov_ok);
        let _ = writeln!(s, "growth_min_ratio = {}", self.growth_min_ratio);
        let _ = writeln!(s, "growth_ok = {}", self.growth_ok);
        let _ = writeln!(s, "flow_fd_gap = {}", self.flow_fd_gap);
        let _ = writeln!(s, "passed = {}", self.passed());
        s
    }
}

#[derive(Debug, Clone)]
pub struct CascadeReport {
    pub series: PairingSeries,
    pub verdicts: Verdicts,
    pub lyapunov: Vec<(f64, f64)>,
    pub growth: GrowthRecord,
}

/// Pairing series over all snapshots and `eps`, with budget fits and verdicts.
pub fn cascade_report(run: &CascadeRun, opts: &ReportOptions) -> Result<CascadeReport> {
    let snaps = &run.snapshots;
    if snaps.len() < 3 {
        return Err(Error::InsufficientDynamicRange(format!("{} snapshots, need 3", snaps.len())));
    }
    if opts.eps.len() < 3 {
        return Err(Error::InsufficientDynamicRange(format!("{} eps values, need 3", opts.eps.len())));
    }
    let n = run.omega0.grid().n() as f64;
    let dr_ref = tail_masses(&run.omega0, &opts.eps)?;
    let guard = crate::dyadic::ZERO_GUARD * run.omega0.l2_norm();
    // scales where the reference tail vanishes carry no budget and are never trusted
    let has_tail: Vec<bool> = dr_ref.iter().map(|d| *d > guard).collect();
    let times = run.times();
    let ne = opts.eps.len();
    let mut w = vec![vec![0.0; snaps.len()]; ne];
    let mut p = vec![vec![0.0; snaps.len()]; ne];
    let mut rate = vec![vec![f64::NAN; snaps.len()]; ne];
    let mut trusted = vec![vec![false; snaps.len()]; ne];
    let mut truncation_mass: f64 = 0.0;
    let mut interp_residual: f64 = 0.0;
    // symbol truncation ends trust instead of aborting the series
    let unlimited = LyapunovSetup { max_truncation: f64::INFINITY, ..opts.setup };
    for (k, snap) in snaps.iter().enumerate() {
        let frame = LyapunovFrame::new(&snap.flow, Some(&snap.velocity), &unlimited)?;
        truncation_mass = truncation_mass.max(frame.symbol.truncation_mass);
        interp_residual = interp_residual.max(frame.interp_residual);
        let vals = frame.evaluate(&run.omega0, &opts.eps, &unlimited)?;
        let healthy = snap.invariants.near_band_fraction < opts.trust.near_band
            && snap.flow.det_drift() < opts.trust.det_drift
            && frame.symbol.truncation_mass <= opts.setup.max_truncation;
        let stretch = snap.flow.jacobian().sup_operator_norm();
        for (j, v) in vals.iter().enumerate() {
            w[j][k] = v.w;
            p[j][k] = v.p;
            rate[j][k] = v.w_rate.unwrap_or(f64::NAN);
            trusted[j][k] = has_tail[j] && healthy && stretch / opts.eps[j] < opts.trust.shell_fraction * n;
        }
    }
    // trust is lost for good once any condition fails
    for row in trusted.iter_mut() {
        let mut ok = true;
        for v in row.iter_mut() {
            ok &= *v;
            *v = ok;
        }
    }
    let gamma = opts.residual_exponent();
    let mut rows = Vec::with_capacity(ne * snaps.len());
    let mut kappa = Vec::new();
    let mut norm_resid = Vec::new();
    let mut flow_fd_gap: f64 = 0.0;
    let mut fd = Vec::with_capacity(ne);
    for j in 0..ne {
        let d = time_derivative(&times, &w[j])?;
        let d2 = dr_ref[j] * dr_ref[j];
        let mut worst: f64 = 0.0;
        let mut any = false;
        for k in 0..snaps.len() {
            if trusted[j][k] {
                any = true;
                worst = worst.max((d[k] - p[j][k]).abs() / d2);
                if rate[j][k].is_finite() {
                    flow_fd_gap = flow_fd_gap.max((d[k] - rate[j][k]).abs() / d2);
                }
            }
        }
        if any {
            kappa.push((opts.eps[j], worst / opts.eps[j].powf(gamma)));
            norm_resid.push((opts.eps[j], worst));
        }
        fd.push(d);
    }
    let kappa_max = kappa.iter().map(|k| k.1).fold(0.0, f64::max);
    for (k, snap) in snaps.iter().enumerate() {
        for j in 0..ne {
            rows.push(PairingRow {
                t: snap.t,
                eps: opts.eps[j],
                w: w[j][k],
                p: p[j][k],
                dwdt_fd: fd[j][k],
                dwdt_flow: rate[j][k],
                bound: kappa_max * opts.eps[j].powf(gamma) * dr_ref[j] * dr_ref[j],
                dr_ref: dr_ref[j],
                trusted: trusted[j][k],
            });
        }
    }
    let series = PairingSeries { rows, truncation_mass, interp_residual, dt: run.settings.dt };
    let usable: Vec<&(f64, f64)> = norm_resid.iter().filter(|r| r.1 > 0.0).collect();
    let residual_slope = if usable.len() >= 2 {
        let x: Vec<f64> = usable.iter().map(|r| r.0.log2()).collect();
        let y: Vec<f64> = usable.iter().map(|r| r.1.log2()).collect();
        fit_slope(&x, &y)
    } else {
        f64::NAN
    };
    let mut kappa_step: f64 = 0.0;
    let mut coarse_max = f64::NAN;
    for &(_, k) in &kappa {
        if coarse_max > 0.0 {
            kappa_step = kappa_step.max(k / coarse_max);
        }
        coarse_max = if coarse_max.is_nan() { k } else { coarse_max.max(k) };
    }
    let mut violations = 0;
    let mut horizon = Vec::with_capacity(ne);
    for &e in &opts.eps {
        let rs = series.rows_at(e);
        let mut last = f64::NAN;
        for pair in rs.windows(2) {
            if pair[0].trusted && pair[1].trusted {
                let dt = pair[1].t - pair[0].t;
                if pair[1].w - pair[0].w < -pair[1].bound * dt {
                    violations += 1;
                }
            }
        }
        for r in &rs {
            if r.trusted {
                last = r.t;
            }
        }
        horizon.push((e, last));
    }
    let lyapunov = lyapunov_value(&series)?;
    let lyapunov_slope = if lyapunov.len() >= 2 {
        let x: Vec<f64> = lyapunov.iter().map(|v| v.0).collect();
        let y: Vec<f64> = lyapunov.iter().map(|v| v.1).collect();
        fit_slope(&x, &y)
    } else {
        f64::NAN
    };
    let global_trust = snaps
        .iter()
        .take_while(|s| s.invariants.near_band_fraction < opts.trust.near_band && s.flow.det_drift() < opts.trust.det_drift)
        .last()
        .map(|s| s.t)
        .unwrap_or(0.0);
    let ctx = AdaptedNormContext::for_field(&run.omega0);
    let jac: Vec<&MatrixField> = snaps.iter().map(|s| s.flow.jacobian()).collect();
    let growth = growth_inequality_check(&times, &jac, &ctx, global_trust)?;
    let scale = run.omega0.l2_norm_sq();
    let null_series = series.rows.iter().map(|r| r.w.abs().max(r.p.abs())).fold(0.0, f64::max) / scale;
    let verdicts = Verdicts {
        reference_tail: has_tail.iter().filter(|u| **u).count() >= 3,
        null_series,
        residual_exponent: gamma,
        residual_slope,
        residual_slope_ok: residual_slope >= gamma - 0.2,
        kappa_max,
        kappa_step,
        kappa_stable: kappa.len() >= 2 && kappa_step <= 2.0,
        kappa,
        monotone_violations: violations,
        monotone_ok: violations == 0,
        trust_horizon: horizon,
        lyapunov_slope,
        lyapunov_ok: lyapunov_slope > 0.0,
        growth_min_ratio: growth.min_ratio,
        growth_ok: growth.min_ratio.is_finite() && growth.min_ratio > 0.0,
        flow_fd_gap,
    };
    Ok(CascadeReport { series, verdicts, lyapunov, growth })
}
