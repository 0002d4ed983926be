//! Pseudo-spectral transport of vorticity (Euler) or active scalar (gSQG) on the torus.

mod flow;

pub use flow::{cancellation_rate, flow_step, FlowMapState, FlowVelocities};

use crate::dyadic::{adapted_norm, sobolev_norm, AdaptedNormContext};
use crate::error::{Error, Result};
use crate::fourier::{
    biot_savart, dealias_in_place, derivative, forward, fractional_velocity, inverse, inverse_pair, near_band_fraction,
    PhysicalField, SpectralField, VectorField,
};
use crate::fourier::padded::ProductAccumulator;

/// CFL number of the time-step guard.
pub const CFL: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Velocity {
    BiotSavart,
    Fractional(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    omega: SpectralField,
    t: f64,
    velocity: Velocity,
    dealias: bool,
}

impl SolverState {
    /// Euler in vorticity form. With `dealias`, modes beyond the two-thirds band are removed
    /// from the initial data.
    pub fn euler(omega: SpectralField, dealias: bool) -> Result<Self> {
        Self::build(omega, Velocity::BiotSavart, dealias)
    }

    /// gSQG with `alpha` in `(1, 2]`, always through the fractional multiplier.
    pub fn gsqg(theta: SpectralField, alpha: f64, dealias: bool) -> Result<Self> {
        if !(alpha > 1.0 && alpha <= 2.0) {
            return Err(Error::InvalidArgument(format!("alpha = {alpha} must lie in (1, 2]")));
        }
        Self::build(theta, Velocity::Fractional(alpha), dealias)
    }

    fn build(mut omega: SpectralField, velocity: Velocity, dealias: bool) -> Result<Self> {
        if !omega.is_real() {
            return Err(Error::InvalidArgument("transported field must be real".into()));
        }
        if omega.coeffs().iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::NonFinite("initial coefficients".into()));
        }
        if dealias {
            dealias_in_place(&mut omega);
        }
        let state = Self { omega, t: 0.0, velocity, dealias };
        state.velocity()?;
        Ok(state)
    }

    pub fn omega(&self) -> &SpectralField {
        &self.omega
    }

    /// The same state relabelled to time `t`.
    pub fn at_time(mut self, t: f64) -> Self {
        self.t = t;
        self
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// 2 for Euler.
    pub fn alpha(&self) -> f64 {
        match self.velocity {
            Velocity::BiotSavart => 2.0,
            Velocity::Fractional(a) => a,
        }
    }

    pub fn dealias(&self) -> bool {
        self.dealias
    }

    pub fn velocity(&self) -> Result<VectorField> {
        velocity_of(&self.omega, self.velocity)
    }

    fn with_omega(&self, omega: SpectralField, t: f64) -> Self {
        Self { omega, t, velocity: self.velocity, dealias: self.dealias }
    }
}

fn velocity_of(omega: &SpectralField, v: Velocity) -> Result<VectorField> {
    match v {
        Velocity::BiotSavart => biot_savart(omega),
        Velocity::Fractional(a) => fractional_velocity(omega, a),
    }
}

/// `-(u . grad w)`: on the grid for dealiased states, with padded products otherwise.
fn transport(omega: &SpectralField, v: Velocity, dealias: bool) -> Result<(SpectralField, f64)> {
    let u = velocity_of(omega, v)?;
    let d1 = derivative(omega, (1, 0));
    let d2 = derivative(omega, (0, 1));
    let (p1, p2) = inverse_pair(&u.u1, &u.u2)?;
    let umax = p1.values().iter().zip(p2.values()).map(|(a, b)| a.hypot(*b)).fold(0.0, f64::max);
    let mut out = if dealias {
        let (g1, g2) = inverse_pair(&d1, &d2)?;
        let vals: Vec<f64> = (0..p1.values().len())
            .map(|i| -(p1.values()[i] * g1.values()[i] + p2.values()[i] * g2.values()[i]))
            .collect();
        let mut f = forward(&PhysicalField::new(*omega.grid(), vals)?);
        dealias_in_place(&mut f);
        f
    } else {
        let mut acc = ProductAccumulator::new(*omega.grid());
        acc.add_product(&u.u1, &d1)?;
        acc.add_product(&u.u2, &d2)?;
        acc.finish().scale(-1.0)
    };
    out.set_mode(0, 0, num_complex::Complex64::new(0.0, 0.0));
    Ok((out, umax))
}

/// `-dealias(u . grad w)` for the state's velocity law.
pub fn rhs_vorticity(state: &SolverState) -> Result<SpectralField> {
    Ok(transport(&state.omega, state.velocity, state.dealias)?.0)
}

/// `sup |u|` over the grid.
pub fn max_speed(u: &VectorField) -> Result<f64> {
    let (p1, p2) = inverse_pair(&u.u1, &u.u2)?;
    Ok(p1.values().iter().zip(p2.values()).map(|(a, b)| a.hypot(*b)).fold(0.0, f64::max))
}

/// Largest step allowed by the CFL guard.
pub fn cfl_limit(state: &SolverState) -> Result<f64> {
    let umax = max_speed(&state.velocity()?)?;
    Ok(if umax == 0.0 { f64::INFINITY } else { CFL * state.omega.grid().spacing() / umax })
}

/// One classical Runge-Kutta step.
pub fn step_rk4(state: &SolverState, dt: f64) -> Result<SolverState> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("time step {dt} must be positive")));
    }
    let (v, dl) = (state.velocity, state.dealias);
    let w = &state.omega;
    let (k1, umax) = transport(w, v, dl)?;
    let limit = if umax == 0.0 { f64::INFINITY } else { CFL * w.grid().spacing() / umax };
    if dt > limit {
        return Err(Error::Cfl { dt, suggested: limit });
    }
    let stage = |k: &SpectralField, h: f64| -> Result<SpectralField> {
        let mut y = w.clone();
        y.axpy(num_complex::Complex64::new(h, 0.0), k)?;
        Ok(y)
    };
    let k2 = transport(&stage(&k1, 0.5 * dt)?, v, dl)?.0;
    let k3 = transport(&stage(&k2, 0.5 * dt)?, v, dl)?.0;
    let k4 = transport(&stage(&k3, dt)?, v, dl)?.0;
    let mut next = w.clone();
    for (k, c) in [(&k1, 1.0), (&k2, 2.0), (&k3, 2.0), (&k4, 1.0)] {
        next.axpy(num_complex::Complex64::new(dt * c / 6.0, 0.0), k)?;
    }
    if dl {
        dealias_in_place(&mut next);
    }
    if next.coeffs().iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
        return Err(Error::NonFinite(format!("state after step at t = {}", state.t)));
    }
    Ok(state.with_omega(next, state.t + dt))
}

/// Steps to `t_end` with fixed `dt`, calling `observe` on the initial state, every
/// `every` steps and on the final state.
pub fn evolve(
    state: SolverState,
    t_end: f64,
    dt: f64,
    every: usize,
    mut observe: impl FnMut(&SolverState) -> Result<()>,
) -> Result<SolverState> {
    if !(t_end >= state.t) {
        return Err(Error::InvalidArgument(format!("end time {t_end} precedes t = {}", state.t)));
    }
    if every == 0 {
        return Err(Error::InvalidArgument("observer interval must be at least 1".into()));
    }
    let steps = ((t_end - state.t) / dt).round() as usize;
    let t0 = state.t;
    let mut s = state;
    observe(&s)?;
    for k in 1..=steps {
        s = step_rk4(&s, dt)?;
        // avoid drift in the clock over many steps
        s.t = t0 + k as f64 * dt;
        if k % every == 0 || k == steps {
            observe(&s)?;
        }
    }
    Ok(s)
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvariantsReport {
    pub t: f64,
    pub energy: f64,
    pub enstrophy: f64,
    pub omega_min: f64,
    pub omega_max: f64,
    pub near_band_fraction: f64,
    /// `(s, ||w||_{H^s})` for each requested `s`.
    pub sobolev: Vec<(f64, f64)>,
    pub adapted: Option<f64>,
}

/// Energy `||u||^2`, enstrophy `||w||^2`, extrema, near-band mass and optional norms.
pub fn invariants_report(state: &SolverState, sobolev_s: &[f64], ctx: Option<&AdaptedNormContext>) -> Result<InvariantsReport> {
    let u = state.velocity()?;
    let phys: PhysicalField = inverse(&state.omega);
    let sobolev = sobolev_s
        .iter()
        .map(|&s| Ok((s, sobolev_norm(&state.omega, s)?)))
        .collect::<Result<Vec<_>>>()?;
    let adapted = ctx.map(|c| adapted_norm(&state.omega, c)).transpose()?;
    Ok(InvariantsReport {
        t: state.t,
        energy: u.l2_norm_sq(),
        enstrophy: state.omega.l2_norm_sq(),
        omega_min: phys.min(),
        omega_max: phys.max(),
        near_band_fraction: near_band_fraction(&state.omega),
        sobolev,
        adapted,
    })
}
