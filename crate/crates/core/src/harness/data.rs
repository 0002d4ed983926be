//! Seeded initial vorticity with a prescribed algebraic Fourier tail.

use crate::dyadic::{slow_varying_table, smoothstep, tail_masses, tail_profile, AdaptedNormContext};
use crate::error::{Error, Result};
use crate::fourier::{forward, Grid2D, PhysicalField, SpectralField};
use crate::cascade::fit_slope;
use num_complex::Complex64;
use rand_core::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;
use std::f64::consts::TAU;
use std::path::PathBuf;

#[derive(Debug, Clone, PartialEq)]
pub enum DataKind {
    PowerLaw,
    /// `shear cos x2` plus the power-law field.
    ShearPlusPowerLaw { shear: f64 },
    /// Power law truncated to integer radius `band`.
    BandLimited { band: f64 },
    /// A PCF1 snapshot of the vorticity.
    File(PathBuf),
}

impl DataKind {
    pub fn name(&self) -> &'static str {
        match self {
            DataKind::PowerLaw => "powerlaw",
            DataKind::ShearPlusPowerLaw { .. } => "shear_plus_powerlaw",
            DataKind::BandLimited { .. } => "bandlimited",
            DataKind::File(_) => "file",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataSpec {
    pub kind: DataKind,
    /// Requested tail exponent: `dr(eps) ~ eps^s`.
    pub s: f64,
    pub seed: u64,
    pub amplitude: f64,
}

#[derive(Debug, Clone)]
pub struct GeneratedData {
    pub omega: SpectralField,
    pub ctx: AdaptedNormContext,
    /// Fitted tail exponent, `None` when the field has no usable tail.
    pub tail_exponent: Option<f64>,
}

/// Uniforms in `[0, 1)` from the top 53 bits of a splitmix64 stream.
pub struct PhaseStream(SplitMix64);

impl PhaseStream {
    pub fn new(seed: u64) -> Self {
        Self(SplitMix64::seed_from_u64(seed))
    }

    pub fn uniform(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// Smooth ramp from 0 at radius 1/2 to 1 at radius 3/2.
fn low_taper(r: f64) -> f64 {
    smoothstep(r - 0.5)
}

/// `A |k|^(-1-s) phi(|k|) e^(i theta_k)` on integer radii `0 < |k| <= band`, Hermitian.
/// One phase is drawn per lattice point in row-major order; the partner of each
/// mode takes the conjugate.
pub fn power_law_field(grid: Grid2D, s: f64, amplitude: f64, seed: u64, band: f64) -> SpectralField {
    let n = grid.n();
    let mut stream = PhaseStream::new(seed);
    let phases: Vec<f64> = (0..n * n).map(|_| TAU * stream.uniform()).collect();
    let mut out = SpectralField::zeros(grid);
    let neg = |i: usize| (n - i) % n;
    let c = out.coeffs_mut();
    for i1 in 0..n {
        for i2 in 0..n {
            let (k1, k2) = (grid.wave_index(i1), grid.wave_index(i2));
            let lattice_r = ((k1 * k1 + k2 * k2) as f64).sqrt();
            if lattice_r == 0.0 || lattice_r > band || grid.is_nyquist(i1) || grid.is_nyquist(i2) {
                continue;
            }
            let a = i1 * n + i2;
            let b = neg(i1) * n + neg(i2);
            if a > b {
                continue;
            }
            let r = grid.frequency_norm(i1, i2);
            let z = Complex64::from_polar(amplitude * r.powf(-1.0 - s) * low_taper(lattice_r), phases[a]);
            c[a] = z;
            c[b] = z.conj();
        }
    }
    out
}

/// Fitted slope of `log2 dr` against `log2 eps` for `eps = 2^-2 .. 2^-j`, `2^j <= n/8`.
/// Radii below 4 are skipped: lattice points on the threshold circle dominate there.
pub fn tail_exponent(f: &SpectralField) -> Result<f64> {
    let top = (f.grid().n() / 8).trailing_zeros() as i32;
    if top < 4 {
        return Err(Error::InsufficientDynamicRange(format!("n = {} gives fewer than 3 octaves", f.grid().n())));
    }
    let eps: Vec<f64> = (2..=top).map(|j| (-(j as f64)).exp2()).collect();
    let dr = tail_masses(f, &eps)?;
    if dr.iter().any(|d| !(*d > 0.0)) {
        return Err(Error::InsufficientDynamicRange("tail vanishes inside the fit window".into()));
    }
    let x: Vec<f64> = eps.iter().map(|e| e.log2()).collect();
    let y: Vec<f64> = dr.iter().map(|d| d.log2()).collect();
    Ok(fit_slope(&x, &y))
}

fn context_for(omega: &SpectralField) -> AdaptedNormContext {
    slow_varying_table(&tail_profile(omega)).unwrap_or_else(|_| AdaptedNormContext::for_field(omega))
}

/// Reads, generates and self-checks initial data on `grid`.
pub fn generate_initial_data(spec: &DataSpec, grid: Grid2D) -> Result<GeneratedData> {
    if let DataKind::File(path) = &spec.kind {
        let field = crate::harness::io::read_pcf1(path)?;
        field.grid().check_same(&grid)?;
        let omega = forward(&field);
        let mean = omega.mean().norm();
        if mean > 1e-12 * omega.l2_norm().max(f64::MIN_POSITIVE) {
            return Err(Error::NonZeroMean(mean));
        }
        let ctx = context_for(&omega);
        return Ok(GeneratedData { tail_exponent: tail_exponent(&omega).ok(), ctx, omega });
    }
    if !(spec.s > 1.0 && spec.s <= 4.0) {
        return Err(Error::InvalidArgument(format!("tail exponent s = {} must lie in (1, 4]", spec.s)));
    }
    let disk = (grid.n() / 3) as f64;
    if let DataKind::ShearPlusPowerLaw { shear } = spec.kind {
        if spec.amplitude == 0.0 {
            if !(shear != 0.0 && shear.is_finite()) {
                return Err(Error::InvalidArgument("shear and amplitude are both zero".into()));
            }
            let omega = forward(&PhysicalField::from_fn(grid, |_, x2| shear * (TAU / grid.length() * x2).cos()));
            let ctx = AdaptedNormContext::for_field(&omega);
            return Ok(GeneratedData { omega, ctx, tail_exponent: None });
        }
    }
    if !(spec.amplitude > 0.0 && spec.amplitude.is_finite()) {
        return Err(Error::InvalidArgument(format!("amplitude = {} must be positive", spec.amplitude)));
    }
    match &spec.kind {
        DataKind::BandLimited { band } => {
            if !(*band >= 1.0 && *band <= disk) {
                return Err(Error::InvalidArgument(format!("band = {band} must lie in [1, {disk}]")));
            }
            let omega = power_law_field(grid, spec.s, spec.amplitude, spec.seed, *band);
            let ctx = AdaptedNormContext::for_field(&omega);
            Ok(GeneratedData { omega, ctx, tail_exponent: None })
        }
        kind => {
            if grid.n() < 128 {
                return Err(Error::InsufficientDynamicRange(format!(
                    "s = {} is not resolvable at n = {}, need n >= 128",
                    spec.s,
                    grid.n()
                )));
            }
            let mut omega = power_law_field(grid, spec.s, spec.amplitude, spec.seed, disk);
            let fit = tail_exponent(&omega)?;
            if (fit - spec.s).abs() > 0.1 {
                return Err(Error::InsufficientDynamicRange(format!(
                    "realized tail exponent {fit} misses s = {} by more than 0.1 at n = {}",
                    spec.s,
                    grid.n()
                )));
            }
            let ctx = slow_varying_table(&tail_profile(&omega))?;
            if !ctx.slow_vary.as_ref().is_some_and(|t| t.algebraic) {
                return Err(Error::InsufficientDynamicRange("generated tail is not flagged algebraic".into()));
            }
            if let DataKind::ShearPlusPowerLaw { shear } = kind {
                let s = forward(&PhysicalField::from_fn(grid, |_, x2| *shear * (TAU / grid.length() * x2).cos()));
                omega.add_assign(&s)?;
            }
            Ok(GeneratedData { omega, ctx, tail_exponent: Some(fit) })
        }
    }
}
