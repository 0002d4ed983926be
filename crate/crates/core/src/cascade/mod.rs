//! Semiclassical pairings, convergence rates, the Lyapunov pairing and growth checks.

use crate::dyadic::smoothstep;
use crate::error::{Error, Result};
use crate::fourier::SpectralField;

mod lyapunov;
mod pairing;
mod report;
mod run;

pub use lyapunov::{lyapunov_pairing, LyapunovFrame, LyapunovSetup, LyapunovValues};
pub use pairing::{
    dyadic_exponent, fit_slope, rate_check, semiclassical_apply, semiclassical_pairing, semiclassical_pairing_complex,
    RateReport,
};
pub use report::{
    cascade_report, growth_inequality_check, lyapunov_value, time_derivative, CascadeReport, GrowthRecord, PairingRow,
    PairingSeries, ReportOptions, TrustLimits, Verdicts,
};
pub use run::{run_cascade, CascadeRun, CascadeSettings, Snapshot};

/// Smooth radial bump supported in `r0 <= |xi| <= r1`, peaking at 1 at the midpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiCutoff {
    r0: f64,
    r1: f64,
}

impl ChiCutoff {
    pub fn new(r0: f64, r1: f64) -> Result<Self> {
        if !(r0 >= 1.0 && r0.is_finite()) {
            return Err(Error::InvalidArgument(format!("inner radius {r0} must be at least 1")));
        }
        if !(r1 > r0 && r1.is_finite()) {
            return Err(Error::InvalidArgument(format!("outer radius {r1} must exceed inner radius {r0}")));
        }
        Ok(Self { r0, r1 })
    }

    pub fn inner(&self) -> f64 {
        self.r0
    }

    pub fn outer(&self) -> f64 {
        self.r1
    }

    pub fn eval(&self, r: f64) -> f64 {
        let w = 0.5 * (self.r1 - self.r0);
        smoothstep((r - self.r0) / w) * smoothstep((self.r1 - r) / w)
    }

    /// `chi(eps D) f`.
    pub fn apply(&self, f: &SpectralField, eps: f64) -> SpectralField {
        f.apply_radial(|r| self.eval(eps * r))
    }
}

impl Default for ChiCutoff {
    fn default() -> Self {
        Self { r0: 1.0, r1: 2.0 }
    }
}
