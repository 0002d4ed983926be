//! Semiclassical pairings `(T_{a(x, eps xi)} u, v)` and their decay rates in `eps`.

use crate::dyadic::{tail_masses, DyadicPartition};
use crate::error::{Error, Result};
use crate::fourier::{inner_complex, l2_inner, SpectralField};
use crate::paracalc::{symbol_seminorm, AdmissibleCutoff, ParadiffOperator, SymbolRep};
use num_complex::Complex64;

/// `m` with `eps = 2^-m`, or an error off the dyadic grid.
pub fn dyadic_exponent(eps: f64) -> Result<usize> {
    let m = -eps.log2();
    if !(eps > 0.0 && eps <= 1.0) || (m - m.round()).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!("eps = {eps} is not on the dyadic grid 2^-m")));
    }
    Ok(m.round() as usize)
}

/// Block shift realizing the dilation `xi -> eps xi`: the high blocks start at `N0 + m`.
fn semiclassical_shift(u: &SpectralField, eps: f64, cutoff: &AdmissibleCutoff) -> Result<usize> {
    let m = dyadic_exponent(eps)?;
    let kmax = DyadicPartition::new(*u.grid()).kmax();
    if cutoff.n0() + m > kmax {
        return Err(Error::Unresolved(format!(
            "semiclassical scale eps = {eps} needs block {} beyond kmax = {kmax}",
            cutoff.n0() + m
        )));
    }
    Ok(m)
}

/// `T_{a(x, eps D)} u`.
pub fn semiclassical_apply(a: &SymbolRep, eps: f64, u: &SpectralField, cutoff: &AdmissibleCutoff) -> Result<SpectralField> {
    let shift = semiclassical_shift(u, eps, cutoff)?;
    ParadiffOperator::new(a, cutoff).apply_shifted(u, shift)
}

/// `(T_{a(x, eps D)} u, v)` for real fields.
pub fn semiclassical_pairing(a: &SymbolRep, eps: f64, u: &SpectralField, v: &SpectralField, cutoff: &AdmissibleCutoff) -> Result<f64> {
    u.grid().check_same(v.grid())?;
    l2_inner(&semiclassical_apply(a, eps, u, cutoff)?, v)
}

/// Sesquilinear form `(T_{a(x, eps D)} u, v)`, conjugate-linear in `v`.
pub fn semiclassical_pairing_complex(
    a: &SymbolRep,
    eps: f64,
    u: &SpectralField,
    v: &SpectralField,
    cutoff: &AdmissibleCutoff,
) -> Result<Complex64> {
    u.grid().check_same(v.grid())?;
    inner_complex(&semiclassical_apply(a, eps, u, cutoff)?, v)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub eps: Vec<f64>,
    pub pairing: Vec<f64>,
    /// `|pairing| / (M(a) dr_u(kappa eps) dr_v(kappa eps))` per `eps`.
    pub envelope: Vec<f64>,
    pub sup_envelope: f64,
    /// Least-squares slope of `log2 |pairing|` against `log2 eps`.
    pub exponent: f64,
    pub seminorm: f64,
    pub kappa: f64,
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Pairings over a decreasing dyadic `eps` list with the envelope of the rate bound.
pub fn rate_check(
    a: &SymbolRep,
    u: &SpectralField,
    v: &SpectralField,
    eps: &[f64],
    cutoff: &AdmissibleCutoff,
    kappa: f64,
) -> Result<RateReport> {
    if eps.len() < 3 {
        return Err(Error::InsufficientDynamicRange(format!("{} eps values, need 3", eps.len())));
    }
    if !(kappa > 0.0 && kappa <= 1.0) {
        return Err(Error::InvalidArgument(format!("kappa = {kappa} must lie in (0, 1]")));
    }
    let seminorm = symbol_seminorm(a, 0.0, 0, 2)?;
    let scaled: Vec<f64> = eps.iter().map(|e| kappa * e).collect();
    let dru = tail_masses(u, &scaled)?;
    let drv = tail_masses(v, &scaled)?;
    let mut op = ParadiffOperator::new(a, cutoff);
    let mut pairing = Vec::with_capacity(eps.len());
    let mut envelope = Vec::with_capacity(eps.len());
    for (j, &e) in eps.iter().enumerate() {
        let shift = semiclassical_shift(u, e, cutoff)?;
        let p = l2_inner(&op.apply_shifted(u, shift)?, v)?;
        let den = seminorm * dru[j] * drv[j];
        if !(den > 0.0) {
            return Err(Error::InsufficientDynamicRange(format!("tail vanishes at eps = {e}")));
        }
        pairing.push(p);
        envelope.push(p.abs() / den);
    }
    let usable: Vec<usize> = (0..eps.len()).filter(|&j| pairing[j] != 0.0).collect();
    if usable.len() < 3 {
        return Err(Error::InsufficientDynamicRange("fewer than 3 nonzero pairings".into()));
    }
    let x: Vec<f64> = usable.iter().map(|&j| eps[j].log2()).collect();
    let y: Vec<f64> = usable.iter().map(|&j| pairing[j].abs().log2()).collect();
    let exponent = fit_slope(&x, &y);
    let sup_envelope = envelope.iter().cloned().fold(0.0, f64::max);
    Ok(RateReport { eps: eps.to_vec(), pairing, envelope, sup_envelope, exponent, seminorm, kappa })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::tail_mass;
    use crate::fourier::Grid2D;
    use crate::paracalc::Multiplier;

    fn power_law(g: Grid2D, s: f64, seed: i64) -> SpectralField {
        // |c_k| = |k|^(-1-s) on a disk, deterministic phases
        let band = g.n() as f64 / 3.0;
        SpectralField::from_modes(g, |k1, k2| {
            let r = ((k1 * k1 + k2 * k2) as f64).sqrt();
            if r == 0.0 || r > band {
                return Complex64::new(0.0, 0.0);
            }
            Complex64::from_polar(r.powf(-1.0 - s), (((k1 * 31 + k2 * 17 + seed) as f64) * 0.7).sin() * 3.0)
        })
        .real_part()
    }

    #[test]
    fn unit_symbol_pairs_to_the_high_part() {
        let g = Grid2D::periodic(128).unwrap();
        let c = AdmissibleCutoff::default();
        let u = power_law(g, 1.5, 0);
        let one = SymbolRep::constant(g, 1.0);
        let p = semiclassical_pairing(&one, 0.25, &u, &u, &c).unwrap();
        // high blocks from N0 + 2 start at radius 2^(N0 + 1)
        let lower = tail_mass(&u, 1.0 / 64.0).powi(2);
        let upper = tail_mass(&u, 1.0 / 16.0).powi(2);
        assert!(p >= lower && p <= upper, "{lower} <= {p} <= {upper}");
    }

    #[test]
    fn polarization_identity() {
        let g = Grid2D::periodic(64).unwrap();
        let c = AdmissibleCutoff::default();
        let u = power_law(g, 1.0, 1);
        let v = power_law(g, 1.5, 2);
        let a = SymbolRep::multiplier(g, Multiplier::Japanese(-1.0), -1.0);
        let eps = 0.5;
        let q = |w: &SpectralField| semiclassical_pairing_complex(&a, eps, w, w, &c).unwrap();
        let i = Complex64::new(0.0, 1.0);
        let mut sum = Complex64::new(0.0, 0.0);
        for ik in [Complex64::new(1.0, 0.0), i, Complex64::new(-1.0, 0.0), -i] {
            let mut w = u.clone();
            w.axpy(ik, &v).unwrap();
            sum += ik * q(&w);
        }
        let direct = semiclassical_pairing_complex(&a, eps, &u, &v, &c).unwrap();
        assert!((sum / 4.0 - direct).norm() <= 1e-12 * direct.norm().max(1e-300));
    }

    #[test]
    fn band_limited_pairing_vanishes() {
        let g = Grid2D::periodic(64).unwrap();
        let c = AdmissibleCutoff::default();
        let u = power_law(g, 1.0, 3).apply_radial(|r| if r <= 6.0 { 1.0 } else { 0.0 });
        let v = power_law(g, 1.0, 4);
        let one = SymbolRep::constant(g, 1.0);
        assert_eq!(semiclassical_pairing(&one, 0.5, &u, &v, &c).unwrap(), 0.0);
        assert!(matches!(semiclassical_pairing(&one, 1.0 / 8.0, &u, &v, &c), Err(Error::Unresolved(_))));
        assert!(semiclassical_pairing(&one, 0.3, &u, &v, &c).is_err());
    }

    #[test]
    fn slope_fit() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 3.0, 5.0, 7.0];
        assert!((fit_slope(&x, &y) - 2.0).abs() < 1e-15);
    }
}
