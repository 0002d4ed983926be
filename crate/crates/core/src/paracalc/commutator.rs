//! Commutator of a frequency cutoff with paradifferential transport.

use super::{diffeo::MatrixField, paraproduct, AdmissibleCutoff};
use crate::cascade::ChiCutoff;
use crate::dyadic::{tail_mass, ZERO_GUARD};
use crate::error::{Error, Result};
use crate::fourier::{derivative, inverse, SpectralField, VectorField};

/// `T_u . grad w = T_{u1} d1 w + T_{u2} d2 w`.
pub fn paratransport(u: &VectorField, w: &SpectralField, cutoff: &AdmissibleCutoff) -> Result<SpectralField> {
    let mut out = paraproduct(&u.u1, &derivative(w, (1, 0)), cutoff)?;
    out.add_assign(&paraproduct(&u.u2, &derivative(w, (0, 1)), cutoff)?)?;
    Ok(out)
}

/// `sup_x |Du(x)|` in operator norm.
pub fn velocity_gradient_sup(u: &VectorField) -> f64 {
    let e = [
        inverse(&derivative(&u.u1, (1, 0))),
        inverse(&derivative(&u.u1, (0, 1))),
        inverse(&derivative(&u.u2, (1, 0))),
        inverse(&derivative(&u.u2, (0, 1))),
    ];
    MatrixField::new(e).expect("shared grid").sup_operator_norm()
}

/// `||[chi(eps D), T_u . grad] w||_L2`.
pub fn commutator_norm(u: &VectorField, omega: &SpectralField, eps: f64, chi: &ChiCutoff, cutoff: &AdmissibleCutoff) -> Result<f64> {
    u.grid().check_same(omega.grid())?;
    let outer = chi.apply(&paratransport(u, omega, cutoff)?, eps);
    let inner = paratransport(u, &chi.apply(omega, eps), cutoff)?;
    Ok(outer.sub(&inner)?.l2_norm())
}

fn check_dyadic(eps: f64) -> Result<()> {
    let j = -eps.log2();
    if !(eps > 0.0 && eps <= 1.0 && (j - j.round()).abs() < 1e-12) {
        return Err(Error::InvalidArgument(format!("eps = {eps} is not on the dyadic grid 2^-j")));
    }
    Ok(())
}

/// `||[chi(eps D), T_u . grad] w|| / (||Du||_inf dr_w(lambda eps))` with `lambda = 1/r0`,
/// so the tail is measured from the inner edge of `chi(eps D)`.
pub fn commutator_check(u: &VectorField, omega: &SpectralField, eps: f64, chi: &ChiCutoff, cutoff: &AdmissibleCutoff) -> Result<f64> {
    commutator_ratio(u, omega, eps, chi, cutoff, 1.0 / chi.inner())
}

pub fn commutator_ratio(
    u: &VectorField,
    omega: &SpectralField,
    eps: f64,
    chi: &ChiCutoff,
    cutoff: &AdmissibleCutoff,
    lambda: f64,
) -> Result<f64> {
    check_dyadic(eps)?;
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!("lambda = {lambda} must be positive")));
    }
    let du = velocity_gradient_sup(u);
    if du == 0.0 {
        return Ok(0.0);
    }
    let dr = tail_mass(omega, lambda * eps);
    if !(dr > ZERO_GUARD * omega.l2_norm()) {
        return Err(Error::InsufficientDynamicRange(format!("dr(lambda eps) = {dr} at eps = {eps} is below the guard")));
    }
    Ok(commutator_norm(u, omega, eps, chi, cutoff)? / (du * dr))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::{biot_savart, forward, Grid2D, PhysicalField};
    use num_complex::Complex64;

    fn rough_field(g: Grid2D, s: f64) -> SpectralField {
        SpectralField::from_modes(g, |k1, k2| {
            let r = ((k1 * k1 + k2 * k2) as f64).sqrt();
            if r == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            let phase = ((k1 * 7919 + k2 * 104729) as f64).sin() * 3.0;
            Complex64::from_polar(r.powf(-1.0 - s), phase)
        })
        .real_part()
    }

    #[test]
    fn zero_and_constant_velocity() {
        let g = Grid2D::periodic(64).unwrap();
        let w = rough_field(g, 1.5);
        let chi = ChiCutoff::default();
        let c = AdmissibleCutoff::default();
        let zero = VectorField::new(SpectralField::zeros(g), SpectralField::zeros(g)).unwrap();
        assert_eq!(commutator_check(&zero, &w, 0.125, &chi, &c).unwrap(), 0.0);
        let mut a = SpectralField::zeros(g);
        a.set_mode(0, 0, Complex64::new(0.7, 0.0));
        let mut b = SpectralField::zeros(g);
        b.set_mode(0, 0, Complex64::new(-1.3, 0.0));
        let constant = VectorField::new(a, b).unwrap();
        assert!(commutator_norm(&constant, &w, 0.125, &chi, &c).unwrap() <= 1e-13 * w.l2_norm());
    }

    #[test]
    fn shear_envelope_is_flat_over_eps() {
        let g = Grid2D::periodic(256).unwrap();
        let w = rough_field(g, 1.5);
        let omega_shear = forward(&PhysicalField::from_fn(g, |_, x2| x2.cos() + 0.3 * (2.0 * x2 + 1.0).cos()));
        let u = biot_savart(&omega_shear).unwrap();
        let chi = ChiCutoff::default();
        let c = AdmissibleCutoff::default();
        // shells below 2^N0 are untouched by the paraproduct
        let ratios: Vec<f64> = (c.n0()..=6)
            .map(|j| commutator_check(&u, &w, (-(j as f64)).exp2(), &chi, &c).unwrap())
            .collect();
        let max = ratios.iter().cloned().fold(0.0, f64::max);
        let min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(min > 0.0 && max / min <= 10.0, "{ratios:?}");
    }

    #[test]
    fn off_grid_eps_is_rejected() {
        let g = Grid2D::periodic(32).unwrap();
        let w = rough_field(g, 1.5);
        let u = biot_savart(&w).unwrap();
        let c = AdmissibleCutoff::default();
        assert!(commutator_check(&u, &w, 0.3, &ChiCutoff::default(), &c).is_err());
    }
}
