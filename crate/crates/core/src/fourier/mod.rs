//! Periodic grid, spectral fields and the basic Fourier operators.
//!
//! Layout: index `(i1, i2)` is stored at `i1 * n + i2`, with `x1 = i1 * h` and
//! `x2 = i2 * h`. Spectral coefficients are normalized Fourier-series
//! coefficients, `f(x) = sum_k c_k exp(i k.x)`. The lattice index `i` carries the
//! integer wave number `i` for `i < n/2` and `i - n` otherwise; `-n/2` is the
//! Nyquist index. `L2` norms and pairings are true integrals over the period
//! cell, `||f||^2 = L^2 sum |c_k|^2`.

pub(crate) mod fft;
pub mod interp;
pub(crate) mod padded;

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::PI;

pub use interp::{evaluate_direct, FieldInterpolator, InterpOptions};
pub use padded::product;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    n: usize,
    length: f64,
}

impl Grid2D {
    /// `n` must be a power of two `>= 16`; `length` the period of both axes.
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!("n = {n} must be a power of two >= 16")));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!("period L = {length} must be positive")));
        }
        Ok(Self { n, length })
    }

    pub fn periodic(n: usize) -> Result<Self> {
        Self::new(n, 2.0 * PI)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Conversion factor from integer wave numbers to angular frequencies.
    pub fn wavenumber_scale(&self) -> f64 {
        2.0 * PI / self.length
    }

    pub fn wave_index(&self, i: usize) -> i64 {
        if i < self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    pub fn lattice_index(&self, k: i64) -> usize {
        k.rem_euclid(self.n as i64) as usize
    }

    pub fn is_nyquist(&self, i: usize) -> bool {
        i == self.n / 2
    }

    pub fn frequency(&self, i1: usize, i2: usize) -> (f64, f64) {
        let s = self.wavenumber_scale();
        (s * self.wave_index(i1) as f64, s * self.wave_index(i2) as f64)
    }

    pub fn frequency_norm(&self, i1: usize, i2: usize) -> f64 {
        let (a, b) = self.frequency(i1, i2);
        a.hypot(b)
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        i as f64 * self.spacing()
    }

    /// Largest `|xi|` on the lattice.
    pub fn max_frequency(&self) -> f64 {
        self.wavenumber_scale() * (self.n as f64 / 2.0) * 2f64.sqrt()
    }

    pub(crate) fn check_same(&self, other: &Grid2D) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!(
                "n = {} L = {} vs n = {} L = {}",
                self.n, self.length, other.n, other.length
            )));
        }
        Ok(())
    }

    pub(crate) fn neg_index(&self, i: usize) -> usize {
        (self.n - i) % self.n
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalField {
    grid: Grid2D,
    values: Vec<f64>,
}

impl PhysicalField {
    pub fn new(grid: Grid2D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("physical field".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid2D) -> Self {
        Self { grid, values: vec![0.0; grid.len()] }
    }

    pub fn from_fn(grid: Grid2D, f: impl Fn(f64, f64) -> f64) -> Self {
        let n = grid.n;
        let mut values = Vec::with_capacity(n * n);
        for i1 in 0..n {
            for i2 in 0..n {
                values.push(f(grid.coordinate(i1), grid.coordinate(i2)));
            }
        }
        Self { grid, values }
    }

    pub(crate) fn from_raw(grid: Grid2D, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, i1: usize, i2: usize) -> f64 {
        self.values[i1 * self.grid.n + i2]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Trapezoidal `L2` norm, exact for trigonometric polynomials on the grid.
    pub fn l2_norm(&self) -> f64 {
        let h = self.grid.spacing();
        (self.values.iter().map(|v| v * v).sum::<f64>()).sqrt() * h
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: Grid2D,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn new(grid: Grid2D, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} coefficients, got {}",
                grid.len(),
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::NonFinite("spectral field".into()));
        }
        Ok(Self { grid, coeffs })
    }

    pub(crate) fn from_raw(grid: Grid2D, coeffs: Vec<Complex64>) -> Self {
        debug_assert_eq!(coeffs.len(), grid.len());
        Self { grid, coeffs }
    }

    pub fn zeros(grid: Grid2D) -> Self {
        Self { grid, coeffs: vec![ZERO; grid.len()] }
    }

    /// Build from integer wave numbers `(k1, k2)`.
    pub fn from_modes(grid: Grid2D, f: impl Fn(i64, i64) -> Complex64) -> Self {
        let n = grid.n;
        let mut coeffs = Vec::with_capacity(n * n);
        for i1 in 0..n {
            for i2 in 0..n {
                coeffs.push(f(grid.wave_index(i1), grid.wave_index(i2)));
            }
        }
        Self { grid, coeffs }
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn mode(&self, k1: i64, k2: i64) -> Complex64 {
        let n = self.grid.n;
        self.coeffs[self.grid.lattice_index(k1) * n + self.grid.lattice_index(k2)]
    }

    pub fn set_mode(&mut self, k1: i64, k2: i64, c: Complex64) {
        let n = self.grid.n;
        let idx = self.grid.lattice_index(k1) * n + self.grid.lattice_index(k2);
        self.coeffs[idx] = c;
    }

    pub fn mean(&self) -> Complex64 {
        self.coeffs[0]
    }

    /// `out(xi) = m(xi) * f(xi)` with `m` evaluated at angular frequencies.
    pub fn apply_multiplier(&self, m: impl Fn(f64, f64) -> Complex64) -> SpectralField {
        let n = self.grid.n;
        let mut out = self.coeffs.clone();
        for i1 in 0..n {
            for i2 in 0..n {
                let (a, b) = self.grid.frequency(i1, i2);
                out[i1 * n + i2] *= m(a, b);
            }
        }
        Self { grid: self.grid, coeffs: out }
    }

    /// Radial multiplier `m(|xi|)`, real-valued.
    pub fn apply_radial(&self, m: impl Fn(f64) -> f64) -> SpectralField {
        let n = self.grid.n;
        let mut out = self.coeffs.clone();
        for i1 in 0..n {
            for i2 in 0..n {
                out[i1 * n + i2] *= m(self.grid.frequency_norm(i1, i2));
            }
        }
        Self { grid: self.grid, coeffs: out }
    }

    pub fn zero_nyquist(&mut self) {
        let n = self.grid.n;
        let h = n / 2;
        for j in 0..n {
            self.coeffs[h * n + j] = ZERO;
            self.coeffs[j * n + h] = ZERO;
        }
    }

    pub fn l2_norm_sq(&self) -> f64 {
        let l = self.grid.length;
        l * l * self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>()
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    pub fn l1_coeffs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).sum()
    }

    pub fn max_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.norm()))
    }

    /// True when the coefficients are Hermitian symmetric to rounding, so the
    /// synthesized field is real.
    pub fn is_real(&self) -> bool {
        let n = self.grid.n;
        let scale = self.max_coeff();
        if scale == 0.0 {
            return true;
        }
        let tol = 1e-14 * scale;
        for i1 in 0..n {
            let j1 = self.grid.neg_index(i1);
            for i2 in 0..n {
                let j2 = self.grid.neg_index(i2);
                if (self.coeffs[i1 * n + i2] - self.coeffs[j1 * n + j2].conj()).norm() > tol {
                    return false;
                }
            }
        }
        true
    }

    /// Replace by the Hermitian part, i.e. the spectrum of the real part.
    pub fn symmetrize(&mut self) {
        let n = self.grid.n;
        for i1 in 0..n {
            let j1 = self.grid.neg_index(i1);
            for i2 in 0..n {
                let j2 = self.grid.neg_index(i2);
                let a = i1 * n + i2;
                let b = j1 * n + j2;
                if a < b {
                    let s = 0.5 * (self.coeffs[a] + self.coeffs[b].conj());
                    self.coeffs[a] = s;
                    self.coeffs[b] = s.conj();
                } else if a == b {
                    self.coeffs[a] = Complex64::new(self.coeffs[a].re, 0.0);
                }
            }
        }
    }

    /// True when only the zero mode is nonzero.
    pub fn is_constant(&self) -> bool {
        self.coeffs[1..].iter().all(|c| *c == ZERO)
    }

    pub fn scale(&self, s: f64) -> SpectralField {
        Self { grid: self.grid, coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    pub fn scale_complex(&self, s: Complex64) -> SpectralField {
        Self { grid: self.grid, coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    pub fn conj_field(&self) -> SpectralField {
        // conj(f)^(k) = conj(f^(-k))
        let n = self.grid.n;
        let mut out = vec![ZERO; n * n];
        for i1 in 0..n {
            let j1 = self.grid.neg_index(i1);
            for i2 in 0..n {
                out[i1 * n + i2] = self.coeffs[j1 * n + self.grid.neg_index(i2)].conj();
            }
        }
        Self { grid: self.grid, coeffs: out }
    }

    pub fn add(&self, other: &SpectralField) -> Result<SpectralField> {
        self.grid.check_same(&other.grid)?;
        Ok(Self {
            grid: self.grid,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &SpectralField) -> Result<SpectralField> {
        self.grid.check_same(&other.grid)?;
        Ok(Self {
            grid: self.grid,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect(),
        })
    }

    /// `self += s * other`
    pub fn axpy(&mut self, s: Complex64, other: &SpectralField) -> Result<()> {
        self.grid.check_same(&other.grid)?;
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += s * b;
        }
        Ok(())
    }

    pub fn add_assign(&mut self, other: &SpectralField) -> Result<()> {
        self.axpy(Complex64::new(1.0, 0.0), other)
    }

    /// Real part of the synthesized field as a spectrum.
    pub fn real_part(&self) -> SpectralField {
        let mut s = self.clone();
        s.symmetrize();
        s
    }

    /// Combine two real fields into `f + i g`, the packing used to share transforms.
    pub fn pack(f: &SpectralField, g: &SpectralField) -> Result<SpectralField> {
        f.grid.check_same(&g.grid)?;
        let i = Complex64::new(0.0, 1.0);
        Ok(Self {
            grid: f.grid,
            coeffs: f.coeffs.iter().zip(&g.coeffs).map(|(a, b)| a + i * b).collect(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub u1: SpectralField,
    pub u2: SpectralField,
}

impl VectorField {
    pub fn new(u1: SpectralField, u2: SpectralField) -> Result<Self> {
        u1.grid.check_same(&u2.grid)?;
        Ok(Self { u1, u2 })
    }

    pub fn grid(&self) -> &Grid2D {
        &self.u1.grid
    }

    pub fn curl(&self) -> SpectralField {
        let a = derivative(&self.u2, (1, 0));
        let b = derivative(&self.u1, (0, 1));
        a.sub(&b).expect("same grid")
    }

    pub fn divergence(&self) -> SpectralField {
        let a = derivative(&self.u1, (1, 0));
        let b = derivative(&self.u2, (0, 1));
        a.add(&b).expect("same grid")
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.u1.l2_norm_sq() + self.u2.l2_norm_sq()
    }

    pub fn packed(&self) -> SpectralField {
        SpectralField::pack(&self.u1, &self.u2).expect("same grid")
    }
}

/// Forward transform of a real field; the result is exactly Hermitian.
pub fn forward(f: &PhysicalField) -> SpectralField {
    let n = f.grid.n;
    let mut buf: Vec<Complex64> = f.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft::fft2(&mut buf, n, false);
    let s = 1.0 / (n * n) as f64;
    buf.iter_mut().for_each(|c| *c *= s);
    let mut out = SpectralField { grid: f.grid, coeffs: buf };
    out.symmetrize();
    out
}

pub fn forward_complex(grid: Grid2D, values: &[Complex64]) -> Result<SpectralField> {
    if values.len() != grid.len() {
        return Err(Error::InvalidArgument("length mismatch".into()));
    }
    let n = grid.n;
    let mut buf = values.to_vec();
    fft::fft2(&mut buf, n, false);
    let s = 1.0 / (n * n) as f64;
    buf.iter_mut().for_each(|c| *c *= s);
    Ok(SpectralField { grid, coeffs: buf })
}

/// Synthesis on the grid; returns the real part.
pub fn inverse(f: &SpectralField) -> PhysicalField {
    let vals = inverse_complex(f);
    PhysicalField { grid: f.grid, values: vals.iter().map(|c| c.re).collect() }
}

pub fn inverse_complex(f: &SpectralField) -> Vec<Complex64> {
    let mut buf = f.coeffs.clone();
    fft::fft2(&mut buf, f.grid.n, true);
    buf
}

/// Synthesize two real fields with one complex transform.
pub fn inverse_pair(f: &SpectralField, g: &SpectralField) -> Result<(PhysicalField, PhysicalField)> {
    let packed = SpectralField::pack(f, g)?;
    let vals = inverse_complex(&packed);
    let grid = f.grid;
    Ok((
        PhysicalField { grid, values: vals.iter().map(|c| c.re).collect() },
        PhysicalField { grid, values: vals.iter().map(|c| c.im).collect() },
    ))
}

/// Spectral derivative `d^a1/dx1 d^a2/dx2`. Nyquist rows and columns are zeroed
/// for every nonzero order.
pub fn derivative(f: &SpectralField, order: (u32, u32)) -> SpectralField {
    if order == (0, 0) {
        return f.clone();
    }
    let i = Complex64::new(0.0, 1.0);
    let mut out = f.apply_multiplier(|a, b| (i * a).powu(order.0) * (i * b).powu(order.1));
    out.zero_nyquist();
    out
}

pub fn laplacian(f: &SpectralField) -> SpectralField {
    let mut out = f.apply_multiplier(|a, b| Complex64::new(-(a * a + b * b), 0.0));
    out.zero_nyquist();
    out
}

/// `|xi|^p` on nonzero modes, zero on the mean and Nyquist modes.
pub fn fractional_laplacian_power(f: &SpectralField, p: f64) -> SpectralField {
    let mut out = f.apply_multiplier(|a, b| {
        let r2 = a * a + b * b;
        if r2 == 0.0 {
            ZERO
        } else {
            Complex64::new(r2.powf(0.5 * p), 0.0)
        }
    });
    out.zero_nyquist();
    out
}

fn check_zero_mean(f: &SpectralField) -> Result<()> {
    let norm = f.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if f.mean().norm() > 1e-12 * norm.max(f64::MIN_POSITIVE) {
        return Err(Error::NonZeroMean(f.mean().norm()));
    }
    Ok(())
}

/// Velocity `u = grad^perp psi` with `lap psi = omega`, so `curl u = omega`.
pub fn biot_savart(omega: &SpectralField) -> Result<VectorField> {
    check_zero_mean(omega)?;
    let i = Complex64::new(0.0, 1.0);
    let mut u1 = omega.apply_multiplier(|a, b| {
        let r2 = a * a + b * b;
        if r2 == 0.0 {
            ZERO
        } else {
            i * (b / r2)
        }
    });
    let mut u2 = omega.apply_multiplier(|a, b| {
        let r2 = a * a + b * b;
        if r2 == 0.0 {
            ZERO
        } else {
            -i * (a / r2)
        }
    });
    u1.zero_nyquist();
    u2.zero_nyquist();
    Ok(VectorField { u1, u2 })
}

/// gSQG velocity `u = -grad^perp (-lap)^(-alpha/2) theta`; `alpha = 2` is Biot-Savart.
pub fn fractional_velocity(theta: &SpectralField, alpha: f64) -> Result<VectorField> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(Error::InvalidArgument(format!("alpha = {alpha} must lie in (0, 2]")));
    }
    check_zero_mean(theta)?;
    let i = Complex64::new(0.0, 1.0);
    let weight = |a: f64, b: f64| {
        let r2 = a * a + b * b;
        if r2 == 0.0 {
            0.0
        } else {
            r2.powf(-0.5 * alpha)
        }
    };
    let mut u1 = theta.apply_multiplier(|a, b| i * (b * weight(a, b)));
    let mut u2 = theta.apply_multiplier(|a, b| -i * (a * weight(a, b)));
    u1.zero_nyquist();
    u2.zero_nyquist();
    Ok(VectorField { u1, u2 })
}

/// Real `L2` pairing `int f g` of real fields (real part for complex ones).
pub fn l2_inner(f: &SpectralField, g: &SpectralField) -> Result<f64> {
    Ok(inner_complex(f, g)?.re)
}

/// Sesquilinear pairing `int f conj(g)`.
pub fn inner_complex(f: &SpectralField, g: &SpectralField) -> Result<Complex64> {
    f.grid.check_same(&g.grid)?;
    let l = f.grid.length;
    let s: Complex64 = f.coeffs.iter().zip(&g.coeffs).map(|(a, b)| a * b.conj()).sum();
    Ok(s * (l * l))
}

/// Largest retained wave number per axis under the two-thirds rule.
pub fn dealias_cutoff(n: usize) -> i64 {
    (n / 3) as i64
}

/// Zero every mode with `|k_i| > n/3` on either axis.
pub fn dealias(f: &SpectralField) -> SpectralField {
    let mut out = f.clone();
    dealias_in_place(&mut out);
    out
}

pub fn dealias_in_place(f: &mut SpectralField) {
    let g = f.grid;
    let n = g.n;
    let kc = dealias_cutoff(n);
    for i1 in 0..n {
        let k1 = g.wave_index(i1).abs();
        for i2 in 0..n {
            if k1 > kc || g.wave_index(i2).abs() > kc {
                f.coeffs[i1 * n + i2] = ZERO;
            }
        }
    }
}

/// Fraction of `sum |c|^2` carried by modes with `max |k_i| > n/4`.
pub fn near_band_fraction(f: &SpectralField) -> f64 {
    let g = f.grid;
    let n = g.n;
    let kq = (n / 4) as i64;
    let mut hi = 0.0;
    let mut tot = 0.0;
    for i1 in 0..n {
        let k1 = g.wave_index(i1).abs();
        for i2 in 0..n {
            let e = f.coeffs[i1 * n + i2].norm_sqr();
            tot += e;
            if k1.max(g.wave_index(i2).abs()) > kq {
                hi += e;
            }
        }
    }
    if tot == 0.0 {
        0.0
    } else {
        hi / tot
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(n: usize) -> Grid2D {
        Grid2D::periodic(n).unwrap()
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid2D::periodic(12).is_err());
        assert!(Grid2D::periodic(8).is_err());
        assert!(Grid2D::new(32, -1.0).is_err());
    }

    #[test]
    fn single_mode_lands_on_its_coefficient() {
        let g = grid(32);
        let f = PhysicalField::from_fn(g, |x1, x2| (3.0 * x1 - 2.0 * x2).cos());
        let s = forward(&f);
        assert!((s.mode(3, -2) - Complex64::new(0.5, 0.0)).norm() < 1e-14);
        assert!((s.mode(-3, 2) - Complex64::new(0.5, 0.0)).norm() < 1e-14);
        let rest: f64 = s.coeffs().iter().map(|c| c.norm()).sum::<f64>() - 1.0;
        assert!(rest.abs() < 1e-13);
    }

    #[test]
    fn derivative_of_sine() {
        let g = grid(32);
        let f = forward(&PhysicalField::from_fn(g, |x1, x2| (2.0 * x1).sin() * x2.cos()));
        let d = inverse(&derivative(&f, (1, 0)));
        let exact = PhysicalField::from_fn(g, |x1, x2| 2.0 * (2.0 * x1).cos() * x2.cos());
        let err = d.values().iter().zip(exact.values()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-12);
    }

    #[test]
    fn biot_savart_of_shear() {
        let g = grid(32);
        let w = forward(&PhysicalField::from_fn(g, |_, x2| x2.cos()));
        let u = biot_savart(&w).unwrap();
        let u1 = inverse(&u.u1);
        let u2 = inverse(&u.u2);
        for i1 in 0..32 {
            for i2 in 0..32 {
                let x2 = g.coordinate(i2);
                assert!((u1.get(i1, i2) + x2.sin()).abs() < 1e-13);
                assert!(u2.get(i1, i2).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn biot_savart_rejects_mean() {
        let g = grid(16);
        let w = forward(&PhysicalField::from_fn(g, |x1, _| 1.0 + x1.cos()));
        assert!(matches!(biot_savart(&w), Err(Error::NonZeroMean(_))));
    }

    #[test]
    fn gsqg_at_two_is_biot_savart() {
        let g = grid(32);
        let w = forward(&PhysicalField::from_fn(g, |x1, x2| (x1 + 2.0 * x2).sin() + (3.0 * x1).cos()));
        let a = biot_savart(&w).unwrap();
        let b = fractional_velocity(&w, 2.0).unwrap();
        let d = a.u1.sub(&b.u1).unwrap().l2_norm() + a.u2.sub(&b.u2).unwrap().l2_norm();
        assert!(d <= 1e-14 * a.l2_norm_sq().sqrt());
        assert!(fractional_velocity(&w, 2.5).is_err());
        assert!(fractional_velocity(&w, 0.0).is_err());
    }

    #[test]
    fn inner_product_matches_quadrature() {
        let g = grid(32);
        let f = PhysicalField::from_fn(g, |x1, x2| (x1 - x2).sin() + 0.3);
        let h = PhysicalField::from_fn(g, |x1, x2| (x1 - x2).sin() + (2.0 * x2).cos());
        let quad: f64 = f.values().iter().zip(h.values()).map(|(a, b)| a * b).sum::<f64>()
            * g.spacing()
            * g.spacing();
        let spec = l2_inner(&forward(&f), &forward(&h)).unwrap();
        assert!((quad - spec).abs() < 1e-12);
        // analytic value: int sin^2 = 2 pi^2
        assert!((spec - 2.0 * PI * PI).abs() < 1e-12);
    }

    #[test]
    fn grid_mismatch_is_an_error() {
        let a = SpectralField::zeros(grid(16));
        let b = SpectralField::zeros(grid(32));
        assert!(matches!(l2_inner(&a, &b), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn pair_inverse_splits_real_fields() {
        let g = grid(16);
        let f = PhysicalField::from_fn(g, |x1, x2| (x1 + x2).cos());
        let h = PhysicalField::from_fn(g, |x1, _| (3.0 * x1).sin());
        let (a, b) = inverse_pair(&forward(&f), &forward(&h)).unwrap();
        for k in 0..g.len() {
            assert!((a.values()[k] - f.values()[k]).abs() < 1e-14);
            assert!((b.values()[k] - h.values()[k]).abs() < 1e-14);
        }
    }

    #[test]
    fn near_band_fraction_counts_high_modes() {
        let g = grid(32);
        let f = forward(&PhysicalField::from_fn(g, |x1, x2| x1.cos() + (10.0 * x2).cos()));
        assert!((near_band_fraction(&f) - 0.5).abs() < 1e-14);
        assert!(near_band_fraction(&dealias(&f)) > 0.49);
        let d = dealias(&forward(&PhysicalField::from_fn(g, |x1, _| (11.0 * x1).cos())));
        assert!(d.l2_norm() < 1e-13);
    }

    proptest! {
        #[test]
        fn roundtrip_is_identity(vals in proptest::collection::vec(-10.0f64..10.0, 256)) {
            let g = grid(16);
            let f = PhysicalField::new(g, vals.clone()).unwrap();
            let back = inverse(&forward(&f));
            for (a, b) in back.values().iter().zip(&vals) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn parseval_matches_quadrature(vals in proptest::collection::vec(-5.0f64..5.0, 256)) {
            let g = grid(16);
            let f = PhysicalField::new(g, vals).unwrap();
            let a = f.l2_norm();
            let b = forward(&f).l2_norm();
            prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        }

        #[test]
        fn biot_savart_velocity_is_divergence_free_with_curl_omega(
            amps in proptest::collection::vec(-1.0f64..1.0, 6)
        ) {
            let g = grid(16);
            let w = forward(&PhysicalField::from_fn(g, |x1, x2| {
                amps[0] * x1.cos() + amps[1] * (2.0 * x2).sin() + amps[2] * (x1 + x2).cos()
                    + amps[3] * (3.0 * x1 - x2).sin() + amps[4] * (5.0 * x2).cos()
                    + amps[5] * (4.0 * x1 + 2.0 * x2).cos()
            }));
            let u = biot_savart(&w).unwrap();
            prop_assert!(u.divergence().l2_norm() < 1e-12);
            prop_assert!(u.curl().sub(&w).unwrap().l2_norm() < 1e-12);
        }
    }
}
