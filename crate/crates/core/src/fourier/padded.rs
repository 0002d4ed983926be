//! Exact products of lattice fields on a 3/2 zero-padded grid.
//!
//! Two lattice fields have product modes in `[-n, n]`; on an `m = 3n/2` grid
//! none of these alias back onto `(-n/2, n/2)`, so truncating the padded
//! product reproduces every non-Nyquist lattice mode of the exact product. Nyquist
//! coefficients are split evenly between `+n/2` and `-n/2` so that real fields
//! stay real on the padded grid.

use super::{fft, Grid2D, SpectralField};
use crate::error::Result;
use num_complex::Complex64;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

pub(crate) fn padded_size(n: usize) -> usize {
    3 * n / 2
}

fn axis_targets(n: usize, m: usize, i: usize) -> [(usize, f64); 2] {
    if i == n / 2 {
        [(m - n / 2, 0.5), (n / 2, 0.5)]
    } else if i < n / 2 {
        [(i, 1.0), (usize::MAX, 0.0)]
    } else {
        [(m - (n - i), 1.0), (usize::MAX, 0.0)]
    }
}

fn spread(f: &SpectralField, m: usize) -> Vec<Complex64> {
    let n = f.grid().n();
    let c = f.coeffs();
    let mut buf = vec![ZERO; m * m];
    for i1 in 0..n {
        let t1 = axis_targets(n, m, i1);
        for i2 in 0..n {
            let v = c[i1 * n + i2];
            if v == ZERO {
                continue;
            }
            let t2 = axis_targets(n, m, i2);
            for &(a, wa) in &t1 {
                if wa == 0.0 {
                    continue;
                }
                for &(b, wb) in &t2 {
                    if wb == 0.0 {
                        continue;
                    }
                    buf[a * m + b] += v * (wa * wb);
                }
            }
        }
    }
    buf
}

/// Synthesis of a lattice field on the padded grid.
pub(crate) fn to_padded(f: &SpectralField) -> Vec<Complex64> {
    let m = padded_size(f.grid().n());
    let mut buf = spread(f, m);
    fft::fft2(&mut buf, m, true);
    buf
}

/// Analysis on the padded grid followed by truncation to the lattice.
pub(crate) fn from_padded(grid: Grid2D, mut buf: Vec<Complex64>) -> SpectralField {
    let n = grid.n();
    let m = padded_size(n);
    fft::fft2(&mut buf, m, false);
    let s = 1.0 / (m * m) as f64;
    let src = |i: usize| -> [usize; 2] {
        if i == n / 2 {
            [m - n / 2, n / 2]
        } else if i < n / 2 {
            [i, usize::MAX]
        } else {
            [m - (n - i), usize::MAX]
        }
    };
    let mut out = vec![ZERO; n * n];
    for i1 in 0..n {
        let s1 = src(i1);
        for i2 in 0..n {
            let s2 = src(i2);
            let mut acc = ZERO;
            for &a in &s1 {
                if a == usize::MAX {
                    continue;
                }
                for &b in &s2 {
                    if b == usize::MAX {
                        continue;
                    }
                    acc += buf[a * m + b];
                }
            }
            out[i1 * n + i2] = acc * s;
        }
    }
    SpectralField::from_raw(grid, out)
}

/// A lattice field synthesized on the padded grid.
#[derive(Debug, Clone)]
pub enum PaddedPhysical {
    Real(Vec<f64>),
    Complex(Vec<Complex64>),
}

impl PaddedPhysical {
    pub fn new(f: &SpectralField) -> Self {
        let v = to_padded(f);
        if f.is_real() {
            PaddedPhysical::Real(v.into_iter().map(|c| c.re).collect())
        } else {
            PaddedPhysical::Complex(v)
        }
    }

    /// Two fields with one transform when both are real.
    pub fn pair(f: &SpectralField, g: &SpectralField) -> (Self, Self) {
        if f.is_real() && g.is_real() {
            let packed = SpectralField::pack(f, g).expect("same grid");
            let v = to_padded(&packed);
            (
                PaddedPhysical::Real(v.iter().map(|c| c.re).collect()),
                PaddedPhysical::Real(v.iter().map(|c| c.im).collect()),
            )
        } else {
            (Self::new(f), Self::new(g))
        }
    }
}

/// Accumulates sums of products, finishing with a single analysis transform.
pub struct ProductAccumulator {
    grid: Grid2D,
    real: Option<Vec<f64>>,
    complex: Option<Vec<Complex64>>,
    spectral: Option<SpectralField>,
}

impl ProductAccumulator {
    pub fn new(grid: Grid2D) -> Self {
        Self { grid, real: None, complex: None, spectral: None }
    }

    fn add_spectral(&mut self, s: Complex64, g: &SpectralField) {
        let acc = self.spectral.get_or_insert_with(|| SpectralField::zeros(self.grid));
        acc.axpy(s, g).expect("same grid");
    }

    fn is_zero(f: &SpectralField) -> bool {
        f.coeffs().iter().all(|c| *c == ZERO)
    }

    /// `acc += f * g`
    pub fn add_product(&mut self, f: &SpectralField, g: &SpectralField) -> Result<()> {
        f.grid().check_same(&self.grid)?;
        g.grid().check_same(&self.grid)?;
        if Self::is_zero(f) || Self::is_zero(g) {
            return Ok(());
        }
        if f.is_constant() {
            self.add_spectral(f.mean(), g);
            return Ok(());
        }
        if g.is_constant() {
            self.add_spectral(g.mean(), f);
            return Ok(());
        }
        let (a, b) = PaddedPhysical::pair(f, g);
        self.add_physical(&a, &b);
        Ok(())
    }

    /// `acc += a * g` for a cached padded factor `a`.
    pub fn add_product_cached(&mut self, a: &PaddedPhysical, g: &SpectralField) -> Result<()> {
        g.grid().check_same(&self.grid)?;
        if Self::is_zero(g) {
            return Ok(());
        }
        let b = PaddedPhysical::new(g);
        self.add_physical(a, &b);
        Ok(())
    }

    pub fn add_linear(&mut self, s: Complex64, g: &SpectralField) -> Result<()> {
        g.grid().check_same(&self.grid)?;
        self.add_spectral(s, g);
        Ok(())
    }

    pub fn add_physical(&mut self, a: &PaddedPhysical, b: &PaddedPhysical) {
        let len = padded_size(self.grid.n()).pow(2);
        match (a, b) {
            (PaddedPhysical::Real(x), PaddedPhysical::Real(y)) => {
                let acc = self.real.get_or_insert_with(|| vec![0.0; len]);
                for ((o, p), q) in acc.iter_mut().zip(x).zip(y) {
                    *o += p * q;
                }
            }
            _ => {
                let acc = self.complex.get_or_insert_with(|| vec![ZERO; len]);
                let get = |f: &PaddedPhysical, k: usize| match f {
                    PaddedPhysical::Real(v) => Complex64::new(v[k], 0.0),
                    PaddedPhysical::Complex(v) => v[k],
                };
                for (k, o) in acc.iter_mut().enumerate() {
                    *o += get(a, k) * get(b, k);
                }
            }
        }
    }

    pub fn finish(self) -> SpectralField {
        let grid = self.grid;
        let physical: Option<Vec<Complex64>> = match (self.real, self.complex) {
            (None, None) => None,
            (Some(r), None) => Some(r.into_iter().map(|v| Complex64::new(v, 0.0)).collect()),
            (None, Some(c)) => Some(c),
            (Some(r), Some(mut c)) => {
                for (o, v) in c.iter_mut().zip(r) {
                    o.re += v;
                }
                Some(c)
            }
        };
        let mut out = match physical {
            Some(buf) => from_padded(grid, buf),
            None => SpectralField::zeros(grid),
        };
        if let Some(s) = self.spectral {
            out.add_assign(&s).expect("same grid");
        }
        out
    }
}

/// Lattice part of the exact product `f g`.
pub fn product(f: &SpectralField, g: &SpectralField) -> Result<SpectralField> {
    let mut acc = ProductAccumulator::new(*f.grid());
    acc.add_product(f, g)?;
    Ok(acc.finish())
}
