//! Evaluation of lattice fields at arbitrary points by Gaussian gridding
//! (type-2 non-uniform FFT): deconvolve by the Gaussian's Fourier transform,
//! synthesize on an oversampled grid, then sum Gaussian-weighted neighbours.
//!
//! The interpolated function is the symmetric trigonometric interpolant, with
//! Nyquist coefficients split evenly between `+n/2` and `-n/2`.

use super::{fft, SpectralField};
use crate::error::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::PI;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterpOptions {
    /// Oversampling factor of the fine grid.
    pub oversample: f64,
    /// Kernel half-width in fine-grid cells.
    pub width: usize,
    /// Relative tolerance of the probe check against direct summation.
    pub tolerance: f64,
    /// Number of probe points checked.
    pub probes: usize,
}

impl Default for InterpOptions {
    fn default() -> Self {
        Self { oversample: 2.0, width: 12, tolerance: 1e-10, probes: 16 }
    }
}

pub struct FieldInterpolator {
    n: usize,
    m: usize,
    width: usize,
    tau: f64,
    /// Angular coordinate per unit length.
    angle_scale: f64,
    grids: Vec<Vec<Complex64>>,
    fields: Vec<SpectralField>,
    /// `exp(-(j * h)^2 / (4 tau))` for `j = 0..=2 width`.
    table: Vec<f64>,
    opts: InterpOptions,
}

fn axis_index(n: usize, m: usize, i: usize) -> [(usize, i64); 2] {
    // (fine index, wave number); Nyquist appears twice
    if i == n / 2 {
        [(m - n / 2, -(n as i64) / 2), (n / 2, n as i64 / 2)]
    } else if i < n / 2 {
        [(i, i as i64), (usize::MAX, 0)]
    } else {
        [(m - (n - i), i as i64 - n as i64), (usize::MAX, 0)]
    }
}

impl FieldInterpolator {
    pub fn new(fields: &[&SpectralField], opts: InterpOptions) -> Result<Self> {
        let first = fields
            .first()
            .ok_or_else(|| Error::InvalidArgument("no fields to interpolate".into()))?;
        let grid = *first.grid();
        for f in fields {
            f.grid().check_same(&grid)?;
        }
        if !(opts.oversample >= 1.5 && opts.oversample <= 8.0) {
            return Err(Error::InvalidArgument(format!(
                "oversampling factor {} must lie in [1.5, 8]",
                opts.oversample
            )));
        }
        let n = grid.n();
        let m = ((opts.oversample * n as f64 / 2.0).round() as usize) * 2;
        if opts.width < 2 || 2 * opts.width >= m {
            return Err(Error::InvalidArgument(format!("kernel width {} out of range", opts.width)));
        }
        let r = m as f64 / n as f64;
        let tau = PI * opts.width as f64 / ((n * n) as f64 * r * (r - 0.5));
        let ghat = |k: i64| (tau / PI).sqrt() * (-(k * k) as f64 * tau).exp();
        let mut grids = Vec::with_capacity(fields.len());
        for f in fields {
            let c = f.coeffs();
            let mut buf = vec![ZERO; m * m];
            for i1 in 0..n {
                let a1 = axis_index(n, m, i1);
                for i2 in 0..n {
                    let v = c[i1 * n + i2];
                    if v == ZERO {
                        continue;
                    }
                    let a2 = axis_index(n, m, i2);
                    let w1 = if i1 == n / 2 { 0.5 } else { 1.0 };
                    let w2 = if i2 == n / 2 { 0.5 } else { 1.0 };
                    for &(p1, k1) in &a1 {
                        if p1 == usize::MAX {
                            continue;
                        }
                        for &(p2, k2) in &a2 {
                            if p2 == usize::MAX {
                                continue;
                            }
                            buf[p1 * m + p2] += v * (w1 * w2 / (ghat(k1) * ghat(k2)));
                        }
                    }
                }
            }
            fft::fft2(&mut buf, m, true);
            grids.push(buf);
        }
        let hstep = 2.0 * PI / m as f64;
        let table = (0..=2 * opts.width)
            .map(|j| (-(j as f64 * hstep).powi(2) / (4.0 * tau)).exp())
            .collect();
        Ok(Self {
            n,
            m,
            width: opts.width,
            tau,
            angle_scale: grid.wavenumber_scale(),
            grids,
            fields: fields.iter().map(|f| (*f).clone()).collect(),
            table,
            opts,
        })
    }

    pub fn num_fields(&self) -> usize {
        self.grids.len()
    }

    fn weights(&self, x: f64, w: &mut [f64]) -> i64 {
        // w[j] = exp(-(d - j h)^2/(4 tau)), d = theta - m0 h + (width - 1) h
        let h = 2.0 * PI / self.m as f64;
        let theta = (x * self.angle_scale).rem_euclid(2.0 * PI);
        let m0 = (theta / h).floor() as i64;
        let start = m0 - self.width as i64 + 1;
        let d = theta - start as f64 * h;
        // exp(-(d - jh)^2/4tau) = exp(-d^2/4tau) * exp(d j h / 2tau) * table[j]
        let e0 = (-d * d / (4.0 * self.tau)).exp();
        let ratio = (d * h / (2.0 * self.tau)).exp();
        let mut p = e0;
        for (j, wj) in w.iter_mut().enumerate() {
            *wj = p * self.table[j];
            p *= ratio;
        }
        start
    }

    /// Values of every field at `points` (physical coordinates), one vector per field.
    pub fn eval(&self, points: &[[f64; 2]]) -> Vec<Vec<Complex64>> {
        let nf = self.grids.len();
        let mut out = vec![Vec::with_capacity(points.len()); nf];
        let span = 2 * self.width;
        let mut w1 = vec![0.0; span];
        let mut w2 = vec![0.0; span];
        let mut idx2 = vec![0usize; span];
        let norm = 1.0 / (self.m * self.m) as f64;
        let m = self.m as i64;
        let mut acc = vec![ZERO; nf];
        for p in points {
            let s1 = self.weights(p[0], &mut w1);
            let s2 = self.weights(p[1], &mut w2);
            for (j, ix) in idx2.iter_mut().enumerate() {
                *ix = (s2 + j as i64).rem_euclid(m) as usize;
            }
            acc.iter_mut().for_each(|a| *a = ZERO);
            for (a, &wa) in w1.iter().enumerate() {
                let row = (s1 + a as i64).rem_euclid(m) as usize * self.m;
                for (g, slot) in self.grids.iter().zip(acc.iter_mut()) {
                    let r = &g[row..row + self.m];
                    let mut s = ZERO;
                    for (b, &wb) in w2.iter().enumerate() {
                        s += r[idx2[b]] * wb;
                    }
                    *slot += s * wa;
                }
            }
            for (o, a) in out.iter_mut().zip(&acc) {
                o.push(a * norm);
            }
        }
        out
    }

    /// Largest relative deviation from direct summation over a strided subset of points.
    pub fn probe_residual(&self, points: &[[f64; 2]]) -> f64 {
        if points.is_empty() {
            return 0.0;
        }
        let count = self.opts.probes.min(points.len()).max(1);
        let stride = (points.len() / count).max(1);
        let probes: Vec<[f64; 2]> = points.iter().step_by(stride).take(count).copied().collect();
        let fast = self.eval(&probes);
        let mut worst: f64 = 0.0;
        for (f, vals) in self.fields.iter().zip(&fast) {
            let scale = f.l1_coeffs().max(f64::MIN_POSITIVE);
            for (p, v) in probes.iter().zip(vals) {
                worst = worst.max((evaluate_direct(f, *p) - v).norm() / scale);
            }
        }
        worst
    }

    /// `eval` followed by the probe check.
    pub fn eval_checked(&self, points: &[[f64; 2]]) -> Result<Vec<Vec<Complex64>>> {
        let residual = self.probe_residual(points);
        if !(residual <= self.opts.tolerance) {
            return Err(Error::InsufficientOversampling { residual, tolerance: self.opts.tolerance });
        }
        Ok(self.eval(points))
    }

    pub fn lattice_size(&self) -> usize {
        self.n
    }
}

/// Direct `O(n^2)` evaluation of the trigonometric interpolant at one point.
pub fn evaluate_direct(f: &SpectralField, x: [f64; 2]) -> Complex64 {
    let g = f.grid();
    let n = g.n();
    let s = g.wavenumber_scale();
    let phases = |xv: f64| -> Vec<Complex64> {
        (0..n)
            .map(|i| {
                let k = g.wave_index(i) as f64;
                if g.is_nyquist(i) {
                    Complex64::new((k * s * xv).cos(), 0.0)
                } else {
                    Complex64::from_polar(1.0, k * s * xv)
                }
            })
            .collect()
    };
    let e1 = phases(x[0]);
    let e2 = phases(x[1]);
    let c = f.coeffs();
    let mut total = ZERO;
    for i1 in 0..n {
        let mut row = ZERO;
        for i2 in 0..n {
            row += c[i1 * n + i2] * e2[i2];
        }
        total += row * e1[i1];
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::{forward, Grid2D, PhysicalField};

    fn test_field(n: usize) -> SpectralField {
        let g = Grid2D::periodic(n).unwrap();
        // spectrum reaching the Nyquist modes
        let mut f = SpectralField::zeros(g);
        let mut state: u64 = 12345;
        let h = n as i64 / 2;
        for k1 in -h..h {
            for k2 in -h..h {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let a = ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5;
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let b = ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5;
                f.set_mode(k1, k2, Complex64::new(a, b));
            }
        }
        f
    }

    /// Textbook nonuniform DFT written independently of `evaluate_direct`.
    fn nudft(f: &SpectralField, x: [f64; 2]) -> Complex64 {
        let n = f.grid().n() as i64;
        let mut s = ZERO;
        for k1 in -n / 2..=n / 2 {
            for k2 in -n / 2..=n / 2 {
                let w1 = if k1.abs() == n / 2 { 0.5 } else { 1.0 };
                let w2 = if k2.abs() == n / 2 { 0.5 } else { 1.0 };
                let c = f.mode(k1, k2);
                s += c * w1 * w2 * Complex64::from_polar(1.0, k1 as f64 * x[0] + k2 as f64 * x[1]);
            }
        }
        s
    }

    #[test]
    fn direct_evaluation_matches_nudft_and_grid_values() {
        let f = test_field(16);
        for x in [[0.1, 2.3], [5.9, 0.77], [3.3, 3.05]] {
            assert!((evaluate_direct(&f, x) - nudft(&f, x)).norm() < 1e-12);
        }
        let g = Grid2D::periodic(16).unwrap();
        let p = PhysicalField::from_fn(g, |a, b| (a + 2.0 * b).sin() + (8.0 * a).cos());
        let s = forward(&p);
        let v = evaluate_direct(&s, [g.coordinate(3), g.coordinate(5)]);
        assert!((v.re - p.get(3, 5)).abs() < 1e-13 && v.im.abs() < 1e-13);
    }

    #[test]
    fn gridding_matches_nudft_including_nyquist() {
        let f = test_field(32);
        let interp = FieldInterpolator::new(&[&f], InterpOptions::default()).unwrap();
        let pts: Vec<[f64; 2]> = (0..40)
            .map(|j| [((j * 37) % 101) as f64 * 0.0731 - 1.0, ((j * 53) % 97) as f64 * 0.0917 + 0.3])
            .collect();
        let vals = interp.eval(&pts);
        let scale = f.l1_coeffs();
        for (p, v) in pts.iter().zip(&vals[0]) {
            let err = (nudft(&f, *p) - v).norm() / scale;
            assert!(err < 1e-12, "err {err:e}");
        }
        assert!(interp.probe_residual(&pts) < 1e-12);
    }

    #[test]
    fn narrow_kernel_is_rejected_by_the_probe_check() {
        let f = test_field(32);
        let opts = InterpOptions { width: 3, ..InterpOptions::default() };
        let interp = FieldInterpolator::new(&[&f], opts).unwrap();
        let pts = [[0.3, 0.4], [1.7, 2.9]];
        assert!(matches!(interp.eval_checked(&pts), Err(Error::InsufficientOversampling { .. })));
    }

    #[test]
    fn several_fields_share_weights() {
        let f = test_field(16);
        let g = f.scale(2.0);
        let interp = FieldInterpolator::new(&[&f, &g], InterpOptions::default()).unwrap();
        let v = interp.eval(&[[1.0, 2.0]]);
        assert!((v[1][0] - v[0][0] * 2.0).norm() < 1e-13);
    }
}
