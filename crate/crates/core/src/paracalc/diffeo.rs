//! Pointwise 2x2 matrix fields, torus diffeomorphisms `x + d(x)` and paracomposition.

use super::{paraproduct, AdmissibleCutoff};
use crate::dyadic::DyadicPartition;
use crate::error::{Error, Result};
use crate::fourier::{derivative, forward, forward_complex, inverse, FieldInterpolator, Grid2D, InterpOptions, PhysicalField, SpectralField};

/// Row-major entries `[a11, a12, a21, a22]`, each a grid field.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixField {
    entries: [PhysicalField; 4],
}

impl MatrixField {
    pub fn new(entries: [PhysicalField; 4]) -> Result<Self> {
        let g = *entries[0].grid();
        for e in &entries[1..] {
            e.grid().check_same(&g)?;
        }
        Ok(Self { entries })
    }

    pub fn identity(grid: Grid2D) -> Self {
        Self::from_fn(grid, |_, _| [1.0, 0.0, 0.0, 1.0])
    }

    pub fn from_fn(grid: Grid2D, f: impl Fn(f64, f64) -> [f64; 4]) -> Self {
        let n = grid.n();
        let mut vals = [(); 4].map(|_| Vec::with_capacity(grid.len()));
        for i1 in 0..n {
            for i2 in 0..n {
                let m = f(grid.coordinate(i1), grid.coordinate(i2));
                for k in 0..4 {
                    vals[k].push(m[k]);
                }
            }
        }
        Self { entries: vals.map(|v| PhysicalField::from_raw(grid, v)) }
    }

    /// `Id + Dd` for a displacement `d`, differentiated spectrally.
    pub fn jacobian_of(d1: &SpectralField, d2: &SpectralField) -> Result<Self> {
        d1.grid().check_same(d2.grid())?;
        let mut e = [
            inverse(&derivative(d1, (1, 0))),
            inverse(&derivative(d1, (0, 1))),
            inverse(&derivative(d2, (1, 0))),
            inverse(&derivative(d2, (0, 1))),
        ];
        for k in [0, 3] {
            e[k].values_mut().iter_mut().for_each(|v| *v += 1.0);
        }
        Ok(Self { entries: e })
    }

    pub fn grid(&self) -> &Grid2D {
        self.entries[0].grid()
    }

    pub fn entries(&self) -> &[PhysicalField; 4] {
        &self.entries
    }

    pub fn entry(&self, i: usize, j: usize) -> &PhysicalField {
        &self.entries[2 * i + j]
    }

    /// Matrix at one grid point.
    pub fn at(&self, idx: usize) -> [f64; 4] {
        [0, 1, 2, 3].map(|k| self.entries[k].values()[idx])
    }

    fn map(&self, f: impl Fn([f64; 4]) -> [f64; 4]) -> Self {
        let g = *self.grid();
        let mut vals = [(); 4].map(|_| Vec::with_capacity(g.len()));
        for idx in 0..g.len() {
            let m = f(self.at(idx));
            for k in 0..4 {
                vals[k].push(m[k]);
            }
        }
        Self { entries: vals.map(|v| PhysicalField::from_raw(g, v)) }
    }

    pub fn det(&self) -> PhysicalField {
        let g = *self.grid();
        let vals = (0..g.len())
            .map(|idx| {
                let m = self.at(idx);
                m[0] * m[3] - m[1] * m[2]
            })
            .collect();
        PhysicalField::from_raw(g, vals)
    }

    /// Pointwise inverse by the explicit 2x2 formula.
    pub fn inverse(&self) -> Result<Self> {
        let det = self.det();
        if let Some(idx) = det.values().iter().position(|d| !(d.abs() > 0.0 && d.is_finite())) {
            return Err(Error::InvalidArgument(format!("matrix field singular at grid point {idx}")));
        }
        Ok(self.map(|m| {
            let d = m[0] * m[3] - m[1] * m[2];
            [m[3] / d, -m[1] / d, -m[2] / d, m[0] / d]
        }))
    }

    pub fn transpose(&self) -> Self {
        self.map(|m| [m[0], m[2], m[1], m[3]])
    }

    pub fn mul(&self, other: &MatrixField) -> Result<Self> {
        self.grid().check_same(other.grid())?;
        let g = *self.grid();
        let mut vals = [(); 4].map(|_| Vec::with_capacity(g.len()));
        for idx in 0..g.len() {
            let a = self.at(idx);
            let b = other.at(idx);
            let m = [
                a[0] * b[0] + a[1] * b[2],
                a[0] * b[1] + a[1] * b[3],
                a[2] * b[0] + a[3] * b[2],
                a[2] * b[1] + a[3] * b[3],
            ];
            for k in 0..4 {
                vals[k].push(m[k]);
            }
        }
        Ok(Self { entries: vals.map(|v| PhysicalField::from_raw(g, v)) })
    }

    /// `sup_x |M(x)|` in the spectral (largest singular value) norm.
    pub fn sup_operator_norm(&self) -> f64 {
        (0..self.grid().len())
            .map(|idx| {
                let m = self.at(idx);
                let s = m.iter().map(|v| v * v).sum::<f64>();
                let d = m[0] * m[3] - m[1] * m[2];
                (0.5 * (s + (s * s - 4.0 * d * d).max(0.0).sqrt())).sqrt()
            })
            .fold(0.0, f64::max)
    }

    /// Largest entrywise deviation from `other`.
    pub fn max_deviation(&self, other: &MatrixField) -> f64 {
        let mut worst: f64 = 0.0;
        for (a, b) in self.entries.iter().zip(&other.entries) {
            for (x, y) in a.values().iter().zip(b.values()) {
                worst = worst.max((x - y).abs());
            }
        }
        worst
    }

    /// Entries minus the identity, as spectral fields.
    pub fn minus_identity(&self) -> [SpectralField; 4] {
        let g = *self.grid();
        [0, 1, 2, 3].map(|k| {
            let shift = if k == 0 || k == 3 { 1.0 } else { 0.0 };
            let v = self.entries[k].values().iter().map(|x| x - shift).collect();
            forward(&PhysicalField::from_raw(g, v))
        })
    }

    /// `M v` pointwise.
    pub fn apply(&self, v: &[PhysicalField; 2]) -> Result<[PhysicalField; 2]> {
        v[0].grid().check_same(self.grid())?;
        v[1].grid().check_same(self.grid())?;
        let g = *self.grid();
        let (mut o1, mut o2) = (Vec::with_capacity(g.len()), Vec::with_capacity(g.len()));
        for idx in 0..g.len() {
            let m = self.at(idx);
            let (a, b) = (v[0].values()[idx], v[1].values()[idx]);
            o1.push(m[0] * a + m[1] * b);
            o2.push(m[2] * a + m[3] * b);
        }
        Ok([PhysicalField::from_raw(g, o1), PhysicalField::from_raw(g, o2)])
    }
}

/// `chi(x) = x + d(x)` with periodic displacement `d`.
#[derive(Debug, Clone)]
pub struct DiffeoMap {
    displacement: [PhysicalField; 2],
    jacobian: MatrixField,
    inverse_jacobian: MatrixField,
    window: usize,
}

impl DiffeoMap {
    pub fn new(d1: PhysicalField, d2: PhysicalField) -> Result<Self> {
        d1.grid().check_same(d2.grid())?;
        let jacobian = MatrixField::jacobian_of(&forward(&d1), &forward(&d2))?;
        Self::from_parts([d1, d2], jacobian)
    }

    /// Displacement with a precomputed jacobian `Id + Dd`.
    pub fn from_parts(displacement: [PhysicalField; 2], jacobian: MatrixField) -> Result<Self> {
        displacement[0].grid().check_same(jacobian.grid())?;
        displacement[1].grid().check_same(jacobian.grid())?;
        let det = jacobian.det();
        if let Some(idx) = det.values().iter().position(|d| !(*d > 0.0)) {
            return Err(Error::NotDiffeomorphism(format!(
                "jacobian determinant {} at grid point {idx}",
                det.values()[idx]
            )));
        }
        let inverse_jacobian = jacobian.inverse()?;
        let bound = jacobian.sup_operator_norm().max(inverse_jacobian.sup_operator_norm());
        let mut window = 1;
        while (window as f64).exp2() <= bound {
            window += 1;
        }
        Ok(Self { displacement, jacobian, inverse_jacobian, window })
    }

    pub fn identity(grid: Grid2D) -> Self {
        Self::new(PhysicalField::zeros(grid), PhysicalField::zeros(grid)).expect("identity is a diffeomorphism")
    }

    pub fn translation(grid: Grid2D, a: [f64; 2]) -> Self {
        let d1 = PhysicalField::from_fn(grid, |_, _| a[0]);
        let d2 = PhysicalField::from_fn(grid, |_, _| a[1]);
        Self::new(d1, d2).expect("translations are diffeomorphisms")
    }

    /// Overrides the block window `N >= 1`.
    pub fn with_window(mut self, window: usize) -> Result<Self> {
        if window == 0 {
            return Err(Error::InvalidArgument("paracomposition window must be at least 1".into()));
        }
        self.window = window;
        Ok(self)
    }

    pub fn grid(&self) -> &Grid2D {
        self.displacement[0].grid()
    }

    pub fn displacement(&self) -> &[PhysicalField; 2] {
        &self.displacement
    }

    pub fn jacobian(&self) -> &MatrixField {
        &self.jacobian
    }

    pub fn inverse_jacobian(&self) -> &MatrixField {
        &self.inverse_jacobian
    }

    pub fn window(&self) -> usize {
        self.window
    }

    /// Images `x + d(x)` of the grid points.
    pub fn points(&self) -> Vec<[f64; 2]> {
        let g = self.grid();
        let n = g.n();
        let (d1, d2) = (self.displacement[0].values(), self.displacement[1].values());
        let mut pts = Vec::with_capacity(g.len());
        for i1 in 0..n {
            for i2 in 0..n {
                let idx = i1 * n + i2;
                pts.push([g.coordinate(i1) + d1[idx], g.coordinate(i2) + d2[idx]]);
            }
        }
        pts
    }
}

/// Spectral field of `f o chi` sampled on the grid.
fn compose_values(grid: Grid2D, vals: &[num_complex::Complex64], real: bool) -> Result<SpectralField> {
    let f = forward_complex(grid, vals)?;
    Ok(if real { f.real_part() } else { f })
}

/// `chi* u = sum_k sum_{|l-k| <= N} Delta_l((Delta_k u) o chi)`.
pub fn paracompose(chi: &DiffeoMap, u: &SpectralField) -> Result<SpectralField> {
    paracompose_with(chi, u, InterpOptions::default())
}

pub fn paracompose_with(chi: &DiffeoMap, u: &SpectralField, opts: InterpOptions) -> Result<SpectralField> {
    u.grid().check_same(chi.grid())?;
    let grid = *u.grid();
    let part = DyadicPartition::new(grid);
    let blocks = (0..=part.kmax()).map(|k| part.block(u, k)).collect::<Result<Vec<_>>>()?;
    let refs: Vec<&SpectralField> = blocks.iter().collect();
    let values = FieldInterpolator::new(&refs, opts)?.eval_checked(&chi.points())?;
    assemble(&part, chi.window(), &values, u.is_real())
}

fn assemble(part: &DyadicPartition, window: usize, block_values: &[Vec<num_complex::Complex64>], real: bool) -> Result<SpectralField> {
    let grid = *part.grid();
    let mut out = SpectralField::zeros(grid);
    let n = window as i64;
    for (k, vals) in block_values.iter().enumerate() {
        let composed = compose_values(grid, vals, real)?;
        out.add_assign(&part.window(&composed, k as i64 - n, k as i64 + n))?;
    }
    Ok(out)
}

/// Decomposition `u o chi = chi* u + T_{Du o chi} . chi + R`, with the affine part of `chi`
/// contributing nothing to the paraproduct.
#[derive(Debug, Clone)]
pub struct Paralinearization {
    pub composed: SpectralField,
    pub paracomposition: SpectralField,
    pub paraproduct_term: SpectralField,
    pub remainder: SpectralField,
    pub interp_residual: f64,
}

pub fn paralinearize_composition(u: &SpectralField, chi: &DiffeoMap, cutoff: &AdmissibleCutoff) -> Result<Paralinearization> {
    u.grid().check_same(chi.grid())?;
    let grid = *u.grid();
    let real = u.is_real();
    let part = DyadicPartition::new(grid);
    let mut fields = (0..=part.kmax()).map(|k| part.block(u, k)).collect::<Result<Vec<_>>>()?;
    let nb = fields.len();
    fields.push(derivative(u, (1, 0)));
    fields.push(derivative(u, (0, 1)));
    fields.push(u.clone());
    let refs: Vec<&SpectralField> = fields.iter().collect();
    let interp = FieldInterpolator::new(&refs, InterpOptions::default())?;
    let points = chi.points();
    let interp_residual = interp.probe_residual(&points);
    let values = interp.eval_checked(&points)?;
    let paracomposition = assemble(&part, chi.window(), &values[..nb], real)?;
    let composed = compose_values(grid, &values[nb + 2], real)?;
    let mut paraproduct_term = SpectralField::zeros(grid);
    for j in 0..2 {
        let du = compose_values(grid, &values[nb + j], real)?;
        let d = forward(&chi.displacement()[j]);
        paraproduct_term.add_assign(&paraproduct(&du, &d, cutoff)?)?;
    }
    let remainder = composed.sub(&paracomposition)?.sub(&paraproduct_term)?;
    Ok(Paralinearization { composed, paracomposition, paraproduct_term, remainder, interp_residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn grid(n: usize) -> Grid2D {
        Grid2D::periodic(n).unwrap()
    }

    fn smooth_field(g: Grid2D) -> SpectralField {
        forward(&PhysicalField::from_fn(g, |x1, x2| {
            (x1 + 2.0 * x2).sin() + 0.3 * (9.0 * x1 - 4.0 * x2).cos() + 0.05 * (21.0 * x2 + 5.0 * x1).sin()
        }))
    }

    fn shear(g: Grid2D, t: f64) -> DiffeoMap {
        DiffeoMap::new(PhysicalField::from_fn(g, |_, x2| t * x2.sin()), PhysicalField::zeros(g)).unwrap()
    }

    #[test]
    fn matrix_algebra() {
        let g = grid(16);
        let m = MatrixField::from_fn(g, |x1, x2| [2.0 + x1.cos(), x2.sin(), 0.3, 1.5]);
        let prod = m.mul(&m.inverse().unwrap()).unwrap();
        assert!(prod.max_deviation(&MatrixField::identity(g)) < 1e-14);
        assert_eq!(m.transpose().transpose(), m);
        let d = MatrixField::from_fn(g, |_, _| [3.0, 0.0, 0.0, -0.5]);
        assert!((d.sup_operator_norm() - 3.0).abs() < 1e-14);
        let s = MatrixField::from_fn(g, |_, _| [1.0, 1.0, 0.0, 1.0]);
        let golden = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((s.sup_operator_norm() - golden).abs() < 1e-14);
    }

    #[test]
    fn shear_jacobian_and_window() {
        let g = grid(32);
        let chi = shear(g, 0.5);
        let exact = MatrixField::from_fn(g, |_, x2| [1.0, 0.5 * x2.cos(), 0.0, 1.0]);
        assert!(chi.jacobian().max_deviation(&exact) < 1e-13);
        assert_eq!(DiffeoMap::identity(g).window(), 1);
        assert_eq!(shear(g, 2.0).window(), 2);
    }

    #[test]
    fn folded_map_is_rejected() {
        let g = grid(16);
        let d1 = PhysicalField::from_fn(g, |x1, _| -2.0 * x1.sin());
        let err = DiffeoMap::new(d1, PhysicalField::zeros(g)).unwrap_err();
        assert!(matches!(err, Error::NotDiffeomorphism(_)));
    }

    #[test]
    fn identity_composition_is_exact() {
        let g = grid(64);
        let u = smooth_field(g);
        let v = paracompose(&DiffeoMap::identity(g), &u).unwrap();
        assert!(v.sub(&u).unwrap().l2_norm() <= 1e-11 * u.l2_norm());
    }

    #[test]
    fn translation_is_a_phase_shift() {
        let g = grid(64);
        let u = smooth_field(g);
        let a = [0.37, -1.21];
        let v = paracompose(&DiffeoMap::translation(g, a), &u).unwrap();
        let shifted = u.apply_multiplier(|x1, x2| Complex64::from_polar(1.0, x1 * a[0] + x2 * a[1]));
        assert!(v.sub(&shifted).unwrap().l2_norm() <= 1e-10 * u.l2_norm());
    }

    #[test]
    fn shear_keeps_high_mode_norm_bounded() {
        let g = grid(128);
        let mut u = SpectralField::zeros(g);
        u.set_mode(24, 7, Complex64::new(0.5, 0.0));
        u.set_mode(-24, -7, Complex64::new(0.5, 0.0));
        for t in [0.25, 0.5, 1.0] {
            let chi = shear(g, t);
            let c = chi.jacobian().sup_operator_norm().max(chi.inverse_jacobian().sup_operator_norm()).powi(2);
            let ratio = paracompose(&chi, &u).unwrap().l2_norm() / u.l2_norm();
            assert!(ratio >= 1.0 / c && ratio <= c, "t = {t}: ratio {ratio}, C {c}");
        }
    }

    #[test]
    fn decomposition_closes_and_vanishes_at_identity() {
        let g = grid(64);
        let c = AdmissibleCutoff::default();
        let u = smooth_field(g);
        let p = paralinearize_composition(&u, &DiffeoMap::identity(g), &c).unwrap();
        assert!(p.paraproduct_term.l2_norm() == 0.0);
        assert!(p.remainder.l2_norm() <= 1e-11 * u.l2_norm());
        let p = paralinearize_composition(&u, &shear(g, 0.4), &c).unwrap();
        let sum = p.paracomposition.add(&p.paraproduct_term).unwrap().add(&p.remainder).unwrap();
        assert!(sum.sub(&p.composed).unwrap().l2_norm() <= 1e-9 * p.composed.l2_norm());
        assert!(p.interp_residual <= 1e-10);
    }

    #[test]
    fn low_band_field_has_no_paraproduct_term() {
        let g = grid(64);
        let c = AdmissibleCutoff::default();
        let u = forward(&PhysicalField::from_fn(g, |x1, x2| (x1 + x2).cos()));
        let p = paralinearize_composition(&u, &shear(g, 0.8), &c).unwrap();
        // blocks of u beyond the window of the smooth shear are empty
        let bulk = p.remainder.add(&p.paracomposition).unwrap().l2_norm();
        assert!(bulk >= 0.99 * p.composed.l2_norm());
        assert!(p.paraproduct_term.l2_norm() <= 1e-12);
    }
}
