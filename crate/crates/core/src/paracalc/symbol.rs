//! Symbols as finite sums `sum_n c_n(x) m_n(xi)` and the operators they define.

use super::AdmissibleCutoff;
use crate::dyadic::DyadicPartition;
use crate::error::{Error, Result};
use crate::fourier::padded::{PaddedPhysical, ProductAccumulator};
use crate::fourier::{forward, forward_complex, inverse_complex, Grid2D, PhysicalField, SpectralField};
use num_complex::Complex64;
use rustfft::FftPlanner;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

type MultiplierFn = Arc<dyn Fn(f64, f64) -> Complex64 + Send + Sync>;

/// Frequency multiplier, evaluated at angular frequencies `(xi1, xi2)` with `|xi| >= 1/2`.
#[derive(Clone)]
pub enum Multiplier {
    One,
    /// `|xi|^p`
    AbsPower(f64),
    /// `(1 + |xi|^2)^(p/2)`
    Japanese(f64),
    /// `exp(i q theta(xi))`
    Angular(i32),
    Custom { name: String, f: MultiplierFn },
}

impl fmt::Debug for Multiplier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Multiplier::One => write!(f, "One"),
            Multiplier::AbsPower(p) => write!(f, "AbsPower({p})"),
            Multiplier::Japanese(p) => write!(f, "Japanese({p})"),
            Multiplier::Angular(q) => write!(f, "Angular({q})"),
            Multiplier::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

impl Multiplier {
    pub fn custom(name: &str, f: impl Fn(f64, f64) -> Complex64 + Send + Sync + 'static) -> Self {
        Multiplier::Custom { name: name.to_string(), f: Arc::new(f) }
    }

    pub fn eval(&self, xi1: f64, xi2: f64) -> Complex64 {
        let r2 = xi1 * xi1 + xi2 * xi2;
        match self {
            Multiplier::One => Complex64::new(1.0, 0.0),
            Multiplier::AbsPower(p) => {
                if r2 == 0.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(r2.powf(0.5 * p), 0.0)
                }
            }
            Multiplier::Japanese(p) => Complex64::new((1.0 + r2).powf(0.5 * p), 0.0),
            Multiplier::Angular(q) => {
                if r2 == 0.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    let z = Complex64::new(xi1, xi2) / r2.sqrt();
                    if *q >= 0 {
                        z.powu(*q as u32)
                    } else {
                        z.conj().powu((-*q) as u32)
                    }
                }
            }
            Multiplier::Custom { f, .. } => f(xi1, xi2),
        }
    }

    /// True when `m(-xi) = m(xi)` and `conj(m) = m(-)` pairing rules hold for even harmonics.
    fn is_even_harmonic(&self) -> bool {
        matches!(self, Multiplier::Angular(q) if q % 2 == 0)
    }

    fn conj(&self) -> Multiplier {
        match self {
            Multiplier::Angular(q) => Multiplier::Angular(-q),
            other => other.clone(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SymbolTerm {
    pub coeff: SpectralField,
    pub multiplier: Multiplier,
    /// The term also stands for its conjugate partner `conj(c) conj(m)`.
    pub with_conjugate: bool,
}

#[derive(Debug, Clone)]
pub struct SymbolRep {
    pub terms: Vec<SymbolTerm>,
    pub order: f64,
    pub homogeneous: bool,
    /// Discarded angular-coefficient mass for expanded symbols, else 0.
    pub truncation_mass: f64,
}

impl SymbolRep {
    pub fn new(terms: Vec<SymbolTerm>, order: f64, homogeneous: bool) -> Result<Self> {
        let first = terms.first().ok_or_else(|| Error::InvalidArgument("symbol has no terms".into()))?;
        let g = *first.coeff.grid();
        for t in &terms {
            t.coeff.grid().check_same(&g)?;
        }
        Ok(Self { terms, order, homogeneous, truncation_mass: 0.0 })
    }

    pub fn grid(&self) -> &Grid2D {
        self.terms[0].coeff.grid()
    }

    /// `a(x, xi) = value`.
    pub fn constant(grid: Grid2D, value: f64) -> Self {
        let mut c = SpectralField::zeros(grid);
        c.set_mode(0, 0, Complex64::new(value, 0.0));
        Self {
            terms: vec![SymbolTerm { coeff: c, multiplier: Multiplier::One, with_conjugate: false }],
            order: 0.0,
            homogeneous: true,
            truncation_mass: 0.0,
        }
    }

    /// `a(x, xi) = m(xi)` of the given order.
    pub fn multiplier(grid: Grid2D, m: Multiplier, order: f64) -> Self {
        let mut c = SpectralField::zeros(grid);
        c.set_mode(0, 0, Complex64::new(1.0, 0.0));
        Self {
            terms: vec![SymbolTerm { coeff: c, multiplier: m, with_conjugate: false }],
            order,
            homogeneous: false,
            truncation_mass: 0.0,
        }
    }

    /// `a(x, xi) = f(x)`.
    pub fn coefficient(f: &SpectralField) -> Self {
        Self {
            terms: vec![SymbolTerm { coeff: f.clone(), multiplier: Multiplier::One, with_conjugate: false }],
            order: 0.0,
            homogeneous: true,
            truncation_mass: 0.0,
        }
    }

    /// `a(x, xi) = f(x) m(xi)`.
    pub fn product_term(f: &SpectralField, m: Multiplier, order: f64) -> Self {
        Self {
            terms: vec![SymbolTerm { coeff: f.clone(), multiplier: m, with_conjugate: false }],
            order,
            homogeneous: false,
            truncation_mass: 0.0,
        }
    }

    /// Terms of `self` followed by `scale` times the terms of `other`.
    pub fn plus(&self, other: &SymbolRep, scale: f64) -> Result<SymbolRep> {
        self.grid().check_same(other.grid())?;
        let mut terms = self.terms.clone();
        for t in &other.terms {
            terms.push(SymbolTerm { coeff: t.coeff.scale(scale), ..t.clone() });
        }
        Ok(SymbolRep {
            terms,
            order: self.order.max(other.order),
            homogeneous: false,
            truncation_mass: self.truncation_mass + other.truncation_mass,
        })
    }

    /// Physical coefficient values, one vector per term.
    pub fn coefficient_values(&self) -> Vec<Vec<Complex64>> {
        self.terms.iter().map(|t| inverse_complex(&t.coeff)).collect()
    }

    /// `a(x_idx, xi)` from precomputed coefficient values.
    pub fn eval_with(&self, values: &[Vec<Complex64>], idx: usize, xi1: f64, xi2: f64) -> Complex64 {
        let mut s = Complex64::new(0.0, 0.0);
        for (t, v) in self.terms.iter().zip(values) {
            let term = v[idx] * t.multiplier.eval(xi1, xi2);
            s += term;
            if t.with_conjugate {
                s += term.conj();
            }
        }
        s
    }
}

/// Paradifferential operator with cached low-passed coefficients.
pub struct ParadiffOperator<'a> {
    symbol: &'a SymbolRep,
    cutoff: AdmissibleCutoff,
    partition: DyadicPartition,
    cache: HashMap<(usize, i64), CachedCoeff>,
}

enum CachedCoeff {
    Constant(Complex64),
    Field(PaddedPhysical),
}

impl<'a> ParadiffOperator<'a> {
    pub fn new(symbol: &'a SymbolRep, cutoff: &AdmissibleCutoff) -> Self {
        Self {
            symbol,
            cutoff: *cutoff,
            partition: DyadicPartition::new(*symbol.grid()),
            cache: HashMap::new(),
        }
    }

    fn coeff(&mut self, term: usize, level: i64) -> &CachedCoeff {
        let kmax = self.partition.kmax() as i64;
        let key = (term, level.min(kmax));
        let sym = self.symbol;
        let part = &self.partition;
        self.cache.entry(key).or_insert_with(|| {
            let low = part.lowpass(&sym.terms[term].coeff, key.1);
            if low.is_constant() {
                CachedCoeff::Constant(low.mean())
            } else {
                CachedCoeff::Field(PaddedPhysical::new(&low))
            }
        })
    }

    /// `T_a u` over high blocks `i >= N0 + shift`.
    pub fn apply_shifted(&mut self, u: &SpectralField, shift: usize) -> Result<SpectralField> {
        u.grid().check_same(self.symbol.grid())?;
        let grid = *u.grid();
        let n0 = self.cutoff.n0();
        let u_real = u.is_real();
        let mut direct = ProductAccumulator::new(grid);
        let mut doubled = ProductAccumulator::new(grid);
        for i in (n0 + shift)..=self.partition.kmax() {
            let blk = self.partition.block(u, i)?;
            if blk.coeffs().iter().all(|c| c.norm_sqr() == 0.0) {
                continue;
            }
            for t in 0..self.symbol.terms.len() {
                let term = &self.symbol.terms[t];
                let mult = term.multiplier.clone();
                let with_conj = term.with_conjugate;
                let mb = blk.apply_multiplier(|a, b| mult.eval(a, b));
                let level = i as i64 - n0 as i64;
                let fold = with_conj && u_real && mult.is_even_harmonic();
                let target = if fold { &mut doubled } else { &mut direct };
                match self.coeff(t, level) {
                    CachedCoeff::Constant(c) => target.add_linear(*c, &mb)?,
                    CachedCoeff::Field(p) => target.add_product_cached(p, &mb)?,
                }
                if with_conj && !fold {
                    let cm = mult.conj();
                    let mbc = blk.apply_multiplier(|a, b| cm.eval(a, b));
                    let low = self.partition.lowpass(&self.symbol.terms[t].coeff, level).conj_field();
                    direct.add_product(&low, &mbc)?;
                }
            }
        }
        let mut out = direct.finish();
        let folded = doubled.finish();
        // conj(T_c m(D) u) = T_conj(c) conj(m)(D) u for real u and even m
        out.axpy(Complex64::new(2.0, 0.0), &folded.real_part())?;
        Ok(out)
    }

    pub fn apply(&mut self, u: &SpectralField) -> Result<SpectralField> {
        self.apply_shifted(u, 0)
    }
}

/// `T_a u = sum_n sum_{i >= N0} P_{<= i-N0} c_n * m_n(D) Delta_i u`.
pub fn paradiff_apply(a: &SymbolRep, u: &SpectralField, cutoff: &AdmissibleCutoff) -> Result<SpectralField> {
    ParadiffOperator::new(a, cutoff).apply(u)
}

fn stencil(order: u32) -> &'static [(i32, f64)] {
    match order {
        0 => &[(0, 1.0)],
        1 => &[(-1, -0.5), (1, 0.5)],
        2 => &[(-1, 1.0), (0, -2.0), (1, 1.0)],
        3 => &[(-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)],
        _ => &[(-2, 1.0), (-1, -4.0), (0, 6.0), (1, -4.0), (2, 1.0)],
    }
}

/// Mixed centered difference `d^a1/dxi1 d^a2/dxi2 m` with an order-adapted step.
fn multiplier_derivative(m: &Multiplier, xi: (f64, f64), alpha: (u32, u32)) -> Complex64 {
    let total = alpha.0 + alpha.1;
    if total == 0 {
        return m.eval(xi.0, xi.1);
    }
    let scale = xi.0.hypot(xi.1).max(0.5);
    let h = scale * f64::EPSILON.powf(1.0 / (total as f64 + 2.0));
    let mut s = Complex64::new(0.0, 0.0);
    for &(p, wp) in stencil(alpha.0) {
        for &(q, wq) in stencil(alpha.1) {
            s += m.eval(xi.0 + p as f64 * h, xi.1 + q as f64 * h) * (wp * wq);
        }
    }
    s / h.powi(total as i32)
}

fn sample_frequencies(grid: &Grid2D) -> Vec<(f64, f64)> {
    let mut pts = Vec::new();
    let s = grid.wavenumber_scale();
    let kmax = (8.0 / s).floor() as i64;
    for k1 in -kmax..=kmax {
        for k2 in -kmax..=kmax {
            let (a, b) = (s * k1 as f64, s * k2 as f64);
            let r = a.hypot(b);
            if (0.5..=8.0).contains(&r) {
                pts.push((a, b));
            }
        }
    }
    let rmax = grid.max_frequency();
    let mut r = 0.5;
    while r <= rmax {
        for d in 0..64 {
            let th = 2.0 * PI * d as f64 / 64.0;
            pts.push((r * th.cos(), r * th.sin()));
        }
        r *= 2.0;
    }
    pts
}

/// `M^m_rho(a; n)`: sup over `|alpha| <= n`, sampled `xi` with `|xi| >= 1/2` and grid `x` of
/// `(1 + |xi|)^(|alpha| - m) |d_xi^alpha a|`, measured in `W^{rho, inf}` in `x`.
pub fn symbol_seminorm(a: &SymbolRep, m: f64, rho: u32, n: u32) -> Result<f64> {
    if n > 4 {
        return Err(Error::OutOfRange(format!("seminorm order {n} exceeds 4")));
    }
    if rho > 1 {
        return Err(Error::InvalidArgument(format!("x-regularity rho = {rho} not supported")));
    }
    let grid = *a.grid();
    let xis = sample_frequencies(&grid);
    let values = a.coefficient_values();
    // x-part of each term: the field, its conjugate, and forward differences for rho = 1
    let np = grid.n();
    let h = grid.spacing();
    let x_norm = |vals: &[Complex64]| -> f64 {
        let mut best: f64 = 0.0;
        for i1 in 0..np {
            for i2 in 0..np {
                let v = vals[i1 * np + i2];
                let mut w = v.norm();
                if rho == 1 {
                    let d1 = (vals[((i1 + 1) % np) * np + i2] - v).norm() / h;
                    let d2 = (vals[i1 * np + (i2 + 1) % np] - v).norm() / h;
                    w += d1.max(d2);
                }
                best = best.max(w);
            }
        }
        best
    };
    let separable = a.terms.len() == 1 && !a.terms[0].with_conjugate;
    let xnorm_single = if separable { x_norm(&values[0]) } else { 0.0 };
    let mut best: f64 = 0.0;
    for total in 0..=n {
        for a1 in 0..=total {
            let alpha = (a1, total - a1);
            for &(x1, x2) in &xis {
                let weight = (1.0 + x1.hypot(x2)).powf(total as f64 - m);
                if separable {
                    let d = multiplier_derivative(&a.terms[0].multiplier, (x1, x2), alpha).norm();
                    best = best.max(weight * d * xnorm_single);
                } else {
                    let ds: Vec<(Complex64, Complex64)> = a
                        .terms
                        .iter()
                        .map(|t| {
                            let d = multiplier_derivative(&t.multiplier, (x1, x2), alpha);
                            let dc = if t.with_conjugate {
                                multiplier_derivative(&t.multiplier.conj(), (x1, x2), alpha)
                            } else {
                                Complex64::new(0.0, 0.0)
                            };
                            (d, dc)
                        })
                        .collect();
                    let combined: Vec<Complex64> = (0..np * np)
                        .map(|idx| {
                            let mut s = Complex64::new(0.0, 0.0);
                            for ((t, v), (d, dc)) in a.terms.iter().zip(&values).zip(&ds) {
                                s += v[idx] * d;
                                if t.with_conjugate {
                                    s += v[idx].conj() * dc;
                                }
                            }
                            s
                        })
                        .collect();
                    best = best.max(weight * x_norm(&combined));
                }
            }
        }
    }
    Ok(best)
}

/// Pointwise 2x2 matrix field, row-major entries.
fn entry(m: &[PhysicalField; 4], k: usize, idx: usize) -> f64 {
    m[k].values()[idx]
}

/// `a(x, xi) = (|xi| / |A(x) xi|)^beta`, expanded in angular harmonics `exp(i q theta)`.
pub fn flow_symbol(a_field: &[PhysicalField; 4], beta: f64, n_theta: usize) -> Result<SymbolRep> {
    if ![8, 16, 32, 64].contains(&n_theta) {
        return Err(Error::InvalidArgument(format!("n_theta = {n_theta} must be one of 8, 16, 32, 64")));
    }
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::InvalidArgument(format!("beta = {beta} must be positive")));
    }
    let grid = *a_field[0].grid();
    for f in &a_field[1..] {
        f.grid().check_same(&grid)?;
    }
    let npts = grid.len();
    for idx in 0..npts {
        let det = entry(a_field, 0, idx) * entry(a_field, 3, idx) - entry(a_field, 1, idx) * entry(a_field, 2, idx);
        if !(det.abs() > 1e-300) || !det.is_finite() {
            return Err(Error::InvalidArgument(format!("matrix field singular at grid point {idx}")));
        }
    }
    let sample = |idx: usize, th: f64| -> f64 {
        let (c, s) = (th.cos(), th.sin());
        let v1 = entry(a_field, 0, idx) * c + entry(a_field, 1, idx) * s;
        let v2 = entry(a_field, 2, idx) * c + entry(a_field, 3, idx) * s;
        let r = v1.hypot(v2);
        if beta == 1.0 {
            1.0 / r
        } else {
            r.powf(-beta)
        }
    };
    let angular_dft = |count: usize| -> Vec<Vec<Complex64>> {
        // out[idx][q] for q in 0..count (FFT order), normalized
        let fft = FftPlanner::new().plan_fft_forward(count);
        let angles: Vec<f64> = (0..count).map(|j| 2.0 * PI * j as f64 / count as f64).collect();
        let mut out = Vec::with_capacity(npts);
        let chunk = 1024;
        let mut buf = vec![Complex64::new(0.0, 0.0); chunk * count];
        let mut start = 0;
        while start < npts {
            let end = (start + chunk).min(npts);
            let len = (end - start) * count;
            for (p, idx) in (start..end).enumerate() {
                for (j, th) in angles.iter().enumerate() {
                    buf[p * count + j] = Complex64::new(sample(idx, *th), 0.0);
                }
            }
            fft.process(&mut buf[..len]);
            for p in 0..(end - start) {
                out.push(buf[p * count..(p + 1) * count].iter().map(|c| c / count as f64).collect());
            }
            start = end;
        }
        out
    };
    let coeffs = angular_dft(n_theta);
    let fine = angular_dft(4 * n_theta);
    let half = n_theta / 2;
    let fine_n = 4 * n_theta;
    let mut mass = 0.0;
    for row in &fine {
        for (q, c) in row.iter().enumerate() {
            let k = if q < fine_n / 2 { q as i64 } else { q as i64 - fine_n as i64 };
            if k.unsigned_abs() as usize > half {
                mass += c.norm_sqr();
            }
        }
    }
    mass /= npts as f64;
    let mut terms = Vec::new();
    let c0: Vec<f64> = coeffs.iter().map(|r| r[0].re).collect();
    let c0_field = forward(&PhysicalField::new(grid, c0)?);
    let scale = c0_field.max_coeff().max(f64::MIN_POSITIVE);
    terms.push(SymbolTerm { coeff: c0_field, multiplier: Multiplier::One, with_conjugate: false });
    for q in 1..=half {
        let w = if q == half { 0.5 } else { 1.0 };
        let vals: Vec<Complex64> = coeffs.iter().map(|r| r[q] * w).collect();
        if vals.iter().all(|v| v.norm() <= 1e-15 * scale) {
            continue;
        }
        let field = forward_complex(grid, &vals)?;
        terms.push(SymbolTerm { coeff: field, multiplier: Multiplier::Angular(q as i32), with_conjugate: true });
    }
    Ok(SymbolRep { terms, order: 0.0, homogeneous: true, truncation_mass: mass })
}
