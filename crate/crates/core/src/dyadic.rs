//! Littlewood-Paley blocks, Sobolev and Besov norms, Fourier tail profiles and
//! norms measured against the tail of a reference field.

use crate::error::{Error, Result};
use crate::fourier::{derivative, inverse, Grid2D, SpectralField};

/// Smooth step: 0 for `x <= 0`, 1 for `x >= 1`, built from `exp(-1/x)`.
pub fn smoothstep(x: f64) -> f64 {
    let psi = |t: f64| if t > 0.0 { (-1.0 / t).exp() } else { 0.0 };
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        let a = psi(x);
        a / (a + psi(1.0 - x))
    }
}

/// Radial base bump: 1 on `[0, 1]`, 0 on `[2, inf)`.
pub fn base_bump(r: f64) -> f64 {
    1.0 - smoothstep(r - 1.0)
}

/// `P_{<=k}` at radius `r`; identically zero for `k < 0`.
pub fn lowpass_weight(k: i64, r: f64) -> f64 {
    if k < 0 {
        0.0
    } else {
        base_bump(r * (-(k as f64)).exp2())
    }
}

/// `P_k` at radius `r`.
pub fn block_weight(k: i64, r: f64) -> f64 {
    lowpass_weight(k, r) - lowpass_weight(k - 1, r)
}

#[derive(Debug, Clone)]
pub struct DyadicPartition {
    grid: Grid2D,
    kmax: usize,
}

impl DyadicPartition {
    pub fn new(grid: Grid2D) -> Self {
        let kmax = grid.max_frequency().log2().ceil().max(1.0) as usize;
        Self { grid, kmax }
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    /// Smallest `k` with `P_{<=k} = 1` on the whole lattice.
    pub fn kmax(&self) -> usize {
        self.kmax
    }

    /// `P_{<=k}(D) f`, zero for `k < 0`.
    pub fn lowpass(&self, f: &SpectralField, k: i64) -> SpectralField {
        if k < 0 {
            return SpectralField::zeros(*f.grid());
        }
        if k as usize >= self.kmax {
            return f.clone();
        }
        f.apply_radial(|r| lowpass_weight(k, r))
    }

    /// `(Id - P_{<=k}(D)) f`.
    pub fn highpass(&self, f: &SpectralField, k: i64) -> SpectralField {
        if k < 0 {
            return f.clone();
        }
        f.apply_radial(|r| 1.0 - lowpass_weight(k, r))
    }

    /// `Delta_k f = P_k(D) f`.
    pub fn block(&self, f: &SpectralField, k: usize) -> Result<SpectralField> {
        if k > self.kmax {
            return Err(Error::OutOfRange(format!("block index {k} > kmax = {}", self.kmax)));
        }
        let k = k as i64;
        Ok(f.apply_radial(|r| block_weight(k, r)))
    }

    /// `sum_{l = lo..=hi} Delta_l f`, clamped to `[0, kmax]`.
    pub fn window(&self, f: &SpectralField, lo: i64, hi: i64) -> SpectralField {
        let hi = hi.min(self.kmax as i64);
        let lo = lo.max(0);
        if hi < lo {
            return SpectralField::zeros(*f.grid());
        }
        f.apply_radial(|r| lowpass_weight(hi, r) - lowpass_weight(lo - 1, r))
    }
}

fn lq_norm(f: &SpectralField, q: Exponent) -> f64 {
    match q {
        Exponent::Two => f.l2_norm(),
        Exponent::Infinity => inverse(f).max_abs(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exponent {
    Two,
    Infinity,
}

impl Exponent {
    fn reciprocal(self) -> f64 {
        match self {
            Exponent::Two => 0.5,
            Exponent::Infinity => 0.0,
        }
    }
}

/// `||d^alpha f||_q / (2^(k|alpha| + 2(1/p - 1/q)) ||f||_p)` for a block at index `k`.
pub fn bernstein_ratio(block: &SpectralField, k: usize, alpha: (u32, u32), p: Exponent, q: Exponent) -> Result<f64> {
    if p == Exponent::Infinity && q == Exponent::Two {
        return Err(Error::InvalidArgument("unsupported exponent pair p = inf, q = 2".into()));
    }
    let denom_norm = lq_norm(block, p);
    if denom_norm == 0.0 {
        return Ok(0.0);
    }
    let num = lq_norm(&derivative(block, alpha), q);
    let order = (alpha.0 + alpha.1) as f64;
    let power = k as f64 * order + 2.0 * (p.reciprocal() - q.reciprocal()) * k as f64;
    Ok(num / (power.exp2() * denom_norm))
}

/// `(sum (1 + |xi|^2)^s |f(xi)|^2)^(1/2)` with the `L2` normalization.
pub fn sobolev_norm(f: &SpectralField, s: f64) -> Result<f64> {
    if !(-4.0..=8.0).contains(&s) {
        return Err(Error::InvalidArgument(format!("Sobolev index {s} outside [-4, 8]")));
    }
    let g = f.grid();
    let n = g.n();
    let l = g.length();
    let mut acc = 0.0;
    for i1 in 0..n {
        for i2 in 0..n {
            let r = g.frequency_norm(i1, i2);
            acc += (1.0 + r * r).powf(s) * f.coeffs()[i1 * n + i2].norm_sqr();
        }
    }
    Ok(l * (acc).sqrt())
}

/// `sup_k 2^(ks) ||Delta_k f||_2`.
pub fn besov_2inf_norm(partition: &DyadicPartition, f: &SpectralField, s: f64) -> Result<f64> {
    if !(-4.0..=8.0).contains(&s) {
        return Err(Error::InvalidArgument(format!("Besov index {s} outside [-4, 8]")));
    }
    let mut best: f64 = 0.0;
    for k in 0..=partition.kmax() {
        best = best.max((k as f64 * s).exp2() * partition.block(f, k)?.l2_norm());
    }
    Ok(best)
}

/// `dr_f(eps)`: `L2` mass of the spectrum on `|xi| >= 1/eps`, sampled on a decreasing
/// dyadic grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TailProfile {
    pub eps: Vec<f64>,
    pub dr: Vec<f64>,
    pub total: f64,
}

/// Default grid `eps_j = 2^-j`, `j = 0 .. log2(n/2) - 1`.
pub fn default_eps_grid(n: usize) -> Vec<f64> {
    let top = (n / 2).trailing_zeros() as i32;
    (0..top).map(|j| (-(j as f64)).exp2()).collect()
}

/// Tail masses at the radii `1/eps` for a decreasing `eps` list, accumulated from
/// the outermost shell inward so the result is exactly monotone.
pub fn tail_masses(f: &SpectralField, eps: &[f64]) -> Result<Vec<f64>> {
    if eps.windows(2).any(|w| !(w[1] < w[0])) || eps.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::InvalidArgument("eps grid must be positive and strictly decreasing".into()));
    }
    let g = f.grid();
    let n = g.n();
    let l2 = g.length() * g.length();
    let radii: Vec<f64> = eps.iter().map(|e| 1.0 / e).collect();
    // shell[j]: radius in [radii[j], radii[j+1]); last shell open-ended
    let mut shell = vec![0.0; radii.len()];
    for i1 in 0..n {
        for i2 in 0..n {
            let r = g.frequency_norm(i1, i2);
            let e = f.coeffs()[i1 * n + i2].norm_sqr();
            if e == 0.0 || r < radii[0] {
                continue;
            }
            let j = radii.partition_point(|&rad| rad <= r) - 1;
            shell[j] += e;
        }
    }
    let mut out = vec![0.0; radii.len()];
    let mut acc = 0.0;
    for j in (0..radii.len()).rev() {
        acc += shell[j];
        out[j] = (l2 * acc).sqrt();
    }
    Ok(out)
}

/// `dr_f(eps)` at a single `eps`.
pub fn tail_mass(f: &SpectralField, eps: f64) -> f64 {
    tail_masses(f, &[eps]).map(|v| v[0]).unwrap_or(f64::NAN)
}

pub fn tail_profile(f: &SpectralField) -> TailProfile {
    let eps = default_eps_grid(f.grid().n());
    let dr = tail_masses(f, &eps).expect("valid default grid");
    TailProfile { eps, dr, total: f.l2_norm() }
}

impl TailProfile {
    pub fn on_grid(f: &SpectralField, eps: &[f64]) -> Result<Self> {
        Ok(Self { eps: eps.to_vec(), dr: tail_masses(f, eps)?, total: f.l2_norm() })
    }

    /// A profile from sampled values; `eps` strictly decreasing, `dr` non-increasing along it.
    pub fn from_samples(eps: Vec<f64>, dr: Vec<f64>, total: f64) -> Result<Self> {
        if eps.len() != dr.len() || eps.is_empty() {
            return Err(Error::InvalidArgument("eps and dr must be nonempty and of equal length".into()));
        }
        if eps.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::InvalidArgument("eps grid must be strictly decreasing".into()));
        }
        if dr.windows(2).any(|w| w[1] > w[0]) || dr.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
            return Err(Error::InvalidArgument("dr must be finite, nonnegative and monotone".into()));
        }
        Ok(Self { eps, dr, total })
    }

    /// Value at a sampled `eps` (relative match `1e-12`).
    pub fn at(&self, eps: f64) -> Option<f64> {
        self.eps.iter().position(|e| (e - eps).abs() <= 1e-12 * eps).map(|j| self.dr[j])
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("eps,dr\n");
        for (e, d) in self.eps.iter().zip(&self.dr) {
            s.push_str(&format!("{e},{d}\n"));
        }
        s
    }
}

/// Relative threshold below which reference tail values are treated as zero.
pub const ZERO_GUARD: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct SlowVaryTable {
    /// `(lambda, C(lambda))`, `lambda` in `{1, 1/2, 1/4, 1/8}`.
    pub entries: Vec<(f64, f64)>,
    pub alpha_fit: f64,
    /// Largest log deviation from `lambda^alpha`, relative to the largest `|log C|`.
    pub fit_residual: f64,
    pub algebraic: bool,
}

impl SlowVaryTable {
    pub fn value(&self, lambda: f64) -> Option<f64> {
        self.entries.iter().find(|(l, _)| (l - lambda).abs() < 1e-15).map(|e| e.1)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("lambda,C\n");
        for (l, c) in &self.entries {
            s.push_str(&format!("{l},{c}\n"));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptedNormContext {
    pub reference: TailProfile,
    pub slow_vary: Option<SlowVaryTable>,
}

impl AdaptedNormContext {
    /// Context without the slow-variation table.
    pub fn from_profile(reference: TailProfile) -> Self {
        Self { reference, slow_vary: None }
    }

    pub fn for_field(f: &SpectralField) -> Self {
        Self::from_profile(tail_profile(f))
    }

    fn guard(&self) -> f64 {
        ZERO_GUARD * self.reference.total
    }

    fn ratio_sup<F: Fn(usize) -> Result<f64>>(&self, numerator: F, scale: f64) -> Result<f64> {
        let guard = self.guard();
        let mut best: f64 = 0.0;
        for (j, &d) in self.reference.dr.iter().enumerate() {
            let v = numerator(j)?;
            if d <= guard {
                if v > 1e-10 * scale.max(f64::MIN_POSITIVE) {
                    return Err(Error::NotDominated(format!(
                        "tail {v:e} at eps = {} where the reference vanishes",
                        self.reference.eps[j]
                    )));
                }
                continue;
            }
            best = best.max(v / d);
        }
        Ok(best)
    }
}

/// `sup_eps dr_f(eps) / dr_ref(eps)` over the reference grid.
pub fn adapted_norm(f: &SpectralField, ctx: &AdaptedNormContext) -> Result<f64> {
    let dr = tail_masses(f, &ctx.reference.eps)?;
    ctx.ratio_sup(|j| Ok(dr[j]), f.l2_norm())
}

/// Adapted norm of a tuple of fields, with Frobenius-combined tails.
pub fn adapted_norm_of_components(fields: &[&SpectralField], ctx: &AdaptedNormContext) -> Result<f64> {
    let mut sq = vec![0.0; ctx.reference.eps.len()];
    let mut total = 0.0;
    for f in fields {
        for (s, d) in sq.iter_mut().zip(tail_masses(f, &ctx.reference.eps)?) {
            *s += d * d;
        }
        total += f.l2_norm_sq();
    }
    ctx.ratio_sup(|j| Ok(sq[j].sqrt()), total.sqrt())
}

fn block_index(eps: f64) -> Result<usize> {
    let k = -eps.log2();
    if (k - k.round()).abs() > 1e-9 || k < -1e-9 {
        return Err(Error::InvalidArgument(format!("eps = {eps} is not a dyadic 2^-k")));
    }
    Ok(k.round() as usize)
}

/// `sup_k ||Delta_k f|| / dr_ref(2^-k)`.
pub fn dyadic_adapted_norm(partition: &DyadicPartition, f: &SpectralField, ctx: &AdaptedNormContext) -> Result<f64> {
    let scale = f.l2_norm();
    ctx.ratio_sup(|j| Ok(partition.block(f, block_index(ctx.reference.eps[j])?)?.l2_norm()), scale)
}

/// `sup_k ||(Id - P_{<=k}(D)) f|| / dr_ref(2^-k)`.
pub fn lowpass_adapted_norm(partition: &DyadicPartition, f: &SpectralField, ctx: &AdaptedNormContext) -> Result<f64> {
    let scale = f.l2_norm();
    ctx.ratio_sup(
        |j| Ok(partition.highpass(f, block_index(ctx.reference.eps[j])? as i64).l2_norm()),
        scale,
    )
}

pub const SLOW_VARY_LAMBDAS: [f64; 4] = [1.0, 0.5, 0.25, 0.125];

/// `C(lambda) = inf_eps dr(lambda eps)/dr(eps)` over the sampled grid, with an
/// algebraic-decay fit `C(lambda) ~ lambda^alpha`.
pub fn slow_varying_table(profile: &TailProfile) -> Result<AdaptedNormContext> {
    let guard = ZERO_GUARD * profile.total;
    let usable: Vec<usize> = (0..profile.eps.len()).filter(|&j| profile.dr[j] > guard).collect();
    if usable.len() < 6 {
        return Err(Error::InsufficientDynamicRange(format!(
            "{} usable dyadic points, need 6",
            usable.len()
        )));
    }
    let top = profile.dr[usable[0]];
    let bottom = profile.dr[*usable.last().unwrap()];
    if bottom >= top * (1.0 - 1e-12) {
        return Err(Error::InsufficientDynamicRange("tail is flat over the usable grid".into()));
    }
    let mut entries = Vec::new();
    for &lambda in &SLOW_VARY_LAMBDAS {
        let mut inf = f64::INFINITY;
        for &j in &usable {
            if let Some(v) = profile.at(lambda * profile.eps[j]) {
                inf = inf.min(v / profile.dr[j]);
            }
        }
        entries.push((lambda, inf));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    let mut degenerate = false;
    for &(l, c) in &entries[1..] {
        if !(c > 0.0 && c.is_finite()) {
            degenerate = true;
            continue;
        }
        num += c.ln() * l.ln();
        den += l.ln() * l.ln();
    }
    let alpha_fit = if den > 0.0 { num / den } else { f64::NAN };
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for &(l, c) in &entries[1..] {
        if c > 0.0 && c.is_finite() {
            worst = worst.max((c.ln() - alpha_fit * l.ln()).abs());
            scale = scale.max(c.ln().abs());
        }
    }
    let fit_residual = if scale > 0.0 { worst / scale } else { 0.0 };
    let algebraic = !degenerate && alpha_fit.is_finite() && fit_residual <= 0.1;
    Ok(AdaptedNormContext {
        reference: profile.clone(),
        slow_vary: Some(SlowVaryTable { entries, alpha_fit, fit_residual, algebraic }),
    })
}
