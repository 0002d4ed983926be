//! The Lyapunov pairing `W = (chi(eps D) |D|^(alpha-2) curl T_A (Phi - Id), chi(eps D) w0)`
//! with `A = [DPhi]^-1`, and its positive term `P = ||T_{b^(alpha/2)} chi(eps D) w0||^2`
//! where `b(x, xi) = |xi| / |A(x)^T xi|`.

use super::ChiCutoff;
use crate::error::{Error, Result};
use crate::euler::FlowMapState;
use crate::fourier::{derivative, forward, l2_inner, FieldInterpolator, InterpOptions, PhysicalField, SpectralField, VectorField};
use crate::paracalc::{flow_symbol, paraproduct, AdmissibleCutoff, ParadiffOperator, SymbolRep};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovSetup {
    pub chi: ChiCutoff,
    pub cutoff: AdmissibleCutoff,
    pub n_theta: usize,
    /// 2 for Euler.
    pub alpha: f64,
    /// Largest accepted discarded angular mass of the flow symbol.
    pub max_truncation: f64,
    pub interp: InterpOptions,
}

impl Default for LyapunovSetup {
    fn default() -> Self {
        Self {
            chi: ChiCutoff::default(),
            cutoff: AdmissibleCutoff::default(),
            n_theta: 64,
            alpha: 2.0,
            max_truncation: 1e-6,
            interp: InterpOptions::default(),
        }
    }
}

/// `T_M v` for a matrix of spectral coefficients.
fn matrix_paraproduct(m: &[SpectralField; 4], v: &[SpectralField; 2], cutoff: &AdmissibleCutoff) -> Result<[SpectralField; 2]> {
    let mut r1 = paraproduct(&m[0], &v[0], cutoff)?;
    r1.add_assign(&paraproduct(&m[1], &v[1], cutoff)?)?;
    let mut r2 = paraproduct(&m[2], &v[0], cutoff)?;
    r2.add_assign(&paraproduct(&m[3], &v[1], cutoff)?)?;
    Ok([r1, r2])
}

fn curl(v: &[SpectralField; 2]) -> Result<SpectralField> {
    derivative(&v[1], (1, 0)).sub(&derivative(&v[0], (0, 1)))
}

fn spectral_entries(entries: &[PhysicalField; 4]) -> [SpectralField; 4] {
    [0, 1, 2, 3].map(|k| forward(&entries[k]))
}

/// `|D|^(alpha - 2)` on nonzero modes; the identity at `alpha = 2`.
fn order_shift(f: &SpectralField, alpha: f64) -> SpectralField {
    f.apply_radial(|r| if r == 0.0 { 0.0 } else { r.powf(alpha - 2.0) })
}

/// Everything at one time that does not depend on `eps`.
#[derive(Debug, Clone)]
pub struct LyapunovFrame {
    pub t: f64,
    /// `|D|^(alpha-2) curl T_A d`.
    pub curl_field: SpectralField,
    /// Time derivative of `curl_field` from `d' = u o Phi` and `A' = -A (Du o Phi)`.
    pub rate_field: Option<SpectralField>,
    pub symbol: SymbolRep,
    pub interp_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovValues {
    pub w: f64,
    pub p: f64,
    /// `dW/dt` from the flow velocity, when available.
    pub w_rate: Option<f64>,
}

impl LyapunovFrame {
    pub fn new(flow: &FlowMapState, velocity: Option<&VectorField>, setup: &LyapunovSetup) -> Result<Self> {
        let g = *flow.grid();
        let a = flow.inverse_jacobian();
        let a_hat = spectral_entries(a.entries());
        let d = [forward(&flow.displacement()[0]), forward(&flow.displacement()[1])];
        let curl_field = order_shift(&curl(&matrix_paraproduct(&a_hat, &d, &setup.cutoff)?)?, setup.alpha);
        let beta = setup.alpha / 2.0;
        let symbol = flow_symbol(a.transpose().entries(), beta, setup.n_theta)?;
        if symbol.truncation_mass > setup.max_truncation {
            return Err(Error::Unresolved(format!(
                "flow symbol discards angular mass {} above {} at t = {}",
                symbol.truncation_mass,
                setup.max_truncation,
                flow.t()
            )));
        }
        let mut interp_residual = 0.0;
        let rate_field = match velocity {
            None => None,
            Some(u) => {
                u.grid().check_same(&g)?;
                let du1 = SpectralField::pack(&derivative(&u.u1, (1, 0)), &derivative(&u.u2, (1, 0)))?;
                let du2 = SpectralField::pack(&derivative(&u.u1, (0, 1)), &derivative(&u.u2, (0, 1)))?;
                let packed = u.packed();
                let interp = FieldInterpolator::new(&[&packed, &du1, &du2], setup.interp)?;
                let pts = flow.points();
                interp_residual = interp.probe_residual(&pts);
                let vals = interp.eval_checked(&pts)?;
                let n2 = g.len();
                let (mut v1, mut v2) = (Vec::with_capacity(n2), Vec::with_capacity(n2));
                let mut adot = [(); 4].map(|_| Vec::with_capacity(n2));
                for i in 0..n2 {
                    v1.push(vals[0][i].re);
                    v2.push(vals[0][i].im);
                    // Du o Phi = [[d1 u1, d2 u1], [d1 u2, d2 u2]]
                    let m = [vals[1][i].re, vals[2][i].re, vals[1][i].im, vals[2][i].im];
                    let am = a.at(i);
                    let prod = [
                        am[0] * m[0] + am[1] * m[2],
                        am[0] * m[1] + am[1] * m[3],
                        am[2] * m[0] + am[3] * m[2],
                        am[2] * m[1] + am[3] * m[3],
                    ];
                    for k in 0..4 {
                        adot[k].push(-prod[k]);
                    }
                }
                let adot_hat = adot.map(|v| forward(&PhysicalField::from_raw(g, v)));
                let ddot = [forward(&PhysicalField::new(g, v1)?), forward(&PhysicalField::new(g, v2)?)];
                let first = matrix_paraproduct(&adot_hat, &d, &setup.cutoff)?;
                let second = matrix_paraproduct(&a_hat, &ddot, &setup.cutoff)?;
                let sum = [first[0].add(&second[0])?, first[1].add(&second[1])?];
                Some(order_shift(&curl(&sum)?, setup.alpha))
            }
        };
        Ok(Self { t: flow.t(), curl_field, rate_field, symbol, interp_residual })
    }

    /// `W`, `P` and the flow-based `dW/dt` at each `eps`.
    pub fn evaluate(&self, omega0: &SpectralField, eps: &[f64], setup: &LyapunovSetup) -> Result<Vec<LyapunovValues>> {
        omega0.grid().check_same(self.curl_field.grid())?;
        let mut op = ParadiffOperator::new(&self.symbol, &setup.cutoff);
        let mut out = Vec::with_capacity(eps.len());
        for &e in eps {
            let cw = setup.chi.apply(omega0, e);
            let w = l2_inner(&setup.chi.apply(&self.curl_field, e), &cw)?;
            let w_rate = match &self.rate_field {
                Some(r) => Some(l2_inner(&setup.chi.apply(r, e), &cw)?),
                None => None,
            };
            let p = op.apply(&cw)?.l2_norm_sq();
            out.push(LyapunovValues { w, p, w_rate });
        }
        Ok(out)
    }
}

/// `(W, P)` at a single `eps`.
pub fn lyapunov_pairing(flow: &FlowMapState, omega0: &SpectralField, eps: f64, setup: &LyapunovSetup) -> Result<(f64, f64)> {
    let frame = LyapunovFrame::new(flow, None, setup)?;
    let v = frame.evaluate(omega0, &[eps], setup)?[0];
    Ok((v.w, v.p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::euler::{flow_step, FlowVelocities};
    use crate::fourier::{biot_savart, Grid2D};
    use crate::paracalc::MatrixField;
    use num_complex::Complex64;

    fn rough(g: Grid2D) -> SpectralField {
        SpectralField::from_modes(g, |k1, k2| {
            let r = ((k1 * k1 + k2 * k2) as f64).sqrt();
            if r == 0.0 || r > g.n() as f64 / 3.0 {
                return Complex64::new(0.0, 0.0);
            }
            Complex64::from_polar(r.powf(-3.5), ((k1 * 13 - k2 * 7) as f64).cos() * 2.0)
        })
        .real_part()
    }

    #[test]
    fn identity_flow_gives_zero_w_and_full_p() {
        let g = Grid2D::periodic(64).unwrap();
        let w0 = rough(g);
        let setup = LyapunovSetup::default();
        let (w, p) = lyapunov_pairing(&FlowMapState::identity(g), &w0, 0.125, &setup).unwrap();
        assert_eq!(w, 0.0);
        // T_1 keeps blocks from N0 on; chi(eps D) w0 lives on [8, 16]
        let cw = setup.chi.apply(&w0, 0.125);
        let part = crate::dyadic::DyadicPartition::new(g);
        let expect = part.highpass(&cw, setup.cutoff.n0() as i64 - 1).l2_norm_sq();
        assert!((p - expect).abs() <= 1e-12 * expect);
    }

    #[test]
    fn frozen_shear_symbol_matches_pointwise_values() {
        let g = Grid2D::periodic(32).unwrap();
        let u = biot_savart(&forward(&PhysicalField::from_fn(g, |_, x2| x2.cos()))).unwrap();
        let mut f = FlowMapState::identity(g);
        for _ in 0..5 {
            f = flow_step(&f, FlowVelocities::frozen(&u), 0.1, InterpOptions::default()).unwrap();
        }
        let frame = LyapunovFrame::new(&f, None, &LyapunovSetup { n_theta: 64, ..Default::default() }).unwrap();
        let vals = frame.symbol.coefficient_values();
        let t = f.t();
        for (idx, th) in [(5usize, 0.4f64), (77, 1.3), (300, 2.2), (999, 5.0)] {
            let x2 = g.coordinate(idx % 32);
            // A^T = [[1, 0], [t cos x2, 1]]
            let (c, s) = (th.cos(), th.sin());
            let exact = 1.0 / c.hypot(t * x2.cos() * c + s);
            let got = frame.symbol.eval_with(&vals, idx, c, s).re;
            assert!((got - exact).abs() < 1e-6, "{got} vs {exact}");
        }
        let exact_a = MatrixField::from_fn(g, |_, x2| [1.0, t * x2.cos(), 0.0, 1.0]);
        assert!(f.inverse_jacobian().max_deviation(&exact_a) < 1e-8);
    }

    #[test]
    fn rate_at_start_matches_centered_difference_and_p() {
        let g = Grid2D::periodic(64).unwrap();
        let w0 = rough(g);
        let u = biot_savart(&w0).unwrap();
        let setup = LyapunovSetup::default();
        let eps = 0.0625;
        let id = FlowMapState::identity(g);
        let h = 1e-3;
        let opts = InterpOptions::default();
        let fp = flow_step(&id, FlowVelocities::frozen(&u), h, opts).unwrap();
        let fm = flow_step(&id, FlowVelocities::frozen(&u), -h, opts).unwrap();
        let wp = lyapunov_pairing(&fp, &w0, eps, &setup).unwrap().0;
        let wm = lyapunov_pairing(&fm, &w0, eps, &setup).unwrap().0;
        let fd = (wp - wm) / (2.0 * h);
        let frame = LyapunovFrame::new(&id, Some(&u), &setup).unwrap();
        let v = frame.evaluate(&w0, &[eps], &setup).unwrap()[0];
        let rate = v.w_rate.unwrap();
        assert!((fd - rate).abs() <= 1e-5 * rate.abs(), "{fd} vs {rate}");
        // the chi weights enter W twice, so the positive term pairs chi w0 with itself
        let scale = crate::dyadic::tail_mass(&w0, eps).powi(2);
        assert!((rate - v.p).abs() <= 0.5 * scale, "rate {rate}, P {}, dr^2 {scale}", v.p);
    }

    #[test]
    fn gsqg_at_two_reproduces_euler() {
        let g = Grid2D::periodic(32).unwrap();
        let u = biot_savart(&forward(&PhysicalField::from_fn(g, |x1, x2| x2.cos() + 0.3 * (x1 - x2).sin()))).unwrap();
        let f = flow_step(&FlowMapState::identity(g), FlowVelocities::frozen(&u), 0.3, InterpOptions::default()).unwrap();
        let w0 = rough(g);
        let e = lyapunov_pairing(&f, &w0, 0.25, &LyapunovSetup::default()).unwrap();
        let q = lyapunov_pairing(&f, &w0, 0.25, &LyapunovSetup { alpha: 2.0 - 1e-15, ..Default::default() }).unwrap();
        assert!((e.0 - q.0).abs() <= 1e-12 * e.0.abs().max(1e-300));
        assert!((e.1 - q.1).abs() <= 1e-12 * e.1);
    }
}
