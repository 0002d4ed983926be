//! Lagrangian flow map `Phi_t = Id + d_t`, stepped with interpolated velocities.

use crate::error::{Error, Result};
use crate::fourier::{derivative, forward, FieldInterpolator, Grid2D, InterpOptions, PhysicalField, SpectralField, VectorField};
use crate::paracalc::{DiffeoMap, MatrixField};
use num_complex::Complex64;

#[derive(Debug, Clone)]
pub struct FlowMapState {
    displacement: [PhysicalField; 2],
    jacobian: MatrixField,
    inverse_jacobian: MatrixField,
    det: PhysicalField,
    t: f64,
}

impl FlowMapState {
    pub fn identity(grid: Grid2D) -> Self {
        Self::from_displacement([PhysicalField::zeros(grid), PhysicalField::zeros(grid)], 0.0)
            .expect("identity is invertible")
    }

    /// Jacobian by spectral differentiation of the displacement, inverse by the 2x2 formula.
    pub fn from_displacement(displacement: [PhysicalField; 2], t: f64) -> Result<Self> {
        displacement[0].grid().check_same(displacement[1].grid())?;
        let jacobian = MatrixField::jacobian_of(&forward(&displacement[0]), &forward(&displacement[1]))?;
        let det = jacobian.det();
        if let Some(idx) = det.values().iter().position(|d| !(*d > 0.0)) {
            return Err(Error::NotDiffeomorphism(format!(
                "flow map lost invertibility at resolution: det = {} at grid point {idx}, t = {t}",
                det.values()[idx]
            )));
        }
        let inverse_jacobian = jacobian.inverse()?;
        Ok(Self { displacement, jacobian, inverse_jacobian, det, t })
    }

    pub fn grid(&self) -> &Grid2D {
        self.displacement[0].grid()
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// `Phi_t - Id`.
    pub fn displacement(&self) -> &[PhysicalField; 2] {
        &self.displacement
    }

    pub fn jacobian(&self) -> &MatrixField {
        &self.jacobian
    }

    pub fn inverse_jacobian(&self) -> &MatrixField {
        &self.inverse_jacobian
    }

    pub fn det(&self) -> &PhysicalField {
        &self.det
    }

    /// `max |det DPhi - 1|`.
    pub fn det_drift(&self) -> f64 {
        self.det.values().iter().map(|d| (d - 1.0).abs()).fold(0.0, f64::max)
    }

    /// `max |DPhi [DPhi]^-1 - Id|` entrywise.
    pub fn inverse_defect(&self) -> f64 {
        let prod = self.jacobian.mul(&self.inverse_jacobian).expect("shared grid");
        prod.max_deviation(&MatrixField::identity(*self.grid()))
    }

    pub fn to_diffeo(&self) -> Result<DiffeoMap> {
        DiffeoMap::from_parts(self.displacement.clone(), self.jacobian.clone())
    }

    /// Grid images `x + d(x)`.
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

/// Velocities at the start, midpoint and end of one flow step.
#[derive(Debug, Clone, Copy)]
pub struct FlowVelocities<'a> {
    pub start: &'a VectorField,
    pub mid: &'a VectorField,
    pub end: &'a VectorField,
}

impl<'a> FlowVelocities<'a> {
    /// Time-independent velocity.
    pub fn frozen(u: &'a VectorField) -> Self {
        Self { start: u, mid: u, end: u }
    }
}

fn offset(points: &[[f64; 2]], k: &[Complex64], h: f64) -> Vec<[f64; 2]> {
    points.iter().zip(k).map(|(p, v)| [p[0] + h * v.re, p[1] + h * v.im]).collect()
}

/// RK4 update of `d` over a step `h` (negative `h` runs backwards).
pub fn flow_step(flow: &FlowMapState, vel: FlowVelocities<'_>, h: f64, opts: InterpOptions) -> Result<FlowMapState> {
    if !h.is_finite() {
        return Err(Error::InvalidArgument(format!("flow step {h} is not finite")));
    }
    let g = *flow.grid();
    for u in [vel.start, vel.mid, vel.end] {
        u.grid().check_same(&g)?;
    }
    let build = |u: &VectorField| FieldInterpolator::new(&[&u.packed()], opts);
    let start = build(vel.start)?;
    let mid_owned;
    let mid = if std::ptr::eq(vel.mid, vel.start) {
        &start
    } else {
        mid_owned = build(vel.mid)?;
        &mid_owned
    };
    let end_owned;
    let end = if std::ptr::eq(vel.end, vel.start) {
        &start
    } else if std::ptr::eq(vel.end, vel.mid) {
        mid
    } else {
        end_owned = build(vel.end)?;
        &end_owned
    };
    let x = flow.points();
    let eval = |ip: &FieldInterpolator, pts: &[[f64; 2]]| -> Result<Vec<Complex64>> {
        Ok(ip.eval_checked(pts)?.swap_remove(0))
    };
    let k1 = eval(&start, &x)?;
    let k2 = eval(mid, &offset(&x, &k1, 0.5 * h))?;
    let k3 = eval(mid, &offset(&x, &k2, 0.5 * h))?;
    let k4 = eval(end, &offset(&x, &k3, h))?;
    let mut d1 = flow.displacement[0].values().to_vec();
    let mut d2 = flow.displacement[1].values().to_vec();
    for i in 0..d1.len() {
        let inc = (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) * (h / 6.0);
        d1[i] += inc.re;
        d2[i] += inc.im;
    }
    FlowMapState::from_displacement([PhysicalField::new(g, d1)?, PhysicalField::new(g, d2)?], flow.t + h)
}

/// `d/dt ([DPhi]^-1 d) = [DPhi]^-1 (u o Phi - (Du o Phi) d)` evaluated on the grid.
pub fn cancellation_rate(flow: &FlowMapState, u: &VectorField, opts: InterpOptions) -> Result<[PhysicalField; 2]> {
    u.grid().check_same(flow.grid())?;
    let g = *flow.grid();
    let du1 = SpectralField::pack(&derivative(&u.u1, (1, 0)), &derivative(&u.u2, (1, 0)))?;
    let du2 = SpectralField::pack(&derivative(&u.u1, (0, 1)), &derivative(&u.u2, (0, 1)))?;
    let packed = u.packed();
    let vals = FieldInterpolator::new(&[&packed, &du1, &du2], opts)?.eval_checked(&flow.points())?;
    let (d1, d2) = (flow.displacement[0].values(), flow.displacement[1].values());
    let (mut r1, mut r2) = (Vec::with_capacity(g.len()), Vec::with_capacity(g.len()));
    for i in 0..g.len() {
        // columns of Du o Phi: d/dx1 u and d/dx2 u
        let v = vals[0][i] - (vals[1][i] * d1[i] + vals[2][i] * d2[i]);
        r1.push(v.re);
        r2.push(v.im);
    }
    flow.inverse_jacobian.apply(&[PhysicalField::new(g, r1)?, PhysicalField::new(g, r2)?])
}
