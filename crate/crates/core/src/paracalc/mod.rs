//! Paraproducts, paradifferential operators and paracomposition.
//!
//! Block rule: `Delta_i` of the high factor pairs with `P_{<= i - N0}` of the
//! low factor. Every product is an exact lattice product (see
//! [`crate::fourier::product`]), so `T_f g + T_g f + R(f, g) = f g` holds to
//! rounding.

mod commutator;
mod diffeo;
mod symbol;

pub use commutator::commutator_check;
pub use diffeo::{paracompose, paralinearize_composition, DiffeoMap, MatrixField, Paralinearization};
pub use symbol::{flow_symbol, paradiff_apply, symbol_seminorm, Multiplier, ParadiffOperator, SymbolRep, SymbolTerm};

use crate::dyadic::DyadicPartition;
use crate::error::{Error, Result};
use crate::fourier::padded::ProductAccumulator;
use crate::fourier::SpectralField;

/// Dyadic form of an admissible cutoff: `B > 1`, `b > 0` and the low-block offset `N0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmissibleCutoff {
    big_b: f64,
    small_b: f64,
    n0: usize,
}

impl AdmissibleCutoff {
    /// Smallest offset keeping every block product inside the annulus
    /// `((1 - 1/B) 2^(j-1), (1 + 1/B) 2^(j+1))`: `N0 = ceil(log2 B) + 2`.
    pub fn min_offset(big_b: f64) -> usize {
        (big_b.log2().ceil().max(0.0) as usize) + 2
    }

    pub fn new(big_b: f64, small_b: f64) -> Result<Self> {
        Self::with_offset(big_b, small_b, Self::min_offset(big_b))
    }

    pub fn with_offset(big_b: f64, small_b: f64, n0: usize) -> Result<Self> {
        if !(big_b > 1.0 && big_b.is_finite()) {
            return Err(Error::InvalidArgument(format!("B = {big_b} must exceed 1")));
        }
        if !(small_b > 0.0 && small_b.is_finite()) {
            return Err(Error::InvalidArgument(format!("b = {small_b} must be positive")));
        }
        if n0 < Self::min_offset(big_b) {
            return Err(Error::InvalidArgument(format!(
                "N0 = {n0} is below {} required by B = {big_b}",
                Self::min_offset(big_b)
            )));
        }
        Ok(Self { big_b, small_b, n0 })
    }

    pub fn big_b(&self) -> f64 {
        self.big_b
    }

    pub fn small_b(&self) -> f64 {
        self.small_b
    }

    pub fn n0(&self) -> usize {
        self.n0
    }

    /// Annulus radii containing the spectrum of `T_f Delta_j g`.
    pub fn annulus(&self, j: usize) -> (f64, f64) {
        let lo = (1.0 - 1.0 / self.big_b) * (j as f64 - 1.0).exp2();
        let hi = (1.0 + 1.0 / self.big_b) * (j as f64 + 1.0).exp2();
        (lo, hi)
    }
}

impl Default for AdmissibleCutoff {
    fn default() -> Self {
        Self::new(4.0, 1.0).expect("valid defaults")
    }
}

/// `T_f g = sum_{i >= N0} P_{<= i-N0} f * Delta_i g`.
pub fn paraproduct(f: &SpectralField, g: &SpectralField, cutoff: &AdmissibleCutoff) -> Result<SpectralField> {
    paraproduct_from(f, g, cutoff, cutoff.n0())
}

/// Paraproduct restricted to high blocks `i >= start`.
pub(crate) fn paraproduct_from(
    f: &SpectralField,
    g: &SpectralField,
    cutoff: &AdmissibleCutoff,
    start: usize,
) -> Result<SpectralField> {
    f.grid().check_same(g.grid())?;
    let part = DyadicPartition::new(*f.grid());
    let n0 = cutoff.n0() as i64;
    let mut acc = ProductAccumulator::new(*f.grid());
    for i in start..=part.kmax() {
        let blk = part.block(g, i)?;
        let low = part.lowpass(f, i as i64 - n0);
        acc.add_product(&low, &blk)?;
    }
    Ok(acc.finish())
}

/// Single summand `P_{<= j-N0} f * Delta_j g`.
pub fn paraproduct_block(f: &SpectralField, g: &SpectralField, j: usize, cutoff: &AdmissibleCutoff) -> Result<SpectralField> {
    f.grid().check_same(g.grid())?;
    let part = DyadicPartition::new(*f.grid());
    if j < cutoff.n0() {
        return Ok(SpectralField::zeros(*f.grid()));
    }
    let blk = part.block(g, j)?;
    let low = part.lowpass(f, j as i64 - cutoff.n0() as i64);
    crate::fourier::product(&low, &blk)
}

/// `R(f, g) = sum_{|a - b| < N0} Delta_a f * Delta_b g`.
pub fn remainder(f: &SpectralField, g: &SpectralField, cutoff: &AdmissibleCutoff) -> Result<SpectralField> {
    f.grid().check_same(g.grid())?;
    let part = DyadicPartition::new(*f.grid());
    let n0 = cutoff.n0() as i64;
    let mut acc = ProductAccumulator::new(*f.grid());
    for b in 0..=part.kmax() {
        let blk = part.block(g, b)?;
        let near = part.window(f, b as i64 - n0 + 1, b as i64 + n0 - 1);
        acc.add_product(&near, &blk)?;
    }
    Ok(acc.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::{forward, product, Grid2D, PhysicalField};
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn random_field(g: Grid2D, seed: u64, decay: f64) -> SpectralField {
        let mut state = seed;
        let mut next = || {
            state = state.wrapping_add(0x9E3779B97F4A7C15);
            let mut z = state;
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
            ((z ^ (z >> 31)) >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let mut vals = vec![0.0; g.len()];
        vals.iter_mut().for_each(|v| *v = next());
        let f = forward(&PhysicalField::new(g, vals).unwrap());
        f.apply_radial(|r| (1.0 + r).powf(-decay))
    }

    #[test]
    fn offset_formula() {
        assert_eq!(AdmissibleCutoff::min_offset(4.0), 4);
        assert_eq!(AdmissibleCutoff::min_offset(2.0), 3);
        assert!(AdmissibleCutoff::with_offset(4.0, 1.0, 3).is_err());
        assert!(AdmissibleCutoff::new(1.0, 1.0).is_err());
        assert!(AdmissibleCutoff::new(4.0, 0.0).is_err());
    }

    #[test]
    fn reconstruction_closes() {
        let g = Grid2D::periodic(64).unwrap();
        let c = AdmissibleCutoff::default();
        let f = random_field(g, 1, 0.5);
        let h = random_field(g, 2, 1.0);
        let sum = paraproduct(&f, &h, &c)
            .unwrap()
            .add(&paraproduct(&h, &f, &c).unwrap())
            .unwrap()
            .add(&remainder(&f, &h, &c).unwrap())
            .unwrap();
        let full = product(&f, &h).unwrap();
        assert!(sum.sub(&full).unwrap().l2_norm() <= 1e-12 * full.l2_norm());
    }

    #[test]
    fn constant_coefficient_gives_the_high_part() {
        let g = Grid2D::periodic(64).unwrap();
        let c = AdmissibleCutoff::default();
        let h = random_field(g, 3, 0.0);
        let mut f = SpectralField::zeros(g);
        f.set_mode(0, 0, Complex64::new(2.5, 0.0));
        let t = paraproduct(&f, &h, &c).unwrap();
        // oracle: 2.5 * (g - sum_{i < N0} Delta_i g), summed block by block
        let part = DyadicPartition::new(g);
        let mut low = SpectralField::zeros(g);
        for i in 0..c.n0() {
            low.add_assign(&part.block(&h, i).unwrap()).unwrap();
        }
        let expect = h.sub(&low).unwrap().scale(2.5);
        assert!(t.sub(&expect).unwrap().l2_norm() <= 1e-13 * expect.l2_norm());
    }

    #[test]
    fn summands_stay_in_their_annuli() {
        let g = Grid2D::periodic(128).unwrap();
        let c = AdmissibleCutoff::default();
        let f = random_field(g, 4, 0.0);
        let h = random_field(g, 5, 0.0);
        let part = DyadicPartition::new(g);
        for j in 3..=part.kmax() - 2 {
            let t = paraproduct_block(&f, &h, j, &c).unwrap();
            let (lo, hi) = c.annulus(j);
            let mut outside = 0.0;
            for i1 in 0..128 {
                for i2 in 0..128 {
                    let r = g.frequency_norm(i1, i2);
                    if r <= lo || r >= hi {
                        outside += t.coeffs()[i1 * 128 + i2].norm_sqr();
                    }
                }
            }
            let tot: f64 = t.coeffs().iter().map(|z| z.norm_sqr()).sum();
            assert!(outside.sqrt() <= 1e-13 * tot.sqrt().max(1e-300), "j = {j}");
        }
    }

    #[test]
    fn far_apart_spectra_have_small_remainder() {
        let g = Grid2D::periodic(128).unwrap();
        let c = AdmissibleCutoff::default();
        let mut f = SpectralField::zeros(g);
        f.set_mode(1, 1, Complex64::new(0.5, 0.0));
        f.set_mode(-1, -1, Complex64::new(0.5, 0.0));
        let mut h = SpectralField::zeros(g);
        h.set_mode(40, 3, Complex64::new(0.5, 0.0));
        h.set_mode(-40, -3, Complex64::new(0.5, 0.0));
        let r = remainder(&f, &h, &c).unwrap();
        assert!(r.l2_norm() < 1e-14);
        let t = paraproduct(&f, &h, &c).unwrap();
        assert!(t.sub(&product(&f, &h).unwrap()).unwrap().l2_norm() < 1e-13);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]
        #[test]
        fn reconstruction_random_pairs(s1 in 0u64..1000, s2 in 0u64..1000, d in 0.0f64..2.0) {
            let g = Grid2D::periodic(32).unwrap();
            let c = AdmissibleCutoff::default();
            let f = random_field(g, s1, d);
            let h = random_field(g, s2 + 5000, 2.0 - d);
            let sum = paraproduct(&f, &h, &c).unwrap()
                .add(&paraproduct(&h, &f, &c).unwrap()).unwrap()
                .add(&remainder(&f, &h, &c).unwrap()).unwrap();
            let full = product(&f, &h).unwrap();
            prop_assert!(sum.sub(&full).unwrap().l2_norm() <= 1e-12 * full.l2_norm());
        }
    }
}
