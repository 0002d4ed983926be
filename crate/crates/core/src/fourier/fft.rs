//! Cached rustfft plans and square 2D transforms (rows, blocked transpose, rows, transpose).

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

type PlanCache = Mutex<HashMap<(usize, bool), Arc<dyn Fft<f64>>>>;

fn cache() -> &'static PlanCache {
    static PLANS: OnceLock<PlanCache> = OnceLock::new();
    PLANS.get_or_init(|| Mutex::new(HashMap::new()))
}

pub(crate) fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let mut map = cache().lock().unwrap_or_else(|p| p.into_inner());
    map.entry((n, inverse))
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            if inverse {
                planner.plan_fft_inverse(n)
            } else {
                planner.plan_fft_forward(n)
            }
        })
        .clone()
}

const TILE: usize = 32;

pub(crate) fn transpose_square(data: &mut [Complex64], n: usize) {
    for bi in (0..n).step_by(TILE) {
        for bj in (bi..n).step_by(TILE) {
            let ie = (bi + TILE).min(n);
            let je = (bj + TILE).min(n);
            for i in bi..ie {
                let j0 = if bi == bj { i + 1 } else { bj };
                for j in j0..je {
                    data.swap(i * n + j, j * n + i);
                }
            }
        }
    }
}

/// Unnormalized 2D DFT of an `n x n` row-major array, in place.
pub(crate) fn fft2(data: &mut [Complex64], n: usize, inverse: bool) {
    debug_assert_eq!(data.len(), n * n);
    let p = plan(n, inverse);
    let mut scratch = vec![Complex64::new(0.0, 0.0); p.get_inplace_scratch_len()];
    p.process_with_scratch(data, &mut scratch);
    transpose_square(data, n);
    p.process_with_scratch(data, &mut scratch);
    transpose_square(data, n);
}
