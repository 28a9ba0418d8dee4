//! Centered unitary DFT used as the OPD sensing factor.
//!
//! Row `l` (1-based) of `Φ_dft*` measures frequency `l - N/2`, so the zero
//! frequency sits at row `N/2`:
//! `(Φ_dft* u)_l = N^{-1/2} Σ_n u_n exp(-2πi (l - N/2) n / N)`.

use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use super::dims::check_pow2;
use super::linear_map::{Field, LinearMap, C64};
use crate::error::Result;

#[derive(Clone)]
pub struct CenteredDft {
    n: usize,
    shift: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for CenteredDft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CenteredDft").field("n", &self.n).finish()
    }
}

impl CenteredDft {
    pub fn new(n: usize) -> Result<Self> {
        check_pow2("DFT size", n)?;
        let mut planner = FftPlanner::new();
        Ok(CenteredDft {
            n,
            // output row k (0-based) holds FFT bin (k + 1 - n/2) mod n
            shift: (n / 2 + 1) % n,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        })
    }

    /// Signed frequency of 1-based row `l`.
    pub fn frequency(&self, l: usize) -> i64 {
        l as i64 - (self.n / 2) as i64
    }
}

impl LinearMap for CenteredDft {
    fn dim(&self) -> usize {
        self.n
    }

    fn field(&self) -> Field {
        Field::Complex
    }

    fn forward_in_place(&self, x: &mut [C64]) {
        self.fwd.process(x);
        x.rotate_left(self.shift);
        let s = 1.0 / (self.n as f64).sqrt();
        x.iter_mut().for_each(|v| *v *= s);
    }

    fn adjoint_in_place(&self, x: &mut [C64]) {
        x.rotate_right(self.shift);
        self.inv.process(x);
        let s = 1.0 / (self.n as f64).sqrt();
        x.iter_mut().for_each(|v| *v *= s);
    }
}

/// Applies `Φ_dft*` (or `Φ_dft` when `adjoint`) to `u`.
pub fn dft_apply(u: &[C64], adjoint: bool) -> Result<Vec<C64>> {
    let dft = CenteredDft::new(u.len())?;
    if adjoint {
        dft.adjoint(u)
    } else {
        dft.forward(u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transforms::linear_map::{densify, norm2, DEFAULT_DENSIFY_CAP};
    use std::f64::consts::PI;

    #[test]
    fn constant_maps_to_center_row() {
        for n in [2usize, 4, 8, 16] {
            let u = vec![C64::new(1.0 / (n as f64).sqrt(), 0.0); n];
            let y = dft_apply(&u, false).unwrap();
            for (k, v) in y.iter().enumerate() {
                let want = if k + 1 == n / 2 { 1.0 } else { 0.0 };
                assert!((v - C64::new(want, 0.0)).norm() < 1e-12, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn dense_4x4_matches_explicit_matrix() {
        let n = 4;
        let d = densify(&CenteredDft::new(n).unwrap(), DEFAULT_DENSIFY_CAP).unwrap();
        for l in 1..=n {
            let f = l as f64 - (n / 2) as f64;
            for m in 0..n {
                let want = C64::from_polar(0.5, -2.0 * PI * f * m as f64 / n as f64);
                assert!((d.get(l - 1, m) - want).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn unitary_and_round_trip() {
        let u: Vec<C64> = (0..32)
            .map(|i| C64::new((i as f64 * 0.7).sin(), (i as f64 * 1.3).cos()))
            .collect();
        let y = dft_apply(&u, false).unwrap();
        assert!((norm2(&y) - norm2(&u)).abs() < 1e-12);
        let back = dft_apply(&y, true).unwrap();
        for (a, b) in u.iter().zip(&back) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn rejects_non_power_of_two() {
        assert!(dft_apply(&[C64::default(); 12], false).is_err());
    }
}
