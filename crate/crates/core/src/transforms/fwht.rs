//! Orthonormal Walsh–Hadamard transform in Paley order.
//!
//! The Paley matrix follows the block recursion
//! `H_N = [H_{N/2} ⊗ (1,1)ᵀ, H_{N/2} ⊗ (1,-1)ᵀ] / √2`, `H_1 = [1]`, which gives
//! `H_N[i, j] = (-1)^{<i, rev(j)>} / √N` with `rev` the bit reversal of the
//! column index. `H_N` is real and symmetric, so it is its own adjoint, and
//! applying it is a bit-reversal permutation followed by natural-order
//! butterflies.

use super::dims::check_pow2;
use super::linear_map::{Field, LinearMap, Sample, C64};
use crate::error::Result;

fn bit_reverse_permute<T>(x: &mut [T]) {
    let n = x.len();
    let bits = n.trailing_zeros();
    if bits == 0 {
        return;
    }
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if i < j {
            x.swap(i, j);
        }
    }
}

/// Applies `H_N` in place. `x.len()` must be a power of two.
pub fn fwht_in_place<T: Sample>(x: &mut [T]) {
    let n = x.len();
    debug_assert!(n.is_power_of_two());
    bit_reverse_permute(x);
    let mut h = 1;
    while h < n {
        for block in x.chunks_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (s, d) = (*a + *b, *a - *b);
                *a = s;
                *b = d;
            }
        }
        h *= 2;
    }
    let scale = 1.0 / (n as f64).sqrt();
    for v in x.iter_mut() {
        *v = *v * scale;
    }
}

/// `H_N u` (and `H_N* u`, which is the same matrix).
pub fn fwht_paley(u: &[f64], _adjoint: bool) -> Result<Vec<f64>> {
    check_pow2("Hadamard length", u.len())?;
    let mut out = u.to_vec();
    fwht_in_place(&mut out);
    Ok(out)
}

/// Paley-ordered Hadamard sensing factor `Φ_had = H_N`.
#[derive(Debug, Clone, Copy)]
pub struct Hadamard {
    n: usize,
}

impl Hadamard {
    pub fn new(n: usize) -> Result<Self> {
        check_pow2("Hadamard size", n)?;
        Ok(Hadamard { n })
    }

    /// Entry `H_N[i, j]` (0-based), exactly `±1/√N`.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let bits = self.n.trailing_zeros();
        let rj = j.reverse_bits() >> (usize::BITS - bits);
        let sign = if (i & rj).count_ones().is_multiple_of(2) {
            1.0
        } else {
            -1.0
        };
        sign / (self.n as f64).sqrt()
    }
}

impl LinearMap for Hadamard {
    fn dim(&self) -> usize {
        self.n
    }
    fn field(&self) -> Field {
        Field::Real
    }
    fn forward_in_place(&self, x: &mut [C64]) {
        fwht_in_place(x);
    }
    fn adjoint_in_place(&self, x: &mut [C64]) {
        fwht_in_place(x);
    }
}
