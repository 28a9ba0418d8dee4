//! Haar wavelet bases.
//!
//! Coefficient vectors use the dyadic level layout: entry 0 is level `T_0`,
//! and level `ℓ ≥ 1` occupies 0-based positions `2^{ℓ-1} .. 2^ℓ`, finest
//! level last. This matches the column order of
//! `W_N = [W_{N/2} ⊗ (1,1)ᵀ, I_{N/2} ⊗ (1,-1)ᵀ] / √2`.

use std::f64::consts::FRAC_1_SQRT_2;

use super::dims::check_pow2;
use super::linear_map::{Field, LinearMap, Sample, C64};
use crate::error::{Error, Result};

/// One synthesis step: `(approx[0..h], detail[h..2h])` -> interleaved `2h` samples.
fn synth_step<T: Sample>(x: &mut [T], h: usize, tmp: &mut Vec<T>) {
    tmp.clear();
    for k in 0..h {
        let (a, d) = (x[k], x[h + k]);
        tmp.push((a + d) * FRAC_1_SQRT_2);
        tmp.push((a - d) * FRAC_1_SQRT_2);
    }
    x[..2 * h].copy_from_slice(tmp);
}

/// Inverse of [`synth_step`].
fn analysis_step<T: Sample>(x: &mut [T], h: usize, tmp: &mut Vec<T>) {
    tmp.clear();
    tmp.resize(2 * h, T::default());
    for k in 0..h {
        let (a, b) = (x[2 * k], x[2 * k + 1]);
        tmp[k] = (a + b) * FRAC_1_SQRT_2;
        tmp[h + k] = (a - b) * FRAC_1_SQRT_2;
    }
    x[..2 * h].copy_from_slice(tmp);
}

/// `W u` in place.
pub fn haar_synthesis<T: Sample>(x: &mut [T]) {
    let n = x.len();
    let mut tmp = Vec::with_capacity(n);
    let mut h = 1;
    while h < n {
        synth_step(x, h, &mut tmp);
        h *= 2;
    }
}

/// `Wᵀ u` in place.
pub fn haar_analysis<T: Sample>(x: &mut [T]) {
    let n = x.len();
    let mut tmp = Vec::with_capacity(n);
    let mut h = n / 2;
    while h >= 1 {
        analysis_step(x, h, &mut tmp);
        h /= 2;
    }
}

/// `W⁰ u` in place, where
/// `W⁰_N = [W⁰_{N/2} ⊗ (1,1)ᵀ, I_{N/2} ⊗ (1,1)ᵀ] / √2`, `W⁰_1 = [1]`.
///
/// Column `j` of `W⁰` is the Haar scaling function sharing support with
/// column `j` of `W`. `W⁰` is not orthonormal (its first two columns are
/// equal) and only serves to assemble the 2D basis.
pub(crate) fn scaling_synthesis<T: Sample>(x: &mut [T]) {
    let n = x.len();
    let mut acc = vec![x[0]];
    let mut h = 1;
    while h < n {
        let mut next = Vec::with_capacity(2 * h);
        for k in 0..h {
            let v = (acc[k] + x[h + k]) * FRAC_1_SQRT_2;
            next.push(v);
            next.push(v);
        }
        acc = next;
        h *= 2;
    }
    x.copy_from_slice(&acc);
}

/// `W⁰ᵀ u` in place.
#[cfg(test)]
fn scaling_analysis<T: Sample>(x: &mut [T]) {
    let n = x.len();
    let mut out = vec![T::default(); n];
    let mut cur = x.to_vec();
    let mut h = n / 2;
    while h >= 1 {
        let next: Vec<T> = (0..h).map(|k| (cur[2 * k] + cur[2 * k + 1]) * FRAC_1_SQRT_2).collect();
        out[h..2 * h].copy_from_slice(&next);
        cur = next;
        h /= 2;
    }
    out[0] = cur[0];
    x.copy_from_slice(&out);
}

/// Applies `W u` (or `Wᵀ u` when `adjoint`).
pub fn dhw_apply(u: &[f64], adjoint: bool) -> Result<Vec<f64>> {
    check_pow2("Haar length", u.len())?;
    let mut out = u.to_vec();
    if adjoint {
        haar_analysis(&mut out);
    } else {
        haar_synthesis(&mut out);
    }
    Ok(out)
}

/// Applies the non-orthonormal scaling helper `W⁰ u`.
pub fn dhw0_apply(u: &[f64]) -> Result<Vec<f64>> {
    check_pow2("Haar length", u.len())?;
    let mut out = u.to_vec();
    scaling_synthesis(&mut out);
    Ok(out)
}

/// 1D orthonormal Haar basis `Ψ_dhw = W_N`; forward is synthesis.
#[derive(Debug, Clone, Copy)]
pub struct Haar {
    n: usize,
}

impl Haar {
    pub fn new(n: usize) -> Result<Self> {
        check_pow2("Haar size", n)?;
        Ok(Haar { n })
    }
}

impl LinearMap for Haar {
    fn dim(&self) -> usize {
        self.n
    }
    fn field(&self) -> Field {
        Field::Real
    }
    fn forward_in_place(&self, x: &mut [C64]) {
        haar_synthesis(x);
    }
    fn adjoint_in_place(&self, x: &mut [C64]) {
        haar_analysis(x);
    }
}

/// Orientation of a 2D Haar atom at a given level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// `Ψ_0`, the constant atom.
    Constant,
    /// `Ψ_1`: scaling function along y, wavelet along x.
    Horizontal,
    /// `Ψ_2`: wavelet along y, scaling function along x.
    Vertical,
    /// `Ψ_3`: wavelet along both axes.
    Diagonal,
}

/// Column descriptor of the 2D isotropic Haar basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AtomIndex {
    pub orientation: Orientation,
    /// Dyadic level `ℓ` (0 for the constant atom).
    pub level: u32,
    /// 0-based position along y and x within the level.
    pub ky: usize,
    pub kx: usize,
}

/// 2D isotropic Haar basis `Ψ_idhw` on an `n̄ × n̄` grid, pixel `p = n̄·y + x`.
///
/// Column order: `Ψ_0`, then for `ℓ = 1..r` the blocks `Ψ_{1,ℓ}`, `Ψ_{2,ℓ}`,
/// `Ψ_{3,ℓ}`, each enumerating `(ky, kx)` with `kx` fastest, where
/// `Ψ_{1,ℓ} = (W⁰ P_{T_ℓ}ᵀ) ⊗ (W P_{T_ℓ}ᵀ)`,
/// `Ψ_{2,ℓ} = (W P_{T_ℓ}ᵀ) ⊗ (W⁰ P_{T_ℓ}ᵀ)` and
/// `Ψ_{3,ℓ} = (W P_{T_ℓ}ᵀ) ⊗ (W P_{T_ℓ}ᵀ)`. The constant column is
/// normalized to `n_p^{-1/2}` so the basis is orthonormal.
///
/// Internally columns are scattered into the standard pyramid layout and
/// synthesized one level at a time along both axes.
#[derive(Debug, Clone)]
pub struct IsotropicHaar {
    n_bar: usize,
    /// column -> pyramid position `n̄·iy + ix`
    pyramid: Vec<usize>,
}

impl IsotropicHaar {
    pub fn new(n_bar: usize) -> Result<Self> {
        check_pow2("IDHW side", n_bar)?;
        let n = n_bar * n_bar;
        let pyramid = (0..n)
            .map(|j| {
                let a = atom_of_column(j);
                let h = if a.level == 0 { 0 } else { 1usize << (a.level - 1) };
                let (iy, ix) = match a.orientation {
                    Orientation::Constant => (0, 0),
                    Orientation::Horizontal => (a.ky, h + a.kx),
                    Orientation::Vertical => (h + a.ky, a.kx),
                    Orientation::Diagonal => (h + a.ky, h + a.kx),
                };
                n_bar * iy + ix
            })
            .collect();
        Ok(IsotropicHaar { n_bar, pyramid })
    }

    pub fn side(&self) -> usize {
        self.n_bar
    }

    pub fn atom(&self, column: usize) -> AtomIndex {
        atom_of_column(column)
    }

    fn synthesize_pyramid<T: Sample>(&self, c: &mut [T]) {
        let nb = self.n_bar;
        let mut tmp = Vec::with_capacity(nb);
        let mut col = vec![T::default(); nb];
        let mut h = 1;
        while h < nb {
            for row in c.chunks_mut(nb).take(2 * h) {
                synth_step(row, h, &mut tmp);
            }
            for x in 0..2 * h {
                for y in 0..2 * h {
                    col[y] = c[nb * y + x];
                }
                synth_step(&mut col, h, &mut tmp);
                for y in 0..2 * h {
                    c[nb * y + x] = col[y];
                }
            }
            h *= 2;
        }
    }

    fn analyze_pyramid<T: Sample>(&self, c: &mut [T]) {
        let nb = self.n_bar;
        let mut tmp = Vec::with_capacity(nb);
        let mut col = vec![T::default(); nb];
        let mut h = nb / 2;
        while h >= 1 {
            for x in 0..2 * h {
                for y in 0..2 * h {
                    col[y] = c[nb * y + x];
                }
                analysis_step(&mut col, h, &mut tmp);
                for y in 0..2 * h {
                    c[nb * y + x] = col[y];
                }
            }
            for row in c.chunks_mut(nb).take(2 * h) {
                analysis_step(row, h, &mut tmp);
            }
            h /= 2;
        }
    }

    pub fn synthesis<T: Sample>(&self, x: &mut [T]) {
        let mut c = vec![T::default(); x.len()];
        for (j, &pos) in self.pyramid.iter().enumerate() {
            c[pos] = x[j];
        }
        self.synthesize_pyramid(&mut c);
        x.copy_from_slice(&c);
    }

    pub fn analysis<T: Sample>(&self, x: &mut [T]) {
        self.analyze_pyramid(x);
        let c = x.to_vec();
        for (j, &pos) in self.pyramid.iter().enumerate() {
            x[j] = c[pos];
        }
    }
}

fn atom_of_column(j: usize) -> AtomIndex {
    if j == 0 {
        return AtomIndex {
            orientation: Orientation::Constant,
            level: 0,
            ky: 0,
            kx: 0,
        };
    }
    // level ℓ starts at column 4^{ℓ-1}
    let level = (usize::BITS - 1 - j.leading_zeros()) / 2 + 1;
    let h = 1usize << (level - 1);
    let offset = j - h * h;
    let block = offset / (h * h);
    let within = offset % (h * h);
    let orientation = match block {
        0 => Orientation::Horizontal,
        1 => Orientation::Vertical,
        _ => Orientation::Diagonal,
    };
    AtomIndex {
        orientation,
        level,
        ky: within / h,
        kx: within % h,
    }
}

impl LinearMap for IsotropicHaar {
    fn dim(&self) -> usize {
        self.n_bar * self.n_bar
    }
    fn field(&self) -> Field {
        Field::Real
    }
    fn forward_in_place(&self, x: &mut [C64]) {
        self.synthesis(x);
    }
    fn adjoint_in_place(&self, x: &mut [C64]) {
        self.analysis(x);
    }
}

/// Applies `Ψ_idhw u` (or `Ψ_idhwᵀ u`) for `u` of length `n̄²`.
pub fn idhw_apply(u: &[f64], adjoint: bool) -> Result<Vec<f64>> {
    let n_bar = (u.len() as f64).sqrt().round() as usize;
    if n_bar * n_bar != u.len() {
        return Err(Error::dim(format!("IDHW input length {} is not a square", u.len())));
    }
    let basis = IsotropicHaar::new(n_bar)?;
    let mut out = u.to_vec();
    if adjoint {
        basis.analysis(&mut out);
    } else {
        basis.synthesis(&mut out);
    }
    Ok(out)
}
