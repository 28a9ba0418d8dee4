//! Local-coherence bounds, variable-density pmfs and index sampling.
//!
//! All per-index vectors here (κ, pmf) are indexed by the flat sensing index
//! `l = n_p (l_xi - 1) + n_p_bar (l_y - 1) + l_x`, stored at position `l - 1`.

use std::io::Write;
use std::path::Path;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::Execution;
use crate::transforms::{
    CenteredDft, Compose, Dims, Haar, Hadamard, Index3D, IsotropicHaar, LinearMap, Operators, C64,
};

/// Default cap on `n_hs` for the brute-force oracle.
pub const BRUTE_FORCE_CAP: usize = 1 << 14;

/// Which closed-form bound to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KappaVariant {
    /// `√2 min{1, 2^{-⌊log2(max(l_x,l_y)-1)⌋} |l_xi - n_xi/2|^{-1/2}}`.
    #[default]
    Eq8,
    /// `κ^xi(l_xi) · κ^p(l_x, l_y)`, the factorized bound.
    Product,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    Eq8,
    Product,
    Brute,
}

impl From<KappaVariant> for ProfileKind {
    fn from(v: KappaVariant) -> Self {
        match v {
            KappaVariant::Eq8 => ProfileKind::Eq8,
            KappaVariant::Product => ProfileKind::Product,
        }
    }
}

/// Which sampling density to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PmfVariant {
    /// `p(l) = κ_l² / ‖κ‖²`.
    #[default]
    KappaSq,
    /// `p(l) ∝ min{1, |l_xi - n_xi/2|^{-1} max(l_x, l_y)^{-1}}`.
    Eq9,
    /// `p(l) = 1 / n_hs`.
    Uniform,
}

fn check_range(what: &'static str, v: usize, hi: usize) -> Result<()> {
    if v == 0 || v > hi {
        return Err(Error::range(what, v, 1, hi));
    }
    Ok(())
}

/// `min{1, |d|^{-1/2}}` with the `d = 0` case capped at 1.
fn inv_sqrt_capped(d: f64) -> f64 {
    if d == 0.0 {
        1.0
    } else {
        d.abs().powf(-0.5).min(1.0)
    }
}

/// `2^{-⌊log2(m - 1)⌋}`, taken as `+∞` when `m = 1`.
fn dyadic_decay(m: usize) -> f64 {
    if m <= 1 {
        f64::INFINITY
    } else {
        let k = usize::BITS - 1 - (m - 1).leading_zeros();
        (-(k as f64)).exp2()
    }
}

/// OPD coherence bound `κ^xi = √2 min{1, |l_xi - n_xi/2|^{-1/2}}`.
pub fn kappa_xi(l_xi: usize, n_xi: usize) -> Result<f64> {
    check_range("l_xi", l_xi, n_xi)?;
    let d = l_xi as f64 - (n_xi / 2) as f64;
    Ok(std::f64::consts::SQRT_2 * inv_sqrt_capped(d))
}

/// Spatial coherence `κ^p = min{1, 2^{-⌊log2(max(l_x,l_y) - 1)⌋}}`.
pub fn kappa_p(l_x: usize, l_y: usize, n_p_bar: usize) -> Result<f64> {
    check_range("l_x", l_x, n_p_bar)?;
    check_range("l_y", l_y, n_p_bar)?;
    Ok(dyadic_decay(l_x.max(l_y)).min(1.0))
}

pub fn kappa_full(idx: Index3D, dims: Dims, variant: KappaVariant) -> Result<f64> {
    dims.flat_index(idx)?;
    Ok(kappa_unchecked(idx, dims, variant))
}

fn kappa_unchecked(idx: Index3D, dims: Dims, variant: KappaVariant) -> f64 {
    let d = idx.l_xi as f64 - (dims.n_xi() / 2) as f64;
    let m = idx.l_x.max(idx.l_y);
    match variant {
        KappaVariant::Eq8 => {
            let inner = if d == 0.0 {
                f64::INFINITY
            } else {
                dyadic_decay(m) * d.abs().powf(-0.5)
            };
            std::f64::consts::SQRT_2 * inner.min(1.0)
        }
        KappaVariant::Product => std::f64::consts::SQRT_2 * inv_sqrt_capped(d) * dyadic_decay(m).min(1.0),
    }
}

/// A vector of local-coherence values (bounds or exact).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceProfile {
    pub dims: Dims,
    pub kappa: Vec<f64>,
    pub kappa_sq_norm: f64,
    pub kind: ProfileKind,
}

impl CoherenceProfile {
    fn from_values(dims: Dims, kappa: Vec<f64>, kind: ProfileKind) -> Self {
        let kappa_sq_norm = kappa.iter().map(|k| k * k).sum();
        CoherenceProfile {
            dims,
            kappa,
            kappa_sq_norm,
            kind,
        }
    }

    /// Value at 1-based flat index `l`.
    pub fn at(&self, l: usize) -> f64 {
        self.kappa[l - 1]
    }
}

/// Closed-form bound at every flat index.
pub fn coherence_profile(dims: Dims, variant: KappaVariant) -> CoherenceProfile {
    let kappa = (1..=dims.n_hs())
        .map(|l| kappa_unchecked(dims.unflatten(l).expect("in range"), dims, variant))
        .collect();
    CoherenceProfile::from_values(dims, kappa, variant.into())
}

/// Row-wise `max_j |M_{l,j}|` of `map`, computed column by column so the
/// dense matrix is never stored.
pub fn row_coherence(map: &dyn LinearMap, exec: Execution) -> Vec<f64> {
    let n = map.dim();
    let chunks = n.clamp(1, 64);
    let per = n.div_ceil(chunks);
    let partial = exec.map_range(chunks, |c| {
        let mut best = vec![0.0f64; n];
        let mut col = vec![C64::default(); n];
        for j in c * per..((c + 1) * per).min(n) {
            col.iter_mut().for_each(|v| *v = C64::default());
            col[j] = C64::new(1.0, 0.0);
            map.forward_in_place(&mut col);
            for (b, v) in best.iter_mut().zip(&col) {
                *b = b.max(v.norm());
            }
        }
        best
    });
    partial.into_iter().fold(vec![0.0; n], |mut acc, p| {
        for (a, v) in acc.iter_mut().zip(p) {
            *a = a.max(v);
        }
        acc
    })
}

/// Exact local coherence `μ_l(Φ_sp* Ψ_sp)` by exhaustive evaluation.
pub fn brute_force_local_coherence(dims: Dims, cap: usize) -> Result<CoherenceProfile> {
    if dims.n_hs() > cap {
        return Err(Error::SizeCap {
            what: "brute-force coherence",
            needed: dims.n_hs(),
            cap,
        });
    }
    let ops = Operators::new(dims)?.with_execution(Execution::Sequential);
    let product = Compose::new(ops.sensing, ops.sparsity)?;
    let by_storage = row_coherence(&product, Execution::default());
    let mut kappa = vec![0.0; dims.n_hs()];
    for (q, v) in by_storage.into_iter().enumerate() {
        kappa[dims.flat_of_storage(q) - 1] = v;
    }
    Ok(CoherenceProfile::from_values(dims, kappa, ProfileKind::Brute))
}

/// `μ_{l_p}(Φ_had* Ψ_idhw)` for `l_p = n_p_bar (l_y - 1) + l_x`, stored at `l_p - 1`.
pub fn hadamard_haar_coherence(n_p_bar: usize) -> Result<Vec<f64>> {
    let m = Compose::new(Hadamard::new(n_p_bar * n_p_bar)?, IsotropicHaar::new(n_p_bar)?)?;
    Ok(row_coherence(&m, Execution::default()))
}

/// `μ_{l_xi}(Φ_dft* Ψ_dhw)`, stored at `l_xi - 1`.
pub fn dft_haar_coherence(n_xi: usize) -> Result<Vec<f64>> {
    let m = Compose::new(CenteredDft::new(n_xi)?, Haar::new(n_xi)?)?;
    Ok(row_coherence(&m, Execution::default()))
}

/// A probability mass function over flat sensing indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pmf {
    pub dims: Dims,
    pub probs: Vec<f64>,
}

impl Pmf {
    pub fn new(dims: Dims, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != dims.n_hs() {
            return Err(Error::dim(format!(
                "pmf has {} entries, dims need {}",
                probs.len(),
                dims.n_hs()
            )));
        }
        Ok(Pmf { dims, probs })
    }

    /// Probability of 1-based flat index `l`.
    pub fn prob(&self, l: usize) -> f64 {
        self.probs[l - 1]
    }

    pub fn validate(&self) -> Result<()> {
        let mut total = 0.0;
        for (i, &p) in self.probs.iter().enumerate() {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::Validation(format!("pmf entry {} is {p}", i + 1)));
            }
            total += p;
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Validation(format!("pmf sums to {total}, not 1")));
        }
        Ok(())
    }

    /// 1-based index of the largest probability (first on ties).
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = i;
            }
        }
        best + 1
    }
}

fn normalized(dims: Dims, mut w: Vec<f64>) -> Pmf {
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= total);
    Pmf { dims, probs: w }
}

/// Builds a sampling pmf. `kappa` selects the bound used by `KappaSq`.
pub fn build_pmf(dims: Dims, variant: PmfVariant, kappa: KappaVariant) -> Pmf {
    match variant {
        PmfVariant::KappaSq => {
            let prof = coherence_profile(dims, kappa);
            normalized(dims, prof.kappa.iter().map(|k| k * k).collect())
        }
        PmfVariant::Eq9 => {
            let half = (dims.n_xi() / 2) as f64;
            let w = (1..=dims.n_hs())
                .map(|l| {
                    let idx = dims.unflatten(l).expect("in range");
                    let d = (idx.l_xi as f64 - half).abs();
                    let m = idx.l_x.max(idx.l_y) as f64;
                    if d == 0.0 {
                        1.0
                    } else {
                        (1.0 / (d * m)).min(1.0)
                    }
                })
                .collect();
            normalized(dims, w)
        }
        PmfVariant::Uniform => Pmf {
            dims,
            probs: vec![1.0 / dims.n_hs() as f64; dims.n_hs()],
        },
    }
}

/// Sampled multiset `Ω` (1-based flat indices) with weights `1/√p(ω_j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingPlan {
    pub dims: Dims,
    pub omega: Vec<usize>,
    pub weights: Vec<f64>,
    pub seed: u64,
    pub m: usize,
}

impl SamplingPlan {
    /// Builds a plan from explicit indices; weights come from `pmf`.
    pub fn from_indices(pmf: &Pmf, omega: Vec<usize>, seed: u64) -> Result<Self> {
        let dims = pmf.dims;
        let mut weights = Vec::with_capacity(omega.len());
        for &l in &omega {
            check_range("omega", l, dims.n_hs())?;
            let p = pmf.prob(l);
            if p <= 0.0 {
                return Err(Error::Validation(format!("index {l} has zero probability")));
            }
            weights.push(1.0 / p.sqrt());
        }
        Ok(SamplingPlan {
            dims,
            m: omega.len(),
            omega,
            weights,
            seed,
        })
    }

    /// Every index exactly once, in flat order. The density is uniform, so
    /// every weight is `√N_hs` whatever `pmf` says.
    pub fn full(pmf: &Pmf) -> Result<Self> {
        let n = pmf.dims.n_hs();
        Ok(SamplingPlan {
            dims: pmf.dims,
            omega: (1..=n).collect(),
            weights: vec![(n as f64).sqrt(); n],
            seed: 0,
            m: n,
        })
    }
}

/// Uniform double in `[0, 1)` from the top 53 bits of one 64-bit output.
fn unit_f64(rng: &mut ChaCha20Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Draws `m` i.i.d. indices from `pmf`, with replacement.
///
/// Generator: ChaCha20 seeded by `seed_from_u64(seed)`. Each draw takes one
/// `u64`, forms `u = (x >> 11) · 2⁻⁵³`, and returns the smallest `l` whose
/// cumulative probability (summed in flat order) exceeds `u · total`.
pub fn sample_omega(pmf: &Pmf, m: usize, seed: u64) -> Result<SamplingPlan> {
    if m == 0 {
        return Err(Error::Validation("m must be at least 1".into()));
    }
    pmf.validate()?;
    let mut cdf = Vec::with_capacity(pmf.probs.len());
    let mut acc = 0.0;
    for &p in &pmf.probs {
        acc += p;
        cdf.push(acc);
    }
    let last_positive = pmf
        .probs
        .iter()
        .rposition(|&p| p > 0.0)
        .ok_or_else(|| Error::Validation("pmf has no mass".into()))?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let omega = (0..m)
        .map(|_| {
            let target = unit_f64(&mut rng) * acc;
            let i = cdf.partition_point(|&c| c <= target);
            i.min(last_positive) + 1
        })
        .collect();
    SamplingPlan::from_indices(pmf, omega, seed)
}

/// `⌈c ‖κ‖² K ln(1/ε)⌉`.
pub fn sample_complexity_with(k: usize, failure_prob: f64, kappa_sq_norm: f64, c: f64) -> Result<usize> {
    if k == 0 {
        return Err(Error::Validation("sparsity must be at least 1".into()));
    }
    if !(failure_prob > 0.0 && failure_prob <= 1.0) {
        return Err(Error::Validation(format!(
            "failure probability {failure_prob} not in (0, 1]"
        )));
    }
    let v = c * kappa_sq_norm * k as f64 * (1.0 / failure_prob).ln();
    Ok(v.ceil().max(0.0) as usize)
}

/// Sample-complexity estimate using the default bound and `c = 1`.
pub fn sample_complexity(k: usize, failure_prob: f64, dims: Dims) -> Result<usize> {
    let prof = coherence_profile(dims, KappaVariant::default());
    sample_complexity_with(k, failure_prob, prof.kappa_sq_norm, 1.0)
}

/// Writes `flat_index,l_xi,l_x,l_y,value` rows.
pub fn write_indexed_csv(path: &Path, dims: Dims, values: &[f64]) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| Error::io(path, e))?);
    let io = |e| Error::io(path, e);
    writeln!(w, "flat_index,l_xi,l_x,l_y,value").map_err(io)?;
    for (i, v) in values.iter().enumerate() {
        let idx = dims.unflatten(i + 1)?;
        writeln!(w, "{},{},{},{},{}", i + 1, idx.l_xi, idx.l_x, idx.l_y, v).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// One OPD slice of a flat-indexed vector as an `n_p_bar × n_p_bar` image,
/// row `l_y`, column `l_x`.
pub fn opd_slice(dims: Dims, values: &[f64], l_xi: usize) -> Vec<f64> {
    let start = dims.n_p() * (l_xi - 1);
    values[start..start + dims.n_p()].to_vec()
}
