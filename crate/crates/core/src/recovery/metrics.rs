//! Quality metrics, noise levels and noise-bound calibration.

use crate::acquisition::complex_noise;
use crate::coherence::{sample_omega, Pmf};
use crate::error::{Error, Result};
use crate::par::Execution;
use crate::seed::derive_seed;
use crate::transforms::{HSVolume, C64};

fn ref_energy(x: &HSVolume) -> Result<f64> {
    let e: f64 = x.data().iter().map(|v| v * v).sum();
    if e == 0.0 {
        return Err(Error::Validation("reference volume is zero".into()));
    }
    Ok(e)
}

/// `10 log10(‖x‖² / ‖x - x̂‖²)` in dB; `+∞` when the estimate is exact.
pub fn rsnr(x: &HSVolume, x_hat: &HSVolume) -> Result<f64> {
    if x.dims() != x_hat.dims() {
        return Err(Error::dim("rsnr: volume dims differ"));
    }
    let err: f64 = x.data().iter().zip(x_hat.data()).map(|(a, b)| (a - b).powi(2)).sum();
    Ok(10.0 * (ref_energy(x)? / err).log10())
}

/// Like [`rsnr`] for a complex estimate in volume order; the imaginary part
/// counts as error.
pub fn rsnr_complex(x: &HSVolume, x_hat: &[C64]) -> Result<f64> {
    if x_hat.len() != x.data().len() {
        return Err(Error::dim("rsnr: estimate length differs from volume"));
    }
    let err: f64 = x.data().iter().zip(x_hat).map(|(&a, b)| (b - a).norm_sqr()).sum();
    Ok(10.0 * (ref_energy(x)? / err).log10())
}

/// Noise level per real component giving `SNR = 10 log10(‖x‖² / (σ² n_hs))`.
pub fn snr_to_sigma(x: &HSVolume, snr_db: f64) -> Result<f64> {
    let n_hs = x.dims().n_hs() as f64;
    Ok((ref_energy(x)? / (n_hs * 10f64.powf(snr_db / 10.0))).sqrt())
}

/// SNR implied by a noise realization, estimating `σ² = ‖n‖² / (2M)`.
pub fn empirical_snr_db(x: &HSVolume, noise: &[C64]) -> Result<f64> {
    let s2 = noise.iter().map(|v| v.norm_sqr()).sum::<f64>() / (2.0 * noise.len() as f64);
    Ok(10.0 * (ref_energy(x)? / (s2 * x.dims().n_hs() as f64)).log10())
}

/// `‖D n‖` for diagonal weights `d`.
pub fn weighted_norm(n: &[C64], d: &[f64]) -> f64 {
    n.iter().zip(d).map(|(v, w)| w * w * v.norm_sqr()).sum::<f64>().sqrt()
}

/// Empirical quantile with linear interpolation between order statistics
/// (position `q (n - 1)` in the sorted sample).
pub fn percentile(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() || !(0.0..=1.0).contains(&q) {
        return Err(Error::Validation(format!("percentile {q} of {} values", values.len())));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let h = q * (v.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    Ok(v[lo] + (h - lo as f64) * (v[hi] - v[lo]))
}

/// Noise bound `ε` as the `pct` quantile of `‖D n‖` over `trials` fresh
/// draws of `(Ω, n)`, with `Ω` of size `m` from `pmf`.
///
/// Trial `t` uses seeds `derive_seed(seed, [t, 0])` for `Ω` and
/// `derive_seed(seed, [t, 1])` for the noise.
pub fn calibrate_epsilon(sigma: f64, pmf: &Pmf, m: usize, trials: usize, pct: f64, seed: u64) -> Result<f64> {
    if trials < 10 {
        return Err(Error::Validation(format!("need at least 10 trials, got {trials}")));
    }
    if !(pct > 0.0 && pct < 1.0) {
        return Err(Error::Validation(format!("percentile {pct} not in (0, 1)")));
    }
    pmf.validate()?;
    if sigma == 0.0 {
        return Ok(0.0);
    }
    let norms = Execution::default().map_range(trials, |t| -> Result<f64> {
        let t = t as u64;
        let plan = sample_omega(pmf, m, derive_seed(seed, &[t, 0]))?;
        let n = complex_noise(m, sigma, derive_seed(seed, &[t, 1]))?;
        Ok(weighted_norm(&n, &plan.weights))
    });
    let norms = norms.into_iter().collect::<Result<Vec<_>>>()?;
    percentile(&norms, pct)
}

/// Keeps the `k` largest-magnitude entries; ties go to the lower index.
pub fn hard_threshold(s: &[C64], k: usize) -> Vec<C64> {
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[b].norm().total_cmp(&s[a].norm()).then(a.cmp(&b)));
    let mut out = vec![C64::default(); s.len()];
    for &i in order.iter().take(k) {
        out[i] = s[i];
    }
    out
}

/// Best `k`-term approximation error `‖s - H_k(s)‖₁`.
pub fn sigma_k(s: &[C64], k: usize) -> f64 {
    s.iter().zip(hard_threshold(s, k)).map(|(a, b)| (a - b).norm()).sum()
}
