//! Simulated SP-FTI acquisition: Nyquist and compressive measurements,
//! binary coded-aperture patterns, and light-exposure accounting.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::coherence::SamplingPlan;
use crate::error::{Error, Result};
use crate::io;
use crate::transforms::{to_complex, CenteredDft, Dims, HSVolume, Hadamard, LinearMap, Operators, C64};

/// Acquired measurements `y_j = (Φ_sp* x)_{ω_j} + n_j`.
///
/// `y` is complex: real and imaginary parts each carry `N(0, sigma_nyq²)` noise.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    pub dims: Dims,
    pub y: Vec<C64>,
    /// 1-based flat sensing indices, one per entry of `y`.
    pub omega: Vec<usize>,
    pub sigma_nyq: f64,
    /// Seed of the noise stream.
    pub seed: u64,
    /// Noise bound used for recovery, once calibrated.
    pub epsilon: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeasurementSidecar {
    dims: Dims,
    m: usize,
    omega: Vec<usize>,
    seed: u64,
    sigma_nyq: f64,
    epsilon: Option<f64>,
}

impl MeasurementSet {
    pub fn m(&self) -> usize {
        self.y.len()
    }

    /// Writes `y` as interleaved little-endian f64 plus a `.json` sidecar.
    pub fn save(&self, path: &Path) -> Result<()> {
        io::write_complex(path, &self.y)?;
        io::write_json(
            &io::sidecar_path(path),
            &MeasurementSidecar {
                dims: self.dims,
                m: self.m(),
                omega: self.omega.clone(),
                seed: self.seed,
                sigma_nyq: self.sigma_nyq,
                epsilon: self.epsilon,
            },
        )
    }

    pub fn load(path: &Path) -> Result<Self> {
        let y = io::read_complex(path)?;
        let meta: MeasurementSidecar = io::read_json(&io::sidecar_path(path))?;
        if meta.m != y.len() || meta.omega.len() != y.len() {
            return Err(Error::Validation(format!(
                "sidecar lists {} indices (m = {}), payload has {} values",
                meta.omega.len(),
                meta.m,
                y.len()
            )));
        }
        if let Some(&l) = meta.omega.iter().find(|&&l| l == 0 || l > meta.dims.n_hs()) {
            return Err(Error::range("omega", l, 1, meta.dims.n_hs()));
        }
        if meta.sigma_nyq.is_nan() || meta.sigma_nyq < 0.0 {
            return Err(Error::Validation(format!("sigma_nyq = {}", meta.sigma_nyq)));
        }
        Ok(MeasurementSet {
            dims: meta.dims,
            y,
            omega: meta.omega,
            sigma_nyq: meta.sigma_nyq,
            seed: meta.seed,
            epsilon: meta.epsilon,
        })
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::Validation(format!(
            "noise level {sigma} must be finite and >= 0"
        )));
    }
    Ok(())
}

/// `Φ_sp* x` in flat-index order (position `l - 1` holds index `l`).
pub fn full_measurement(ops: &Operators, x: &HSVolume) -> Result<Vec<C64>> {
    if x.dims() != ops.dims {
        return Err(Error::dim(format!(
            "volume dims {:?} vs operator dims {:?}",
            x.dims(),
            ops.dims
        )));
    }
    let d = ops.dims;
    let mut w = to_complex(x.data());
    ops.measure(&mut w);
    Ok((1..=d.n_hs()).map(|l| w[d.storage_of_flat(l)]).collect())
}

/// `m` i.i.d. complex samples with `N(0, sigma²)` real and imaginary parts.
/// Draw order is `re_1, im_1, re_2, ...` from ChaCha20 seeded with `seed`.
pub fn complex_noise(m: usize, sigma: f64, seed: u64) -> Result<Vec<C64>> {
    check_sigma(sigma)?;
    if sigma == 0.0 {
        return Ok(vec![C64::default(); m]);
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::Validation(e.to_string()))?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    Ok((0..m)
        .map(|_| {
            let re = normal.sample(&mut rng);
            C64::new(re, normal.sample(&mut rng))
        })
        .collect())
}

/// Nyquist acquisition: every index once, in flat order.
pub fn nyquist_acquire(x: &HSVolume, sigma: f64, seed: u64) -> Result<MeasurementSet> {
    nyquist_acquire_with(&Operators::new(x.dims())?, x, sigma, seed)
}

pub fn nyquist_acquire_with(ops: &Operators, x: &HSVolume, sigma: f64, seed: u64) -> Result<MeasurementSet> {
    check_sigma(sigma)?;
    let mut y = full_measurement(ops, x)?;
    for (v, n) in y.iter_mut().zip(complex_noise(ops.dims.n_hs(), sigma, seed)?) {
        *v += n;
    }
    Ok(MeasurementSet {
        dims: ops.dims,
        y,
        omega: (1..=ops.dims.n_hs()).collect(),
        sigma_nyq: sigma,
        seed,
        epsilon: None,
    })
}

/// Compressive acquisition on the multiset of `plan`. Repeated indices get
/// independent noise.
pub fn compressive_acquire(x: &HSVolume, plan: &SamplingPlan, sigma: f64, seed: u64) -> Result<MeasurementSet> {
    compressive_acquire_with(&Operators::new(x.dims())?, x, plan, sigma, seed)
}

pub fn compressive_acquire_with(
    ops: &Operators,
    x: &HSVolume,
    plan: &SamplingPlan,
    sigma: f64,
    seed: u64,
) -> Result<MeasurementSet> {
    check_sigma(sigma)?;
    if plan.dims != x.dims() {
        return Err(Error::dim(format!(
            "plan dims {:?} vs volume dims {:?}",
            plan.dims,
            x.dims()
        )));
    }
    let full = full_measurement(ops, x)?;
    let noise = complex_noise(plan.omega.len(), sigma, seed)?;
    let y = plan.omega.iter().zip(noise).map(|(&l, n)| full[l - 1] + n).collect();
    Ok(MeasurementSet {
        dims: x.dims(),
        y,
        omega: plan.omega.clone(),
        sigma_nyq: sigma,
        seed,
        epsilon: None,
    })
}

/// A 0/1 coded-aperture mask on the `n_p_bar × n_p_bar` grid, row-major
/// (`cells[n_p_bar * (l_y - 1) + l_x - 1]`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    pub n_p_bar: usize,
    pub cells: Vec<u8>,
}

impl BinaryMask {
    pub fn ones(&self) -> usize {
        self.cells.iter().filter(|&&c| c == 1).count()
    }

    pub fn write_pgm(&self, path: &Path) -> Result<()> {
        let vals: Vec<f64> = self.cells.iter().map(|&c| c as f64).collect();
        io::write_pgm(path, self.n_p_bar, self.n_p_bar, &vals)
    }
}

/// Column `l_p` of `(√n_p H + 1 1ᵀ) / 2`, reshaped to the spatial grid.
pub fn binary_pattern(l_p: usize, n_p_bar: usize) -> Result<BinaryMask> {
    let n_p = n_p_bar * n_p_bar;
    let h = Hadamard::new(n_p)?;
    if l_p == 0 || l_p > n_p {
        return Err(Error::range("l_p", l_p, 1, n_p));
    }
    let root = (n_p as f64).sqrt();
    let cells = (0..n_p)
        .map(|p| if h.entry(p, l_p - 1) * root > 0.0 { 1 } else { 0 })
        .collect();
    Ok(BinaryMask { n_p_bar, cells })
}

/// Measurements taken with 0/1 masks, plus the all-on reference for each OPD
/// sample that was visited.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryAcquisition {
    pub dims: Dims,
    pub omega: Vec<usize>,
    pub y_bin: Vec<C64>,
    /// Indexed by `l_xi - 1`; `None` where no reference was taken.
    pub all_on: Vec<Option<C64>>,
}

/// Noiseless acquisition with binary masks, simulated directly on the pixel
/// grid: each measurement sums the masked per-pixel OPD samples.
pub fn binary_acquire(x: &HSVolume, omega: &[usize]) -> Result<BinaryAcquisition> {
    let d = x.dims();
    let dft = CenteredDft::new(d.n_xi())?;
    // z[p][l_xi - 1] = (Φ_dft* x_p)_{l_xi}
    let z: Vec<Vec<C64>> = (0..d.n_p())
        .map(|p| {
            let mut s = to_complex(x.spectrum(p % d.n_p_bar(), p / d.n_p_bar()));
            dft.forward_in_place(&mut s);
            s
        })
        .collect();
    let mut y_bin = Vec::with_capacity(omega.len());
    let mut all_on = vec![None; d.n_xi()];
    for &l in omega {
        let idx = d.unflatten(l)?;
        let l_p = d.n_p_bar() * (idx.l_y - 1) + idx.l_x;
        let mask = binary_pattern(l_p, d.n_p_bar())?;
        let k = idx.l_xi - 1;
        y_bin.push(
            mask.cells
                .iter()
                .zip(&z)
                .filter(|(&c, _)| c == 1)
                .map(|(_, zp)| zp[k])
                .sum(),
        );
        all_on[k].get_or_insert_with(|| z.iter().map(|zp| zp[k]).sum());
    }
    Ok(BinaryAcquisition {
        dims: d,
        omega: omega.to_vec(),
        y_bin,
        all_on,
    })
}

/// Signed-Hadamard measurements from binary ones: `(2 y_bin - y_allon) / √n_p`.
pub fn demix_binary(acq: &BinaryAcquisition) -> Result<Vec<C64>> {
    let d = acq.dims;
    let root = (d.n_p() as f64).sqrt();
    acq.omega
        .iter()
        .zip(&acq.y_bin)
        .map(|(&l, &yb)| {
            let k = d.unflatten(l)?.l_xi - 1;
            let on = acq
                .all_on
                .get(k)
                .copied()
                .flatten()
                .ok_or_else(|| Error::Precondition(format!("no all-on reference for OPD sample {}", k + 1)))?;
            Ok((2.0 * yb - on) / root)
        })
        .collect()
}

/// Illumination dose of a compressive scheme relative to Nyquist, in units of
/// pattern-pixel exposures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExposureReport {
    pub compressive_units: f64,
    pub nyquist_units: f64,
    pub ratio: f64,
}

/// Exposure for `m` measurements: `(m + n_xi) / (n_hs + n_xi)`.
pub fn light_exposure(m: usize, dims: Dims) -> ExposureReport {
    light_exposure_budget(m as f64, dims)
}

/// Like [`light_exposure`] for a measurement budget that need not be whole,
/// e.g. an average over repetitions or a budget solved from a target ratio.
pub fn light_exposure_budget(m: f64, dims: Dims) -> ExposureReport {
    let n_xi = dims.n_xi() as f64;
    let n_p = dims.n_p() as f64;
    let compressive_units = (m + n_xi) * n_p;
    let nyquist_units = (dims.n_hs() as f64 + n_xi) * n_p;
    ExposureReport {
        compressive_units,
        nyquist_units,
        ratio: (m + n_xi) / (dims.n_hs() as f64 + n_xi),
    }
}

/// The budget `m` for which the exposure ratio equals `ratio`.
pub fn budget_for_ratio(ratio: f64, dims: Dims) -> f64 {
    ratio * (dims.n_hs() + dims.n_xi()) as f64 - dims.n_xi() as f64
}
