//! Synthetic hyperspectral phantoms: fluorochrome-like spectra mixed by
//! nonnegative spatial maps.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;
use crate::transforms::{Dims, HSVolume};

pub use crate::io::{load_volume, save_volume};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumKind {
    Narrow,
    Medium,
    Broad,
}

impl SpectrumKind {
    /// Distances from the peak, on a 256-sample axis, at which the emission
    /// falls to 1/2, 1/10 and 1/100 of its maximum, left side then right
    /// side. Shaped after three common fluorochromes: sharp peaks with a
    /// long blue-side tail.
    fn knots(self) -> ([f64; 3], [f64; 3]) {
        match self {
            SpectrumKind::Narrow => ([1.5, 7.8, 15.0], [1.95, 3.6, 5.9]),
            SpectrumKind::Medium => ([5.0, 12.2, 16.7], [2.7, 4.75, 6.9]),
            SpectrumKind::Broad => ([10.5, 22.9, 27.8], [8.9, 14.7, 20.1]),
        }
    }
}

/// Relative level at distance `d >= 0` for knots at 1/2, 1/10, 1/100; the
/// profile is piecewise linear and reaches zero a quarter beyond the last
/// knot.
fn knot_profile(d: f64, k: &[f64; 3]) -> f64 {
    let xs = [0.0, k[0], k[1], k[2], 1.25 * k[2]];
    const LEVELS: [f64; 5] = [1.0, 0.5, 0.1, 0.01, 0.0];
    for i in 0..4 {
        if d <= xs[i + 1] {
            let t = (d - xs[i]) / (xs[i + 1] - xs[i]);
            return LEVELS[i] + t * (LEVELS[i + 1] - LEVELS[i]);
        }
    }
    0.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub values: Vec<f64>,
    /// 1-based wavenumber index of the maximum.
    pub peak_index: usize,
    pub peak_value: f64,
}

/// Asymmetric emission peak, zero outside its support.
pub fn make_spectrum(kind: SpectrumKind, n_nu: usize, peak_index: usize, peak_value: f64) -> Result<Spectrum> {
    make_spectrum_scaled(kind, n_nu, peak_index, peak_value, 1.0)
}

fn make_spectrum_scaled(
    kind: SpectrumKind,
    n_nu: usize,
    peak_index: usize,
    peak_value: f64,
    width: f64,
) -> Result<Spectrum> {
    if peak_index == 0 || peak_index > n_nu {
        return Err(Error::range("peak_index", peak_index, 1, n_nu));
    }
    if !(peak_value >= 0.0 && peak_value.is_finite()) {
        return Err(Error::Validation(format!("peak value {peak_value}")));
    }
    let (kl, kr) = kind.knots();
    // Distance in units of the 256-sample reference axis.
    let unit = 256.0 / (n_nu as f64 * width);
    let values = (1..=n_nu)
        .map(|l| {
            let d = (l as f64 - peak_index as f64) * unit;
            let k = if d < 0.0 { &kl } else { &kr };
            peak_value * knot_profile(d.abs(), k)
        })
        .collect();
    Ok(Spectrum {
        values,
        peak_index,
        peak_value,
    })
}

/// Nonnegative weights on the `n_p_bar × n_p_bar` grid, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialMap {
    pub n_p_bar: usize,
    pub weights: Vec<f64>,
}

impl SpatialMap {
    pub fn new(n_p_bar: usize, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != n_p_bar * n_p_bar {
            return Err(Error::dim(format!(
                "map has {} weights, grid needs {}",
                weights.len(),
                n_p_bar * n_p_bar
            )));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Validation("map weights must be finite and >= 0".into()));
        }
        Ok(SpatialMap { n_p_bar, weights })
    }

    /// Loads a square PGM as a map with weights in `[0, 1]`.
    pub fn from_pgm(path: &Path) -> Result<Self> {
        let (w, h, values) = io::read_pgm(path)?;
        if w != h {
            return Err(Error::dim(format!("map image is {w}x{h}, must be square")));
        }
        SpatialMap::new(w, values)
    }

    pub fn write_pgm(&self, path: &Path) -> Result<()> {
        io::write_pgm(path, self.n_p_bar, self.n_p_bar, &self.weights)
    }
}

/// Parameters of a seeded phantom. Each map is a sum of blobs
/// `amplitude · exp(-(r / radius)^(2 · rim_order))`, a cheap stand-in for a
/// cell body: order 1 is a Gaussian, large orders approach a flat disk.
/// The defaults suit a 64-sample spectral axis, where narrowed emission
/// peaks keep the volume compressible.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhantomParams {
    pub count: usize,
    /// Blob radius range as fractions of the grid side.
    pub min_radius: f64,
    pub max_radius: f64,
    pub min_amplitude: f64,
    pub max_amplitude: f64,
    pub rim_order: u32,
    /// Multiplier on the reference spectral widths.
    pub spectral_width: f64,
}

impl Default for PhantomParams {
    fn default() -> Self {
        PhantomParams {
            count: 2,
            min_radius: 0.15,
            max_radius: 0.3,
            min_amplitude: 0.5,
            max_amplitude: 1.0,
            rim_order: 1,
            spectral_width: 0.4,
        }
    }
}

pub fn blob_map(n_p_bar: usize, params: &PhantomParams, seed: u64) -> Result<SpatialMap> {
    if !(0.0 < params.min_radius && params.min_radius <= params.max_radius)
        || !(0.0 <= params.min_amplitude && params.min_amplitude <= params.max_amplitude)
        || params.rim_order == 0
        || !(params.spectral_width > 0.0 && params.spectral_width.is_finite())
    {
        return Err(Error::Validation(format!("bad blob parameters {params:?}")));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let side = n_p_bar as f64;
    let mut weights = vec![0.0; n_p_bar * n_p_bar];
    for _ in 0..params.count {
        let cx = rng.random::<f64>() * side;
        let cy = rng.random::<f64>() * side;
        let r = side * rng.random_range(params.min_radius..=params.max_radius);
        let a = rng.random_range(params.min_amplitude..=params.max_amplitude);
        for py in 0..n_p_bar {
            for px in 0..n_p_bar {
                let dx = px as f64 + 0.5 - cx;
                let dy = py as f64 + 0.5 - cy;
                let t = (dx * dx + dy * dy) / (r * r);
                weights[n_p_bar * py + px] += a * (-t.powi(params.rim_order as i32)).exp();
            }
        }
    }
    SpatialMap::new(n_p_bar, weights)
}

/// `X(nu, p) = Σ_i maps_i(p) · spectra_i(nu)`.
pub fn assemble_volume(maps: &[SpatialMap], spectra: &[Spectrum], dims: Dims) -> Result<HSVolume> {
    if maps.len() != spectra.len() {
        return Err(Error::dim(format!("{} maps but {} spectra", maps.len(), spectra.len())));
    }
    if let Some(m) = maps.iter().find(|m| m.n_p_bar != dims.n_p_bar()) {
        return Err(Error::dim(format!("map side {} vs dims {}", m.n_p_bar, dims.n_p_bar())));
    }
    if let Some(s) = spectra.iter().find(|s| s.values.len() != dims.n_xi()) {
        return Err(Error::dim(format!(
            "spectrum length {} vs dims {}",
            s.values.len(),
            dims.n_xi()
        )));
    }
    let n_xi = dims.n_xi();
    let mut data = vec![0.0; dims.n_hs()];
    for (m, s) in maps.iter().zip(spectra) {
        for (p, &wp) in m.weights.iter().enumerate() {
            if wp == 0.0 {
                continue;
            }
            for (nu, &sv) in s.values.iter().enumerate() {
                data[n_xi * p + nu] += wp * sv;
            }
        }
    }
    HSVolume::new(dims, data)
}

/// Peak positions of the three reference fluorochromes on a 256-sample axis.
pub const REFERENCE_PEAKS: [(SpectrumKind, usize); 3] = [
    (SpectrumKind::Narrow, 72),
    (SpectrumKind::Medium, 80),
    (SpectrumKind::Broad, 97),
];

/// Three reference spectra (peak 100) with peaks rescaled to `n_nu` samples.
pub fn reference_spectra(n_nu: usize) -> Result<Vec<Spectrum>> {
    reference_spectra_scaled(n_nu, 1.0)
}

/// [`reference_spectra`] with every width multiplied by `width`.
pub fn reference_spectra_scaled(n_nu: usize, width: f64) -> Result<Vec<Spectrum>> {
    if !(width > 0.0 && width.is_finite()) {
        return Err(Error::Validation(format!("spectral width {width}")));
    }
    REFERENCE_PEAKS
        .iter()
        .map(|&(kind, peak)| {
            let at = ((peak as f64 * n_nu as f64 / 256.0).round() as usize).clamp(1, n_nu);
            make_spectrum_scaled(kind, n_nu, at, 100.0, width)
        })
        .collect()
}

/// A full phantom: reference spectra mixed by three independent blob maps.
#[derive(Debug, Clone, PartialEq)]
pub struct Phantom {
    pub volume: HSVolume,
    pub maps: Vec<SpatialMap>,
    pub spectra: Vec<Spectrum>,
}

pub fn make_phantom(dims: Dims, params: &PhantomParams, seed: u64) -> Result<Phantom> {
    let spectra = reference_spectra_scaled(dims.n_xi(), params.spectral_width)?;
    let maps = (0..spectra.len() as u64)
        .map(|i| blob_map(dims.n_p_bar(), params, crate::seed::derive_seed(seed, &[i])))
        .collect::<Result<Vec<_>>>()?;
    let volume = assemble_volume(&maps, &spectra, dims)?;
    Ok(Phantom { volume, maps, spectra })
}
