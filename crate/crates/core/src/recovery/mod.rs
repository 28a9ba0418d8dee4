//! Volume recovery: weighted basis pursuit denoising, the minimum-energy
//! baseline, noise-bound calibration and quality metrics.

mod bpdn;
mod metrics;
mod min_energy;

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;
use crate::transforms::{Dims, HSVolume, Operators, C64};

pub use bpdn::solve_bpdn;
pub use metrics::{
    calibrate_epsilon, empirical_snr_db, hard_threshold, percentile, rsnr, rsnr_complex, sigma_k, snr_to_sigma,
    weighted_norm,
};
pub use min_energy::solve_me;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub max_iterations: usize,
    /// Relative slack on the noise bound accepted as feasible.
    pub feasibility_tolerance: f64,
    /// Relative duality gap at which the solver stops.
    pub objective_tolerance: f64,
    /// Iterations between optimality checks (and trace rows).
    pub check_every: usize,
    /// 0 is silent; 1 prints a summary per solve; 2 prints every check.
    pub verbosity: u8,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iterations: 5000,
            feasibility_tolerance: 1e-4,
            objective_tolerance: 1e-5,
            check_every: 10,
            verbosity: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.feasibility_tolerance > 0.0 && self.objective_tolerance > 0.0) {
            return Err(Error::Validation("solver tolerances must be positive".into()));
        }
        if self.max_iterations == 0 || self.check_every == 0 {
            return Err(Error::Validation(
                "max_iterations and check_every must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub objective: f64,
    pub residual: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Bpdn,
    MinEnergy,
}

/// Output of a solver.
///
/// `x_hat` is complex and stored in volume order (wavenumber fastest). For
/// real data its imaginary part is round-off; [`RecoveryResult::volume`]
/// returns the real part.
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryResult {
    pub dims: Dims,
    pub method: Method,
    pub x_hat: Vec<C64>,
    pub s_hat: Vec<C64>,
    /// `‖D(y - P_Ω Φ_sp* x_hat)‖`, evaluated from `x_hat`.
    pub residual_norm: f64,
    /// `‖Ψ_sp* x_hat‖₁`.
    pub l1_norm: f64,
    /// Noise bound of the constraint; `None` for the minimum-energy method.
    pub epsilon: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<TraceRow>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ResultSidecar {
    dims: Dims,
    method: Method,
    residual_norm: f64,
    l1_norm: f64,
    epsilon: Option<f64>,
    iterations: usize,
    converged: bool,
}

impl RecoveryResult {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn finish(
        ops: &Operators,
        method: Method,
        s_hat: Vec<C64>,
        residual_norm: f64,
        epsilon: Option<f64>,
        iterations: usize,
        converged: bool,
        trace: Vec<TraceRow>,
    ) -> Self {
        let mut x_hat = s_hat.clone();
        ops.synthesize(&mut x_hat);
        RecoveryResult {
            dims: ops.dims,
            method,
            l1_norm: s_hat.iter().map(|v| v.norm()).sum(),
            x_hat,
            s_hat,
            residual_norm,
            epsilon,
            iterations,
            converged,
            trace,
        }
    }

    /// Real part of the estimate.
    pub fn volume(&self) -> HSVolume {
        HSVolume::new(self.dims, self.x_hat.iter().map(|v| v.re).collect()).expect("solver output is finite")
    }

    /// Writes `x_hat` (interleaved re/im f64) and a `.json` sidecar.
    pub fn save(&self, path: &Path) -> Result<()> {
        io::write_complex(path, &self.x_hat)?;
        io::write_json(
            &io::sidecar_path(path),
            &ResultSidecar {
                dims: self.dims,
                method: self.method,
                residual_norm: self.residual_norm,
                l1_norm: self.l1_norm,
                epsilon: self.epsilon,
                iterations: self.iterations,
                converged: self.converged,
            },
        )
    }

    /// Reads a saved result; `s_hat` is recomputed and the trace is empty.
    pub fn load(path: &Path) -> Result<Self> {
        let x_hat = io::read_complex(path)?;
        let meta: ResultSidecar = io::read_json(&io::sidecar_path(path))?;
        if x_hat.len() != meta.dims.n_hs() {
            return Err(Error::dim(format!(
                "payload has {} values, dims need {}",
                x_hat.len(),
                meta.dims.n_hs()
            )));
        }
        let mut s_hat = x_hat.clone();
        Operators::new(meta.dims)?.analyze(&mut s_hat);
        Ok(RecoveryResult {
            dims: meta.dims,
            method: meta.method,
            x_hat,
            s_hat,
            residual_norm: meta.residual_norm,
            l1_norm: meta.l1_norm,
            epsilon: meta.epsilon,
            iterations: meta.iterations,
            converged: meta.converged,
            trace: Vec::new(),
        })
    }

    pub fn write_trace_csv(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(f);
        let io = |e| Error::io(path, e);
        writeln!(w, "iteration,objective,residual,gap").map_err(io)?;
        for r in &self.trace {
            writeln!(w, "{},{},{},{}", r.iteration, r.objective, r.residual, r.gap).map_err(io)?;
        }
        w.flush().map_err(io)
    }
}

/// Measurements collapsed onto their distinct indices.
///
/// For index `l` seen `c_l` times with weight `d_l`, the weighted residual is
/// `Σ_l d_l² c_l |w_l - ȳ_l|² + R`, where `ȳ_l` is the mean of the repeats
/// and `R` their spread around it.
pub(crate) struct Collapsed {
    /// Sensing-storage position of each distinct index.
    pub pos: Vec<usize>,
    pub y_bar: Vec<C64>,
    /// `d_l √c_l`.
    pub weight: Vec<f64>,
    pub spread: f64,
}

pub(crate) fn collapse(dims: Dims, y: &[C64], omega: &[usize], d: &[f64]) -> Collapsed {
    let mut order: Vec<usize> = (0..omega.len()).collect();
    order.sort_by_key(|&j| omega[j]);
    let mut out = Collapsed {
        pos: Vec::new(),
        y_bar: Vec::new(),
        weight: Vec::new(),
        spread: 0.0,
    };
    let mut i = 0;
    while i < order.len() {
        let l = omega[order[i]];
        let mut k = i;
        while k < order.len() && omega[order[k]] == l {
            k += 1;
        }
        let group = &order[i..k];
        let c = group.len() as f64;
        let mean = group.iter().map(|&j| y[j]).sum::<C64>() / c;
        let dl = d[order[i]];
        out.spread += dl * dl * group.iter().map(|&j| (y[j] - mean).norm_sqr()).sum::<f64>();
        out.pos.push(dims.storage_of_flat(l));
        out.y_bar.push(mean);
        out.weight.push(dl * c.sqrt());
        i = k;
    }
    out
}

pub(crate) fn check_inputs(
    y: &crate::acquisition::MeasurementSet,
    plan: &crate::coherence::SamplingPlan,
) -> Result<()> {
    if y.dims != plan.dims || y.omega != plan.omega || plan.weights.len() != plan.omega.len() {
        return Err(Error::Validation("measurement set does not match sampling plan".into()));
    }
    Ok(())
}

/// `‖D(y - P_Ω w)‖` for a sensing-domain vector `w` in storage order.
pub(crate) fn data_residual(dims: Dims, y: &[C64], omega: &[usize], d: &[f64], w: &[C64]) -> f64 {
    y.iter()
        .zip(omega)
        .zip(d)
        .map(|((&yj, &l), &dj)| dj * dj * (yj - w[dims.storage_of_flat(l)]).norm_sqr())
        .sum::<f64>()
        .sqrt()
}
