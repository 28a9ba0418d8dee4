//! The experiment sweep.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::acquisition::{compressive_acquire_with, light_exposure};
use crate::coherence::{build_pmf, sample_omega, KappaVariant, Pmf, PmfVariant, SamplingPlan};
use crate::error::Result;
use crate::par::Execution;
use crate::phantom::{make_phantom, Phantom};
use crate::recovery::{
    calibrate_epsilon, percentile, rsnr_complex, snr_to_sigma, solve_bpdn, solve_me, weighted_norm, Method,
};
use crate::seed::derive_seed;
use crate::transforms::{HSVolume, Operators};

use super::config::ExperimentConfig;

/// One solver run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub pmf_variant: PmfVariant,
    pub kappa_variant: KappaVariant,
    pub n_xi: usize,
    pub n_p_bar: usize,
    pub measurement_ratio: f64,
    pub m: usize,
    /// `M / n_xi`, the second ratio quoted alongside exposure figures.
    pub m_over_n_xi: f64,
    pub snr_db: f64,
    pub repetition: usize,
    pub method: Method,
    pub rsnr_db: f64,
    pub exposure_ratio: f64,
    pub epsilon: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Excluded from `records.csv` so that file is byte-reproducible.
    pub wall_time_s: f64,
}

/// A reconstruction kept for rendering.
#[derive(Debug, Clone)]
pub struct Exemplar {
    pub pmf: Pmf,
    pub plan: SamplingPlan,
    pub measurement_ratio: f64,
    pub snr_db: f64,
    pub cs: HSVolume,
    pub me: HSVolume,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub records: Vec<ExperimentRecord>,
    pub phantom: Phantom,
    pub exemplar: Exemplar,
}

/// Number of measurements for a ratio. Ratio 1 means every index once.
pub fn measurements_for_ratio(ratio: f64, n_hs: usize) -> usize {
    ((ratio * n_hs as f64).round() as usize).clamp(1, n_hs)
}

struct Cell {
    pmf_idx: usize,
    ratio_idx: usize,
    snr_idx: usize,
    m: usize,
    sigma: f64,
    epsilon: f64,
}

fn plan_for(pmf: &Pmf, ratio: f64, m: usize, seed: u64) -> Result<SamplingPlan> {
    if ratio == 1.0 {
        SamplingPlan::full(pmf)
    } else {
        sample_omega(pmf, m, seed)
    }
}

/// Runs every (pmf, ratio, snr, repetition) cell with both solvers.
///
/// The noise bound is calibrated once per (pmf, ratio, snr) cell. Records
/// come back in sweep order (pmf, ratio, snr, repetition, method) whatever
/// the scheduling.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let dims = cfg.dims;
    let exec = Execution::default();
    let ops = Operators::new(dims)?.with_execution(Execution::Sequential);
    let phantom = make_phantom(dims, &cfg.phantom, cfg.seeds.phantom)?;
    let x = &phantom.volume;
    let base = cfg.seeds.experiment;
    let pmfs: Vec<Pmf> = cfg
        .pmf_variants
        .iter()
        .map(|&v| build_pmf(dims, v, cfg.kappa_variant))
        .collect();

    let mut keys = Vec::new();
    for pmf_idx in 0..pmfs.len() {
        for ratio_idx in 0..cfg.measurement_ratios.len() {
            for snr_idx in 0..cfg.snr_list_db.len() {
                keys.push((pmf_idx, ratio_idx, snr_idx));
            }
        }
    }
    let cells = exec.map_slice(&keys, |&(pmf_idx, ratio_idx, snr_idx)| -> Result<Cell> {
        let ratio = cfg.measurement_ratios[ratio_idx];
        let snr = cfg.snr_list_db[snr_idx];
        let m = measurements_for_ratio(ratio, dims.n_hs());
        let sigma = if snr == f64::INFINITY {
            0.0
        } else {
            snr_to_sigma(x, snr)?
        };
        let seed = derive_seed(base, &[pmf_idx as u64, ratio_idx as u64, snr_idx as u64, u64::MAX]);
        let pmf = &pmfs[pmf_idx];
        let epsilon = if ratio == 1.0 {
            calibrate_fixed(
                sigma,
                &SamplingPlan::full(pmf)?,
                cfg.epsilon_trials,
                cfg.epsilon_percentile,
                seed,
            )?
        } else {
            calibrate_epsilon(sigma, pmf, m, cfg.epsilon_trials, cfg.epsilon_percentile, seed)?
        };
        Ok(Cell {
            pmf_idx,
            ratio_idx,
            snr_idx,
            m,
            sigma,
            epsilon,
        })
    });
    let cells = cells.into_iter().collect::<Result<Vec<_>>>()?;

    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..cfg.repetitions).map(move |r| (c, r)))
        .collect();
    let exemplar_cell = exemplar_cell(cfg);
    let runs = exec.map_slice(
        &jobs,
        |&(c, rep)| -> Result<(Vec<ExperimentRecord>, Option<Exemplar>)> {
            let cell = &cells[c];
            let ratio = cfg.measurement_ratios[cell.ratio_idx];
            let snr = cfg.snr_list_db[cell.snr_idx];
            let pmf = &pmfs[cell.pmf_idx];
            let key = [
                cell.pmf_idx as u64,
                cell.ratio_idx as u64,
                cell.snr_idx as u64,
                rep as u64,
            ];
            let plan = plan_for(
                pmf,
                ratio,
                cell.m,
                derive_seed(base, &[key[0], key[1], key[2], key[3], 0]),
            )?;
            let y = compressive_acquire_with(
                &ops,
                x,
                &plan,
                cell.sigma,
                derive_seed(base, &[key[0], key[1], key[2], key[3], 1]),
            )?;
            let exposure = light_exposure(plan.m, dims).ratio;
            let record = |method, rsnr_db, iterations, converged, wall_time_s| ExperimentRecord {
                pmf_variant: cfg.pmf_variants[cell.pmf_idx],
                kappa_variant: cfg.kappa_variant,
                n_xi: dims.n_xi(),
                n_p_bar: dims.n_p_bar(),
                measurement_ratio: ratio,
                m: plan.m,
                m_over_n_xi: plan.m as f64 / dims.n_xi() as f64,
                snr_db: snr,
                repetition: rep,
                method,
                rsnr_db,
                exposure_ratio: exposure,
                epsilon: cell.epsilon,
                iterations,
                converged,
                wall_time_s,
            };
            let t = Instant::now();
            let cs = solve_bpdn(&ops, &y, &plan, cell.epsilon, &cfg.solver)?;
            let cs_time = t.elapsed().as_secs_f64();
            let t = Instant::now();
            let me = solve_me(&ops, &y, &plan, &cfg.solver)?;
            let me_time = t.elapsed().as_secs_f64();
            let recs = vec![
                record(
                    Method::Bpdn,
                    rsnr_complex(x, &cs.x_hat)?,
                    cs.iterations,
                    cs.converged,
                    cs_time,
                ),
                record(
                    Method::MinEnergy,
                    rsnr_complex(x, &me.x_hat)?,
                    me.iterations,
                    me.converged,
                    me_time,
                ),
            ];
            let ex = (Some(c) == exemplar_cell && rep == 0).then(|| Exemplar {
                pmf: pmf.clone(),
                plan: plan.clone(),
                measurement_ratio: ratio,
                snr_db: snr,
                cs: cs.volume(),
                me: me.volume(),
            });
            Ok((recs, ex))
        },
    );

    let mut records = Vec::with_capacity(2 * jobs.len());
    let mut exemplar = None;
    for r in runs {
        let (recs, ex) = r?;
        records.extend(recs);
        exemplar = exemplar.or(ex);
    }
    Ok(ExperimentOutput {
        records,
        phantom,
        exemplar: exemplar.expect("exemplar cell is always run"),
    })
}

/// Index of the rendered cell: first pmf, smallest ratio, highest SNR.
fn exemplar_cell(cfg: &ExperimentConfig) -> Option<usize> {
    let argmin = |v: &[f64]| (0..v.len()).min_by(|&a, &b| v[a].total_cmp(&v[b]));
    let argmax = |v: &[f64]| (0..v.len()).max_by(|&a, &b| v[a].total_cmp(&v[b]));
    let r = argmin(&cfg.measurement_ratios)?;
    let s = argmax(&cfg.snr_list_db)?;
    Some(r * cfg.snr_list_db.len() + s)
}

/// Noise bound for a fixed index set: quantile of `‖D n‖` over fresh noise.
pub fn calibrate_fixed(sigma: f64, plan: &SamplingPlan, trials: usize, pct: f64, seed: u64) -> Result<f64> {
    if sigma == 0.0 {
        return Ok(0.0);
    }
    let norms = Execution::default().map_range(trials, |t| -> Result<f64> {
        let n = crate::acquisition::complex_noise(plan.m, sigma, derive_seed(seed, &[t as u64, 1]))?;
        Ok(weighted_norm(&n, &plan.weights))
    });
    percentile(&norms.into_iter().collect::<Result<Vec<_>>>()?, pct)
}

/// Mean and spread of RSNR over the repetitions of one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub pmf_variant: PmfVariant,
    pub measurement_ratio: f64,
    pub snr_db: f64,
    pub method: Method,
    pub runs: usize,
    pub mean_rsnr_db: f64,
    /// Sample standard deviation (`n - 1` denominator); 0 for a single run.
    pub std_rsnr_db: f64,
    pub converged: usize,
    pub mean_iterations: f64,
    pub exposure_ratio: f64,
}

/// Groups records by (pmf, ratio, snr, method), in first-seen order.
pub fn summarize(records: &[ExperimentRecord]) -> Vec<CellSummary> {
    let mut groups: Vec<(CellSummary, Vec<f64>, usize)> = Vec::new();
    for r in records {
        let pos = groups.iter().position(|(s, _, _)| {
            s.pmf_variant == r.pmf_variant
                && s.measurement_ratio == r.measurement_ratio
                && s.snr_db == r.snr_db
                && s.method == r.method
        });
        let i = pos.unwrap_or_else(|| {
            groups.push((
                CellSummary {
                    pmf_variant: r.pmf_variant,
                    measurement_ratio: r.measurement_ratio,
                    snr_db: r.snr_db,
                    method: r.method,
                    runs: 0,
                    mean_rsnr_db: 0.0,
                    std_rsnr_db: 0.0,
                    converged: 0,
                    mean_iterations: 0.0,
                    exposure_ratio: r.exposure_ratio,
                },
                Vec::new(),
                0,
            ));
            groups.len() - 1
        });
        let g = &mut groups[i];
        g.1.push(r.rsnr_db);
        g.2 += r.iterations;
        g.0.converged += r.converged as usize;
    }
    groups
        .into_iter()
        .map(|(mut s, v, iters)| {
            let n = v.len();
            s.runs = n;
            s.mean_iterations = iters as f64 / n as f64;
            s.mean_rsnr_db = v.iter().sum::<f64>() / n as f64;
            s.std_rsnr_db = if n < 2 || v.iter().all(|&a| a == v[0]) {
                0.0
            } else {
                let m = s.mean_rsnr_db;
                (v.iter().map(|a| (a - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
            };
            s
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn measurement_counts() {
        assert_eq!(measurements_for_ratio(1.0, 1024), 1024);
        assert_eq!(measurements_for_ratio(0.1, 1024), 102);
        assert_eq!(measurements_for_ratio(1e-9, 1024), 1);
    }
}
