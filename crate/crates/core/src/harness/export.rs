//! CSV tables and PGM images for experiment output.
//!
//! Numbers are written with Rust's shortest round-trip `f64` formatting, so
//! parsing a field gives back the exact value. An exact reconstruction
//! (infinite RSNR) is written as `perfect`; an infinite SNR as `inf`.

use std::fs;
use std::path::Path;

use crate::coherence::{opd_slice, KappaVariant, Pmf, PmfVariant, SamplingPlan};
use crate::error::{Error, Result};
use crate::io::{write_json, write_pgm};
use crate::recovery::Method;
use crate::transforms::{Dims, HSVolume};

use super::config::ExperimentConfig;
use super::run::{summarize, CellSummary, ExperimentOutput, ExperimentRecord};

pub const RECORD_COLUMNS: [&str; 15] = [
    "pmf_variant",
    "kappa_variant",
    "n_xi",
    "n_p_bar",
    "measurement_ratio",
    "m",
    "m_over_n_xi",
    "snr_db",
    "repetition",
    "method",
    "rsnr_db",
    "exposure_ratio",
    "epsilon",
    "iterations",
    "converged",
];

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| Error::Csv {
        path: path.into(),
        source: e,
    }
}

fn fmt_rsnr(v: f64) -> String {
    if v == f64::INFINITY {
        "perfect".into()
    } else {
        v.to_string()
    }
}

fn parse_rsnr(s: &str) -> std::result::Result<f64, String> {
    if s == "perfect" {
        Ok(f64::INFINITY)
    } else {
        s.parse().map_err(|_| format!("bad number {s:?}"))
    }
}

fn label<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|j| j.as_str().map(str::to_owned))
        .unwrap_or_default()
}

fn unlabel<T: serde::de::DeserializeOwned>(s: &str) -> std::result::Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.into())).map_err(|_| format!("bad label {s:?}"))
}

pub fn export_csv(records: &[ExperimentRecord], path: &Path) -> Result<()> {
    if records.is_empty() {
        return Err(Error::Validation("no records to export".into()));
    }
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(RECORD_COLUMNS).map_err(csv_err(path))?;
    for r in records {
        w.write_record([
            label(&r.pmf_variant),
            label(&r.kappa_variant),
            r.n_xi.to_string(),
            r.n_p_bar.to_string(),
            r.measurement_ratio.to_string(),
            r.m.to_string(),
            r.m_over_n_xi.to_string(),
            r.snr_db.to_string(),
            r.repetition.to_string(),
            label(&r.method),
            fmt_rsnr(r.rsnr_db),
            r.exposure_ratio.to_string(),
            r.epsilon.to_string(),
            r.iterations.to_string(),
            r.converged.to_string(),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Parses a file written by [`export_csv`]; wall times read back as 0.
pub fn read_records_csv(path: &Path) -> Result<Vec<ExperimentRecord>> {
    let mut rd = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let header = rd.headers().map_err(csv_err(path))?.clone();
    if header.iter().ne(RECORD_COLUMNS) {
        return Err(Error::Format {
            offset: 0,
            message: format!("{}: unexpected header", path.display()),
        });
    }
    let mut out = Vec::new();
    for row in rd.records() {
        let row = row.map_err(csv_err(path))?;
        let offset = row.position().map_or(0, |p| p.byte());
        let parse = || -> std::result::Result<ExperimentRecord, String> {
            let f = |i: usize| row.get(i).unwrap_or("");
            let num = |i: usize| f(i).parse::<f64>().map_err(|_| format!("bad number {:?}", f(i)));
            let int = |i: usize| f(i).parse::<usize>().map_err(|_| format!("bad integer {:?}", f(i)));
            Ok(ExperimentRecord {
                pmf_variant: unlabel::<PmfVariant>(f(0))?,
                kappa_variant: unlabel::<KappaVariant>(f(1))?,
                n_xi: int(2)?,
                n_p_bar: int(3)?,
                measurement_ratio: num(4)?,
                m: int(5)?,
                m_over_n_xi: num(6)?,
                snr_db: num(7)?,
                repetition: int(8)?,
                method: unlabel::<Method>(f(9))?,
                rsnr_db: parse_rsnr(f(10))?,
                exposure_ratio: num(11)?,
                epsilon: num(12)?,
                iterations: int(13)?,
                converged: f(14).parse().map_err(|_| format!("bad flag {:?}", f(14)))?,
                wall_time_s: 0.0,
            })
        };
        out.push(parse().map_err(|message| Error::Format { offset, message })?);
    }
    Ok(out)
}

pub fn export_summary_csv(summaries: &[CellSummary], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record([
        "pmf_variant",
        "measurement_ratio",
        "snr_db",
        "method",
        "runs",
        "mean_rsnr_db",
        "std_rsnr_db",
        "converged",
        "mean_iterations",
        "exposure_ratio",
    ])
    .map_err(csv_err(path))?;
    for s in summaries {
        w.write_record([
            label(&s.pmf_variant),
            s.measurement_ratio.to_string(),
            s.snr_db.to_string(),
            label(&s.method),
            s.runs.to_string(),
            fmt_rsnr(s.mean_rsnr_db),
            s.std_rsnr_db.to_string(),
            s.converged.to_string(),
            s.mean_iterations.to_string(),
            s.exposure_ratio.to_string(),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn export_timings_csv(records: &[ExperimentRecord], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record([
        "pmf_variant",
        "measurement_ratio",
        "snr_db",
        "repetition",
        "method",
        "wall_time_s",
    ])
    .map_err(csv_err(path))?;
    for r in records {
        w.write_record([
            label(&r.pmf_variant),
            r.measurement_ratio.to_string(),
            r.snr_db.to_string(),
            r.repetition.to_string(),
            label(&r.method),
            r.wall_time_s.to_string(),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Per-slice count of how often each spatial pattern was drawn.
pub fn mask_slice(plan: &SamplingPlan, l_xi: usize) -> Vec<f64> {
    let d = plan.dims;
    let mut counts = vec![0.0; d.n_p()];
    for &l in &plan.omega {
        if (l - 1) / d.n_p() == l_xi - 1 {
            counts[(l - 1) % d.n_p()] += 1.0;
        }
    }
    counts
}

/// OPD slices rendered for pmf and mask images.
pub fn image_slices(dims: Dims) -> Vec<usize> {
    let n = dims.n_xi();
    let mut v = vec![n / 2, n / 2 + 1, n / 2 + n / 8, n];
    v.dedup();
    v
}

/// Writes pmf and sampled-mask images per OPD slice, plus spatial maps of
/// each volume at the requested (1-based) wavenumber bands.
pub fn export_images(
    dir: &Path,
    pmf: &Pmf,
    plan: &SamplingPlan,
    volumes: &[(&str, &HSVolume)],
    bands: &[usize],
) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let d = pmf.dims;
    let side = d.n_p_bar();
    for l_xi in image_slices(d) {
        write_pgm(
            &dir.join(format!("pmf_lxi{l_xi:04}.pgm")),
            side,
            side,
            &opd_slice(d, &pmf.probs, l_xi),
        )?;
        write_pgm(
            &dir.join(format!("mask_lxi{l_xi:04}.pgm")),
            side,
            side,
            &mask_slice(plan, l_xi),
        )?;
    }
    for (name, v) in volumes {
        for &b in bands {
            if b == 0 || b > d.n_xi() {
                return Err(Error::range("band", b, 1, d.n_xi()));
            }
            write_pgm(&dir.join(format!("{name}_band{b:04}.pgm")), side, side, &v.band(b - 1))?;
        }
    }
    Ok(())
}

/// Writes `records.csv`, `summary.csv`, `timings.csv`, the resolved config
/// and the images into `cfg.output_dir`.
pub fn write_outputs(cfg: &ExperimentConfig, out: &ExperimentOutput) -> Result<()> {
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    export_csv(&out.records, &dir.join("records.csv"))?;
    export_summary_csv(&summarize(&out.records), &dir.join("summary.csv"))?;
    export_timings_csv(&out.records, &dir.join("timings.csv"))?;
    let cfg_path = dir.join("config.toml");
    fs::write(&cfg_path, cfg.to_toml()?).map_err(|e| Error::io(&cfg_path, e))?;
    let ex = &out.exemplar;
    write_json(
        &dir.join("exemplar.json"),
        &serde_json::json!({
            "measurement_ratio": ex.measurement_ratio,
            "snr_db": ex.snr_db,
            "pmf_variant": cfg.pmf_variants[0],
            "m": ex.plan.m,
        }),
    )?;
    let bands = if cfg.image_bands.is_empty() {
        out.phantom.spectra.iter().map(|s| s.peak_index).collect()
    } else {
        cfg.image_bands.clone()
    };
    export_images(
        &dir.join("images"),
        &ex.pmf,
        &ex.plan,
        &[("truth", &out.phantom.volume), ("cs", &ex.cs), ("me", &ex.me)],
        &bands,
    )
}
