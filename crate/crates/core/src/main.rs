use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use spfti::acquisition::{compressive_acquire, MeasurementSet};
use spfti::coherence::{
    build_pmf, coherence_profile, opd_slice, sample_omega, write_indexed_csv, KappaVariant, PmfVariant, SamplingPlan,
};
use spfti::harness::{run_experiment, summarize, write_outputs, ExperimentConfig};
use spfti::io::{read_json, write_json, write_pgm};
use spfti::phantom::{load_volume, make_phantom, save_volume, PhantomParams};
use spfti::recovery::{calibrate_epsilon, rsnr_complex, snr_to_sigma, solve_bpdn, solve_me, SolverConfig};
use spfti::transforms::Operators;
use spfti::{Dims, Error, Result};

#[derive(Parser)]
#[command(
    name = "spfti",
    version,
    about = "Compressive single-pixel FTI simulation and recovery"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write coherence bounds and the sampling pmf as CSV and PGM slices.
    Coherence(CoherenceArgs),
    /// Generate a synthetic phantom volume.
    Phantom(PhantomArgs),
    /// Simulate compressive acquisition of a volume.
    Acquire(AcquireArgs),
    /// Recover a volume from measurements.
    Recover(RecoverArgs),
    /// Run a full experiment sweep.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct DimsArgs {
    /// Number of OPD samples (power of two).
    #[arg(long, default_value_t = 64)]
    n_xi: usize,
    /// Side of the spatial grid (power of two).
    #[arg(long, default_value_t = 16)]
    n_p_bar: usize,
}

impl DimsArgs {
    fn dims(&self) -> Result<Dims> {
        Dims::new(self.n_xi, self.n_p_bar)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PmfArg {
    KappaSq,
    Eq9,
    Uniform,
}

impl From<PmfArg> for PmfVariant {
    fn from(p: PmfArg) -> Self {
        match p {
            PmfArg::KappaSq => PmfVariant::KappaSq,
            PmfArg::Eq9 => PmfVariant::Eq9,
            PmfArg::Uniform => PmfVariant::Uniform,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum KappaArg {
    Eq8,
    Product,
}

impl From<KappaArg> for KappaVariant {
    fn from(k: KappaArg) -> Self {
        match k {
            KappaArg::Eq8 => KappaVariant::Eq8,
            KappaArg::Product => KappaVariant::Product,
        }
    }
}

#[derive(Args)]
struct CoherenceArgs {
    #[command(flatten)]
    dims: DimsArgs,
    #[arg(long, value_enum, default_value = "eq8")]
    kappa: KappaArg,
    #[arg(long, value_enum, default_value = "kappa-sq")]
    pmf: PmfArg,
    #[arg(long, default_value = "coherence")]
    out: PathBuf,
}

#[derive(Args)]
struct PhantomArgs {
    #[command(flatten)]
    dims: DimsArgs,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output volume file; maps are written next to it as PGM.
    #[arg(long, default_value = "phantom.vol")]
    out: PathBuf,
}

#[derive(Args)]
struct AcquireArgs {
    #[arg(long)]
    volume: PathBuf,
    /// Measurement ratio M / n_hs.
    #[arg(long)]
    ratio: f64,
    /// Target SNR in dB; omit for noiseless acquisition.
    #[arg(long)]
    snr: Option<f64>,
    #[arg(long, value_enum, default_value = "kappa-sq")]
    pmf: PmfArg,
    #[arg(long, value_enum, default_value = "eq8")]
    kappa: KappaArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Monte-Carlo trials for the noise bound.
    #[arg(long, default_value_t = 100)]
    epsilon_trials: usize,
    /// Output measurement file; the plan goes to `<out>.plan.json`.
    #[arg(long, default_value = "measurements.bin")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Bpdn,
    Me,
}

#[derive(Args)]
struct RecoverArgs {
    #[arg(long)]
    measurements: PathBuf,
    /// Sampling plan; defaults to `<measurements>.plan.json`.
    #[arg(long)]
    plan: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "bpdn")]
    method: MethodArg,
    /// Noise bound; defaults to the calibrated value stored with the measurements.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, default_value_t = 5000)]
    max_iterations: usize,
    /// Ground truth volume for reporting RSNR.
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long, default_value = "recovered.bin")]
    out: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    /// TOML config file.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in config: smoke, default or large (long-running).
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the experiment seed.
    #[arg(long)]
    seed: Option<u64>,
}

fn plan_path(measurements: &Path) -> PathBuf {
    measurements.with_extension("plan.json")
}

fn coherence(a: CoherenceArgs) -> Result<bool> {
    let dims = a.dims.dims()?;
    std::fs::create_dir_all(&a.out).map_err(|e| Error::Io {
        path: a.out.clone(),
        source: e,
    })?;
    let prof = coherence_profile(dims, a.kappa.into());
    let pmf = build_pmf(dims, a.pmf.into(), a.kappa.into());
    write_indexed_csv(&a.out.join("kappa.csv"), dims, &prof.kappa)?;
    write_indexed_csv(&a.out.join("pmf.csv"), dims, &pmf.probs)?;
    let side = dims.n_p_bar();
    for l_xi in 1..=dims.n_xi() {
        write_pgm(
            &a.out.join(format!("pmf_lxi{l_xi:04}.pgm")),
            side,
            side,
            &opd_slice(dims, &pmf.probs, l_xi),
        )?;
    }
    println!("kappa_sq_norm = {}", prof.kappa_sq_norm);
    Ok(true)
}

fn phantom(a: PhantomArgs) -> Result<bool> {
    let dims = a.dims.dims()?;
    let params = PhantomParams::default();
    let p = make_phantom(dims, &params, a.seed)?;
    save_volume(&a.out, &p.volume)?;
    write_json(
        &a.out.with_extension("json"),
        &serde_json::json!({ "seed": a.seed, "params": params, "spectra": p.spectra }),
    )?;
    for (i, m) in p.maps.iter().enumerate() {
        m.write_pgm(&a.out.with_extension(format!("map{}.pgm", i + 1)))?;
    }
    Ok(true)
}

fn acquire(a: AcquireArgs) -> Result<bool> {
    let x = load_volume(&a.volume)?;
    let dims = x.dims();
    if !(a.ratio > 0.0 && a.ratio <= 1.0) {
        return Err(Error::Validation(format!("ratio {} not in (0, 1]", a.ratio)));
    }
    let pmf = build_pmf(dims, a.pmf.into(), a.kappa.into());
    let m = spfti::harness::measurements_for_ratio(a.ratio, dims.n_hs());
    let plan = if a.ratio == 1.0 {
        SamplingPlan::full(&pmf)?
    } else {
        sample_omega(&pmf, m, spfti::seed::derive_seed(a.seed, &[0]))?
    };
    let sigma = match a.snr {
        Some(s) => snr_to_sigma(&x, s)?,
        None => 0.0,
    };
    let noise_seed = spfti::seed::derive_seed(a.seed, &[1]);
    let mut y = compressive_acquire(&x, &plan, sigma, noise_seed)?;
    let eps_seed = spfti::seed::derive_seed(a.seed, &[2]);
    y.epsilon = Some(if a.ratio == 1.0 {
        spfti::harness::calibrate_fixed(sigma, &plan, a.epsilon_trials, 0.95, eps_seed)?
    } else {
        calibrate_epsilon(sigma, &pmf, plan.m, a.epsilon_trials, 0.95, eps_seed)?
    });
    y.save(&a.out)?;
    write_json(&plan_path(&a.out), &plan)?;
    println!(
        "m = {}, sigma = {sigma}, epsilon = {}",
        plan.m,
        y.epsilon.unwrap_or(0.0)
    );
    Ok(true)
}

fn recover(a: RecoverArgs) -> Result<bool> {
    let y = MeasurementSet::load(&a.measurements)?;
    let plan: SamplingPlan = read_json(&a.plan.unwrap_or_else(|| plan_path(&a.measurements)))?;
    let ops = Operators::new(y.dims)?;
    let cfg = SolverConfig {
        max_iterations: a.max_iterations,
        verbosity: 1,
        ..SolverConfig::default()
    };
    let r = match a.method {
        MethodArg::Bpdn => {
            let eps = a.epsilon.or(y.epsilon).unwrap_or(0.0);
            solve_bpdn(&ops, &y, &plan, eps, &cfg)?
        }
        MethodArg::Me => solve_me(&ops, &y, &plan, &cfg)?,
    };
    r.save(&a.out)?;
    r.write_trace_csv(&a.out.with_extension("trace.csv"))?;
    println!(
        "iterations = {}, converged = {}, residual = {}, l1 = {}",
        r.iterations, r.converged, r.residual_norm, r.l1_norm
    );
    if let Some(t) = a.truth {
        println!("rsnr_db = {}", rsnr_complex(&load_volume(&t)?, &r.x_hat)?);
    }
    Ok(r.converged)
}

fn experiment(a: ExperimentArgs) -> Result<bool> {
    let mut cfg = match (&a.config, &a.preset) {
        (Some(p), _) => ExperimentConfig::load(p)?,
        (None, Some(name)) => ExperimentConfig::preset(name)?,
        (None, None) => ExperimentConfig::preset("default")?,
    };
    if let Some(out) = a.out {
        cfg.output_dir = out;
    }
    if let Some(s) = a.seed {
        cfg.seeds.experiment = s;
    }
    let out = run_experiment(&cfg)?;
    write_outputs(&cfg, &out)?;
    for s in summarize(&out.records) {
        println!(
            "{:>9?} ratio {:<4} snr {:>5} dB: {:?} mean RSNR {:8.3} dB (±{:.3}), {}/{} converged",
            s.pmf_variant, s.measurement_ratio, s.snr_db, s.method, s.mean_rsnr_db, s.std_rsnr_db, s.converged, s.runs
        );
    }
    Ok(out.records.iter().all(|r| r.converged))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Coherence(a) => coherence(a),
        Command::Phantom(a) => phantom(a),
        Command::Acquire(a) => acquire(a),
        Command::Recover(a) => recover(a),
        Command::Experiment(a) => experiment(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: not every run converged");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
