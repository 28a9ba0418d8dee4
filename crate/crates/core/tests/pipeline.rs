use statrs::distribution::{ChiSquared, ContinuousCDF};

use spfti::acquisition::{complex_noise, light_exposure};
use spfti::coherence::{build_pmf, opd_slice, KappaVariant, PmfVariant};
use spfti::harness::{
    export_csv, read_records_csv, run_experiment, summarize, write_outputs, ExperimentConfig, ExperimentRecord,
};
use spfti::phantom::{make_phantom, PhantomParams};
use spfti::recovery::{calibrate_epsilon, empirical_snr_db, snr_to_sigma, Method};
use spfti::Dims;

fn small_config(ratios: Vec<f64>, snrs: Vec<f64>, reps: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::preset("smoke").unwrap();
    cfg.measurement_ratios = ratios;
    cfg.snr_list_db = snrs;
    cfg.repetitions = reps;
    cfg.epsilon_trials = 10;
    cfg
}

fn without_time(r: &[ExperimentRecord]) -> Vec<ExperimentRecord> {
    r.iter()
        .cloned()
        .map(|mut r| {
            r.wall_time_s = 0.0;
            r
        })
        .collect()
}

#[test]
fn noise_level_matches_requested_snr() {
    let d = Dims::new(64, 16).unwrap();
    let x = make_phantom(d, &PhantomParams::default(), 1).unwrap().volume;
    for snr in [10.0, 20.0, 30.0] {
        let sigma = snr_to_sigma(&x, snr).unwrap();
        let noise = complex_noise(d.n_hs(), sigma, 77).unwrap();
        let got = empirical_snr_db(&x, &noise).unwrap();
        assert!((got - snr).abs() < 0.2, "{snr} dB requested, {got} dB measured");
    }
}

#[test]
fn phantom_voxels_are_map_times_spectrum_sums() {
    let d = Dims::new(64, 16).unwrap();
    let p = make_phantom(d, &PhantomParams::default(), 3).unwrap();
    for (nu, px, py) in [(17, 0, 0), (19, 5, 7), (23, 15, 15), (40, 8, 2), (0, 3, 12)] {
        let want: f64 = p
            .maps
            .iter()
            .zip(&p.spectra)
            .map(|(m, s)| m.weights[16 * py + px] * s.values[nu])
            .sum();
        let got = p.volume.voxel(nu, px, py);
        assert!(
            (got - want).abs() <= 1e-12 * want.abs().max(1.0),
            "({nu},{px},{py}): {got} vs {want}"
        );
    }
}

#[test]
fn one_record_per_cell_repetition_and_method() {
    let cfg = small_config(vec![0.25, 0.5], vec![10.0, 20.0], 3);
    let out = run_experiment(&cfg).unwrap();
    assert_eq!(out.records.len(), 24);
    for r in &out.records {
        assert_eq!(r.exposure_ratio, light_exposure(r.m, cfg.dims).ratio);
        assert_eq!(r.m_over_n_xi, r.m as f64 / cfg.dims.n_xi() as f64);
    }
    let bpdn = out.records.iter().filter(|r| r.method == Method::Bpdn).count();
    assert_eq!(bpdn, 12);
}

#[test]
fn records_are_reproducible_and_round_trip_through_csv() {
    let cfg = small_config(vec![0.5], vec![20.0], 2);
    let a = run_experiment(&cfg).unwrap();
    let b = run_experiment(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let (pa, pb) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    export_csv(&a.records, &pa).unwrap();
    export_csv(&b.records, &pb).unwrap();
    assert_eq!(std::fs::read(&pa).unwrap(), std::fs::read(&pb).unwrap());
    assert_eq!(read_records_csv(&pa).unwrap(), without_time(&a.records));
}

#[test]
fn full_noiseless_sampling_is_exact_for_min_energy() {
    let cfg = small_config(vec![1.0], vec![f64::INFINITY], 1);
    let out = run_experiment(&cfg).unwrap();
    let me = out.records.iter().find(|r| r.method == Method::MinEnergy).unwrap();
    assert!(me.rsnr_db > 250.0, "{}", me.rsnr_db);
}

#[test]
fn summary_means_match_the_records() {
    let cfg = small_config(vec![0.25, 0.5], vec![20.0], 3);
    let out = run_experiment(&cfg).unwrap();
    for s in summarize(&out.records) {
        let v: Vec<f64> = out
            .records
            .iter()
            .filter(|r| r.measurement_ratio == s.measurement_ratio && r.snr_db == s.snr_db && r.method == s.method)
            .map(|r| r.rsnr_db)
            .collect();
        assert_eq!(v.len(), s.runs);
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
        assert!((s.mean_rsnr_db - mean).abs() < 1e-12);
        assert!((s.std_rsnr_db - var.sqrt()).abs() < 1e-12);
    }
}

#[test]
fn outputs_land_on_disk() {
    let mut cfg = small_config(vec![0.5], vec![20.0], 1);
    let dir = tempfile::tempdir().unwrap();
    cfg.output_dir = dir.path().join("run");
    let out = run_experiment(&cfg).unwrap();
    write_outputs(&cfg, &out).unwrap();
    for f in [
        "records.csv",
        "summary.csv",
        "timings.csv",
        "config.toml",
        "exemplar.json",
    ] {
        assert!(cfg.output_dir.join(f).is_file(), "{f} missing");
    }
    let back = ExperimentConfig::load(&cfg.output_dir.join("config.toml")).unwrap();
    assert_eq!(back, cfg);
    assert!(std::fs::read_dir(cfg.output_dir.join("images")).unwrap().count() > 0);
}

#[test]
fn pmf_slice_is_brightest_at_the_lowest_spatial_frequency() {
    let d = Dims::new(64, 16).unwrap();
    for kv in [KappaVariant::Eq8, KappaVariant::Product] {
        let pmf = build_pmf(d, PmfVariant::KappaSq, kv);
        let slice = opd_slice(d, &pmf.probs, d.n_xi() / 2);
        let top = slice.iter().cloned().fold(f64::MIN, f64::max);
        assert_eq!(slice[0], top);
    }
}

#[test]
fn uniform_epsilon_follows_the_chi_distribution() {
    // With uniform sampling every weight is sqrt(N), so ||Dn||^2 / (N sigma^2)
    // is chi-square with 2M degrees of freedom.
    let d = Dims::new(16, 4).unwrap();
    let pmf = build_pmf(d, PmfVariant::Uniform, KappaVariant::default());
    let (m, sigma) = (64, 0.3);
    let eps = calibrate_epsilon(sigma, &pmf, m, 4000, 0.95, 11).unwrap();
    let q = ChiSquared::new(2.0 * m as f64).unwrap().inverse_cdf(0.95);
    let want = sigma * (d.n_hs() as f64 * q).sqrt();
    assert!((eps / want - 1.0).abs() < 0.02, "{eps} vs {want}");
}
