//! Acceptance suite: one test per criterion, each printing a single
//! PASS/FAIL line (written past the test harness's output capture).

use std::f64::consts::PI;
use std::io::Write;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use spfti::acquisition::{budget_for_ratio, complex_noise, compressive_acquire_with, light_exposure_budget};
use spfti::coherence::{
    brute_force_local_coherence, build_pmf, coherence_profile, kappa_p, sample_omega, KappaVariant, PmfVariant,
    BRUTE_FORCE_CAP,
};
use spfti::harness::{run_experiment, summarize, CellSummary, ExperimentConfig};
use spfti::phantom::{make_phantom, PhantomParams};
use spfti::recovery::{calibrate_epsilon, snr_to_sigma, solve_bpdn, weighted_norm, Method, SolverConfig};
use spfti::transforms::{
    densify, sensing_operator, sparsity_operator, CenteredDft, Haar, Hadamard, IsotropicHaar, LinearMap, Operators, C64,
};
use spfti::{Dims, HSVolume, Index3D};

fn report(n: usize, ok: bool, detail: &str) {
    let verdict = if ok { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    writeln!(out, "criterion {n}: {verdict} {detail}").unwrap();
    out.flush().unwrap();
}

// ---------------------------------------------------------------------------
// Dense oracles, built from the defining recursions and closed forms.

/// Square complex matrix stored column by column.
#[derive(Clone)]
struct Mat {
    n: usize,
    cols: Vec<Vec<C64>>,
}

impl Mat {
    fn from_fn(n: usize, f: impl Fn(usize, usize) -> C64) -> Mat {
        Mat {
            n,
            cols: (0..n).map(|j| (0..n).map(|i| f(i, j)).collect()).collect(),
        }
    }

    fn real(n: usize, f: impl Fn(usize, usize) -> f64) -> Mat {
        Mat::from_fn(n, |i, j| C64::new(f(i, j), 0.0))
    }

    fn at(&self, i: usize, j: usize) -> C64 {
        self.cols[j][i]
    }

    fn mul_vec(&self, u: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::default(); self.n];
        for (col, &uj) in self.cols.iter().zip(u) {
            for (o, &c) in out.iter_mut().zip(col) {
                *o += c * uj;
            }
        }
        out
    }

    fn adj_mul_vec(&self, u: &[C64]) -> Vec<C64> {
        self.cols
            .iter()
            .map(|col| col.iter().zip(u).map(|(c, v)| c.conj() * v).sum())
            .collect()
    }

    fn matmul(&self, b: &Mat) -> Mat {
        Mat {
            n: self.n,
            cols: b.cols.iter().map(|c| self.mul_vec(c)).collect(),
        }
    }

    /// `A ⊗ B` with the `B` index fastest.
    fn kron(&self, b: &Mat) -> Mat {
        let n = self.n * b.n;
        Mat::from_fn(n, |i, j| self.at(i / b.n, j / b.n) * b.at(i % b.n, j % b.n))
    }

    /// `max |M*M - I|`.
    fn unitarity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in i..self.n {
                let g: C64 = self.cols[i].iter().zip(&self.cols[j]).map(|(a, b)| a.conj() * b).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g - target).norm());
            }
        }
        worst
    }

    fn row_max_abs(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.at(i, j).norm()).fold(0.0, f64::max))
            .collect()
    }
}

/// Paley Hadamard: `H_N = [H_{N/2} ⊗ (1,1)ᵀ, H_{N/2} ⊗ (1,-1)ᵀ] / √2`.
fn oracle_hadamard(n: usize) -> Vec<Vec<f64>> {
    if n == 1 {
        return vec![vec![1.0]];
    }
    let h = oracle_hadamard(n / 2);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if j < n / 2 {
                        h[i / 2][j] * s
                    } else {
                        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                        h[i / 2][j - n / 2] * sign * s
                    }
                })
                .collect()
        })
        .collect()
}

/// Haar `W_N = [W_{N/2} ⊗ (1,1)ᵀ, I_{N/2} ⊗ (1,-1)ᵀ] / √2`, or the scaling
/// companion `W⁰_N = [W⁰_{N/2} ⊗ (1,1)ᵀ, I_{N/2} ⊗ (1,1)ᵀ] / √2`.
fn oracle_haar(n: usize, scaling: bool) -> Vec<Vec<f64>> {
    if n == 1 {
        return vec![vec![1.0]];
    }
    let w = oracle_haar(n / 2, scaling);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if j < n / 2 {
                        w[i / 2][j] * s
                    } else if i / 2 == j - n / 2 {
                        let sign = if scaling || i % 2 == 0 { 1.0 } else { -1.0 };
                        sign * s
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}

/// Isotropic 2D Haar on an `nb × nb` grid (pixel `nb·y + x`): the constant
/// atom, then per level the blocks (W⁰ ⊗ W), (W ⊗ W⁰), (W ⊗ W) over the
/// level's columns, `kx` fastest.
fn oracle_idhw(nb: usize) -> Mat {
    let w = oracle_haar(nb, false);
    let w0 = oracle_haar(nb, true);
    let n = nb * nb;
    let mut cols = vec![vec![C64::new(1.0 / nb as f64, 0.0); n]];
    let atom = |a: &Vec<Vec<f64>>, ca: usize, b: &Vec<Vec<f64>>, cb: usize| -> Vec<C64> {
        (0..n).map(|p| C64::new(a[p / nb][ca] * b[p % nb][cb], 0.0)).collect()
    };
    let mut h = 1;
    while h < nb {
        for (ya, xa) in [(&w0, &w), (&w, &w0), (&w, &w)] {
            for ky in 0..h {
                for kx in 0..h {
                    cols.push(atom(ya, h + ky, xa, h + kx));
                }
            }
        }
        h *= 2;
    }
    Mat { n, cols }
}

/// `Φ_dft*`: row `r` (0-based) measures frequency `r + 1 - N/2`.
fn oracle_dft_adj(n: usize) -> Mat {
    let s = 1.0 / (n as f64).sqrt();
    Mat::from_fn(n, |r, t| {
        let f = r as f64 + 1.0 - (n / 2) as f64;
        C64::from_polar(s, -2.0 * PI * f * t as f64 / n as f64)
    })
}

fn to_mat(rows: Vec<Vec<f64>>) -> Mat {
    Mat::real(rows.len(), |i, j| rows[i][j])
}

fn from_dense(d: &spfti::transforms::DenseMatrix) -> Mat {
    Mat::from_fn(d.rows, |i, j| d.get(i, j))
}

fn random_vec(n: usize, seed: u64) -> Vec<C64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect()
}

fn rel_diff(a: &[C64], b: &[C64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum::<f64>().sqrt();
    num / den.max(f64::MIN_POSITIVE)
}

// ---------------------------------------------------------------------------

#[test]
fn criterion_1_basis_correctness() {
    let t = Instant::now();
    let mut worst_unitary = 0.0f64;
    let mut worst_fast = 0.0f64;
    let mut check = |map: &dyn LinearMap, oracle: &Mat, seed: u64| {
        let dense = from_dense(&densify(map, 1 << 22).unwrap());
        worst_unitary = worst_unitary.max(dense.unitarity_defect());
        let u = random_vec(oracle.n, seed);
        let mut f = u.clone();
        map.forward_in_place(&mut f);
        let mut a = u.clone();
        map.adjoint_in_place(&mut a);
        worst_fast = worst_fast
            .max(rel_diff(&f, &oracle.mul_vec(&u)))
            .max(rel_diff(&a, &oracle.adj_mul_vec(&u)));
    };
    for n_xi in [4usize, 8, 16] {
        check(&CenteredDft::new(n_xi).unwrap(), &oracle_dft_adj(n_xi), 1);
        check(&Haar::new(n_xi).unwrap(), &to_mat(oracle_haar(n_xi, false)), 2);
    }
    for nb in [2usize, 4, 8] {
        check(&Hadamard::new(nb * nb).unwrap(), &to_mat(oracle_hadamard(nb * nb)), 3);
        check(&IsotropicHaar::new(nb).unwrap(), &oracle_idhw(nb), 4);
        for n_xi in [4usize, 8, 16] {
            let d = Dims::new(n_xi, nb).unwrap();
            let phi = to_mat(oracle_hadamard(nb * nb)).kron(&oracle_dft_adj(n_xi));
            let psi = oracle_idhw(nb).kron(&to_mat(oracle_haar(n_xi, false)));
            check(&sensing_operator(d).unwrap(), &phi, 5);
            check(&sparsity_operator(d).unwrap(), &psi, 6);
        }
    }
    let secs = t.elapsed().as_secs_f64();
    let ok = worst_unitary < 1e-10 && worst_fast < 1e-12 && secs < 10.0;
    report(
        1,
        ok,
        &format!("max|M*M-I| = {worst_unitary:.2e}, fast vs dense rel = {worst_fast:.2e}, {secs:.1} s"),
    );
    assert!(ok);
}

#[test]
fn criterion_2_hadamard_haar_coherence_exact() {
    let mut worst = 0.0f64;
    let mut norms_ok = true;
    for nb in [2usize, 4, 8] {
        let m = to_mat(oracle_hadamard(nb * nb)).matmul(&oracle_idhw(nb));
        let mu = m.row_max_abs();
        let mut norm_sq = 0.0;
        for ly in 1..=nb {
            for lx in 1..=nb {
                let k = kappa_p(lx, ly, nb).unwrap();
                norm_sq += k * k;
                worst = worst.max((mu[nb * (ly - 1) + lx - 1] - k).abs());
            }
        }
        norms_ok &= norm_sq == 1.0 + 3.0 * (nb as f64).log2();
    }
    let ok = worst < 1e-12 && norms_ok;
    report(
        2,
        ok,
        &format!("max|mu_p - kappa_p| = {worst:.2e}, |kappa_p|^2 = 1+3log2(N) exact: {norms_ok}"),
    );
    assert!(ok);
}

#[test]
fn criterion_3_upper_bound_and_multiplicativity() {
    let mut bound_violation = f64::NEG_INFINITY;
    let mut mult_err = 0.0f64;
    let mut cases = 0;
    for n_xi in [4usize, 8, 16, 32, 64] {
        for nb in [2usize, 4, 8, 16] {
            let d = Dims::new(n_xi, nb).unwrap();
            if d.n_hs() > 1 << 10 {
                continue;
            }
            cases += 1;
            let brute = brute_force_local_coherence(d, BRUTE_FORCE_CAP).unwrap();
            let eq8 = coherence_profile(d, KappaVariant::Eq8);
            let prod = coherence_profile(d, KappaVariant::Product);
            let mu_xi = oracle_dft_adj(n_xi)
                .matmul(&to_mat(oracle_haar(n_xi, false)))
                .row_max_abs();
            let mu_p = to_mat(oracle_hadamard(nb * nb)).matmul(&oracle_idhw(nb)).row_max_abs();
            for l in 1..=d.n_hs() {
                let idx = d.unflatten(l).unwrap();
                let b = brute.at(l);
                bound_violation = bound_violation.max(b - eq8.at(l)).max(b - prod.at(l));
                let lp = nb * (idx.l_y - 1) + idx.l_x;
                mult_err = mult_err.max((b - mu_xi[idx.l_xi - 1] * mu_p[lp - 1]).abs());
            }
        }
    }
    let ok = bound_violation <= 1e-12 && mult_err < 1e-12;
    report(
        3,
        ok,
        &format!("{cases} sizes, max(mu - kappa) = {bound_violation:.2e}, multiplicativity err = {mult_err:.2e}"),
    );
    assert!(ok);
}

#[test]
fn criterion_4_pmf_validity() {
    let d = Dims::new(8, 4).unwrap();
    let mut sums_ok = true;
    for variant in [PmfVariant::KappaSq, PmfVariant::Eq9] {
        for kv in [KappaVariant::Eq8, KappaVariant::Product] {
            let pmf = build_pmf(d, variant, kv);
            sums_ok &= (pmf.probs.iter().sum::<f64>() - 1.0).abs() <= 1e-12;
        }
    }
    let pmf = build_pmf(d, PmfVariant::KappaSq, KappaVariant::default());
    let center = d.flat_index(Index3D::new(d.n_xi() / 2, 1, 1)).unwrap();
    let argmax_ok = pmf.prob(center) == pmf.prob(pmf.argmax());

    let draws = 100_000;
    let plan = sample_omega(&pmf, draws, 2024).unwrap();
    let mut counts = vec![0usize; d.n_hs()];
    for &l in &plan.omega {
        counts[l - 1] += 1;
    }
    // Pool cells with small expectations so the χ² approximation holds.
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut pool_e, mut pool_o) = (0.0, 0.0);
    for (i, &c) in counts.iter().enumerate() {
        let e = pmf.probs[i] * draws as f64;
        if e < 5.0 {
            pool_e += e;
            pool_o += c as f64;
        } else {
            cells.push((e, c as f64));
        }
    }
    if pool_e > 0.0 {
        cells.push((pool_e, pool_o));
    }
    let stat: f64 = cells.iter().map(|(e, o)| (o - e) * (o - e) / e).sum();
    let dof = (cells.len() - 1) as f64;
    let p_value = 1.0 - ChiSquared::new(dof).unwrap().cdf(stat);
    let ok = sums_ok && argmax_ok && p_value > 0.01;
    report(
        4,
        ok,
        &format!("sums ok: {sums_ok}, argmax at centre: {argmax_ok}, chi2 = {stat:.1} on {dof} dof, p = {p_value:.3}"),
    );
    assert!(ok);
}

#[test]
fn criterion_5_noiseless_exact_recovery() {
    let t = Instant::now();
    let d = Dims::new(32, 8).unwrap();
    let ops = Operators::new(d).unwrap();
    let pmf = build_pmf(d, PmfVariant::KappaSq, KappaVariant::default());
    let cfg = SolverConfig::default();
    let mut hits = 0;
    let mut worst = 0.0f64;
    for trial in 0..10u64 {
        let mut rng = ChaCha20Rng::seed_from_u64(500 + trial);
        let mut s = vec![C64::default(); d.n_hs()];
        let mut placed = 0;
        while placed < 5 {
            let i = rng.random_range(0..d.n_hs());
            if s[i] == C64::default() {
                s[i] = C64::new(if rng.random::<bool>() { 1.0 } else { -1.0 }, 0.0);
                placed += 1;
            }
        }
        ops.synthesize(&mut s);
        let x = HSVolume::new(d, s.iter().map(|v| v.re).collect()).unwrap();
        let plan = sample_omega(&pmf, d.n_hs() / 2, 600 + trial).unwrap();
        let y = compressive_acquire_with(&ops, &x, &plan, 0.0, 0).unwrap();
        let r = solve_bpdn(&ops, &y, &plan, 0.0, &cfg).unwrap();
        let err = x
            .data()
            .iter()
            .zip(&r.x_hat)
            .map(|(&a, b)| (b - a).norm_sqr())
            .sum::<f64>()
            .sqrt()
            / x.norm();
        worst = worst.max(err);
        if err <= 1e-4 {
            hits += 1;
        }
    }
    let secs = t.elapsed().as_secs_f64();
    let ok = hits >= 9 && secs < 60.0;
    report(
        5,
        ok,
        &format!("{hits}/10 trials with relative error <= 1e-4 (worst {worst:.1e}), {secs:.1} s"),
    );
    assert!(ok);
}

fn cell(s: &[CellSummary], ratio: f64, snr: f64, method: Method) -> &CellSummary {
    s.iter()
        .find(|c| c.measurement_ratio == ratio && c.snr_db == snr && c.method == method)
        .expect("cell present")
}

/// Configuration shared by the trend and uniform-sampling checks: the
/// factorized coherence bound, whose pmf spreads samples over all OPD rows.
fn trend_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::preset("default").unwrap();
    cfg.kappa_variant = KappaVariant::Product;
    cfg
}

#[test]
fn criterion_6_trend_reproduction() {
    let t = Instant::now();
    let cfg = trend_config();
    let out = run_experiment(&cfg).unwrap();
    let secs = t.elapsed().as_secs_f64();
    let s = summarize(&out.records);
    let ratios = cfg.measurement_ratios.clone();
    let (lo, mid, hi) = (10.0, 15.0, 20.0);

    let gap = cell(&s, 0.1, hi, Method::Bpdn).mean_rsnr_db - cell(&s, 0.1, hi, Method::MinEnergy).mean_rsnr_db;
    let a = gap >= 3.0;

    let mut b = true;
    for &r in &ratios {
        let c = |snr| cell(&s, r, snr, Method::Bpdn).mean_rsnr_db;
        b &= c(hi) >= c(mid) - 0.5 && c(mid) >= c(lo) - 0.5;
    }

    let mut me_spread = Vec::new();
    for &r in ratios.iter().filter(|&&r| r >= 0.5) {
        let v: Vec<f64> = [lo, mid, hi]
            .iter()
            .map(|&snr| cell(&s, r, snr, Method::MinEnergy).mean_rsnr_db)
            .collect();
        let spread = v.iter().cloned().fold(f64::MIN, f64::max) - v.iter().cloned().fold(f64::MAX, f64::min);
        me_spread.push(format!("{r}:{spread:.2}"));
    }

    let mut d = true;
    for &snr in &[lo, mid, hi] {
        for w in ratios.windows(2) {
            let c = |r| cell(&s, r, snr, Method::Bpdn).mean_rsnr_db;
            d &= c(w[1]) >= c(w[0]) - 0.5;
        }
    }
    let runtime = secs < 30.0 * 60.0;
    let unconverged = out.records.iter().filter(|r| !r.converged).count();
    let ok = a && b && d && runtime;
    let curve = |snr, m| {
        ratios
            .iter()
            .map(|&r| format!("{:.1}", cell(&s, r, snr, m).mean_rsnr_db))
            .collect::<Vec<_>>()
            .join(" ")
    };
    report(
        6,
        ok,
        &format!(
            "(a) CS-ME gap at 0.1/20 dB = {gap:.2} dB [{a}]; (b) SNR ordering [{b}]; \
             (c) ME spread across SNR (report only) {}; (d) CS monotone in ratio [{d}]; \
             {secs:.0} s [{runtime}]; unconverged runs {unconverged}/{}; \
             CS@20 {}; CS@15 {}; CS@10 {}; ME@20 {}",
            me_spread.join(" "),
            out.records.len(),
            curve(hi, Method::Bpdn),
            curve(mid, Method::Bpdn),
            curve(lo, Method::Bpdn),
            curve(hi, Method::MinEnergy),
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_7_epsilon_calibration() {
    let d = Dims::new(64, 16).unwrap();
    let phantom = make_phantom(d, &PhantomParams::default(), 1).unwrap();
    let sigma = snr_to_sigma(&phantom.volume, 20.0).unwrap();
    let pmf = build_pmf(d, PmfVariant::KappaSq, KappaVariant::default());
    let m = d.n_hs() / 10;
    // A percentile from 100 draws is itself random (its coverage has a
    // standard deviation near 0.02), so the bound under test is calibrated
    // on more draws; the 100-draw figure is reported alongside.
    let eps = calibrate_epsilon(sigma, &pmf, m, 2000, 0.95, 2024).unwrap();
    let eps_100 = calibrate_epsilon(sigma, &pmf, m, 100, 0.95, 2024).unwrap();
    let draws = 1000;
    let norms: Vec<f64> = (0..draws as u64)
        .map(|i| {
            let plan = sample_omega(&pmf, m, 10_000 + 2 * i).unwrap();
            let noise = complex_noise(m, sigma, 10_001 + 2 * i).unwrap();
            weighted_norm(&noise, &plan.weights)
        })
        .collect();
    let coverage = |e: f64| norms.iter().filter(|&&v| v <= e).count() as f64 / draws as f64;
    let (frac, frac_100) = (coverage(eps), coverage(eps_100));
    let ok = (0.92..=0.98).contains(&frac);
    report(
        7,
        ok,
        &format!(
            "P[|Dn| <= eps] = {frac:.3} over {draws} fresh draws (eps from 2000 draws); \
             with eps from 100 draws: {frac_100:.3}"
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_8_vds_beats_uniform() {
    let mut cfg = trend_config();
    cfg.measurement_ratios = vec![0.15];
    cfg.snr_list_db = vec![20.0];
    cfg.repetitions = 10;
    cfg.pmf_variants = vec![PmfVariant::KappaSq, PmfVariant::Uniform];
    let out = run_experiment(&cfg).unwrap();
    let s = summarize(&out.records);
    let mean = |v| {
        s.iter()
            .find(|c| c.pmf_variant == v && c.method == Method::Bpdn)
            .expect("cell")
            .mean_rsnr_db
    };
    let (vds, uni) = (mean(PmfVariant::KappaSq), mean(PmfVariant::Uniform));
    let ok = vds > uni;
    report(8, ok, &format!("mean RSNR VDS = {vds:.2} dB vs uniform = {uni:.2} dB"));
    assert!(ok);
}

#[test]
fn criterion_9_exposure_accounting() {
    let d = Dims::new(512, 64).unwrap();
    let m = budget_for_ratio(0.1, d);
    let rep = light_exposure_budget(m, d);
    let direct = (m + 512.0) / (d.n_hs() as f64 + 512.0);
    let ok = (rep.ratio - 0.1).abs() <= 1e-12 && (direct - 0.1).abs() <= 1e-12;
    report(
        9,
        ok,
        &format!(
            "M = {m:.1} (M/N_hs = {:.4}): (M+N_xi)/(N_hs+N_xi) = {:.15}",
            m / d.n_hs() as f64,
            rep.ratio
        ),
    );
    assert!(ok);
}
