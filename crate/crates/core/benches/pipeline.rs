use criterion::{criterion_group, criterion_main, Criterion};
use spfti::acquisition::compressive_acquire_with;
use spfti::coherence::{build_pmf, sample_omega, KappaVariant, PmfVariant};
use spfti::par::Execution;
use spfti::phantom::{make_phantom, PhantomParams};
use spfti::recovery::{calibrate_epsilon, snr_to_sigma, solve_bpdn, solve_me, SolverConfig};
use spfti::transforms::{Dims, Operators};

fn modes() -> Vec<(&'static str, Execution)> {
    #[allow(unused_mut)]
    let mut m = vec![("sequential", Execution::Sequential)];
    #[cfg(feature = "parallel")]
    m.push(("parallel", Execution::Parallel));
    m
}

fn recovery(c: &mut Criterion) {
    let dims = Dims::new(64, 16).unwrap();
    let phantom = make_phantom(dims, &PhantomParams::default(), 1).unwrap();
    let pmf = build_pmf(dims, PmfVariant::KappaSq, KappaVariant::Product);
    let plan = sample_omega(&pmf, dims.n_hs() / 4, 7).unwrap();
    let sigma = snr_to_sigma(&phantom.volume, 20.0).unwrap();
    // A fixed iteration budget keeps the work identical across modes.
    let cfg = SolverConfig {
        max_iterations: 50,
        objective_tolerance: 1e-15,
        ..SolverConfig::default()
    };
    let eps = calibrate_epsilon(sigma, &pmf, plan.m, 20, 0.95, 5).unwrap();
    let mut group = c.benchmark_group("recovery");
    group.sample_size(10);
    for (name, exec) in modes() {
        let ops = Operators::new(dims).unwrap().with_execution(exec);
        let y = compressive_acquire_with(&ops, &phantom.volume, &plan, sigma, 3).unwrap();
        group.bench_function(format!("bpdn_50_iterations/{name}"), |b| {
            b.iter(|| solve_bpdn(&ops, &y, &plan, eps, &cfg).unwrap())
        });
        group.bench_function(format!("min_energy/{name}"), |b| {
            b.iter(|| solve_me(&ops, &y, &plan, &SolverConfig::default()).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, recovery);
criterion_main!(benches);
