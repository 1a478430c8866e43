use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use lmg_core::dynamics::{evolve_lindblad, IntegratorConfig, TimeDependentHamiltonian};
use lmg_core::hilbert::{ghz_state, plus_state, HilbertSpace, Operator};
use lmg_core::model::{lindblad_operators, lmg_parts, mhz, DeviceSpec, NoiseSpec, QuenchSchedule};
use lmg_core::observables::{wigner_with, WignerGrid};
use lmg_core::par::{parallel_available, Exec};
use lmg_core::spectrum::{degeneracy_scan_with, SpectrumTarget};

fn strategies() -> Vec<(&'static str, Exec)> {
    let mut v = vec![("sequential", Exec::Sequential)];
    if parallel_available() {
        v.push(("parallel", Exec::Parallel));
    }
    v
}

fn lindblad(c: &mut Criterion) {
    let mut group = c.benchmark_group("lindblad_1ns");
    group.sample_size(10);
    for n in [4, 6] {
        let space = HilbertSpace::full_spin(n).unwrap();
        let device = DeviceSpec::homogeneous(n, mhz(20.0), mhz(5796.0), mhz(5689.5)).unwrap();
        let ops: Vec<Operator> =
            lindblad_operators(&device, &NoiseSpec { enable_t1: true, enable_dephasing: true }, space)
                .unwrap()
                .ops
                .into_iter()
                .map(|c| c.operator)
                .collect();
        let h =
            TimeDependentHamiltonian::quench(&lmg_parts(space, mhz(3.8), 1.0).unwrap(), QuenchSchedule::reference());
        let rho0 = plus_state(space).to_density();
        for (label, exec) in strategies() {
            let cfg = IntegratorConfig::uniform(0.01, 1.0, 1.0).unwrap().with_exec(exec);
            group.bench_with_input(BenchmarkId::new(label, n), &n, |b, _| {
                b.iter(|| evolve_lindblad(&h, &rho0, &ops, &cfg).unwrap())
            });
        }
    }
    group.finish();
}

fn wigner_grid(c: &mut Criterion) {
    let mut group = c.benchmark_group("wigner_61x121");
    group.sample_size(10);
    let (thetas, phis) = WignerGrid::axes(61, 121);
    for n in [6, 10] {
        let state = ghz_state(HilbertSpace::full_spin(n).unwrap(), 0.0);
        for (label, exec) in strategies() {
            group.bench_with_input(BenchmarkId::new(label, n), &n, |b, _| {
                b.iter(|| wigner_with(exec, &state, &thetas, &phis, false).unwrap())
            });
        }
    }
    group.finish();
}

fn spectrum_scan(c: &mut Criterion) {
    let mut group = c.benchmark_group("spectrum_scan_151");
    let lam = mhz(3.8);
    let omegas: Vec<f64> = (0..151).map(|k| 3.0 * lam * k as f64 / 150.0).collect();
    for n in [10, 20] {
        for (label, exec) in strategies() {
            group.bench_with_input(BenchmarkId::new(label, n), &n, |b, &n| {
                b.iter(|| degeneracy_scan_with(exec, n, lam, &omegas, SpectrumTarget::HighestOfHeff).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, lindblad, wigner_grid, spectrum_scan);
criterion_main!(benches);
