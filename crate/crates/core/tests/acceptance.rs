//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Run a subset with `cargo test --test acceptance -- 4 7`.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::{num_complex::Complex, FftPlanner};

use lmg_core::dynamics::{evolve_lindblad, evolve_pure, IntegratorConfig, TimeDependentHamiltonian, TrajectoryRecord};
use lmg_core::hilbert::{
    basis_state, dicke_isometry, ghz_state, parity_operator, pauli_string, Axis, HilbertSpace, Operator, QuantumState,
};
use lmg_core::model::{lmg_hamiltonian, mhz, DeviceSpec};
use lmg_core::observables::{
    default_beta_grid, excitation_populations, fringe_fit, ghz_fidelity, longitudinal_correlation,
    transverse_correlations, wigner, GhzPhase, WignerGrid,
};
use lmg_core::par::Exec;
use lmg_core::runner::config::{DeviceConfig, DevicePreset, ModelKind, ObservableRequests};
use lmg_core::runner::{self, preset, ExperimentConfig, PairSwapSettings, RunResult};
use lmg_core::spectrum::{exact_drive_shifts, perturbative_shifts};
use lmg_core::C64;
use nalgebra::DMatrix;

/// Final `𝒞₂ᴸ` and GHZ fidelity of the ideal six-qubit quench, from the
/// `dt = 0.01 ns` run that agrees with its step-halved rerun to 1e-6.
const FROZEN_IDEAL_C2L: f64 = 0.973102616789;
const FROZEN_IDEAL_GHZ: f64 = 0.960212345819;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn quench(config: &ExperimentConfig) -> TrajectoryRecord {
    let r = config.resolve().expect("valid config");
    runner::evolve(&r, Exec::default()).expect("evolution").1
}

fn effective(model: ModelKind, n: usize) -> ExperimentConfig {
    let mut c = preset("s9").unwrap();
    c.model = model;
    c.n_qubits = n;
    c.observables = ObservableRequests::default();
    c
}

fn parity_expectation(state: &QuantumState) -> f64 {
    state.expectation(&parity_operator(state.space())).unwrap().re
}

/// Index of the largest non-constant Fourier harmonic of periodic samples.
fn dominant_harmonic(samples: &[f64]) -> usize {
    let mut buf: Vec<Complex<f64>> = samples.iter().map(|&x| Complex::new(x, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    (1..buf.len() / 2).max_by(|&a, &b| buf[a].norm().total_cmp(&buf[b].norm())).unwrap()
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for n in 2..=8 {
        for space in [HilbertSpace::dicke(n).unwrap(), HilbertSpace::full_spin(n).unwrap()] {
            let p = parity_operator(space);
            for _ in 0..20 {
                let (omega, lam) = (rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5));
                let h = lmg_hamiltonian(space, omega, lam, 1.0).unwrap();
                worst = worst.max(h.commutator_norm(&p).unwrap());
            }
        }
    }
    let mut drift: f64 = 0.0;
    for (model, n) in [(ModelKind::EffectiveDicke, 6), (ModelKind::EffectiveFull, 4)] {
        let traj = quench(&effective(model, n));
        let p0 = parity_expectation(&traj.checkpoints[0].1);
        for (_, s) in &traj.checkpoints {
            drift = drift.max((parity_expectation(s) - p0).abs());
        }
    }
    outcome(
        worst < 1e-12 && drift < 1e-6,
        format!("max |[H, P]| = {worst:.2e} (< 1e-12), parity drift = {drift:.2e} (< 1e-6)"),
    )
}

fn criterion_2() -> Outcome {
    let dicke = quench(&effective(ModelKind::EffectiveDicke, 4));
    let full = quench(&effective(ModelKind::EffectiveFull, 4));
    let iso = dicke_isometry(4);
    let deficit = 1.0 - iso.embed_state(dicke.final_state()).unwrap().fidelity(full.final_state()).unwrap();
    let betas = default_beta_grid(25);
    let (thetas, phis) = WignerGrid::axes(7, 12);
    let mut worst: f64 = 0.0;
    let mut diff = |a: &[f64], b: &[f64]| {
        for (x, y) in a.iter().zip(b) {
            worst = worst.max((x - y).abs());
        }
    };
    for ((_, a), (_, b)) in dicke.checkpoints.iter().zip(&full.checkpoints) {
        diff(&excitation_populations(a), &excitation_populations(b));
        diff(&[longitudinal_correlation(a).unwrap()], &[longitudinal_correlation(b).unwrap()]);
        let (ga, gb) = (ghz_fidelity(a, GhzPhase::Optimize), ghz_fidelity(b, GhzPhase::Optimize));
        diff(&[ga.overlap, ga.population_form], &[gb.overlap, gb.population_form]);
        diff(&transverse_correlations(a, &betas), &transverse_correlations(b, &betas));
        diff(&[parity_expectation(a)], &[parity_expectation(b)]);
    }
    let (wa, wb) = (
        wigner(dicke.final_state(), &thetas, &phis, false).unwrap(),
        wigner(full.final_state(), &thetas, &phis, false).unwrap(),
    );
    diff(&wa.values.concat(), &wb.values.concat());
    outcome(
        deficit < 1e-8 && worst < 1e-8,
        format!("final fidelity deficit = {deficit:.2e}, max observable difference = {worst:.2e} (both < 1e-8)"),
    )
}

fn homogeneous_circuit(n_max: usize) -> ExperimentConfig {
    let mut c = preset("s8").unwrap();
    c.noise = Default::default();
    c.observables = ObservableRequests::default();
    let mut d = DeviceConfig::preset(DevicePreset::Homogeneous);
    d.xi_mhz_over_2pi = Some(vec![20.0]);
    d.resonator_ghz_over_2pi = Some(5.796);
    d.operating_point_ghz_over_2pi = Some(5.6895);
    c.device = Some(d);
    c.n_max = Some(n_max);
    c
}

fn max_population_gap(a: &TrajectoryRecord, b: &TrajectoryRecord) -> f64 {
    let mut worst: f64 = 0.0;
    for ((ta, sa), (tb, sb)) in a.checkpoints.iter().zip(&b.checkpoints) {
        assert!((ta - tb).abs() < 1e-9);
        for (x, y) in excitation_populations(sa).iter().zip(excitation_populations(sb)) {
            worst = worst.max((x - y).abs());
        }
    }
    worst
}

fn criterion_3() -> Outcome {
    let c3 = quench(&homogeneous_circuit(3));
    let c4 = quench(&homogeneous_circuit(4));
    let mut eff = effective(ModelKind::EffectiveDicke, 6);
    eff.lambda_mhz_over_2pi = 20.0 * 20.0 / 106.5;
    let d = quench(&eff);
    let model_gap = max_population_gap(&c3, &d);
    let cutoff_gap = max_population_gap(&c3, &c4);
    outcome(
        model_gap < 0.05 && cutoff_gap < 1e-3,
        format!("resonator model vs Dicke max |dP| = {model_gap:.4} (< 0.05), n_max 3 vs 4 max |dP| = {cutoff_gap:.2e} (< 1e-3)"),
    )
}

fn criterion_4() -> Outcome {
    let base = preset("s9").unwrap();
    let mut half = base.clone();
    half.integrator.dt_ns /= 2.0;
    let finals = |c: &ExperimentConfig| {
        let t = quench(c);
        let s = t.final_state();
        (longitudinal_correlation(s).unwrap(), ghz_fidelity(s, GhzPhase::Optimize).overlap)
    };
    let (c2l, f) = finals(&base);
    let (c2l_h, f_h) = finals(&half);
    let step = (c2l - c2l_h).abs().max((f - f_h).abs());
    let frozen = (c2l - FROZEN_IDEAL_C2L).abs().max((f - FROZEN_IDEAL_GHZ).abs());
    outcome(
        c2l >= 0.9 && f >= 0.9 && step < 1e-6 && frozen < 1e-6,
        format!(
            "C2L(150) = {c2l:.6} (>= 0.90), GHZ fidelity = {f:.6} (>= 0.90), step-halving change = {step:.1e}, frozen-value change = {frozen:.1e} (< 1e-6)"
        ),
    )
}

fn criterion_5(s8: &RunResult) -> Outcome {
    let last = s8.summaries.last().unwrap();
    let c2l = last.c2l.unwrap();
    let p0: Vec<f64> = s8.summaries.iter().map(|s| s.populations[0]).collect();
    let mut running = f64::NEG_INFINITY;
    let mut worst_drop: f64 = 0.0;
    for &p in &p0 {
        running = running.max(p);
        worst_drop = worst_drop.max(running - p);
    }
    let vis: Vec<f64> = s8.fringe_fits.iter().map(|(_, f)| f.visibility).collect();
    let (peak_i, peak) = vis.iter().cloned().enumerate().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
    let (first, fin) = (vis[0], *vis.last().unwrap());
    let rises_then_falls = peak_i > 0 && peak_i + 1 < vis.len() && peak > first && peak > fin;
    outcome(
        (0.52..=0.82).contains(&c2l) && worst_drop <= 0.02 && rises_then_falls,
        format!(
            "C2L(150) = {c2l:.4} (in [0.52, 0.82]), largest P0 drop = {worst_drop:.4} (<= 0.02), visibility {first:.3} -> peak {peak:.3} at {} ns -> {fin:.3}",
            s8.fringe_fits[peak_i].0
        ),
    )
}

fn criterion_6() -> Outcome {
    let lam = 1.0;
    let omega = 0.05 * lam;
    let eta = perturbative_shifts(6, omega, lam).unwrap();
    let exact = exact_drive_shifts(6, omega, lam).unwrap();
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for (i, m) in eta.m_values.iter().enumerate() {
        let rel = ((exact[i] - eta.eta[i]) / eta.eta[i]).abs();
        worst = worst.max(rel);
        parts.push(format!("m={m:+}: {:.3e}/{:.3e}", exact[i], eta.eta[i]));
    }
    let symmetric = eta.eta_at(3.0) == eta.eta_at(-3.0);
    outcome(
        worst < 0.05 && symmetric,
        format!(
            "max relative error = {worst:.3} (< 0.05), eta_J == eta_-J: {symmetric}; exact/eta {}",
            parts.join(", ")
        ),
    )
}

fn criterion_7() -> Outcome {
    let space = HilbertSpace::full_spin(6).unwrap();
    let mixed = QuantumState::density(space, DMatrix::<C64>::identity(64, 64) / C64::new(64.0, 0.0)).unwrap();
    let (thetas, phis) = WignerGrid::axes(61, 121);
    let w = wigner(&mixed, &thetas, &phis, false).unwrap();
    let flat_err = w.values.iter().flatten().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
    let ring: Vec<f64> = (0..120).map(|k| 2.0 * PI * k as f64 / 120.0).collect();
    let cut = wigner(&ghz_state(space, 0.0), &[PI / 2.0], &ring, false).unwrap();
    let k = dominant_harmonic(&cut.values[0]);
    let min = cut.values[0].iter().cloned().fold(f64::INFINITY, f64::min);
    outcome(
        flat_err < 1e-10 && k == 6 && min < 0.0,
        format!("mixed-state |W - 1| = {flat_err:.1e} (< 1e-10), GHZ equator harmonic k = {k} (6), minimum = {min:.3} (< 0)"),
    )
}

fn criterion_8() -> Outcome {
    let device = DeviceSpec::reference_six_qubit();
    let ops: Vec<f64> = [5.6895, 5.66, 5.60].iter().map(|&f| lmg_core::model::ghz(f)).collect();
    let res = runner::pair_swap_scan(&device, [1, 4], &ops, &PairSwapSettings::default()).unwrap();
    let fit = res.regression.unwrap();
    let slope_err = (fit.slope / device.xi[4] - 1.0).abs();
    let intercept_err = (fit.intercept - device.crosstalk_b[1][4]).abs();
    let couplings: Vec<String> = res
        .points
        .iter()
        .map(|p| format!("{:.3}/{:.3}", p.fitted_coupling / mhz(1.0), p.predicted_coupling / mhz(1.0)))
        .collect();
    outcome(
        slope_err < 0.05 && intercept_err < mhz(0.1),
        format!(
            "slope = {:.3} MHz (xi_5 = 19.88, rel err {slope_err:.3} < 0.05), intercept = {:.3} MHz (b = -0.27, err {:.3} < 0.1); fitted/second-order couplings {}",
            fit.slope / mhz(1.0),
            fit.intercept / mhz(1.0),
            intercept_err / mhz(1.0),
            couplings.join(", ")
        ),
    )
}

fn criterion_9(s8: &RunResult) -> Outcome {
    let trace_drift = s8.norm_drift.unwrap();

    let q = HilbertSpace::full_spin(1).unwrap();
    let t1: f64 = 30.0;
    let decay = pauli_string(q, &[(0, Axis::Minus)]).unwrap().scale((1.0 / t1).sqrt());
    let h = TimeDependentHamiltonian::constant(&Operator::zeros(q));
    let cfg = IntegratorConfig::uniform(0.01, 5.0, 150.0).unwrap();
    let excited = basis_state(q, &[1], 0).unwrap().to_density();
    let traj = evolve_lindblad(&h, &excited, &[decay], &cfg).unwrap();
    let t1_err =
        traj.checkpoints.iter().map(|(t, s)| (s.basis_probabilities()[1] - (-t / t1).exp()).abs()).fold(0.0, f64::max);

    let r = effective(ModelKind::EffectiveFull, 4).resolve().unwrap();
    let problem = runner::build_quench(&r).unwrap();
    let pure = evolve_pure(&problem.hamiltonian, &problem.initial, &r.integrator).unwrap();
    let open = evolve_lindblad(&problem.hamiltonian, &problem.initial.to_density(), &[], &r.integrator).unwrap();
    let closed_err = pure
        .checkpoints
        .iter()
        .zip(&open.checkpoints)
        .map(|((_, a), (_, b))| (a.density_matrix() - b.density_matrix()).camax())
        .fold(0.0, f64::max);
    outcome(
        trace_drift < 1e-6 && t1_err < 1e-6 && closed_err < 1e-8,
        format!(
            "trace drift = {trace_drift:.1e} (< 1e-6), T1 decay error = {t1_err:.1e} (< 1e-6), closed-limit error = {closed_err:.1e} (< 1e-8)"
        ),
    )
}

fn criterion_10() -> Outcome {
    let traj = quench(&preset("s12").unwrap());
    let last = traj.final_state();
    let c2l = longitudinal_correlation(last).unwrap();
    let betas: Vec<f64> = (0..200).map(|k| 2.0 * PI * k as f64 / 200.0).collect();
    let k = dominant_harmonic(&transverse_correlations(last, &betas));
    let period = 2.0 * PI / k as f64;
    outcome(
        c2l >= 0.9 && k == 10,
        format!("C2L(150) = {c2l:.4} (>= 0.90), dominant fringe period = {period:.4} (pi/5 = {:.4})", PI / 5.0),
    )
}

fn criterion_11() -> Outcome {
    let betas = default_beta_grid(25);
    let (a, gamma, c) = (0.8, 0.7, 0.05);
    let clean: Vec<f64> = betas.iter().map(|b| a * (6.0 * b - gamma).cos() + c).collect();
    let f = fringe_fit(&betas, &clean, 6).unwrap();
    let exact = (f.amplitude - a).abs().max((f.phase - gamma).abs()).max((f.offset - c).abs());
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let noisy: Vec<f64> = clean.iter().map(|v| v + rng.random_range(-0.01..0.01)).collect();
    let g = fringe_fit(&betas, &noisy, 6).unwrap();
    let noisy_err = (g.amplitude - a).abs().max((g.phase - gamma).abs()).max((g.offset - c).abs());
    outcome(
        exact < 1e-6 && noisy_err < 0.02,
        format!("noiseless parameter error = {exact:.1e} (< 1e-6), noisy parameter error = {noisy_err:.4} (< 0.02)"),
    )
}

fn guarded(f: impl FnOnce() -> Outcome) -> Outcome {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(o) => o,
        Err(e) => {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            outcome(false, format!("panicked: {msg}"))
        }
    }
}

fn main() {
    let wanted: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let selected = |i: usize| wanted.is_empty() || wanted.contains(&i);
    let titles = [
        "parity symmetry",
        "Dicke vs full register",
        "effective-model validity",
        "ideal six-qubit quench",
        "error-model quench",
        "perturbative drive shifts",
        "Wigner checks",
        "pair-swap calibration",
        "Lindblad correctness",
        "ten-qubit quench",
        "fringe-fit regression",
    ];
    let s8_clock = Instant::now();
    let s8 = if selected(5) || selected(9) {
        let mut c = preset("s8").unwrap();
        c.observables.wigner = None;
        Some(guarded_run(&c))
    } else {
        None
    };
    let s8_secs = s8_clock.elapsed().as_secs_f64();
    let mut failed = 0;
    let mut ran = 0;
    for i in 1..=11 {
        if !selected(i) {
            continue;
        }
        let clock = Instant::now();
        let o = match i {
            1 => guarded(criterion_1),
            2 => guarded(criterion_2),
            3 => guarded(criterion_3),
            4 => guarded(criterion_4),
            5 | 9 => match s8.as_ref().unwrap() {
                Ok(r) if i == 5 => guarded(|| criterion_5(r)),
                Ok(r) => guarded(|| criterion_9(r)),
                Err(e) => outcome(false, format!("error-model run failed: {e}")),
            },
            6 => guarded(criterion_6),
            7 => guarded(criterion_7),
            8 => guarded(criterion_8),
            10 => guarded(criterion_10),
            _ => guarded(criterion_11),
        };
        let shared = if i == 5 { s8_secs } else { 0.0 };
        ran += 1;
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {i:>2} {} [{}] {} ({:.1} s)",
            if o.pass { "PASS" } else { "FAIL" },
            titles[i - 1],
            o.detail,
            clock.elapsed().as_secs_f64() + shared
        );
    }
    println!("acceptance: {}/{ran} criteria passed", ran - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

fn guarded_run(c: &ExperimentConfig) -> Result<RunResult, String> {
    catch_unwind(AssertUnwindSafe(|| runner::simulate(c, Exec::default())))
        .map_err(|_| "panicked".to_string())?
        .map_err(|e| e.to_string())
}
