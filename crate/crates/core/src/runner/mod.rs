//! Experiment orchestration: config resolution, quench dispatch, observable
//! tables and the run manifest.

pub mod config;
pub mod output;
pub mod pairswap;
pub mod presets;

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::dynamics::{evolve_lindblad, evolve_pure, TimeDependentHamiltonian, TrajectoryRecord};
use crate::hilbert::{plus_state, HilbertSpace, Operator, QuantumState};
use crate::model::{circuit_qed_parts, dispersive_dressing, ghz, lindblad_operators, lmg_parts, to_mhz, DriveSplit};
use crate::observables::{
    apply_readout_error, bitstring_distribution, coherence_element, default_beta_grid, excitation_populations,
    fringe_fit, ghz_fidelity, longitudinal_from_populations, populations_from_distribution, transverse_correlations,
    wigner_with, FringeFit, GhzPhase, WignerGrid,
};
use crate::par::Exec;
use crate::spectrum::{
    adiabaticity_overlap, degeneracy_scan_with, AdiabaticityReport, SpectrumScan, DEFAULT_DEGENERACY_TOL,
};
use crate::{Error, Result};

pub use config::{ExperimentConfig, ModelKind, ResolvedConfig};
pub use output::{resolve_output_dir, Cell, FileRecord, Table, OUT_DIR_ENV};
pub use pairswap::{pair_swap_scan, run_pair_swap, LineFit, PairSwapPoint, PairSwapResult, PairSwapSettings};
pub use presets::{comparison_preset, preset, PRESET_NAMES};

/// Observables every quench run records at each checkpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointSummary {
    pub time: f64,
    pub populations: Vec<f64>,
    /// Absent for a single qubit.
    pub c2l: Option<f64>,
    pub ghz_fidelity: f64,
    pub ghz_gamma: f64,
    pub coherence_abs: f64,
    pub coherence_arg: f64,
    pub norm_or_trace: f64,
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub config: ExperimentConfig,
    pub tables: Vec<Table>,
    pub summaries: Vec<CheckpointSummary>,
    pub fringe_fits: Vec<(f64, FringeFit)>,
    pub adiabaticity: Option<AdiabaticityReport>,
    pub pair_swap: Option<PairSwapResult>,
    pub norm_drift: Option<f64>,
    pub steps: usize,
    pub warnings: Vec<String>,
}

impl RunResult {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: ExperimentConfig,
    pub code_version: String,
    pub started_unix_s: f64,
    pub wall_clock_s: f64,
    pub norm_drift: Option<f64>,
    pub rk4_steps: usize,
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair_swap_fit: Option<LineFit>,
    pub files: Vec<FileRecord>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

/// Quench Hamiltonian, initial state and collapse operators of a resolved config.
pub struct QuenchProblem {
    pub hamiltonian: TimeDependentHamiltonian,
    pub initial: QuantumState,
    pub collapse: Vec<Operator>,
    pub warnings: Vec<String>,
}

fn effective_split(space: HilbertSpace, lam: f64, drive_sign: f64) -> Result<DriveSplit> {
    let parts = lmg_parts(space, lam, 1.0)?;
    Ok(DriveSplit { static_part: parts.static_part, drive: parts.drive.scale(drive_sign) })
}

pub fn build_quench(r: &ResolvedConfig) -> Result<QuenchProblem> {
    let (space, split) = match r.model {
        ModelKind::EffectiveDicke => {
            let s = HilbertSpace::dicke(r.n_qubits)?;
            (s, effective_split(s, r.lam, r.schedule.drive_sign)?)
        }
        ModelKind::EffectiveFull => {
            let s = HilbertSpace::full_spin(r.n_qubits)?;
            (s, effective_split(s, r.lam, r.schedule.drive_sign)?)
        }
        ModelKind::CircuitQed => {
            let device = r.device.as_ref().expect("resolved circuit_qed config has a device");
            let split = circuit_qed_parts(device, r.schedule.drive_sign, r.n_max)?;
            (split.static_part.space(), split)
        }
    };
    let mut initial = plus_state(space);
    if r.model == ModelKind::CircuitQed && r.dressing {
        let u = dispersive_dressing(r.device.as_ref().expect("device"), r.n_max)?;
        let psi = &u * initial.as_vector().expect("pure");
        initial = QuantumState::pure_normalized(space, psi)?;
    }
    let mut collapse = Vec::new();
    let mut warnings = Vec::new();
    if r.noise.is_enabled() {
        let set = lindblad_operators(r.device.as_ref().expect("noise needs a device"), &r.noise, space)?;
        collapse = set.ops.into_iter().map(|c| c.operator).collect();
        warnings = set.warnings;
    }
    Ok(QuenchProblem { hamiltonian: TimeDependentHamiltonian::quench(&split, r.schedule), initial, collapse, warnings })
}

/// Integrates the quench of a resolved config.
pub fn evolve(r: &ResolvedConfig, exec: Exec) -> Result<(QuenchProblem, TrajectoryRecord)> {
    let p = build_quench(r)?;
    let cfg = r.integrator.clone().with_exec(exec);
    let traj = if r.noise.is_enabled() {
        evolve_lindblad(&p.hamiltonian, &p.initial.to_density(), &p.collapse, &cfg)?
    } else {
        evolve_pure(&p.hamiltonian, &p.initial, &cfg)?
    };
    Ok((p, traj))
}

pub fn summarize(time: f64, state: &QuantumState) -> CheckpointSummary {
    let populations = excitation_populations(state);
    let c2l = longitudinal_from_populations(&populations).ok();
    let ghz = ghz_fidelity(state, GhzPhase::Optimize);
    let c = coherence_element(state);
    CheckpointSummary {
        time,
        populations,
        c2l,
        ghz_fidelity: ghz.overlap,
        ghz_gamma: ghz.gamma,
        coherence_abs: c.norm(),
        coherence_arg: c.arg(),
        norm_or_trace: state.norm_or_trace(),
    }
}

fn population_header(n: usize) -> Vec<String> {
    std::iter::once("time_ns".to_string()).chain((0..=n).map(|k| format!("p_{k}"))).collect()
}

fn at_times<'a>(traj: &'a TrajectoryRecord, times: &[f64]) -> Vec<&'a (f64, QuantumState)> {
    traj.checkpoints.iter().filter(|(t, _)| times.iter().any(|&s| (s - t).abs() < 1e-9)).collect()
}

/// Runs the config in memory.
pub fn simulate(config: &ExperimentConfig, exec: Exec) -> Result<RunResult> {
    let r = config.resolve()?;
    let obs = &config.observables;
    let n = r.n_qubits;
    let mut out = RunResult {
        config: config.clone(),
        tables: Vec::new(),
        summaries: Vec::new(),
        fringe_fits: Vec::new(),
        adiabaticity: None,
        pair_swap: None,
        norm_drift: None,
        steps: 0,
        warnings: Vec::new(),
    };
    if obs.needs_quench() {
        let (problem, traj) = evolve(&r, exec)?;
        out.warnings.extend(problem.warnings.iter().cloned());
        out.warnings.extend(traj.warnings.iter().cloned());
        out.norm_drift = Some(traj.norm_drift);
        out.steps = traj.steps;
        out.summaries = traj.checkpoints.iter().map(|(t, s)| summarize(*t, s)).collect();

        if obs.populations {
            let mut drive = Table::new("drive", &["time_ns", "omega_mhz_over_2pi"]);
            let mut pops = Table::with_header("populations", population_header(n));
            for s in &out.summaries {
                drive.push(vec![Cell::Num(s.time), Cell::Num(to_mhz(r.schedule.omega_at(s.time)))]);
                pops.push(
                    std::iter::once(Cell::Num(s.time)).chain(s.populations.iter().map(|&p| Cell::Num(p))).collect(),
                );
            }
            out.tables.push(drive);
            out.tables.push(pops);
        }
        if obs.correlations {
            let mut corr = Table::new(
                "correlations",
                &[
                    "time_ns",
                    "c2l",
                    "ghz_fidelity",
                    "ghz_gamma",
                    "coherence_abs",
                    "coherence_arg",
                    "p_all_g",
                    "p_all_e",
                    "norm_or_trace",
                ],
            );
            for s in &out.summaries {
                corr.push(vec![
                    Cell::Num(s.time),
                    Cell::Num(s.c2l.unwrap_or(f64::NAN)),
                    Cell::Num(s.ghz_fidelity),
                    Cell::Num(s.ghz_gamma),
                    Cell::Num(s.coherence_abs),
                    Cell::Num(s.coherence_arg),
                    Cell::Num(s.populations[0]),
                    Cell::Num(s.populations[n]),
                    Cell::Num(s.norm_or_trace),
                ]);
            }
            out.tables.push(corr);
        }
        if obs.readout_error {
            let device = r.device.as_ref().expect("readout needs a device");
            let mut header = population_header(n);
            header.push("c2l".into());
            let mut ro = Table::with_header("readout", header);
            for (t, s) in &traj.checkpoints {
                let noisy = apply_readout_error(&bitstring_distribution(s), device)?;
                let p = populations_from_distribution(&noisy, n);
                let c2l = longitudinal_from_populations(&p).unwrap_or(f64::NAN);
                ro.push(
                    std::iter::once(Cell::Num(*t))
                        .chain(p.iter().map(|&x| Cell::Num(x)))
                        .chain([Cell::Num(c2l)])
                        .collect(),
                );
            }
            out.tables.push(ro);
        }
        if let Some(f) = &obs.fringes {
            let betas = default_beta_grid(f.n_beta);
            let picked: Vec<&(f64, QuantumState)> = match &f.at_ns {
                Some(at) => at_times(&traj, at),
                None => traj.checkpoints.iter().collect(),
            };
            let mut curve = Table::new("fringes", &["time_ns", "beta", "transverse_correlation"]);
            let mut fits = Table::new(
                "fringe_fit",
                &["time_ns", "amplitude", "phase", "offset", "visibility", "coherence_magnitude", "residual_rms"],
            );
            for (t, s) in picked {
                let values = transverse_correlations(s, &betas);
                for (b, v) in betas.iter().zip(&values) {
                    curve.push(vec![Cell::Num(*t), Cell::Num(*b), Cell::Num(*v)]);
                }
                let fit = fringe_fit(&betas, &values, n)?;
                fits.push(vec![
                    Cell::Num(*t),
                    Cell::Num(fit.amplitude),
                    Cell::Num(fit.phase),
                    Cell::Num(fit.offset),
                    Cell::Num(fit.visibility),
                    Cell::Num(fit.coherence_magnitude),
                    Cell::Num(fit.residual_rms),
                ]);
                out.fringe_fits.push((*t, fit));
            }
            out.tables.push(curve);
            out.tables.push(fits);
        }
        if let Some(w) = &obs.wigner {
            let (thetas, phis) = WignerGrid::axes(w.n_theta, w.n_phi);
            let mut table = Table::new("wigner", &["time_ns", "theta", "phi", "w_raw", "w_normalized"]);
            for (t, s) in at_times(&traj, &w.at_ns) {
                let raw = wigner_with(exec, s, &thetas, &phis, false)?;
                let scale = 0.5f64.powi(n as i32);
                for (i, th) in thetas.iter().enumerate() {
                    for (j, ph) in phis.iter().enumerate() {
                        let v = raw.values[i][j];
                        table.push(vec![
                            Cell::Num(*t),
                            Cell::Num(*th),
                            Cell::Num(*ph),
                            Cell::Num(v),
                            Cell::Num(v * scale),
                        ]);
                    }
                }
            }
            out.tables.push(table);
        }
        if obs.adiabaticity {
            let rep = adiabaticity_overlap(&traj, &problem.hamiltonian, true, DEFAULT_DEGENERACY_TOL)?;
            let mut table = Table::new("adiabaticity", &["time_ns", "overlap", "splitting_mhz_over_2pi", "target_dim"]);
            for i in 0..rep.times.len() {
                table.push(vec![
                    Cell::Num(rep.times[i]),
                    Cell::Num(rep.overlaps[i]),
                    Cell::Num(to_mhz(rep.splittings[i])),
                    Cell::Int(rep.target_dims[i] as i64),
                ]);
            }
            out.tables.push(table);
            out.adiabaticity = Some(rep);
        }
    }
    if let Some(s) = &obs.spectrum {
        let omegas: Vec<f64> =
            (0..s.n_points).map(|k| s.control_max * r.lam.abs() * k as f64 / (s.n_points - 1) as f64).collect();
        let scan = degeneracy_scan_with(exec, n, r.lam, &omegas, s.target)?;
        out.tables.extend(spectrum_tables(&scan));
    }
    if let Some(p) = &obs.pair_swap {
        let base = match &r.device {
            Some(d) => d.clone(),
            None => crate::model::DeviceSpec::reference_six_qubit(),
        };
        let settings = PairSwapSettings {
            duration: p.duration_ns,
            dt: p.dt_ns,
            sample_spacing: p.sample_spacing_ns,
            n_max: p.n_max,
        };
        let ops: Vec<f64> = p.operating_points_ghz_over_2pi.iter().map(|&f| ghz(f)).collect();
        let res = pair_swap_scan(&base, p.qubits, &ops, &settings)?;
        out.tables.extend(res.tables());
        out.pair_swap = Some(res);
    }
    Ok(out)
}

/// Long-format levels plus the extremal-pair gaps.
pub fn spectrum_tables(scan: &SpectrumScan) -> Vec<Table> {
    let mut levels =
        Table::new("spectrum", &["control", "omega_mhz_over_2pi", "level", "energy_mhz_over_2pi", "parity"]);
    let mut gaps = Table::new(
        "spectrum_gaps",
        &["control", "omega_mhz_over_2pi", "splitting_mhz_over_2pi", "gap_to_next_mhz_over_2pi"],
    );
    for p in &scan.points {
        for (k, (e, par)) in p.eigenvalues.iter().zip(&p.parities).enumerate() {
            levels.push(vec![
                Cell::Num(p.control),
                Cell::Num(to_mhz(p.omega)),
                Cell::Int(k as i64),
                Cell::Num(to_mhz(*e)),
                Cell::Int(par.round() as i64),
            ]);
        }
        gaps.push(vec![
            Cell::Num(p.control),
            Cell::Num(to_mhz(p.omega)),
            Cell::Num(to_mhz(p.splitting)),
            Cell::Num(to_mhz(p.gap_to_next)),
        ]);
    }
    vec![levels, gaps]
}

/// Wigner function of a single state as a long-format table.
pub fn wigner_table(state: &QuantumState, n_theta: usize, n_phi: usize, exec: Exec) -> Result<Table> {
    let (thetas, phis) = WignerGrid::axes(n_theta, n_phi);
    let raw = wigner_with(exec, state, &thetas, &phis, false)?;
    let scale = 0.5f64.powi(state.space().n_qubits() as i32);
    let mut table = Table::new("wigner", &["theta", "phi", "w_raw", "w_normalized"]);
    for (i, th) in thetas.iter().enumerate() {
        for (j, ph) in phis.iter().enumerate() {
            let v = raw.values[i][j];
            table.push(vec![Cell::Num(*th), Cell::Num(*ph), Cell::Num(v), Cell::Num(v * scale)]);
        }
    }
    Ok(table)
}

fn now_unix() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

/// Writes tables and a manifest listing each file with its checksum.
pub fn write_outputs(
    dir: &Path,
    config: &ExperimentConfig,
    tables: &[Table],
    started: f64,
    wall_clock_s: f64,
    result: Option<&RunResult>,
) -> Result<RunManifest> {
    let files = output::write_tables(dir, tables)?;
    let manifest = RunManifest {
        config: config.clone(),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        started_unix_s: started,
        wall_clock_s,
        norm_drift: result.and_then(|r| r.norm_drift),
        rk4_steps: result.map(|r| r.steps).unwrap_or(0),
        warnings: result.map(|r| r.warnings.clone()).unwrap_or_default(),
        pair_swap_fit: result.and_then(|r| r.pair_swap.as_ref()).and_then(|p| p.regression),
        files,
    };
    let text = serde_json::to_string_pretty(&manifest)?;
    std::fs::write(dir.join(MANIFEST_FILE), text)?;
    Ok(manifest)
}

pub fn output_dir_for(config: &ExperimentConfig) -> PathBuf {
    resolve_output_dir(config.output_dir.as_deref(), &config.name)
}

/// Simulates `config` and writes its CSVs and manifest.
pub fn run(config: &ExperimentConfig) -> Result<RunManifest> {
    run_with(config, Exec::default())
}

pub fn run_with(config: &ExperimentConfig, exec: Exec) -> Result<RunManifest> {
    let started = now_unix();
    let clock = Instant::now();
    let result = simulate(config, exec)?;
    let dir = output_dir_for(config);
    write_outputs(&dir, config, &result.tables, started, clock.elapsed().as_secs_f64(), Some(&result))
}

#[derive(Clone, Debug)]
pub struct Comparison {
    pub first: RunResult,
    pub second: RunResult,
    pub table: Table,
    pub max_population_delta: f64,
    pub max_c2l_delta: f64,
}

/// Runs two configs with one schedule and checkpoint grid and tabulates
/// `second - first` per checkpoint.
pub fn run_comparison(first: &ExperimentConfig, second: &ExperimentConfig, exec: Exec) -> Result<Comparison> {
    let (ra, rb) = (first.resolve()?, second.resolve()?);
    if ra.n_qubits != rb.n_qubits {
        return Err(Error::config("n_qubits", "compared configs must have the same register size"));
    }
    if ra.schedule != rb.schedule {
        return Err(Error::config("schedule", "compared configs must share the quench schedule"));
    }
    let (ta, tb) = (&ra.integrator.checkpoint_times, &rb.integrator.checkpoint_times);
    if ta.len() != tb.len() || ta.iter().zip(tb).any(|(a, b)| (a - b).abs() > 1e-9) {
        return Err(Error::MismatchedCheckpoints);
    }
    let force = |c: &ExperimentConfig| {
        let mut c = c.clone();
        c.observables.populations = true;
        c.observables.correlations = true;
        c
    };
    let a = simulate(&force(first), exec)?;
    let b = simulate(&force(second), exec)?;
    let n = ra.n_qubits;
    let mut header: Vec<String> = [
        "time_ns",
        "c2l_first",
        "c2l_second",
        "delta_c2l",
        "ghz_first",
        "ghz_second",
        "delta_ghz",
        "delta_coherence_abs",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend((0..=n).map(|k| format!("delta_p_{k}")));
    let mut table = Table::with_header("comparison", header);
    let (mut max_p, mut max_c) = (0.0f64, 0.0f64);
    for (sa, sb) in a.summaries.iter().zip(&b.summaries) {
        let (ca, cb) = (sa.c2l.unwrap_or(f64::NAN), sb.c2l.unwrap_or(f64::NAN));
        let mut row = vec![
            Cell::Num(sa.time),
            Cell::Num(ca),
            Cell::Num(cb),
            Cell::Num(cb - ca),
            Cell::Num(sa.ghz_fidelity),
            Cell::Num(sb.ghz_fidelity),
            Cell::Num(sb.ghz_fidelity - sa.ghz_fidelity),
            Cell::Num(sb.coherence_abs - sa.coherence_abs),
        ];
        for (pa, pb) in sa.populations.iter().zip(&sb.populations) {
            row.push(Cell::Num(pb - pa));
            max_p = max_p.max((pb - pa).abs());
        }
        if (cb - ca).is_finite() {
            max_c = max_c.max((cb - ca).abs());
        }
        table.push(row);
    }
    Ok(Comparison { first: a, second: b, table, max_population_delta: max_p, max_c2l_delta: max_c })
}

impl Comparison {
    /// Writes the side-by-side table and a manifest echoing the first config.
    pub fn write(&self, dir: &Path, started: f64, wall_clock_s: f64) -> Result<RunManifest> {
        let mut m =
            write_outputs(dir, &self.first.config, std::slice::from_ref(&self.table), started, wall_clock_s, None)?;
        m.norm_drift = match (self.first.norm_drift, self.second.norm_drift) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        };
        m.rk4_steps = self.first.steps + self.second.steps;
        m.warnings = self.first.warnings.iter().chain(&self.second.warnings).cloned().collect();
        std::fs::write(dir.join(MANIFEST_FILE), serde_json::to_string_pretty(&m)?)?;
        Ok(m)
    }
}
