use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use lmg_core::hilbert::{ghz_state, HilbertSpace};
use lmg_core::model::{ghz, mhz, DeviceSpec};
use lmg_core::par::{self, Exec};
use lmg_core::runner::config::WignerRequest;
use lmg_core::runner::output::write_tables;
use lmg_core::runner::presets::COMPARISON_NAMES;
use lmg_core::runner::{self, comparison_preset, preset, ExperimentConfig, PairSwapSettings, Table, PRESET_NAMES};
use lmg_core::spectrum::{degeneracy_scan_with, exact_drive_shifts, perturbative_shifts, SpectrumTarget};
use lmg_core::Error;

/// Driven LMG quench simulator.
#[derive(Parser, Debug)]
#[command(name = "lmg", version, about)]
struct Cli {
    /// Base output directory; each run writes to <base>/<run name>. Overrides
    /// the config's `output_dir` and $LMG_OUT_DIR.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Worker threads (1 runs sequentially).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Replace the configured RK4 step, ns.
    #[arg(long, global = true)]
    dt_override: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a quench from a preset or a config file.
    Simulate(Source),
    /// Run two configs on one grid and tabulate their differences.
    Compare {
        #[arg(long, conflicts_with = "config")]
        preset: Option<String>,
        #[arg(long, num_args = 2)]
        config: Vec<PathBuf>,
    },
    /// Parity-resolved LMG spectrum versus drive.
    Spectrum {
        #[arg(long, default_value_t = 6)]
        n_qubits: usize,
        #[arg(long, default_value_t = 3.8)]
        lambda_mhz_over_2pi: f64,
        /// Largest Ω/λ.
        #[arg(long, default_value_t = 3.0)]
        control_max: f64,
        #[arg(long, default_value_t = 151)]
        points: usize,
        #[arg(long, value_enum, default_value_t = Target::HighestOfHeff)]
        target: Target,
        /// Also tabulate exact and second-order drive shifts at this Ω/λ.
        #[arg(long)]
        shifts_at: Option<f64>,
    },
    /// Multi-qubit Wigner function of an ideal GHZ state or of quench checkpoints.
    Wigner {
        #[command(flatten)]
        source: Source,
        /// Use (|g…g⟩ + e^{iγ}|e…e⟩)/√2 on this many qubits instead of a quench.
        #[arg(long, conflicts_with_all = ["preset", "config"])]
        ghz: Option<usize>,
        #[arg(long, default_value_t = 0.0)]
        gamma: f64,
        /// Checkpoints to map; the final one by default.
        #[arg(long, value_delimiter = ',')]
        at: Vec<f64>,
        #[arg(long, default_value_t = 61)]
        n_theta: usize,
        #[arg(long, default_value_t = 121)]
        n_phi: usize,
    },
    /// Two-qubit exchange through the resonator at several operating points.
    Pairswap {
        #[arg(long, value_delimiter = ',', default_value = "1,4")]
        qubits: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "5.6895,5.66,5.60")]
        operating_points_ghz_over_2pi: Vec<f64>,
        #[arg(long, default_value_t = 600.0)]
        duration_ns: f64,
        #[arg(long, default_value_t = 0.02)]
        dt_ns: f64,
        #[arg(long, default_value_t = 2)]
        n_max: usize,
    },
    /// List presets, or print one as a config file.
    Presets {
        #[command(subcommand)]
        action: Option<PresetAction>,
    },
}

#[derive(Subcommand, Debug)]
enum PresetAction {
    Dump { name: String },
}

#[derive(Args, Debug)]
#[group(required = false, multiple = false)]
struct Source {
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Target {
    GroundOfH,
    HighestOfHeff,
}

impl From<Target> for SpectrumTarget {
    fn from(t: Target) -> Self {
        match t {
            Target::GroundOfH => SpectrumTarget::GroundOfH,
            Target::HighestOfHeff => SpectrumTarget::HighestOfHeff,
        }
    }
}

struct Ctx {
    out_dir: Option<PathBuf>,
    dt_override: Option<f64>,
    exec: Exec,
}

fn now_unix() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

fn load(source: &Source, ctx: &Ctx) -> lmg_core::Result<ExperimentConfig> {
    let mut cfg = match (&source.preset, &source.config) {
        (Some(name), None) => preset(name).ok_or_else(|| {
            Error::InvalidArgument(format!("unknown preset `{name}`; available: {}", PRESET_NAMES.join(", ")))
        })?,
        (None, Some(path)) => ExperimentConfig::load(path)?,
        _ => return Err(Error::InvalidArgument("give exactly one of --preset or --config".into())),
    };
    apply_overrides(&mut cfg, ctx);
    Ok(cfg)
}

fn apply_overrides(cfg: &mut ExperimentConfig, ctx: &Ctx) {
    if let Some(dt) = ctx.dt_override {
        cfg.integrator.dt_ns = dt;
    }
    if let Some(base) = &ctx.out_dir {
        cfg.output_dir = Some(base.join(&cfg.name));
    }
}

fn out_dir(ctx: &Ctx, name: &str) -> PathBuf {
    match &ctx.out_dir {
        Some(base) => base.join(name),
        None => runner::resolve_output_dir(None, name),
    }
}

fn write_plain(dir: &PathBuf, tables: &[Table]) -> lmg_core::Result<Value> {
    let files = write_tables(dir, tables)?;
    Ok(json!({ "output_dir": dir, "files": files }))
}

fn execute(cli: &Cli, ctx: &Ctx) -> lmg_core::Result<Value> {
    match &cli.command {
        Command::Simulate(source) => {
            let cfg = load(source, ctx)?;
            let manifest = runner::run_with(&cfg, ctx.exec)?;
            Ok(json!({ "output_dir": runner::output_dir_for(&cfg), "manifest": manifest }))
        }
        Command::Compare { preset: name, config } => {
            let (mut a, mut b) = match (name, config.as_slice()) {
                (Some(n), _) => comparison_preset(n).ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "unknown comparison `{n}`; available: {}",
                        COMPARISON_NAMES.join(", ")
                    ))
                })?,
                (None, [pa, pb]) => (ExperimentConfig::load(pa)?, ExperimentConfig::load(pb)?),
                _ => return Err(Error::InvalidArgument("give --preset or two --config files".into())),
            };
            apply_overrides(&mut a, ctx);
            apply_overrides(&mut b, ctx);
            let started = now_unix();
            let clock = Instant::now();
            let cmp = runner::run_comparison(&a, &b, ctx.exec)?;
            let dir = out_dir(ctx, &format!("{}_vs_{}", a.name, b.name));
            let manifest = cmp.write(&dir, started, clock.elapsed().as_secs_f64())?;
            Ok(json!({
                "output_dir": dir,
                "max_population_delta": cmp.max_population_delta,
                "max_c2l_delta": cmp.max_c2l_delta,
                "manifest": manifest,
            }))
        }
        Command::Spectrum { n_qubits, lambda_mhz_over_2pi, control_max, points, target, shifts_at } => {
            if *points < 2 {
                return Err(Error::InvalidArgument("need at least 2 points".into()));
            }
            let lam = mhz(*lambda_mhz_over_2pi);
            let omegas: Vec<f64> =
                (0..*points).map(|k| control_max * lam.abs() * k as f64 / (*points - 1) as f64).collect();
            let scan = degeneracy_scan_with(ctx.exec, *n_qubits, lam, &omegas, (*target).into())?;
            let mut tables = runner::spectrum_tables(&scan);
            if let Some(x) = shifts_at {
                let omega = x * lam.abs();
                let eta = perturbative_shifts(*n_qubits, omega, lam)?;
                let exact = exact_drive_shifts(*n_qubits, omega, lam)?;
                let mut t = Table::new("drive_shifts", &["m", "eta_mhz_over_2pi", "exact_shift_mhz_over_2pi"]);
                for (i, m) in eta.m_values.iter().enumerate() {
                    t.push(vec![(*m).into(), (eta.eta[i] / mhz(1.0)).into(), (exact[i] / mhz(1.0)).into()]);
                }
                tables.push(t);
            }
            write_plain(&out_dir(ctx, "spectrum"), &tables)
        }
        Command::Wigner { source, ghz: ghz_n, gamma, at, n_theta, n_phi } => {
            match (ghz_n, source.preset.is_some() || source.config.is_some()) {
                (Some(n), _) => {
                    let state = ghz_state(HilbertSpace::full_spin(*n)?, *gamma);
                    let table = runner::wigner_table(&state, *n_theta, *n_phi, ctx.exec)?;
                    write_plain(&out_dir(ctx, &format!("wigner_ghz{n}")), &[table])
                }
                (None, true) => {
                    let mut cfg = load(source, ctx)?;
                    let times = if at.is_empty() { vec![cfg.schedule.duration_ns] } else { at.clone() };
                    cfg.observables = runner::config::ObservableRequests::none();
                    cfg.observables.wigner = Some(WignerRequest { n_theta: *n_theta, n_phi: *n_phi, at_ns: times });
                    cfg.name = format!("{}_wigner", cfg.name);
                    cfg.output_dir = Some(out_dir(ctx, &cfg.name));
                    let manifest = runner::run_with(&cfg, ctx.exec)?;
                    Ok(json!({ "output_dir": runner::output_dir_for(&cfg), "manifest": manifest }))
                }
                (None, false) => Err(Error::InvalidArgument("give --ghz, --preset or --config".into())),
            }
        }
        Command::Pairswap { qubits, operating_points_ghz_over_2pi, duration_ns, dt_ns, n_max } => {
            let [a, b] = qubits.as_slice() else {
                return Err(Error::InvalidArgument("--qubits takes two indices".into()));
            };
            let device = DeviceSpec::reference_six_qubit();
            let settings = PairSwapSettings { duration: *duration_ns, dt: *dt_ns, sample_spacing: 1.0, n_max: *n_max };
            let ops: Vec<f64> = operating_points_ghz_over_2pi.iter().map(|&f| ghz(f)).collect();
            let res = runner::pair_swap_scan(&device, [*a, *b], &ops, &settings)?;
            let mut v = write_plain(&out_dir(ctx, "pairswap"), &res.tables())?;
            let fits: Vec<Value> = res
                .points
                .iter()
                .map(|p| {
                    json!({
                        "operating_point_ghz_over_2pi": p.omega_op / ghz(1.0),
                        "fitted_coupling_mhz_over_2pi": p.fitted_coupling / mhz(1.0),
                        "predicted_coupling_mhz_over_2pi": p.predicted_coupling / mhz(1.0),
                    })
                })
                .collect();
            v["points"] = json!(fits);
            if let Some(r) = res.regression {
                v["slope_mhz_over_2pi"] = json!(r.slope / mhz(1.0));
                v["intercept_mhz_over_2pi"] = json!(r.intercept / mhz(1.0));
                v["expected_slope_mhz_over_2pi"] = json!(res.xi_second / mhz(1.0));
                v["expected_intercept_mhz_over_2pi"] = json!(res.crosstalk / mhz(1.0));
            }
            Ok(v)
        }
        Command::Presets { action: None } => Ok(json!({ "presets": PRESET_NAMES, "comparisons": COMPARISON_NAMES })),
        Command::Presets { action: Some(PresetAction::Dump { name }) } => {
            let cfg = preset(name).ok_or_else(|| Error::InvalidArgument(format!("unknown preset `{name}`")))?;
            Ok(serde_json::to_value(&cfg)?)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let exec = match cli.threads {
        Some(1) => Exec::Sequential,
        _ => Exec::default(),
    };
    if let Some(t) = cli.threads {
        if let Err(e) = par::init_thread_pool(t) {
            log::warn!("{e}");
        }
    }
    let ctx = Ctx { out_dir: cli.out_dir.clone(), dt_override: cli.dt_override, exec };
    match execute(&cli, &ctx) {
        Ok(v) => {
            let _ = writeln!(std::io::stdout(), "{}", serde_json::to_string_pretty(&v).expect("json output"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            let mut record = json!({ "error": e.kind(), "message": e.to_string() });
            if let Error::InvalidConfig { field, .. } = &e {
                record["field"] = json!(field);
            }
            eprintln!("{record}");
            ExitCode::FAILURE
        }
    }
}
