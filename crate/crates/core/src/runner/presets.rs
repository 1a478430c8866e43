//! Named experiment configurations, one per reproduced figure.

use crate::model::NoiseSpec;
use crate::runner::config::{
    DeviceConfig, DevicePreset, ExperimentConfig, FringeRequest, IntegratorSection, ModelKind, ObservableRequests,
    PairSwapRequest, ScheduleConfig, SpectrumRequest, WignerRequest,
};
use crate::spectrum::SpectrumTarget;

pub const PRESET_NAMES: [&str; 8] = ["fig2", "fig3", "fig4", "s8", "s9", "s12", "s13", "pairswap"];
pub const COMPARISON_NAMES: [&str; 1] = ["s8_vs_s9"];

/// RK4 step for the qubits-plus-resonator model, ns.
pub const CIRCUIT_QED_DT_NS: f64 = 0.01;
/// RK4 step for the effective models, ns.
pub const EFFECTIVE_DT_NS: f64 = 0.01;

fn schedule(tf_ns: f64) -> ScheduleConfig {
    ScheduleConfig { omega0_mhz_over_2pi: 40.0, tf_ns, duration_ns: 150.0, drive_sign: 1.0 }
}

fn with_errors(name: &str, observables: ObservableRequests) -> ExperimentConfig {
    ExperimentConfig {
        name: name.into(),
        model: ModelKind::CircuitQed,
        n_qubits: 6,
        schedule: schedule(60.0),
        lambda_mhz_over_2pi: 3.8,
        device: Some(DeviceConfig::preset(DevicePreset::ReferenceSixQubit)),
        noise: NoiseSpec { enable_t1: true, enable_dephasing: true },
        integrator: IntegratorSection::with_spacing(CIRCUIT_QED_DT_NS, 2.0),
        n_max: Some(3),
        dispersive_dressing: Some(true),
        observables,
        output_dir: None,
        seed: 0,
    }
}

fn ideal(name: &str, n_qubits: usize, tf_ns: f64, observables: ObservableRequests) -> ExperimentConfig {
    ExperimentConfig {
        name: name.into(),
        model: ModelKind::EffectiveDicke,
        n_qubits,
        schedule: schedule(tf_ns),
        lambda_mhz_over_2pi: 3.8,
        device: None,
        noise: NoiseSpec::none(),
        integrator: IntegratorSection::with_spacing(EFFECTIVE_DT_NS, 2.0),
        n_max: None,
        dispersive_dressing: None,
        observables,
        output_dir: None,
        seed: 0,
    }
}

fn everything(wigner_at: Vec<f64>) -> ObservableRequests {
    ObservableRequests {
        fringes: Some(FringeRequest::default()),
        wigner: Some(WignerRequest::at(wigner_at)),
        ..ObservableRequests::default()
    }
}

pub fn preset(name: &str) -> Option<ExperimentConfig> {
    let cfg = match name {
        "fig2" => with_errors(name, ObservableRequests::default()),
        "fig3" => {
            let mut c = with_errors(
                name,
                ObservableRequests { fringes: Some(FringeRequest::default()), ..ObservableRequests::default() },
            );
            let mut grid: Vec<f64> = (0..=75).map(|k| 2.0 * k as f64).chain([75.0, 105.0]).collect();
            grid.sort_by(f64::total_cmp);
            c.integrator.checkpoint_spacing_ns = None;
            c.integrator.checkpoints_ns = Some(grid);
            c
        }
        "fig4" => with_errors(
            name,
            ObservableRequests {
                wigner: Some(WignerRequest::at(vec![0.0, 50.0, 100.0, 150.0])),
                ..ObservableRequests::default()
            },
        ),
        "s8" => with_errors(name, everything(vec![0.0, 50.0, 100.0, 150.0])),
        "s9" => ideal(
            name,
            6,
            60.0,
            ObservableRequests {
                adiabaticity: true,
                spectrum: Some(SpectrumRequest {
                    control_max: 3.0,
                    n_points: 151,
                    target: SpectrumTarget::HighestOfHeff,
                }),
                ..everything(vec![0.0, 50.0, 100.0, 150.0])
            },
        ),
        "s12" => ideal(
            name,
            10,
            30.0,
            ObservableRequests {
                fringes: Some(FringeRequest::default()),
                adiabaticity: true,
                ..ObservableRequests::default()
            },
        ),
        "s13" => ideal(
            name,
            10,
            30.0,
            ObservableRequests {
                wigner: Some(WignerRequest::at(vec![0.0, 30.0, 60.0, 150.0])),
                ..ObservableRequests::default()
            },
        ),
        "pairswap" => {
            let mut c = with_errors(
                name,
                ObservableRequests {
                    pair_swap: Some(PairSwapRequest::new([1, 4], vec![5.6895, 5.66, 5.60])),
                    ..ObservableRequests::none()
                },
            );
            c.noise = NoiseSpec::none();
            c
        }
        _ => return None,
    };
    Some(cfg)
}

/// Pairs of configs sharing a schedule and checkpoint grid.
pub fn comparison_preset(name: &str) -> Option<(ExperimentConfig, ExperimentConfig)> {
    match name {
        "s8_vs_s9" => {
            let mut a = preset("s8")?;
            let mut b = preset("s9")?;
            a.observables = ObservableRequests::default();
            b.observables = ObservableRequests::default();
            Some((a, b))
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_resolves_and_round_trips() {
        for name in PRESET_NAMES {
            let c = preset(name).unwrap();
            c.resolve().unwrap_or_else(|e| panic!("{name}: {e}"));
            let back = ExperimentConfig::from_json(&c.to_json()).unwrap();
            assert_eq!(back, c, "{name}");
        }
        assert!(preset("nope").is_none());
    }

    #[test]
    fn comparison_preset_shares_grid() {
        let (a, b) = comparison_preset("s8_vs_s9").unwrap();
        let (ra, rb) = (a.resolve().unwrap(), b.resolve().unwrap());
        assert_eq!(ra.integrator.checkpoint_times, rb.integrator.checkpoint_times);
        assert_eq!(ra.schedule, rb.schedule);
    }

    #[test]
    fn fringe_preset_covers_measured_quench_times() {
        let r = preset("fig3").unwrap().resolve().unwrap();
        for t in [0.0, 75.0, 105.0, 150.0] {
            assert!(r.integrator.checkpoint_times.contains(&t), "{t}");
        }
    }
}
