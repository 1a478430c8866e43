//! Experiment configuration. Every physical quantity carries its unit in the
//! key name; angular frequencies are written as `f` with `ω = 2πf`.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::dynamics::IntegratorConfig;
use crate::model::{ghz, mhz, uniform_crosstalk, DeviceSpec, NoiseSpec, QuenchSchedule};
use crate::spectrum::SpectrumTarget;
use crate::{Error, Result};

/// Default photon cutoff for the qubits-plus-resonator model.
pub const DEFAULT_N_MAX: usize = 3;
/// Default checkpoint spacing, ns.
pub const DEFAULT_CHECKPOINT_SPACING_NS: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    EffectiveDicke,
    EffectiveFull,
    CircuitQed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub omega0_mhz_over_2pi: f64,
    pub tf_ns: f64,
    pub duration_ns: f64,
    #[serde(default = "one")]
    pub drive_sign: f64,
}

fn one() -> f64 {
    1.0
}

impl ScheduleConfig {
    pub fn to_schedule(&self) -> Result<QuenchSchedule> {
        QuenchSchedule::new(mhz(self.omega0_mhz_over_2pi), self.tf_ns, self.duration_ns, self.drive_sign)
            .map_err(|e| Error::config("schedule", e.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DevicePreset {
    /// The measured six-qubit device.
    ReferenceSixQubit,
    /// Identical ideal qubits; needs `xi_mhz_over_2pi`.
    Homogeneous,
}

/// A device preset plus optional overrides. Per-qubit lists of length one are
/// broadcast to every qubit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceConfig {
    pub preset: DevicePreset,
    /// Qubits of the preset to keep, in order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qubits: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi_mhz_over_2pi: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resonator_ghz_over_2pi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operating_point_ghz_over_2pi: Option<f64>,
    /// `(ω_q - ω_o)/2π`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qubit_offset_mhz_over_2pi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t1_us: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t2_us: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub readout_f_g: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub readout_f_e: Option<Vec<f64>>,
    /// Uniform XX crosstalk between every pair.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crosstalk_mhz_over_2pi: Option<f64>,
}

impl DeviceConfig {
    pub fn preset(preset: DevicePreset) -> Self {
        Self {
            preset,
            qubits: None,
            xi_mhz_over_2pi: None,
            resonator_ghz_over_2pi: None,
            operating_point_ghz_over_2pi: None,
            qubit_offset_mhz_over_2pi: None,
            t1_us: None,
            t2_us: None,
            readout_f_g: None,
            readout_f_e: None,
            crosstalk_mhz_over_2pi: None,
        }
    }

    pub fn resolve(&self, n_qubits: usize) -> Result<DeviceSpec> {
        let broadcast = |field: &str, v: &[f64], f: &dyn Fn(f64) -> f64| -> Result<Vec<f64>> {
            match v.len() {
                1 => Ok(vec![f(v[0]); n_qubits]),
                l if l == n_qubits => Ok(v.iter().map(|&x| f(x)).collect()),
                l => Err(Error::config(format!("device.{field}"), format!("{l} entries for {n_qubits} qubits"))),
            }
        };
        let mut d = match self.preset {
            DevicePreset::ReferenceSixQubit => {
                let base = DeviceSpec::reference_six_qubit();
                match &self.qubits {
                    Some(q) => base.subset(q).map_err(|e| Error::config("device.qubits", e.to_string()))?,
                    None => base,
                }
            }
            DevicePreset::Homogeneous => {
                if self.qubits.is_some() {
                    return Err(Error::config("device.qubits", "only meaningful for the reference_six_qubit preset"));
                }
                let xi = self
                    .xi_mhz_over_2pi
                    .as_ref()
                    .and_then(|v| v.first().copied())
                    .ok_or_else(|| Error::config("device.xi_mhz_over_2pi", "required by the homogeneous preset"))?;
                let wb = ghz(self.resonator_ghz_over_2pi.unwrap_or(5.796));
                let wo = ghz(self.operating_point_ghz_over_2pi.unwrap_or(5.6895));
                DeviceSpec::homogeneous(n_qubits, mhz(xi), wb, wo)
                    .map_err(|e| Error::config("device", e.to_string()))?
            }
        };
        if d.n_qubits != n_qubits {
            return Err(Error::config(
                "device",
                format!("device has {} qubits, config asks for {n_qubits}", d.n_qubits),
            ));
        }
        if let Some(v) = &self.xi_mhz_over_2pi {
            d.xi = broadcast("xi_mhz_over_2pi", v, &mhz)?;
        }
        if let Some(f) = self.resonator_ghz_over_2pi {
            d.omega_b = ghz(f);
        }
        let offset = d.omega_q - d.omega_o;
        if let Some(f) = self.operating_point_ghz_over_2pi {
            d.omega_o = ghz(f);
        }
        d.omega_q = d.omega_o + self.qubit_offset_mhz_over_2pi.map(mhz).unwrap_or(offset);
        let us = |x: f64| x * 1e3;
        let id = |x: f64| x;
        if let Some(v) = &self.t1_us {
            d.t1 = broadcast("t1_us", v, &us)?;
        }
        if let Some(v) = &self.t2_us {
            d.t2 = broadcast("t2_us", v, &us)?;
        }
        if let Some(v) = &self.readout_f_g {
            d.f_g = broadcast("readout_f_g", v, &id)?;
        }
        if let Some(v) = &self.readout_f_e {
            d.f_e = broadcast("readout_f_e", v, &id)?;
        }
        if let Some(b) = self.crosstalk_mhz_over_2pi {
            d.crosstalk_b = uniform_crosstalk(n_qubits, mhz(b));
        }
        d.validate().map_err(|e| Error::config("device", e.to_string()))?;
        Ok(d)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    pub dt_ns: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint_spacing_ns: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoints_ns: Option<Vec<f64>>,
    #[serde(default = "yes")]
    pub positivity_check: bool,
}

fn yes() -> bool {
    true
}

impl IntegratorSection {
    pub fn with_spacing(dt_ns: f64, spacing_ns: f64) -> Self {
        Self { dt_ns, checkpoint_spacing_ns: Some(spacing_ns), checkpoints_ns: None, positivity_check: true }
    }

    pub fn to_config(&self, duration_ns: f64) -> Result<IntegratorConfig> {
        let mut cfg = match (&self.checkpoints_ns, self.checkpoint_spacing_ns) {
            (Some(_), Some(_)) => {
                return Err(Error::config("integrator", "give either checkpoints_ns or checkpoint_spacing_ns"));
            }
            (Some(list), None) => IntegratorConfig::new(self.dt_ns, list.clone()),
            (None, spacing) => {
                IntegratorConfig::uniform(self.dt_ns, spacing.unwrap_or(DEFAULT_CHECKPOINT_SPACING_NS), duration_ns)
            }
        }
        .map_err(|e| Error::config("integrator", e.to_string()))?;
        if let Some(&t) = cfg.checkpoint_times.iter().find(|&&t| t > duration_ns + 1e-9) {
            return Err(Error::config(
                "integrator.checkpoints_ns",
                format!("checkpoint {t} ns lies beyond the {duration_ns} ns quench"),
            ));
        }
        cfg.positivity_check = self.positivity_check;
        Ok(cfg)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FringeRequest {
    #[serde(default = "default_n_beta")]
    pub n_beta: usize,
    /// Checkpoints to analyse; all when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub at_ns: Option<Vec<f64>>,
}

fn default_n_beta() -> usize {
    25
}

impl Default for FringeRequest {
    fn default() -> Self {
        Self { n_beta: default_n_beta(), at_ns: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WignerRequest {
    #[serde(default = "default_n_theta")]
    pub n_theta: usize,
    #[serde(default = "default_n_phi")]
    pub n_phi: usize,
    pub at_ns: Vec<f64>,
}

fn default_n_theta() -> usize {
    61
}

fn default_n_phi() -> usize {
    121
}

impl WignerRequest {
    pub fn at(at_ns: Vec<f64>) -> Self {
        Self { n_theta: default_n_theta(), n_phi: default_n_phi(), at_ns }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumRequest {
    /// Largest `Ω/|λ|` of the scan, which starts at 0.
    pub control_max: f64,
    pub n_points: usize,
    pub target: SpectrumTarget,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairSwapRequest {
    pub qubits: [usize; 2],
    pub operating_points_ghz_over_2pi: Vec<f64>,
    #[serde(default = "default_swap_duration")]
    pub duration_ns: f64,
    #[serde(default = "default_swap_dt")]
    pub dt_ns: f64,
    #[serde(default = "default_swap_spacing")]
    pub sample_spacing_ns: f64,
    #[serde(default = "default_swap_n_max")]
    pub n_max: usize,
}

fn default_swap_duration() -> f64 {
    600.0
}

fn default_swap_dt() -> f64 {
    0.02
}

fn default_swap_spacing() -> f64 {
    1.0
}

fn default_swap_n_max() -> usize {
    2
}

impl PairSwapRequest {
    pub fn new(qubits: [usize; 2], operating_points_ghz_over_2pi: Vec<f64>) -> Self {
        Self {
            qubits,
            operating_points_ghz_over_2pi,
            duration_ns: default_swap_duration(),
            dt_ns: default_swap_dt(),
            sample_spacing_ns: default_swap_spacing(),
            n_max: default_swap_n_max(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableRequests {
    #[serde(default = "yes")]
    pub populations: bool,
    /// `𝒞₂ᴸ`, GHZ fidelity and the extremal coherence.
    #[serde(default = "yes")]
    pub correlations: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fringes: Option<FringeRequest>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wigner: Option<WignerRequest>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumRequest>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair_swap: Option<PairSwapRequest>,
    #[serde(default)]
    pub readout_error: bool,
    /// Overlap with the instantaneous extremal eigenstate; closed effective models only.
    #[serde(default)]
    pub adiabaticity: bool,
}

impl Default for ObservableRequests {
    fn default() -> Self {
        Self {
            populations: true,
            correlations: true,
            fringes: None,
            wigner: None,
            spectrum: None,
            pair_swap: None,
            readout_error: false,
            adiabaticity: false,
        }
    }
}

impl ObservableRequests {
    pub fn none() -> Self {
        Self { populations: false, correlations: false, ..Self::default() }
    }

    /// Whether any requested output needs the quench trajectory.
    pub fn needs_quench(&self) -> bool {
        self.populations || self.correlations || self.fringes.is_some() || self.wigner.is_some() || self.adiabaticity
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub model: ModelKind,
    pub n_qubits: usize,
    pub schedule: ScheduleConfig,
    /// Effective-model coupling; ignored by `circuit_qed`.
    #[serde(default = "default_lambda")]
    pub lambda_mhz_over_2pi: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub device: Option<DeviceConfig>,
    #[serde(default)]
    pub noise: NoiseSpec,
    pub integrator: IntegratorSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    /// Start from the dispersively dressed `|+…+⟩⊗|0⟩`; defaults to true.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dispersive_dressing: Option<bool>,
    #[serde(default)]
    pub observables: ObservableRequests,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
}

fn default_name() -> String {
    "custom".into()
}

fn default_lambda() -> f64 {
    3.8
}

/// A config with every default filled in and every cross-field rule checked.
#[derive(Clone, Debug)]
pub struct ResolvedConfig {
    pub model: ModelKind,
    pub n_qubits: usize,
    pub schedule: QuenchSchedule,
    pub lam: f64,
    pub device: Option<DeviceSpec>,
    pub noise: NoiseSpec,
    pub integrator: IntegratorConfig,
    pub n_max: usize,
    pub dressing: bool,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::config(json_path_hint(&e), e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn resolve(&self) -> Result<ResolvedConfig> {
        if self.n_qubits == 0 {
            return Err(Error::config("n_qubits", "must be positive"));
        }
        let schedule = self.schedule.to_schedule()?;
        let integrator = self.integrator.to_config(schedule.duration)?;
        if !(self.lambda_mhz_over_2pi.is_finite()) {
            return Err(Error::config("lambda_mhz_over_2pi", "must be finite"));
        }
        let obs = &self.observables;
        let needs_device = self.model == ModelKind::CircuitQed || self.noise.is_enabled() || obs.readout_error;
        let device = match (&self.device, needs_device) {
            (Some(d), _) => Some(d.resolve(self.n_qubits)?),
            (None, true) if self.n_qubits == 6 => Some(DeviceSpec::reference_six_qubit()),
            (None, true) => return Err(Error::config("device", "this model needs a device description")),
            (None, false) => None,
        };
        match self.model {
            ModelKind::EffectiveDicke => {
                if self.noise.is_enabled() {
                    return Err(Error::config("noise", "the Dicke model cannot carry per-qubit noise"));
                }
                if let Some(d) = &device {
                    if d.xi.iter().any(|&x| x != d.xi[0]) {
                        return Err(Error::config("device", "the Dicke model needs homogeneous couplings"));
                    }
                }
            }
            ModelKind::EffectiveFull => {
                if self.n_qubits > 12 {
                    return Err(Error::config("n_qubits", "the full-register model is limited to 12 qubits"));
                }
            }
            ModelKind::CircuitQed => {
                if self.n_qubits > 8 {
                    return Err(Error::config("n_qubits", "the resonator model is limited to 8 qubits"));
                }
            }
        }
        if self.model != ModelKind::CircuitQed && (self.n_max.is_some() || self.dispersive_dressing.is_some()) {
            return Err(Error::config("n_max", "photon settings only apply to circuit_qed"));
        }
        let n_max = self.n_max.unwrap_or(DEFAULT_N_MAX);
        if n_max == 0 {
            return Err(Error::config("n_max", "must be at least 1"));
        }
        if obs.adiabaticity && (self.model == ModelKind::CircuitQed || self.noise.is_enabled()) {
            return Err(Error::config("observables.adiabaticity", "needs a closed effective model"));
        }
        let on_grid = |field: &str, times: &[f64]| -> Result<()> {
            for &t in times {
                if !integrator.checkpoint_times.iter().any(|&c| (c - t).abs() < 1e-9) {
                    return Err(Error::config(field, format!("{t} ns is not a checkpoint")));
                }
            }
            Ok(())
        };
        if let Some(f) = &obs.fringes {
            if f.n_beta < 8 {
                return Err(Error::config("observables.fringes.n_beta", "the fringe fit needs at least 8 angles"));
            }
            if let Some(at) = &f.at_ns {
                on_grid("observables.fringes.at_ns", at)?;
            }
        }
        if let Some(w) = &obs.wigner {
            if w.n_theta < 2 || w.n_phi < 1 {
                return Err(Error::config("observables.wigner", "grid too small"));
            }
            on_grid("observables.wigner.at_ns", &w.at_ns)?;
        }
        if let Some(s) = &obs.spectrum {
            if !(s.control_max >= 0.0) || s.n_points < 2 {
                return Err(Error::config("observables.spectrum", "needs control_max >= 0 and at least 2 points"));
            }
            if self.lambda_mhz_over_2pi == 0.0 {
                return Err(Error::config("lambda_mhz_over_2pi", "a spectrum scan needs nonzero λ"));
            }
        }
        if let Some(p) = &obs.pair_swap {
            if p.qubits[0] == p.qubits[1] {
                return Err(Error::config("observables.pair_swap.qubits", "qubits must differ"));
            }
            if p.operating_points_ghz_over_2pi.is_empty() {
                return Err(Error::config("observables.pair_swap.operating_points_ghz_over_2pi", "empty"));
            }
            if device.is_none() && self.n_qubits != 6 {
                return Err(Error::config("device", "pair swap needs a device description"));
            }
        }
        Ok(ResolvedConfig {
            model: self.model,
            n_qubits: self.n_qubits,
            schedule,
            lam: mhz(self.lambda_mhz_over_2pi),
            device,
            noise: self.noise,
            integrator,
            n_max,
            dressing: self.dispersive_dressing.unwrap_or(true),
        })
    }
}

/// Best-effort field name for a parse error.
fn json_path_hint(e: &serde_json::Error) -> String {
    let msg = e.to_string();
    for marker in ["unknown field `", "missing field `"] {
        if let Some(i) = msg.find(marker) {
            let rest = &msg[i + marker.len()..];
            if let Some(j) = rest.find('`') {
                return rest[..j].to_string();
            }
        }
    }
    "<document>".into()
}
