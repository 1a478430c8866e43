//! Device description, Hamiltonians, noise channels and the quench schedule.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::hilbert::{
    collective_spin, pauli_string, resonator_ops, single_qubit_sum, unitary_exp, Axis, HilbertSpace, Operator,
    SpaceKind,
};
use crate::{Error, Result, C64};

/// `2π × f` with `f` in MHz, as rad/ns.
pub fn mhz(f: f64) -> f64 {
    2.0 * PI * f * 1e-3
}

/// `2π × f` with `f` in GHz, as rad/ns.
pub fn ghz(f: f64) -> f64 {
    2.0 * PI * f
}

/// Inverse of [`mhz`].
pub fn to_mhz(w: f64) -> f64 {
    w / (2.0 * PI * 1e-3)
}

/// Reference interaction strength of the ideal quench, `2π × 3.8 MHz`.
pub fn reference_lambda() -> f64 {
    mhz(3.8)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviceSpec {
    pub n_qubits: usize,
    /// Qubit-resonator couplings, rad/ns.
    pub xi: Vec<f64>,
    pub omega_b: f64,
    /// Drive and rotating-frame frequency.
    pub omega_o: f64,
    /// Common qubit frequency at the operating point.
    pub omega_q: f64,
    /// Energy relaxation times, ns.
    pub t1: Vec<f64>,
    /// Dephasing times, ns.
    pub t2: Vec<f64>,
    /// Probability of reading `g` when prepared in `g`.
    pub f_g: Vec<f64>,
    /// Probability of reading `e` when prepared in `e`.
    pub f_e: Vec<f64>,
    /// Direct XX coupling between qubit pairs, rad/ns.
    pub crosstalk_b: Vec<Vec<f64>>,
}

impl DeviceSpec {
    /// The six-qubit device: couplings, coherence times and readout
    /// fidelities per qubit, resonator at 5.796 GHz, operating point 5.6895 GHz,
    /// a uniform `-2π × 0.27 MHz` crosstalk, and qubits detuned by the reference
    /// `λ` above the drive so the effective model is `ΩS_x + λS_z²`.
    pub fn reference_six_qubit() -> Self {
        let n = 6;
        let omega_o = ghz(5.6895);
        Self {
            n_qubits: n,
            xi: [19.56, 19.78, 15.98, 19.24, 19.88, 14.51].iter().map(|&f| mhz(f)).collect(),
            omega_b: ghz(5.796),
            omega_o,
            omega_q: omega_o + reference_lambda(),
            t1: [17.8, 19.1, 15.5, 13.7, 27.5, 22.9].iter().map(|us| us * 1e3).collect(),
            t2: [3.4, 3.6, 1.7, 3.4, 2.0, 4.7].iter().map(|us| us * 1e3).collect(),
            f_g: vec![0.85, 0.93, 0.85, 0.83, 0.88, 0.84],
            f_e: vec![0.82, 0.83, 0.85, 0.70, 0.81, 0.81],
            crosstalk_b: uniform_crosstalk(n, mhz(-0.27)),
        }
    }

    /// Identical qubits with coupling `xi`, no crosstalk, no decoherence and
    /// perfect readout. The qubit frequency sits `ξ²/|ω_o - ω_b|` above the drive.
    pub fn homogeneous(n_qubits: usize, xi: f64, omega_b: f64, omega_o: f64) -> Result<Self> {
        let lam = effective_coupling(xi, omega_o - omega_b)?;
        let d = Self {
            n_qubits,
            xi: vec![xi; n_qubits],
            omega_b,
            omega_o,
            omega_q: omega_o + lam,
            t1: vec![f64::INFINITY; n_qubits],
            t2: vec![f64::INFINITY; n_qubits],
            f_g: vec![1.0; n_qubits],
            f_e: vec![1.0; n_qubits],
            crosstalk_b: uniform_crosstalk(n_qubits, 0.0),
        };
        d.validate()?;
        Ok(d)
    }

    /// Restriction to the listed qubits, in the given order.
    pub fn subset(&self, qubits: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.n_qubits];
        for &q in qubits {
            if q >= self.n_qubits || seen[q] {
                return Err(Error::InvalidArgument(format!("bad qubit selection {qubits:?}")));
            }
            seen[q] = true;
        }
        if qubits.is_empty() {
            return Err(Error::InvalidArgument("empty qubit selection".into()));
        }
        let pick = |v: &Vec<f64>| qubits.iter().map(|&q| v[q]).collect::<Vec<_>>();
        Ok(Self {
            n_qubits: qubits.len(),
            xi: pick(&self.xi),
            omega_b: self.omega_b,
            omega_o: self.omega_o,
            omega_q: self.omega_q,
            t1: pick(&self.t1),
            t2: pick(&self.t2),
            f_g: pick(&self.f_g),
            f_e: pick(&self.f_e),
            crosstalk_b: qubits.iter().map(|&a| qubits.iter().map(|&b| self.crosstalk_b[a][b]).collect()).collect(),
        })
    }

    /// Qubits and drive frame both placed at `omega_op`.
    pub fn at_operating_point(&self, omega_op: f64) -> Self {
        Self { omega_o: omega_op, omega_q: omega_op, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_qubits;
        if n == 0 {
            return Err(Error::InvalidDevice("no qubits".into()));
        }
        for (name, v) in [("xi", &self.xi), ("t1", &self.t1), ("t2", &self.t2), ("f_g", &self.f_g), ("f_e", &self.f_e)]
        {
            if v.len() != n {
                return Err(Error::InvalidDevice(format!("{name} has {} entries for {n} qubits", v.len())));
            }
        }
        if self.xi.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
            return Err(Error::InvalidDevice("couplings must be positive".into()));
        }
        if self.t1.iter().chain(&self.t2).any(|&t| !(t > 0.0)) {
            return Err(Error::InvalidDevice("coherence times must be positive".into()));
        }
        if self.f_g.iter().chain(&self.f_e).any(|&f| !(f > 0.0 && f <= 1.0)) {
            return Err(Error::InvalidDevice("readout fidelities must lie in (0, 1]".into()));
        }
        if self.crosstalk_b.len() != n || self.crosstalk_b.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidDevice("crosstalk matrix must be N x N".into()));
        }
        for j in 0..n {
            if self.crosstalk_b[j][j] != 0.0 {
                return Err(Error::InvalidDevice("crosstalk diagonal must vanish".into()));
            }
            for k in 0..j {
                if (self.crosstalk_b[j][k] - self.crosstalk_b[k][j]).abs() > 1e-15 {
                    return Err(Error::InvalidDevice("crosstalk matrix must be symmetric".into()));
                }
            }
        }
        let max_xi = self.xi.iter().cloned().fold(0.0, f64::max);
        if (self.omega_o - self.omega_b).abs() <= 5.0 * max_xi {
            return Err(Error::InvalidDevice(format!(
                "operating point {:.3} MHz from the resonator is not dispersive for couplings up to {:.3} MHz",
                to_mhz(self.omega_o - self.omega_b),
                to_mhz(max_xi)
            )));
        }
        Ok(())
    }

    pub fn is_homogeneous(&self) -> bool {
        self.xi.iter().all(|&x| x == self.xi[0]) && self.crosstalk_b.iter().flatten().all(|&b| b == 0.0)
    }
}

pub fn uniform_crosstalk(n: usize, b: f64) -> Vec<Vec<f64>> {
    (0..n).map(|j| (0..n).map(|k| if j == k { 0.0 } else { b }).collect()).collect()
}

/// `Ω(τ) = Ω⁰ exp(-τ/t_f)` while `τ ≤ duration`, zero afterwards.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuenchSchedule {
    pub omega0: f64,
    pub tf: f64,
    pub duration: f64,
    pub drive_sign: f64,
}

impl QuenchSchedule {
    pub fn new(omega0: f64, tf: f64, duration: f64, drive_sign: f64) -> Result<Self> {
        let s = Self { omega0, tf, duration, drive_sign };
        s.validate()?;
        Ok(s)
    }

    /// `Ω⁰ = 2π × 40 MHz`, `t_f = 60 ns`, 150 ns.
    pub fn reference() -> Self {
        Self { omega0: mhz(40.0), tf: 60.0, duration: 150.0, drive_sign: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega0 >= 0.0 && self.omega0.is_finite()) {
            return Err(Error::InvalidArgument("omega0 must be nonnegative".into()));
        }
        if !(self.tf > 0.0) {
            return Err(Error::InvalidArgument("t_f must be positive".into()));
        }
        if !(self.duration >= 0.0 && self.duration.is_finite()) {
            return Err(Error::InvalidArgument("duration must be nonnegative".into()));
        }
        if self.drive_sign != 1.0 && self.drive_sign != -1.0 {
            return Err(Error::InvalidArgument("drive sign must be +1 or -1".into()));
        }
        Ok(())
    }

    /// Drive amplitude without the sign.
    pub fn omega_at(&self, tau: f64) -> f64 {
        if tau > self.duration {
            0.0
        } else {
            self.omega0 * (-tau / self.tf).exp()
        }
    }
}

pub fn quench_omega(tau: f64, schedule: &QuenchSchedule) -> Result<f64> {
    if tau < 0.0 || tau.is_nan() {
        return Err(Error::InvalidArgument(format!("negative quench time {tau}")));
    }
    Ok(schedule.omega_at(tau))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub enable_t1: bool,
    pub enable_dephasing: bool,
}

impl NoiseSpec {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn is_enabled(&self) -> bool {
        self.enable_t1 || self.enable_dephasing
    }
}

#[derive(Clone, Debug)]
pub struct CollapseOp {
    pub label: String,
    pub qubit: usize,
    /// Rate in 1/ns; `operator` already carries its square root.
    pub rate: f64,
    pub operator: Operator,
}

#[derive(Clone, Debug, Default)]
pub struct LindbladSet {
    pub ops: Vec<CollapseOp>,
    pub warnings: Vec<String>,
}

/// Pure-dephasing rate `1/T2 - 1/(2T1)`, clamped at zero.
pub fn pure_dephasing_rate(t1: f64, t2: f64) -> (f64, bool) {
    let g = 1.0 / t2 - 1.0 / (2.0 * t1);
    if g < 0.0 {
        (0.0, true)
    } else {
        (g, false)
    }
}

/// Per-qubit `√(1/T1) σ⁻` and `√(γ_φ/2) σ^z` channels.
pub fn lindblad_operators(device: &DeviceSpec, noise: &NoiseSpec, space: HilbertSpace) -> Result<LindbladSet> {
    if space.kind() == SpaceKind::Dicke {
        return Err(Error::UnsupportedSpace("per-qubit noise needs a qubit-resolved space".into()));
    }
    if space.n_qubits() != device.n_qubits {
        return Err(Error::DimensionMismatch { expected: device.n_qubits, got: space.n_qubits() });
    }
    let mut set = LindbladSet::default();
    for j in 0..device.n_qubits {
        if noise.enable_t1 {
            let rate = 1.0 / device.t1[j];
            if rate > 0.0 {
                let op = pauli_string(space, &[(j, Axis::Minus)])?.scale(rate.sqrt());
                set.ops.push(CollapseOp { label: format!("decay_q{j}"), qubit: j, rate, operator: op });
            }
        }
        if noise.enable_dephasing {
            let (rate, clamped) = pure_dephasing_rate(device.t1[j], device.t2[j]);
            if clamped {
                let msg = format!(
                    "qubit {j}: T2 = {} ns exceeds 2*T1 = {} ns; pure dephasing clamped to 0",
                    device.t2[j],
                    2.0 * device.t1[j]
                );
                log::warn!("{msg}");
                set.warnings.push(msg);
            }
            if rate > 0.0 {
                let op = pauli_string(space, &[(j, Axis::Z)])?.scale((rate / 2.0).sqrt());
                set.ops.push(CollapseOp { label: format!("dephasing_q{j}"), qubit: j, rate, operator: op });
            }
        }
    }
    Ok(set)
}

/// `λ ≃ ξ² / |Δ|`.
pub fn effective_coupling(xi: f64, detuning: f64) -> Result<f64> {
    if detuning == 0.0 || detuning.is_nan() {
        return Err(Error::InvalidArgument("zero detuning".into()));
    }
    Ok(xi * xi / detuning.abs())
}

/// A Hamiltonian affine in the drive amplitude: `H(Ω) = static_part + Ω·drive`.
#[derive(Clone, Debug)]
pub struct DriveSplit {
    pub static_part: Operator,
    pub drive: Operator,
}

impl DriveSplit {
    pub fn at(&self, omega: f64) -> Operator {
        let m = self.static_part.matrix() + self.drive.matrix() * C64::new(omega, 0.0);
        Operator::from_parts(self.static_part.space(), m, true)
    }
}

/// `sign · (Ω S_x + λ S_z²)`.
pub fn lmg_hamiltonian(space: HilbertSpace, omega: f64, lam: f64, sign: f64) -> Result<Operator> {
    Ok(lmg_parts(space, lam, sign)?.at(omega))
}

pub fn lmg_parts(space: HilbertSpace, lam: f64, sign: f64) -> Result<DriveSplit> {
    let s = collective_spin(space)?;
    let sz2 = s.sz.matrix() * s.sz.matrix();
    Ok(DriveSplit {
        static_part: Operator::from_parts(space, sz2 * C64::new(sign * lam, 0.0), true),
        drive: s.sx.scale(sign),
    })
}

/// Interaction-picture form of `-λS_z²` under the drive:
/// `(λ/2)[S_x² - cos(2Ωt)(S_z² - S_y²) + sin(2Ωt)(S_zS_y + S_yS_z)]`.
pub fn swap_hamiltonian(space: HilbertSpace, omega: f64, lam: f64, t: f64) -> Result<Operator> {
    let s = collective_spin(space)?;
    let (x, y, z) = (s.sx.matrix(), s.sy.matrix(), s.sz.matrix());
    let (c, sn) = ((2.0 * omega * t).cos(), (2.0 * omega * t).sin());
    let m =
        (x * x - (z * z - y * y) * C64::new(c, 0.0) + (z * y + y * z) * C64::new(sn, 0.0)) * C64::new(lam / 2.0, 0.0);
    Ok(Operator::from_parts(space, m, true))
}

/// Rotating-frame qubits-plus-resonator Hamiltonian at drive amplitude `omega_drive`.
pub fn circuit_qed_hamiltonian(
    device: &DeviceSpec,
    omega_drive: f64,
    drive_sign: f64,
    n_max: usize,
) -> Result<Operator> {
    Ok(circuit_qed_parts(device, drive_sign, n_max)?.at(omega_drive))
}

/// Static part: `(ω_b-ω_o)a†a + Σ(ω_q-ω_o)|e⟩⟨e| + Σξ_j(σ⁺a + σ⁻a†) + Σ_{j<k} b_jk(σ⁺σ⁻ + h.c.)`;
/// drive part: `sign · ½Σσ^x`.
pub fn circuit_qed_parts(device: &DeviceSpec, drive_sign: f64, n_max: usize) -> Result<DriveSplit> {
    device.validate()?;
    let n = device.n_qubits;
    let space = HilbertSpace::spin_resonator(n, n_max)?;
    let r = resonator_ops(space)?;
    let (a, ad) = (r.a.matrix(), r.a_dagger.matrix());
    let mut h = (ad * a) * C64::new(device.omega_b - device.omega_o, 0.0);
    let dq = device.omega_q - device.omega_o;
    let levels = space.photon_levels();
    for i in 0..space.dim() {
        h[(i, i)] += C64::new(dq * (i / levels).count_ones() as f64, 0.0);
    }
    for j in 0..n {
        let sp = pauli_string(space, &[(j, Axis::Plus)])?.into_matrix();
        let term = &sp * a;
        h += (&term + term.adjoint()) * C64::new(device.xi[j], 0.0);
    }
    for j in 0..n {
        for k in (j + 1)..n {
            let b = device.crosstalk_b[j][k];
            if b != 0.0 {
                let hop = pauli_string(space, &[(j, Axis::Plus), (k, Axis::Minus)])?.into_matrix();
                h += (&hop + hop.adjoint()) * C64::new(b, 0.0);
            }
        }
    }
    let drive = single_qubit_sum(space, Axis::X, &vec![0.5 * drive_sign; n])?;
    Ok(DriveSplit { static_part: Operator::from_parts(space, h, true), drive })
}

/// Anti-Hermitian first-order Schrieffer-Wolff generator
/// `S = Σ_j ξ_j/(ω_b - ω_q) (σ_j⁺a - σ_j⁻a†)`.
pub fn dispersive_generator(device: &DeviceSpec, n_max: usize) -> Result<DMatrix<C64>> {
    let space = HilbertSpace::spin_resonator(device.n_qubits, n_max)?;
    let r = resonator_ops(space)?;
    let delta = device.omega_b - device.omega_q;
    if delta == 0.0 {
        return Err(Error::InvalidDevice("qubits resonant with the resonator".into()));
    }
    let mut s = DMatrix::zeros(space.dim(), space.dim());
    for j in 0..device.n_qubits {
        let sp = pauli_string(space, &[(j, Axis::Plus)])?.into_matrix();
        let t = &sp * r.a.matrix();
        s += (&t - t.adjoint()) * C64::new(device.xi[j] / delta, 0.0);
    }
    Ok(s)
}

/// Unitary `e^{S}` mapping bare product states to dispersively dressed ones.
pub fn dispersive_dressing(device: &DeviceSpec, n_max: usize) -> Result<DMatrix<C64>> {
    let s = dispersive_generator(device, n_max)?;
    // e^{S} = exp(-i K) with Hermitian K = iS
    Ok(unitary_exp(&(s * C64::new(0.0, 1.0)), 1.0))
}
