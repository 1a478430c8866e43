//! Populations, correlations, fringe fits, GHZ fidelity, the spin Wigner
//! function and the readout-error channel.
//!
//! All qubit observables act on the qubit-only state: the resonator is traced
//! out and Dicke states are embedded into the full register.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::hilbert::{dicke_isometry, QuantumState, SpaceKind, StateData};
use crate::model::DeviceSpec;
use crate::par::{self, Exec};
use crate::{Error, Result, C64};

/// Qubit register view of a state.
enum QubitView {
    Pure(DVector<C64>),
    Mixed(DMatrix<C64>),
}

fn qubit_view(state: &QuantumState) -> QubitView {
    match (state.space().kind(), state.data()) {
        (SpaceKind::FullSpin, StateData::Pure(v)) => QubitView::Pure(v.clone()),
        (SpaceKind::FullSpin, StateData::Density(r)) => QubitView::Mixed(r.clone()),
        (SpaceKind::Dicke, StateData::Pure(v)) => {
            QubitView::Pure(dicke_isometry(state.space().n_qubits()).embed_vector(v))
        }
        _ => match state.reduce_to_qubits().into_data() {
            StateData::Pure(v) => QubitView::Pure(v),
            StateData::Density(r) => QubitView::Mixed(r),
        },
    }
}

impl QubitView {
    fn element(&self, a: usize, b: usize) -> C64 {
        match self {
            QubitView::Pure(v) => v[a] * v[b].conj(),
            QubitView::Mixed(r) => r[(a, b)],
        }
    }
}

/// Probability of each computational bit string of the qubit register.
pub fn bitstring_distribution(state: &QuantumState) -> Vec<f64> {
    let space = state.space();
    match space.kind() {
        SpaceKind::Dicke => {
            let n = space.n_qubits();
            let probs = state.basis_probabilities();
            let counts: Vec<f64> = (0..=n).map(|k| crate::hilbert::binomial(n, k)).collect();
            (0..(1usize << n))
                .map(|b| {
                    let k = b.count_ones() as usize;
                    probs[k] / counts[k]
                })
                .collect()
        }
        SpaceKind::FullSpin => state.basis_probabilities(),
        SpaceKind::SpinResonator => {
            let levels = space.photon_levels();
            let mut out = vec![0.0; 1 << space.n_qubits()];
            for (i, p) in state.basis_probabilities().into_iter().enumerate() {
                out[i / levels] += p;
            }
            out
        }
    }
}

/// `P_n^e`: total probability of bit strings with `n` excited qubits, `n = 0..N`.
pub fn excitation_populations(state: &QuantumState) -> Vec<f64> {
    let n = state.space().n_qubits();
    if state.space().kind() == SpaceKind::Dicke {
        return state.basis_probabilities();
    }
    populations_from_distribution(&bitstring_distribution(state), n)
}

/// Groups a bit-string distribution by excitation number.
pub fn populations_from_distribution(dist: &[f64], n_qubits: usize) -> Vec<f64> {
    let mut out = vec![0.0; n_qubits + 1];
    for (b, p) in dist.iter().enumerate() {
        out[b.count_ones() as usize] += p;
    }
    out
}

/// Pair average of `⟨σ_j^z σ_k^z⟩`. A string with `k` excitations has
/// `Σ_{j<l} z_j z_l = ((2k - N)² - N)/2`, so only `P_n^e` enters.
pub fn longitudinal_correlation(state: &QuantumState) -> Result<f64> {
    longitudinal_from_populations(&excitation_populations(state))
}

pub fn longitudinal_from_populations(pops: &[f64]) -> Result<f64> {
    let n = pops.len().saturating_sub(1);
    if n < 2 {
        return Err(Error::InvalidArgument("longitudinal correlation needs at least two qubits".into()));
    }
    let nf = n as f64;
    let sum: f64 = pops
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let m = 2.0 * k as f64 - nf;
            p * (m * m - nf)
        })
        .sum();
    Ok(sum / (nf * (nf - 1.0)))
}

/// `ρ_{e…e; g…g} = ⟨e…e|ρ|g…g⟩`.
pub fn coherence_element(state: &QuantumState) -> C64 {
    let space = state.space();
    let n = space.n_qubits();
    match space.kind() {
        SpaceKind::Dicke => element(state.data(), n, 0),
        SpaceKind::FullSpin => element(state.data(), (1 << n) - 1, 0),
        SpaceKind::SpinResonator => {
            let levels = space.photon_levels();
            let top = ((1usize << n) - 1) * levels;
            (0..levels).map(|p| element(state.data(), top + p, p)).sum()
        }
    }
}

fn element(data: &StateData, a: usize, b: usize) -> C64 {
    match data {
        StateData::Pure(v) => v[a] * v[b].conj(),
        StateData::Density(r) => r[(a, b)],
    }
}

/// Populations of `|g…g⟩` and `|e…e⟩`.
pub fn extremal_populations(state: &QuantumState) -> (f64, f64) {
    let p = excitation_populations(state);
    (p[0], p[p.len() - 1])
}

/// `⟨⊗_j σ_j^β⟩ - Π_j ⟨σ_j^β⟩` with `σ^β = cos β σ^x + sin β σ^y`.
pub fn transverse_correlation(state: &QuantumState, beta: f64) -> f64 {
    transverse_correlations(state, &[beta])[0]
}

/// [`transverse_correlation`] over a grid of angles, sharing the reduced state.
pub fn transverse_correlations(state: &QuantumState, betas: &[f64]) -> Vec<f64> {
    let n = state.space().n_qubits();
    let view = qubit_view(state);
    let dim = 1usize << n;
    // ⊗σ^β maps |b⟩ to e^{iβ(2k_b - N)} |b̄⟩, so ⟨⊗σ^β⟩ = Σ_b ρ_{b, b̄} e^{iβ(2k_b - N)}
    let mask = dim - 1;
    let mut by_k = vec![C64::new(0.0, 0.0); n + 1];
    for b in 0..dim {
        by_k[b.count_ones() as usize] += view.element(b, b ^ mask);
    }
    // single-qubit coherences ρ^{(j)}_{eg}
    let coh: Vec<C64> = (0..n)
        .map(|j| {
            let bit = 1usize << (n - 1 - j);
            (0..dim).filter(|b| b & bit == 0).map(|b| view.element(b | bit, b)).sum()
        })
        .collect();
    betas
        .iter()
        .map(|&beta| {
            let joint: C64 = by_k
                .iter()
                .enumerate()
                .map(|(k, z)| z * C64::from_polar(1.0, beta * (2.0 * k as f64 - n as f64)))
                .sum();
            let product: f64 = coh.iter().map(|c| 2.0 * (c * C64::from_polar(1.0, beta)).re).product();
            joint.re - product
        })
        .collect()
}

/// Uniform grid of `n` angles over `[0, π)`.
pub fn default_beta_grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| PI * k as f64 / n as f64).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FringeFit {
    /// `A ≥ 0` in `A cos(Nβ - γ) + c`.
    pub amplitude: f64,
    /// `γ ∈ [-π, π)`.
    pub phase: f64,
    pub offset: f64,
    /// Equal to the amplitude for fringes of the normalized correlator.
    pub visibility: f64,
    /// `|ρ_{e…e;g…g}| = A/2` under `𝒞 = 2|ρ| cos(Nβ - γ)`.
    pub coherence_magnitude: f64,
    pub residual_rms: f64,
    pub n_samples: usize,
}

/// Linear least squares of `a cos Nβ + b sin Nβ + c`.
pub fn fringe_fit(betas: &[f64], values: &[f64], n_qubits: usize) -> Result<FringeFit> {
    if betas.len() != values.len() {
        return Err(Error::DimensionMismatch { expected: betas.len(), got: values.len() });
    }
    if betas.len() < 8 {
        return Err(Error::InvalidArgument(format!("fringe fit needs at least 8 samples, got {}", betas.len())));
    }
    if n_qubits == 0 {
        return Err(Error::InvalidArgument("fringe fit needs N >= 1".into()));
    }
    let nf = n_qubits as f64;
    let m = betas.len();
    let design = DMatrix::from_fn(m, 3, |i, j| match j {
        0 => (nf * betas[i]).cos(),
        1 => (nf * betas[i]).sin(),
        _ => 1.0,
    });
    let y = DVector::from_column_slice(values);
    let svd = design.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smax > 0.0) || smin / smax < 1e-8 {
        return Err(Error::DegenerateFit(format!("design matrix condition {:e}", smin / smax)));
    }
    let coef = svd.solve(&y, 0.0).map_err(|e| Error::DegenerateFit(e.to_string()))?;
    let (a, b, c) = (coef[0], coef[1], coef[2]);
    let amplitude = a.hypot(b);
    let mut phase = b.atan2(a);
    if phase >= PI {
        phase -= 2.0 * PI;
    }
    let resid = &design * &coef - &y;
    let residual_rms = (resid.norm_squared() / m as f64).sqrt();
    Ok(FringeFit {
        amplitude,
        phase,
        offset: c,
        visibility: amplitude,
        coherence_magnitude: amplitude / 2.0,
        residual_rms,
        n_samples: m,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WignerGrid {
    pub thetas: Vec<f64>,
    pub phis: Vec<f64>,
    /// `values[i][j]` at `(thetas[i], phis[j])`.
    pub values: Vec<Vec<f64>>,
    pub kernel_normalized: bool,
}

impl WignerGrid {
    /// Grid of `n_theta` points over `[0, π]` and `n_phi` over `[0, 2π)`.
    pub fn axes(n_theta: usize, n_phi: usize) -> (Vec<f64>, Vec<f64>) {
        let th =
            if n_theta == 1 { vec![0.0] } else { (0..n_theta).map(|i| PI * i as f64 / (n_theta - 1) as f64).collect() };
        let ph = (0..n_phi).map(|j| 2.0 * PI * j as f64 / n_phi as f64).collect();
        (th, ph)
    }

    /// Values rescaled to the other kernel convention.
    pub fn with_normalization(&self, normalized: bool, n_qubits: usize) -> WignerGrid {
        if normalized == self.kernel_normalized {
            return self.clone();
        }
        let f = 2f64.powi(n_qubits as i32);
        let s = if normalized { 1.0 / f } else { f };
        WignerGrid {
            thetas: self.thetas.clone(),
            phis: self.phis.clone(),
            values: self.values.iter().map(|r| r.iter().map(|v| v * s).collect()).collect(),
            kernel_normalized: normalized,
        }
    }
}

/// `U(θ, φ) = exp[-iθ/2 (sin φ σ^x - cos φ σ^y)]` in (g, e) order.
pub fn wigner_rotation(theta: f64, phi: f64) -> [[C64; 2]; 2] {
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    [[C64::new(c, 0.0), -C64::from_polar(s, phi)], [C64::from_polar(s, -phi), C64::new(c, 0.0)]]
}

/// Applies `g` to every qubit of a register vector (qubit 0 most significant).
pub fn apply_to_all_qubits(g: &[[C64; 2]; 2], psi: &mut [C64], n_qubits: usize) {
    for j in 0..n_qubits {
        let bit = 1usize << (n_qubits - 1 - j);
        for b in 0..psi.len() {
            if b & bit == 0 {
                let (x0, x1) = (psi[b], psi[b | bit]);
                psi[b] = g[0][0] * x0 + g[0][1] * x1;
                psi[b | bit] = g[1][0] * x0 + g[1][1] * x1;
            }
        }
    }
}

/// `𝒲(θ, φ) = Tr[ρ U^{⊗N} Π U^{†⊗N}]` with `Π = ⊗_j (1 - √3 σ_j^z)`, divided by
/// `2^N` when `normalized`.
pub fn wigner(state: &QuantumState, thetas: &[f64], phis: &[f64], normalized: bool) -> Result<WignerGrid> {
    wigner_with(Exec::default(), state, thetas, phis, normalized)
}

pub fn wigner_with(
    exec: Exec,
    state: &QuantumState,
    thetas: &[f64],
    phis: &[f64],
    normalized: bool,
) -> Result<WignerGrid> {
    if thetas.is_empty() || phis.is_empty() {
        return Err(Error::InvalidArgument("Wigner grid must be non-empty".into()));
    }
    let n = state.space().n_qubits();
    let dim = 1usize << n;
    let s3 = 3f64.sqrt();
    let scale = if normalized { 0.5 } else { 1.0 };
    let kernel: Vec<f64> = (0..dim)
        .map(|b| {
            let k = b.count_ones() as i32;
            ((1.0 + s3) * scale).powi(n as i32 - k) * ((1.0 - s3) * scale).powi(k)
        })
        .collect();
    // ρ = Σ_i w_i |v_i⟩⟨v_i|, so 𝒲 is the weighted sum of pure-state values
    let components: Vec<(f64, Vec<C64>)> = match qubit_view(state) {
        QubitView::Pure(v) => vec![(1.0, v.iter().cloned().collect())],
        QubitView::Mixed(r) => {
            let eig = ((&r + r.adjoint()) * C64::new(0.5, 0.0)).symmetric_eigen();
            (0..dim)
                .filter(|&i| eig.eigenvalues[i].abs() > 1e-15)
                .map(|i| (eig.eigenvalues[i], eig.eigenvectors.column(i).iter().cloned().collect()))
                .collect()
        }
    };
    let points: Vec<(f64, f64)> = thetas.iter().flat_map(|&t| phis.iter().map(move |&p| (t, p))).collect();
    let flat = par::map_slice(exec, &points, |&(theta, phi)| {
        let u = wigner_rotation(theta, phi);
        let udag = [[u[0][0].conj(), u[1][0].conj()], [u[0][1].conj(), u[1][1].conj()]];
        let mut buf = vec![C64::new(0.0, 0.0); dim];
        let mut total = 0.0;
        for (w, v) in &components {
            buf.copy_from_slice(v);
            apply_to_all_qubits(&udag, &mut buf, n);
            let val: f64 = buf.iter().zip(&kernel).map(|(z, k)| z.norm_sqr() * k).sum();
            total += w * val;
        }
        total
    });
    let values = flat.chunks(phis.len()).map(|r| r.to_vec()).collect();
    Ok(WignerGrid { thetas: thetas.to_vec(), phis: phis.to_vec(), values, kernel_normalized: normalized })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GhzPhase {
    Fixed(f64),
    Optimize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GhzFidelity {
    /// `⟨GHZ_γ|ρ|GHZ_γ⟩` with `|GHZ_γ⟩ = (|g…g⟩ + e^{iγ}|e…e⟩)/√2`.
    pub overlap: f64,
    pub gamma: f64,
    /// `(P_g + P_e)/2 + |ρ_{e…e;g…g}|`.
    pub population_form: f64,
}

pub fn ghz_fidelity(state: &QuantumState, phase: GhzPhase) -> GhzFidelity {
    let (pg, pe) = extremal_populations(state);
    let c = coherence_element(state);
    let gamma = match phase {
        GhzPhase::Fixed(g) => g,
        GhzPhase::Optimize => c.arg(),
    };
    GhzFidelity {
        overlap: 0.5 * (pg + pe) + (C64::from_polar(1.0, -gamma) * c).re,
        gamma,
        population_form: 0.5 * (pg + pe) + c.norm(),
    }
}

/// Applies the per-qubit confusion matrix `[[F₀, 1-F₁], [1-F₀, F₁]]`.
pub fn apply_readout_error(dist: &[f64], device: &DeviceSpec) -> Result<Vec<f64>> {
    let n = device.n_qubits;
    if dist.len() != 1 << n {
        return Err(Error::DimensionMismatch { expected: 1 << n, got: dist.len() });
    }
    let total: f64 = dist.iter().sum();
    if dist.iter().any(|&p| p < -1e-12) || (total - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidArgument(format!("not a probability distribution (sum {total})")));
    }
    let mut out = dist.to_vec();
    for j in 0..n {
        let (f0, f1) = (device.f_g[j], device.f_e[j]);
        let bit = 1usize << (n - 1 - j);
        for b in 0..out.len() {
            if b & bit == 0 {
                let (p0, p1) = (out[b], out[b | bit]);
                out[b] = f0 * p0 + (1.0 - f1) * p1;
                out[b | bit] = (1.0 - f0) * p0 + f1 * p1;
            }
        }
    }
    Ok(out)
}
