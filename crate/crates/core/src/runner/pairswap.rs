//! Two-qubit exchange through the resonator and its effective coupling.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dynamics::{evolve_pure, IntegratorConfig, TimeDependentHamiltonian};
use crate::hilbert::{basis_state, StateData};
use crate::model::{circuit_qed_hamiltonian, to_mhz, DeviceSpec};
use crate::par::Exec;
use crate::runner::output::{Cell, Table};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairSwapSettings {
    pub duration: f64,
    pub dt: f64,
    pub sample_spacing: f64,
    pub n_max: usize,
}

impl Default for PairSwapSettings {
    fn default() -> Self {
        Self { duration: 600.0, dt: 0.02, sample_spacing: 1.0, n_max: 2 }
    }
}

/// Samples of the exchange signal at one operating point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwapTrace {
    pub times: Vec<f64>,
    pub p_eg: Vec<f64>,
    pub p_ge: Vec<f64>,
    /// `-2 Im(c_ge c_eg*)`, which is `sin(2gt)` for a pure exchange `g`.
    pub signal: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairSwapPoint {
    pub omega_op: f64,
    /// `Δ' = ω_op - ω_b`.
    pub detuning: f64,
    /// `ξ_j/Δ'` for the first qubit of the pair.
    pub xi_ratio: f64,
    /// Signed effective coupling from the fit, rad/ns.
    pub fitted_coupling: f64,
    /// `ξ_jξ_k/Δ' + b_jk`.
    pub predicted_coupling: f64,
    pub fit_residual_rms: f64,
    pub trace: SwapTrace,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairSwapResult {
    pub qubits: [usize; 2],
    pub points: Vec<PairSwapPoint>,
    /// Coupling against `ξ_j/Δ'`; its slope estimates `ξ_k` and its intercept `b_jk`.
    pub regression: Option<LineFit>,
    pub xi_second: f64,
    pub crosstalk: f64,
}

fn signal_fit(times: &[f64], values: &[f64], omega: f64) -> (f64, f64, f64) {
    let n = times.len();
    let a = DMatrix::from_fn(n, 3, |i, j| match j {
        0 => (omega * times[i]).sin(),
        1 => (omega * times[i]).cos(),
        _ => 1.0,
    });
    let b = DVector::from_column_slice(values);
    let svd = a.clone().svd(true, true);
    let x = svd.solve(&b, 1e-12).expect("svd with both factors");
    let r = (&a * &x - &b).norm();
    (x[0], x[1], r)
}

/// Fits `A sin(ωt) + B cos(ωt) + C` by scanning ω and polishing the best
/// grid point; returns `(ω, A, rms residual)`.
pub fn fit_oscillation(times: &[f64], values: &[f64]) -> Result<(f64, f64, f64)> {
    if times.len() != values.len() || times.len() < 8 {
        return Err(Error::InvalidArgument("need at least 8 matched samples".into()));
    }
    let span = times[times.len() - 1] - times[0];
    let spacing = span / (times.len() - 1) as f64;
    if !(span > 0.0) {
        return Err(Error::InvalidArgument("samples must span a positive time".into()));
    }
    let lo = std::f64::consts::PI / span;
    let hi = std::f64::consts::PI / spacing;
    let n_grid = 4000;
    let step = (hi - lo) / n_grid as f64;
    let cost = |w: f64| signal_fit(times, values, w).2;
    let mut best = (lo, f64::INFINITY);
    for k in 0..=n_grid {
        let w = lo + k as f64 * step;
        let c = cost(w);
        if c < best.1 {
            best = (w, c);
        }
    }
    let (mut a, mut b) = ((best.0 - step).max(lo * 0.5), best.0 + step);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let (x1, x2) = (b - g * (b - a), a + g * (b - a));
        if cost(x1) < cost(x2) {
            b = x2;
        } else {
            a = x1;
        }
    }
    let w = 0.5 * (a + b);
    let (amp, _, r) = signal_fit(times, values, w);
    if amp == 0.0 {
        return Err(Error::DegenerateFit("no oscillation found".into()));
    }
    Ok((w, amp, r / (times.len() as f64).sqrt()))
}

fn register_index(bits: &[usize]) -> usize {
    bits.iter().fold(0, |acc, &b| (acc << 1) | b)
}

/// Simulates `|e_j g_k⟩⊗|0⟩` for the pair `(j, k)` of `device` with both qubits
/// and the frame at `omega_op` and fits the exchange coupling.
pub fn run_pair_swap(
    device: &DeviceSpec,
    qubits: [usize; 2],
    omega_op: f64,
    settings: &PairSwapSettings,
) -> Result<PairSwapPoint> {
    if qubits[0] == qubits[1] {
        return Err(Error::InvalidArgument("pair swap needs two distinct qubits".into()));
    }
    let pair = device.subset(&qubits)?.at_operating_point(omega_op);
    pair.validate()?;
    let h = circuit_qed_hamiltonian(&pair, 0.0, 1.0, settings.n_max)?;
    let space = h.space();
    let psi0 = basis_state(space, &[1, 0], 0)?;
    let cfg =
        IntegratorConfig::uniform(settings.dt, settings.sample_spacing, settings.duration)?.with_exec(Exec::Sequential);
    let traj = evolve_pure(&TimeDependentHamiltonian::constant(&h), &psi0, &cfg)?;
    let levels = space.photon_levels();
    let (i_eg, i_ge) = (register_index(&[1, 0]) * levels, register_index(&[0, 1]) * levels);
    let mut trace = SwapTrace { times: Vec::new(), p_eg: Vec::new(), p_ge: Vec::new(), signal: Vec::new() };
    for (t, s) in &traj.checkpoints {
        let v = match s.data() {
            StateData::Pure(v) => v,
            StateData::Density(_) => unreachable!("closed evolution stays pure"),
        };
        let (c_eg, c_ge) = (v[i_eg], v[i_ge]);
        trace.times.push(*t);
        trace.p_eg.push(c_eg.norm_sqr());
        trace.p_ge.push(c_ge.norm_sqr());
        trace.signal.push(-2.0 * (c_ge * c_eg.conj()).im);
    }
    let (w, amp, rms) = fit_oscillation(&trace.times, &trace.signal)?;
    let detuning = omega_op - pair.omega_b;
    Ok(PairSwapPoint {
        omega_op,
        detuning,
        xi_ratio: pair.xi[0] / detuning,
        fitted_coupling: amp.signum() * w / 2.0,
        predicted_coupling: pair.xi[0] * pair.xi[1] / detuning + pair.crosstalk_b[0][1],
        fit_residual_rms: rms,
        trace,
    })
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<LineFit> {
    let n = x.len() as f64;
    if x.len() < 2 || x.len() != y.len() {
        return None;
    }
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(LineFit { slope, intercept: my - slope * mx, r_squared })
}

/// [`run_pair_swap`] at several operating points plus the linear regression.
pub fn pair_swap_scan(
    device: &DeviceSpec,
    qubits: [usize; 2],
    operating_points: &[f64],
    settings: &PairSwapSettings,
) -> Result<PairSwapResult> {
    let points =
        crate::par::map_slice(Exec::default(), operating_points, |&w| run_pair_swap(device, qubits, w, settings))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
    let x: Vec<f64> = points.iter().map(|p| p.xi_ratio).collect();
    let y: Vec<f64> = points.iter().map(|p| p.fitted_coupling).collect();
    Ok(PairSwapResult {
        qubits,
        regression: linear_fit(&x, &y),
        xi_second: device.xi[qubits[1]],
        crosstalk: device.crosstalk_b[qubits[0]][qubits[1]],
        points,
    })
}

impl PairSwapResult {
    pub fn tables(&self) -> Vec<Table> {
        let mut osc =
            Table::new("pair_swap", &["operating_point_ghz_over_2pi", "time_ns", "p_eg", "p_ge", "exchange_signal"]);
        let mut fit = Table::new(
            "pair_swap_fit",
            &[
                "operating_point_ghz_over_2pi",
                "detuning_mhz_over_2pi",
                "xi_over_detuning",
                "fitted_coupling_mhz_over_2pi",
                "predicted_coupling_mhz_over_2pi",
                "fit_residual_rms",
            ],
        );
        for p in &self.points {
            let f = to_mhz(p.omega_op) * 1e-3;
            for i in 0..p.trace.times.len() {
                osc.push(vec![
                    Cell::Num(f),
                    Cell::Num(p.trace.times[i]),
                    Cell::Num(p.trace.p_eg[i]),
                    Cell::Num(p.trace.p_ge[i]),
                    Cell::Num(p.trace.signal[i]),
                ]);
            }
            fit.push(vec![
                Cell::Num(f),
                Cell::Num(to_mhz(p.detuning)),
                Cell::Num(p.xi_ratio),
                Cell::Num(to_mhz(p.fitted_coupling)),
                Cell::Num(to_mhz(p.predicted_coupling)),
                Cell::Num(p.fit_residual_rms),
            ]);
        }
        vec![osc, fit]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ghz, mhz};

    #[test]
    fn oscillation_fit_recovers_frequency_and_sign() {
        let t: Vec<f64> = (0..400).map(|k| k as f64).collect();
        for w in [0.031, -0.05] {
            let y: Vec<f64> = t.iter().map(|&x| 0.9 * (w * x).sin() + 0.02).collect();
            let (wf, a, r) = fit_oscillation(&t, &y).unwrap();
            assert!((wf - w.abs()).abs() < 1e-8, "{wf}");
            assert_eq!(a.signum(), w.signum());
            assert!(r < 1e-8);
        }
    }

    #[test]
    fn line_fit_exact() {
        let f = linear_fit(&[1.0, 2.0, 4.0], &[3.0, 5.0, 9.0]).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-14 && (f.intercept - 1.0).abs() < 1e-14);
        assert!(linear_fit(&[1.0], &[1.0]).is_none());
    }

    #[test]
    fn equal_couplings_without_crosstalk_swap_at_xi_squared_over_detuning() {
        let d = DeviceSpec::homogeneous(2, mhz(10.0), ghz(5.796), ghz(5.6895)).unwrap();
        let settings = PairSwapSettings { duration: 1200.0, dt: 0.05, sample_spacing: 2.0, n_max: 1 };
        let p = run_pair_swap(&d, [0, 1], d.omega_o, &settings).unwrap();
        let rate = mhz(10.0).powi(2) / (d.omega_o - d.omega_b);
        assert!((p.predicted_coupling - rate).abs() < 1e-15);
        assert!((p.fitted_coupling / rate - 1.0).abs() < 0.03, "{} vs {rate}", p.fitted_coupling);
    }
}
