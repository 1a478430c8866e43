//! Parity-resolved spectra, degeneracy scans, perturbative drive shifts and
//! adiabaticity diagnostics.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dynamics::{TimeDependentHamiltonian, TrajectoryRecord};
use crate::hilbert::{parity_operator, HilbertSpace, Operator, StateData};
use crate::model::lmg_hamiltonian;
use crate::par::{self, Exec};
use crate::{Error, Result, C64};

/// Splittings below this (rad/ns) are treated as degenerate.
pub const DEFAULT_DEGENERACY_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumTarget {
    /// Lowest level of `H = -ΩS_x - λS_z²`.
    GroundOfH,
    /// Highest level of `H_eff = ΩS_x + λS_z²`.
    HighestOfHeff,
}

impl SpectrumTarget {
    fn sign(self) -> f64 {
        match self {
            SpectrumTarget::GroundOfH => -1.0,
            SpectrumTarget::HighestOfHeff => 1.0,
        }
    }

    fn highest(self) -> bool {
        self == SpectrumTarget::HighestOfHeff
    }
}

#[derive(Clone, Debug)]
pub struct ParityEigen {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Column `i` belongs to `eigenvalues[i]`.
    pub eigenvectors: DMatrix<C64>,
    /// `⟨v_i|P|v_i⟩`, ±1.
    pub parities: Vec<f64>,
}

impl ParityEigen {
    /// Index of the extremal level within the sector of parity `p`.
    pub fn sector_extremum(&self, p: f64, highest: bool) -> Option<usize> {
        let mut idx = (0..self.eigenvalues.len()).filter(|&i| (self.parities[i] - p).abs() < 0.5);
        if highest {
            idx.next_back()
        } else {
            idx.next()
        }
    }
}

/// Orthonormal bases of the `+1` and `-1` eigenspaces of an involution.
fn parity_sectors(p: &DMatrix<C64>) -> (DMatrix<C64>, DMatrix<C64>) {
    let d = p.nrows();
    let is_permutation = p.iter().all(|z| z.im == 0.0 && (z.re == 0.0 || z.re == 1.0))
        && (0..d).all(|c| p.column(c).iter().filter(|z| z.re == 1.0).count() == 1);
    if is_permutation {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let (mut plus, mut minus) = (Vec::new(), Vec::new());
        for i in 0..d {
            let j = (0..d).find(|&k| p[(k, i)].re == 1.0).expect("permutation column");
            if j == i {
                let mut v = DVector::zeros(d);
                v[i] = C64::new(1.0, 0.0);
                plus.push(v);
            } else if i < j {
                let mut vp = DVector::zeros(d);
                let mut vm = DVector::zeros(d);
                vp[i] = C64::new(r, 0.0);
                vp[j] = C64::new(r, 0.0);
                vm[i] = C64::new(r, 0.0);
                vm[j] = C64::new(-r, 0.0);
                plus.push(vp);
                minus.push(vm);
            }
        }
        return (columns(d, &plus), columns(d, &minus));
    }
    let eig = ((p + p.adjoint()) * C64::new(0.5, 0.0)).symmetric_eigen();
    let pick = |sign: f64| -> Vec<DVector<C64>> {
        (0..d).filter(|&i| eig.eigenvalues[i] * sign > 0.0).map(|i| eig.eigenvectors.column(i).into_owned()).collect()
    };
    (columns(d, &pick(1.0)), columns(d, &pick(-1.0)))
}

fn columns(d: usize, v: &[DVector<C64>]) -> DMatrix<C64> {
    if v.is_empty() {
        DMatrix::zeros(d, 0)
    } else {
        DMatrix::from_columns(v)
    }
}

/// Diagonalizes `H` within each parity sector of `P`, so every eigenvector is
/// parity-definite even inside degenerate blocks.
pub fn eigendecompose_with_parity(h: &Operator, p: &Operator) -> Result<ParityEigen> {
    let c = h.commutator_norm(p)?;
    let scale = 1.0 + h.matrix().norm();
    if c > 1e-10 * scale {
        return Err(Error::NotCommuting(c));
    }
    let (bp, bm) = parity_sectors(p.matrix());
    let mut levels: Vec<(f64, DVector<C64>, f64)> = Vec::with_capacity(h.space().dim());
    for (basis, label) in [(bp, 1.0), (bm, -1.0)] {
        if basis.ncols() == 0 {
            continue;
        }
        let hs = basis.adjoint() * h.matrix() * &basis;
        let hs = (&hs + hs.adjoint()) * C64::new(0.5, 0.0);
        let eig = hs.symmetric_eigen();
        for k in 0..eig.eigenvalues.len() {
            let v = &basis * eig.eigenvectors.column(k);
            levels.push((eig.eigenvalues[k], v, label));
        }
    }
    levels.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.2.total_cmp(&a.2)));
    let vecs: Vec<DVector<C64>> = levels.iter().map(|l| l.1.clone()).collect();
    let eigenvectors = DMatrix::from_columns(&vecs);
    let parities = vecs.iter().map(|v| v.dotc(&(p.matrix() * v)).re).collect();
    Ok(ParityEigen { eigenvalues: levels.iter().map(|l| l.0).collect(), eigenvectors, parities })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    /// `Ω/λ`.
    pub control: f64,
    pub omega: f64,
    pub eigenvalues: Vec<f64>,
    pub parities: Vec<f64>,
    /// Distance between the extremal levels of the two parity sectors.
    pub splitting: f64,
    /// Distance from the extremal pair to the next level inward.
    pub gap_to_next: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumScan {
    pub n_qubits: usize,
    pub lam: f64,
    pub target: SpectrumTarget,
    pub points: Vec<ScanPoint>,
}

pub fn degeneracy_scan(
    n_qubits: usize,
    lam: f64,
    omega_values: &[f64],
    target: SpectrumTarget,
) -> Result<SpectrumScan> {
    degeneracy_scan_with(Exec::default(), n_qubits, lam, omega_values, target)
}

/// Dicke-space scan of the LMG spectrum; points are independent and mapped in parallel.
pub fn degeneracy_scan_with(
    exec: Exec,
    n_qubits: usize,
    lam: f64,
    omega_values: &[f64],
    target: SpectrumTarget,
) -> Result<SpectrumScan> {
    if lam == 0.0 {
        return Err(Error::InvalidArgument("scan needs a nonzero λ".into()));
    }
    if omega_values.iter().any(|&o| !(o >= 0.0)) || omega_values.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("drive values must be nonnegative and sorted".into()));
    }
    let space = HilbertSpace::dicke(n_qubits)?;
    let parity = parity_operator(space);
    let points = par::map_slice(exec, omega_values, |&omega| -> Result<ScanPoint> {
        let h = lmg_hamiltonian(space, omega, lam, target.sign())?;
        let pe = eigendecompose_with_parity(&h, &parity)?;
        let highest = target.highest();
        let ip = pe.sector_extremum(1.0, highest);
        let im = pe.sector_extremum(-1.0, highest);
        let splitting = match (ip, im) {
            (Some(a), Some(b)) => (pe.eigenvalues[a] - pe.eigenvalues[b]).abs(),
            _ => f64::NAN,
        };
        let e = &pe.eigenvalues;
        let nlev = e.len();
        let gap_to_next = if nlev >= 3 {
            if highest {
                e[nlev - 2] - e[nlev - 3]
            } else {
                e[2] - e[1]
            }
        } else {
            f64::NAN
        };
        Ok(ScanPoint {
            control: omega / lam.abs(),
            omega,
            eigenvalues: pe.eigenvalues.clone(),
            parities: pe.parities.clone(),
            splitting,
            gap_to_next,
        })
    });
    Ok(SpectrumScan { n_qubits, lam, target, points: points.into_iter().collect::<Result<_>>()? })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbativeShifts {
    pub j: f64,
    pub omega: f64,
    pub lam: f64,
    /// `m = -J … J`.
    pub m_values: Vec<f64>,
    pub eta: Vec<f64>,
    /// `Ω_m = Ω√((J-m)(J+m+1))`, indexed like `m_values`.
    pub omega_m: Vec<f64>,
    /// `λ_m = (2m+1)λ`, indexed like `m_values`.
    pub lambda_m: Vec<f64>,
}

impl PerturbativeShifts {
    pub fn eta_at(&self, m: f64) -> Option<f64> {
        self.m_values.iter().position(|&x| (x - m).abs() < 1e-9).map(|i| self.eta[i])
    }
}

/// Second-order drive shifts `η_m = Ω_m²/λ_m - Ω_{m-1}²/λ_{m-1}` for
/// `|m| < J` and `η_{±J} = -2JΩ²/((2J-1)λ)`.
pub fn perturbative_shifts(n_qubits: usize, omega: f64, lam: f64) -> Result<PerturbativeShifts> {
    if lam == 0.0 {
        return Err(Error::InvalidArgument("λ = 0 makes every shift singular".into()));
    }
    if n_qubits < 2 {
        return Err(Error::InvalidArgument("J = 1/2 makes the edge shift singular".into()));
    }
    if n_qubits % 2 == 1 {
        return Err(Error::InvalidArgument("half-integer J hits λ_{-1/2} = 0".into()));
    }
    let j = n_qubits as f64 / 2.0;
    let m_values: Vec<f64> = (0..=n_qubits).map(|k| k as f64 - j).collect();
    let om = |m: f64| omega * ((j - m) * (j + m + 1.0)).max(0.0).sqrt();
    let lm = |m: f64| (2.0 * m + 1.0) * lam;
    let edge = -2.0 * j * omega * omega / ((2.0 * j - 1.0) * lam);
    let eta =
        m_values
            .iter()
            .map(|&m| {
                if (m.abs() - j).abs() < 1e-9 {
                    edge
                } else {
                    om(m).powi(2) / lm(m) - om(m - 1.0).powi(2) / lm(m - 1.0)
                }
            })
            .collect();
    Ok(PerturbativeShifts {
        j,
        omega,
        lam,
        omega_m: m_values.iter().map(|&m| om(m)).collect(),
        lambda_m: m_values.iter().map(|&m| lm(m)).collect(),
        m_values,
        eta,
    })
}

/// Exact level shifts of `ΩS_x + λS_z²` relative to `λm²`, indexed by `m = -J … J`.
/// The two levels sharing `|m|` are assigned to `-|m|` and `+|m|` in ascending order.
pub fn exact_drive_shifts(n_qubits: usize, omega: f64, lam: f64) -> Result<Vec<f64>> {
    let space = HilbertSpace::dicke(n_qubits)?;
    let h = lmg_hamiltonian(space, omega, lam, 1.0)?;
    let pe = eigendecompose_with_parity(&h, &parity_operator(space))?;
    let j = n_qubits as f64 / 2.0;
    let d = n_qubits + 1;
    // attribute each eigenvector to the |m| carrying most of its weight
    let mut groups: Vec<Vec<f64>> = vec![Vec::new(); n_qubits / 2 + 1];
    for i in 0..d {
        let v = pe.eigenvectors.column(i);
        let mut best = (0usize, -1.0);
        for g in 0..groups.len() {
            let m = g as f64 + if n_qubits % 2 == 1 { 0.5 } else { 0.0 };
            let (ka, kb) = ((j - m).round() as usize, (j + m).round() as usize);
            let w = v[ka].norm_sqr() + if kb != ka { v[kb].norm_sqr() } else { 0.0 };
            if w > best.1 {
                best = (g, w);
            }
        }
        groups[best.0].push(pe.eigenvalues[i]);
    }
    let mut out = vec![f64::NAN; d];
    for (g, levels) in groups.iter_mut().enumerate() {
        let m = g as f64 + if n_qubits % 2 == 1 { 0.5 } else { 0.0 };
        levels.sort_by(f64::total_cmp);
        let base = lam * m * m;
        let (ka, kb) = ((j - m).round() as usize, (j + m).round() as usize);
        match levels.len() {
            1 => out[kb] = levels[0] - base,
            2 => {
                out[ka] = levels[0] - base;
                out[kb] = levels[1] - base;
            }
            _ => return Err(Error::InvalidState("could not attribute levels to m".into())),
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdiabaticityReport {
    pub times: Vec<f64>,
    /// `|⟨ψ(t)|φ(t)⟩|²`, or the weight in the extremal two-level space when it is degenerate.
    pub overlaps: Vec<f64>,
    /// Splitting between the sector extrema at each checkpoint.
    pub splittings: Vec<f64>,
    /// 1 or 2: dimension of the target space used.
    pub target_dims: Vec<usize>,
}

/// Overlap of a closed-system trajectory with the tracked extremal eigenstate
/// of `H(t)`. The state is followed between the two sector extrema by maximal
/// overlap with its predecessor.
pub fn adiabaticity_overlap(
    trajectory: &TrajectoryRecord,
    h: &TimeDependentHamiltonian,
    highest: bool,
    degeneracy_tol: f64,
) -> Result<AdiabaticityReport> {
    let space = h.space();
    let parity = parity_operator(space);
    let mut report =
        AdiabaticityReport { times: Vec::new(), overlaps: Vec::new(), splittings: Vec::new(), target_dims: Vec::new() };
    let mut prev: Option<DVector<C64>> = None;
    for (t, state) in &trajectory.checkpoints {
        let psi = match state.data() {
            StateData::Pure(v) => v,
            StateData::Density(_) => {
                return Err(Error::InvalidState("adiabaticity needs a pure trajectory".into()));
            }
        };
        if state.space() != space {
            return Err(Error::DimensionMismatch { expected: space.dim(), got: state.space().dim() });
        }
        let pe = eigendecompose_with_parity(&h.operator_at(*t), &parity)?;
        let cands: Vec<usize> =
            [pe.sector_extremum(1.0, highest), pe.sector_extremum(-1.0, highest)].into_iter().flatten().collect();
        let vec_of = |i: usize| pe.eigenvectors.column(i).into_owned();
        let splitting =
            if cands.len() == 2 { (pe.eigenvalues[cands[0]] - pe.eigenvalues[cands[1]]).abs() } else { f64::INFINITY };
        let tracked = match &prev {
            None => {
                let pick = |a: &&usize, b: &&usize| pe.eigenvalues[**a].total_cmp(&pe.eigenvalues[**b]);
                if highest {
                    *cands.iter().max_by(pick).expect("nonempty spectrum")
                } else {
                    *cands.iter().min_by(pick).expect("nonempty spectrum")
                }
            }
            Some(p) => *cands
                .iter()
                .max_by(|a, b| p.dotc(&vec_of(**a)).norm_sqr().total_cmp(&p.dotc(&vec_of(**b)).norm_sqr()))
                .expect("nonempty spectrum"),
        };
        let (overlap, dims) = if splitting < degeneracy_tol {
            (cands.iter().map(|&i| vec_of(i).dotc(psi).norm_sqr()).sum(), cands.len())
        } else {
            (vec_of(tracked).dotc(psi).norm_sqr(), 1)
        };
        prev = Some(vec_of(tracked));
        report.times.push(*t);
        report.overlaps.push(overlap);
        report.splittings.push(splitting);
        report.target_dims.push(dims);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::plus_state;

    #[test]
    fn zero_drive_extremal_pair_is_parity_resolved() {
        let space = HilbertSpace::dicke(6).unwrap();
        let h = lmg_hamiltonian(space, 0.0, 1.0, 1.0).unwrap();
        let pe = eigendecompose_with_parity(&h, &parity_operator(space)).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        for p in [1.0, -1.0] {
            let i = pe.sector_extremum(p, true).unwrap();
            assert!((pe.eigenvalues[i] - 9.0).abs() < 1e-12);
            let v = pe.eigenvectors.column(i);
            assert!((v[0].re.abs() - r).abs() < 1e-12 && (v[6].re.abs() - r).abs() < 1e-12);
            assert!((v[6].re * v[0].re.signum() - p * r).abs() < 1e-12);
        }
    }

    #[test]
    fn pure_drive_top_state_is_x() {
        let space = HilbertSpace::dicke(6).unwrap();
        let h = lmg_hamiltonian(space, 0.7, 0.0, 1.0).unwrap();
        let pe = eigendecompose_with_parity(&h, &parity_operator(space)).unwrap();
        let top = pe.eigenvalues.len() - 1;
        assert_eq!(pe.parities[top].round(), 1.0);
        let x = plus_state(space);
        let v = pe.eigenvectors.column(top).into_owned();
        assert!((v.dotc(x.as_vector().unwrap()).norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_qubit_spectrum_matches_closed_form() {
        // J = 1 in the |m⟩ basis: [[λ, Ω/√2, 0], [Ω/√2, 0, Ω/√2], [0, Ω/√2, λ]].
        // The antisymmetric level sits at λ; the symmetric block [[λ, Ω], [Ω, 0]]
        // gives (λ ± √(λ² + 4Ω²))/2.
        let space = HilbertSpace::dicke(2).unwrap();
        let h = lmg_hamiltonian(space, 1.0, 1.0, 1.0).unwrap();
        let pe = eigendecompose_with_parity(&h, &parity_operator(space)).unwrap();
        let s5 = 5f64.sqrt();
        let expect = [(1.0 - s5) / 2.0, 1.0, (1.0 + s5) / 2.0];
        for (a, b) in pe.eigenvalues.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn non_commuting_pair_is_rejected() {
        let space = HilbertSpace::dicke(3).unwrap();
        let sz = crate::hilbert::collective_spin(space).unwrap().sz;
        assert!(matches!(eigendecompose_with_parity(&sz, &parity_operator(space)), Err(Error::NotCommuting(_))));
    }

    #[test]
    fn scan_splitting_behaviour() {
        let lam = 0.1;
        let scan =
            degeneracy_scan(6, lam, &[0.0, 0.1 * lam, 0.2 * lam, 10.0 * lam], SpectrumTarget::HighestOfHeff).unwrap();
        assert_eq!(scan.points[0].splitting, 0.0);
        assert!(scan.points[1].splitting < scan.points[2].splitting);
        assert!(scan.points[3].splitting > 0.5 * 10.0 * lam);
        let ground = degeneracy_scan(6, lam, &[0.1 * lam], SpectrumTarget::GroundOfH).unwrap();
        assert!((ground.points[0].splitting - scan.points[1].splitting).abs() < 1e-14);
        assert!(degeneracy_scan(6, lam, &[0.2, 0.1], SpectrumTarget::GroundOfH).is_err());
    }

    #[test]
    fn shift_formula_values() {
        let lam = 1.0;
        let s = perturbative_shifts(6, 0.1 * lam, lam).unwrap();
        assert!((s.eta_at(3.0).unwrap() + 0.012 * lam).abs() < 1e-15);
        assert_eq!(s.eta_at(3.0), s.eta_at(-3.0));
        let z = perturbative_shifts(6, 0.0, lam).unwrap();
        assert!(z.eta.iter().all(|&e| e == 0.0));
        assert!(perturbative_shifts(6, 0.1, 0.0).is_err());
        assert!(perturbative_shifts(1, 0.1, 1.0).is_err());
        assert!(perturbative_shifts(5, 0.1, 1.0).is_err());
    }

    #[test]
    fn exact_shifts_follow_quarter_of_formula_for_nondegenerate_levels() {
        // with the ½ of S_x inside the true matrix elements, second-order shifts
        // of ΩS_x + λS_z² are -η_m/4 wherever the ±m pair is not coupled at that order
        let lam = 1.0;
        let omega = 0.05 * lam;
        let exact = exact_drive_shifts(6, omega, lam).unwrap();
        let eta = perturbative_shifts(6, omega, lam).unwrap().eta;
        for k in [0usize, 1, 3, 5, 6] {
            assert!((exact[k] + eta[k] / 4.0).abs() < 0.05 * eta[k].abs() / 4.0, "k = {k}");
        }
    }
}
