//! Fixed-step RK4 propagation of state vectors and density matrices.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::hilbert::{min_eigenvalue, HilbertSpace, Operator, QuantumState, StateData};
use crate::model::{DriveSplit, QuenchSchedule};
use crate::par::Exec;
use crate::sparse::CsrMatrix;
use crate::{Error, Result, C64};

const ZERO: C64 = C64::new(0.0, 0.0);
const MINUS_I: C64 = C64::new(0.0, -1.0);

/// Drift beyond which a run is aborted.
pub const DIVERGENCE_THRESHOLD: f64 = 1e-4;
/// Eigenvalues below this at a checkpoint produce a warning.
pub const NEGATIVITY_THRESHOLD: f64 = -1e-6;
/// Step-halving pass criterion.
pub const CONVERGENCE_THRESHOLD: f64 = 1e-7;

pub type Envelope = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type OperatorFn = Arc<dyn Fn(f64) -> Operator + Send + Sync>;

/// `H(t)`, either a sum of fixed matrices with scalar envelopes or an
/// arbitrary callable.
#[derive(Clone)]
pub struct TimeDependentHamiltonian {
    space: HilbertSpace,
    repr: Repr,
}

#[derive(Clone)]
enum Repr {
    Terms(Vec<Term>),
    Callable(OperatorFn),
}

#[derive(Clone)]
struct Term {
    dense: DMatrix<C64>,
    sparse: CsrMatrix,
    envelope: Option<Envelope>,
}

impl Term {
    fn new(op: &Operator, envelope: Option<Envelope>) -> Self {
        Self { dense: op.matrix().clone(), sparse: CsrMatrix::from_dense(op.matrix()), envelope }
    }

    fn coefficient(&self, t: f64) -> f64 {
        self.envelope.as_ref().map_or(1.0, |f| f(t))
    }
}

impl fmt::Debug for TimeDependentHamiltonian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let repr = match &self.repr {
            Repr::Terms(t) => format!("{} terms", t.len()),
            Repr::Callable(_) => "callable".to_string(),
        };
        f.debug_struct("TimeDependentHamiltonian").field("space", &self.space).field("repr", &repr).finish()
    }
}

impl TimeDependentHamiltonian {
    pub fn constant(op: &Operator) -> Self {
        Self { space: op.space(), repr: Repr::Terms(vec![Term::new(op, None)]) }
    }

    /// `H(t) = static_part + envelope(t) · drive`.
    pub fn driven(static_part: &Operator, drive: &Operator, envelope: Envelope) -> Result<Self> {
        if static_part.space() != drive.space() {
            return Err(Error::DimensionMismatch { expected: static_part.space().dim(), got: drive.space().dim() });
        }
        Ok(Self {
            space: static_part.space(),
            repr: Repr::Terms(vec![Term::new(static_part, None), Term::new(drive, Some(envelope))]),
        })
    }

    /// A drive-affine Hamiltonian following a quench schedule.
    pub fn quench(split: &DriveSplit, schedule: QuenchSchedule) -> Self {
        let env: Envelope = Arc::new(move |t| schedule.omega_at(t));
        Self::driven(&split.static_part, &split.drive, env).expect("split parts share a space")
    }

    /// Any callable returning an operator on `space`; evaluated at every RK4 stage.
    pub fn from_fn(space: HilbertSpace, f: impl Fn(f64) -> Operator + Send + Sync + 'static) -> Self {
        Self { space, repr: Repr::Callable(Arc::new(f)) }
    }

    pub fn space(&self) -> HilbertSpace {
        self.space
    }

    pub fn operator_at(&self, t: f64) -> Operator {
        match &self.repr {
            Repr::Terms(terms) => {
                let d = self.space.dim();
                let mut m = DMatrix::zeros(d, d);
                for term in terms {
                    m += &term.dense * C64::new(term.coefficient(t), 0.0);
                }
                Operator::from_parts(self.space, m, true)
            }
            Repr::Callable(f) => f(t),
        }
    }

    /// Sparse terms with their coefficients at `t`.
    fn sparse_at(&self, t: f64) -> Vec<(C64, std::borrow::Cow<'_, CsrMatrix>)> {
        match &self.repr {
            Repr::Terms(terms) => terms
                .iter()
                .map(|term| (C64::new(term.coefficient(t), 0.0), std::borrow::Cow::Borrowed(&term.sparse)))
                .collect(),
            Repr::Callable(f) => {
                let op = f(t);
                vec![(C64::new(1.0, 0.0), std::borrow::Cow::Owned(CsrMatrix::from_dense(op.matrix())))]
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    /// Nominal step, ns. Each interval between checkpoints is split into
    /// `ceil(Δt/dt)` equal steps so every checkpoint is hit exactly.
    pub dt: f64,
    /// Strictly increasing, nonnegative, ns. Integration starts at 0.
    pub checkpoint_times: Vec<f64>,
    #[serde(skip)]
    pub exec: Exec,
    /// Check for negative eigenvalues at density-matrix checkpoints.
    #[serde(default = "default_true")]
    pub positivity_check: bool,
}

fn default_true() -> bool {
    true
}

impl IntegratorConfig {
    pub fn new(dt: f64, checkpoint_times: Vec<f64>) -> Result<Self> {
        let c = Self { dt, checkpoint_times, exec: Exec::default(), positivity_check: true };
        c.validate()?;
        Ok(c)
    }

    /// Checkpoints `0, spacing, 2·spacing, …` up to and including `duration`.
    pub fn uniform(dt: f64, spacing: f64, duration: f64) -> Result<Self> {
        if !(spacing > 0.0) {
            return Err(Error::InvalidArgument("checkpoint spacing must be positive".into()));
        }
        let n = (duration / spacing + 1e-9).floor() as usize;
        let mut times: Vec<f64> = (0..=n).map(|k| k as f64 * spacing).collect();
        if duration - times[n] > 1e-9 {
            times.push(duration);
        }
        Self::new(dt, times)
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("dt = {} must be positive", self.dt)));
        }
        if self.checkpoint_times.is_empty() {
            return Err(Error::InvalidArgument("no checkpoints requested".into()));
        }
        if self.checkpoint_times[0] < 0.0 {
            return Err(Error::InvalidArgument("checkpoints must be nonnegative".into()));
        }
        if self.checkpoint_times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("checkpoints must be strictly increasing".into()));
        }
        Ok(())
    }

    /// Number of RK4 steps per checkpoint interval.
    fn segment_steps(&self, span: f64) -> usize {
        if span <= 0.0 {
            0
        } else {
            ((span / self.dt - 1e-9).ceil() as usize).max(1)
        }
    }
}

#[derive(Clone, Debug)]
pub struct TrajectoryRecord {
    pub checkpoints: Vec<(f64, QuantumState)>,
    /// Largest `|‖ψ‖ - 1|` or `|Tr ρ - 1|` seen at any step.
    pub norm_drift: f64,
    pub config: IntegratorConfig,
    pub warnings: Vec<String>,
    pub steps: usize,
}

impl TrajectoryRecord {
    pub fn times(&self) -> Vec<f64> {
        self.checkpoints.iter().map(|(t, _)| *t).collect()
    }

    pub fn final_state(&self) -> &QuantumState {
        &self.checkpoints.last().expect("at least one checkpoint").1
    }
}

fn check_drift(drift: f64, t: f64) -> Result<()> {
    if !(drift <= DIVERGENCE_THRESHOLD) {
        return Err(Error::IntegrationDiverged { time: t, drift });
    }
    Ok(())
}

/// Apply `-i H(t)` to a vector.
fn pure_rhs(h: &TimeDependentHamiltonian, t: f64, psi: &[C64], out: &mut [C64]) {
    out.iter_mut().for_each(|z| *z = ZERO);
    for (c, m) in h.sparse_at(t) {
        m.matvec_add(MINUS_I * c, psi, out);
    }
}

/// Integrates `dψ/dt = -iH(t)ψ`.
pub fn evolve_pure(
    h: &TimeDependentHamiltonian,
    psi0: &QuantumState,
    cfg: &IntegratorConfig,
) -> Result<TrajectoryRecord> {
    cfg.validate()?;
    let space = h.space();
    if psi0.space() != space {
        return Err(Error::DimensionMismatch { expected: space.dim(), got: psi0.space().dim() });
    }
    let mut psi: Vec<C64> = match psi0.data() {
        StateData::Pure(v) => v.iter().cloned().collect(),
        StateData::Density(_) => return Err(Error::InvalidState("pure evolution needs a state vector".into())),
    };
    let d = psi.len();
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) =
        (vec![ZERO; d], vec![ZERO; d], vec![ZERO; d], vec![ZERO; d], vec![ZERO; d]);
    let mut t = 0.0;
    let mut drift = (norm(&psi) - 1.0).abs();
    let mut steps = 0;
    let mut checkpoints = Vec::with_capacity(cfg.checkpoint_times.len());
    for &tc in &cfg.checkpoint_times {
        let n = cfg.segment_steps(tc - t);
        let hstep = if n > 0 { (tc - t) / n as f64 } else { 0.0 };
        let t_start = t;
        for s in 0..n {
            let t0 = t_start + s as f64 * hstep;
            pure_rhs(h, t0, &psi, &mut k1);
            axpy_into(&psi, 0.5 * hstep, &k1, &mut tmp);
            pure_rhs(h, t0 + 0.5 * hstep, &tmp, &mut k2);
            axpy_into(&psi, 0.5 * hstep, &k2, &mut tmp);
            pure_rhs(h, t0 + 0.5 * hstep, &tmp, &mut k3);
            axpy_into(&psi, hstep, &k3, &mut tmp);
            pure_rhs(h, t0 + hstep, &tmp, &mut k4);
            let w = hstep / 6.0;
            for i in 0..d {
                psi[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * w;
            }
            steps += 1;
            let dn = (norm(&psi) - 1.0).abs();
            drift = drift.max(dn);
            check_drift(dn, t0 + hstep)?;
        }
        t = tc;
        let state = QuantumState::from_data_unchecked(space, StateData::Pure(DVector::from_vec(psi.clone())));
        checkpoints.push((tc, state));
    }
    Ok(TrajectoryRecord { checkpoints, norm_drift: drift, config: cfg.clone(), warnings: Vec::new(), steps })
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn axpy_into(x: &[C64], a: f64, k: &[C64], out: &mut [C64]) {
    for ((o, xi), ki) in out.iter_mut().zip(x).zip(k) {
        *o = xi + ki * a;
    }
}

/// Precomputed dissipator pieces.
struct Dissipator {
    /// `-i/2 Σ L†L`, sparse.
    anti: Option<CsrMatrix>,
    /// `W_ab = Σ_k d_k(a) conj(d_k(b))` for diagonal collapse operators.
    diag_weight: Option<DMatrix<C64>>,
    /// Collapse operators with at most one nonzero per column, as `(column, row, value)`.
    monomial: Vec<Vec<(usize, usize, C64)>>,
    general: Vec<CsrMatrix>,
}

impl Dissipator {
    fn new(ops: &[Operator], dim: usize) -> Self {
        let mut diss = Self { anti: None, diag_weight: None, monomial: Vec::new(), general: Vec::new() };
        if ops.is_empty() {
            return diss;
        }
        let mut k = DMatrix::zeros(dim, dim);
        for op in ops {
            let l = op.matrix();
            k += l.adjoint() * l;
            let sparse = CsrMatrix::from_dense(l);
            if let Some(d) = sparse.diagonal() {
                let w = diss.diag_weight.get_or_insert_with(|| DMatrix::zeros(dim, dim));
                for b in 0..dim {
                    for a in 0..dim {
                        w[(a, b)] += d[a] * d[b].conj();
                    }
                }
            } else if let Some(entries) = sparse.monomial_entries() {
                diss.monomial.push(entries);
            } else {
                diss.general.push(sparse);
            }
        }
        diss.anti = Some(CsrMatrix::from_dense(&(k * C64::new(0.0, -0.5))));
        diss
    }
}

/// Scratch buffers reused across right-hand-side evaluations.
struct LindbladWork {
    f: DMatrix<C64>,
    m: DMatrix<C64>,
}

/// `dρ/dt` for Hermitian `ρ`. With `G = (H - (i/2)K)ρ` the coherent and
/// anticommutator parts combine to `-i(G - G†)`; `F = G† = ρ(H - (i/2)K)†` is
/// assembled from contiguous columns of `ρ`.
fn lindblad_rhs(
    h: &TimeDependentHamiltonian,
    diss: &Dissipator,
    t: f64,
    rho: &DMatrix<C64>,
    out: &mut DMatrix<C64>,
    work: &mut LindbladWork,
    exec: Exec,
) {
    let d = rho.nrows();
    work.f.fill(ZERO);
    for (c, m) in h.sparse_at(t) {
        m.mul_dense_adjoint_add(c, rho, &mut work.f, exec);
    }
    if let Some(anti) = &diss.anti {
        anti.mul_dense_adjoint_add(C64::new(1.0, 0.0), rho, &mut work.f, exec);
    }
    let f = &work.f;
    for b in 0..d {
        for a in 0..d {
            out[(a, b)] = MINUS_I * (f[(b, a)].conj() - f[(a, b)]);
        }
    }
    if let Some(w) = &diss.diag_weight {
        out.zip_zip_apply(w, rho, |o, wi, r| *o += wi * r);
    }
    for entries in &diss.monomial {
        for &(c2, r2, a2) in entries {
            let a2c = a2.conj();
            for &(c1, r1, a1) in entries {
                out[(r1, r2)] += a1 * a2c * rho[(c1, c2)];
            }
        }
    }
    for l in &diss.general {
        // L ρ L† = L (L ρ)† for Hermitian ρ
        l.mul_dense(rho, &mut work.m, exec);
        work.f.copy_from(&work.m.adjoint());
        l.mul_dense_add(C64::new(1.0, 0.0), &work.f, out, exec);
    }
}

/// Integrates the Lindblad master equation with the collapse operators `ops`
/// (rates already folded into the operators).
pub fn evolve_lindblad(
    h: &TimeDependentHamiltonian,
    rho0: &QuantumState,
    ops: &[Operator],
    cfg: &IntegratorConfig,
) -> Result<TrajectoryRecord> {
    cfg.validate()?;
    let space = h.space();
    if rho0.space() != space {
        return Err(Error::DimensionMismatch { expected: space.dim(), got: rho0.space().dim() });
    }
    if let Some(op) = ops.iter().find(|o| o.space() != space) {
        return Err(Error::DimensionMismatch { expected: space.dim(), got: op.space().dim() });
    }
    let exec = cfg.exec;
    let mut rho = rho0.density_matrix();
    let d = rho.nrows();
    let diss = Dissipator::new(ops, d);
    let mut work = LindbladWork { f: DMatrix::zeros(d, d), m: DMatrix::zeros(d, d) };
    let zeros = || DMatrix::<C64>::zeros(d, d);
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (zeros(), zeros(), zeros(), zeros(), zeros());
    let mut t = 0.0;
    let mut drift = (rho.trace().re - 1.0).abs();
    let mut steps = 0;
    let mut warnings = Vec::new();
    let mut checkpoints = Vec::with_capacity(cfg.checkpoint_times.len());
    let half = C64::new(0.5, 0.0);
    for &tc in &cfg.checkpoint_times {
        let n = cfg.segment_steps(tc - t);
        let hstep = if n > 0 { (tc - t) / n as f64 } else { 0.0 };
        let t_start = t;
        for s in 0..n {
            let t0 = t_start + s as f64 * hstep;
            lindblad_rhs(h, &diss, t0, &rho, &mut k1, &mut work, exec);
            tmp.zip_zip_apply(&rho, &k1, |o, r, k| *o = r + k * (0.5 * hstep));
            lindblad_rhs(h, &diss, t0 + 0.5 * hstep, &tmp, &mut k2, &mut work, exec);
            tmp.zip_zip_apply(&rho, &k2, |o, r, k| *o = r + k * (0.5 * hstep));
            lindblad_rhs(h, &diss, t0 + 0.5 * hstep, &tmp, &mut k3, &mut work, exec);
            tmp.zip_zip_apply(&rho, &k3, |o, r, k| *o = r + k * hstep);
            lindblad_rhs(h, &diss, t0 + hstep, &tmp, &mut k4, &mut work, exec);
            let w = hstep / 6.0;
            k2 += &k3;
            rho.zip_zip_apply(&k1, &k2, |r, a, b| *r += (a + b * 2.0) * w);
            rho.zip_apply(&k4, |r, c| *r += c * w);
            tmp.copy_from(&rho.adjoint());
            rho += &tmp;
            rho *= half;
            steps += 1;
            let dt_drift = (rho.trace().re - 1.0).abs();
            drift = drift.max(dt_drift);
            check_drift(dt_drift, t0 + hstep)?;
        }
        t = tc;
        if cfg.positivity_check {
            let min = min_eigenvalue(&rho);
            if min < NEGATIVITY_THRESHOLD {
                let msg = format!("negative eigenvalue {min:e} at t = {tc} ns");
                log::warn!("{msg}");
                warnings.push(msg);
            }
        }
        checkpoints.push((tc, QuantumState::from_data_unchecked(space, StateData::Density(rho.clone()))));
    }
    Ok(TrajectoryRecord { checkpoints, norm_drift: drift, config: cfg.clone(), warnings, steps })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub dt: f64,
    pub dt_half: f64,
    /// `1 - F` between the final states; `F` is the squared overlap for pure
    /// states and the normalized Hilbert-Schmidt overlap for density matrices.
    pub deficit: f64,
    pub threshold: f64,
    pub passed: bool,
}

/// Final-state agreement measure used by [`convergence_check`].
pub fn final_state_deficit(a: &QuantumState, b: &QuantumState) -> Result<f64> {
    if a.space() != b.space() {
        return Err(Error::DimensionMismatch { expected: a.space().dim(), got: b.space().dim() });
    }
    if a.data() == b.data() {
        return Ok(0.0);
    }
    let f = match (a.data(), b.data()) {
        (StateData::Pure(x), StateData::Pure(y)) => x.dotc(y).norm_sqr() / (x.norm_squared() * y.norm_squared()),
        _ => {
            let (r, s) = (a.density_matrix(), b.density_matrix());
            let overlap = r.dotc(&s).re;
            overlap / (r.norm_squared() * s.norm_squared()).sqrt()
        }
    };
    Ok((1.0 - f).max(0.0))
}

/// Reruns at `dt` and `dt/2` and compares the final states.
pub fn convergence_check<F>(run: F, dt: f64) -> Result<ConvergenceReport>
where
    F: Fn(f64) -> Result<TrajectoryRecord>,
{
    let coarse = run(dt)?;
    let fine = run(dt / 2.0)?;
    let deficit = final_state_deficit(coarse.final_state(), fine.final_state())?;
    Ok(ConvergenceReport {
        dt,
        dt_half: dt / 2.0,
        deficit,
        threshold: CONVERGENCE_THRESHOLD,
        passed: deficit < CONVERGENCE_THRESHOLD,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{basis_state, collective_spin, pauli_string, plus_state, Axis};
    use crate::model::lmg_hamiltonian;
    use std::f64::consts::PI;

    #[test]
    fn global_pi_rotation_flips_all_qubits() {
        let space = HilbertSpace::dicke(6).unwrap();
        let om = 0.2;
        let h = TimeDependentHamiltonian::constant(&lmg_hamiltonian(space, om, 0.0, 1.0).unwrap());
        let g = basis_state(space, &[0; 6], 0).unwrap();
        let cfg = IntegratorConfig::new(0.05, vec![PI / om]).unwrap();
        let rec = evolve_pure(&h, &g, &cfg).unwrap();
        let p = rec.final_state().basis_probabilities();
        assert!(p[6] > 1.0 - 1e-6);
        assert!(rec.norm_drift < 1e-6);
    }

    #[test]
    fn single_qubit_plus_is_stationary_under_sz_squared() {
        let space = HilbertSpace::dicke(1).unwrap();
        let h = TimeDependentHamiltonian::constant(&lmg_hamiltonian(space, 0.0, 0.4, 1.0).unwrap());
        let x = plus_state(space);
        let rec = evolve_pure(&h, &x, &IntegratorConfig::uniform(0.05, 10.0, 50.0).unwrap()).unwrap();
        let sx = collective_spin(space).unwrap().sx;
        for (_, s) in &rec.checkpoints {
            assert!((s.expectation(&sx).unwrap().re - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn checkpoints_are_hit_exactly() {
        let cfg = IntegratorConfig::new(0.3, vec![0.0, 1.0, 2.5]).unwrap();
        assert_eq!(cfg.segment_steps(1.0), 4);
        assert_eq!(cfg.segment_steps(0.6), 2);
        let space = HilbertSpace::dicke(2).unwrap();
        let h = TimeDependentHamiltonian::constant(&lmg_hamiltonian(space, 0.1, 0.1, 1.0).unwrap());
        let rec = evolve_pure(&h, &plus_state(space), &cfg).unwrap();
        assert_eq!(rec.times(), vec![0.0, 1.0, 2.5]);
        assert_eq!(rec.steps, 4 + 5);
        assert!(IntegratorConfig::new(0.1, vec![1.0, 1.0]).is_err());
        assert!(IntegratorConfig::new(0.0, vec![1.0]).is_err());
        let u = IntegratorConfig::uniform(0.05, 2.0, 150.0).unwrap();
        assert_eq!(u.checkpoint_times.len(), 76);
        assert_eq!(*u.checkpoint_times.last().unwrap(), 150.0);
    }

    #[test]
    fn large_step_reports_divergence() {
        let space = HilbertSpace::dicke(4).unwrap();
        let h = TimeDependentHamiltonian::constant(&lmg_hamiltonian(space, 5.0, 0.0, 1.0).unwrap());
        let cfg = IntegratorConfig::new(1.0, vec![50.0]).unwrap();
        assert!(matches!(evolve_pure(&h, &plus_state(space), &cfg), Err(Error::IntegrationDiverged { .. })));
    }

    #[test]
    fn decay_matches_exponential() {
        let space = HilbertSpace::full_spin(1).unwrap();
        let h = TimeDependentHamiltonian::constant(&Operator::zeros(space));
        let e = basis_state(space, &[1], 0).unwrap().to_density();
        let l = pauli_string(space, &[(0, Axis::Minus)]).unwrap().scale((1.0f64 / 17800.0).sqrt());
        let rec = evolve_lindblad(&h, &e, &[l], &IntegratorConfig::new(0.5, vec![1000.0]).unwrap()).unwrap();
        let pe = rec.final_state().basis_probabilities()[1];
        assert!((pe - (-1000.0f64 / 17800.0).exp()).abs() < 1e-6);
    }

    #[test]
    fn dephasing_decays_coherence() {
        let space = HilbertSpace::full_spin(1).unwrap();
        let h = TimeDependentHamiltonian::constant(&Operator::zeros(space));
        let x = plus_state(space).to_density();
        let gamma: f64 = 1e-3;
        let l = pauli_string(space, &[(0, Axis::Z)]).unwrap().scale((gamma / 2.0f64).sqrt());
        let rec = evolve_lindblad(&h, &x, &[l], &IntegratorConfig::new(0.5, vec![500.0]).unwrap()).unwrap();
        let rho = rec.final_state().density_matrix();
        // L ρ L† - ½{L†L, ρ} with L = √(γ/2)σz damps ρ_ge at rate γ
        assert!((rho[(0, 1)].re - 0.5 * (-gamma * 500.0).exp()).abs() < 1e-9);
    }

    #[test]
    fn closed_lindblad_matches_pure() {
        let space = HilbertSpace::full_spin(3).unwrap();
        let h = lmg_hamiltonian(space, 0.3, 0.1, 1.0).unwrap();
        let h = TimeDependentHamiltonian::constant(&h);
        let x = plus_state(space);
        let cfg = IntegratorConfig::uniform(0.05, 5.0, 20.0).unwrap();
        let a = evolve_pure(&h, &x, &cfg).unwrap();
        let b = evolve_lindblad(&h, &x.to_density(), &[], &cfg).unwrap();
        for ((_, sa), (_, sb)) in a.checkpoints.iter().zip(&b.checkpoints) {
            assert!((sa.density_matrix() - sb.density_matrix()).camax() < 1e-8);
        }
    }

    #[test]
    fn sequential_and_parallel_lindblad_agree_bitwise() {
        let space = HilbertSpace::full_spin(3).unwrap();
        let h = TimeDependentHamiltonian::constant(&lmg_hamiltonian(space, 0.3, 0.1, 1.0).unwrap());
        let ops: Vec<_> = (0..3).map(|j| pauli_string(space, &[(j, Axis::Minus)]).unwrap().scale(0.05)).collect();
        let rho = plus_state(space).to_density();
        let cfg = IntegratorConfig::new(0.05, vec![3.0]).unwrap();
        let a = evolve_lindblad(&h, &rho, &ops, &cfg.clone().with_exec(Exec::Sequential)).unwrap();
        let b = evolve_lindblad(&h, &rho, &ops, &cfg.with_exec(Exec::Parallel)).unwrap();
        assert_eq!(a.final_state().data(), b.final_state().data());
    }

    #[test]
    fn zero_hamiltonian_converges_exactly() {
        let space = HilbertSpace::dicke(3).unwrap();
        let h = TimeDependentHamiltonian::constant(&Operator::zeros(space));
        let x = plus_state(space);
        let rep =
            convergence_check(|dt| evolve_pure(&h, &x, &IntegratorConfig::new(dt, vec![10.0]).unwrap()), 0.05).unwrap();
        assert_eq!(rep.deficit, 0.0);
        assert!(rep.passed);
    }

    #[test]
    fn callable_and_affine_forms_agree() {
        let space = HilbertSpace::dicke(3).unwrap();
        let split = crate::model::lmg_parts(space, 0.05, 1.0).unwrap();
        let sched = QuenchSchedule::new(0.2, 5.0, 20.0, 1.0).unwrap();
        let affine = TimeDependentHamiltonian::quench(&split, sched);
        let callable = TimeDependentHamiltonian::from_fn(space, move |t| split.at(sched.omega_at(t)));
        let cfg = IntegratorConfig::new(0.05, vec![20.0]).unwrap();
        let a = evolve_pure(&affine, &plus_state(space), &cfg).unwrap();
        let b = evolve_pure(&callable, &plus_state(space), &cfg).unwrap();
        assert!(final_state_deficit(a.final_state(), b.final_state()).unwrap() < 1e-14);
    }
}
