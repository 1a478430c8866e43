//! Hilbert spaces, operators and states.
//!
//! Basis conventions:
//!
//! * single qubit: index 0 = `g`, 1 = `e`, with `σz = diag(-1, +1)`;
//! * `FullSpin(N)`: basis index `b` holds qubit `j` in bit `N-1-j`, so qubit 0
//!   is the most significant bit;
//! * `SpinResonator(N, n_max)`: index `b * (n_max + 1) + n` with `n` the photon
//!   number;
//! * `Dicke(N)`: index `k = m + J`, the number of excitations.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceKind {
    Dicke,
    FullSpin,
    SpinResonator,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HilbertSpace {
    kind: SpaceKind,
    n_qubits: usize,
    n_max: Option<usize>,
}

impl HilbertSpace {
    pub fn dicke(n_qubits: usize) -> Result<Self> {
        Self::check_n(n_qubits)?;
        Ok(Self { kind: SpaceKind::Dicke, n_qubits, n_max: None })
    }

    pub fn full_spin(n_qubits: usize) -> Result<Self> {
        Self::check_n(n_qubits)?;
        Ok(Self { kind: SpaceKind::FullSpin, n_qubits, n_max: None })
    }

    pub fn spin_resonator(n_qubits: usize, n_max: usize) -> Result<Self> {
        Self::check_n(n_qubits)?;
        if n_max < 1 {
            return Err(Error::InvalidArgument("photon truncation n_max must be >= 1".into()));
        }
        Ok(Self { kind: SpaceKind::SpinResonator, n_qubits, n_max: Some(n_max) })
    }

    fn check_n(n: usize) -> Result<()> {
        if n == 0 {
            return Err(Error::InvalidArgument("a space needs at least one qubit".into()));
        }
        if n > 20 {
            return Err(Error::InvalidArgument(format!("{n} qubits exceeds the supported range")));
        }
        Ok(())
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_max(&self) -> Option<usize> {
        self.n_max
    }

    /// Number of resonator levels (1 when there is no resonator).
    pub fn photon_levels(&self) -> usize {
        self.n_max.map_or(1, |n| n + 1)
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            SpaceKind::Dicke => self.n_qubits + 1,
            SpaceKind::FullSpin => 1 << self.n_qubits,
            SpaceKind::SpinResonator => (1 << self.n_qubits) * self.photon_levels(),
        }
    }

    /// `J = N / 2`.
    pub fn total_spin(&self) -> f64 {
        self.n_qubits as f64 / 2.0
    }

    /// The qubit-only space obtained by tracing out the resonator or by
    /// embedding the symmetric subspace.
    pub fn qubit_space(&self) -> HilbertSpace {
        HilbertSpace { kind: SpaceKind::FullSpin, n_qubits: self.n_qubits, n_max: None }
    }
}

/// A matrix tagged with the space it acts on.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    space: HilbertSpace,
    matrix: DMatrix<C64>,
    hermitian_hint: bool,
}

impl Operator {
    /// Validates the shape and, when `hermitian_hint` is set, Hermiticity.
    pub fn new(space: HilbertSpace, matrix: DMatrix<C64>, hermitian_hint: bool) -> Result<Self> {
        let d = space.dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, got: matrix.nrows().max(matrix.ncols()) });
        }
        if hermitian_hint {
            let dev = hermitian_deviation(&matrix);
            if dev >= 1e-12 * (1.0 + max_abs(&matrix)) {
                return Err(Error::InvalidArgument(format!("matrix flagged Hermitian deviates by {dev:e}")));
            }
        }
        Ok(Self { space, matrix, hermitian_hint })
    }

    pub(crate) fn from_parts(space: HilbertSpace, matrix: DMatrix<C64>, hermitian_hint: bool) -> Self {
        debug_assert_eq!(matrix.nrows(), space.dim());
        Self { space, matrix, hermitian_hint }
    }

    pub fn identity(space: HilbertSpace) -> Self {
        Self::from_parts(space, DMatrix::identity(space.dim(), space.dim()), true)
    }

    pub fn zeros(space: HilbertSpace) -> Self {
        Self::from_parts(space, DMatrix::zeros(space.dim(), space.dim()), true)
    }

    pub fn space(&self) -> HilbertSpace {
        self.space
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn hermitian_hint(&self) -> bool {
        self.hermitian_hint
    }

    pub fn dagger(&self) -> Operator {
        Self::from_parts(self.space, self.matrix.adjoint(), self.hermitian_hint)
    }

    pub fn scale(&self, s: f64) -> Operator {
        Self::from_parts(self.space, &self.matrix * C64::new(s, 0.0), self.hermitian_hint)
    }

    pub fn add(&self, other: &Operator) -> Result<Operator> {
        self.check_same(other)?;
        Ok(Self::from_parts(self.space, &self.matrix + &other.matrix, self.hermitian_hint && other.hermitian_hint))
    }

    pub fn compose(&self, other: &Operator) -> Result<Operator> {
        self.check_same(other)?;
        Ok(Self::from_parts(self.space, &self.matrix * &other.matrix, false))
    }

    /// Frobenius norm of `[self, other]`.
    pub fn commutator_norm(&self, other: &Operator) -> Result<f64> {
        self.check_same(other)?;
        Ok((&self.matrix * &other.matrix - &other.matrix * &self.matrix).norm())
    }

    /// Largest entry of `|A - A†|`.
    pub fn hermitian_deviation(&self) -> f64 {
        hermitian_deviation(&self.matrix)
    }

    pub fn apply(&self, v: &DVector<C64>) -> Result<DVector<C64>> {
        if v.len() != self.space.dim() {
            return Err(Error::DimensionMismatch { expected: self.space.dim(), got: v.len() });
        }
        Ok(&self.matrix * v)
    }

    fn check_same(&self, other: &Operator) -> Result<()> {
        if self.space != other.space {
            return Err(Error::DimensionMismatch { expected: self.space.dim(), got: other.space.dim() });
        }
        Ok(())
    }
}

pub(crate) fn hermitian_deviation(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().fold(0.0f64, |a, v| a.max(v.norm()))
}

#[derive(Clone, Debug, PartialEq)]
pub enum StateData {
    Pure(DVector<C64>),
    Density(DMatrix<C64>),
}

/// A pure vector or density matrix on a [`HilbertSpace`].
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumState {
    space: HilbertSpace,
    data: StateData,
}

impl QuantumState {
    pub fn pure(space: HilbertSpace, psi: DVector<C64>) -> Result<Self> {
        if psi.len() != space.dim() {
            return Err(Error::DimensionMismatch { expected: space.dim(), got: psi.len() });
        }
        let norm = psi.norm();
        if (norm - 1.0).abs() >= 1e-8 {
            return Err(Error::InvalidState(format!("vector norm {norm} is not 1")));
        }
        Ok(Self { space, data: StateData::Pure(psi) })
    }

    /// Normalizes a nonzero vector.
    pub fn pure_normalized(space: HilbertSpace, psi: DVector<C64>) -> Result<Self> {
        let n = psi.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::InvalidState("cannot normalize a zero vector".into()));
        }
        Self::pure(space, psi.unscale(n))
    }

    pub fn density(space: HilbertSpace, rho: DMatrix<C64>) -> Result<Self> {
        let d = space.dim();
        if rho.nrows() != d || rho.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, got: rho.nrows().max(rho.ncols()) });
        }
        let tr = rho.trace();
        if (tr.re - 1.0).abs() >= 1e-8 || tr.im.abs() >= 1e-8 {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        let dev = hermitian_deviation(&rho);
        if dev >= 1e-10 {
            return Err(Error::InvalidState(format!("density matrix not Hermitian (deviation {dev:e})")));
        }
        let min = min_eigenvalue(&rho);
        if min <= -1e-8 {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(Self { space, data: StateData::Density(rho) })
    }

    /// Skips validation; used for integrator output where drift is reported separately.
    pub fn from_data_unchecked(space: HilbertSpace, data: StateData) -> Self {
        Self { space, data }
    }

    pub fn space(&self) -> HilbertSpace {
        self.space
    }

    pub fn data(&self) -> &StateData {
        &self.data
    }

    pub fn into_data(self) -> StateData {
        self.data
    }

    pub fn is_pure(&self) -> bool {
        matches!(self.data, StateData::Pure(_))
    }

    pub fn as_vector(&self) -> Option<&DVector<C64>> {
        match &self.data {
            StateData::Pure(v) => Some(v),
            StateData::Density(_) => None,
        }
    }

    pub fn density_matrix(&self) -> DMatrix<C64> {
        match &self.data {
            StateData::Pure(v) => v * v.adjoint(),
            StateData::Density(r) => r.clone(),
        }
    }

    pub fn to_density(&self) -> QuantumState {
        Self { space: self.space, data: StateData::Density(self.density_matrix()) }
    }

    /// `‖ψ‖` for vectors, `Re Tr ρ` for density matrices.
    pub fn norm_or_trace(&self) -> f64 {
        match &self.data {
            StateData::Pure(v) => v.norm(),
            StateData::Density(r) => r.trace().re,
        }
    }

    pub fn purity(&self) -> f64 {
        match &self.data {
            StateData::Pure(v) => v.norm_squared().powi(2),
            StateData::Density(r) => r.iter().map(|z| z.norm_sqr()).sum(),
        }
    }

    /// `⟨A⟩` = `ψ†Aψ` or `Tr(Aρ)`.
    pub fn expectation(&self, op: &Operator) -> Result<C64> {
        if op.space() != self.space {
            return Err(Error::DimensionMismatch { expected: self.space.dim(), got: op.space().dim() });
        }
        let a = op.matrix();
        Ok(match &self.data {
            StateData::Pure(v) => v.dotc(&(a * v)),
            StateData::Density(r) => {
                let n = r.nrows();
                let mut acc = ZERO;
                for i in 0..n {
                    for j in 0..n {
                        acc += a[(i, j)] * r[(j, i)];
                    }
                }
                acc
            }
        })
    }

    /// Probabilities of the basis states, i.e. the diagonal of `ρ`.
    pub fn basis_probabilities(&self) -> Vec<f64> {
        match &self.data {
            StateData::Pure(v) => v.iter().map(|z| z.norm_sqr()).collect(),
            StateData::Density(r) => (0..r.nrows()).map(|i| r[(i, i)].re).collect(),
        }
    }

    /// Uhlmann fidelity; reduces to `|⟨a|b⟩|²` and `⟨ψ|ρ|ψ⟩` for pure inputs.
    pub fn fidelity(&self, other: &QuantumState) -> Result<f64> {
        if self.space != other.space {
            return Err(Error::DimensionMismatch { expected: self.space.dim(), got: other.space.dim() });
        }
        Ok(match (&self.data, &other.data) {
            (StateData::Pure(a), StateData::Pure(b)) => a.dotc(b).norm_sqr(),
            (StateData::Pure(a), StateData::Density(r)) | (StateData::Density(r), StateData::Pure(a)) => {
                a.dotc(&(r * a)).re
            }
            (StateData::Density(r), StateData::Density(s)) => {
                let sr = hermitian_function(r, |x| x.max(0.0).sqrt());
                let m = &sr * s * &sr;
                let m = (&m + m.adjoint()) * C64::new(0.5, 0.0);
                let ev = m.symmetric_eigenvalues();
                let t: f64 = ev.iter().map(|x| x.max(0.0).sqrt()).sum();
                t * t
            }
        })
    }

    /// The qubit-only state on `FullSpin(N)`: the resonator is traced out and
    /// Dicke states are embedded through the symmetric isometry.
    pub fn reduce_to_qubits(&self) -> QuantumState {
        match self.space.kind {
            SpaceKind::FullSpin => self.clone(),
            SpaceKind::Dicke => {
                let v = dicke_isometry(self.space.n_qubits);
                let data = match &self.data {
                    StateData::Pure(psi) => StateData::Pure(v.embed_vector(psi)),
                    StateData::Density(r) => StateData::Density(v.embed_matrix(r)),
                };
                Self { space: self.space.qubit_space(), data }
            }
            SpaceKind::SpinResonator => {
                let levels = self.space.photon_levels();
                let dq = 1usize << self.space.n_qubits;
                let mut out = DMatrix::zeros(dq, dq);
                match &self.data {
                    StateData::Pure(psi) => {
                        for a in 0..dq {
                            for b in 0..dq {
                                let mut acc = ZERO;
                                for n in 0..levels {
                                    acc += psi[a * levels + n] * psi[b * levels + n].conj();
                                }
                                out[(a, b)] = acc;
                            }
                        }
                    }
                    StateData::Density(r) => {
                        for a in 0..dq {
                            for b in 0..dq {
                                let mut acc = ZERO;
                                for n in 0..levels {
                                    acc += r[(a * levels + n, b * levels + n)];
                                }
                                out[(a, b)] = acc;
                            }
                        }
                    }
                }
                Self { space: self.space.qubit_space(), data: StateData::Density(out) }
            }
        }
    }

    /// Photon-number distribution, for spaces with a resonator.
    pub fn photon_distribution(&self) -> Option<Vec<f64>> {
        let levels = self.space.n_max? + 1;
        let mut out = vec![0.0; levels];
        for (i, p) in self.basis_probabilities().into_iter().enumerate() {
            out[i % levels] += p;
        }
        Some(out)
    }
}

/// Smallest eigenvalue of a Hermitian matrix.
pub(crate) fn min_eigenvalue(m: &DMatrix<C64>) -> f64 {
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    h.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
}

/// `f(H)` for Hermitian `H` through its eigendecomposition.
pub(crate) fn hermitian_function(m: &DMatrix<C64>, f: impl Fn(f64) -> f64) -> DMatrix<C64> {
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = h.symmetric_eigen();
    let mut scaled = eig.eigenvectors.clone();
    for (k, mut col) in scaled.column_iter_mut().enumerate() {
        col *= C64::new(f(eig.eigenvalues[k]), 0.0);
    }
    scaled * eig.eigenvectors.adjoint()
}

/// `exp(-i t H)` for Hermitian `H`.
pub(crate) fn unitary_exp(h: &DMatrix<C64>, t: f64) -> DMatrix<C64> {
    let hh = (h + h.adjoint()) * C64::new(0.5, 0.0);
    let eig = hh.symmetric_eigen();
    let mut scaled = eig.eigenvectors.clone();
    for (k, mut col) in scaled.column_iter_mut().enumerate() {
        col *= C64::from_polar(1.0, -t * eig.eigenvalues[k]);
    }
    scaled * eig.eigenvectors.adjoint()
}

/// Single-qubit operator selector for [`pauli_string`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    X,
    Y,
    Z,
    /// `σ⁺ = |e⟩⟨g|`
    Plus,
    /// `σ⁻ = |g⟩⟨e|`
    Minus,
}

impl Axis {
    /// Image of basis bit `s`: `(output bit, amplitude)`, or `None` when annihilated.
    fn act(self, s: usize) -> Option<(usize, C64)> {
        match (self, s) {
            (Axis::X, _) => Some((1 - s, ONE)),
            (Axis::Y, 0) => Some((1, C64::new(0.0, -1.0))),
            (Axis::Y, _) => Some((0, C64::new(0.0, 1.0))),
            (Axis::Z, 0) => Some((0, -ONE)),
            (Axis::Z, _) => Some((1, ONE)),
            (Axis::Plus, 0) => Some((1, ONE)),
            (Axis::Minus, 1) => Some((0, ONE)),
            _ => None,
        }
    }

    /// The 2×2 matrix in (g, e) order.
    pub fn matrix(self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(2, 2);
        for s in 0..2 {
            if let Some((r, a)) = self.act(s) {
                m[(r, s)] = a;
            }
        }
        m
    }
}

/// Tensor product of single-qubit operators, identity elsewhere (including
/// on the resonator).
pub fn pauli_string(space: HilbertSpace, spec: &[(usize, Axis)]) -> Result<Operator> {
    if space.kind == SpaceKind::Dicke {
        return Err(Error::UnsupportedSpace("Pauli strings need a qubit-resolved space".into()));
    }
    let n = space.n_qubits;
    let mut seen = vec![false; n];
    for &(j, _) in spec {
        if j >= n {
            return Err(Error::InvalidArgument(format!("qubit index {j} out of range for {n} qubits")));
        }
        if seen[j] {
            return Err(Error::InvalidArgument(format!("qubit index {j} appears twice")));
        }
        seen[j] = true;
    }
    let levels = space.photon_levels();
    let d = space.dim();
    let mut m = DMatrix::zeros(d, d);
    'cols: for col in 0..d {
        let (mut b, photon) = (col / levels, col % levels);
        let mut amp = ONE;
        for &(j, axis) in spec {
            let shift = n - 1 - j;
            let s = (b >> shift) & 1;
            match axis.act(s) {
                Some((out, a)) => {
                    b = (b & !(1 << shift)) | (out << shift);
                    amp *= a;
                }
                None => continue 'cols,
            }
        }
        m[(b * levels + photon, col)] = amp;
    }
    let herm = spec.iter().all(|(_, a)| matches!(a, Axis::X | Axis::Y | Axis::Z));
    Ok(Operator::from_parts(space, m, herm))
}

/// `Σ_j c_j σ_j^axis` on a qubit-resolved space.
pub(crate) fn single_qubit_sum(space: HilbertSpace, axis: Axis, coeffs: &[f64]) -> Result<Operator> {
    let d = space.dim();
    let mut m = DMatrix::zeros(d, d);
    for (j, &c) in coeffs.iter().enumerate() {
        if c != 0.0 {
            m += pauli_string(space, &[(j, axis)])?.matrix() * C64::new(c, 0.0);
        }
    }
    Ok(Operator::from_parts(space, m, matches!(axis, Axis::X | Axis::Y | Axis::Z)))
}

#[derive(Clone, Debug)]
pub struct SpinOps {
    pub sx: Operator,
    pub sy: Operator,
    pub sz: Operator,
    pub splus: Operator,
    pub sminus: Operator,
}

/// Collective spin operators `S_α = ½ Σ_j σ_j^α`.
pub fn collective_spin(space: HilbertSpace) -> Result<SpinOps> {
    match space.kind {
        SpaceKind::Dicke => {
            let j = space.total_spin();
            let d = space.dim();
            let mut sz = DMatrix::zeros(d, d);
            let mut sp = DMatrix::zeros(d, d);
            for k in 0..d {
                let m = k as f64 - j;
                sz[(k, k)] = C64::new(m, 0.0);
                if k + 1 < d {
                    sp[(k + 1, k)] = C64::new(((j - m) * (j + m + 1.0)).sqrt(), 0.0);
                }
            }
            Ok(assemble_spin_ops(space, sp, sz))
        }
        SpaceKind::FullSpin => {
            let half = vec![0.5; space.n_qubits];
            let sz = single_qubit_sum(space, Axis::Z, &half)?.into_matrix();
            let sp = single_qubit_sum(space, Axis::Plus, &vec![1.0; space.n_qubits])?.into_matrix();
            Ok(assemble_spin_ops(space, sp, sz))
        }
        SpaceKind::SpinResonator => {
            Err(Error::UnsupportedSpace("collective spin operators are built on Dicke or FullSpin spaces".into()))
        }
    }
}

fn assemble_spin_ops(space: HilbertSpace, sp: DMatrix<C64>, sz: DMatrix<C64>) -> SpinOps {
    let sm = sp.adjoint();
    let sx = (&sp + &sm) * C64::new(0.5, 0.0);
    let sy = (&sp - &sm) * C64::new(0.0, -0.5);
    SpinOps {
        sx: Operator::from_parts(space, sx, true),
        sy: Operator::from_parts(space, sy, true),
        sz: Operator::from_parts(space, sz, true),
        splus: Operator::from_parts(space, sp, false),
        sminus: Operator::from_parts(space, sm, false),
    }
}

/// Embedding `V` of `Dicke(N)` into `FullSpin(N)`.
#[derive(Clone, Debug)]
pub struct DickeIsometry {
    n_qubits: usize,
    /// Column `k` lists the bit strings with `k` excitations.
    members: Vec<Vec<usize>>,
}

pub fn dicke_isometry(n_qubits: usize) -> DickeIsometry {
    let mut members = vec![Vec::new(); n_qubits + 1];
    for b in 0..(1usize << n_qubits) {
        members[b.count_ones() as usize].push(b);
    }
    DickeIsometry { n_qubits, members }
}

impl DickeIsometry {
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// Dense `2^N × (N+1)` matrix.
    pub fn matrix(&self) -> DMatrix<C64> {
        let mut v = DMatrix::zeros(1 << self.n_qubits, self.n_qubits + 1);
        for (k, bs) in self.members.iter().enumerate() {
            let a = C64::new(1.0 / (bs.len() as f64).sqrt(), 0.0);
            for &b in bs {
                v[(b, k)] = a;
            }
        }
        v
    }

    pub fn embed_vector(&self, psi: &DVector<C64>) -> DVector<C64> {
        let mut out = DVector::zeros(1 << self.n_qubits);
        for (k, bs) in self.members.iter().enumerate() {
            let a = psi[k] / (bs.len() as f64).sqrt();
            for &b in bs {
                out[b] = a;
            }
        }
        out
    }

    /// `V† ψ`.
    pub fn project_vector(&self, psi: &DVector<C64>) -> DVector<C64> {
        DVector::from_iterator(
            self.n_qubits + 1,
            self.members.iter().map(|bs| bs.iter().map(|&b| psi[b]).sum::<C64>() / (bs.len() as f64).sqrt()),
        )
    }

    /// `V M V†`.
    pub fn embed_matrix(&self, m: &DMatrix<C64>) -> DMatrix<C64> {
        let v = self.matrix();
        &v * m * v.adjoint()
    }

    /// `V† M V`.
    pub fn project_matrix(&self, m: &DMatrix<C64>) -> DMatrix<C64> {
        let v = self.matrix();
        v.adjoint() * m * &v
    }

    pub fn embed_state(&self, state: &QuantumState) -> Result<QuantumState> {
        if state.space.kind != SpaceKind::Dicke || state.space.n_qubits != self.n_qubits {
            return Err(Error::UnsupportedSpace("embedding expects a matching Dicke state".into()));
        }
        Ok(state.reduce_to_qubits())
    }
}

/// Joint parity `⊗_j σ_j^x` (identity on the resonator).
pub fn parity_operator(space: HilbertSpace) -> Operator {
    let d = space.dim();
    let mut m = DMatrix::zeros(d, d);
    match space.kind {
        SpaceKind::Dicke => {
            for k in 0..d {
                m[(d - 1 - k, k)] = ONE;
            }
        }
        SpaceKind::FullSpin | SpaceKind::SpinResonator => {
            let levels = space.photon_levels();
            let mask = (1usize << space.n_qubits) - 1;
            for col in 0..d {
                let (b, n) = (col / levels, col % levels);
                m[((b ^ mask) * levels + n, col)] = ONE;
            }
        }
    }
    Operator::from_parts(space, m, true)
}

#[derive(Clone, Debug)]
pub struct ResonatorOps {
    pub a: Operator,
    pub a_dagger: Operator,
}

/// Truncated ladder operators: `a|n⟩ = √n |n-1⟩`, and `a†|n_max⟩ = 0`, so
/// `[a, a†]` equals the identity except for `-n_max` in the top photon level.
pub fn resonator_ops(space: HilbertSpace) -> Result<ResonatorOps> {
    if space.kind != SpaceKind::SpinResonator {
        return Err(Error::UnsupportedSpace("resonator operators need a SpinResonator space".into()));
    }
    let levels = space.photon_levels();
    let d = space.dim();
    let mut a = DMatrix::zeros(d, d);
    for col in 0..d {
        let n = col % levels;
        if n > 0 {
            a[(col - 1, col)] = C64::new((n as f64).sqrt(), 0.0);
        }
    }
    let ad = a.adjoint();
    Ok(ResonatorOps { a: Operator::from_parts(space, a, false), a_dagger: Operator::from_parts(space, ad, false) })
}

/// Total excitation number `a†a + Σ_j |e⟩_j⟨e|` (diagonal).
pub fn excitation_number(space: HilbertSpace) -> Operator {
    let d = space.dim();
    let levels = space.photon_levels();
    let diag = DVector::from_fn(d, |i, _| {
        let v = match space.kind {
            SpaceKind::Dicke => i,
            _ => (i / levels).count_ones() as usize + i % levels,
        };
        C64::new(v as f64, 0.0)
    });
    Operator::from_parts(space, DMatrix::from_diagonal(&diag), true)
}

/// Product state `⊗_j (cos(θ/2)|g⟩ + e^{iφ} sin(θ/2)|e⟩)`, with the resonator in vacuum.
pub fn coherent_spin_state(space: HilbertSpace, theta: f64, phi: f64) -> QuantumState {
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let e = C64::from_polar(s, phi);
    let n = space.n_qubits;
    let d = space.dim();
    let psi = match space.kind {
        SpaceKind::Dicke => DVector::from_fn(d, |k, _| {
            let amp = binomial(n, k).sqrt() * c.powi((n - k) as i32);
            e.powu(k as u32) * amp
        }),
        _ => {
            let levels = space.photon_levels();
            DVector::from_fn(d, |i, _| {
                if i % levels != 0 {
                    return ZERO;
                }
                let k = (i / levels).count_ones() as usize;
                e.powu(k as u32) * c.powi((n - k) as i32)
            })
        }
    };
    QuantumState::from_data_unchecked(space, StateData::Pure(psi))
}

/// `|X⟩ = ⊗_j |+⟩_j`, the +1 eigenstate of every `σ_j^x`.
pub fn plus_state(space: HilbertSpace) -> QuantumState {
    coherent_spin_state(space, std::f64::consts::FRAC_PI_2, 0.0)
}

/// `(|g…g⟩ + e^{iγ}|e…e⟩)/√2`, resonator in vacuum.
pub fn ghz_state(space: HilbertSpace, gamma: f64) -> QuantumState {
    let d = space.dim();
    let mut psi = DVector::zeros(d);
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let top = match space.kind {
        SpaceKind::Dicke => d - 1,
        _ => ((1usize << space.n_qubits) - 1) * space.photon_levels(),
    };
    psi[0] = C64::new(r, 0.0);
    psi[top] = C64::from_polar(r, gamma);
    QuantumState::from_data_unchecked(space, StateData::Pure(psi))
}

/// A computational basis state given per-qubit excitations and a photon number.
pub fn basis_state(space: HilbertSpace, bits: &[usize], photons: usize) -> Result<QuantumState> {
    if bits.len() != space.n_qubits || bits.iter().any(|&b| b > 1) {
        return Err(Error::InvalidArgument("bits must list 0/1 for every qubit".into()));
    }
    if photons >= space.photon_levels() {
        return Err(Error::InvalidArgument(format!("photon number {photons} beyond truncation")));
    }
    let idx = match space.kind {
        SpaceKind::Dicke => {
            let k: usize = bits.iter().sum();
            if k != 0 && k != space.n_qubits {
                return Err(Error::UnsupportedSpace(
                    "only fully symmetric basis states exist in the Dicke space".into(),
                ));
            }
            k
        }
        _ => bits.iter().fold(0, |acc, &b| (acc << 1) | b) * space.photon_levels() + photons,
    };
    let mut psi = DVector::zeros(space.dim());
    psi[idx] = ONE;
    Ok(QuantumState::from_data_unchecked(space, StateData::Pure(psi)))
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &DMatrix<C64>, b: &DMatrix<C64>, tol: f64) -> bool {
        (a - b).iter().all(|z| z.norm() < tol)
    }

    fn comm(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
        a * b - b * a
    }

    #[test]
    fn dimensions() {
        assert_eq!(HilbertSpace::dicke(6).unwrap().dim(), 7);
        assert_eq!(HilbertSpace::full_spin(6).unwrap().dim(), 64);
        assert_eq!(HilbertSpace::spin_resonator(6, 3).unwrap().dim(), 256);
        assert!(HilbertSpace::dicke(0).is_err());
        assert!(HilbertSpace::spin_resonator(2, 0).is_err());
    }

    #[test]
    fn raising_matrix_element_top_of_ladder() {
        let ops = collective_spin(HilbertSpace::dicke(6).unwrap()).unwrap();
        assert!((ops.splus.matrix()[(6, 5)].re - 6f64.sqrt()).abs() < 1e-14);
        let sz = collective_spin(HilbertSpace::dicke(2).unwrap()).unwrap().sz;
        assert_eq!(sz.matrix()[(1, 1)], ZERO);
    }

    #[test]
    fn sx_spectra_agree_between_representations() {
        let full = collective_spin(HilbertSpace::full_spin(3).unwrap()).unwrap();
        let dicke = collective_spin(HilbertSpace::dicke(3).unwrap()).unwrap();
        let mut ef: Vec<f64> = full.sx.matrix().symmetric_eigenvalues().iter().cloned().collect();
        let mut ed: Vec<f64> = dicke.sx.matrix().symmetric_eigenvalues().iter().cloned().collect();
        ef.sort_by(f64::total_cmp);
        ed.sort_by(f64::total_cmp);
        assert!(ed.iter().zip([-1.5, -0.5, 0.5, 1.5]).all(|(a, b)| (a - b).abs() < 1e-12));
        // the symmetric sector is the J = 3/2 multiplet, each level present in the full spectrum
        for e in ed {
            assert!(ef.iter().any(|x| (x - e).abs() < 1e-12));
        }
        assert!((ef[0] + 1.5).abs() < 1e-12 && (ef[7] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn angular_momentum_algebra() {
        for n in 1..=6 {
            for space in [HilbertSpace::dicke(n).unwrap(), HilbertSpace::full_spin(n).unwrap()] {
                let s = collective_spin(space).unwrap();
                let i = C64::new(0.0, 1.0);
                assert!(close(&comm(s.sx.matrix(), s.sy.matrix()), &(s.sz.matrix() * i), 1e-10));
                assert!(close(&comm(s.sy.matrix(), s.sz.matrix()), &(s.sx.matrix() * i), 1e-10));
                assert!(close(&comm(s.sz.matrix(), s.sx.matrix()), &(s.sy.matrix() * i), 1e-10));
            }
        }
    }

    #[test]
    fn pauli_conventions() {
        let s2 = HilbertSpace::full_spin(2).unwrap();
        let zz = pauli_string(s2, &[(0, Axis::Z), (1, Axis::Z)]).unwrap();
        assert_eq!(zz.matrix()[(0, 0)], ONE);
        let s1 = HilbertSpace::full_spin(1).unwrap();
        let p = pauli_string(s1, &[(0, Axis::Plus)]).unwrap();
        assert_eq!(p.matrix()[(1, 0)], ONE);
        assert_eq!(p.matrix()[(0, 1)], ZERO);
        let x = Axis::X.matrix();
        let y = Axis::Y.matrix();
        let z = Axis::Z.matrix();
        // right-handed: [σx, σy] = 2iσz
        assert!(close(&comm(&x, &y), &(z * C64::new(0.0, 2.0)), 1e-15));
        let s6 = HilbertSpace::full_spin(6).unwrap();
        let all_x: Vec<_> = (0..6).map(|j| (j, Axis::X)).collect();
        let px = pauli_string(s6, &all_x).unwrap();
        assert_eq!(px.matrix()[(63, 0)], ONE);
        assert!(pauli_string(s6, &[(0, Axis::X), (0, Axis::Z)]).is_err());
        assert!(pauli_string(s6, &[(6, Axis::X)]).is_err());
        assert!(pauli_string(HilbertSpace::dicke(2).unwrap(), &[(0, Axis::X)]).is_err());
    }

    #[test]
    fn pauli_string_on_resonator_space_is_identity_on_photons() {
        let s = HilbertSpace::spin_resonator(2, 2).unwrap();
        let x0 = pauli_string(s, &[(0, Axis::X)]).unwrap();
        let reference = pauli_string(HilbertSpace::full_spin(2).unwrap(), &[(0, Axis::X)]).unwrap();
        let expect = reference.matrix().kronecker(&DMatrix::<C64>::identity(3, 3));
        assert!(close(x0.matrix(), &expect, 1e-15));
    }

    #[test]
    fn isometry_columns_and_orthonormality() {
        let v = dicke_isometry(2).matrix();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((v[(1, 1)].re - r).abs() < 1e-15 && (v[(2, 1)].re - r).abs() < 1e-15);
        let v6 = dicke_isometry(6).matrix();
        assert_eq!(v6[(0, 0)], ONE);
        assert!(close(&(v6.adjoint() * &v6), &DMatrix::identity(7, 7), 1e-12));
    }

    #[test]
    fn isometry_intertwines_spin_operators() {
        for n in 1..=6 {
            let iso = dicke_isometry(n);
            let v = iso.matrix();
            let d = collective_spin(HilbertSpace::dicke(n).unwrap()).unwrap();
            let f = collective_spin(HilbertSpace::full_spin(n).unwrap()).unwrap();
            for (a, b) in [(&d.sx, &f.sx), (&d.sy, &f.sy), (&d.sz, &f.sz)] {
                assert!(close(&(&v * a.matrix()), &(b.matrix() * &v), 1e-10));
            }
            let psi = DVector::from_fn(n + 1, |k, _| C64::new(k as f64, 1.0));
            assert!((iso.project_vector(&iso.embed_vector(&psi)) - &psi).norm() < 1e-12);
        }
    }

    #[test]
    fn dicke_parity_matches_rotation_form() {
        for n in 1..=6 {
            let space = HilbertSpace::dicke(n).unwrap();
            let sx = collective_spin(space).unwrap().sx;
            let rot = unitary_exp(sx.matrix(), std::f64::consts::PI) * C64::new(0.0, 1.0).powu(n as u32);
            assert!(close(&rot, parity_operator(space).matrix(), 1e-10));
        }
    }

    #[test]
    fn parity_involution_and_symmetries() {
        for n in [2, 4] {
            for space in [HilbertSpace::dicke(n).unwrap(), HilbertSpace::full_spin(n).unwrap()] {
                let p = parity_operator(space);
                let pm = p.matrix();
                assert!(close(&(pm * pm), &DMatrix::identity(space.dim(), space.dim()), 1e-12));
                let s = collective_spin(space).unwrap();
                let sz2 = s.sz.matrix() * s.sz.matrix();
                assert!(comm(pm, s.sx.matrix()).norm() < 1e-10);
                assert!(comm(pm, &sz2).norm() < 1e-10);
                assert!((pm * s.sz.matrix() + s.sz.matrix() * pm).norm() < 1e-10);
            }
        }
        let space = HilbertSpace::full_spin(2).unwrap();
        let ghz = ghz_state(space, 0.0);
        assert!((ghz.expectation(&parity_operator(space)).unwrap().re - 1.0).abs() < 1e-14);
        let d6 = HilbertSpace::dicke(6).unwrap();
        let x = plus_state(d6);
        assert!((x.expectation(&parity_operator(d6)).unwrap().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn resonator_ladder() {
        let space = HilbertSpace::spin_resonator(1, 3).unwrap();
        let r = resonator_ops(space).unwrap();
        assert_eq!(r.a.matrix()[(0, 1)], ONE);
        let num = r.a_dagger.matrix() * r.a.matrix();
        for i in 0..space.dim() {
            assert!((num[(i, i)].re - (i % 4) as f64).abs() < 1e-12);
        }
        let c = comm(r.a.matrix(), r.a_dagger.matrix());
        for i in 0..space.dim() {
            let expect = if i % 4 == 3 { -3.0 } else { 1.0 };
            assert!((c[(i, i)].re - expect).abs() < 1e-12);
        }
        assert!(resonator_ops(HilbertSpace::full_spin(1).unwrap()).is_err());
    }

    #[test]
    fn plus_state_in_all_spaces() {
        let full = plus_state(HilbertSpace::full_spin(6).unwrap());
        let dicke = plus_state(HilbertSpace::dicke(6).unwrap());
        assert!((full.norm_or_trace() - 1.0).abs() < 1e-12);
        assert!((dicke.norm_or_trace() - 1.0).abs() < 1e-12);
        let embedded = dicke.reduce_to_qubits();
        assert!((embedded.fidelity(&full).unwrap() - 1.0).abs() < 1e-12);
        let sr = plus_state(HilbertSpace::spin_resonator(6, 2).unwrap());
        let reduced = sr.reduce_to_qubits();
        assert!((reduced.fidelity(&full).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn state_validation() {
        let s = HilbertSpace::full_spin(1).unwrap();
        assert!(QuantumState::pure(s, DVector::from_vec(vec![ONE, ONE])).is_err());
        assert!(QuantumState::density(s, DMatrix::identity(2, 2) * C64::new(0.5, 0.0)).is_ok());
        let bad = DMatrix::from_row_slice(2, 2, &[C64::new(1.5, 0.0), ZERO, ZERO, C64::new(-0.5, 0.0)]);
        assert!(matches!(QuantumState::density(s, bad), Err(Error::InvalidState(_))));
        assert!(Operator::new(s, DMatrix::identity(3, 3), true).is_err());
        let nonherm = DMatrix::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO]);
        assert!(Operator::new(s, nonherm, true).is_err());
    }

    #[test]
    fn mixed_state_fidelity() {
        let s = HilbertSpace::full_spin(1).unwrap();
        let mixed = QuantumState::density(s, DMatrix::identity(2, 2) * C64::new(0.5, 0.0)).unwrap();
        let g = basis_state(s, &[0], 0).unwrap();
        assert!((mixed.fidelity(&g.to_density()).unwrap() - 0.5).abs() < 1e-12);
        assert!((mixed.fidelity(&mixed).unwrap() - 1.0).abs() < 1e-12);
    }
}
