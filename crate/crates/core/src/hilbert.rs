//! Dense complex linear algebra over named multi-register Hilbert spaces.
//!
//! Index arithmetic is big-endian: the first declared register occupies the
//! most significant bits, and within a register qubit 0 is the most
//! significant. Global qubit `q` of an `n`-qubit layout is bit `n - 1 - q` of
//! a basis index.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;

pub type C64 = Complex64;
pub type Matrix = DMatrix<C64>;
pub type Vector = DVector<C64>;

/// Structural checks: norms, Hermiticity, idempotence, traces.
pub const STRUCT_TOL: f64 = 1e-9;
/// Admission threshold for user-supplied unitaries.
pub const UNITARY_TOL: f64 = 1e-6;
pub const DEFAULT_QUBIT_CAP: usize = 20;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Global qubit budget, overridable through `QMSEP_QUBIT_CAP`.
pub fn qubit_cap() -> usize {
    std::env::var("QMSEP_QUBIT_CAP")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_QUBIT_CAP)
}

pub fn check_budget(qubits: usize) -> Result<()> {
    let cap = qubit_cap();
    if qubits > cap {
        return Err(Error::QubitBudget { requested: qubits, cap });
    }
    Ok(())
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Register {
    pub name: String,
    pub qubits: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RegisterLayout {
    registers: Vec<Register>,
}

impl RegisterLayout {
    pub fn new(spec: &[(&str, usize)]) -> Result<Self> {
        let mut layout = Self::default();
        for &(name, qubits) in spec {
            layout.push(name, qubits)?;
        }
        Ok(layout)
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: &str, qubits: usize) -> Result<()> {
        if qubits == 0 {
            return Err(Error::InvalidArgument(format!("register `{name}` has no qubits")));
        }
        if self.contains(name) {
            return Err(Error::DuplicateRegister(name.to_string()));
        }
        self.registers.push(Register { name: name.to_string(), qubits });
        Ok(())
    }

    pub fn registers(&self) -> &[Register] {
        &self.registers
    }

    pub fn contains(&self, name: &str) -> bool {
        self.registers.iter().any(|r| r.name == name)
    }

    pub fn total_qubits(&self) -> usize {
        self.registers.iter().map(|r| r.qubits).sum()
    }

    pub fn dim(&self) -> usize {
        1usize << self.total_qubits()
    }

    pub fn register(&self, name: &str) -> Result<&Register> {
        self.registers
            .iter()
            .find(|r| r.name == name)
            .ok_or_else(|| Error::UnknownRegister(name.to_string()))
    }

    /// Global index of the first qubit of `name`.
    pub fn offset(&self, name: &str) -> Result<usize> {
        let mut off = 0;
        for r in &self.registers {
            if r.name == name {
                return Ok(off);
            }
            off += r.qubits;
        }
        Err(Error::UnknownRegister(name.to_string()))
    }

    /// Global qubit indices of the listed registers, in the listed order.
    pub fn qubits_of(&self, names: &[&str]) -> Result<Vec<usize>> {
        let mut out = Vec::new();
        for (i, name) in names.iter().enumerate() {
            if names[..i].contains(name) {
                return Err(Error::DuplicateRegister(name.to_string()));
            }
            let off = self.offset(name)?;
            let q = self.register(name)?.qubits;
            out.extend(off..off + q);
        }
        Ok(out)
    }

    /// Sub-layout made of the listed registers in the listed order.
    pub fn select(&self, names: &[&str]) -> Result<Self> {
        let mut out = Self::default();
        for name in names {
            let r = self.register(name)?;
            out.push(&r.name, r.qubits)?;
        }
        Ok(out)
    }

    pub fn concat(&self, other: &Self) -> Result<Self> {
        let mut out = self.clone();
        for r in &other.registers {
            out.push(&r.name, r.qubits)?;
        }
        Ok(out)
    }

    pub fn names(&self) -> Vec<&str> {
        self.registers.iter().map(|r| r.name.as_str()).collect()
    }

    /// Value held by register `name` in basis state `index`.
    pub fn read(&self, index: usize, name: &str) -> Result<usize> {
        let n = self.total_qubits();
        let off = self.offset(name)?;
        let q = self.register(name)?.qubits;
        Ok((index >> (n - off - q)) & ((1 << q) - 1))
    }
}

/// Bit mask of global qubit `q` in an `n`-qubit space.
pub fn qubit_mask(n: usize, q: usize) -> usize {
    1usize << (n - 1 - q)
}

/// Sub-index offsets for an ordered list of target qubits: entry `t` is the
/// basis-index contribution of target value `t`.
pub(crate) fn target_offsets(n: usize, qubits: &[usize]) -> Vec<usize> {
    let k = qubits.len();
    (0..1usize << k)
        .map(|t| {
            qubits
                .iter()
                .enumerate()
                .filter(|(j, _)| (t >> (k - 1 - j)) & 1 == 1)
                .map(|(_, &q)| qubit_mask(n, q))
                .sum()
        })
        .collect()
}

/// Splits each basis index into (kept sub-index, rest sub-index).
pub(crate) fn split_indices(n: usize, keep: &[usize]) -> Vec<(usize, usize)> {
    let rest: Vec<usize> = (0..n).filter(|q| !keep.contains(q)).collect();
    (0..1usize << n)
        .map(|idx| (gather_bits(n, idx, keep), gather_bits(n, idx, &rest)))
        .collect()
}

fn gather_bits(n: usize, idx: usize, qubits: &[usize]) -> usize {
    qubits
        .iter()
        .fold(0, |acc, &q| (acc << 1) | ((idx >> (n - 1 - q)) & 1))
}

pub fn unitary_deviation(u: &Matrix) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    let prod = u.adjoint() * u;
    let id = Matrix::identity(u.nrows(), u.ncols());
    max_abs(&(prod - id))
}

pub fn check_unitary(u: &Matrix) -> Result<()> {
    let dev = unitary_deviation(u);
    if dev > UNITARY_TOL {
        return Err(Error::NotUnitary(dev));
    }
    Ok(())
}

pub fn max_abs(m: &Matrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues in descending order.
pub fn hermitian_eigen(m: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    let n = m.nrows();
    if n == 0 {
        return Ok((Vec::new(), Matrix::zeros(0, 0)));
    }
    let sym = (m + m.adjoint()) * c(0.5, 0.0);
    let eig = sym
        .try_symmetric_eigen(f64::EPSILON, 100_000)
        .ok_or_else(|| Error::NumericFailure("Hermitian eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = Matrix::from_fn(n, n, |r, col| eig.eigenvectors[(r, order[col])]);
    Ok((values, vectors))
}

#[derive(Clone, Debug, PartialEq)]
pub struct QState {
    layout: RegisterLayout,
    amps: Vector,
}

impl QState {
    pub fn new(layout: RegisterLayout, amps: Vector) -> Result<Self> {
        if amps.len() != layout.dim() {
            return Err(Error::DimensionMismatch { expected: layout.dim(), got: amps.len() });
        }
        let norm = amps.norm_squared();
        if (norm - 1.0).abs() > STRUCT_TOL {
            return Err(Error::InvalidArgument(format!("state norm^2 is {norm}")));
        }
        Ok(Self { layout, amps })
    }

    /// Normalizes `amps` before wrapping; fails on a zero vector.
    pub fn normalized(layout: RegisterLayout, amps: Vector) -> Result<Self> {
        let norm = amps.norm();
        if norm < 1e-300 {
            return Err(Error::InvalidArgument("cannot normalize the zero vector".into()));
        }
        Self::new(layout, amps / c(norm, 0.0))
    }

    pub fn basis(layout: RegisterLayout, index: usize) -> Result<Self> {
        let dim = layout.dim();
        if index >= dim {
            return Err(Error::InvalidArgument(format!("basis index {index} >= {dim}")));
        }
        let mut amps = Vector::zeros(dim);
        amps[index] = ONE;
        Ok(Self { layout, amps })
    }

    pub fn zero(layout: RegisterLayout) -> Self {
        let mut amps = Vector::zeros(layout.dim());
        amps[0] = ONE;
        Self { layout, amps }
    }

    /// Scalar state on the empty layout.
    pub fn unit() -> Self {
        Self::zero(RegisterLayout::empty())
    }

    pub fn random(layout: RegisterLayout, rng: &mut RngStream) -> Self {
        let amps = Vector::from_fn(layout.dim(), |_, _| {
            c(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        let norm = amps.norm();
        Self { layout, amps: amps / c(norm, 0.0) }
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn amplitudes(&self) -> &Vector {
        &self.amps
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn norm_squared(&self) -> f64 {
        self.amps.norm_squared()
    }

    pub fn inner(&self, other: &QState) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: other.dim() });
        }
        Ok(self.amps.dotc(&other.amps))
    }

    pub fn tensor(&self, other: &QState) -> Result<QState> {
        let layout = self.layout.concat(&other.layout)?;
        check_budget(layout.total_qubits())?;
        let amps = self.amps.kronecker(&other.amps);
        Ok(Self { layout, amps })
    }

    pub fn density(&self) -> DensityOp {
        DensityOp {
            layout: self.layout.clone(),
            matrix: &self.amps * self.amps.adjoint(),
        }
    }

    /// Applies `u` to the listed registers (in that order), identity elsewhere.
    pub fn apply_on(&self, u: &Matrix, targets: &[&str]) -> Result<QState> {
        check_unitary(u)?;
        let qubits = self.layout.qubits_of(targets)?;
        self.apply_on_qubits(u, &qubits)
    }

    /// Applies `u` to the listed global qubits; `u` is trusted to be unitary.
    pub fn apply_on_qubits(&self, u: &Matrix, qubits: &[usize]) -> Result<QState> {
        let sub = 1usize << qubits.len();
        if u.nrows() != sub || u.ncols() != sub {
            return Err(Error::DimensionMismatch { expected: sub, got: u.nrows() });
        }
        let mut out = self.clone();
        apply_dense(out.amps.as_mut_slice(), self.layout.total_qubits(), u, qubits);
        Ok(out)
    }

    pub fn partial_trace(&self, keep: &[&str]) -> Result<DensityOp> {
        if keep.is_empty() {
            return Err(Error::InvalidArgument("partial trace must keep a register".into()));
        }
        let qubits = self.layout.qubits_of(keep)?;
        let layout = self.layout.select(keep)?;
        let n = self.layout.total_qubits();
        let dk = 1usize << qubits.len();
        let dr = self.dim() / dk;
        let mut psi = Matrix::zeros(dk, dr);
        for (idx, (k, r)) in split_indices(n, &qubits).into_iter().enumerate() {
            psi[(k, r)] = self.amps[idx];
        }
        Ok(DensityOp { layout, matrix: &psi * psi.adjoint() })
    }

    /// Probability that register `name` holds `value`.
    pub fn register_probability(&self, name: &str, value: usize) -> Result<f64> {
        let mut p = 0.0;
        for (idx, a) in self.amps.iter().enumerate() {
            if self.layout.read(idx, name)? == value {
                p += a.norm_sqr();
            }
        }
        Ok(p)
    }

    /// Computational-basis measurement of one register, collapsing the state.
    pub fn measure_register(&self, name: &str, rng: &mut RngStream) -> Result<(usize, QState)> {
        let q = self.layout.register(name)?.qubits;
        let mut probs = vec![0.0; 1 << q];
        for (idx, a) in self.amps.iter().enumerate() {
            probs[self.layout.read(idx, name)?] += a.norm_sqr();
        }
        let value = sample_index(&probs, rng);
        let mut amps = self.amps.clone();
        for (idx, a) in amps.iter_mut().enumerate() {
            if self.layout.read(idx, name)? != value {
                *a = ZERO;
            }
        }
        Ok((value, QState::normalized(self.layout.clone(), amps)?))
    }

    /// Splits off `names` when they are in a product state with the rest.
    /// Returns (state of `names`, state of the remaining registers).
    pub fn factor_out(&self, names: &[&str]) -> Result<Option<(QState, QState)>> {
        let rho = self.partial_trace(names)?;
        let (vals, vecs) = hermitian_eigen(&rho.matrix)?;
        if (vals[0] - 1.0).abs() > 1e-9 {
            return Ok(None);
        }
        let taken_layout = self.layout.select(names)?;
        let phi = vecs.column(0).into_owned();
        let rest_names: Vec<&str> = self
            .layout
            .names()
            .into_iter()
            .filter(|n| !names.contains(n))
            .collect();
        let rest_layout = self.layout.select(&rest_names)?;
        let n = self.layout.total_qubits();
        let qubits = self.layout.qubits_of(names)?;
        let mut rest = Vector::zeros(rest_layout.dim());
        for (idx, (k, r)) in split_indices(n, &qubits).into_iter().enumerate() {
            rest[r] += phi[k].conj() * self.amps[idx];
        }
        let taken = QState::normalized(taken_layout, phi)?;
        let rest = QState::normalized(rest_layout, rest)?;
        Ok(Some((taken, rest)))
    }

    /// Reorders registers into `order` (a permutation of the layout names).
    pub fn reorder(&self, order: &[&str]) -> Result<QState> {
        if order.len() != self.layout.registers().len() {
            return Err(Error::InvalidArgument("reorder needs every register".into()));
        }
        let qubits = self.layout.qubits_of(order)?;
        let layout = self.layout.select(order)?;
        let n = self.layout.total_qubits();
        let mut amps = Vector::zeros(self.dim());
        for (idx, a) in self.amps.iter().enumerate() {
            amps[gather_bits(n, idx, &qubits)] = *a;
        }
        Ok(QState { layout, amps })
    }
}

/// In-place dense operator application on a raw amplitude slice.
pub(crate) fn apply_dense(amps: &mut [C64], n: usize, u: &Matrix, qubits: &[usize]) {
    let offsets = target_offsets(n, qubits);
    let mask: usize = offsets.iter().fold(0, |a, &o| a | o);
    let sub = offsets.len();
    let mut buf = vec![ZERO; sub];
    for base in 0..amps.len() {
        if base & mask != 0 {
            continue;
        }
        for (t, &o) in offsets.iter().enumerate() {
            buf[t] = amps[base | o];
        }
        for (r, &o) in offsets.iter().enumerate() {
            let mut acc = ZERO;
            for (col, b) in buf.iter().enumerate() {
                acc += u[(r, col)] * b;
            }
            amps[base | o] = acc;
        }
    }
}

pub(crate) fn sample_index(probs: &[f64], rng: &mut RngStream) -> usize {
    let total: f64 = probs.iter().sum();
    let mut x = rng.gen::<f64>() * total;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        last = i;
        if x < p {
            return i;
        }
        x -= p;
    }
    last
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityOp {
    layout: RegisterLayout,
    matrix: Matrix,
}

impl DensityOp {
    pub fn new(layout: RegisterLayout, matrix: Matrix) -> Result<Self> {
        if matrix.nrows() != layout.dim() || matrix.ncols() != layout.dim() {
            return Err(Error::DimensionMismatch { expected: layout.dim(), got: matrix.nrows() });
        }
        let herm = max_abs(&(&matrix - matrix.adjoint()));
        if herm > STRUCT_TOL {
            return Err(Error::InvalidArgument(format!("density operator not Hermitian ({herm:.2e})")));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > STRUCT_TOL || tr.im.abs() > STRUCT_TOL {
            return Err(Error::InvalidArgument(format!("density operator trace {tr}")));
        }
        let (vals, _) = hermitian_eigen(&matrix)?;
        if vals.last().copied().unwrap_or(0.0) < -STRUCT_TOL {
            return Err(Error::InvalidArgument("density operator has a negative eigenvalue".into()));
        }
        Ok(Self { layout, matrix })
    }

    /// Wraps a matrix already known to be a density operator up to rounding.
    pub(crate) fn from_parts(layout: RegisterLayout, matrix: Matrix) -> Self {
        let matrix = (&matrix + matrix.adjoint()) * c(0.5, 0.0);
        Self { layout, matrix }
    }

    pub fn maximally_mixed(layout: RegisterLayout) -> Self {
        let d = layout.dim();
        let matrix = Matrix::identity(d, d) * c(1.0 / d as f64, 0.0);
        Self { layout, matrix }
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    /// Re(Tr(op ρ)).
    pub fn expectation(&self, op: &Matrix) -> f64 {
        (op * &self.matrix).trace().re
    }

    pub fn eigen(&self) -> Result<(Vec<f64>, Matrix)> {
        hermitian_eigen(&self.matrix)
    }

    pub fn partial_trace(&self, keep: &[&str]) -> Result<DensityOp> {
        if keep.is_empty() {
            return Err(Error::InvalidArgument("partial trace must keep a register".into()));
        }
        let qubits = self.layout.qubits_of(keep)?;
        let layout = self.layout.select(keep)?;
        let n = self.layout.total_qubits();
        let dk = 1usize << qubits.len();
        let split = split_indices(n, &qubits);
        let mut out = Matrix::zeros(dk, dk);
        for (i, &(ki, ri)) in split.iter().enumerate() {
            for (j, &(kj, rj)) in split.iter().enumerate() {
                if ri == rj {
                    out[(ki, kj)] += self.matrix[(i, j)];
                }
            }
        }
        Ok(DensityOp { layout, matrix: out })
    }

    /// Draws one pure component of the eigen-ensemble.
    pub fn sample_pure(&self, rng: &mut RngStream) -> Result<QState> {
        let (vals, vecs) = self.eigen()?;
        let probs: Vec<f64> = vals.iter().map(|v| v.max(0.0)).collect();
        let i = sample_index(&probs, rng);
        QState::normalized(self.layout.clone(), vecs.column(i).into_owned())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Projector {
    matrix: Matrix,
}

impl Projector {
    pub fn new(matrix: Matrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::NotProjector("not square".into()));
        }
        let herm = max_abs(&(&matrix - matrix.adjoint()));
        if herm > STRUCT_TOL {
            return Err(Error::NotProjector(format!("not Hermitian ({herm:.2e})")));
        }
        let idem = max_abs(&(&matrix * &matrix - &matrix));
        if idem > STRUCT_TOL {
            return Err(Error::NotProjector(format!("not idempotent ({idem:.2e})")));
        }
        Ok(Self { matrix })
    }

    pub fn identity(dim: usize) -> Self {
        Self { matrix: Matrix::identity(dim, dim) }
    }

    /// Projector onto the span of orthonormal `vectors` in dimension `dim`.
    pub fn from_vectors(dim: usize, vectors: &[Vector]) -> Result<Self> {
        let mut m = Matrix::zeros(dim, dim);
        for v in vectors {
            if v.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: v.len() });
            }
            m += v * v.adjoint();
        }
        Self::new(m)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn rank(&self) -> usize {
        self.matrix.trace().re.round() as usize
    }

    pub fn complement(&self) -> Self {
        let d = self.dim();
        Self { matrix: Matrix::identity(d, d) - &self.matrix }
    }

    /// Lifts a projector on `targets` to the whole layout.
    pub fn embed(&self, layout: &RegisterLayout, targets: &[&str]) -> Result<Self> {
        let qubits = layout.qubits_of(targets)?;
        Ok(Self { matrix: embed_operator(layout.total_qubits(), &self.matrix, &qubits)? })
    }
}

/// Dense full-space matrix of `op` acting on `qubits`.
pub fn embed_operator(n: usize, op: &Matrix, qubits: &[usize]) -> Result<Matrix> {
    let sub = 1usize << qubits.len();
    if op.nrows() != sub {
        return Err(Error::DimensionMismatch { expected: sub, got: op.nrows() });
    }
    let dim = 1usize << n;
    let mut out = Matrix::zeros(dim, dim);
    for col in 0..dim {
        let mut v = vec![ZERO; dim];
        v[col] = ONE;
        apply_dense(&mut v, n, op, qubits);
        for (r, z) in v.into_iter().enumerate() {
            out[(r, col)] = z;
        }
    }
    Ok(out)
}

/// (1/√d) Σ_i |i⟩_A |i⟩_B.
pub fn max_entangled(dim_per_side: usize) -> Result<QState> {
    if dim_per_side < 2 || !dim_per_side.is_power_of_two() {
        return Err(Error::InvalidArgument(format!(
            "{dim_per_side} is not a power of two >= 2"
        )));
    }
    let m = dim_per_side.trailing_zeros() as usize;
    let layout = RegisterLayout::new(&[("A", m), ("B", m)])?;
    let mut amps = Vector::zeros(layout.dim());
    let a = c(1.0 / (dim_per_side as f64).sqrt(), 0.0);
    for i in 0..dim_per_side {
        amps[i * dim_per_side + i] = a;
    }
    Ok(QState { layout, amps })
}

#[derive(Clone, Debug)]
pub struct Measurement {
    pub outcome: bool,
    pub post: QState,
    pub prob_one: f64,
}

/// Two-outcome projective measurement {Π, I − Π} on the full space.
pub fn measure_projective(state: &QState, pi: &Projector, rng: &mut RngStream) -> Result<Measurement> {
    if pi.dim() != state.dim() {
        return Err(Error::DimensionMismatch { expected: state.dim(), got: pi.dim() });
    }
    let projected = pi.matrix() * state.amplitudes();
    let prob_one = projected.norm_squared().clamp(0.0, 1.0);
    let outcome = rng.gen::<f64>() < prob_one;
    let branch = if outcome { projected } else { state.amplitudes() - &projected };
    let post = QState::normalized(state.layout().clone(), branch)?;
    Ok(Measurement { outcome, post, prob_one })
}

/// Π⊗X + (I−Π)⊗I with Π on `targets` and X on the fresh `outcome` qubit.
pub fn measure_coherently(
    state: &QState,
    pi: &Projector,
    targets: &[&str],
    outcome: &str,
) -> Result<QState> {
    let layout = state.layout();
    let out_reg = layout.register(outcome)?;
    if out_reg.qubits != 1 {
        return Err(Error::InvalidArgument(format!("outcome register `{outcome}` must be one qubit")));
    }
    if targets.contains(&outcome) {
        return Err(Error::InvalidArgument("outcome qubit cannot be a target".into()));
    }
    let stray = state.register_probability(outcome, 1)?;
    if stray > STRUCT_TOL {
        return Err(Error::NotFresh(outcome.to_string()));
    }
    let mut qubits = layout.qubits_of(targets)?;
    if pi.dim() != 1 << qubits.len() {
        return Err(Error::DimensionMismatch { expected: 1 << qubits.len(), got: pi.dim() });
    }
    qubits.push(layout.offset(outcome)?);
    let id = Matrix::identity(pi.dim(), pi.dim());
    let u = pi.matrix().kronecker(&gates::x()) + (id - pi.matrix()).kronecker(&Matrix::identity(2, 2));
    state.apply_on_qubits(&u, &qubits)
}

/// ½‖a − b‖₁ computed from the spectrum of the Hermitian difference.
pub fn trace_distance(a: &DensityOp, b: &DensityOp) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), got: b.dim() });
    }
    let (vals, _) = hermitian_eigen(&(a.matrix() - b.matrix()))?;
    Ok((0.5 * vals.iter().map(|v| v.abs()).sum::<f64>()).clamp(0.0, 1.0))
}

/// Trace distance between pure states: √(1 − |⟨a|b⟩|²).
pub fn pure_trace_distance(a: &Vector, b: &Vector) -> f64 {
    let ov = a.dotc(b).norm_sqr() / (a.norm_squared() * b.norm_squared());
    (1.0 - ov).max(0.0).sqrt()
}

/// Haar-random unitary via QR of a complex Ginibre matrix.
pub fn haar_unitary(dim: usize, rng: &mut RngStream) -> Matrix {
    let g = Matrix::from_fn(dim, dim, |_, _| {
        c(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    q
}

pub mod gates {
    use super::{c, Matrix, ONE, ZERO};
    use std::f64::consts::FRAC_1_SQRT_2;

    pub fn h() -> Matrix {
        let s = c(FRAC_1_SQRT_2, 0.0);
        Matrix::from_row_slice(2, 2, &[s, s, s, -s])
    }
    pub fn x() -> Matrix {
        Matrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
    }
    pub fn z() -> Matrix {
        Matrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
    }
    pub fn s() -> Matrix {
        Matrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, c(0.0, 1.0)])
    }
    pub fn t() -> Matrix {
        Matrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, c(FRAC_1_SQRT_2, FRAC_1_SQRT_2)])
    }
    /// Control is the first (most significant) qubit.
    pub fn cnot() -> Matrix {
        let mut m = Matrix::zeros(4, 4);
        m[(0, 0)] = ONE;
        m[(1, 1)] = ONE;
        m[(2, 3)] = ONE;
        m[(3, 2)] = ONE;
        m
    }
}
