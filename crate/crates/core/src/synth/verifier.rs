//! Verifier circuits and the projector pair they induce.
//!
//! Qubits `0..m` form register M, `m..m+k` form K. P¹ = I_M ⊗ |0^k⟩⟨0^k| and
//! Q¹ = V̂†(|1⟩⟨1|_ans ⊗ I)V̂.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{
    check_budget, hermitian_eigen, qubit_mask, DensityOp, Matrix, Projector, RegisterLayout, Vector,
    C64, ONE, ZERO,
};
use crate::synth::circuit::{Circuit, Gate, GateSpec};

/// Dense projector construction is limited to this many qubits.
pub const DENSE_QUBIT_CAP: usize = 10;

#[derive(Clone, Debug, PartialEq)]
pub struct VerifierSpec {
    m: usize,
    k: usize,
    ans_index: usize,
    v_hat: Circuit,
    v_hat_inv: Circuit,
}

#[derive(Serialize, Deserialize)]
struct VerifierFile {
    m: usize,
    k: usize,
    ans_index: usize,
    gates: Vec<GateSpec>,
}

impl VerifierSpec {
    pub fn new(m: usize, k: usize, ans_index: usize, v_hat: Circuit) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidArgument("verifier needs at least one input qubit".into()));
        }
        if v_hat.qubits() != m + k {
            return Err(Error::DimensionMismatch { expected: m + k, got: v_hat.qubits() });
        }
        if ans_index >= m + k {
            return Err(Error::InvalidArgument(format!("ans_index {ans_index} >= {}", m + k)));
        }
        v_hat.validate()?;
        let v_hat_inv = v_hat.inverse();
        Ok(Self { m, k, ans_index, v_hat, v_hat_inv })
    }

    /// Dense unitary on m+k qubits as a single gate.
    pub fn from_unitary(m: usize, k: usize, ans_index: usize, u: Matrix) -> Result<Self> {
        let n = m + k;
        let circ = Circuit::from_gates(n, vec![Gate::Unitary { targets: (0..n).collect(), matrix: u }])?;
        Self::new(m, k, ans_index, circ)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: VerifierFile = serde_json::from_str(text).map_err(|e| {
            Error::Parse(format!("line {}, column {}: {}", e.line(), e.column(), e))
        })?;
        let gates = file
            .gates
            .iter()
            .enumerate()
            .map(|(i, g)| g.to_gate().map_err(|e| Error::Parse(format!("gate {i}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        let circ = Circuit::from_gates(file.m + file.k, gates)?;
        Self::new(file.m, file.k, file.ans_index, circ)
    }

    pub fn to_json(&self) -> String {
        let file = VerifierFile {
            m: self.m,
            k: self.k,
            ans_index: self.ans_index,
            gates: self.v_hat.gates().iter().map(GateSpec::from_gate).collect(),
        };
        serde_json::to_string_pretty(&file).expect("verifier serializes")
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn ans_index(&self) -> usize {
        self.ans_index
    }

    pub fn qubits(&self) -> usize {
        self.m + self.k
    }

    pub fn circuit(&self) -> &Circuit {
        &self.v_hat
    }

    pub fn input_layout(&self) -> RegisterLayout {
        RegisterLayout::new(&[("M", self.m)]).expect("m >= 1")
    }

    /// Q¹ applied to a vector on MK.
    pub fn apply_q1(&self, v: &[C64]) -> Vec<C64> {
        let mut w = v.to_vec();
        self.v_hat.apply(&mut w);
        self.keep_accepting(&mut w);
        self.v_hat_inv.apply(&mut w);
        w
    }

    fn keep_accepting(&self, w: &mut [C64]) {
        let bit = qubit_mask(self.qubits(), self.ans_index);
        for (i, z) in w.iter_mut().enumerate() {
            if i & bit == 0 {
                *z = ZERO;
            }
        }
    }

    /// Basis vector |j⟩_M|0^k⟩_K as an MK index.
    pub fn padded_index(&self, j: usize) -> usize {
        j << self.k
    }

    /// A = ⟨i,0^k|Q¹|j,0^k⟩, the acceptance operator on M.
    pub fn acceptance_operator(&self) -> Matrix {
        let d = 1usize << self.m;
        let dim = 1usize << self.qubits();
        let bit = qubit_mask(self.qubits(), self.ans_index);
        let images: Vec<Vec<C64>> = (0..d)
            .map(|j| {
                let mut v = vec![ZERO; dim];
                v[self.padded_index(j)] = ONE;
                self.v_hat.apply(&mut v);
                v
            })
            .collect();
        let mut a = Matrix::zeros(d, d);
        for i in 0..d {
            for j in i..d {
                let mut s = ZERO;
                for x in 0..dim {
                    if x & bit != 0 {
                        s += images[i][x].conj() * images[j][x];
                    }
                }
                a[(i, j)] = s;
                a[(j, i)] = s.conj();
            }
        }
        a
    }

    /// Tr(Q¹(ρ ⊗ |0^k⟩⟨0^k|)).
    pub fn acceptance(&self, rho: &DensityOp) -> Result<f64> {
        if rho.dim() != 1 << self.m {
            return Err(Error::DimensionMismatch { expected: 1 << self.m, got: rho.dim() });
        }
        Ok(rho.expectation(&self.acceptance_operator()).clamp(0.0, 1.0))
    }
}

pub fn build_pq(spec: &VerifierSpec) -> Result<(Projector, Projector)> {
    let n = spec.qubits();
    if n > DENSE_QUBIT_CAP {
        return Err(Error::QubitBudget { requested: n, cap: DENSE_QUBIT_CAP });
    }
    let dim = 1usize << n;
    let mut p = Matrix::zeros(dim, dim);
    for j in 0..1usize << spec.m() {
        let i = spec.padded_index(j);
        p[(i, i)] = ONE;
    }
    let v = spec.circuit().to_matrix();
    let bit = qubit_mask(n, spec.ans_index());
    let mut ans = Matrix::zeros(dim, dim);
    for i in (0..dim).filter(|i| i & bit != 0) {
        ans[(i, i)] = ONE;
    }
    let q = v.adjoint() * ans * v;
    let q = (&q + q.adjoint()) * C64::new(0.5, 0.0);
    Ok((Projector::new(p)?, Projector::new(q)?))
}

/// Top eigenvalue of P¹Q¹P¹ and the matching witness on M.
pub fn max_acceptance(spec: &VerifierSpec) -> Result<(f64, DensityOp)> {
    let (vals, vecs) = hermitian_eigen(&spec.acceptance_operator())?;
    let top = vecs.column(0).into_owned();
    let witness = DensityOp::from_parts(spec.input_layout(), &top * top.adjoint());
    Ok((vals[0].clamp(0.0, 1.0), witness))
}

/// The pair (P¹, Q¹) compressed to W = range(P¹) + Q¹ range(P¹).
///
/// W is invariant under both projectors, so alternating measurements that
/// start in range(P¹) never leave it. The first `2^m` basis columns are
/// |j, 0^k⟩, hence P¹ restricted to W is diag(I, 0).
#[derive(Clone, Debug)]
pub struct ReducedPair {
    pub m: usize,
    pub basis: Matrix,
    pub p: Matrix,
    pub q: Matrix,
}

impl ReducedPair {
    pub fn new(spec: &VerifierSpec) -> Result<Self> {
        check_budget(spec.qubits())?;
        let d = 1usize << spec.m();
        let dim = 1usize << spec.qubits();
        let mut cols: Vec<Vector> = (0..d)
            .map(|j| {
                let mut v = Vector::zeros(dim);
                v[spec.padded_index(j)] = ONE;
                v
            })
            .collect();
        for j in 0..d {
            let image = Vector::from_vec(spec.apply_q1(cols[j].as_slice()));
            let mut r = image;
            for _ in 0..2 {
                for b in &cols {
                    let proj = b.dotc(&r);
                    r -= b * proj;
                }
            }
            let norm = r.norm();
            if norm > 1e-9 {
                cols.push(r / C64::new(norm, 0.0));
            }
        }
        let dw = cols.len();
        let basis = Matrix::from_columns(&cols);
        let q_images: Vec<Vector> = cols
            .iter()
            .map(|b| Vector::from_vec(spec.apply_q1(b.as_slice())))
            .collect();
        let q_full = Matrix::from_columns(&q_images);
        let q = basis.adjoint() * q_full;
        let q = (&q + q.adjoint()) * C64::new(0.5, 0.0);
        let mut p = Matrix::zeros(dw, dw);
        for j in 0..d {
            p[(j, j)] = ONE;
        }
        Ok(Self { m: spec.m(), basis, p, q })
    }

    pub fn dim(&self) -> usize {
        self.p.nrows()
    }
}
