//! Gate-level circuits and their JSON form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{apply_dense, c, check_unitary, gates, qubit_mask, Matrix, C64, ONE, ZERO};

#[derive(Clone, Debug, PartialEq)]
pub enum Gate {
    H(usize),
    X(usize),
    Z(usize),
    S(usize),
    T(usize),
    Cnot { control: usize, target: usize },
    Ch { control: usize, target: usize },
    /// X on `target` when every control qubit is 1.
    Mcx { controls: Vec<usize>, target: usize },
    Unitary { targets: Vec<usize>, matrix: Matrix },
}

impl Gate {
    fn qubits(&self) -> Vec<usize> {
        match self {
            Gate::H(q) | Gate::X(q) | Gate::Z(q) | Gate::S(q) | Gate::T(q) => vec![*q],
            Gate::Cnot { control, target } | Gate::Ch { control, target } => vec![*control, *target],
            Gate::Mcx { controls, target } => {
                let mut v = controls.clone();
                v.push(*target);
                v
            }
            Gate::Unitary { targets, .. } => targets.clone(),
        }
    }

    fn adjoint(&self) -> Gate {
        match self {
            Gate::S(q) => Gate::Unitary { targets: vec![*q], matrix: gates::s().adjoint() },
            Gate::T(q) => Gate::Unitary { targets: vec![*q], matrix: gates::t().adjoint() },
            Gate::Unitary { targets, matrix } => {
                Gate::Unitary { targets: targets.clone(), matrix: matrix.adjoint() }
            }
            g => g.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    qubits: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(qubits: usize) -> Self {
        Self { qubits, gates: Vec::new() }
    }

    pub fn from_gates(qubits: usize, gates: Vec<Gate>) -> Result<Self> {
        let c = Self { qubits, gates };
        c.validate()?;
        Ok(c)
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn push(&mut self, gate: Gate) -> &mut Self {
        self.gates.push(gate);
        self
    }

    pub fn validate(&self) -> Result<()> {
        for g in &self.gates {
            let qs = g.qubits();
            for (i, q) in qs.iter().enumerate() {
                if *q >= self.qubits {
                    return Err(Error::InvalidArgument(format!("gate qubit {q} out of range {}", self.qubits)));
                }
                if qs[..i].contains(q) {
                    return Err(Error::InvalidArgument(format!("gate repeats qubit {q}")));
                }
            }
            if let Gate::Unitary { targets, matrix } = g {
                let d = 1usize << targets.len();
                if matrix.nrows() != d || matrix.ncols() != d {
                    return Err(Error::DimensionMismatch { expected: d, got: matrix.nrows() });
                }
                check_unitary(matrix)?;
            }
        }
        Ok(())
    }

    pub fn inverse(&self) -> Circuit {
        Circuit {
            qubits: self.qubits,
            gates: self.gates.iter().rev().map(Gate::adjoint).collect(),
        }
    }

    /// Applies the circuit in place to a `2^qubits` amplitude vector.
    pub fn apply(&self, amps: &mut [C64]) {
        let n = self.qubits;
        debug_assert_eq!(amps.len(), 1 << n);
        for g in &self.gates {
            match g {
                Gate::H(q) => apply_single(amps, n, *q, &gates::h(), 0),
                Gate::X(q) => apply_single(amps, n, *q, &gates::x(), 0),
                Gate::Z(q) => apply_single(amps, n, *q, &gates::z(), 0),
                Gate::S(q) => apply_single(amps, n, *q, &gates::s(), 0),
                Gate::T(q) => apply_single(amps, n, *q, &gates::t(), 0),
                Gate::Cnot { control, target } => {
                    apply_single(amps, n, *target, &gates::x(), qubit_mask(n, *control))
                }
                Gate::Ch { control, target } => {
                    apply_single(amps, n, *target, &gates::h(), qubit_mask(n, *control))
                }
                Gate::Mcx { controls, target } => {
                    let mask = controls.iter().map(|&q| qubit_mask(n, q)).sum();
                    apply_single(amps, n, *target, &gates::x(), mask)
                }
                Gate::Unitary { targets, matrix } => apply_dense(amps, n, matrix, targets),
            }
        }
    }

    pub fn to_matrix(&self) -> Matrix {
        let d = 1usize << self.qubits;
        let mut out = Matrix::zeros(d, d);
        let mut col = vec![ZERO; d];
        for j in 0..d {
            col.iter_mut().for_each(|z| *z = ZERO);
            col[j] = ONE;
            self.apply(&mut col);
            for (i, z) in col.iter().enumerate() {
                out[(i, j)] = *z;
            }
        }
        out
    }
}

/// Single-qubit `u` on `q`, applied where all bits of `control_mask` are set.
fn apply_single(amps: &mut [C64], n: usize, q: usize, u: &Matrix, control_mask: usize) {
    let bit = qubit_mask(n, q);
    let (u00, u01, u10, u11) = (u[(0, 0)], u[(0, 1)], u[(1, 0)], u[(1, 1)]);
    for idx in 0..amps.len() {
        if idx & bit != 0 || idx & control_mask != control_mask {
            continue;
        }
        let a = amps[idx];
        let b = amps[idx | bit];
        amps[idx] = u00 * a + u01 * b;
        amps[idx | bit] = u10 * a + u11 * b;
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GateSpec {
    pub name: String,
    pub targets: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<[f64; 2]>>,
}

impl GateSpec {
    pub fn to_gate(&self) -> Result<Gate> {
        let want = |k: usize| -> Result<()> {
            if self.targets.len() != k {
                return Err(Error::Parse(format!(
                    "gate {} expects {k} targets, got {}",
                    self.name,
                    self.targets.len()
                )));
            }
            Ok(())
        };
        let t = &self.targets;
        let gate = match self.name.to_ascii_uppercase().as_str() {
            "H" => { want(1)?; Gate::H(t[0]) }
            "X" => { want(1)?; Gate::X(t[0]) }
            "Z" => { want(1)?; Gate::Z(t[0]) }
            "S" => { want(1)?; Gate::S(t[0]) }
            "T" => { want(1)?; Gate::T(t[0]) }
            "CNOT" => { want(2)?; Gate::Cnot { control: t[0], target: t[1] } }
            "CH" => { want(2)?; Gate::Ch { control: t[0], target: t[1] } }
            "MCX" => {
                if t.is_empty() {
                    return Err(Error::Parse("MCX needs a target".into()));
                }
                Gate::Mcx { controls: t[..t.len() - 1].to_vec(), target: t[t.len() - 1] }
            }
            "U" => {
                let d = 1usize << t.len();
                let raw = self.matrix.as_ref().ok_or_else(|| Error::Parse("U gate needs a matrix".into()))?;
                if raw.len() != d * d {
                    return Err(Error::Parse(format!("U matrix has {} entries, expected {}", raw.len(), d * d)));
                }
                let entries: Vec<C64> = raw.iter().map(|[re, im]| c(*re, *im)).collect();
                Gate::Unitary { targets: t.clone(), matrix: Matrix::from_row_slice(d, d, &entries) }
            }
            other => return Err(Error::Parse(format!("unknown gate `{other}`"))),
        };
        Ok(gate)
    }

    pub fn from_gate(g: &Gate) -> Self {
        let named = |name: &str, targets: Vec<usize>| GateSpec { name: name.into(), targets, matrix: None };
        match g {
            Gate::H(q) => named("H", vec![*q]),
            Gate::X(q) => named("X", vec![*q]),
            Gate::Z(q) => named("Z", vec![*q]),
            Gate::S(q) => named("S", vec![*q]),
            Gate::T(q) => named("T", vec![*q]),
            Gate::Cnot { control, target } => named("CNOT", vec![*control, *target]),
            Gate::Ch { control, target } => named("CH", vec![*control, *target]),
            Gate::Mcx { controls, target } => {
                let mut t = controls.clone();
                t.push(*target);
                named("MCX", t)
            }
            Gate::Unitary { targets, matrix } => {
                let d = matrix.nrows();
                let mut m = Vec::with_capacity(d * d);
                for r in 0..d {
                    for col in 0..d {
                        let z = matrix[(r, col)];
                        m.push([z.re, z.im]);
                    }
                }
                GateSpec { name: "U".into(), targets: targets.clone(), matrix: Some(m) }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{max_abs, unitary_deviation};

    #[test]
    fn inverse_undoes_circuit() {
        let mut circ = Circuit::new(3);
        circ.push(Gate::H(0))
            .push(Gate::T(1))
            .push(Gate::Cnot { control: 0, target: 2 })
            .push(Gate::S(2))
            .push(Gate::Ch { control: 2, target: 1 })
            .push(Gate::Mcx { controls: vec![0, 1], target: 2 });
        let u = circ.to_matrix();
        let ui = circ.inverse().to_matrix();
        assert!(unitary_deviation(&u) < 1e-12);
        assert!(max_abs(&(&ui * &u - Matrix::identity(8, 8))) < 1e-12);
    }

    #[test]
    fn cnot_matches_dense_gate() {
        let mut circ = Circuit::new(2);
        circ.push(Gate::Cnot { control: 0, target: 1 });
        assert!(max_abs(&(circ.to_matrix() - gates::cnot())) < 1e-15);
    }

    #[test]
    fn json_round_trip() {
        let g = Gate::Unitary { targets: vec![1], matrix: gates::h() };
        let back = GateSpec::from_gate(&g).to_gate().unwrap();
        assert_eq!(back, g);
        let bad = GateSpec { name: "CNOT".into(), targets: vec![0], matrix: None };
        assert!(bad.to_gate().is_err());
    }

    #[test]
    fn validate_rejects_bad_gates() {
        assert!(Circuit::from_gates(1, vec![Gate::H(1)]).is_err());
        assert!(Circuit::from_gates(2, vec![Gate::Cnot { control: 1, target: 1 }]).is_err());
        let nonu = Matrix::from_element(2, 2, ONE);
        assert!(Circuit::from_gates(1, vec![Gate::Unitary { targets: vec![0], matrix: nonu }]).is_err());
    }
}
