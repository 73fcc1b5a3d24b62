//! Sparse pure states over register layouts of up to 64 qubits.
//!
//! Database registers make the oracle views too wide for dense vectors, but
//! the reachable support stays small because every record is a copy of data
//! held elsewhere.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::hilbert::{hermitian_eigen, DensityOp, Matrix, QState, RegisterLayout, C64, ZERO};

/// Amplitudes below this magnitude are dropped after each operation.
const DROP: f64 = 1e-15;

#[derive(Clone, Debug)]
pub struct Field {
    pub shift: u32,
    pub width: u32,
}

impl Field {
    pub fn get(&self, idx: u64) -> u64 {
        if self.width == 0 {
            return 0;
        }
        (idx >> self.shift) & mask(self.width)
    }

    pub fn set(&self, idx: u64, value: u64) -> u64 {
        let m = mask(self.width) << self.shift;
        (idx & !m) | ((value << self.shift) & m)
    }

    /// Bit `i` counted from the most significant qubit of the field.
    pub fn bit(&self, idx: u64, i: u32) -> bool {
        (idx >> (self.shift + self.width - 1 - i)) & 1 == 1
    }

    pub fn set_bit(&self, idx: u64, i: u32) -> u64 {
        idx | (1u64 << (self.shift + self.width - 1 - i))
    }

    pub fn flip_bit(&self, idx: u64, i: u32) -> u64 {
        idx ^ (1u64 << (self.shift + self.width - 1 - i))
    }
}

fn mask(width: u32) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

#[derive(Clone, Debug)]
pub struct SparseState {
    layout: RegisterLayout,
    amps: BTreeMap<u64, C64>,
}

impl SparseState {
    pub fn basis(layout: RegisterLayout, index: u64) -> Result<Self> {
        if layout.total_qubits() > 64 {
            return Err(Error::QubitBudget { requested: layout.total_qubits(), cap: 64 });
        }
        let mut amps = BTreeMap::new();
        amps.insert(index, C64::new(1.0, 0.0));
        Ok(Self { layout, amps })
    }

    /// Builds a state from explicit amplitudes, normalizing them.
    pub fn from_amplitudes(layout: RegisterLayout, entries: impl IntoIterator<Item = (u64, C64)>) -> Result<Self> {
        if layout.total_qubits() > 64 {
            return Err(Error::QubitBudget { requested: layout.total_qubits(), cap: 64 });
        }
        let mut amps: BTreeMap<u64, C64> = BTreeMap::new();
        for (i, a) in entries {
            *amps.entry(i).or_insert(ZERO) += a;
        }
        let mut s = Self { layout, amps };
        let n = s.norm_squared().sqrt();
        if n < 1e-300 {
            return Err(Error::InvalidArgument("zero state".into()));
        }
        s.amps.values_mut().for_each(|a| *a /= n);
        s.prune();
        Ok(s)
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn amplitudes(&self) -> &BTreeMap<u64, C64> {
        &self.amps
    }

    pub fn support(&self) -> usize {
        self.amps.len()
    }

    pub fn field(&self, name: &str) -> Result<Field> {
        let n = self.layout.total_qubits() as u32;
        let off = self.layout.offset(name)? as u32;
        let width = self.layout.register(name)?.qubits as u32;
        Ok(Field { shift: n - off - width, width })
    }

    pub fn norm_squared(&self) -> f64 {
        self.amps.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn inner(&self, other: &SparseState) -> C64 {
        self.amps
            .iter()
            .filter_map(|(i, a)| other.amps.get(i).map(|b| a.conj() * b))
            .sum()
    }

    /// Σ |amp|² over basis states where `pred` holds.
    pub fn weight(&self, pred: impl Fn(u64) -> bool) -> f64 {
        self.amps.iter().filter(|(i, _)| pred(**i)).map(|(_, a)| a.norm_sqr()).sum()
    }

    /// Σ |amp|² f(idx).
    pub fn expectation(&self, f: impl Fn(u64) -> f64) -> f64 {
        self.amps.iter().map(|(i, a)| a.norm_sqr() * f(*i)).sum()
    }

    fn prune(&mut self) {
        self.amps.retain(|_, a| a.norm() > DROP);
    }

    /// Linear extension of a basis map; `f` returns the image of |idx⟩.
    pub fn map_basis<F>(&self, f: F) -> Result<SparseState>
    where
        F: Fn(u64) -> Result<Vec<(u64, C64)>>,
    {
        let mut out: BTreeMap<u64, C64> = BTreeMap::new();
        for (&idx, &a) in &self.amps {
            for (j, c) in f(idx)? {
                *out.entry(j).or_insert(ZERO) += a * c;
            }
        }
        let mut s = Self { layout: self.layout.clone(), amps: out };
        s.prune();
        Ok(s)
    }

    /// Applies `u` to the listed registers (in order).
    pub fn apply(&self, u: &Matrix, regs: &[&str]) -> Result<SparseState> {
        let qubits = self.layout.qubits_of(regs)?;
        let n = self.layout.total_qubits();
        let k = qubits.len();
        if u.nrows() != 1 << k {
            return Err(Error::DimensionMismatch { expected: 1 << k, got: u.nrows() });
        }
        let offsets: Vec<u64> = (0..1u64 << k)
            .map(|t| {
                qubits
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| (t >> (k - 1 - j)) & 1 == 1)
                    .map(|(_, &q)| 1u64 << (n - 1 - q))
                    .sum()
            })
            .collect();
        let m: u64 = offsets.iter().fold(0, |a, &o| a | o);
        let mut groups: BTreeMap<u64, Vec<C64>> = BTreeMap::new();
        for (&idx, &a) in &self.amps {
            let base = idx & !m;
            let sub = offsets.iter().position(|&o| o == idx & m).expect("offset table covers mask");
            groups.entry(base).or_insert_with(|| vec![ZERO; 1 << k])[sub] = a;
        }
        let mut out = BTreeMap::new();
        for (base, v) in groups {
            for (r, &o) in offsets.iter().enumerate() {
                let mut acc = ZERO;
                for (col, b) in v.iter().enumerate() {
                    acc += u[(r, col)] * b;
                }
                if acc.norm() > DROP {
                    out.insert(base | o, acc);
                }
            }
        }
        Ok(Self { layout: self.layout.clone(), amps: out })
    }

    /// Reduced density operator on `keep` (listed order).
    pub fn reduced(&self, keep: &[&str]) -> Result<DensityOp> {
        let fields: Vec<Field> = keep.iter().map(|r| self.field(r)).collect::<Result<_>>()?;
        let layout = self.layout.select(keep)?;
        let dim = layout.dim();
        let total: u32 = fields.iter().map(|f| f.width).sum();
        let keep_mask: u64 = fields.iter().fold(0, |a, f| a | (mask(f.width) << f.shift));
        let mut by_rest: BTreeMap<u64, Vec<(usize, C64)>> = BTreeMap::new();
        for (&idx, &a) in &self.amps {
            let mut k = 0u64;
            let mut used = 0;
            for f in &fields {
                used += f.width;
                k |= f.get(idx) << (total - used);
            }
            by_rest.entry(idx & !keep_mask).or_default().push((k as usize, a));
        }
        let mut rho = Matrix::zeros(dim, dim);
        for group in by_rest.values() {
            for &(i, a) in group {
                for &(j, b) in group {
                    rho[(i, j)] += a * b.conj();
                }
            }
        }
        let tr = rho.trace().re;
        Ok(DensityOp::from_parts(layout, rho * C64::new(1.0 / tr, 0.0)))
    }

    /// Dense copy; fails beyond the dense qubit budget.
    pub fn to_dense(&self) -> Result<QState> {
        crate::hilbert::check_budget(self.layout.total_qubits())?;
        let mut v = crate::hilbert::Vector::zeros(self.layout.dim());
        for (&i, &a) in &self.amps {
            v[i as usize] = a;
        }
        QState::normalized(self.layout.clone(), v)
    }

    /// Trace distance between two pure sparse states.
    pub fn trace_distance(&self, other: &SparseState) -> f64 {
        let ov = self.inner(other).norm_sqr() / (self.norm_squared() * other.norm_squared());
        (1.0 - ov).max(0.0).sqrt()
    }

    /// Computational-basis distribution of `keep` (listed order).
    pub fn distribution(&self, keep: &[&str]) -> Result<Vec<f64>> {
        let fields: Vec<Field> = keep.iter().map(|r| self.field(r)).collect::<Result<_>>()?;
        let total: u32 = fields.iter().map(|f| f.width).sum();
        let mut out = vec![0.0; 1 << total];
        for (&idx, &a) in &self.amps {
            let mut k = 0u64;
            let mut used = 0;
            for f in &fields {
                used += f.width;
                k |= f.get(idx) << (total - used);
            }
            out[k as usize] += a.norm_sqr();
        }
        Ok(out)
    }

    /// Largest eigenvalue of the reduced state on `keep` (1 for a product).
    pub fn reduced_top_eigenvalue(&self, keep: &[&str]) -> Result<f64> {
        let rho = self.reduced(keep)?;
        Ok(hermitian_eigen(rho.matrix())?.0[0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{gates, max_abs};

    #[test]
    fn apply_matches_dense() {
        let layout = RegisterLayout::new(&[("a", 1), ("b", 1), ("c", 1)]).unwrap();
        let s = SparseState::basis(layout.clone(), 0b011).unwrap();
        let out = s.apply(&gates::h(), &["a"]).unwrap().apply(&gates::cnot(), &["a", "b"]).unwrap();
        let dense = QState::basis(layout, 0b011)
            .unwrap()
            .apply_on(&gates::h(), &["a"])
            .unwrap();
        let dense = dense.apply_on_qubits(&gates::cnot(), &[0, 1]).unwrap();
        let back = out.to_dense().unwrap();
        assert!((back.amplitudes() - dense.amplitudes()).norm() < 1e-12);
        let r1 = out.reduced(&["b"]).unwrap();
        let r2 = dense.partial_trace(&["b"]).unwrap();
        assert!(max_abs(&(r1.matrix() - r2.matrix())) < 1e-12);
    }

    #[test]
    fn field_access() {
        let layout = RegisterLayout::new(&[("a", 2), ("b", 3)]).unwrap();
        let s = SparseState::basis(layout, 0).unwrap();
        let fa = s.field("a").unwrap();
        let fb = s.field("b").unwrap();
        let idx = fb.set(fa.set(0, 0b10), 0b101);
        assert_eq!(idx, 0b10_101);
        assert!(fb.bit(idx, 0));
        assert!(!fb.bit(idx, 1));
        assert_eq!(fb.flip_bit(idx, 1), 0b10_111);
    }
}
