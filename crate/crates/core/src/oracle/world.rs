//! The oracle as seen by money schemes and the adversary.
//!
//! A sampled world holds a truth table. A purified world keeps F lazily:
//! table qubits are materialized (as |0̂⟩) only when a quantum query touches
//! them, and classical queries measure the qubit, or draw a fresh uniform bit
//! when it was never touched. By deferred measurement this has the same
//! output statistics as keeping all of F coherent until the end.
//!
//! Registers that may get entangled with F (notes minted with quantum
//! queries) are held in the world memory next to the materialized F qubits.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{ClassicalDB, TruthTable, MAX_INPUT_BITS};
use crate::error::{Error, Result};
use crate::hilbert::{
    measure_projective, DensityOp, Matrix, Projector, QState, RegisterLayout, Vector, C64,
};
use crate::rng::RngStream;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WorldMode {
    Sampled,
    Purified,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    KeyGen,
    Mint,
    Verify,
    Adversary,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum QueryRecord {
    Classical { origin: Origin, position: u64, answer: bool },
    Quantum { origin: Origin, support: Vec<u64> },
}

impl QueryRecord {
    pub fn origin(&self) -> Origin {
        match self {
            QueryRecord::Classical { origin, .. } | QueryRecord::Quantum { origin, .. } => *origin,
        }
    }
}

const PLUS_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct World {
    mode: WorldMode,
    l: usize,
    table: Option<TruthTable>,
    fixed: BTreeMap<u64, bool>,
    memory: QState,
    log: Vec<QueryRecord>,
}

fn f_name(x: u64) -> String {
    format!("F{x}")
}

impl World {
    pub fn sampled(table: TruthTable) -> Self {
        Self {
            mode: WorldMode::Sampled,
            l: table.input_bits(),
            table: Some(table),
            fixed: BTreeMap::new(),
            memory: QState::unit(),
            log: Vec::new(),
        }
    }

    pub fn purified(l: usize) -> Result<Self> {
        if l > MAX_INPUT_BITS {
            return Err(Error::InvalidArgument(format!("oracle input length {l} exceeds {MAX_INPUT_BITS}")));
        }
        Ok(Self {
            mode: WorldMode::Purified,
            l,
            table: None,
            fixed: BTreeMap::new(),
            memory: QState::unit(),
            log: Vec::new(),
        })
    }

    pub fn mode(&self) -> WorldMode {
        self.mode
    }

    pub fn input_bits(&self) -> usize {
        self.l
    }

    pub fn table(&self) -> Option<&TruthTable> {
        self.table.as_ref()
    }

    pub fn memory(&self) -> &QState {
        &self.memory
    }

    pub fn log(&self) -> &[QueryRecord] {
        &self.log
    }

    /// Table qubits currently materialized in memory.
    pub fn materialized(&self) -> Vec<u64> {
        self.memory
            .layout()
            .names()
            .iter()
            .filter_map(|n| n.strip_prefix('F').and_then(|x| x.parse().ok()))
            .collect()
    }

    /// Positions queried classically by the given origins.
    pub fn classical_positions(&self, origins: &[Origin]) -> BTreeSet<u64> {
        self.log
            .iter()
            .filter_map(|r| match r {
                QueryRecord::Classical { origin, position, .. } if origins.contains(origin) => Some(*position),
                _ => None,
            })
            .collect()
    }

    /// Query-answer pairs seen classically by the given origins.
    pub fn classical_pairs(&self, origins: &[Origin]) -> BTreeSet<(u64, bool)> {
        self.log
            .iter()
            .filter_map(|r| match r {
                QueryRecord::Classical { origin, position, answer } if origins.contains(origin) => {
                    Some((*position, *answer))
                }
                _ => None,
            })
            .collect()
    }

    /// Positions touched by any query (classical or quantum support) of the origins.
    pub fn touched_positions(&self, origins: &[Origin]) -> BTreeSet<u64> {
        let mut out = BTreeSet::new();
        for r in self.log.iter().filter(|r| origins.contains(&r.origin())) {
            match r {
                QueryRecord::Classical { position, .. } => {
                    out.insert(*position);
                }
                QueryRecord::Quantum { support, .. } => out.extend(support.iter().copied()),
            }
        }
        out
    }

    fn check_position(&self, x: u64) -> Result<()> {
        if x >= 1 << self.l {
            return Err(Error::InvalidArgument(format!("position {x} outside 2^{}", self.l)));
        }
        Ok(())
    }

    /// Classical query; fixes R(x) in a purified world.
    pub fn classical_query(&mut self, x: u64, origin: Origin, rng: &mut RngStream) -> Result<bool> {
        self.check_position(x)?;
        let z = match self.mode {
            WorldMode::Sampled => self.table.as_ref().expect("sampled world has a table").get(x)?,
            WorldMode::Purified => match self.fixed.get(&x) {
                Some(&z) => z,
                None => {
                    let name = f_name(x);
                    let z = if self.memory.layout().contains(&name) {
                        let (v, post) = self.memory.measure_register(&name, rng)?;
                        self.memory = post;
                        v == 1
                    } else {
                        rng.gen::<bool>()
                    };
                    self.fixed.insert(x, z);
                    self.compact()?;
                    z
                }
            },
        };
        self.log.push(QueryRecord::Classical { origin, position: x, answer: z });
        Ok(z)
    }

    /// Read-only answer for diagnostics in sampled mode.
    pub fn peek(&self, x: u64) -> Option<bool> {
        match self.mode {
            WorldMode::Sampled => self.table.as_ref().and_then(|t| t.get(x).ok()),
            WorldMode::Purified => self.fixed.get(&x).copied(),
        }
    }

    /// Moves a local state into memory under its own register names.
    pub fn hold(&mut self, state: &QState) -> Result<()> {
        self.memory = self.memory.tensor(state)?;
        Ok(())
    }

    /// Applies a unitary to held registers.
    pub fn apply(&mut self, u: &Matrix, regs: &[&str]) -> Result<()> {
        self.memory = self.memory.apply_on(u, regs)?;
        Ok(())
    }

    /// Measures a held register in the computational basis.
    pub fn measure(&mut self, name: &str, rng: &mut RngStream) -> Result<usize> {
        let (v, post) = self.memory.measure_register(name, rng)?;
        self.memory = post;
        self.compact()?;
        Ok(v)
    }

    /// Projective measurement {Π, I − Π} on held registers; true on Π.
    pub fn measure_projector(&mut self, pi: &Projector, regs: &[&str], rng: &mut RngStream) -> Result<bool> {
        let full = pi.embed(self.memory.layout(), regs)?;
        let m = measure_projective(&self.memory, &full, rng)?;
        self.memory = m.post;
        self.compact()?;
        Ok(m.outcome)
    }

    pub fn reduced(&self, regs: &[&str]) -> Result<DensityOp> {
        self.memory.partial_trace(regs)
    }

    /// Removes held registers when they are in a product state with the rest.
    pub fn release(&mut self, regs: &[&str]) -> Result<Option<QState>> {
        match self.memory.factor_out(regs)? {
            Some((taken, rest)) => {
                self.memory = rest;
                Ok(Some(taken))
            }
            None => Ok(None),
        }
    }

    /// Drops materialized table qubits that are back in |0̂⟩ and fixes those
    /// that collapsed to a basis value.
    pub fn compact(&mut self) -> Result<()> {
        for x in self.materialized() {
            let name = f_name(x);
            let rho = self.memory.partial_trace(&[name.as_str()])?;
            let m = rho.matrix();
            let plus = (m[(0, 0)].re - 0.5).abs() < PLUS_TOL
                && (m[(1, 1)].re - 0.5).abs() < PLUS_TOL
                && (m[(0, 1)] - C64::new(0.5, 0.0)).norm() < PLUS_TOL;
            let basis = if m[(0, 0)].re > 1.0 - PLUS_TOL {
                Some(false)
            } else if m[(1, 1)].re > 1.0 - PLUS_TOL {
                Some(true)
            } else {
                None
            };
            if plus || basis.is_some() {
                if let Some((_, rest)) = self.memory.factor_out(&[name.as_str()])? {
                    self.memory = rest;
                    if let Some(z) = basis {
                        self.fixed.insert(x, z);
                    }
                }
            }
        }
        Ok(())
    }

    /// Quantum query |s⟩|y⟩ ↦ |s⟩|y ⊕ R(pos(s))⟩ on held registers `q`, `a`.
    pub fn quantum_query(&mut self, q: &str, a: &str, pos: impl Fn(u64) -> u64, origin: Origin) -> Result<()> {
        let layout = self.memory.layout().clone();
        if layout.register(a)?.qubits != 1 {
            return Err(Error::InvalidArgument("answer register must be one qubit".into()));
        }
        let qw = layout.register(q)?.qubits;
        let support: Vec<u64> = (0..1u64 << qw)
            .filter(|&s| self.memory.register_probability(q, s as usize).map(|p| p > 0.0).unwrap_or(false))
            .map(&pos)
            .collect();
        for &x in &support {
            self.check_position(x)?;
        }
        if self.mode == WorldMode::Purified {
            for &x in &support {
                let name = f_name(x);
                if !self.fixed.contains_key(&x) && !self.memory.layout().contains(&name) {
                    let plus = QState::new(
                        RegisterLayout::new(&[(name.as_str(), 1)])?,
                        Vector::from_element(2, C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0)),
                    )?;
                    self.memory = self.memory.tensor(&plus)?;
                }
            }
        }
        let layout = self.memory.layout().clone();
        let table = self.table.clone();
        let fixed = self.fixed.clone();
        let mut out = Vector::zeros(self.memory.dim());
        let abit = crate::hilbert::qubit_mask(layout.total_qubits(), layout.offset(a)?);
        for (idx, amp) in self.memory.amplitudes().iter().enumerate() {
            if amp.norm() == 0.0 {
                continue;
            }
            let x = pos(layout.read(idx, q)? as u64);
            let bit = match &table {
                Some(t) => t.get(x)?,
                None => match fixed.get(&x) {
                    Some(&z) => z,
                    None => layout.read(idx, &f_name(x))? == 1,
                },
            };
            out[if bit { idx ^ abit } else { idx }] += *amp;
        }
        self.memory = QState::new(layout, out)?;
        self.log.push(QueryRecord::Quantum { origin, support });
        Ok(())
    }

    /// Pairs fixed so far in a purified world, or the whole table when sampled.
    pub fn known_pairs(&self) -> ClassicalDB {
        match &self.table {
            Some(t) => ClassicalDB::from_entries(t.bits().iter().enumerate().map(|(i, &b)| (i as u64, b)).collect())
                .expect("table entries are consistent"),
            None => ClassicalDB::from_entries(self.fixed.iter().map(|(&x, &z)| (x, z)).collect())
                .expect("fixed entries are consistent"),
        }
    }
}

/// U_f on a dense state: |x⟩_q|y⟩_a ↦ |x⟩|y ⊕ f(x)⟩.
pub fn table_query(state: &QState, q: &str, a: &str, f: impl Fn(u64) -> bool) -> Result<QState> {
    let layout = state.layout().clone();
    if layout.register(a)?.qubits != 1 {
        return Err(Error::InvalidArgument("answer register must be one qubit".into()));
    }
    let abit = crate::hilbert::qubit_mask(layout.total_qubits(), layout.offset(a)?);
    let mut out = Vector::zeros(state.dim());
    for (idx, amp) in state.amplitudes().iter().enumerate() {
        let x = layout.read(idx, q)? as u64;
        out[if f(x) { idx ^ abit } else { idx }] += *amp;
    }
    QState::new(layout, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::gates;
    use crate::oracle::sample_oracle;

    #[test]
    fn purified_classical_queries_are_consistent() {
        let mut rng = RngStream::from_seed(2);
        let mut w = World::purified(2).unwrap();
        let a = w.classical_query(1, Origin::Mint, &mut rng).unwrap();
        let b = w.classical_query(1, Origin::Verify, &mut rng).unwrap();
        assert_eq!(a, b);
        assert_eq!(w.classical_positions(&[Origin::Mint]).len(), 1);
    }

    #[test]
    fn quantum_query_on_uniform_serial_then_measure() {
        let mut rng = RngStream::from_seed(11);
        let mut w = World::purified(3).unwrap();
        let s = QState::basis(RegisterLayout::new(&[("S", 2), ("H", 1)]).unwrap(), 0).unwrap();
        w.hold(&s).unwrap();
        let h2 = crate::hilbert::embed_operator(2, &gates::h(), &[0]).unwrap()
            * crate::hilbert::embed_operator(2, &gates::h(), &[1]).unwrap();
        w.apply(&h2, &["S"]).unwrap();
        w.quantum_query("S", "H", |s| 4 | s, Origin::Mint).unwrap();
        assert_eq!(w.materialized().len(), 4);
        let serial = w.measure("S", &mut rng).unwrap() as u64;
        // Only the measured serial's table qubit stays entangled with H.
        assert_eq!(w.materialized(), vec![4 | serial]);
        let h = w.reduced(&["H"]).unwrap();
        assert!((h.matrix()[(0, 0)].re - 0.5).abs() < 1e-12);
        let z = w.classical_query(4 | serial, Origin::Verify, &mut rng).unwrap();
        let h = w.measure("H", &mut rng).unwrap();
        assert_eq!(h == 1, z);
        assert!(w.materialized().is_empty());
    }

    #[test]
    fn sampled_quantum_query_matches_table() {
        let mut rng = RngStream::from_seed(5);
        let t = sample_oracle(2, &mut rng).unwrap();
        let mut w = World::sampled(t.clone());
        let s = QState::basis(RegisterLayout::new(&[("Q", 2), ("A", 1)]).unwrap(), 0b10_0).unwrap();
        w.hold(&s).unwrap();
        w.quantum_query("Q", "A", |x| x, Origin::Mint).unwrap();
        assert_eq!(w.memory().register_probability("A", 1).unwrap() > 0.5, t.get(2).unwrap());
    }
}
