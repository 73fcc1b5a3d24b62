//! Oracle-aided public-key quantum money: three toy schemes whose verifiers
//! make classical oracle queries only.
//!
//! Every verifier is a product of single-qubit checks: note qubit i must be
//! H^β X^v |0⟩ where β and v are constants or oracle answers at positions
//! derived from the serial. Oracle positions pack as (serial, qubit, bit)
//! from the most significant end; the counterexample scheme reserves the top
//! input bit for its outer tag positions.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{
    gates, measure_projective, DensityOp, Matrix, Projector, QState, RegisterLayout, Vector, C64, ONE, ZERO,
};
use crate::oracle::{Origin, World, WorldMode, MAX_INPUT_BITS};
use crate::rng::RngStream;

pub const NOTE_REG: &str = "M";
/// Largest number of serials put in superposition by the counterexample mint.
pub const MAX_OUTER_SERIAL_BITS: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeKind {
    HashTag,
    Conjugate,
    Counterexample,
}

impl SchemeKind {
    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::HashTag => "hash-tag",
            SchemeKind::Conjugate => "conjugate",
            SchemeKind::Counterexample => "counterexample",
        }
    }
}

impl std::str::FromStr for SchemeKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hash-tag" => Ok(SchemeKind::HashTag),
            "conjugate" => Ok(SchemeKind::Conjugate),
            "counterexample" => Ok(SchemeKind::Counterexample),
            other => Err(Error::InvalidArgument(format!("unknown scheme `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MintQueryMode {
    Classical,
    Quantum,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchemeProfile {
    pub name: String,
    pub l: usize,
    pub m: usize,
    /// Classical queries per verification.
    pub q: usize,
    /// Oracle queries made by key generation and minting together.
    pub q_prime: usize,
    pub mint_query_mode: MintQueryMode,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BitSource {
    Const(bool),
    Oracle(u64),
}

impl BitSource {
    fn resolve(self, answers: &dyn Fn(u64) -> Option<bool>) -> Option<bool> {
        match self {
            BitSource::Const(b) => Some(b),
            BitSource::Oracle(x) => answers(x),
        }
    }
}

/// Note qubit `qubit` must equal H^basis X^value |0⟩.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QubitCheck {
    pub qubit: usize,
    pub basis: BitSource,
    pub value: BitSource,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyPair {
    pub sk: Vec<bool>,
    pub pk: Vec<bool>,
}

#[derive(Clone, Debug)]
pub enum NoteState {
    /// Pure state on register M.
    Pure(QState),
    /// Mixed state on register M.
    Mixed(DensityOp),
    /// Registers held in the world memory, in note-qubit order.
    Held(Vec<String>),
}

#[derive(Clone, Debug)]
pub struct Banknote {
    pub serial: u64,
    pub state: NoteState,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BanknoteRecord {
    pub serial: u64,
    pub qubits: usize,
    /// Row-major density matrix entries as [re, im].
    pub density: Vec<Vec<[f64; 2]>>,
}

impl Banknote {
    /// Reduced state of the note on register M.
    pub fn density(&self, world: &World) -> Result<DensityOp> {
        match &self.state {
            NoteState::Pure(s) => Ok(s.density()),
            NoteState::Mixed(r) => Ok(r.clone()),
            NoteState::Held(regs) => {
                let names: Vec<&str> = regs.iter().map(String::as_str).collect();
                let rho = world.reduced(&names)?;
                let n = rho.layout().total_qubits();
                DensityOp::new(RegisterLayout::new(&[(NOTE_REG, n)])?, rho.matrix().clone())
            }
        }
    }

    pub fn qubits(&self, world: &World) -> Result<usize> {
        Ok(self.density(world)?.layout().total_qubits())
    }

    pub fn to_record(&self, world: &World) -> Result<BanknoteRecord> {
        let rho = self.density(world)?;
        let m = rho.matrix();
        Ok(BanknoteRecord {
            serial: self.serial,
            qubits: rho.layout().total_qubits(),
            density: (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect(),
        })
    }
}

#[derive(Clone, Debug)]
pub struct Verification {
    pub accept: bool,
    /// Acceptance probability given the oracle answers obtained.
    pub accept_prob: f64,
    pub pairs: Vec<(u64, bool)>,
    pub post: Banknote,
}

fn bits_for(n: usize) -> usize {
    if n <= 1 {
        0
    } else {
        (usize::BITS - (n - 1).leading_zeros()) as usize
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scheme {
    kind: SchemeKind,
    l: usize,
    m: usize,
}

impl Scheme {
    /// `m` is the total number of note qubits (for the counterexample: the
    /// tag qubit plus m − 1 inner conjugate-coding qubits).
    pub fn new(kind: SchemeKind, l: usize, m: usize) -> Result<Self> {
        if l > MAX_INPUT_BITS {
            return Err(Error::InvalidArgument(format!("oracle input length {l} exceeds {MAX_INPUT_BITS}")));
        }
        if m == 0 {
            return Err(Error::InvalidArgument("a note needs at least one qubit".into()));
        }
        let s = Self { kind, l, m };
        let need = match kind {
            SchemeKind::HashTag => bits_for(m),
            SchemeKind::Conjugate => bits_for(m) + 1,
            SchemeKind::Counterexample => {
                if m < 2 {
                    return Err(Error::InvalidArgument("counterexample needs m ≥ 2".into()));
                }
                1 + bits_for(m - 1) + 1
            }
        };
        if l < need {
            return Err(Error::InvalidArgument(format!(
                "{} with m = {m} needs at least l = {need} input bits",
                kind.name()
            )));
        }
        Ok(s)
    }

    pub fn kind(&self) -> SchemeKind {
        self.kind
    }

    pub fn input_bits(&self) -> usize {
        self.l
    }

    pub fn note_qubits(&self) -> usize {
        self.m
    }

    fn inner(&self) -> Scheme {
        Scheme { kind: SchemeKind::Conjugate, l: self.l - 1, m: self.m - 1 }
    }

    pub fn profile(&self) -> SchemeProfile {
        let (q, qp, mode) = match self.kind {
            SchemeKind::HashTag => (self.m, self.m, MintQueryMode::Classical),
            SchemeKind::Conjugate => (2 * self.m, 2 * self.m, MintQueryMode::Classical),
            SchemeKind::Counterexample => {
                let inner = 2 * (self.m - 1);
                (1 + inner, 1 + inner, MintQueryMode::Quantum)
            }
        };
        SchemeProfile { name: self.kind.name().into(), l: self.l, m: self.m, q, q_prime: qp, mint_query_mode: mode }
    }

    /// Bits of the (inner) serial number.
    pub fn serial_bits(&self) -> usize {
        match self.kind {
            SchemeKind::HashTag => self.l - bits_for(self.m),
            SchemeKind::Conjugate => self.l - bits_for(self.m) - 1,
            SchemeKind::Counterexample => self.inner().serial_bits(),
        }
    }

    /// Bits of the outer serial (counterexample only).
    pub fn outer_serial_bits(&self) -> usize {
        match self.kind {
            SchemeKind::Counterexample => (self.l - 1).min(MAX_OUTER_SERIAL_BITS),
            _ => 0,
        }
    }

    fn split_serial(&self, serial: u64) -> (u64, u64) {
        let sb = self.serial_bits();
        (serial >> sb, serial & ((1 << sb) - 1))
    }

    pub fn outer_position(&self, s_out: u64) -> u64 {
        (1 << (self.l - 1)) | s_out
    }

    /// Position for (serial, qubit, bit) in the conjugate/hash-tag layout.
    fn position(&self, serial: u64, qubit: usize, bit: u64) -> u64 {
        let ib = bits_for(self.m);
        match self.kind {
            SchemeKind::HashTag => (serial << ib) | qubit as u64,
            _ => (serial << (ib + 1)) | ((qubit as u64) << 1) | bit,
        }
    }

    /// Verification checks, one per note qubit.
    pub fn checks(&self, serial: u64) -> Vec<QubitCheck> {
        match self.kind {
            SchemeKind::HashTag => (0..self.m)
                .map(|i| QubitCheck {
                    qubit: i,
                    basis: BitSource::Const(false),
                    value: BitSource::Oracle(self.position(serial, i, 0)),
                })
                .collect(),
            SchemeKind::Conjugate => (0..self.m)
                .map(|i| QubitCheck {
                    qubit: i,
                    basis: BitSource::Oracle(self.position(serial, i, 0)),
                    value: BitSource::Oracle(self.position(serial, i, 1)),
                })
                .collect(),
            SchemeKind::Counterexample => {
                let (s_out, s_in) = self.split_serial(serial);
                let mut out = vec![QubitCheck {
                    qubit: 0,
                    basis: BitSource::Const(false),
                    value: BitSource::Oracle(self.outer_position(s_out)),
                }];
                out.extend(self.inner().checks(s_in).into_iter().map(|c| QubitCheck { qubit: c.qubit + 1, ..c }));
                out
            }
        }
    }

    /// Classical queries made by one verification, in order.
    pub fn query_positions(&self, serial: u64) -> Vec<u64> {
        let mut out = Vec::new();
        for c in self.checks(serial) {
            for src in [c.basis, c.value] {
                if let BitSource::Oracle(x) = src {
                    out.push(x);
                }
            }
        }
        out
    }

    /// ⊗_i |ψ_i⟩⟨ψ_i| on the note, or None when an answer is missing.
    pub fn accept_projector(&self, serial: u64, answers: &dyn Fn(u64) -> Option<bool>) -> Option<Projector> {
        let mut v = Vector::from_element(1, ONE);
        for c in self.checks(serial) {
            let beta = c.basis.resolve(answers)?;
            let val = c.value.resolve(answers)?;
            v = v.kronecker(&qubit_state(beta, val));
        }
        Projector::from_vectors(v.len(), &[v]).ok()
    }

    /// Tr(Π ρ) for the given oracle answers.
    pub fn acceptance(&self, serial: u64, rho: &DensityOp, answers: &dyn Fn(u64) -> Option<bool>) -> Result<f64> {
        let pi = self
            .accept_projector(serial, answers)
            .ok_or_else(|| Error::InvalidArgument("missing oracle answer for a verifier query".into()))?;
        if pi.dim() != rho.dim() {
            return Err(Error::ShapeMismatch { expected: self.m, got: rho.layout().total_qubits() });
        }
        Ok(rho.expectation(pi.matrix()).clamp(0.0, 1.0))
    }

    pub fn key_gen(&self, world: &World, _rng: &mut RngStream) -> Result<KeyPair> {
        if self.profile().mint_query_mode == MintQueryMode::Quantum && world.mode() != WorldMode::Purified {
            return Err(Error::IncompatibleMode(format!("{} mints with quantum queries and needs a purified world", self.kind.name())));
        }
        if world.input_bits() != self.l {
            return Err(Error::IncompatibleMode(format!("world has l = {}, scheme needs {}", world.input_bits(), self.l)));
        }
        // None of the toy schemes has keys; the counterexample inherits the
        // conjugate scheme's empty pair.
        Ok(KeyPair::default())
    }

    pub fn mint(&self, _sk: &KeyPair, world: &mut World, rng: &mut RngStream) -> Result<Banknote> {
        if world.input_bits() != self.l {
            return Err(Error::IncompatibleMode(format!("world has l = {}, scheme needs {}", world.input_bits(), self.l)));
        }
        match self.kind {
            SchemeKind::HashTag | SchemeKind::Conjugate => {
                let serial = rng.gen_range(0..1u64 << self.serial_bits());
                let state = self.mint_local(serial, world, rng)?;
                Ok(Banknote { serial, state: NoteState::Pure(state) })
            }
            SchemeKind::Counterexample => {
                if world.mode() != WorldMode::Purified {
                    return Err(Error::IncompatibleMode("counterexample mint needs a purified world".into()));
                }
                let ob = self.outer_serial_bits();
                let regs = QState::zero(RegisterLayout::new(&[("S", ob), ("H", 1)])?);
                world.hold(&regs)?;
                let mut hs = Matrix::from_element(1, 1, ONE);
                for _ in 0..ob {
                    hs = hs.kronecker(&gates::h());
                }
                world.apply(&hs, &["S"])?;
                world.quantum_query("S", "H", |s| self.outer_position(s), Origin::Mint)?;
                let s_out = world.measure("S", rng)? as u64;
                world.release(&["S"])?;
                let inner = self.inner();
                let s_in = rng.gen_range(0..1u64 << inner.serial_bits());
                let n = inner.mint_local(s_in, world, rng)?;
                let n = QState::new(RegisterLayout::new(&[("N", inner.m)])?, n.amplitudes().clone())?;
                world.hold(&n)?;
                Ok(Banknote {
                    serial: (s_out << self.serial_bits()) | s_in,
                    state: NoteState::Held(vec!["H".into(), "N".into()]),
                })
            }
        }
    }

    /// Product note for the classical-query schemes.
    fn mint_local(&self, serial: u64, world: &mut World, rng: &mut RngStream) -> Result<QState> {
        let mut v = Vector::from_element(1, ONE);
        for c in self.checks(serial) {
            let mut get = |src: BitSource| -> Result<bool> {
                match src {
                    BitSource::Const(b) => Ok(b),
                    BitSource::Oracle(x) => world.classical_query(x, Origin::Mint, rng),
                }
            };
            let beta = get(c.basis)?;
            let val = get(c.value)?;
            v = v.kronecker(&qubit_state(beta, val));
        }
        QState::new(RegisterLayout::new(&[(NOTE_REG, self.checks(serial).len())])?, v)
    }

    /// Projective verification with classical queries.
    pub fn verify(&self, _pk: &KeyPair, note: &Banknote, world: &mut World, rng: &mut RngStream) -> Result<Verification> {
        let mut pairs = Vec::new();
        for x in self.query_positions(note.serial) {
            let z = world.classical_query(x, Origin::Verify, rng)?;
            pairs.push((x, z));
        }
        let lookup = |x: u64| pairs.iter().find(|p| p.0 == x).map(|p| p.1);
        let pi = self.accept_projector(note.serial, &lookup).expect("all answers queried");
        let (accept, prob, state) = match &note.state {
            NoteState::Pure(s) => {
                check_shape(self.m, s.layout().total_qubits())?;
                let meas = measure_projective(s, &pi, rng)?;
                (meas.outcome, meas.prob_one, NoteState::Pure(meas.post))
            }
            NoteState::Mixed(rho) => {
                check_shape(self.m, rho.layout().total_qubits())?;
                let p = rho.expectation(pi.matrix()).clamp(0.0, 1.0);
                let accept = rng.gen::<f64>() < p;
                let proj = if accept { pi.clone() } else { pi.complement() };
                let post = proj.matrix() * rho.matrix() * proj.matrix();
                let tr = post.trace().re;
                let post = if tr > 1e-300 { post * C64::new(1.0 / tr, 0.0) } else { rho.matrix().clone() };
                (accept, p, NoteState::Mixed(DensityOp::new(rho.layout().clone(), post)?))
            }
            NoteState::Held(regs) => {
                let names: Vec<&str> = regs.iter().map(String::as_str).collect();
                let rho = world.reduced(&names)?;
                check_shape(self.m, rho.layout().total_qubits())?;
                let p = rho.expectation(pi.matrix()).clamp(0.0, 1.0);
                let accept = world.measure_projector(&pi, &names, rng)?;
                (accept, p, NoteState::Held(regs.clone()))
            }
        };
        Ok(Verification { accept, accept_prob: prob, pairs, post: Banknote { serial: note.serial, state } })
    }

    /// Verifies `count` times, threading post-states.
    pub fn reuse_loop(
        &self,
        pk: &KeyPair,
        note: &Banknote,
        world: &mut World,
        count: usize,
        rng: &mut RngStream,
    ) -> Result<(Vec<bool>, Banknote)> {
        if count == 0 {
            return Err(Error::InvalidArgument("reuse loop needs count ≥ 1".into()));
        }
        let mut cur = note.clone();
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            let v = self.verify(pk, &cur, world, rng)?;
            out.push(v.accept);
            cur = v.post;
        }
        Ok((out, cur))
    }

    /// Fresh world suited to the scheme's mint mode.
    pub fn fresh_world(&self, rng: &mut RngStream) -> Result<World> {
        match self.profile().mint_query_mode {
            MintQueryMode::Classical => Ok(World::sampled(crate::oracle::sample_oracle(self.l, rng)?)),
            MintQueryMode::Quantum => World::purified(self.l),
        }
    }
}

fn check_shape(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::ShapeMismatch { expected, got });
    }
    Ok(())
}

/// H^β X^v |0⟩.
pub fn qubit_state(beta: bool, value: bool) -> Vector {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    match (beta, value) {
        (false, false) => Vector::from_vec(vec![ONE, ZERO]),
        (false, true) => Vector::from_vec(vec![ZERO, ONE]),
        (true, false) => Vector::from_vec(vec![C64::new(h, 0.0), C64::new(h, 0.0)]),
        (true, true) => Vector::from_vec(vec![C64::new(h, 0.0), C64::new(-h, 0.0)]),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ReusabilityReport {
    pub notes: usize,
    pub rounds: usize,
    pub accepted: usize,
    pub rate: f64,
}

/// δr estimate: fraction of accepted rounds over `notes` fresh notes, each
/// verified `rounds` times.
pub fn measure_reusability(scheme: &Scheme, notes: usize, rounds: usize, rng: &mut RngStream) -> Result<ReusabilityReport> {
    let mut accepted = 0;
    for i in 0..notes {
        let mut r = rng.split_index("reuse", i as u64);
        let mut world = scheme.fresh_world(&mut r)?;
        let kp = scheme.key_gen(&world, &mut r)?;
        let note = scheme.mint(&kp, &mut world, &mut r)?;
        let (acc, _) = scheme.reuse_loop(&kp, &note, &mut world, rounds, &mut r)?;
        accepted += acc.iter().filter(|&&a| a).count();
    }
    let total = notes * rounds;
    Ok(ReusabilityReport { notes, rounds, accepted, rate: accepted as f64 / total as f64 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{sample_oracle, TruthTable};

    #[test]
    fn hash_tag_mint_matches_table() {
        let table = TruthTable::new(3, vec![true, false, false, true, true, true, false, false]).unwrap();
        let scheme = Scheme::new(SchemeKind::HashTag, 3, 2).unwrap();
        let mut world = World::sampled(table.clone());
        let mut rng = RngStream::from_seed(1);
        let note = scheme.mint(&KeyPair::default(), &mut world, &mut rng).unwrap();
        let s = note.serial;
        let want = ((table.get(s << 1).unwrap() as usize) << 1) | table.get((s << 1) | 1).unwrap() as usize;
        match &note.state {
            NoteState::Pure(q) => assert!((q.amplitudes()[want].re - 1.0).abs() < 1e-12),
            _ => panic!("hash-tag notes are local"),
        }
        let v = scheme.verify(&KeyPair::default(), &note, &mut world, &mut rng).unwrap();
        assert!(v.accept);
        assert_eq!(v.pairs.len(), 2);
    }

    #[test]
    fn conjugate_tamper_halves_acceptance() {
        let scheme = Scheme::new(SchemeKind::Conjugate, 4, 2).unwrap();
        let mut rng = RngStream::from_seed(9);
        let mut world = World::sampled(sample_oracle(4, &mut rng).unwrap());
        let note = scheme.mint(&KeyPair::default(), &mut world, &mut rng).unwrap();
        let rho = note.density(&world).unwrap();
        let sb = scheme.serial_bits();
        assert_eq!(sb, 2);
        let answers = |x: u64| world.peek(x);
        let full = scheme.acceptance(note.serial, &rho, &answers).unwrap();
        assert!((full - 1.0).abs() < 1e-12);
        let c0 = scheme.checks(note.serial)[0];
        let bit = |src: BitSource| match src {
            BitSource::Const(b) => b,
            BitSource::Oracle(x) => world.peek(x).unwrap(),
        };
        let psi0 = qubit_state(bit(c0.basis), bit(c0.value));
        let mixed = (&psi0 * psi0.adjoint()).kronecker(&(Matrix::identity(2, 2) * C64::new(0.5, 0.0)));
        let tampered = DensityOp::new(rho.layout().clone(), mixed).unwrap();
        let p = scheme.acceptance(note.serial, &tampered, &answers).unwrap();
        assert!((p - 0.5).abs() < 1e-9, "{p}");
    }

    #[test]
    fn reuse_keeps_accepting() {
        let mut rng = RngStream::from_seed(3);
        for kind in [SchemeKind::HashTag, SchemeKind::Conjugate, SchemeKind::Counterexample] {
            let scheme = Scheme::new(kind, 4, 3).unwrap();
            let r = measure_reusability(&scheme, 5, 10, &mut rng).unwrap();
            assert_eq!(r.rate, 1.0, "{kind:?}");
        }
    }

    #[test]
    fn counterexample_rejects_wrong_tag() {
        let scheme = Scheme::new(SchemeKind::Counterexample, 4, 2).unwrap();
        let mut rng = RngStream::from_seed(5);
        let mut world = World::purified(4).unwrap();
        let kp = scheme.key_gen(&world, &mut rng).unwrap();
        let note = scheme.mint(&kp, &mut world, &mut rng).unwrap();
        // Flip the tag qubit.
        world.apply(&gates::x(), &["H"]).unwrap();
        for _ in 0..5 {
            let v = scheme.verify(&kp, &note, &mut world, &mut rng).unwrap();
            assert!(!v.accept);
        }
        assert!(scheme.key_gen(&World::sampled(sample_oracle(4, &mut rng).unwrap()), &mut rng).is_err());
    }
}
