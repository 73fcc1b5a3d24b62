//! Purified and compressed register views of a random oracle with 1-bit
//! outputs, and the query unitaries acting on them.
//!
//! F holds 2^l qubits. In the purified view qubit i is the table bit f(i).
//! In the compressed view qubit i is set iff position i carries Fourier value
//! 1̂ in D_F; this indicator is the canonical sorted encoding of D_F.
//!
//! D_R and D_A are slot arrays. Each slot is (present, position, bit) with
//! slot 0 most significant; present slots always form a prefix.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::sparse::{Field, SparseState};
use super::{ClassicalDB, TruthTable, MAX_INPUT_BITS};
use crate::error::{Error, Result};
use crate::hilbert::{DensityOp, Matrix, RegisterLayout, C64};

pub const F: &str = "F";
pub const D_R: &str = "D_R";
pub const D_A: &str = "D_A";

const FRESH_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleMode {
    Sampled,
    Purified,
    Compressed,
}

/// Database consulted by a simulated query: D_A gives U_D, D_R gives U_D'.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DbRegister {
    Adversary,
    Oracle,
}

impl DbRegister {
    fn name(self) -> &'static str {
        match self {
            DbRegister::Adversary => D_A,
            DbRegister::Oracle => D_R,
        }
    }
}

/// Deliberate defects for mutation testing.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Fault {
    #[default]
    None,
    /// Compressed classical queries leave x in D_F.
    SkipFourierDeletion,
}

/// Slot-array codec for a database register inside a basis index.
#[derive(Clone, Debug)]
pub struct DbCodec {
    field: Field,
    slots: usize,
    l: u32,
}

impl DbCodec {
    fn slot(&self, s: usize) -> Field {
        let w = self.l + 2;
        Field { shift: self.field.shift + (self.slots - 1 - s) as u32 * w, width: w }
    }

    fn decode(&self, v: u64) -> Option<(u64, bool)> {
        if v >> (self.l + 1) & 1 == 0 {
            None
        } else {
            Some(((v >> 1) & ((1 << self.l) - 1), v & 1 == 1))
        }
    }

    pub fn capacity(&self) -> usize {
        self.slots
    }

    pub fn entries(&self, idx: u64) -> Vec<(u64, bool)> {
        (0..self.slots).map_while(|s| self.decode(self.slot(s).get(idx))).collect()
    }

    pub fn lookup(&self, idx: u64, x: u64) -> Option<bool> {
        (0..self.slots)
            .map_while(|s| self.decode(self.slot(s).get(idx)))
            .find(|&(p, _)| p == x)
            .map(|(_, z)| z)
    }

    pub fn append(&self, idx: u64, x: u64, z: bool) -> Result<u64> {
        let s = (0..self.slots)
            .find(|&s| self.decode(self.slot(s).get(idx)).is_none())
            .ok_or_else(|| Error::InvalidDatabase(format!("database capacity {} exhausted", self.slots)))?;
        let v = (1 << (self.l + 1)) | (x << 1) | z as u64;
        Ok(self.slot(s).set(idx, v))
    }

    /// Writes a database into an all-absent field.
    pub fn encode(&self, idx: u64, db: &[(u64, bool)]) -> Result<u64> {
        db.iter().try_fold(idx, |i, &(x, z)| self.append(i, x, z))
    }

    /// Consistent with a prefix of present slots.
    pub fn is_well_formed(&self, idx: u64) -> bool {
        let n = self.entries(idx).len();
        if (n..self.slots).any(|s| self.slot(s).get(idx) != 0) {
            return false;
        }
        let e = self.entries(idx);
        e.iter().all(|&(x, z)| self.lookup(idx, x) == Some(z))
    }
}

/// Register layout for an oracle world: user registers, F, D_R, optional D_A.
pub fn world_layout(user: &RegisterLayout, l: usize, dr_slots: usize, da_slots: usize) -> Result<RegisterLayout> {
    if l > MAX_INPUT_BITS {
        return Err(Error::InvalidArgument(format!("oracle input length {l} exceeds {MAX_INPUT_BITS}")));
    }
    let mut layout = user.clone();
    layout.push(F, 1 << l)?;
    if dr_slots > 0 {
        layout.push(D_R, dr_slots * (l + 2))?;
    }
    if da_slots > 0 {
        layout.push(D_A, da_slots * (l + 2))?;
    }
    if layout.total_qubits() > 64 {
        return Err(Error::QubitBudget { requested: layout.total_qubits(), cap: 64 });
    }
    Ok(layout)
}

#[derive(Clone, Debug)]
enum Inner {
    Table(TruthTable),
    Quantum(SparseState),
}

#[derive(Clone, Debug)]
pub struct OracleWorld {
    mode: OracleMode,
    l: usize,
    dr_slots: usize,
    da_slots: usize,
    fault: Fault,
    inner: Inner,
}

impl OracleWorld {
    pub fn sampled(table: TruthTable) -> Self {
        Self {
            mode: OracleMode::Sampled,
            l: table.input_bits(),
            dr_slots: 0,
            da_slots: 0,
            fault: Fault::None,
            inner: Inner::Table(table),
        }
    }

    /// Purified world with F = |0̂⟩^{⊗2^l}, empty databases, user registers at 0.
    pub fn purified(l: usize, user: &RegisterLayout, dr_slots: usize, da_slots: usize) -> Result<Self> {
        let layout = world_layout(user, l, dr_slots, da_slots)?;
        let base = SparseState::basis(layout.clone(), 0)?;
        let f = base.field(F)?;
        let amp = C64::new((0.5f64).powf((1usize << l) as f64 / 2.0), 0.0);
        let state = SparseState::from_amplitudes(layout, (0..1u64 << (1 << l)).map(|t| (f.set(0, t), amp)))?;
        Ok(Self::with_state(OracleMode::Purified, l, dr_slots, da_slots, state))
    }

    /// Compressed world with empty D_F and D_R.
    pub fn compressed(l: usize, user: &RegisterLayout, dr_slots: usize, da_slots: usize) -> Result<Self> {
        let layout = world_layout(user, l, dr_slots, da_slots)?;
        let state = SparseState::basis(layout, 0)?;
        Ok(Self::with_state(OracleMode::Compressed, l, dr_slots, da_slots, state))
    }

    /// Wraps an explicit state laid out by [`world_layout`].
    pub fn from_state(mode: OracleMode, l: usize, dr_slots: usize, da_slots: usize, state: SparseState) -> Result<Self> {
        if mode == OracleMode::Sampled {
            return Err(Error::WrongMode("sampled worlds hold a truth table".into()));
        }
        let lay = state.layout();
        let ok = lay.register(F).map(|r| r.qubits == 1 << l).unwrap_or(false)
            && (dr_slots == 0 || lay.register(D_R).map(|r| r.qubits == dr_slots * (l + 2)).unwrap_or(false))
            && (da_slots == 0 || lay.register(D_A).map(|r| r.qubits == da_slots * (l + 2)).unwrap_or(false));
        if !ok {
            return Err(Error::InvalidArgument("state layout does not match oracle registers".into()));
        }
        Ok(Self::with_state(mode, l, dr_slots, da_slots, state))
    }

    fn with_state(mode: OracleMode, l: usize, dr_slots: usize, da_slots: usize, state: SparseState) -> Self {
        Self { mode, l, dr_slots, da_slots, fault: Fault::None, inner: Inner::Quantum(state) }
    }

    pub fn with_fault(mut self, fault: Fault) -> Self {
        self.fault = fault;
        self
    }

    pub fn mode(&self) -> OracleMode {
        self.mode
    }

    pub fn input_bits(&self) -> usize {
        self.l
    }

    pub fn table(&self) -> Result<&TruthTable> {
        match &self.inner {
            Inner::Table(t) => Ok(t),
            Inner::Quantum(_) => Err(Error::WrongMode("no truth table outside sampled mode".into())),
        }
    }

    pub fn state(&self) -> Result<&SparseState> {
        match &self.inner {
            Inner::Quantum(s) => Ok(s),
            Inner::Table(_) => Err(Error::WrongMode("sampled mode has no register state".into())),
        }
    }

    fn state_mut(&mut self) -> Result<&mut SparseState> {
        match &mut self.inner {
            Inner::Quantum(s) => Ok(s),
            Inner::Table(_) => Err(Error::WrongMode("sampled mode has no register state".into())),
        }
    }

    pub fn codec(&self, db: DbRegister) -> Result<DbCodec> {
        let slots = match db {
            DbRegister::Adversary => self.da_slots,
            DbRegister::Oracle => self.dr_slots,
        };
        if slots == 0 {
            return Err(Error::UnknownRegister(db.name().into()));
        }
        Ok(DbCodec { field: self.state()?.field(db.name())?, slots, l: self.l as u32 })
    }

    fn user_check(&self, regs: &[&str]) -> Result<()> {
        if let Some(r) = regs.iter().find(|r| [F, D_R, D_A].contains(r)) {
            return Err(Error::InvalidArgument(format!("`{r}` is an oracle register")));
        }
        Ok(())
    }

    /// Applies a unitary to user registers.
    pub fn apply_user(&mut self, u: &Matrix, regs: &[&str]) -> Result<()> {
        self.user_check(regs)?;
        let s = self.state()?.apply(u, regs)?;
        *self.state_mut()? = s;
        Ok(())
    }

    /// Reduced state on the listed (user) registers.
    pub fn reduced(&self, keep: &[&str]) -> Result<DensityOp> {
        self.state()?.reduced(keep)
    }

    fn fields(&self, q: &str, a: &str) -> Result<(Field, Field, Field)> {
        self.user_check(&[q, a])?;
        let s = self.state()?;
        let fq = s.field(q)?;
        let fa = s.field(a)?;
        if fq.width as usize != self.l || fa.width != 1 {
            return Err(Error::InvalidArgument(format!(
                "query register needs {} qubits and answer 1, got {} and {}",
                self.l, fq.width, fa.width
            )));
        }
        Ok((fq, fa, s.field(F)?))
    }

    fn require_fresh(&self, a: &Field) -> Result<()> {
        if self.state()?.weight(|i| a.get(i) != 0) > FRESH_TOL {
            return Err(Error::NotFresh("answer register".into()));
        }
        Ok(())
    }

    /// U_Q: |x⟩|y⟩|f⟩ ↦ |x⟩|y ⊕ f(x)⟩|f⟩. In the compressed view this is
    /// conjugated by Decomp.
    pub fn quantum_query(&mut self, q: &str, a: &str) -> Result<()> {
        let (fq, fa, ff) = self.fields(q, a)?;
        let flip = |s: &SparseState| {
            s.map_basis(|i| {
                let x = fq.get(i) as u32;
                let j = if ff.bit(i, x) { fa.flip_bit(i, 0) } else { i };
                Ok(vec![(j, C64::new(1.0, 0.0))])
            })
        };
        match self.mode {
            OracleMode::Purified => {
                let s = flip(self.state()?)?;
                *self.state_mut()? = s;
            }
            OracleMode::Compressed => {
                let d = self.decomp_state()?;
                let s = flip(&d)?;
                *self.state_mut()? = self.decomp_map(&s)?;
            }
            OracleMode::Sampled => return Err(Error::WrongMode("register query on a sampled oracle".into())),
        }
        Ok(())
    }

    /// U_C (record = false) or U_R (record = true).
    pub fn classical_query(&mut self, q: &str, a: &str, record: bool) -> Result<()> {
        let (fq, fa, ff) = self.fields(q, a)?;
        self.require_fresh(&fa)?;
        let dr = self.codec(DbRegister::Oracle)?;
        let da = if record { Some(self.codec(DbRegister::Adversary)?) } else { None };
        let append = move |i: u64, x: u64, z: bool| -> Result<u64> {
            let i = dr.append(i, x, z)?;
            match &da {
                Some(c) => c.append(i, x, z),
                None => Ok(i),
            }
        };
        let one = C64::new(1.0, 0.0);
        let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let s = match self.mode {
            OracleMode::Purified => self.state()?.map_basis(|i| {
                let x = fq.get(i);
                let z = ff.bit(i, x as u32);
                Ok(vec![(append(fa.set(i, z as u64), x, z)?, one)])
            })?,
            OracleMode::Compressed => {
                let dr = self.codec(DbRegister::Oracle)?;
                let skip = self.fault == Fault::SkipFourierDeletion;
                self.state()?.map_basis(|i| {
                    check_disjoint(&dr, &ff, i)?;
                    let x = fq.get(i);
                    if let Some(z) = dr.lookup(i, x) {
                        return Ok(vec![(append(fa.set(i, z as u64), x, z)?, one)]);
                    }
                    let in_df = ff.bit(i, x as u32);
                    let base = if in_df && !skip { ff.flip_bit(i, x as u32) } else { i };
                    let mut out = Vec::with_capacity(2);
                    for z in [false, true] {
                        let sign = if in_df && z { -h } else { h };
                        out.push((append(fa.set(base, z as u64), x, z)?, sign));
                    }
                    Ok(out)
                })?
            }
            OracleMode::Sampled => return Err(Error::WrongMode("register query on a sampled oracle".into())),
        };
        *self.state_mut()? = s;
        Ok(())
    }

    /// Comp · U_C · Decomp (or U_R) evaluated literally, for checking the
    /// compressed formulas.
    pub fn classical_query_via_decomp(&mut self, q: &str, a: &str, record: bool) -> Result<()> {
        if self.mode != OracleMode::Compressed {
            return Err(Error::WrongMode("expected compressed mode".into()));
        }
        self.decomp()?;
        self.classical_query(q, a, record)?;
        self.comp()
    }

    /// U_D (D_A) or U_D' (D_R): answer from the database, or a uniform
    /// superposition when x is absent; the pair is appended either way.
    pub fn db_query(&mut self, q: &str, a: &str, db: DbRegister) -> Result<()> {
        self.user_check(&[q, a])?;
        let s = self.state()?;
        let fq = s.field(q)?;
        let fa = s.field(a)?;
        self.require_fresh(&fa)?;
        let c = self.codec(db)?;
        let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let s = s.map_basis(|i| {
            let x = fq.get(i);
            match c.lookup(i, x) {
                Some(z) => Ok(vec![(c.append(fa.set(i, z as u64), x, z)?, C64::new(1.0, 0.0))]),
                None => Ok(vec![
                    (c.append(i, x, false)?, h),
                    (c.append(fa.set(i, 1), x, true)?, h),
                ]),
            }
        })?;
        *self.state_mut()? = s;
        Ok(())
    }

    /// Decomp extended to all inputs: position i gets X^z when D_R holds
    /// (i, z) (first occurrence) and H otherwise. The extension is a unitary
    /// involution, so Comp = Decomp† = Decomp.
    fn decomp_map(&self, s: &SparseState) -> Result<SparseState> {
        let ff = s.field(F)?;
        let dr = if self.dr_slots > 0 { Some(self.codec(DbRegister::Oracle)?) } else { None };
        let n = 1u32 << self.l;
        let h = std::f64::consts::FRAC_1_SQRT_2;
        s.map_basis(|i| {
            let mut terms = vec![(i, C64::new(1.0, 0.0))];
            for pos in 0..n {
                match dr.as_ref().and_then(|c| c.lookup(i, pos as u64)) {
                    Some(true) => terms.iter_mut().for_each(|t| t.0 = ff.flip_bit(t.0, pos)),
                    Some(false) => {}
                    None => {
                        terms = terms
                            .into_iter()
                            .flat_map(|(j, a)| {
                                let one = ff.bit(j, pos);
                                let j0 = if one { ff.flip_bit(j, pos) } else { j };
                                let j1 = ff.set_bit(j0, pos);
                                let s1 = if one { -h } else { h };
                                [(j0, a * h), (j1, a * s1)]
                            })
                            .collect();
                    }
                }
            }
            Ok(terms)
        })
    }

    fn decomp_state(&self) -> Result<SparseState> {
        self.decomp_map(self.state()?)
    }

    pub fn decomp(&mut self) -> Result<()> {
        if self.mode != OracleMode::Compressed {
            return Err(Error::WrongMode("decomp expects compressed mode".into()));
        }
        self.check_valid()?;
        let s = self.decomp_state()?;
        *self.state_mut()? = s;
        self.mode = OracleMode::Purified;
        Ok(())
    }

    pub fn comp(&mut self) -> Result<()> {
        if self.mode != OracleMode::Purified {
            return Err(Error::WrongMode("comp expects purified mode".into()));
        }
        let s = self.decomp_state()?;
        *self.state_mut()? = s;
        self.mode = OracleMode::Compressed;
        Ok(())
    }

    /// Checks D_F ∩ D_R = ∅ and slot well-formedness on every branch.
    pub fn check_valid(&self) -> Result<()> {
        if self.mode != OracleMode::Compressed || self.dr_slots == 0 {
            return Ok(());
        }
        let s = self.state()?;
        let ff = s.field(F)?;
        let dr = self.codec(DbRegister::Oracle)?;
        for &i in s.amplitudes().keys() {
            check_disjoint(&dr, &ff, i)?;
        }
        Ok(())
    }

    /// Tr(O ρ_F) with O = Σ |D_F| |D_F⟩⟨D_F|.
    pub fn pair_count(&self) -> Result<f64> {
        if self.mode != OracleMode::Compressed {
            return Err(Error::WrongMode("pair count needs compressed mode".into()));
        }
        let s = self.state()?;
        let ff = s.field(F)?;
        Ok(s.expectation(|i| ff.get(i).count_ones() as f64))
    }

    /// Weight of branches whose query position lies in D_F.
    pub fn bad_weight(&self, q: &str) -> Result<f64> {
        if self.mode != OracleMode::Compressed {
            return Err(Error::WrongMode("bad-query weight needs compressed mode".into()));
        }
        let s = self.state()?;
        let ff = s.field(F)?;
        let fq = s.field(q)?;
        Ok(s.weight(|i| ff.bit(i, fq.get(i) as u32)))
    }

    /// Distribution over database contents (as entry lists).
    pub fn database_distribution(&self, db: DbRegister) -> Result<BTreeMap<Vec<(u64, bool)>, f64>> {
        let c = self.codec(db)?;
        let mut out = BTreeMap::new();
        for (&i, a) in self.state()?.amplitudes() {
            *out.entry(c.entries(i)).or_insert(0.0) += a.norm_sqr();
        }
        Ok(out)
    }

    /// Basis index for a compressed configuration: user bits, D_F, D_R, D_A.
    pub fn compressed_index(
        &self,
        user: &[(&str, u64)],
        d_f: &[u64],
        d_r: &ClassicalDB,
        d_a: &ClassicalDB,
    ) -> Result<u64> {
        let s = self.state()?;
        let mut i = 0u64;
        for (r, v) in user {
            i = s.field(r)?.set(i, *v);
        }
        let ff = s.field(F)?;
        for &x in d_f {
            i = ff.set_bit(i, x as u32);
        }
        if !d_r.is_empty() {
            i = self.codec(DbRegister::Oracle)?.encode(i, d_r.entries())?;
        }
        if !d_a.is_empty() {
            i = self.codec(DbRegister::Adversary)?.encode(i, d_a.entries())?;
        }
        Ok(i)
    }

    /// Replaces the state, keeping mode and shapes.
    pub fn set_state(&mut self, state: SparseState) -> Result<()> {
        if state.layout() != self.state()?.layout() {
            return Err(Error::InvalidArgument("layout differs from the world layout".into()));
        }
        *self.state_mut()? = state;
        Ok(())
    }
}

fn check_disjoint(dr: &DbCodec, ff: &Field, i: u64) -> Result<()> {
    for (x, _) in dr.entries(i) {
        if ff.bit(i, x as u32) {
            return Err(Error::InvalidDatabase(format!("position {x} in both D_F and D_R")));
        }
    }
    Ok(())
}

/// F = |0̂⟩^{⊗2^l} as a dense state on register F.
pub fn purified_init(l: usize) -> Result<crate::hilbert::QState> {
    let layout = RegisterLayout::new(&[(F, 1 << l)])?;
    crate::hilbert::check_budget(layout.total_qubits())?;
    let dim = layout.dim();
    let v = crate::hilbert::Vector::from_element(dim, C64::new(1.0 / (dim as f64).sqrt(), 0.0));
    crate::hilbert::QState::new(layout, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::gates;

    fn user(l: usize) -> RegisterLayout {
        RegisterLayout::new(&[("Q", l), ("A", 1), ("B", 1)]).unwrap()
    }

    #[test]
    fn purified_init_is_plus() {
        let s = purified_init(1).unwrap();
        assert!(s.amplitudes().iter().all(|a| (a.re - 0.5).abs() < 1e-12));
        let w = OracleWorld::purified(1, &user(1), 2, 0).unwrap();
        assert_eq!(w.state().unwrap().support(), 4);
    }

    #[test]
    fn classical_query_records_and_repeats() {
        let mut w = OracleWorld::purified(1, &user(1), 2, 0).unwrap();
        w.classical_query("Q", "A", false).unwrap();
        w.classical_query("Q", "B", false).unwrap();
        let dist = w.database_distribution(DbRegister::Oracle).unwrap();
        assert_eq!(dist.len(), 2);
        for (db, p) in dist {
            assert_eq!(db.len(), 2);
            assert_eq!(db[0], db[1]);
            assert!((p - 0.5).abs() < 1e-12);
        }
        // Both answers agree: reduced state on A,B is diag(1/2, 0, 0, 1/2).
        let r = w.reduced(&["A", "B"]).unwrap();
        assert!((r.matrix()[(0, 0)].re - 0.5).abs() < 1e-12);
        assert!((r.matrix()[(3, 3)].re - 0.5).abs() < 1e-12);
        assert!(w.classical_query("Q", "A", false).is_err());
    }

    #[test]
    fn phase_kickback_marks_fourier_position() {
        let mut w = OracleWorld::compressed(1, &user(1), 1, 0).unwrap();
        w.apply_user(&gates::x(), &["Q"]).unwrap();
        w.apply_user(&(gates::h() * gates::x()), &["A"]).unwrap();
        w.quantum_query("Q", "A").unwrap();
        let s = w.state().unwrap();
        let ff = s.field(F).unwrap();
        let d_f = s.distribution(&[F]).unwrap();
        assert!((d_f[0b01] - 1.0).abs() < 1e-12, "{d_f:?}");
        assert_eq!(ff.width, 2);
        assert!((w.pair_count().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn decomp_output_table() {
        // l = 2, D_R = {(0,1)}, D_F = {2}: F = |1⟩|0̂⟩|1̂⟩|0̂⟩.
        let mut w = OracleWorld::compressed(2, &RegisterLayout::empty(), 1, 0).unwrap();
        let dr = ClassicalDB::from_entries(vec![(0, true)]).unwrap();
        let i = w.compressed_index(&[], &[2], &dr, &ClassicalDB::new()).unwrap();
        let s = SparseState::basis(w.state().unwrap().layout().clone(), i).unwrap();
        w.set_state(s).unwrap();
        w.decomp().unwrap();
        let s = w.state().unwrap();
        let ff = s.field(F).unwrap();
        assert_eq!(s.support(), 8);
        for (&j, a) in s.amplitudes() {
            assert!(ff.bit(j, 0));
            let sign = if ff.bit(j, 2) { -1.0 } else { 1.0 };
            assert!((a.re - sign / 8f64.sqrt()).abs() < 1e-12);
        }
        w.comp().unwrap();
        assert!((w.state().unwrap().amplitudes()[&i].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn db_query_cases() {
        let u = RegisterLayout::new(&[("Q", 2), ("A", 1), ("B", 1)]).unwrap();
        let mut w = OracleWorld::compressed(2, &u, 0, 2).unwrap();
        let da = ClassicalDB::from_entries(vec![(3, true)]).unwrap();
        let i = w.compressed_index(&[("Q", 3)], &[], &ClassicalDB::new(), &da).unwrap();
        w.set_state(SparseState::basis(w.state().unwrap().layout().clone(), i).unwrap()).unwrap();
        w.db_query("Q", "A", DbRegister::Adversary).unwrap();
        assert!((w.reduced(&["A"]).unwrap().matrix()[(1, 1)].re - 1.0).abs() < 1e-12);

        let mut w = OracleWorld::compressed(2, &u, 0, 2).unwrap();
        w.db_query("Q", "A", DbRegister::Adversary).unwrap();
        assert_eq!(w.state().unwrap().support(), 2);
        w.db_query("Q", "B", DbRegister::Adversary).unwrap();
        let r = w.reduced(&["A", "B"]).unwrap();
        assert!((r.matrix()[(0, 0)].re - 0.5).abs() < 1e-12);
        assert!((r.matrix()[(3, 3)].re - 0.5).abs() < 1e-12);
    }
}
