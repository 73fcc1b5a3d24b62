//! Random oracles with 1-bit outputs: sampled tables, the purified register
//! view, the compressed database view, and the lazily purified world used by
//! money schemes.

pub mod checks;
pub mod program;
pub mod registers;
pub mod sparse;
pub mod world;

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;

pub use program::{random_program, sampled_distribution, total_variation, trace_jsonl, QueryKind, QueryProgram, Step, TraceEntry};
pub use registers::{purified_init, world_layout, DbCodec, DbRegister, Fault, OracleMode, OracleWorld};
pub use sparse::SparseState;
pub use world::{table_query, Origin, QueryRecord, World, WorldMode};

/// Largest oracle input length handled anywhere.
pub const MAX_INPUT_BITS: usize = 6;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthTable {
    l: usize,
    bits: Vec<bool>,
}

impl TruthTable {
    pub fn new(l: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != 1 << l {
            return Err(Error::DimensionMismatch { expected: 1 << l, got: bits.len() });
        }
        Ok(Self { l, bits })
    }

    pub fn input_bits(&self) -> usize {
        self.l
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, x: u64) -> Result<bool> {
        self.bits
            .get(x as usize)
            .copied()
            .ok_or_else(|| Error::InvalidArgument(format!("position {x} outside 2^{}", self.l)))
    }
}

pub fn sample_oracle(l: usize, rng: &mut RngStream) -> Result<TruthTable> {
    if l > MAX_INPUT_BITS {
        return Err(Error::InvalidArgument(format!("oracle input length {l} exceeds {MAX_INPUT_BITS}")));
    }
    let bits = (0..1usize << l).map(|_| rng.gen::<bool>()).collect();
    TruthTable::new(l, bits)
}

/// Ordered, consistent list of query-answer pairs.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassicalDB {
    entries: Vec<(u64, bool)>,
}

impl ClassicalDB {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_entries(entries: Vec<(u64, bool)>) -> Result<Self> {
        let mut db = Self::new();
        for (x, z) in entries {
            db.push(x, z)?;
        }
        Ok(db)
    }

    pub fn entries(&self) -> &[(u64, bool)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn lookup(&self, x: u64) -> Option<bool> {
        self.entries.iter().find(|(p, _)| *p == x).map(|&(_, z)| z)
    }

    /// Appends, keeping duplicates; rejects a conflicting answer.
    pub fn push(&mut self, x: u64, z: bool) -> Result<()> {
        if let Some(old) = self.lookup(x) {
            if old != z {
                return Err(Error::InvalidDatabase(format!("position {x} recorded with both answers")));
            }
        }
        self.entries.push((x, z));
        Ok(())
    }

    /// Appends only positions not yet present.
    pub fn insert(&mut self, x: u64, z: bool) -> Result<bool> {
        match self.lookup(x) {
            Some(old) if old == z => Ok(false),
            Some(_) => Err(Error::InvalidDatabase(format!("position {x} recorded with both answers"))),
            None => {
                self.entries.push((x, z));
                Ok(true)
            }
        }
    }

    pub fn positions(&self) -> BTreeSet<u64> {
        self.entries.iter().map(|&(x, _)| x).collect()
    }

    pub fn pair_set(&self) -> BTreeSet<(u64, bool)> {
        self.entries.iter().copied().collect()
    }

    pub fn is_subset_of(&self, other: &ClassicalDB) -> bool {
        self.pair_set().is_subset(&other.pair_set())
    }

    pub fn is_consistent(&self) -> bool {
        self.entries.iter().all(|&(x, z)| self.lookup(x) == Some(z))
    }
}

/// Strictly increasing positions carrying Fourier value 1̂.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FourierDB {
    positions: Vec<u64>,
}

impl FourierDB {
    pub fn new(positions: Vec<u64>) -> Result<Self> {
        if positions.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidDatabase("Fourier database must be strictly increasing".into()));
        }
        Ok(Self { positions })
    }

    pub fn positions(&self) -> &[u64] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn contains(&self, x: u64) -> bool {
        self.positions.binary_search(&x).is_ok()
    }

    pub fn is_disjoint_from(&self, db: &ClassicalDB) -> bool {
        db.entries().iter().all(|&(x, _)| !self.contains(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampling_is_reproducible_and_sized() {
        let a = sample_oracle(1, &mut RngStream::from_seed(4)).unwrap();
        let b = sample_oracle(1, &mut RngStream::from_seed(4)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.bits().len(), 2);
        assert_eq!(sample_oracle(3, &mut RngStream::from_seed(4)).unwrap().bits().len(), 8);
        assert!(sample_oracle(7, &mut RngStream::from_seed(4)).is_err());
    }

    #[test]
    fn frequency_of_ones() {
        let mut rng = RngStream::from_seed(10);
        let mut ones = 0usize;
        for _ in 0..1000 {
            ones += sample_oracle(4, &mut rng).unwrap().bits().iter().filter(|&&b| b).count();
        }
        let f = ones as f64 / 16000.0;
        assert!((f - 0.5).abs() < 0.03, "{f}");
    }

    #[test]
    fn classical_db_consistency() {
        let mut db = ClassicalDB::new();
        db.push(3, true).unwrap();
        db.push(3, true).unwrap();
        assert_eq!(db.len(), 2);
        assert!(db.push(3, false).is_err());
        assert!(ClassicalDB::from_entries(vec![(1, true), (1, false)]).is_err());
        assert!(!db.insert(3, true).unwrap());
        assert!(db.insert(4, false).unwrap());
    }

    #[test]
    fn fourier_db_ordering() {
        assert!(FourierDB::new(vec![2, 1]).is_err());
        assert!(FourierDB::new(vec![1, 1]).is_err());
        let f = FourierDB::new(vec![0, 2]).unwrap();
        assert!(f.contains(2));
        assert!(!f.is_disjoint_from(&ClassicalDB::from_entries(vec![(2, true)]).unwrap()));
    }
}
