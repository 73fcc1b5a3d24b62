//! Property suites over the oracle representations, shared by the test
//! suite and the `oracle-check` command.

use rand::Rng;
use serde::Serialize;

use super::program::{random_program, sampled_distribution, total_variation, QueryProgram, QUERY_REG};
use super::registers::{DbRegister, Fault, OracleMode, OracleWorld};
use super::sparse::SparseState;
use super::ClassicalDB;
use crate::error::Result;
use crate::hilbert::{trace_distance, RegisterLayout, C64};
use crate::rng::RngStream;

/// Every consistent D_R sequence of length ≤ `max_len` paired with every
/// D_F disjoint from it.
pub fn valid_configs(l: usize, max_len: usize) -> Vec<(Vec<(u64, bool)>, Vec<u64>)> {
    let n = 1u64 << l;
    let mut seqs: Vec<Vec<(u64, bool)>> = vec![vec![]];
    let mut frontier = seqs.clone();
    for _ in 0..max_len {
        let mut next = Vec::new();
        for s in &frontier {
            for x in 0..n {
                for z in [false, true] {
                    if s.iter().all(|&(p, b)| p != x || b == z) {
                        let mut t = s.clone();
                        t.push((x, z));
                        next.push(t);
                    }
                }
            }
        }
        seqs.extend(next.iter().cloned());
        frontier = next;
    }
    let mut out = Vec::new();
    for s in seqs {
        let used: u64 = s.iter().fold(0, |m, &(x, _)| m | 1 << x);
        for df in 0..1u64 << n {
            if df & used == 0 {
                out.push((s.clone(), (0..n).filter(|x| df >> x & 1 == 1).collect()));
            }
        }
    }
    out
}

fn basis_world(world: &OracleWorld, idx: u64) -> Result<OracleWorld> {
    let mut w = world.clone();
    w.set_state(SparseState::basis(world.state()?.layout().clone(), idx)?)?;
    Ok(w)
}

fn state_distance(a: &SparseState, b: &SparseState) -> f64 {
    let mut keys: Vec<u64> = a.amplitudes().keys().copied().collect();
    keys.extend(b.amplitudes().keys());
    keys.sort_unstable();
    keys.dedup();
    let zero = C64::new(0.0, 0.0);
    keys.iter()
        .map(|k| {
            let x = a.amplitudes().get(k).copied().unwrap_or(zero);
            let y = b.amplitudes().get(k).copied().unwrap_or(zero);
            (x - y).norm_sqr()
        })
        .sum::<f64>()
        .sqrt()
}

/// max ‖Comp·Decomp|i⟩ − |i⟩‖ over valid compressed basis inputs.
pub fn comp_decomp_deviation(l: usize, slots: usize) -> Result<f64> {
    let world = OracleWorld::compressed(l, &RegisterLayout::empty(), slots, 0)?;
    let mut worst = 0.0f64;
    for (dr, df) in valid_configs(l, slots) {
        let idx = world.compressed_index(&[], &df, &ClassicalDB::from_entries(dr)?, &ClassicalDB::new())?;
        let mut w = basis_world(&world, idx)?;
        let before = w.state()?.clone();
        w.decomp()?;
        w.comp()?;
        worst = worst.max(state_distance(&before, w.state()?));
    }
    Ok(worst)
}

/// max distance between the three-case compressed query and the literal
/// Comp·U·Decomp over all valid basis inputs with a fresh answer.
pub fn formula_deviation(l: usize, record: bool) -> Result<f64> {
    let user = RegisterLayout::new(&[("Q", l), ("A", 1)])?;
    let slots = 2;
    let world = OracleWorld::compressed(l, &user, slots, if record { slots } else { 0 })?;
    let mut worst = 0.0f64;
    for (dr, df) in valid_configs(l, slots - 1) {
        let db = ClassicalDB::from_entries(dr)?;
        let da = if record { db.clone() } else { ClassicalDB::new() };
        for x in 0..1u64 << l {
            let idx = world.compressed_index(&[("Q", x)], &df, &db, &da)?;
            let mut a = basis_world(&world, idx)?;
            let mut b = a.clone();
            a.classical_query("Q", "A", record)?;
            b.classical_query_via_decomp("Q", "A", record)?;
            worst = worst.max(state_distance(a.state()?, b.state()?));
        }
    }
    Ok(worst)
}

/// Whether Û_C and Û_R keep every valid basis input inside the valid subspace.
pub fn disjointness_preserved(l: usize) -> Result<bool> {
    let user = RegisterLayout::new(&[("Q", l), ("A", 1)])?;
    let world = OracleWorld::compressed(l, &user, 2, 2)?;
    for (dr, df) in valid_configs(l, 1) {
        let db = ClassicalDB::from_entries(dr)?;
        for x in 0..1u64 << l {
            for record in [false, true] {
                let idx = world.compressed_index(&[("Q", x)], &df, &db, &db)?;
                let mut w = basis_world(&world, idx)?;
                w.classical_query("Q", "A", record)?;
                if w.check_valid().is_err() {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

#[derive(Clone, Debug, Serialize)]
pub struct EquivalenceReport {
    pub l: usize,
    pub queries: usize,
    pub trace_distance: f64,
    /// Largest single-step increase of the pair count under classical queries.
    pub pair_count_increase: f64,
}

/// Purified vs compressed execution of one random program.
pub fn equivalence(l: usize, queries: usize, rng: &mut RngStream) -> Result<(QueryProgram, EquivalenceReport)> {
    let program = random_program(l, queries, rng)?;
    let a = program.user_state(OracleMode::Purified)?;
    let b = program.user_state(OracleMode::Compressed)?;
    let td = trace_distance(&a, &b)?;
    let increase = pair_count_increase(&program)?;
    Ok((program, EquivalenceReport { l, queries, trace_distance: td, pair_count_increase: increase }))
}

/// Runs `program` step by step in compressed mode, returning the largest
/// pair-count increase across any classical query.
pub fn pair_count_increase(program: &QueryProgram) -> Result<f64> {
    use super::program::{QueryKind, Step};
    let user = program.user_layout()?;
    let (dr, da) = program.db_slots();
    let mut w = OracleWorld::compressed(program.input_bits(), &user, dr, da)?;
    let mut worst = f64::NEG_INFINITY;
    for s in program.steps() {
        match s {
            Step::Unitary { targets, matrix } => {
                let t: Vec<&str> = targets.iter().map(String::as_str).collect();
                w.apply_user(matrix, &t)?;
            }
            Step::Query { kind, answer } => {
                let before = w.pair_count()?;
                match kind {
                    QueryKind::Quantum => {
                        w.quantum_query(QUERY_REG, answer)?;
                        continue;
                    }
                    QueryKind::Classical => w.classical_query(QUERY_REG, answer, false)?,
                    QueryKind::Recorded => w.classical_query(QUERY_REG, answer, true)?,
                }
                worst = worst.max(w.pair_count()? - before);
            }
        }
    }
    Ok(if worst.is_finite() { worst } else { 0.0 })
}

#[derive(Clone, Debug, Serialize)]
pub struct MonteCarloReport {
    pub l: usize,
    pub queries: usize,
    pub samples: usize,
    pub total_variation: f64,
}

/// Exact purified distribution of the user registers against sampled-mode
/// Monte Carlo.
pub fn sampled_agreement(l: usize, queries: usize, samples: usize, rng: &mut RngStream) -> Result<MonteCarloReport> {
    let program = random_program(l, queries, rng)?;
    let (w, _) = program.run_registers(OracleMode::Purified, Fault::None)?;
    let names = program.user_names();
    let keep: Vec<&str> = names.iter().map(String::as_str).collect();
    let exact = w.state()?.distribution(&keep)?;
    let mc = sampled_distribution(&program, samples, rng)?;
    Ok(MonteCarloReport { l, queries, samples, total_variation: total_variation(&exact, &mc) })
}

/// A random superposition of `terms` valid compressed basis states.
fn random_compressed(
    world: &OracleWorld,
    user: &[(&str, usize)],
    dr_len: usize,
    da_len: usize,
    terms: usize,
    rng: &mut RngStream,
) -> Result<SparseState> {
    let l = world.input_bits();
    let n = 1u64 << l;
    let mut entries = Vec::new();
    for _ in 0..terms {
        let random_db = |len: usize, rng: &mut RngStream| -> ClassicalDB {
            let mut db = ClassicalDB::new();
            for _ in 0..rng.gen_range(0..=len) {
                let x = rng.gen_range(0..n);
                let z = db.lookup(x).unwrap_or_else(|| rng.gen());
                db.push(x, z).expect("consistent by construction");
            }
            db
        };
        let dr = random_db(dr_len, rng);
        let da = random_db(da_len, rng);
        let used = dr.positions();
        let df: Vec<u64> = (0..n).filter(|x| !used.contains(x) && rng.gen::<bool>()).collect();
        let vals: Vec<(&str, u64)> = user.iter().map(|&(r, w)| (r, rng.gen_range(0..1u64 << w))).collect();
        let idx = world.compressed_index(&vals, &df, &dr, &da)?;
        let amp = C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
        entries.push((idx, amp));
    }
    SparseState::from_amplitudes(world.state()?.layout().clone(), entries)
}

#[derive(Clone, Debug, Serialize)]
pub struct QueryErasureSample {
    pub trace_distance: f64,
    pub bound: f64,
    pub alpha: f64,
    pub decrement: f64,
}

impl QueryErasureSample {
    pub fn holds(&self, tol: f64) -> bool {
        self.trace_distance <= self.bound + tol && (self.alpha - self.decrement).abs() <= tol
    }
}

/// One random pre-query state: TD(Û_C ρ Û_C†, U_D' ρ U_D'†) against 6√α,
/// with α the weight of queries inside D_F and the pair-count decrement.
pub fn query_erasure(l: usize, fault: Fault, rng: &mut RngStream) -> Result<QueryErasureSample> {
    let user = RegisterLayout::new(&[("Q", l), ("A", 1), ("H", 1)])?;
    let world = OracleWorld::compressed(l, &user, 3, 0)?.with_fault(fault);
    let phi = random_compressed(&world, &[("Q", l), ("H", 1)], 2, 0, 12, rng)?;
    let mut base = world.clone();
    base.set_state(phi)?;
    let alpha = base.bad_weight("Q")?;
    let before = base.pair_count()?;
    let mut real = base.clone();
    real.classical_query("Q", "A", false)?;
    let mut sim = base.clone();
    sim.db_query("Q", "A", DbRegister::Oracle)?;
    let td = real.state()?.trace_distance(sim.state()?);
    Ok(QueryErasureSample { trace_distance: td, bound: 6.0 * alpha.sqrt(), alpha, decrement: before - real.pair_count()? })
}

#[derive(Clone, Debug, Serialize)]
pub struct RecordedQuerySample {
    pub weight_without: f64,
    pub weight_with: f64,
}

/// Bad-query weight of Û_C on Q2, with and without an interposed Û_R on Q1.
pub fn recorded_query(l: usize, rng: &mut RngStream) -> Result<RecordedQuerySample> {
    let user = RegisterLayout::new(&[("Q1", l), ("A1", 1), ("Q2", l), ("A2", 1), ("H", 1)])?;
    let world = OracleWorld::compressed(l, &user, 4, 3)?;
    let phi = random_compressed(&world, &[("Q1", l), ("Q2", l), ("H", 1)], 2, 2, 12, rng)?;
    let mut base = world.clone();
    base.set_state(phi)?;
    let without = base.bad_weight("Q2")?;
    let mut with = base.clone();
    with.classical_query("Q1", "A1", true)?;
    let weight_with = with.bad_weight("Q2")?;
    // The weight equals the pair-count decrement of the subsequent query.
    let mut after = with.clone();
    let pc = after.pair_count()?;
    after.classical_query("Q2", "A2", false)?;
    debug_assert!((pc - after.pair_count()? - weight_with).abs() < 1e-9);
    Ok(RecordedQuerySample { weight_without: without, weight_with })
}
