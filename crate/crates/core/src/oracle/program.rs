//! Random query programs over a query register Q (l qubits) and one answer
//! qubit per query, executable against every oracle representation.

use serde::{Deserialize, Serialize};

use super::registers::{OracleMode, OracleWorld};
use super::world::table_query;
use super::{Fault, TruthTable};
use crate::error::{Error, Result};
use crate::hilbert::{haar_unitary, gates, DensityOp, Matrix, QState, RegisterLayout};
use crate::rng::RngStream;
use rand::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QueryKind {
    Quantum,
    Classical,
    Recorded,
}

#[derive(Clone, Debug)]
pub enum Step {
    Unitary { targets: Vec<String>, matrix: Matrix },
    Query { kind: QueryKind, answer: String },
}

/// One line of a query trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub step: usize,
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub position: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub branch_weights: Option<Vec<f64>>,
}

pub fn trace_jsonl(entries: &[TraceEntry]) -> String {
    entries
        .iter()
        .map(|e| serde_json::to_string(e).expect("trace entries serialize"))
        .map(|s| s + "\n")
        .collect()
}

#[derive(Clone, Debug)]
pub struct QueryProgram {
    l: usize,
    answers: usize,
    steps: Vec<Step>,
}

pub const QUERY_REG: &str = "Q";

pub fn answer_name(i: usize) -> String {
    format!("A{i}")
}

impl QueryProgram {
    pub fn new(l: usize, answers: usize, steps: Vec<Step>) -> Result<Self> {
        let p = Self { l, answers, steps };
        let layout = p.user_layout()?;
        for s in &p.steps {
            match s {
                Step::Unitary { targets, matrix } => {
                    let t: Vec<&str> = targets.iter().map(String::as_str).collect();
                    let n = layout.qubits_of(&t)?.len();
                    if matrix.nrows() != 1 << n {
                        return Err(Error::DimensionMismatch { expected: 1 << n, got: matrix.nrows() });
                    }
                }
                Step::Query { answer, .. } => {
                    layout.register(answer)?;
                }
            }
        }
        Ok(p)
    }

    pub fn input_bits(&self) -> usize {
        self.l
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn user_layout(&self) -> Result<RegisterLayout> {
        let mut layout = RegisterLayout::new(&[(QUERY_REG, self.l)])?;
        for i in 0..self.answers {
            layout.push(&answer_name(i), 1)?;
        }
        Ok(layout)
    }

    pub fn user_names(&self) -> Vec<String> {
        std::iter::once(QUERY_REG.to_string()).chain((0..self.answers).map(answer_name)).collect()
    }

    fn count(&self, pred: impl Fn(QueryKind) -> bool) -> usize {
        self.steps.iter().filter(|s| matches!(s, Step::Query { kind, .. } if pred(*kind))).count()
    }

    /// Slots needed in D_R (classical and recorded queries) and D_A (recorded).
    pub fn db_slots(&self) -> (usize, usize) {
        (self.count(|k| k != QueryKind::Quantum), self.count(|k| k == QueryKind::Recorded))
    }

    /// Runs against a purified or compressed register world.
    pub fn run_registers(&self, mode: OracleMode, fault: Fault) -> Result<(OracleWorld, Vec<TraceEntry>)> {
        let user = self.user_layout()?;
        let (dr, da) = self.db_slots();
        let mut world = match mode {
            OracleMode::Purified => OracleWorld::purified(self.l, &user, dr, da)?,
            OracleMode::Compressed => OracleWorld::compressed(self.l, &user, dr, da)?,
            OracleMode::Sampled => return Err(Error::WrongMode("use run_sampled for a truth table".into())),
        }
        .with_fault(fault);
        let mut trace = Vec::new();
        for (i, s) in self.steps.iter().enumerate() {
            match s {
                Step::Unitary { targets, matrix } => {
                    let t: Vec<&str> = targets.iter().map(String::as_str).collect();
                    world.apply_user(matrix, &t)?;
                }
                Step::Query { kind, answer } => {
                    let weights = world.state()?.distribution(&[QUERY_REG])?;
                    match kind {
                        QueryKind::Quantum => world.quantum_query(QUERY_REG, answer)?,
                        QueryKind::Classical => world.classical_query(QUERY_REG, answer, false)?,
                        QueryKind::Recorded => world.classical_query(QUERY_REG, answer, true)?,
                    }
                    trace.push(TraceEntry {
                        step: i,
                        kind: kind_name(*kind).into(),
                        position: None,
                        branch_weights: Some(weights),
                    });
                }
            }
        }
        Ok((world, trace))
    }

    /// Reduced state on the user registers after a register execution.
    pub fn user_state(&self, mode: OracleMode) -> Result<DensityOp> {
        let (w, _) = self.run_registers(mode, Fault::None)?;
        let names = self.user_names();
        let keep: Vec<&str> = names.iter().map(String::as_str).collect();
        w.reduced(&keep)
    }

    /// Runs against a fixed truth table; classical queries measure Q.
    pub fn run_sampled(&self, table: &TruthTable, rng: &mut RngStream) -> Result<(QState, Vec<TraceEntry>)> {
        if table.input_bits() != self.l {
            return Err(Error::InvalidArgument("truth table length differs from program".into()));
        }
        let mut state = QState::zero(self.user_layout()?);
        let mut trace = Vec::new();
        let f = |x: u64| table.get(x).unwrap_or(false);
        for (i, s) in self.steps.iter().enumerate() {
            match s {
                Step::Unitary { targets, matrix } => {
                    let t: Vec<&str> = targets.iter().map(String::as_str).collect();
                    state = state.apply_on(matrix, &t)?;
                }
                Step::Query { kind: QueryKind::Quantum, answer } => {
                    state = table_query(&state, QUERY_REG, answer, f)?;
                    trace.push(TraceEntry { step: i, kind: "quantum".into(), position: None, branch_weights: None });
                }
                Step::Query { kind, answer } => {
                    if state.register_probability(answer, 0)? < 1.0 - 1e-12 {
                        return Err(Error::NotFresh(answer.clone()));
                    }
                    let (x, post) = state.measure_register(QUERY_REG, rng)?;
                    state = post;
                    if f(x as u64) {
                        state = state.apply_on(&gates::x(), &[answer])?;
                    }
                    trace.push(TraceEntry {
                        step: i,
                        kind: kind_name(*kind).into(),
                        position: Some(x as u64),
                        branch_weights: None,
                    });
                }
            }
        }
        Ok((state, trace))
    }
}

fn kind_name(k: QueryKind) -> &'static str {
    match k {
        QueryKind::Quantum => "quantum",
        QueryKind::Classical => "classical",
        QueryKind::Recorded => "recorded",
    }
}

/// Random program with `queries` mixed queries. Each query is preceded by a
/// Haar-random unitary on Q together with the query's answer qubit (quantum)
/// or the previous answer qubit (classical kinds).
pub fn random_program(l: usize, queries: usize, rng: &mut RngStream) -> Result<QueryProgram> {
    let mut steps = Vec::new();
    for i in 0..queries {
        let kind = match rng.gen_range(0..3) {
            0 => QueryKind::Quantum,
            1 => QueryKind::Classical,
            _ => QueryKind::Recorded,
        };
        let mut targets = vec![QUERY_REG.to_string()];
        match kind {
            QueryKind::Quantum => targets.push(answer_name(i)),
            _ if i > 0 => targets.push(answer_name(i - 1)),
            _ => {}
        }
        let dim = 1 << (l + targets.len() - 1);
        steps.push(Step::Unitary { targets, matrix: haar_unitary(dim, rng) });
        steps.push(Step::Query { kind, answer: answer_name(i) });
    }
    QueryProgram::new(l, queries, steps)
}

/// Total-variation distance between two distributions of equal length.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Monte Carlo distribution of the user registers' computational-basis
/// outcome, sampling a fresh table per run.
pub fn sampled_distribution(program: &QueryProgram, samples: usize, rng: &mut RngStream) -> Result<Vec<f64>> {
    let dim = program.user_layout()?.dim();
    let mut hist = vec![0.0; dim];
    for _ in 0..samples {
        let table = super::sample_oracle(program.input_bits(), rng)?;
        let (state, _) = program.run_sampled(&table, rng)?;
        let probs: Vec<f64> = state.amplitudes().iter().map(|a| a.norm_sqr()).collect();
        hist[crate::hilbert::sample_index(&probs, rng)] += 1.0;
    }
    hist.iter_mut().for_each(|h| *h /= samples as f64);
    Ok(hist)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::trace_distance;

    #[test]
    fn purified_and_compressed_agree() {
        let mut rng = RngStream::from_seed(3);
        for _ in 0..5 {
            let p = random_program(1, 4, &mut rng).unwrap();
            let a = p.user_state(OracleMode::Purified).unwrap();
            let b = p.user_state(OracleMode::Compressed).unwrap();
            assert!(trace_distance(&a, &b).unwrap() < 1e-9);
        }
    }

    #[test]
    fn trace_lines_are_json() {
        let mut rng = RngStream::from_seed(8);
        let p = random_program(1, 3, &mut rng).unwrap();
        let (_, trace) = p.run_registers(OracleMode::Purified, Fault::None).unwrap();
        let text = trace_jsonl(&trace);
        assert_eq!(text.lines().count(), 3);
        for line in text.lines() {
            let e: TraceEntry = serde_json::from_str(line).unwrap();
            assert!(e.branch_weights.is_some());
        }
    }
}
