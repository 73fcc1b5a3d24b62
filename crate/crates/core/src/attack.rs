//! The counterfeiting adversary: learn oracle answers by re-verifying the
//! real note, grow the database with synthesize-and-verify rounds, then
//! synthesize two notes against a randomly chosen intermediate database.

use std::collections::{BTreeSet, HashMap};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{DensityOp, Matrix, RegisterLayout};
use crate::money::{Banknote, BitSource, KeyPair, MintQueryMode, NoteState, Scheme, NOTE_REG};
use crate::oracle::{ClassicalDB, Origin, World};
use crate::rng::RngStream;
use crate::synth::{max_acceptance, synthesize_with, Backend, Circuit, Gate, SynthesisParams, TrialEngine, VerifierSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    ClassicalMint,
    QuantumMint,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::ClassicalMint => "classical_mint",
            Variant::QuantumMint => "quantum_mint",
        }
    }

    pub fn for_mode(mode: MintQueryMode) -> Self {
        match mode {
            MintQueryMode::Classical => Variant::ClassicalMint,
            MintQueryMode::Quantum => Variant::QuantumMint,
        }
    }
}

/// Unrounded parameter values from the analysis, for reporting next to the
/// values actually used.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FormulaParams {
    pub t_max: f64,
    pub n_updates: f64,
    pub a: f64,
    pub b: f64,
    /// Success lower bound 1.8·b² − 1.
    pub success_bound: f64,
}

/// b = 1 − √(1 − δr + ε).
pub fn threshold_b(epsilon: f64, delta_r: f64) -> Result<f64> {
    let inner = 1.0 - delta_r + epsilon;
    if !(inner > 0.0 && inner < 1.0) {
        return Err(Error::InvalidParams(format!("1 − δr + ε = {inner} must lie in (0, 1)")));
    }
    Ok(1.0 - inner.sqrt())
}

pub fn formula_params(q: usize, q_prime: usize, variant: Variant, epsilon: f64, delta_r: f64) -> Result<FormulaParams> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParams(format!("ε = {epsilon} must lie in (0, 1)")));
    }
    let b = threshold_b(epsilon, delta_r)?;
    let (q, qp) = (q as f64, q_prime as f64);
    let (t_max, n) = match variant {
        Variant::ClassicalMint => ((qp / epsilon).ceil(), 100.0 * qp / (b * b)),
        Variant::QuantumMint => (36.0 * q * qp / (epsilon * epsilon), q * qp / (epsilon * epsilon * b.powi(4))),
    };
    Ok(FormulaParams { t_max, n_updates: n, a: 0.99 * b, b, success_bound: 1.8 * b * b - 1.0 })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackConfig {
    pub epsilon: f64,
    pub delta_r: f64,
    pub t_max: usize,
    pub n_updates: usize,
    pub synth_params: SynthesisParams,
    pub variant: Variant,
    /// True when t_max or N differ from the formulas.
    pub scaled: bool,
}

impl AttackConfig {
    /// Parameters from the formulas, rounded up.
    pub fn from_formulas(scheme: &Scheme, epsilon: f64, delta_r: f64, backend: Backend) -> Result<Self> {
        let prof = scheme.profile();
        let variant = Variant::for_mode(prof.mint_query_mode);
        let pp = formula_params(prof.q, prof.q_prime, variant, epsilon, delta_r)?;
        let synth_params = SynthesisParams::new(pp.a, pp.b, prof.m, backend)?;
        let cfg = Self {
            epsilon,
            delta_r,
            t_max: pp.t_max.ceil() as usize,
            n_updates: pp.n_updates.ceil() as usize,
            synth_params,
            variant,
            scaled: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_t_max(mut self, t_max: usize) -> Self {
        self.scaled |= t_max != self.t_max;
        self.t_max = t_max;
        self
    }

    pub fn with_updates(mut self, n: usize) -> Self {
        self.scaled |= n != self.n_updates;
        self.n_updates = n;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.t_max == 0 || self.n_updates == 0 {
            return Err(Error::InvalidParams("t_max and N must be positive".into()));
        }
        self.synth_params.validate()
    }

    fn check_scheme(&self, scheme: &Scheme) -> Result<()> {
        self.validate()?;
        if Variant::for_mode(scheme.profile().mint_query_mode) != self.variant {
            return Err(Error::InvalidParams(format!(
                "variant {} does not match scheme {}",
                self.variant.name(),
                scheme.kind().name()
            )));
        }
        Ok(())
    }
}

/// Simulated verifier V_(pk, D, s) as a circuit on M ⊗ K.
///
/// K holds one answer qubit per distinct verifier position missing from D,
/// prepared in |+⟩ so that every unknown answer is a fresh uniform bit, and a
/// final accept qubit. Each check H^β X^v|0⟩ is undone with (controlled) X^v
/// and H^β; the accept qubit flips when every note qubit returns to |0⟩.
pub fn build_sim_verifier(scheme: &Scheme, _pk: &KeyPair, serial: u64, db: &ClassicalDB) -> Result<VerifierSpec> {
    if !db.is_consistent() {
        return Err(Error::InvalidDatabase("database assigns two answers to one position".into()));
    }
    let checks = scheme.checks(serial);
    let m = checks.len();
    let mut unknown: Vec<u64> = Vec::new();
    for x in scheme.query_positions(serial) {
        if db.lookup(x).is_none() && !unknown.contains(&x) {
            unknown.push(x);
        }
    }
    let anc = |x: u64| m + unknown.iter().position(|&y| y == x).expect("unknown position");
    let n = m + unknown.len() + 1;
    let ans = n - 1;
    let mut gates: Vec<Gate> = (0..unknown.len()).map(|i| Gate::H(m + i)).collect();
    for c in &checks {
        let q = c.qubit;
        // Undo H^β X^v|0⟩: H^β first, then X^v.
        match c.basis {
            BitSource::Const(true) => gates.push(Gate::H(q)),
            BitSource::Const(false) => {}
            BitSource::Oracle(x) => match db.lookup(x) {
                Some(true) => gates.push(Gate::H(q)),
                Some(false) => {}
                None => gates.push(Gate::Ch { control: anc(x), target: q }),
            },
        }
        match c.value {
            BitSource::Const(true) => gates.push(Gate::X(q)),
            BitSource::Const(false) => {}
            BitSource::Oracle(x) => match db.lookup(x) {
                Some(true) => gates.push(Gate::X(q)),
                Some(false) => {}
                None => gates.push(Gate::Cnot { control: anc(x), target: q }),
            },
        }
    }
    gates.extend((0..m).map(Gate::X));
    gates.push(Gate::Mcx { controls: (0..m).collect(), target: ans });
    VerifierSpec::new(m, n - m, ans, Circuit::from_gates(n, gates)?)
}

/// Sim verifier with its acceptance operator and synthesis data, shared by
/// every database that agrees on the verifier's positions.
#[derive(Clone, Debug)]
struct SimEntry {
    spec: VerifierSpec,
    operator: Matrix,
    max_acceptance: f64,
    witness: DensityOp,
    engine: Option<TrialEngine>,
}

#[derive(Clone, Debug, Default)]
pub struct SimCache {
    entries: HashMap<Vec<Option<bool>>, SimEntry>,
}

impl SimCache {
    pub fn new() -> Self {
        Self::default()
    }

    fn get(
        &mut self,
        scheme: &Scheme,
        pk: &KeyPair,
        serial: u64,
        db: &ClassicalDB,
        params: &SynthesisParams,
    ) -> Result<&SimEntry> {
        let key: Vec<Option<bool>> = scheme.query_positions(serial).iter().map(|&x| db.lookup(x)).collect();
        if !self.entries.contains_key(&key) {
            let spec = build_sim_verifier(scheme, pk, serial, db)?;
            let operator = spec.acceptance_operator();
            let (max, witness) = max_acceptance(&spec)?;
            let engine = match params.backend {
                Backend::Trial => Some(TrialEngine::new(&spec, params)?),
                Backend::Eigen => None,
            };
            self.entries.insert(key.clone(), SimEntry { spec, operator, max_acceptance: max, witness, engine });
        }
        Ok(&self.entries[&key])
    }
}

fn as_note(rho: &DensityOp) -> Result<DensityOp> {
    let n = rho.layout().total_qubits();
    DensityOp::new(RegisterLayout::new(&[(NOTE_REG, n)])?, rho.matrix().clone())
}

/// One synthesis against a database, with its simulated acceptance.
#[derive(Clone, Debug)]
pub struct Synthesis {
    pub state: DensityOp,
    pub sim_acceptance: f64,
    pub max_sim_acceptance: f64,
    pub fallback: bool,
}

fn synthesize_for(
    cache: &mut SimCache,
    scheme: &Scheme,
    pk: &KeyPair,
    serial: u64,
    db: &ClassicalDB,
    params: &SynthesisParams,
    rng: &mut RngStream,
) -> Result<Synthesis> {
    let e = cache.get(scheme, pk, serial, db, params)?;
    let (state, fallback) = match &e.engine {
        Some(engine) => {
            let s = synthesize_with(engine, params.t_trials, &e.spec, rng)?;
            (s.state, s.fallback)
        }
        None => (e.witness.clone(), false),
    };
    let sim = state.expectation(&e.operator).clamp(0.0, 1.0);
    Ok(Synthesis { state: as_note(&state)?, sim_acceptance: sim, max_sim_acceptance: e.max_acceptance, fallback })
}

/// Simulated acceptance of a note state against a database.
pub fn sim_acceptance(scheme: &Scheme, pk: &KeyPair, serial: u64, db: &ClassicalDB, rho: &DensityOp) -> Result<f64> {
    let spec = build_sim_verifier(scheme, pk, serial, db)?;
    Ok(rho.expectation(&spec.acceptance_operator()).clamp(0.0, 1.0))
}

fn merge(db: &mut ClassicalDB, pairs: &[(u64, bool)]) -> Result<usize> {
    let mut added = 0;
    for &(x, z) in pairs {
        if db.insert(x, z)? {
            added += 1;
        }
    }
    Ok(added)
}

/// Verifier positions that key generation or minting touched but D lacks.
fn bad_positions(scheme: &Scheme, serial: u64, db: &ClassicalDB, issuer: &BTreeSet<u64>) -> usize {
    let mut seen = BTreeSet::new();
    scheme
        .query_positions(serial)
        .into_iter()
        .filter(|x| issuer.contains(x) && db.lookup(*x).is_none() && seen.insert(*x))
        .count()
}

fn issuer_positions(world: &World) -> BTreeSet<u64> {
    world.touched_positions(&[Origin::KeyGen, Origin::Mint])
}

#[derive(Clone, Debug)]
pub struct TestOutcome {
    pub post_note: Banknote,
    pub db: ClassicalDB,
    pub t: usize,
    pub bad_query_counts: Vec<usize>,
}

/// Verifies the note t times (t uniform in [t_max]) and records every pair.
pub fn test_phase(
    scheme: &Scheme,
    pk: &KeyPair,
    note: &Banknote,
    world: &mut World,
    cfg: &AttackConfig,
    rng: &mut RngStream,
) -> Result<TestOutcome> {
    let t = rng.gen_range(0..cfg.t_max);
    let issuer = issuer_positions(world);
    let mut db = ClassicalDB::new();
    let mut cur = note.clone();
    let mut bad = Vec::with_capacity(t);
    for _ in 0..t {
        bad.push(bad_positions(scheme, cur.serial, &db, &issuer));
        let v = scheme.verify(pk, &cur, world, rng)?;
        merge(&mut db, &v.pairs)?;
        cur = v.post;
    }
    Ok(TestOutcome { post_note: cur, db, t, bad_query_counts: bad })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UpdateRecord {
    pub k: usize,
    pub db_size: usize,
    pub sim_acceptance: f64,
    pub max_sim_acceptance: f64,
    /// Acceptance probability of the true verifier given the answers it saw.
    pub true_accept_prob: f64,
    pub accepted: bool,
    pub fallback: bool,
    pub bad_queries: usize,
    /// New pairs at key-generation or mint positions.
    pub issuer_discoveries: usize,
}

#[derive(Clone, Debug)]
pub struct UpdateOutcome {
    pub databases: Vec<ClassicalDB>,
    pub records: Vec<UpdateRecord>,
}

/// N synthesize-and-verify rounds; returns D_0, …, D_N.
#[allow(clippy::too_many_arguments)]
pub fn update_phase(
    scheme: &Scheme,
    pk: &KeyPair,
    serial: u64,
    world: &mut World,
    d0: &ClassicalDB,
    cfg: &AttackConfig,
    cache: &mut SimCache,
    rng: &mut RngStream,
) -> Result<UpdateOutcome> {
    let issuer = issuer_positions(world);
    let mut databases = vec![d0.clone()];
    let mut records = Vec::with_capacity(cfg.n_updates);
    for k in 0..cfg.n_updates {
        let dk = databases[k].clone();
        let syn = synthesize_for(cache, scheme, pk, serial, &dk, &cfg.synth_params, rng)?;
        let bad = bad_positions(scheme, serial, &dk, &issuer);
        let note = Banknote { serial, state: NoteState::Mixed(syn.state) };
        let v = scheme.verify(pk, &note, world, rng)?;
        let mut next = dk;
        let before: BTreeSet<u64> = next.positions();
        merge(&mut next, &v.pairs)?;
        let discoveries = next.positions().difference(&before).filter(|x| issuer.contains(x)).count();
        records.push(UpdateRecord {
            k,
            db_size: databases[k].len(),
            sim_acceptance: syn.sim_acceptance,
            max_sim_acceptance: syn.max_sim_acceptance,
            true_accept_prob: v.accept_prob,
            accepted: v.accept,
            fallback: syn.fallback,
            bad_queries: bad,
            issuer_discoveries: discoveries,
        });
        databases.push(next);
    }
    Ok(UpdateOutcome { databases, records })
}

/// Draws j uniform in [N] and synthesizes twice against D_j.
pub fn synthesize_phase(
    scheme: &Scheme,
    pk: &KeyPair,
    serial: u64,
    databases: &[ClassicalDB],
    cfg: &AttackConfig,
    cache: &mut SimCache,
    rng: &mut RngStream,
) -> Result<(usize, [Synthesis; 2])> {
    if databases.len() < 2 {
        return Err(Error::InvalidArgument("synthesis needs D_0 and at least one update".into()));
    }
    let j = rng.gen_range(0..databases.len() - 1);
    let mut r1 = rng.split("phi1");
    let mut r2 = rng.split("phi2");
    let a = synthesize_for(cache, scheme, pk, serial, &databases[j], &cfg.synth_params, &mut r1)?;
    let b = synthesize_for(cache, scheme, pk, serial, &databases[j], &cfg.synth_params, &mut r2)?;
    Ok((j, [a, b]))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ForgeryRecord {
    pub sim_acceptance: f64,
    pub true_accept_prob: f64,
    pub accepted: bool,
    pub fallback: bool,
    /// Row-major density matrix as [re, im].
    pub density: Vec<Vec<[f64; 2]>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AttackTranscript {
    pub scheme: String,
    pub variant: Variant,
    pub epsilon: f64,
    pub t_max: usize,
    pub n_updates: usize,
    pub scaled: bool,
    pub serial: u64,
    pub t_drawn: usize,
    pub j_drawn: usize,
    /// D_0, …, D_N as sorted pair lists.
    pub databases: Vec<Vec<(u64, bool)>>,
    pub updates: Vec<UpdateRecord>,
    pub forged: Vec<ForgeryRecord>,
    /// Issuer positions missing from D, per test-phase verification.
    pub bad_query_counts: Vec<usize>,
    /// Whether the verification following the test phase would query an
    /// issuer position outside D.
    pub next_query_bad: bool,
    /// True acceptance probability of the note after the test phase.
    pub note_true_accept_prob: f64,
    pub note_sim_accept_d0: f64,
    pub note_sim_accept_dj: f64,
    /// Key-generation and mint positions, kept out of the adversary's view.
    pub issuer_positions: Vec<u64>,
    pub success: bool,
}

impl AttackTranscript {
    pub fn db_sizes(&self) -> Vec<usize> {
        self.databases.iter().map(Vec::len).collect()
    }

    pub fn issuer_discoveries(&self) -> usize {
        self.updates.iter().map(|u| u.issuer_discoveries).sum()
    }

    pub fn databases_monotone(&self) -> bool {
        self.databases.windows(2).all(|w| {
            let next: BTreeSet<_> = w[1].iter().collect();
            w[0].iter().all(|p| next.contains(p))
        })
    }
}

fn density_rows(rho: &DensityOp) -> Vec<Vec<[f64; 2]>> {
    let m = rho.matrix();
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

/// Full pipeline: issue a note, run the three phases, verify both forgeries.
pub fn run_attack(scheme: &Scheme, cfg: &AttackConfig, rng: &mut RngStream) -> Result<AttackTranscript> {
    cfg.check_scheme(scheme)?;
    let mut r_world = rng.split("world");
    let mut r_issue = rng.split("issue");
    let mut r_adv = rng.split("adversary");
    let mut r_diag = rng.split("diagnostics");
    let mut r_check = rng.split("final-verify");

    let mut world = scheme.fresh_world(&mut r_world)?;
    let pk = scheme.key_gen(&world, &mut r_issue)?;
    let note = scheme.mint(&pk, &mut world, &mut r_issue)?;
    if scheme.profile().mint_query_mode == MintQueryMode::Quantum {
        world.compact()?;
    }
    let serial = note.serial;
    let issuer = issuer_positions(&world);

    let test = test_phase(scheme, &pk, &note, &mut world, cfg, &mut r_adv)?;
    let next_query_bad = bad_positions(scheme, serial, &test.db, &issuer) > 0;
    let note_rho = test.post_note.density(&world)?;
    let note_true_accept_prob = {
        let mut w = world.clone();
        scheme.verify(&pk, &test.post_note, &mut w, &mut r_diag)?.accept_prob
    };
    let note_sim_accept_d0 = sim_acceptance(scheme, &pk, serial, &test.db, &note_rho)?;

    let mut cache = SimCache::new();
    let upd = update_phase(scheme, &pk, serial, &mut world, &test.db, cfg, &mut cache, &mut r_adv)?;
    let (j, forgeries) = synthesize_phase(scheme, &pk, serial, &upd.databases, cfg, &mut cache, &mut r_adv)?;
    let note_sim_accept_dj = sim_acceptance(scheme, &pk, serial, &upd.databases[j], &note_rho)?;

    let mut forged = Vec::with_capacity(2);
    for f in forgeries {
        let candidate = Banknote { serial, state: NoteState::Mixed(f.state.clone()) };
        let v = scheme.verify(&pk, &candidate, &mut world, &mut r_check)?;
        forged.push(ForgeryRecord {
            sim_acceptance: f.sim_acceptance,
            true_accept_prob: v.accept_prob,
            accepted: v.accept,
            fallback: f.fallback,
            density: density_rows(&f.state),
        });
    }
    let success = forged.iter().all(|f| f.accepted);
    Ok(AttackTranscript {
        scheme: scheme.kind().name().into(),
        variant: cfg.variant,
        epsilon: cfg.epsilon,
        t_max: cfg.t_max,
        n_updates: cfg.n_updates,
        scaled: cfg.scaled,
        serial,
        t_drawn: test.t,
        j_drawn: j,
        databases: upd.databases.iter().map(|d| d.pair_set().into_iter().collect()).collect(),
        updates: upd.records,
        forged,
        bad_query_counts: test.bad_query_counts,
        next_query_bad,
        note_true_accept_prob,
        note_sim_accept_d0,
        note_sim_accept_dj,
        issuer_positions: issuer.into_iter().collect(),
        success,
    })
}
