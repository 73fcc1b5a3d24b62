//! Experiment orchestration: configuration, seeded trial fan-out, summary
//! statistics and CSV/JSON emission for the CLI.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attack::{formula_params, run_attack, AttackConfig, AttackTranscript, FormulaParams, Variant};
use crate::error::{Error, Result};
use crate::money::{measure_reusability, Scheme, SchemeKind};
use crate::oracle::checks;
use crate::oracle::Fault;
use crate::rng::RngStream;
use crate::synth::{
    default_alternations, default_trials, max_acceptance, synthesize, Backend, SynthesisParams, TrialEngine,
    VerifierSpec, DEFAULT_Q_FACTOR,
};

pub const CSV_HEADER_COMMENT: &str = "# qmsep-csv v1";
pub const CHECK_TOL: f64 = 1e-9;
/// Largest t_max and N used by `--scaled` when none are given.
pub const SCALED_T_MAX: usize = 100;
pub const SCALED_UPDATES: usize = 50;

/// Mean, standard error and Wilson 95% interval of a sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub mean: f64,
    pub std_error: f64,
    pub count: usize,
    pub wilson_low: f64,
    pub wilson_high: f64,
}

pub fn wilson_interval(successes: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z / denom * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

impl SummaryStats {
    pub fn bernoulli(outcomes: &[bool]) -> Self {
        let n = outcomes.len();
        let k = outcomes.iter().filter(|&&b| b).count();
        let mean = if n == 0 { 0.0 } else { k as f64 / n as f64 };
        let se = if n == 0 { 0.0 } else { (mean * (1.0 - mean) / n as f64).sqrt() };
        let (lo, hi) = wilson_interval(k, n, 1.96);
        Self { mean, std_error: se, count: n, wilson_low: lo, wilson_high: hi }
    }
}

pub fn parse_fault(s: &str) -> Result<Fault> {
    match s {
        "none" => Ok(Fault::None),
        "skip-df-deletion" => Ok(Fault::SkipFourierDeletion),
        other => Err(Error::InvalidArgument(format!("unknown fault `{other}`"))),
    }
}

fn pool(jobs: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        b = b.num_threads(j.max(1));
    }
    b.build().map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))
}

/// Config file: optional per-command sections; CLI flags override fields.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub out: Option<String>,
    pub synth: SynthConfig,
    pub attack: AttackRunConfig,
    pub oracle_check: OracleCheckConfig,
}

pub fn load_config(text: &str) -> Result<ExperimentConfig> {
    serde_json::from_str(text)
        .map_err(|e| Error::Parse(format!("line {}, column {}: {}", e.line(), e.column(), e)))
}

// ---- synth -----------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub a: f64,
    pub b: f64,
    pub backend: Backend,
    pub trials: usize,
    pub seed: u64,
    pub alternations: Option<usize>,
    pub t_trials: Option<usize>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self { a: 0.5, b: 0.9, backend: Backend::Trial, trials: 100, seed: 0, alternations: None, t_trials: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BackendReport {
    pub backend: Backend,
    pub acceptance: SummaryValues,
    pub fallback_rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryValues {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl SummaryValues {
    fn of(v: &[f64]) -> Self {
        let n = v.len().max(1) as f64;
        Self {
            mean: v.iter().sum::<f64>() / n,
            min: v.iter().copied().fold(f64::INFINITY, f64::min),
            max: v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            count: v.len(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthReport {
    pub m: usize,
    pub k: usize,
    pub a: f64,
    pub b: f64,
    pub primary_backend: Backend,
    pub max_acceptance: f64,
    pub trial_success_probability: f64,
    pub trial_success_rate: SummaryStats,
    /// 1/2^{m+2}, the per-Trial success guarantee when max ≥ b.
    pub trial_success_floor: f64,
    pub default_alternations: usize,
    pub default_trials: usize,
    pub used_alternations: usize,
    pub used_trials: usize,
    pub backends: Vec<BackendReport>,
}

pub fn cmd_synth(verifier_json: &str, cfg: &SynthConfig) -> Result<SynthReport> {
    if cfg.trials == 0 {
        return Err(Error::InvalidArgument("trials must be ≥ 1".into()));
    }
    let spec = VerifierSpec::from_json(verifier_json)?;
    let m = spec.m();
    let mut params = SynthesisParams::new(cfg.a, cfg.b, m, Backend::Trial)?;
    if let Some(n) = cfg.alternations {
        params = params.with_alternations(n);
    }
    if let Some(t) = cfg.t_trials {
        params = params.with_trials(t);
    }
    let (max, _) = max_acceptance(&spec)?;
    let engine = TrialEngine::new(&spec, &params)?;
    let rng = RngStream::from_seed(cfg.seed);
    let trial_runs: Vec<bool> = (0..cfg.trials)
        .map(|i| engine.sample(&mut rng.split_index("trial", i as u64)).0)
        .collect();
    let mut backends = Vec::new();
    for backend in [Backend::Trial, Backend::Eigen] {
        let p = SynthesisParams { backend, ..params.clone() };
        let mut acc = Vec::with_capacity(cfg.trials);
        let mut fallbacks = 0;
        for i in 0..cfg.trials {
            let s = synthesize(&spec, &p, &mut rng.split_index(&format!("synth-{backend:?}"), i as u64))?;
            acc.push(spec.acceptance(&s.state)?);
            fallbacks += usize::from(s.fallback);
        }
        backends.push(BackendReport {
            backend,
            acceptance: SummaryValues::of(&acc),
            fallback_rate: fallbacks as f64 / cfg.trials as f64,
        });
    }
    Ok(SynthReport {
        m,
        k: spec.k(),
        a: cfg.a,
        b: cfg.b,
        primary_backend: cfg.backend,
        max_acceptance: max,
        trial_success_probability: engine.success_probability(),
        trial_success_rate: SummaryStats::bernoulli(&trial_runs),
        trial_success_floor: 1.0 / (1u64 << (m + 2)) as f64,
        default_alternations: default_alternations(cfg.a, cfg.b, m),
        default_trials: default_trials(m, DEFAULT_Q_FACTOR),
        used_alternations: params.n_alternations,
        used_trials: params.t_trials,
        backends,
    })
}

// ---- attack ----------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AttackRunConfig {
    pub scheme: SchemeKind,
    pub l: Option<usize>,
    pub m: Option<usize>,
    pub epsilon: f64,
    /// Measured from the scheme when absent.
    pub delta_r: Option<f64>,
    pub t_max: Option<usize>,
    pub n_updates: Option<usize>,
    pub scaled: bool,
    pub backend: Backend,
    pub alternations: Option<usize>,
    pub synth_trials: Option<usize>,
    pub trials: usize,
    pub seed: u64,
    pub jobs: Option<usize>,
    pub reuse_notes: usize,
    pub reuse_rounds: usize,
}

impl Default for AttackRunConfig {
    fn default() -> Self {
        Self {
            scheme: SchemeKind::HashTag,
            l: None,
            m: None,
            epsilon: 0.1,
            delta_r: None,
            t_max: None,
            n_updates: None,
            scaled: false,
            backend: Backend::Eigen,
            alternations: None,
            synth_trials: None,
            trials: 100,
            seed: 0,
            jobs: None,
            reuse_notes: 50,
            reuse_rounds: 10,
        }
    }
}

/// Default (l, m) per scheme.
pub fn default_shape(kind: SchemeKind) -> (usize, usize) {
    match kind {
        SchemeKind::HashTag => (3, 2),
        SchemeKind::Conjugate => (4, 2),
        SchemeKind::Counterexample => (4, 3),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolvedAttack {
    pub scheme: Scheme,
    pub config: AttackConfig,
    pub formula: FormulaParams,
    pub delta_r: f64,
    pub delta_r_measured: bool,
}

pub fn resolve_attack(cfg: &AttackRunConfig) -> Result<ResolvedAttack> {
    if cfg.trials == 0 {
        return Err(Error::InvalidArgument("trials must be ≥ 1".into()));
    }
    let (dl, dm) = default_shape(cfg.scheme);
    let scheme = Scheme::new(cfg.scheme, cfg.l.unwrap_or(dl), cfg.m.unwrap_or(dm))?;
    let (delta_r, measured) = match cfg.delta_r {
        Some(d) => (d, false),
        None => {
            let mut r = RngStream::from_seed(cfg.seed).split("reusability");
            (measure_reusability(&scheme, cfg.reuse_notes, cfg.reuse_rounds, &mut r)?.rate, true)
        }
    };
    let prof = scheme.profile();
    let variant = Variant::for_mode(prof.mint_query_mode);
    let formula = formula_params(prof.q, prof.q_prime, variant, cfg.epsilon, delta_r)?;
    let mut config = AttackConfig::from_formulas(&scheme, cfg.epsilon, delta_r, cfg.backend)?;
    let overrides = cfg.t_max.is_some() || cfg.n_updates.is_some();
    if overrides && !cfg.scaled {
        return Err(Error::InvalidParams("--t-max and --n-updates need --scaled".into()));
    }
    if cfg.scaled {
        let t = cfg.t_max.unwrap_or(config.t_max.min(SCALED_T_MAX));
        let n = cfg.n_updates.unwrap_or(config.n_updates.min(SCALED_UPDATES));
        config = config.with_t_max(t).with_updates(n);
        config.scaled = true;
    }
    if let Some(n) = cfg.alternations {
        config.synth_params = config.synth_params.with_alternations(n);
    }
    if let Some(t) = cfg.synth_trials {
        config.synth_params = config.synth_params.with_trials(t);
    }
    config.validate()?;
    Ok(ResolvedAttack { scheme, config, formula, delta_r, delta_r_measured: measured })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapSummary {
    pub true_accept_mean: f64,
    pub sim_accept_mean: f64,
    pub gap: f64,
    pub gap_std_error: f64,
    /// 6√(q·q′/t_max).
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackSummary {
    pub scheme: String,
    pub variant: Variant,
    pub l: usize,
    pub m: usize,
    pub q: usize,
    pub q_prime: usize,
    pub trials: usize,
    pub seed: u64,
    pub epsilon: f64,
    pub delta_r: f64,
    pub delta_r_measured: bool,
    pub formula: FormulaParams,
    pub used_t_max: usize,
    pub used_n_updates: usize,
    pub scaled: bool,
    pub success: SummaryStats,
    pub bad_next_query: SummaryStats,
    pub max_issuer_discoveries: usize,
    pub note_gap: GapSummary,
    pub fallback_rate: f64,
    pub all_databases_monotone: bool,
}

#[derive(Clone, Debug)]
pub struct AttackReport {
    pub csv: String,
    pub summary: AttackSummary,
    pub transcripts: Vec<AttackTranscript>,
}

pub fn attack_csv(rows: &[(u64, &AttackTranscript)]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record([
        "scheme", "variant", "seed", "epsilon", "t_max", "N", "t_drawn", "j_drawn", "accept1", "accept2", "success",
        "db_sizes",
    ])
    .map_err(io)?;
    for (seed, t) in rows {
        let sizes: Vec<String> = t.db_sizes().iter().map(usize::to_string).collect();
        w.write_record([
            t.scheme.clone(),
            t.variant.name().to_string(),
            seed.to_string(),
            t.epsilon.to_string(),
            t.t_max.to_string(),
            t.n_updates.to_string(),
            t.t_drawn.to_string(),
            t.j_drawn.to_string(),
            u8::from(t.forged[0].accepted).to_string(),
            u8::from(t.forged[1].accepted).to_string(),
            u8::from(t.success).to_string(),
            sizes.join(";"),
        ])
        .map_err(io)?;
    }
    let body = String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.to_string()))?)
        .map_err(|e| Error::Io(e.to_string()))?;
    Ok(format!("{CSV_HEADER_COMMENT}\n{body}"))
}

/// Runs `trials` attacks with seeds seed, seed+1, … on a worker pool.
pub fn cmd_attack(cfg: &AttackRunConfig) -> Result<AttackReport> {
    let r = resolve_attack(cfg)?;
    let seeds: Vec<u64> = (0..cfg.trials as u64).map(|i| cfg.seed.wrapping_add(i)).collect();
    let transcripts: Vec<AttackTranscript> = pool(cfg.jobs)?.install(|| {
        seeds
            .par_iter()
            .map(|&s| run_attack(&r.scheme, &r.config, &mut RngStream::from_seed(s)))
            .collect::<Result<Vec<_>>>()
    })?;
    let rows: Vec<(u64, &AttackTranscript)> = seeds.iter().copied().zip(transcripts.iter()).collect();
    let csv = attack_csv(&rows)?;
    let prof = r.scheme.profile();
    let n = transcripts.len() as f64;
    let diffs: Vec<f64> = transcripts.iter().map(|t| t.note_true_accept_prob - t.note_sim_accept_dj).collect();
    let gap = diffs.iter().sum::<f64>() / n;
    let var = diffs.iter().map(|d| (d - gap).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    let fallbacks: usize = transcripts.iter().flat_map(|t| &t.forged).filter(|f| f.fallback).count();
    let summary = AttackSummary {
        scheme: prof.name.clone(),
        variant: r.config.variant,
        l: prof.l,
        m: prof.m,
        q: prof.q,
        q_prime: prof.q_prime,
        trials: cfg.trials,
        seed: cfg.seed,
        epsilon: cfg.epsilon,
        delta_r: r.delta_r,
        delta_r_measured: r.delta_r_measured,
        formula: r.formula.clone(),
        used_t_max: r.config.t_max,
        used_n_updates: r.config.n_updates,
        scaled: r.config.scaled,
        success: SummaryStats::bernoulli(&transcripts.iter().map(|t| t.success).collect::<Vec<_>>()),
        bad_next_query: SummaryStats::bernoulli(&transcripts.iter().map(|t| t.next_query_bad).collect::<Vec<_>>()),
        max_issuer_discoveries: transcripts.iter().map(|t| t.issuer_discoveries()).max().unwrap_or(0),
        note_gap: GapSummary {
            true_accept_mean: transcripts.iter().map(|t| t.note_true_accept_prob).sum::<f64>() / n,
            sim_accept_mean: transcripts.iter().map(|t| t.note_sim_accept_dj).sum::<f64>() / n,
            gap,
            gap_std_error: (var / n).sqrt(),
            bound: 6.0 * ((prof.q * prof.q_prime) as f64 / r.config.t_max as f64).sqrt(),
        },
        fallback_rate: fallbacks as f64 / (2.0 * n),
        all_databases_monotone: transcripts.iter().all(|t| t.databases_monotone()),
    };
    Ok(AttackReport { csv, summary, transcripts })
}

// ---- oracle-check ----------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleCheckConfig {
    pub l: usize,
    pub queries: usize,
    pub trials: usize,
    pub seed: u64,
    /// Monte Carlo samples for the sampled-mode comparison; 0 skips it.
    pub mc_samples: usize,
    #[serde(skip)]
    pub fault: Fault,
}

impl Default for OracleCheckConfig {
    fn default() -> Self {
        Self { l: 1, queries: 3, trials: 10, seed: 0, mc_samples: 0, fault: Fault::None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckLine {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleCheckReport {
    pub l: usize,
    pub queries: usize,
    pub trials: usize,
    pub checks: Vec<CheckLine>,
    pub all_pass: bool,
}

fn line(name: &str, value: f64, tolerance: f64) -> CheckLine {
    CheckLine { name: name.into(), value, tolerance, pass: value <= tolerance }
}

pub fn cmd_oracle_check(cfg: &OracleCheckConfig) -> Result<OracleCheckReport> {
    if cfg.l == 0 || cfg.l > 3 {
        return Err(Error::InvalidArgument("exact equivalence needs 1 ≤ l ≤ 3".into()));
    }
    if cfg.trials == 0 {
        return Err(Error::InvalidArgument("trials must be ≥ 1".into()));
    }
    let rng = RngStream::from_seed(cfg.seed);
    let mut out = Vec::new();

    let mut worst = 0.0f64;
    for i in 0..cfg.trials {
        let (_, rep) = checks::equivalence(cfg.l, cfg.queries, &mut rng.split_index("equivalence", i as u64))?;
        worst = worst.max(rep.trace_distance);
    }
    out.push(line("purified-vs-compressed trace distance", worst, CHECK_TOL));
    out.push(line("comp-decomp identity deviation", checks::comp_decomp_deviation(cfg.l, 2)?, CHECK_TOL));
    let fd = checks::formula_deviation(cfg.l, false)?.max(checks::formula_deviation(cfg.l, true)?);
    out.push(line("compressed query formula deviation", fd, CHECK_TOL));
    let disjoint = checks::disjointness_preserved(cfg.l)?;
    out.push(CheckLine { name: "D_F and D_R stay disjoint".into(), value: f64::from(u8::from(!disjoint)), tolerance: 0.0, pass: disjoint });

    let mut a_worst = 0.0f64;
    let mut b_worst = 0.0f64;
    for i in 0..cfg.trials {
        let s = checks::query_erasure(cfg.l, cfg.fault, &mut rng.split_index("query-erasure", i as u64))?;
        a_worst = a_worst.max((s.alpha - s.decrement).abs()).max(s.trace_distance - s.bound);
        let t = checks::recorded_query(cfg.l, &mut rng.split_index("recorded-query", i as u64))?;
        b_worst = b_worst.max(t.weight_with - t.weight_without);
    }
    out.push(line("recorded-query deviation vs 6√α and exact decrement", a_worst, CHECK_TOL));
    out.push(line("interposed recorded query bad-weight increase", b_worst, CHECK_TOL));

    if cfg.mc_samples > 0 {
        let rep = checks::sampled_agreement(cfg.l, cfg.queries, cfg.mc_samples, &mut rng.split("monte-carlo"))?;
        out.push(line("sampled-mode total variation", rep.total_variation, 0.03));
    }
    let all_pass = out.iter().all(|c| c.pass);
    Ok(OracleCheckReport { l: cfg.l, queries: cfg.queries, trials: cfg.trials, checks: out, all_pass })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_matches_reference() {
        // 8 of 10 at z = 1.96: (0.4902, 0.9433).
        let (lo, hi) = wilson_interval(8, 10, 1.96);
        assert!((lo - 0.4902).abs() < 1e-4 && (hi - 0.9433).abs() < 1e-4, "{lo} {hi}");
        let (lo, hi) = wilson_interval(0, 20, 1.96);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.2);
    }

    #[test]
    fn overrides_need_scaled() {
        let cfg = AttackRunConfig { t_max: Some(5), delta_r: Some(1.0), ..Default::default() };
        assert!(resolve_attack(&cfg).is_err());
        let cfg = AttackRunConfig { scaled: true, ..cfg };
        assert_eq!(resolve_attack(&cfg).unwrap().config.t_max, 5);
    }

    #[test]
    fn config_sections_default() {
        let cfg = load_config(r#"{"attack": {"scheme": "conjugate", "trials": 7}}"#).unwrap();
        assert_eq!(cfg.attack.scheme, SchemeKind::Conjugate);
        assert_eq!(cfg.attack.trials, 7);
        assert_eq!(cfg.synth, SynthConfig::default());
        assert!(load_config(r#"{"atack": {}}"#).is_err());
    }

    #[test]
    fn fault_fails_oracle_check() {
        let base = OracleCheckConfig { l: 1, queries: 3, trials: 5, ..Default::default() };
        assert!(cmd_oracle_check(&base).unwrap().all_pass);
        let bad = OracleCheckConfig { fault: Fault::SkipFourierDeletion, ..base };
        assert!(!cmd_oracle_check(&bad).unwrap().all_pass);
    }
}
