//! Alternating projections, the Trial subroutine and the synthesizer facade.
//!
//! The coherent Trial keeps only (last outcome, agreement count) of the
//! outcome register. Because the maximally entangled partner register is
//! never touched, the joint state restricted to M⊗K is block diagonal in
//! (last, count) and each block evolves as ρ ↦ Π ρ Π. [`TrialEngine`] tracks
//! these blocks exactly inside the reduced space W and rebuilds a
//! purification on demand.

use rand::Rng;

use crate::error::{Error, Result};
use crate::hilbert::{
    c, check_budget, hermitian_eigen, measure_projective, DensityOp, Matrix, Projector, QState,
    RegisterLayout, Vector, ONE,
};
use crate::rng::RngStream;
use crate::synth::verifier::{max_acceptance, ReducedPair, VerifierSpec};
use crate::synth::{Backend, SynthesisParams};

/// Classes below this weight are dropped during propagation.
const PRUNE: f64 = 1e-18;

/// Destructive Q/P alternation from `start`, `n` rounds, 2n outcome bits.
pub fn alternating_sample(
    p1: &Projector,
    q1: &Projector,
    start: &QState,
    n: usize,
    rng: &mut RngStream,
) -> Result<Vec<bool>> {
    let mut state = start.clone();
    let mut out = Vec::with_capacity(2 * n);
    for _ in 0..n {
        for pi in [q1, p1] {
            let m = measure_projective(&state, pi, rng)?;
            out.push(m.outcome);
            state = m.post;
        }
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct TrialResult {
    pub success: bool,
    /// Purification on [M, K, Aux, Last, Cnt]; Aux purifies both the
    /// entangled partner of M and the discarded outcome history.
    pub state: QState,
    pub est_count: usize,
    pub accept_prob_of_reduced: f64,
}

#[derive(Clone, Debug)]
pub struct DestructiveTrial {
    pub success: bool,
    pub count: usize,
    pub last: bool,
    /// Post-trial state on M when the last outcome is in range(P¹).
    pub reduced_m: Option<DensityOp>,
}

#[derive(Clone, Debug)]
struct Class {
    last: bool,
    count: usize,
    rho: Matrix,
}

#[derive(Clone, Debug)]
pub struct TrialEngine {
    spec: VerifierSpec,
    pair: ReducedPair,
    n: usize,
    threshold: usize,
    classes: Vec<Class>,
    p_yes: f64,
}

impl TrialEngine {
    pub fn new(spec: &VerifierSpec, params: &SynthesisParams) -> Result<Self> {
        params.validate()?;
        let threshold = params.agreement_threshold()?;
        let pair = ReducedPair::new(spec)?;
        let n = params.n_alternations;
        let dw = pair.dim();
        let id = Matrix::identity(dw, dw);
        let q0 = &id - &pair.q;
        let p0 = &id - &pair.p;
        let width = 2 * n + 1;
        let d = (1usize << spec.m()) as f64;

        let mut slots: Vec<Option<Matrix>> = vec![None; 2 * width];
        slots[width] = Some(&pair.p * c(1.0 / d, 0.0));
        for step in 0..2 * n {
            let (proj1, proj0) = if step % 2 == 0 { (&pair.q, &q0) } else { (&pair.p, &p0) };
            let mut next: Vec<Option<Matrix>> = vec![None; 2 * width];
            for (slot, rho) in slots.iter().enumerate() {
                let Some(rho) = rho else { continue };
                let last = slot / width == 1;
                let count = slot % width;
                for (bit, proj) in [(false, proj0), (true, proj1)] {
                    let out = proj * rho * proj;
                    if out.trace().re < PRUNE {
                        continue;
                    }
                    let nc = count + usize::from(bit == last);
                    let idx = usize::from(bit) * width + nc;
                    match &mut next[idx] {
                        Some(acc) => *acc += out,
                        empty => *empty = Some(out),
                    }
                }
            }
            slots = next;
        }
        let classes: Vec<Class> = slots
            .into_iter()
            .enumerate()
            .filter_map(|(slot, rho)| {
                rho.map(|rho| Class { last: slot / width == 1, count: slot % width, rho })
            })
            .collect();
        let p_yes = classes
            .iter()
            .filter(|cl| cl.last && cl.count >= threshold)
            .map(|cl| cl.rho.trace().re)
            .sum::<f64>()
            .clamp(0.0, 1.0)
            .abs();
        Ok(Self { spec: spec.clone(), pair, n, threshold, classes, p_yes })
    }

    pub fn success_probability(&self) -> f64 {
        self.p_yes
    }

    pub fn threshold(&self) -> usize {
        self.threshold
    }

    pub fn alternations(&self) -> usize {
        self.n
    }

    fn is_yes(&self, cl: &Class) -> bool {
        cl.last && cl.count >= self.threshold
    }

    fn conditional(&self, yes: bool) -> Option<(f64, Matrix)> {
        let dw = self.pair.dim();
        let mut acc = Matrix::zeros(dw, dw);
        let mut w = 0.0;
        for cl in self.classes.iter().filter(|cl| self.is_yes(cl) == yes) {
            acc += &cl.rho;
            w += cl.rho.trace().re;
        }
        (w > 0.0).then(|| (w, acc * c(1.0 / w, 0.0)))
    }

    /// Post-Yes state on M; `None` when Trial never succeeds.
    pub fn post_yes_reduced(&self) -> Option<DensityOp> {
        let (_, rho) = self.conditional(true)?;
        let d = 1usize << self.spec.m();
        let block = rho.view((0, 0), (d, d)).into_owned();
        Some(normalized_density(self.spec.input_layout(), block))
    }

    /// Post-No state on M (K traced out).
    pub fn post_no_reduced(&self) -> Option<DensityOp> {
        let (_, rho) = self.conditional(false)?;
        Some(self.reduce_to_m(&rho))
    }

    fn reduce_to_m(&self, rho_w: &Matrix) -> DensityOp {
        let full = &self.pair.basis * rho_w * self.pair.basis.adjoint();
        let d = 1usize << self.spec.m();
        let kd = 1usize << self.spec.k();
        let mut out = Matrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                let mut s = c(0.0, 0.0);
                for r in 0..kd {
                    s += full[(i * kd + r, j * kd + r)];
                }
                out[(i, j)] = s;
            }
        }
        normalized_density(self.spec.input_layout(), out)
    }

    fn sample_class(&self, yes: bool, rng: &mut RngStream) -> &Class {
        let members: Vec<&Class> = self.classes.iter().filter(|cl| self.is_yes(cl) == yes).collect();
        let weights: Vec<f64> = members.iter().map(|cl| cl.rho.trace().re).collect();
        members[crate::hilbert::sample_index(&weights, rng)]
    }

    /// Samples the Test outcome and the measured count without building the
    /// purification.
    pub fn sample(&self, rng: &mut RngStream) -> (bool, usize) {
        let success = rng.gen::<f64>() < self.p_yes;
        let has_branch = self.classes.iter().any(|cl| self.is_yes(cl) == success);
        if !has_branch {
            return (success, 0);
        }
        (success, self.sample_class(success, rng).count)
    }

    /// One coherent Trial with the full post-Test purification.
    pub fn run(&self, rng: &mut RngStream) -> Result<TrialResult> {
        let (success, est_count) = self.sample(rng);
        let state = self.purification(success)?;
        let reduced = if success { self.post_yes_reduced() } else { self.post_no_reduced() };
        let accept_prob_of_reduced = match reduced {
            Some(r) => self.spec.acceptance(&r)?,
            None => 0.0,
        };
        Ok(TrialResult { success, state, est_count, accept_prob_of_reduced })
    }

    /// Purification of the Yes (or No) branch on [M, K, Aux, Last, Cnt].
    pub fn purification(&self, yes: bool) -> Result<QState> {
        let (m, k) = (self.spec.m(), self.spec.k());
        let aux = m + 1;
        let cnt = usize::BITS as usize - (2 * self.n).leading_zeros() as usize;
        let mut spec = vec![("M", m)];
        if k > 0 {
            spec.push(("K", k));
        }
        spec.extend([("Aux", aux), ("Last", 1), ("Cnt", cnt.max(1))]);
        let layout = RegisterLayout::new(&spec)?;
        check_budget(layout.total_qubits())?;
        let cnt = cnt.max(1);
        let mut amps = Vector::zeros(layout.dim());
        let mut weight = 0.0;
        for cl in self.classes.iter().filter(|cl| self.is_yes(cl) == yes) {
            let (vals, vecs) = hermitian_eigen(&cl.rho)?;
            for (r, &lam) in vals.iter().enumerate() {
                if lam <= PRUNE {
                    continue;
                }
                weight += lam;
                let mk = &self.pair.basis * vecs.column(r) * c(lam.sqrt(), 0.0);
                for (x, z) in mk.iter().enumerate() {
                    let idx = (((x << aux) | r) << 1 | usize::from(cl.last)) << cnt | cl.count;
                    amps[idx] += z;
                }
            }
        }
        if weight == 0.0 {
            return Err(Error::InvalidParams(format!(
                "the {} branch of Test has probability zero",
                if yes { "Yes" } else { "No" }
            )));
        }
        QState::normalized(layout, amps)
    }

    /// Trial with each outcome measured destructively as it is produced.
    pub fn run_destructive(&self, rng: &mut RngStream) -> DestructiveTrial {
        let d = 1usize << self.spec.m();
        let dw = self.pair.dim();
        let mut psi = Matrix::zeros(dw, d);
        for i in 0..d {
            psi[(i, i)] = c(1.0 / (d as f64).sqrt(), 0.0);
        }
        let id = Matrix::identity(dw, dw);
        let mut last = true;
        let mut count = 0;
        for step in 0..2 * self.n {
            let proj = if step % 2 == 0 { &self.pair.q } else { &self.pair.p };
            let branch1 = proj * &psi;
            let p1 = branch1.norm_squared();
            let bit = rng.gen::<f64>() < p1;
            let kept = if bit { branch1 } else { (&id - proj) * &psi };
            let norm = kept.norm();
            psi = kept * c(1.0 / norm, 0.0);
            count += usize::from(bit == last);
            last = bit;
        }
        let success = last && count >= self.threshold;
        let reduced_m = last.then(|| {
            let rho = &psi * psi.adjoint();
            normalized_density(self.spec.input_layout(), rho.view((0, 0), (d, d)).into_owned())
        });
        DestructiveTrial { success, count, last, reduced_m }
    }
}

fn normalized_density(layout: RegisterLayout, m: Matrix) -> DensityOp {
    let tr = m.trace().re;
    DensityOp::from_parts(layout, m * c(1.0 / tr, 0.0))
}

pub fn run_trial(spec: &VerifierSpec, params: &SynthesisParams, rng: &mut RngStream) -> Result<TrialResult> {
    if params.backend != Backend::Trial {
        return Err(Error::InvalidParams("run_trial needs the trial backend".into()));
    }
    TrialEngine::new(spec, params)?.run(rng)
}

#[derive(Clone, Debug)]
pub struct Synthesized {
    pub state: DensityOp,
    pub fallback: bool,
    pub trials_used: usize,
    /// Exact single-Trial success probability (trial backend only).
    pub trial_success_probability: Option<f64>,
}

pub fn synthesize(spec: &VerifierSpec, params: &SynthesisParams, rng: &mut RngStream) -> Result<Synthesized> {
    params.validate()?;
    match params.backend {
        Backend::Eigen => {
            let (_, witness) = max_acceptance(spec)?;
            Ok(Synthesized { state: witness, fallback: false, trials_used: 0, trial_success_probability: None })
        }
        Backend::Trial => {
            let engine = TrialEngine::new(spec, params)?;
            synthesize_with(&engine, params.t_trials, spec, rng)
        }
    }
}

/// Repeats Trial up to `t_trials` times on a prepared engine.
pub fn synthesize_with(
    engine: &TrialEngine,
    t_trials: usize,
    spec: &VerifierSpec,
    rng: &mut RngStream,
) -> Result<Synthesized> {
    let p = engine.success_probability();
    for t in 1..=t_trials {
        if rng.gen::<f64>() < p {
            if let Some(state) = engine.post_yes_reduced() {
                return Ok(Synthesized {
                    state,
                    fallback: false,
                    trials_used: t,
                    trial_success_probability: Some(p),
                });
            }
        }
    }
    Ok(Synthesized {
        state: DensityOp::maximally_mixed(spec.input_layout()),
        fallback: true,
        trials_used: t_trials,
        trial_success_probability: Some(p),
    })
}

/// Unit vector helper for tests and callers that start from basis states.
pub fn basis_vector(dim: usize, i: usize) -> Vector {
    let mut v = Vector::zeros(dim);
    v[i] = ONE;
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::circuit::{Circuit, Gate};

    fn accept_all() -> VerifierSpec {
        let mut circ = Circuit::new(2);
        circ.push(Gate::X(1));
        VerifierSpec::new(1, 1, 1, circ).unwrap()
    }

    fn reject_all() -> VerifierSpec {
        VerifierSpec::new(1, 1, 1, Circuit::new(2)).unwrap()
    }

    #[test]
    fn accept_all_always_succeeds() {
        let spec = accept_all();
        let params = SynthesisParams::new(0.5, 0.9, 1, Backend::Trial).unwrap();
        let mut rng = RngStream::from_seed(1);
        let r = run_trial(&spec, &params, &mut rng).unwrap();
        assert!(r.success);
        assert_eq!(r.est_count, 2 * params.n_alternations);
        assert!((r.accept_prob_of_reduced - 1.0).abs() < 1e-9);
        assert!((r.state.norm_squared() - 1.0).abs() < 1e-9);
        let s = synthesize(&spec, &params, &mut rng).unwrap();
        assert!(!s.fallback);
        assert!((spec.acceptance(&s.state).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn reject_all_falls_back() {
        let spec = reject_all();
        let params = SynthesisParams::new(0.5, 0.9, 1, Backend::Trial).unwrap();
        let engine = TrialEngine::new(&spec, &params).unwrap();
        assert_eq!(engine.success_probability(), 0.0);
        let mut rng = RngStream::from_seed(2);
        let s = synthesize(&spec, &params, &mut rng).unwrap();
        assert!(s.fallback);
        assert_eq!(s.trials_used, params.t_trials);
        assert!(!engine.run(&mut rng).unwrap().success);
    }

    #[test]
    fn alternating_sample_extremes() {
        let z = basis_vector(2, 0);
        let o = basis_vector(2, 1);
        let p1 = Projector::from_vectors(2, &[z.clone()]).unwrap();
        let layout = RegisterLayout::new(&[("q", 1)]).unwrap();
        let start = QState::new(layout, z.clone()).unwrap();
        let mut rng = RngStream::from_seed(3);
        let same = alternating_sample(&p1, &p1, &start, 5, &mut rng).unwrap();
        assert!(same.iter().all(|&b| b));
        let q1 = Projector::from_vectors(2, &[o]).unwrap();
        let alt = alternating_sample(&p1, &q1, &start, 5, &mut rng).unwrap();
        assert_eq!(alt, vec![false, true, false, true, false, true, false, true, false, true]);
    }
}
