//! Witness-state synthesis from binary-outcome verifier circuits.

pub mod circuit;
pub mod trial;
pub mod verifier;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use circuit::{Circuit, Gate, GateSpec};
pub use trial::{alternating_sample, run_trial, synthesize, synthesize_with, DestructiveTrial, Synthesized, TrialEngine, TrialResult};
pub use verifier::{build_pq, max_acceptance, ReducedPair, VerifierSpec};

pub const DEFAULT_Q_FACTOR: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Trial,
    Eigen,
}

impl std::str::FromStr for Backend {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "trial" => Ok(Backend::Trial),
            "eigen" => Ok(Backend::Eigen),
            other => Err(Error::InvalidArgument(format!("unknown backend `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthesisParams {
    pub a: f64,
    pub b: f64,
    pub n_alternations: usize,
    pub t_trials: usize,
    pub backend: Backend,
}

impl SynthesisParams {
    /// Defaults: N from [`default_alternations`], T = 2^{m+2}·q with q = 4.
    pub fn new(a: f64, b: f64, m: usize, backend: Backend) -> Result<Self> {
        check_ab(a, b)?;
        Ok(Self {
            a,
            b,
            n_alternations: default_alternations(a, b, m),
            t_trials: default_trials(m, DEFAULT_Q_FACTOR),
            backend,
        })
    }

    pub fn with_alternations(mut self, n: usize) -> Self {
        self.n_alternations = n;
        self
    }

    pub fn with_trials(mut self, t: usize) -> Self {
        self.t_trials = t;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_ab(self.a, self.b)?;
        if self.n_alternations == 0 || self.t_trials == 0 {
            return Err(Error::InvalidParams("N and T must be positive".into()));
        }
        Ok(())
    }

    /// Smallest agreement count that passes the test, ⌈N(a+b)⌉.
    pub fn agreement_threshold(&self) -> Result<usize> {
        let raw = self.n_alternations as f64 * (self.a + self.b);
        let thr = (raw - 1e-9).ceil().max(0.0) as usize;
        if thr > 2 * self.n_alternations {
            return Err(Error::InvalidParams(format!(
                "threshold {raw} exceeds the {} possible agreements",
                2 * self.n_alternations
            )));
        }
        Ok(thr)
    }
}

fn check_ab(a: f64, b: f64) -> Result<()> {
    if !(a > 0.0 && a < b && b <= 1.0) {
        return Err(Error::InvalidParams(format!("need 0 < a < b <= 1, got a = {a}, b = {b}")));
    }
    Ok(())
}

/// N = max((3a+b)/(b−a)²·(m+2−log₂(b−a)), 16b/(b−a)²), rounded up.
pub fn default_alternations(a: f64, b: f64, m: usize) -> usize {
    let gap = b - a;
    let first = (3.0 * a + b) / (gap * gap) * (m as f64 + 2.0 - gap.log2());
    let second = 16.0 * b / (gap * gap);
    first.max(second).ceil() as usize
}

/// T = 2^{m+2}·q.
pub fn default_trials(m: usize, q_factor: usize) -> usize {
    (1usize << (m + 2)) * q_factor
}
