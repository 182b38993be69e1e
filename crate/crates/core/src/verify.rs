//! Randomized suites for the composition and hiding identities.
//!
//! Instance `i` of a suite draws its networks and input execution from the
//! stream `(seed, i)`, so a suite's report does not depend on scheduling.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::compose::{compose, derive_component_input, is_acyclic_composition, verify_hiding, Composition};
use crate::engine::{BehaviorFingerprint, ProbabilisticExecution};
use crate::error::{Error, Result};
use crate::model::{project_execution, EngineParams, Execution, InputExecution, Network, NeuronId};
use crate::montecarlo::{trial_rng, Sampler};
use crate::random;

/// Residual bound for identities between products of probabilities.
pub const RESIDUAL_TOLERANCE: f64 = 1e-9;
/// Residual bound for the behavior round trip, which only sums and divides.
pub const ROUND_TRIP_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Lemma {
    AcyclicFactorization,
    ComposeOut,
    ComposeOut2,
    Independence,
    Hiding,
    Beh2Equivalence,
}

impl Lemma {
    pub const ALL: [Lemma; 6] = [
        Lemma::AcyclicFactorization,
        Lemma::ComposeOut,
        Lemma::ComposeOut2,
        Lemma::Independence,
        Lemma::Hiding,
        Lemma::Beh2Equivalence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Lemma::AcyclicFactorization => "acyclic-factorization",
            Lemma::ComposeOut => "compose-out",
            Lemma::ComposeOut2 => "compose-out-2",
            Lemma::Independence => "independence",
            Lemma::Hiding => "hiding",
            Lemma::Beh2Equivalence => "beh2-equivalence",
        }
    }

    pub fn parse(s: &str) -> Result<Lemma> {
        Lemma::ALL
            .into_iter()
            .find(|l| l.name() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown lemma `{s}`")))
    }

    pub fn tolerance(self) -> f64 {
        match self {
            Lemma::Beh2Equivalence => ROUND_TRIP_TOLERANCE,
            _ => RESIDUAL_TOLERANCE,
        }
    }

    /// Whether the lemma is about a pair of networks rather than one.
    pub fn needs_pair(self) -> bool {
        !matches!(self, Lemma::Hiding | Lemma::Beh2Equivalence)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SuiteConfig {
    pub instances: usize,
    pub max_neurons: usize,
    pub horizon: usize,
    pub seed: u64,
    /// Sampled executions per instance, for lemmas stated on executions.
    pub samples: usize,
}

impl SuiteConfig {
    pub fn new(instances: usize, max_neurons: usize, horizon: usize, seed: u64) -> Self {
        SuiteConfig { instances, max_neurons, horizon, seed, samples: 8 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteReport {
    pub lemma: Lemma,
    pub instances: usize,
    /// Individual identities evaluated.
    pub checks: u64,
    pub max_residual: f64,
    pub tolerance: f64,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.max_residual <= self.tolerance
    }

    pub fn to_json(&self) -> Value {
        json!({
            "lemma": self.lemma.name(),
            "instances": self.instances,
            "checks": self.checks,
            "max_residual": self.max_residual,
            "tolerance": self.tolerance,
            "passed": self.passed(),
        })
    }
}

/// Every trace of `net` of length `0..=horizon` under `beta_in`.
pub fn all_traces(net: &Network, params: EngineParams, beta_in: &InputExecution, horizon: usize) -> Result<Vec<Execution>> {
    let f = ProbabilisticExecution::new(net, params, beta_in)?.behavior(horizon);
    Ok(f.entries.keys().map(|k| f.view(k).to_execution()).collect())
}

/// Distinct prefixes of length `1..=horizon` of `samples` sampled
/// executions of `net`.
pub fn sampled_executions<R: Rng + ?Sized>(
    net: &Network,
    params: EngineParams,
    beta_in: &InputExecution,
    horizon: usize,
    samples: usize,
    rng: &mut R,
) -> Result<Vec<Execution>> {
    let sampler = Sampler::new(net, params, beta_in)?;
    let mut out: Vec<Execution> = Vec::new();
    for _ in 0..samples {
        let e = sampler.execution(horizon, rng);
        for len in 1..=horizon {
            let p = e.prefix(len);
            if !out.contains(&p) {
                out.push(p);
            }
        }
    }
    Ok(out)
}

/// Number of identities checked and the largest residual for one pair, at
/// `cfg.horizon`, sampling `cfg.samples` executions from `cfg.seed`.
pub fn check_pair(
    lemma: Lemma,
    n1: &Network,
    n2: &Network,
    params: EngineParams,
    beta_in: &InputExecution,
    cfg: &SuiteConfig,
) -> Result<(u64, f64)> {
    let horizon = cfg.horizon;
    let comp = Composition::new(n1, n2, params, beta_in)?;
    let composite = compose(n1, n2)?;
    let fold = |rs: Vec<f64>| (rs.len() as u64, rs.into_iter().fold(0.0, f64::max));
    match lemma {
        Lemma::AcyclicFactorization => acyclic_over_all_traces(n1, n2, params, beta_in, horizon),
        Lemma::ComposeOut => {
            let traces = all_traces(&composite, params, beta_in, horizon)?;
            let rs = traces.iter().filter(|b| b.length() >= 1).map(|b| comp.onestep_factorization(b));
            Ok(fold(rs.collect::<Result<_>>()?))
        }
        Lemma::ComposeOut2 | Lemma::Independence => {
            let mut rng = trial_rng(cfg.seed, 0);
            let execs = sampled_executions(&composite, params, beta_in, horizon, cfg.samples, &mut rng)?;
            let rs = execs.iter().map(|a| {
                if lemma == Lemma::ComposeOut2 {
                    comp.compose_out_2(a).map(|r| r.max())
                } else {
                    comp.execution_independence(a)
                }
            });
            let (n, max) = fold(rs.collect::<Result<_>>()?);
            Ok((if lemma == Lemma::ComposeOut2 { 4 * n } else { n }, max))
        }
        _ => Err(Error::Parameter(format!("`{}` is stated for one network", lemma.name()))),
    }
}

/// The acyclic factorization for every trace up to `horizon`. Component
/// probabilities are read from behavior fingerprints, one per distinct
/// derived input, instead of rerunning the engine for every trace.
pub fn acyclic_over_all_traces(
    n1: &Network,
    n2: &Network,
    params: EngineParams,
    beta_in: &InputExecution,
    horizon: usize,
) -> Result<(u64, f64)> {
    if !is_acyclic_composition(n1, n2) {
        return Err(Error::CyclicComposition);
    }
    let composite = compose(n1, n2)?;
    let f = ProbabilisticExecution::new(&composite, params, beta_in)?.behavior(horizon);
    let mut cache: [BTreeMap<String, BehaviorFingerprint>; 2] = Default::default();
    let mut max: f64 = 0.0;
    for (k, p) in &f.entries {
        let beta = f.view(k).to_execution();
        let mut rhs = 1.0;
        for (j, net) in [(1u8, n1), (2, n2)] {
            let spec = derive_component_input(n1, n2, beta_in, &beta, j, beta.length() + 1)?;
            let key = crate::json::input_to_json(&spec.derived_input).to_string();
            let slot = &mut cache[usize::from(j - 1)];
            if !slot.contains_key(&key) {
                let fj = ProbabilisticExecution::new(net, params, &spec.derived_input)?.behavior(horizon);
                slot.insert(key.clone(), fj);
            }
            rhs *= slot[&key].get(&project_execution(&beta, &net.external())?)?;
        }
        max = max.max((p - rhs).abs());
    }
    Ok((f.entries.len() as u64, max))
}

/// Number of identities checked and the largest residual for one network.
pub fn check_single(
    lemma: Lemma,
    net: &Network,
    hidden: &BTreeSet<NeuronId>,
    params: EngineParams,
    beta_in: &InputExecution,
    horizon: usize,
) -> Result<(u64, f64)> {
    match lemma {
        Lemma::Hiding => {
            let h = crate::compose::hide(net, hidden)?;
            let traces = all_traces(&h, params, beta_in, horizon)?;
            let mut max: f64 = 0.0;
            for b in &traces {
                max = max.max(verify_hiding(net, hidden, params, beta_in, b)?);
            }
            Ok((traces.len() as u64, max))
        }
        Lemma::Beh2Equivalence => {
            let pe = ProbabilisticExecution::new(net, params, beta_in)?;
            let beh = pe.behavior(horizon);
            let beh2 = pe.behavior2(horizon);
            let back = beh2.to_behavior().max_abs_diff(&beh);
            let forth = beh.to_beh2().max_abs_diff(&beh2);
            Ok((beh.entries.len() as u64, back.max(forth)))
        }
        _ => Err(Error::Parameter(format!("`{}` is stated for a pair of networks", lemma.name()))),
    }
}

/// Random non-empty subset of the outputs, or the empty set without outputs.
fn random_hidden<R: Rng + ?Sized>(rng: &mut R, net: &Network) -> BTreeSet<NeuronId> {
    let outs: Vec<NeuronId> = net.outputs().into_iter().collect();
    if outs.is_empty() {
        return BTreeSet::new();
    }
    loop {
        let v: BTreeSet<NeuronId> = outs.iter().filter(|_| rng.gen_bool(0.5)).cloned().collect();
        if !v.is_empty() {
            return v;
        }
    }
}

/// Runs `lemma` on `cfg.instances` random instances in parallel.
pub fn run_suite(lemma: Lemma, cfg: &SuiteConfig) -> Result<SuiteReport> {
    let params = EngineParams::default();
    let results: Vec<(u64, f64)> = (0..cfg.instances)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(cfg.seed, i as u64);
            if lemma.needs_pair() {
                let cyclic = lemma != Lemma::AcyclicFactorization && rng.gen_bool(0.5);
                let (n1, n2) = random::pair(&mut rng, cfg.max_neurons, cyclic);
                let composite = compose(&n1, &n2)?;
                let beta_in = random::input_execution(&mut rng, &composite.inputs(), 3);
                let own = SuiteConfig { seed: rng.gen(), ..*cfg };
                check_pair(lemma, &n1, &n2, params, &beta_in, &own)
            } else {
                let net = random::network(&mut rng, cfg.max_neurons, 2);
                let hidden = random_hidden(&mut rng, &net);
                let beta_in = random::input_execution(&mut rng, &net.inputs(), 3);
                check_single(lemma, &net, &hidden, params, &beta_in, cfg.horizon)
            }
        })
        .collect::<Result<_>>()?;
    Ok(SuiteReport {
        lemma,
        instances: cfg.instances,
        checks: results.iter().map(|r| r.0).sum(),
        max_residual: results.iter().map(|r| r.1).fold(0.0, f64::max),
        tolerance: lemma.tolerance(),
    })
}
