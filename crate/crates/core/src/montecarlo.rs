//! Seeded sampling of executions and empirical event probabilities.
//!
//! Trial `i` draws from a ChaCha8 stream keyed by `(seed, i)`, so results do
//! not depend on how trials are scheduled across threads.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::engine::compiled::{Bits, Compiled, InputBits};
use crate::engine::{BehaviorFingerprint, TraceEvent, TraceKey, TraceView};
use crate::error::{Error, Result};
use crate::model::{EngineParams, Execution, InputExecution, Network, NeuronId};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrialConfig {
    pub trials: u64,
    pub horizon: usize,
    pub seed: u64,
    /// Two-sided confidence level of reported intervals.
    pub confidence: f64,
}

impl TrialConfig {
    pub fn new(trials: u64, horizon: usize, seed: u64) -> Self {
        TrialConfig { trials, horizon, seed, confidence: 0.99 }
    }

    pub fn with_confidence(mut self, confidence: f64) -> Self {
        self.confidence = confidence;
        self
    }

    fn check(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Parameter("at least one trial is needed".into()));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(Error::Parameter(format!("confidence must lie in (0, 1), got {}", self.confidence)));
        }
        Ok(())
    }
}

/// Two-sided confidence level of a ±`k`σ normal interval.
pub fn confidence_for_sigmas(k: f64) -> f64 {
    let n = Normal::standard();
    1.0 - 2.0 * (1.0 - n.cdf(k))
}

/// Normal quantile `z` with `P(|Z| ≤ z) = confidence`.
pub fn z_for_confidence(confidence: f64) -> f64 {
    Normal::standard().inverse_cdf(1.0 - (1.0 - confidence) / 2.0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub successes: u64,
    pub trials: u64,
}

impl Estimate {
    /// Normal-approximation interval around `successes / trials`; it
    /// collapses to a point when every trial agrees.
    pub fn from_counts(successes: u64, trials: u64, confidence: f64) -> Self {
        let n = trials as f64;
        let p = successes as f64 / n;
        let half = z_for_confidence(confidence) * (p * (1.0 - p) / n).sqrt();
        Estimate { estimate: p, ci_low: (p - half).max(0.0), ci_high: (p + half).min(1.0), successes, trials }
    }

    pub fn contains(&self, p: f64) -> bool {
        self.ci_low <= p && p <= self.ci_high
    }
}

pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Draws executions of one network under one input execution.
pub struct Sampler {
    c: Compiled,
    input: InputBits,
    lambda: f64,
    external: Vec<NeuronId>,
    ext_pos: Vec<usize>,
}

impl Sampler {
    pub fn new(net: &Network, params: EngineParams, beta_in: &InputExecution) -> Result<Self> {
        let c = Compiled::new(net)?;
        let input = InputBits::new(&c, beta_in)?;
        let ext_pos: Vec<usize> = (0..c.names.len()).filter(|&i| c.ext_mask() >> i & 1 == 1).collect();
        Ok(Sampler {
            external: ext_pos.iter().map(|&i| c.names[i].clone()).collect(),
            ext_pos,
            lambda: params.lambda(),
            input,
            c,
        })
    }

    pub fn external(&self) -> &[NeuronId] {
        &self.external
    }

    /// Configurations at times `0..=horizon` as bit rows over all neurons.
    fn configs<R: Rng + ?Sized>(&self, horizon: usize, rng: &mut R) -> Vec<Bits> {
        let mut out = Vec::with_capacity(horizon + 1);
        let mut state = self.input.at(0) | self.c.f0;
        out.push(state);
        for t in 1..=horizon {
            let mut next = self.input.at(t);
            for &u in &self.c.lc {
                let (pf, _) = crate::model::sigmoid_pair(self.c.potential(state, u) / self.lambda);
                if rng.gen::<f64>() < pf {
                    next |= 1 << u;
                }
            }
            state = next;
            out.push(state);
        }
        out
    }

    pub fn execution<R: Rng + ?Sized>(&self, horizon: usize, rng: &mut R) -> Execution {
        let all = u64::MAX >> (64 - self.c.names.len().max(1));
        let configs = self.configs(horizon, rng).into_iter().map(|s| self.c.pattern(s, all)).collect();
        Execution::new(configs).expect("uniform domain")
    }

    /// Trace rows over the external neurons (bit `j` = `external()[j]`).
    pub fn trace_rows<R: Rng + ?Sized>(&self, horizon: usize, rng: &mut R) -> Vec<u64> {
        self.configs(horizon, rng)
            .into_iter()
            .map(|s| self.ext_pos.iter().enumerate().fold(0, |acc, (j, &i)| acc | ((s >> i & 1) << j)))
            .collect()
    }

    /// Trace rows of every trial, in trial order.
    pub fn sample_traces(&self, cfg: &TrialConfig) -> Result<Vec<Vec<u64>>> {
        cfg.check()?;
        Ok((0..cfg.trials)
            .into_par_iter()
            .map(|i| self.trace_rows(cfg.horizon, &mut trial_rng(cfg.seed, i)))
            .collect())
    }

    pub fn estimate(&self, event: &dyn TraceEvent, cfg: &TrialConfig) -> Result<Estimate> {
        cfg.check()?;
        let successes = (0..cfg.trials)
            .into_par_iter()
            .filter(|&i| {
                let rows = self.trace_rows(cfg.horizon, &mut trial_rng(cfg.seed, i));
                event.accepts(&TraceView::new(&self.external, &rows))
            })
            .count() as u64;
        Ok(Estimate::from_counts(successes, cfg.trials, cfg.confidence))
    }
}

pub fn sample_execution(
    net: &Network,
    params: EngineParams,
    beta_in: &InputExecution,
    horizon: usize,
    seed: u64,
) -> Result<Execution> {
    let s = Sampler::new(net, params, beta_in)?;
    Ok(s.execution(horizon, &mut ChaCha8Rng::seed_from_u64(seed)))
}

pub fn estimate_event(
    net: &Network,
    params: EngineParams,
    beta_in: &InputExecution,
    event: &dyn TraceEvent,
    cfg: &TrialConfig,
) -> Result<Estimate> {
    Sampler::new(net, params, beta_in)?.estimate(event, cfg)
}

/// Fraction of trials whose trace starts with each observed prefix.
pub fn empirical_fingerprint(
    net: &Network,
    params: EngineParams,
    beta_in: &InputExecution,
    cfg: &TrialConfig,
) -> Result<BehaviorFingerprint> {
    let s = Sampler::new(net, params, beta_in)?;
    let traces = s.sample_traces(cfg)?;
    let mut counts: BTreeMap<TraceKey, u64> = BTreeMap::new();
    for rows in &traces {
        for len in 0..rows.len() {
            *counts.entry(TraceKey(rows[..=len].to_vec())).or_insert(0) += 1;
        }
    }
    let n = cfg.trials as f64;
    Ok(BehaviorFingerprint {
        horizon: cfg.horizon,
        lambda: params.lambda(),
        input: beta_in.clone(),
        external: s.external().to_vec(),
        entries: counts.into_iter().map(|(k, c)| (k, c as f64 / n)).collect(),
        trials: Some(cfg.trials),
    })
}
