//! Brute-force reference probabilities computed straight from the network
//! definition, by enumerating every unconstrained firing value.

#![allow(dead_code)]

use std::collections::BTreeMap;

use snnet::{Execution, FiringPattern, InputExecution, Network, NeuronClass, NeuronId};

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub struct Oracle<'a> {
    net: &'a Network,
    lambda: f64,
    beta_in: &'a InputExecution,
    lc: Vec<NeuronId>,
}

impl<'a> Oracle<'a> {
    pub fn new(net: &'a Network, lambda: f64, beta_in: &'a InputExecution) -> Self {
        let lc = net.neurons().iter().filter(|(_, s)| s.class != NeuronClass::Input).map(|(u, _)| u.clone()).collect();
        Oracle { net, lambda, beta_in, lc }
    }

    fn initial(&self) -> BTreeMap<NeuronId, bool> {
        self.net
            .neurons()
            .iter()
            .map(|(u, s)| {
                let v = match s.class {
                    NeuronClass::Input => self.beta_in.value(0, u),
                    _ => self.net.f0().get(u).unwrap_or(false),
                };
                (u.clone(), v)
            })
            .collect()
    }

    /// Probability that `u` fires after configuration `prev`.
    fn fire(&self, prev: &BTreeMap<NeuronId, bool>, u: &NeuronId) -> f64 {
        let mut pot = -self.net.bias(u).unwrap();
        for e in self.net.edges().iter().filter(|e| &e.to == u) {
            if prev[&e.from] {
                pot += e.weight;
            }
        }
        sigmoid(pot / self.lambda)
    }

    /// Probability of the cone of executions whose step `t` agrees with
    /// `steps[t]` on that pattern's domain.
    pub fn cone(&self, steps: &[FiringPattern]) -> f64 {
        let c0 = self.initial();
        if steps[0].iter().any(|(u, v)| c0.get(u) != Some(&v)) {
            return 0.0;
        }
        self.extend(&c0, steps, 1)
    }

    fn extend(&self, prev: &BTreeMap<NeuronId, bool>, steps: &[FiringPattern], t: usize) -> f64 {
        if t == steps.len() {
            return 1.0;
        }
        let mut fixed = BTreeMap::new();
        for (u, s) in self.net.neurons() {
            if s.class == NeuronClass::Input {
                let v = self.beta_in.value(t, u);
                if steps[t].get(u).is_some_and(|w| w != v) {
                    return 0.0;
                }
                fixed.insert(u.clone(), v);
            }
        }
        let free: Vec<&NeuronId> = self.lc.iter().filter(|u| steps[t].get(u).is_none()).collect();
        let mut total = 0.0;
        for assign in 0u64..1 << free.len() {
            let mut next = fixed.clone();
            for u in &self.lc {
                next.insert(u.clone(), steps[t].get(u).unwrap_or(false));
            }
            for (i, u) in free.iter().enumerate() {
                next.insert((*u).clone(), assign >> i & 1 == 1);
            }
            let mut p = 1.0;
            for u in &self.lc {
                let q = self.fire(prev, u);
                p *= if next[u] { q } else { 1.0 - q };
            }
            if p > 0.0 {
                total += p * self.extend(&next, steps, t + 1);
            }
        }
        total
    }

    pub fn of(&self, e: &Execution) -> f64 {
        self.cone(e.configs())
    }

    /// Probability of `num` given `den`, both as cones.
    pub fn conditional(&self, num: &[FiringPattern], den: &[FiringPattern]) -> f64 {
        self.cone(num) / self.cone(den)
    }
}

/// Every trace of `net` of length `len` consistent with `beta_in` and the
/// initial outputs.
pub fn traces(net: &Network, beta_in: &InputExecution, len: usize) -> Vec<Execution> {
    let outs: Vec<NeuronId> = net.outputs().into_iter().collect();
    let inputs = net.inputs();
    let mut out = Vec::new();
    for assign in 0u64..1 << (outs.len() * len) {
        let configs: Vec<FiringPattern> = (0..=len)
            .map(|t| {
                let mut p: FiringPattern = inputs.iter().map(|u| (u.clone(), beta_in.value(t, u))).collect();
                for (i, u) in outs.iter().enumerate() {
                    let v = if t == 0 {
                        net.f0().get(u).unwrap_or(false)
                    } else {
                        assign >> ((t - 1) * outs.len() + i) & 1 == 1
                    };
                    p.set(u.clone(), v);
                }
                p
            })
            .collect();
        out.push(Execution::new(configs).unwrap());
    }
    out
}

pub fn stable(pairs: &[(&str, bool)]) -> InputExecution {
    InputExecution::stable(pairs.iter().map(|(u, v)| (NeuronId::from(*u), *v)).collect())
}

pub fn restrict(p: &FiringPattern, keep: &std::collections::BTreeSet<NeuronId>) -> FiringPattern {
    p.iter().filter(|(u, _)| keep.contains(*u)).map(|(u, v)| (u.clone(), v)).collect()
}
