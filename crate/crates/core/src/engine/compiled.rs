//! Bit-level view of a network and the forward filter over configurations.
//!
//! Neuron `i` of the canonical (lexicographic) order is bit `i` of a `u64`.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::model::{sigmoid_pair, Extension, FiringPattern, InputExecution, Network, NeuronClass, NeuronId};

pub(crate) type Bits = u64;

#[derive(Clone, Debug)]
pub(crate) struct Compiled {
    pub names: Vec<NeuronId>,
    pub input_mask: Bits,
    pub output_mask: Bits,
    pub internal_mask: Bits,
    pub lc_mask: Bits,
    /// Neurons with at least one outgoing edge.
    pub read_mask: Bits,
    pub lc: Vec<usize>,
    pub bias: Vec<f64>,
    pub incoming: Vec<Vec<(usize, f64)>>,
    pub f0: Bits,
}

impl Compiled {
    pub fn new(net: &Network) -> Result<Self> {
        let names: Vec<NeuronId> = net.neurons().keys().cloned().collect();
        if names.len() > 64 {
            return Err(Error::TooManyNeurons(names.len()));
        }
        let index: BTreeMap<&NeuronId, usize> = names.iter().enumerate().map(|(i, u)| (u, i)).collect();
        let mut c = Compiled {
            input_mask: 0,
            output_mask: 0,
            internal_mask: 0,
            lc_mask: 0,
            read_mask: 0,
            lc: Vec::new(),
            bias: vec![0.0; names.len()],
            incoming: vec![Vec::new(); names.len()],
            f0: 0,
            names: Vec::new(),
        };
        for (i, (u, spec)) in net.neurons().iter().enumerate() {
            let bit = 1u64 << i;
            match spec.class {
                NeuronClass::Input => c.input_mask |= bit,
                NeuronClass::Output => c.output_mask |= bit,
                NeuronClass::Internal => c.internal_mask |= bit,
            }
            if spec.class.is_locally_controlled() {
                c.lc_mask |= bit;
                c.lc.push(i);
                c.bias[i] = spec.bias.unwrap_or(0.0);
                if net.f0().get(u).unwrap_or(false) {
                    c.f0 |= bit;
                }
            }
        }
        for e in net.edges() {
            let (Some(&from), Some(&to)) = (index.get(&e.from), index.get(&e.to)) else {
                return Err(Error::UnknownNeuron(e.from.clone()));
            };
            c.incoming[to].push((from, e.weight));
            c.read_mask |= 1 << from;
        }
        c.names = names;
        Ok(c)
    }

    pub fn ext_mask(&self) -> Bits {
        self.input_mask | self.output_mask
    }

    pub fn index(&self, u: &NeuronId) -> Option<usize> {
        self.names.binary_search(u).ok()
    }

    /// `(mask, values)` of a pattern whose domain lies within the network.
    pub fn step_of(&self, p: &FiringPattern) -> Result<Step> {
        let mut s = Step::default();
        for (u, v) in p.iter() {
            let i = self.index(u).ok_or_else(|| Error::UnknownNeuron(u.clone()))?;
            s.mask |= 1 << i;
            if v {
                s.values |= 1 << i;
            }
        }
        Ok(s)
    }

    pub fn pattern(&self, bits: Bits, mask: Bits) -> FiringPattern {
        self.names
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(i, u)| (u.clone(), bits >> i & 1 == 1))
            .collect()
    }

    pub fn names_in(&self, mask: Bits) -> Vec<NeuronId> {
        self.names
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, u)| u.clone())
            .collect()
    }

    pub fn potential(&self, state: Bits, u: usize) -> f64 {
        let mut sum = 0.0;
        for &(v, w) in &self.incoming[u] {
            if state >> v & 1 == 1 {
                sum += w;
            }
        }
        sum - self.bias[u]
    }

    /// `(p_fire, p_silent)` for every locally controlled neuron, in `lc` order.
    pub fn probs(&self, state: Bits, lambda: f64) -> Vec<(f64, f64)> {
        self.lc.iter().map(|&u| sigmoid_pair(self.potential(state, u) / lambda)).collect()
    }
}

/// Input execution as bit rows.
#[derive(Clone, Debug)]
pub(crate) struct InputBits {
    prefix: Vec<Bits>,
    extension: Extension,
}

impl InputBits {
    pub fn new(c: &Compiled, beta_in: &InputExecution) -> Result<Self> {
        let expected: BTreeSet<NeuronId> = c.names_in(c.input_mask).into_iter().collect();
        if beta_in.inputs() != &expected {
            return Err(Error::DomainMismatch(format!(
                "input execution covers {:?} but the network's inputs are {:?}",
                beta_in.inputs(),
                expected
            )));
        }
        let prefix = beta_in
            .prefix()
            .iter()
            .map(|p| c.step_of(p).map(|s| s.values))
            .collect::<Result<Vec<_>>>()?;
        Ok(InputBits { prefix, extension: beta_in.extension() })
    }

    pub fn at(&self, t: usize) -> Bits {
        let len = self.prefix.len();
        if t < len {
            return self.prefix[t];
        }
        match self.extension {
            Extension::Zeros => 0,
            Extension::HoldLast => self.prefix[len - 1],
            Extension::Cycle { start } => self.prefix[start + (t - start) % (len - start)],
        }
    }
}

/// Constraint on one configuration: the neurons in `mask` must take the
/// values in `values`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub(crate) struct Step {
    pub mask: Bits,
    pub values: Bits,
}

impl Step {
    pub fn free() -> Self {
        Step::default()
    }

    pub fn admits(&self, config: Bits) -> bool {
        (config ^ self.values) & self.mask == 0
    }
}

/// Probability mass over configurations reached at time `t`, restricted to
/// the configurations admitted by the constraints seen so far.
///
/// Keys are configurations masked by the filter's `keep` mask; states are
/// kept sorted so every sum is taken in the same order.
#[derive(Clone, Debug)]
pub(crate) struct FilterState {
    pub t: usize,
    pub states: Vec<(Bits, f64)>,
}

impl FilterState {
    pub fn total(&self) -> f64 {
        self.states.iter().map(|(_, m)| m).sum()
    }
}

/// Per-state firing probabilities, computed once and shared by every
/// constraint applied at the next step.
pub(crate) struct Prepared {
    t: usize,
    entries: Vec<(f64, Vec<(f64, f64)>)>,
}

#[derive(Clone, Copy)]
pub(crate) struct Dynamics<'a> {
    pub c: &'a Compiled,
    pub input: &'a InputBits,
    pub lambda: f64,
    /// Neurons whose values are carried in filter keys. Unconstrained
    /// locally controlled neurons outside this mask are summed out.
    pub keep: Bits,
}

impl<'a> Dynamics<'a> {
    pub fn new(c: &'a Compiled, input: &'a InputBits, lambda: f64) -> Self {
        Dynamics { c, input, lambda, keep: c.read_mask }
    }

    /// Keep every neuron in filter keys.
    pub fn keeping_all(mut self) -> Self {
        self.keep = u64::MAX;
        self
    }

    pub fn initial_config(&self) -> Bits {
        self.input.at(0) | self.c.f0
    }

    pub fn start(&self, step: Step) -> FilterState {
        let c0 = self.initial_config();
        let states = if step.admits(c0) { vec![(c0 & self.keep, 1.0)] } else { Vec::new() };
        FilterState { t: 0, states }
    }

    pub fn prepare(&self, f: &FilterState) -> Prepared {
        Prepared {
            t: f.t,
            entries: f.states.iter().map(|&(s, m)| (m, self.c.probs(s, self.lambda))).collect(),
        }
    }

    pub fn advance(&self, f: &FilterState, step: Step) -> FilterState {
        self.advance_prepared(&self.prepare(f), step)
    }

    pub fn advance_prepared(&self, p: &Prepared, step: Step) -> FilterState {
        let t = p.t + 1;
        let inp = self.input.at(t);
        let c = self.c;
        if (inp ^ step.values) & step.mask & c.input_mask != 0 {
            return FilterState { t, states: Vec::new() };
        }
        let fixed = inp | (step.values & step.mask & c.lc_mask);
        let mut next: BTreeMap<Bits, f64> = BTreeMap::new();
        let mut free: Vec<(usize, f64, f64)> = Vec::new();
        for (mass, probs) in &p.entries {
            let mut base = *mass;
            free.clear();
            for (j, &u) in c.lc.iter().enumerate() {
                let (pf, ps) = probs[j];
                if step.mask >> u & 1 == 1 {
                    base *= if step.values >> u & 1 == 1 { pf } else { ps };
                } else if self.keep >> u & 1 == 1 {
                    free.push((u, pf, ps));
                }
            }
            if base == 0.0 {
                continue;
            }
            for assign in 0u64..(1u64 << free.len()) {
                let mut prob = base;
                let mut bits = fixed;
                for (b, &(u, pf, ps)) in free.iter().enumerate() {
                    if assign >> b & 1 == 1 {
                        prob *= pf;
                        bits |= 1 << u;
                    } else {
                        prob *= ps;
                    }
                }
                *next.entry(bits & self.keep).or_insert(0.0) += prob;
            }
        }
        FilterState { t, states: next.into_iter().collect() }
    }

    /// Probability of the cone described by one constraint per time step.
    pub fn cone(&self, steps: &[Step]) -> f64 {
        let Some((first, rest)) = steps.split_first() else {
            return 1.0;
        };
        let mut f = self.start(*first);
        for s in rest {
            if f.states.is_empty() {
                return 0.0;
            }
            f = self.advance(&f, *s);
        }
        f.total()
    }
}
