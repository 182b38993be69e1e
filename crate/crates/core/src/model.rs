//! Networks, firing patterns, executions and the per-neuron firing rule.
//!
//! Neurons are identified by name. Every ordered collection in this module
//! uses the lexicographic order of names, so enumeration and serialization
//! are canonical.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NeuronId(String);

impl NeuronId {
    pub fn new(name: impl Into<String>) -> Self {
        NeuronId(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NeuronId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NeuronId {
    fn from(s: &str) -> Self {
        NeuronId(s.to_owned())
    }
}

impl From<String> for NeuronId {
    fn from(s: String) -> Self {
        NeuronId(s)
    }
}

impl std::borrow::Borrow<str> for NeuronId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

/// Builds a set of neuron ids from anything string-like.
pub fn neuron_set<I, S>(names: I) -> BTreeSet<NeuronId>
where
    I: IntoIterator<Item = S>,
    S: Into<NeuronId>,
{
    names.into_iter().map(Into::into).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NeuronClass {
    Input,
    Output,
    Internal,
}

impl NeuronClass {
    pub fn is_locally_controlled(self) -> bool {
        !matches!(self, NeuronClass::Input)
    }

    pub fn is_external(self) -> bool {
        !matches!(self, NeuronClass::Internal)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NeuronSpec {
    pub class: NeuronClass,
    /// Absent for input neurons.
    pub bias: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Edge {
    pub from: NeuronId,
    pub to: NeuronId,
    pub weight: f64,
}

/// A structural problem found by [`validate_network`].
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    EmptyName,
    InputHasIncomingEdge { from: NeuronId, to: NeuronId },
    ZeroWeight { from: NeuronId, to: NeuronId },
    NonFiniteWeight { from: NeuronId, to: NeuronId },
    UnknownEndpoint { from: NeuronId, to: NeuronId },
    DuplicateEdge { from: NeuronId, to: NeuronId },
    MissingBias(NeuronId),
    NonFiniteBias(NeuronId),
    InputWithBias(NeuronId),
    InitialMissing(NeuronId),
    InitialOnNonLocal(NeuronId),
}

impl Violation {
    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Violation::EmptyName => "empty-name",
            Violation::InputHasIncomingEdge { .. } => "input-has-incoming-edge",
            Violation::ZeroWeight { .. } => "zero-weight",
            Violation::NonFiniteWeight { .. } => "non-finite-weight",
            Violation::UnknownEndpoint { .. } => "unknown-endpoint",
            Violation::DuplicateEdge { .. } => "duplicate-edge",
            Violation::MissingBias(_) => "missing-bias",
            Violation::NonFiniteBias(_) => "non-finite-bias",
            Violation::InputWithBias(_) => "input-with-bias",
            Violation::InitialMissing(_) => "initial-missing",
            Violation::InitialOnNonLocal(_) => "initial-on-non-local",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyName => write!(f, "empty neuron name"),
            Violation::InputHasIncomingEdge { from, to } => {
                write!(f, "edge {from}->{to} enters input neuron {to}")
            }
            Violation::ZeroWeight { from, to } => write!(f, "edge {from}->{to} has weight 0"),
            Violation::NonFiniteWeight { from, to } => {
                write!(f, "edge {from}->{to} has a non-finite weight")
            }
            Violation::UnknownEndpoint { from, to } => {
                write!(f, "edge {from}->{to} names an unknown neuron")
            }
            Violation::DuplicateEdge { from, to } => write!(f, "edge {from}->{to} is repeated"),
            Violation::MissingBias(u) => write!(f, "neuron {u} has no bias"),
            Violation::NonFiniteBias(u) => write!(f, "neuron {u} has a non-finite bias"),
            Violation::InputWithBias(u) => write!(f, "input neuron {u} has a bias"),
            Violation::InitialMissing(u) => write!(f, "neuron {u} has no initial firing state"),
            Violation::InitialOnNonLocal(u) => {
                write!(f, "initial pattern assigns {u}, which is not a non-input neuron")
            }
        }
    }
}

/// A network: classified neurons with biases, weighted edges and the
/// initial firing pattern of the non-input neurons.
///
/// Construction does not validate; use [`validate_network`] or
/// [`NetworkBuilder::build`].
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    neurons: BTreeMap<NeuronId, NeuronSpec>,
    edges: Vec<Edge>,
    f0: FiringPattern,
}

impl Network {
    pub fn from_parts(
        neurons: BTreeMap<NeuronId, NeuronSpec>,
        mut edges: Vec<Edge>,
        f0: FiringPattern,
    ) -> Self {
        edges.sort_by(|a, b| (&a.from, &a.to).cmp(&(&b.from, &b.to)));
        Network { neurons, edges, f0 }
    }

    pub fn neurons(&self) -> &BTreeMap<NeuronId, NeuronSpec> {
        &self.neurons
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn f0(&self) -> &FiringPattern {
        &self.f0
    }

    pub fn contains(&self, u: &NeuronId) -> bool {
        self.neurons.contains_key(u)
    }

    pub fn class(&self, u: &NeuronId) -> Option<NeuronClass> {
        self.neurons.get(u).map(|s| s.class)
    }

    pub fn bias(&self, u: &NeuronId) -> Option<f64> {
        self.neurons.get(u).and_then(|s| s.bias)
    }

    pub fn weight(&self, from: &NeuronId, to: &NeuronId) -> Option<f64> {
        self.edges
            .iter()
            .find(|e| &e.from == from && &e.to == to)
            .map(|e| e.weight)
    }

    pub fn neuron_ids(&self) -> BTreeSet<NeuronId> {
        self.neurons.keys().cloned().collect()
    }

    fn of_class(&self, pred: impl Fn(NeuronClass) -> bool) -> BTreeSet<NeuronId> {
        self.neurons
            .iter()
            .filter(|(_, s)| pred(s.class))
            .map(|(u, _)| u.clone())
            .collect()
    }

    pub fn inputs(&self) -> BTreeSet<NeuronId> {
        self.of_class(|c| c == NeuronClass::Input)
    }

    pub fn outputs(&self) -> BTreeSet<NeuronId> {
        self.of_class(|c| c == NeuronClass::Output)
    }

    pub fn internals(&self) -> BTreeSet<NeuronId> {
        self.of_class(|c| c == NeuronClass::Internal)
    }

    /// Inputs and outputs.
    pub fn external(&self) -> BTreeSet<NeuronId> {
        self.of_class(NeuronClass::is_external)
    }

    /// Outputs and internals.
    pub fn locally_controlled(&self) -> BTreeSet<NeuronId> {
        self.of_class(NeuronClass::is_locally_controlled)
    }

    /// Returns a copy with neurons renamed through `map`; unmapped names are kept.
    pub fn rename(&self, map: &BTreeMap<NeuronId, NeuronId>) -> Network {
        let r = |u: &NeuronId| map.get(u).cloned().unwrap_or_else(|| u.clone());
        let neurons = self.neurons.iter().map(|(u, s)| (r(u), s.clone())).collect();
        let edges = self
            .edges
            .iter()
            .map(|e| Edge { from: r(&e.from), to: r(&e.to), weight: e.weight })
            .collect();
        let f0 = FiringPattern::from_iter(self.f0.iter().map(|(u, v)| (r(u), v)));
        Network::from_parts(neurons, edges, f0)
    }

    pub(crate) fn with_classes(&self, classes: &BTreeMap<NeuronId, NeuronClass>) -> Network {
        let mut out = self.clone();
        for (u, c) in classes {
            if let Some(spec) = out.neurons.get_mut(u) {
                spec.class = *c;
            }
        }
        out
    }
}

/// Incremental construction of a [`Network`].
#[derive(Default)]
pub struct NetworkBuilder {
    neurons: BTreeMap<NeuronId, NeuronSpec>,
    edges: Vec<Edge>,
    f0: BTreeMap<NeuronId, bool>,
}

impl NetworkBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn input(mut self, name: impl Into<NeuronId>) -> Self {
        self.neurons
            .insert(name.into(), NeuronSpec { class: NeuronClass::Input, bias: None });
        self
    }

    pub fn output(self, name: impl Into<NeuronId>, bias: f64, init: bool) -> Self {
        self.local(name, NeuronClass::Output, bias, init)
    }

    pub fn internal(self, name: impl Into<NeuronId>, bias: f64, init: bool) -> Self {
        self.local(name, NeuronClass::Internal, bias, init)
    }

    fn local(mut self, name: impl Into<NeuronId>, class: NeuronClass, bias: f64, init: bool) -> Self {
        let name = name.into();
        self.f0.insert(name.clone(), init);
        self.neurons.insert(name, NeuronSpec { class, bias: Some(bias) });
        self
    }

    pub fn edge(mut self, from: impl Into<NeuronId>, to: impl Into<NeuronId>, weight: f64) -> Self {
        self.edges.push(Edge { from: from.into(), to: to.into(), weight });
        self
    }

    pub fn build(self) -> Result<Network> {
        let net = Network::from_parts(self.neurons, self.edges, FiringPattern::from_map(self.f0));
        let violations = validate_network(&net);
        if violations.is_empty() {
            Ok(net)
        } else {
            Err(Error::InvalidNetwork(violations))
        }
    }
}

/// Returns every violated structural invariant; empty iff the network is valid.
pub fn validate_network(net: &Network) -> Vec<Violation> {
    let mut out = Vec::new();
    for (u, spec) in &net.neurons {
        if u.as_str().is_empty() {
            out.push(Violation::EmptyName);
        }
        match (spec.class, spec.bias) {
            (NeuronClass::Input, Some(_)) => out.push(Violation::InputWithBias(u.clone())),
            (NeuronClass::Input, None) => {}
            (_, None) => out.push(Violation::MissingBias(u.clone())),
            (_, Some(b)) if !b.is_finite() => out.push(Violation::NonFiniteBias(u.clone())),
            _ => {}
        }
        if spec.class.is_locally_controlled() && net.f0.get(u).is_none() {
            out.push(Violation::InitialMissing(u.clone()));
        }
    }
    for (u, _) in net.f0.iter() {
        if !net.class(u).is_some_and(NeuronClass::is_locally_controlled) {
            out.push(Violation::InitialOnNonLocal(u.clone()));
        }
    }
    let mut seen = BTreeSet::new();
    for e in &net.edges {
        let (from, to) = (e.from.clone(), e.to.clone());
        if !net.contains(&e.from) || !net.contains(&e.to) {
            out.push(Violation::UnknownEndpoint { from: from.clone(), to: to.clone() });
        }
        if net.class(&e.to) == Some(NeuronClass::Input) {
            out.push(Violation::InputHasIncomingEdge { from: from.clone(), to: to.clone() });
        }
        if e.weight == 0.0 {
            out.push(Violation::ZeroWeight { from: from.clone(), to: to.clone() });
        } else if !e.weight.is_finite() {
            out.push(Violation::NonFiniteWeight { from: from.clone(), to: to.clone() });
        }
        if !seen.insert((from.clone(), to.clone())) {
            out.push(Violation::DuplicateEdge { from, to });
        }
    }
    out
}

/// A mapping from a set of neurons to {0, 1}.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FiringPattern(BTreeMap<NeuronId, bool>);

impl FiringPattern {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_map(map: BTreeMap<NeuronId, bool>) -> Self {
        FiringPattern(map)
    }

    /// Pattern assigning `value` to every neuron in `domain`.
    pub fn uniform<'a>(domain: impl IntoIterator<Item = &'a NeuronId>, value: bool) -> Self {
        FiringPattern(domain.into_iter().map(|u| (u.clone(), value)).collect())
    }

    /// Pattern over `domain` in which exactly the neurons in `firing` fire.
    pub fn with_firing<'a>(
        domain: impl IntoIterator<Item = &'a NeuronId>,
        firing: &[&str],
    ) -> Self {
        FiringPattern(
            domain
                .into_iter()
                .map(|u| (u.clone(), firing.contains(&u.as_str())))
                .collect(),
        )
    }

    pub fn get(&self, u: &NeuronId) -> Option<bool> {
        self.0.get(u).copied()
    }

    pub fn fires(&self, u: &str) -> bool {
        self.0.get(u).copied().unwrap_or(false)
    }

    pub fn set(&mut self, u: NeuronId, v: bool) {
        self.0.insert(u, v);
    }

    pub fn domain(&self) -> BTreeSet<NeuronId> {
        self.0.keys().cloned().collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&NeuronId, bool)> {
        self.0.iter().map(|(u, v)| (u, *v))
    }

    /// Restriction to `subset`, which must be contained in the domain.
    pub fn project(&self, subset: &BTreeSet<NeuronId>) -> Result<FiringPattern> {
        let mut out = BTreeMap::new();
        for u in subset {
            match self.0.get(u) {
                Some(v) => {
                    out.insert(u.clone(), *v);
                }
                None => {
                    return Err(Error::DomainMismatch(format!(
                        "cannot project onto {u}: not in the pattern's domain"
                    )))
                }
            }
        }
        Ok(FiringPattern(out))
    }

    /// Union of two patterns that agree on their common neurons.
    pub fn merge(&self, other: &FiringPattern) -> Result<FiringPattern> {
        let mut out = self.0.clone();
        for (u, v) in &other.0 {
            if let Some(prev) = out.insert(u.clone(), *v) {
                if prev != *v {
                    return Err(Error::DomainMismatch(format!("patterns disagree on {u}")));
                }
            }
        }
        Ok(FiringPattern(out))
    }
}

impl FromIterator<(NeuronId, bool)> for FiringPattern {
    fn from_iter<T: IntoIterator<Item = (NeuronId, bool)>>(iter: T) -> Self {
        FiringPattern(iter.into_iter().collect())
    }
}

/// A finite sequence of firing patterns over one common domain.
///
/// Its length is the number of configurations minus one.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Execution {
    configs: Vec<FiringPattern>,
}

impl Execution {
    pub fn new(configs: Vec<FiringPattern>) -> Result<Self> {
        let Some(first) = configs.first() else {
            return Err(Error::DomainMismatch("an execution needs at least one configuration".into()));
        };
        let domain = first.domain();
        if configs.iter().any(|c| c.0.keys().ne(domain.iter())) {
            return Err(Error::DomainMismatch(
                "all configurations of an execution must share one domain".into(),
            ));
        }
        Ok(Execution { configs })
    }

    pub fn configs(&self) -> &[FiringPattern] {
        &self.configs
    }

    pub fn length(&self) -> usize {
        self.configs.len() - 1
    }

    pub fn domain(&self) -> BTreeSet<NeuronId> {
        self.configs[0].domain()
    }

    pub fn last(&self) -> &FiringPattern {
        self.configs.last().expect("non-empty")
    }

    /// The prefix of the given length (`length + 1` configurations).
    pub fn prefix(&self, length: usize) -> Execution {
        assert!(length <= self.length(), "prefix longer than execution");
        Execution { configs: self.configs[..=length].to_vec() }
    }

    /// The one-step prefix; `None` for length 0.
    pub fn one_step_prefix(&self) -> Option<Execution> {
        (self.length() > 0).then(|| self.prefix(self.length() - 1))
    }

    pub fn project(&self, subset: &BTreeSet<NeuronId>) -> Result<Execution> {
        let configs = self
            .configs
            .iter()
            .map(|c| c.project(subset))
            .collect::<Result<Vec<_>>>()?;
        Ok(Execution { configs })
    }

    /// Appends one configuration over the same domain.
    pub fn extended(&self, next: FiringPattern) -> Result<Execution> {
        let mut configs = self.configs.clone();
        configs.push(next);
        Execution::new(configs)
    }
}

/// Projection of a pattern onto `subset`.
pub fn project_pattern(p: &FiringPattern, subset: &BTreeSet<NeuronId>) -> Result<FiringPattern> {
    p.project(subset)
}

/// Projection of an execution onto `subset`, applied per configuration.
pub fn project_execution(e: &Execution, subset: &BTreeSet<NeuronId>) -> Result<Execution> {
    e.project(subset)
}

/// Projection of an execution of `net` onto its external neurons.
pub fn trace(net: &Network, alpha: &Execution) -> Result<Execution> {
    alpha.project(&net.external())
}

/// How an input execution continues after its explicit prefix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Extension {
    /// Every input is 0 after the prefix.
    #[default]
    Zeros,
    /// The last prefix pattern repeats forever.
    HoldLast,
    /// `prefix[start..]` repeats forever after the prefix.
    Cycle { start: usize },
}

/// An infinite input execution, represented by a finite prefix and a rule
/// for extending it.
#[derive(Clone, Debug, PartialEq)]
pub struct InputExecution {
    inputs: BTreeSet<NeuronId>,
    prefix: Vec<FiringPattern>,
    extension: Extension,
}

impl InputExecution {
    pub fn new(prefix: Vec<FiringPattern>, extension: Extension) -> Result<Self> {
        let Some(first) = prefix.first() else {
            return Err(Error::DomainMismatch("input execution prefix is empty".into()));
        };
        let inputs = first.domain();
        if prefix.iter().any(|p| p.0.keys().ne(inputs.iter())) {
            return Err(Error::DomainMismatch(
                "input execution patterns must share one domain".into(),
            ));
        }
        if let Extension::Cycle { start } = extension {
            if start >= prefix.len() {
                return Err(Error::DomainMismatch("cycle start lies beyond the prefix".into()));
            }
        }
        Ok(InputExecution { inputs, prefix, extension })
    }

    /// The same pattern at every time.
    pub fn stable(pattern: FiringPattern) -> Self {
        InputExecution {
            inputs: pattern.domain(),
            prefix: vec![pattern],
            extension: Extension::HoldLast,
        }
    }

    /// The unique input execution of a network with no input neurons.
    pub fn empty() -> Self {
        InputExecution::stable(FiringPattern::new())
    }

    pub fn inputs(&self) -> &BTreeSet<NeuronId> {
        &self.inputs
    }

    pub fn prefix(&self) -> &[FiringPattern] {
        &self.prefix
    }

    pub fn extension(&self) -> Extension {
        self.extension
    }

    pub fn at(&self, t: usize) -> &FiringPattern {
        &self.prefix[self.index_at(t).unwrap_or(0)]
    }

    /// Value of `u` at time `t`.
    pub fn value(&self, t: usize, u: &NeuronId) -> bool {
        match self.index_at(t) {
            Some(i) => self.prefix[i].get(u).unwrap_or(false),
            None => false,
        }
    }

    /// Index into the prefix holding time `t`, or `None` when the value is
    /// the zero default.
    fn index_at(&self, t: usize) -> Option<usize> {
        let len = self.prefix.len();
        if t < len {
            return Some(t);
        }
        match self.extension {
            Extension::Zeros => None,
            Extension::HoldLast => Some(len - 1),
            Extension::Cycle { start } => Some(start + (t - start) % (len - start)),
        }
    }

    /// Pattern at time `t` as an owned value (zeros included).
    pub fn pattern_at(&self, t: usize) -> FiringPattern {
        match self.index_at(t) {
            Some(i) => self.prefix[i].clone(),
            None => FiringPattern::uniform(&self.inputs, false),
        }
    }

    /// The first `length + 1` patterns as an execution.
    pub fn take(&self, length: usize) -> Execution {
        Execution { configs: (0..=length).map(|t| self.pattern_at(t)).collect() }
    }

    /// True when every time carries the same pattern.
    pub fn is_stable(&self) -> bool {
        let first = &self.prefix[0];
        let all_same = self.prefix.iter().all(|p| p == first);
        match self.extension {
            Extension::HoldLast | Extension::Cycle { .. } => all_same,
            Extension::Zeros => all_same && first.iter().all(|(_, v)| !v),
        }
    }

    /// Restriction to a subset of the input neurons.
    pub fn project(&self, subset: &BTreeSet<NeuronId>) -> Result<InputExecution> {
        let prefix = self
            .prefix
            .iter()
            .map(|p| p.project(subset))
            .collect::<Result<Vec<_>>>()?;
        Ok(InputExecution { inputs: subset.clone(), prefix, extension: self.extension })
    }

    /// Whether `exec`'s projection on the inputs is a prefix of this execution.
    pub fn is_consistent_with(&self, exec: &Execution) -> bool {
        exec.configs.iter().enumerate().all(|(t, c)| {
            self.inputs.iter().all(|u| c.get(u).is_none_or(|v| v == self.value(t, u)))
        })
    }
}

/// Global engine parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EngineParams {
    lambda: f64,
}

impl EngineParams {
    pub fn new(lambda: f64) -> Result<Self> {
        if lambda > 0.0 && lambda.is_finite() {
            Ok(EngineParams { lambda })
        } else {
            Err(Error::Parameter(format!("lambda must be positive, got {lambda}")))
        }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

impl Default for EngineParams {
    fn default() -> Self {
        EngineParams { lambda: 1.0 }
    }
}

/// `Σ prev(v)·weight(v,u) − bias(u)` over the incoming edges of `u`.
pub fn potential(net: &Network, prev: &FiringPattern, u: &NeuronId) -> Result<f64> {
    let spec = net.neurons.get(u).ok_or_else(|| Error::UnknownNeuron(u.clone()))?;
    let bias = match spec.class {
        NeuronClass::Input => return Err(Error::InputNeuron(u.clone())),
        _ => spec.bias.unwrap_or(0.0),
    };
    let mut sum = 0.0;
    for e in net.edges.iter().filter(|e| &e.to == u) {
        let fired = prev.get(&e.from).ok_or_else(|| {
            Error::DomainMismatch(format!("previous configuration lacks {}", e.from))
        })?;
        if fired {
            sum += e.weight;
        }
    }
    Ok(sum - bias)
}

/// Sigmoid firing probability `1 / (1 + exp(-pot/λ))`, kept strictly
/// inside (0, 1).
pub fn firing_probability(pot: f64, params: EngineParams) -> f64 {
    sigmoid_pair(pot / params.lambda).0
}

/// `(σ(x), σ(−x))`, each computed directly and clamped away from 0 and 1.
pub(crate) fn sigmoid_pair(x: f64) -> (f64, f64) {
    const HI: f64 = 1.0 - f64::EPSILON / 2.0;
    let fire = if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    };
    let silent = if x <= 0.0 {
        1.0 / (1.0 + x.exp())
    } else {
        let e = (-x).exp();
        e / (1.0 + e)
    };
    (fire.clamp(f64::MIN_POSITIVE, HI), silent.clamp(f64::MIN_POSITIVE, HI))
}

/// `input0` merged with the network's initial non-input pattern.
pub fn initial_configuration(net: &Network, input0: &FiringPattern) -> Result<FiringPattern> {
    if input0.domain() != net.inputs() {
        return Err(Error::DomainMismatch(
            "initial input pattern must cover exactly the input neurons".into(),
        ));
    }
    input0.merge(&net.f0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity(l: f64) -> Network {
        NetworkBuilder::new()
            .input("x")
            .output("y", l, false)
            .edge("x", "y", 2.0 * l)
            .build()
            .unwrap()
    }

    #[test]
    fn input_only_network_is_valid() {
        let net = NetworkBuilder::new().input("x").build().unwrap();
        assert!(validate_network(&net).is_empty());
    }

    #[test]
    fn edge_into_input_is_reported() {
        let net = Network::from_parts(
            [
                ("x".into(), NeuronSpec { class: NeuronClass::Input, bias: None }),
                ("y".into(), NeuronSpec { class: NeuronClass::Output, bias: Some(0.0) }),
            ]
            .into_iter()
            .collect(),
            vec![Edge { from: "y".into(), to: "x".into(), weight: 1.0 }],
            FiringPattern::from_iter([("y".into(), false)]),
        );
        let kinds: Vec<_> = validate_network(&net).iter().map(Violation::kind).collect();
        assert_eq!(kinds, vec!["input-has-incoming-edge"]);
    }

    #[test]
    fn self_loop_on_input_is_reported() {
        let err = NetworkBuilder::new().input("x").edge("x", "x", 1.0).build().unwrap_err();
        match err {
            Error::InvalidNetwork(v) => assert_eq!(v[0].kind(), "input-has-incoming-edge"),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn zero_weight_is_reported() {
        let err = NetworkBuilder::new()
            .input("x")
            .output("y", 0.0, false)
            .edge("x", "y", 0.0)
            .build()
            .unwrap_err();
        let Error::InvalidNetwork(v) = err else { panic!() };
        assert_eq!(v.iter().map(Violation::kind).collect::<Vec<_>>(), vec!["zero-weight"]);
    }

    #[test]
    fn duplicate_and_dangling_edges_are_reported() {
        let net = Network::from_parts(
            [("y".into(), NeuronSpec { class: NeuronClass::Output, bias: Some(0.0) })]
                .into_iter()
                .collect(),
            vec![
                Edge { from: "y".into(), to: "y".into(), weight: 1.0 },
                Edge { from: "y".into(), to: "y".into(), weight: 2.0 },
                Edge { from: "q".into(), to: "y".into(), weight: 2.0 },
            ],
            FiringPattern::from_iter([("y".into(), false)]),
        );
        let kinds: Vec<_> = validate_network(&net).iter().map(Violation::kind).collect();
        assert!(kinds.contains(&"duplicate-edge"));
        assert!(kinds.contains(&"unknown-endpoint"));
    }

    #[test]
    fn f0_must_cover_exactly_the_local_neurons() {
        let net = Network::from_parts(
            [
                ("x".into(), NeuronSpec { class: NeuronClass::Input, bias: None }),
                ("y".into(), NeuronSpec { class: NeuronClass::Output, bias: Some(0.0) }),
            ]
            .into_iter()
            .collect(),
            vec![],
            FiringPattern::from_iter([("x".into(), false)]),
        );
        let kinds: Vec<_> = validate_network(&net).iter().map(Violation::kind).collect();
        assert!(kinds.contains(&"initial-missing"));
        assert!(kinds.contains(&"initial-on-non-local"));
    }

    #[test]
    fn projection() {
        let c = FiringPattern::from_iter([("a".into(), true), ("b".into(), false), ("c".into(), true)]);
        let p = c.project(&neuron_set(["a"])).unwrap();
        assert_eq!(p, FiringPattern::from_iter([("a".into(), true)]));
        assert_eq!(c.project(&c.domain()).unwrap(), c);
        assert!(c.project(&neuron_set(["z"])).is_err());
    }

    #[test]
    fn potential_examples() {
        let l = 2.0;
        let net = identity(l);
        let prev = FiringPattern::from_iter([("x".into(), true), ("y".into(), false)]);
        assert_eq!(potential(&net, &prev, &"y".into()).unwrap(), l);
        assert!(matches!(potential(&net, &prev, &"x".into()), Err(Error::InputNeuron(_))));

        let lonely = NetworkBuilder::new().output("y", 0.0, false).build().unwrap();
        let prev = FiringPattern::from_iter([("y".into(), true)]);
        assert_eq!(potential(&lonely, &prev, &"y".into()).unwrap(), 0.0);
    }

    #[test]
    fn sigmoid_examples() {
        let p = EngineParams::default();
        assert_eq!(firing_probability(0.0, p), 0.5);
        let delta: f64 = 0.1;
        let l = ((1.0 - delta) / delta).ln();
        assert!((firing_probability(l, p) - 0.9).abs() < 1e-12);
        assert!((firing_probability(-l, p) - 0.1).abs() < 1e-12);
        let (f, s) = sigmoid_pair(1e4);
        assert!(f < 1.0 && s > 0.0);
        let (f, s) = sigmoid_pair(-1e4);
        assert!(f > 0.0 && s < 1.0);
        assert!(EngineParams::new(0.0).is_err());
    }

    #[test]
    fn initial_configuration_merges_inputs_and_f0() {
        let net = identity(1.0);
        let c0 = initial_configuration(&net, &FiringPattern::from_iter([("x".into(), true)])).unwrap();
        assert_eq!(c0, FiringPattern::from_iter([("x".into(), true), ("y".into(), false)]));
        assert!(initial_configuration(&net, &FiringPattern::new()).is_err());

        let closed = NetworkBuilder::new().output("y", 0.0, true).build().unwrap();
        assert_eq!(initial_configuration(&closed, &FiringPattern::new()).unwrap(), *closed.f0());
    }

    #[test]
    fn input_execution_extensions() {
        let on = FiringPattern::from_iter([("x".into(), true)]);
        let off = FiringPattern::from_iter([("x".into(), false)]);
        let x: NeuronId = "x".into();
        let z = InputExecution::new(vec![on.clone()], Extension::Zeros).unwrap();
        assert!(z.value(0, &x) && !z.value(5, &x));
        let h = InputExecution::new(vec![off.clone(), on.clone()], Extension::HoldLast).unwrap();
        assert!(!h.value(0, &x) && h.value(9, &x));
        let c = InputExecution::new(vec![on.clone(), off.clone()], Extension::Cycle { start: 0 }).unwrap();
        assert!(c.value(4, &x) && !c.value(5, &x));
        let c1 = InputExecution::new(vec![on.clone(), off, on], Extension::Cycle { start: 1 }).unwrap();
        assert_eq!((3..7).map(|t| c1.value(t, &x)).collect::<Vec<_>>(), vec![false, true, false, true]);
        assert!(InputExecution::new(vec![], Extension::Zeros).is_err());
        assert!(h.take(3).length() == 3);
    }
}
