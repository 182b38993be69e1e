//! Probabilities of cones, executions and traces for one fixed input
//! execution.

use std::collections::BTreeMap;

use rayon::prelude::*;

use super::compiled::{Bits, Compiled, Dynamics, FilterState, InputBits, Step};
use super::fingerprint::{Beh2Fingerprint, BehaviorFingerprint, TraceKey, TraceView};
use crate::error::{Error, Result};
use crate::model::{
    firing_probability, potential, EngineParams, Execution, FiringPattern, InputExecution, Network, NeuronId,
};

/// The set of executions whose configuration at each time `t` agrees with
/// `steps[t]`. Each step may constrain any subset of the neurons; an empty
/// step constrains nothing.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Cone {
    steps: Vec<FiringPattern>,
}

impl Cone {
    pub fn new(steps: Vec<FiringPattern>) -> Self {
        Cone { steps }
    }

    pub fn from_execution(e: &Execution) -> Self {
        Cone { steps: e.configs().to_vec() }
    }

    pub fn steps(&self) -> &[FiringPattern] {
        &self.steps
    }

    /// Intersection of two cones; `None` when they are disjoint.
    pub fn intersect(&self, other: &Cone) -> Option<Cone> {
        let n = self.steps.len().max(other.steps.len());
        let mut steps = Vec::with_capacity(n);
        for t in 0..n {
            let step = match (self.steps.get(t), other.steps.get(t)) {
                (Some(a), Some(b)) => a.merge(b).ok()?,
                (Some(a), None) => a.clone(),
                (None, Some(b)) => b.clone(),
                (None, None) => unreachable!(),
            };
            steps.push(step);
        }
        Some(Cone { steps })
    }
}

/// A set of length-`T` traces, possibly with a prefix test used to prune
/// enumeration early.
pub trait TraceEvent: Sync {
    /// `false` when no trace extending `prefix` can be accepted.
    fn admits_prefix(&self, _prefix: &TraceView) -> bool {
        true
    }

    fn accepts(&self, trace: &TraceView) -> bool;
}

impl<F> TraceEvent for F
where
    F: Fn(&TraceView) -> bool + Sync,
{
    fn accepts(&self, trace: &TraceView) -> bool {
        self(trace)
    }
}

/// Conjunction of fixed firing requirements `(t, neuron, value)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Requirements {
    pub at: Vec<(usize, NeuronId, bool)>,
}

impl Requirements {
    pub fn new() -> Self {
        Requirements::default()
    }

    pub fn require(mut self, t: usize, u: impl Into<NeuronId>, fires: bool) -> Self {
        self.at.push((t, u.into(), fires));
        self
    }

    fn holds_through(&self, view: &TraceView, last: usize) -> bool {
        self.at
            .iter()
            .filter(|(t, _, _)| *t <= last)
            .all(|(t, u, v)| view.try_fires(*t, u.as_str()) == Some(*v))
    }
}

impl TraceEvent for Requirements {
    fn admits_prefix(&self, prefix: &TraceView) -> bool {
        self.holds_through(prefix, prefix.length())
    }

    fn accepts(&self, trace: &TraceView) -> bool {
        self.holds_through(trace, usize::MAX)
    }
}

/// Forward-filter state after observing a trace prefix: probability mass
/// grouped by the internal configuration at the last observed step.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceDistribution {
    pub step: usize,
    pub mass: Vec<(FiringPattern, f64)>,
    pub total: f64,
}

/// The probabilistic execution of a network under one input execution.
#[derive(Clone, Debug)]
pub struct ProbabilisticExecution {
    net: Network,
    params: EngineParams,
    input: InputExecution,
    c: Compiled,
    bits: InputBits,
    external: Vec<NeuronId>,
    /// Compiled index of each external neuron, in external order.
    ext_pos: Vec<usize>,
    outputs: Vec<usize>,
}

impl ProbabilisticExecution {
    pub fn new(net: &Network, params: EngineParams, input: &InputExecution) -> Result<Self> {
        let c = Compiled::new(net)?;
        let bits = InputBits::new(&c, input)?;
        let ext_pos: Vec<usize> = (0..c.names.len()).filter(|&i| c.ext_mask() >> i & 1 == 1).collect();
        let outputs = (0..c.names.len()).filter(|&i| c.output_mask >> i & 1 == 1).collect();
        Ok(ProbabilisticExecution {
            net: net.clone(),
            params,
            input: input.clone(),
            external: ext_pos.iter().map(|&i| c.names[i].clone()).collect(),
            ext_pos,
            outputs,
            c,
            bits,
        })
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn params(&self) -> EngineParams {
        self.params
    }

    pub fn input(&self) -> &InputExecution {
        &self.input
    }

    /// External neurons in canonical order.
    pub fn external(&self) -> &[NeuronId] {
        &self.external
    }

    fn dynamics(&self) -> Dynamics<'_> {
        Dynamics::new(&self.c, &self.bits, self.params.lambda())
    }

    pub fn initial_configuration(&self) -> FiringPattern {
        let all = u64::MAX >> (64 - self.c.names.len().max(1));
        self.c.pattern(self.dynamics().initial_config(), all)
    }

    /// `P(A(α))` for a full execution `α`.
    pub fn execution_probability(&self, alpha: &Execution) -> Result<f64> {
        if alpha.domain() != self.net.neuron_ids() {
            return Err(Error::DomainMismatch("execution must cover every neuron".into()));
        }
        if !self.input.is_consistent_with(alpha) {
            return Err(Error::InconsistentExecution("input columns differ from the input execution".into()));
        }
        let configs: Vec<Bits> =
            alpha.configs().iter().map(|p| self.c.step_of(p).map(|s| s.values)).collect::<Result<_>>()?;
        if (configs[0] ^ self.c.f0) & self.c.lc_mask != 0 {
            return Err(Error::InconsistentExecution("time-0 configuration differs from the initial pattern".into()));
        }
        let lambda = self.params.lambda();
        let mut p = 1.0;
        for w in configs.windows(2) {
            let probs = self.c.probs(w[0], lambda);
            for (j, &u) in self.c.lc.iter().enumerate() {
                p *= if w[1] >> u & 1 == 1 { probs[j].0 } else { probs[j].1 };
            }
        }
        Ok(p)
    }

    /// `P(A(β))` for a trace `β` over the external neurons. Zero when `β`
    /// disagrees with the initial configuration.
    pub fn trace_probability(&self, beta: &Execution) -> Result<f64> {
        if beta.domain().iter().ne(self.external.iter()) {
            return Err(Error::DomainMismatch("trace must cover exactly the external neurons".into()));
        }
        if !self.input.is_consistent_with(beta) {
            return Err(Error::InconsistentExecution("input columns differ from the input execution".into()));
        }
        let steps = self.steps(beta.configs())?;
        Ok(self.dynamics().cone(&steps))
    }

    /// Probability of an arbitrary cone. Cones whose input constraints
    /// disagree with the input execution have probability zero.
    pub fn cone_probability(&self, cone: &Cone) -> Result<f64> {
        let steps = self.steps(cone.steps())?;
        Ok(self.dynamics().cone(&steps))
    }

    /// `P(num | den) = P(num ∩ den) / P(den)`.
    pub fn conditional(&self, num: &Cone, den: &Cone) -> Result<f64> {
        let d = self.cone_probability(den)?;
        if d == 0.0 {
            return Err(Error::ZeroProbability);
        }
        let n = match num.intersect(den) {
            Some(both) => self.cone_probability(&both)?,
            None => 0.0,
        };
        Ok(n / d)
    }

    fn steps(&self, patterns: &[FiringPattern]) -> Result<Vec<Step>> {
        patterns.iter().map(|p| self.c.step_of(p)).collect()
    }

    /// Filter state after observing the trace `β`.
    pub fn trace_distribution(&self, beta: &Execution) -> Result<TraceDistribution> {
        if beta.domain().iter().ne(self.external.iter()) {
            return Err(Error::DomainMismatch("trace must cover exactly the external neurons".into()));
        }
        let steps = self.steps(beta.configs())?;
        let dynamics = self.dynamics().keeping_all();
        let mut f = dynamics.start(steps[0]);
        for s in &steps[1..] {
            f = dynamics.advance(&f, *s);
        }
        let mass: Vec<(FiringPattern, f64)> =
            f.states.iter().map(|&(bits, m)| (self.c.pattern(bits, self.c.internal_mask), m)).collect();
        Ok(TraceDistribution { step: beta.length(), total: f.total(), mass })
    }

    fn row(&self, config: Bits) -> u64 {
        self.ext_pos.iter().enumerate().fold(0, |acc, (j, &i)| acc | ((config >> i & 1) << j))
    }

    fn output_bits(&self, assign: u64) -> Bits {
        self.outputs.iter().enumerate().fold(0, |acc, (j, &i)| acc | ((assign >> j & 1) << i))
    }

    /// Filter states and trace rows of the one-step extensions of `f`,
    /// one per output assignment in counting order.
    fn children(&self, d: &Dynamics, f: &FilterState) -> Vec<(u64, FilterState)> {
        let prepared = d.prepare(f);
        let t = f.t + 1;
        let inp = self.bits.at(t);
        (0u64..1 << self.outputs.len())
            .map(|a| {
                let values = self.output_bits(a);
                let next = d.advance_prepared(&prepared, Step { mask: self.c.output_mask, values });
                (self.row(inp | values), next)
            })
            .collect()
    }

    fn root(&self, d: &Dynamics) -> (u64, FilterState) {
        let c0 = d.initial_config();
        (self.row(c0), d.start(Step::free()))
    }

    /// Probability that the length-`horizon` trace lies in `event`.
    pub fn event_probability(&self, horizon: usize, event: &dyn TraceEvent) -> f64 {
        let d = self.dynamics();
        let (row0, f0) = self.root(&d);
        let mut rows = vec![row0];
        if !event.admits_prefix(&TraceView::new(&self.external, &rows)) {
            return 0.0;
        }
        if horizon == 0 {
            return if event.accepts(&TraceView::new(&self.external, &rows)) { f0.total() } else { 0.0 };
        }
        let parts: Vec<f64> = self
            .children(&d, &f0)
            .into_par_iter()
            .map(|(row, f)| {
                let mut rows = vec![row0, row];
                self.event_dfs(&d, f, &mut rows, horizon, event)
            })
            .collect();
        rows.clear();
        parts.into_iter().sum()
    }

    fn event_dfs(&self, d: &Dynamics, f: FilterState, rows: &mut Vec<u64>, horizon: usize, event: &dyn TraceEvent) -> f64 {
        if f.states.is_empty() {
            return 0.0;
        }
        let view = TraceView::new(&self.external, rows);
        if !event.admits_prefix(&view) {
            return 0.0;
        }
        if f.t == horizon {
            return if event.accepts(&view) { f.total() } else { 0.0 };
        }
        let mut sum = 0.0;
        for (row, next) in self.children(d, &f) {
            rows.push(row);
            sum += self.event_dfs(d, next, rows, horizon, event);
            rows.pop();
        }
        sum
    }

    /// Cone probabilities of every consistent trace of length at most `horizon`.
    pub fn behavior(&self, horizon: usize) -> BehaviorFingerprint {
        let d = self.dynamics();
        let (row0, f0) = self.root(&d);
        let mut entries = BTreeMap::new();
        entries.insert(TraceKey(vec![row0]), f0.total());
        if horizon > 0 {
            let parts: Vec<Vec<(TraceKey, f64)>> = self
                .children(&d, &f0)
                .into_par_iter()
                .map(|(row, f)| {
                    let mut out = Vec::new();
                    self.behavior_dfs(&d, f, &mut vec![row0, row], horizon, &mut out);
                    out
                })
                .collect();
            entries.extend(parts.into_iter().flatten());
        }
        BehaviorFingerprint {
            horizon,
            lambda: self.params.lambda(),
            input: self.input.clone(),
            external: self.external.clone(),
            entries,
            trials: None,
        }
    }

    fn behavior_dfs(
        &self,
        d: &Dynamics,
        f: FilterState,
        rows: &mut Vec<u64>,
        horizon: usize,
        out: &mut Vec<(TraceKey, f64)>,
    ) {
        if f.states.is_empty() {
            return;
        }
        out.push((TraceKey(rows.clone()), f.total()));
        if f.t == horizon {
            return;
        }
        for (row, next) in self.children(d, &f) {
            rows.push(row);
            self.behavior_dfs(d, next, rows, horizon, out);
            rows.pop();
        }
    }

    pub fn behavior2(&self, horizon: usize) -> Beh2Fingerprint {
        self.behavior(horizon).to_beh2()
    }
}

/// Probability of moving from `prev` (over all neurons) to the
/// locally controlled pattern `next_lc` in one step.
pub fn transition_probability(
    net: &Network,
    params: EngineParams,
    prev: &FiringPattern,
    next_lc: &FiringPattern,
) -> Result<f64> {
    if next_lc.domain() != net.locally_controlled() {
        return Err(Error::DomainMismatch("next pattern must cover exactly the locally controlled neurons".into()));
    }
    if prev.domain() != net.neuron_ids() {
        return Err(Error::DomainMismatch("previous configuration must cover every neuron".into()));
    }
    let mut p = 1.0;
    for (u, fires) in next_lc.iter() {
        let q = firing_probability(potential(net, prev, u)?, params);
        p *= if fires { q } else { 1.0 - q };
    }
    Ok(p)
}

pub fn execution_probability(
    net: &Network,
    params: EngineParams,
    beta_in: &InputExecution,
    alpha: &Execution,
) -> Result<f64> {
    ProbabilisticExecution::new(net, params, beta_in)?.execution_probability(alpha)
}

pub fn trace_probability(net: &Network, params: EngineParams, beta_in: &InputExecution, beta: &Execution) -> Result<f64> {
    ProbabilisticExecution::new(net, params, beta_in)?.trace_probability(beta)
}

/// `p_num / p_den` for nested cones.
pub fn conditional_probability(p_num: f64, p_den: f64) -> Result<f64> {
    if p_den == 0.0 {
        return Err(Error::ZeroProbability);
    }
    Ok(p_num / p_den)
}

pub fn event_probability(
    net: &Network,
    params: EngineParams,
    beta_in: &InputExecution,
    horizon: usize,
    event: &dyn TraceEvent,
) -> Result<f64> {
    Ok(ProbabilisticExecution::new(net, params, beta_in)?.event_probability(horizon, event))
}

pub fn behavior(net: &Network, params: EngineParams, beta_in: &InputExecution, horizon: usize) -> Result<BehaviorFingerprint> {
    Ok(ProbabilisticExecution::new(net, params, beta_in)?.behavior(horizon))
}

pub fn behavior2(net: &Network, params: EngineParams, beta_in: &InputExecution, horizon: usize) -> Result<Beh2Fingerprint> {
    if horizon == 0 {
        return Err(Error::Parameter("one-step conditionals need a horizon of at least 1".into()));
    }
    Ok(ProbabilisticExecution::new(net, params, beta_in)?.behavior2(horizon))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::NetworkBuilder;

    fn identity(delta: f64) -> Network {
        let l = ((1.0 - delta) / delta).ln();
        NetworkBuilder::new().input("x").output("y", l, false).edge("x", "y", 2.0 * l).build().unwrap()
    }

    fn stable_x(v: bool) -> InputExecution {
        InputExecution::stable([(NeuronId::from("x"), v)].into_iter().collect())
    }

    fn trace(rows: &[(bool, bool)]) -> Execution {
        Execution::new(
            rows.iter().map(|&(x, y)| [(NeuronId::from("x"), x), ("y".into(), y)].into_iter().collect()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn identity_copies_with_probability_one_minus_delta() {
        let pe = ProbabilisticExecution::new(&identity(0.1), EngineParams::default(), &stable_x(true)).unwrap();
        let p = pe.trace_probability(&trace(&[(true, false), (true, true)])).unwrap();
        assert!((p - 0.9).abs() < 1e-12);
        let p = pe.trace_probability(&trace(&[(true, false), (true, true), (true, true)])).unwrap();
        assert!((p - 0.81).abs() < 1e-12);
        assert_eq!(pe.trace_probability(&trace(&[(true, true)])).unwrap(), 0.0);
        assert!(pe.trace_probability(&trace(&[(false, false)])).is_err());
    }

    #[test]
    fn behavior_entries_and_events() {
        let pe = ProbabilisticExecution::new(&identity(0.1), EngineParams::default(), &stable_x(true)).unwrap();
        let b = pe.behavior(2);
        assert_eq!(b.entries.len(), 1 + 2 + 4);
        assert!(b.cone_additivity_residual() < 1e-15);
        let ev = Requirements::new().require(2, "y", true);
        assert!((pe.event_probability(2, &ev) - 0.9).abs() < 1e-12);
        let all = |_: &TraceView| true;
        assert!((pe.event_probability(3, &all) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn conditional_of_nested_cones() {
        let pe = ProbabilisticExecution::new(&identity(0.1), EngineParams::default(), &stable_x(true)).unwrap();
        let short = Cone::from_execution(&trace(&[(true, false), (true, true)]));
        let long = Cone::from_execution(&trace(&[(true, false), (true, true), (true, false)]));
        assert!((pe.conditional(&long, &short).unwrap() - 0.1).abs() < 1e-12);
    }
}
