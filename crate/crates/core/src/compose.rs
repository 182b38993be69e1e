//! Composition and hiding of networks, construction of component input
//! executions, and numerical checks of the factorization identities that
//! relate a composite to its components.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::engine::{Cone, ProbabilisticExecution};
use crate::error::{Error, Result};
use crate::model::{
    trace, validate_network, EngineParams, Execution, Extension, FiringPattern, InputExecution, Network, NeuronClass,
    NeuronId, NeuronSpec,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum IncompatibilityKind {
    /// An internal neuron of one network is a neuron of the other.
    InternalCapturedByOther,
    SharedOutput,
}

impl IncompatibilityKind {
    pub fn tag(self) -> &'static str {
        match self {
            IncompatibilityKind::InternalCapturedByOther => "internal-captured-by-other",
            IncompatibilityKind::SharedOutput => "shared-output",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Incompatibility {
    pub kind: IncompatibilityKind,
    pub neuron: NeuronId,
    /// Which network owns the offending internal neuron (1 or 2); 0 for
    /// shared outputs.
    pub owner: u8,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct CompatibilityReport {
    pub violations: Vec<Incompatibility>,
}

impl CompatibilityReport {
    pub fn is_compatible(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for CompatibilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> =
            self.violations.iter().map(|v| format!("{} `{}`", v.kind.tag(), v.neuron)).collect();
        f.write_str(&parts.join(", "))
    }
}

pub fn compatible(n1: &Network, n2: &Network) -> CompatibilityReport {
    let mut violations = Vec::new();
    for (owner, a, b) in [(1, n1, n2), (2, n2, n1)] {
        for u in a.internals() {
            if b.contains(&u) {
                violations.push(Incompatibility { kind: IncompatibilityKind::InternalCapturedByOther, neuron: u, owner });
            }
        }
    }
    for u in n1.outputs().intersection(&n2.outputs()) {
        violations.push(Incompatibility { kind: IncompatibilityKind::SharedOutput, neuron: u.clone(), owner: 0 });
    }
    CompatibilityReport { violations }
}

/// Union of two compatible networks. A neuron that is an input of one and
/// an output of the other becomes an output, with the output side's bias
/// and initial value.
pub fn compose(n1: &Network, n2: &Network) -> Result<Network> {
    let report = compatible(n1, n2);
    if !report.is_compatible() {
        return Err(Error::Incompatible(report));
    }
    let mut neurons: BTreeMap<NeuronId, NeuronSpec> = n1.neurons().clone();
    for (u, spec) in n2.neurons() {
        match neurons.get(u) {
            Some(existing) if existing.class != NeuronClass::Input => {}
            _ => {
                neurons.insert(u.clone(), spec.clone());
            }
        }
    }
    let mut f0 = n1.f0().clone();
    for (u, v) in n2.f0().iter() {
        f0.set(u.clone(), v);
    }
    let edges = n1.edges().iter().chain(n2.edges()).cloned().collect();
    let net = Network::from_parts(neurons, edges, f0);
    let violations = validate_network(&net);
    if !violations.is_empty() {
        return Err(Error::InvalidNetwork(violations));
    }
    Ok(net)
}

/// True when no output of `n2` is an input of `n1`.
pub fn is_acyclic_composition(n1: &Network, n2: &Network) -> bool {
    n1.inputs().is_disjoint(&n2.outputs())
}

/// Reclassifies the outputs in `hidden` as internal neurons.
pub fn hide(net: &Network, hidden: &BTreeSet<NeuronId>) -> Result<Network> {
    let outputs = net.outputs();
    if let Some(u) = hidden.iter().find(|u| !outputs.contains(*u)) {
        return Err(Error::Parameter(format!("`{u}` is not an output neuron and cannot be hidden")));
    }
    let classes = hidden.iter().map(|u| (u.clone(), NeuronClass::Internal)).collect();
    Ok(net.with_classes(&classes))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InputSource {
    /// Copied from the composite's input execution.
    External,
    /// Copied from the observed trace prefix, then zero.
    Observed,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComponentInputSpec {
    pub component: u8,
    pub derived_input: InputExecution,
    pub source: BTreeMap<NeuronId, InputSource>,
}

/// Input execution for component `j` (1 or 2) of `compose(n1, n2)` at
/// length `t`: inputs of the composite follow `beta_in`; inputs driven by
/// the other component follow `observed` for times `0..t` and are zero
/// afterwards.
pub fn derive_component_input(
    n1: &Network,
    n2: &Network,
    beta_in: &InputExecution,
    observed: &Execution,
    j: u8,
    t: usize,
) -> Result<ComponentInputSpec> {
    let (own, other) = match j {
        1 => (n1, n2),
        2 => (n2, n1),
        _ => return Err(Error::Parameter(format!("component must be 1 or 2, got {j}"))),
    };
    if t == 0 {
        return Err(Error::Parameter("component inputs are derived for lengths t ≥ 1".into()));
    }
    let other_out = other.outputs();
    let inputs = own.inputs();
    let source: BTreeMap<NeuronId, InputSource> = inputs
        .iter()
        .map(|u| {
            let s = if other_out.contains(u) { InputSource::Observed } else { InputSource::External };
            (u.clone(), s)
        })
        .collect();
    let observed_names: Vec<&NeuronId> =
        source.iter().filter(|(_, s)| **s == InputSource::Observed).map(|(u, _)| u).collect();
    if !observed_names.is_empty() {
        if observed.configs().len() < t {
            return Err(Error::DomainMismatch(format!(
                "observed prefix has length {} but times 0..{} are needed",
                observed.length(),
                t - 1
            )));
        }
        if let Some(u) = observed_names.iter().find(|u| observed.configs()[0].get(u).is_none()) {
            return Err(Error::DomainMismatch(format!("observed prefix lacks `{u}`")));
        }
    }
    for u in source.keys().filter(|u| source[*u] == InputSource::External) {
        if !beta_in.inputs().contains(u) {
            return Err(Error::DomainMismatch(format!("input execution lacks `{u}`")));
        }
    }

    let len = beta_in.prefix().len();
    let (prefix_len, extension) = match beta_in.extension() {
        Extension::Zeros => (t.max(len), Extension::Zeros),
        // one extra step past the observed window, then hold it
        Extension::HoldLast => (t.max(len) + 1, Extension::HoldLast),
        Extension::Cycle { start } => {
            let m = t.max(start);
            (m + len - start, Extension::Cycle { start: m })
        }
    };
    let prefix: Vec<FiringPattern> = (0..prefix_len)
        .map(|s| {
            source
                .iter()
                .map(|(u, src)| {
                    let v = match src {
                        InputSource::External => beta_in.value(s, u),
                        InputSource::Observed => s < t && observed.configs()[s].get(u).unwrap_or(false),
                    };
                    (u.clone(), v)
                })
                .collect()
        })
        .collect();
    Ok(ComponentInputSpec { component: j, derived_input: InputExecution::new(prefix, extension)?, source })
}

/// A composite together with its two components and one input execution.
pub struct Composition<'a> {
    pub n1: &'a Network,
    pub n2: &'a Network,
    pub composite: Network,
    pub params: EngineParams,
    pub beta_in: InputExecution,
    pe: ProbabilisticExecution,
}

fn restrict(e: &Execution, set: &BTreeSet<NeuronId>) -> Execution {
    let configs = e
        .configs()
        .iter()
        .map(|c| c.iter().filter(|(u, _)| set.contains(*u)).map(|(u, v)| (u.clone(), v)).collect())
        .collect();
    Execution::new(configs).expect("uniform domain")
}

fn restrict_pattern(p: &FiringPattern, set: &BTreeSet<NeuronId>) -> FiringPattern {
    p.iter().filter(|(u, _)| set.contains(*u)).map(|(u, v)| (u.clone(), v)).collect()
}

fn cone_with_last(prefix: &Execution, last: FiringPattern) -> Cone {
    let mut steps = prefix.configs().to_vec();
    steps.push(last);
    Cone::new(steps)
}

/// Residuals of the four one-step factorization identities, for
/// (execution | execution), (trace | execution), (execution | trace) and
/// (trace | trace).
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct FourResiduals {
    pub exec_given_exec: f64,
    pub trace_given_exec: f64,
    pub exec_given_trace: f64,
    pub trace_given_trace: f64,
}

impl FourResiduals {
    pub fn max(&self) -> f64 {
        self.exec_given_exec.max(self.trace_given_exec).max(self.exec_given_trace).max(self.trace_given_trace)
    }
}

impl<'a> Composition<'a> {
    pub fn new(n1: &'a Network, n2: &'a Network, params: EngineParams, beta_in: &InputExecution) -> Result<Self> {
        let composite = compose(n1, n2)?;
        let pe = ProbabilisticExecution::new(&composite, params, beta_in)?;
        Ok(Composition { n1, n2, composite, params, beta_in: beta_in.clone(), pe })
    }

    pub fn composite_execution(&self) -> &ProbabilisticExecution {
        &self.pe
    }

    fn component(&self, j: u8) -> &'a Network {
        if j == 1 {
            self.n1
        } else {
            self.n2
        }
    }

    /// The probabilistic execution of component `j` under its derived input.
    pub fn component_execution(&self, j: u8, observed: &Execution, t: usize) -> Result<ProbabilisticExecution> {
        let spec = derive_component_input(self.n1, self.n2, &self.beta_in, observed, j, t)?;
        ProbabilisticExecution::new(self.component(j), self.params, &spec.derived_input)
    }

    fn check_trace(&self, beta: &Execution) -> Result<()> {
        if beta.domain() != self.composite.external() {
            return Err(Error::DomainMismatch("trace must cover the composite's external neurons".into()));
        }
        if !self.beta_in.is_consistent_with(beta) {
            return Err(Error::InconsistentExecution("trace disagrees with the input execution".into()));
        }
        Ok(())
    }

    fn check_execution(&self, alpha: &Execution) -> Result<()> {
        if alpha.domain() != self.composite.neuron_ids() {
            return Err(Error::DomainMismatch("execution must cover every neuron of the composite".into()));
        }
        if !self.beta_in.is_consistent_with(alpha) {
            return Err(Error::InconsistentExecution("execution disagrees with the input execution".into()));
        }
        Ok(())
    }

    /// `|P(β) − P¹(β⌈N¹)·P²(β⌈N²)|` for an acyclic composition.
    pub fn acyclic_factorization(&self, beta: &Execution) -> Result<f64> {
        if !is_acyclic_composition(self.n1, self.n2) {
            return Err(Error::CyclicComposition);
        }
        self.check_trace(beta)?;
        let lhs = self.pe.trace_probability(beta)?;
        let mut rhs = 1.0;
        for j in [1, 2] {
            let net = self.component(j);
            let pj = self.component_execution(j, beta, beta.length() + 1)?;
            rhs *= pj.trace_probability(&restrict(beta, &net.external()))?;
        }
        Ok((lhs - rhs).abs())
    }

    /// `P(β | β')` and the component product
    /// `P¹(β⌈N¹_out | β'⌈N¹)·P²(β⌈N²_out | β'⌈N²)`.
    pub fn onestep_sides(&self, beta: &Execution) -> Result<(f64, f64)> {
        self.check_trace(beta)?;
        let t = beta.length();
        let prev = beta
            .one_step_prefix()
            .ok_or_else(|| Error::Parameter("one-step factorization needs a trace of length ≥ 1".into()))?;
        let lhs = self.pe.conditional(&Cone::from_execution(beta), &Cone::from_execution(&prev))?;
        let mut rhs = 1.0;
        for j in [1, 2] {
            let net = self.component(j);
            let pj = self.component_execution(j, &prev, t)?;
            let den_exec = restrict(&prev, &net.external());
            let num = cone_with_last(&den_exec, restrict_pattern(beta.last(), &net.outputs()));
            rhs *= pj.conditional(&num, &Cone::from_execution(&den_exec))?;
        }
        Ok((lhs, rhs))
    }

    pub fn onestep_factorization(&self, beta: &Execution) -> Result<f64> {
        let (lhs, rhs) = self.onestep_sides(beta)?;
        Ok((lhs - rhs).abs())
    }

    /// Residuals of the four one-step identities for an execution `α` of
    /// length ≥ 1, with `α'` its one-step prefix, `β = trace(α)` and
    /// `β' = trace(α')`.
    pub fn compose_out_2(&self, alpha: &Execution) -> Result<FourResiduals> {
        self.check_execution(alpha)?;
        let t = alpha.length();
        let alpha_prev = alpha
            .one_step_prefix()
            .ok_or_else(|| Error::Parameter("one-step factorization needs an execution of length ≥ 1".into()))?;
        let beta = trace(&self.composite, alpha)?;
        let beta_prev = trace(&self.composite, &alpha_prev)?;

        let pe = &self.pe;
        let c_alpha = Cone::from_execution(alpha);
        let c_alpha_prev = Cone::from_execution(&alpha_prev);
        let c_beta_prev = Cone::from_execution(&beta_prev);
        let c_beta_after_alpha_prev = cone_with_last(&alpha_prev, beta.last().clone());
        let lhs = [
            pe.conditional(&c_alpha, &c_alpha_prev)?,
            pe.conditional(&c_beta_after_alpha_prev, &c_alpha_prev)?,
            pe.conditional(&c_alpha, &c_beta_prev)?,
            pe.conditional(&Cone::from_execution(&beta), &c_beta_prev)?,
        ];

        let mut rhs = [1.0; 4];
        for j in [1, 2] {
            let net = self.component(j);
            let pj = self.component_execution(j, &beta_prev, t)?;
            let lc = net.locally_controlled();
            let all = net.neuron_ids();
            let ext = net.external();
            let a_prev = restrict(&alpha_prev, &all);
            let b_prev = restrict(&beta_prev, &ext);
            let a_lc_last = restrict_pattern(alpha.last(), &lc);
            let b_out_last = restrict_pattern(beta.last(), &net.outputs());
            let d_exec = Cone::from_execution(&a_prev);
            let d_trace = Cone::from_execution(&b_prev);
            rhs[0] *= pj.conditional(&cone_with_last(&a_prev, a_lc_last), &d_exec)?;
            rhs[1] *= pj.conditional(&cone_with_last(&a_prev, b_out_last.clone()), &d_exec)?;
            rhs[2] *= pj.conditional(&Cone::from_execution(&restrict(alpha, &lc)), &d_trace)?;
            rhs[3] *= pj.conditional(&cone_with_last(&b_prev, b_out_last), &d_trace)?;
        }
        let r = |i: usize| (lhs[i] - rhs[i]).abs();
        Ok(FourResiduals { exec_given_exec: r(0), trace_given_exec: r(1), exec_given_trace: r(2), trace_given_trace: r(3) })
    }

    /// `|P(α | β) − P(α⌈N¹ | β⌈N¹)·P(α⌈N² | β⌈N²)|` with every term
    /// taken under the composite's own probabilistic execution.
    pub fn execution_independence(&self, alpha: &Execution) -> Result<f64> {
        self.check_execution(alpha)?;
        let beta = trace(&self.composite, alpha)?;
        let pe = &self.pe;
        let lhs = pe.conditional(&Cone::from_execution(alpha), &Cone::from_execution(&beta))?;
        let mut rhs = 1.0;
        for net in [self.n1, self.n2] {
            let num = Cone::from_execution(&restrict(alpha, &net.neuron_ids()));
            let den = Cone::from_execution(&restrict(&beta, &net.external()));
            rhs *= pe.conditional(&num, &den)?;
        }
        Ok((lhs - rhs).abs())
    }
}

pub fn verify_acyclic_factorization(
    n1: &Network,
    n2: &Network,
    params: EngineParams,
    beta_in: &InputExecution,
    beta: &Execution,
) -> Result<f64> {
    if !is_acyclic_composition(n1, n2) {
        return Err(Error::CyclicComposition);
    }
    Composition::new(n1, n2, params, beta_in)?.acyclic_factorization(beta)
}

pub fn verify_onestep_factorization(
    n1: &Network,
    n2: &Network,
    params: EngineParams,
    beta_in: &InputExecution,
    beta: &Execution,
) -> Result<f64> {
    Composition::new(n1, n2, params, beta_in)?.onestep_factorization(beta)
}

pub fn verify_compose_out_2(
    n1: &Network,
    n2: &Network,
    params: EngineParams,
    beta_in: &InputExecution,
    alpha: &Execution,
) -> Result<FourResiduals> {
    Composition::new(n1, n2, params, beta_in)?.compose_out_2(alpha)
}

pub fn verify_execution_independence(
    n1: &Network,
    n2: &Network,
    params: EngineParams,
    beta_in: &InputExecution,
    alpha: &Execution,
) -> Result<f64> {
    Composition::new(n1, n2, params, beta_in)?.execution_independence(alpha)
}

/// `|P'(β) − Σ_γ P(γ)|`, where `P'` belongs to `hide(net, hidden)` and `γ`
/// ranges over the traces of `net` that agree with `β` outside `hidden`.
pub fn verify_hiding(
    net: &Network,
    hidden: &BTreeSet<NeuronId>,
    params: EngineParams,
    beta_in: &InputExecution,
    beta: &Execution,
) -> Result<f64> {
    let h = hide(net, hidden)?;
    let lhs = ProbabilisticExecution::new(&h, params, beta_in)?.trace_probability(beta)?;
    let pe = ProbabilisticExecution::new(net, params, beta_in)?;
    let v: Vec<&NeuronId> = hidden.iter().collect();
    let t = beta.length();
    if v.len() * t >= 63 {
        return Err(Error::Unsupported("too many hidden values to enumerate".into()));
    }
    // time 0 is pinned by the initial pattern; later values range freely
    let mut first = beta.configs()[0].clone();
    for u in &v {
        first.set((*u).clone(), net.f0().get(u).unwrap_or(false));
    }
    let mut rhs = 0.0;
    for assign in 0u64..1 << (v.len() * t) {
        let mut configs = vec![first.clone()];
        for (s, c) in beta.configs().iter().enumerate().skip(1) {
            let mut c = c.clone();
            for (i, u) in v.iter().enumerate() {
                c.set((*u).clone(), assign >> ((s - 1) * v.len() + i) & 1 == 1);
            }
            configs.push(c);
        }
        rhs += pe.trace_probability(&Execution::new(configs)?)?;
    }
    Ok((lhs - rhs).abs())
}
