//! Constructors for the gate networks and the circuits built from them.
//!
//! Gates are calibrated with `L = λ·ln((1−δ)/δ)`: a boundary potential of
//! `±L` fires with probability `1−δ` or `δ`.

use std::collections::BTreeMap;

use crate::compose::compose;
use crate::error::{Error, Result};
use crate::model::{Network, NetworkBuilder, NeuronId};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GateParams {
    pub lambda: f64,
    pub delta: f64,
}

impl GateParams {
    pub fn new(lambda: f64, delta: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::Parameter(format!("lambda must be positive, got {lambda}")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::Parameter(format!("delta must lie in (0, 1), got {delta}")));
        }
        Ok(GateParams { lambda, delta })
    }

    pub fn l(&self) -> f64 {
        self.lambda * ((1.0 - self.delta) / self.delta).ln()
    }

    /// `L`, rejecting `δ ≥ 1/2` where the gate thresholds invert.
    fn gate_l(&self) -> Result<f64> {
        GateParams::new(self.lambda, self.delta)?;
        if self.delta >= 0.5 {
            return Err(Error::Parameter(format!("gates need delta < 0.5, got {}", self.delta)));
        }
        Ok(self.l())
    }
}

fn gate_inputs(k: usize) -> Vec<String> {
    if k == 1 {
        vec!["x".into()]
    } else {
        (1..=k).map(|i| format!("x{i}")).collect()
    }
}

/// Threshold gate reading `inputs` into `output`, all weights `2L`.
fn threshold_gate(inputs: &[&str], output: &str, bias: f64, l: f64) -> Result<Network> {
    let mut b = NetworkBuilder::new().output(output, bias, false);
    for x in inputs {
        b = b.input(*x).edge(*x, output, 2.0 * l);
    }
    b.build()
}

/// `k`-input And gate with the given neuron names.
pub fn and_gate_named(inputs: &[&str], output: &str, p: GateParams) -> Result<Network> {
    if inputs.is_empty() {
        return Err(Error::Parameter("an And gate needs at least one input".into()));
    }
    let l = p.gate_l()?;
    threshold_gate(inputs, output, (2 * inputs.len() - 1) as f64 * l, l)
}

pub fn or_gate_named(inputs: &[&str], output: &str, p: GateParams) -> Result<Network> {
    if inputs.is_empty() {
        return Err(Error::Parameter("an Or gate needs at least one input".into()));
    }
    let l = p.gate_l()?;
    threshold_gate(inputs, output, l, l)
}

/// Not gate `input → inhibitor ⊣ output` with the given names.
pub fn not_gate_named(input: &str, inhibitor: &str, output: &str, p: GateParams) -> Result<Network> {
    let l = p.gate_l()?;
    NetworkBuilder::new()
        .input(input)
        .internal(inhibitor, l, false)
        .output(output, -l, false)
        .edge(input, inhibitor, 2.0 * l)
        .edge(inhibitor, output, -2.0 * l)
        .build()
}

/// Input `x`, output `y`.
pub fn identity_gate(p: GateParams) -> Result<Network> {
    and_gate_named(&["x"], "y", p)
}

/// Inputs `x1..xk` (`x` when `k = 1`), output `y`.
pub fn and_gate(k: usize, p: GateParams) -> Result<Network> {
    let names = gate_inputs(k);
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    and_gate_named(&refs, "y", p)
}

pub fn or_gate(k: usize, p: GateParams) -> Result<Network> {
    let names = gate_inputs(k);
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    or_gate_named(&refs, "y", p)
}

/// Input `x`, internal inhibitor `a`, output `y`.
pub fn not_gate(p: GateParams) -> Result<Network> {
    not_gate_named("x", "a", "y", p)
}

/// `and = x1 ∧ x2` followed by `nand = ¬and` through inhibitor `a`.
pub fn nand_circuit(p: GateParams) -> Result<Network> {
    compose(&and_gate_named(&["x1", "x2"], "and", p)?, &not_gate_named("and", "a", "nand", p)?)
}

/// Xor of `x1, x2` as `xor = nand(x1, x2) ∧ or(x1, x2)`, built by three
/// binary compositions. Outputs `and`, `nand`, `or`, `xor`; internal `a`.
pub fn xor_circuit(p: GateParams) -> Result<Network> {
    let step1 = nand_circuit(p)?;
    let step2 = compose(&step1, &or_gate_named(&["x1", "x2"], "or", p)?)?;
    compose(&step2, &and_gate_named(&["nand", "or"], "xor", p)?)
}

/// The Xor circuit written out in one description.
pub fn xor_circuit_flat(p: GateParams) -> Result<Network> {
    let l = p.gate_l()?;
    NetworkBuilder::new()
        .input("x1")
        .input("x2")
        .output("and", 3.0 * l, false)
        .internal("a", l, false)
        .output("nand", -l, false)
        .output("or", l, false)
        .output("xor", 3.0 * l, false)
        .edge("x1", "and", 2.0 * l)
        .edge("x2", "and", 2.0 * l)
        .edge("and", "a", 2.0 * l)
        .edge("a", "nand", -2.0 * l)
        .edge("x1", "or", 2.0 * l)
        .edge("x2", "or", 2.0 * l)
        .edge("nand", "xor", 2.0 * l)
        .edge("or", "xor", 2.0 * l)
        .build()
}

/// Winner-take-all weights, as multiples of `γ`.
///
/// The default makes a firing output whose input fires sit at potential 0
/// while both inhibitors fire: `input + self_loop − output_bias −
/// stab_to_output − conv_to_output = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WtaWeights {
    pub input: f64,
    pub self_loop: f64,
    pub output_bias: f64,
    /// Magnitude of the (negative) stability-inhibitor edge into each output.
    pub stab_to_output: f64,
    /// Magnitude of the (negative) convergence-inhibitor edge into each output.
    pub conv_to_output: f64,
    pub output_to_stab: f64,
    /// Fires when at least one output fired.
    pub stab_bias: f64,
    pub output_to_conv: f64,
    /// Fires when at least two outputs fired.
    pub conv_bias: f64,
}

impl Default for WtaWeights {
    fn default() -> Self {
        WtaWeights {
            input: 2.0,
            self_loop: 2.0,
            output_bias: 1.0,
            stab_to_output: 2.0,
            conv_to_output: 1.0,
            output_to_stab: 2.0,
            stab_bias: 1.0,
            output_to_conv: 2.0,
            conv_bias: 3.0,
        }
    }
}

pub const WTA_STAB: &str = "a_stab";
pub const WTA_CONV: &str = "a_conv";

/// Inputs `x1..xn`, outputs `y1..yn`, inhibitors `a_stab` and `a_conv`.
pub fn wta_network(n: usize, gamma: f64, w: &WtaWeights) -> Result<Network> {
    if n == 0 {
        return Err(Error::Parameter("a WTA network needs at least one output".into()));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::Parameter(format!("gamma must be positive, got {gamma}")));
    }
    let g = gamma;
    let mut b = NetworkBuilder::new()
        .internal(WTA_STAB, w.stab_bias * g, false)
        .internal(WTA_CONV, w.conv_bias * g, false);
    for i in 1..=n {
        let (x, y) = (format!("x{i}"), format!("y{i}"));
        b = b
            .input(x.as_str())
            .output(y.as_str(), w.output_bias * g, false)
            .edge(x.as_str(), y.as_str(), w.input * g)
            .edge(y.as_str(), y.as_str(), w.self_loop * g)
            .edge(y.as_str(), WTA_STAB, w.output_to_stab * g)
            .edge(y.as_str(), WTA_CONV, w.output_to_conv * g)
            .edge(WTA_STAB, y.as_str(), -w.stab_to_output * g)
            .edge(WTA_CONV, y.as_str(), -w.conv_to_output * g);
    }
    b.build()
}

/// `n` disjoint two-input And gates `z_i = w_i ∧ y_i`.
pub fn filter_network(n: usize, p: GateParams) -> Result<Network> {
    if n == 0 {
        return Err(Error::Parameter("a Filter network needs at least one gate".into()));
    }
    let l = p.gate_l()?;
    let mut b = NetworkBuilder::new();
    for i in 1..=n {
        let (w, y, z) = (format!("w{i}"), format!("y{i}"), format!("z{i}"));
        b = b
            .input(w.as_str())
            .input(y.as_str())
            .output(z.as_str(), 3.0 * l, false)
            .edge(w.as_str(), z.as_str(), 2.0 * l)
            .edge(y.as_str(), z.as_str(), 2.0 * l);
    }
    b.build()
}

/// WTA outputs `y_i` feeding the Filter's `y_i` inputs.
pub fn attention_network(n: usize, gamma: f64, w: &WtaWeights, p: GateParams) -> Result<Network> {
    compose(&wta_network(n, gamma, w)?, &filter_network(n, p)?)
}

/// The two halves of the cyclic toy and their composition.
#[derive(Clone, Debug, PartialEq)]
pub struct CyclicToy {
    pub n1: Network,
    pub n2: Network,
    pub composite: Network,
}

/// `n1`: `x1 → a1 → x2` with a self-loop on `x2`; `n2`: `x2 → a2 → x1`.
/// Every bias is `L` and every weight `2L`; initially only `x1` fires.
pub fn cyclic_toy(p: GateParams) -> Result<CyclicToy> {
    cyclic_toy_with_initial(p, true, false)
}

pub fn cyclic_toy_with_initial(p: GateParams, x1: bool, x2: bool) -> Result<CyclicToy> {
    let l = p.gate_l()?;
    let n1 = NetworkBuilder::new()
        .input("x1")
        .internal("a1", l, false)
        .output("x2", l, x2)
        .edge("x1", "a1", 2.0 * l)
        .edge("a1", "x2", 2.0 * l)
        .edge("x2", "x2", 2.0 * l)
        .build()?;
    let n2 = NetworkBuilder::new()
        .input("x2")
        .internal("a2", l, false)
        .output("x1", l, x1)
        .edge("x2", "a2", 2.0 * l)
        .edge("a2", "x1", 2.0 * l)
        .build()?;
    let composite = compose(&n1, &n2)?;
    Ok(CyclicToy { n1, n2, composite })
}

/// Builds a network by builder name, for command-line use.
pub fn by_name(name: &str, args: &BTreeMap<String, f64>) -> Result<Network> {
    let get = |k: &str, default: Option<f64>| -> Result<f64> {
        args.get(k).copied().or(default).ok_or_else(|| Error::Parameter(format!("`{name}` needs --{k}")))
    };
    let count = |k: &str, default: f64| -> Result<usize> {
        let v = get(k, Some(default))?;
        if v < 0.0 || v.fract() != 0.0 {
            return Err(Error::Parameter(format!("--{k} must be a non-negative integer")));
        }
        Ok(v as usize)
    };
    let gate = || -> Result<GateParams> { GateParams::new(get("lambda", Some(1.0))?, get("delta", None)?) };
    match name {
        "identity" => identity_gate(gate()?),
        "and" => and_gate(count("k", 2.0)?, gate()?),
        "or" => or_gate(count("k", 2.0)?, gate()?),
        "not" => not_gate(gate()?),
        "nand" => nand_circuit(gate()?),
        "xor" => xor_circuit(gate()?),
        "wta" => wta_network(count("n", 3.0)?, get("gamma", Some(DEFAULT_WTA_GAMMA))?, &WtaWeights::default()),
        "filter" => filter_network(count("n", 2.0)?, gate()?),
        "attention" => attention_network(
            count("n", 2.0)?,
            get("gamma", Some(DEFAULT_WTA_GAMMA))?,
            &WtaWeights::default(),
            gate()?,
        ),
        "cyclic" => Ok(cyclic_toy(gate()?)?.composite),
        other => Err(Error::Parameter(format!("unknown builder `{other}`"))),
    }
}

pub const BUILDER_NAMES: [&str; 10] =
    ["identity", "and", "or", "not", "nand", "xor", "wta", "filter", "attention", "cyclic"];

/// `γ` used when none is given; see the WTA acceptance check.
pub const DEFAULT_WTA_GAMMA: f64 = 10.0;

/// Renames a network's neurons with `(old, new)` pairs.
pub fn renamed(net: &Network, pairs: &[(&str, &str)]) -> Network {
    let map: BTreeMap<NeuronId, NeuronId> = pairs.iter().map(|(a, b)| (NeuronId::from(*a), NeuronId::from(*b))).collect();
    net.rename(&map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{firing_probability, potential, validate_network, EngineParams, FiringPattern};

    fn p(delta: f64) -> GateParams {
        GateParams::new(1.0, delta).unwrap()
    }

    #[test]
    fn identity_weights() {
        let net = identity_gate(p(0.1)).unwrap();
        assert!((net.bias(&"y".into()).unwrap() - 9f64.ln()).abs() < 1e-12);
        assert!((net.weight(&"x".into(), &"y".into()).unwrap() - 2.0 * 9f64.ln()).abs() < 1e-12);
        assert_eq!(and_gate(1, p(0.1)).unwrap(), net);
        assert_eq!(or_gate(1, p(0.1)).unwrap(), net);
        assert!(identity_gate(p(0.5)).is_err());
        assert!(and_gate(0, p(0.1)).is_err());
    }

    #[test]
    fn and_three_potentials() {
        let gp = p(0.1);
        let net = and_gate(3, gp).unwrap();
        let prev = |fired: &[&str]| -> FiringPattern {
            FiringPattern::with_firing(&net.neuron_ids(), fired)
        };
        let pot = potential(&net, &prev(&["x1", "x2"]), &"y".into()).unwrap();
        assert!((pot + gp.l()).abs() < 1e-12);
        let pot = potential(&net, &prev(&["x1"]), &"y".into()).unwrap();
        assert!((pot + 3.0 * gp.l()).abs() < 1e-12);
        let all = potential(&net, &prev(&["x1", "x2", "x3"]), &"y".into()).unwrap();
        assert!((firing_probability(all, EngineParams::default()) - 0.9).abs() < 1e-12);
    }

    #[test]
    fn xor_structure() {
        let x = xor_circuit(p(0.05)).unwrap();
        assert_eq!((x.inputs().len(), x.outputs().len(), x.internals().len()), (2, 4, 1));
        assert_eq!(x, xor_circuit_flat(p(0.05)).unwrap());
    }

    #[test]
    fn builders_produce_valid_networks() {
        let nets = [
            wta_network(3, 10.0, &WtaWeights::default()).unwrap(),
            filter_network(2, p(0.05)).unwrap(),
            attention_network(2, 10.0, &WtaWeights::default(), p(0.05)).unwrap(),
            cyclic_toy(p(0.05)).unwrap().composite,
            not_gate(p(0.1)).unwrap(),
        ];
        for n in &nets {
            assert!(validate_network(n).is_empty());
        }
        assert_eq!(nets[0].internals().len(), 2);
        let att = &nets[2];
        assert!(att.outputs().contains(&NeuronId::from("y1")));
        assert_eq!(att.inputs().len(), 4);
    }

    #[test]
    fn wta_default_profile_balances_at_zero() {
        let w = WtaWeights::default();
        let zero = w.input + w.self_loop - w.output_bias - w.stab_to_output - w.conv_to_output;
        assert_eq!(zero, 0.0);
    }

    #[test]
    fn cyclic_toy_roles() {
        let toy = cyclic_toy(p(0.05)).unwrap();
        let c = &toy.composite;
        assert!(c.inputs().is_empty());
        assert_eq!(c.outputs().len(), 2);
        assert_eq!(c.internals().len(), 2);
        assert_eq!(c.f0().get(&"x1".into()), Some(true));
        assert!(!crate::compose::is_acyclic_composition(&toy.n1, &toy.n2));
    }
}
