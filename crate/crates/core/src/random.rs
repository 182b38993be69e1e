//! Random networks and input executions for property checks.
//!
//! Edges appear with probability 0.5 between any neuron and any locally
//! controlled neuron (self-loops included), weights are uniform in
//! [−3, 3] with |w| < 1e-6 redrawn, and biases are uniform in [−2, 2].

use std::collections::BTreeSet;

use rand::Rng;

use crate::model::{Edge, Extension, FiringPattern, InputExecution, Network, NeuronClass, NeuronId, NeuronSpec};

pub const EDGE_DENSITY: f64 = 0.5;
pub const WEIGHT_RANGE: f64 = 3.0;
pub const BIAS_RANGE: f64 = 2.0;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Shape {
    pub inputs: Vec<NeuronId>,
    pub outputs: Vec<NeuronId>,
    pub internals: Vec<NeuronId>,
}

impl Shape {
    /// Fresh names `{prefix}i0.., {prefix}o0.., {prefix}h0..`.
    pub fn fresh(prefix: &str, inputs: usize, outputs: usize, internals: usize) -> Self {
        let names = |tag: &str, n: usize| (0..n).map(|i| NeuronId::new(format!("{prefix}{tag}{i}"))).collect();
        Shape { inputs: names("i", inputs), outputs: names("o", outputs), internals: names("h", internals) }
    }

    pub fn len(&self) -> usize {
        self.inputs.len() + self.outputs.len() + self.internals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn weight<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let w = rng.gen_range(-WEIGHT_RANGE..=WEIGHT_RANGE);
        if w.abs() >= 1e-6 {
            return w;
        }
    }
}

/// A random network with the given neuron roles.
pub fn network_with_shape<R: Rng + ?Sized>(rng: &mut R, shape: &Shape) -> Network {
    let mut neurons = std::collections::BTreeMap::new();
    let mut f0 = FiringPattern::new();
    for u in &shape.inputs {
        neurons.insert(u.clone(), NeuronSpec { class: NeuronClass::Input, bias: None });
    }
    for (class, set) in [(NeuronClass::Output, &shape.outputs), (NeuronClass::Internal, &shape.internals)] {
        for u in set {
            neurons.insert(u.clone(), NeuronSpec { class, bias: Some(rng.gen_range(-BIAS_RANGE..=BIAS_RANGE)) });
            f0.set(u.clone(), rng.gen_bool(0.5));
        }
    }
    let all: Vec<NeuronId> = neurons.keys().cloned().collect();
    let targets: Vec<NeuronId> = shape.outputs.iter().chain(&shape.internals).cloned().collect();
    let mut edges = Vec::new();
    for from in &all {
        for to in &targets {
            if rng.gen_bool(EDGE_DENSITY) {
                edges.push(Edge { from: from.clone(), to: to.clone(), weight: weight(rng) });
            }
        }
    }
    Network::from_parts(neurons, edges, f0)
}

/// A random network of at most `max_neurons` neurons (at least two) with
/// at least one output and at most `max_internals` internal neurons.
pub fn network<R: Rng + ?Sized>(rng: &mut R, max_neurons: usize, max_internals: usize) -> Network {
    let total = rng.gen_range(2..=max_neurons.max(2));
    let outputs = rng.gen_range(1..=total.min(2));
    let inputs = rng.gen_range(0..=(total - outputs).min(2));
    let internals = (total - outputs - inputs).min(max_internals);
    network_with_shape(rng, &Shape::fresh("n", inputs, outputs, internals))
}

/// Two compatible networks of at most `max_neurons` neurons each. Some
/// outputs of the first feed inputs of the second; when `cyclic` is set
/// an output of the second also feeds an input of the first.
pub fn pair<R: Rng + ?Sized>(rng: &mut R, max_neurons: usize, cyclic: bool) -> (Network, Network) {
    let max = max_neurons.max(2);
    let size1 = rng.gen_range(2..=max);
    let in1 = if cyclic { 1 } else { rng.gen_range(0..=1) };
    let out1 = rng.gen_range(1..=(size1 - in1).min(2));
    let mut s1 = Shape::fresh("p", in1, out1, size1 - in1 - out1);

    let size2 = rng.gen_range(2..=max);
    let mut s2 = Shape::default();
    // the second network reads one output of the first, or shares an input
    let feed = &s1.outputs[rng.gen_range(0..s1.outputs.len())];
    s2.inputs.push(feed.clone());
    if s2.inputs.len() + 1 < size2 && !s1.inputs.is_empty() && rng.gen_bool(0.5) {
        s2.inputs.push(s1.inputs[0].clone());
    }
    let rest = size2 - s2.inputs.len();
    let out2 = rng.gen_range(1..=rest.min(2));
    for i in 0..out2 {
        s2.outputs.push(NeuronId::new(format!("qo{i}")));
    }
    for i in 0..rest - out2 {
        s2.internals.push(NeuronId::new(format!("qh{i}")));
    }
    if cyclic {
        // rename the first network's input to one of the second's outputs
        let back = s2.outputs[0].clone();
        s1.inputs[0] = back;
        s2.inputs.retain(|u| !s2.outputs.contains(u));
    }
    (network_with_shape(rng, &s1), network_with_shape(rng, &s2))
}

/// A random input execution over `inputs` with a prefix of 1..=`max_len`
/// patterns and a random extension rule.
pub fn input_execution<R: Rng + ?Sized>(rng: &mut R, inputs: &BTreeSet<NeuronId>, max_len: usize) -> InputExecution {
    let len = rng.gen_range(1..=max_len.max(1));
    let prefix: Vec<FiringPattern> =
        (0..len).map(|_| inputs.iter().map(|u| (u.clone(), rng.gen_bool(0.5))).collect()).collect();
    let extension = match rng.gen_range(0..3) {
        0 => Extension::Zeros,
        1 => Extension::HoldLast,
        _ => Extension::Cycle { start: rng.gen_range(0..len) },
    };
    InputExecution::new(prefix, extension).expect("non-empty prefix with one domain")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compose::{compatible, is_acyclic_composition};
    use crate::model::validate_network;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generated_instances_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let n = network(&mut rng, 6, 4);
            assert!(validate_network(&n).is_empty());
            assert!(n.internals().len() <= 4);
            for cyclic in [false, true] {
                let (a, b) = pair(&mut rng, 3, cyclic);
                assert!(validate_network(&a).is_empty() && validate_network(&b).is_empty());
                assert!(a.neurons().len() <= 3 && b.neurons().len() <= 3);
                assert!(compatible(&a, &b).is_compatible());
                assert_eq!(is_acyclic_composition(&a, &b), !cyclic);
            }
        }
    }
}
