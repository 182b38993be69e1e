//! JSON formats for networks, input executions and finite executions.
//!
//! Networks:
//! `{"neurons":[{"name","class","bias"?,"init"?}],"edges":[{"from","to","weight"}]}`
//! with `bias` and `init` present exactly for non-input neurons.
//!
//! Input executions: `{"inputs":[..],"prefix":[[0|1,..],..],"extension":"zeros|hold|cycle"}`;
//! `cycle` repeats the whole prefix unless `"cycle_start"` says otherwise.
//!
//! Executions and traces: `{"neurons":[..],"configs":[[0|1,..],..]}`.
//!
//! Events: `{"require":[{"t":..,"neuron":..,"fires":0|1},..]}`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::engine::Requirements;
use crate::error::{Error, Result};
use crate::model::{Edge, Execution, Extension, FiringPattern, InputExecution, Network, NeuronClass, NeuronId, NeuronSpec};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NeuronJson {
    name: NeuronId,
    class: NeuronClass,
    #[serde(skip_serializing_if = "Option::is_none")]
    bias: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    init: Option<u8>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkJson {
    neurons: Vec<NeuronJson>,
    #[serde(default)]
    edges: Vec<Edge>,
}

pub fn network_to_json(net: &Network) -> Value {
    let neurons = net
        .neurons()
        .iter()
        .map(|(u, spec)| NeuronJson {
            name: u.clone(),
            class: spec.class,
            bias: spec.bias,
            init: spec.class.is_locally_controlled().then(|| net.f0().get(u).unwrap_or(false) as u8),
        })
        .collect();
    serde_json::to_value(NetworkJson { neurons, edges: net.edges().to_vec() }).expect("serializable")
}

/// Parses and validates a network.
pub fn network_from_json(v: &Value) -> Result<Network> {
    let raw: NetworkJson = serde_json::from_value(v.clone())?;
    let mut neurons = BTreeMap::new();
    let mut f0 = FiringPattern::new();
    for n in raw.neurons {
        if neurons.contains_key(&n.name) {
            return Err(Error::Format(format!("neuron `{}` is listed twice", n.name)));
        }
        match (n.class, n.init) {
            (NeuronClass::Input, Some(_)) => {
                return Err(Error::Format(format!("input neuron `{}` must not have `init`", n.name)))
            }
            (NeuronClass::Input, None) => {}
            (_, None) => return Err(Error::Format(format!("neuron `{}` needs `init`", n.name))),
            (_, Some(b)) if b > 1 => return Err(Error::Format(format!("`init` of `{}` must be 0 or 1", n.name))),
            (_, Some(b)) => f0.set(n.name.clone(), b == 1),
        }
        neurons.insert(n.name, NeuronSpec { class: n.class, bias: n.bias });
    }
    let net = Network::from_parts(neurons, raw.edges, f0);
    let violations = crate::model::validate_network(&net);
    if violations.is_empty() {
        Ok(net)
    } else {
        Err(Error::InvalidNetwork(violations))
    }
}

pub fn network_from_str(s: &str) -> Result<Network> {
    network_from_json(&serde_json::from_str(s)?)
}

fn bits_row(p: &FiringPattern, names: &[NeuronId]) -> Vec<u8> {
    names.iter().map(|u| p.get(u).unwrap_or(false) as u8).collect()
}

fn parse_rows(names: &[NeuronId], rows: &[Vec<u8>]) -> Result<Vec<FiringPattern>> {
    rows.iter()
        .map(|row| {
            if row.len() != names.len() {
                return Err(Error::Format(format!("row has {} entries, expected {}", row.len(), names.len())));
            }
            row.iter()
                .zip(names)
                .map(|(&b, u)| match b {
                    0 | 1 => Ok((u.clone(), b == 1)),
                    _ => Err(Error::Format("firing values must be 0 or 1".into())),
                })
                .collect()
        })
        .collect()
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InputJson {
    inputs: Vec<NeuronId>,
    prefix: Vec<Vec<u8>>,
    extension: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cycle_start: Option<usize>,
}

pub fn input_to_json(inp: &InputExecution) -> Value {
    let names: Vec<NeuronId> = inp.inputs().iter().cloned().collect();
    let (extension, cycle_start) = match inp.extension() {
        Extension::Zeros => ("zeros", None),
        Extension::HoldLast => ("hold", None),
        Extension::Cycle { start: 0 } => ("cycle", None),
        Extension::Cycle { start } => ("cycle", Some(start)),
    };
    serde_json::to_value(InputJson {
        prefix: inp.prefix().iter().map(|p| bits_row(p, &names)).collect(),
        inputs: names,
        extension: extension.into(),
        cycle_start,
    })
    .expect("serializable")
}

pub fn input_from_json(v: &Value) -> Result<InputExecution> {
    let raw: InputJson = serde_json::from_value(v.clone())?;
    let mut names = raw.inputs.clone();
    names.sort();
    names.dedup();
    if names.len() != raw.inputs.len() {
        return Err(Error::Format("input names must be distinct".into()));
    }
    let extension = match (raw.extension.as_str(), raw.cycle_start) {
        ("zeros", None) => Extension::Zeros,
        ("hold", None) => Extension::HoldLast,
        ("cycle", start) => Extension::Cycle { start: start.unwrap_or(0) },
        (_, Some(_)) => return Err(Error::Format("`cycle_start` only applies to `cycle`".into())),
        (other, _) => return Err(Error::Format(format!("unknown extension `{other}`"))),
    };
    let prefix = parse_rows(&raw.inputs, &raw.prefix)?;
    if prefix.is_empty() {
        return Err(Error::Format("input prefix must be non-empty".into()));
    }
    InputExecution::new(prefix, extension)
}

pub fn input_from_str(s: &str) -> Result<InputExecution> {
    input_from_json(&serde_json::from_str(s)?)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExecutionJson {
    neurons: Vec<NeuronId>,
    configs: Vec<Vec<u8>>,
}

pub fn execution_to_json(e: &Execution) -> Value {
    let names: Vec<NeuronId> = e.domain().into_iter().collect();
    serde_json::to_value(ExecutionJson {
        configs: e.configs().iter().map(|p| bits_row(p, &names)).collect(),
        neurons: names,
    })
    .expect("serializable")
}

pub fn execution_from_json(v: &Value) -> Result<Execution> {
    let raw: ExecutionJson = serde_json::from_value(v.clone())?;
    Execution::new(parse_rows(&raw.neurons, &raw.configs)?)
}

pub fn execution_from_str(s: &str) -> Result<Execution> {
    execution_from_json(&serde_json::from_str(s)?)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RequirementJson {
    t: usize,
    neuron: NeuronId,
    fires: u8,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EventJson {
    require: Vec<RequirementJson>,
}

/// Parses `{"require":[{"t":4,"neuron":"x1","fires":1},..]}`.
pub fn requirements_from_str(s: &str) -> Result<Requirements> {
    let raw: EventJson = serde_json::from_str(s)?;
    let mut r = Requirements::new();
    for q in raw.require {
        let fires = match q.fires {
            0 => false,
            1 => true,
            _ => return Err(Error::Format("firing values must be 0 or 1".into())),
        };
        r = r.require(q.t, q.neuron, fires);
    }
    Ok(r)
}
