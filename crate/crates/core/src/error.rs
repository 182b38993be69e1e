use crate::model::{NeuronId, Violation};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid network: {}", format_violations(.0))]
    InvalidNetwork(Vec<Violation>),

    #[error("neuron `{0}` is not part of the network")]
    UnknownNeuron(NeuronId),

    #[error("neuron `{0}` is an input neuron and has no potential")]
    InputNeuron(NeuronId),

    #[error("domain mismatch: {0}")]
    DomainMismatch(String),

    #[error("execution is inconsistent with the input execution or initial pattern: {0}")]
    InconsistentExecution(String),

    #[error("networks are not compatible: {0}")]
    Incompatible(crate::compose::CompatibilityReport),

    #[error("composition is cyclic: an output of the second network feeds the first")]
    CyclicComposition,

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("interface mismatch: {0}")]
    InterfaceMismatch(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("zero conditioning probability")]
    ZeroProbability,

    #[error("network has {0} neurons; at most 64 are supported")]
    TooManyNeurons(usize),

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable tag for machine-readable error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidNetwork(_) => "invalid-network",
            Error::UnknownNeuron(_) => "unknown-neuron",
            Error::InputNeuron(_) => "input-neuron",
            Error::DomainMismatch(_) => "domain-mismatch",
            Error::InconsistentExecution(_) => "inconsistent-execution",
            Error::Incompatible(_) => "incompatible",
            Error::CyclicComposition => "cyclic-composition",
            Error::Parameter(_) => "parameter",
            Error::InterfaceMismatch(_) => "interface-mismatch",
            Error::Unsupported(_) => "unsupported",
            Error::ZeroProbability => "zero-probability",
            Error::TooManyNeurons(_) => "too-many-neurons",
            Error::Format(_) | Error::Json(_) => "malformed-input",
        }
    }
}

fn format_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
