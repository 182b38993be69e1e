//! Discrete-time stochastic spiking networks: exact and sampled
//! probabilities of finite executions and traces, composition and hiding
//! of networks, and problem-conformance checks.

pub mod builders;
pub mod compose;
pub mod engine;
pub mod error;
pub mod json;
pub mod model;
pub mod montecarlo;
pub mod problems;
pub mod random;
pub mod verify;

pub use engine::{
    behavior, behavior2, conditional_probability, event_probability, execution_probability, trace_probability,
    transition_probability, Beh2Fingerprint, BehaviorFingerprint, Cone, ProbabilisticExecution, Requirements,
    TraceDistribution, TraceEvent, TraceKey, TraceView,
};
pub use error::{Error, Result};
pub use model::{
    firing_probability, initial_configuration, neuron_set, potential, project_execution, project_pattern, trace,
    validate_network, Edge, EngineParams, Execution, Extension, FiringPattern, InputExecution, Network,
    NetworkBuilder, NeuronClass, NeuronId, NeuronSpec, Violation,
};
