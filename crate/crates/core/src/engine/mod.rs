//! Exact probabilities via forward filtering over configurations.

pub(crate) mod compiled;
pub mod fingerprint;
pub mod prob;

pub use fingerprint::{Beh2Fingerprint, BehaviorFingerprint, TraceKey, TraceView};
pub use prob::{
    behavior, behavior2, conditional_probability, event_probability, execution_probability, trace_probability,
    transition_probability, Cone, ProbabilisticExecution, Requirements, TraceDistribution, TraceEvent,
};
