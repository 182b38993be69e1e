//! Finite-horizon behavior fingerprints: cone probabilities of every trace
//! up to a horizon, and their one-step conditional form.

use std::collections::{BTreeMap, BTreeSet};

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::model::{Execution, FiringPattern, InputExecution, NeuronId};

/// A finite trace as bit rows over a fingerprint's external neurons
/// (bit `i` is the `i`-th neuron in canonical order).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TraceKey(pub Vec<u64>);

impl TraceKey {
    pub fn length(&self) -> usize {
        self.0.len() - 1
    }

    pub fn parent(&self) -> Option<TraceKey> {
        (self.0.len() > 1).then(|| TraceKey(self.0[..self.0.len() - 1].to_vec()))
    }

    pub fn prefix(&self, length: usize) -> TraceKey {
        TraceKey(self.0[..=length].to_vec())
    }

    /// Rows of 0/1 in neuron order, one row per step, joined by `|`.
    pub fn render(&self, width: usize) -> String {
        self.0
            .iter()
            .map(|row| (0..width).map(|i| if row >> i & 1 == 1 { '1' } else { '0' }).collect::<String>())
            .collect::<Vec<_>>()
            .join("|")
    }

    pub fn parse(s: &str, width: usize) -> Result<TraceKey> {
        let mut rows = Vec::new();
        for part in s.split('|') {
            if part.len() != width {
                return Err(Error::Format(format!("trace row `{part}` should have {width} digits")));
            }
            let mut row = 0u64;
            for (i, ch) in part.chars().enumerate() {
                match ch {
                    '1' => row |= 1 << i,
                    '0' => {}
                    _ => return Err(Error::Format(format!("bad digit `{ch}` in trace row"))),
                }
            }
            rows.push(row);
        }
        Ok(TraceKey(rows))
    }
}

/// Read-only view of a trace for event predicates.
#[derive(Clone, Copy, Debug)]
pub struct TraceView<'a> {
    pub(crate) names: &'a [NeuronId],
    pub(crate) rows: &'a [u64],
}

impl<'a> TraceView<'a> {
    pub fn new(names: &'a [NeuronId], rows: &'a [u64]) -> Self {
        TraceView { names, rows }
    }

    pub fn length(&self) -> usize {
        self.rows.len() - 1
    }

    pub fn neurons(&self) -> &'a [NeuronId] {
        self.names
    }

    /// Firing state of `name` at time `t`. Panics when `name` is not external.
    pub fn fires(&self, t: usize, name: &str) -> bool {
        let i = self
            .names
            .binary_search_by(|u| u.as_str().cmp(name))
            .unwrap_or_else(|_| panic!("`{name}` is not an external neuron of this trace"));
        self.rows[t] >> i & 1 == 1
    }

    pub fn try_fires(&self, t: usize, name: &str) -> Option<bool> {
        let i = self.names.binary_search_by(|u| u.as_str().cmp(name)).ok()?;
        Some(self.rows[t] >> i & 1 == 1)
    }

    pub fn pattern(&self, t: usize) -> FiringPattern {
        self.names
            .iter()
            .enumerate()
            .map(|(i, u)| (u.clone(), self.rows[t] >> i & 1 == 1))
            .collect()
    }

    pub fn to_execution(&self) -> Execution {
        Execution::new((0..self.rows.len()).map(|t| self.pattern(t)).collect()).expect("uniform domain")
    }
}

/// Cone probabilities `P(A(β))` for every trace `β` of length at most
/// `horizon` consistent with one input execution.
///
/// Exact fingerprints list every consistent trace; empirical ones (with
/// `trials` set) list only observed traces.
#[derive(Clone, Debug, PartialEq)]
pub struct BehaviorFingerprint {
    pub horizon: usize,
    pub lambda: f64,
    pub input: InputExecution,
    pub external: Vec<NeuronId>,
    pub entries: BTreeMap<TraceKey, f64>,
    pub trials: Option<u64>,
}

impl BehaviorFingerprint {
    pub fn key_of(&self, beta: &Execution) -> Result<TraceKey> {
        key_of(&self.external, beta)
    }

    pub fn get(&self, beta: &Execution) -> Result<f64> {
        Ok(self.entries.get(&self.key_of(beta)?).copied().unwrap_or(0.0))
    }

    pub fn view<'a>(&'a self, key: &'a TraceKey) -> TraceView<'a> {
        TraceView::new(&self.external, &key.0)
    }

    /// Entries of exactly the given length.
    pub fn at_length(&self, length: usize) -> impl Iterator<Item = (&TraceKey, f64)> {
        self.entries.iter().filter(move |(k, _)| k.length() == length).map(|(k, v)| (k, *v))
    }

    /// Largest `|P(β) − Σ P(β·c)|` over traces shorter than the horizon.
    pub fn cone_additivity_residual(&self) -> f64 {
        let mut child_sums: BTreeMap<TraceKey, f64> = BTreeMap::new();
        for (k, v) in &self.entries {
            if let Some(p) = k.parent() {
                *child_sums.entry(p).or_insert(0.0) += v;
            }
        }
        self.entries
            .iter()
            .filter(|(k, _)| k.length() < self.horizon)
            .map(|(k, v)| (v - child_sums.get(k).copied().unwrap_or(0.0)).abs())
            .fold(0.0, f64::max)
    }

    /// One-step conditional form.
    pub fn to_beh2(&self) -> Beh2Fingerprint {
        let initial = self
            .at_length(0)
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(k, _)| k.0[0])
            .unwrap_or(0);
        let entries = self
            .entries
            .iter()
            .filter_map(|(k, v)| {
                let parent = k.parent()?;
                let den = self.entries.get(&parent).copied().unwrap_or(0.0);
                Some((k.clone(), if den > 0.0 { v / den } else { 0.0 }))
            })
            .collect();
        Beh2Fingerprint {
            horizon: self.horizon,
            lambda: self.lambda,
            input: self.input.clone(),
            external: self.external.clone(),
            initial,
            entries,
        }
    }

    /// Sums out the neurons in `hidden`.
    pub fn marginalize(&self, hidden: &BTreeSet<NeuronId>) -> BehaviorFingerprint {
        let keep: Vec<usize> = (0..self.external.len()).filter(|&i| !hidden.contains(&self.external[i])).collect();
        let external = keep.iter().map(|&i| self.external[i].clone()).collect();
        let mut entries = BTreeMap::new();
        for (k, v) in &self.entries {
            let rows = k.0.iter().map(|&r| compress(r, &keep)).collect();
            *entries.entry(TraceKey(rows)).or_insert(0.0) += v;
        }
        BehaviorFingerprint {
            horizon: self.horizon,
            lambda: self.lambda,
            input: self.input.clone(),
            external,
            entries,
            trials: self.trials,
        }
    }

    /// `max |a(β) − b(β)|` over the union of entries.
    pub fn max_abs_diff(&self, other: &BehaviorFingerprint) -> f64 {
        max_abs_diff(&self.entries, &other.entries)
    }

    /// Total variation distance between the length-`horizon` distributions.
    pub fn total_variation(&self, other: &BehaviorFingerprint) -> f64 {
        let mut keys: BTreeSet<&TraceKey> = BTreeSet::new();
        keys.extend(self.entries.keys().filter(|k| k.length() == self.horizon));
        keys.extend(other.entries.keys().filter(|k| k.length() == other.horizon));
        0.5 * keys
            .into_iter()
            .map(|k| {
                (self.entries.get(k).copied().unwrap_or(0.0) - other.entries.get(k).copied().unwrap_or(0.0)).abs()
            })
            .sum::<f64>()
    }

    pub fn to_json(&self) -> Value {
        let width = self.external.len();
        let entries: serde_json::Map<String, Value> =
            self.entries.iter().map(|(k, v)| (k.render(width), json!(v))).collect();
        let mut header = json!({
            "horizon": self.horizon,
            "lambda": self.lambda,
            "neurons": self.external,
            "input": crate::json::input_to_json(&self.input),
        });
        if let Some(n) = self.trials {
            header["trials"] = json!(n);
        }
        json!({ "header": header, "entries": entries })
    }
}

/// One-step conditional probabilities `P(A(β) | A(β'))` for every trace of
/// length 1..=horizon.
#[derive(Clone, Debug, PartialEq)]
pub struct Beh2Fingerprint {
    pub horizon: usize,
    pub lambda: f64,
    pub input: InputExecution,
    pub external: Vec<NeuronId>,
    /// External configuration at time 0.
    pub initial: u64,
    pub entries: BTreeMap<TraceKey, f64>,
}

impl Beh2Fingerprint {
    pub fn get(&self, beta: &Execution) -> Result<f64> {
        Ok(self.entries.get(&key_of(&self.external, beta)?).copied().unwrap_or(0.0))
    }

    /// Rebuilds cone probabilities as chain products of conditionals.
    pub fn to_behavior(&self) -> BehaviorFingerprint {
        let mut entries = BTreeMap::new();
        entries.insert(TraceKey(vec![self.initial]), 1.0);
        // keys sort shorter-first within a branch, so parents are filled in first
        let mut by_len: Vec<(&TraceKey, f64)> = self.entries.iter().map(|(k, v)| (k, *v)).collect();
        by_len.sort_by_key(|(k, _)| k.length());
        for (k, v) in by_len {
            let parent = k.parent().expect("length > 0");
            let base = entries.get(&parent).copied().unwrap_or(0.0);
            entries.insert(k.clone(), base * v);
        }
        BehaviorFingerprint {
            horizon: self.horizon,
            lambda: self.lambda,
            input: self.input.clone(),
            external: self.external.clone(),
            entries,
            trials: None,
        }
    }

    /// Largest `|1 − Σ_β P(β | β')|` over the prefixes `β'`.
    pub fn normalization_residual(&self) -> f64 {
        let mut sums: BTreeMap<TraceKey, f64> = BTreeMap::new();
        for (k, v) in &self.entries {
            *sums.entry(k.parent().expect("length > 0")).or_insert(0.0) += v;
        }
        sums.values().map(|s| (1.0 - s).abs()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Beh2Fingerprint) -> f64 {
        max_abs_diff(&self.entries, &other.entries)
    }
}

fn max_abs_diff(a: &BTreeMap<TraceKey, f64>, b: &BTreeMap<TraceKey, f64>) -> f64 {
    let keys: BTreeSet<&TraceKey> = a.keys().chain(b.keys()).collect();
    keys.into_iter()
        .map(|k| (a.get(k).copied().unwrap_or(0.0) - b.get(k).copied().unwrap_or(0.0)).abs())
        .fold(0.0, f64::max)
}

fn compress(row: u64, keep: &[usize]) -> u64 {
    keep.iter().enumerate().fold(0, |acc, (j, &i)| acc | ((row >> i & 1) << j))
}

pub(crate) fn key_of(external: &[NeuronId], beta: &Execution) -> Result<TraceKey> {
    if beta.domain().iter().ne(external.iter()) {
        return Err(Error::DomainMismatch("trace domain differs from the fingerprint's neurons".into()));
    }
    Ok(TraceKey(
        beta.configs()
            .iter()
            .map(|c| {
                external
                    .iter()
                    .enumerate()
                    .fold(0u64, |acc, (i, u)| acc | ((c.get(u).unwrap_or(false) as u64) << i))
            })
            .collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_render_round_trip() {
        let k = TraceKey(vec![0b01, 0b11, 0b10]);
        let s = k.render(2);
        assert_eq!(s, "10|11|01");
        assert_eq!(TraceKey::parse(&s, 2).unwrap(), k);
        assert!(TraceKey::parse("1|0", 2).is_err());
    }

    #[test]
    fn compress_keeps_selected_bits() {
        assert_eq!(compress(0b1011, &[0, 2, 3]), 0b101);
    }
}
