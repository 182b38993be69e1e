//! Problems as acceptance conditions on trace distributions, and checks
//! that a network solves one.
//!
//! A problem's set of possibilities is represented by a predicate over
//! finite-horizon results. Exact mode evaluates the predicate on the
//! network's exact behavior fingerprint; Monte Carlo mode evaluates it on
//! sampled traces and reports a confidence interval for each bound.

use std::collections::{BTreeMap, BTreeSet};

use serde_json::{json, Value};

use crate::compose::{compatible, Composition};
use crate::engine::{BehaviorFingerprint, ProbabilisticExecution, TraceEvent, TraceKey, TraceView};
use crate::error::{Error, Result};
use crate::model::{EngineParams, Execution, InputExecution, Network, NeuronId};
use crate::montecarlo::{Estimate, Sampler, TrialConfig};

/// Absolute slack granted to exact comparisons against a bound.
pub const EXACT_SLACK: f64 = 1e-12;
/// Tolerance for fingerprint equality and factorization residuals.
pub const FINGERPRINT_TOLERANCE: f64 = 1e-9;

/// Output `output` should fire at `t` exactly when every neuron in
/// `sources` fired at `t − 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct StepRule {
    pub output: NeuronId,
    pub sources: Vec<NeuronId>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WtaSpec {
    /// `(x_i, y_i)` pairs.
    pub pairs: Vec<(NeuronId, NeuronId)>,
    pub bound: f64,
    pub t_c: usize,
    pub t_s: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MirrorSpec {
    /// `(x_i, w_i, z_i)` triples.
    pub triples: Vec<(NeuronId, NeuronId, NeuronId)>,
    pub bound: f64,
    pub t_c: usize,
    pub t_s: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Acceptance {
    /// Every distribution is allowed.
    Any,
    /// Only the behavior of `network`, with `hidden` outputs summed out.
    Exactly { network: Box<Network>, params: EngineParams, hidden: BTreeSet<NeuronId> },
    /// After every prefix, all rule outputs are correct at the next step
    /// with conditional probability at least `bound`.
    StepBound { rules: Vec<StepRule>, bound: f64 },
    /// On stable inputs with at least one firing `x_i`, some output `y_i`
    /// with firing `x_i` becomes the sole firing output by `t_c` and stays
    /// so for `t_s` steps, with probability at least `bound`.
    Wta(WtaSpec),
    /// On stable `x` inputs with at least one firing, some `i` with firing
    /// `x_i` has `z_i` copying `w_i` (one step late) and every other `z`
    /// silent for `t_s` consecutive steps starting by `t_c + 1`.
    Mirror(MirrorSpec),
    Composed(Box<Problem>, Box<Problem>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Problem {
    pub inputs: BTreeSet<NeuronId>,
    pub outputs: BTreeSet<NeuronId>,
    pub acceptance: Acceptance,
}

impl Problem {
    pub fn new(inputs: BTreeSet<NeuronId>, outputs: BTreeSet<NeuronId>, acceptance: Acceptance) -> Result<Self> {
        if !inputs.is_disjoint(&outputs) {
            return Err(Error::Parameter("problem inputs and outputs must be disjoint".into()));
        }
        Ok(Problem { inputs, outputs, acceptance })
    }

    pub fn external(&self) -> BTreeSet<NeuronId> {
        self.inputs.union(&self.outputs).cloned().collect()
    }

    /// Smallest horizon at which the acceptance condition can be decided.
    pub fn min_horizon(&self) -> usize {
        match &self.acceptance {
            Acceptance::Wta(w) => w.t_c + w.t_s - 1,
            Acceptance::Mirror(m) => m.t_c + m.t_s,
            Acceptance::Composed(a, b) => a.min_horizon().max(b.min_horizon()),
            _ => 0,
        }
    }
}

fn ids<'a>(names: impl IntoIterator<Item = &'a str>) -> BTreeSet<NeuronId> {
    names.into_iter().map(NeuronId::from).collect()
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("delta must lie in (0, 1), got {delta}")))
    }
}

pub fn any_problem(inputs: BTreeSet<NeuronId>, outputs: BTreeSet<NeuronId>) -> Result<Problem> {
    Problem::new(inputs, outputs, Acceptance::Any)
}

/// The singleton problem whose only possibility is the behavior of `net`.
pub fn exactly(net: &Network, params: EngineParams) -> Problem {
    Problem {
        inputs: net.inputs(),
        outputs: net.outputs(),
        acceptance: Acceptance::Exactly { network: Box::new(net.clone()), params, hidden: BTreeSet::new() },
    }
}

/// `y` copies `x` one step later with probability at least `1 − δ`.
pub fn copy_problem(delta: f64) -> Result<Problem> {
    check_delta(delta)?;
    let rules = vec![StepRule { output: "y".into(), sources: vec!["x".into()] }];
    Problem::new(ids(["x"]), ids(["y"]), Acceptance::StepBound { rules, bound: 1.0 - delta })
}

pub fn wta_problem(n: usize, delta: f64, t_c: usize, t_s: usize) -> Result<Problem> {
    check_delta(delta)?;
    if n == 0 || t_s == 0 {
        return Err(Error::Parameter("WTA needs n ≥ 1 and t_s ≥ 1".into()));
    }
    let pairs: Vec<(NeuronId, NeuronId)> =
        (1..=n).map(|i| (NeuronId::new(format!("x{i}")), NeuronId::new(format!("y{i}")))).collect();
    Problem::new(
        pairs.iter().map(|p| p.0.clone()).collect(),
        pairs.iter().map(|p| p.1.clone()).collect(),
        Acceptance::Wta(WtaSpec { pairs, bound: 1.0 - delta, t_c, t_s }),
    )
}

/// `z_i = w_i ∧ y_i` one step later; every correct step has conditional
/// probability at least `(1 − δ)^n`.
pub fn filter_problem(n: usize, delta: f64) -> Result<Problem> {
    check_delta(delta)?;
    if n == 0 {
        return Err(Error::Parameter("Filter needs n ≥ 1".into()));
    }
    let rules: Vec<StepRule> = (1..=n)
        .map(|i| StepRule {
            output: NeuronId::new(format!("z{i}")),
            sources: vec![NeuronId::new(format!("w{i}")), NeuronId::new(format!("y{i}"))],
        })
        .collect();
    let inputs = rules.iter().flat_map(|r| r.sources.iter().cloned()).collect();
    let outputs = rules.iter().map(|r| r.output.clone()).collect();
    Problem::new(inputs, outputs, Acceptance::StepBound { rules, bound: (1.0 - delta).powi(n as i32) })
}

/// `WTA(n, δ1, t_c, t_s) × Filter(n, δ2)`, where
/// `1 − δ = (1 − δ1)(1 − δ2)^t_s`.
pub fn attention_problem(n: usize, delta: f64, t_c: usize, t_s: usize, split: (f64, f64)) -> Result<Problem> {
    let (d1, d2) = split;
    check_delta(delta)?;
    let implied = (1.0 - d1) * (1.0 - d2).powi(t_s as i32);
    if ((1.0 - delta) - implied).abs() > 1e-12 {
        return Err(Error::Parameter(format!(
            "split ({d1}, {d2}) gives 1 − δ = {implied}, not {}",
            1.0 - delta
        )));
    }
    problem_compose(&wta_problem(n, d1, t_c, t_s)?, &filter_problem(n, d2)?)
}

/// `δ` satisfying `1 − δ = (1 − δ1)(1 − δ2)^t_s`.
pub fn attention_delta(t_s: usize, split: (f64, f64)) -> f64 {
    1.0 - (1.0 - split.0) * (1.0 - split.1).powi(t_s as i32)
}

pub fn problem_compose(r1: &Problem, r2: &Problem) -> Result<Problem> {
    if !r1.outputs.is_disjoint(&r2.outputs) {
        let shared: Vec<String> = r1.outputs.intersection(&r2.outputs).map(|u| u.to_string()).collect();
        return Err(Error::InterfaceMismatch(format!("problems share outputs {}", shared.join(", "))));
    }
    let outputs: BTreeSet<NeuronId> = r1.outputs.union(&r2.outputs).cloned().collect();
    let inputs = r1.inputs.union(&r2.inputs).filter(|u| !outputs.contains(*u)).cloned().collect();
    Problem::new(inputs, outputs, Acceptance::Composed(Box::new(r1.clone()), Box::new(r2.clone())))
}

/// Restates `r` on the marginal over the outputs outside `hidden`.
pub fn problem_hide(r: &Problem, hidden: &BTreeSet<NeuronId>) -> Result<Problem> {
    if let Some(u) = hidden.iter().find(|u| !r.outputs.contains(*u)) {
        return Err(Error::Parameter(format!("`{u}` is not an output of the problem")));
    }
    if hidden.is_empty() {
        return Ok(r.clone());
    }
    let outputs: BTreeSet<NeuronId> = r.outputs.difference(hidden).cloned().collect();
    let unsupported = || Error::Unsupported("hiding these outputs changes an acceptance condition that has no marginal restatement".into());
    let acceptance = match &r.acceptance {
        Acceptance::Any => Acceptance::Any,
        Acceptance::Exactly { network, params, hidden: h } => Acceptance::Exactly {
            network: network.clone(),
            params: *params,
            hidden: h.union(hidden).cloned().collect(),
        },
        Acceptance::StepBound { rules, .. } => {
            let touched = rules.iter().any(|rule| {
                hidden.contains(&rule.output) || rule.sources.iter().any(|s| hidden.contains(s))
            });
            if touched {
                return Err(unsupported());
            }
            r.acceptance.clone()
        }
        Acceptance::Wta(w) => {
            if w.pairs.iter().any(|(_, y)| hidden.contains(y)) {
                return Err(unsupported());
            }
            r.acceptance.clone()
        }
        Acceptance::Mirror(m) => {
            if m.triples.iter().any(|(_, _, z)| hidden.contains(z)) {
                return Err(unsupported());
            }
            r.acceptance.clone()
        }
        Acceptance::Composed(a, b) => return hide_composed(r, a, b, hidden, outputs),
    };
    Problem::new(r.inputs.clone(), outputs, acceptance)
}

/// Hiding the WTA outputs of a WTA × Filter composition leaves the
/// guarantee that `z` mirrors `w` for the winning index.
fn hide_composed(
    r: &Problem,
    a: &Problem,
    b: &Problem,
    hidden: &BTreeSet<NeuronId>,
    outputs: BTreeSet<NeuronId>,
) -> Result<Problem> {
    if let (Acceptance::Wta(w), Acceptance::StepBound { rules, bound }) = (&a.acceptance, &b.acceptance) {
        let ys: BTreeSet<NeuronId> = w.pairs.iter().map(|p| p.1.clone()).collect();
        if &ys == hidden {
            let mut triples = Vec::new();
            for (x, y) in &w.pairs {
                let rule = rules
                    .iter()
                    .find(|rule| rule.sources.len() == 2 && rule.sources.contains(y))
                    .ok_or_else(|| Error::Unsupported(format!("no filter rule reads `{y}`")))?;
                let other = rule.sources.iter().find(|s| *s != y).expect("two sources").clone();
                triples.push((x.clone(), other, rule.output.clone()));
            }
            let mirror = MirrorSpec {
                triples,
                bound: w.bound * bound.powi(w.t_s as i32),
                t_c: w.t_c,
                t_s: w.t_s,
            };
            return Problem::new(r.inputs.clone(), outputs, Acceptance::Mirror(mirror));
        }
    }
    // hiding only one side's outputs that the other side never reads
    let a_part: BTreeSet<NeuronId> = hidden.intersection(&a.outputs).cloned().collect();
    let b_part: BTreeSet<NeuronId> = hidden.intersection(&b.outputs).cloned().collect();
    if a_part.iter().all(|u| !b.inputs.contains(u)) && b_part.iter().all(|u| !a.inputs.contains(u)) {
        return problem_compose(&problem_hide(a, &a_part)?, &problem_hide(b, &b_part)?);
    }
    Err(Error::Unsupported("hiding outputs that link the two composed problems".into()))
}

/// A network's result for one input execution: its exact behavior
/// fingerprint.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemResult {
    pub input: InputExecution,
    pub dist: BehaviorFingerprint,
}

impl ProblemResult {
    pub fn new(input: InputExecution, dist: BehaviorFingerprint) -> Result<Self> {
        let r = dist.cone_additivity_residual();
        if r > FINGERPRINT_TOLERANCE {
            return Err(Error::Format(format!("result is not a distribution: cone additivity off by {r:e}")));
        }
        Ok(ProblemResult { input, dist })
    }
}

pub fn result_of(net: &Network, params: EngineParams, input: &InputExecution, horizon: usize) -> Result<ProblemResult> {
    let dist = ProbabilisticExecution::new(net, params, input)?.behavior(horizon);
    ProblemResult::new(input.clone(), dist)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundKind {
    AtLeast,
    AtMost,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub kind: BoundKind,
    pub required: f64,
    pub achieved: f64,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub pass: bool,
}

impl Check {
    fn exact(name: impl Into<String>, kind: BoundKind, required: f64, achieved: f64) -> Self {
        let pass = match kind {
            BoundKind::AtLeast => achieved >= required - EXACT_SLACK,
            BoundKind::AtMost => achieved <= required,
        };
        Check { name: name.into(), kind, required, achieved, ci_low: None, ci_high: None, pass }
    }

    /// Passes unless the interval lies entirely below the bound.
    fn sampled(name: impl Into<String>, required: f64, e: Estimate) -> Self {
        Check {
            name: name.into(),
            kind: BoundKind::AtLeast,
            required,
            achieved: e.estimate,
            ci_low: Some(e.ci_low),
            ci_high: Some(e.ci_high),
            pass: e.ci_high >= required,
        }
    }

    fn trivially(name: impl Into<String>) -> Self {
        Check::exact(name, BoundKind::AtLeast, 0.0, 1.0)
    }

    pub fn to_json(&self, input: &InputExecution) -> Value {
        let mut v = json!({
            "check": self.name,
            "input": crate::json::input_to_json(input),
            "kind": match self.kind { BoundKind::AtLeast => "at-least", BoundKind::AtMost => "at-most" },
            "required_bound": self.required,
            "achieved": self.achieved,
            "pass": self.pass,
        });
        if let Some(lo) = self.ci_low {
            v["ci_low"] = json!(lo);
        }
        if let Some(hi) = self.ci_high {
            v["ci_high"] = json!(hi);
        }
        v
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InputVerdict {
    pub input: InputExecution,
    pub checks: Vec<Check>,
}

impl InputVerdict {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Verdict {
    pub solved: bool,
    pub witness: Vec<InputVerdict>,
}

impl Verdict {
    pub fn to_json(&self) -> Value {
        let checks: Vec<Value> =
            self.witness.iter().flat_map(|w| w.checks.iter().map(|c| c.to_json(&w.input))).collect();
        json!({ "solved": self.solved, "checks": checks })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Mode {
    Exact,
    MonteCarlo(TrialConfig),
}

/// Runs the problem's acceptance condition on the network's result for
/// each input execution.
pub fn solves(
    net: &Network,
    params: EngineParams,
    problem: &Problem,
    inputs: &[InputExecution],
    horizon: usize,
    mode: Mode,
) -> Result<Verdict> {
    if net.inputs() != problem.inputs || net.outputs() != problem.outputs {
        return Err(Error::InterfaceMismatch(format!(
            "network has inputs {:?} and outputs {:?}; the problem expects {:?} and {:?}",
            names(&net.inputs()),
            names(&net.outputs()),
            names(&problem.inputs),
            names(&problem.outputs)
        )));
    }
    if horizon < problem.min_horizon() {
        return Err(Error::Parameter(format!(
            "horizon {horizon} is too short; this problem needs at least {}",
            problem.min_horizon()
        )));
    }
    let mut witness = Vec::new();
    for input in inputs {
        let checks = match mode {
            Mode::Exact => {
                let result = result_of(net, params, input, horizon)?;
                check_result(problem, &result)?
            }
            Mode::MonteCarlo(cfg) => {
                let cfg = TrialConfig { horizon, ..cfg };
                let sampler = Sampler::new(net, params, input)?;
                let traces = sampler.sample_traces(&cfg)?;
                let obs = Observed::Sampled { external: sampler.external(), traces: &traces, cfg };
                check(problem, input, &obs, "")?
            }
        };
        witness.push(InputVerdict { input: input.clone(), checks });
    }
    Ok(Verdict { solved: witness.iter().all(InputVerdict::pass), witness })
}

fn names(set: &BTreeSet<NeuronId>) -> Vec<&str> {
    set.iter().map(NeuronId::as_str).collect()
}

/// Applies the acceptance condition to an exact result.
pub fn check_result(problem: &Problem, result: &ProblemResult) -> Result<Vec<Check>> {
    let ext = problem.external();
    if result.dist.external.iter().ne(ext.iter()) {
        return Err(Error::InterfaceMismatch("result neurons differ from the problem's".into()));
    }
    check(problem, &result.input, &Observed::Exact(&result.dist), "")
}

enum Observed<'a> {
    Exact(&'a BehaviorFingerprint),
    Sampled { external: &'a [NeuronId], traces: &'a [Vec<u64>], cfg: TrialConfig },
}

impl Observed<'_> {
    fn horizon(&self) -> usize {
        match self {
            Observed::Exact(f) => f.horizon,
            Observed::Sampled { cfg, .. } => cfg.horizon,
        }
    }

    fn event(&self, name: &str, bound: f64, event: &dyn TraceEvent) -> Check {
        match self {
            Observed::Exact(f) => {
                let p: f64 = f
                    .at_length(f.horizon)
                    .filter(|(k, _)| event.accepts(&f.view(k)))
                    .map(|(_, v)| v)
                    .sum();
                Check::exact(name, BoundKind::AtLeast, bound, p)
            }
            Observed::Sampled { external, traces, cfg } => {
                let hits = traces.iter().filter(|rows| event.accepts(&TraceView::new(external, rows))).count();
                Check::sampled(name, bound, Estimate::from_counts(hits as u64, cfg.trials, cfg.confidence))
            }
        }
    }

    fn step_bound(&self, name: &str, rules: &[StepRule], bound: f64) -> Check {
        let correct = |view: &TraceView, t: usize| {
            rules.iter().all(|r| {
                let want = r.sources.iter().all(|s| view.fires(t - 1, s.as_str()));
                view.fires(t, r.output.as_str()) == want
            })
        };
        match self {
            Observed::Exact(f) => {
                let mut good: BTreeMap<TraceKey, f64> = BTreeMap::new();
                for (k, v) in f.entries.iter().filter(|(k, _)| k.length() >= 1) {
                    let parent = k.parent().expect("length ≥ 1");
                    let slot = good.entry(parent).or_insert(0.0);
                    if correct(&f.view(k), k.length()) {
                        *slot += v;
                    }
                }
                let worst = good
                    .iter()
                    .filter_map(|(parent, g)| {
                        let den = f.entries.get(parent).copied().unwrap_or(0.0);
                        (den > 0.0).then(|| g / den)
                    })
                    .fold(1.0, f64::min);
                Check::exact(name, BoundKind::AtLeast, bound, worst)
            }
            Observed::Sampled { external, traces, cfg } => {
                let mut hits = 0u64;
                let mut total = 0u64;
                for rows in traces.iter() {
                    let view = TraceView::new(external, rows);
                    for t in 1..rows.len() {
                        total += 1;
                        hits += correct(&view, t) as u64;
                    }
                }
                if total == 0 {
                    return Check::trivially(name);
                }
                Check::sampled(name, bound, Estimate::from_counts(hits, total, cfg.confidence))
            }
        }
    }
}

fn prefixed(prefix: &str, name: &str) -> String {
    if prefix.is_empty() {
        name.to_string()
    } else {
        format!("{prefix}.{name}")
    }
}

/// Whether the `x` inputs are stable with at least one firing, and which fire.
fn firing_stable(input: &InputExecution, xs: &[&NeuronId]) -> Option<Vec<usize>> {
    let set: BTreeSet<NeuronId> = xs.iter().map(|u| (*u).clone()).collect();
    let proj = input.project(&set).ok()?;
    if !proj.is_stable() {
        return None;
    }
    let firing: Vec<usize> = xs.iter().enumerate().filter(|(_, u)| proj.value(0, u)).map(|(i, _)| i).collect();
    (!firing.is_empty()).then_some(firing)
}

pub struct WtaEvent<'a> {
    spec: &'a WtaSpec,
    allowed: Vec<usize>,
}

impl TraceEvent for WtaEvent<'_> {
    fn accepts(&self, v: &TraceView) -> bool {
        let s = self.spec;
        (0..=s.t_c).take_while(|t| t + s.t_s - 1 <= v.length()).any(|t| {
            self.allowed.iter().any(|&i| {
                (t..t + s.t_s).all(|u| {
                    s.pairs.iter().enumerate().all(|(j, (_, y))| v.fires(u, y.as_str()) == (i == j))
                })
            })
        })
    }
}

pub struct MirrorEvent<'a> {
    spec: &'a MirrorSpec,
    allowed: Vec<usize>,
}

impl TraceEvent for MirrorEvent<'_> {
    fn accepts(&self, v: &TraceView) -> bool {
        let s = self.spec;
        (0..=s.t_c).take_while(|t| t + s.t_s <= v.length()).any(|t| {
            self.allowed.iter().any(|&i| {
                (t + 1..=t + s.t_s).all(|u| {
                    s.triples.iter().enumerate().all(|(j, (_, w, z))| {
                        let want = i == j && v.fires(u - 1, w.as_str());
                        v.fires(u, z.as_str()) == want
                    })
                })
            })
        })
    }
}

fn check(problem: &Problem, input: &InputExecution, obs: &Observed, prefix: &str) -> Result<Vec<Check>> {
    match &problem.acceptance {
        Acceptance::Any => Ok(vec![Check::trivially(prefixed(prefix, "any"))]),
        Acceptance::Exactly { network, params, hidden } => {
            let Observed::Exact(f) = obs else {
                return Err(Error::Unsupported("fingerprint-equality problems need exact mode".into()));
            };
            let expected = ProbabilisticExecution::new(network, *params, input)?.behavior(f.horizon).marginalize(hidden);
            if expected.external != f.external {
                return Err(Error::InterfaceMismatch("result neurons differ from the reference network's".into()));
            }
            let diff = expected.max_abs_diff(f);
            Ok(vec![Check::exact(prefixed(prefix, "fingerprint-equality"), BoundKind::AtMost, FINGERPRINT_TOLERANCE, diff)])
        }
        Acceptance::StepBound { rules, bound } => Ok(vec![obs.step_bound(&prefixed(prefix, "step-bound"), rules, *bound)]),
        Acceptance::Wta(spec) => {
            let name = prefixed(prefix, "wta-convergence");
            let xs: Vec<&NeuronId> = spec.pairs.iter().map(|p| &p.0).collect();
            match firing_stable(input, &xs) {
                None => Ok(vec![Check::trivially(format!("{name} (unconstrained input)"))]),
                Some(allowed) => {
                    need_horizon(obs, spec.t_c + spec.t_s - 1)?;
                    Ok(vec![obs.event(&name, spec.bound, &WtaEvent { spec, allowed })])
                }
            }
        }
        Acceptance::Mirror(spec) => {
            let name = prefixed(prefix, "mirror");
            let xs: Vec<&NeuronId> = spec.triples.iter().map(|p| &p.0).collect();
            match firing_stable(input, &xs) {
                None => Ok(vec![Check::trivially(format!("{name} (unconstrained input)"))]),
                Some(allowed) => {
                    need_horizon(obs, spec.t_c + spec.t_s)?;
                    Ok(vec![obs.event(&name, spec.bound, &MirrorEvent { spec, allowed })])
                }
            }
        }
        Acceptance::Composed(a, b) => check_composed(problem, a, b, input, obs, prefix),
    }
}

fn need_horizon(obs: &Observed, h: usize) -> Result<()> {
    if obs.horizon() < h {
        return Err(Error::Parameter(format!("horizon {} is shorter than the required {h}", obs.horizon())));
    }
    Ok(())
}

fn check_composed(
    whole: &Problem,
    a: &Problem,
    b: &Problem,
    input: &InputExecution,
    obs: &Observed,
    prefix: &str,
) -> Result<Vec<Check>> {
    if let (
        Acceptance::Exactly { network: n1, params: p1, hidden: h1 },
        Acceptance::Exactly { network: n2, params: p2, hidden: h2 },
        Observed::Exact(f),
    ) = (&a.acceptance, &b.acceptance, obs)
    {
        if h1.is_empty() && h2.is_empty() {
            if p1 != p2 {
                return Err(Error::Unsupported("composed reference networks must share λ".into()));
            }
            let diff = constructed_possibility_diff(n1, n2, *p1, input, f)?;
            return Ok(vec![Check::exact(
                prefixed(prefix, "composed-fingerprint-equality"),
                BoundKind::AtMost,
                FINGERPRINT_TOLERANCE,
                diff,
            )]);
        }
    }
    let mut checks = Vec::new();
    if let Observed::Exact(f) = obs {
        let (fact, local) = factorization_residuals(a, b, f);
        checks.push(Check::exact(prefixed(prefix, "factorization"), BoundKind::AtMost, FINGERPRINT_TOLERANCE, fact));
        checks.push(Check::exact(prefixed(prefix, "locality"), BoundKind::AtMost, FINGERPRINT_TOLERANCE, local));
    }
    for (tag, part) in [("first", a), ("second", b)] {
        let sub = prefixed(prefix, tag);
        let independent = part.inputs.is_subset(&whole.inputs);
        match &part.acceptance {
            // conditionals given a composite prefix are the component's own
            Acceptance::Any | Acceptance::StepBound { .. } => checks.extend(check(part, input, obs, &sub)?),
            _ if independent => {
                let own = input.project(&part.inputs)?;
                match obs {
                    Observed::Exact(f) => {
                        let hidden: BTreeSet<NeuronId> = whole.outputs.difference(&part.outputs).cloned().collect();
                        let marginal = f.marginalize(&hidden);
                        let inner = BehaviorFingerprint { input: own.clone(), ..marginal };
                        checks.extend(check(part, &own, &Observed::Exact(&inner), &sub)?);
                    }
                    Observed::Sampled { .. } => checks.extend(check(part, &own, obs, &sub)?),
                }
            }
            _ => {
                return Err(Error::Unsupported(format!(
                    "the {tag} component reads outputs of the other and its condition is not a one-step bound"
                )))
            }
        }
    }
    Ok(checks)
}

/// Largest differences between the composite conditionals and the product
/// of per-component marginals, and between component marginals for
/// prefixes that agree on that component's neurons.
fn factorization_residuals(a: &Problem, b: &Problem, f: &BehaviorFingerprint) -> (f64, f64) {
    let ext = &f.external;
    let mask_of = |set: &BTreeSet<NeuronId>| -> u64 {
        ext.iter().enumerate().filter(|(_, u)| set.contains(*u)).fold(0, |m, (i, _)| m | 1 << i)
    };
    let outs = [mask_of(&a.outputs), mask_of(&b.outputs)];
    let own = [mask_of(&a.external()), mask_of(&b.external())];
    // marginal[j][(parent, last row ∧ outs[j])] = Σ R(children) / R(parent)
    let mut marginal: [BTreeMap<(TraceKey, u64), f64>; 2] = Default::default();
    for (k, v) in f.entries.iter().filter(|(k, _)| k.length() >= 1) {
        let parent = k.parent().expect("length ≥ 1");
        let last = *k.0.last().expect("non-empty");
        for j in 0..2 {
            *marginal[j].entry((parent.clone(), last & outs[j])).or_insert(0.0) += v;
        }
    }
    for m in marginal.iter_mut() {
        for ((parent, _), v) in m.iter_mut() {
            let den = f.entries.get(parent).copied().unwrap_or(0.0);
            *v = if den > 0.0 { *v / den } else { 0.0 };
        }
    }
    let mut fact: f64 = 0.0;
    for (k, v) in f.entries.iter().filter(|(k, _)| k.length() >= 1) {
        let parent = k.parent().expect("length ≥ 1");
        let den = f.entries.get(&parent).copied().unwrap_or(0.0);
        if den == 0.0 {
            continue;
        }
        let last = *k.0.last().expect("non-empty");
        let t1 = marginal[0].get(&(parent.clone(), last & outs[0])).copied().unwrap_or(0.0);
        let t2 = marginal[1].get(&(parent.clone(), last & outs[1])).copied().unwrap_or(0.0);
        fact = fact.max((v / den - t1 * t2).abs());
    }
    let mut local: f64 = 0.0;
    for j in 0..2 {
        let mut seen: BTreeMap<(Vec<u64>, u64), f64> = BTreeMap::new();
        for ((parent, row), v) in &marginal[j] {
            let key = (parent.0.iter().map(|r| r & own[j]).collect(), *row);
            match seen.get(&key) {
                Some(prev) => local = local.max((prev - v).abs()),
                None => {
                    seen.insert(key, *v);
                }
            }
        }
    }
    (fact, local)
}

/// Largest difference between `f` and the possibility built recursively
/// from the two reference networks' one-step conditionals.
fn constructed_possibility_diff(
    n1: &Network,
    n2: &Network,
    params: EngineParams,
    input: &InputExecution,
    f: &BehaviorFingerprint,
) -> Result<f64> {
    if !compatible(n1, n2).is_compatible() {
        return Err(Error::Unsupported("reference networks of composed singleton problems must be compatible".into()));
    }
    let comp = Composition::new(n1, n2, params, input)?;
    let mut built: BTreeMap<TraceKey, f64> = BTreeMap::new();
    let mut keys: Vec<&TraceKey> = f.entries.keys().collect();
    keys.sort_by_key(|k| k.length());
    let initial_outputs: Vec<(NeuronId, bool)> =
        n1.outputs().iter().chain(n2.outputs().iter()).map(|u| {
            let v = n1.f0().get(u).or_else(|| n2.f0().get(u)).unwrap_or(false);
            (u.clone(), v)
        }).collect();
    let mut diff: f64 = 0.0;
    for k in keys {
        let view = f.view(k);
        let value = if k.length() == 0 {
            let ok = initial_outputs.iter().all(|(u, v)| view.fires(0, u.as_str()) == *v);
            if ok { 1.0 } else { 0.0 }
        } else {
            let parent = k.parent().expect("length ≥ 1");
            let base = built.get(&parent).copied().unwrap_or(0.0);
            if base == 0.0 {
                0.0
            } else {
                let beta: Execution = view.to_execution();
                base * comp.onestep_sides(&beta)?.1
            }
        };
        diff = diff.max((value - f.entries[k]).abs());
        built.insert(k.clone(), value);
    }
    Ok(diff)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builders::{and_gate, filter_network, identity_gate, GateParams};
    use crate::model::FiringPattern;

    fn inputs_over(names: &[&str]) -> Vec<InputExecution> {
        let set = ids(names.iter().copied());
        (0u32..1 << names.len())
            .map(|m| {
                let p: FiringPattern = set.iter().enumerate().map(|(i, u)| (u.clone(), m >> i & 1 == 1)).collect();
                InputExecution::stable(p)
            })
            .collect()
    }

    #[test]
    fn identity_solves_copy() {
        for delta in [0.3, 0.1, 0.01] {
            let net = identity_gate(GateParams::new(1.0, delta).unwrap()).unwrap();
            let v = solves(&net, EngineParams::default(), &copy_problem(delta).unwrap(), &inputs_over(&["x"]), 3, Mode::Exact)
                .unwrap();
            assert!(v.solved, "delta {delta}: {:?}", v);
        }
    }

    #[test]
    fn interface_mismatch_is_an_error() {
        let net = and_gate(3, GateParams::new(1.0, 0.1).unwrap()).unwrap();
        let r = solves(&net, EngineParams::default(), &wta_problem(3, 0.1, 5, 2).unwrap(), &[], 6, Mode::Exact);
        assert!(matches!(r, Err(Error::InterfaceMismatch(_))));
    }

    #[test]
    fn filter_solves_filter_problem() {
        let net = filter_network(1, GateParams::new(1.0, 0.05).unwrap()).unwrap();
        let v = solves(&net, EngineParams::default(), &filter_problem(1, 0.05).unwrap(), &inputs_over(&["w1", "y1"]), 3, Mode::Exact)
            .unwrap();
        assert!(v.solved);
        let worst = v.witness.iter().map(|w| w.checks[0].achieved).fold(1.0, f64::min);
        assert!((worst - 0.95).abs() < 1e-12);
    }

    #[test]
    fn attention_split_must_match() {
        let (d1, d2) = (0.1, 0.02);
        let d = attention_delta(3, (d1, d2));
        assert!(attention_problem(2, d, 10, 3, (d1, d2)).is_ok());
        assert!(attention_problem(2, d + 0.01, 10, 3, (d1, d2)).is_err());
    }

    #[test]
    fn hiding_wta_outputs_gives_mirror() {
        let (d1, d2) = (0.1, 0.02);
        let p = attention_problem(2, attention_delta(3, (d1, d2)), 10, 3, (d1, d2)).unwrap();
        let h = problem_hide(&p, &ids(["y1", "y2"])).unwrap();
        assert_eq!(h.outputs, ids(["z1", "z2"]));
        let Acceptance::Mirror(m) = &h.acceptance else { panic!("expected a mirror condition") };
        assert!((m.bound - 0.9 * 0.98f64.powi(6)).abs() < 1e-12);
        assert_eq!(problem_hide(&p, &BTreeSet::new()).unwrap(), p);
        assert!(problem_hide(&p, &ids(["x1"])).is_err());
    }
}
