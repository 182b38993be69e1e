//! `snnet`: build, compose, hide, query, simulate and verify stochastic
//! spiking networks. Every command prints JSON on standard output.
//!
//! Exit codes: 0 success, 1 usage error, 2 model error, 3 verification
//! failure.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use snnet::compose::{compatible, compose, hide};
use snnet::json::{
    execution_from_str, execution_to_json, input_from_str, network_from_str, network_to_json, requirements_from_str,
};
use snnet::montecarlo::{empirical_fingerprint, estimate_event, sample_execution, TrialConfig};
use snnet::problems::{
    attention_delta, attention_problem, copy_problem, filter_problem, problem_hide, solves, wta_problem, Mode, Problem,
};
use snnet::verify::{check_pair, check_single, run_suite, Lemma, SuiteConfig, SuiteReport};
use snnet::{builders, EngineParams, Error, Execution, FiringPattern, InputExecution, Network, NeuronId, ProbabilisticExecution};

#[derive(Parser)]
#[command(name = "snnet", version, about = "Stochastic spiking network toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a named network and print its JSON.
    Build {
        /// identity, and, or, not, nand, xor, wta, filter, attention or cyclic
        builder: String,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        lambda: Option<f64>,
        /// Fan-in of and/or gates.
        #[arg(long)]
        k: Option<usize>,
        /// Number of channels of wta/filter/attention.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        gamma: Option<f64>,
    },
    /// Compose two networks.
    Compose { a: PathBuf, b: PathBuf },
    /// Reclassify outputs as internal neurons.
    Hide {
        net: PathBuf,
        #[arg(required = true)]
        names: Vec<String>,
    },
    /// Exact probability of a trace or execution.
    Prob {
        net: PathBuf,
        #[arg(long)]
        input: PathBuf,
        /// Trace (external neurons) or execution (all neurons).
        #[arg(long)]
        trace: PathBuf,
        /// Report the probability conditioned on the one-step prefix.
        #[arg(long)]
        conditional: bool,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
    },
    /// Sample executions; with --trials, estimate an event or the behavior.
    Simulate {
        net: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        horizon: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long, default_value_t = 0.99)]
        confidence: f64,
        /// Event file `{"require":[{"t","neuron","fires"}]}`.
        #[arg(long)]
        event: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
    },
    /// Check a composition or hiding identity numerically.
    Verify {
        /// acyclic-factorization, compose-out, compose-out-2, independence,
        /// hiding or beh2-equivalence
        lemma: String,
        #[arg(long)]
        net1: Option<PathBuf>,
        #[arg(long)]
        net2: Option<PathBuf>,
        /// Input execution for --net1/--net2; all-zero when omitted.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Outputs to hide (hiding with --net1).
        #[arg(long = "hide", value_delimiter = ',')]
        hidden: Vec<String>,
        /// Number of random instances.
        #[arg(long)]
        random: Option<usize>,
        #[arg(long, default_value_t = 3)]
        max_neurons: usize,
        #[arg(long, default_value_t = 4)]
        horizon: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Sampled executions per instance for execution-level identities.
        #[arg(long, default_value_t = 8)]
        samples: usize,
    },
    /// Check that a network solves a named problem.
    Check {
        net: PathBuf,
        /// copy, filter, wta, attention or hidden-attention
        problem: String,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        delta1: Option<f64>,
        #[arg(long)]
        delta2: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        t_c: Option<usize>,
        #[arg(long)]
        t_s: Option<usize>,
        /// Input executions to test; every stable input pattern when omitted.
        #[arg(long)]
        input: Vec<PathBuf>,
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long, value_enum, default_value_t = CheckMode::Exact)]
        mode: CheckMode,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.99)]
        confidence: f64,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum CheckMode {
    Exact,
    Montecarlo,
}

enum Failure {
    Usage(String),
    Model(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Model(e)
    }
}

/// Output plus whether the command's check succeeded.
struct Outcome {
    value: Value,
    ok: bool,
}

impl From<Value> for Outcome {
    fn from(value: Value) -> Self {
        Outcome { value, ok: true }
    }
}

type Run = Result<Outcome, Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn load_network(path: &Path) -> Result<Network, Failure> {
    Ok(network_from_str(&read(path)?)?)
}

fn load_input(path: &Path) -> Result<InputExecution, Failure> {
    Ok(input_from_str(&read(path)?)?)
}

fn engine(lambda: f64) -> Result<EngineParams, Failure> {
    Ok(EngineParams::new(lambda)?)
}

fn names(v: &[String]) -> BTreeSet<NeuronId> {
    v.iter().map(|s| NeuronId::from(s.as_str())).collect()
}

/// The all-zero stable input over `inputs`.
fn quiet_input(inputs: &BTreeSet<NeuronId>) -> InputExecution {
    InputExecution::stable(FiringPattern::uniform(inputs, false))
}

/// Every stable input execution over `inputs`.
fn stable_inputs(inputs: &BTreeSet<NeuronId>) -> Result<Vec<InputExecution>, Failure> {
    if inputs.len() > 12 {
        return Err(Failure::Usage("too many inputs to enumerate; pass --input".into()));
    }
    let list: Vec<&NeuronId> = inputs.iter().collect();
    Ok((0u32..1 << list.len())
        .map(|m| {
            let p = list.iter().enumerate().map(|(i, u)| ((*u).clone(), m >> i & 1 == 1)).collect();
            InputExecution::stable(p)
        })
        .collect())
}

fn build(builder: &str, delta: Option<f64>, lambda: Option<f64>, k: Option<usize>, n: Option<usize>, gamma: Option<f64>) -> Run {
    let mut args = BTreeMap::new();
    for (key, v) in [
        ("delta", delta),
        ("lambda", lambda),
        ("k", k.map(|x| x as f64)),
        ("n", n.map(|x| x as f64)),
        ("gamma", gamma),
    ] {
        if let Some(v) = v {
            args.insert(key.to_string(), v);
        }
    }
    if !builders::BUILDER_NAMES.contains(&builder) {
        return Err(Failure::Usage(format!(
            "unknown builder `{builder}`; expected one of {}",
            builders::BUILDER_NAMES.join(", ")
        )));
    }
    Ok(network_to_json(&builders::by_name(builder, &args)?).into())
}

fn compose_cmd(a: &Path, b: &Path) -> Run {
    let (n1, n2) = (load_network(a)?, load_network(b)?);
    let report = compatible(&n1, &n2);
    if !report.is_compatible() {
        return Err(Error::Incompatible(report).into());
    }
    Ok(network_to_json(&compose(&n1, &n2)?).into())
}

fn prob(net: &Path, input: &Path, trace: &Path, conditional: bool, lambda: f64) -> Run {
    let net = load_network(net)?;
    let beta_in = load_input(input)?;
    let beta = execution_from_str(&read(trace)?)?;
    let pe = ProbabilisticExecution::new(&net, engine(lambda)?, &beta_in)?;
    let is_execution = beta.domain() == net.neuron_ids();
    let p = |e: &Execution| if is_execution { pe.execution_probability(e) } else { pe.trace_probability(e) };
    let value = if conditional {
        let prev = beta
            .one_step_prefix()
            .ok_or_else(|| Failure::Usage("--conditional needs a trace of length ≥ 1".into()))?;
        snnet::conditional_probability(p(&beta)?, p(&prev)?)?
    } else {
        p(&beta)?
    };
    Ok(json!({
        "kind": if is_execution { "execution" } else { "trace" },
        "conditional": conditional,
        "length": beta.length(),
        "probability": value,
    })
    .into())
}

#[allow(clippy::too_many_arguments)]
fn simulate(
    net: &Path,
    input: &Path,
    horizon: usize,
    seed: u64,
    trials: Option<u64>,
    confidence: f64,
    event: Option<&Path>,
    lambda: f64,
) -> Run {
    let net = load_network(net)?;
    let beta_in = load_input(input)?;
    let params = engine(lambda)?;
    let Some(trials) = trials else {
        if event.is_some() {
            return Err(Failure::Usage("--event needs --trials".into()));
        }
        return Ok(execution_to_json(&sample_execution(&net, params, &beta_in, horizon, seed)?).into());
    };
    let cfg = TrialConfig::new(trials, horizon, seed).with_confidence(confidence);
    match event {
        Some(path) => {
            let req = requirements_from_str(&read(path)?)?;
            let e = estimate_event(&net, params, &beta_in, &req, &cfg)?;
            Ok(json!({
                "estimate": e.estimate,
                "ci_low": e.ci_low,
                "ci_high": e.ci_high,
                "successes": e.successes,
                "trials": e.trials,
                "confidence": confidence,
                "seed": seed,
            })
            .into())
        }
        None => Ok(empirical_fingerprint(&net, params, &beta_in, &cfg)?.to_json().into()),
    }
}

#[allow(clippy::too_many_arguments)]
fn verify(
    lemma: &str,
    net1: Option<&Path>,
    net2: Option<&Path>,
    input: Option<&Path>,
    hidden: &[String],
    random: Option<usize>,
    max_neurons: usize,
    horizon: usize,
    seed: u64,
    samples: usize,
) -> Run {
    let lemma = Lemma::parse(lemma).map_err(|e| Failure::Usage(e.to_string()))?;
    let report = match (random, net1) {
        (Some(_), Some(_)) => return Err(Failure::Usage("use either --random or --net1".into())),
        (Some(instances), None) => {
            let cfg = SuiteConfig { instances, max_neurons, horizon, seed, samples };
            run_suite(lemma, &cfg)?
        }
        (None, Some(path1)) => {
            let n1 = load_network(path1)?;
            let params = EngineParams::default();
            let (checks, max_residual) = if lemma.needs_pair() {
                let n2 = load_network(net2.ok_or_else(|| Failure::Usage("this identity needs --net2".into()))?)?;
                let composite = compose(&n1, &n2)?;
                let beta_in = match input {
                    Some(p) => load_input(p)?,
                    None => quiet_input(&composite.inputs()),
                };
                let cfg = SuiteConfig { instances: 1, max_neurons, horizon, seed, samples };
                check_pair(lemma, &n1, &n2, params, &beta_in, &cfg)?
            } else {
                if net2.is_some() {
                    return Err(Failure::Usage("this identity takes a single network".into()));
                }
                let beta_in = match input {
                    Some(p) => load_input(p)?,
                    None => quiet_input(&n1.inputs()),
                };
                check_single(lemma, &n1, &names(hidden), params, &beta_in, horizon)?
            };
            SuiteReport { lemma, instances: 1, checks, max_residual, tolerance: lemma.tolerance() }
        }
        (None, None) => return Err(Failure::Usage("give --random N or --net1".into())),
    };
    Ok(Outcome { ok: report.passed(), value: report.to_json() })
}

struct ProblemArgs {
    delta: Option<f64>,
    delta1: Option<f64>,
    delta2: Option<f64>,
    n: Option<usize>,
    t_c: Option<usize>,
    t_s: Option<usize>,
}

fn named_problem(name: &str, a: &ProblemArgs) -> Result<Problem, Failure> {
    let need = |v: Option<f64>, flag: &str| v.ok_or_else(|| Failure::Usage(format!("`{name}` needs --{flag}")));
    let n = a.n.unwrap_or(2);
    let timing = || -> Result<(usize, usize), Failure> {
        Ok((
            a.t_c.ok_or_else(|| Failure::Usage(format!("`{name}` needs --t-c")))?,
            a.t_s.ok_or_else(|| Failure::Usage(format!("`{name}` needs --t-s")))?,
        ))
    };
    let attention = || -> Result<Problem, Failure> {
        let (t_c, t_s) = timing()?;
        let split = (need(a.delta1, "delta1")?, need(a.delta2, "delta2")?);
        Ok(attention_problem(n, attention_delta(t_s, split), t_c, t_s, split)?)
    };
    Ok(match name {
        "copy" => copy_problem(need(a.delta, "delta")?)?,
        "filter" => filter_problem(n, need(a.delta, "delta")?)?,
        "wta" => {
            let (t_c, t_s) = timing()?;
            wta_problem(a.n.unwrap_or(3), need(a.delta, "delta")?, t_c, t_s)?
        }
        "attention" => attention()?,
        "hidden-attention" => {
            let ys = (1..=n).map(|i| NeuronId::new(format!("y{i}"))).collect();
            problem_hide(&attention()?, &ys)?
        }
        other => {
            return Err(Failure::Usage(format!(
                "unknown problem `{other}`; expected copy, filter, wta, attention or hidden-attention"
            )))
        }
    })
}

#[allow(clippy::too_many_arguments)]
fn check(
    net: &Path,
    problem: &str,
    pargs: &ProblemArgs,
    inputs: &[PathBuf],
    horizon: Option<usize>,
    mode: CheckMode,
    trials: u64,
    seed: u64,
    confidence: f64,
    lambda: f64,
) -> Run {
    let net = load_network(net)?;
    let problem = named_problem(problem, pargs)?;
    let inputs = if inputs.is_empty() {
        stable_inputs(&problem.inputs)?
    } else {
        inputs.iter().map(|p| load_input(p)).collect::<Result<_, _>>()?
    };
    let horizon = horizon.unwrap_or(problem.min_horizon().max(3));
    let mode = match mode {
        CheckMode::Exact => Mode::Exact,
        CheckMode::Montecarlo => Mode::MonteCarlo(TrialConfig::new(trials, horizon, seed).with_confidence(confidence)),
    };
    let verdict = solves(&net, engine(lambda)?, &problem, &inputs, horizon, mode)?;
    let mut value = verdict.to_json();
    value["horizon"] = json!(horizon);
    Ok(Outcome { ok: verdict.solved, value })
}

fn run(cli: Cli) -> Run {
    match cli.command {
        Command::Build { builder, delta, lambda, k, n, gamma } => build(&builder, delta, lambda, k, n, gamma),
        Command::Compose { a, b } => compose_cmd(&a, &b),
        Command::Hide { net, names: hidden } => {
            let net = load_network(&net)?;
            Ok(network_to_json(&hide(&net, &names(&hidden))?).into())
        }
        Command::Prob { net, input, trace, conditional, lambda } => prob(&net, &input, &trace, conditional, lambda),
        Command::Simulate { net, input, horizon, seed, trials, confidence, event, lambda } => {
            simulate(&net, &input, horizon, seed, trials, confidence, event.as_deref(), lambda)
        }
        Command::Verify { lemma, net1, net2, input, hidden, random, max_neurons, horizon, seed, samples } => verify(
            &lemma,
            net1.as_deref(),
            net2.as_deref(),
            input.as_deref(),
            &hidden,
            random,
            max_neurons,
            horizon,
            seed,
            samples,
        ),
        Command::Check {
            net,
            problem,
            delta,
            delta1,
            delta2,
            n,
            t_c,
            t_s,
            input,
            horizon,
            mode,
            trials,
            seed,
            confidence,
            lambda,
        } => check(
            &net,
            &problem,
            &ProblemArgs { delta, delta1, delta2, n, t_c, t_s },
            &input,
            horizon,
            mode,
            trials,
            seed,
            confidence,
            lambda,
        ),
    }
}

fn print(v: &Value) {
    // A closed pipe (e.g. `| head`) is not an error worth panicking over.
    let _ = writeln!(std::io::stdout(), "{}", serde_json::to_string_pretty(v).expect("serializable"));
}

fn error_object(kind: &str, message: String, extra: Option<Value>) -> Value {
    let mut e = json!({ "kind": kind, "message": message });
    if let Some(x) = extra {
        e["details"] = x;
    }
    json!({ "error": e })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprint!("{e}");
            print(&error_object("usage", e.kind().to_string(), None));
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(out) => {
            print(&out.value);
            if out.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(3)
            }
        }
        Err(Failure::Usage(msg)) => {
            print(&error_object("usage", msg, None));
            ExitCode::from(1)
        }
        Err(Failure::Model(e)) => {
            let details = match &e {
                Error::Incompatible(report) => Some(
                    report
                        .violations
                        .iter()
                        .map(|v| json!({ "kind": v.kind.tag(), "neuron": v.neuron.as_str(), "owner": v.owner }))
                        .collect(),
                ),
                Error::InvalidNetwork(vs) => Some(vs.iter().map(|v| json!({ "kind": v.kind(), "message": v.to_string() })).collect()),
                _ => None,
            };
            print(&error_object(e.kind(), e.to_string(), details));
            ExitCode::from(2)
        }
    }
}
