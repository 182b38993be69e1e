//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if
//! any fails.

mod common;

use std::time::{Duration, Instant};

use common::{restrict, stable, Oracle};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use snnet::builders::{
    and_gate, attention_network, cyclic_toy, filter_network, identity_gate, nand_circuit, or_gate, wta_network,
    xor_circuit, GateParams, WtaWeights, DEFAULT_WTA_GAMMA,
};
use snnet::compose::{compose, hide, Composition};
use snnet::montecarlo::{confidence_for_sigmas, Sampler, TrialConfig};
use snnet::problems::{
    attention_delta, attention_problem, exactly, filter_problem, problem_compose, problem_hide, solves, wta_problem,
    Mode,
};
use snnet::verify::{run_suite, sampled_executions, Lemma, SuiteConfig};
use snnet::{
    transition_probability, EngineParams, FiringPattern, InputExecution, Network, NeuronId, ProbabilisticExecution,
    Requirements, TraceView,
};

const SEED: u64 = 20_240_601;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn params() -> EngineParams {
    EngineParams::default()
}

fn gate(delta: f64) -> GateParams {
    GateParams::new(1.0, delta).unwrap()
}

fn pe(net: &Network, beta_in: &InputExecution) -> ProbabilisticExecution {
    ProbabilisticExecution::new(net, params(), beta_in).unwrap()
}

/// `P(out fires at 1)` under the stable input with the given firing inputs.
fn fires_at_one(net: &Network, out: &str, inputs: &[(&str, bool)]) -> f64 {
    pe(net, &stable(inputs)).event_probability(1, &Requirements::new().require(1, out, true))
}

fn gate_calibration() -> Outcome {
    let net = identity_gate(gate(0.1)).unwrap();
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for x in [false, true] {
        let p = pe(&net, &stable(&[("x", x)])).event_probability(1, &Requirements::new().require(1, "y", x));
        worst = worst.max((p - 0.9).abs());
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= 1e-12 && elapsed < Duration::from_millis(1),
        format!("identity copy probability off by {worst:.1e}; {elapsed:?}"),
    )
}

fn thresholds() -> Outcome {
    let and = and_gate(3, gate(0.1)).unwrap();
    let or = or_gate(3, gate(0.1)).unwrap();
    let cases = [
        (fires_at_one(&and, "y", &[("x1", true), ("x2", true), ("x3", true)]), 0.9),
        (fires_at_one(&and, "y", &[("x1", true), ("x2", true), ("x3", false)]), 0.1),
        (fires_at_one(&or, "y", &[("x1", true), ("x2", false), ("x3", false)]), 0.9),
        (fires_at_one(&or, "y", &[("x1", false), ("x2", false), ("x3", false)]), 0.1),
    ];
    let worst = cases.iter().map(|(p, want)| (p - want).abs()).fold(0.0, f64::max);
    outcome(worst <= 1e-12, format!("and/or boundary probabilities off by at most {worst:.1e}"))
}

fn xor_event(x1: bool, x2: bool) -> Requirements {
    Requirements::new()
        .require(3, "nand", !(x1 && x2))
        .require(3, "or", x1 || x2)
        .require(4, "xor", x1 != x2)
}

const PAIRS: [(bool, bool); 4] = [(false, false), (false, true), (true, false), (true, true)];

fn xor_values() -> Vec<f64> {
    let net = xor_circuit(gate(0.05)).unwrap();
    PAIRS
        .iter()
        .map(|&(x1, x2)| pe(&net, &stable(&[("x1", x1), ("x2", x2)])).event_probability(4, &xor_event(x1, x2)))
        .collect()
}

fn xor_bound() -> Outcome {
    let start = Instant::now();
    let values = xor_values();
    let elapsed = start.elapsed();
    let bound = 0.95f64.powi(5);
    let min = values.iter().copied().fold(1.0, f64::min);
    outcome(
        min >= bound && elapsed < Duration::from_secs(10),
        format!("min over inputs {min:.10} vs bound {bound:.10}; {elapsed:?}"),
    )
}

fn cyclic_event() -> Requirements {
    Requirements::new().require(4, "x1", true).require(4, "x2", true)
}

fn cyclic_value() -> f64 {
    let toy = cyclic_toy(gate(0.05)).unwrap();
    pe(&toy.composite, &InputExecution::empty()).event_probability(4, &cyclic_event())
}

fn cyclic_bound() -> Outcome {
    let delta: f64 = 0.05;
    let p = cyclic_value();
    let bound = (1.0 - delta).powi(7);
    let toy = cyclic_toy(gate(delta)).unwrap();
    let prev: FiringPattern = toy
        .composite
        .neuron_ids()
        .into_iter()
        .map(|u| {
            let v = u.as_str() == "a1" || u.as_str() == "x2";
            (u, v)
        })
        .collect();
    // marginal of x2 firing: sum over the other locally controlled neurons
    let others: Vec<NeuronId> =
        toy.composite.locally_controlled().into_iter().filter(|u| u.as_str() != "x2").collect();
    let mut x2 = 0.0;
    for m in 0u32..1 << others.len() {
        let mut n: FiringPattern = others.iter().enumerate().map(|(i, u)| (u.clone(), m >> i & 1 == 1)).collect();
        n.set("x2".into(), true);
        x2 += transition_probability(&toy.composite, params(), &prev, &n).unwrap();
    }
    let want = 1.0 - delta.powi(3) / ((1.0 - delta).powi(3) + delta.powi(3));
    let err = (x2 - want).abs();
    outcome(
        p >= bound && err <= 1e-12,
        format!("P(x1,x2 at 4) = {p:.7} vs {bound:.7}; one-step x2 off by {err:.1e}"),
    )
}

fn suite(lemma: Lemma, instances: usize, horizon: usize) -> snnet::verify::SuiteReport {
    run_suite(lemma, &SuiteConfig::new(instances, 3, horizon, SEED)).unwrap()
}

fn acyclic_factorization() -> Outcome {
    let start = Instant::now();
    let r = suite(Lemma::AcyclicFactorization, 200, 4);
    let elapsed = start.elapsed();
    outcome(
        r.passed() && elapsed < Duration::from_secs(60),
        format!("{} traces, max residual {:.1e}; {elapsed:?}", r.checks, r.max_residual),
    )
}

fn onestep_factorization() -> Outcome {
    let out = suite(Lemma::ComposeOut, 200, 4);
    let out2 = suite(Lemma::ComposeOut2, 200, 4);
    outcome(
        out.passed() && out2.passed(),
        format!(
            "compose-out {} traces max {:.1e}; four-part {} identities max {:.1e}",
            out.checks, out.max_residual, out2.checks, out2.max_residual
        ),
    )
}

fn execution_independence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut engine: f64 = 0.0;
    let mut oracle: f64 = 0.0;
    let mut checks = 0;
    for i in 0..100 {
        let (n1, n2) = snnet::random::pair(&mut rng, 3, i % 2 == 1);
        let c = compose(&n1, &n2).unwrap();
        let beta_in = snnet::random::input_execution(&mut rng, &c.inputs(), 3);
        let comp = Composition::new(&n1, &n2, params(), &beta_in).unwrap();
        let o = Oracle::new(&c, 1.0, &beta_in);
        for alpha in sampled_executions(&c, params(), &beta_in, 3, 2, &mut rng).unwrap() {
            engine = engine.max(comp.execution_independence(&alpha).unwrap());
            let beta: Vec<_> = alpha.configs().iter().map(|x| restrict(x, &c.external())).collect();
            let mut rhs = 1.0;
            for net in [&n1, &n2] {
                let num: Vec<_> = alpha.configs().iter().map(|x| restrict(x, &net.neuron_ids())).collect();
                let den: Vec<_> = beta.iter().map(|x| restrict(x, &net.external())).collect();
                rhs *= o.conditional(&num, &den);
            }
            oracle = oracle.max((o.conditional(alpha.configs(), &beta) - rhs).abs());
            checks += 1;
        }
    }
    outcome(
        engine <= 1e-9 && oracle <= 1e-9,
        format!("{checks} executions; engine residual {engine:.1e}, enumeration residual {oracle:.1e}"),
    )
}

fn hiding() -> Outcome {
    let r = suite(Lemma::Hiding, 100, 3);
    let delta: f64 = 0.05;
    let nand = hide(&nand_circuit(gate(delta)).unwrap(), &["and".into()].into_iter().collect()).unwrap();
    let min = PAIRS
        .iter()
        .map(|&(x1, x2)| {
            pe(&nand, &stable(&[("x1", x1), ("x2", x2)]))
                .event_probability(3, &Requirements::new().require(3, "nand", !(x1 && x2)))
        })
        .fold(1.0, f64::min);
    let bound = (1.0 - delta).powi(3);
    outcome(
        r.passed() && min >= bound,
        format!("max residual {:.1e}; hidden Nand correct at 3 ≥ {min:.6} vs {bound:.6}", r.max_residual),
    )
}

fn beh2_equivalence() -> Outcome {
    let r = suite(Lemma::Beh2Equivalence, 100, 4);
    outcome(r.passed(), format!("{} entries, round-trip error {:.1e}", r.checks, r.max_residual))
}

fn filter_vs_enumeration() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for _ in 0..100 {
        let internals = rng.gen_range(0..=4);
        let inputs = rng.gen_range(0..=1);
        let shape = snnet::random::Shape::fresh("r", inputs, 1, internals);
        let net = snnet::random::network_with_shape(&mut rng, &shape);
        let horizon = rng.gen_range(1..=4);
        let beta_in = snnet::random::input_execution(&mut rng, &net.inputs(), 3);
        let engine = pe(&net, &beta_in);
        let o = Oracle::new(&net, 1.0, &beta_in);
        for alpha in sampled_executions(&net, params(), &beta_in, horizon, 3, &mut rng).unwrap() {
            let beta = snnet::trace(&net, &alpha).unwrap();
            worst = worst.max((engine.trace_probability(&beta).unwrap() - o.of(&beta)).abs());
            checked += 1;
        }
    }
    outcome(worst <= 1e-12, format!("{checked} traces, max difference {worst:.1e}"))
}

fn monte_carlo() -> Outcome {
    let confidence = confidence_for_sigmas(4.0);
    let cfg = TrialConfig::new(100_000, 4, SEED).with_confidence(confidence);
    let xor = xor_circuit(gate(0.05)).unwrap();
    let exact_xor = xor_values();
    let mut inside = true;
    let mut notes = Vec::new();
    for (i, &(x1, x2)) in PAIRS.iter().enumerate() {
        let s = Sampler::new(&xor, params(), &stable(&[("x1", x1), ("x2", x2)])).unwrap();
        let e = s.estimate(&xor_event(x1, x2), &cfg).unwrap();
        inside &= e.contains(exact_xor[i]);
        notes.push(format!("{:.4}", e.estimate - exact_xor[i]));
    }
    let toy = cyclic_toy(gate(0.05)).unwrap();
    let s = Sampler::new(&toy.composite, params(), &InputExecution::empty()).unwrap();
    let e = s.estimate(&cyclic_event(), &cfg).unwrap();
    let again = s.estimate(&cyclic_event(), &cfg).unwrap();
    let exact = cyclic_value();
    inside &= e.contains(exact);
    outcome(
        inside && e == again,
        format!("xor estimate − exact [{}]; cyclic {:.5} in [{:.5}, {:.5}] ∋ {exact:.5}; repeatable", notes.join(", "), e.estimate, e.ci_low, e.ci_high),
    )
}

const WTA_CONVERGE: usize = 30;
const WTA_HOLD: usize = 10;

/// Index of the output that is the sole firing one for `hold` steps from
/// the earliest window starting by `by`.
fn wta_winner(v: &TraceView, ys: &[&str], by: usize, hold: usize) -> Option<usize> {
    (0..=by).take_while(|t| t + hold - 1 <= v.length()).find_map(|t| {
        (0..ys.len()).find(|&i| (t..t + hold).all(|u| ys.iter().enumerate().all(|(j, y)| v.fires(u, y) == (i == j))))
    })
}

fn wta() -> Outcome {
    let net = wta_network(3, DEFAULT_WTA_GAMMA, &WtaWeights::default()).unwrap();
    let beta_in = stable(&[("x1", true), ("x2", true), ("x3", false)]);
    let horizon = WTA_CONVERGE + WTA_HOLD - 1;
    let cfg = TrialConfig::new(10_000, horizon, SEED);
    let s = Sampler::new(&net, params(), &beta_in).unwrap();
    let traces = s.sample_traces(&cfg).unwrap();
    let mut wins = [0u64; 3];
    let mut lost = 0u64;
    for rows in &traces {
        match wta_winner(&TraceView::new(s.external(), rows), &["y1", "y2", "y3"], WTA_CONVERGE, WTA_HOLD) {
            Some(i) => wins[i] += 1,
            None => lost += 1,
        }
    }
    let n = cfg.trials as f64;
    let success = (wins[0] + wins[1]) as f64 / n;
    let gap = (wins[0] as f64 - wins[1] as f64).abs() / n;
    // the problem-level check must agree with the direct count
    let problem = wta_problem(3, 0.1, WTA_CONVERGE, WTA_HOLD).unwrap();
    let verdict = solves(&net, params(), &problem, &[beta_in], horizon, Mode::MonteCarlo(cfg)).unwrap();
    let reported = verdict.witness[0].checks[0].achieved;
    outcome(
        success >= 0.9 && gap <= 0.05 && wins[2] == 0 && (reported - success).abs() < 1e-12 && verdict.solved,
        format!(
            "γ={DEFAULT_WTA_GAMMA}: converged {success:.4} (y1 {}, y2 {}, y3 {}, none {lost}); winner gap {:.2} pp",
            wins[0],
            wins[1],
            wins[2],
            100.0 * gap
        ),
    )
}

fn problems() -> Outcome {
    // Filter conformance, exact
    let filter = filter_network(2, gate(0.05)).unwrap();
    let fp = filter_problem(2, 1.0 - 0.95f64.powi(2)).unwrap();
    let names = ["w1", "w2", "y1", "y2"];
    let inputs: Vec<InputExecution> = (0u32..16)
        .map(|m| InputExecution::stable(names.iter().enumerate().map(|(i, u)| (NeuronId::from(*u), m >> i & 1 == 1)).collect()))
        .collect();
    let filter_ok = solves(&filter, params(), &fp, &inputs, 3, Mode::Exact).unwrap().solved;

    // composition of singleton problems on random pairs
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst: f64 = 0.0;
    let mut composed_ok = true;
    for i in 0..50 {
        let (n1, n2) = snnet::random::pair(&mut rng, 3, i % 2 == 1);
        let c = compose(&n1, &n2).unwrap();
        let problem = problem_compose(&exactly(&n1, params()), &exactly(&n2, params())).unwrap();
        let beta_in = snnet::random::input_execution(&mut rng, &c.inputs(), 3);
        let v = solves(&c, params(), &problem, &[beta_in], 3, Mode::Exact).unwrap();
        composed_ok &= v.solved;
        worst = worst.max(v.witness[0].checks[0].achieved);
    }

    // hidden Attention, Monte Carlo
    let (d1, d2) = (0.1, 1.0 - 0.99f64.powi(2));
    let (t_c, t_s) = (WTA_CONVERGE, WTA_HOLD);
    let attention = attention_problem(2, attention_delta(t_s, (d1, d2)), t_c, t_s, (d1, d2)).unwrap();
    let ys = ["y1", "y2"].into_iter().map(NeuronId::from).collect();
    let hidden_problem = problem_hide(&attention, &ys).unwrap();
    let net = hide(&attention_network(2, DEFAULT_WTA_GAMMA, &WtaWeights::default(), gate(0.01)).unwrap(), &ys).unwrap();
    let w_pattern = |w1: bool, w2: bool| -> FiringPattern {
        [("x1", true), ("x2", true), ("w1", w1), ("w2", w2)].into_iter().map(|(u, v)| (NeuronId::from(u), v)).collect()
    };
    let beta_in =
        InputExecution::new(vec![w_pattern(true, true), w_pattern(false, true), w_pattern(true, false)], snnet::Extension::Cycle { start: 0 })
            .unwrap();
    let cfg = TrialConfig::new(10_000, t_c + t_s, SEED);
    let v = solves(&net, params(), &hidden_problem, &[beta_in], t_c + t_s, Mode::MonteCarlo(cfg)).unwrap();
    let check = &v.witness[0].checks[0];
    outcome(
        filter_ok && composed_ok && worst <= 1e-9 && v.solved,
        format!(
            "filter solved: {filter_ok}; singleton composition max diff {worst:.1e}; hidden attention {:.4} (CI low {:.4}) vs bound {:.4}",
            check.achieved,
            check.ci_low.unwrap_or(f64::NAN),
            check.required
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 13] = [
        ("gate calibration", gate_calibration),
        ("and/or thresholds", thresholds),
        ("xor bound", xor_bound),
        ("cyclic bound", cyclic_bound),
        ("acyclic factorization", acyclic_factorization),
        ("one-step factorization", onestep_factorization),
        ("execution independence", execution_independence),
        ("hiding marginalization", hiding),
        ("behavior round trip", beh2_equivalence),
        ("forward filter vs enumeration", filter_vs_enumeration),
        ("monte carlo consistency", monte_carlo),
        ("winner-take-all", wta),
        ("problems", problems),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        println!("{} {:>2} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
