use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use num_rational::BigRational;
use qagree::classical::{
    box_conditional, check_zero_one_chain, classical_recursion, pooled_posterior,
    random_rational_model, signed_conditional, signed_realization_check, ClassicalModel,
    NoSignalingBox, Weight,
};
use qagree::epistemics::{
    branch_probabilities, branch_values, classify_trace, recursion_over, realized_pairs,
    ClassificationKind, RecursionOptions, RecursionTrace,
};
use qagree::limits::{perturbation_check, run_epsilon_recursion, zero_one_check, EpsilonConfig};
use qagree::linalg::ComplexMatrix;
use qagree::quantum_model::{check_commutation, Agent, CommutationReport, Scenario};
use qagree::register::{build_recorded, run_recorded_recursion};
use qagree::scenarios::{sweep_rng, sweep_scenario, SweepMix};
use qagree::TOL;
use serde::Serialize;

use crate::catalog;
use crate::format::{parse_q, Body, Exactness, FromNum, Num, ScenarioFile};

/// A finished command: its machine-readable report, the same content as
/// text, and whether every checked property held.
pub struct Output {
    pub json: serde_json::Value,
    pub text: String,
    pub pass: bool,
}

impl Output {
    fn new(report: &impl Serialize, text: String, pass: bool) -> Self {
        Self {
            json: serde_json::to_value(report).expect("reports serialize"),
            text,
            pass,
        }
    }
}

pub struct Source {
    pub file: Option<PathBuf>,
    pub example: Option<String>,
    pub theta: Option<f64>,
}

impl Source {
    pub fn load(&self) -> anyhow::Result<(String, ScenarioFile)> {
        match (&self.file, &self.example) {
            (Some(path), None) => {
                if self.theta.is_some() {
                    bail!("--theta applies to built-in examples only");
                }
                Ok((path.display().to_string(), ScenarioFile::load(path)?))
            }
            (None, Some(name)) => Ok((
                format!("builtin:{name}"),
                catalog::builtin(name, self.theta)?,
            )),
            (None, None) => bail!("give a scenario file or --example NAME"),
            (Some(_), Some(_)) => bail!("give either a scenario file or --example, not both"),
        }
    }
}

fn quantum(file: &ScenarioFile) -> anyhow::Result<Scenario> {
    match &file.body {
        Body::Quantum(q) => q.build(),
        _ => bail!("expected a quantum scenario, found kind '{}'", file.kind()),
    }
}

fn q_pair(qa: &Option<String>, qb: &Option<String>) -> anyhow::Result<Option<(Num, Num)>> {
    match (qa, qb) {
        (Some(a), Some(b)) => Ok(Some((parse_q(a)?, parse_q(b)?))),
        (None, None) => Ok(None),
        _ => bail!("give both --qa and --qb, or neither to scan every realized pair"),
    }
}

fn fmt_opt(p: Option<f64>) -> String {
    p.map(|x| format!("{x:.6}")).unwrap_or_else(|| "-".into())
}

fn fmt_set<'a>(xs: impl IntoIterator<Item = &'a usize>) -> String {
    let items: Vec<String> = xs.into_iter().map(|x| x.to_string()).collect();
    format!("{{{}}}", items.join(","))
}

#[derive(Serialize)]
struct Level {
    n: usize,
    alice_branches: Vec<usize>,
    bob_branches: Vec<usize>,
}

#[derive(Serialize)]
struct PairResult {
    q_alice: f64,
    q_bob: f64,
    kind: ClassificationKind,
    cc_weight: f64,
    stabilization_index: usize,
    levels: Vec<Level>,
}

impl PairResult {
    fn new(trace: RecursionTrace, qa: f64, qb: f64) -> Self {
        let levels = trace
            .levels
            .iter()
            .enumerate()
            .map(|(n, l)| Level {
                n,
                alice_branches: l.alice_branches.clone(),
                bob_branches: l.bob_branches.clone(),
            })
            .collect();
        let c = classify_trace(trace, qa, qb);
        Self {
            q_alice: qa,
            q_bob: qb,
            kind: c.kind,
            cc_weight: c.trace.cc_weight,
            stabilization_index: c.trace.stabilization_index,
            levels,
        }
    }

    fn render(&self, out: &mut String) {
        let _ = writeln!(
            out,
            "(q_A, q_B) = ({:.6}, {:.6}): {}  cc_weight = {:.9}  N = {}",
            self.q_alice, self.q_bob, self.kind, self.cc_weight, self.stabilization_index
        );
        for l in &self.levels {
            let _ = writeln!(
                out,
                "    n = {}  A: {}  B: {}",
                l.n,
                fmt_set(&l.alice_branches),
                fmt_set(&l.bob_branches)
            );
        }
    }
}

fn probabilities(s: &Scenario, agent: Agent) -> anyhow::Result<Vec<Option<f64>>> {
    Ok(branch_probabilities(s.measurement(agent), s.property(), s.rho())?
        .into_iter()
        .map(|cp| cp.map(|c| c.value))
        .collect())
}

fn render_probabilities(out: &mut String, label: &str, ps: &[Option<f64>]) {
    let cells: Vec<String> = ps.iter().map(|p| fmt_opt(*p)).collect();
    let _ = writeln!(out, "{label}: [{}]", cells.join(", "));
}

#[derive(Serialize)]
struct QuantumClassifyReport {
    command: &'static str,
    source: String,
    dim: usize,
    commutation: CommutationReport,
    alice_probabilities: Vec<Option<f64>>,
    bob_probabilities: Vec<Option<f64>>,
    tol_q: f64,
    epsilon: Option<f64>,
    relax_initial: bool,
    results: Vec<PairResult>,
}

pub struct ClassifyArgs {
    pub source: Source,
    pub qa: Option<String>,
    pub qb: Option<String>,
    pub epsilon: Option<f64>,
    pub tol_q: Option<f64>,
    pub relax_initial: bool,
}

pub fn classify(args: &ClassifyArgs) -> anyhow::Result<Output> {
    let (source, file) = args.source.load()?;
    let q = q_pair(&args.qa, &args.qb)?;
    match &file.body {
        Body::Quantum(spec) => classify_quantum(source, &spec.build()?, q, args),
        Body::Classical(spec) => {
            if args.epsilon.is_some() || args.tol_q.is_some() || args.relax_initial {
                bail!("--epsilon, --tol-q and --relax-initial apply to quantum scenarios only");
            }
            match spec.build()? {
                Exactness::Exact(m) => classify_classical(source, &m, q),
                Exactness::Float(m) => classify_classical(source, &m, q),
            }
        }
        Body::Box(_) => bail!("boxes are analysed with the 'box' command"),
    }
}

fn classify_quantum(
    source: String,
    s: &Scenario,
    q: Option<(Num, Num)>,
    args: &ClassifyArgs,
) -> anyhow::Result<Output> {
    let mut opts = match args.epsilon {
        Some(e) => EpsilonConfig::new(e)?
            .with_relaxed_initial(args.relax_initial)
            .options(),
        None => {
            if args.relax_initial {
                bail!("--relax-initial needs --epsilon");
            }
            RecursionOptions::default()
        }
    };
    if let Some(t) = args.tol_q {
        if !(0.0..1.0).contains(&t) {
            bail!("--tol-q {t} outside [0, 1)");
        }
        opts.tol_q = t;
    }
    let pairs = match q {
        Some((a, b)) => vec![(a.to_f64(), b.to_f64())],
        None => realized_pairs(s)?,
    };
    let mut results = Vec::new();
    for (qa, qb) in pairs {
        let trace = recursion_over(s.alice(), s.bob(), s.property(), s.rho(), qa, qb, &opts)?;
        results.push(PairResult::new(trace, qa, qb));
    }
    let report = QuantumClassifyReport {
        command: "classify",
        source,
        dim: s.dim(),
        commutation: check_commutation(s),
        alice_probabilities: probabilities(s, Agent::Alice)?,
        bob_probabilities: probabilities(s, Agent::Bob)?,
        tol_q: opts.tol_q,
        epsilon: args.epsilon,
        relax_initial: args.relax_initial,
        results,
    };

    let mut text = String::new();
    let _ = writeln!(text, "scenario {} (dimension {})", report.source, report.dim);
    let c = &report.commutation;
    let _ = writeln!(
        text,
        "commutation: [A,B] {}  [A,E] {}  [B,E] {}  (max violation {:.2e})",
        ok(c.ab_ok),
        ok(c.alice_e_ok),
        ok(c.bob_e_ok),
        c.max_violation
    );
    render_probabilities(&mut text, "Alice Pr[E; P_A^i]", &report.alice_probabilities);
    render_probabilities(&mut text, "Bob   Pr[E; P_B^j]", &report.bob_probabilities);
    if let Some(e) = report.epsilon {
        let _ = writeln!(text, "certainty threshold 1 - {e}");
    }
    for r in &report.results {
        r.render(&mut text);
    }
    Ok(Output::new(&report, text, true))
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "FAILS"
    }
}

#[derive(Serialize)]
struct Value {
    value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    exact: Option<String>,
}

impl Value {
    fn of<W: FromNum>(w: &W) -> Self {
        Self {
            value: w.to_f64(),
            exact: w.exact_text(),
        }
    }

    fn show(&self) -> String {
        self.exact.clone().unwrap_or_else(|| format!("{:.9}", self.value))
    }
}

#[derive(Serialize)]
struct ClassicalLevel {
    n: usize,
    alice: Vec<usize>,
    bob: Vec<usize>,
}

#[derive(Serialize)]
struct ClassicalPairResult {
    q_alice: Value,
    q_bob: Value,
    kind: ClassificationKind,
    c_inf: Vec<usize>,
    c_inf_weight: Value,
    stabilization_index: usize,
    levels: Vec<ClassicalLevel>,
}

#[derive(Serialize)]
struct ClassicalClassifyReport {
    command: &'static str,
    source: String,
    exact: bool,
    states: Vec<String>,
    alice_values: Vec<Value>,
    bob_values: Vec<Value>,
    pooled_posteriors: Vec<Option<Value>>,
    results: Vec<ClassicalPairResult>,
}

fn classify_classical<W: FromNum>(
    source: String,
    m: &ClassicalModel<W>,
    q: Option<(Num, Num)>,
) -> anyhow::Result<Output> {
    let alice_values = m.posterior_values(Agent::Alice)?;
    let bob_values = m.posterior_values(Agent::Bob)?;
    let pairs: Vec<(W, W)> = match q {
        Some((a, b)) => vec![(W::from_q(&a), W::from_q(&b))],
        None => alice_values
            .iter()
            .flat_map(|a| bob_values.iter().map(move |b| (a.clone(), b.clone())))
            .collect(),
    };
    let mut results = Vec::new();
    for (qa, qb) in &pairs {
        let rec = classical_recursion(m, qa, qb)?;
        let kind = if !rec.has_common_certainty() {
            ClassificationKind::NoCommonCertainty
        } else if qa.near(qb) {
            ClassificationKind::Agreement
        } else {
            ClassificationKind::Ccd
        };
        results.push(ClassicalPairResult {
            q_alice: Value::of(qa),
            q_bob: Value::of(qb),
            kind,
            c_inf: rec.c_inf.iter().copied().collect(),
            c_inf_weight: Value::of(&rec.c_inf_weight),
            stabilization_index: rec.stabilization_index,
            levels: rec
                .levels
                .iter()
                .enumerate()
                .map(|(n, (a, b))| ClassicalLevel {
                    n,
                    alice: a.iter().copied().collect(),
                    bob: b.iter().copied().collect(),
                })
                .collect(),
        });
    }
    let report = ClassicalClassifyReport {
        command: "classify",
        source,
        exact: W::one().exact_text().is_some(),
        states: m.states().to_vec(),
        alice_values: alice_values.iter().map(Value::of).collect(),
        bob_values: bob_values.iter().map(Value::of).collect(),
        pooled_posteriors: (0..m.len())
            .map(|w| pooled_posterior(m, w).ok().map(|p| Value::of(&p)))
            .collect(),
        results,
    };

    let mut text = String::new();
    let _ = writeln!(
        text,
        "classical model {} ({} states, {} arithmetic)",
        report.source,
        report.states.len(),
        if report.exact { "exact" } else { "float" }
    );
    let show = |vs: &[Value]| vs.iter().map(Value::show).collect::<Vec<_>>().join(", ");
    let _ = writeln!(text, "Alice posteriors: {}", show(&report.alice_values));
    let _ = writeln!(text, "Bob posteriors:   {}", show(&report.bob_values));
    let pooled: Vec<String> = report
        .pooled_posteriors
        .iter()
        .map(|p| p.as_ref().map(Value::show).unwrap_or_else(|| "-".into()))
        .collect();
    let _ = writeln!(text, "pooled posteriors by state: {}", pooled.join(", "));
    for r in &report.results {
        let _ = writeln!(
            text,
            "(q_A, q_B) = ({}, {}): {}  p(C_inf) = {}  C_inf = {}",
            r.q_alice.show(),
            r.q_bob.show(),
            r.kind,
            r.c_inf_weight.show(),
            fmt_set(&r.c_inf)
        );
    }
    Ok(Output::new(&report, text, true))
}

#[derive(Serialize)]
struct BlockRow {
    transcript: [usize; 2],
    weight: f64,
}

#[derive(Serialize)]
struct RecordReport {
    command: &'static str,
    source: String,
    register_dim: usize,
    block_weights: Vec<BlockRow>,
    alice_recorded: Vec<Option<f64>>,
    bob_recorded: Vec<Option<f64>>,
    results: Vec<PairResult>,
}

pub fn record(source: &Source, qa: &Option<String>, qb: &Option<String>) -> anyhow::Result<Output> {
    let (name, file) = source.load()?;
    let s = quantum(&file)?;
    let q = q_pair(qa, qb)?;
    let rs = build_recorded(&s)?;
    let recorded = |agent| -> anyhow::Result<Vec<Option<f64>>> {
        Ok(rs
            .recorded_branch_probabilities(agent)?
            .into_iter()
            .map(|cp| cp.map(|c| c.value))
            .collect())
    };
    let pairs = match q {
        Some((a, b)) => vec![(a.to_f64(), b.to_f64())],
        None => {
            let va = branch_values(rs.alice_register(), rs.property_ext(), rs.rho_prime(), TOL)?;
            let vb = branch_values(rs.bob_register(), rs.property_ext(), rs.rho_prime(), TOL)?;
            va.iter()
                .flat_map(|&a| vb.iter().map(move |&b| (a, b)))
                .collect()
        }
    };
    let mut results = Vec::new();
    for (a, b) in pairs {
        results.push(PairResult::new(run_recorded_recursion(&rs, a, b)?, a, b));
    }
    let report = RecordReport {
        command: "record",
        source: name,
        register_dim: rs.transcripts().register_dim(),
        block_weights: rs
            .block_weights()
            .into_iter()
            .map(|b| BlockRow {
                transcript: [b.transcript.0, b.transcript.1],
                weight: b.weight,
            })
            .collect(),
        alice_recorded: recorded(Agent::Alice)?,
        bob_recorded: recorded(Agent::Bob)?,
        results,
    };

    let mut text = String::new();
    let _ = writeln!(
        text,
        "recorded {} (register dimension {})",
        report.source, report.register_dim
    );
    let _ = writeln!(text, "block weights:");
    for b in report.block_weights.iter().filter(|b| b.weight > TOL) {
        let _ = writeln!(
            text,
            "    ({}, {})  {:.9}",
            b.transcript[0], b.transcript[1], b.weight
        );
    }
    render_probabilities(&mut text, "Alice recorded", &report.alice_recorded);
    render_probabilities(&mut text, "Bob   recorded", &report.bob_recorded);
    for r in &report.results {
        r.render(&mut text);
    }
    Ok(Output::new(&report, text, true))
}

#[derive(Serialize)]
struct BoundRow {
    q_alice: f64,
    q_bob: f64,
    applicable: bool,
    cc_weight: f64,
    measured_gap: Option<f64>,
    bound: Option<f64>,
    holds: Option<bool>,
}

#[derive(Serialize)]
struct BoundsReport {
    command: &'static str,
    source: String,
    mode: &'static str,
    trace_distance: Option<f64>,
    epsilon: Option<f64>,
    rows: Vec<BoundRow>,
    pass: bool,
}

pub struct BoundsArgs {
    pub source: Source,
    pub other: Option<PathBuf>,
    pub depolarize: Option<f64>,
    pub epsilon: Option<f64>,
    pub qa: Option<String>,
    pub qb: Option<String>,
}

fn depolarized(rho: &ComplexMatrix, p: f64) -> anyhow::Result<ComplexMatrix> {
    if !(0.0..=1.0).contains(&p) {
        bail!("--depolarize {p} outside [0, 1]");
    }
    let d = rho.dim();
    let mixed = ComplexMatrix::identity(d).scale_real(p / d as f64);
    Ok(&rho.scale_real(1.0 - p) + &mixed)
}

fn other_state(s: &Scenario, path: &Path) -> anyhow::Result<ComplexMatrix> {
    let other = quantum(&ScenarioFile::load(path)?)
        .with_context(|| format!("in {}", path.display()))?;
    if other.factorization() != s.factorization() {
        bail!(
            "{} has factor dimensions {:?}, expected {:?}",
            path.display(),
            other.factorization().dims(),
            s.factorization().dims()
        );
    }
    Ok(other.rho().clone())
}

pub fn bounds(args: &BoundsArgs) -> anyhow::Result<Output> {
    let (source, file) = args.source.load()?;
    let s = quantum(&file)?;
    let pairs = match q_pair(&args.qa, &args.qb)? {
        Some((a, b)) => vec![(a.to_f64(), b.to_f64())],
        None => realized_pairs(&s)?,
    };
    let rho_b = match (&args.other, args.depolarize) {
        (Some(_), Some(_)) => bail!("give a second file or --depolarize, not both"),
        (Some(path), None) => Some(other_state(&s, path)?),
        (None, Some(p)) => Some(depolarized(s.rho(), p)?),
        (None, None) => None,
    };
    let report = match (rho_b, args.epsilon) {
        (Some(_), Some(_)) => bail!("the perturbation and epsilon checks run separately"),
        (None, None) => bail!("give a second state (file or --depolarize) or --epsilon"),
        (Some(rho_b), None) => {
            let s_b = s.with_state(rho_b)?;
            let mut rows = Vec::new();
            let mut distance = None;
            for (qa, qb) in pairs {
                let trace = qagree::run_recursion(&s, qa, qb)?;
                let row = match perturbation_check(&s, s_b.rho(), qa, qb)? {
                    Some(r) => {
                        distance = Some(r.trace_distance);
                        BoundRow {
                            q_alice: qa,
                            q_bob: qb,
                            applicable: true,
                            cc_weight: trace.cc_weight,
                            measured_gap: Some(r.gap()),
                            bound: Some(r.bound),
                            holds: Some(r.holds(TOL)),
                        }
                    }
                    None => BoundRow {
                        q_alice: qa,
                        q_bob: qb,
                        applicable: false,
                        cc_weight: trace.cc_weight,
                        measured_gap: None,
                        bound: None,
                        holds: None,
                    },
                };
                rows.push(row);
            }
            let distance = match distance {
                Some(d) => Some(d),
                None => Some(qagree::linalg::trace_norm(&s.rho().try_sub(s_b.rho())?)?),
            };
            BoundsReport {
                command: "bounds",
                source,
                mode: "perturbation",
                trace_distance: distance,
                epsilon: None,
                pass: rows.iter().all(|r| r.holds != Some(false)),
                rows,
            }
        }
        (None, Some(e)) => {
            let cfg = EpsilonConfig::new(e)?;
            let mut rows = Vec::new();
            for (qa, qb) in pairs {
                let trace = run_epsilon_recursion(&s, qa, qb, &cfg)?;
                let applicable = trace.has_common_certainty();
                let gap = (qa - qb).abs();
                rows.push(BoundRow {
                    q_alice: qa,
                    q_bob: qb,
                    applicable,
                    cc_weight: trace.cc_weight,
                    measured_gap: applicable.then_some(gap),
                    bound: applicable.then_some(2.0 * e),
                    holds: applicable.then_some(gap <= 2.0 * e + TOL),
                });
            }
            BoundsReport {
                command: "bounds",
                source,
                mode: "epsilon",
                trace_distance: None,
                epsilon: Some(e),
                pass: rows.iter().all(|r| r.holds != Some(false)),
                rows,
            }
        }
    };

    let mut text = String::new();
    let _ = writeln!(text, "{} bound for {}", report.mode, report.source);
    if let Some(d) = report.trace_distance {
        let _ = writeln!(text, "trace distance ||rho_A - rho_B||_1 = {d:.9}");
    }
    if let Some(e) = report.epsilon {
        let _ = writeln!(text, "epsilon = {e}, bound 2*epsilon = {}", 2.0 * e);
    }
    for r in &report.rows {
        match (r.measured_gap, r.bound, r.holds) {
            (Some(g), Some(b), Some(h)) => {
                let _ = writeln!(
                    text,
                    "(q_A, q_B) = ({:.6}, {:.6}): |dq| = {g:.9} <= {b:.9}  {}",
                    r.q_alice,
                    r.q_bob,
                    if h { "pass" } else { "FAIL" }
                );
            }
            _ => {
                let _ = writeln!(
                    text,
                    "(q_A, q_B) = ({:.6}, {:.6}): no common certainty, not applicable",
                    r.q_alice, r.q_bob
                );
            }
        }
    }
    let _ = writeln!(text, "verdict: {}", if report.pass { "pass" } else { "FAIL" });
    let pass = report.pass;
    Ok(Output::new(&report, text, pass))
}

#[derive(Serialize)]
struct ConditionalRow {
    target: String,
    given: String,
    probability: Value,
}

#[derive(Serialize)]
struct BoxReport {
    command: &'static str,
    source: String,
    labels: Vec<String>,
    no_signaling: bool,
    marginals: Vec<ConditionalRow>,
    conditionals: Vec<ConditionalRow>,
    zero_one_chain: bool,
}

#[derive(Serialize)]
struct RealizationReport {
    command: &'static str,
    source: String,
    target: String,
    total_weight: Value,
    negative_states: Vec<String>,
    realizes: bool,
    chain: Vec<ConditionalRow>,
    zero_one_chain: bool,
}

pub fn box_cmd(source: &Source, realizes: &Option<PathBuf>) -> anyhow::Result<Output> {
    let (name, file) = source.load()?;
    match (&file.body, realizes) {
        (Body::Box(spec), None) => match spec.build()? {
            Exactness::Exact(b) => analyse_box(name, &b),
            Exactness::Float(b) => analyse_box(name, &b),
        },
        (Body::Box(_), Some(_)) => {
            bail!("--realizes compares a signed model file against a box file")
        }
        (Body::Classical(spec), Some(target)) => {
            let target_file = ScenarioFile::load(target)?;
            let Body::Box(box_spec) = &target_file.body else {
                bail!("{} is not a box file", target.display());
            };
            let label = target.display().to_string();
            if spec.is_exact()? && box_spec.is_exact()? {
                realization::<BigRational>(name, label, &spec.build_as()?, &box_spec.build_as()?)
            } else {
                realization::<f64>(name, label, &spec.build_as()?, &box_spec.build_as()?)
            }
        }
        (Body::Classical(_), None) => {
            bail!("a classical model needs --realizes BOX_FILE")
        }
        (Body::Quantum(_), _) => bail!("expected a box or signed model, found a quantum scenario"),
    }
}

fn analyse_box<W: FromNum>(source: String, b: &NoSignalingBox<W>) -> anyhow::Result<Output> {
    let mut marginals = Vec::new();
    for l in b.labels() {
        for o in [0, 1] {
            if let Some(m) = b.marginal(l, o) {
                marginals.push(ConditionalRow {
                    target: format!("{l}={o}"),
                    given: String::new(),
                    probability: Value::of(&m),
                });
            }
        }
    }
    let mut conditionals = Vec::new();
    for ctx in b.contexts() {
        for (t, g) in [(&ctx.first, &ctx.second), (&ctx.second, &ctx.first)] {
            for go in [0, 1] {
                for to in [0, 1] {
                    if let Ok(p) = box_conditional(b, (t, to), (g, go)) {
                        conditionals.push(ConditionalRow {
                            target: format!("{t}={to}"),
                            given: format!("{g}={go}"),
                            probability: Value::of(&p),
                        });
                    }
                }
            }
        }
    }
    let has_triangle = ["a", "b", "e"]
        .iter()
        .all(|l| b.labels().iter().any(|x| x == l));
    let chain = has_triangle && check_zero_one_chain(b)?;
    let report = BoxReport {
        command: "box",
        source,
        labels: b.labels().to_vec(),
        no_signaling: true,
        marginals,
        conditionals,
        zero_one_chain: chain,
    };

    let mut text = String::new();
    let _ = writeln!(text, "box {} over {}", report.source, report.labels.join(", "));
    let _ = writeln!(text, "no-signaling: ok");
    for m in &report.marginals {
        let _ = writeln!(text, "    Pr[{}] = {}", m.target, m.probability.show());
    }
    for c in &report.conditionals {
        let _ = writeln!(
            text,
            "    Pr[{} | {}] = {}",
            c.target,
            c.given,
            c.probability.show()
        );
    }
    let _ = writeln!(
        text,
        "0-1 chain (a=1 => e=1, a=1 => b=1, b=1 => e=0): {}",
        report.zero_one_chain
    );
    Ok(Output::new(&report, text, true))
}

fn realization<W: FromNum>(
    source: String,
    target: String,
    m: &ClassicalModel<W>,
    b: &NoSignalingBox<W>,
) -> anyhow::Result<Output> {
    let realizes = signed_realization_check(m, b)?;
    let ps = m.phase_space().expect("checked by the realization test");
    let mut chain = Vec::new();
    let mut all_one = true;
    for ((tl, to), (gl, go)) in [(("e", 1), ("a", 1)), (("b", 1), ("a", 1)), (("e", 0), ("b", 1))] {
        if ps.index_of(tl).is_none() || ps.index_of(gl).is_none() {
            all_one = false;
            continue;
        }
        let p = signed_conditional(m, &ps.event(tl, to)?, &ps.event(gl, go)?)?;
        all_one &= p.near(&W::one());
        chain.push(ConditionalRow {
            target: format!("{tl}={to}"),
            given: format!("{gl}={go}"),
            probability: Value::of(&p),
        });
    }
    let negative_states = m
        .measure()
        .iter()
        .zip(m.states())
        .filter(|(w, _)| !w.is_negligible() && **w < W::zero())
        .map(|(_, s)| s.clone())
        .collect();
    let report = RealizationReport {
        command: "box",
        source,
        target,
        total_weight: Value::of(&m.weight_of(&m.all_states())),
        negative_states,
        realizes,
        chain,
        zero_one_chain: all_one,
    };

    let mut text = String::new();
    let _ = writeln!(
        text,
        "signed model {} against box {}",
        report.source, report.target
    );
    let _ = writeln!(text, "total weight: {}", report.total_weight.show());
    let _ = writeln!(
        text,
        "negative weights at: {}",
        if report.negative_states.is_empty() {
            "none".to_string()
        } else {
            report.negative_states.join(", ")
        }
    );
    let _ = writeln!(text, "realizes box: {}", report.realizes);
    for c in &report.chain {
        let _ = writeln!(
            text,
            "    lambda({} | {}) = {}",
            c.target,
            c.given,
            c.probability.show()
        );
    }
    let _ = writeln!(text, "0-1 chain: {}", report.zero_one_chain);
    let pass = report.realizes;
    Ok(Output::new(&report, text, pass))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    Agreement,
    ZeroOne,
    Register,
    Classical,
    All,
}

#[derive(Serialize, Default)]
struct SuiteResult {
    suite: &'static str,
    instances: usize,
    pairs: usize,
    with_common_certainty: usize,
    violations: usize,
    /// Largest disagreement under common certainty, or the largest 0-1
    /// witness value.
    max_statistic: f64,
    first_violation_seed: Option<u64>,
}

#[derive(Serialize)]
struct SweepReport {
    command: &'static str,
    seed: u64,
    count: usize,
    suites: Vec<SuiteResult>,
    pass: bool,
}

fn note_violation(r: &mut SuiteResult, seed: u64) {
    r.violations += 1;
    r.first_violation_seed.get_or_insert(seed);
}

fn sweep_agreement(seed: u64, count: usize) -> anyhow::Result<SuiteResult> {
    let mut r = SuiteResult {
        suite: "agreement",
        ..Default::default()
    };
    for k in 0..count as u64 {
        let s = sweep_scenario(SweepMix::Commuting, seed.wrapping_add(k))?;
        r.instances += 1;
        for (qa, qb) in realized_pairs(&s)? {
            r.pairs += 1;
            let c = classify_trace(qagree::run_recursion(&s, qa, qb)?, qa, qb);
            if c.trace.has_common_certainty() {
                r.with_common_certainty += 1;
                r.max_statistic = r.max_statistic.max((qa - qb).abs());
            }
            if c.kind == ClassificationKind::Ccd {
                note_violation(&mut r, seed.wrapping_add(k));
            }
        }
    }
    Ok(r)
}

fn sweep_zero_one(seed: u64, count: usize) -> anyhow::Result<SuiteResult> {
    let mut r = SuiteResult {
        suite: "zero-one",
        ..Default::default()
    };
    for k in 0..count as u64 {
        let s = sweep_scenario(SweepMix::ZeroOne, seed.wrapping_add(k))?;
        r.instances += 1;
        r.pairs += 1;
        let v = zero_one_check(&s)?.value;
        r.max_statistic = r.max_statistic.max(v);
        if v > 1e-8 {
            note_violation(&mut r, seed.wrapping_add(k));
        }
    }
    Ok(r)
}

fn sweep_register(seed: u64, count: usize) -> anyhow::Result<SuiteResult> {
    let mut r = SuiteResult {
        suite: "register",
        ..Default::default()
    };
    for k in 0..count as u64 {
        let s = sweep_scenario(SweepMix::Register, seed.wrapping_add(k))?;
        let rs = build_recorded(&s)?;
        r.instances += 1;
        let va = branch_values(rs.alice_register(), rs.property_ext(), rs.rho_prime(), TOL)?;
        let vb = branch_values(rs.bob_register(), rs.property_ext(), rs.rho_prime(), TOL)?;
        for &qa in &va {
            for &qb in &vb {
                r.pairs += 1;
                let c = classify_trace(run_recorded_recursion(&rs, qa, qb)?, qa, qb);
                if c.trace.has_common_certainty() {
                    r.with_common_certainty += 1;
                    r.max_statistic = r.max_statistic.max((qa - qb).abs());
                }
                if c.kind == ClassificationKind::Ccd {
                    note_violation(&mut r, seed.wrapping_add(k));
                }
            }
        }
    }
    Ok(r)
}

fn sweep_classical(seed: u64, count: usize) -> anyhow::Result<SuiteResult> {
    let mut r = SuiteResult {
        suite: "classical",
        ..Default::default()
    };
    for k in 0..count as u64 {
        let mut rng = sweep_rng(seed.wrapping_add(k));
        let n = rand::Rng::random_range(&mut rng, 2..=12);
        let m = random_rational_model(&mut rng, n, 6)?;
        r.instances += 1;
        let va = m.posterior_values(Agent::Alice)?;
        let vb = m.posterior_values(Agent::Bob)?;
        for qa in &va {
            for qb in &vb {
                r.pairs += 1;
                let rec = classical_recursion(&m, qa, qb)?;
                if rec.has_common_certainty() {
                    r.with_common_certainty += 1;
                    let gap = (qa.clone() - qb.clone()).to_f64().abs();
                    r.max_statistic = r.max_statistic.max(gap);
                    if qa != qb {
                        note_violation(&mut r, seed.wrapping_add(k));
                    }
                }
            }
        }
    }
    Ok(r)
}

pub fn sweep(seed: u64, count: usize, suite: Suite) -> anyhow::Result<Output> {
    let runs: Vec<Suite> = match suite {
        Suite::All => vec![
            Suite::Agreement,
            Suite::ZeroOne,
            Suite::Register,
            Suite::Classical,
        ],
        one => vec![one],
    };
    let mut suites = Vec::new();
    for s in runs {
        suites.push(match s {
            Suite::Agreement => sweep_agreement(seed, count)?,
            Suite::ZeroOne => sweep_zero_one(seed, count)?,
            Suite::Register => sweep_register(seed, count)?,
            Suite::Classical => sweep_classical(seed, count)?,
            Suite::All => unreachable!("expanded above"),
        });
    }
    let report = SweepReport {
        command: "sweep",
        seed,
        count,
        pass: suites.iter().all(|s| s.violations == 0),
        suites,
    };
    let mut text = String::new();
    let _ = writeln!(text, "sweep seed {} count {}", report.seed, report.count);
    for s in &report.suites {
        let _ = writeln!(
            text,
            "{:<10} instances {:>6}  pairs {:>7}  common certainty {:>6}  violations {}  max {:.3e}",
            s.suite, s.instances, s.pairs, s.with_common_certainty, s.violations, s.max_statistic
        );
    }
    let _ = writeln!(text, "verdict: {}", if report.pass { "pass" } else { "FAIL" });
    let pass = report.pass;
    Ok(Output::new(&report, text, pass))
}

#[derive(Serialize)]
struct ExampleRow {
    name: &'static str,
    kind: &'static str,
    summary: &'static str,
}

pub fn examples_list() -> Output {
    let rows: Vec<ExampleRow> = catalog::ENTRIES
        .iter()
        .map(|e| ExampleRow {
            name: e.name,
            kind: e.kind,
            summary: e.summary,
        })
        .collect();
    let mut text = String::new();
    for r in &rows {
        let _ = writeln!(text, "{:<14} {:<10} {}", r.name, r.kind, r.summary);
    }
    Output::new(&rows, text, true)
}

/// The built-in file itself; the JSON form is the file.
pub fn examples_dump(name: &str, theta: Option<f64>) -> anyhow::Result<Output> {
    let file = catalog::builtin(name, theta)?;
    let text = file.to_json() + "\n";
    Ok(Output {
        json: serde_json::to_value(&file)?,
        text,
        pass: true,
    })
}
