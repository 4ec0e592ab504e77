//! Finite probability spaces with information partitions, no-signaling
//! boxes, and signed phase-space measures.
//!
//! Weights are generic: [`BigRational`] gives exact arithmetic, `f64` a
//! tolerance-based fallback.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::TOL;

pub type StateSet = BTreeSet<usize>;

pub trait Weight:
    Clone
    + PartialEq
    + PartialOrd
    + fmt::Debug
    + fmt::Display
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Zero
    + One
{
    fn from_ratio(num: i64, den: i64) -> Self;
    fn to_f64(&self) -> f64;
    /// Equality at the resolution of the arithmetic.
    fn near(&self, other: &Self) -> bool;

    fn is_negligible(&self) -> bool {
        self.near(&Self::zero())
    }

    fn is_positive(&self) -> bool {
        !self.is_negligible() && *self > Self::zero()
    }
}

impl Weight for BigRational {
    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn near(&self, other: &Self) -> bool {
        self == other
    }
}

impl Weight for f64 {
    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn near(&self, other: &Self) -> bool {
        (self - other).abs() <= TOL
    }
}

fn total<'a, W: Weight + 'a>(it: impl IntoIterator<Item = &'a W>) -> W {
    it.into_iter().fold(W::zero(), |acc, w| acc + w.clone())
}

/// Outcome assignment of every state to a set of labelled measurements.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PhaseSpace {
    pub labels: Vec<String>,
    /// `values[ω][k]` is the outcome of `labels[k]` at state `ω`.
    pub values: Vec<Vec<u8>>,
}

impl PhaseSpace {
    /// All of `{0,1}^labels`, ordered with the first label most significant.
    pub fn binary(labels: &[&str]) -> Self {
        let n = labels.len();
        let values = (0..1usize << n)
            .map(|i| (0..n).map(|k| ((i >> (n - 1 - k)) & 1) as u8).collect())
            .collect();
        Self {
            labels: labels.iter().map(|s| s.to_string()).collect(),
            values,
        }
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// `{ω : label(ω) = outcome}`.
    pub fn event(&self, label: &str, outcome: u8) -> Result<StateSet> {
        let k = self
            .index_of(label)
            .ok_or_else(|| Error::LabelMismatch(format!("unknown measurement label {label}")))?;
        Ok((0..self.values.len())
            .filter(|&w| self.values[w][k] == outcome)
            .collect())
    }

    /// Partition by the outcome of one measurement.
    pub fn partition_by(&self, label: &str) -> Result<Vec<Vec<usize>>> {
        let cells = [self.event(label, 0)?, self.event(label, 1)?];
        Ok(cells
            .into_iter()
            .filter(|c| !c.is_empty())
            .map(|c| c.into_iter().collect())
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassicalModel<W> {
    states: Vec<String>,
    measure: Vec<W>,
    alice: Vec<Vec<usize>>,
    bob: Vec<Vec<usize>>,
    event: StateSet,
    signed: bool,
    phase_space: Option<PhaseSpace>,
}

fn check_partition(cells: &[Vec<usize>], n: usize, who: &str) -> Result<()> {
    let mut seen = vec![false; n];
    for cell in cells {
        if cell.is_empty() {
            return Err(Error::InvalidModel(format!("{who} has an empty cell")));
        }
        for &w in cell {
            if w >= n {
                return Err(Error::InvalidModel(format!(
                    "{who} refers to state {w}, only {n} states"
                )));
            }
            if seen[w] {
                return Err(Error::InvalidModel(format!(
                    "{who} lists state {w} twice"
                )));
            }
            seen[w] = true;
        }
    }
    if let Some(w) = seen.iter().position(|s| !s) {
        return Err(Error::InvalidModel(format!(
            "{who} does not cover state {w}"
        )));
    }
    Ok(())
}

impl<W: Weight> ClassicalModel<W> {
    pub fn new(
        states: Vec<String>,
        measure: Vec<W>,
        alice: Vec<Vec<usize>>,
        bob: Vec<Vec<usize>>,
        event: StateSet,
        signed: bool,
    ) -> Result<Self> {
        let n = states.len();
        if n == 0 {
            return Err(Error::InvalidModel("no states".into()));
        }
        if measure.len() != n {
            return Err(Error::InvalidModel(format!(
                "{} weights for {n} states",
                measure.len()
            )));
        }
        if !total(&measure).near(&W::one()) {
            return Err(Error::InvalidModel(format!(
                "weights sum to {}, not 1",
                total(&measure)
            )));
        }
        if !signed {
            if let Some(w) = measure
                .iter()
                .find(|w| !w.is_negligible() && **w < W::zero())
            {
                return Err(Error::InvalidModel(format!(
                    "negative weight {w} in an unsigned model"
                )));
            }
        }
        check_partition(&alice, n, "Alice's partition")?;
        check_partition(&bob, n, "Bob's partition")?;
        if let Some(&w) = event.iter().find(|&&w| w >= n) {
            return Err(Error::InvalidModel(format!(
                "event refers to state {w}, only {n} states"
            )));
        }
        Ok(Self {
            states,
            measure,
            alice,
            bob,
            event,
            signed,
            phase_space: None,
        })
    }

    pub fn with_phase_space(mut self, ps: PhaseSpace) -> Result<Self> {
        if ps.values.len() != self.states.len()
            || ps.values.iter().any(|v| v.len() != ps.labels.len())
        {
            return Err(Error::InvalidModel(
                "phase-space assignment does not match the state set".into(),
            ));
        }
        self.phase_space = Some(ps);
        Ok(self)
    }

    /// Signed measure on `{0,1}^labels` with the two agents partitioned by
    /// the outcomes of `alice_label` and `bob_label`, and the event
    /// `{event_label = 1}`.
    pub fn phase_space_model(
        labels: &[&str],
        measure: Vec<W>,
        alice_label: &str,
        bob_label: &str,
        event_label: &str,
    ) -> Result<Self> {
        let ps = PhaseSpace::binary(labels);
        let states = ps
            .values
            .iter()
            .map(|v| v.iter().map(|x| x.to_string()).collect())
            .collect();
        let model = Self::new(
            states,
            measure,
            ps.partition_by(alice_label)?,
            ps.partition_by(bob_label)?,
            ps.event(event_label, 1)?,
            true,
        )?;
        model.with_phase_space(ps)
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn measure(&self) -> &[W] {
        &self.measure
    }

    pub fn alice_partition(&self) -> &[Vec<usize>] {
        &self.alice
    }

    pub fn bob_partition(&self) -> &[Vec<usize>] {
        &self.bob
    }

    pub fn partition(&self, agent: crate::quantum_model::Agent) -> &[Vec<usize>] {
        match agent {
            crate::quantum_model::Agent::Alice => &self.alice,
            crate::quantum_model::Agent::Bob => &self.bob,
        }
    }

    pub fn event(&self) -> &StateSet {
        &self.event
    }

    pub fn is_signed(&self) -> bool {
        self.signed
    }

    pub fn phase_space(&self) -> Option<&PhaseSpace> {
        self.phase_space.as_ref()
    }

    pub fn all_states(&self) -> StateSet {
        (0..self.states.len()).collect()
    }

    pub fn weight_of<'a>(&self, set: impl IntoIterator<Item = &'a usize>) -> W {
        total(set.into_iter().map(|&w| &self.measure[w]))
    }

    fn cell_of(cells: &[Vec<usize>], state: usize) -> &[usize] {
        cells
            .iter()
            .find(|c| c.contains(&state))
            .expect("partitions cover every state")
    }

    pub fn alice_cell(&self, state: usize) -> &[usize] {
        Self::cell_of(&self.alice, state)
    }

    pub fn bob_cell(&self, state: usize) -> &[usize] {
        Self::cell_of(&self.bob, state)
    }

    /// `p(F | cell)` for a partition cell; the cell must have positive weight.
    fn cell_conditional(&self, f: &StateSet, cell: &[usize]) -> Result<W> {
        let w = self.weight_of(cell);
        if !w.is_positive() {
            return Err(Error::SignedConditioning {
                weight: w.to_string(),
            });
        }
        Ok(self.weight_of(cell.iter().filter(|s| f.contains(s))) / w)
    }

    /// States whose cell in `cells` gives `F` a probability near `q`.
    fn assigning(&self, cells: &[Vec<usize>], f: &StateSet, q: &W) -> Result<StateSet> {
        let mut out = StateSet::new();
        for cell in cells {
            if self.cell_conditional(f, cell)?.near(q) {
                out.extend(cell.iter().copied());
            }
        }
        Ok(out)
    }

    /// `p(E | 𝓟_A(ω))` for every Alice cell, deduplicated.
    pub fn posterior_values(&self, agent: crate::quantum_model::Agent) -> Result<Vec<W>> {
        let mut values: Vec<W> = Vec::new();
        for cell in self.partition(agent) {
            let v = self.cell_conditional(&self.event, cell)?;
            if !values.iter().any(|x| x.near(&v)) {
                values.push(v);
            }
        }
        Ok(values)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassicalRecursion<W> {
    /// `(A_0, B_0), …, (A_N, B_N)`.
    pub levels: Vec<(StateSet, StateSet)>,
    pub stabilization_index: usize,
    pub a_n: StateSet,
    pub b_n: StateSet,
    pub c_inf: StateSet,
    /// `p(C_∞)`.
    pub c_inf_weight: W,
}

impl<W: Weight> ClassicalRecursion<W> {
    pub fn has_common_certainty(&self) -> bool {
        self.c_inf_weight.is_positive()
    }
}

/// The set-valued certainty recursion, run to its fixed point.
pub fn classical_recursion<W: Weight>(
    m: &ClassicalModel<W>,
    q_alice: &W,
    q_bob: &W,
) -> Result<ClassicalRecursion<W>> {
    let one = W::one();
    let mut a = m.assigning(&m.alice, &m.event, q_alice)?;
    let mut b = m.assigning(&m.bob, &m.event, q_bob)?;
    let mut levels = vec![(a.clone(), b.clone())];
    loop {
        let next_a: StateSet = a
            .intersection(&m.assigning(&m.alice, &b, &one)?)
            .copied()
            .collect();
        let next_b: StateSet = b
            .intersection(&m.assigning(&m.bob, &a, &one)?)
            .copied()
            .collect();
        if next_a == a && next_b == b {
            break;
        }
        a = next_a;
        b = next_b;
        levels.push((a.clone(), b.clone()));
    }
    // The levels are nested, so the intersection over all of them is the last.
    let c_inf: StateSet = a.intersection(&b).copied().collect();
    Ok(ClassicalRecursion {
        stabilization_index: levels.len() - 1,
        c_inf_weight: m.weight_of(&c_inf),
        levels,
        a_n: a,
        b_n: b,
        c_inf,
    })
}

/// `p(E | 𝓟_A(ω) ∩ 𝓟_B(ω))`.
pub fn pooled_posterior<W: Weight>(m: &ClassicalModel<W>, state: usize) -> Result<W> {
    if state >= m.len() {
        return Err(Error::InvalidModel(format!("no state {state}")));
    }
    let bob = m.bob_cell(state);
    let joint: Vec<usize> = m
        .alice_cell(state)
        .iter()
        .copied()
        .filter(|w| bob.contains(w))
        .collect();
    let w = m.weight_of(&joint);
    if !w.is_positive() {
        return Err(Error::ZeroConditioningWeight {
            weight: w.to_f64(),
            branch: Some(m.states[state].clone()),
        });
    }
    Ok(m.weight_of(joint.iter().filter(|s| m.event.contains(s))) / w)
}

/// `λ(event ∩ cell) / λ(cell)`, dividing by the signed cell weight.
pub fn signed_conditional<W: Weight>(
    m: &ClassicalModel<W>,
    event: &StateSet,
    cell: &StateSet,
) -> Result<W> {
    let w = m.weight_of(cell);
    if w.is_negligible() {
        return Err(Error::zero_weight(w.to_f64()));
    }
    Ok(m.weight_of(event.intersection(cell)) / w)
}

/// One pair of jointly performable measurements with its outcome
/// distribution over `(0,0), (1,0), (0,1), (1,1)`, the first entry of each
/// pair being the outcome of `first`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxContext<W> {
    pub first: String,
    pub second: String,
    pub dist: [W; 4],
}

fn slot(x: u8, y: u8) -> usize {
    usize::from(x) + 2 * usize::from(y)
}

impl<W: Weight> BoxContext<W> {
    pub fn new(first: &str, second: &str, dist: [W; 4]) -> Self {
        Self {
            first: first.to_string(),
            second: second.to_string(),
            dist,
        }
    }

    pub fn involves(&self, label: &str) -> bool {
        self.first == label || self.second == label
    }

    /// `Pr[label = outcome]` within this context.
    pub fn marginal(&self, label: &str, outcome: u8) -> Option<W> {
        if self.first == label {
            Some(self.dist[slot(outcome, 0)].clone() + self.dist[slot(outcome, 1)].clone())
        } else if self.second == label {
            Some(self.dist[slot(0, outcome)].clone() + self.dist[slot(1, outcome)].clone())
        } else {
            None
        }
    }

    /// `Pr[x = ox, y = oy]` for the two labels in either order.
    pub fn joint(&self, x: (&str, u8), y: (&str, u8)) -> Option<W> {
        if self.first == x.0 && self.second == y.0 {
            Some(self.dist[slot(x.1, y.1)].clone())
        } else if self.first == y.0 && self.second == x.0 {
            Some(self.dist[slot(y.1, x.1)].clone())
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoSignalingBox<W> {
    labels: Vec<String>,
    contexts: Vec<BoxContext<W>>,
}

impl<W: Weight> NoSignalingBox<W> {
    pub fn new(labels: Vec<String>, contexts: Vec<BoxContext<W>>) -> Result<Self> {
        for (k, l) in labels.iter().enumerate() {
            if labels[..k].contains(l) {
                return Err(Error::InvalidBox(format!("label {l} repeated")));
            }
        }
        for (k, ctx) in contexts.iter().enumerate() {
            let name = format!("({}, {})", ctx.first, ctx.second);
            if ctx.first == ctx.second {
                return Err(Error::InvalidBox(format!("context {name} pairs a label with itself")));
            }
            for l in [&ctx.first, &ctx.second] {
                if !labels.contains(l) {
                    return Err(Error::InvalidBox(format!("context {name} uses unknown label {l}")));
                }
            }
            if contexts[..k].iter().any(|o| {
                o.involves(&ctx.first) && o.involves(&ctx.second)
            }) {
                return Err(Error::InvalidBox(format!("context {name} listed twice")));
            }
            if !total(&ctx.dist).near(&W::one()) {
                return Err(Error::InvalidBox(format!(
                    "context {name} sums to {}",
                    total(&ctx.dist)
                )));
            }
            if let Some(p) = ctx.dist.iter().find(|p| !p.is_negligible() && **p < W::zero()) {
                return Err(Error::InvalidBox(format!(
                    "context {name} has negative entry {p}"
                )));
            }
        }
        let b = Self { labels, contexts };
        b.check_no_signaling()?;
        Ok(b)
    }

    fn check_no_signaling(&self) -> Result<()> {
        for label in &self.labels {
            for outcome in [0, 1] {
                let mut seen: Option<(W, &BoxContext<W>)> = None;
                for ctx in &self.contexts {
                    let Some(m) = ctx.marginal(label, outcome) else {
                        continue;
                    };
                    match &seen {
                        None => seen = Some((m, ctx)),
                        Some((first, c0)) if !first.near(&m) => {
                            return Err(Error::InvalidBox(format!(
                                "marginal of {label}={outcome} is {first} in ({}, {}) but {m} in ({}, {})",
                                c0.first, c0.second, ctx.first, ctx.second
                            )));
                        }
                        Some(_) => {}
                    }
                }
            }
        }
        Ok(())
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn contexts(&self) -> &[BoxContext<W>] {
        &self.contexts
    }

    pub fn context(&self, x: &str, y: &str) -> Option<&BoxContext<W>> {
        self.contexts
            .iter()
            .find(|c| c.involves(x) && c.involves(y) && x != y)
    }

    /// Context-independent `Pr[label = outcome]`.
    pub fn marginal(&self, label: &str, outcome: u8) -> Option<W> {
        self.contexts.iter().find_map(|c| c.marginal(label, outcome))
    }

    /// Marginalizes a global distribution over the box's phase space onto
    /// the given contexts. The distribution may be signed; the result is
    /// validated as a box.
    pub fn from_global(
        ps: &PhaseSpace,
        measure: &[W],
        pairs: &[(&str, &str)],
    ) -> Result<Self> {
        let mut contexts = Vec::with_capacity(pairs.len());
        for &(x, y) in pairs {
            contexts.push(BoxContext::new(x, y, marginal_table(ps, measure, x, y)?));
        }
        Self::new(ps.labels.clone(), contexts)
    }
}

fn marginal_table<W: Weight>(
    ps: &PhaseSpace,
    measure: &[W],
    x: &str,
    y: &str,
) -> Result<[W; 4]> {
    let missing = |l: &str| Error::LabelMismatch(format!("phase space has no label {l}"));
    let kx = ps.index_of(x).ok_or_else(|| missing(x))?;
    let ky = ps.index_of(y).ok_or_else(|| missing(y))?;
    let mut dist = [W::zero(), W::zero(), W::zero(), W::zero()];
    for (values, w) in ps.values.iter().zip(measure) {
        let s = slot(values[kx], values[ky]);
        dist[s] = dist[s].clone() + w.clone();
    }
    Ok(dist)
}

/// `Pr[target | given]` inside the context holding both labels.
pub fn box_conditional<W: Weight>(
    b: &NoSignalingBox<W>,
    target: (&str, u8),
    given: (&str, u8),
) -> Result<W> {
    let ctx = b
        .context(target.0, given.0)
        .ok_or_else(|| Error::IncompatibleContext(target.0.to_string(), given.0.to_string()))?;
    let marginal = ctx.marginal(given.0, given.1).expect("context holds the label");
    if !marginal.is_positive() {
        return Err(Error::ZeroConditioningWeight {
            weight: marginal.to_f64(),
            branch: Some(format!("{}={}", given.0, given.1)),
        });
    }
    Ok(ctx.joint(target, given).expect("context holds both labels") / marginal)
}

/// The three implications `a=1 ⇒ e=1`, `a=1 ⇒ b=1`, `b=1 ⇒ e=0`, each
/// with conditional probability one. A conditioning outcome that never
/// occurs makes the chain fail.
pub fn check_zero_one_chain<W: Weight>(b: &NoSignalingBox<W>) -> Result<bool> {
    let one = W::one();
    for (target, given) in [(("e", 1), ("a", 1)), (("b", 1), ("a", 1)), (("e", 0), ("b", 1))] {
        match box_conditional(b, target, given) {
            Ok(p) if p.near(&one) => {}
            Ok(_) | Err(Error::ZeroConditioningWeight { .. }) => return Ok(false),
            Err(e) => return Err(e),
        }
    }
    Ok(true)
}

/// Whether the signed measure's marginals reproduce every context of the
/// box.
pub fn signed_realization_check<W: Weight>(
    m: &ClassicalModel<W>,
    b: &NoSignalingBox<W>,
) -> Result<bool> {
    let ps = m
        .phase_space()
        .ok_or_else(|| Error::LabelMismatch("model carries no phase-space assignment".into()))?;
    if let Some(l) = b.labels().iter().find(|l| ps.index_of(l).is_none()) {
        return Err(Error::LabelMismatch(format!(
            "box label {l} is not a measurement of the model"
        )));
    }
    for ctx in b.contexts() {
        let table = marginal_table(ps, m.measure(), &ctx.first, &ctx.second)?;
        if table.iter().zip(&ctx.dist).any(|(x, y)| !x.near(y)) {
            return Ok(false);
        }
    }
    Ok(true)
}

fn q<W: Weight>(num: i64, den: i64) -> W {
    W::from_ratio(num, den)
}

/// Four equally likely states in a 2×2 grid; Alice learns the row, Bob the
/// column, and `E` is the diagonal `{ω₁, ω₄}`.
pub fn pooling_model<W: Weight>() -> ClassicalModel<W> {
    ClassicalModel::new(
        (1..=4).map(|i| format!("ω{i}")).collect(),
        vec![q(1, 4); 4],
        vec![vec![0, 1], vec![2, 3]],
        vec![vec![0, 2], vec![1, 3]],
        [0, 3].into_iter().collect(),
        false,
    )
    .expect("valid model")
}

/// The no-signaling box on `{a, b, e}` in which `a = 1` makes Alice
/// certain of `e = 1` and of Bob's certainty of `e = 0`.
pub fn zero_one_box<W: Weight>() -> NoSignalingBox<W> {
    let labels = ["a", "b", "e"].map(String::from).to_vec();
    NoSignalingBox::new(
        labels,
        vec![
            BoxContext::new("a", "b", [q(1, 2), q(0, 1), q(1, 4), q(1, 4)]),
            BoxContext::new("a", "e", [q(1, 2), q(0, 1), q(1, 4), q(1, 4)]),
            BoxContext::new("b", "e", [q(0, 1), q(1, 2), q(1, 2), q(0, 1)]),
        ],
    )
    .expect("valid box")
}

/// Independent uniform outcomes in every context.
pub fn uniform_product_box<W: Weight>() -> NoSignalingBox<W> {
    let labels = ["a", "b", "e"].map(String::from).to_vec();
    let u = || [q(1, 4), q(1, 4), q(1, 4), q(1, 4)];
    NoSignalingBox::new(
        labels,
        vec![
            BoxContext::new("a", "b", u()),
            BoxContext::new("a", "e", u()),
            BoxContext::new("b", "e", u()),
        ],
    )
    .expect("valid box")
}

/// Weights of the signed phase-space measure realizing [`zero_one_box`],
/// indexed by `4a + 2b + e`.
pub fn zero_one_signed_weights<W: Weight>() -> Vec<W> {
    [3, 5, 5, -1, -3, 3, 3, 1].map(|n| q(n, 16)).to_vec()
}

/// Signed model on `{0,1}^{a,b,e}` with Alice partitioned by `a`, Bob by
/// `b`, and `E = {e = 1}`.
pub fn zero_one_signed_model<W: Weight>() -> ClassicalModel<W> {
    ClassicalModel::phase_space_model(
        &["a", "b", "e"],
        zero_one_signed_weights(),
        "a",
        "b",
        "e",
    )
    .expect("valid model")
}

/// The pairs of measurements that can be performed together in the
/// three-label boxes.
pub const TRIANGLE_CONTEXTS: [(&str, &str); 3] = [("a", "b"), ("a", "e"), ("b", "e")];

/// Random unsigned model with rational weights. Some states get weight
/// zero, which makes certainty reachable; every partition cell keeps
/// positive weight.
pub fn random_rational_model(
    rng: &mut impl Rng,
    n_states: usize,
    max_weight: i64,
) -> Result<ClassicalModel<BigRational>> {
    if n_states == 0 || max_weight < 1 {
        return Err(Error::InvalidGenerator(format!(
            "need at least one state and a positive weight bound, got {n_states}, {max_weight}"
        )));
    }
    loop {
        let alice = random_cells(rng, n_states);
        let bob = random_cells(rng, n_states);
        let raw: Vec<i64> = (0..n_states)
            .map(|_| {
                if rng.random_bool(0.3) {
                    0
                } else {
                    rng.random_range(1..=max_weight)
                }
            })
            .collect();
        let sum: i64 = raw.iter().sum();
        let positive = |cells: &[Vec<usize>]| cells.iter().all(|c| c.iter().any(|&w| raw[w] > 0));
        if sum == 0 || !positive(&alice) || !positive(&bob) {
            continue;
        }
        let event = (0..n_states).filter(|_| rng.random_bool(0.5)).collect();
        return ClassicalModel::new(
            (0..n_states).map(|i| format!("ω{i}")).collect(),
            raw.iter().map(|&r| BigRational::from_ratio(r, sum)).collect(),
            alice,
            bob,
            event,
            false,
        );
    }
}

fn random_cells(rng: &mut impl Rng, n: usize) -> Vec<Vec<usize>> {
    let parts = rng.random_range(1..=n.min(4));
    let mut cells = vec![Vec::new(); parts];
    // Seed each cell, then scatter the rest.
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        order.swap(i, rng.random_range(0..=i));
    }
    for (k, &w) in order.iter().enumerate() {
        let cell = if k < parts { k } else { rng.random_range(0..parts) };
        cells[cell].push(w);
    }
    for c in &mut cells {
        c.sort_unstable();
    }
    cells
}
