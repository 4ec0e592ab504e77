//! Born–Lüders conditioning and the common-certainty recursion.
//!
//! Each agent's probability for a property `F` after outcome `P` is
//! `Tr(P_F · PρP) / Tr(Pρ)`. Starting from the projectors onto the outcomes at
//! which Alice (Bob) assigns `q_A` (`q_B`) to `E`, the recursion
//!
//! ```text
//! A_{n+1} = A_n · C_A(B_n)
//! B_{n+1} = B_n · C_B(A_n)
//! ```
//!
//! refines both operators until they stop changing. `C_X(F)` is the sum of
//! agent X's outcome projectors on which X is certain of `F`. The fixed point
//! `C_* = A_* B_*` has positive weight `Tr(C_* ρ)` exactly when the pair
//! `(q_A, q_B)` is common certainty.
//!
//! All `A_n` are sums of Alice's mutually orthogonal outcome projectors (same
//! for Bob), so each level is also tracked as a set of outcome indices.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{commutator_norm, is_projector, trace_of_product, ComplexMatrix, TOL};
use crate::quantum_model::{Agent, Measurement, Scenario};

/// `Prob[P_F; P]` together with the conditioning weight `Tr(P ρ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionalProbability {
    pub value: f64,
    pub conditioning_weight: f64,
}

/// `Tr(P ρ)`, real part.
pub fn weight(p: &ComplexMatrix, rho: &ComplexMatrix) -> Result<f64> {
    Ok(trace_of_product(p, rho)?.re)
}

/// Born rule with a Lüders update: `Tr(prop · cond ρ cond) / Tr(cond ρ)`.
pub fn cond_prob(
    prop: &ComplexMatrix,
    cond: &ComplexMatrix,
    rho: &ComplexMatrix,
) -> Result<ConditionalProbability> {
    let w = weight(cond, rho)?;
    if w <= TOL {
        return Err(Error::zero_weight(w));
    }
    let conditioned = cond.matmul(rho)?.matmul(cond)?;
    let raw = trace_of_product(prop, &conditioned)?.re / w;
    Ok(ConditionalProbability {
        value: raw.clamp(0.0, 1.0),
        conditioning_weight: w,
    })
}

/// Post-measurement state `cond ρ cond / Tr(cond ρ)`.
pub fn luders_update(cond: &ComplexMatrix, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
    let w = weight(cond, rho)?;
    if w <= TOL {
        return Err(Error::zero_weight(w));
    }
    Ok(cond.matmul(rho)?.matmul(cond)?.scale_real(1.0 / w))
}

/// Conditional probability of `prop` on every outcome of `meas`; `None` for
/// outcomes of weight at most `TOL`.
pub fn branch_probabilities(
    meas: &Measurement,
    prop: &ComplexMatrix,
    rho: &ComplexMatrix,
) -> Result<Vec<Option<ConditionalProbability>>> {
    meas.projectors()
        .iter()
        .map(|p| match cond_prob(prop, p, rho) {
            Ok(cp) => Ok(Some(cp)),
            Err(Error::ZeroConditioningWeight { .. }) => Ok(None),
            Err(e) => Err(e),
        })
        .collect()
}

/// Distinct values (within `tol`) taken by the conditional probability of
/// `prop` on positive-weight outcomes, ascending.
pub fn branch_values(
    meas: &Measurement,
    prop: &ComplexMatrix,
    rho: &ComplexMatrix,
    tol: f64,
) -> Result<Vec<f64>> {
    let mut values: Vec<f64> = branch_probabilities(meas, prop, rho)?
        .into_iter()
        .flatten()
        .map(|cp| cp.value)
        .collect();
    values.sort_by(f64::total_cmp);
    values.dedup_by(|a, b| (*a - *b).abs() <= tol);
    Ok(values)
}

/// Every `(q_A, q_B)` pair of values realized by some outcome of each agent.
pub fn realized_pairs(s: &Scenario) -> Result<Vec<(f64, f64)>> {
    let qa = branch_values(s.alice(), s.property(), s.rho(), TOL)?;
    let qb = branch_values(s.bob(), s.property(), s.rho(), TOL)?;
    Ok(qa
        .iter()
        .flat_map(|&a| qb.iter().map(move |&b| (a, b)))
        .collect())
}

fn matching_branches(
    meas: &Measurement,
    prop: &ComplexMatrix,
    rho: &ComplexMatrix,
    accept: impl Fn(f64) -> bool,
) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for (k, cp) in branch_probabilities(meas, prop, rho)?.into_iter().enumerate() {
        if cp.is_some_and(|cp| accept(cp.value)) {
            out.push(k);
        }
    }
    Ok(out)
}

/// Outcome indices `K_X(F; q)`: positive weight and probability within
/// `tol_q` of `q`.
pub fn assignment_branches(
    meas: &Measurement,
    prop: &ComplexMatrix,
    q: f64,
    rho: &ComplexMatrix,
    tol_q: f64,
) -> Result<Vec<usize>> {
    matching_branches(meas, prop, rho, |v| (v - q).abs() <= tol_q)
}

/// `Q_X(F; q)`, the projector onto the outcomes at which the agent assigns
/// `q` to `F`. Zero when no outcome qualifies.
pub fn assignment_projector(
    meas: &Measurement,
    prop: &ComplexMatrix,
    q: f64,
    rho: &ComplexMatrix,
    tol_q: f64,
) -> Result<ComplexMatrix> {
    Ok(meas.sum_of(&assignment_branches(meas, prop, q, rho, tol_q)?))
}

/// `C_X(F) = Q_X(F; 1)`.
pub fn certainty_projector(
    meas: &Measurement,
    prop: &ComplexMatrix,
    rho: &ComplexMatrix,
) -> Result<ComplexMatrix> {
    assignment_projector(meas, prop, 1.0, rho, TOL)
}

/// When an agent counts as certain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CertaintyRule {
    /// Probability 1, within `TOL`.
    Exact,
    /// Probability at least `1 - epsilon`.
    AtLeast { epsilon: f64 },
}

impl CertaintyRule {
    fn accepts(self, p: f64) -> bool {
        match self {
            CertaintyRule::Exact => (p - 1.0).abs() <= TOL,
            CertaintyRule::AtLeast { epsilon } => p >= 1.0 - epsilon,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RecursionOptions {
    /// Matching tolerance for the initial assignment layers.
    pub tol_q: f64,
    pub certainty: CertaintyRule,
}

impl Default for RecursionOptions {
    fn default() -> Self {
        Self {
            tol_q: TOL,
            certainty: CertaintyRule::Exact,
        }
    }
}

/// Certainty projector under an arbitrary rule, as outcome indices.
pub fn certainty_branches(
    meas: &Measurement,
    prop: &ComplexMatrix,
    rho: &ComplexMatrix,
    rule: CertaintyRule,
) -> Result<Vec<usize>> {
    matching_branches(meas, prop, rho, |v| rule.accepts(v))
}

/// One level `(A_n, B_n)` of the recursion.
#[derive(Debug, Clone, PartialEq)]
pub struct CertaintyLevel {
    pub alice: ComplexMatrix,
    pub bob: ComplexMatrix,
    pub alice_branches: Vec<usize>,
    pub bob_branches: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecursionTrace {
    /// `(A_0, B_0), …, (A_N, B_N)`.
    pub levels: Vec<CertaintyLevel>,
    /// `N`, the first index with `A_{N+1} = A_N` and `B_{N+1} = B_N`.
    pub stabilization_index: usize,
    pub a_star: ComplexMatrix,
    pub b_star: ComplexMatrix,
    pub c_star: ComplexMatrix,
    /// `Tr(C_* ρ)`.
    pub cc_weight: f64,
}

impl RecursionTrace {
    pub fn fixed_point(&self) -> &CertaintyLevel {
        self.levels.last().expect("trace has at least one level")
    }

    pub fn has_common_certainty(&self) -> bool {
        self.cc_weight > TOL
    }
}

fn intersect(a: &[usize], b: &[usize]) -> Vec<usize> {
    a.iter().copied().filter(|k| b.contains(k)).collect()
}

/// The recursion for arbitrary measurements, property and state. Shared by
/// the plain, recorded and ε-relaxed variants.
pub fn recursion_over(
    alice: &Measurement,
    bob: &Measurement,
    prop: &ComplexMatrix,
    rho: &ComplexMatrix,
    q_alice: f64,
    q_bob: f64,
    opts: &RecursionOptions,
) -> Result<RecursionTrace> {
    let a0 = assignment_branches(alice, prop, q_alice, rho, opts.tol_q)?;
    let b0 = assignment_branches(bob, prop, q_bob, rho, opts.tol_q)?;
    let mut levels = vec![CertaintyLevel {
        alice: alice.sum_of(&a0),
        bob: bob.sum_of(&b0),
        alice_branches: a0,
        bob_branches: b0,
    }];

    let cap = alice.len() + bob.len() + 1;
    let stabilization_index = loop {
        let n = levels.len() - 1;
        if n >= cap {
            return Err(Error::RecursionCap { cap });
        }
        let cur = &levels[n];
        let ca = certainty_branches(alice, &cur.bob, rho, opts.certainty)?;
        let cb = certainty_branches(bob, &cur.alice, rho, opts.certainty)?;

        let next_a = cur.alice.matmul(&alice.sum_of(&ca))?;
        let next_b = cur.bob.matmul(&bob.sum_of(&cb))?;
        if !is_projector(&next_a, TOL) {
            return Err(Error::NonProjectorProduct {
                level: n + 1,
                agent: Agent::Alice.to_string(),
            });
        }
        if !is_projector(&next_b, TOL) {
            return Err(Error::NonProjectorProduct {
                level: n + 1,
                agent: Agent::Bob.to_string(),
            });
        }
        if next_a.approx_eq(&cur.alice, TOL) && next_b.approx_eq(&cur.bob, TOL) {
            break n;
        }
        let next = CertaintyLevel {
            alice: next_a,
            bob: next_b,
            alice_branches: intersect(&cur.alice_branches, &ca),
            bob_branches: intersect(&cur.bob_branches, &cb),
        };
        levels.push(next);
    };

    let fixed = levels.last().expect("nonempty");
    let a_star = fixed.alice.clone();
    let b_star = fixed.bob.clone();
    let c_star = a_star.matmul(&b_star)?;
    let cc_weight = weight(&c_star, rho)?;
    Ok(RecursionTrace {
        levels,
        stabilization_index,
        a_star,
        b_star,
        c_star,
        cc_weight,
    })
}

/// Runs the common-certainty recursion for `(q_A, q_B)` on `s`.
pub fn run_recursion(s: &Scenario, q_alice: f64, q_bob: f64) -> Result<RecursionTrace> {
    run_recursion_with(s, q_alice, q_bob, &RecursionOptions::default())
}

pub fn run_recursion_with(
    s: &Scenario,
    q_alice: f64,
    q_bob: f64,
    opts: &RecursionOptions,
) -> Result<RecursionTrace> {
    recursion_over(s.alice(), s.bob(), s.property(), s.rho(), q_alice, q_bob, opts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ClassificationKind {
    Agreement,
    /// Common certainty of disagreement.
    #[serde(rename = "CCD")]
    Ccd,
    NoCommonCertainty,
}

impl std::fmt::Display for ClassificationKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ClassificationKind::Agreement => "Agreement",
            ClassificationKind::Ccd => "CCD",
            ClassificationKind::NoCommonCertainty => "NoCommonCertainty",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub kind: ClassificationKind,
    pub q_alice: f64,
    pub q_bob: f64,
    pub trace: RecursionTrace,
}

/// Classifies a finished recursion.
pub fn classify_trace(trace: RecursionTrace, q_alice: f64, q_bob: f64) -> Classification {
    let kind = if trace.cc_weight <= TOL {
        ClassificationKind::NoCommonCertainty
    } else if (q_alice - q_bob).abs() <= TOL {
        ClassificationKind::Agreement
    } else {
        ClassificationKind::Ccd
    };
    Classification {
        kind,
        q_alice,
        q_bob,
        trace,
    }
}

pub fn classify(s: &Scenario, q_alice: f64, q_bob: f64) -> Result<Classification> {
    classify_with(s, q_alice, q_bob, &RecursionOptions::default())
}

pub fn classify_with(
    s: &Scenario,
    q_alice: f64,
    q_bob: f64,
    opts: &RecursionOptions,
) -> Result<Classification> {
    let trace = run_recursion_with(s, q_alice, q_bob, opts)?;
    Ok(classify_trace(trace, q_alice, q_bob))
}

/// Distance between `B_* A_* ρ A_* B_* / Tr(B_* A_* ρ)` and
/// `A_* ρ A_* / Tr(A_* ρ)`, entrywise maximum. Zero up to rounding whenever
/// the scenario satisfies the commutation premises.
pub fn verify_nondisturbance(trace: &RecursionTrace, rho: &ComplexMatrix) -> Result<f64> {
    let a = &trace.a_star;
    let b = &trace.b_star;
    let ba = b.matmul(a)?;
    let w_ba = trace_of_product(&ba, rho)?.re;
    if w_ba <= TOL {
        return Err(Error::zero_weight(w_ba));
    }
    let w_a = weight(a, rho)?;
    if w_a <= TOL {
        return Err(Error::zero_weight(w_a));
    }
    let lhs = ba.matmul(rho)?.matmul(&ba.adjoint())?.scale_real(1.0 / w_ba);
    let rhs = a.matmul(rho)?.matmul(a)?.scale_real(1.0 / w_a);
    lhs.max_abs_diff(&rhs)
}

/// Largest gap between an agent's outcome-level probability of `E` and the
/// probability of `E` conditioned on the agent's whole fixed-point
/// projector, over the outcomes making up that projector. Zero in commuting
/// scenarios; this is exactly the step a non-commuting property breaks.
pub fn coarse_grain_gap(s: &Scenario, agent: Agent, trace: &RecursionTrace) -> Result<f64> {
    let (star, branches) = match agent {
        Agent::Alice => (&trace.a_star, &trace.fixed_point().alice_branches),
        Agent::Bob => (&trace.b_star, &trace.fixed_point().bob_branches),
    };
    let coarse = cond_prob(s.property(), star, s.rho())?.value;
    let meas = s.measurement(agent);
    let mut gap: f64 = 0.0;
    for &k in branches {
        if let Ok(cp) = cond_prob(s.property(), &meas.projectors()[k], s.rho()) {
            gap = gap.max((cp.value - coarse).abs());
        }
    }
    Ok(gap)
}

/// `‖[A_*, B_*]‖_max`.
pub fn fixed_point_commutator(trace: &RecursionTrace) -> Result<f64> {
    commutator_norm(&trace.a_star, &trace.b_star)
}
