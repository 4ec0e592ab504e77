//! Limits on disagreement: the 0-1 check, the trace-norm perturbation
//! bound, and the ε-relaxed recursion.

use serde::Serialize;

use crate::epistemics::{
    assignment_projector, branch_probabilities, certainty_projector, cond_prob, recursion_over,
    run_recursion, CertaintyRule, RecursionOptions, RecursionTrace,
};
use crate::error::{Error, Result};
use crate::linalg::{trace_norm, trace_of_product, ComplexMatrix, TOL};
use crate::quantum_model::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BranchDiagnostic {
    pub branch: usize,
    /// `Pr[P_E; P_A^i]`, absent on zero-weight branches.
    pub prob_e: Option<f64>,
    /// `Pr[Q_B(E;0); P_A^i]`.
    pub prob_bob_certain_not_e: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroOneWitnessReport {
    /// `Tr(Q_A(E;1) · C_A(Q_B(E;0)) · ρ)`.
    pub value: f64,
    pub per_branch: Vec<BranchDiagnostic>,
}

impl ZeroOneWitnessReport {
    /// Whether Alice can be certain of `E` while certain that Bob is certain
    /// of not-`E`.
    pub fn exhibits_zero_one(&self) -> bool {
        self.value > TOL
    }
}

/// Weight of the states where Alice is certain of `E` and certain that Bob
/// is certain of not-`E`.
pub fn zero_one_check(s: &Scenario) -> Result<ZeroOneWitnessReport> {
    let rho = s.rho();
    let q_a_one = assignment_projector(s.alice(), s.property(), 1.0, rho, TOL)?;
    let q_b_zero = assignment_projector(s.bob(), s.property(), 0.0, rho, TOL)?;
    let c_a = certainty_projector(s.alice(), &q_b_zero, rho)?;
    let value = trace_of_product(&q_a_one.matmul(&c_a)?, rho)?.re;

    let on_e = branch_probabilities(s.alice(), s.property(), rho)?;
    let on_bob = branch_probabilities(s.alice(), &q_b_zero, rho)?;
    let per_branch = on_e
        .into_iter()
        .zip(on_bob)
        .enumerate()
        .map(|(branch, (e, b))| BranchDiagnostic {
            branch,
            prob_e: e.map(|cp| cp.value),
            prob_bob_certain_not_e: b.map(|cp| cp.value),
        })
        .collect();
    Ok(ZeroOneWitnessReport { value, per_branch })
}

/// `2‖ρ_A − ρ_B‖₁ / max{Tr(B_* A_* ρ_A), Tr(A_* B_* ρ_B)}`.
pub fn state_perturbation_bound(
    rho_a: &ComplexMatrix,
    rho_b: &ComplexMatrix,
    a_star: &ComplexMatrix,
    b_star: &ComplexMatrix,
) -> Result<f64> {
    let distance = trace_norm(&rho_a.try_sub(rho_b)?)?;
    let den_a = trace_of_product(&b_star.matmul(a_star)?, rho_a)?.re;
    let den_b = trace_of_product(&a_star.matmul(b_star)?, rho_b)?.re;
    let den = den_a.max(den_b);
    if den <= TOL {
        return Err(Error::zero_weight(den));
    }
    Ok(2.0 * distance / den)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerturbationReport {
    pub trace_distance: f64,
    /// `Pr[P_E; C_*]` at `ρ_A`.
    pub q_alice: f64,
    /// `Pr[P_E; C_*]` at `ρ_B`, with the same `C_*`.
    pub q_bob: f64,
    pub bound: f64,
}

impl PerturbationReport {
    pub fn gap(&self) -> f64 {
        (self.q_alice - self.q_bob).abs()
    }

    pub fn holds(&self, slack: f64) -> bool {
        self.gap() <= self.bound + slack
    }
}

/// Evaluates both sides of the perturbation bound for one common-certainty
/// projector taken from the recursion on `ρ_A`. Returns `None` when there is
/// no common certainty at `ρ_A` or `C_*` has no weight under `ρ_B`.
pub fn perturbation_check(
    s: &Scenario,
    rho_b: &ComplexMatrix,
    q_alice: f64,
    q_bob: f64,
) -> Result<Option<PerturbationReport>> {
    let trace = run_recursion(s, q_alice, q_bob)?;
    if !trace.has_common_certainty() {
        return Ok(None);
    }
    let c_b = trace_of_product(&trace.c_star, rho_b)?.re;
    if c_b <= TOL {
        return Ok(None);
    }
    let rho_a = s.rho();
    let qa = cond_prob(s.property(), &trace.c_star, rho_a)?.value;
    let qb = cond_prob(s.property(), &trace.c_star, rho_b)?.value;
    Ok(Some(PerturbationReport {
        trace_distance: trace_norm(&rho_a.try_sub(rho_b)?)?,
        q_alice: qa,
        q_bob: qb,
        bound: state_perturbation_bound(rho_a, rho_b, &trace.a_star, &trace.b_star)?,
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpsilonConfig {
    epsilon: f64,
    /// Also match `A_0`, `B_0` within `ε` instead of exactly.
    pub relax_initial: bool,
}

impl EpsilonConfig {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::InvalidEpsilon(epsilon));
        }
        Ok(Self {
            epsilon,
            relax_initial: false,
        })
    }

    pub fn with_relaxed_initial(mut self, relax: bool) -> Self {
        self.relax_initial = relax;
        self
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn options(&self) -> RecursionOptions {
        RecursionOptions {
            tol_q: if self.relax_initial {
                self.epsilon.max(TOL)
            } else {
                TOL
            },
            certainty: CertaintyRule::AtLeast {
                epsilon: self.epsilon,
            },
        }
    }
}

/// The recursion with `(1 − ε)`-certainty in every certainty layer.
pub fn run_epsilon_recursion(
    s: &Scenario,
    q_alice: f64,
    q_bob: f64,
    cfg: &EpsilonConfig,
) -> Result<RecursionTrace> {
    recursion_over(
        s.alice(),
        s.bob(),
        s.property(),
        s.rho(),
        q_alice,
        q_bob,
        &cfg.options(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum_model::{basis_projector, Agent, HilbertFactorization, Measurement};
    use crate::scenarios::{example1, example2};

    #[test]
    fn epsilon_validation() {
        for bad in [0.0, 1.0, -0.1, 2.0, f64::NAN] {
            assert!(matches!(
                EpsilonConfig::new(bad),
                Err(Error::InvalidEpsilon(_))
            ));
        }
        assert_eq!(EpsilonConfig::new(0.25).unwrap().epsilon(), 0.25);
    }

    #[test]
    fn equal_states_give_zero_bound() {
        let s = example1(std::f64::consts::FRAC_PI_3);
        let t = run_recursion(&s, 0.75, 0.75).unwrap();
        assert!(t.has_common_certainty());
        let b = state_perturbation_bound(s.rho(), s.rho(), &t.a_star, &t.b_star).unwrap();
        assert!(b.abs() < 1e-12);
    }

    #[test]
    fn zero_denominators_are_reported() {
        let s = example2();
        let zero = ComplexMatrix::zeros(s.dim());
        assert!(matches!(
            state_perturbation_bound(s.rho(), s.rho(), &zero, &zero),
            Err(Error::ZeroConditioningWeight { .. })
        ));
    }

    #[test]
    fn zero_one_without_bob_certainty_is_exactly_zero() {
        // Alice is certain of E on branch 0; Bob's only outcome gives 1/2.
        let f = HilbertFactorization::single_lab(2).unwrap();
        let alice = Measurement::new(
            Agent::Alice,
            vec![
                basis_projector(2, &[0]).unwrap(),
                basis_projector(2, &[1]).unwrap(),
            ],
        )
        .unwrap();
        let bob = Measurement::trivial(Agent::Bob, 2);
        let rho = ComplexMatrix::diag_real(&[0.5, 0.5]);
        let s = Scenario::new(f, rho, alice, bob, basis_projector(2, &[0]).unwrap()).unwrap();
        let r = zero_one_check(&s).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.per_branch[0].prob_e, Some(1.0));
    }

    #[test]
    fn relaxed_initial_widens_tolerance() {
        let cfg = EpsilonConfig::new(0.1).unwrap();
        assert_eq!(cfg.options().tol_q, TOL);
        assert_eq!(cfg.with_relaxed_initial(true).options().tol_q, 0.1);
    }
}
