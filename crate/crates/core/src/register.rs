//! Classical recording of measurement transcripts.
//!
//! The recording channel maps the base state to
//! `ρ′ = Σ_r M_r ρ M_r† ⊗ |r⟩⟨r|` on 𝓗 ⊗ 𝓗_R, with one pointer state per
//! transcript `r = (i, j)`. Agents then condition on register projectors
//! `𝕀 ⊗ Π_R^{(i,A)}` and `𝕀 ⊗ Π_R^{(j,B)}`, which commute with each other and
//! with `P_E ⊗ 𝕀_R`, so the recorded recursion is always in the commuting
//! regime.
//!
//! Kraus operators are the joint readouts `M_(i,j) = P_A^i P_B^j`. Every pair
//! `(i, j)` is kept as a transcript, including those of zero weight, so the
//! register has dimension `ℓ_A · ℓ_B` and transcript `(i, j)` sits at pointer
//! index `i · ℓ_B + j`.

use serde::Serialize;

use crate::epistemics::{
    classify_trace, cond_prob, recursion_over, Classification, ConditionalProbability,
    RecursionOptions, RecursionTrace,
};
use crate::error::{Error, Result};
use crate::linalg::{kron, trace_of_product, ComplexMatrix, TOL};
use crate::quantum_model::{check_commutation, Agent, Measurement, Scenario};

/// Transcript labels `(i, j)`: Alice's outcome, Bob's outcome.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TranscriptSet {
    transcripts: Vec<(usize, usize)>,
}

impl TranscriptSet {
    /// All `(i, j)` in row-major order.
    pub fn full(l_alice: usize, l_bob: usize) -> Self {
        Self {
            transcripts: (0..l_alice)
                .flat_map(|i| (0..l_bob).map(move |j| (i, j)))
                .collect(),
        }
    }

    pub fn transcripts(&self) -> &[(usize, usize)] {
        &self.transcripts
    }

    pub fn register_dim(&self) -> usize {
        self.transcripts.len()
    }

    /// Alice's recorded outcome, `f_A(r)`.
    pub fn alice_outcome(&self, r: usize) -> usize {
        self.transcripts[r].0
    }

    /// Bob's recorded outcome, `f_B(r)`.
    pub fn bob_outcome(&self, r: usize) -> usize {
        self.transcripts[r].1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecordedScenario {
    base: Scenario,
    transcripts: TranscriptSet,
    kraus: Vec<ComplexMatrix>,
    rho_prime: ComplexMatrix,
    alice_register: Measurement,
    bob_register: Measurement,
    property_ext: ComplexMatrix,
}

/// Weight `Tr(M_r ρ M_r†)` of one transcript.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlockWeight {
    pub transcript: (usize, usize),
    pub weight: f64,
}

/// Runs the recording channel on a scenario whose two measurements commute.
pub fn build_recorded(s: &Scenario) -> Result<RecordedScenario> {
    let report = check_commutation(s);
    if !report.ab_ok {
        let bob: Vec<&ComplexMatrix> = s.bob().projectors().iter().collect();
        let violation = s
            .alice()
            .projectors()
            .iter()
            .flat_map(|p| {
                bob.iter()
                    .map(move |q| crate::linalg::commutator_norm(p, q).unwrap_or(f64::INFINITY))
            })
            .fold(0.0, f64::max);
        return Err(Error::NonCommutingMeasurements { violation });
    }

    let (la, lb) = (s.alice().len(), s.bob().len());
    let transcripts = TranscriptSet::full(la, lb);
    let reg_dim = transcripts.register_dim();
    let base_dim = s.dim();

    let kraus: Vec<ComplexMatrix> = transcripts
        .transcripts()
        .iter()
        .map(|&(i, j)| s.alice().projectors()[i].matmul(&s.bob().projectors()[j]))
        .collect::<Result<_>>()?;

    let mut rho_prime = ComplexMatrix::zeros(base_dim * reg_dim);
    for (r, m) in kraus.iter().enumerate() {
        let block = m.matmul(s.rho())?.matmul(&m.adjoint())?;
        rho_prime = &rho_prime + &kron(&block, &ComplexMatrix::unit(reg_dim, r, r));
    }

    let id_base = ComplexMatrix::identity(base_dim);
    let register_projector = |pick: &dyn Fn(usize) -> bool| -> ComplexMatrix {
        let mut pi = ComplexMatrix::zeros(reg_dim);
        for r in (0..reg_dim).filter(|&r| pick(r)) {
            pi[(r, r)] = crate::linalg::ONE;
        }
        kron(&id_base, &pi)
    };
    let alice_register = Measurement::new(
        Agent::Alice,
        (0..la)
            .map(|i| register_projector(&|r| transcripts.alice_outcome(r) == i))
            .collect(),
    )?;
    let bob_register = Measurement::new(
        Agent::Bob,
        (0..lb)
            .map(|j| register_projector(&|r| transcripts.bob_outcome(r) == j))
            .collect(),
    )?;
    let property_ext = kron(s.property(), &ComplexMatrix::identity(reg_dim));

    Ok(RecordedScenario {
        base: s.clone(),
        transcripts,
        kraus,
        rho_prime,
        alice_register,
        bob_register,
        property_ext,
    })
}

impl RecordedScenario {
    pub fn base(&self) -> &Scenario {
        &self.base
    }

    pub fn transcripts(&self) -> &TranscriptSet {
        &self.transcripts
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    pub fn rho_prime(&self) -> &ComplexMatrix {
        &self.rho_prime
    }

    /// `𝕀 ⊗ Π_R^{(i,A)}` for each of Alice's outcomes.
    pub fn alice_register(&self) -> &Measurement {
        &self.alice_register
    }

    /// `𝕀 ⊗ Π_R^{(j,B)}` for each of Bob's outcomes.
    pub fn bob_register(&self) -> &Measurement {
        &self.bob_register
    }

    /// `P_E ⊗ 𝕀_R`.
    pub fn property_ext(&self) -> &ComplexMatrix {
        &self.property_ext
    }

    pub fn register_measurement(&self, agent: Agent) -> &Measurement {
        match agent {
            Agent::Alice => &self.alice_register,
            Agent::Bob => &self.bob_register,
        }
    }

    /// `Σ_r M_r† M_r`, which equals the identity for a trace-preserving record.
    pub fn kraus_completeness(&self) -> ComplexMatrix {
        self.kraus
            .iter()
            .fold(ComplexMatrix::zeros(self.base.dim()), |acc, m| {
                &acc + &(&m.adjoint() * m)
            })
    }

    /// Weight of each transcript block of `ρ′`.
    pub fn block_weights(&self) -> Vec<BlockWeight> {
        let reg = self.transcripts.register_dim();
        let n = self.base.dim();
        self.transcripts
            .transcripts()
            .iter()
            .enumerate()
            .map(|(r, &transcript)| {
                let weight = (0..n).map(|a| self.rho_prime[(a * reg + r, a * reg + r)].re).sum();
                BlockWeight { transcript, weight }
            })
            .collect()
    }

    /// Largest entry of `ρ′` coupling two different pointer states.
    pub fn off_block_magnitude(&self) -> f64 {
        let reg = self.transcripts.register_dim();
        let dim = self.rho_prime.dim();
        let mut worst: f64 = 0.0;
        for row in 0..dim {
            for col in 0..dim {
                if row % reg != col % reg {
                    worst = worst.max(self.rho_prime[(row, col)].norm());
                }
            }
        }
        worst
    }

    /// Conditional probabilities of `E` on each recorded outcome of `agent`.
    pub fn recorded_branch_probabilities(
        &self,
        agent: Agent,
    ) -> Result<Vec<Option<ConditionalProbability>>> {
        crate::epistemics::branch_probabilities(
            self.register_measurement(agent),
            &self.property_ext,
            &self.rho_prime,
        )
    }
}

/// `Tr[(P_F ⊗ 𝕀_R) P ρ′ P] / Tr(P ρ′)` for a register-level projector `P`.
pub fn recorded_cond_prob(
    rs: &RecordedScenario,
    prop_ext: &ComplexMatrix,
    reg_proj: &ComplexMatrix,
) -> Result<ConditionalProbability> {
    cond_prob(prop_ext, reg_proj, &rs.rho_prime)
}

/// The certainty recursion with register projectors as measurements, `ρ′`
/// as the state and `P_E ⊗ 𝕀_R` as the property.
pub fn run_recorded_recursion(
    rs: &RecordedScenario,
    q_alice: f64,
    q_bob: f64,
) -> Result<RecursionTrace> {
    recursion_over(
        &rs.alice_register,
        &rs.bob_register,
        &rs.property_ext,
        &rs.rho_prime,
        q_alice,
        q_bob,
        &RecursionOptions::default(),
    )
}

pub fn classify_recorded(
    rs: &RecordedScenario,
    q_alice: f64,
    q_bob: f64,
) -> Result<Classification> {
    Ok(classify_trace(
        run_recorded_recursion(rs, q_alice, q_bob)?,
        q_alice,
        q_bob,
    ))
}

/// `Tr(ρ′)`.
pub fn recorded_trace(rs: &RecordedScenario) -> f64 {
    rs.rho_prime.trace().re
}

/// Largest commutator among all register projectors and `P_E ⊗ 𝕀_R`.
pub fn register_commutation_violation(rs: &RecordedScenario) -> f64 {
    let ops: Vec<&ComplexMatrix> = rs
        .alice_register
        .projectors()
        .iter()
        .chain(rs.bob_register.projectors())
        .chain(std::iter::once(&rs.property_ext))
        .collect();
    let mut worst: f64 = 0.0;
    for (k, p) in ops.iter().enumerate() {
        for q in &ops[k + 1..] {
            worst = worst.max(crate::linalg::commutator_norm(p, q).unwrap_or(f64::INFINITY));
        }
    }
    worst
}

/// Probability that the base state is recorded with transcript weight above
/// `TOL`, i.e. the transcripts that actually occur.
pub fn occurring_transcripts(rs: &RecordedScenario) -> Vec<(usize, usize)> {
    rs.block_weights()
        .into_iter()
        .filter(|b| b.weight > TOL)
        .map(|b| b.transcript)
        .collect()
}

/// `Tr(M ρ)` helper used by reports.
pub fn base_weight(rs: &RecordedScenario, op: &ComplexMatrix) -> Result<f64> {
    Ok(trace_of_product(op, rs.base.rho())?.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use crate::quantum_model::{basis_vector, embed_local, HilbertFactorization};

    fn eigen_branch_scenario() -> Scenario {
        // |ψ⟩ = |1⟩_A ⊗ |0⟩_B is an eigenstate of the joint outcome (1, 0).
        let f = HilbertFactorization::two_lab(2, 2).unwrap();
        let comp = [ComplexMatrix::unit(2, 0, 0), ComplexMatrix::unit(2, 1, 1)];
        let prop = embed_local(&comp[0], 1, &f).unwrap();
        crate::quantum_model::scenario_from_pure_state(f, &basis_vector(4, 2), &comp, &comp, prop)
            .unwrap()
    }

    #[test]
    fn eigenstate_gives_single_block() {
        let rs = build_recorded(&eigen_branch_scenario()).unwrap();
        let weights = rs.block_weights();
        assert_eq!(weights.len(), 4);
        for b in weights {
            let expected = if b.transcript == (1, 0) { 1.0 } else { 0.0 };
            assert!((b.weight - expected).abs() < 1e-15, "{b:?}");
        }
        assert!((recorded_trace(&rs) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn transcript_functions() {
        let t = TranscriptSet::full(3, 2);
        assert_eq!(t.register_dim(), 6);
        assert_eq!(t.transcripts()[3], (1, 1));
        assert_eq!(t.alice_outcome(5), 2);
        assert_eq!(t.bob_outcome(4), 0);
    }

    #[test]
    fn identity_register_projector_gives_prior() {
        let s = eigen_branch_scenario();
        let rs = build_recorded(&s).unwrap();
        let id = ComplexMatrix::identity(rs.rho_prime().dim());
        let cp = recorded_cond_prob(&rs, rs.property_ext(), &id).unwrap();
        let prior = crate::epistemics::weight(s.property(), s.rho()).unwrap();
        assert!((cp.value - prior).abs() < 1e-15);
    }

    #[test]
    fn refuses_noncommuting_measurements() {
        let f = HilbertFactorization::single_lab(2).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus = vec![c(h, 0.0), c(h, 0.0)];
        let minus = vec![c(h, 0.0), c(-h, 0.0)];
        let alice = Measurement::new(
            Agent::Alice,
            vec![ComplexMatrix::unit(2, 0, 0), ComplexMatrix::unit(2, 1, 1)],
        )
        .unwrap();
        let bob = Measurement::new(
            Agent::Bob,
            vec![
                ComplexMatrix::projector_onto(&plus).unwrap(),
                ComplexMatrix::projector_onto(&minus).unwrap(),
            ],
        )
        .unwrap();
        let s = Scenario::from_pure(f, &plus, alice, bob, ComplexMatrix::unit(2, 0, 0)).unwrap();
        assert!(matches!(
            build_recorded(&s),
            Err(Error::NonCommutingMeasurements { .. })
        ));
    }
}
