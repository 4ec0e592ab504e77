//! Measurement scenarios: a factorized Hilbert space, a shared state, one
//! projective measurement per agent and a property of interest.
//!
//! Every operator is stored embedded in the global space. Local blocks are
//! accepted only as construction inputs, since a property such as the one in
//! the qutrit-qubit-qubit CCD example acts jointly on two factors and cannot be
//! expressed as a single local block.

use std::fmt;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    commutator_norm, is_density, is_projector, kron, vector_norm, ComplexMatrix, ONE, TOL, ZERO,
};

/// Who has access to a tensor factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Alice,
    Bob,
    Inaccessible,
    /// A factor both agents act on (single-lab variant).
    Shared,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Agent {
    Alice,
    Bob,
}

impl Agent {
    pub fn other(self) -> Agent {
        match self {
            Agent::Alice => Agent::Bob,
            Agent::Bob => Agent::Alice,
        }
    }
}

impl fmt::Display for Agent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Agent::Alice => write!(f, "Alice"),
            Agent::Bob => write!(f, "Bob"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HilbertFactorization {
    dims: Vec<usize>,
    roles: Vec<Role>,
}

impl HilbertFactorization {
    pub fn new(dims: Vec<usize>, roles: Vec<Role>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidFactorization("at least one factor required".into()));
        }
        if dims.len() != roles.len() {
            return Err(Error::InvalidFactorization(format!(
                "{} dimensions but {} roles",
                dims.len(),
                roles.len()
            )));
        }
        if dims.contains(&0) {
            return Err(Error::InvalidFactorization("factor dimensions must be positive".into()));
        }
        for who in [Role::Alice, Role::Bob] {
            if roles.iter().filter(|&&r| r == who).count() > 1 {
                return Err(Error::InvalidFactorization(format!(
                    "more than one factor labeled {who:?}"
                )));
            }
        }
        Ok(Self { dims, roles })
    }

    /// Alice ⊗ Bob ⊗ inaccessible lab.
    pub fn tripartite(d_a: usize, d_b: usize, d_c: usize) -> Result<Self> {
        Self::new(
            vec![d_a, d_b, d_c],
            vec![Role::Alice, Role::Bob, Role::Inaccessible],
        )
    }

    /// Alice ⊗ Bob with no third lab.
    pub fn two_lab(d_a: usize, d_b: usize) -> Result<Self> {
        Self::new(vec![d_a, d_b], vec![Role::Alice, Role::Bob])
    }

    /// One system measured by both agents.
    pub fn single_lab(d: usize) -> Result<Self> {
        Self::new(vec![d], vec![Role::Shared])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn roles(&self) -> &[Role] {
        &self.roles
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    /// The factor an agent's local measurement acts on: the factor carrying
    /// the agent's role, otherwise the first shared factor.
    pub fn factor_of(&self, agent: Agent) -> Result<usize> {
        let role = match agent {
            Agent::Alice => Role::Alice,
            Agent::Bob => Role::Bob,
        };
        self.roles
            .iter()
            .position(|&r| r == role)
            .or_else(|| self.roles.iter().position(|&r| r == Role::Shared))
            .ok_or_else(|| {
                Error::InvalidFactorization(format!("no factor accessible to {agent}"))
            })
    }

    /// Appends a factor, e.g. a classical register.
    pub fn extended(&self, dim: usize, role: Role) -> Result<Self> {
        let mut dims = self.dims.clone();
        let mut roles = self.roles.clone();
        dims.push(dim);
        roles.push(role);
        Self::new(dims, roles)
    }
}

/// Embeds a local operator on factor `factor_index` by tensoring identities
/// on every other factor, in factor order.
pub fn embed_local(
    op: &ComplexMatrix,
    factor_index: usize,
    factorization: &HilbertFactorization,
) -> Result<ComplexMatrix> {
    let dims = factorization.dims();
    if factor_index >= dims.len() {
        return Err(Error::FactorOutOfRange {
            index: factor_index,
            factors: dims.len(),
        });
    }
    if op.dim() != dims[factor_index] {
        return Err(Error::DimensionMismatch {
            left: op.dim(),
            right: dims[factor_index],
        });
    }
    let before: usize = dims[..factor_index].iter().product();
    let after: usize = dims[factor_index + 1..].iter().product();
    let left = kron(&ComplexMatrix::identity(before), op);
    Ok(kron(&left, &ComplexMatrix::identity(after)))
}

/// Embeds an operator acting on the ordered tensor product of `factors`
/// (not necessarily adjacent) into the global space.
pub fn embed_on_factors(
    op: &ComplexMatrix,
    factors: &[usize],
    factorization: &HilbertFactorization,
) -> Result<ComplexMatrix> {
    let dims = factorization.dims();
    if factors.is_empty() {
        return Err(Error::InvalidFactorization("no target factors".into()));
    }
    for (k, &f) in factors.iter().enumerate() {
        if f >= dims.len() {
            return Err(Error::FactorOutOfRange {
                index: f,
                factors: dims.len(),
            });
        }
        if factors[..k].contains(&f) {
            return Err(Error::InvalidFactorization(format!("factor {f} listed twice")));
        }
    }
    let local_dim: usize = factors.iter().map(|&f| dims[f]).product();
    if op.dim() != local_dim {
        return Err(Error::DimensionMismatch {
            left: op.dim(),
            right: local_dim,
        });
    }

    let total = factorization.total_dim();
    let mut out = ComplexMatrix::zeros(total);
    let mut digits = vec![0usize; dims.len()];
    for row in 0..total {
        decompose(row, dims, &mut digits);
        let local_row = factors.iter().fold(0, |acc, &f| acc * dims[f] + digits[f]);
        let mut col_digits = digits.clone();
        for local_col in 0..local_dim {
            let mut rem = local_col;
            for &f in factors.iter().rev() {
                col_digits[f] = rem % dims[f];
                rem /= dims[f];
            }
            let col = compose(&col_digits, dims);
            out[(row, col)] = op[(local_row, local_col)];
        }
    }
    Ok(out)
}

fn decompose(mut index: usize, dims: &[usize], digits: &mut [usize]) {
    for k in (0..dims.len()).rev() {
        digits[k] = index % dims[k];
        index /= dims[k];
    }
}

fn compose(digits: &[usize], dims: &[usize]) -> usize {
    digits.iter().zip(dims).fold(0, |acc, (&d, &n)| acc * n + d)
}

/// Projector onto the span of the given computational basis indices.
pub fn basis_projector(dim: usize, indices: &[usize]) -> Result<ComplexMatrix> {
    let mut p = ComplexMatrix::zeros(dim);
    for &i in indices {
        if i >= dim {
            return Err(Error::InvalidMatrix(format!(
                "basis index {i} out of range for dimension {dim}"
            )));
        }
        p[(i, i)] = ONE;
    }
    Ok(p)
}

/// A complete family of mutually orthogonal projectors on the global space.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    agent: Agent,
    projectors: Vec<ComplexMatrix>,
}

impl Measurement {
    pub fn new(agent: Agent, projectors: Vec<ComplexMatrix>) -> Result<Self> {
        let invalid = |reason: String| Error::InvalidMeasurement {
            agent: agent.to_string(),
            reason,
        };
        let first = projectors
            .first()
            .ok_or_else(|| invalid("no projectors".into()))?;
        let dim = first.dim();
        let mut sum = ComplexMatrix::zeros(dim);
        for (k, p) in projectors.iter().enumerate() {
            if p.dim() != dim {
                return Err(invalid(format!("projector {k} has dimension {}", p.dim())));
            }
            if !is_projector(p, TOL) {
                return Err(invalid(format!("element {k} is not a projector")));
            }
            for (m, other) in projectors.iter().enumerate().skip(k + 1) {
                if !(p * other).is_zero(TOL) {
                    return Err(invalid(format!("elements {k} and {m} overlap")));
                }
            }
            sum = &sum + p;
        }
        let deviation = sum.max_abs_diff(&ComplexMatrix::identity(dim))?;
        if deviation > TOL {
            return Err(invalid(format!(
                "projectors do not sum to the identity (deviation {deviation:e})"
            )));
        }
        Ok(Self { agent, projectors })
    }

    /// The single-outcome measurement `{I}`.
    pub fn trivial(agent: Agent, dim: usize) -> Self {
        Self {
            agent,
            projectors: vec![ComplexMatrix::identity(dim)],
        }
    }

    /// Embeds local blocks acting on `factor`.
    pub fn from_local_blocks(
        agent: Agent,
        blocks: &[ComplexMatrix],
        factor: usize,
        factorization: &HilbertFactorization,
    ) -> Result<Self> {
        let projectors = blocks
            .iter()
            .map(|b| embed_local(b, factor, factorization))
            .collect::<Result<Vec<_>>>()?;
        Self::new(agent, projectors)
    }

    /// Local measurement whose outcomes are spans of computational basis
    /// states of `factor`.
    pub fn from_subspaces(
        agent: Agent,
        subspaces: &[Vec<usize>],
        factor: usize,
        factorization: &HilbertFactorization,
    ) -> Result<Self> {
        let d = *factorization
            .dims()
            .get(factor)
            .ok_or(Error::FactorOutOfRange {
                index: factor,
                factors: factorization.dims().len(),
            })?;
        let blocks = subspaces
            .iter()
            .map(|s| basis_projector(d, s))
            .collect::<Result<Vec<_>>>()?;
        Self::from_local_blocks(agent, &blocks, factor, factorization)
    }

    pub fn agent(&self) -> Agent {
        self.agent
    }

    pub fn projectors(&self) -> &[ComplexMatrix] {
        &self.projectors
    }

    /// Number of outcomes.
    pub fn len(&self) -> usize {
        self.projectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.projectors[0].dim()
    }

    /// Sum of the projectors with the given outcome indices.
    pub fn sum_of(&self, branches: &[usize]) -> ComplexMatrix {
        branches
            .iter()
            .fold(ComplexMatrix::zeros(self.dim()), |acc, &k| {
                &acc + &self.projectors[k]
            })
    }
}

/// Shared state, both agents' measurements and the property of interest.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    factorization: HilbertFactorization,
    rho: ComplexMatrix,
    alice: Measurement,
    bob: Measurement,
    property: ComplexMatrix,
}

impl Scenario {
    pub fn new(
        factorization: HilbertFactorization,
        rho: ComplexMatrix,
        alice: Measurement,
        bob: Measurement,
        property: ComplexMatrix,
    ) -> Result<Self> {
        Self::check_shape(&factorization, &rho, &alice, &bob, &property)?;
        if !is_density(&rho, TOL)? {
            return Err(Error::InvalidState("not a density matrix".into()));
        }
        Ok(Self {
            factorization,
            rho,
            alice,
            bob,
            property,
        })
    }

    /// Pure-state constructor; `|ψ⟩⟨ψ|` of a unit vector is a density
    /// matrix, so only the normalization is checked.
    pub fn from_pure(
        factorization: HilbertFactorization,
        state: &[Complex64],
        alice: Measurement,
        bob: Measurement,
        property: ComplexMatrix,
    ) -> Result<Self> {
        if state.len() != factorization.total_dim() {
            return Err(Error::DimensionMismatch {
                left: state.len(),
                right: factorization.total_dim(),
            });
        }
        let norm = vector_norm(state);
        if (norm - 1.0).abs() > TOL {
            return Err(Error::NotNormalized { norm });
        }
        let rho = ComplexMatrix::projector_onto(state)?;
        Self::check_shape(&factorization, &rho, &alice, &bob, &property)?;
        Ok(Self {
            factorization,
            rho,
            alice,
            bob,
            property,
        })
    }

    fn check_shape(
        factorization: &HilbertFactorization,
        rho: &ComplexMatrix,
        alice: &Measurement,
        bob: &Measurement,
        property: &ComplexMatrix,
    ) -> Result<()> {
        let dim = factorization.total_dim();
        for d in [rho.dim(), alice.dim(), bob.dim(), property.dim()] {
            if d != dim {
                return Err(Error::DimensionMismatch { left: d, right: dim });
            }
        }
        if alice.agent() != Agent::Alice || bob.agent() != Agent::Bob {
            return Err(Error::InvalidMeasurement {
                agent: format!("{}/{}", alice.agent(), bob.agent()),
                reason: "measurements passed in the wrong slots".into(),
            });
        }
        if !is_projector(property, TOL) {
            return Err(Error::InvalidProperty);
        }
        Ok(())
    }

    /// Same measurements and property with a different shared state.
    pub fn with_state(&self, rho: ComplexMatrix) -> Result<Self> {
        Self::new(
            self.factorization.clone(),
            rho,
            self.alice.clone(),
            self.bob.clone(),
            self.property.clone(),
        )
    }

    pub fn factorization(&self) -> &HilbertFactorization {
        &self.factorization
    }

    pub fn rho(&self) -> &ComplexMatrix {
        &self.rho
    }

    pub fn alice(&self) -> &Measurement {
        &self.alice
    }

    pub fn bob(&self) -> &Measurement {
        &self.bob
    }

    pub fn measurement(&self, agent: Agent) -> &Measurement {
        match agent {
            Agent::Alice => &self.alice,
            Agent::Bob => &self.bob,
        }
    }

    /// Projector `P_E`.
    pub fn property(&self) -> &ComplexMatrix {
        &self.property
    }

    pub fn dim(&self) -> usize {
        self.rho.dim()
    }
}

/// Builds `ρ = |ψ⟩⟨ψ|` and embeds each agent's local projector blocks on the
/// factor the agent can access.
pub fn scenario_from_pure_state(
    factorization: HilbertFactorization,
    state: &[Complex64],
    alice_blocks: &[ComplexMatrix],
    bob_blocks: &[ComplexMatrix],
    property: ComplexMatrix,
) -> Result<Scenario> {
    let alice = Measurement::from_local_blocks(
        Agent::Alice,
        alice_blocks,
        factorization.factor_of(Agent::Alice)?,
        &factorization,
    )?;
    let bob = Measurement::from_local_blocks(
        Agent::Bob,
        bob_blocks,
        factorization.factor_of(Agent::Bob)?,
        &factorization,
    )?;
    Scenario::from_pure(factorization, state, alice, bob, property)
}

/// Which commutation premises hold for a scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommutationReport {
    /// `[P_A^i, P_B^j] = 0` for all i, j.
    pub ab_ok: bool,
    /// `[P_A^i, P_E] = 0` for all i.
    pub alice_e_ok: bool,
    /// `[P_B^j, P_E] = 0` for all j.
    pub bob_e_ok: bool,
    /// Largest commutator entry over the three checks above.
    pub max_violation: f64,
    /// Every measurement projector commutes with ρ. This alternative premise
    /// is reported but not part of `max_violation`.
    pub state_ok: bool,
}

impl CommutationReport {
    pub fn all_ok(&self) -> bool {
        self.ab_ok && self.alice_e_ok && self.bob_e_ok
    }
}

fn max_commutator<'a>(
    left: impl IntoIterator<Item = &'a ComplexMatrix>,
    right: &[&ComplexMatrix],
) -> f64 {
    left.into_iter()
        .flat_map(|p| right.iter().map(move |q| commutator_norm(p, q).unwrap_or(f64::INFINITY)))
        .fold(0.0, f64::max)
}

pub fn check_commutation(s: &Scenario) -> CommutationReport {
    let bob: Vec<&ComplexMatrix> = s.bob.projectors.iter().collect();
    let ab = max_commutator(&s.alice.projectors, &bob);
    let ae = max_commutator(&s.alice.projectors, &[&s.property]);
    let be = max_commutator(&s.bob.projectors, &[&s.property]);
    let state = max_commutator(
        s.alice.projectors.iter().chain(&s.bob.projectors),
        &[&s.rho],
    );
    CommutationReport {
        ab_ok: ab <= TOL,
        alice_e_ok: ae <= TOL,
        bob_e_ok: be <= TOL,
        max_violation: ab.max(ae).max(be),
        state_ok: state <= TOL,
    }
}

/// Diagonal weights `Tr(P ρ)` of the reduced state on one factor, in the
/// computational basis.
pub fn reduced_diagonal(s: &Scenario, factor: usize) -> Result<Vec<f64>> {
    let dims = s.factorization.dims();
    let d = *dims.get(factor).ok_or(Error::FactorOutOfRange {
        index: factor,
        factors: dims.len(),
    })?;
    (0..d)
        .map(|k| {
            let mut local = ComplexMatrix::zeros(d);
            local[(k, k)] = ONE;
            let p = embed_local(&local, factor, &s.factorization)?;
            Ok(crate::linalg::trace_of_product(&p, &s.rho)?.re)
        })
        .collect()
}

/// Computational basis vector `|index⟩` of dimension `dim`.
pub fn basis_vector(dim: usize, index: usize) -> Vec<Complex64> {
    let mut v = vec![ZERO; dim];
    v[index] = ONE;
    v
}
