//! Built-in example scenarios and seeded random scenario generators.
//!
//! Two fixed examples:
//!
//! * `example1(θ)`: Alice holds ℂ⁴ = 𝒜₀ ⊕ 𝒜₁, Bob holds ℂ⁶ = ℬ₀ ⊕ ℬ₁ ⊕ ℬ₂
//!   (all sectors two-dimensional) and the inaccessible lab holds a qubit.
//!   The state is `(|φ₀₀⟩|0⟩ + |φ₁₁⟩|0⟩ + |φ₁₂⟩|1⟩)/√3` with `|φᵢⱼ⟩` maximally
//!   entangled on 𝒜ᵢ ⊗ ℬⱼ, and `E` projects the qubit onto
//!   `cos(θ/2)|0⟩ + sin(θ/2)|1⟩`. Commuting; the recursion needs one refinement.
//! * `example2()`: qutrit ⊗ qubit ⊗ qubit, state
//!   `(|0⟩|β₀⟩|0⟩ + |1⟩|β₀⟩|0⟩ + |2⟩|β₁⟩|1⟩)/√3`, and `E` projects 𝓗_A ⊗ 𝓗_C
//!   onto `(|00⟩ + |10⟩)/√2`. Alice's outcomes do not commute with `E`, which
//!   produces common certainty of disagreement.
//!
//! The Bell states of `example1` are `(|u₀v₀⟩ + |u₁v₁⟩)/√2` in the
//! computational bases of each sector and `{|β₀⟩, |β₁⟩}` is Bob's
//! computational basis. Every quoted probability is invariant under both
//! choices.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{c, inner, kron_vec, normalize, ComplexMatrix, ZERO};
use crate::quantum_model::{
    embed_local, embed_on_factors, Agent, HilbertFactorization, Measurement, Scenario,
};

/// A named, deterministic example with its real parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ExampleSpec {
    pub name: &'static str,
    pub parameters: Vec<(&'static str, f64)>,
    pub summary: &'static str,
}

impl ExampleSpec {
    pub fn build(&self) -> Result<Scenario> {
        build_example(self.name, &self.parameters)
    }
}

pub fn catalog() -> Vec<ExampleSpec> {
    vec![
        ExampleSpec {
            name: "example1",
            parameters: vec![("theta", std::f64::consts::FRAC_PI_3)],
            summary: "4-6-2 commuting scenario; recursion refines once, Tr(C* rho) = 1/3",
        },
        ExampleSpec {
            name: "example2",
            parameters: vec![],
            summary: "3-2-2 non-commuting scenario with common certainty of disagreement",
        },
    ]
}

/// Builds an example by name. Unknown parameters are rejected; missing ones
/// take the catalog default.
pub fn build_example(name: &str, parameters: &[(&str, f64)]) -> Result<Scenario> {
    let spec = catalog()
        .into_iter()
        .find(|s| s.name == name)
        .ok_or_else(|| Error::InvalidGenerator(format!("unknown example '{name}'")))?;
    for (key, _) in parameters {
        if !spec.parameters.iter().any(|(k, _)| k == key) {
            return Err(Error::InvalidGenerator(format!(
                "example '{name}' has no parameter '{key}'"
            )));
        }
    }
    let param = |key: &str| {
        parameters
            .iter()
            .find(|(k, _)| *k == key)
            .or_else(|| spec.parameters.iter().find(|(k, _)| *k == key))
            .map(|(_, v)| *v)
            .expect("parameter declared in catalog")
    };
    match name {
        "example1" => Ok(example1(param("theta"))),
        "example2" => Ok(example2()),
        _ => unreachable!("catalog and builder out of sync"),
    }
}

const EX1_DIMS: [usize; 3] = [4, 6, 2];

/// `|φ_θ⟩ = cos(θ/2)|0⟩ + sin(θ/2)|1⟩`.
pub fn example1_property_vector(theta: f64) -> Vec<Complex64> {
    vec![c((theta / 2.0).cos(), 0.0), c((theta / 2.0).sin(), 0.0)]
}

/// Global state vector of the first example, index `a·12 + b·2 + c`.
pub fn example1_state() -> Vec<Complex64> {
    let [_, d_b, d_c] = EX1_DIMS;
    let amp = 1.0 / (3.0f64.sqrt() * 2.0f64.sqrt());
    let mut psi = vec![ZERO; EX1_DIMS.iter().product()];
    // (Alice sector, Bob sector, qubit in lab C)
    for (i, j, qubit) in [(0, 0, 0), (1, 1, 0), (1, 2, 1)] {
        for k in 0..2 {
            let a = 2 * i + k;
            let b = 2 * j + k;
            psi[(a * d_b + b) * d_c + qubit] += c(amp, 0.0);
        }
    }
    psi
}

pub fn example1(theta: f64) -> Scenario {
    let f = HilbertFactorization::tripartite(EX1_DIMS[0], EX1_DIMS[1], EX1_DIMS[2])
        .expect("static dims");
    let alice = Measurement::from_subspaces(Agent::Alice, &[vec![0, 1], vec![2, 3]], 0, &f)
        .expect("static measurement");
    let bob = Measurement::from_subspaces(Agent::Bob, &[vec![0, 1], vec![2, 3], vec![4, 5]], 1, &f)
        .expect("static measurement");
    let local_e = ComplexMatrix::projector_onto(&example1_property_vector(theta)).expect("2x2");
    let property = embed_local(&local_e, 2, &f).expect("static embedding");
    Scenario::from_pure(f, &example1_state(), alice, bob, property).expect("valid example")
}

/// Global state vector of the second example, index `a·4 + b·2 + c`.
pub fn example2_state() -> Vec<Complex64> {
    let amp = c(1.0 / 3.0f64.sqrt(), 0.0);
    let mut psi = vec![ZERO; 12];
    for (a, b, cc) in [(0, 0, 0), (1, 0, 0), (2, 1, 1)] {
        psi[a * 4 + b * 2 + cc] = amp;
    }
    psi
}

/// `|φ⟩_AC = (|0⟩_A|0⟩_C + |1⟩_A|0⟩_C)/√2`, index `a·2 + c`.
pub fn example2_property_vector() -> Vec<Complex64> {
    let h = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let mut phi = vec![ZERO; 6];
    phi[0] = h;
    phi[2] = h;
    phi
}

pub fn example2() -> Scenario {
    let f = HilbertFactorization::tripartite(3, 2, 2).expect("static dims");
    let alice = Measurement::from_subspaces(Agent::Alice, &[vec![0], vec![1], vec![2]], 0, &f)
        .expect("static measurement");
    let bob = Measurement::from_subspaces(Agent::Bob, &[vec![0], vec![1]], 1, &f)
        .expect("static measurement");
    let local_e = ComplexMatrix::projector_onto(&example2_property_vector()).expect("6x6");
    let property = embed_on_factors(&local_e, &[0, 2], &f).expect("static embedding");
    Scenario::from_pure(f, &example2_state(), alice, bob, property).expect("valid example")
}

// ---------------------------------------------------------------------------
// Random generators
// ---------------------------------------------------------------------------

fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian_vector(rng: &mut impl Rng, dim: usize) -> Vec<Complex64> {
    (0..dim)
        .map(|_| c(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect()
}

/// Unit vector with i.i.d. standard complex Gaussian entries.
pub fn random_unit_vector(rng: &mut impl Rng, dim: usize) -> Vec<Complex64> {
    loop {
        let mut v = gaussian_vector(rng, dim);
        if normalize(&mut v) > 1e-8 {
            return v;
        }
    }
}

/// Projects `v` off the span of the orthonormal vectors in `basis`, then
/// normalizes. Returns `None` if nothing is left.
fn orthogonalize(mut v: Vec<Complex64>, basis: &[Vec<Complex64>]) -> Option<Vec<Complex64>> {
    // Two passes of modified Gram-Schmidt.
    for _ in 0..2 {
        for b in basis {
            let overlap = inner(b, &v);
            for (x, y) in v.iter_mut().zip(b) {
                *x -= overlap * y;
            }
        }
    }
    (normalize(&mut v) > 1e-8).then_some(v)
}

/// Haar-like random orthonormal basis of ℂ^dim.
pub fn random_basis(rng: &mut impl Rng, dim: usize) -> Vec<Vec<Complex64>> {
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(dim);
    while basis.len() < dim {
        if let Some(v) = orthogonalize(gaussian_vector(rng, dim), &basis) {
            basis.push(v);
        }
    }
    basis
}

/// Random projector of the given rank.
pub fn random_projector(rng: &mut impl Rng, dim: usize, rank: usize) -> ComplexMatrix {
    let basis = random_basis(rng, dim);
    projector_onto_span(dim, &basis[..rank])
}

fn projector_onto_span(dim: usize, vectors: &[Vec<Complex64>]) -> ComplexMatrix {
    vectors.iter().fold(ComplexMatrix::zeros(dim), |acc, v| {
        &acc + &ComplexMatrix::projector_onto(v).expect("vector length matches dim")
    })
}

/// Random mixed state `GG†/Tr(GG†)` with Gaussian `G`.
pub fn random_density(rng: &mut impl Rng, dim: usize) -> ComplexMatrix {
    let g = ComplexMatrix::from_vec(dim, gaussian_vector(rng, dim * dim)).expect("sized");
    let w = &g * &g.adjoint();
    let tr = w.trace().re;
    w.scale_real(1.0 / tr)
}

/// Random composition of `total` into `parts` positive sizes.
pub fn random_partition(rng: &mut impl Rng, total: usize, parts: usize) -> Vec<usize> {
    assert!(parts >= 1 && parts <= total);
    let mut sizes = vec![1; parts];
    for _ in parts..total {
        sizes[rng.random_range(0..parts)] += 1;
    }
    sizes
}

/// Splits a random orthonormal basis of a factor into groups; each group
/// spans one outcome subspace.
fn random_blocks(rng: &mut impl Rng, dim: usize, parts: usize) -> Vec<Vec<Vec<Complex64>>> {
    let basis = random_basis(rng, dim);
    let mut it = basis.into_iter();
    random_partition(rng, dim, parts)
        .into_iter()
        .map(|n| it.by_ref().take(n).collect())
        .collect()
}

fn measurement_from_blocks(
    agent: Agent,
    blocks: &[Vec<Vec<Complex64>>],
    factor: usize,
    f: &HilbertFactorization,
) -> Result<Measurement> {
    let d = f.dims()[factor];
    let local: Vec<ComplexMatrix> = blocks.iter().map(|b| projector_onto_span(d, b)).collect();
    Measurement::from_local_blocks(agent, &local, factor, f)
}

/// Random unit vector inside the span of `vectors`.
fn random_in_span(rng: &mut impl Rng, vectors: &[Vec<Complex64>]) -> Vec<Complex64> {
    let coeffs = random_unit_vector(rng, vectors.len());
    let dim = vectors[0].len();
    let mut out = vec![ZERO; dim];
    for (a, v) in coeffs.iter().zip(vectors) {
        for (o, x) in out.iter_mut().zip(v) {
            *o += a * x;
        }
    }
    out
}

/// Tensor-product vector dimensions for the tripartite generators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TripartiteDims {
    pub alice: usize,
    pub bob: usize,
    pub inaccessible: usize,
}

impl TripartiteDims {
    pub const fn new(alice: usize, bob: usize, inaccessible: usize) -> Self {
        Self {
            alice,
            bob,
            inaccessible,
        }
    }

    pub fn total(&self) -> usize {
        self.alice * self.bob * self.inaccessible
    }

    fn validate(&self) -> Result<HilbertFactorization> {
        if self.alice < 2 || self.bob < 2 || self.inaccessible < 2 {
            return Err(Error::InvalidGenerator(format!(
                "every factor needs dimension at least 2, got {self:?}"
            )));
        }
        HilbertFactorization::tripartite(self.alice, self.bob, self.inaccessible)
    }
}

fn check_branch_counts(dims: TripartiteDims, counts: (usize, usize)) -> Result<()> {
    let (la, lb) = counts;
    if la == 0 || lb == 0 || la > dims.alice || lb > dims.bob {
        return Err(Error::InvalidGenerator(format!(
            "branch counts {counts:?} do not partition dimensions ({}, {})",
            dims.alice, dims.bob
        )));
    }
    Ok(())
}

/// Random pure state, random local subspace measurements, and `E` a random
/// projector on the inaccessible factor. Both commutation premises hold by
/// construction.
pub fn random_commuting_scenario(
    seed: u64,
    dims: TripartiteDims,
    branch_counts: (usize, usize),
) -> Result<Scenario> {
    let f = dims.validate()?;
    check_branch_counts(dims, branch_counts)?;
    let mut rng = rng_for(seed);
    let alice = measurement_from_blocks(
        Agent::Alice,
        &random_blocks(&mut rng, dims.alice, branch_counts.0),
        0,
        &f,
    )?;
    let bob = measurement_from_blocks(
        Agent::Bob,
        &random_blocks(&mut rng, dims.bob, branch_counts.1),
        1,
        &f,
    )?;
    let rank = rng.random_range(1..dims.inaccessible);
    let local_e = random_projector(&mut rng, dims.inaccessible, rank);
    let property = embed_local(&local_e, 2, &f)?;
    let psi = random_unit_vector(&mut rng, dims.total());
    Scenario::from_pure(f, &psi, alice, bob, property)
}

/// As [`random_commuting_scenario`], but `E` is a random projector on
/// 𝓗_A ⊗ 𝓗_C and branch counts are drawn at random.
pub fn random_noncommuting_scenario(seed: u64, dims: TripartiteDims) -> Result<Scenario> {
    let f = dims.validate()?;
    let mut rng = rng_for(seed);
    let la = rng.random_range(2..=dims.alice);
    let lb = rng.random_range(2..=dims.bob);
    let alice = measurement_from_blocks(Agent::Alice, &random_blocks(&mut rng, dims.alice, la), 0, &f)?;
    let bob = measurement_from_blocks(Agent::Bob, &random_blocks(&mut rng, dims.bob, lb), 1, &f)?;
    let d_ac = dims.alice * dims.inaccessible;
    let rank = rng.random_range(1..d_ac);
    let local_e = random_projector(&mut rng, d_ac, rank);
    let property = embed_on_factors(&local_e, &[0, 2], &f)?;
    let psi = random_unit_vector(&mut rng, dims.total());
    Scenario::from_pure(f, &psi, alice, bob, property)
}

/// Commuting scenario whose state is a superposition of "sector" vectors,
/// each living in one Alice outcome subspace ⊗ one Bob outcome subspace ⊗ a
/// fixed vector of the inaccessible qudit. Alice's outcome `i` is linked to
/// one or two of Bob's outcomes, so exact common certainty with nontrivial
/// refinement occurs often. With `leakage > 0` every Alice outcome may also
/// carry a sector of relative weight at most `leakage` towards an unrelated
/// Bob outcome, which breaks exact certainty while keeping
/// `(1 - leakage)`-certainty.
pub fn random_sector_scenario(
    seed: u64,
    dims: TripartiteDims,
    branch_counts: (usize, usize),
    leakage: f64,
) -> Result<Scenario> {
    let f = dims.validate()?;
    check_branch_counts(dims, branch_counts)?;
    if !(0.0..1.0).contains(&leakage) {
        return Err(Error::InvalidGenerator(format!("leakage {leakage} outside [0, 1)")));
    }
    let mut rng = rng_for(seed);
    let (la, lb) = branch_counts;
    let a_blocks = random_blocks(&mut rng, dims.alice, la);
    let b_blocks = random_blocks(&mut rng, dims.bob, lb);
    let alice = measurement_from_blocks(Agent::Alice, &a_blocks, 0, &f)?;
    let bob = measurement_from_blocks(Agent::Bob, &b_blocks, 1, &f)?;

    // A small palette of qudit vectors makes outcome probabilities coincide
    // across sectors.
    let palette: Vec<Vec<Complex64>> = (0..2)
        .map(|_| random_unit_vector(&mut rng, dims.inaccessible))
        .collect();

    let mut sectors: Vec<(usize, usize, f64, Vec<Complex64>)> = Vec::new();
    for i in 0..la {
        let primary = rng.random_range(0..lb);
        let mut partners = vec![primary];
        if lb > 1 && rng.random_bool(1.0 / 3.0) {
            let second = (primary + rng.random_range(1..lb)) % lb;
            partners.push(second);
        }
        for &j in &partners {
            let cvec = palette[rng.random_range(0..palette.len())].clone();
            sectors.push((i, j, rng.random_range(0.5..1.5), cvec));
        }
        if leakage > 0.0 && lb > partners.len() && rng.random_bool(0.5) {
            let j = (0..lb).find(|j| !partners.contains(j)).expect("spare outcome");
            let w = leakage * rng.random_range(0.0..1.0);
            sectors.push((i, j, w, random_unit_vector(&mut rng, dims.inaccessible)));
        }
    }

    let mut psi = vec![ZERO; dims.total()];
    for (i, j, w, cvec) in &sectors {
        let ab_vectors: Vec<Vec<Complex64>> = a_blocks[*i]
            .iter()
            .flat_map(|a| b_blocks[*j].iter().map(move |b| kron_vec(a, b)))
            .collect();
        let ab = random_in_span(&mut rng, &ab_vectors);
        let v = kron_vec(&ab, cvec);
        for (p, x) in psi.iter_mut().zip(&v) {
            *p += x * w.sqrt();
        }
    }
    normalize(&mut psi);

    let rank = rng.random_range(1..dims.inaccessible);
    let local_e = random_projector(&mut rng, dims.inaccessible, rank);
    let property = embed_local(&local_e, 2, &f)?;
    Scenario::from_pure(f, &psi, alice, bob, property)
}

/// Non-commuting scenario built so that Alice is certain of `E` on her first
/// outcome and, usually, Bob is certain of not-`E` on his second outcome.
/// These are the configurations the 0-1 impossibility result speaks about.
pub fn random_certainty_seeded_scenario(seed: u64, dims: TripartiteDims) -> Result<Scenario> {
    let f = dims.validate()?;
    let mut rng = rng_for(seed);
    let la = rng.random_range(2..=dims.alice);
    let lb = rng.random_range(2..=dims.bob);
    let a_blocks = random_blocks(&mut rng, dims.alice, la);
    let b_blocks = random_blocks(&mut rng, dims.bob, lb);
    let alice = measurement_from_blocks(Agent::Alice, &a_blocks, 0, &f)?;
    let bob = measurement_from_blocks(Agent::Bob, &b_blocks, 1, &f)?;

    let d_c = dims.inaccessible;
    let d_ac = dims.alice * d_c;
    let c_basis: Vec<Vec<Complex64>> = (0..d_c)
        .map(|k| crate::quantum_model::basis_vector(d_c, k))
        .collect();
    let in_blocks = |blocks: &[Vec<Vec<Complex64>>]| -> Vec<Vec<Complex64>> {
        blocks
            .iter()
            .flatten()
            .flat_map(|a| c_basis.iter().map(move |cv| kron_vec(a, cv)))
            .collect()
    };
    // x lies in (Alice outcome 0) ⊗ C and inside E; y lies in the other
    // outcomes ⊗ C and outside E.
    let x = random_in_span(&mut rng, &in_blocks(&a_blocks[..1]));
    let y = random_in_span(&mut rng, &in_blocks(&a_blocks[1..]));
    let mut e_span = vec![x.clone()];
    let extra = rng.random_range(0..(d_ac - 2).min(3) + 1);
    let mut fence = vec![x.clone(), y.clone()];
    for _ in 0..extra {
        if let Some(z) = orthogonalize(gaussian_vector(&mut rng, d_ac), &fence) {
            fence.push(z.clone());
            e_span.push(z);
        }
    }
    let local_e = projector_onto_span(d_ac, &e_span);
    let property = embed_on_factors(&local_e, &[0, 2], &f)?;

    let b_all: Vec<Vec<Complex64>> = b_blocks.iter().flatten().cloned().collect();
    let b0 = if rng.random_bool(0.5) {
        random_in_span(&mut rng, &b_blocks[0])
    } else {
        random_in_span(&mut rng, &b_all)
    };
    let b1 = random_in_span(&mut rng, &b_blocks[1]);

    let mut components = vec![(ac_b_to_abc(&x, &b0, dims), rng.random_range(0.3..1.0))];
    components.push((ac_b_to_abc(&y, &b1, dims), rng.random_range(0.3..1.0)));
    if rng.random_bool(0.5) {
        let u = random_in_span(&mut rng, &in_blocks(&a_blocks[1..]));
        let b = random_in_span(&mut rng, &b_all);
        components.push((ac_b_to_abc(&u, &b, dims), rng.random_range(0.0..0.5)));
    }
    let mut psi = vec![ZERO; dims.total()];
    for (v, w) in &components {
        for (p, x) in psi.iter_mut().zip(v) {
            *p += x * *w;
        }
    }
    normalize(&mut psi);
    Scenario::from_pure(f, &psi, alice, bob, property)
}

/// Reorders `|x⟩_AC ⊗ |b⟩_B` into A ⊗ B ⊗ C index order.
fn ac_b_to_abc(x: &[Complex64], b: &[Complex64], dims: TripartiteDims) -> Vec<Complex64> {
    let (d_b, d_c) = (dims.bob, dims.inaccessible);
    let mut out = vec![ZERO; dims.total()];
    for a in 0..dims.alice {
        for (bi, bv) in b.iter().enumerate() {
            for cc in 0..d_c {
                out[(a * d_b + bi) * d_c + cc] = x[a * d_c + cc] * bv;
            }
        }
    }
    out
}

/// Seeded picker of tripartite dimensions with total dimension at most
/// `max_total`.
pub fn random_dims(rng: &mut impl Rng, max_total: usize) -> TripartiteDims {
    loop {
        let d = TripartiteDims::new(
            rng.random_range(2..=6),
            rng.random_range(2..=6),
            rng.random_range(2..=3),
        );
        if d.total() <= max_total {
            return d;
        }
    }
}

/// Deterministic RNG for sweeps driven by a single seed.
pub fn sweep_rng(seed: u64) -> ChaCha8Rng {
    rng_for(seed)
}

/// Scenario families drawn by the randomized sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMix {
    /// Commuting scenarios, half of them sector-structured so common
    /// certainty is frequent. Total dimension at most 36.
    Commuting,
    /// Commuting, non-commuting and certainty-seeded scenarios in equal
    /// parts. Total dimension at most 24.
    ZeroOne,
    /// Small scenarios with local measurements and `E` on 𝓗_A ⊗ 𝓗_C, for
    /// recording. Total dimension at most 12.
    Register,
}

/// The `seed`-th scenario of a sweep family.
pub fn sweep_scenario(mix: SweepMix, seed: u64) -> Result<Scenario> {
    let mut rng = sweep_rng(seed);
    let max_total = match mix {
        SweepMix::Commuting => 36,
        SweepMix::ZeroOne => 24,
        SweepMix::Register => 12,
    };
    let dims = random_dims(&mut rng, max_total);
    let counts = (
        rng.random_range(1..=dims.alice),
        rng.random_range(1..=dims.bob),
    );
    let inner_seed: u64 = rng.random();
    match mix {
        SweepMix::Commuting => {
            if rng.random_bool(0.5) {
                random_sector_scenario(inner_seed, dims, counts, 0.0)
            } else {
                random_commuting_scenario(inner_seed, dims, counts)
            }
        }
        SweepMix::ZeroOne => match rng.random_range(0..3) {
            0 => random_commuting_scenario(inner_seed, dims, counts),
            1 => random_noncommuting_scenario(inner_seed, dims),
            _ => random_certainty_seeded_scenario(inner_seed, dims),
        },
        SweepMix::Register => {
            if rng.random_bool(0.5) {
                random_noncommuting_scenario(inner_seed, dims)
            } else {
                random_sector_scenario(inner_seed, dims, counts, 0.0)
            }
        }
    }
}
