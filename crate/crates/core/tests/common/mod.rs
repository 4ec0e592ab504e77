//! Reference computations for the integration tests. Nothing here goes
//! through the library's own matrix code: dense algebra comes from
//! nalgebra, probabilities are read off state vectors directly, and the
//! classical recursion is a separate set-of-flags implementation.

#![allow(dead_code)]

use std::collections::HashMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};
use qagree::classical::ClassicalModel;
use qagree::linalg::ComplexMatrix;
use qagree::Agent;

pub type Dense = DMatrix<Complex64>;

pub fn dense(m: &ComplexMatrix) -> Dense {
    let n = m.dim();
    DMatrix::from_fn(n, n, |i, j| m[(i, j)])
}

pub fn max_entry_diff(a: &Dense, b: &Dense) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn triple_loop_product(a: &ComplexMatrix, b: &ComplexMatrix) -> Dense {
    let n = a.dim();
    let mut out = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for i in 0..n {
        for j in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..n {
                acc += a[(i, k)] * b[(k, j)];
            }
            out[(i, j)] = acc;
        }
    }
    out
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_spectrum(m: &Dense) -> Vec<f64> {
    let mut ev: Vec<f64> = m.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn trace_norm_svd(m: &Dense) -> f64 {
    m.clone().singular_values().sum()
}

pub fn trace_norm_hermitian(m: &Dense) -> f64 {
    hermitian_spectrum(m).iter().map(|x| x.abs()).sum()
}

// ---------------------------------------------------------------------------
// State vectors on A ⊗ B ⊗ C
// ---------------------------------------------------------------------------

fn cplx(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn split(mut idx: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for k in (0..dims.len()).rev() {
        out[k] = idx % dims[k];
        idx /= dims[k];
    }
    out
}

/// Weight of the masked vector and the probability of the rank-one property
/// `|φ⟩⟨φ|` on `factors` (row-major over those factors) within it.
pub fn masked_probability(
    psi: &[Complex64],
    dims: &[usize],
    keep: impl Fn(&[usize]) -> bool,
    phi: &[Complex64],
    factors: &[usize],
) -> (f64, f64) {
    let mut weight = 0.0;
    let mut overlaps: HashMap<Vec<usize>, Complex64> = HashMap::new();
    for (idx, amp) in psi.iter().enumerate() {
        let digits = split(idx, dims);
        if !keep(&digits) {
            continue;
        }
        weight += amp.norm_sqr();
        let mut f_idx = 0;
        for &f in factors {
            f_idx = f_idx * dims[f] + digits[f];
        }
        let rest: Vec<usize> = (0..dims.len())
            .filter(|k| !factors.contains(k))
            .map(|k| digits[k])
            .collect();
        *overlaps.entry(rest).or_default() += phi[f_idx].conj() * amp;
    }
    let hit: f64 = overlaps.values().map(|z| z.norm_sqr()).sum();
    (weight, hit / weight)
}

pub const EX1_DIMS: [usize; 3] = [4, 6, 2];
pub const EX2_DIMS: [usize; 3] = [3, 2, 2];

/// `(1/√3)(|Φ_{A0,B0}⟩|0⟩ + |Φ_{A1,B1}⟩|0⟩ + |Φ_{A1,B2}⟩|1⟩)` with each
/// sector spanned by consecutive basis pairs.
pub fn ex1_psi() -> Vec<Complex64> {
    let mut psi = vec![cplx(0.0); 48];
    let amp = (1.0f64 / 6.0).sqrt();
    for (i, j, qubit) in [(0usize, 0usize, 0usize), (1, 1, 0), (1, 2, 1)] {
        for k in 0..2 {
            psi[((2 * i + k) * 6 + 2 * j + k) * 2 + qubit] = cplx(amp);
        }
    }
    psi
}

pub fn ex1_phi(theta: f64) -> Vec<Complex64> {
    vec![cplx((theta / 2.0).cos()), cplx((theta / 2.0).sin())]
}

/// `Pr[E; P_X^k]` in the first example; outcome `k` covers the local basis
/// states `2k, 2k+1`.
pub fn ex1_branch(theta: f64, agent: Agent, k: usize) -> f64 {
    let slot = match agent {
        Agent::Alice => 0,
        Agent::Bob => 1,
    };
    masked_probability(&ex1_psi(), &EX1_DIMS, |d| d[slot] / 2 == k, &ex1_phi(theta), &[2]).1
}

pub fn ex2_psi() -> Vec<Complex64> {
    let mut psi = vec![cplx(0.0); 12];
    for (a, b, c) in [(0usize, 0usize, 0usize), (1, 0, 0), (2, 1, 1)] {
        psi[(a * 2 + b) * 2 + c] = cplx(1.0 / 3.0f64.sqrt());
    }
    psi
}

/// `(|0⟩_A|0⟩_C + |1⟩_A|0⟩_C)/√2`, indexed `2a + c`.
pub fn ex2_phi() -> Vec<Complex64> {
    let h = cplx(std::f64::consts::FRAC_1_SQRT_2);
    let z = cplx(0.0);
    vec![h, z, h, z, z, z]
}

/// Weight and `Pr[E | ·]` for the second example restricted to the given
/// Alice and Bob outcomes.
pub fn ex2_conditional(alice: &[usize], bob: &[usize]) -> (f64, f64) {
    masked_probability(
        &ex2_psi(),
        &EX2_DIMS,
        |d| alice.contains(&d[0]) && bob.contains(&d[1]),
        &ex2_phi(),
        &[0, 2],
    )
}

/// Both sides of the perturbation bound for the first example against
/// `(1 − p)ρ + p 𝕀/48`, with `C_* = P_A^0 P_B^0` (rank 8, and rank 4 inside
/// `E`). Returns `(trace distance, q_A, q_B, bound)`.
pub fn ex1_depolarized(theta: f64, p: f64) -> (f64, f64, f64, f64) {
    let d = 48.0;
    let (w, q) = masked_probability(
        &ex1_psi(),
        &EX1_DIMS,
        |x| x[0] < 2 && x[1] < 2,
        &ex1_phi(theta),
        &[2],
    );
    let distance = 2.0 * p * (1.0 - 1.0 / d);
    let w_b = (1.0 - p) * w + p * 8.0 / d;
    let q_b = ((1.0 - p) * w * q + p * 4.0 / d) / w_b;
    (distance, q, q_b, 2.0 * distance / w.max(w_b))
}

// ---------------------------------------------------------------------------
// Classical models
// ---------------------------------------------------------------------------

/// A finite model as flat arrays: cell index per state and a membership
/// flag for the event.
pub struct Flat {
    pub weights: Vec<BigRational>,
    pub alice: Vec<usize>,
    pub bob: Vec<usize>,
    pub event: Vec<bool>,
}

fn cell_ids(n: usize, cells: &[Vec<usize>]) -> Vec<usize> {
    let mut ids = vec![usize::MAX; n];
    for (c, cell) in cells.iter().enumerate() {
        for &w in cell {
            ids[w] = c;
        }
    }
    ids
}

impl Flat {
    pub fn from_model(m: &ClassicalModel<BigRational>) -> Self {
        let n = m.len();
        Flat {
            weights: m.measure().to_vec(),
            alice: cell_ids(n, m.alice_partition()),
            bob: cell_ids(n, m.bob_partition()),
            event: (0..n).map(|w| m.event().contains(&w)).collect(),
        }
    }

    fn conditional(&self, set: &[bool], ids: &[usize], state: usize) -> BigRational {
        let mut num = BigRational::zero();
        let mut den = BigRational::zero();
        for w in 0..self.weights.len() {
            if ids[w] == ids[state] {
                den += &self.weights[w];
                if set[w] {
                    num += &self.weights[w];
                }
            }
        }
        num / den
    }

    pub fn posterior(&self, agent: Agent, state: usize) -> BigRational {
        let ids = match agent {
            Agent::Alice => &self.alice,
            Agent::Bob => &self.bob,
        };
        self.conditional(&self.event, ids, state)
    }

    /// Flags of `C_∞` for the pair `(q_A, q_B)`.
    pub fn common_certainty(&self, qa: &BigRational, qb: &BigRational) -> Vec<bool> {
        let n = self.weights.len();
        let one = BigRational::one();
        let mut a: Vec<bool> = (0..n).map(|w| &self.posterior(Agent::Alice, w) == qa).collect();
        let mut b: Vec<bool> = (0..n).map(|w| &self.posterior(Agent::Bob, w) == qb).collect();
        loop {
            let na: Vec<bool> = (0..n)
                .map(|w| a[w] && self.conditional(&b, &self.alice, w) == one)
                .collect();
            let nb: Vec<bool> = (0..n)
                .map(|w| b[w] && self.conditional(&a, &self.bob, w) == one)
                .collect();
            if na == a && nb == b {
                return (0..n).map(|w| a[w] && b[w]).collect();
            }
            a = na;
            b = nb;
        }
    }

    pub fn weight(&self, flags: &[bool]) -> BigRational {
        flags
            .iter()
            .zip(&self.weights)
            .filter(|(f, _)| **f)
            .fold(BigRational::zero(), |acc, (_, w)| acc + w)
    }
}

/// The triangle `a=1 ⇒ e=1`, `a=1 ⇒ b=1`, `b=1 ⇒ e=0` read off
/// nonnegative weights indexed `4a + 2b + e`.
pub fn chain_from_counts(w: &[u32]) -> bool {
    let sum = |pred: &dyn Fn(usize) -> bool| -> u32 { (0..8).filter(|&i| pred(i)).map(|i| w[i]).sum() };
    let a1 = sum(&|i| i & 4 != 0);
    let b1 = sum(&|i| i & 2 != 0);
    a1 > 0
        && b1 > 0
        && sum(&|i| i & 4 != 0 && i & 1 != 0) == a1
        && sum(&|i| i & 4 != 0 && i & 2 != 0) == a1
        && sum(&|i| i & 2 != 0 && i & 1 == 0) == b1
}

/// Calls `f` on every way of writing `total` as an ordered sum of `parts`
/// nonnegative integers.
pub fn for_each_composition(total: u32, parts: usize, f: &mut impl FnMut(&[u32])) {
    fn go(rest: u32, k: usize, buf: &mut Vec<u32>, parts: usize, f: &mut impl FnMut(&[u32])) {
        if k + 1 == parts {
            buf.push(rest);
            f(buf);
            buf.pop();
            return;
        }
        for x in 0..=rest {
            buf.push(x);
            go(rest - x, k + 1, buf, parts, f);
            buf.pop();
        }
    }
    let mut buf = Vec::with_capacity(parts);
    go(total, 0, &mut buf, parts, f);
}

// ---------------------------------------------------------------------------
// Proof-lemma quantities, recomputed densely from a finished recursion
// ---------------------------------------------------------------------------

pub struct LemmaReport {
    /// Largest `‖X² − X‖` or `‖X − X†‖` over every level.
    pub projector: f64,
    /// Largest `‖X_{n+1} X_n − X_{n+1}‖`.
    pub nesting: f64,
    pub commutator: f64,
    /// `Tr(X_n ρ)` nonincreasing and bounded below by `Tr(C_* ρ) > 0`.
    pub chain_ok: bool,
    pub nondisturbance: f64,
    /// Largest gap between a fixed-point branch value and the value
    /// conditioned on the whole fixed-point projector, over both agents.
    pub coarse: f64,
}

fn re_trace(m: &Dense) -> f64 {
    m.trace().re
}

fn conditional(e: &Dense, p: &Dense, rho: &Dense) -> Option<f64> {
    let w = re_trace(&(p * rho));
    (w > 1e-9).then(|| re_trace(&(e * p * rho * p)) / w)
}

pub fn lemma_report(s: &qagree::Scenario, t: &qagree::RecursionTrace) -> LemmaReport {
    let rho = dense(s.rho());
    let e = dense(s.property());
    let a_star = dense(&t.a_star);
    let b_star = dense(&t.b_star);
    let c_star = &a_star * &b_star;
    let c_weight = re_trace(&(&c_star * &rho));

    let mut projector: f64 = 0.0;
    let mut nesting: f64 = 0.0;
    let mut chain_ok = c_weight > 1e-9;
    for pick in [0usize, 1] {
        let ops: Vec<Dense> = t
            .levels
            .iter()
            .map(|l| dense(if pick == 0 { &l.alice } else { &l.bob }))
            .collect();
        let mut prev = f64::INFINITY;
        for (n, x) in ops.iter().enumerate() {
            projector = projector
                .max(max_entry_diff(&(x * x), x))
                .max(max_entry_diff(x, &x.adjoint()));
            if n > 0 {
                nesting = nesting.max(max_entry_diff(&(x * &ops[n - 1]), x));
            }
            let w = re_trace(&(x * &rho));
            chain_ok &= w <= prev + 1e-9 && w + 1e-9 >= c_weight;
            prev = w;
        }
    }
    chain_ok &= max_entry_diff(&c_star, &dense(&t.c_star)) <= 1e-9;

    let commutator = max_entry_diff(&(&a_star * &b_star), &(&b_star * &a_star));
    let ba = &b_star * &a_star;
    let w_ba = re_trace(&(&ba * &rho));
    let w_a = re_trace(&(&a_star * &rho));
    let lhs = &ba * &rho * ba.adjoint() / Complex64::new(w_ba, 0.0);
    let rhs = &a_star * &rho * &a_star / Complex64::new(w_a, 0.0);
    let nondisturbance = max_entry_diff(&lhs, &rhs);

    let mut coarse: f64 = 0.0;
    let fixed = t.levels.last().unwrap();
    for (star, branches, meas) in [
        (&a_star, &fixed.alice_branches, s.alice()),
        (&b_star, &fixed.bob_branches, s.bob()),
    ] {
        let whole = conditional(&e, star, &rho).unwrap_or(f64::NAN);
        for &k in branches {
            if let Some(v) = conditional(&e, &dense(&meas.projectors()[k]), &rho) {
                coarse = coarse.max((v - whole).abs());
            }
        }
    }
    LemmaReport {
        projector,
        nesting,
        commutator,
        chain_ok,
        nondisturbance,
        coarse,
    }
}

/// `(1 − t)ρ + tσ`, where `σ` is `𝕀/d` or a random density, with `t`
/// chosen so that `‖Δ‖₁` is `target` (at most, for the depolarizing case).
pub fn perturb(
    rng: &mut impl rand::Rng,
    rho: &ComplexMatrix,
    depolarize: bool,
    target: f64,
) -> ComplexMatrix {
    let d = rho.dim();
    let sigma = if depolarize {
        ComplexMatrix::identity(d).scale_real(1.0 / d as f64)
    } else {
        qagree::scenarios::random_density(rng, d)
    };
    let full = trace_norm_hermitian(&(dense(rho) - dense(&sigma)));
    let t = (target / full).min(1.0);
    rho.scale_real(1.0 - t).try_add(&sigma.scale_real(t)).unwrap()
}
