mod common;

use common::{dense, hermitian_spectrum, max_entry_diff, trace_norm_hermitian, trace_norm_svd};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use qagree::linalg::{
    adjoint, hermitian_eigenvalues, is_density, is_projector, kron, trace, trace_norm,
};
use qagree::quantum_model::{basis_projector, embed_local};
use qagree::scenarios::{random_density, random_projector, sweep_rng};
use qagree::{Agent, ComplexMatrix, HilbertFactorization, Measurement};

fn matrix(dim: usize) -> impl Strategy<Value = ComplexMatrix> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), dim * dim).prop_map(move |v| {
        ComplexMatrix::from_vec(dim, v.into_iter().map(|(re, im)| Complex64::new(re, im)).collect())
            .unwrap()
    })
}

fn pair(max: usize) -> impl Strategy<Value = (ComplexMatrix, ComplexMatrix)> {
    (1..=max).prop_flat_map(|n| (matrix(n), matrix(n)))
}

fn hermitian(dim: usize) -> impl Strategy<Value = ComplexMatrix> {
    matrix(dim).prop_map(|m| m.try_add(&m.adjoint()).unwrap().scale_real(0.5))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn product_matches_triple_loop((a, b) in pair(6)) {
        let got = dense(&a.matmul(&b).unwrap());
        prop_assert!(max_entry_diff(&got, &common::triple_loop_product(&a, &b)) < 1e-12);
        prop_assert!(max_entry_diff(&got, &(dense(&a) * dense(&b))) < 1e-12);
    }

    #[test]
    fn kron_mixed_product(
        (a, c) in pair(4),
        (b, d) in pair(4),
    ) {
        let lhs = kron(&a, &b).matmul(&kron(&c, &d)).unwrap();
        let rhs = kron(&a.matmul(&c).unwrap(), &b.matmul(&d).unwrap());
        prop_assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-12);
        prop_assert!(max_entry_diff(&dense(&kron(&a, &b)), &dense(&a).kronecker(&dense(&b))) == 0.0);
    }

    #[test]
    fn trace_is_cyclic((a, b) in pair(6)) {
        let ab = trace(&a.matmul(&b).unwrap());
        let ba = trace(&b.matmul(&a).unwrap());
        prop_assert!((ab - ba).norm() < 1e-12);
    }

    #[test]
    fn adjoint_rules((a, b) in pair(5)) {
        prop_assert_eq!(adjoint(&adjoint(&a)), a.clone());
        let lhs = adjoint(&a.matmul(&b).unwrap());
        let rhs = adjoint(&b).matmul(&adjoint(&a)).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-12);
        prop_assert!(max_entry_diff(&dense(&adjoint(&a)), &dense(&a).adjoint()) == 0.0);
    }

    #[test]
    fn trace_norm_is_a_norm(
        (a, b, c) in (1usize..=5).prop_flat_map(|n| (matrix(n), matrix(n), matrix(n))),
        s in -3.0f64..3.0,
    ) {
        let na = trace_norm(&a).unwrap();
        prop_assert!(na >= 0.0);
        prop_assert!((na - trace_norm_svd(&dense(&a))).abs() < 1e-9);
        prop_assert!(na + 1e-12 >= trace(&a).norm());
        let sum = trace_norm(&a.try_add(&b).unwrap()).unwrap();
        prop_assert!(sum <= na + trace_norm(&b).unwrap() + 1e-9);
        let ac = trace_norm(&a.try_sub(&c).unwrap()).unwrap();
        let ab_bc = trace_norm(&a.try_sub(&b).unwrap()).unwrap() + trace_norm(&b.try_sub(&c).unwrap()).unwrap();
        prop_assert!(ac <= ab_bc + 1e-9);
        let scaled = trace_norm(&a.scale_real(s)).unwrap();
        prop_assert!((scaled - s.abs() * na).abs() < 1e-9);
    }

    #[test]
    fn trace_norm_vanishes_only_at_zero(dim in 1usize..6, tiny in 1e-6f64..1.0) {
        prop_assert_eq!(trace_norm(&ComplexMatrix::zeros(dim)).unwrap(), 0.0);
        let mut m = ComplexMatrix::zeros(dim);
        m[(0, dim - 1)] = Complex64::new(tiny, 0.0);
        prop_assert!((trace_norm(&m).unwrap() - tiny).abs() < 1e-12);
    }

    #[test]
    fn hermitian_spectrum_matches_reference(m in (1usize..=8).prop_flat_map(hermitian)) {
        let mut ours = hermitian_eigenvalues(&m).unwrap();
        ours.sort_by(f64::total_cmp);
        let reference = hermitian_spectrum(&dense(&m));
        for (x, y) in ours.iter().zip(&reference) {
            prop_assert!((x - y).abs() < 1e-9, "{:?} vs {:?}", ours, reference);
        }
    }

    #[test]
    fn density_differences(seed in any::<u64>(), dim in 2usize..=8) {
        let mut rng = sweep_rng(seed);
        let r1 = random_density(&mut rng, dim);
        let r2 = random_density(&mut rng, dim);
        prop_assert!(is_density(&r1, 1e-9).unwrap());
        let delta = r1.try_sub(&r2).unwrap();
        let ours = trace_norm(&delta).unwrap();
        prop_assert!((ours - trace_norm_hermitian(&dense(&delta))).abs() < 1e-9);
        prop_assert!(ours <= 2.0 + 1e-9);
    }

    #[test]
    fn generated_projectors_are_projectors(seed in any::<u64>(), dim in 2usize..=8, r in 0usize..8) {
        let mut rng = sweep_rng(seed);
        let rank = 1 + r % (dim - 1);
        let p = random_projector(&mut rng, dim, rank);
        prop_assert!(is_projector(&p, 1e-9));
        prop_assert!((trace(&p).re - rank as f64).abs() < 1e-9);
        let d = dense(&p);
        prop_assert!(max_entry_diff(&(&d * &d), &d) < 1e-9);
    }

    #[test]
    fn local_embeddings_commute(seed in any::<u64>(), da in 2usize..=3, db in 2usize..=3, dc in 2usize..=3) {
        let mut rng = sweep_rng(seed);
        let f = HilbertFactorization::tripartite(da, db, dc).unwrap();
        let dims = [da, db, dc];
        let ops: Vec<ComplexMatrix> = (0..3)
            .map(|k| embed_local(&random_projector(&mut rng, dims[k], 1), k, &f).unwrap())
            .collect();
        for (k, p) in ops.iter().enumerate() {
            prop_assert!(is_projector(p, 1e-9));
            for q in &ops[k + 1..] {
                let pq = p.matmul(q).unwrap();
                let qp = q.matmul(p).unwrap();
                prop_assert!(pq.max_abs_diff(&qp).unwrap() <= 1e-12);
            }
        }
    }

    #[test]
    fn measurement_weights_sum_to_one(seed in any::<u64>(), d in 2usize..=6, cut in 1usize..6) {
        let mut rng = sweep_rng(seed);
        let f = HilbertFactorization::two_lab(d, 2).unwrap();
        let cut = cut.min(d - 1);
        let m = Measurement::from_subspaces(
            Agent::Alice,
            &[(0..cut).collect(), (cut..d).collect()],
            0,
            &f,
        )
        .unwrap();
        let rho = random_density(&mut rng, 2 * d);
        let total: f64 = m.projectors().iter().map(|p| qagree::epistemics::weight(p, &rho).unwrap()).sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
    }
}

#[test]
fn overlapping_outcomes_are_rejected() {
    let p = basis_projector(3, &[0, 1]).unwrap();
    let q = basis_projector(3, &[1, 2]).unwrap();
    assert!(Measurement::new(Agent::Bob, vec![p, q]).is_err());
    let r = basis_projector(3, &[2]).unwrap();
    let p = basis_projector(3, &[0, 1]).unwrap();
    assert!(Measurement::new(Agent::Bob, vec![p, r]).is_ok());
}

#[test]
fn embedding_on_the_last_qubit_by_enumeration() {
    let f = HilbertFactorization::new(vec![2, 2, 2], vec![qagree::Role::Alice, qagree::Role::Bob, qagree::Role::Inaccessible]).unwrap();
    let e = embed_local(&basis_projector(2, &[0]).unwrap(), 2, &f).unwrap();
    let want = DMatrix::from_fn(8, 8, |i, j| {
        Complex64::new(if i == j && i % 2 == 0 { 1.0 } else { 0.0 }, 0.0)
    });
    assert_eq!(max_entry_diff(&dense(&e), &want), 0.0);
}
