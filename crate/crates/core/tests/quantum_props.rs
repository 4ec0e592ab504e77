mod common;

use proptest::prelude::*;
use qagree::epistemics::{classify_trace, realized_pairs};
use qagree::limits::{perturbation_check, run_epsilon_recursion, zero_one_check, EpsilonConfig};
use qagree::linalg::{is_projector, trace_norm};
use qagree::quantum_model::check_commutation;
use qagree::register::{
    build_recorded, classify_recorded, recorded_trace, register_commutation_violation,
};
use qagree::scenarios::{
    random_dims, random_noncommuting_scenario, random_projector, random_density,
    random_sector_scenario, sweep_rng, sweep_scenario, SweepMix,
};
use qagree::{run_recursion, ClassificationKind, ComplexMatrix, Error, TOL};
use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn commuting_scenarios_never_disagree(seed in any::<u64>()) {
        let s = sweep_scenario(SweepMix::Commuting, seed).unwrap();
        prop_assert!(check_commutation(&s).all_ok());
        for (qa, qb) in realized_pairs(&s).unwrap() {
            let t = run_recursion(&s, qa, qb).unwrap();
            let bound = s.alice().len() + s.bob().len() + 1;
            prop_assert!(t.levels.len() <= bound);
            let lemmas = common::lemma_report(&s, &t);
            prop_assert!(lemmas.projector <= TOL);
            prop_assert!(lemmas.nesting <= TOL);
            let c = classify_trace(t, qa, qb);
            prop_assert!(c.kind != ClassificationKind::Ccd, "seed {} pair ({}, {})", seed, qa, qb);
            match c.kind {
                ClassificationKind::NoCommonCertainty => prop_assert!(c.trace.cc_weight <= TOL),
                _ => {
                    prop_assert!((qa - qb).abs() <= TOL);
                    prop_assert!(lemmas.chain_ok);
                    prop_assert!(lemmas.commutator <= TOL);
                    prop_assert!(lemmas.nondisturbance <= TOL);
                    prop_assert!(lemmas.coarse <= TOL);
                }
            }
        }
    }

    #[test]
    fn full_support_stays_put(seed in any::<u64>(), d in 2usize..7, r in 1usize..6) {
        // Tr(Qσ) ≥ 1 − 1e-12 leaves σ unchanged by QσQ.
        let mut rng = sweep_rng(seed);
        let rank = r.min(d - 1);
        let q = random_projector(&mut rng, d, rank);
        let tau = random_density(&mut rng, d);
        let inside = q.matmul(&tau).unwrap().matmul(&q).unwrap();
        let w = inside.trace().re;
        let sigma = inside.scale_real((1.0 - 1e-13) / w).try_add(&tau.scale_real(1e-13)).unwrap();
        prop_assert!(q.matmul(&sigma).unwrap().trace().re >= 1.0 - 1e-12);
        let squeezed = q.matmul(&sigma).unwrap().matmul(&q).unwrap();
        prop_assert!(squeezed.max_abs_diff(&sigma).unwrap() <= 1e-9);
    }

    #[test]
    fn recording_invariants(seed in any::<u64>()) {
        let s = sweep_scenario(SweepMix::Register, seed).unwrap();
        let rs = build_recorded(&s).unwrap();
        let id = ComplexMatrix::identity(s.dim());
        prop_assert!(rs.kraus_completeness().max_abs_diff(&id).unwrap() <= TOL);
        prop_assert!((recorded_trace(&rs) - 1.0).abs() <= TOL);
        prop_assert!(rs.off_block_magnitude() <= TOL);
        prop_assert!(register_commutation_violation(&rs) <= TOL);
        let alice = rs.recorded_branch_probabilities(qagree::Agent::Alice).unwrap();
        let bob = rs.recorded_branch_probabilities(qagree::Agent::Bob).unwrap();
        for cp_a in alice.iter().flatten() {
            for cp_b in bob.iter().flatten() {
                let c = classify_recorded(&rs, cp_a.value, cp_b.value).unwrap();
                prop_assert!(c.kind != ClassificationKind::Ccd);
            }
        }
    }

    #[test]
    fn recording_refuses_incompatible_agents(seed in any::<u64>()) {
        // Alice and Bob measure the same factor in unrelated bases.
        let mut rng = sweep_rng(seed);
        let f = qagree::HilbertFactorization::single_lab(3).unwrap();
        let p = random_projector(&mut rng, 3, 1);
        let q = random_projector(&mut rng, 3, 1);
        let comp = |x: &ComplexMatrix| ComplexMatrix::identity(3).try_sub(x).unwrap();
        let alice = qagree::Measurement::new(qagree::Agent::Alice, vec![p.clone(), comp(&p)]).unwrap();
        let bob = qagree::Measurement::new(qagree::Agent::Bob, vec![q.clone(), comp(&q)]).unwrap();
        let rho = random_density(&mut rng, 3);
        let s = qagree::Scenario::new(f, rho, alice, bob, p).unwrap();
        prop_assume!(!check_commutation(&s).ab_ok);
        let refused = matches!(build_recorded(&s), Err(Error::NonCommutingMeasurements { .. }));
        prop_assert!(refused);
    }

    #[test]
    fn epsilon_relaxation_only_grows_and_bounds_disagreement(
        seed in any::<u64>(),
        pick in 0usize..3,
    ) {
        let eps = [0.001, 0.01, 0.05][pick];
        let mut rng = sweep_rng(seed);
        let dims = random_dims(&mut rng, 36);
        let counts = (rng.random_range(1..=dims.alice), rng.random_range(1..=dims.bob));
        let s = random_sector_scenario(rng.random(), dims, counts, eps).unwrap();
        let cfg = EpsilonConfig::new(eps).unwrap();
        for (qa, qb) in realized_pairs(&s).unwrap() {
            let exact = run_recursion(&s, qa, qb).unwrap();
            let relaxed = run_epsilon_recursion(&s, qa, qb, &cfg).unwrap();
            let kept = exact.a_star.matmul(&relaxed.a_star).unwrap();
            prop_assert!(kept.max_abs_diff(&exact.a_star).unwrap() <= TOL);
            let kept = exact.b_star.matmul(&relaxed.b_star).unwrap();
            prop_assert!(kept.max_abs_diff(&exact.b_star).unwrap() <= TOL);
            prop_assert!(relaxed.cc_weight + TOL >= exact.cc_weight);
            if relaxed.cc_weight > TOL {
                prop_assert!((qa - qb).abs() <= 2.0 * eps + 1e-9);
            }
        }
    }

    #[test]
    fn perturbation_bound_holds(seed in any::<u64>(), depolarize in any::<bool>(), size in 1e-4f64..0.05) {
        let s = sweep_scenario(SweepMix::Commuting, seed).unwrap();
        let mut rng = sweep_rng(seed ^ 0x5eed);
        let rho_b = common::perturb(&mut rng, s.rho(), depolarize, size);
        prop_assert!(trace_norm(&s.rho().try_sub(&rho_b).unwrap()).unwrap() <= 0.05 + 1e-9);
        for (qa, qb) in realized_pairs(&s).unwrap() {
            if let Some(r) = perturbation_check(&s, &rho_b, qa, qb).unwrap() {
                prop_assert!(r.holds(1e-12), "{:?}", r);
            }
        }
    }

    #[test]
    fn zero_one_never_happens(seed in any::<u64>()) {
        let s = sweep_scenario(SweepMix::ZeroOne, seed).unwrap();
        let r = zero_one_check(&s).unwrap();
        prop_assert!(r.value <= 1e-8 && r.value >= -TOL);
    }

    #[test]
    fn generators_are_reproducible(seed in any::<u64>()) {
        for mix in [SweepMix::Commuting, SweepMix::ZeroOne, SweepMix::Register] {
            let s = sweep_scenario(mix, seed).unwrap();
            prop_assert!(is_projector(s.property(), TOL));
            prop_assert_eq!(s, sweep_scenario(mix, seed).unwrap());
        }
        let mut rng = sweep_rng(seed);
        let dims = random_dims(&mut rng, 24);
        prop_assert_eq!(
            random_noncommuting_scenario(seed, dims).unwrap(),
            random_noncommuting_scenario(seed, dims).unwrap()
        );
    }
}
