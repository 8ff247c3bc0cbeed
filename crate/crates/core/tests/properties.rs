use proptest::prelude::*;

use qjl::circuits::{apply_circuit, circuit_to_unitary, generate_local_random_circuit};
use qjl::jl::{block_probability_vector, collapse, polarization_inner_product};
use qjl::linalg::{block_norms_sqr, inner_product, BlockStructure, StateVector};
use qjl::pir::{membership_state, swap_success_probability};
use qjl::sampling::{sample_haar_unit_vector, HaarOnSpan, RngStream};

fn state(d: usize, seed: u64) -> StateVector {
    sample_haar_unit_vector(d, &mut RngStream::new(seed, 0)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn inner_product_is_conjugate_symmetric(d in 1usize..40, s1 in any::<u64>(), s2 in any::<u64>()) {
        let (a, b) = (state(d, s1), state(d, s2));
        let ab = inner_product(&a, &b).unwrap();
        let ba = inner_product(&b, &a).unwrap();
        prop_assert!((ab - ba.conj()).norm() < 1e-12);
        prop_assert!(ab.norm() <= 1.0 + 1e-12);
    }

    #[test]
    fn polarization_agrees_with_inner_product(d in 1usize..40, s1 in any::<u64>(), s2 in any::<u64>()) {
        let (a, b) = (state(d, s1), state(d, s2));
        let p = polarization_inner_product(&a, &b).unwrap();
        prop_assert!((p - inner_product(&a, &b).unwrap()).norm() < 1e-9);
    }

    #[test]
    fn circuits_preserve_norm(q in 2usize..7, s in 0usize..40, seed in any::<u64>()) {
        let c = generate_local_random_circuit(q, s, &mut RngStream::new(seed, 1)).unwrap();
        let v = state(1 << q, seed);
        prop_assert!((apply_circuit(&c, &v).unwrap().norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn dense_and_streaming_circuits_agree(q in 2usize..5, s in 0usize..20, seed in any::<u64>()) {
        let c = generate_local_random_circuit(q, s, &mut RngStream::new(seed, 1)).unwrap();
        let v = state(1 << q, seed);
        let dense = circuit_to_unitary(&c).unwrap().apply(&v).unwrap();
        prop_assert!(dense.sub(&apply_circuit(&c, &v).unwrap()).unwrap().norm() < 1e-10);
    }

    #[test]
    fn block_probabilities_form_a_distribution(log_d2 in 0u32..4, extra in 1u32..4, seed in any::<u64>()) {
        let d2 = 1usize << log_d2;
        let d1 = d2 << extra;
        let bs = BlockStructure::new(d1, d2).unwrap();
        let v = state(d1, seed);
        let u = HaarOnSpan::sample(std::slice::from_ref(&v), &mut RngStream::new(seed, 2)).unwrap();
        let p = block_probability_vector(&v, &u, &bs).unwrap();
        prop_assert_eq!(p.len(), d1 / d2);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        prop_assert!(p.iter().all(|x| *x >= 0.0));
    }

    #[test]
    fn collapsed_blocks_are_unit_vectors(seed in any::<u64>(), j in 1usize..5) {
        let bs = BlockStructure::new(16, 4).unwrap();
        let v = state(16, seed);
        let norms = block_norms_sqr(&v, &bs).unwrap();
        match collapse(&v, j, &bs).unwrap() {
            Some(c) => {
                prop_assert!(c.is_normalized());
                prop_assert_eq!(c.dim(), 4);
            }
            None => prop_assert_eq!(norms[j - 1], 0.0),
        }
    }

    #[test]
    fn swap_probability_in_range(d in 1usize..30, s1 in any::<u64>(), s2 in any::<u64>()) {
        let p = swap_success_probability(&state(d, s1), &state(d, s2)).unwrap();
        prop_assert!((0.5..=1.0 + 1e-12).contains(&p));
    }

    #[test]
    fn membership_overlap(set in proptest::collection::btree_set(1usize..65, 1..8), x in 1usize..65) {
        let set: Vec<usize> = set.into_iter().collect();
        let s = membership_state(&set, 64).unwrap();
        prop_assert!(s.is_normalized());
        let ov = inner_product(&StateVector::basis(64, x).unwrap(), &s).unwrap().norm();
        let expected = if set.contains(&x) { 1.0 / (set.len() as f64).sqrt() } else { 0.0 };
        prop_assert!((ov - expected).abs() < 1e-12);
    }
}
