//! Property tests for the subspace machinery on randomized models.

mod common;

use common::{controllable_dim_oracle, random_model};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use wonham::analysis::{controllable_subspace, null_space, stabilizability, BlockDecomposition};
use wonham::linalg::inf_norm;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// The computed subspace is closed under both generators.
    #[test]
    fn closure_under_generators(seed in any::<u64>()) {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let model = random_model(&mut rng, 8);
        let c = controllable_subspace(&model, 1e-8);
        for b in c.basis() {
            let (in_a, ra) = c.membership(&(model.rate() * b)).unwrap();
            prop_assert!(in_a, "A·b escapes the subspace (residual {ra})");
            let (in_h, rh) = c.membership(&b.component_mul(model.h())).unwrap();
            prop_assert!(in_h, "h∘b escapes the subspace (residual {rh})");
        }
    }

    /// Minimality: the closure dimension equals the word-enumeration rank.
    #[test]
    fn dimension_matches_word_oracle(seed in any::<u64>()) {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let model = random_model(&mut rng, 5);
        prop_assert_eq!(
            controllable_subspace(&model, 1e-8).dim(),
            controllable_dim_oracle(&model, 1e-8)
        );
    }

    /// The block decomposition is orthogonal with a vanishing lower-left block.
    #[test]
    fn block_decomposition_invariance(seed in any::<u64>()) {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let model = random_model(&mut rng, 6);
        let c = controllable_subspace(&model, 1e-8);
        let b = BlockDecomposition::new(&model, &c);
        let d = model.dim();
        let t = b.transform();
        let gram = t.transpose() * t;
        prop_assert!((gram - nalgebra::DMatrix::identity(d, d)).amax() <= 1e-10);
        prop_assert!(b.residual_lower_left() <= 1e-8 * inf_norm(model.rate()).max(1.0));
    }

    /// The kernel of A has the class count as its dimension, and the three
    /// stabilizability tests agree.
    #[test]
    fn nullspace_dimension_and_equivalence(seed in any::<u64>()) {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let model = random_model(&mut rng, 6);
        let decomp = model.ergodic_decomposition().unwrap();
        prop_assert_eq!(null_space(&model, 1e-10).dim(), decomp.m());
        let rep = stabilizability(&model).unwrap();
        prop_assert_eq!(rep.nullspace_test, rep.indicator_test);
        prop_assert_eq!(rep.indicator_test, rep.hurwitz_test);
        if let Some(w) = &rep.witness {
            prop_assert!((w.norm() - 1.0).abs() <= 1e-9);
            let (inside, residual) = controllable_subspace(&model, 1e-8).membership(w).unwrap();
            prop_assert!(!inside);
            prop_assert!(residual > 1.0 - 1e-6, "witness residual {residual}");
        }
    }
}
