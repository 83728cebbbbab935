use eapm::lp::SimplexOptions;
use eapm::polytope::{best_deterministic_response, enumerate_vertices, membership_generated, membership_with};
use eapm::random::{random_density, random_povm};
use eapm::scenario::{behavior_of_quantum, QuantumStrategy};
use eapm::{Behavior, Scenario};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn scenario() -> impl Strategy<Value = Scenario> {
    (2usize..=3, 2usize..=4, 1usize..=2, 2usize..=3)
        .prop_map(|(d, nx, ny, nb)| Scenario::new(d, nx, ny, nb).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn oracle_matches_brute_force(s in scenario(), seed in any::<u64>()) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let h: Vec<f64> = (0..s.len()).map(|_| r.random_range(-1.0..1.0)).collect();
        let vs = enumerate_vertices(&s).unwrap();
        let brute = vs.vertices.iter().map(|v| v.probs().iter().zip(&h).map(|(a, b)| a * b).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max);
        let (best, _) = best_deterministic_response(&s, &h);
        prop_assert!((best - brute).abs() < 1e-12);
    }

    #[test]
    fn generated_and_enumerated_membership_agree(s in scenario(), seed in any::<u64>(), pull in 0.0f64..0.6) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let states = (0..s.n_x).map(|_| random_density(s.d + 1, 1, &mut r)).collect();
        let measurements = (0..s.n_y).map(|_| random_povm(s.d + 1, s.n_b, &mut r)).collect();
        let q = behavior_of_quantum(&s.with_message_dim(s.d + 1), &QuantumStrategy { states, measurements }).unwrap();
        // move toward the uniform point so both outcomes occur
        let q = Behavior::new(s, q.probs().to_vec()).unwrap();
        let u = Behavior::uniform(s);
        let q = Behavior::mixture(&[(1.0 - pull, &q), (pull, &u)]).unwrap();
        let opts = SimplexOptions::default();
        let full = membership_with(&enumerate_vertices(&s).unwrap(), &q, &opts).unwrap();
        let gen = membership_generated(&q, &opts, 100_000).unwrap();
        prop_assert_eq!(full.feasible, gen.feasible);
        if gen.feasible {
            prop_assert!(gen.residual < 1e-8);
        } else {
            prop_assert!(gen.separation_gap() > 0.0);
            prop_assert!(full.separation_gap() > 0.0);
        }
    }

    #[test]
    fn random_povms_are_complete(dim in 1usize..=4, outcomes in 1usize..=5, seed in any::<u64>()) {
        let p = random_povm(dim, outcomes, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert!(p.completeness_error() < 1e-12);
    }
}
