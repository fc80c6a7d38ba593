use proptest::prelude::*;

use mailab::eval::{
    occupancy_bundle, occupancy_is_normalized, regret, regret_gap, value, weighted_tv_loss,
};
use mailab::fixtures::{random_deviations, random_mg, random_policy, RandomGameSpec};
use mailab::game::{DeviationClass, MediatorPolicy};
use mailab::losses::{CompositeMaxLoss, WeightedTvLoss};
use mailab::oco::{oco_run, project_simplex, OcoConfig, OcoRule};
use mailab::sampling::rng_from_seed;

fn spec() -> impl Strategy<Value = (RandomGameSpec, u64)> {
    (1usize..=4, 2usize..=3, 2usize..=3, 1usize..=4, any::<u64>())
        .prop_map(|(s, a, b, h, seed)| (RandomGameSpec::new(s, vec![a, b], h), seed))
}

fn mix(a: &MediatorPolicy, b: &MediatorPolicy, t: f64) -> MediatorPolicy {
    MediatorPolicy::new(
        a.table
            .iter()
            .zip(&b.table)
            .map(|(x, y)| {
                x.iter()
                    .zip(y)
                    .map(|(p, q)| t * p + (1.0 - t) * q)
                    .collect()
            })
            .collect(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn occupancies_are_distributions((spec, seed) in spec()) {
        let fx = random_mg(&spec, seed).unwrap();
        let bundle = occupancy_bundle(&fx.game, &fx.learner);
        prop_assert!(occupancy_is_normalized(&bundle));
        for agent in 0..2 {
            prop_assert!(value(&fx.game, &fx.learner, agent).abs() <= fx.game.horizon as f64 + 1e-9);
        }
    }

    #[test]
    fn regret_is_nonnegative_and_self_gap_vanishes((spec, seed) in spec()) {
        let fx = random_mg(&spec, seed).unwrap();
        let devs = random_deviations(&fx.game, 4, seed ^ 1);
        for class in [DeviationClass::complete(2), DeviationClass::explicit_with_identities(&fx.game, devs)] {
            prop_assert!(regret(&fx.game, &fx.learner, &class).unwrap() >= -1e-12);
            prop_assert!(regret_gap(&fx.game, &fx.expert, &fx.expert, &class).unwrap().abs() <= 1e-12);
        }
    }

    #[test]
    fn tv_losses_are_bounded_and_convex((spec, seed) in spec(), t in 0.0f64..=1.0) {
        let fx = random_mg(&spec, seed).unwrap();
        let (n, m) = (fx.game.num_states(), fx.game.num_joint_actions());
        let mut rng = rng_from_seed(seed);
        let w = mailab::fixtures::random_distribution(&mut rng, n);
        let a = random_policy(&mut rng, n, m);
        let b = random_policy(&mut rng, n, m);
        let la = weighted_tv_loss(&fx.expert, &a, &w).unwrap();
        let lb = weighted_tv_loss(&fx.expert, &b, &w).unwrap();
        let lmix = weighted_tv_loss(&fx.expert, &mix(&a, &b, t), &w).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&la));
        prop_assert!(lmix <= t * la + (1.0 - t) * lb + 1e-12);
    }

    #[test]
    fn projection_is_on_simplex(v in prop::collection::vec(-3.0f64..3.0, 1..8)) {
        let p = project_simplex(&v);
        prop_assert!(p.iter().all(|x| *x >= 0.0));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn oco_iterates_stay_on_simplex(targets in prop::collection::vec(0usize..4, 1..40), rule in 0usize..3) {
        let rule = [OcoRule::ExponentiatedGradient, OcoRule::ProjectedSubgradient, OcoRule::FollowTheLeader][rule];
        let cfg = OcoConfig { rule, ..OcoConfig::exponentiated(targets.len()) };
        let run = oco_run(MediatorPolicy::uniform(2, 4), &cfg, |n, _| {
            let mut row = vec![0.0; 4];
            row[targets[n - 1]] = 1.0;
            Ok(CompositeMaxLoss::single(WeightedTvLoss::new(vec![0.5, 0.5], vec![row.clone(), row])?))
        }).unwrap();
        for it in &run.iterates {
            for row in &it.table {
                prop_assert!(row.iter().all(|x| *x >= 0.0));
                prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
        }
        prop_assert!(run.rounds.iter().all(|r| (0.0..=1.0 + 1e-12).contains(&r.loss)));
    }
}
