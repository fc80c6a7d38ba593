use mailab::algorithms::{
    blades_train, j_bc, train, Algorithm, DemoSource, DensityMode, ExpertData, FillRule,
    TrainConfig,
};
use mailab::error::Error;
use mailab::eval::{regret_gap, state_distribution};
use mailab::fixtures::{fig1_game, random_mg, RandomGameSpec};
use mailab::game::DeviationClass;
use mailab::losses::bc_loss;
use mailab::oco::OcoRule;
use mailab::oracle::ExpertOracle;
use mailab::sampling::sample_demonstrations;

#[test]
fn blades_repairs_fig1_where_cloning_cannot() {
    for h in [4, 8, 16] {
        let fx = fig1_game(h).unwrap();
        let complete = DeviationClass::complete(2);

        let cloned = j_bc(
            &fx.game,
            ExpertData::Exact(&fx.expert),
            &FillRule::Adversarial(complete.clone()),
        )
        .unwrap();
        let cloned_gap = regret_gap(&fx.game, &fx.expert, &cloned, &complete).unwrap();
        assert!((cloned_gap - (h - 2) as f64).abs() < 1e-9);

        let mut cfg = TrainConfig::new(Algorithm::Blades, 20, fx.explicit_class());
        cfg.oco.rule = OcoRule::FollowTheLeader;
        let demos = sample_demonstrations(&fx.game, &fx.expert, 10, 5).unwrap();
        let oracle = ExpertOracle::full_row(fx.expert.clone());
        let out = blades_train(&fx.game, &oracle, &demos, &cfg).unwrap();
        let gap = regret_gap(&fx.game, &fx.expert, &out.policy, &complete).unwrap();
        assert!(gap <= 1e-6, "H={h}: gap {gap}");
        assert!(out.query_count.unwrap() > 0);
        assert_eq!(out.query_log.len() as u64, out.query_count.unwrap());
    }
}

#[test]
fn cloning_from_many_demos_is_close_on_visited_states() {
    let mut spec = RandomGameSpec::new(4, vec![2, 2], 4);
    spec.full_coverage_expert = true;
    let fx = random_mg(&spec, 17).unwrap();
    let demos = sample_demonstrations(&fx.game, &fx.expert, 10_000, 1).unwrap();
    let sigma = j_bc(&fx.game, ExpertData::Sampled(&demos), &FillRule::Uniform).unwrap();
    let d_e = state_distribution(&fx.game, &fx.expert);
    let loss = bc_loss(&fx.expert, &sigma, &d_e).unwrap();
    assert!(loss <= 0.05, "bc loss {loss}");
}

#[test]
fn exact_cloning_on_full_coverage_has_zero_loss() {
    let mut spec = RandomGameSpec::new(5, vec![3, 2], 3);
    spec.full_coverage_expert = true;
    let fx = random_mg(&spec, 4).unwrap();
    let cfg = TrainConfig::new(Algorithm::Jbc, 1, DeviationClass::complete(2));
    let out = train(&fx.game, &fx.expert, &cfg).unwrap();
    assert_eq!(out.final_loss, 0.0);
    assert_eq!(out.policy, fx.expert);
}

#[test]
fn malice_refuses_uncovered_expert() {
    let fx = fig1_game(6).unwrap();
    let cfg = TrainConfig::new(Algorithm::Malice, 10, fx.explicit_class());
    let err = train(&fx.game, &fx.expert, &cfg).unwrap_err();
    assert!(matches!(err, Error::ZeroCoverage { .. }), "{err}");
}

#[test]
fn malice_and_blades_need_explicit_classes() {
    let fx = fig1_game(4).unwrap();
    for algo in [Algorithm::Malice, Algorithm::Blades] {
        let cfg = TrainConfig::new(algo, 10, DeviationClass::complete(2));
        assert!(matches!(
            train(&fx.game, &fx.expert, &cfg),
            Err(Error::InvalidArgument(_))
        ));
    }
}

#[test]
fn sampled_training_is_reproducible() {
    let mut spec = RandomGameSpec::new(3, vec![2, 2], 3);
    spec.full_coverage_expert = true;
    let fx = random_mg(&spec, 9).unwrap();
    let class = DeviationClass::explicit_with_identities(
        &fx.game,
        mailab::fixtures::random_deviations(&fx.game, 3, 2),
    );
    for algo in [Algorithm::Malice, Algorithm::Blades] {
        let mut cfg = TrainConfig::new(algo, 30, class.clone());
        cfg.oco.seed = 77;
        cfg.demos = DemoSource::Sampled { count: 20 };
        cfg.density = DensityMode::MonteCarlo { rollouts: 200 };
        let a = train(&fx.game, &fx.expert, &cfg).unwrap();
        let b = train(&fx.game, &fx.expert, &cfg).unwrap();
        assert_eq!(a, b);
        assert!((0.0..=1.0).contains(&a.final_loss));
        assert_eq!(a.trace.len(), 30);
    }
}

#[test]
fn jirl_matches_expert_moments() {
    let mut spec = RandomGameSpec::new(3, vec![2], 3);
    spec.single_agent = true;
    let fx = random_mg(&spec, 21).unwrap();
    let mut cfg = TrainConfig::new(Algorithm::Jirl, 300, DeviationClass::complete(1));
    cfg.jirl.regularizer = 0.05;
    let out = train(&fx.game, &fx.expert, &cfg).unwrap();
    assert!(out.final_loss <= 0.05, "moment error {}", out.final_loss);
}
