//! The four learners: joint behavioral cloning, joint inverse RL by moment
//! matching, MALICE and BLADES.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{occupancy_bundle, occupancy_l1, regret, state_distribution, TIE_TOL};
use crate::game::{
    induced_time_indexed, DeviationClass, MarkovGame, MediatorPolicy, TimeIndexedPolicy,
};
use crate::losses::{
    blades_composite, malice_composite, malice_loss, ComponentLabel, DeviatedDistribution,
};
use crate::oco::{oco_run, OcoConfig, OcoRun};
use crate::oracle::{ExpertOracle, QueryRecord};
use crate::sampling::{
    derive_seed, empirical_step_distributions, sample_demonstrations, DemonstrationSet,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Jbc,
    Jirl,
    Malice,
    Blades,
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jbc" => Ok(Self::Jbc),
            "jirl" => Ok(Self::Jirl),
            "malice" => Ok(Self::Malice),
            "blades" => Ok(Self::Blades),
            other => Err(Error::InvalidArgument(format!(
                "unknown algorithm {other:?}"
            ))),
        }
    }
}

/// How rows without expert data are filled by joint behavioral cloning.
#[derive(Debug, Clone, PartialEq)]
pub enum FillRule {
    Uniform,
    /// Greedy per-state search for the one-hot rows that maximize the
    /// learner's regret under the given class.
    Adversarial(DeviationClass),
    /// Diagnostic: copy a reference policy on unsupported states.
    CopyExpert(MediatorPolicy),
}

/// Where the expert's state-action data comes from.
#[derive(Debug, Clone, Copy)]
pub enum ExpertData<'a> {
    /// Exact conditional rows on the expert's support.
    Exact(&'a MediatorPolicy),
    Sampled(&'a DemonstrationSet),
}

/// Source of the state distributions of deviated policies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DensityMode {
    Exact,
    /// Empirical averaged frequencies from this many rollouts.
    MonteCarlo {
        rollouts: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyPlayer {
    /// Hard value iteration on the joint-action MDP.
    ExactBestResponse,
    /// Soft value iteration at the given temperature.
    SoftValueIteration { temperature: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JirlOptions {
    pub player: PolicyPlayer,
    /// Weight of the L2 shrinkage on the reward player; zero gives the
    /// sign reward.
    pub regularizer: f64,
}

impl Default for JirlOptions {
    fn default() -> Self {
        Self {
            player: PolicyPlayer::ExactBestResponse,
            regularizer: 0.0,
        }
    }
}

/// Demonstration source for learners that consume expert data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DemoSource {
    Exact,
    Sampled { count: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub algorithm: Algorithm,
    /// Rounds, update rule, step sizes and seed.
    pub oco: OcoConfig,
    pub class: DeviationClass,
    pub demos: DemoSource,
    pub density: DensityMode,
    pub jirl: JirlOptions,
    /// Optional first iterate; defaults per algorithm.
    pub init: Option<MediatorPolicy>,
}

impl TrainConfig {
    pub fn new(algorithm: Algorithm, rounds: usize, class: DeviationClass) -> Self {
        Self {
            algorithm,
            oco: OcoConfig::exponentiated(rounds),
            class,
            demos: DemoSource::Exact,
            density: DensityMode::Exact,
            jirl: JirlOptions::default(),
            init: None,
        }
    }

    fn check(&self, game: &MarkovGame) -> Result<()> {
        if self.oco.rounds == 0 {
            return Err(Error::InvalidArgument(
                "training needs at least one round".into(),
            ));
        }
        if let DemoSource::Sampled { count: 0 } = self.demos {
            return Err(Error::EmptyDemonstrations);
        }
        if let DensityMode::MonteCarlo { rollouts: 0 } = self.density {
            return Err(Error::InvalidArgument(
                "Monte-Carlo density needs rollouts".into(),
            ));
        }
        if matches!(self.algorithm, Algorithm::Malice | Algorithm::Blades) {
            if !self.class.is_explicit() {
                return Err(Error::InvalidArgument(
                    "MALICE and BLADES need an explicit deviation class".into(),
                ));
            }
            self.class.check(game)?;
            let has_identity = self
                .class
                .explicit_deviations()
                .iter()
                .any(|(_, _, d)| d.is_identity());
            if !has_identity {
                return Err(Error::InvalidArgument(
                    "deviation class must contain an identity".into(),
                ));
            }
        }
        Ok(())
    }
}

/// One row of a training trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub round: usize,
    pub loss: f64,
    pub achieving_agent: Option<usize>,
    pub achieving_deviation: Option<usize>,
    pub step_size: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub policy: MediatorPolicy,
    pub trace: Vec<TraceRow>,
    /// 1-based round of the returned iterate.
    pub best_round: usize,
    /// Self-consistent loss of the returned policy: the training loss with
    /// its deviated densities rebuilt at the policy itself. Normalized moment
    /// error for J-IRL, BC loss for J-BC.
    pub final_loss: f64,
    pub query_count: Option<u64>,
    pub query_log: Vec<QueryRecord>,
}

/// Dispatches on `config.algorithm`. The expert is handed to BLADES only
/// inside an oracle.
pub fn train(
    game: &MarkovGame,
    expert: &MediatorPolicy,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.check(game)?;
    expert.check(game)?;
    match config.algorithm {
        Algorithm::Jbc => {
            let demos = demonstrations(game, expert, config)?;
            let data = demos
                .as_ref()
                .map_or(ExpertData::Exact(expert), ExpertData::Sampled);
            let policy = j_bc(game, data, &FillRule::Uniform)?;
            let d_e = state_distribution(game, expert);
            let loss = crate::losses::bc_loss(expert, &policy, &d_e)?;
            Ok(single_round(policy, loss))
        }
        Algorithm::Jirl => {
            let target = occupancy_bundle(game, expert).occupancy;
            j_irl(
                game,
                &target,
                config.oco.rounds,
                &config.jirl,
                config.init.clone(),
            )
        }
        Algorithm::Malice => malice_train(game, expert, config),
        Algorithm::Blades => {
            let oracle = ExpertOracle::full_row(expert.clone());
            let demos = match demonstrations(game, expert, config)? {
                Some(d) => d,
                None => sample_demonstrations(game, expert, 1, derive_seed(config.oco.seed, 1))?,
            };
            blades_train(game, &oracle, &demos, config)
        }
    }
}

fn demonstrations(
    game: &MarkovGame,
    expert: &MediatorPolicy,
    config: &TrainConfig,
) -> Result<Option<DemonstrationSet>> {
    match config.demos {
        DemoSource::Exact => Ok(None),
        DemoSource::Sampled { count } => Ok(Some(sample_demonstrations(
            game,
            expert,
            count,
            derive_seed(config.oco.seed, 1),
        )?)),
    }
}

fn single_round(policy: MediatorPolicy, loss: f64) -> TrainOutcome {
    TrainOutcome {
        policy,
        trace: vec![TraceRow {
            round: 1,
            loss,
            achieving_agent: None,
            achieving_deviation: None,
            step_size: 0.0,
        }],
        best_round: 1,
        final_loss: loss,
        query_count: None,
        query_log: Vec::new(),
    }
}

/// Joint behavioral cloning: the expert's conditional joint-action rows on
/// its support, `fill` elsewhere.
pub fn j_bc(game: &MarkovGame, data: ExpertData<'_>, fill: &FillRule) -> Result<MediatorPolicy> {
    let n = game.num_states();
    let m = game.num_joint_actions();
    let mut table = vec![vec![1.0 / m as f64; m]; n];
    let mut supported = vec![false; n];
    match data {
        ExpertData::Exact(expert) => {
            expert.check(game)?;
            let d = state_distribution(game, expert);
            for s in 0..n {
                if d[s] > 0.0 {
                    table[s] = expert.table[s].clone();
                    supported[s] = true;
                }
            }
        }
        ExpertData::Sampled(demos) => {
            if demos.is_empty() {
                return Err(Error::EmptyDemonstrations);
            }
            for (s, counts) in demos.counts(n, m).into_iter().enumerate() {
                let total: u64 = counts.iter().sum();
                if total > 0 {
                    table[s] = counts.iter().map(|&c| c as f64 / total as f64).collect();
                    supported[s] = true;
                }
            }
        }
    }
    let mut policy = MediatorPolicy::new(table);
    match fill {
        FillRule::Uniform => {}
        FillRule::CopyExpert(reference) => {
            reference.check(game)?;
            for s in (0..n).filter(|&s| !supported[s]) {
                policy.table[s] = reference.table[s].clone();
            }
        }
        FillRule::Adversarial(class) => {
            class.check(game)?;
            for s in (0..n).filter(|&s| !supported[s]) {
                let mut best: Option<(f64, usize)> = None;
                for a in 0..m {
                    policy.table[s] = one_hot(m, a);
                    let r = regret(game, &policy, class)?;
                    if best.is_none_or(|(v, _)| r > v + TIE_TOL) {
                        best = Some((r, a));
                    }
                }
                let (_, a) = best.expect("at least one joint action");
                policy.table[s] = one_hot(m, a);
            }
        }
    }
    Ok(policy)
}

fn one_hot(m: usize, a: usize) -> Vec<f64> {
    let mut row = vec![0.0; m];
    row[a] = 1.0;
    row
}

/// Joint inverse RL as a game between a reward player and a policy player
/// over the joint-action MDP. `target` is the expert's averaged occupancy.
///
/// The reward player answers the current mixture of policy-player responses
/// with `sign(rho_E - rho_mix)`, or its clipped linear form when the
/// regularizer is positive. Each round's candidate is the stationary policy
/// read off the mixture occupancy; the candidate with the smallest normalized
/// moment error is returned.
pub fn j_irl(
    game: &MarkovGame,
    target: &[Vec<f64>],
    rounds: usize,
    options: &JirlOptions,
    init: Option<MediatorPolicy>,
) -> Result<TrainOutcome> {
    let n = game.num_states();
    let m = game.num_joint_actions();
    if rounds == 0 {
        return Err(Error::InvalidArgument(
            "J-IRL needs at least one round".into(),
        ));
    }
    if target.len() != n || target.iter().any(|row| row.len() != m) {
        return Err(Error::Shape(
            "target occupancy does not match the game".into(),
        ));
    }
    if options.regularizer < 0.0 {
        return Err(Error::InvalidArgument(
            "regularizer weight must be >= 0".into(),
        ));
    }
    if let PolicyPlayer::SoftValueIteration { temperature } = options.player {
        if !(temperature > 0.0) {
            return Err(Error::InvalidArgument(
                "temperature must be positive".into(),
            ));
        }
    }
    let first = init.unwrap_or_else(|| MediatorPolicy::uniform(n, m));
    first.check(game)?;
    let mut mix = occupancy_bundle(game, &first).occupancy;
    let mut best = (occupancy_l1(target, &mix), first, 1usize);
    let mut trace = vec![TraceRow {
        round: 1,
        loss: best.0,
        achieving_agent: None,
        achieving_deviation: None,
        step_size: 1.0,
    }];
    let hf = game.horizon as f64;
    for round in 2..=rounds {
        if best.0 == 0.0 {
            break;
        }
        let reward: Vec<Vec<f64>> = target
            .iter()
            .zip(&mix)
            .map(|(te, tm)| {
                te.iter()
                    .zip(tm)
                    .map(|(e, x)| {
                        let diff = e - x;
                        if options.regularizer > 0.0 {
                            (hf * diff / options.regularizer).clamp(-1.0, 1.0)
                        } else if diff > 0.0 {
                            1.0
                        } else if diff < 0.0 {
                            -1.0
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect();
        let response = policy_player(game, &reward, options.player);
        let rho = occupancy_bundle(game, &response).occupancy;
        let step = 1.0 / round as f64;
        for (acc_row, row) in mix.iter_mut().zip(&rho) {
            for (acc, x) in acc_row.iter_mut().zip(row) {
                *acc += step * (x - *acc);
            }
        }
        let candidate = stationary_projection(&mix);
        let err = occupancy_l1(target, &occupancy_bundle(game, &candidate).occupancy);
        trace.push(TraceRow {
            round,
            loss: err,
            achieving_agent: None,
            achieving_deviation: None,
            step_size: step,
        });
        if err < best.0 {
            best = (err, candidate, round);
        }
    }
    let (final_loss, policy, best_round) = best;
    Ok(TrainOutcome {
        policy,
        trace,
        best_round,
        final_loss,
        query_count: None,
        query_log: Vec::new(),
    })
}

/// `sigma(a|s) = rho(s, a) / d(s)`, uniform where `d(s) = 0`.
pub fn stationary_projection(occupancy: &[Vec<f64>]) -> MediatorPolicy {
    let table = occupancy
        .iter()
        .map(|row| {
            let mass: f64 = row.iter().sum();
            if mass > 0.0 {
                row.iter().map(|x| x / mass).collect()
            } else {
                vec![1.0 / row.len() as f64; row.len()]
            }
        })
        .collect();
    MediatorPolicy::new(table)
}

/// Time-indexed response maximizing the return of a stationary reward over
/// the joint-action MDP.
fn policy_player(
    game: &MarkovGame,
    reward: &[Vec<f64>],
    player: PolicyPlayer,
) -> TimeIndexedPolicy {
    let n = game.num_states();
    let m = game.num_joint_actions();
    let mut steps = vec![MediatorPolicy::uniform(n, m); game.horizon];
    let mut v_next = vec![0.0; n];
    for h in (0..game.horizon).rev() {
        let mut v = vec![0.0; n];
        for s in 0..n {
            let q: Vec<f64> = (0..m)
                .map(|a| {
                    reward[s][a]
                        + game.transitions[s][a]
                            .iter()
                            .zip(&v_next)
                            .map(|(p, w)| p * w)
                            .sum::<f64>()
                })
                .collect();
            let qmax = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            match player {
                PolicyPlayer::ExactBestResponse => {
                    let a = q.iter().position(|x| *x >= qmax - TIE_TOL).unwrap_or(0);
                    steps[h].table[s] = one_hot(m, a);
                    v[s] = q[a];
                }
                PolicyPlayer::SoftValueIteration { temperature } => {
                    let weights: Vec<f64> =
                        q.iter().map(|x| ((x - qmax) / temperature).exp()).collect();
                    let z: f64 = weights.iter().sum();
                    steps[h].table[s] = weights.iter().map(|w| w / z).collect();
                    v[s] = qmax + temperature * z.ln();
                }
            }
        }
        v_next = v;
    }
    TimeIndexedPolicy { steps }
}

/// State distributions of every explicit `(agent, deviation)` pair at `sigma`.
pub fn deviated_distributions(
    game: &MarkovGame,
    sigma: &MediatorPolicy,
    class: &DeviationClass,
    density: DensityMode,
    seed: u64,
) -> Result<Vec<DeviatedDistribution>> {
    class
        .explicit_deviations()
        .into_iter()
        .enumerate()
        .map(|(idx, (agent, k, dev))| {
            let induced = induced_time_indexed(game, sigma, dev)?;
            let states = match density {
                DensityMode::Exact => state_distribution(game, &induced),
                DensityMode::MonteCarlo { rollouts } => {
                    let steps = empirical_step_distributions(
                        game,
                        &induced,
                        rollouts,
                        derive_seed(seed, idx as u64),
                    );
                    let mut avg = vec![0.0; game.num_states()];
                    for row in &steps {
                        for (acc, x) in avg.iter_mut().zip(row) {
                            *acc += x / game.horizon as f64;
                        }
                    }
                    avg
                }
            };
            Ok(DeviatedDistribution {
                label: ComponentLabel {
                    agent,
                    deviation: k,
                },
                states,
            })
        })
        .collect()
}

fn trace_from(run: &OcoRun) -> Vec<TraceRow> {
    run.rounds
        .iter()
        .map(|r| TraceRow {
            round: r.round,
            loss: r.loss,
            achieving_agent: Some(r.achieving.agent),
            achieving_deviation: Some(r.achieving.deviation),
            step_size: r.step_size,
        })
        .collect()
}

fn validation_seed(seed: u64, iterate: usize) -> u64 {
    derive_seed(derive_seed(seed, 2), iterate as u64)
}

/// First index of the smallest value.
fn argmin(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::INFINITY);
    for (k, v) in values.enumerate() {
        if v < best.1 {
            best = (k, v);
        }
    }
    best.0
}

/// MALICE: importance-weighted imitation of the expert under every
/// deviation's state distribution, minimized by no-regret OCO. Requires the
/// expert to visit every state.
pub fn malice_train(
    game: &MarkovGame,
    expert: &MediatorPolicy,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.check(game)?;
    expert.check(game)?;
    let d_true = state_distribution(game, expert);
    if let Some(state) = d_true.iter().position(|&d| d <= 0.0) {
        return Err(Error::ZeroCoverage { state });
    }
    let m = game.num_joint_actions();
    let (labels, d_e) = match demonstrations(game, expert, config)? {
        None => (expert.clone(), d_true),
        Some(demos) => {
            let labels = j_bc(game, ExpertData::Sampled(&demos), &FillRule::Uniform)?;
            (labels, demos.state_frequencies(game.num_states()))
        }
    };
    let init = config
        .init
        .clone()
        .unwrap_or_else(|| MediatorPolicy::uniform(game.num_states(), m));
    init.check(game)?;
    let run = oco_run(init, &config.oco, |round, sigma| {
        let deviated = deviated_distributions(
            game,
            sigma,
            &config.class,
            config.density,
            derive_seed(config.oco.seed, 1000 + round as u64),
        )?;
        malice_composite(&labels, &d_e, &deviated)
    })?;
    // validation: the per-round loss is already self-consistent with exact
    // densities; sampled densities are re-estimated on fresh rollouts
    let (best, final_loss) = match config.density {
        DensityMode::Exact => {
            let best = argmin(run.rounds.iter().map(|r| r.loss));
            (best, run.rounds[best].loss)
        }
        DensityMode::MonteCarlo { .. } => {
            let losses = run
                .iterates
                .iter()
                .enumerate()
                .map(|(k, sigma)| {
                    let deviated = deviated_distributions(
                        game,
                        sigma,
                        &config.class,
                        config.density,
                        validation_seed(config.oco.seed, k),
                    )?;
                    malice_loss(&labels, sigma, &d_e, &deviated)
                })
                .collect::<Result<Vec<_>>>()?;
            let best = argmin(losses.iter().copied());
            (best, losses[best])
        }
    };
    let policy = run.iterates[best].clone();
    Ok(TrainOutcome {
        trace: trace_from(&run),
        policy,
        best_round: best + 1,
        final_loss,
        query_count: None,
        query_log: Vec::new(),
    })
}

/// BLADES: imitation of oracle labels on the states each deviation reaches
/// under the current learner, minimized by no-regret OCO. The expert is read
/// only through `oracle`.
pub fn blades_train(
    game: &MarkovGame,
    oracle: &ExpertOracle,
    demos: &DemonstrationSet,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.check(game)?;
    if oracle.num_states() != game.num_states() {
        return Err(Error::Shape("oracle and game disagree on states".into()));
    }
    let m = game.num_joint_actions();
    let init = match &config.init {
        Some(p) => p.clone(),
        None => j_bc(game, ExpertData::Sampled(demos), &FillRule::Uniform)?,
    };
    init.check(game)?;
    let run = oco_run(init, &config.oco, |round, sigma| {
        let deviated = deviated_distributions(
            game,
            sigma,
            &config.class,
            config.density,
            derive_seed(config.oco.seed, 1000 + round as u64),
        )?;
        blades_composite(oracle, round, m, &deviated)
    })?;
    let (best, final_loss) = match config.density {
        DensityMode::Exact => {
            let best = argmin(run.rounds.iter().map(|r| r.loss));
            (best, run.rounds[best].loss)
        }
        DensityMode::MonteCarlo { .. } => {
            // fresh rollouts, one labelled validation round per iterate
            let losses = run
                .iterates
                .iter()
                .enumerate()
                .map(|(k, sigma)| {
                    let deviated = deviated_distributions(
                        game,
                        sigma,
                        &config.class,
                        config.density,
                        validation_seed(config.oco.seed, k),
                    )?;
                    Ok(
                        blades_composite(oracle, config.oco.rounds + 1 + k, m, &deviated)?
                            .evaluate(sigma),
                    )
                })
                .collect::<Result<Vec<_>>>()?;
            let best = argmin(losses.iter().copied());
            (best, losses[best])
        }
    };
    let policy = run.iterates[best].clone();
    Ok(TrainOutcome {
        trace: trace_from(&run),
        policy,
        best_round: best + 1,
        final_loss,
        query_count: Some(oracle.query_count()),
        query_log: oracle.query_log(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{coverage_constant, regret_gap};
    use crate::fixtures::{fig1_game, random_mg, RandomGameSpec};
    use crate::losses::bc_loss;

    #[test]
    fn jbc_exact_full_coverage_copies_expert() {
        let mut spec = RandomGameSpec::new(4, vec![2, 2], 3);
        spec.full_coverage_expert = true;
        let fx = random_mg(&spec, 3).unwrap();
        let p = j_bc(&fx.game, ExpertData::Exact(&fx.expert), &FillRule::Uniform).unwrap();
        assert_eq!(p, fx.expert);
        let d = state_distribution(&fx.game, &fx.expert);
        assert_eq!(bc_loss(&fx.expert, &p, &d).unwrap(), 0.0);
    }

    #[test]
    fn jbc_adversarial_fill_on_fig1() {
        let fx = fig1_game(6).unwrap();
        let class = DeviationClass::complete(2);
        let fill = FillRule::Adversarial(class.clone());
        let p = j_bc(&fx.game, ExpertData::Exact(&fx.expert), &fill).unwrap();
        let gap = regret_gap(&fx.game, &fx.expert, &p, &class).unwrap();
        assert!((gap - 4.0).abs() < 1e-9, "gap {gap}");
    }

    #[test]
    fn jbc_rejects_empty_demos() {
        let fx = fig1_game(3).unwrap();
        let empty = DemonstrationSet {
            trajectories: vec![],
            seed: 0,
        };
        assert!(matches!(
            j_bc(&fx.game, ExpertData::Sampled(&empty), &FillRule::Uniform),
            Err(Error::EmptyDemonstrations)
        ));
    }

    #[test]
    fn jirl_stops_at_expert() {
        let fx = fig1_game(4).unwrap();
        let target = occupancy_bundle(&fx.game, &fx.expert).occupancy;
        let out = j_irl(
            &fx.game,
            &target,
            50,
            &JirlOptions::default(),
            Some(fx.expert.clone()),
        )
        .unwrap();
        assert_eq!(out.final_loss, 0.0);
        assert_eq!(out.trace.len(), 1);
    }

    #[test]
    fn malice_rejects_zero_coverage() {
        let fx = fig1_game(4).unwrap();
        assert!(coverage_constant(&fx.game, &fx.expert) == 0.0);
        let cfg = TrainConfig::new(Algorithm::Malice, 5, fx.explicit_class());
        assert!(matches!(
            malice_train(&fx.game, &fx.expert, &cfg),
            Err(Error::ZeroCoverage { .. })
        ));
    }

    #[test]
    fn malice_from_expert_stays_at_zero() {
        let mut spec = RandomGameSpec::new(3, vec![2, 2], 3);
        spec.full_coverage_expert = true;
        let fx = random_mg(&spec, 9).unwrap();
        let class = DeviationClass::identities(&fx.game);
        let mut cfg = TrainConfig::new(Algorithm::Malice, 10, class);
        cfg.init = Some(fx.expert.clone());
        let out = malice_train(&fx.game, &fx.expert, &cfg).unwrap();
        assert!(out.trace.iter().all(|r| r.loss == 0.0));
        assert_eq!(out.policy, fx.expert);
    }

    #[test]
    fn blades_counts_one_query_per_reached_state_per_round() {
        let fx = fig1_game(4).unwrap();
        let mut cfg = TrainConfig::new(Algorithm::Blades, 3, fx.explicit_class());
        cfg.init = Some(fx.expert.clone());
        let oracle = ExpertOracle::full_row(fx.expert.clone());
        let demos = sample_demonstrations(&fx.game, &fx.expert, 1, 0).unwrap();
        let out = blades_train(&fx.game, &oracle, &demos, &cfg).unwrap();
        assert!(out.trace.iter().all(|r| r.loss == 0.0));
        let log = out.query_log;
        assert_eq!(out.query_count, Some(log.len() as u64));
        let mut keys: Vec<_> = log.iter().map(|q| (q.round, q.state)).collect();
        keys.sort_unstable();
        keys.dedup();
        assert_eq!(keys.len(), log.len());
    }
}
