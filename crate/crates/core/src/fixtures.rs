//! Generators for the lower-bound constructions and for random games.
//!
//! The chain constructions share one topology: `s0` branches into an upper
//! chain `s1, s3, s5, ...` and a lower chain `s2, s4, s6, ...`, with `s_{2h-1}`
//! and `s_{2h}` occupied at (0-based) step `h`. An episode has exactly H
//! reward-bearing steps, so the last occupied pair is `s_{2H-3}, s_{2H-2}`;
//! those states loop on themselves. Every generated game is time-layered.

use std::collections::BTreeMap;

use rand::Rng as _;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::eval::{coverage_constant, layer_coverage};
use crate::game::{
    validate_game, Deviation, DeviationClass, JointActionSpace, MarkovGame, MediatorPolicy,
    MAX_JOINT_ACTIONS, MAX_STATES,
};
use crate::sampling::{rng_from_seed, Rng};

/// A game with an expert, a learner and the closed-form quantities the
/// construction pins down.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fixture {
    pub name: String,
    pub game: MarkovGame,
    pub expert: MediatorPolicy,
    pub learner: MediatorPolicy,
    #[serde(skip)]
    pub witness_deviations: Vec<Deviation>,
    /// Closed-form values: `regret_expert`, `regret_learner`, `regret_gap`,
    /// `value_gap`, `bc_error`, `moment_error`, `malice_loss`, `blades_loss`,
    /// `occupancy_l1`, whichever apply.
    pub expected: BTreeMap<String, f64>,
    /// Construction parameters (`H`, `beta`, `eps`, `u`, `u_floor`) and
    /// measured side quantities (`beta_computed`, `layer_coverage`).
    pub params: BTreeMap<String, f64>,
    /// Validity flags recorded at generation time.
    pub flags: BTreeMap<String, bool>,
}

impl Fixture {
    /// Identity for every agent plus the witness deviations.
    pub fn explicit_class(&self) -> DeviationClass {
        DeviationClass::explicit_with_identities(&self.game, self.witness_deviations.clone())
    }

    pub fn expected(&self, key: &str) -> Option<f64> {
        self.expected.get(key).copied()
    }

    pub fn param(&self, key: &str) -> Option<f64> {
        self.params.get(key).copied()
    }
}

/// Names accepted by [`by_name`].
pub const FIXTURE_NAMES: [&str; 4] = ["fig1", "coverage-lb", "alice-lb", "multi-ce-nfg"];

/// Parameters for the named generators; unused ones are ignored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixtureArgs {
    pub horizon: usize,
    pub u: f64,
    pub beta: f64,
    pub eps: f64,
}

impl Default for FixtureArgs {
    fn default() -> Self {
        Self {
            horizon: 8,
            u: 4.0,
            beta: 0.1,
            eps: 0.005,
        }
    }
}

/// Builds the fixtures for `name`; `multi-ce-nfg` yields two.
pub fn by_name(name: &str, args: FixtureArgs) -> Result<Vec<Fixture>> {
    match name {
        "fig1" => Ok(vec![fig1_game(args.horizon)?]),
        "coverage-lb" => Ok(vec![coverage_lb_game(
            args.horizon,
            args.u,
            args.beta,
            args.eps,
        )?]),
        "alice-lb" => Ok(vec![alice_lb_game(
            args.horizon,
            args.u,
            args.beta,
            args.eps,
        )?]),
        "multi-ce-nfg" => {
            let (r, r_prime) = multi_ce_nfg();
            Ok(vec![r, r_prime])
        }
        other => Err(Error::InvalidArgument(format!(
            "unknown fixture {other:?}; expected one of {}",
            FIXTURE_NAMES.join(", ")
        ))),
    }
}

fn labels(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|k| format!("{prefix}{k}")).collect()
}

/// Two-chain topology over `2H - 1` states. `upper_from_s0` and
/// `upper_from_s1` decide which joint actions move into the upper chain; all
/// rewards are action-free and common to every agent.
fn two_chain_game(
    horizon: usize,
    num_agents: usize,
    num_actions: usize,
    upper_from_root: &dyn Fn(usize) -> bool,
    upper_from_s1: &dyn Fn(usize) -> bool,
    rewarded: &[usize],
) -> MarkovGame {
    let n = 2 * horizon - 1;
    let num_joint = num_actions.pow(num_agents as u32);
    let onehot = |t: usize| {
        let mut row = vec![0.0; n];
        row[t] = 1.0;
        row
    };
    let last_layer = |k: usize| k + 2 >= n;
    let transitions = (0..n)
        .map(|s| {
            (0..num_joint)
                .map(|a| match s {
                    _ if n == 1 => onehot(0),
                    0 => onehot(if upper_from_root(a) { 1 } else { 2 }),
                    _ if last_layer(s) => onehot(s),
                    1 => onehot(if upper_from_s1(a) { 3 } else { 4 }),
                    _ => onehot(s + 2),
                })
                .collect()
        })
        .collect();
    let mut reward = vec![vec![0.0; num_joint]; n];
    for &s in rewarded {
        reward[s] = vec![1.0; num_joint];
    }
    let mut initial = vec![0.0; n];
    initial[0] = 1.0;
    MarkovGame {
        horizon,
        num_agents,
        states: labels("s", n),
        action_sets: vec![labels_from_one("a", num_actions); num_agents],
        initial_dist: initial,
        transitions,
        rewards: vec![reward; num_agents],
    }
}

/// `a1, a2, ...` (1-based, matching the constructions' naming).
fn labels_from_one(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|k| format!("{prefix}{k}")).collect()
}

/// Deterministic `a1 a1 ...` everywhere, with the listed rows overridden.
fn policy_with_rows(
    n_states: usize,
    num_joint: usize,
    rows: &[(usize, Vec<(usize, f64)>)],
) -> MediatorPolicy {
    let mut sigma = MediatorPolicy::deterministic(&vec![0; n_states], num_joint);
    for (s, entries) in rows {
        let mut row = vec![0.0; num_joint];
        for &(a, p) in entries {
            row[a] += p;
        }
        sigma.table[*s] = row;
    }
    sigma
}

fn finish(mut fx: Fixture) -> Result<Fixture> {
    validate_game(&fx.game).into_result()?;
    fx.expert.check(&fx.game)?;
    fx.learner.check(&fx.game)?;
    for dev in &fx.witness_deviations {
        dev.check(&fx.game)?;
    }
    fx.flags
        .insert("time_layered".into(), fx.game.is_time_layered());
    Ok(fx)
}

/// Value equivalence without regret equivalence: the learner matches the
/// expert's occupancy exactly, yet differs at the unvisited `s1`, where a
/// deviating agent 1 can steer both agents into the rewarded upper chain.
pub fn fig1_game(horizon: usize) -> Result<Fixture> {
    if horizon < 3 {
        return Err(Error::InvalidArgument(format!(
            "fig1 needs H >= 3, got {horizon}"
        )));
    }
    let space = JointActionSpace::new(vec![3, 3]);
    let a1a1 = space.encode(&[0, 0]);
    let a2a1 = space.encode(&[1, 0]);
    let a3a3 = space.encode(&[2, 2]);
    let rewarded: Vec<usize> = (3..=2 * horizon - 3).step_by(2).collect();
    let game = two_chain_game(horizon, 2, 3, &|a| a == a2a1, &|a| a == a2a1, &rewarded);
    let n = game.num_states();
    let expert = policy_with_rows(n, 9, &[(0, vec![(a1a1, 1.0)]), (1, vec![(a3a3, 1.0)])]);
    let learner = policy_with_rows(n, 9, &[(0, vec![(a1a1, 1.0)]), (1, vec![(a1a1, 1.0)])]);
    let witness = Deviation::from_swaps(0, n, 3, &[(0, 0, 1), (1, 0, 1)])?;
    let h = horizon as f64;
    let expected = BTreeMap::from([
        ("occupancy_l1".to_string(), 0.0),
        ("regret_expert".to_string(), 0.0),
        ("regret_learner".to_string(), h - 2.0),
        ("regret_gap".to_string(), h - 2.0),
        ("value_gap".to_string(), 0.0),
        ("bc_error".to_string(), 0.0),
    ]);
    finish(Fixture {
        name: "fig1".into(),
        game,
        expert,
        learner,
        witness_deviations: vec![witness],
        expected,
        params: BTreeMap::from([("H".to_string(), h)]),
        flags: BTreeMap::new(),
    })
}

/// Coverage lower bound for J-BC: the learner moves `eps H / (2 beta)` of
/// the expert's `a3 a3` mass at `s1` onto `a1 a1`. Rewards sit on
/// `s3, s5, ..., s_{2u'-3}`.
pub fn coverage_lb_game(horizon: usize, u: f64, beta: f64, eps: f64) -> Result<Fixture> {
    let u_floor = u.floor();
    if !(u >= 3.0 && u_floor as usize <= horizon) {
        return Err(Error::InvalidArgument(format!(
            "coverage-lb needs H >= u >= 3, got H = {horizon}, u = {u}"
        )));
    }
    if !(beta > 0.0 && beta <= 0.25) {
        return Err(Error::InvalidArgument(format!(
            "coverage-lb needs 0 < beta <= 1/4, got {beta}"
        )));
    }
    let h = horizon as f64;
    let shift = eps * h / (2.0 * beta);
    if !(eps >= 0.0 && shift <= 0.5) {
        return Err(Error::InvalidArgument(format!(
            "coverage-lb needs 0 <= eps H / (2 beta) <= 1/2, got {shift}"
        )));
    }
    let space = JointActionSpace::new(vec![3, 3]);
    let a1a1 = space.encode(&[0, 0]);
    let a2a1 = space.encode(&[1, 0]);
    let a3a3 = space.encode(&[2, 2]);
    let uf = u_floor as usize;
    let rewarded: Vec<usize> = (3..=2 * uf - 3).step_by(2).collect();
    let game = two_chain_game(horizon, 2, 3, &|a| a == a2a1, &|a| a == a2a1, &rewarded);
    let n = game.num_states();
    let root = (0, vec![(a1a1, 1.0 - 2.0 * beta), (a2a1, 2.0 * beta)]);
    let expert = policy_with_rows(n, 9, &[root.clone(), (1, vec![(a2a1, 0.5), (a3a3, 0.5)])]);
    let learner = policy_with_rows(
        n,
        9,
        &[
            root,
            (1, vec![(a2a1, 0.5), (a1a1, shift), (a3a3, 0.5 - shift)]),
        ],
    );
    let witness = Deviation::from_swaps(0, n, 3, &[(0, 0, 1), (1, 0, 1)])?;
    let reward_steps = u_floor - 2.0;
    let regret_expert = 0.5 * (1.0 - 2.0 * beta) * reward_steps;
    let expected = BTreeMap::from([
        ("bc_error".to_string(), eps),
        ("moment_error".to_string(), 2.0 * eps),
        ("regret_expert".to_string(), regret_expert),
        (
            "regret_learner".to_string(),
            regret_expert + shift * reward_steps,
        ),
        ("regret_gap".to_string(), shift * reward_steps),
        ("value_gap".to_string(), 0.0),
    ]);
    let beta_computed = coverage_constant(&game, &expert);
    let layer_cov = layer_coverage(&game, &expert);
    let flags = BTreeMap::from([
        (
            "coverage_matches_analytic".to_string(),
            (beta_computed - beta).abs() <= 1e-12,
        ),
        (
            "layer_coverage_at_least_beta".to_string(),
            layer_cov >= beta - 1e-12,
        ),
    ]);
    finish(Fixture {
        name: "coverage-lb".into(),
        game,
        expert,
        learner,
        witness_deviations: vec![witness],
        expected,
        params: BTreeMap::from([
            ("H".to_string(), h),
            ("u".to_string(), u),
            ("u_floor".to_string(), u_floor),
            ("beta".to_string(), beta),
            ("eps".to_string(), eps),
            ("beta_computed".to_string(), beta_computed),
            ("layer_coverage".to_string(), layer_cov),
        ]),
        flags,
    })
}

/// Lower bound for the deviation-aware learners: a single-agent chain MDP
/// where the learner shifts `H eps` of the root mass onto the unrewarded
/// branch. Rewards sit on `s1, s3, ..., s_{2u'-3}`.
pub fn alice_lb_game(horizon: usize, u: f64, beta: f64, eps: f64) -> Result<Fixture> {
    let u_floor = u.floor();
    if !(u >= 2.0 && u_floor as usize <= horizon) {
        return Err(Error::InvalidArgument(format!(
            "alice-lb needs H >= u >= 2, got H = {horizon}, u = {u}"
        )));
    }
    let h = horizon as f64;
    if !(beta > 0.0 && eps >= 0.0 && beta + h * eps <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "alice-lb needs beta > 0, eps >= 0 and beta + H eps <= 1, got beta = {beta}, eps = {eps}"
        )));
    }
    let uf = u_floor as usize;
    let rewarded: Vec<usize> = (1..=2 * uf - 3).step_by(2).collect();
    let game = two_chain_game(horizon, 1, 2, &|a| a == 0, &|_| true, &rewarded);
    let n = game.num_states();
    let expert = policy_with_rows(n, 2, &[(0, vec![(0, 1.0 - beta), (1, beta)])]);
    let learner = policy_with_rows(
        n,
        2,
        &[(0, vec![(0, 1.0 - beta - h * eps), (1, beta + h * eps)])],
    );
    let witness = Deviation::from_swaps(0, n, 2, &[(0, 1, 0)])?;
    let reward_steps = u_floor - 1.0;
    let expected = BTreeMap::from([
        ("malice_loss".to_string(), eps),
        ("blades_loss".to_string(), eps),
        ("regret_expert".to_string(), beta * reward_steps),
        (
            "regret_learner".to_string(),
            (beta + h * eps) * reward_steps,
        ),
        ("regret_gap".to_string(), eps * h * reward_steps),
        ("value_gap".to_string(), eps * h * reward_steps),
    ]);
    let beta_computed = coverage_constant(&game, &expert);
    let layer_cov = layer_coverage(&game, &expert);
    let flags = BTreeMap::from([(
        "coverage_matches_analytic".to_string(),
        (beta_computed - beta).abs() <= 1e-12,
    )]);
    finish(Fixture {
        name: "alice-lb".into(),
        game,
        expert,
        learner,
        witness_deviations: vec![witness],
        expected,
        params: BTreeMap::from([
            ("H".to_string(), h),
            ("u".to_string(), u),
            ("u_floor".to_string(), u_floor),
            ("beta".to_string(), beta),
            ("eps".to_string(), eps),
            ("beta_computed".to_string(), beta_computed),
            ("layer_coverage".to_string(), layer_cov),
        ]),
        flags,
    })
}

fn coordination_nfg(diagonal: [f64; 2]) -> MarkovGame {
    let r = vec![diagonal[0], 0.0, 0.0, diagonal[1]];
    MarkovGame {
        horizon: 1,
        num_agents: 2,
        states: vec!["s0".into()],
        action_sets: vec![labels_from_one("a", 2); 2],
        initial_dist: vec![1.0],
        transitions: vec![vec![vec![1.0]; 4]],
        rewards: vec![vec![r.clone()], vec![r]],
    }
}

/// The coordination game with two equilibria of different value, and the
/// alternative reward that also rationalizes `sigma_1`.
///
/// The first fixture uses payoff `r = diag(1, 2)` with expert `sigma_1`
/// (all mass on `a1 a1`) and learner `sigma_2 = (4/9, 2/9, 2/9, 1/9)`. The
/// second uses `r' = diag(1, 1)` with expert `sigma_1` and the uniform
/// learner, which is an equilibrium under `r'` but not under `r`.
///
/// Payoffs are scaled by 1/2 so that rewards stay in `[-1, 1]`. Expected
/// values are in the scaled units; `params["reward_scale"]` converts back.
pub fn multi_ce_nfg() -> (Fixture, Fixture) {
    let sigma1 = MediatorPolicy::new(vec![vec![1.0, 0.0, 0.0, 0.0]]);
    let sigma2 = MediatorPolicy::new(vec![vec![4.0 / 9.0, 2.0 / 9.0, 2.0 / 9.0, 1.0 / 9.0]]);
    let r = Fixture {
        name: "multi-ce-nfg-r".into(),
        game: coordination_nfg([0.5, 1.0]),
        expert: sigma1.clone(),
        learner: sigma2,
        witness_deviations: vec![],
        expected: BTreeMap::from([
            ("regret_expert".to_string(), 0.0),
            ("regret_learner".to_string(), 0.0),
            ("regret_gap".to_string(), 0.0),
            ("value_expert".to_string(), 0.5),
            ("value_learner".to_string(), 1.0 / 3.0),
            ("value_gap".to_string(), 1.0 / 6.0),
        ]),
        params: BTreeMap::from([("H".to_string(), 1.0), ("reward_scale".to_string(), 2.0)]),
        flags: BTreeMap::new(),
    };
    let r_prime = Fixture {
        name: "multi-ce-nfg-r-prime".into(),
        game: coordination_nfg([0.5, 0.5]),
        expert: sigma1,
        learner: MediatorPolicy::uniform(1, 4),
        witness_deviations: vec![],
        expected: BTreeMap::from([
            ("regret_expert".to_string(), 0.0),
            ("regret_learner".to_string(), 0.0),
        ]),
        params: BTreeMap::from([("H".to_string(), 1.0), ("reward_scale".to_string(), 2.0)]),
        flags: BTreeMap::new(),
    };
    (
        finish(r).expect("coordination game is well formed"),
        finish(r_prime).expect("coordination game is well formed"),
    )
}

/// Sizes and structural flags for [`random_mg`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RandomGameSpec {
    /// States of the base game (per layer when `layered`).
    pub num_states: usize,
    /// Per-agent action counts; overridden to one agent when `single_agent`.
    pub actions: Vec<usize>,
    pub horizon: usize,
    pub common_payoff: bool,
    /// Mix the expert with the uniform policy at rate 0.1.
    pub full_coverage_expert: bool,
    pub single_agent: bool,
    /// One copy of the base states per step, so each state is reachable at
    /// exactly one step.
    pub layered: bool,
}

impl RandomGameSpec {
    pub fn new(num_states: usize, actions: Vec<usize>, horizon: usize) -> Self {
        Self {
            num_states,
            actions,
            horizon,
            common_payoff: false,
            full_coverage_expert: false,
            single_agent: false,
            layered: false,
        }
    }
}

const COVERAGE_MIX: f64 = 0.1;

pub fn random_distribution(rng: &mut Rng, n: usize) -> Vec<f64> {
    // normalized exponentials: a uniform draw from the simplex
    let mut v: Vec<f64> = (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let sum: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= sum);
    v
}

pub fn random_policy(rng: &mut Rng, num_states: usize, num_joint: usize) -> MediatorPolicy {
    MediatorPolicy::new(
        (0..num_states)
            .map(|_| random_distribution(rng, num_joint))
            .collect(),
    )
}

/// Random game with random expert and learner; `expected` is empty.
pub fn random_mg(spec: &RandomGameSpec, seed: u64) -> Result<Fixture> {
    let actions = if spec.single_agent {
        vec![*spec.actions.first().ok_or_else(|| {
            Error::InvalidArgument("random game needs at least one action count".into())
        })?]
    } else {
        spec.actions.clone()
    };
    if actions.is_empty() || actions.contains(&0) || spec.num_states == 0 || spec.horizon == 0 {
        return Err(Error::InvalidArgument(
            "random game needs positive sizes for states, actions and horizon".into(),
        ));
    }
    let num_joint = actions
        .iter()
        .try_fold(1usize, |acc, &k| acc.checked_mul(k));
    let num_joint = match num_joint {
        Some(j) if j <= MAX_JOINT_ACTIONS => j,
        _ => {
            return Err(Error::CapExceeded {
                what: "joint actions",
                size: actions.iter().map(|&k| k as u128).product(),
                cap: MAX_JOINT_ACTIONS as u128,
            })
        }
    };
    let layers = if spec.layered { spec.horizon } else { 1 };
    let n = spec.num_states * layers;
    if n > MAX_STATES {
        return Err(Error::CapExceeded {
            what: "states",
            size: n as u128,
            cap: MAX_STATES as u128,
        });
    }
    let m = actions.len();
    let base = spec.num_states;
    let mut rng = rng_from_seed(seed);

    let mut initial = vec![0.0; n];
    initial[..base].copy_from_slice(&random_distribution(&mut rng, base));
    let transitions = (0..n)
        .map(|s| {
            let layer = s / base;
            (0..num_joint)
                .map(|_| {
                    if !spec.layered {
                        return random_distribution(&mut rng, n);
                    }
                    let mut row = vec![0.0; n];
                    if layer + 1 < layers {
                        let next = random_distribution(&mut rng, base);
                        row[(layer + 1) * base..(layer + 2) * base].copy_from_slice(&next);
                    } else {
                        row[s] = 1.0;
                    }
                    row
                })
                .collect()
        })
        .collect();
    let reward_for = |rng: &mut Rng| -> Vec<Vec<f64>> {
        (0..n)
            .map(|_| (0..num_joint).map(|_| rng.gen_range(-1.0..=1.0)).collect())
            .collect()
    };
    let rewards = if spec.common_payoff {
        vec![reward_for(&mut rng); m]
    } else {
        (0..m).map(|_| reward_for(&mut rng)).collect()
    };
    let states = if spec.layered {
        (0..n)
            .map(|s| format!("s{}_h{}", s % base, s / base))
            .collect()
    } else {
        labels("s", n)
    };
    let game = MarkovGame {
        horizon: spec.horizon,
        num_agents: m,
        states,
        action_sets: actions.iter().map(|&k| labels_from_one("a", k)).collect(),
        initial_dist: initial,
        transitions,
        rewards,
    };
    let mut expert = random_policy(&mut rng, n, num_joint);
    if spec.full_coverage_expert {
        let u = 1.0 / num_joint as f64;
        for row in &mut expert.table {
            row.iter_mut()
                .for_each(|p| *p = (1.0 - COVERAGE_MIX) * *p + COVERAGE_MIX * u);
        }
    }
    let learner = random_policy(&mut rng, n, num_joint);
    let beta = coverage_constant(&game, &expert);
    if spec.full_coverage_expert && beta <= 0.0 {
        return Err(Error::InvalidGame(format!(
            "full-coverage expert requested but coverage is {beta}"
        )));
    }
    let mut fx = finish(Fixture {
        name: "random".into(),
        game,
        expert,
        learner,
        witness_deviations: vec![],
        expected: BTreeMap::new(),
        params: BTreeMap::from([
            ("H".to_string(), spec.horizon as f64),
            ("seed".to_string(), seed as f64),
            ("beta_computed".to_string(), beta),
        ]),
        flags: BTreeMap::new(),
    })?;
    fx.flags.insert("full_coverage".into(), beta > 0.0);
    Ok(fx)
}

/// Up to `count` distinct random non-identity stationary deviations, spread
/// over agents round-robin.
pub fn random_deviations(game: &MarkovGame, count: usize, seed: u64) -> Vec<Deviation> {
    let mut rng = rng_from_seed(seed);
    let mut out: Vec<Deviation> = Vec::new();
    let mut attempts = 0;
    while out.len() < count && attempts < 50 * count.max(1) {
        attempts += 1;
        let agent = out.len() % game.num_agents;
        let k = game.num_actions(agent);
        if k < 2 {
            continue;
        }
        let map = (0..game.num_states())
            .map(|_| {
                (0..k)
                    .map(|a| {
                        if rng.gen_bool(0.5) {
                            rng.gen_range(0..k)
                        } else {
                            a
                        }
                    })
                    .collect()
            })
            .collect();
        let dev = Deviation::stationary(agent, map);
        if !dev.is_identity() && !out.contains(&dev) {
            out.push(dev);
        }
    }
    out
}
