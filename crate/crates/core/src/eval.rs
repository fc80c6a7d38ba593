//! Exact dynamic-programming evaluation of joint policies.
//!
//! Steps are 0-based internally: `h = 0..H`, with the terminal value
//! `V_H = 0`. Averaged quantities divide by `H`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::{
    induced_time_indexed, AgentDeviations, Deviation, DeviationClass, JointPolicy, MarkovGame,
    MediatorPolicy, TimeIndexedPolicy, PROB_TOL,
};

/// Ties in argmax within this margin keep the earlier (or identity) choice.
pub const TIE_TOL: f64 = 1e-12;

/// Default cap on the number of stationary deviations the brute-force mode
/// will enumerate.
pub const DEFAULT_ENUMERATION_CAP: u128 = 1 << 22;

/// State distributions and occupancy measures of a joint policy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OccupancyBundle {
    /// `d_h(s)`, one row per step.
    pub step_states: Vec<Vec<f64>>,
    /// `d(s) = (1/H) sum_h d_h(s)`.
    pub states: Vec<f64>,
    /// `rho_h(s, a)`.
    pub step_occupancy: Vec<Vec<Vec<f64>>>,
    /// `rho(s, a) = (1/H) sum_h rho_h(s, a)`.
    pub occupancy: Vec<Vec<f64>>,
}

/// Per-step state distributions by forward recursion.
pub fn step_state_distributions<P: JointPolicy + ?Sized>(
    game: &MarkovGame,
    pi: &P,
) -> Vec<Vec<f64>> {
    let n = game.num_states();
    let mut out = Vec::with_capacity(game.horizon);
    let mut d = game.initial_dist.clone();
    for h in 0..game.horizon {
        let mut next = vec![0.0; n];
        if h + 1 < game.horizon {
            for (s, &ds) in d.iter().enumerate() {
                if ds == 0.0 {
                    continue;
                }
                for (a, &p) in pi.row(h, s).iter().enumerate() {
                    let w = ds * p;
                    if w == 0.0 {
                        continue;
                    }
                    for (t, &q) in game.transitions[s][a].iter().enumerate() {
                        next[t] += w * q;
                    }
                }
            }
        }
        out.push(std::mem::replace(&mut d, next));
    }
    out
}

/// Averaged state distribution `d^pi`.
pub fn state_distribution<P: JointPolicy + ?Sized>(game: &MarkovGame, pi: &P) -> Vec<f64> {
    average_rows(&step_state_distributions(game, pi), game.horizon)
}

fn average_rows(rows: &[Vec<f64>], horizon: usize) -> Vec<f64> {
    let mut avg = vec![0.0; rows.first().map_or(0, Vec::len)];
    for row in rows {
        for (acc, x) in avg.iter_mut().zip(row) {
            *acc += x;
        }
    }
    avg.iter_mut().for_each(|x| *x /= horizon as f64);
    avg
}

pub fn occupancy_bundle<P: JointPolicy + ?Sized>(game: &MarkovGame, pi: &P) -> OccupancyBundle {
    let step_states = step_state_distributions(game, pi);
    let step_occupancy: Vec<Vec<Vec<f64>>> = step_states
        .iter()
        .enumerate()
        .map(|(h, d)| {
            d.iter()
                .enumerate()
                .map(|(s, &ds)| pi.row(h, s).iter().map(|p| ds * p).collect())
                .collect()
        })
        .collect();
    let n = game.num_states();
    let m = game.num_joint_actions();
    let mut occupancy = vec![vec![0.0; m]; n];
    for layer in &step_occupancy {
        for (acc_row, row) in occupancy.iter_mut().zip(layer) {
            for (acc, x) in acc_row.iter_mut().zip(row) {
                *acc += x;
            }
        }
    }
    let hf = game.horizon as f64;
    occupancy.iter_mut().flatten().for_each(|x| *x /= hf);
    OccupancyBundle {
        states: average_rows(&step_states, game.horizon),
        step_states,
        step_occupancy,
        occupancy,
    }
}

/// Q, V and advantage tables of one agent, indexed `[h][s]` / `[h][s][a]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValueTables {
    pub q: Vec<Vec<Vec<f64>>>,
    pub v: Vec<Vec<f64>>,
    pub advantage: Vec<Vec<Vec<f64>>>,
}

impl ValueTables {
    pub fn max_abs_advantage(&self) -> f64 {
        self.advantage
            .iter()
            .flatten()
            .flatten()
            .fold(0.0, |m, a| m.max(a.abs()))
    }
}

/// Backward recursion for `Q_h`, `V_h` and `A_h = Q_h - V_h` under `reward[s][a]`.
pub fn value_tables_with_reward<P: JointPolicy + ?Sized>(
    game: &MarkovGame,
    pi: &P,
    reward: &[Vec<f64>],
) -> ValueTables {
    let n = game.num_states();
    let hz = game.horizon;
    let mut q = vec![Vec::new(); hz];
    let mut v = vec![Vec::new(); hz];
    let mut next_v = vec![0.0; n];
    for h in (0..hz).rev() {
        let qh: Vec<Vec<f64>> = (0..n)
            .map(|s| {
                reward[s]
                    .iter()
                    .zip(&game.transitions[s])
                    .map(|(r, row)| r + dot(row, &next_v))
                    .collect()
            })
            .collect();
        let vh: Vec<f64> = (0..n).map(|s| dot(pi.row(h, s), &qh[s])).collect();
        next_v.clone_from(&vh);
        q[h] = qh;
        v[h] = vh;
    }
    let advantage = q
        .iter()
        .zip(&v)
        .map(|(qh, vh)| {
            qh.iter()
                .zip(vh)
                .map(|(row, vs)| row.iter().map(|x| x - vs).collect())
                .collect()
        })
        .collect();
    ValueTables { q, v, advantage }
}

pub fn advantage_tensor<P: JointPolicy + ?Sized>(
    game: &MarkovGame,
    pi: &P,
    agent: usize,
) -> ValueTables {
    value_tables_with_reward(game, pi, &game.rewards[agent])
}

/// Expected H-step return under `reward[s][a]`.
pub fn value_with_reward<P: JointPolicy + ?Sized>(
    game: &MarkovGame,
    pi: &P,
    reward: &[Vec<f64>],
) -> f64 {
    let n = game.num_states();
    let mut v = vec![0.0; n];
    for h in (0..game.horizon).rev() {
        v = (0..n)
            .map(|s| {
                pi.row(h, s)
                    .iter()
                    .enumerate()
                    .filter(|(_, &p)| p != 0.0)
                    .map(|(a, &p)| p * (reward[s][a] + dot(&game.transitions[s][a], &v)))
                    .sum()
            })
            .collect();
    }
    dot(&game.initial_dist, &v)
}

/// `J_i(pi)`.
pub fn value<P: JointPolicy + ?Sized>(game: &MarkovGame, pi: &P, agent: usize) -> f64 {
    value_with_reward(game, pi, &game.rewards[agent])
}

pub fn values<P: JointPolicy + ?Sized>(game: &MarkovGame, pi: &P) -> Vec<f64> {
    (0..game.num_agents).map(|i| value(game, pi, i)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Best deviation found for one agent, with its value gain over obedience.
#[derive(Debug, Clone, PartialEq)]
pub struct BestResponse {
    pub agent: usize,
    pub deviation: Deviation,
    /// `J_i(pi_sigma)`.
    pub base_value: f64,
    /// `J_i(pi_{sigma, phi*})`.
    pub deviated_value: f64,
    pub gain: f64,
}

/// Optimal time-indexed deviation for `agent` against `sigma`.
///
/// At step `h` in state `s` the agent sees its own recommendation `a_i`,
/// forms the conditional belief over the others' recommendations, and picks
/// the action maximizing expected reward-to-go. Unreached recommendations
/// and ties keep the identity.
pub fn best_response_deviation(
    game: &MarkovGame,
    sigma: &MediatorPolicy,
    agent: usize,
) -> Result<BestResponse> {
    sigma.check(game)?;
    if agent >= game.num_agents {
        return Err(Error::InvalidArgument(format!(
            "agent {agent} out of range"
        )));
    }
    let space = game.joint_space();
    let n = game.num_states();
    let n_own = game.num_actions(agent);
    let reward = &game.rewards[agent];
    let mut map = vec![vec![vec![0usize; n_own]; n]; game.horizon];
    let mut w_next = vec![0.0; n];
    for h in (0..game.horizon).rev() {
        let mut w = vec![0.0; n];
        for s in 0..n {
            let cont: Vec<f64> = reward[s]
                .iter()
                .zip(&game.transitions[s])
                .map(|(r, row)| r + dot(row, &w_next))
                .collect();
            // value[a][b]: recommended a, played b
            let mut val = vec![vec![0.0; n_own]; n_own];
            for (joint, &p) in sigma.table[s].iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                let a = space.component(joint, agent);
                for (b, slot) in val[a].iter_mut().enumerate() {
                    *slot += p * cont[space.replace(joint, agent, b)];
                }
            }
            for a in 0..n_own {
                let mut best = a;
                for b in 0..n_own {
                    if val[a][b] > val[a][best] + TIE_TOL {
                        best = b;
                    }
                }
                map[h][s][a] = best;
                w[s] += val[a][best];
            }
        }
        w_next = w;
    }
    let deviation = Deviation::time_indexed(agent, map);
    let induced = induced_time_indexed(game, sigma, &deviation)?;
    let base_value = value(game, sigma, agent);
    let deviated_value = value(game, &induced, agent);
    Ok(BestResponse {
        agent,
        deviation,
        base_value,
        deviated_value,
        gain: deviated_value - base_value,
    })
}

/// Number of stationary deviations `|A_i|^(|S| |A_i|)`, saturating.
pub fn stationary_deviation_count(game: &MarkovGame, agent: usize) -> u128 {
    let k = game.num_actions(agent) as u128;
    let digits = (game.num_states() * game.num_actions(agent)) as u32;
    k.checked_pow(digits).unwrap_or(u128::MAX)
}

/// Best stationary deviation by exhaustive enumeration of every map
/// `S x A_i -> A_i`. Exponential; refuses instances above `cap` maps.
pub fn stationary_best_deviation(
    game: &MarkovGame,
    sigma: &MediatorPolicy,
    agent: usize,
    cap: u128,
) -> Result<BestResponse> {
    sigma.check(game)?;
    let count = stationary_deviation_count(game, agent);
    if count > cap {
        return Err(Error::CapExceeded {
            what: "stationary deviation enumeration",
            size: count,
            cap,
        });
    }
    let base_value = value(game, sigma, agent);
    let mut best: Option<(f64, Deviation)> = None;
    for_each_stationary_map(game.num_states(), game.num_actions(agent), |map| {
        let dev = Deviation::stationary(agent, map.to_vec());
        let induced = crate::game::induced_joint_policy(game, sigma, &dev)
            .expect("enumerated deviation matches game shape");
        let v = value(game, &induced, agent);
        let better = match &best {
            None => true,
            Some((bv, _)) => v > *bv + TIE_TOL,
        };
        if better {
            best = Some((v, dev));
        }
    });
    let (deviated_value, deviation) = best.expect("at least the identity is enumerated");
    Ok(BestResponse {
        agent,
        deviation,
        base_value,
        deviated_value,
        gain: deviated_value - base_value,
    })
}

/// Calls `f` on every map `[state][own] -> own`, identity first.
pub fn for_each_stationary_map(
    num_states: usize,
    num_actions: usize,
    mut f: impl FnMut(&[Vec<usize>]),
) {
    // odometer digits are offsets from identity so the first map is the identity
    let mut offsets = vec![vec![0usize; num_actions]; num_states];
    let mut map: Vec<Vec<usize>> = vec![(0..num_actions).collect(); num_states];
    loop {
        f(&map);
        let mut carried = true;
        'outer: for s in 0..num_states {
            for a in 0..num_actions {
                offsets[s][a] += 1;
                if offsets[s][a] == num_actions {
                    offsets[s][a] = 0;
                    map[s][a] = a;
                } else {
                    map[s][a] = (a + offsets[s][a]) % num_actions;
                    carried = false;
                    break 'outer;
                }
            }
        }
        if carried {
            return;
        }
    }
}

/// Which deviation a gain entry refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviationRef {
    /// Index into the agent's explicit list.
    Explicit(usize),
    /// The time-indexed best response over the complete class.
    BestResponse,
}

impl std::fmt::Display for DeviationRef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DeviationRef::Explicit(k) => write!(f, "{k}"),
            DeviationRef::BestResponse => write!(f, "complete"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviationGain {
    pub agent: usize,
    pub deviation: DeviationRef,
    pub gain: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegretReport {
    pub regret: f64,
    /// Maximizing (agent, deviation) after tie-breaking.
    pub argmax: (usize, DeviationRef),
    pub gains: Vec<DeviationGain>,
    /// Best responses for agents with complete classes.
    pub best_responses: Vec<Option<BestResponse>>,
    /// False when a complete class was resolved by the time-indexed DP on a
    /// game that is not time-layered; the regret is then an upper bound on
    /// the stationary-deviation regret.
    pub stationary_exact: bool,
}

/// `R_Phi(sigma) = max_i max_{phi in Phi_i} J_i(pi_{sigma,phi}) - J_i(pi_sigma)`.
pub fn regret_report(
    game: &MarkovGame,
    sigma: &MediatorPolicy,
    class: &DeviationClass,
) -> Result<RegretReport> {
    class.check(game)?;
    sigma.check(game)?;
    let layered = game.is_time_layered();
    let mut gains = Vec::new();
    let mut best_responses = vec![None; game.num_agents];
    let mut stationary_exact = true;
    for (i, set) in class.per_agent.iter().enumerate() {
        match set {
            AgentDeviations::Explicit(devs) => {
                let base = value(game, sigma, i);
                for (k, dev) in devs.iter().enumerate() {
                    let gain = if dev.is_identity() {
                        0.0
                    } else {
                        let induced = induced_time_indexed(game, sigma, dev)?;
                        value(game, &induced, i) - base
                    };
                    gains.push(DeviationGain {
                        agent: i,
                        deviation: DeviationRef::Explicit(k),
                        gain,
                    });
                }
            }
            AgentDeviations::Complete => {
                let br = best_response_deviation(game, sigma, i)?;
                gains.push(DeviationGain {
                    agent: i,
                    deviation: DeviationRef::BestResponse,
                    gain: br.gain,
                });
                stationary_exact &= layered;
                best_responses[i] = Some(br);
            }
        }
    }
    let identity_flags: Vec<bool> = gains
        .iter()
        .map(|g| match g.deviation {
            DeviationRef::Explicit(k) => match &class.per_agent[g.agent] {
                AgentDeviations::Explicit(devs) => devs[k].is_identity(),
                AgentDeviations::Complete => false,
            },
            DeviationRef::BestResponse => best_responses[g.agent]
                .as_ref()
                .is_some_and(|b| b.deviation.is_identity()),
        })
        .collect();
    let mut best = 0;
    for (idx, g) in gains.iter().enumerate().skip(1) {
        let cur = gains[best].gain;
        if g.gain > cur || (g.gain == cur && identity_flags[idx] && !identity_flags[best]) {
            best = idx;
        }
    }
    Ok(RegretReport {
        regret: gains[best].gain,
        argmax: (gains[best].agent, gains[best].deviation),
        gains,
        best_responses,
        stationary_exact,
    })
}

pub fn regret(game: &MarkovGame, sigma: &MediatorPolicy, class: &DeviationClass) -> Result<f64> {
    Ok(regret_report(game, sigma, class)?.regret)
}

/// `max_i J_i(pi_{sigma_E}) - J_i(pi_sigma)`.
pub fn value_gap(game: &MarkovGame, expert: &MediatorPolicy, learner: &MediatorPolicy) -> f64 {
    (0..game.num_agents)
        .map(|i| value(game, expert, i) - value(game, learner, i))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `R_Phi(sigma) - R_Phi(sigma_E)`.
pub fn regret_gap(
    game: &MarkovGame,
    expert: &MediatorPolicy,
    learner: &MediatorPolicy,
    class: &DeviationClass,
) -> Result<f64> {
    Ok(regret(game, learner, class)? - regret(game, expert, class)?)
}

/// Whether `sigma` induces an `eps`-approximate correlated equilibrium.
pub fn is_approx_ce(
    game: &MarkovGame,
    sigma: &MediatorPolicy,
    class: &DeviationClass,
    eps: f64,
) -> Result<bool> {
    if eps < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "eps must be >= 0, got {eps}"
        )));
    }
    Ok(regret(game, sigma, class)? <= eps)
}

/// Supremum over rewards `S x A -> [-1, 1]` of the expected-return difference.
/// Normalized mode gives the L1 distance between averaged occupancies;
/// unnormalized mode multiplies by H.
pub fn moment_matching_error<P: JointPolicy + ?Sized, Q: JointPolicy + ?Sized>(
    game: &MarkovGame,
    expert: &P,
    learner: &Q,
    normalized: bool,
) -> f64 {
    let e = occupancy_bundle(game, expert).occupancy;
    let l = occupancy_bundle(game, learner).occupancy;
    let l1 = occupancy_l1(&e, &l);
    if normalized {
        l1
    } else {
        l1 * game.horizon as f64
    }
}

pub fn occupancy_l1(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| (x - y).abs())
        .sum()
}

pub fn tv_distance(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// `sum_s w(s) TV(target(s), sigma(s))`.
pub fn weighted_tv_loss(
    target: &MediatorPolicy,
    sigma: &MediatorPolicy,
    weights: &[f64],
) -> Result<f64> {
    if weights.len() != target.num_states() || sigma.num_states() != target.num_states() {
        return Err(Error::Shape(
            "weights, target and policy must cover the same states".into(),
        ));
    }
    crate::game::check_distribution(weights)
        .map_err(|msg| Error::InvalidArgument(format!("weights: {msg}")))?;
    Ok(weights
        .iter()
        .zip(target.table.iter().zip(&sigma.table))
        .filter(|(w, _)| **w > 0.0)
        .map(|(w, (t, s))| w * tv_distance(t, s))
        .sum())
}

/// `beta = min_s d^{pi_{sigma_E}}(s)` on the averaged distribution.
pub fn coverage_constant(game: &MarkovGame, expert: &MediatorPolicy) -> f64 {
    state_distribution(game, expert)
        .into_iter()
        .fold(f64::INFINITY, f64::min)
}

/// `min_s max_h d_h(s)`: per-step coverage, matching the averaged constant
/// up to the factor H on time-layered games.
pub fn layer_coverage(game: &MarkovGame, expert: &MediatorPolicy) -> f64 {
    let steps = step_state_distributions(game, expert);
    (0..game.num_states())
        .map(|s| steps.iter().map(|d| d[s]).fold(0.0, f64::max))
        .fold(f64::INFINITY, f64::min)
}

/// How complete deviation classes are resolved when computing `u`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecoverabilityMode {
    /// Identity plus each agent's time-indexed best response.
    BestResponse,
    /// Every stationary map, up to `cap` maps per agent.
    Exhaustive { cap: u128 },
}

/// `u = max |A_{i,h}^{pi_{sigma_E, phi_i}}(s, a)|` over the class.
pub fn recoverability_constant(
    game: &MarkovGame,
    expert: &MediatorPolicy,
    class: &DeviationClass,
    mode: RecoverabilityMode,
) -> Result<f64> {
    class.check(game)?;
    expert.check(game)?;
    let mut u: f64 = 0.0;
    let mut consider = |dev: &Deviation| -> Result<()> {
        let induced = induced_time_indexed(game, expert, dev)?;
        u = u.max(advantage_tensor(game, &induced, dev.agent()).max_abs_advantage());
        Ok(())
    };
    for (i, set) in class.per_agent.iter().enumerate() {
        match set {
            AgentDeviations::Explicit(devs) => devs.iter().try_for_each(&mut consider)?,
            AgentDeviations::Complete => match mode {
                RecoverabilityMode::BestResponse => {
                    consider(&Deviation::identity(
                        i,
                        game.num_states(),
                        game.num_actions(i),
                    ))?;
                    consider(&best_response_deviation(game, expert, i)?.deviation)?;
                }
                RecoverabilityMode::Exhaustive { cap } => {
                    let count = stationary_deviation_count(game, i);
                    if count > cap {
                        return Err(Error::CapExceeded {
                            what: "stationary deviation enumeration",
                            size: count,
                            cap,
                        });
                    }
                    let mut result = Ok(());
                    for_each_stationary_map(game.num_states(), game.num_actions(i), |map| {
                        if result.is_ok() {
                            result = consider(&Deviation::stationary(i, map.to_vec()));
                        }
                    });
                    result?;
                }
            },
        }
    }
    Ok(u)
}

/// Full evaluation of a learner against an expert.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    /// Learner values `J_i(pi_sigma)`.
    pub values: Vec<f64>,
    pub expert_values: Vec<f64>,
    /// Learner regret.
    pub regret: f64,
    pub expert_regret: f64,
    pub value_gap: f64,
    pub regret_gap: f64,
    pub beta: f64,
    pub u: f64,
    /// Normalized moment-matching error.
    pub moment_error: f64,
    /// Learner per-deviation gains.
    pub per_deviation_gains: Vec<DeviationGain>,
    pub expert_per_deviation_gains: Vec<DeviationGain>,
    /// False when a complete class was evaluated on a non-layered game.
    pub regret_exact: bool,
    /// Learner Q/V/A tables per agent, when requested.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tables: Option<Vec<ValueTables>>,
}

pub fn evaluate(
    game: &MarkovGame,
    expert: &MediatorPolicy,
    learner: &MediatorPolicy,
    class: &DeviationClass,
    with_tables: bool,
) -> Result<EvalReport> {
    let learner_regret = regret_report(game, learner, class)?;
    let expert_regret = regret_report(game, expert, class)?;
    let tables = with_tables.then(|| {
        (0..game.num_agents)
            .map(|i| advantage_tensor(game, learner, i))
            .collect()
    });
    Ok(EvalReport {
        values: values(game, learner),
        expert_values: values(game, expert),
        regret: learner_regret.regret,
        expert_regret: expert_regret.regret,
        value_gap: value_gap(game, expert, learner),
        regret_gap: learner_regret.regret - expert_regret.regret,
        beta: coverage_constant(game, expert),
        u: recoverability_constant(game, expert, class, RecoverabilityMode::BestResponse)?,
        moment_error: moment_matching_error(game, expert, learner, true),
        regret_exact: learner_regret.stationary_exact && expert_regret.stationary_exact,
        per_deviation_gains: learner_regret.gains,
        expert_per_deviation_gains: expert_regret.gains,
        tables,
    })
}

/// Checks that every `rho_h` sums to one.
pub fn occupancy_is_normalized(bundle: &OccupancyBundle) -> bool {
    bundle
        .step_occupancy
        .iter()
        .all(|layer| (layer.iter().flatten().sum::<f64>() - 1.0).abs() <= PROB_TOL * 10.0)
}

/// Deviated policy as a time-indexed table, for callers that only hold a
/// deviation and need repeated evaluation.
pub fn deviated_policy(
    game: &MarkovGame,
    sigma: &MediatorPolicy,
    dev: &Deviation,
) -> Result<TimeIndexedPolicy> {
    induced_time_indexed(game, sigma, dev)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nfg(payoff: [[f64; 2]; 2]) -> MarkovGame {
        let r: Vec<f64> = payoff.iter().flatten().copied().collect();
        MarkovGame {
            horizon: 1,
            num_agents: 2,
            states: vec!["s".into()],
            action_sets: vec![vec!["a1".into(), "a2".into()]; 2],
            initial_dist: vec![1.0],
            transitions: vec![vec![vec![1.0]; 4]],
            rewards: vec![vec![r.clone()], vec![r]],
        }
    }

    #[test]
    fn horizon_one_distribution_is_initial() {
        let g = nfg([[1.0, 0.0], [0.0, 1.0]]);
        let b = occupancy_bundle(&g, &MediatorPolicy::uniform(1, 4));
        assert_eq!(b.step_states, vec![vec![1.0]]);
        assert!(occupancy_is_normalized(&b));
    }

    #[test]
    fn zero_rewards_zero_value() {
        let g = nfg([[0.0, 0.0], [0.0, 0.0]]);
        assert_eq!(value(&g, &MediatorPolicy::uniform(1, 4), 0), 0.0);
    }

    #[test]
    fn identity_only_class_has_zero_regret() {
        let g = nfg([[1.0, 0.0], [0.0, 2.0 / 2.0]]);
        let sigma = MediatorPolicy::new(vec![vec![0.0, 1.0, 0.0, 0.0]]);
        let class = DeviationClass::identities(&g);
        assert_eq!(regret(&g, &sigma, &class).unwrap(), 0.0);
        assert!(is_approx_ce(&g, &sigma, &class, 0.0).unwrap());
    }

    #[test]
    fn best_response_on_miscoordination() {
        // told (a1, a2): agent 0 gains 1 by switching to a2
        let g = nfg([[1.0, 0.0], [0.0, 1.0]]);
        let sigma = MediatorPolicy::new(vec![vec![0.0, 1.0, 0.0, 0.0]]);
        let br = best_response_deviation(&g, &sigma, 0).unwrap();
        assert!((br.gain - 1.0).abs() < 1e-15);
        assert_eq!(br.deviation.apply(0, 0, 0), 1);
    }

    #[test]
    fn best_response_keeps_identity_when_already_optimal() {
        let g = nfg([[1.0, 0.0], [0.0, 1.0]]);
        let sigma = MediatorPolicy::new(vec![vec![1.0, 0.0, 0.0, 0.0]]);
        let br = best_response_deviation(&g, &sigma, 1).unwrap();
        assert_eq!(br.gain, 0.0);
        assert!(br.deviation.is_identity());
    }

    #[test]
    fn stationary_enumeration_matches_dp_on_nfg() {
        let g = nfg([[0.3, -0.2], [0.9, 0.1]]);
        let sigma = MediatorPolicy::new(vec![vec![0.1, 0.4, 0.2, 0.3]]);
        for i in 0..2 {
            let dp = best_response_deviation(&g, &sigma, i).unwrap();
            let bf = stationary_best_deviation(&g, &sigma, i, 1 << 10).unwrap();
            assert!((dp.gain - bf.gain).abs() < 1e-12);
        }
    }

    #[test]
    fn enumeration_cap_enforced() {
        let g = nfg([[0.0; 2]; 2]);
        let sigma = MediatorPolicy::uniform(1, 4);
        assert!(matches!(
            stationary_best_deviation(&g, &sigma, 0, 2),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn stationary_maps_enumerated_once_each() {
        let mut seen = std::collections::HashSet::new();
        let mut first = None;
        for_each_stationary_map(2, 2, |m| {
            first.get_or_insert_with(|| m.to_vec());
            assert!(seen.insert(m.to_vec()));
        });
        assert_eq!(seen.len(), 16);
        assert_eq!(first.unwrap(), vec![vec![0, 1], vec![0, 1]]);
    }

    #[test]
    fn weighted_tv_extremes() {
        let a = MediatorPolicy::new(vec![vec![1.0, 0.0], vec![0.5, 0.5]]);
        let b = MediatorPolicy::new(vec![vec![0.0, 1.0], vec![0.5, 0.5]]);
        assert_eq!(weighted_tv_loss(&a, &a, &[0.5, 0.5]).unwrap(), 0.0);
        assert_eq!(weighted_tv_loss(&a, &b, &[1.0, 0.0]).unwrap(), 1.0);
        assert!(weighted_tv_loss(&a, &b, &[0.7, 0.7]).is_err());
    }

    #[test]
    fn empty_explicit_class_is_an_error() {
        let g = nfg([[0.0; 2]; 2]);
        let class = DeviationClass {
            per_agent: vec![AgentDeviations::Explicit(vec![]), AgentDeviations::Complete],
        };
        let sigma = MediatorPolicy::uniform(1, 4);
        assert!(
            recoverability_constant(&g, &sigma, &class, RecoverabilityMode::BestResponse).is_err()
        );
    }

    #[test]
    fn zero_reward_game_is_zero_recoverable() {
        let g = nfg([[0.0; 2]; 2]);
        let sigma = MediatorPolicy::uniform(1, 4);
        let u = recoverability_constant(
            &g,
            &sigma,
            &DeviationClass::complete(2),
            RecoverabilityMode::Exhaustive { cap: 1 << 10 },
        )
        .unwrap();
        assert_eq!(u, 0.0);
    }

    #[test]
    fn single_state_coverage_is_one() {
        let g = nfg([[0.0; 2]; 2]);
        assert_eq!(coverage_constant(&g, &MediatorPolicy::uniform(1, 4)), 1.0);
    }
}
