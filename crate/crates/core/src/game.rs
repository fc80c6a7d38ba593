//! Markov-game data model: games, mediator policies, per-agent deviations and
//! the joint policies they induce.
//!
//! Joint actions are flattened row-major by agent index: agent 0 is the most
//! significant digit, the last agent varies fastest. For two agents with three
//! actions each, `(a_0, a_1)` maps to `a_0 * 3 + a_1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row sums and the initial distribution must match 1 within this tolerance.
pub const PROB_TOL: f64 = 1e-12;

/// Largest joint-action space accepted by the generators.
pub const MAX_JOINT_ACTIONS: usize = 64;
/// Largest state space accepted by the generators.
pub const MAX_STATES: usize = 200;

/// Finite-horizon Markov game with `num_agents` players.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkovGame {
    pub horizon: usize,
    pub num_agents: usize,
    pub states: Vec<String>,
    /// Per-agent action labels.
    #[serde(rename = "actions")]
    pub action_sets: Vec<Vec<String>>,
    pub initial_dist: Vec<f64>,
    /// `transitions[s][joint][s']`.
    pub transitions: Vec<Vec<Vec<f64>>>,
    /// `rewards[agent][s][joint]`, each in `[-1, 1]`.
    pub rewards: Vec<Vec<Vec<f64>>>,
}

impl MarkovGame {
    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_actions(&self, agent: usize) -> usize {
        self.action_sets[agent].len()
    }

    pub fn num_joint_actions(&self) -> usize {
        self.action_sets.iter().map(Vec::len).product()
    }

    pub fn joint_space(&self) -> JointActionSpace {
        JointActionSpace::new(self.action_sets.iter().map(Vec::len).collect())
    }

    /// Copy of the game with every agent's reward replaced by `reward[s][joint]`.
    pub fn with_common_reward(&self, reward: &[Vec<f64>]) -> MarkovGame {
        let mut game = self.clone();
        game.rewards = vec![reward.to_vec(); self.num_agents];
        game
    }

    /// Sets of states that can carry probability mass at each step (support
    /// reachability, ignoring the policy).
    pub fn reachable_by_step(&self) -> Vec<Vec<bool>> {
        let n = self.num_states();
        let mut layers = Vec::with_capacity(self.horizon);
        let mut current: Vec<bool> = self.initial_dist.iter().map(|&p| p > 0.0).collect();
        for _ in 0..self.horizon {
            let mut next = vec![false; n];
            for (s, _) in current.iter().enumerate().filter(|(_, &on)| on) {
                for row in &self.transitions[s] {
                    for (t, &p) in row.iter().enumerate() {
                        if p > 0.0 {
                            next[t] = true;
                        }
                    }
                }
            }
            layers.push(current);
            current = next;
        }
        layers
    }

    /// True when every state is reachable at no more than one step, so that
    /// stationary and time-indexed policies coincide on reachable play.
    pub fn is_time_layered(&self) -> bool {
        let layers = self.reachable_by_step();
        (0..self.num_states()).all(|s| layers.iter().filter(|l| l[s]).count() <= 1)
    }

    /// Step (0-based) at which each state is reachable, for time-layered games.
    pub fn state_layers(&self) -> Option<Vec<Option<usize>>> {
        let layers = self.reachable_by_step();
        let mut out = vec![None; self.num_states()];
        for (h, layer) in layers.iter().enumerate() {
            for (s, &on) in layer.iter().enumerate() {
                if on {
                    if out[s].is_some() {
                        return None;
                    }
                    out[s] = Some(h);
                }
            }
        }
        Some(out)
    }
}

/// Encoding between per-agent actions and flat joint-action indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointActionSpace {
    sizes: Vec<usize>,
    strides: Vec<usize>,
    total: usize,
}

impl JointActionSpace {
    pub fn new(sizes: Vec<usize>) -> Self {
        let mut strides = vec![1; sizes.len()];
        for i in (0..sizes.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * sizes[i + 1];
        }
        let total = sizes.iter().product();
        Self {
            sizes,
            strides,
            total,
        }
    }

    pub fn len(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn num_agents(&self) -> usize {
        self.sizes.len()
    }

    pub fn agent_actions(&self, agent: usize) -> usize {
        self.sizes[agent]
    }

    pub fn encode(&self, actions: &[usize]) -> usize {
        actions
            .iter()
            .zip(&self.strides)
            .map(|(a, stride)| a * stride)
            .sum()
    }

    pub fn decode(&self, joint: usize) -> Vec<usize> {
        (0..self.sizes.len())
            .map(|i| self.component(joint, i))
            .collect()
    }

    /// Action of `agent` inside `joint`.
    pub fn component(&self, joint: usize, agent: usize) -> usize {
        (joint / self.strides[agent]) % self.sizes[agent]
    }

    /// `joint` with `agent`'s action replaced by `action`.
    pub fn replace(&self, joint: usize, agent: usize, action: usize) -> usize {
        let old = self.component(joint, agent);
        joint - old * self.strides[agent] + action * self.strides[agent]
    }
}

/// Read access to a (possibly time-dependent) joint policy.
pub trait JointPolicy {
    /// Distribution over joint actions at `step` (0-based) in `state`.
    fn row(&self, step: usize, state: usize) -> &[f64];
}

/// Stationary mediator policy `sigma(joint | state)`. Also represents the
/// joint policies induced by obedience or by a stationary deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MediatorPolicy {
    pub table: Vec<Vec<f64>>,
}

impl MediatorPolicy {
    pub fn new(table: Vec<Vec<f64>>) -> Self {
        Self { table }
    }

    pub fn uniform(num_states: usize, num_joint: usize) -> Self {
        Self {
            table: vec![vec![1.0 / num_joint as f64; num_joint]; num_states],
        }
    }

    /// Deterministic policy playing `joint[s]` in every state.
    pub fn deterministic(joint: &[usize], num_joint: usize) -> Self {
        let table = joint
            .iter()
            .map(|&a| {
                let mut row = vec![0.0; num_joint];
                row[a] = 1.0;
                row
            })
            .collect();
        Self { table }
    }

    pub fn num_states(&self) -> usize {
        self.table.len()
    }

    /// Checks shape against `game` and that every row is a distribution.
    pub fn check(&self, game: &MarkovGame) -> Result<()> {
        if self.table.len() != game.num_states() {
            return Err(Error::Shape(format!(
                "policy has {} rows, game has {} states",
                self.table.len(),
                game.num_states()
            )));
        }
        let joint = game.num_joint_actions();
        for (s, row) in self.table.iter().enumerate() {
            if row.len() != joint {
                return Err(Error::Shape(format!(
                    "policy row {s} has {} entries, expected {joint}",
                    row.len()
                )));
            }
            check_distribution(row)
                .map_err(|msg| Error::InvalidArgument(format!("policy row {s}: {msg}")))?;
        }
        Ok(())
    }

    /// Marginal distribution of `agent`'s recommendation in `state`.
    pub fn agent_marginal(&self, space: &JointActionSpace, state: usize, agent: usize) -> Vec<f64> {
        let mut marginal = vec![0.0; space.agent_actions(agent)];
        for (joint, &p) in self.table[state].iter().enumerate() {
            marginal[space.component(joint, agent)] += p;
        }
        marginal
    }
}

impl JointPolicy for MediatorPolicy {
    fn row(&self, _step: usize, state: usize) -> &[f64] {
        &self.table[state]
    }
}

/// One policy table per step.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeIndexedPolicy {
    pub steps: Vec<MediatorPolicy>,
}

impl JointPolicy for TimeIndexedPolicy {
    fn row(&self, step: usize, state: usize) -> &[f64] {
        &self.steps[step].table[state]
    }
}

pub(crate) fn check_distribution(row: &[f64]) -> std::result::Result<(), String> {
    if let Some(bad) = row.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(format!("entry {bad} is negative or not finite"));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > PROB_TOL {
        return Err(format!("row sum {sum} differs from 1"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum DeviationMap {
    /// `map[s][a_i]`.
    Stationary(Vec<Vec<usize>>),
    /// `map[h][s][a_i]`.
    TimeIndexed(Vec<Vec<Vec<usize>>>),
}

/// A swap map `phi_i(s, a_i) -> a_i'` for one agent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Deviation {
    agent: usize,
    map: DeviationMap,
}

impl Deviation {
    pub fn identity(agent: usize, num_states: usize, num_actions: usize) -> Self {
        Self {
            agent,
            map: DeviationMap::Stationary(vec![(0..num_actions).collect(); num_states]),
        }
    }

    /// Stationary deviation from a full `[state][own_action]` table.
    pub fn stationary(agent: usize, map: Vec<Vec<usize>>) -> Self {
        Self {
            agent,
            map: DeviationMap::Stationary(map),
        }
    }

    /// Time-indexed deviation from a full `[step][state][own_action]` table.
    pub fn time_indexed(agent: usize, map: Vec<Vec<Vec<usize>>>) -> Self {
        Self {
            agent,
            map: DeviationMap::TimeIndexed(map),
        }
    }

    /// Identity everywhere except the listed `(state, own, new)` swaps.
    pub fn from_swaps(
        agent: usize,
        num_states: usize,
        num_actions: usize,
        swaps: &[(usize, usize, usize)],
    ) -> Result<Self> {
        let mut map = vec![(0..num_actions).collect::<Vec<_>>(); num_states];
        for &(s, a, b) in swaps {
            if s >= num_states || a >= num_actions || b >= num_actions {
                return Err(Error::InvalidArgument(format!(
                    "swap ({s}, {a}, {b}) out of range for {num_states} states, {num_actions} actions"
                )));
            }
            map[s][a] = b;
        }
        Ok(Self::stationary(agent, map))
    }

    pub fn agent(&self) -> usize {
        self.agent
    }

    pub fn is_stationary(&self) -> bool {
        matches!(self.map, DeviationMap::Stationary(_))
    }

    /// Action actually played when `own` is recommended at (`step`, `state`).
    pub fn apply(&self, step: usize, state: usize, own: usize) -> usize {
        match &self.map {
            DeviationMap::Stationary(m) => m[state][own],
            DeviationMap::TimeIndexed(m) => m[step][state][own],
        }
    }

    pub fn is_identity(&self) -> bool {
        let check = |m: &Vec<Vec<usize>>| {
            m.iter()
                .all(|row| row.iter().enumerate().all(|(a, &b)| a == b))
        };
        match &self.map {
            DeviationMap::Stationary(m) => check(m),
            DeviationMap::TimeIndexed(ms) => ms.iter().all(check),
        }
    }

    /// Non-identity entries as `(step, state, own, new)`; `step` is `None`
    /// for stationary deviations.
    pub fn swaps(&self) -> Vec<(Option<usize>, usize, usize, usize)> {
        let collect = |step: Option<usize>, m: &Vec<Vec<usize>>| {
            m.iter()
                .enumerate()
                .flat_map(|(s, row)| {
                    row.iter()
                        .enumerate()
                        .filter(|(a, b)| a != *b)
                        .map(move |(a, &b)| (step, s, a, b))
                })
                .collect::<Vec<_>>()
        };
        match &self.map {
            DeviationMap::Stationary(m) => collect(None, m),
            DeviationMap::TimeIndexed(ms) => ms
                .iter()
                .enumerate()
                .flat_map(|(h, m)| collect(Some(h), m))
                .collect(),
        }
    }

    /// Checks totality and range against `game`.
    pub fn check(&self, game: &MarkovGame) -> Result<()> {
        if self.agent >= game.num_agents {
            return Err(Error::InvalidArgument(format!(
                "deviation agent {} out of range ({} agents)",
                self.agent, game.num_agents
            )));
        }
        let n_act = game.num_actions(self.agent);
        let check_table = |m: &Vec<Vec<usize>>| -> Result<()> {
            if m.len() != game.num_states() || m.iter().any(|row| row.len() != n_act) {
                return Err(Error::Shape(format!(
                    "deviation map must be {} x {}",
                    game.num_states(),
                    n_act
                )));
            }
            if m.iter().flatten().any(|&b| b >= n_act) {
                return Err(Error::InvalidArgument(
                    "deviation maps outside the agent's action set".into(),
                ));
            }
            Ok(())
        };
        match &self.map {
            DeviationMap::Stationary(m) => check_table(m),
            DeviationMap::TimeIndexed(ms) => {
                if ms.len() != game.horizon {
                    return Err(Error::Shape(format!(
                        "time-indexed deviation has {} steps, horizon is {}",
                        ms.len(),
                        game.horizon
                    )));
                }
                ms.iter().try_for_each(check_table)
            }
        }
    }
}

/// Deviation set for one agent.
#[derive(Debug, Clone, PartialEq)]
pub enum AgentDeviations {
    Explicit(Vec<Deviation>),
    /// Every map `S x A_i -> A_i`.
    Complete,
}

/// Per-agent deviation sets `Phi = {Phi_i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviationClass {
    pub per_agent: Vec<AgentDeviations>,
}

impl DeviationClass {
    pub fn complete(num_agents: usize) -> Self {
        Self {
            per_agent: vec![AgentDeviations::Complete; num_agents],
        }
    }

    /// Only the identity for every agent.
    pub fn identities(game: &MarkovGame) -> Self {
        Self {
            per_agent: (0..game.num_agents)
                .map(|i| {
                    AgentDeviations::Explicit(vec![Deviation::identity(
                        i,
                        game.num_states(),
                        game.num_actions(i),
                    )])
                })
                .collect(),
        }
    }

    /// Explicit class from a flat list; identities are added for every agent
    /// that lacks one.
    pub fn explicit_with_identities(game: &MarkovGame, deviations: Vec<Deviation>) -> Self {
        let mut per_agent: Vec<Vec<Deviation>> = (0..game.num_agents)
            .map(|i| {
                vec![Deviation::identity(
                    i,
                    game.num_states(),
                    game.num_actions(i),
                )]
            })
            .collect();
        for dev in deviations {
            if !dev.is_identity() {
                per_agent[dev.agent()].push(dev);
            }
        }
        Self {
            per_agent: per_agent
                .into_iter()
                .map(AgentDeviations::Explicit)
                .collect(),
        }
    }

    pub fn is_explicit(&self) -> bool {
        self.per_agent
            .iter()
            .all(|d| matches!(d, AgentDeviations::Explicit(_)))
    }

    /// All explicit deviations in (agent, index) order.
    pub fn explicit_deviations(&self) -> Vec<(usize, usize, &Deviation)> {
        let mut out = Vec::new();
        for (i, set) in self.per_agent.iter().enumerate() {
            if let AgentDeviations::Explicit(devs) = set {
                out.extend(devs.iter().enumerate().map(|(k, d)| (i, k, d)));
            }
        }
        out
    }

    pub fn check(&self, game: &MarkovGame) -> Result<()> {
        if self.per_agent.len() != game.num_agents {
            return Err(Error::Shape(format!(
                "deviation class covers {} agents, game has {}",
                self.per_agent.len(),
                game.num_agents
            )));
        }
        for (i, set) in self.per_agent.iter().enumerate() {
            if let AgentDeviations::Explicit(devs) = set {
                if devs.is_empty() {
                    return Err(Error::InvalidArgument(format!(
                        "explicit deviation set for agent {i} is empty"
                    )));
                }
                for dev in devs {
                    dev.check(game)?;
                    if dev.agent() != i {
                        return Err(Error::InvalidArgument(format!(
                            "deviation for agent {} listed under agent {i}",
                            dev.agent()
                        )));
                    }
                }
                if !devs.iter().any(Deviation::is_identity) {
                    return Err(Error::InvalidArgument(format!(
                        "deviation set for agent {i} lacks the identity"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Outcome of [`validate_game`]: empty `violations` means the game is well formed.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_ok() {
            Ok(())
        } else {
            Err(Error::InvalidGame(self.violations.join("; ")))
        }
    }
}

/// Checks every structural and probabilistic invariant of `game`.
pub fn validate_game(game: &MarkovGame) -> ValidationReport {
    let mut v = Vec::new();
    let n = game.num_states();
    if game.horizon == 0 {
        v.push("horizon must be positive".to_string());
    }
    if game.num_agents == 0 {
        v.push("num_agents must be positive".to_string());
    }
    if game.action_sets.len() != game.num_agents {
        v.push(format!(
            "action sets for {} agents, num_agents is {}",
            game.action_sets.len(),
            game.num_agents
        ));
    }
    if game.action_sets.iter().any(Vec::is_empty) {
        v.push("every agent needs at least one action".to_string());
    }
    if n == 0 {
        v.push("state space is empty".to_string());
    }
    let joint = game.num_joint_actions();

    if game.initial_dist.len() != n {
        v.push(format!(
            "initial_dist has {} entries, expected {n}",
            game.initial_dist.len()
        ));
    } else if let Err(msg) = check_distribution(&game.initial_dist) {
        v.push(format!("initial_dist: {msg}"));
    }

    if game.transitions.len() != n {
        v.push(format!(
            "transitions has {} state rows, expected {n}",
            game.transitions.len()
        ));
    } else {
        for (s, rows) in game.transitions.iter().enumerate() {
            if rows.len() != joint {
                v.push(format!(
                    "transitions[{s}] has {} joint actions, expected {joint}",
                    rows.len()
                ));
                continue;
            }
            for (a, row) in rows.iter().enumerate() {
                if row.len() != n {
                    v.push(format!(
                        "transitions[{s}][{a}] has {} entries, expected {n}",
                        row.len()
                    ));
                } else if let Err(msg) = check_distribution(row) {
                    v.push(format!("transitions[{s}][{a}] row sum: {msg}"));
                }
            }
        }
    }

    if game.rewards.len() != game.num_agents {
        v.push(format!(
            "rewards for {} agents, expected {}",
            game.rewards.len(),
            game.num_agents
        ));
    } else {
        for (i, table) in game.rewards.iter().enumerate() {
            if table.len() != n || table.iter().any(|row| row.len() != joint) {
                v.push(format!("rewards[{i}] must be {n} x {joint}"));
                continue;
            }
            if let Some((s, a, r)) = table.iter().enumerate().find_map(|(s, row)| {
                row.iter()
                    .enumerate()
                    .find(|(_, r)| !(-1.0..=1.0).contains(*r))
                    .map(|(a, r)| (s, a, *r))
            }) {
                v.push(format!("rewards[{i}][{s}][{a}] = {r} outside [-1, 1]"));
            }
        }
    }
    ValidationReport { violations: v }
}

/// Joint policy when agent `dev.agent()` passes its recommendations through
/// the stationary map `dev` and everyone else obeys `sigma`. Correlations
/// between agents' recommendations are preserved.
pub fn induced_joint_policy(
    game: &MarkovGame,
    sigma: &MediatorPolicy,
    dev: &Deviation,
) -> Result<MediatorPolicy> {
    if !dev.is_stationary() {
        return Err(Error::InvalidArgument(
            "time-indexed deviation induces a time-indexed policy; use induced_time_indexed".into(),
        ));
    }
    check_shapes(game, sigma, dev)?;
    let space = game.joint_space();
    let table = (0..game.num_states())
        .map(|s| deviate_row(&space, &sigma.table[s], dev, 0, s))
        .collect();
    Ok(MediatorPolicy { table })
}

/// Like [`induced_joint_policy`] but accepts time-indexed deviations.
pub fn induced_time_indexed(
    game: &MarkovGame,
    sigma: &MediatorPolicy,
    dev: &Deviation,
) -> Result<TimeIndexedPolicy> {
    check_shapes(game, sigma, dev)?;
    let space = game.joint_space();
    let steps = (0..game.horizon)
        .map(|h| MediatorPolicy {
            table: (0..game.num_states())
                .map(|s| deviate_row(&space, &sigma.table[s], dev, h, s))
                .collect(),
        })
        .collect();
    Ok(TimeIndexedPolicy { steps })
}

fn check_shapes(game: &MarkovGame, sigma: &MediatorPolicy, dev: &Deviation) -> Result<()> {
    dev.check(game)?;
    if sigma.table.len() != game.num_states()
        || sigma
            .table
            .iter()
            .any(|r| r.len() != game.num_joint_actions())
    {
        return Err(Error::Shape(
            "mediator policy does not match the game's state/joint-action shape".into(),
        ));
    }
    Ok(())
}

pub(crate) fn deviate_row(
    space: &JointActionSpace,
    row: &[f64],
    dev: &Deviation,
    step: usize,
    state: usize,
) -> Vec<f64> {
    let agent = dev.agent();
    let mut out = vec![0.0; row.len()];
    for (joint, &p) in row.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let own = space.component(joint, agent);
        let played = dev.apply(step, state, own);
        out[space.replace(joint, agent, played)] += p;
    }
    out
}
