//! Trajectory and demonstration sampling.
//!
//! All randomness goes through [`Rng`], a ChaCha8 stream seeded with
//! `seed_from_u64`, so a seed reproduces the same draws on every platform.

use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{JointPolicy, MarkovGame};

pub type Rng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives an independent stream seed from a base seed and an index
/// (splitmix64 finalizer).
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Index drawn from the categorical distribution `probs`.
pub fn sample_index(rng: &mut Rng, probs: &[f64]) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last_positive = i;
            if u < acc {
                return i;
            }
        }
    }
    last_positive
}

/// One episode: `steps[h] = (state, joint_action)` for `h = 0..H`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trajectory {
    pub steps: Vec<(usize, usize)>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemonstrationSet {
    pub trajectories: Vec<Trajectory>,
    pub seed: u64,
}

impl DemonstrationSet {
    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    /// Per-state joint-action counts pooled over all steps.
    pub fn counts(&self, num_states: usize, num_joint: usize) -> Vec<Vec<u64>> {
        let mut counts = vec![vec![0u64; num_joint]; num_states];
        for (s, a) in self.trajectories.iter().flat_map(|t| t.steps.iter()) {
            counts[*s][*a] += 1;
        }
        counts
    }

    /// Empirical averaged state distribution.
    pub fn state_frequencies(&self, num_states: usize) -> Vec<f64> {
        let mut freq = vec![0.0; num_states];
        let mut total = 0.0;
        for (s, _) in self.trajectories.iter().flat_map(|t| t.steps.iter()) {
            freq[*s] += 1.0;
            total += 1.0;
        }
        if total > 0.0 {
            freq.iter_mut().for_each(|f| *f /= total);
        }
        freq
    }
}

pub fn sample_trajectory_with<P: JointPolicy + ?Sized>(
    game: &MarkovGame,
    policy: &P,
    rng: &mut Rng,
) -> Trajectory {
    let mut steps = Vec::with_capacity(game.horizon);
    let mut state = sample_index(rng, &game.initial_dist);
    for h in 0..game.horizon {
        let joint = sample_index(rng, policy.row(h, state));
        steps.push((state, joint));
        if h + 1 < game.horizon {
            state = sample_index(rng, &game.transitions[state][joint]);
        }
    }
    Trajectory { steps }
}

/// Length-H trajectory starting from `s_0 ~ rho_0`; deterministic per seed.
pub fn sample_trajectory<P: JointPolicy + ?Sized>(
    game: &MarkovGame,
    policy: &P,
    seed: u64,
) -> Trajectory {
    sample_trajectory_with(game, policy, &mut rng_from_seed(seed))
}

/// `n` i.i.d. trajectories of `policy`.
pub fn sample_demonstrations<P: JointPolicy + ?Sized>(
    game: &MarkovGame,
    policy: &P,
    n: usize,
    seed: u64,
) -> Result<DemonstrationSet> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "demonstration count must be at least 1".into(),
        ));
    }
    let mut rng = rng_from_seed(seed);
    let trajectories = (0..n)
        .map(|_| sample_trajectory_with(game, policy, &mut rng))
        .collect();
    Ok(DemonstrationSet { trajectories, seed })
}

/// Empirical per-step state frequencies `d_h` from `n` rollouts.
pub fn empirical_step_distributions<P: JointPolicy + ?Sized>(
    game: &MarkovGame,
    policy: &P,
    n: usize,
    seed: u64,
) -> Vec<Vec<f64>> {
    let mut freq = vec![vec![0.0; game.num_states()]; game.horizon];
    let mut rng = rng_from_seed(seed);
    for _ in 0..n {
        let traj = sample_trajectory_with(game, policy, &mut rng);
        for (h, (s, _)) in traj.steps.iter().enumerate() {
            freq[h][*s] += 1.0;
        }
    }
    for row in &mut freq {
        row.iter_mut().for_each(|f| *f /= n as f64);
    }
    freq
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::MediatorPolicy;

    fn chain() -> MarkovGame {
        // 0 -> 1 -> 2 deterministic, 2 absorbing
        MarkovGame {
            horizon: 3,
            num_agents: 1,
            states: vec!["a".into(), "b".into(), "c".into()],
            action_sets: vec![vec!["go".into(), "stay".into()]],
            initial_dist: vec![1.0, 0.0, 0.0],
            transitions: vec![
                vec![vec![0.0, 1.0, 0.0], vec![1.0, 0.0, 0.0]],
                vec![vec![0.0, 0.0, 1.0], vec![0.0, 1.0, 0.0]],
                vec![vec![0.0, 0.0, 1.0], vec![0.0, 0.0, 1.0]],
            ],
            rewards: vec![vec![vec![0.0, 0.0]; 3]],
        }
    }

    #[test]
    fn deterministic_chain_trajectory() {
        let game = chain();
        let pi = MediatorPolicy::deterministic(&[0, 0, 0], 2);
        let t = sample_trajectory(&game, &pi, 7);
        assert_eq!(t.steps, vec![(0, 0), (1, 0), (2, 0)]);
    }

    #[test]
    fn same_seed_same_demos() {
        let game = chain();
        let pi = MediatorPolicy::uniform(3, 2);
        let a = sample_demonstrations(&game, &pi, 20, 11).unwrap();
        let b = sample_demonstrations(&game, &pi, 20, 11).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 20);
        assert!(a.trajectories.iter().all(|t| t.len() == 3));
    }

    #[test]
    fn zero_demonstrations_rejected() {
        let game = chain();
        let pi = MediatorPolicy::uniform(3, 2);
        assert!(sample_demonstrations(&game, &pi, 0, 1).is_err());
    }

    #[test]
    fn singleton_forced_demo() {
        let game = chain();
        let pi = MediatorPolicy::deterministic(&[0, 0, 0], 2);
        let d = sample_demonstrations(&game, &pi, 1, 3).unwrap();
        assert_eq!(d.trajectories[0].steps, vec![(0, 0), (1, 0), (2, 0)]);
    }

    #[test]
    fn sample_index_skips_zero_mass() {
        let mut rng = rng_from_seed(0);
        for _ in 0..100 {
            assert_eq!(sample_index(&mut rng, &[0.0, 1.0, 0.0]), 1);
        }
    }

    #[test]
    fn derived_seeds_differ() {
        assert_ne!(derive_seed(1, 0), derive_seed(1, 1));
        assert_eq!(derive_seed(9, 4), derive_seed(9, 4));
    }
}
