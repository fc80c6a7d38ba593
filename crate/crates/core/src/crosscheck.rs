//! Brute-force oracles used to cross-check the dynamic-programming paths.
//! Everything here is exponential in some size and refuses to run past a cap.

use crate::error::{Error, Result};
use crate::game::{JointPolicy, MarkovGame, MediatorPolicy};
use crate::losses::CompositeMaxLoss;
use crate::sampling::{rng_from_seed, sample_trajectory_with};

/// Per-step occupancies `rho_h(s, a)` by summing over every trajectory
/// prefix with positive probability.
pub fn path_enumeration_occupancy<P: JointPolicy + ?Sized>(
    game: &MarkovGame,
    pi: &P,
    cap: usize,
) -> Result<Vec<Vec<Vec<f64>>>> {
    let n = game.num_states();
    let m = game.num_joint_actions();
    let mut rho = vec![vec![vec![0.0; m]; n]; game.horizon];
    // (state, probability of the prefix reaching it)
    let mut frontier: Vec<(usize, f64)> = game
        .initial_dist
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > 0.0)
        .map(|(s, &p)| (s, p))
        .collect();
    let mut visited = 0usize;
    for h in 0..game.horizon {
        let mut next = Vec::new();
        for &(s, p) in &frontier {
            for (a, &q) in pi.row(h, s).iter().enumerate() {
                if q == 0.0 {
                    continue;
                }
                rho[h][s][a] += p * q;
                if h + 1 == game.horizon {
                    continue;
                }
                for (t, &r) in game.transitions[s][a].iter().enumerate() {
                    if r > 0.0 {
                        next.push((t, p * q * r));
                    }
                }
            }
        }
        visited += next.len();
        if visited > cap {
            return Err(Error::CapExceeded {
                what: "trajectory enumeration",
                size: visited as u128,
                cap: cap as u128,
            });
        }
        frontier = next;
    }
    Ok(rho)
}

/// Every map `A_i -> A_i`, as lookup tables.
fn local_maps(k: usize) -> Vec<Vec<usize>> {
    let total = k.pow(k as u32);
    (0..total)
        .map(|mut code| {
            (0..k)
                .map(|_| {
                    let d = code % k;
                    code /= k;
                    d
                })
                .collect()
        })
        .collect()
}

struct LocalEffect {
    reward: f64,
    next: Vec<f64>,
}

/// Largest gain of `agent` over all stationary deviations against `sigma`
/// on a time-layered game, by enumeration.
///
/// Maps on every layer but the last are enumerated jointly; on the last
/// layer each state's choice only affects its own reward, so those are
/// maximized state by state. States without mass are skipped since their
/// map cannot change the value.
pub fn layered_stationary_best_gain(
    game: &MarkovGame,
    sigma: &MediatorPolicy,
    agent: usize,
    cap: u128,
) -> Result<f64> {
    sigma.check(game)?;
    let layers = game
        .state_layers()
        .ok_or_else(|| Error::InvalidArgument("game is not time-layered".into()))?;
    let k = game.num_actions(agent);
    let maps = local_maps(k);
    let space = game.joint_space();
    let per_layer: Vec<Vec<usize>> = (0..game.horizon)
        .map(|h| {
            (0..game.num_states())
                .filter(|&s| layers[s] == Some(h))
                .collect()
        })
        .collect();
    let mut size: u128 = 1;
    for layer in per_layer.iter().take(game.horizon.saturating_sub(1)) {
        for _ in layer {
            size = size.saturating_mul(maps.len() as u128);
        }
    }
    if size > cap {
        return Err(Error::CapExceeded {
            what: "layered stationary enumeration",
            size,
            cap,
        });
    }
    let effects: Vec<Vec<LocalEffect>> = (0..game.num_states())
        .map(|s| {
            maps.iter()
                .map(|map| {
                    let mut row = vec![0.0; space.len()];
                    for (joint, &p) in sigma.table[s].iter().enumerate() {
                        let played = map[space.component(joint, agent)];
                        row[space.replace(joint, agent, played)] += p;
                    }
                    let reward = row
                        .iter()
                        .zip(&game.rewards[agent][s])
                        .map(|(p, r)| p * r)
                        .sum();
                    let mut next = vec![0.0; game.num_states()];
                    for (a, &p) in row.iter().enumerate() {
                        for (t, &q) in game.transitions[s][a].iter().enumerate() {
                            next[t] += p * q;
                        }
                    }
                    LocalEffect { reward, next }
                })
                .collect()
        })
        .collect();
    let identity = (0..k).fold(0, |code, a| code + a * k.pow(a as u32));
    let best = explore(&per_layer, &effects, 0, &game.initial_dist, None);
    let base = explore(&per_layer, &effects, 0, &game.initial_dist, Some(identity));
    Ok(best - base)
}

/// Optimal (or, with `fixed`, that map everywhere) value from layer `h` on.
fn explore(
    layers: &[Vec<usize>],
    effects: &[Vec<LocalEffect>],
    h: usize,
    dist: &[f64],
    fixed: Option<usize>,
) -> f64 {
    let active: Vec<usize> = layers[h]
        .iter()
        .copied()
        .filter(|&s| dist[s] > 0.0)
        .collect();
    let choices = |s: usize| -> Vec<usize> {
        match fixed {
            Some(code) => vec![code],
            None => (0..effects[s].len()).collect(),
        }
    };
    if h + 1 == layers.len() {
        return active
            .iter()
            .map(|&s| {
                let best = choices(s)
                    .into_iter()
                    .map(|c| effects[s][c].reward)
                    .fold(f64::NEG_INFINITY, f64::max);
                dist[s] * best
            })
            .sum();
    }
    let options: Vec<Vec<usize>> = active.iter().map(|&s| choices(s)).collect();
    let mut pick = vec![0usize; active.len()];
    let mut best = f64::NEG_INFINITY;
    loop {
        let mut reward = 0.0;
        let mut next = vec![0.0; dist.len()];
        for (slot, &s) in active.iter().enumerate() {
            let eff = &effects[s][options[slot][pick[slot]]];
            reward += dist[s] * eff.reward;
            for (acc, q) in next.iter_mut().zip(&eff.next) {
                *acc += dist[s] * q;
            }
        }
        best = best.max(reward + explore(layers, effects, h + 1, &next, fixed));
        // odometer
        let mut slot = 0;
        loop {
            if slot == pick.len() {
                return best;
            }
            pick[slot] += 1;
            if pick[slot] < options[slot].len() {
                break;
            }
            pick[slot] = 0;
            slot += 1;
        }
    }
}

/// `max_r |J(pi_1, r) - J(pi_2, r)|` over every sign reward
/// `r: S x A -> {-1, 1}`, with returns from forward simulation of the
/// occupancies.
pub fn sign_reward_moment_gap<P: JointPolicy + ?Sized, Q: JointPolicy + ?Sized>(
    game: &MarkovGame,
    first: &P,
    second: &Q,
    cap: u128,
) -> Result<f64> {
    let n = game.num_states();
    let m = game.num_joint_actions();
    let cells = n * m;
    let size = 1u128.checked_shl(cells as u32).unwrap_or(u128::MAX);
    if size > cap || cells >= 64 {
        return Err(Error::CapExceeded {
            what: "sign reward enumeration",
            size,
            cap,
        });
    }
    let flatten = |rho: Vec<Vec<Vec<f64>>>| -> Vec<f64> {
        let mut out = vec![0.0; cells];
        for layer in rho {
            for (s, row) in layer.into_iter().enumerate() {
                for (a, x) in row.into_iter().enumerate() {
                    out[s * m + a] += x;
                }
            }
        }
        out
    };
    let a = flatten(path_enumeration_occupancy(game, first, usize::MAX)?);
    let b = flatten(path_enumeration_occupancy(game, second, usize::MAX)?);
    let mut best: f64 = 0.0;
    for code in 0..(1u64 << cells) {
        let gap: f64 = (0..cells)
            .map(|c| {
                let sign = if code >> c & 1 == 1 { 1.0 } else { -1.0 };
                sign * (a[c] - b[c])
            })
            .sum();
        best = best.max(gap.abs());
    }
    Ok(best)
}

/// Monte-Carlo estimate of `J_i(pi)` with its standard error.
pub fn monte_carlo_value<P: JointPolicy + ?Sized>(
    game: &MarkovGame,
    pi: &P,
    agent: usize,
    rollouts: usize,
    seed: u64,
) -> (f64, f64) {
    let mut rng = rng_from_seed(seed);
    let returns: Vec<f64> = (0..rollouts)
        .map(|_| {
            sample_trajectory_with(game, pi, &mut rng)
                .steps
                .iter()
                .map(|&(s, a)| game.rewards[agent][s][a])
                .sum()
        })
        .collect();
    let n = rollouts as f64;
    let mean = returns.iter().sum::<f64>() / n;
    let var = returns.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}

/// Smallest cumulative loss of a fixed single-state policy, searched over
/// every grid point `k / resolution` of the simplex (vertices included).
pub fn best_fixed_single_state(losses: &[CompositeMaxLoss], resolution: usize) -> Result<f64> {
    let first = losses
        .first()
        .ok_or_else(|| Error::InvalidArgument("no losses supplied".into()))?;
    let target = first.components()[0].loss.target();
    if target.len() != 1 {
        return Err(Error::InvalidArgument(
            "grid comparator handles single-state losses only".into(),
        ));
    }
    if resolution == 0 {
        return Err(Error::InvalidArgument("resolution must be positive".into()));
    }
    let m = target[0].len();
    let mut best = f64::INFINITY;
    let mut counts = vec![0usize; m];
    grid(&mut counts, 0, resolution, &mut |c| {
        let row: Vec<f64> = c.iter().map(|&x| x as f64 / resolution as f64).collect();
        let sigma = MediatorPolicy::new(vec![row]);
        let total: f64 = losses.iter().map(|l| l.evaluate(&sigma)).sum();
        best = best.min(total);
    });
    Ok(best)
}

fn grid(counts: &mut [usize], idx: usize, left: usize, f: &mut impl FnMut(&[usize])) {
    if idx + 1 == counts.len() {
        counts[idx] = left;
        f(counts);
        return;
    }
    for c in 0..=left {
        counts[idx] = c;
        grid(counts, idx + 1, left - c, f);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::occupancy_bundle;
    use crate::fixtures::fig1_game;

    #[test]
    fn local_maps_cover_all_functions() {
        let maps = local_maps(2);
        assert_eq!(maps, vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![1, 1]]);
        assert_eq!(local_maps(3).len(), 27);
    }

    #[test]
    fn paths_match_forward_recursion_on_fig1() {
        let fx = fig1_game(5).unwrap();
        let rho = path_enumeration_occupancy(&fx.game, &fx.learner, 1 << 20).unwrap();
        assert_eq!(rho, occupancy_bundle(&fx.game, &fx.learner).step_occupancy);
    }

    #[test]
    fn grid_includes_vertices() {
        let mut seen = 0;
        grid(&mut [0; 3], 0, 2, &mut |_| seen += 1);
        assert_eq!(seen, 6);
    }
}
