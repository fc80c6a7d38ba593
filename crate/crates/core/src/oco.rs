//! No-regret online convex optimization over mediator policies.
//!
//! Each round the caller supplies a composite loss built at the current
//! iterate; the engine records its value there and takes one update step.
//! Rows of every iterate stay on the simplex.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::MediatorPolicy;
use crate::losses::{ComponentLabel, CompositeMaxLoss};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OcoRule {
    /// Per-state exponentiated gradient in its lazy form (entropic FTRL
    /// centred at the first iterate): `sigma^(n+1)(s) ~ sigma^(1)(s) *
    /// exp(-eta_(n+1) * sum_k g_k(s))`.
    ExponentiatedGradient,
    /// Euclidean subgradient step followed by projection onto each simplex.
    ProjectedSubgradient,
    /// Best fit to all targets seen so far: every state's row becomes the
    /// weight-averaged target of the achieving components. This is the
    /// exact minimizer of the summed losses whenever targets agree per state.
    FollowTheLeader,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepSchedule {
    /// `scale * sqrt(ln|A| / n)` for exponentiated gradient,
    /// `scale / sqrt(n)` for projected subgradient.
    Anytime {
        scale: f64,
    },
    Constant(f64),
}

impl Default for StepSchedule {
    fn default() -> Self {
        StepSchedule::Anytime { scale: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OcoConfig {
    pub rounds: usize,
    pub rule: OcoRule,
    pub schedule: StepSchedule,
    pub seed: u64,
}

impl OcoConfig {
    pub fn exponentiated(rounds: usize) -> Self {
        Self {
            rounds,
            rule: OcoRule::ExponentiatedGradient,
            schedule: StepSchedule::default(),
            seed: 0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.rounds == 0 {
            return Err(Error::InvalidArgument(
                "OCO needs at least one round".into(),
            ));
        }
        let positive = match self.schedule {
            StepSchedule::Anytime { scale } => scale > 0.0,
            StepSchedule::Constant(eta) => eta > 0.0,
        };
        if !positive {
            return Err(Error::InvalidArgument(
                "learning rates must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn step_size(&self, round: usize, num_joint: usize) -> f64 {
        match (self.schedule, self.rule) {
            (StepSchedule::Constant(eta), _) => eta,
            (StepSchedule::Anytime { scale }, OcoRule::ExponentiatedGradient) => {
                scale * ((num_joint as f64).ln() / round as f64).sqrt()
            }
            (StepSchedule::Anytime { scale }, _) => scale / (round as f64).sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OcoRound {
    /// 1-based round index.
    pub round: usize,
    /// `l^(n)(sigma^(n))`.
    pub loss: f64,
    pub achieving: ComponentLabel,
    pub step_size: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OcoRun {
    /// `sigma^(1..=N)`.
    pub iterates: Vec<MediatorPolicy>,
    pub rounds: Vec<OcoRound>,
    /// Losses built each round, kept so callers can replay the sequence.
    pub losses: Vec<CompositeMaxLoss>,
}

impl OcoRun {
    pub fn average_loss(&self) -> f64 {
        self.rounds.iter().map(|r| r.loss).sum::<f64>() / self.rounds.len() as f64
    }
}

/// Runs `config.rounds` rounds starting from `init`. `build(n, sigma_n)`
/// returns the round-`n` loss.
pub fn oco_run<F>(init: MediatorPolicy, config: &OcoConfig, mut build: F) -> Result<OcoRun>
where
    F: FnMut(usize, &MediatorPolicy) -> Result<CompositeMaxLoss>,
{
    config.validate()?;
    let num_joint = init.table.first().map_or(0, Vec::len);
    let mut ftl = FtlState::new(&init);
    let mut cumulative = vec![vec![0.0; num_joint]; init.num_states()];
    let first = init.clone();
    let mut iterates = Vec::with_capacity(config.rounds);
    let mut rounds = Vec::with_capacity(config.rounds);
    let mut losses = Vec::with_capacity(config.rounds);
    let mut current = init;
    for n in 1..=config.rounds {
        let loss = build(n, &current)?;
        let (value, k) = loss.evaluate_with_argmax(&current);
        let eta = match config.rule {
            OcoRule::FollowTheLeader => 0.0,
            // the lazy update for round n+1 uses that round's rate
            OcoRule::ExponentiatedGradient => config.step_size(n + 1, num_joint),
            OcoRule::ProjectedSubgradient => config.step_size(n, num_joint),
        };
        let next = match config.rule {
            OcoRule::ExponentiatedGradient => {
                for (acc, g) in cumulative.iter_mut().zip(loss.subgradient(&current)) {
                    acc.iter_mut().zip(g).for_each(|(a, x)| *a += x);
                }
                exponentiated_weights(&first, &cumulative, eta)
            }
            OcoRule::ProjectedSubgradient => {
                projected_step(&current, &loss.subgradient(&current), eta)
            }
            OcoRule::FollowTheLeader => {
                ftl.absorb(&loss.components()[k].loss);
                ftl.policy()
            }
        };
        rounds.push(OcoRound {
            round: n,
            loss: value,
            achieving: loss.components()[k].label,
            step_size: eta,
        });
        losses.push(loss);
        iterates.push(std::mem::replace(&mut current, next));
    }
    Ok(OcoRun {
        iterates,
        rounds,
        losses,
    })
}

fn exponentiated_weights(prior: &MediatorPolicy, grad: &[Vec<f64>], eta: f64) -> MediatorPolicy {
    let table = prior
        .table
        .iter()
        .zip(grad)
        .map(|(row, g)| {
            if g.iter().all(|x| *x == 0.0) {
                return row.clone();
            }
            // log-space over the prior's support, shifted by its maximum
            let logits: Vec<f64> = row
                .iter()
                .zip(g)
                .map(|(p, gi)| {
                    if *p > 0.0 {
                        p.ln() - eta * gi
                    } else {
                        f64::NEG_INFINITY
                    }
                })
                .collect();
            let top = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut out: Vec<f64> = logits.iter().map(|l| (l - top).exp()).collect();
            normalize(&mut out);
            out
        })
        .collect();
    MediatorPolicy { table }
}

fn projected_step(sigma: &MediatorPolicy, grad: &[Vec<f64>], eta: f64) -> MediatorPolicy {
    let table = sigma
        .table
        .iter()
        .zip(grad)
        .map(|(row, g)| {
            if g.iter().all(|x| *x == 0.0) {
                return row.clone();
            }
            let moved: Vec<f64> = row.iter().zip(g).map(|(p, gi)| p - eta * gi).collect();
            project_simplex(&moved)
        })
        .collect();
    MediatorPolicy { table }
}

fn normalize(row: &mut [f64]) {
    let sum: f64 = row.iter().sum();
    row.iter_mut().for_each(|x| *x /= sum);
}

/// Euclidean projection onto the probability simplex (sort-and-threshold).
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite entries"));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (k, &x) in sorted.iter().enumerate() {
        cumsum += x;
        let t = (cumsum - 1.0) / (k + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    let mut out: Vec<f64> = v.iter().map(|x| (x - theta).max(0.0)).collect();
    normalize(&mut out);
    out
}

/// Running weighted mean of the achieving targets, per state.
struct FtlState {
    weight: Vec<f64>,
    mean: Vec<Vec<f64>>,
}

impl FtlState {
    fn new(init: &MediatorPolicy) -> Self {
        Self {
            weight: vec![0.0; init.num_states()],
            mean: init.table.clone(),
        }
    }

    fn absorb(&mut self, loss: &crate::losses::WeightedTvLoss) {
        for (s, &w) in loss.weights().iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            let target = &loss.target()[s];
            if self.weight[s] == 0.0 {
                self.mean[s] = target.clone();
            } else {
                let frac = w / (self.weight[s] + w);
                for (m, t) in self.mean[s].iter_mut().zip(target) {
                    *m += frac * (t - *m);
                }
            }
            self.weight[s] += w;
        }
    }

    fn policy(&self) -> MediatorPolicy {
        MediatorPolicy {
            table: self.mean.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::WeightedTvLoss;

    #[test]
    fn projection_lands_on_simplex() {
        let p = project_simplex(&[0.9, 0.8, -0.3]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((p[0] - 0.55).abs() < 1e-12 && (p[1] - 0.45).abs() < 1e-12);
        assert_eq!(p[2], 0.0);
    }

    #[test]
    fn zero_loss_never_moves() {
        let init = MediatorPolicy::new(vec![vec![0.1, 0.2, 0.7]]);
        for rule in [
            OcoRule::ExponentiatedGradient,
            OcoRule::ProjectedSubgradient,
            OcoRule::FollowTheLeader,
        ] {
            let cfg = OcoConfig {
                rule,
                ..OcoConfig::exponentiated(25)
            };
            let run = oco_run(init.clone(), &cfg, |_, _| {
                let loss = WeightedTvLoss::new(vec![1.0], vec![vec![0.1, 0.2, 0.7]])?;
                Ok(CompositeMaxLoss::single(loss))
            })
            .unwrap();
            assert!(run.iterates.iter().all(|it| *it == init));
        }
    }

    #[test]
    fn zero_rounds_rejected() {
        let init = MediatorPolicy::uniform(1, 2);
        let cfg = OcoConfig::exponentiated(0);
        assert!(oco_run(init, &cfg, |_, _| unreachable!()).is_err());
    }

    #[test]
    fn ftl_jumps_to_consistent_target() {
        let target = vec![vec![0.0, 1.0], vec![0.3, 0.7]];
        let cfg = OcoConfig {
            rule: OcoRule::FollowTheLeader,
            ..OcoConfig::exponentiated(3)
        };
        let run = oco_run(MediatorPolicy::uniform(2, 2), &cfg, |_, _| {
            Ok(CompositeMaxLoss::single(WeightedTvLoss::new(
                vec![0.5, 0.5],
                target.clone(),
            )?))
        })
        .unwrap();
        assert_eq!(run.iterates[1].table, target);
        assert_eq!(run.rounds[1].loss, 0.0);
    }
}
