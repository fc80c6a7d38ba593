//! Convex imitation losses over the product of per-state joint-action simplices.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::eval::tv_distance;
use crate::game::{check_distribution, MediatorPolicy};
use crate::oracle::ExpertOracle;

/// `sum_s w(s) TV(target(s), sigma(s))`. Target rows on zero-weight states
/// are never read.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedTvLoss {
    weights: Vec<f64>,
    target: Vec<Vec<f64>>,
}

impl WeightedTvLoss {
    pub fn new(weights: Vec<f64>, target: Vec<Vec<f64>>) -> Result<Self> {
        if weights.len() != target.len() {
            return Err(Error::Shape(format!(
                "{} weights for {} target rows",
                weights.len(),
                target.len()
            )));
        }
        check_distribution(&weights)
            .map_err(|msg| Error::InvalidArgument(format!("loss weights: {msg}")))?;
        Ok(Self { weights, target })
    }

    /// Loss with every weight multiplied by `factor` (no longer normalized).
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            weights: self.weights.iter().map(|w| w * factor).collect(),
            target: self.target.clone(),
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn target(&self) -> &[Vec<f64>] {
        &self.target
    }

    pub fn evaluate(&self, sigma: &MediatorPolicy) -> f64 {
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, w)| **w > 0.0)
            .map(|(s, w)| w * tv_distance(&self.target[s], &sigma.table[s]))
            .sum()
    }

    /// `w(s) * 1/2 * sign(sigma(a|s) - target(a|s))`, with `sign(0) = 0`.
    pub fn subgradient(&self, sigma: &MediatorPolicy) -> Vec<Vec<f64>> {
        sigma
            .table
            .iter()
            .enumerate()
            .map(|(s, row)| {
                let w = self.weights[s];
                if w == 0.0 {
                    return vec![0.0; row.len()];
                }
                row.iter()
                    .zip(&self.target[s])
                    .map(|(p, t)| 0.5 * w * sign(p - t))
                    .collect()
            })
            .collect()
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Identifies the (agent, deviation-index) pair behind a loss component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct ComponentLabel {
    pub agent: usize,
    pub deviation: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossComponent {
    pub label: ComponentLabel,
    pub loss: WeightedTvLoss,
}

/// Pointwise maximum of weighted TV losses, one per (agent, deviation).
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeMaxLoss {
    components: Vec<LossComponent>,
}

impl CompositeMaxLoss {
    pub fn new(components: Vec<LossComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidArgument(
                "composite loss needs at least one component".into(),
            ));
        }
        Ok(Self { components })
    }

    pub fn single(loss: WeightedTvLoss) -> Self {
        Self {
            components: vec![LossComponent {
                label: ComponentLabel {
                    agent: 0,
                    deviation: 0,
                },
                loss,
            }],
        }
    }

    pub fn components(&self) -> &[LossComponent] {
        &self.components
    }

    /// Maximum value and the index of the first component attaining it.
    pub fn evaluate_with_argmax(&self, sigma: &MediatorPolicy) -> (f64, usize) {
        let mut best = (f64::NEG_INFINITY, 0);
        for (k, c) in self.components.iter().enumerate() {
            let v = c.loss.evaluate(sigma);
            if v > best.0 {
                best = (v, k);
            }
        }
        best
    }

    pub fn evaluate(&self, sigma: &MediatorPolicy) -> f64 {
        self.evaluate_with_argmax(sigma).0
    }

    /// Subgradient of the achieving component (lowest index on ties).
    pub fn subgradient(&self, sigma: &MediatorPolicy) -> Vec<Vec<f64>> {
        let (_, k) = self.evaluate_with_argmax(sigma);
        self.components[k].loss.subgradient(sigma)
    }
}

/// Per-(agent, deviation) state distribution `d^{pi_{sigma_hat, phi_i}}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviatedDistribution {
    pub label: ComponentLabel,
    pub states: Vec<f64>,
}

/// `E_{s ~ d_E} TV(sigma_E(s), sigma(s))`.
pub fn bc_loss(expert: &MediatorPolicy, sigma: &MediatorPolicy, d_expert: &[f64]) -> Result<f64> {
    crate::eval::weighted_tv_loss(expert, sigma, d_expert)
}

/// Importance ratios `d_dev(s) / d_E(s)`; zero where both vanish.
pub fn importance_ratios(d_expert: &[f64], d_dev: &[f64]) -> Result<Vec<f64>> {
    if d_expert.len() != d_dev.len() {
        return Err(Error::Shape(
            "expert and deviated distributions differ in length".into(),
        ));
    }
    d_expert
        .iter()
        .zip(d_dev)
        .enumerate()
        .map(|(s, (&e, &d))| {
            if e > 0.0 {
                Ok(d / e)
            } else if d > 0.0 {
                Err(Error::Coverage {
                    state: s,
                    expert_mass: e,
                    deviated_mass: d,
                })
            } else {
                Ok(0.0)
            }
        })
        .collect()
}

/// MALICE loss as a composite: each component reweights the expert
/// distribution by the importance ratio of its deviated distribution.
pub fn malice_composite(
    expert_labels: &MediatorPolicy,
    d_expert: &[f64],
    deviated: &[DeviatedDistribution],
) -> Result<CompositeMaxLoss> {
    let components = deviated
        .iter()
        .map(|dev| {
            let ratios = importance_ratios(d_expert, &dev.states)?;
            let weights: Vec<f64> = d_expert.iter().zip(&ratios).map(|(e, r)| e * r).collect();
            Ok(LossComponent {
                label: dev.label,
                loss: WeightedTvLoss::new(weights, expert_labels.table.clone())?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    CompositeMaxLoss::new(components)
}

/// `max_{i, phi} E_{s ~ d_E}[(d_dev(s) / d_E(s)) TV(sigma_E(s), sigma(s))]`.
pub fn malice_loss(
    expert: &MediatorPolicy,
    sigma: &MediatorPolicy,
    d_expert: &[f64],
    deviated: &[DeviatedDistribution],
) -> Result<f64> {
    let mut best = f64::NEG_INFINITY;
    for dev in deviated {
        let ratios = importance_ratios(d_expert, &dev.states)?;
        let v: f64 = d_expert
            .iter()
            .zip(&ratios)
            .enumerate()
            .filter(|(_, (e, _))| **e > 0.0)
            .map(|(s, (e, r))| e * r * tv_distance(&expert.table[s], &sigma.table[s]))
            .sum();
        best = best.max(v);
    }
    if deviated.is_empty() {
        return Err(Error::InvalidArgument(
            "no deviated distributions supplied".into(),
        ));
    }
    Ok(best)
}

/// BLADES loss as a composite, labelling every state some deviated
/// distribution reaches with one oracle query.
pub fn blades_composite(
    oracle: &ExpertOracle,
    round: usize,
    num_joint: usize,
    deviated: &[DeviatedDistribution],
) -> Result<CompositeMaxLoss> {
    let n = deviated.first().map_or(0, |d| d.states.len());
    let mut labels = vec![vec![1.0 / num_joint as f64; num_joint]; n];
    for s in 0..n {
        if deviated.iter().any(|d| d.states[s] > 0.0) {
            labels[s] = oracle.query(round, s)?;
        }
    }
    let components = deviated
        .iter()
        .map(|dev| {
            Ok(LossComponent {
                label: dev.label,
                loss: WeightedTvLoss::new(dev.states.clone(), labels.clone())?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    CompositeMaxLoss::new(components)
}

/// `max_{i, phi} E_{s ~ d_dev} TV(sigma_E(s), sigma(s))` with `sigma_E`
/// available only through oracle queries.
pub fn blades_loss(
    oracle: &ExpertOracle,
    round: usize,
    sigma: &MediatorPolicy,
    deviated: &[DeviatedDistribution],
) -> Result<f64> {
    let num_joint = sigma.table.first().map_or(0, Vec::len);
    Ok(blades_composite(oracle, round, num_joint, deviated)?.evaluate(sigma))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn label(k: usize) -> ComponentLabel {
        ComponentLabel {
            agent: 0,
            deviation: k,
        }
    }

    #[test]
    fn bc_loss_zero_on_expert() {
        let e = MediatorPolicy::new(vec![vec![0.3, 0.7], vec![1.0, 0.0]]);
        assert_eq!(bc_loss(&e, &e, &[0.5, 0.5]).unwrap(), 0.0);
    }

    #[test]
    fn malice_uniform_single_deviation_matches_bc_under_deviated() {
        let e = MediatorPolicy::new(vec![vec![0.3, 0.7], vec![1.0, 0.0], vec![0.5, 0.5]]);
        let s = MediatorPolicy::new(vec![vec![0.6, 0.4], vec![0.2, 0.8], vec![0.5, 0.5]]);
        let d_e = vec![1.0 / 3.0; 3];
        let d_dev = vec![0.2, 0.5, 0.3];
        let dev = [DeviatedDistribution {
            label: label(0),
            states: d_dev.clone(),
        }];
        let m = malice_loss(&e, &s, &d_e, &dev).unwrap();
        let bc = bc_loss(&e, &s, &d_dev).unwrap();
        assert!((m - bc).abs() < 1e-12);
        let comp = malice_composite(&e, &d_e, &dev).unwrap();
        assert!((comp.evaluate(&s) - m).abs() < 1e-12);
    }

    #[test]
    fn malice_support_violation_detected() {
        let e = MediatorPolicy::new(vec![vec![1.0], vec![1.0]]);
        let dev = [DeviatedDistribution {
            label: label(0),
            states: vec![0.5, 0.5],
        }];
        let err = malice_loss(&e, &e, &[1.0, 0.0], &dev).unwrap_err();
        assert!(matches!(err, Error::Coverage { state: 1, .. }));
    }

    #[test]
    fn subgradient_zero_at_target_and_homogeneous() {
        let t = vec![vec![0.25, 0.75]];
        let loss = WeightedTvLoss::new(vec![1.0], t.clone()).unwrap();
        let at = MediatorPolicy::new(t);
        assert!(loss.subgradient(&at).iter().flatten().all(|g| *g == 0.0));
        let off = MediatorPolicy::new(vec![vec![0.5, 0.5]]);
        let g = loss.subgradient(&off);
        let half = loss.scaled(0.5).subgradient(&off);
        for (a, b) in g.iter().flatten().zip(half.iter().flatten()) {
            assert_eq!(*b, 0.5 * a);
        }
    }

    #[test]
    fn composite_picks_first_max() {
        let t = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let a = WeightedTvLoss::new(vec![1.0, 0.0], t.clone()).unwrap();
        let b = WeightedTvLoss::new(vec![0.0, 1.0], t).unwrap();
        let loss = CompositeMaxLoss::new(vec![
            LossComponent {
                label: label(0),
                loss: a,
            },
            LossComponent {
                label: label(1),
                loss: b,
            },
        ])
        .unwrap();
        let sigma = MediatorPolicy::uniform(2, 2);
        assert_eq!(loss.evaluate_with_argmax(&sigma), (0.5, 0));
    }

    #[test]
    fn empty_composite_rejected() {
        assert!(CompositeMaxLoss::new(vec![]).is_err());
    }
}
