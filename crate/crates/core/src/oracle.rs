//! Queryable expert. Learners that need counterfactual labels see the
//! expert only through [`ExpertOracle::query`].

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::MediatorPolicy;
use crate::sampling::{rng_from_seed, sample_index, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum QueryMode {
    /// Returns the expert's full recommendation distribution.
    FullRow,
    /// Returns a one-hot sample from the expert's row.
    SampledAction,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QueryRecord {
    pub round: usize,
    pub state: usize,
    pub mode: QueryMode,
}

#[derive(Debug)]
pub struct ExpertOracle {
    expert: MediatorPolicy,
    mode: QueryMode,
    queries: AtomicU64,
    log: Mutex<Vec<QueryRecord>>,
    rng: Mutex<Rng>,
}

impl ExpertOracle {
    pub fn new(expert: MediatorPolicy, mode: QueryMode, seed: u64) -> Self {
        Self {
            expert,
            mode,
            queries: AtomicU64::new(0),
            log: Mutex::new(Vec::new()),
            rng: Mutex::new(rng_from_seed(seed)),
        }
    }

    pub fn full_row(expert: MediatorPolicy) -> Self {
        Self::new(expert, QueryMode::FullRow, 0)
    }

    pub fn mode(&self) -> QueryMode {
        self.mode
    }

    pub fn num_states(&self) -> usize {
        self.expert.num_states()
    }

    /// Expert recommendation at `state`; counts as one query.
    pub fn query(&self, round: usize, state: usize) -> Result<Vec<f64>> {
        let row = self.expert.table.get(state).ok_or_else(|| {
            Error::InvalidArgument(format!("oracle queried on unknown state {state}"))
        })?;
        self.queries.fetch_add(1, Ordering::Relaxed);
        self.log
            .lock()
            .expect("oracle log poisoned")
            .push(QueryRecord {
                round,
                state,
                mode: self.mode,
            });
        Ok(match self.mode {
            QueryMode::FullRow => row.clone(),
            QueryMode::SampledAction => {
                let mut rng = self.rng.lock().expect("oracle rng poisoned");
                let a = sample_index(&mut rng, row);
                let mut onehot = vec![0.0; row.len()];
                onehot[a] = 1.0;
                onehot
            }
        })
    }

    pub fn query_count(&self) -> u64 {
        self.queries.load(Ordering::Relaxed)
    }

    pub fn query_log(&self) -> Vec<QueryRecord> {
        self.log.lock().expect("oracle log poisoned").clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_row_is_pure_and_counted() {
        let e = MediatorPolicy::new(vec![vec![0.2, 0.8], vec![1.0, 0.0]]);
        let o = ExpertOracle::full_row(e);
        let a = o.query(0, 0).unwrap();
        let b = o.query(1, 0).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, vec![0.2, 0.8]);
        assert_eq!(o.query_count(), 2);
        assert_eq!(o.query_log()[1].round, 1);
    }

    #[test]
    fn deterministic_expert_gives_onehot() {
        let e = MediatorPolicy::new(vec![vec![0.0, 1.0, 0.0]]);
        let o = ExpertOracle::new(e, QueryMode::SampledAction, 5);
        for _ in 0..10 {
            assert_eq!(o.query(0, 0).unwrap(), vec![0.0, 1.0, 0.0]);
        }
    }

    #[test]
    fn unknown_state_rejected_without_counting() {
        let o = ExpertOracle::full_row(MediatorPolicy::new(vec![vec![1.0]]));
        assert!(o.query(0, 3).is_err());
        assert_eq!(o.query_count(), 0);
    }

    #[test]
    fn concurrent_queries_total() {
        let o = ExpertOracle::full_row(MediatorPolicy::new(vec![vec![1.0]; 4]));
        std::thread::scope(|scope| {
            for t in 0..4 {
                let o = &o;
                scope.spawn(move || {
                    for _ in 0..250 {
                        o.query(t, t).unwrap();
                    }
                });
            }
        });
        assert_eq!(o.query_count(), 1000);
    }
}
