//! Tabular Markov-game laboratory for multi-agent imitation learning with a
//! mediator.
//!
//! Games are small and dense, so everything here is exact: occupancies and
//! values come from forward/backward dynamic programming, regret against
//! complete deviation classes from a best-response DP, and the learners
//! ([`algorithms`]) run no-regret online convex optimization over mediator
//! policies.

pub mod algorithms;
pub mod crosscheck;
pub mod error;
pub mod eval;
pub mod fixtures;
pub mod game;
pub mod io;
pub mod losses;
pub mod oco;
pub mod oracle;
pub mod sampling;
pub mod verify;

pub use error::{Error, Result};
pub use eval::{evaluate, regret, regret_gap, value, value_gap, EvalReport, OccupancyBundle};
pub use game::{
    validate_game, AgentDeviations, Deviation, DeviationClass, JointActionSpace, JointPolicy,
    MarkovGame, MediatorPolicy,
};
pub use oracle::{ExpertOracle, QueryMode};
