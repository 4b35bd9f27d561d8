//! Sharpe-ratio bandits over Gaussian arms.
//!
//! The crate is split along the lines of the experiment pipeline:
//!
//! - [`env`]: bandit instances, the reference 10-arm instance and seeded reward draws.
//! - [`metrics`]: Sharpe ratios, pooled ("algorithmic") statistics of a reward
//!   stream, sub-optimality gaps and realized regret.
//! - [`policy`]: Sharpe-ratio Thompson sampling (SRTS) and the baselines behind
//!   one sequential interface.
//! - [`bounds`]: tail bounds, the `h` rate function, the error-budget split,
//!   Gaussian KL and the upper/lower regret-bound curves.
//! - [`sim`]: drives a policy against an instance for one replication.

// Range checks are written as `!(x > 0.0)` on purpose so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod env;
pub mod error;
pub mod metrics;
pub mod policy;
pub mod rng;
pub mod sim;

pub use env::{make_instance, paper_instance, sample_reward, ArmParams, BanditInstance};
pub use error::{Error, Result};
pub use metrics::{GapSummary, PullCounts, RunTrace};
pub use policy::{PolicyConfig, PolicyKind, PolicyState};
pub use rng::{Channel, RngStream};
