//! Runs one policy against one instance for one replication.

use crate::env::{sample_reward, BanditInstance};
use crate::error::{Error, Result};
use crate::metrics::RunTrace;
use crate::policy::{policy_init, PolicyConfig};
use crate::rng::RngStream;

/// Plays `horizon` rounds and returns the full trace.
pub fn run_replication(
    instance: &BanditInstance,
    config: PolicyConfig,
    horizon: usize,
    rng: &mut RngStream,
) -> Result<RunTrace> {
    if horizon == 0 {
        return Err(Error::InvalidTrace("horizon must be positive".into()));
    }
    let mut state = policy_init(config, instance.num_arms())?;
    let mut choices = Vec::with_capacity(horizon);
    let mut rewards = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let arm = state.select(rng)?;
        let reward = sample_reward(instance, arm, rng)?;
        state.update(arm, reward)?;
        choices.push(arm);
        rewards.push(reward);
    }
    RunTrace::new(choices, rewards)
}
