//! Sequential policies: Sharpe-ratio Thompson sampling and baselines.
//!
//! Every policy goes through the same life cycle, [`policy_init`] followed by
//! alternating [`PolicyState::select`] / [`PolicyState::update`] calls. The
//! first `K` selections of every kind are the forced warm-start round, arms
//! `0..K` in index order. Ties in any index are broken towards the lowest arm.
//!
//! Thompson-sampling posteriors keep, per arm, the running mean `mu_hat`, the
//! pull count `s`, the running sum of squared deviations and the Gamma
//! precision parameters
//!
//! ```text
//! alpha = 1/2 + s/2,   beta = 1/2 + sum_sq_dev/2   (beta is a rate)
//! ```
//!
//! Each round SRTS draws, arm by arm in index order, `tau ~ Gamma(alpha, rate
//! beta)` from the tau channel and `theta ~ N(mu_hat, 1/s)` from the theta
//! channel, and plays `argmax theta / (l0 + rho / tau)`. Mean-TS draws the same
//! `theta` sequence and plays `argmax theta`, so the two coincide when `rho = 0`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::rng::{Channel, RngStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PolicyKind {
    /// Sharpe-ratio Thompson sampling.
    Srts,
    /// Gaussian Thompson sampling on the mean only.
    MeanTs,
    /// Plug-in Sharpe ratio plus a `c * sqrt(log t / s)` bonus. Baseline.
    SrUcb,
    /// Mean-variance index `mean - rho * variance` plus the same bonus. Baseline.
    MvLcb,
    RoundRobin,
    UniformRandom,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 6] = [
        PolicyKind::Srts,
        PolicyKind::MeanTs,
        PolicyKind::SrUcb,
        PolicyKind::MvLcb,
        PolicyKind::RoundRobin,
        PolicyKind::UniformRandom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Srts => "srts",
            PolicyKind::MeanTs => "mean-ts",
            PolicyKind::SrUcb => "sr-ucb",
            PolicyKind::MvLcb => "mv-lcb",
            PolicyKind::RoundRobin => "round-robin",
            PolicyKind::UniformRandom => "uniform-random",
        }
    }

    /// Whether the kind reads the exploration coefficient.
    pub fn uses_exploration(self) -> bool {
        matches!(self, PolicyKind::SrUcb | PolicyKind::MvLcb)
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        PolicyKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown policy kind `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyConfig {
    pub kind: PolicyKind,
    pub rho: f64,
    pub l0: f64,
    /// Exploration coefficient `c` of the index baselines.
    pub exploration: f64,
}

impl PolicyConfig {
    pub const DEFAULT_EXPLORATION: f64 = 2.0;

    pub fn new(kind: PolicyKind, rho: f64, l0: f64) -> Self {
        Self {
            kind,
            rho,
            l0,
            exploration: Self::DEFAULT_EXPLORATION,
        }
    }

    pub fn with_exploration(mut self, c: f64) -> Self {
        self.exploration = c;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.rho.is_finite() || self.rho < 0.0 {
            return Err(Error::DomainError(format!(
                "rho must be >= 0, got {}",
                self.rho
            )));
        }
        if !(self.l0 > 0.0 && self.l0 <= 1.0) {
            return Err(Error::DomainError(format!(
                "l0 must lie in (0, 1], got {}",
                self.l0
            )));
        }
        if self.kind.uses_exploration()
            && !(self.exploration >= 0.0 && self.exploration.is_finite())
        {
            return Err(Error::DomainError(format!(
                "exploration coefficient must be finite and >= 0, got {}",
                self.exploration
            )));
        }
        Ok(())
    }
}

/// Posterior state of one arm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmPosterior {
    pub mu_hat: f64,
    pub alpha: f64,
    pub beta: f64,
    pub pulls: u64,
    pub sum_sq_dev: f64,
}

impl ArmPosterior {
    pub const PRIOR: ArmPosterior = ArmPosterior {
        mu_hat: 0.0,
        alpha: 0.5,
        beta: 0.5,
        pulls: 0,
        sum_sq_dev: 0.0,
    };

    fn observe(&mut self, x: f64) {
        self.pulls += 1;
        let delta = x - self.mu_hat;
        self.mu_hat += delta / self.pulls as f64;
        self.sum_sq_dev += delta * (x - self.mu_hat);
        self.alpha += 0.5;
        self.beta = 0.5 + 0.5 * self.sum_sq_dev;
    }

    /// Biased sample variance of the observed rewards.
    pub fn sample_variance(&self) -> f64 {
        if self.pulls == 0 {
            0.0
        } else {
            self.sum_sq_dev / self.pulls as f64
        }
    }
}

/// Per-arm posteriors shared by every policy kind.
#[derive(Debug, Clone, PartialEq)]
pub struct SrtsPosterior {
    arms: Vec<ArmPosterior>,
}

impl SrtsPosterior {
    pub fn new(num_arms: usize) -> Self {
        Self {
            arms: vec![ArmPosterior::PRIOR; num_arms],
        }
    }

    pub fn arms(&self) -> &[ArmPosterior] {
        &self.arms
    }

    pub fn num_arms(&self) -> usize {
        self.arms.len()
    }

    /// Folds one observed reward into `arm`'s posterior.
    pub fn update(&mut self, arm: usize, reward: f64) -> Result<()> {
        if !reward.is_finite() {
            return Err(Error::InvalidReward(reward));
        }
        let len = self.arms.len();
        self.arms
            .get_mut(arm)
            .ok_or(Error::IndexError { index: arm, len })?
            .observe(reward);
        Ok(())
    }

    fn ensure_warm(&self) -> Result<()> {
        match self.arms.iter().position(|a| a.pulls == 0) {
            Some(i) => Err(Error::NotWarmedUp(i)),
            None => Ok(()),
        }
    }
}

/// Index of the first maximum; NaN scores never win.
fn argmax(scores: impl Iterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (i, s) in scores.enumerate() {
        if s > best_score {
            best = i;
            best_score = s;
        }
    }
    best
}

/// One SRTS decision.
pub fn srts_select(post: &SrtsPosterior, rho: f64, l0: f64, rng: &mut RngStream) -> Result<usize> {
    post.ensure_warm()?;
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (i, arm) in post.arms.iter().enumerate() {
        let tau = rng.gamma_rate(arm.alpha, arm.beta);
        let theta = rng.normal(Channel::Theta, arm.mu_hat, (1.0 / arm.pulls as f64).sqrt());
        let denom = if rho == 0.0 { l0 } else { l0 + rho / tau };
        let score = theta / denom;
        if score > best_score {
            best = i;
            best_score = score;
        }
    }
    Ok(best)
}

/// One mean-TS decision: `argmax theta` with `theta ~ N(mu_hat, 1/s)`.
pub fn mean_ts_select(post: &SrtsPosterior, rng: &mut RngStream) -> Result<usize> {
    post.ensure_warm()?;
    Ok(argmax(post.arms.iter().map(|arm| {
        rng.normal(Channel::Theta, arm.mu_hat, (1.0 / arm.pulls as f64).sqrt())
    })))
}

fn exploration_bonus(t: u64, pulls: u64, c: f64) -> f64 {
    c * ((t as f64).ln() / pulls as f64).sqrt()
}

/// Plug-in Sharpe ratio plus `c * sqrt(ln t / s)`, for round `t`.
pub fn sr_ucb_select(post: &SrtsPosterior, rho: f64, l0: f64, t: u64, c: f64) -> Result<usize> {
    post.ensure_warm()?;
    Ok(argmax(post.arms.iter().map(|a| {
        a.mu_hat / (l0 + rho * a.sample_variance()) + exploration_bonus(t, a.pulls, c)
    })))
}

/// Mean-variance baseline: the lower confidence bound on `rho * var - mean`,
/// negated so that the largest index wins, i.e. `mean - rho * var + bonus`.
pub fn mv_lcb_select(post: &SrtsPosterior, rho: f64, t: u64, c: f64) -> Result<usize> {
    post.ensure_warm()?;
    Ok(argmax(post.arms.iter().map(|a| {
        a.mu_hat - rho * a.sample_variance() + exploration_bonus(t, a.pulls, c)
    })))
}

/// A policy together with its posterior and round counter.
#[derive(Debug, Clone)]
pub struct PolicyState {
    config: PolicyConfig,
    posterior: SrtsPosterior,
    completed: u64,
}

pub fn policy_init(config: PolicyConfig, num_arms: usize) -> Result<PolicyState> {
    config.validate()?;
    if num_arms < 2 {
        return Err(Error::InvalidInstance(format!(
            "need at least 2 arms, got {num_arms}"
        )));
    }
    Ok(PolicyState {
        config,
        posterior: SrtsPosterior::new(num_arms),
        completed: 0,
    })
}

impl PolicyState {
    pub fn config(&self) -> &PolicyConfig {
        &self.config
    }

    pub fn posterior(&self) -> &SrtsPosterior {
        &self.posterior
    }

    /// Rounds completed so far.
    pub fn rounds(&self) -> u64 {
        self.completed
    }

    /// Chooses the arm for the next round.
    pub fn select(&mut self, rng: &mut RngStream) -> Result<usize> {
        let k = self.posterior.num_arms() as u64;
        if self.completed < k {
            return Ok(self.completed as usize);
        }
        let t = self.completed + 1;
        let PolicyConfig {
            kind,
            rho,
            l0,
            exploration,
        } = self.config;
        match kind {
            PolicyKind::Srts => srts_select(&self.posterior, rho, l0, rng),
            PolicyKind::MeanTs => mean_ts_select(&self.posterior, rng),
            PolicyKind::SrUcb => sr_ucb_select(&self.posterior, rho, l0, t, exploration),
            PolicyKind::MvLcb => mv_lcb_select(&self.posterior, rho, t, exploration),
            PolicyKind::RoundRobin => Ok((self.completed % k) as usize),
            PolicyKind::UniformRandom => Ok(rng.below(Channel::Policy, k as usize)),
        }
    }

    pub fn update(&mut self, arm: usize, reward: f64) -> Result<()> {
        self.posterior.update(arm, reward)?;
        self.completed += 1;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn warm(means: &[f64], pulls: u64) -> SrtsPosterior {
        SrtsPosterior {
            arms: means
                .iter()
                .map(|&m| ArmPosterior {
                    mu_hat: m,
                    alpha: 0.5 + pulls as f64 / 2.0,
                    beta: 0.5 + pulls as f64 / 2.0,
                    pulls,
                    sum_sq_dev: pulls as f64,
                })
                .collect(),
        }
    }

    #[test]
    fn fresh_srts_state_is_the_prior() {
        let s = policy_init(PolicyConfig::new(PolicyKind::Srts, 1.0, 1.0), 10).unwrap();
        assert_eq!(s.posterior().num_arms(), 10);
        assert!(s
            .posterior()
            .arms()
            .iter()
            .all(|a| *a == ArmPosterior::PRIOR));
    }

    #[test]
    fn every_kind_warm_starts_in_index_order() {
        for kind in PolicyKind::ALL {
            let mut s = policy_init(PolicyConfig::new(kind, 1.0, 1.0), 4).unwrap();
            let mut rng = RngStream::new(5, 0);
            for expected in 0..4 {
                let arm = s.select(&mut rng).unwrap();
                assert_eq!(arm, expected, "{kind}");
                s.update(arm, 0.1 * expected as f64).unwrap();
            }
        }
    }

    #[test]
    fn round_robin_cycles() {
        let mut s = policy_init(PolicyConfig::new(PolicyKind::RoundRobin, 1.0, 1.0), 3).unwrap();
        let mut rng = RngStream::new(0, 0);
        let seq: Vec<usize> = (0..9)
            .map(|_| {
                let a = s.select(&mut rng).unwrap();
                s.update(a, 1.0).unwrap();
                a
            })
            .collect();
        assert_eq!(seq, vec![0, 1, 2, 0, 1, 2, 0, 1, 2]);
    }

    #[test]
    fn one_point_update() {
        let mut p = SrtsPosterior::new(2);
        p.update(1, 0.7).unwrap();
        assert_eq!(
            p.arms()[1],
            ArmPosterior {
                mu_hat: 0.7,
                alpha: 1.0,
                beta: 0.5,
                pulls: 1,
                sum_sq_dev: 0.0
            }
        );
    }

    #[test]
    fn two_point_update() {
        let mut p = SrtsPosterior::new(2);
        p.update(0, 1.0).unwrap();
        p.update(0, 3.0).unwrap();
        let a = p.arms()[0];
        assert_eq!(
            (a.mu_hat, a.sum_sq_dev, a.alpha, a.beta),
            (2.0, 2.0, 1.5, 1.5)
        );
    }

    #[test]
    fn update_rejects_bad_input() {
        let mut p = SrtsPosterior::new(2);
        assert!(matches!(
            p.update(0, f64::NAN),
            Err(Error::InvalidReward(_))
        ));
        assert!(matches!(
            p.update(0, f64::INFINITY),
            Err(Error::InvalidReward(_))
        ));
        assert!(matches!(
            p.update(2, 1.0),
            Err(Error::IndexError { index: 2, len: 2 })
        ));
    }

    #[test]
    fn select_requires_warm_start() {
        let p = SrtsPosterior::new(3);
        let mut rng = RngStream::new(0, 0);
        assert_eq!(
            srts_select(&p, 1.0, 1.0, &mut rng),
            Err(Error::NotWarmedUp(0))
        );
        assert_eq!(mean_ts_select(&p, &mut rng), Err(Error::NotWarmedUp(0)));
    }

    #[test]
    fn dominant_posterior_wins() {
        let p = warm(&[0.0, 10.0, 0.0], 1_000_000);
        let mut rng = RngStream::new(2, 0);
        let hits = (0..10_000)
            .filter(|_| srts_select(&p, 0.0, 1.0, &mut rng).unwrap() == 1)
            .count();
        assert!(hits as f64 / 10_000.0 >= 0.999);
    }

    #[test]
    fn identical_posteriors_with_identical_draws_pick_arm_zero() {
        // With huge pull counts theta collapses to mu_hat and the scores tie exactly.
        let p = warm(&[0.5, 0.5], u64::MAX / 2);
        let mut rng = RngStream::new(0, 0);
        assert_eq!(mean_ts_select(&p, &mut rng).unwrap(), 0);
        assert_eq!(sr_ucb_select(&p, 1.0, 1.0, 10, 1.0).unwrap(), 0);
        assert_eq!(mv_lcb_select(&p, 1.0, 10, 1.0).unwrap(), 0);
    }

    #[test]
    fn ucb_without_bonus_is_greedy() {
        let mut p = SrtsPosterior::new(3);
        for (arm, xs) in [(0, [0.1, 0.3]), (1, [0.5, 0.7]), (2, [0.0, 2.0])] {
            for x in xs {
                p.update(arm, x).unwrap();
            }
        }
        // plug-in SR: 0.2/1.01, 0.6/1.01, 1.0/2.0
        assert_eq!(sr_ucb_select(&p, 1.0, 1.0, 100, 0.0).unwrap(), 1);
        // mean - var: 0.19, 0.59, 0.0
        assert_eq!(mv_lcb_select(&p, 1.0, 100, 0.0).unwrap(), 1);
    }

    #[test]
    fn kind_names_round_trip() {
        for kind in PolicyKind::ALL {
            assert_eq!(kind.name().parse::<PolicyKind>().unwrap(), kind);
        }
        assert!("thompson".parse::<PolicyKind>().is_err());
    }

    #[test]
    fn config_validation() {
        assert!(PolicyConfig::new(PolicyKind::Srts, -1.0, 1.0)
            .validate()
            .is_err());
        assert!(PolicyConfig::new(PolicyKind::Srts, 1.0, 0.0)
            .validate()
            .is_err());
        assert!(PolicyConfig::new(PolicyKind::SrUcb, 1.0, 1.0)
            .with_exploration(-1.0)
            .validate()
            .is_err());
        assert!(policy_init(PolicyConfig::new(PolicyKind::Srts, 1.0, 1.0), 1).is_err());
    }
}
