//! Sharpe-ratio and regret accounting.
//!
//! All variance estimators here are the biased (divide-by-count) ones. The
//! Sharpe ratio of a mean/variance pair is `mean / (l0 + rho * variance)`
//! everywhere, including the plug-in estimate from samples.

use crate::env::BanditInstance;
use crate::error::{Error, Result};

/// Sharpe ratio `mean / (l0 + rho * variance)`.
pub fn sharpe_ratio(mean: f64, variance: f64, rho: f64, l0: f64) -> Result<f64> {
    let denom = l0 + rho * variance;
    if denom == 0.0 {
        return Err(Error::DegenerateDenominator);
    }
    Ok(mean / denom)
}

/// Welford accumulator for a stream's mean and biased variance.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunningMoments {
    count: u64,
    mean: f64,
    m2: f64,
}

impl RunningMoments {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Sum of squared deviations from the running mean.
    pub fn sum_sq_dev(&self) -> f64 {
        self.m2
    }

    /// Biased variance; 0 before the first sample.
    pub fn variance(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.m2 / self.count as f64
        }
    }
}

/// Plug-in Sharpe ratio of a sample using the biased variance.
pub fn empirical_sharpe(samples: &[f64], rho: f64, l0: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    let (mean, var) = mean_and_biased_variance(samples);
    sharpe_ratio(mean, var, rho, l0)
}

fn mean_and_biased_variance(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var)
}

/// Arm choices and observed rewards of one replication, in round order.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    choices: Vec<usize>,
    rewards: Vec<f64>,
}

impl RunTrace {
    pub fn new(choices: Vec<usize>, rewards: Vec<f64>) -> Result<Self> {
        if choices.len() != rewards.len() {
            return Err(Error::InvalidTrace(format!(
                "{} choices but {} rewards",
                choices.len(),
                rewards.len()
            )));
        }
        if choices.is_empty() {
            return Err(Error::InvalidTrace("trace is empty".into()));
        }
        Ok(Self { choices, rewards })
    }

    pub fn choices(&self) -> &[usize] {
        &self.choices
    }

    pub fn rewards(&self) -> &[f64] {
        &self.rewards
    }

    pub fn horizon(&self) -> usize {
        self.choices.len()
    }

    /// Checks every choice against the number of arms.
    pub fn validate(&self, num_arms: usize) -> Result<()> {
        match self.choices.iter().find(|&&c| c >= num_arms) {
            Some(&index) => Err(Error::IndexError {
                index,
                len: num_arms,
            }),
            None => Ok(()),
        }
    }

    pub fn pull_counts(&self, num_arms: usize) -> Result<PullCounts> {
        self.validate(num_arms)?;
        let mut counts = vec![0u64; num_arms];
        for &c in &self.choices {
            counts[c] += 1;
        }
        Ok(PullCounts { counts })
    }

    fn num_arms_seen(&self) -> usize {
        self.choices.iter().max().map_or(0, |m| m + 1)
    }
}

/// Number of pulls of each arm at the end of a trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PullCounts {
    counts: Vec<u64>,
}

impl PullCounts {
    pub fn new(counts: Vec<u64>) -> Self {
        Self { counts }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn horizon(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Pooled mean and biased variance of the whole reward stream.
pub fn algorithmic_stats(trace: &RunTrace) -> (f64, f64) {
    mean_and_biased_variance(&trace.rewards)
}

/// Splits the pooled variance into the pull-weighted within-arm variance and
/// the switching term, the pull-weighted spread of per-arm means around the
/// pooled mean. The two parts add up to [`algorithmic_stats`]' variance.
pub fn algorithmic_variance_split(trace: &RunTrace) -> (f64, f64) {
    let k = trace.num_arms_seen();
    let n = trace.horizon() as f64;
    let mut counts = vec![0u64; k];
    let mut sums = vec![0.0; k];
    for (&c, &x) in trace.choices.iter().zip(&trace.rewards) {
        counts[c] += 1;
        sums[c] += x;
    }
    let means: Vec<f64> = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
        .collect();
    let mut sq_dev = vec![0.0; k];
    for (&c, &x) in trace.choices.iter().zip(&trace.rewards) {
        sq_dev[c] += (x - means[c]).powi(2);
    }
    let pooled_mean = trace.rewards.iter().sum::<f64>() / n;
    let within = sq_dev.iter().sum::<f64>() / n;
    let switching = counts
        .iter()
        .zip(&means)
        .map(|(&c, m)| c as f64 * (m - pooled_mean).powi(2))
        .sum::<f64>()
        / n;
    (within, switching)
}

/// Per-arm Sharpe ratios, Sharpe gaps and mean gaps of an instance.
#[derive(Debug, Clone, PartialEq)]
pub struct GapSummary {
    pub sharpe: Vec<f64>,
    /// `sharpe[optimal] - sharpe[i]`.
    pub delta: Vec<f64>,
    /// `mean_gaps[i][j] = mean_i - mean_j`.
    pub mean_gaps: Vec<Vec<f64>>,
    /// Largest squared mean gap over all pairs.
    pub lambda_max: f64,
    pub optimal_arm: usize,
}

pub fn gap_summary(instance: &BanditInstance) -> GapSummary {
    let sharpe = instance.sharpe().to_vec();
    let best = instance.optimal_sharpe();
    let delta = sharpe.iter().map(|s| best - s).collect();
    let means: Vec<f64> = instance.arms().iter().map(|a| a.mean()).collect();
    let mean_gaps: Vec<Vec<f64>> = means
        .iter()
        .map(|mi| means.iter().map(|mj| mi - mj).collect())
        .collect();
    let lambda_max = mean_gaps
        .iter()
        .flatten()
        .map(|g| g * g)
        .fold(0.0, f64::max);
    GapSummary {
        sharpe,
        delta,
        mean_gaps,
        lambda_max,
        optimal_arm: instance.optimal_arm(),
    }
}

/// Realized regret after every prefix of the trace: entry `m - 1` is
/// `m * (xi* - xi_m)`, where `xi_m` is the Sharpe ratio of the pooled first
/// `m` rewards. Runs in one pass.
pub fn realized_regret(trace: &RunTrace, instance: &BanditInstance) -> Result<Vec<f64>> {
    trace.validate(instance.num_arms())?;
    let best = instance.optimal_sharpe();
    let (rho, l0) = (instance.rho(), instance.l0());
    let mut moments = RunningMoments::new();
    let mut out = Vec::with_capacity(trace.horizon());
    for &x in &trace.rewards {
        moments.push(x);
        let m = moments.count() as f64;
        let xi = moments.mean() / (l0 + rho * moments.variance());
        out.push(m * (best - xi));
    }
    Ok(out)
}

/// Unbiased sample variance of `s_{arm,n}` across replications.
pub fn pull_count_variance(counts_across_reps: &[PullCounts], arm: usize) -> Result<f64> {
    if counts_across_reps.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 replications, got {}",
            counts_across_reps.len()
        )));
    }
    let horizon = counts_across_reps[0].horizon();
    let mut xs = Vec::with_capacity(counts_across_reps.len());
    for pc in counts_across_reps {
        if pc.horizon() != horizon {
            return Err(Error::InsufficientData(format!(
                "replications have different horizons ({} vs {})",
                horizon,
                pc.horizon()
            )));
        }
        let c = pc.counts.get(arm).ok_or(Error::IndexError {
            index: arm,
            len: pc.counts.len(),
        })?;
        xs.push(*c as f64);
    }
    Ok(unbiased_variance(&xs))
}

pub fn unbiased_variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return 0.0;
    }
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
}

/// Standard error of the unbiased sample variance, from the sample fourth
/// central moment: `sqrt((m4 - s^4 (n - 3) / (n - 1)) / n)`.
pub fn variance_standard_error(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    let s2 = unbiased_variance(xs);
    ((m4 - s2 * s2 * (n - 3.0) / (n - 1.0)) / n).max(0.0).sqrt()
}
