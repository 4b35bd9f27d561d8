//! Replicated experiments, ρ sweeps and theory-curve overlays.
//!
//! Replication `r` of an experiment at sweep position `j` uses
//! `RngStream(base_seed, r + j * reps)`; every policy of the experiment sees the
//! same streams. Replications run on a rayon pool in fixed-size chunks, and
//! each chunk is folded into the running statistics in replication order, so
//! the output does not depend on the number of worker threads.

use rayon::prelude::*;
use srts_core::bounds::{default_eps, theorem2_regret_curve, theorem3_lower_bound_curve};
use srts_core::metrics::realized_regret;
use srts_core::sim::run_replication;
use srts_core::{BanditInstance, RngStream};

use crate::config::{ExperimentConfig, PolicySpec};
use crate::emit::decimated_rounds;
use crate::error::{ConfigError, LabError, Result};

/// Replications handed to the pool at once; bounds peak memory at
/// `CHUNK * n` regret values.
const CHUNK: usize = 64;

/// Version string recorded with every result.
pub const BUILD_ID: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

/// Aggregated statistics of one policy at one risk tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyCurve {
    pub label: String,
    pub rho: f64,
    /// Mean realized regret after round `t` at index `t - 1`.
    pub regret_mean: Vec<f64>,
    /// Standard error of `regret_mean` across replications (0 for one replication).
    pub regret_stderr: Vec<f64>,
    pub pulls_mean: Vec<f64>,
    /// Unbiased cross-replication variance of the final pull counts.
    pub pulls_var: Vec<f64>,
}

impl PolicyCurve {
    pub fn horizon(&self) -> usize {
        self.regret_mean.len()
    }

    pub fn final_regret(&self) -> (f64, f64) {
        let last = self.horizon() - 1;
        (self.regret_mean[last], self.regret_stderr[last])
    }
}

/// Upper (finite-time SRTS) and lower (consistent-policy) regret curves.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoryCurves {
    pub rho: f64,
    pub n: Vec<u64>,
    /// Infinite where some arm's bound is vacuous; NaN if undefined for the instance.
    pub upper: Vec<f64>,
    pub lower: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Metadata {
    pub seed: u64,
    pub config_hash: String,
    pub build_id: String,
}

impl Metadata {
    pub fn for_config(config: &ExperimentConfig) -> Self {
        Self {
            seed: config.base_seed,
            config_hash: config.hash(),
            build_id: BUILD_ID.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub curves: Vec<PolicyCurve>,
    pub theory: Vec<TheoryCurves>,
    pub metadata: Metadata,
}

/// One row of a ρ sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub rho: f64,
    pub policy: String,
    pub final_regret_mean: f64,
    pub final_regret_stderr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    /// The full experiment behind each grid point, in the order of `rows`' ρ values.
    pub experiments: Vec<ExperimentResult>,
}

/// Per-round mean and sum of squared deviations (Welford), one slot per round.
struct RoundAccumulator {
    count: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl RoundAccumulator {
    fn new(len: usize) -> Self {
        Self {
            count: 0,
            mean: vec![0.0; len],
            m2: vec![0.0; len],
        }
    }

    fn push(&mut self, xs: &[f64]) {
        self.count += 1;
        let n = self.count as f64;
        for ((m, s), &x) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(xs) {
            let d = x - *m;
            *m += d / n;
            *s += d * (x - *m);
        }
    }

    /// Unbiased variance per slot (0 with fewer than two samples).
    fn variance(&self) -> Vec<f64> {
        if self.count < 2 {
            return vec![0.0; self.m2.len()];
        }
        let d = (self.count - 1) as f64;
        self.m2.iter().map(|s| s / d).collect()
    }

    fn stderr(&self) -> Vec<f64> {
        let n = self.count as f64;
        self.variance()
            .into_iter()
            .map(|v| (v / n).sqrt())
            .collect()
    }
}

fn build_pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| ConfigError::Invalid(format!("cannot start worker pool: {e}")).into())
}

/// Runs `reps` replications of one policy and aggregates them.
#[allow(clippy::too_many_arguments)]
fn run_policy(
    pool: &rayon::ThreadPool,
    instance: &BanditInstance,
    spec: &PolicySpec,
    horizon: usize,
    reps: usize,
    seed: u64,
    stream_offset: u64,
) -> Result<PolicyCurve> {
    let k = instance.num_arms();
    let config = spec.config(instance.rho(), instance.l0());
    let mut regret = RoundAccumulator::new(horizon);
    let mut pulls = RoundAccumulator::new(k);
    for start in (0..reps).step_by(CHUNK) {
        let end = (start + CHUNK).min(reps);
        let chunk: Vec<srts_core::Result<(Vec<f64>, Vec<f64>)>> = pool.install(|| {
            (start..end)
                .into_par_iter()
                .map(|r| {
                    let mut rng = RngStream::new(seed, stream_offset + r as u64);
                    let trace = run_replication(instance, config, horizon, &mut rng)?;
                    let counts = trace.pull_counts(k)?;
                    let counts = counts.counts().iter().map(|&c| c as f64).collect();
                    Ok((realized_regret(&trace, instance)?, counts))
                })
                .collect()
        });
        for item in chunk {
            let (r, c) = item?;
            regret.push(&r);
            pulls.push(&c);
        }
    }
    Ok(PolicyCurve {
        label: spec.label(),
        rho: instance.rho(),
        regret_stderr: regret.stderr(),
        pulls_var: pulls.variance(),
        regret_mean: regret.mean,
        pulls_mean: pulls.mean,
    })
}

/// Theory curves at `rho` on the decimated rounds `t >= 2`.
pub fn theory_curves(config: &ExperimentConfig, rho: f64) -> Result<TheoryCurves> {
    let instance = config.instance_at(rho)?;
    let n: Vec<u64> = decimated_rounds(config.horizon, false)
        .into_iter()
        .filter(|&t| t >= 2)
        .map(|t| t as u64)
        .collect();
    let upper = match theorem2_regret_curve(&instance, &n, &config.bounds, default_eps) {
        Ok(points) => points.into_iter().map(|p| p.value).collect(),
        // Undefined (non-positive optimal mean): keep the grid, mark the values.
        Err(srts_core::Error::DomainError(_)) => vec![f64::NAN; n.len()],
        Err(e) => return Err(e.into()),
    };
    let lower = theorem3_lower_bound_curve(&instance, &n, &config.bounds)?.values;
    Ok(TheoryCurves {
        rho,
        n,
        upper,
        lower,
    })
}

fn run_at(
    config: &ExperimentConfig,
    rho: f64,
    stream_offset: u64,
    pool: &rayon::ThreadPool,
) -> Result<ExperimentResult> {
    let instance = config.instance_at(rho)?;
    let curves = config
        .policies
        .iter()
        .map(|spec| {
            run_policy(
                pool,
                &instance,
                spec,
                config.horizon,
                config.replications,
                config.base_seed,
                stream_offset,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentResult {
        curves,
        theory: vec![theory_curves(config, rho)?],
        metadata: Metadata::for_config(config),
    })
}

/// Runs every configured policy at `config.rho`.
///
/// `jobs` caps the worker threads (0 lets rayon decide); it never changes the
/// result.
pub fn run_experiment(config: &ExperimentConfig, jobs: usize) -> Result<ExperimentResult> {
    config.validate()?;
    let pool = build_pool(jobs)?;
    run_at(config, config.rho, 0, &pool)
}

/// The configured ρ grid in ascending order.
pub fn sorted_grid(config: &ExperimentConfig) -> Result<Vec<f64>> {
    let mut grid = config
        .rho_grid
        .clone()
        .ok_or_else(|| LabError::from(ConfigError::Invalid("sweep needs `rho_grid`".into())))?;
    grid.sort_by(f64::total_cmp);
    Ok(grid)
}

/// Runs the experiment once per grid value; grid position `j` (after sorting)
/// offsets the stream ids by `j * reps`.
pub fn sweep_rho(config: &ExperimentConfig, jobs: usize) -> Result<SweepResult> {
    config.validate()?;
    let grid = sorted_grid(config)?;
    let pool = build_pool(jobs)?;
    let mut rows = Vec::new();
    let mut experiments = Vec::new();
    for (j, &rho) in grid.iter().enumerate() {
        let offset = (j * config.replications) as u64;
        let result = run_at(config, rho, offset, &pool)?;
        for curve in &result.curves {
            let (mean, se) = curve.final_regret();
            rows.push(SweepRow {
                rho,
                policy: curve.label.clone(),
                final_regret_mean: mean,
                final_regret_stderr: se,
            });
        }
        experiments.push(result);
    }
    Ok(SweepResult { rows, experiments })
}

/// Theory curves at `config.rho`, or at every grid value when a grid is set.
pub fn bound_curves(config: &ExperimentConfig) -> Result<Vec<TheoryCurves>> {
    config.validate()?;
    let rhos = match &config.rho_grid {
        Some(_) => sorted_grid(config)?,
        None => vec![config.rho],
    };
    rhos.into_iter()
        .map(|rho| theory_curves(config, rho))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    #[test]
    fn accumulator_matches_batch_formulas() {
        let mut acc = RoundAccumulator::new(2);
        for x in [[1.0, 10.0], [2.0, 10.0], [4.0, 13.0]] {
            acc.push(&x);
        }
        assert!((acc.mean[0] - 7.0 / 3.0).abs() < 1e-15);
        let var = acc.variance();
        assert!((var[0] - 7.0 / 3.0).abs() < 1e-14);
        assert!((var[1] - 3.0).abs() < 1e-14);
        assert!((acc.stderr()[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn single_replication_has_zero_stderr() {
        let cfg = parse_config("arm = 0.5, 0.1\narm = 0.2, 0.1\nn = 30\nreps = 1").unwrap();
        let res = run_experiment(&cfg, 1).unwrap();
        assert!(res.curves[0].regret_stderr.iter().all(|&s| s == 0.0));
        assert!(res.curves[0].pulls_var.iter().all(|&s| s == 0.0));
        assert_eq!(res.curves[0].pulls_mean.iter().sum::<f64>(), 30.0);
    }

    #[test]
    fn single_element_grid_matches_run() {
        let cfg =
            parse_config("arm = 0.5, 0.1\narm = 0.2, 0.3\nn = 40\nreps = 5\nrho = 2\nrho_grid = 2")
                .unwrap();
        let run = run_experiment(&cfg, 2).unwrap();
        let sweep = sweep_rho(&cfg, 2).unwrap();
        assert_eq!(sweep.experiments[0], run);
        assert_eq!(sweep.rows.len(), 1);
        assert_eq!(
            sweep.rows[0].final_regret_mean,
            run.curves[0].final_regret().0
        );
    }

    #[test]
    fn sweep_rows_sorted_by_rho() {
        let cfg = parse_config("arm = 0.5, 0.1\narm = 0.2, 0.3\nn = 20\nreps = 2\nrho_grid = 10, 0.1, 1\npolicy.kind = srts\npolicy.kind = round-robin").unwrap();
        let sweep = sweep_rho(&cfg, 1).unwrap();
        let rhos: Vec<f64> = sweep.rows.iter().map(|r| r.rho).collect();
        assert_eq!(rhos, vec![0.1, 0.1, 1.0, 1.0, 10.0, 10.0]);
    }

    #[test]
    fn theory_curves_are_aligned() {
        let cfg = parse_config("arm = 2.0, 1.0\narm = 0.2, 0.5\nn = 5000").unwrap();
        let th = theory_curves(&cfg, 1.0).unwrap();
        assert_eq!(th.n.len(), th.upper.len());
        assert_eq!(th.n.len(), th.lower.len());
        assert!(th.upper.iter().all(|v| v.is_finite()));
        assert_eq!(*th.n.last().unwrap(), 5000);
    }
}
