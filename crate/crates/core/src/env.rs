//! Gaussian bandit instances and reward generation.

use crate::error::{Error, Result};
use crate::metrics::sharpe_ratio;
use crate::rng::{Channel, RngStream};

/// Means of the reference 10-arm instance.
pub const PAPER_MEANS: [f64; 10] = [0.10, 0.27, 0.34, 0.41, 0.43, 0.55, 0.56, 0.67, 0.71, 0.79];
/// Variances of the reference 10-arm instance.
pub const PAPER_VARIANCES: [f64; 10] = [0.05, 0.09, 0.19, 0.14, 0.44, 0.24, 0.36, 0.56, 0.49, 0.85];

/// Relative tolerance under which two Sharpe ratios count as tied.
const TIE_TOLERANCE: f64 = 1e-12;

/// True mean and variance of one Gaussian arm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmParams {
    mean: f64,
    variance: f64,
}

impl ArmParams {
    pub fn new(mean: f64, variance: f64) -> Result<Self> {
        if !mean.is_finite() || !variance.is_finite() {
            return Err(Error::InvalidInstance(format!(
                "arm parameters must be finite (mean {mean}, variance {variance})"
            )));
        }
        if variance <= 0.0 {
            return Err(Error::InvalidInstance(format!(
                "arm variance must be positive, got {variance}"
            )));
        }
        Ok(Self { mean, variance })
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn sd(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// A set of Gaussian arms together with the risk tolerance `rho` and the
/// regularizer `l0` that define their Sharpe ratios.
///
/// Construction guarantees `K >= 2`, `rho >= 0`, `l0` in (0, 1] and a unique
/// arm of maximal Sharpe ratio. Instances are immutable.
#[derive(Debug, Clone, PartialEq)]
pub struct BanditInstance {
    arms: Vec<ArmParams>,
    rho: f64,
    l0: f64,
    sharpe: Vec<f64>,
    optimal_arm: usize,
}

impl BanditInstance {
    pub fn new(arms: Vec<ArmParams>, rho: f64, l0: f64) -> Result<Self> {
        if arms.len() < 2 {
            return Err(Error::InvalidInstance(format!(
                "need at least 2 arms, got {}",
                arms.len()
            )));
        }
        if !rho.is_finite() || rho < 0.0 {
            return Err(Error::InvalidInstance(format!(
                "rho must be finite and >= 0, got {rho}"
            )));
        }
        if !(l0 > 0.0 && l0 <= 1.0) {
            return Err(Error::InvalidInstance(format!(
                "l0 must lie in (0, 1], got {l0}"
            )));
        }
        let sharpe = arms
            .iter()
            .map(|a| sharpe_ratio(a.mean, a.variance, rho, l0))
            .collect::<Result<Vec<_>>>()?;
        let (optimal_arm, best) =
            sharpe
                .iter()
                .copied()
                .enumerate()
                .fold(
                    (0, f64::NEG_INFINITY),
                    |acc, (i, s)| if s > acc.1 { (i, s) } else { acc },
                );
        let tol = TIE_TOLERANCE * best.abs().max(1.0);
        let tied: Vec<usize> = sharpe
            .iter()
            .enumerate()
            .filter(|(_, &s)| (best - s).abs() <= tol)
            .map(|(i, _)| i)
            .collect();
        if tied.len() > 1 {
            return Err(Error::TiedOptimum(tied));
        }
        Ok(Self {
            arms,
            rho,
            l0,
            sharpe,
            optimal_arm,
        })
    }

    pub fn arms(&self) -> &[ArmParams] {
        &self.arms
    }

    pub fn arm(&self, index: usize) -> Result<&ArmParams> {
        self.arms.get(index).ok_or(Error::IndexError {
            index,
            len: self.arms.len(),
        })
    }

    pub fn num_arms(&self) -> usize {
        self.arms.len()
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn l0(&self) -> f64 {
        self.l0
    }

    /// Per-arm Sharpe ratios `mean / (l0 + rho * variance)`.
    pub fn sharpe(&self) -> &[f64] {
        &self.sharpe
    }

    pub fn optimal_arm(&self) -> usize {
        self.optimal_arm
    }

    pub fn optimal_sharpe(&self) -> f64 {
        self.sharpe[self.optimal_arm]
    }

    /// Same arms under a different risk tolerance.
    pub fn with_rho(&self, rho: f64) -> Result<Self> {
        Self::new(self.arms.clone(), rho, self.l0)
    }

    /// Same variances with every mean replaced by `mean` (the
    /// variance-minimisation variant of an instance).
    pub fn with_means(&self, mean: f64) -> Result<Self> {
        let arms = self
            .arms
            .iter()
            .map(|a| ArmParams::new(mean, a.variance))
            .collect::<Result<Vec<_>>>()?;
        Self::new(arms, self.rho, self.l0)
    }
}

/// Builds an instance from `(mean, variance)` pairs.
pub fn make_instance(arms: &[(f64, f64)], rho: f64, l0: f64) -> Result<BanditInstance> {
    let arms = arms
        .iter()
        .map(|&(m, v)| ArmParams::new(m, v))
        .collect::<Result<Vec<_>>>()?;
    BanditInstance::new(arms, rho, l0)
}

/// The reference 10-arm instance under the given `rho` and `l0`.
pub fn paper_instance(rho: f64, l0: f64) -> Result<BanditInstance> {
    let arms: Vec<(f64, f64)> = PAPER_MEANS.iter().copied().zip(PAPER_VARIANCES).collect();
    make_instance(&arms, rho, l0)
}

/// One reward from `Normal(mean, variance)` of `arm`, drawn from the reward channel.
pub fn sample_reward(instance: &BanditInstance, arm: usize, rng: &mut RngStream) -> Result<f64> {
    let params = instance.arm(arm)?;
    Ok(rng.normal(Channel::Reward, params.mean, params.sd()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dominant_mean_is_optimal() {
        let inst = make_instance(&[(0.5, 0.1), (0.2, 0.1)], 1.0, 1.0).unwrap();
        assert_eq!(inst.optimal_arm(), 0);
    }

    #[test]
    fn single_arm_rejected() {
        assert!(matches!(
            make_instance(&[(0.5, 0.1)], 1.0, 1.0),
            Err(Error::InvalidInstance(_))
        ));
    }

    #[test]
    fn nonpositive_variance_rejected() {
        assert!(matches!(
            make_instance(&[(0.5, 0.0), (0.2, 0.1)], 1.0, 1.0),
            Err(Error::InvalidInstance(_))
        ));
        assert!(matches!(
            make_instance(&[(0.5, -1.0), (0.2, 0.1)], 1.0, 1.0),
            Err(Error::InvalidInstance(_))
        ));
    }

    #[test]
    fn bad_risk_parameters_rejected() {
        assert!(make_instance(&[(0.5, 0.1), (0.2, 0.1)], -0.1, 1.0).is_err());
        assert!(make_instance(&[(0.5, 0.1), (0.2, 0.1)], 1.0, 0.0).is_err());
        assert!(make_instance(&[(0.5, 0.1), (0.2, 0.1)], 1.0, 1.5).is_err());
    }

    #[test]
    fn ties_are_reported_with_indices() {
        let err = make_instance(&[(0.2, 0.1), (0.5, 0.1), (0.5, 0.1)], 1.0, 1.0).unwrap_err();
        assert_eq!(err, Error::TiedOptimum(vec![1, 2]));
        assert!(err.to_string().contains("[1, 2]"));
    }

    #[test]
    fn paper_instance_layout() {
        let inst = paper_instance(1.0, 1.0).unwrap();
        assert_eq!(inst.num_arms(), 10);
        let last = inst.arm(9).unwrap();
        assert_eq!((last.mean(), last.variance()), (0.79, 0.85));
        assert_eq!(inst.optimal_arm(), 8);
        // 0.71 / 1.49
        assert!((inst.optimal_sharpe() - 0.476_510_067_114_094).abs() < 1e-12);
    }

    #[test]
    fn equal_means_variant_prefers_lowest_variance() {
        let inst = paper_instance(1.0, 1.0).unwrap().with_means(1.0).unwrap();
        assert!(inst.arms().iter().all(|a| a.mean() == 1.0));
        assert_eq!(inst.optimal_arm(), 0);
    }

    #[test]
    fn out_of_range_arm() {
        let inst = paper_instance(1.0, 1.0).unwrap();
        let mut rng = RngStream::new(0, 0);
        assert_eq!(
            sample_reward(&inst, 10, &mut rng),
            Err(Error::IndexError { index: 10, len: 10 })
        );
    }

    #[test]
    fn tiny_variance_arm_concentrates() {
        let inst = make_instance(&[(0.3, 1e-12), (0.1, 1.0)], 1.0, 1.0).unwrap();
        let mut rng = RngStream::new(11, 0);
        let n = 1_000_000;
        let mean = (0..n)
            .map(|_| sample_reward(&inst, 0, &mut rng).unwrap())
            .sum::<f64>()
            / n as f64;
        assert!((mean - 0.3).abs() < 1e-4);
    }
}
