//! Numerical verification of the tail lemmas, the `h` inverses and the
//! pull-count variance bound.
//!
//! Every check evaluates a bound on a fixed grid against an oracle from
//! `statrs` (or, for the variance bound, against simulation) and records the
//! worst relative margin: positive means the bound holds with room to spare,
//! negative means it is violated.

use std::fmt;

use rayon::prelude::*;
use srts_core::bounds::{
    gamma_left_tail_bound, gamma_left_tail_bound_stated, gamma_mills_bounds, gamma_mills_gap,
    gaussian_left_tail_bound, gaussian_two_sided_tail, h, h_minus_inv, h_plus_inv,
};
use srts_core::metrics::{unbiased_variance, variance_standard_error};
use srts_core::sim::run_replication;
use srts_core::{
    make_instance, paper_instance, BanditInstance, PolicyConfig, PolicyKind, RngStream,
};
use statrs::distribution::{ContinuousCDF, Gamma, Normal};

use crate::error::{ConfigError, Result};

/// Relative slack granted to the oracles' own rounding error.
const ORACLE_TOLERANCE: f64 = 1e-9;
/// Required accuracy of the `h` inverses.
const INVERSE_TOLERANCE: f64 = 1e-10;
/// Largest allowed upper/lower ratio of the Gaussian sandwich at distance 5.
const MILLS_RATIO_LIMIT: f64 = 1.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Lemma {
    GaussianLeftTail,
    GammaLeftTail,
    GaussianMills,
    GammaMills,
    MillsTightness,
    HInverse,
    EfronStein,
}

impl Lemma {
    pub fn name(self) -> &'static str {
        match self {
            Lemma::GaussianLeftTail => "gaussian-left-tail",
            Lemma::GammaLeftTail => "gamma-left-tail",
            Lemma::GaussianMills => "gaussian-mills",
            Lemma::GammaMills => "gamma-mills",
            Lemma::MillsTightness => "mills-tightness",
            Lemma::HInverse => "h-inverse",
            Lemma::EfronStein => "efron-stein",
        }
    }
}

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq)]
pub struct LemmaCheck {
    pub lemma: Lemma,
    pub name: String,
    pub points: usize,
    pub violations: usize,
    /// Smallest margin over the grid.
    pub worst_margin: f64,
    /// Advisory checks are reported but do not fail the run.
    pub gating: bool,
}

impl LemmaCheck {
    fn from_margins(lemma: Lemma, name: impl Into<String>, margins: &[f64], gating: bool) -> Self {
        Self {
            lemma,
            name: name.into(),
            points: margins.len(),
            violations: margins.iter().filter(|m| !(**m >= 0.0)).count(),
            worst_margin: margins.iter().copied().fold(f64::INFINITY, f64::min),
            gating,
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub checks: Vec<LemmaCheck>,
}

impl VerifyReport {
    /// True when no gating check has a violation.
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| !c.gating || c.passed())
    }

    pub fn failures(&self) -> Vec<&LemmaCheck> {
        self.checks
            .iter()
            .filter(|c| c.gating && !c.passed())
            .collect()
    }

    pub fn check(&self, name: &str) -> Option<&LemmaCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let status = match (c.passed(), c.gating) {
                (true, _) => "PASS",
                (false, true) => "FAIL",
                (false, false) => "WARN",
            };
            writeln!(
                f,
                "{status} {:<34} points={:<5} violations={:<4} worst_margin={:.6e}{}",
                c.name,
                c.points,
                c.violations,
                c.worst_margin,
                if c.gating { "" } else { " (advisory)" }
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    pub horizon: usize,
    pub replications: usize,
    pub seed: u64,
    /// Worker threads for the simulation check (0 lets rayon decide).
    pub jobs: usize,
    /// Test hook: flips the sign of this lemma's bound before checking it.
    pub corrupt: Option<Lemma>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            horizon: 1000,
            replications: 1000,
            seed: 0,
            jobs: 0,
            corrupt: None,
        }
    }
}

fn geomspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let r = (hi / lo).ln();
    (0..n)
        .map(|i| lo * (r * i as f64 / (n - 1) as f64).exp())
        .collect()
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// `bound / oracle - 1`, shifted by the oracle tolerance.
fn upper_margin(bound: f64, oracle: f64) -> f64 {
    bound / oracle - 1.0 + ORACLE_TOLERANCE
}

fn lower_margin(bound: f64, oracle: f64) -> f64 {
    1.0 - bound / oracle + ORACLE_TOLERANCE
}

struct Checker {
    corrupt: Option<Lemma>,
}

impl Checker {
    fn sign(&self, lemma: Lemma) -> f64 {
        if self.corrupt == Some(lemma) {
            -1.0
        } else {
            1.0
        }
    }

    fn gaussian_left_tail(&self) -> Result<LemmaCheck> {
        let s = self.sign(Lemma::GaussianLeftTail);
        let mu = 0.5;
        let mut margins = Vec::new();
        for q in geomspace(0.1, 100.0, 10) {
            for z in geomspace(0.05, 8.0, 10) {
                let a = mu - z / q.sqrt();
                let bound = s * gaussian_left_tail_bound(mu, q, a)?;
                let oracle = Normal::new(mu, 1.0 / q.sqrt())
                    .expect("valid normal")
                    .cdf(a);
                margins.push(upper_margin(bound, oracle));
            }
        }
        Ok(LemmaCheck::from_margins(
            Lemma::GaussianLeftTail,
            Lemma::GaussianLeftTail.name(),
            &margins,
            true,
        ))
    }

    /// Gamma left tail in the lemma's stated form (gating) and in the closed
    /// form `exp(-(k theta - a)^2 / (2 a theta))` (advisory).
    fn gamma_left_tail(&self) -> Result<Vec<LemmaCheck>> {
        let s = self.sign(Lemma::GammaLeftTail);
        let mut stated = Vec::new();
        let mut closed = Vec::new();
        for (i, k) in geomspace(0.5, 50.0, 10).into_iter().enumerate() {
            let scale = if i % 2 == 0 { 0.5 } else { 2.0 };
            for f in linspace(0.02, 0.98, 10) {
                let a = f * k * scale;
                let oracle = Gamma::new(k, 1.0 / scale).expect("valid gamma").cdf(a);
                stated.push(upper_margin(
                    s * gamma_left_tail_bound_stated(k, scale, a)?,
                    oracle,
                ));
                closed.push(upper_margin(gamma_left_tail_bound(k, scale, a)?, oracle));
            }
        }
        Ok(vec![
            LemmaCheck::from_margins(
                Lemma::GammaLeftTail,
                Lemma::GammaLeftTail.name(),
                &stated,
                true,
            ),
            LemmaCheck::from_margins(
                Lemma::GammaLeftTail,
                "gamma-left-tail-closed-form",
                &closed,
                false,
            ),
        ])
    }

    fn gaussian_mills(&self) -> Result<LemmaCheck> {
        let s = self.sign(Lemma::GaussianMills);
        let (mu, sigma) = (1.0, 2.0);
        let normal = Normal::new(mu, sigma).expect("valid normal");
        let mut margins = Vec::new();
        for t in geomspace(0.01, 10.0, 100) {
            let x = mu + t * sigma;
            let (lo, hi) = gaussian_two_sided_tail(mu, sigma, x)?;
            let p = normal.sf(x);
            margins.push(lower_margin(lo, p).min(upper_margin(s * hi, p)));
        }
        Ok(LemmaCheck::from_margins(
            Lemma::GaussianMills,
            Lemma::GaussianMills.name(),
            &margins,
            true,
        ))
    }

    fn gamma_mills(&self) -> Result<LemmaCheck> {
        let s = self.sign(Lemma::GammaMills);
        let mut margins = Vec::new();
        for (i, k) in geomspace(1.5, 100.0, 10).into_iter().enumerate() {
            let rate = if i % 2 == 0 { 1.0 } else { 3.0 };
            let mode = (k - 1.0) / rate;
            let sd = k.sqrt() / rate;
            for z in linspace(0.1, 6.0, 10) {
                let x = mode + z * sd;
                let (lo, hi) = gamma_mills_bounds(k, rate, x)?;
                let p = Gamma::new(k, rate).expect("valid gamma").sf(x);
                margins.push(lower_margin(lo, p).min(upper_margin(s * hi, p)));
            }
        }
        Ok(LemmaCheck::from_margins(
            Lemma::GammaMills,
            Lemma::GammaMills.name(),
            &margins,
            true,
        ))
    }

    /// Gaussian sandwich ratio at standardized distance 5, and the Gamma
    /// sandwich gap shrinking monotonically toward 1.
    fn mills_tightness(&self) -> Result<LemmaCheck> {
        let s = self.sign(Lemma::MillsTightness);
        let (lo, hi) = gaussian_two_sided_tail(0.0, 1.0, 5.0)?;
        let mut margins = vec![s * MILLS_RATIO_LIMIT - hi / lo];
        let gaps: Vec<f64> = geomspace(5.0, 1e6, 100)
            .into_iter()
            .map(|x| gamma_mills_gap(3.0, 1.0, x))
            .collect();
        margins.extend(gaps.windows(2).map(|w| w[0] - w[1]));
        margins.push(1e-3 - (gaps[gaps.len() - 1] - 1.0));
        Ok(LemmaCheck::from_margins(
            Lemma::MillsTightness,
            Lemma::MillsTightness.name(),
            &margins,
            true,
        ))
    }

    fn h_inverse(&self) -> Result<LemmaCheck> {
        let s = self.sign(Lemma::HInverse);
        let mut margins = Vec::new();
        for y in geomspace(1e-8, 100.0, 100) {
            for x in [h_plus_inv(y)?, h_minus_inv(y)?] {
                let err = (h(s * x).unwrap_or(f64::INFINITY) - y).abs() / y.max(1.0);
                margins.push(INVERSE_TOLERANCE - err);
            }
        }
        Ok(LemmaCheck::from_margins(
            Lemma::HInverse,
            Lemma::HInverse.name(),
            &margins,
            true,
        ))
    }
}

/// Cross-replication variance of every arm's pull count against `n/2 + 3 SE`.
pub fn efron_stein_check(
    instance: &BanditInstance,
    instance_name: &str,
    kind: PolicyKind,
    opts: &VerifyOptions,
    pool: &rayon::ThreadPool,
) -> Result<LemmaCheck> {
    let k = instance.num_arms();
    let config = PolicyConfig::new(kind, instance.rho(), instance.l0());
    let counts: Vec<Vec<u64>> = pool.install(|| {
        (0..opts.replications)
            .into_par_iter()
            .map(|r| {
                let mut rng = RngStream::new(opts.seed, r as u64);
                let trace = run_replication(instance, config, opts.horizon, &mut rng)?;
                Ok(trace.pull_counts(k)?.counts().to_vec())
            })
            .collect::<srts_core::Result<Vec<_>>>()
    })?;
    let s = if opts.corrupt == Some(Lemma::EfronStein) {
        -1.0
    } else {
        1.0
    };
    let half_n = opts.horizon as f64 / 2.0;
    let margins: Vec<f64> = (0..k)
        .map(|arm| {
            let xs: Vec<f64> = counts.iter().map(|c| c[arm] as f64).collect();
            let bound = s * (half_n + 3.0 * variance_standard_error(&xs));
            (bound - unbiased_variance(&xs)) / half_n
        })
        .collect();
    Ok(LemmaCheck::from_margins(
        Lemma::EfronStein,
        format!("efron-stein[{kind},{instance_name}]"),
        &margins,
        true,
    ))
}

/// The two instances of the variance check: a well separated pair and the
/// reference 10-arm instance, both at `rho = 1`, `l0 = 1`.
pub fn efron_stein_instances() -> Vec<(&'static str, BanditInstance)> {
    vec![
        (
            "K=2",
            make_instance(&[(0.5, 0.1), (0.2, 0.1)], 1.0, 1.0).expect("valid instance"),
        ),
        ("K=10", paper_instance(1.0, 1.0).expect("valid instance")),
    ]
}

pub const EFRON_STEIN_POLICIES: [PolicyKind; 3] = [
    PolicyKind::Srts,
    PolicyKind::RoundRobin,
    PolicyKind::UniformRandom,
];

/// Runs the analytic checks only.
pub fn verify_analytic(corrupt: Option<Lemma>) -> Result<VerifyReport> {
    let c = Checker { corrupt };
    let mut checks = vec![c.gaussian_left_tail()?];
    checks.extend(c.gamma_left_tail()?);
    checks.push(c.gaussian_mills()?);
    checks.push(c.gamma_mills()?);
    checks.push(c.mills_tightness()?);
    checks.push(c.h_inverse()?);
    Ok(VerifyReport { checks })
}

/// Runs every check, including the pull-count variance simulation.
pub fn verify_lemmas(opts: &VerifyOptions) -> Result<VerifyReport> {
    let mut report = verify_analytic(opts.corrupt)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs)
        .build()
        .map_err(|e| ConfigError::Invalid(format!("cannot start worker pool: {e}")))?;
    for (name, inst) in efron_stein_instances() {
        for kind in EFRON_STEIN_POLICIES {
            report
                .checks
                .push(efron_stein_check(&inst, name, kind, opts, &pool)?);
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analytic_checks_pass() {
        let report = verify_analytic(None).unwrap();
        assert!(report.passed(), "{report}");
        assert_eq!(report.check("h-inverse").unwrap().points, 200);
        assert_eq!(report.check("gaussian-left-tail").unwrap().points, 100);
        assert_eq!(report.check("gamma-mills").unwrap().points, 100);
    }

    #[test]
    fn closed_form_gamma_tail_is_flagged_but_not_gating() {
        let report = verify_analytic(None).unwrap();
        let c = report.check("gamma-left-tail-closed-form").unwrap();
        assert!(!c.gating);
        assert!(c.violations > 0);
    }

    #[test]
    fn corrupted_bound_is_named() {
        for lemma in [
            Lemma::GaussianLeftTail,
            Lemma::GammaLeftTail,
            Lemma::GaussianMills,
            Lemma::GammaMills,
            Lemma::MillsTightness,
            Lemma::HInverse,
        ] {
            let report = verify_analytic(Some(lemma)).unwrap();
            assert!(!report.passed());
            let names: Vec<&str> = report.failures().iter().map(|c| c.name.as_str()).collect();
            assert_eq!(names, vec![lemma.name()]);
        }
    }

    #[test]
    fn round_robin_pull_counts_do_not_vary() {
        let opts = VerifyOptions {
            horizon: 100,
            replications: 20,
            ..VerifyOptions::default()
        };
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(2)
            .build()
            .unwrap();
        let (name, inst) = &efron_stein_instances()[1];
        let c = efron_stein_check(inst, name, PolicyKind::RoundRobin, &opts, &pool).unwrap();
        assert!(c.passed());
        assert_eq!(c.worst_margin, 1.0);
        let bad = VerifyOptions {
            corrupt: Some(Lemma::EfronStein),
            ..opts
        };
        assert!(
            !efron_stein_check(inst, name, PolicyKind::RoundRobin, &bad, &pool)
                .unwrap()
                .passed()
        );
    }
}
