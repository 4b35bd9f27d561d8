//! Computable tail bounds and regret-bound curves.
//!
//! Gamma distributions are parameterised by shape and *rate* unless a function
//! name says otherwise; the scale forms exist only where a bound is
//! conventionally written that way and are checked against the rate forms in
//! the tests.
//!
//! Unknown constants of the regret bounds (`A7`..`A11`, `C1`, `C2`) are never
//! guessed: they come in through [`BoundConstants`], whose default is the pure
//! dominant-term curve (`A* = 0`, `C1 * C2 = 0.5`).

use statrs::function::gamma::ln_gamma;

use crate::env::{ArmParams, BanditInstance};
use crate::error::{Error, Result};
use crate::metrics::gap_summary;

fn domain(msg: impl Into<String>) -> Error {
    Error::DomainError(msg.into())
}

/// `P(X <= a) <= exp(-q/2 (mu - a)^2)` for `X ~ N(mu, 1/q)` and `a < mu`.
pub fn gaussian_left_tail_bound(mu: f64, precision_q: f64, a: f64) -> Result<f64> {
    if !(precision_q > 0.0) {
        return Err(domain(format!(
            "precision must be positive, got {precision_q}"
        )));
    }
    if !(a < mu) {
        return Err(domain(format!(
            "threshold {a} must lie below the mean {mu}"
        )));
    }
    Ok((-0.5 * precision_q * (mu - a).powi(2)).exp())
}

fn check_gamma_left(shape: f64, scale: f64, a: f64) -> Result<()> {
    if !(shape > 0.0 && scale > 0.0) {
        return Err(domain(format!(
            "shape and scale must be positive, got {shape}, {scale}"
        )));
    }
    let mean = shape * scale;
    if !(a > 0.0 && a < mean) {
        return Err(domain(format!("threshold {a} must lie in (0, {mean})")));
    }
    Ok(())
}

/// Closed-form Gamma left-tail expression `exp(-(k*theta - a)^2 / (2 a theta))`
/// for shape `k`, scale `theta` and `0 < a < k*theta`.
///
/// This is the form used to control the precision posterior of the optimal
/// arm. It agrees with the Chernoff bound to second order near the mean but
/// decays faster far below it, and there it undershoots the true tail (for
/// instance shape 2, scale 1, `a = 0.1`). Use
/// [`gamma_left_tail_chernoff`] or [`gamma_left_tail_bound_stated`] when a
/// guaranteed bound is required.
pub fn gamma_left_tail_bound(shape: f64, scale: f64, a: f64) -> Result<f64> {
    check_gamma_left(shape, scale, a)?;
    Ok((-(shape * scale - a).powi(2) / (2.0 * a * scale)).exp())
}

/// [`gamma_left_tail_bound`] in shape–rate form: `exp(-rate (k/rate - a)^2 / (2a))`.
pub fn gamma_left_tail_bound_rate(shape: f64, rate: f64, a: f64) -> Result<f64> {
    if !(rate > 0.0) {
        return Err(domain(format!("rate must be positive, got {rate}")));
    }
    check_gamma_left(shape, 1.0 / rate, a)?;
    Ok((-rate * (shape / rate - a).powi(2) / (2.0 * a)).exp())
}

/// Optimised Chernoff bound on the Gamma left tail (shape–scale):
/// `exp(-k (a/(k theta) + ln(k theta / a) - 1))`.
pub fn gamma_left_tail_chernoff(shape: f64, scale: f64, a: f64) -> Result<f64> {
    check_gamma_left(shape, scale, a)?;
    let x = shape * scale / a;
    Ok((-shape * (1.0 / x + x.ln() - 1.0)).exp())
}

/// Weaker, always valid Gamma left-tail bound `exp(-(k theta - a)^2 / (4 k theta^2))`
/// (shape–scale). It is implied by the Chernoff bound because
/// `1/x + ln x - 1 >= (x - 1)^2 / (4 x^2)` for `x > 1`.
pub fn gamma_left_tail_bound_stated(shape: f64, scale: f64, a: f64) -> Result<f64> {
    check_gamma_left(shape, scale, a)?;
    Ok((-(shape * scale - a).powi(2) / (4.0 * shape * scale * scale)).exp())
}

/// Two-sided Mills bounds on `P(X > x)` for `X ~ N(mu, sigma^2)`, `x > mu`.
///
/// With `t = (x - mu)/sigma`:
/// `sqrt(2/pi) e^{-t^2/2} / (t + sqrt(t^2 + 4)) <= P <= sqrt(2/pi) e^{-t^2/2} / (t + sqrt(t^2 + 8/pi))`.
pub fn gaussian_two_sided_tail(mu: f64, sigma: f64, x: f64) -> Result<(f64, f64)> {
    if !(sigma > 0.0) {
        return Err(domain(format!("sigma must be positive, got {sigma}")));
    }
    if !(x > mu) {
        return Err(domain(format!("x = {x} must exceed the mean {mu}")));
    }
    let t = (x - mu) / sigma;
    let core = (2.0 / std::f64::consts::PI).sqrt() * (-0.5 * t * t).exp();
    let lower = core / (t + (t * t + 4.0).sqrt());
    let upper = core / (t + (t * t + 8.0 / std::f64::consts::PI).sqrt());
    Ok((lower, upper))
}

/// Two-sided Mills-type bounds on `P(X >= x)` for `X ~ Gamma(shape, rate)`,
/// `shape > 1` and `x` beyond the mode `(shape - 1)/rate`:
///
/// `rate^{k-1} x^{k-1} e^{-rate x} / Gamma(k) <= P <= rate^k x^{k-1} e^{-rate x} / (Gamma(k) (rate - (k-1)/x))`.
///
/// Evaluated in log space.
pub fn gamma_mills_bounds(shape: f64, rate: f64, x: f64) -> Result<(f64, f64)> {
    if !(shape > 1.0) {
        return Err(domain(format!("shape must exceed 1, got {shape}")));
    }
    if !(rate > 0.0) {
        return Err(domain(format!("rate must be positive, got {rate}")));
    }
    let mode = (shape - 1.0) / rate;
    if !(x > mode) {
        return Err(domain(format!("x = {x} must exceed the mode {mode}")));
    }
    let log_lower = (shape - 1.0) * (rate * x).ln() - rate * x - ln_gamma(shape);
    let lower = log_lower.exp();
    Ok((lower, lower * gamma_mills_gap(shape, rate, x)))
}

/// Multiplicative gap `upper / lower = rate / (rate - (shape - 1)/x)` of
/// [`gamma_mills_bounds`]. Tends to 1 as `x` grows.
pub fn gamma_mills_gap(shape: f64, rate: f64, x: f64) -> f64 {
    rate / (rate - (shape - 1.0) / x)
}

/// Rate function `h(x) = (x - 1 - ln x) / 2`, convex with minimum `h(1) = 0`.
pub fn h(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(domain(format!("h is defined for x > 0, got {x}")));
    }
    Ok(0.5 * (x - 1.0 - x.ln()))
}

fn h_unchecked(x: f64) -> f64 {
    0.5 * (x - 1.0 - x.ln())
}

const ROOT_ITERATIONS: usize = 200;

/// Bisection for `h(to_x(u)) = y` over `u` in `[lo, hi]`, where the sign of
/// `h - y` differs at the two ends.
fn bisect_h(y: f64, mut lo: f64, mut hi: f64, to_x: impl Fn(f64) -> f64) -> f64 {
    let lo_negative = h_unchecked(to_x(lo)) < y;
    for _ in 0..ROOT_ITERATIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = h_unchecked(to_x(mid)) - y;
        if f_mid == 0.0 {
            return to_x(mid);
        }
        if (f_mid < 0.0) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    to_x(0.5 * (lo + hi))
}

fn check_level(y: f64) -> Result<()> {
    if !(y >= 0.0) || !y.is_finite() {
        return Err(domain(format!("h inverse needs a finite y >= 0, got {y}")));
    }
    Ok(())
}

/// Larger root of `h(x) = y`, in `[1, inf)`.
pub fn h_plus_inv(y: f64) -> Result<f64> {
    check_level(y)?;
    if y == 0.0 {
        return Ok(1.0);
    }
    let mut hi = 1.0 + 2.0 * y + 2.0 * y.sqrt();
    while h_unchecked(hi) < y {
        hi *= 2.0;
    }
    Ok(bisect_h(y, 1.0, hi, |x| x))
}

/// Smaller root of `h(x) = y`, in `(0, 1]`.
pub fn h_minus_inv(y: f64) -> Result<f64> {
    check_level(y)?;
    if y == 0.0 {
        return Ok(1.0);
    }
    // Searched in log space so that roots near zero keep full relative precision.
    let mut lo = -2.0 * y - 1.0;
    while h_unchecked(lo.exp()) < y {
        lo *= 2.0;
    }
    Ok(bisect_h(y, lo, 0.0, f64::exp))
}

/// Split of an error budget into mean and variance parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonSplit {
    pub eps_mu: f64,
    pub eps_sigma: f64,
    /// Normaliser `(1/(l0 + rho s_i^2) + mu_1/(l0 + rho s_1^2))^{-1}`.
    pub c: f64,
}

/// Splits `eps` between the mean and the variance deviation in proportion to
/// `1/(l0 + rho sigma_i^2)` and `mu_1/(l0 + rho sigma_1^2)`, so that
/// `eps_mu + eps_sigma = eps`.
///
/// With `l0 = 0` this covers the unregularised cases as well, provided the
/// variances are positive.
pub fn epsilon_split(
    eps: f64,
    mu1: f64,
    sigma1_sq: f64,
    sigmai_sq: f64,
    rho: f64,
    l0: f64,
) -> Result<EpsilonSplit> {
    if !(eps > 0.0) {
        return Err(domain(format!("eps must be positive, got {eps}")));
    }
    if !(mu1 > 0.0) {
        return Err(domain(format!(
            "optimal mean must be positive for a positive split, got {mu1}"
        )));
    }
    if !(l0 >= 0.0 && rho >= 0.0 && sigma1_sq >= 0.0 && sigmai_sq >= 0.0) {
        return Err(domain("l0, rho and variances must be non-negative"));
    }
    let d_i = l0 + rho * sigmai_sq;
    let d_1 = l0 + rho * sigma1_sq;
    if !(d_i > 0.0 && d_1 > 0.0) {
        return Err(domain("Sharpe denominators must be positive"));
    }
    let w_mu = 1.0 / d_i;
    let w_sigma = mu1 / d_1;
    let c = 1.0 / (w_mu + w_sigma);
    Ok(EpsilonSplit {
        eps_mu: w_mu * c * eps,
        eps_sigma: w_sigma * c * eps,
        c,
    })
}

/// `KL(N(mu_p, s_p^2) || N(mu_q, s_q^2))` in nats.
pub fn kl_gaussian(p: &ArmParams, q: &ArmParams) -> f64 {
    0.5 * (q.variance() / p.variance()).ln()
        + (p.variance() + (p.mean() - q.mean()).powi(2)) / (2.0 * q.variance())
        - 0.5
}

/// Constants of the regret bounds that are only known to exist.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundConstants {
    pub a7: f64,
    pub a8: f64,
    pub a9: f64,
    pub a10: f64,
    pub a11: f64,
    pub c1: f64,
    pub c2: f64,
    pub alpha_consistency: f64,
}

impl Default for BoundConstants {
    fn default() -> Self {
        Self {
            a7: 0.0,
            a8: 0.0,
            a9: 0.0,
            a10: 0.0,
            a11: 0.0,
            c1: 0.8,
            c2: 0.625,
            alpha_consistency: 0.1,
        }
    }
}

impl BoundConstants {
    pub fn validate(&self) -> Result<()> {
        let a = [self.a7, self.a8, self.a9, self.a10, self.a11];
        if a.iter().any(|v| !v.is_finite()) {
            return Err(domain("A constants must be finite"));
        }
        if !(self.alpha_consistency > 0.0 && self.alpha_consistency < 1.0) {
            return Err(domain(format!(
                "alpha consistency must lie in (0, 1), got {}",
                self.alpha_consistency
            )));
        }
        if !(self.c1 > 0.0 && self.c1 < 1.0 - self.alpha_consistency) {
            return Err(domain(format!(
                "c1 must lie in (0, 1 - alpha) = (0, {}), got {}",
                1.0 - self.alpha_consistency,
                self.c1
            )));
        }
        if !(self.c2 > 0.0 && self.c2 < 1.0) {
            return Err(domain(format!("c2 must lie in (0, 1), got {}", self.c2)));
        }
        Ok(())
    }
}

/// Per-arm coefficient of `E[s_i]` in the regret decomposition:
/// `Delta_i + xi_i rho (L/2 + S - s_i^2) / (l0 + rho L/2 + rho S)`, with `L` the
/// largest squared mean gap and `S` the sum of variances.
pub fn theorem1_coefficients(instance: &BanditInstance) -> Vec<f64> {
    let gaps = gap_summary(instance);
    let rho = instance.rho();
    let total_var: f64 = instance.arms().iter().map(|a| a.variance()).sum();
    let half_lambda = 0.5 * gaps.lambda_max;
    let denom = instance.l0() + rho * half_lambda + rho * total_var;
    instance
        .arms()
        .iter()
        .zip(&gaps.sharpe)
        .zip(&gaps.delta)
        .map(|((arm, xi), delta)| {
            delta + xi * rho * (half_lambda + total_var - arm.variance()) / denom
        })
        .collect()
}

/// Regret upper bound from expected pull counts: `sum_i E[s_i] coef_i + A7`.
pub fn theorem1_upper_bound(
    instance: &BanditInstance,
    expected_pulls: &[f64],
    constants: &BoundConstants,
) -> Result<f64> {
    if expected_pulls.len() != instance.num_arms() {
        return Err(domain(format!(
            "expected {} pull counts, got {}",
            instance.num_arms(),
            expected_pulls.len()
        )));
    }
    if expected_pulls.iter().any(|&s| !(s >= 0.0)) {
        return Err(domain("expected pull counts must be non-negative"));
    }
    let coefs = theorem1_coefficients(instance);
    Ok(expected_pulls
        .iter()
        .zip(&coefs)
        .map(|(s, c)| s * c)
        .sum::<f64>()
        + constants.a7)
}

/// Default error-budget schedule `eps(n) = (ln n)^{-1/4}`.
pub fn default_eps(n: u64) -> f64 {
    (n as f64).ln().powf(-0.25)
}

/// Bound on `E[s_{i,n}]` for one suboptimal arm, with its two exploration
/// branches exposed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PullBound {
    pub arm: usize,
    pub value: f64,
    /// `2 ln(2n) / (Gamma_i - eps_mu l0)^2`, infinite when the gap is used up.
    pub mean_branch: f64,
    /// `ln(2n) / h(sigma_i^2 (1 - eps_sigma/xi_1) / sigma_1^2)`; `None` when
    /// the argument is 1 (h = 0) or non-positive and the branch drops out.
    pub variance_branch: Option<f64>,
    pub split: EpsilonSplit,
}

impl PullBound {
    /// The bound is vacuous (infinite) for this arm.
    pub fn non_informative(&self) -> bool {
        !self.value.is_finite()
    }
}

/// `1 + max{mean branch, variance branch} + A8 L^{3/4} + A9 L^{1/2} + A10 L^{1/4} + A11`
/// with `L = ln n`, for suboptimal arm `arm`. `Gamma_i` is the mean gap
/// `mu_1 - mu_i` to the optimal arm.
pub fn theorem2_pull_bound(
    instance: &BanditInstance,
    arm: usize,
    n: u64,
    eps: f64,
    constants: &BoundConstants,
) -> Result<PullBound> {
    if n < 2 {
        return Err(domain(format!("horizon must be >= 2, got {n}")));
    }
    let opt_idx = instance.optimal_arm();
    if arm == opt_idx {
        return Err(domain("pull bound is defined for suboptimal arms only"));
    }
    let opt = instance.arm(opt_idx)?;
    let this = instance.arm(arm)?;
    let xi1 = instance.optimal_sharpe();
    let (rho, l0) = (instance.rho(), instance.l0());
    let split = epsilon_split(eps, opt.mean(), opt.variance(), this.variance(), rho, l0)?;
    let log2n = (2.0 * n as f64).ln();

    let gap = opt.mean() - this.mean() - split.eps_mu * l0;
    let mean_branch = if gap > 0.0 {
        2.0 * log2n / (gap * gap)
    } else {
        f64::INFINITY
    };

    let ratio = this.variance() * (1.0 - split.eps_sigma / xi1) / opt.variance();
    let variance_branch = if ratio > 0.0 {
        let hv = h_unchecked(ratio);
        (hv > 0.0).then(|| log2n / hv)
    } else {
        None
    };

    let l = (n as f64).ln();
    let tail = constants.a8 * l.powf(0.75)
        + constants.a9 * l.sqrt()
        + constants.a10 * l.powf(0.25)
        + constants.a11;
    let value = 1.0 + mean_branch.max(variance_branch.unwrap_or(f64::NEG_INFINITY)) + tail;
    Ok(PullBound {
        arm,
        value,
        mean_branch,
        variance_branch,
        split,
    })
}

/// One point of an upper-bound curve.
#[derive(Debug, Clone, PartialEq)]
pub struct UpperBoundPoint {
    pub n: u64,
    pub eps: f64,
    pub value: f64,
    pub arms: Vec<PullBound>,
}

impl UpperBoundPoint {
    /// Arms whose pull bound is infinite at this `n`.
    pub fn non_informative_arms(&self) -> Vec<usize> {
        self.arms
            .iter()
            .filter(|b| b.non_informative())
            .map(|b| b.arm)
            .collect()
    }
}

/// Finite-time SRTS regret bound on each `n` of the grid:
/// `sum_{i suboptimal} pull_bound_i(n) * coef_i + A7`.
pub fn theorem2_regret_curve(
    instance: &BanditInstance,
    n_grid: &[u64],
    constants: &BoundConstants,
    eps_rule: impl Fn(u64) -> f64,
) -> Result<Vec<UpperBoundPoint>> {
    let coefs = theorem1_coefficients(instance);
    let opt = instance.optimal_arm();
    n_grid
        .iter()
        .map(|&n| {
            let eps = eps_rule(n);
            let arms = (0..instance.num_arms())
                .filter(|&i| i != opt)
                .map(|i| theorem2_pull_bound(instance, i, n, eps, constants))
                .collect::<Result<Vec<_>>>()?;
            let value = arms.iter().map(|b| b.value * coefs[b.arm]).sum::<f64>() + constants.a7;
            Ok(UpperBoundPoint {
                n,
                eps,
                value,
                arms,
            })
        })
        .collect()
}

/// Lower-bound curve together with its per-arm ingredients.
#[derive(Debug, Clone, PartialEq)]
pub struct LowerBoundCurve {
    pub n: Vec<u64>,
    pub values: Vec<f64>,
    /// `KL(f_i, f_*)` per arm (0 for the optimal arm).
    pub kl: Vec<f64>,
    /// `Delta_i - rho xi_i sigma_i^2 / l0` per arm (0 for the optimal arm).
    pub factors: Vec<f64>,
}

impl LowerBoundCurve {
    /// Suboptimal arms whose factor is negative; they pull the curve down.
    pub fn negative_arms(&self, optimal_arm: usize) -> Vec<usize> {
        self.factors
            .iter()
            .enumerate()
            .filter(|&(i, &f)| i != optimal_arm && f < 0.0)
            .map(|(i, _)| i)
            .collect()
    }
}

/// `sum_{i != *} C1 C2 ln n / KL(f_i, f_*) * (Delta_i - rho xi_i sigma_i^2 / l0) - A7`.
pub fn theorem3_lower_bound_curve(
    instance: &BanditInstance,
    n_grid: &[u64],
    constants: &BoundConstants,
) -> Result<LowerBoundCurve> {
    constants.validate()?;
    let gaps = gap_summary(instance);
    let opt = instance.optimal_arm();
    let best = instance.arm(opt)?;
    let (rho, l0) = (instance.rho(), instance.l0());
    let mut kl = vec![0.0; instance.num_arms()];
    let mut factors = vec![0.0; instance.num_arms()];
    for (i, arm) in instance.arms().iter().enumerate() {
        if i == opt {
            continue;
        }
        kl[i] = kl_gaussian(arm, best);
        factors[i] = gaps.delta[i] - rho * gaps.sharpe[i] * arm.variance() / l0;
    }
    let weight: f64 = (0..instance.num_arms())
        .filter(|&i| i != opt)
        .map(|i| factors[i] / kl[i])
        .sum();
    let cc = constants.c1 * constants.c2;
    let values = n_grid
        .iter()
        .map(|&n| cc * (n as f64).ln() * weight - constants.a7)
        .collect();
    Ok(LowerBoundCurve {
        n: n_grid.to_vec(),
        values,
        kl,
        factors,
    })
}
