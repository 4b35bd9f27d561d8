//! Seeded Monte Carlo checks with tolerances of several standard errors.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use srts_core::metrics::{realized_regret, RunTrace};
use srts_core::sim::run_replication;
use srts_core::{
    make_instance, paper_instance, sample_reward, Channel, PolicyConfig, PolicyKind, RngStream,
};

#[test]
fn reward_moments_match_arm_parameters() {
    let inst = make_instance(&[(0.3, 0.25), (-1.0, 4.0)], 1.0, 1.0).unwrap();
    let mut rng = RngStream::new(11, 0);
    let n = 200_000;
    for (arm, (mu, var)) in [(0, (0.3, 0.25)), (1, (-1.0, 4.0))] {
        let xs: Vec<f64> = (0..n)
            .map(|_| sample_reward(&inst, arm, &mut rng).unwrap())
            .collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let v = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        let se_mean = (var / n as f64).sqrt();
        let se_var = var * (2.0 / n as f64).sqrt();
        assert!((mean - mu).abs() < 5.0 * se_mean, "arm {arm} mean {mean}");
        assert!((v - var).abs() < 5.0 * se_var, "arm {arm} var {v}");
    }
}

#[test]
fn streams_are_uncorrelated() {
    let n = 100_000;
    let mut a = RngStream::new(5, 0);
    let mut b = RngStream::new(5, 1);
    let mut c = RngStream::new(5, 0);
    let mut sab = 0.0;
    let mut sac = 0.0;
    for _ in 0..n {
        let x = a.standard_normal(Channel::Reward);
        sab += x * b.standard_normal(Channel::Reward);
        sac += x * c.standard_normal(Channel::Theta);
    }
    // Correlation estimates have standard error 1/sqrt(n).
    let bound = 5.0 / (n as f64).sqrt();
    assert!((sab / n as f64).abs() < bound);
    assert!((sac / n as f64).abs() < bound);
}

#[test]
fn sample_means_follow_the_clt() {
    // Means of 50 draws from N(1, 2): standardized values should be N(0, 1).
    let inst = make_instance(&[(1.0, 2.0), (0.0, 1.0)], 1.0, 1.0).unwrap();
    let mut rng = RngStream::new(3, 9);
    let reps = 20_000;
    let z: Vec<f64> = (0..reps)
        .map(|_| {
            let m = (0..50)
                .map(|_| sample_reward(&inst, 0, &mut rng).unwrap())
                .sum::<f64>()
                / 50.0;
            (m - 1.0) / (2.0f64 / 50.0).sqrt()
        })
        .collect();
    let inside = z.iter().filter(|v| v.abs() < 1.959_964).count() as f64 / reps as f64;
    assert!(
        (inside - 0.95).abs() < 5.0 * (0.95f64 * 0.05 / reps as f64).sqrt(),
        "{inside}"
    );
}

#[test]
fn gamma_draws_have_the_right_mean() {
    let mut rng = RngStream::new(1, 2);
    let n = 100_000;
    let (shape, rate) = (3.5, 2.0);
    let xs: Vec<f64> = (0..n).map(|_| rng.gamma_rate(shape, rate)).collect();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let sd = (shape / (rate * rate) / n as f64).sqrt();
    assert!((mean - shape / rate).abs() < 5.0 * sd);
}

#[test]
fn srts_posterior_concentrates_on_true_parameters() {
    let inst = make_instance(&[(0.8, 0.3), (0.1, 0.6)], 1.0, 1.0).unwrap();
    let mut rng = RngStream::new(21, 0);
    let mut state =
        srts_core::policy::policy_init(PolicyConfig::new(PolicyKind::Srts, 1.0, 1.0), 2).unwrap();
    for _ in 0..5000 {
        let a = state.select(&mut rng).unwrap();
        let x = sample_reward(&inst, a, &mut rng).unwrap();
        state.update(a, x).unwrap();
    }
    let best = state.posterior().arms()[0];
    assert!(best.pulls > 4000);
    let se = (0.3 / best.pulls as f64).sqrt();
    assert!((best.mu_hat - 0.8).abs() < 5.0 * se);
    // Posterior mean of the precision alpha/beta approaches 1/sigma^2.
    assert!((best.beta / best.alpha - 0.3).abs() < 0.03);
}

#[test]
fn mean_ts_concentrates_on_the_largest_mean() {
    let inst = make_instance(&[(0.2, 1.0), (1.0, 1.0), (0.5, 1.0)], 0.0, 1.0).unwrap();
    let trace = run_replication(
        &inst,
        PolicyConfig::new(PolicyKind::MeanTs, 0.0, 1.0),
        3000,
        &mut RngStream::new(8, 0),
    )
    .unwrap();
    let counts = trace.pull_counts(3).unwrap();
    assert!(counts.counts()[1] > 2500, "{:?}", counts.counts());
}

/// Independent oracle: a long round-robin stream drawn with a different
/// generator, pooled into one Sharpe ratio.
fn mixed_stream_sharpe(means: &[f64], variances: &[f64], rho: f64, l0: f64, samples: usize) -> f64 {
    let mut rng = ChaCha20Rng::seed_from_u64(0x5eed);
    let dists: Vec<Normal<f64>> = means
        .iter()
        .zip(variances)
        .map(|(m, v)| Normal::new(*m, v.sqrt()).unwrap())
        .collect();
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for t in 0..samples {
        let x = dists[t % means.len()].sample(&mut rng);
        sum += x;
        sum_sq += x * x;
    }
    let mean = sum / samples as f64;
    let var = sum_sq / samples as f64 - mean * mean;
    mean / (l0 + rho * var)
}

#[test]
fn round_robin_regret_matches_the_mixed_stream_oracle() {
    let inst = paper_instance(1.0, 1.0).unwrap();
    let n = 1000;
    let reps = 100;
    let mut total = 0.0;
    for r in 0..reps {
        let trace = run_replication(
            &inst,
            PolicyConfig::new(PolicyKind::RoundRobin, 1.0, 1.0),
            n,
            &mut RngStream::new(77, r),
        )
        .unwrap();
        total += realized_regret(&trace, &inst).unwrap()[n - 1];
    }
    let mean_regret = total / reps as f64;
    let means = srts_core::env::PAPER_MEANS;
    let vars = srts_core::env::PAPER_VARIANCES;
    let oracle = n as f64
        * (inst.optimal_sharpe() - mixed_stream_sharpe(&means, &vars, 1.0, 1.0, 1_000_000));
    assert!(
        (mean_regret - oracle).abs() < 0.1 * oracle,
        "{mean_regret} vs {oracle}"
    );
}

#[test]
fn always_optimal_regret_is_sublinear() {
    let inst = paper_instance(1.0, 1.0).unwrap();
    let n = 100_000;
    let mut rng = RngStream::new(2, 0);
    let opt = inst.optimal_arm();
    let rewards: Vec<f64> = (0..n)
        .map(|_| sample_reward(&inst, opt, &mut rng).unwrap())
        .collect();
    let trace = RunTrace::new(vec![opt; n], rewards).unwrap();
    let regret = realized_regret(&trace, &inst).unwrap();
    assert!((regret[n - 1] / n as f64).abs() < 0.01);
}

#[test]
fn uniform_random_spreads_pulls() {
    let inst = paper_instance(1.0, 1.0).unwrap();
    let trace = run_replication(
        &inst,
        PolicyConfig::new(PolicyKind::UniformRandom, 1.0, 1.0),
        20_000,
        &mut RngStream::new(4, 0),
    )
    .unwrap();
    let counts = trace.pull_counts(10).unwrap();
    for &c in counts.counts() {
        // Binomial(19990, 0.1) + 1 warm-start pull: sd about 42.
        assert!((c as f64 - 2000.0).abs() < 250.0, "{c}");
    }
}
